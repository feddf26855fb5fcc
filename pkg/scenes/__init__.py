"""
Synthetic data.

  - generator   ray-cast stereo scenes with analytic ground truth
  - lidar       points sampled from ground-truth pixels
  - dataset     PPM / PFM / PCB1 directory layout
"""

from scenes.lidar import sample_lidar
from scenes.generator import generate_scene, generate_scenes, render_scene, shade
from scenes.dataset import load_dataset, load_rig, save_dataset

__all__ = [
    "generate_scene",
    "generate_scenes",
    "load_dataset",
    "load_rig",
    "render_scene",
    "sample_lidar",
    "save_dataset",
    "shade",
]
