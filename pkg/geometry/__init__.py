"""
Camera geometry shared by every volume and point operation.

  - camera  pinhole projection, back-projection, right-view projection
  - voxel   nearest-bin voxel indices and voxel decoding
  - io      calib.txt, PCB1 and .xyz files
"""

from geometry.camera import (
    backproject,
    backproject_pixels,
    project,
    project_points,
    project_right,
)
from geometry.voxel import decode_voxel, voxel_index_of, voxel_indices
from geometry.io import load_calibration, load_points, save_calibration, save_points

__all__ = [
    "backproject",
    "backproject_pixels",
    "decode_voxel",
    "load_calibration",
    "load_points",
    "project",
    "project_points",
    "project_right",
    "save_calibration",
    "save_points",
    "voxel_index_of",
    "voxel_indices",
]
