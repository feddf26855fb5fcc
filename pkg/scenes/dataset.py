"""
On-disk dataset layout.

    calib.txt            rig (written once per directory)
    NNNN_left.ppm        binary P6, 8-bit
    NNNN_right.ppm
    NNNN_depth.pfm       ground truth, invalid pixels = 0
    NNNN_points.pcb      PCB1 point cloud
"""

from __future__ import annotations

import logging
import re
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np
from PIL import Image, UnidentifiedImageError
from pydantic import ValidationError

from dto.camera import CameraRig
from dto.scene import SceneSample
from errors import DatasetError, FormatError
from geometry.io import load_calibration, load_points, save_calibration, save_points
from network.io import load_depth, save_depth

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

CALIB_NAME = "calib.txt"
FRAME_FILES = ("left.ppm", "right.ppm", "depth.pfm", "points.pcb")
_FRAME_RE = re.compile(r"^(\d{4,})_(left\.ppm|right\.ppm|depth\.pfm|points\.pcb)$")


# -------------------------------------------------------------------
# Images
# -------------------------------------------------------------------


def save_image(image: np.ndarray, path: PathLike) -> None:
    """[3, H, W] float in [0, 1] -> 8-bit binary PPM."""
    data = np.round(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(np.ascontiguousarray(data.transpose(1, 2, 0))).save(path, format="PPM")


def load_image(path: PathLike) -> np.ndarray:
    try:
        with Image.open(path) as img:
            if img.format != "PPM" or img.mode != "RGB":
                raise FormatError(f"{path}: expected an 8-bit RGB PPM, got {img.format} {img.mode}")
            data = np.asarray(img, dtype=np.uint8)
    except (UnidentifiedImageError, OSError) as exc:
        raise FormatError(f"{path}: unreadable PPM ({exc})") from exc
    return data.transpose(2, 0, 1).astype(np.float32) / np.float32(255.0)


# -------------------------------------------------------------------
# Samples
# -------------------------------------------------------------------


def frame_paths(directory: PathLike, name: str) -> dict:
    directory = Path(directory)
    return {suffix.split(".")[0]: directory / f"{name}_{suffix}" for suffix in FRAME_FILES}


def save_sample(sample: SceneSample, directory: PathLike, index: int) -> None:
    paths = frame_paths(directory, f"{index:04d}")
    save_image(sample.left, paths["left"])
    save_image(sample.right, paths["right"])
    save_depth(sample.depth, paths["depth"])
    save_points(sample.points, paths["points"])


def save_dataset(samples: Sequence[SceneSample], directory: PathLike, rig: CameraRig) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    save_calibration(rig, directory / CALIB_NAME)
    for index, sample in enumerate(samples):
        if sample.rig != rig:
            raise DatasetError(f"sample {index} was rendered with a different rig")
        save_sample(sample, directory, index)
    logger.info("Dataset written to %s (%d frame(s))", directory, len(samples))
    return directory


def frame_names(directory: PathLike) -> List[str]:
    """Frame ids present in *directory*, sorted, judged by any frame file."""
    names = set()
    for entry in Path(directory).iterdir():
        match = _FRAME_RE.match(entry.name)
        if match:
            names.add(match.group(1))
    return sorted(names)


def load_sample(directory: PathLike, name: str, rig: CameraRig) -> SceneSample:
    paths = frame_paths(directory, name)
    for path in paths.values():
        if not path.exists():
            raise DatasetError(f"missing dataset file: {path}")
    try:
        return SceneSample(
            left=load_image(paths["left"]),
            right=load_image(paths["right"]),
            depth=load_depth(paths["depth"]),
            points=load_points(paths["points"]),
            rig=rig,
            name=name,
        )
    except ValidationError as exc:
        messages = "; ".join(err["msg"] for err in exc.errors())
        raise DatasetError(f"frame {name} in {directory}: {messages}") from exc


def load_dataset(directory: PathLike) -> List[SceneSample]:
    """All frames of *directory*; an empty directory is an empty dataset."""
    directory = Path(directory)
    if not directory.is_dir():
        raise DatasetError(f"dataset directory not found: {directory}")
    names = frame_names(directory)
    calib = directory / CALIB_NAME
    if not names:
        logger.info("Dataset %s has no frames", directory)
        return []
    if not calib.exists():
        raise DatasetError(f"missing dataset file: {calib}")
    rig = load_calibration(calib)
    samples = [load_sample(directory, name, rig) for name in names]
    logger.info("Loaded %d frame(s) from %s", len(samples), directory)
    return samples


def load_rig(directory: PathLike) -> CameraRig:
    calib = Path(directory) / CALIB_NAME
    if not calib.exists():
        raise DatasetError(f"missing dataset file: {calib}")
    return load_calibration(calib)
