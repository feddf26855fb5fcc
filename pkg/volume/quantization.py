"""
Quantization analysis: how far does a point move when it is embedded?

Each point is binned with ``voxel_indices`` and its voxel decoded back to
metric space (bin-center depth on the voxel-center ray).  The error is the
depth difference ``|z - z_hat|``, summarized per range band of the true
depth.  Points landing in a disparity-0 bin decode to infinite depth and
are excluded from the statistics (and logged).
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel

from dto.camera import CameraRig, VoxelGridSpec
from dto.point_cloud import PointCloud
from dto.reports import QuantizationRow
from geometry.voxel import decode_voxel, voxel_indices

logger = logging.getLogger(__name__)

Band = Tuple[float, float]
DEFAULT_BANDS: Tuple[Band, ...] = ((0.0, 20.0), (20.0, 40.0), (40.0, 80.0))
SPEC_NAMES = ("fusion", "cost", "depth")


class PointErrors(BaseModel):
    """Per-point embedding errors of one spec (finite decodes only)."""

    label: str
    z: np.ndarray
    z_hat: np.ndarray
    rejected: int = 0
    unbounded: int = 0

    model_config = {"arbitrary_types_allowed": True}

    @property
    def error(self) -> np.ndarray:
        return np.abs(self.z - self.z_hat)


def quantization_specs(
    rig: CameraRig,
    names: Iterable[str] = ("fusion", "cost"),
    D: int = 48,
    z_max: float = 100.0,
    d_max: Optional[float] = None,
    downsample: int = 4,
) -> Dict[str, VoxelGridSpec]:
    """
    Embedding grids of the named volume types.  The depth volume embeds in
    the cost volume's disparity grid, so both share one spec.
    """
    specs: Dict[str, VoxelGridSpec] = {}
    for name in names:
        if name == "fusion":
            specs[name] = VoxelGridSpec.for_rig(rig, D, z_max, "depth-linear", downsample=downsample)
        elif name in ("cost", "depth"):
            specs[name] = VoxelGridSpec.for_rig(
                rig, D, z_max, "disparity-linear",
                d_max=float(d_max) if d_max else float(D - 1), downsample=downsample,
            )
        else:
            raise ValueError(f"Unknown volume spec: {name!r} (expected one of {SPEC_NAMES})")
    return specs


def point_errors(
    points: PointCloud, rig: CameraRig, spec: VoxelGridSpec, label: str = ""
) -> PointErrors:
    index, accepted = voxel_indices(spec, rig, points.xyz)
    decoded = decode_voxel(spec, rig, index[accepted])
    z = points.xyz[accepted, 2].astype(np.float64)
    z_hat = decoded[:, 2]
    finite = np.isfinite(z_hat)
    unbounded = int((~finite).sum())
    if unbounded:
        logger.info(
            "  -> %s: %d point(s) in the disparity-0 bin excluded (infinite decoded depth)",
            label or spec, unbounded,
        )
    return PointErrors(
        label=label or str(spec),
        z=z[finite],
        z_hat=z_hat[finite],
        rejected=int((~accepted).sum()),
        unbounded=unbounded,
    )


def band_rows(errors: PointErrors, bands: Sequence[Band] = DEFAULT_BANDS) -> List[QuantizationRow]:
    rows = []
    err = errors.error
    for lo, hi in bands:
        inside = (errors.z >= lo) & (errors.z < hi)
        count = int(inside.sum())
        rows.append(
            QuantizationRow(
                spec=errors.label,
                band_lo_m=float(lo),
                band_hi_m=float(hi),
                count=count,
                mean_abs_err_m=float(err[inside].mean()) if count else 0.0,
                max_abs_err_m=float(err[inside].max()) if count else 0.0,
            )
        )
    return rows


def quantization_report(
    points: PointCloud,
    rig: CameraRig,
    specs: Mapping[str, VoxelGridSpec],
    bands: Sequence[Band] = DEFAULT_BANDS,
) -> List[QuantizationRow]:
    """One row per (spec, band), specs in the given order."""
    if not specs:
        raise ValueError("quantization_report needs at least one spec")
    rows: List[QuantizationRow] = []
    for label, spec in specs.items():
        errors = point_errors(points, rig, spec, label)
        logger.info(
            "  -> %s: %d point(s) embedded, %d rejected", label, errors.z.size, errors.rejected
        )
        rows.extend(band_rows(errors, bands))
    return rows


def plot_quantization(rows: Sequence[QuantizationRow], path: Union[str, Path]) -> Path:
    """Grouped bars of mean (solid) and max (hatched) error per band and spec."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    labels = list(dict.fromkeys(r.spec for r in rows))
    bands = list(dict.fromkeys((r.band_lo_m, r.band_hi_m) for r in rows))
    width = 0.8 / max(len(labels), 1)
    x = np.arange(len(bands))

    fig, ax = plt.subplots(figsize=(7, 4))
    for i, label in enumerate(labels):
        by_band = {(r.band_lo_m, r.band_hi_m): r for r in rows if r.spec == label}
        means = [by_band[b].mean_abs_err_m if b in by_band else 0.0 for b in bands]
        maxes = [by_band[b].max_abs_err_m if b in by_band else 0.0 for b in bands]
        offset = x + (i - (len(labels) - 1) / 2) * width
        bars = ax.bar(offset, means, width, label=f"{label} mean")
        ax.bar(offset, maxes, width, fill=False, hatch="//",
               edgecolor=bars.patches[0].get_facecolor() if bars.patches else None,
               label=f"{label} max")
    ax.set_xticks(x)
    ax.set_xticklabels([f"[{lo:g}, {hi:g}) m" for lo, hi in bands])
    ax.set_ylabel("|z - z_hat| (m)")
    ax.set_yscale("symlog", linthresh=0.1)
    ax.legend(fontsize="small")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    logger.info("Quantization plot written to %s", path)
    return path
