"""Plot-ready raster exports in binary PPM (P6).

Everything here is integer arithmetic on a deterministic normalisation, so
the same inputs always give byte-identical files.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .core import Surface, TopoSequence
from .dataio import atomic_write_bytes
from .errors import DimMismatch

SURFACE_RGB = (255, 0, 0)
AIR_RGB = (0, 255, 0)

# anchor colours of the depth ramp, shallow -> deep
_RAMP = np.array(
    [[253, 231, 37], [94, 201, 98], [33, 145, 140], [59, 82, 139], [68, 1, 84]],
    dtype=np.float64,
)


def ppm_bytes(rgb: np.ndarray) -> bytes:
    rgb = np.asarray(rgb, dtype=np.uint8)
    h, w, _ = rgb.shape
    return f"P6\n{w} {h}\n255\n".encode("ascii") + rgb.tobytes()


def read_ppm(data: bytes) -> np.ndarray:
    """Inverse of :func:`ppm_bytes` (only the exact header layout it writes)."""
    magic, dims, maxval, rest = data.split(b"\n", 3)
    if magic != b"P6" or maxval != b"255":
        raise ValueError("not a P6/255 raster")
    w, h = (int(v) for v in dims.split())
    return np.frombuffer(rest, dtype=np.uint8).reshape(h, w, 3)


def _grey(vol):
    lo, hi = float(np.min(vol)), float(np.max(vol))
    scale = 255.0 / (hi - lo) if hi > lo else 0.0
    return np.clip(np.rint((vol.astype(np.float64) - lo) * scale), 0, 255).astype(np.uint8)


def slice_overlay(seq: TopoSequence, surface: Surface, i: int, grey=None) -> np.ndarray:
    """RGB image of slice ``i``: range rows down, columns across.

    Intensity is greyscale (normalised over the whole volume), the air
    boundary is green and the surface red.
    """
    g = _grey(seq.intensity) if grey is None else grey
    img = np.repeat(g[i].T[:, :, None], 3, axis=2)
    cols = np.arange(seq.phi)
    air = np.clip(seq.air[i], 0, seq.rho - 1)
    img[air, cols] = AIR_RGB
    s = np.clip(surface.labels[i], 0, seq.rho - 1)
    img[s, cols] = SURFACE_RGB
    return img


def depth_map(surface: Surface, lo=None, hi=None) -> np.ndarray:
    """Colour image with one pixel per (slice, column); colour encodes the label."""
    s = surface.labels.astype(np.float64)
    lo = float(s.min()) if lo is None else float(lo)
    hi = float(s.max()) if hi is None else float(hi)
    x = np.clip((s - lo) / (hi - lo), 0.0, 1.0) if hi > lo else np.zeros_like(s)
    pos = x * (len(_RAMP) - 1)
    k = np.minimum(pos.astype(np.int64), len(_RAMP) - 2)
    f = (pos - k)[..., None]
    rgb = _RAMP[k] * (1.0 - f) + _RAMP[k + 1] * f
    return np.rint(rgb).astype(np.uint8)


def export_plots(seq: TopoSequence, surface: Surface, prefix) -> list[Path]:
    """Write ``<prefix>_slice_NNNN.ppm`` for every slice and ``<prefix>_depth.ppm``."""
    if surface.shape != seq.shape[:2]:
        raise DimMismatch(f"surface {surface.shape} vs sequence {seq.shape[:2]}")
    prefix = Path(prefix)
    grey = _grey(seq.intensity)
    paths = []
    for i in range(seq.l):
        p = prefix.with_name(f"{prefix.name}_slice_{i:04d}.ppm")
        atomic_write_bytes(p, ppm_bytes(slice_overlay(seq, surface, i, grey)))
        paths.append(p)
    p = prefix.with_name(f"{prefix.name}_depth.ppm")
    atomic_write_bytes(p, ppm_bytes(depth_map(surface)))
    paths.append(p)
    return paths
