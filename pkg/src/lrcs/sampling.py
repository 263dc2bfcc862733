"""Per-frame k-space sampling masks and synthetic coil sensitivity maps.

Masks are boolean grids aligned with the unshifted unitary 2D DFT layout
(DC at cell (0, 0)); generators build their geometry on the centered grid
and apply ifftshift before returning. All generators are pure and
deterministic in (dims, params, frame index, seed).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

__all__ = [
    "FrameMask",
    "SamplingPlan",
    "golden_angle_pseudo_radial",
    "cartesian_vd_mask",
    "uniform_fourier_mask",
    "synth_coil_maps",
]

GOLDEN_ANGLE_DEG = 111.25
SOS_TOL = 1e-12


@dataclass
class FrameMask:
    """Boolean sampling grid for one frame; m_k counts the True cells."""

    grid: np.ndarray
    m_k: int = field(init=False)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=bool)
        if self.grid.ndim != 2:
            raise DataError("mask grid must be 2D")
        self.m_k = int(self.grid.sum())
        if self.m_k < 1:
            raise DataError("mask selects no cells")


@dataclass
class SamplingPlan:
    """Masks for every frame plus coil maps; fully determines each frame operator."""

    masks: list
    coil_maps: np.ndarray
    scheme: str = "unspecified"

    def __post_init__(self):
        if not self.masks:
            raise DataError("sampling plan needs at least one frame mask")
        shape = self.masks[0].grid.shape
        if any(m.grid.shape != shape for m in self.masks):
            raise DataError("all frame masks must share grid dimensions")
        self.coil_maps = np.asarray(self.coil_maps, dtype=np.complex128)
        if self.coil_maps.ndim != 3 or self.coil_maps.shape[1:] != shape:
            raise DataError("coil maps must be (mc, n1, n2) matching the masks")
        sos = np.sum(np.abs(self.coil_maps) ** 2, axis=0)
        if np.max(np.abs(sos - 1.0)) > SOS_TOL:
            raise DataError("coil maps are not sum-of-squares normalized")

    @property
    def n_frames(self):
        return len(self.masks)

    @property
    def grid_shape(self):
        return self.masks[0].grid.shape

    @property
    def mc(self):
        return self.coil_maps.shape[0]


def golden_angle_pseudo_radial(n1: int, n2: int, lines: int, frame_index: int,
                               seed=None) -> FrameMask:
    """Pseudo-radial mask: golden-angle spokes regridded onto the Cartesian grid.

    Spoke i of frame k sits at angle k*111.25 + i*111.25 degrees; each spoke
    is the full chord across the grid rectangle, sampled at max(n1, n2)
    equispaced points rounded to the nearest grid cell. The starting angle
    advances with the frame index so masks differ over time. The DC cell is
    always included. `seed` is accepted for interface uniformity but the
    construction is fully deterministic.
    """
    if lines < 1:
        raise DataError("lines must be >= 1")
    grid = np.zeros((n1, n2), dtype=bool)
    cr, cc = (n1 - 1) / 2.0, (n2 - 1) / 2.0
    npts = max(n1, n2)
    theta0 = frame_index * GOLDEN_ANGLE_DEG
    for i in range(lines):
        theta = math.radians(theta0 + i * GOLDEN_ANGLE_DEG)
        dr, dc = math.sin(theta), math.cos(theta)
        reach = np.inf
        if abs(dr) > 1e-12:
            reach = min(reach, (n1 - 1) / 2.0 / abs(dr))
        if abs(dc) > 1e-12:
            reach = min(reach, (n2 - 1) / 2.0 / abs(dc))
        t = np.linspace(-reach, reach, npts)
        rows = np.rint(cr + t * dr).astype(np.intp)
        cols = np.rint(cc + t * dc).astype(np.intp)
        grid[rows, cols] = True
    grid[n1 // 2, n2 // 2] = True  # DC in the centered layout
    return FrameMask(np.fft.ifftshift(grid))


def cartesian_vd_mask(n1: int, n2: int, reduction: float, frame_index: int,
                      seed: int) -> FrameMask:
    """Variable-density random phase-encode columns at reduction factor R.

    Selects about n2/R full columns: a guaranteed block of center columns
    (8 when the budget allows, at least half the budget otherwise) plus
    random columns drawn without replacement with probability proportional
    to exp(-(d/(n2/6))^2) of the distance d from the center column. Seeded
    and frame-varying.
    """
    if reduction < 1:
        raise DataError("reduction factor must be >= 1")
    if reduction > n2:
        raise DataError(f"reduction {reduction} exceeds column count {n2}")
    total = max(1, round(n2 / reduction))
    n_center = min(8, max(1, total // 2)) if total < 16 else 8
    center = n2 // 2
    half = n_center // 2
    center_cols = np.arange(center - half, center - half + n_center)
    chosen = set(int(c) for c in center_cols)
    n_random = total - n_center
    if n_random > 0:
        pool = np.array([c for c in range(n2) if c not in chosen])
        dist = np.abs(pool - center)
        weights = np.exp(-((dist / (n2 / 6.0)) ** 2))
        rng = np.random.default_rng([seed, frame_index])
        picks = rng.choice(pool, size=n_random, replace=False,
                           p=weights / weights.sum())
        chosen.update(int(c) for c in picks)
    grid = np.zeros((n1, n2), dtype=bool)
    grid[:, sorted(chosen)] = True
    return FrameMask(np.fft.ifftshift(grid))


def uniform_fourier_mask(n1: int, n2: int, m: int, frame_index: int,
                         seed: int) -> FrameMask:
    """Exactly m cells chosen uniformly at random without replacement."""
    n = n1 * n2
    if not 1 <= m <= n:
        raise DataError(f"m={m} out of range [1, {n}]")
    rng = np.random.default_rng([seed, frame_index])
    idx = rng.choice(n, size=m, replace=False)
    grid = np.zeros(n, dtype=bool)
    grid[idx] = True
    return FrameMask(grid.reshape(n1, n2))


def synth_coil_maps(n1: int, n2: int, mc: int, seed: int) -> np.ndarray:
    """Smooth synthetic coil sensitivities, sum-of-squares normalized.

    Each coil is a Gaussian bump centered on a ring around the field of
    view, modulated by a gentle coil-dependent linear phase ramp. Coil 0
    carries no ramp, so a single-coil map normalizes to all ones. Returns
    an (mc, n1, n2) complex array with sum_j |d_j|^2 = 1 at every pixel.
    """
    if mc < 1:
        raise DataError("need at least one coil")
    rng = np.random.default_rng(seed)
    angle0 = rng.uniform(0.0, 2.0 * np.pi)
    rows = np.arange(n1)[:, None]
    cols = np.arange(n2)[None, :]
    cr, cc = (n1 - 1) / 2.0, (n2 - 1) / 2.0
    ring = 0.35 * min(n1, n2)
    width = 0.5 * max(n1, n2)
    maps = np.empty((mc, n1, n2), dtype=np.complex128)
    for j in range(mc):
        ang = angle0 + 2.0 * np.pi * j / mc
        br, bc = cr + ring * np.sin(ang), cc + ring * np.cos(ang)
        bump = np.exp(-(((rows - br) ** 2 + (cols - bc) ** 2) / (2.0 * width**2)))
        ramp = 0.5 * j * (rows / max(n1, 1) + cols / max(n2, 1))
        maps[j] = bump * np.exp(1j * ramp)
    sos = np.sqrt(np.sum(np.abs(maps) ** 2, axis=0))
    return maps / sos[np.newaxis, :, :]
