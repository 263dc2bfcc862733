"""Synthetic ground-truth generators for desk-scale verification.

Everything here is deterministic under its seed. The three-level generator
builds Z = mean*1^T + X + E with exact Frobenius-norm ratios between the
components and a low-rank part whose column-energy incoherence is kept
small by rejection, so solvers are exercised in their valid regime.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .linalg import row_idft_unitary

__all__ = [
    "SyntheticSpec",
    "ThreeLevelData",
    "gen_three_level",
    "gen_exact_lowrank",
    "gen_moving_disk_phantom",
    "incoherence",
    "smooth_complex_image",
]

INCOHERENCE_LIMIT = 3.0


@dataclass
class SyntheticSpec:
    """Parameters of a three-level synthetic sequence."""

    n1: int
    n2: int
    q: int
    rank: int
    energy_ratios: tuple = (100.0, 10.0, 1.0)
    residual_kind: str = "dense-small"  # or "temporal-fourier-sparse"
    sparse_freqs: int = 4
    condition_number: float = 5.0
    seed: int = 0

    def __post_init__(self):
        r = tuple(float(v) for v in self.energy_ratios)
        if len(r) != 3 or r[0] <= 0 or any(v < 0 for v in r):
            raise DataError("energy ratios must be three nonnegative values, first positive")
        if not r[0] >= r[1] >= r[2]:
            raise DataError("energy ratios must be nonincreasing (mean >> lowrank >> residual)")
        self.energy_ratios = r
        if self.residual_kind not in ("dense-small", "temporal-fourier-sparse"):
            raise DataError(f"unknown residual kind {self.residual_kind!r}")
        if self.rank > min(self.n1 * self.n2, self.q):
            raise DataError("rank exceeds min(n, q)")


@dataclass
class ThreeLevelData:
    Z: np.ndarray
    mean: np.ndarray
    lowrank: np.ndarray
    residual: np.ndarray
    mu: float  # incoherence of the low-rank part (0 when that part is zero)


def smooth_complex_image(n1: int, n2: int, rng, cutoff: float = 0.15) -> np.ndarray:
    """Random smooth complex image: low-frequency Fourier content only."""
    k1 = np.fft.fftfreq(n1)[:, None]
    k2 = np.fft.fftfreq(n2)[None, :]
    keep = (np.abs(k1) <= cutoff) & (np.abs(k2) <= cutoff)
    coeff = (rng.standard_normal((n1, n2)) + 1j * rng.standard_normal((n1, n2))) * keep
    img = np.fft.ifft2(coeff)
    return img / np.linalg.norm(img)


def _random_orthonormal(rows, cols, rng):
    M = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    Q, _ = np.linalg.qr(M)
    return Q


def gen_exact_lowrank(n: int, q: int, r: int, seed: int, scale: float = 1.0,
                      spectrum: np.ndarray | None = None,
                      right_factor: str = "auto"):
    """Exact rank-r matrix X = U diag(s) V^H with incoherent columns.

    The default spectrum is flat (all singular values equal), the
    well-conditioned instance. right_factor "random" redraws a Gaussian
    right factor until the column incoherence is at most 3 (fails for long
    sequences, where the max column energy concentrates above the limit);
    "flat" uses phase-randomized DFT rows, giving exactly equal column
    energies (incoherence <= 1) for any q; "auto" tries random then falls
    back to flat. Returns (U, B, X) with B = diag(s) V^H.
    """
    if right_factor not in ("auto", "random", "flat"):
        raise DataError(f"unknown right_factor {right_factor!r}")
    if r + 1 > q:
        raise DataError("rank must be < q")
    rng = np.random.default_rng(seed)
    U = _random_orthonormal(n, r, rng)
    s = np.full(r, float(scale)) if spectrum is None else np.asarray(spectrum, float)
    if s.size != r:
        raise DataError("spectrum length must equal the rank")
    if right_factor in ("auto", "random"):
        for _ in range(100):
            V = _random_orthonormal(q, r, rng)
            B = s[:, None] * V.conj().T
            X = U @ B
            if incoherence(X) <= INCOHERENCE_LIMIT:
                return U, B, X
        if right_factor == "random":
            raise DataError("failed to draw an incoherent right factor in 100 tries")
    # flat frame: distinct non-DC DFT rows, randomly rotated and phased
    rows = np.exp(-2j * np.pi * np.outer(1 + np.arange(r), np.arange(q)) / q)
    rows /= np.sqrt(q)
    rot = np.linalg.qr(rng.standard_normal((r, r))
                       + 1j * rng.standard_normal((r, r)))[0]
    phases = np.exp(1j * rng.uniform(0, 2 * np.pi, q))
    Vh = rot @ rows * phases[np.newaxis, :]
    B = s[:, None] * Vh
    return U, B, U @ B


def gen_three_level(spec: SyntheticSpec) -> ThreeLevelData:
    """Draw Z = mean*1^T + X + E hitting the requested Frobenius ratios exactly."""
    n = spec.n1 * spec.n2
    rng = np.random.default_rng(spec.seed)
    r_mean, r_lr, r_res = spec.energy_ratios

    mean = smooth_complex_image(spec.n1, spec.n2, rng).reshape(n)
    mean = mean * (r_mean / (np.linalg.norm(mean) * np.sqrt(spec.q)))

    if r_lr > 0 and spec.rank > 0:
        decay = spec.condition_number ** (-np.arange(spec.rank) / max(spec.rank - 1, 1))
        _, _, X = gen_exact_lowrank(n, spec.q, spec.rank,
                                    int(rng.integers(2**31)), spectrum=decay)
        X = X * (r_lr / np.linalg.norm(X))
        mu = incoherence(X)
    else:
        X = np.zeros((n, spec.q), dtype=np.complex128)
        mu = 0.0

    if r_res > 0:
        if spec.residual_kind == "dense-small":
            E = rng.standard_normal((n, spec.q)) + 1j * rng.standard_normal((n, spec.q))
        else:
            S = np.zeros((n, spec.q), dtype=np.complex128)
            for row in range(n):
                cols = rng.choice(spec.q, size=min(spec.sparse_freqs, spec.q),
                                  replace=False)
                S[row, cols] = rng.standard_normal(cols.size) + 1j * rng.standard_normal(cols.size)
            E = row_idft_unitary(S)
        E = E * (r_res / np.linalg.norm(E))
    else:
        E = np.zeros((n, spec.q), dtype=np.complex128)

    Z = mean[:, np.newaxis] + X + E
    return ThreeLevelData(Z=Z, mean=mean, lowrank=X, residual=E, mu=mu)


def gen_moving_disk_phantom(n1: int, n2: int, q: int, *, amplitude: float = 4.0,
                            period: float = 25.0, disk_radius: float = None,
                            edge_width: float = 1.5, disk_intensity: float = 1.0,
                            uptake_max: float = 0.5, seed: int = 0) -> np.ndarray:
    """Deterministic dynamic phantom: ellipse + moving disk + uptake region.

    A static soft-edged background ellipse, one disk translating
    sinusoidally with the given amplitude and period along a seeded
    direction, and an elliptical region whose intensity ramps up
    monotonically over the sequence. Returns an (n1, n2, q) complex cube.
    Frame-to-frame pixel changes are bounded by
    disk_intensity/edge_width * max-step + uptake step (soft edges are
    Lipschitz in the disk center).
    """
    if disk_radius is None:
        disk_radius = 0.12 * min(n1, n2)
    if min(n1, n2) < 8:
        raise DataError("phantom grid too small")
    rng = np.random.default_rng(seed)
    direction = rng.uniform(0.0, 2.0 * np.pi)
    dr, dc = np.sin(direction), np.cos(direction)
    cr, cc = (n1 - 1) / 2.0, (n2 - 1) / 2.0
    if amplitude + disk_radius + edge_width > min(n1, n2) / 2.0:
        raise DataError("disk motion leaves the field of view")

    rows = np.arange(n1)[:, None]
    cols = np.arange(n2)[None, :]

    def soft(dist, radius):
        return np.clip((radius + edge_width - dist) / edge_width, 0.0, 1.0)

    ellipse = soft(np.hypot((rows - cr) / 1.0, (cols - cc) / 1.3), 0.42 * min(n1, n2))
    uptake_center = (cr - 0.2 * n1, cc - 0.2 * n2)
    uptake_region = soft(np.hypot(rows - uptake_center[0], cols - uptake_center[1]),
                         0.1 * min(n1, n2))

    cube = np.empty((n1, n2, q), dtype=np.complex128)
    for k in range(q):
        shift = amplitude * np.sin(2.0 * np.pi * k / period)
        disk = soft(np.hypot(rows - (cr + shift * dr) - 0.15 * n1,
                             cols - (cc + shift * dc)), disk_radius)
        uptake = uptake_max * (k / max(q - 1, 1))
        cube[:, :, k] = 0.5 * ellipse + disk_intensity * disk + uptake * uptake_region
    return cube


def incoherence(X: np.ndarray, rank_tol: float = 1e-8) -> float:
    """Column-energy incoherence mu = max_k ||x_k||^2 * q / (r * ||X||_2^2).

    r is the numerical rank (singular values above rank_tol times the
    largest). Equals 1 for a matrix with identical columns.
    """
    X = np.asarray(X, dtype=np.complex128)
    if X.ndim != 2:
        raise DataError("incoherence expects a matrix")
    s = np.linalg.svd(X, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        raise DataError("incoherence of a zero matrix is undefined")
    r = int(np.sum(s > rank_tol * s[0]))
    max_col = float(np.max(np.sum(np.abs(X) ** 2, axis=0)))
    return max_col * X.shape[1] / (r * float(s[0]) ** 2)
