"""Low-rank factored recovery from per-frame compressive measurements.

Recovers X = U B (U an n x r orthonormal basis, B the r x q coefficients)
from measurement residuals by alternating an exact per-frame least-squares
solve for B with one projected gradient step for U per iteration. The
initialization is spectral: a magnitude-truncated adjoint image whose top
singular vectors seed U, with the rank picked automatically from an energy
threshold on the leading singular values.

Conventions: all transposes are conjugate transposes; the squared-loss
factor 2 is omitted from the gradient (absorbed into the step size); the
step size is set once at the first iteration and never changes.
"""

import time
from dataclasses import dataclass

import numpy as np

from .errors import DataError, SolverError
from .linalg import spectral_norm, subspace_distance, thin_qr
from .metrics import nsmse
from .operators import MeasurementSet

__all__ = [
    "LowRankConfig",
    "InitResult",
    "LowRankResult",
    "truncate_measurements",
    "spectral_init",
    "estimate_rank",
    "solve_coefficients",
    "basis_gradient",
    "solve_lowrank",
]


@dataclass
class LowRankConfig:
    """Solver constants; defaults are the fixed choices used everywhere.

    step_mode "gradient" sets the step to step_numerator / ||grad||_2 at the
    first iteration; "conservative" uses conservative_c / (mean_m * ||U0 B0||^2),
    which converges more slowly but is safe by construction.
    """

    max_iters: int = 70
    exit_tol: float = 0.01
    energy_percent: float = 85.0
    step_numerator: float = 0.14
    step_mode: str = "gradient"
    conservative_c: float = 0.1

    def __post_init__(self):
        if not 0 < self.energy_percent <= 100:
            raise DataError("energy_percent must be in (0, 100]")
        if self.exit_tol <= 0:
            raise DataError("exit_tol must be positive")
        if self.max_iters < 1:
            raise DataError("max_iters must be >= 1")
        if self.step_mode not in ("gradient", "conservative"):
            raise DataError(f"unknown step_mode {self.step_mode!r}")


@dataclass
class InitResult:
    X0: np.ndarray
    gamma: float
    rank: int
    basis0: np.ndarray
    sigma: np.ndarray
    n_truncated: int


@dataclass
class LowRankResult:
    basis: np.ndarray       # final orthonormal U, n x r
    coeffs: np.ndarray      # final B, r x q
    X: np.ndarray           # basis @ coeffs
    trace: list             # per-iteration records
    step_size: float | None
    iterations: int
    init: InitResult | None


def truncate_measurements(y: MeasurementSet):
    """Zero out measurement entries larger than 6 x the global rms magnitude.

    The threshold is sqrt(gamma) with gamma = 36 * sum |y_ki|^2 / M where M
    is the total scalar measurement count. Returns the truncated set, gamma,
    and the number of zeroed entries. An all-zero input yields gamma = 0.
    """
    total = y.total_size
    if total == 0:
        raise DataError("truncate: empty measurement set")
    energy = sum(float(np.sum(np.abs(f) ** 2)) for f in y)
    gamma = 36.0 * energy / total
    thresh = np.sqrt(gamma)
    frames = []
    n_zeroed = 0
    for f in y:
        keep = np.abs(f) <= thresh
        n_zeroed += int(f.size - keep.sum())
        frames.append(f * keep)
    return MeasurementSet(frames), gamma, n_zeroed


def spectral_init(y_tnc: MeasurementSet, ops) -> np.ndarray:
    """Scaled adjoint image used for the spectral initialization.

    Column k is A_k^H y_k / sqrt(m_k * mean_m) with m_k the per-frame mask
    cell count (the coil dimension is handled inside the adjoint) and
    mean_m the average of the m_k.
    """
    if len(y_tnc) != len(ops):
        raise DataError("spectral_init: frame-count mismatch")
    m = np.array([op.m_frame for op in ops], dtype=float)
    mean_m = m.mean()
    cols = [op.adjoint(y_tnc[k]) / np.sqrt(m[k] * mean_m)
            for k, op in enumerate(ops)]
    return np.stack(cols, axis=1)


def estimate_rank(sigma: np.ndarray, n: int, q: int, mc: int, min_m: int,
                  energy_percent: float = 85.0) -> int:
    """Smallest rank holding energy_percent of the top-J singular energy.

    J = floor(min(n, q, mc * min_m) / 10); the returned rank never exceeds J.
    """
    sigma = np.asarray(sigma, dtype=float)
    if np.any(np.diff(sigma) > 0):
        raise DataError("singular values must be sorted descending")
    J = int(min(n, q, mc * min_m) // 10)
    if J < 1:
        raise SolverError(
            "rank rule degenerate: min(n, q, mc*min_m) < 10; "
            "increase measurements per frame or use an explicit rank")
    J = min(J, sigma.size)
    energies = np.cumsum(sigma[:J] ** 2)
    threshold = (energy_percent / 100.0) * energies[-1]
    return int(np.searchsorted(energies, threshold) + 1) if energies[-1] > 0 else 1


def solve_coefficients(U: np.ndarray, y: MeasurementSet, ops) -> np.ndarray:
    """Exact per-frame least squares: column k minimizes ||y_k - A_k U b||.

    The m_k x r matrix A_k U is materialized with r operator applies; frames
    decouple, so the solves are independent.
    """
    U = np.asarray(U, dtype=np.complex128)
    r = U.shape[1]
    B = np.empty((r, len(ops)), dtype=np.complex128)
    for k, op in enumerate(ops):
        AU = op.apply(U)
        b, _, rank, _ = np.linalg.lstsq(AU, y[k], rcond=None)
        if rank < r:
            raise SolverError(f"frame {k}: A_k U is rank deficient ({rank} < {r})")
        B[:, k] = b
    return B


def basis_gradient(U: np.ndarray, B: np.ndarray, y: MeasurementSet, ops) -> np.ndarray:
    """Gradient of sum_k ||y_k - A_k U b_k||^2 w.r.t. U (factor 2 omitted).

    Accumulated in ascending frame order: sum_k A_k^H (A_k U b_k - y_k) b_k^H.
    """
    U = np.asarray(U, dtype=np.complex128)
    B = np.asarray(B, dtype=np.complex128)
    n, r = U.shape
    grad = np.zeros((n, r), dtype=np.complex128)
    for k, op in enumerate(ops):
        AU = op.apply(U)
        residual = AU @ B[:, k] - y[k]
        grad += np.outer(op.adjoint(residual), B[:, k].conj())
    return grad


def _validate_ops(y, ops):
    if len(y) != len(ops):
        raise DataError("measurements and operators disagree on frame count")
    n = ops[0].n
    if any(op.n != n for op in ops):
        raise DataError("frame operators disagree on image size")
    mc = ops[0].mc
    if any(op.mc != mc for op in ops):
        raise DataError("frame operators disagree on coil count")
    for k, op in enumerate(ops):
        if y[k].size != op.m_total:
            raise DataError(f"frame {k}: measurement length {y[k].size} != {op.m_total}")
    return n, mc


def solve_lowrank(y: MeasurementSet, ops, config: LowRankConfig | None = None,
                  basis0: np.ndarray | None = None,
                  truth: np.ndarray | None = None) -> LowRankResult:
    """Run the full factored recovery loop.

    When ``basis0`` is given the initialization (truncation, spectral init,
    rank estimation) is skipped and the rank is the column count of
    ``basis0``; this is the warm-start path used by subspace tracking.
    ``truth`` is only used to record a per-iteration error in the trace.

    Each iteration solves B exactly, takes one gradient step on U, and
    re-orthonormalizes by QR. The step size is fixed at iteration 1; the
    loop exits early once the subspace distance between consecutive bases
    drops below exit_tol * sqrt(r). The returned factors always satisfy
    X = basis @ coeffs with the final basis.
    """
    cfg = config or LowRankConfig()
    n, mc = _validate_ops(y, ops)
    q = len(ops)
    t_start = time.perf_counter()

    init = None
    if basis0 is None:
        y_tnc, gamma, n_zeroed = truncate_measurements(y)
        X0 = spectral_init(y_tnc, ops)
        Ufull, sigma, _ = np.linalg.svd(X0, full_matrices=False)
        rank = estimate_rank(sigma, n, q, mc, min(op.m_frame for op in ops),
                             cfg.energy_percent)
        U = Ufull[:, :rank]
        init = InitResult(X0=X0, gamma=gamma, rank=rank, basis0=U,
                          sigma=sigma, n_truncated=n_zeroed)
    else:
        U = np.asarray(basis0, dtype=np.complex128)
        if U.ndim != 2 or U.shape[0] != n:
            raise DataError(f"warm-start basis has shape {U.shape}, expected ({n}, r)")
        rank = U.shape[1]

    short = [k for k, op in enumerate(ops) if op.m_total < rank]
    if short:
        raise SolverError(f"frames {short} have fewer measurements than rank {rank}")

    eta = None
    trace = []
    sqrt_r = np.sqrt(rank)
    B = None
    iterations = 0
    for t in range(1, cfg.max_iters + 1):
        B = solve_coefficients(U, y, ops)
        X = U @ B
        grad = basis_gradient(U, B, y, ops)
        if t == 1:
            gnorm = spectral_norm(grad)
            if gnorm == 0.0:
                trace.append(_trace_record(t, 0.0, truth, X, U,
                                           time.perf_counter() - t_start))
                return LowRankResult(basis=U, coeffs=B, X=X, trace=trace,
                                     step_size=None, iterations=0, init=init)
            if cfg.step_mode == "gradient":
                eta = cfg.step_numerator / gnorm
            else:
                mean_m = float(np.mean([op.m_total for op in ops]))
                eta = cfg.conservative_c / (mean_m * spectral_norm(X) ** 2)
        U_next, _ = thin_qr(U - eta * grad)
        sd_step = subspace_distance(U, U_next) / sqrt_r
        trace.append(_trace_record(t, sd_step, truth, X, U_next,
                                   time.perf_counter() - t_start))
        U = U_next
        iterations = t
        if sd_step < cfg.exit_tol:
            break

    B = solve_coefficients(U, y, ops)
    return LowRankResult(basis=U, coeffs=B, X=U @ B, trace=trace,
                         step_size=eta, iterations=iterations, init=init)


def _trace_record(t, sd_step, truth, X, U, elapsed):
    gram = U.conj().T @ U
    defect = float(np.linalg.norm(gram - np.eye(U.shape[1])))
    err = None if truth is None else nsmse(truth, X)
    return {"iteration": t, "sd_step": float(sd_step), "error": err,
            "elapsed": float(elapsed), "ortho_defect": defect}
