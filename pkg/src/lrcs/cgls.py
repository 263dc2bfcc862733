"""Conjugate-gradient least squares on the normal equations.

Solves min_x ||y - A x||^2 for any linear map exposing ``apply`` and
``adjoint``. The stopping rule compares ||A^H (y - A x)|| against
tol * ||A^H y||; the iteration cap is the other control. Used with
(tol=1e-3, max_iter=10) for the mean image and (tol=1e-36, max_iter=3)
for the per-frame residual correction, where the tolerance is deliberately
non-binding and the cap does the work.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DataError

__all__ = ["CglsConfig", "CglsResult", "cgls_solve"]


@dataclass
class CglsConfig:
    tol: float = 1e-3
    max_iter: int = 10
    x0: np.ndarray | None = None

    def __post_init__(self):
        if self.tol < 0:
            raise DataError("cgls tolerance must be >= 0")
        if self.max_iter < 1:
            raise DataError("cgls needs max_iter >= 1")


@dataclass
class CglsResult:
    x: np.ndarray
    iterations: int
    rel_residual: float
    breakdown: bool = False


def cgls_solve(op, y: np.ndarray, cfg: CglsConfig | None = None) -> CglsResult:
    """Run CGLS from cfg.x0 (default zero) and return the final iterate.

    On breakdown (a search direction with zero norm) the current iterate is
    returned with the breakdown flag set.
    """
    if cfg is None:
        cfg = CglsConfig()
    y = np.asarray(y, dtype=np.complex128)
    if not np.all(np.isfinite(y)):
        raise DataError("cgls: non-finite right-hand side")

    if cfg.x0 is None:
        x = np.zeros(op.n, dtype=np.complex128)
        r = y.copy()
        s = op.adjoint(r)
        denom = np.linalg.norm(s)
    else:
        x = np.asarray(cfg.x0, dtype=np.complex128).copy()
        r = y - op.apply(x)
        s = op.adjoint(r)
        denom = np.linalg.norm(op.adjoint(y))

    if denom == 0.0:
        return CglsResult(x=x, iterations=0, rel_residual=0.0)

    gamma = float(np.vdot(s, s).real)
    p = s.copy()
    iterations = 0
    rel = np.sqrt(gamma) / denom
    for _ in range(cfg.max_iter):
        qv = op.apply(p)
        qq = float(np.vdot(qv, qv).real)
        if qq == 0.0:
            return CglsResult(x=x, iterations=iterations, rel_residual=rel,
                              breakdown=True)
        alpha = gamma / qq
        x = x + alpha * p
        r = r - alpha * qv
        s = op.adjoint(r)
        gamma_new = float(np.vdot(s, s).real)
        iterations += 1
        rel = np.sqrt(gamma_new) / denom
        if rel <= cfg.tol:
            break
        beta = gamma_new / gamma
        gamma = gamma_new
        p = s + beta * p
    return CglsResult(x=x, iterations=iterations, rel_residual=rel)
