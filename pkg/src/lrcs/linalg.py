"""Deterministic dense linear-algebra and transform kernels.

Every transform here is unitary, so Frobenius norms are preserved and each
flattened 2D-DFT row has unit l2 norm. All functions are pure and safe to
call concurrently.
"""

import numpy as np

from .errors import DataError, SolverError

__all__ = [
    "fft2_unitary",
    "ifft2_unitary",
    "row_dft_unitary",
    "row_idft_unitary",
    "thin_qr",
    "top_left_singular",
    "subspace_distance",
    "spectral_norm",
]

# Orthonormality defect tolerance, scaled by sqrt(columns).
ORTHO_TOL = 1e-10


def _check_finite(a, name="input"):
    if not np.all(np.isfinite(a)):
        raise DataError(f"{name} contains non-finite entries")


def fft2_unitary(image: np.ndarray) -> np.ndarray:
    """Unitary 2D DFT over the two leading axes.

    Scaled by 1/sqrt(n1*n2) so that the Frobenius norm is preserved; a
    constant image of value c maps to a single DC entry c*sqrt(n1*n2).
    Trailing axes are transformed independently (batch dimension).
    """
    image = np.asarray(image, dtype=np.complex128)
    _check_finite(image, "image")
    return np.fft.fft2(image, axes=(0, 1), norm="ortho")


def ifft2_unitary(kspace: np.ndarray) -> np.ndarray:
    """Inverse (adjoint) of :func:`fft2_unitary`."""
    kspace = np.asarray(kspace, dtype=np.complex128)
    _check_finite(kspace, "kspace")
    return np.fft.ifft2(kspace, axes=(0, 1), norm="ortho")


def row_dft_unitary(M: np.ndarray) -> np.ndarray:
    """Unitary 1D DFT applied independently to each row of an n x q matrix."""
    M = np.asarray(M, dtype=np.complex128)
    _check_finite(M, "matrix")
    return np.fft.fft(M, axis=-1, norm="ortho")


def row_idft_unitary(M: np.ndarray) -> np.ndarray:
    """Inverse (adjoint) of :func:`row_dft_unitary`."""
    M = np.asarray(M, dtype=np.complex128)
    _check_finite(M, "matrix")
    return np.fft.ifft(M, axis=-1, norm="ortho")


def thin_qr(M: np.ndarray):
    """Thin QR factorization M = Q R with a fixed sign convention.

    The diagonal of R is made real and positive so that identical input bits
    always produce identical output bits.

    Raises
    ------
    SolverError
        If M is (numerically) rank deficient, i.e. the iterate is degenerate.
    """
    M = np.asarray(M, dtype=np.complex128)
    if M.ndim != 2 or M.shape[0] < M.shape[1]:
        raise DataError(f"thin_qr expects a tall matrix, got shape {M.shape}")
    Q, R = np.linalg.qr(M, mode="reduced")
    diag = np.diagonal(R).copy()
    mags = np.abs(diag)
    tol = max(M.shape) * np.finfo(np.float64).eps * (mags.max() if mags.size else 0.0)
    if mags.size == 0 or np.any(mags <= tol):
        raise SolverError("rank-deficient matrix in QR: degenerate iterate")
    phases = diag / mags
    Q = Q * phases.conj()[np.newaxis, :]
    R = phases.conj()[:, np.newaxis] * R
    return Q, R


def top_left_singular(M: np.ndarray, r: int):
    """Top-r left singular vectors of M plus the full singular value vector.

    Returns (U, sigma) with U of shape (n, r) and sigma of length min(n, q),
    sorted descending. The full spectrum is returned because the automatic
    rank rule needs it.
    """
    M = np.asarray(M, dtype=np.complex128)
    n, q = M.shape
    if not 1 <= r <= min(n, q):
        raise DataError(f"rank {r} out of range for shape {M.shape}")
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    return U[:, :r], s


def _check_orthonormal(U, name):
    U = np.asarray(U, dtype=np.complex128)
    if U.ndim != 2:
        raise DataError(f"{name} must be a 2D array")
    r = U.shape[1]
    gram = U.conj().T @ U
    defect = np.linalg.norm(gram - np.eye(r))
    if defect > ORTHO_TOL * np.sqrt(r):
        raise DataError(f"{name} is not orthonormal (defect {defect:.3e})")
    return U


def subspace_distance(U1: np.ndarray, U2: np.ndarray) -> float:
    """Frobenius norm of the component of span(U2) outside span(U1).

    Computed as ||U2 - U1 (U1^H U2)||_F. Both inputs must have orthonormal
    columns; the value lies in [0, sqrt(r)] where r = U2.shape[1].
    """
    U1 = _check_orthonormal(U1, "U1")
    U2 = _check_orthonormal(U2, "U2")
    if U1.shape[0] != U2.shape[0]:
        raise DataError("subspace_distance: row counts differ")
    residual = U2 - U1 @ (U1.conj().T @ U2)
    return float(np.linalg.norm(residual))


def spectral_norm(M: np.ndarray) -> float:
    """Largest singular value (induced l2 norm)."""
    M = np.asarray(M, dtype=np.complex128)
    if M.size == 0:
        return 0.0
    return float(np.linalg.svd(M, compute_uv=False)[0])
