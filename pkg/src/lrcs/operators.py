"""Per-frame measurement operators and sequence-level apply/adjoint maps.

Two operator kinds are provided: dense Gaussian matrices and masked-Fourier
multi-coil maps (coil weighting, unitary 2D DFT, mask gather). Both expose
the same interface: ``n``, ``m_frame``, ``m_total``, ``mc``, ``apply`` and
``adjoint``. ``apply``/``adjoint`` accept a single vector or a matrix whose
columns are transformed together. Operators are immutable after
construction and safe to share across workers.

Mask gathering uses a fixed raster order (row-major over the grid, coil
blocks stacked in coil order), which makes every operator expressible as an
explicit dense matrix for verification.
"""

import numpy as np

from .errors import DataError
from .linalg import fft2_unitary, ifft2_unitary
from .sampling import FrameMask, SamplingPlan

__all__ = [
    "MeasurementSet",
    "GaussianOperator",
    "MaskedFourierOperator",
    "StackedOperator",
    "apply_seq",
    "adjoint_seq",
    "gaussian_frame_ops",
    "fourier_frame_ops",
]


class MeasurementSet:
    """Per-frame complex measurement vectors; frame lengths may differ."""

    def __init__(self, frames):
        self.frames = [np.asarray(f, dtype=np.complex128).ravel() for f in frames]

    def __len__(self):
        return len(self.frames)

    def __iter__(self):
        return iter(self.frames)

    def __getitem__(self, k):
        return self.frames[k]

    def __sub__(self, other):
        if len(other) != len(self):
            raise DataError("measurement sets have different frame counts")
        return MeasurementSet([a - b for a, b in zip(self.frames, other.frames)])

    @property
    def lengths(self):
        return [f.size for f in self.frames]

    @property
    def total_size(self):
        return sum(f.size for f in self.frames)

    def concatenated(self):
        return np.concatenate(self.frames) if self.frames else np.empty(0, complex)

    def copy(self):
        return MeasurementSet([f.copy() for f in self.frames])


class GaussianOperator:
    """Dense measurement matrix acting on length-n image vectors."""

    kind = "dense-gaussian"

    def __init__(self, matrix: np.ndarray):
        self.matrix = np.asarray(matrix, dtype=np.float64)
        if self.matrix.ndim != 2:
            raise DataError("operator matrix must be 2D")
        self.m_frame, self.n = self.matrix.shape
        self.mc = 1
        self.m_total = self.m_frame

    def apply(self, x):
        x = np.asarray(x, dtype=np.complex128)
        if x.shape[0] != self.n:
            raise DataError(f"apply: expected leading dim {self.n}, got {x.shape}")
        return self.matrix @ x

    def adjoint(self, y):
        y = np.asarray(y, dtype=np.complex128)
        if y.shape[0] != self.m_total:
            raise DataError(f"adjoint: expected leading dim {self.m_total}, got {y.shape}")
        return self.matrix.T @ y


class MaskedFourierOperator:
    """Multi-coil masked unitary-Fourier operator for one frame.

    apply: for each coil j, weight the image by the coil map d_j, take the
    unitary 2D DFT, gather the mask-true cells in row-major raster order,
    and stack the coil blocks. adjoint is the exact conjugate transpose:
    scatter, inverse DFT, weight by conj(d_j), sum over coils.
    """

    kind = "masked-fourier"

    def __init__(self, mask: FrameMask, coil_maps: np.ndarray):
        self.mask = mask
        self.coil_maps = np.asarray(coil_maps, dtype=np.complex128)
        if self.coil_maps.ndim != 3 or self.coil_maps.shape[1:] != mask.grid.shape:
            raise DataError("coil maps must be (mc, n1, n2) matching the mask")
        self.n1, self.n2 = mask.grid.shape
        self.n = self.n1 * self.n2
        self.mc = self.coil_maps.shape[0]
        self.m_frame = mask.m_k
        self.m_total = self.m_frame * self.mc
        self._idx = np.flatnonzero(mask.grid.ravel())

    def apply(self, x):
        x = np.asarray(x, dtype=np.complex128)
        if x.shape[0] != self.n:
            raise DataError(f"apply: expected leading dim {self.n}, got {x.shape}")
        vector_in = x.ndim == 1
        cols = 1 if vector_in else x.shape[1]
        img = x.reshape(self.n1, self.n2, cols)
        blocks = []
        for j in range(self.mc):
            weighted = self.coil_maps[j][:, :, np.newaxis] * img
            kspace = fft2_unitary(weighted).reshape(self.n, cols)
            blocks.append(kspace[self._idx, :])
        out = np.concatenate(blocks, axis=0)
        return out[:, 0] if vector_in else out

    def adjoint(self, y):
        y = np.asarray(y, dtype=np.complex128)
        if y.shape[0] != self.m_total:
            raise DataError(f"adjoint: expected leading dim {self.m_total}, got {y.shape}")
        vector_in = y.ndim == 1
        cols = 1 if vector_in else y.shape[1]
        yb = y.reshape(self.mc, self.m_frame, cols)
        acc = np.zeros((self.n1, self.n2, cols), dtype=np.complex128)
        for j in range(self.mc):
            kspace = np.zeros((self.n, cols), dtype=np.complex128)
            kspace[self._idx, :] = yb[j]
            img = ifft2_unitary(kspace.reshape(self.n1, self.n2, cols))
            acc += self.coil_maps[j].conj()[:, :, np.newaxis] * img
        out = acc.reshape(self.n, cols)
        return out[:, 0] if vector_in else out


class StackedOperator:
    """All frame operators applied to one shared image vector.

    Models z -> (A_1 z, ..., A_q z) as a single linear map; used by the
    mean-estimation least-squares problem. Matrix free: memory stays O(n).
    """

    def __init__(self, ops):
        if not ops:
            raise DataError("stacked operator needs at least one frame")
        self.ops = list(ops)
        self.n = self.ops[0].n
        if any(op.n != self.n for op in self.ops):
            raise DataError("frame operators disagree on image size")
        self.m_total = sum(op.m_total for op in self.ops)
        self._splits = np.cumsum([op.m_total for op in self.ops])[:-1]

    def apply(self, x):
        return np.concatenate([op.apply(x) for op in self.ops])

    def adjoint(self, y):
        y = np.asarray(y, dtype=np.complex128)
        if y.shape[0] != self.m_total:
            raise DataError("stacked adjoint: wrong measurement length")
        parts = np.split(y, self._splits)
        out = np.zeros(self.n, dtype=np.complex128)
        for op, part in zip(self.ops, parts):
            out += op.adjoint(part)
        return out


def apply_seq(ops, X: np.ndarray) -> MeasurementSet:
    """Columnwise forward map: frame k of the result is ops[k].apply(X[:, k])."""
    X = np.asarray(X, dtype=np.complex128)
    if X.ndim != 2 or X.shape[1] != len(ops):
        raise DataError(f"apply_seq: expected (n, {len(ops)}) matrix, got {X.shape}")
    return MeasurementSet([op.apply(X[:, k]) for k, op in enumerate(ops)])


def adjoint_seq(ops, Y: MeasurementSet) -> np.ndarray:
    """Columnwise adjoint map: column k of the result is ops[k].adjoint(Y[k])."""
    if len(Y) != len(ops):
        raise DataError("adjoint_seq: frame-count mismatch")
    n = ops[0].n
    out = np.empty((n, len(ops)), dtype=np.complex128)
    for k, op in enumerate(ops):
        out[:, k] = op.adjoint(Y[k])
    return out


def gaussian_frame_ops(n: int, m: int, q: int, seed: int):
    """q independent dense operators with i.i.d. standard Gaussian entries."""
    rng = np.random.default_rng(seed)
    return [GaussianOperator(rng.standard_normal((m, n))) for _ in range(q)]


def fourier_frame_ops(plan: SamplingPlan):
    """Masked-Fourier multi-coil operators for every frame of a sampling plan."""
    return [MaskedFourierOperator(mask, plan.coil_maps) for mask in plan.masks]
