"""Reconstruction error and timing metrics.

The error metric is the normalized scale-invariant mean squared error:
each reconstructed column is rescaled by the complex scalar that best
matches the true column before the squared residual is accumulated, and
the sum is normalized by the total true energy. The value is invariant
under per-column complex rescaling of the reconstruction and lies in
[0, 1] for nonzero truth.
"""

import json
import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

__all__ = ["nsmse", "StageTimer", "ReconReport"]


def nsmse(X_true: np.ndarray, X_hat: np.ndarray) -> float:
    """Normalized scale-invariant MSE between two n x q matrices.

    Column k of X_hat is scaled by (x_hat^H x_true)/||x_hat||^2 (a complex
    scalar) before the residual is taken; an all-zero reconstructed column
    contributes the full energy of the corresponding true column.
    """
    X_true = np.atleast_2d(np.asarray(X_true, dtype=np.complex128))
    X_hat = np.atleast_2d(np.asarray(X_hat, dtype=np.complex128))
    if X_true.shape != X_hat.shape:
        raise DataError(f"nsmse: shape mismatch {X_true.shape} vs {X_hat.shape}")
    total = float(np.sum(np.abs(X_true) ** 2))
    if total == 0.0:
        raise DataError("nsmse: reference matrix is zero")
    hat_energy = np.sum(np.abs(X_hat) ** 2, axis=0)
    inner = np.sum(X_hat.conj() * X_true, axis=0)
    scale = np.where(hat_energy > 0, inner / np.where(hat_energy > 0, hat_energy, 1.0), 0.0)
    residual = X_true - X_hat * scale[np.newaxis, :]
    return float(np.sum(np.abs(residual) ** 2) / total)


class StageTimer:
    """Wall-clock stage timer based on a monotonic clock.

    Records (name, start, end) spans relative to construction so stage
    durations, nesting, and ordering can all be inspected.
    """

    def __init__(self):
        self._origin = time.perf_counter()
        self.spans = []

    @contextmanager
    def stage(self, name: str):
        start = time.perf_counter() - self._origin
        try:
            yield
        finally:
            end = time.perf_counter() - self._origin
            self.spans.append((name, start, end))

    def seconds(self) -> dict:
        out = {}
        for name, start, end in self.spans:
            out[name] = out.get(name, 0.0) + (end - start)
        return out

    def total(self) -> float:
        return time.perf_counter() - self._origin


@dataclass
class ReconReport:
    """Structured summary of one reconstruction run."""

    method: str
    stage_seconds: dict = field(default_factory=dict)
    total_seconds: float = 0.0
    stage_errors: dict | None = None
    trace: list | None = None
    config: dict = field(default_factory=dict)
    frame_seconds: list | None = None

    def scrub_timings(self):
        """Zero every wall-clock field so serialized reports are bit-stable."""
        self.stage_seconds = {k: 0.0 for k in self.stage_seconds}
        self.total_seconds = 0.0
        if self.trace is not None:
            self.trace = [dict(rec, elapsed=0.0) for rec in self.trace]
        if self.frame_seconds is not None:
            self.frame_seconds = [0.0 for _ in self.frame_seconds]
        return self

    def to_json(self) -> str:
        payload = {
            "method": self.method,
            "stage_seconds": self.stage_seconds,
            "total_seconds": self.total_seconds,
            "stage_errors": self.stage_errors,
            "trace": self.trace,
            "config": self.config,
            "frame_seconds": self.frame_seconds,
        }
        return json.dumps(payload, indent=2, sort_keys=True)
