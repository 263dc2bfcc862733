"""Mini-batch and online subspace tracking over a frame stream.

Mini-batch mode runs the full three-stage pipeline on the first batch, then
on every later batch warm-starts the low-rank stage from the previous
batch's final basis (skipping truncation, spectral init, and rank
re-estimation) with a much smaller iteration cap. Online mode freezes the
mean and basis learned on the first batch and reconstructs each later frame
independently with constant per-frame cost.
"""

import time
from dataclasses import dataclass

import numpy as np

from .cgls import CglsConfig, cgls_solve
from .errors import DataError, SolverError
from .lowrank import LowRankConfig
from .metrics import ReconReport, nsmse
from .operators import MeasurementSet
from .pipeline import MecConfig, reconstruct

__all__ = ["TrackerState", "TrackResult", "online_step", "run_tracker",
           "LATER_BATCH_MAX_ITERS"]

LATER_BATCH_MAX_ITERS = 5


@dataclass
class TrackerState:
    """Frozen quantities carried between tracking steps."""

    mean: np.ndarray
    basis: np.ndarray
    batch_index: int
    mode: str

    @property
    def rank(self):
        return self.basis.shape[1]


@dataclass
class TrackResult:
    sequence: np.ndarray
    report: ReconReport
    state: TrackerState
    batch_reports: list | None = None


def online_step(state: TrackerState, y_k: np.ndarray, op_k,
                cgls_iters: int = 3) -> np.ndarray:
    """Reconstruct one frame with the frozen mean and basis.

    Solves the basis coefficients by least squares against the
    mean-subtracted measurements, then corrects the remaining residual with
    a short CGLS. The state is not modified.
    """
    y_res = np.asarray(y_k, dtype=np.complex128).ravel() - op_k.apply(state.mean)
    AU = op_k.apply(state.basis)
    b, _, rank, _ = np.linalg.lstsq(AU, y_res, rcond=None)
    if rank < state.rank:
        raise SolverError(f"online frame: A_k U is rank deficient ({rank} < {state.rank})")
    y_res2 = y_res - AU @ b
    e = cgls_solve(op_k, y_res2, CglsConfig(tol=1e-36, max_iter=cgls_iters)).x
    return state.mean + state.basis @ b + e


def _batch_slices(q, alpha1, alpha):
    """Consecutive batch index ranges; a ragged final batch is kept as is."""
    slices = [(0, min(alpha1, q))]
    start = slices[0][1]
    while start < q:
        end = min(start + alpha, q)
        slices.append((start, end))
        start = end
    return slices


def run_tracker(y: MeasurementSet, ops, mode: str, alpha1: int,
                alpha: int | None = None, *,
                lowrank_cfg: LowRankConfig | None = None,
                mec_cfg: MecConfig | None = None,
                mean_cfg: CglsConfig | None = None,
                truth: np.ndarray | None = None,
                reproducible: bool = False) -> TrackResult:
    """Drive the tracker over the whole stream.

    mode "st1"/"st2" selects mini-batch tracking with the unstructured or
    sparse residual correction; "online" freezes the first-batch estimates
    and processes every later frame one at a time. ``alpha`` defaults to
    ``alpha1``.
    """
    if mode not in ("st1", "st2", "online"):
        raise DataError(f"unknown tracking mode {mode!r}")
    q = len(ops)
    if len(y) != q:
        raise DataError("measurements and operators disagree on frame count")
    if not 1 <= alpha1 <= q:
        raise DataError(f"alpha1={alpha1} out of range [1, {q}]")
    alpha = alpha or alpha1
    if alpha < 1:
        raise DataError("alpha must be >= 1")
    base_cfg = lowrank_cfg or LowRankConfig()
    method = "mri2" if mode == "st2" else "mri1"

    t_origin = time.perf_counter()
    if mode == "online":
        first = reconstruct(
            MeasurementSet(y.frames[:alpha1]), ops[:alpha1], method,
            lowrank_cfg=base_cfg, mec_cfg=mec_cfg, mean_cfg=mean_cfg,
            truth=None if truth is None else truth[:, :alpha1],
            reproducible=reproducible)
        state = TrackerState(mean=first.model.mean, basis=first.basis,
                             batch_index=1, mode=mode)
        n = ops[0].n
        Z = np.empty((n, q), dtype=np.complex128)
        Z[:, :alpha1] = first.sequence
        frame_seconds = []
        for k in range(alpha1, q):
            t0 = time.perf_counter()
            Z[:, k] = online_step(state, y[k], ops[k])
            frame_seconds.append(time.perf_counter() - t0)
        report = ReconReport(
            method=f"online(first={first.report.method})",
            stage_seconds={"first_batch": first.report.total_seconds},
            total_seconds=time.perf_counter() - t_origin,
            stage_errors=None if truth is None else {"full": nsmse(truth, Z)},
            config=dict(first.report.config, alpha1=alpha1, mode=mode),
            frame_seconds=frame_seconds,
        )
        if reproducible:
            report.scrub_timings()
        return TrackResult(sequence=Z, report=report, state=state)

    # mini-batch tracking
    slices = _batch_slices(q, alpha1, alpha)
    n = ops[0].n
    Z = np.empty((n, q), dtype=np.complex128)
    state = None
    batch_seconds = []
    batch_reports = []
    for j, (start, end) in enumerate(slices, start=1):
        t0 = time.perf_counter()
        batch_y = MeasurementSet(y.frames[start:end])
        batch_ops = ops[start:end]
        batch_truth = None if truth is None else truth[:, start:end]
        if j == 1:
            res = reconstruct(batch_y, batch_ops, method,
                              lowrank_cfg=base_cfg, mec_cfg=mec_cfg,
                              mean_cfg=mean_cfg, truth=batch_truth,
                              reproducible=reproducible)
        else:
            warm_cfg = LowRankConfig(
                max_iters=LATER_BATCH_MAX_ITERS, exit_tol=base_cfg.exit_tol,
                energy_percent=base_cfg.energy_percent,
                step_numerator=base_cfg.step_numerator,
                step_mode=base_cfg.step_mode,
                conservative_c=base_cfg.conservative_c)
            res = reconstruct(batch_y, batch_ops, method,
                              lowrank_cfg=warm_cfg, mec_cfg=mec_cfg,
                              mean_cfg=mean_cfg, basis0=state.basis,
                              truth=batch_truth, reproducible=reproducible)
        Z[:, start:end] = res.sequence
        state = TrackerState(mean=res.model.mean, basis=res.basis,
                             batch_index=j, mode=mode)
        batch_seconds.append(time.perf_counter() - t0)
        batch_reports.append(res.report)

    report = ReconReport(
        method=f"{mode}(alpha1={alpha1}, alpha={alpha})",
        stage_seconds={f"batch_{j + 1}": s for j, s in enumerate(batch_seconds)},
        total_seconds=time.perf_counter() - t_origin,
        stage_errors=None if truth is None else {"full": nsmse(truth, Z)},
        config={"mode": mode, "alpha1": alpha1, "alpha": alpha,
                "batches": len(slices), "rank": int(state.rank)},
    )
    if reproducible:
        report.scrub_timings()
    return TrackResult(sequence=Z, report=report, state=state,
                       batch_reports=batch_reports)
