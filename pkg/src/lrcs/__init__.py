"""Hierarchical low-rank recovery of dynamic image sequences from
per-frame compressive measurements, with mini-batch and online subspace
tracking, measurement operators, sampling-mask generators, synthetic data,
and error metrics."""

from .cgls import CglsConfig, CglsResult, cgls_solve
from .datagen import (SyntheticSpec, gen_exact_lowrank, gen_moving_disk_phantom,
                      gen_three_level, incoherence)
from .errors import ConfigError, DataError, LrcsError, SolverError
from .linalg import (fft2_unitary, ifft2_unitary, row_dft_unitary,
                     row_idft_unitary, spectral_norm, subspace_distance,
                     thin_qr, top_left_singular)
from .lowrank import (LowRankConfig, LowRankResult, basis_gradient,
                      estimate_rank, solve_coefficients, solve_lowrank,
                      spectral_init, truncate_measurements)
from .metrics import ReconReport, StageTimer, nsmse
from .operators import (GaussianOperator, MaskedFourierOperator, MeasurementSet,
                        StackedOperator, adjoint_seq, apply_seq,
                        fourier_frame_ops, gaussian_frame_ops)
from .pipeline import (HierarchicalModel, MecConfig, ReconResult,
                       correct_residual_framewise, correct_residual_sparse,
                       estimate_mean, reconstruct, residual_after_lowrank,
                       residual_after_mean, soft_threshold)
from .sampling import (FrameMask, SamplingPlan, cartesian_vd_mask,
                       golden_angle_pseudo_radial, synth_coil_maps,
                       uniform_fourier_mask)
from .tracking import TrackerState, TrackResult, online_step, run_tracker

__version__ = "0.1.0"
