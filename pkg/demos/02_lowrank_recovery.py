"""Factored low-rank recovery from per-frame compressive measurements.

Part 1 recovers an exact rank-2 sequence from 10x-undersampled Gaussian
measurements and prints the per-iteration error trace. Part 2 repeats the
classic comparison under random-Fourier sampling with a dominant baseline
image: estimating and subtracting the mean first cuts the error by an order
of magnitude.
"""

from lrcs import (SyntheticSpec, estimate_mean, gen_exact_lowrank,
                  gen_three_level, nsmse, residual_after_mean, solve_lowrank)
from lrcs.lowrank import LowRankConfig
from lrcs.operators import apply_seq, fourier_frame_ops, gaussian_frame_ops
from lrcs.sampling import SamplingPlan, synth_coil_maps, uniform_fourier_mask

print("== part 1: exact rank-2 recovery, Gaussian measurements ==")
n, q, r, m = 900, 50, 2, 90
_, _, X = gen_exact_lowrank(n, q, r, seed=20, scale=1.0)
ops = gaussian_frame_ops(n, m, q, seed=21)
y = apply_seq(ops, X)
res = solve_lowrank(y, ops, LowRankConfig(exit_tol=1e-9), truth=X)
print(f"  n={n}, q={q}, m={m} ({m / n:.0%} sampling), "
      f"estimated rank {res.basis.shape[1]}")
print("  iter   error        subspace step")
for rec in res.trace[::10] + [res.trace[-1]]:
    print(f"  {rec['iteration']:4d}   {rec['error']:.3e}    {rec['sd_step']:.3e}")
print(f"  final error {nsmse(X, res.X):.3e}")

print("\n== part 2: dominant mean under random-Fourier sampling ==")
n1 = n2 = 30
q, m = 50, 90
spec = SyntheticSpec(n1=n1, n2=n2, q=q, rank=4,
                     energy_ratios=(10.0, 1.0, 0.0), seed=5)
data = gen_three_level(spec)
masks = [uniform_fourier_mask(n1, n2, m, k, seed=6) for k in range(q)]
ops = fourier_frame_ops(SamplingPlan(masks=masks,
                                     coil_maps=synth_coil_maps(n1, n2, 1, 6)))
y = apply_seq(ops, data.Z)

plain = solve_lowrank(y, ops)
err_plain = nsmse(data.Z, plain.X)

zbar = estimate_mean(y, ops)
with_mean = solve_lowrank(residual_after_mean(y, ops, zbar), ops)
err_mean = nsmse(data.Z, zbar[:, None] + with_mean.X)

print(f"  low-rank solve alone:        error {err_plain:.4f}")
print(f"  mean stage + low-rank solve: error {err_mean:.4f}")
print(f"  the mean stage moves the heavy baseline energy out of the")
print(f"  randomly-sampled spectrum: {err_plain / err_mean:.0f}x improvement")
