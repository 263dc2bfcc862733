"""Full three-stage reconstruction of a dynamic phantom.

Builds a moving-disk phantom, undersamples it with golden-angle
pseudo-radial masks and four synthetic coils, then reconstructs with both
residual-correction variants. The stage errors show each level of the
hierarchy (mean image, low-rank dynamics, residual) earning its keep, and
both variants beating the zero-filled adjoint baseline by a wide margin.
"""

import time

from lrcs import gen_moving_disk_phantom, nsmse, reconstruct
from lrcs.operators import adjoint_seq, apply_seq, fourier_frame_ops
from lrcs.sampling import SamplingPlan, golden_angle_pseudo_radial, synth_coil_maps

n1 = n2 = 48
q, lines, mc = 60, 8, 4

print(f"== phantom: {n1}x{n2}, {q} frames; {lines} radial lines, {mc} coils ==")
cube = gen_moving_disk_phantom(n1, n2, q, seed=3)
Z = cube.reshape(n1 * n2, q)
masks = [golden_angle_pseudo_radial(n1, n2, lines, k) for k in range(q)]
maps = synth_coil_maps(n1, n2, mc, seed=3)
ops = fourier_frame_ops(SamplingPlan(masks=masks, coil_maps=maps))
y = apply_seq(ops, Z)
kept = masks[0].m_k / (n1 * n2)
print(f"  {kept:.1%} of k-space per frame, {ops[0].m_total} samples per frame "
      f"({ops[0].m_total / (n1 * n2):.2f} x pixels)")

print(f"  zero-filled adjoint baseline error: {nsmse(Z, adjoint_seq(ops, y)):.4f}")

for method, label in [("mri1", "framewise residual correction"),
                      ("mri2", "temporal-Fourier-sparse correction")]:
    t0 = time.perf_counter()
    res = reconstruct(y, ops, method, truth=Z)
    dt = time.perf_counter() - t0
    errs = res.report.stage_errors
    print(f"\n== method {method} ({label}) ==")
    print(f"  stage errors: mean only     {errs['mean']:.5f}")
    print(f"                + low rank    {errs['mean+lowrank']:.5f}")
    print(f"                + residual    {errs['full']:.5f}")
    secs = res.report.stage_seconds
    print(f"  stage seconds: " + ", ".join(f"{k} {v:.2f}" for k, v in secs.items())
          + f"; total {dt:.2f}")
    print(f"  rank picked automatically: {res.report.config['rank']}, "
          f"solver iterations: {len(res.report.trace)}")
