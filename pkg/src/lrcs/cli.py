"""Command-line interface.

Subcommands: gen-data (synthetic truth + undersampled measurements),
gen-mask (masks only), recon (batch or tracking reconstruction), bench
(desk-scale benchmark suites), eval (error between two image containers).
Exit codes: 0 ok, 2 config error, 3 data error, 4 solver error.
"""

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, fields

import numpy as np

from . import container, datagen, sampling
from .cgls import CglsConfig
from .errors import ConfigError, DataError, SolverError
from .lowrank import LowRankConfig, solve_lowrank
from .metrics import nsmse
from .operators import apply_seq, fourier_frame_ops, gaussian_frame_ops
from .pipeline import MecConfig, reconstruct
from .tracking import run_tracker

__all__ = ["RunConfig", "main"]


@dataclass
class RunConfig:
    """Reconstruction settings; defaults are the fixed pipeline constants."""

    method: str = "mri1"
    alpha1: int | None = None
    alpha: int | None = None
    seed: int = 0
    reproducible: bool = False
    max_iters: int = 70
    exit_tol: float = 0.01
    energy_percent: float = 85.0
    step_numerator: float = 0.14
    step_mode: str = "gradient"
    mec_max_iters: int = 10
    mec_rel_change_tol: float = 0.0025
    mec_threshold_factor: float = 0.001
    mec_cgls_iters: int = 3
    mean_tol: float = 1e-3
    mean_max_iter: int = 10

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)

    def lowrank_cfg(self) -> LowRankConfig:
        return LowRankConfig(max_iters=self.max_iters, exit_tol=self.exit_tol,
                             energy_percent=self.energy_percent,
                             step_numerator=self.step_numerator,
                             step_mode=self.step_mode)

    def mec_cfg(self) -> MecConfig:
        variant = ("temporal-fourier-sparse"
                   if self.method in ("mri2", "st2") else "unstructured")
        return MecConfig(variant=variant, max_iters=self.mec_max_iters,
                         rel_change_tol=self.mec_rel_change_tol,
                         threshold_factor=self.mec_threshold_factor,
                         cgls_iters=self.mec_cgls_iters)

    def mean_cfg(self) -> CglsConfig:
        return CglsConfig(tol=self.mean_tol, max_iter=self.mean_max_iter)

    def echo(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


GEN_SPEC_KEYS = {"n1", "n2", "q", "rank", "energy_ratios", "residual_kind",
                 "sparse_freqs", "seed", "coils", "sampling"}
SAMPLING_KEYS = {"scheme", "lines", "reduction", "m"}


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc


def _build_masks(scheme, n1, n2, q, seed, lines=None, reduction=None, m=None):
    masks = []
    for k in range(q):
        if scheme == "radial":
            if lines is None:
                raise ConfigError("radial sampling needs 'lines'")
            masks.append(sampling.golden_angle_pseudo_radial(n1, n2, lines, k, seed))
        elif scheme == "cartesian":
            if reduction is None:
                raise ConfigError("cartesian sampling needs 'reduction'")
            masks.append(sampling.cartesian_vd_mask(n1, n2, reduction, k, seed))
        elif scheme == "uniform":
            if m is None:
                raise ConfigError("uniform sampling needs 'm'")
            masks.append(sampling.uniform_fourier_mask(n1, n2, m, k, seed))
        else:
            raise ConfigError(f"unknown sampling scheme {scheme!r}")
    return masks


def _cmd_gen_data(args):
    spec = _load_json(args.spec)
    unknown = sorted(set(spec) - GEN_SPEC_KEYS)
    if unknown:
        raise ConfigError(f"unknown spec keys: {', '.join(unknown)}")
    for key in ("n1", "n2", "q", "rank", "sampling"):
        if key not in spec:
            raise ConfigError(f"spec is missing required key '{key}'")
    samp = spec["sampling"]
    unknown = sorted(set(samp) - SAMPLING_KEYS)
    if unknown:
        raise ConfigError(f"unknown sampling keys: {', '.join(unknown)}")

    synth = datagen.SyntheticSpec(
        n1=spec["n1"], n2=spec["n2"], q=spec["q"], rank=spec["rank"],
        energy_ratios=tuple(spec.get("energy_ratios", (100.0, 10.0, 1.0))),
        residual_kind=spec.get("residual_kind", "dense-small"),
        sparse_freqs=spec.get("sparse_freqs", 4),
        seed=spec.get("seed", 0))
    data = datagen.gen_three_level(synth)
    mc = int(spec.get("coils", 1))
    maps = sampling.synth_coil_maps(synth.n1, synth.n2, mc, synth.seed)
    masks = _build_masks(samp["scheme"], synth.n1, synth.n2, synth.q, synth.seed,
                         lines=samp.get("lines"), reduction=samp.get("reduction"),
                         m=samp.get("m"))
    plan = sampling.SamplingPlan(masks=masks, coil_maps=maps, scheme=samp["scheme"])
    ops = fourier_frame_ops(plan)
    kspace = apply_seq(ops, data.Z)

    os.makedirs(args.out, exist_ok=True)
    cube = data.Z.reshape(synth.n1, synth.n2, synth.q)
    container.write_image_sequence(os.path.join(args.out, "truth.lrcs"), cube)
    container.write_kspace(os.path.join(args.out, "kspace.lrcs"), kspace,
                           synth.n1, synth.n2, mc)
    container.write_masks(os.path.join(args.out, "masks.lrcs"), masks)
    container.write_coil_maps(os.path.join(args.out, "coils.lrcs"), maps)
    with open(os.path.join(args.out, "spec.json"), "w") as fh:
        json.dump(spec, fh, indent=2, sort_keys=True)
    print(f"wrote truth/kspace/masks/coils containers to {args.out} "
          f"(incoherence {data.mu:.3f})")
    return 0


def _cmd_gen_mask(args):
    masks = _build_masks(args.scheme, args.n1, args.n2, args.frames, args.seed,
                         lines=args.lines, reduction=args.reduction, m=args.m)
    container.write_masks(args.out, masks)
    counts = [m.m_k for m in masks]
    print(f"wrote {len(masks)} masks to {args.out} "
          f"(cells per frame min {min(counts)} max {max(counts)})")
    return 0


def _load_ops(in_dir):
    kspace_path = os.path.join(in_dir, "kspace.lrcs")
    y, n1, n2, mc = container.read_kspace(kspace_path)
    masks = container.read_masks(os.path.join(in_dir, "masks.lrcs"))
    maps = container.read_coil_maps(os.path.join(in_dir, "coils.lrcs"))
    if maps.shape[0] != mc:
        raise DataError(f"coil count mismatch: kspace says {mc}, maps say {maps.shape[0]}")
    plan = sampling.SamplingPlan(masks=masks, coil_maps=maps)
    ops = fourier_frame_ops(plan)
    if len(ops) != len(y):
        raise DataError(f"frame count mismatch: {len(y)} kspace vs {len(ops)} masks")
    for k, op in enumerate(ops):
        if y[k].size != op.m_total:
            raise DataError(f"frame {k}: kspace length {y[k].size} != {op.m_total}")
    return y, ops, n1, n2


def _cmd_recon(args):
    cfg = RunConfig.from_dict(_load_json(args.config)) if args.config else RunConfig()
    cfg.method = args.method
    if args.alpha1 is not None:
        cfg.alpha1 = args.alpha1
    if args.alpha is not None:
        cfg.alpha = args.alpha
    if args.reproducible:
        cfg.reproducible = True

    y, ops, n1, n2 = _load_ops(args.inp)
    truth = None
    truth_path = os.path.join(args.inp, "truth.lrcs")
    if os.path.exists(truth_path):
        truth = container.read_image_sequence(truth_path).reshape(n1 * n2, -1)

    if cfg.method in ("mri1", "mri2"):
        res = reconstruct(y, ops, cfg.method, lowrank_cfg=cfg.lowrank_cfg(),
                          mec_cfg=cfg.mec_cfg(), mean_cfg=cfg.mean_cfg(),
                          truth=truth, reproducible=cfg.reproducible)
        Z, report = res.sequence, res.report
    elif cfg.method in ("st1", "st2", "online"):
        if cfg.alpha1 is None:
            raise ConfigError(f"method {cfg.method} requires --alpha1")
        res = run_tracker(y, ops, cfg.method, cfg.alpha1, cfg.alpha,
                          lowrank_cfg=cfg.lowrank_cfg(), mec_cfg=cfg.mec_cfg(),
                          mean_cfg=cfg.mean_cfg(), truth=truth,
                          reproducible=cfg.reproducible)
        Z, report = res.sequence, res.report
    else:
        raise ConfigError(f"unknown method {cfg.method!r}")

    report.config = dict(report.config, run=cfg.echo())
    os.makedirs(args.out, exist_ok=True)
    container.write_image_sequence(os.path.join(args.out, "recon.lrcs"),
                                   Z.reshape(n1, n2, -1))
    with open(os.path.join(args.out, "report.json"), "w") as fh:
        fh.write(report.to_json())
    if report.stage_errors:
        err = report.stage_errors.get("full")
        print(f"recon {cfg.method}: error {err:.6f}" if err is not None
              else f"recon {cfg.method}: done")
    else:
        print(f"recon {cfg.method}: done")
    return 0


def _cmd_eval(args):
    truth = container.read_image_sequence(args.truth)
    recon = container.read_image_sequence(args.recon)
    if truth.shape != recon.shape:
        raise DataError(f"shape mismatch {truth.shape} vs {recon.shape}")
    n1, n2, q = truth.shape
    err = nsmse(truth.reshape(n1 * n2, q), recon.reshape(n1 * n2, q))
    print(f"{err:.8f}")
    return 0


def _bench_table1(fourier: bool):
    """Exact low-rank recovery with and without the mean stage."""
    n1 = n2 = 30
    n, q, r, m = n1 * n2, 50, 4, 90
    spec = datagen.SyntheticSpec(n1=n1, n2=n2, q=q, rank=r,
                                 energy_ratios=(10.0, 1.0, 0.0), seed=7)
    data = datagen.gen_three_level(spec)
    if fourier:
        masks = [sampling.uniform_fourier_mask(n1, n2, m, k, 7) for k in range(q)]
        maps = np.ones((1, n1, n2), dtype=np.complex128)
        ops = fourier_frame_ops(sampling.SamplingPlan(masks=masks, coil_maps=maps))
    else:
        ops = gaussian_frame_ops(n, m, q, seed=7)
    y = apply_seq(ops, data.Z)
    rows = []

    t0 = time.perf_counter()
    plain = solve_lowrank(y, ops)
    rows.append(("lowrank-only", nsmse(data.Z, plain.X), time.perf_counter() - t0))

    t0 = time.perf_counter()
    res = reconstruct(y, ops, "mri1")
    rows.append(("mean+lowrank", nsmse(data.Z, res.sequence), time.perf_counter() - t0))
    return rows


def _bench_phantom_radial():
    n1 = n2 = 48
    q, lines, mc = 60, 8, 4
    cube = datagen.gen_moving_disk_phantom(n1, n2, q, seed=3)
    Z = cube.reshape(n1 * n2, q)
    masks = [sampling.golden_angle_pseudo_radial(n1, n2, lines, k, 3) for k in range(q)]
    maps = sampling.synth_coil_maps(n1, n2, mc, 3)
    ops = fourier_frame_ops(sampling.SamplingPlan(masks=masks, coil_maps=maps))
    y = apply_seq(ops, Z)
    rows = []
    for method in ("mri1", "mri2"):
        t0 = time.perf_counter()
        res = reconstruct(y, ops, method)
        rows.append((method, nsmse(Z, res.sequence), time.perf_counter() - t0))
    return rows


def _cmd_bench(args):
    if args.suite == "table1-gaussian":
        rows = _bench_table1(fourier=False)
    elif args.suite == "table1-fourier":
        rows = _bench_table1(fourier=True)
    elif args.suite == "phantom-radial":
        rows = _bench_phantom_radial()
    else:
        raise ConfigError(f"unknown suite {args.suite!r}")
    print(f"suite: {args.suite}")
    print(f"{'method':<16}{'error':>12}{'seconds':>10}")
    for name, err, secs in rows:
        print(f"{name:<16}{err:>12.6f}{secs:>10.2f}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump([{"method": nm, "error": e, "seconds": s}
                       for nm, e, s in rows], fh, indent=2)
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="lrcs",
        description="Hierarchical low-rank reconstruction of dynamic image sequences")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="write synthetic truth and measurements")
    g.add_argument("--spec", required=True, help="JSON spec file")
    g.add_argument("--out", required=True, help="output directory")
    g.set_defaults(func=_cmd_gen_data)

    gm = sub.add_parser("gen-mask", help="write sampling masks only")
    gm.add_argument("--scheme", required=True,
                    choices=["radial", "cartesian", "uniform"])
    gm.add_argument("--n1", type=int, required=True)
    gm.add_argument("--n2", type=int, required=True)
    gm.add_argument("--frames", type=int, required=True)
    gm.add_argument("--lines", type=int)
    gm.add_argument("--reduction", type=float)
    gm.add_argument("--m", type=int)
    gm.add_argument("--seed", type=int, default=0)
    gm.add_argument("--out", required=True)
    gm.set_defaults(func=_cmd_gen_mask)

    r = sub.add_parser("recon", help="reconstruct from containers")
    r.add_argument("--in", dest="inp", required=True, help="input directory")
    r.add_argument("--method", required=True,
                   choices=["mri1", "mri2", "st1", "st2", "online"])
    r.add_argument("--alpha1", type=int)
    r.add_argument("--alpha", type=int)
    r.add_argument("--config", help="JSON overrides for solver constants")
    r.add_argument("--reproducible", action="store_true",
                   help="zero wall-clock fields in the report")
    r.add_argument("--out", required=True, help="output directory")
    r.set_defaults(func=_cmd_recon)

    b = sub.add_parser("bench", help="run a benchmark suite")
    b.add_argument("--suite", required=True,
                   choices=["table1-gaussian", "table1-fourier", "phantom-radial"])
    b.add_argument("--out", help="optional JSON results file")
    b.set_defaults(func=_cmd_bench)

    e = sub.add_parser("eval", help="print the error between truth and recon")
    e.add_argument("--truth", required=True)
    e.add_argument("--recon", required=True)
    e.set_defaults(func=_cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
