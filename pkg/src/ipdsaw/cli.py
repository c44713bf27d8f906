"""Command-line interface.

Subcommands::

    constants    --beta B                  thermodynamic constants report (JSON)
    zpartition   --beta B --L L1,L2,...    excess partition curve (CSV)
    extension    --beta B --L L1,L2,...    exact extension laws (CSV)
    sample       MODE --L L ...            path dumps (JSON lines); MODE is one
                                           of perfect|exact|lifetime|tilted|mixture
    excursions   --replicas R              critical excursion records (CSV)
    shape        --beta B [--q Q]          Wulff profile table (CSV)
    experiment   NAME [--seed S] ...       registry experiment, JSON report
    selftest     [--quick]                 acceptance suite

Exit codes: 0 success, 1 usage, 2 numerical/solver failure, 3 budget
exhausted.  Identical config and seed give byte-identical outputs;
timestamps live only in the sidecar ``*.meta.json``.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import engine, experiments, io as iomod, samplers, thermo
from .airy import crit_constants
from .engine import (
    excess_log_partition,
    extension_law,
    mixture_sampler,
    walk_area_table,
)
from .samplers import RngStream

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_BUDGET = 3


def _parse_sizes(text):
    return [int(t) for t in str(text).split(",") if t]


def build_parser():
    ap = argparse.ArgumentParser(prog="ipdsaw", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command")

    def common(p, beta=True):
        if beta:
            p.add_argument("--beta", type=float, default=None)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=max(1, os.cpu_count() or 1))
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--cache", default=None,
                       help="table cache directory (or env IPDSAW_CACHE)")
        p.add_argument("--budget", type=int, default=10_000_000)

    p = sub.add_parser("constants")
    common(p)
    p.add_argument("--q", type=float, default=None)

    p = sub.add_parser("zpartition")
    common(p)
    p.add_argument("--L", default="64,128,256,512")

    p = sub.add_parser("extension")
    common(p)
    p.add_argument("--L", default="128")

    p = sub.add_parser("sample")
    p.add_argument("mode", choices=["perfect", "exact", "lifetime", "tilted", "mixture"])
    common(p)
    p.add_argument("--L", type=int, default=64)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--q", type=float, default=None)
    p.add_argument("--replicas", type=int, default=100)

    p = sub.add_parser("excursions")
    common(p)
    p.add_argument("--replicas", type=int, default=10_000)

    p = sub.add_parser("shape")
    common(p)
    p.add_argument("--q", type=float, default=None)
    p.add_argument("--points", type=int, default=101)

    p = sub.add_parser("experiment")
    p.add_argument("name", choices=sorted(experiments.EXPERIMENTS))
    common(p)
    p.add_argument("--L", default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--q", type=float, default=None)
    p.add_argument("--replicas", type=int, default=None)

    p = sub.add_parser("selftest")
    common(p, beta=False)
    p.add_argument("--quick", action="store_true")
    return ap


def _outdir(args) -> Path:
    d = Path(args.out)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _cache_dir(args) -> Path | None:
    c = args.cache or os.environ.get("IPDSAW_CACHE")
    if not c:
        return None
    d = Path(c)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _sampling_table(beta: float, size: int, cache: Path | None):
    if cache is not None:
        key = f"table_b{iomod.fmt(beta)}_N{size}_G{size}_free_v1.ipdw"
        fp = cache / key
        if fp.exists():
            header, cube = iomod.load_table(fp)
            return iomod.table_from_cube(header, cube)
        t = walk_area_table(beta, size, keep_slices=True)
        iomod.save_table(fp, t)
        return t
    return walk_area_table(beta, size, keep_slices=True)


def _write_meta(outdir: Path, name: str, args_dict: dict):
    meta = {"written_at_unix": time.time(), "config": args_dict}
    with open(outdir / f"{name}.meta.json", "w") as f:
        json.dump(meta, f, indent=2, sort_keys=True, default=str)
        f.write("\n")


def cmd_constants(args):
    beta = args.beta if args.beta is not None else 1.0
    p = thermo.model_params(beta)
    bc = thermo.beta_critical()
    out = {
        "beta": beta,
        "x": p.x,
        "c_beta": p.c_beta,
        "gamma_beta": p.gamma_beta,
        "beta_c": bc,
    }
    if beta < bc:
        rc = engine.extended_constants(beta)
        out["f_tilde"] = rc.f_tilde
        out["e_beta"] = rc.e_beta
        out["sigma_beta"] = rc.sigma_beta
        out["c_renewal"] = rc.c_renewal
    if beta > bc:
        out["a_beta"] = thermo.a_beta(beta)
    qs = [args.q] if args.q else [0.25, 0.5, 1.0, 2.0]
    out["rho"] = [{"q": q, "rho": thermo.collapse_rate(beta, q, "rho")} for q in qs]
    qw = args.q if args.q else (
        1.0 / thermo.a_beta(beta) ** 2 if beta > bc else 0.5
    )
    ts = np.linspace(0, 1, 21)
    out["wulff"] = [{"t": float(t), "gamma": float(thermo.wulff(beta, qw, t))}
                    for t in ts]
    cc = crit_constants(beta)
    out["crit_constants"] = {
        "var_v1": cc.var_v1,
        "c_big": cc.c_big,
        "airy_integral": cc.airy_integral,
        "c_tail": cc.c_tail,
        "z_prefactor": cc.z_prefactor,
    }
    d = _outdir(args)
    iomod.write_report_json(d / "constants.json", out)
    _write_meta(d, "constants", vars(args))
    print(json.dumps(out, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_zpartition(args):
    beta = args.beta if args.beta is not None else thermo.beta_critical()
    sizes = _parse_sizes(args.L)
    tab = walk_area_table(beta, max(sizes))
    logz = [excess_log_partition(beta, L, tab) for L in sizes]
    d = _outdir(args)
    iomod.write_curve_csv(d / "zpartition.csv", sizes, logz)
    _write_meta(d, "zpartition", vars(args))
    for L, z in zip(sizes, logz):
        print(f"L={L} log_ztilde={iomod.fmt(z)}")
    return EXIT_OK


def cmd_extension(args):
    beta = args.beta if args.beta is not None else thermo.beta_critical()
    sizes = _parse_sizes(args.L)
    tab = walk_area_table(beta, max(sizes))
    laws = [extension_law(beta, L, tab) for L in sizes]
    d = _outdir(args)
    iomod.write_extension_csv(d / "extension.csv", laws)
    _write_meta(d, "extension", vars(args))
    for law in laws:
        print(f"L={law.L} mean_N={iomod.fmt(law.mean())} argmax={law.argmax()}")
    return EXIT_OK


def cmd_sample(args):
    beta = args.beta
    d = _outdir(args)
    cache = _cache_dir(args)
    stream = RngStream(args.seed, 0)
    records = []
    if args.mode == "perfect":
        out = samplers.perfect_critical_sample(args.L, stream,
                                               max_trials=args.budget,
                                               count=args.replicas)
        samples, trials = out if args.replicas > 1 else ([out], out.trials)
        for s in samples:
            records.append((args.L, trials, s.path))
    elif args.mode == "exact":
        b = beta if beta is not None else 1.0
        t = _sampling_table(b, args.L, cache)
        g = stream.generator()
        for _ in range(args.replicas):
            records.append((args.L, 1, engine.exact_sampler(b, args.L, g, t)))
    elif args.mode == "lifetime":
        b = beta if beta is not None else 2.0
        g = stream.generator()
        for _ in range(args.replicas):
            s = samplers.lifetime_sample(b, args.L, g, budget=args.budget)
            if s is None:
                print("budget exhausted", file=sys.stderr)
                return EXIT_BUDGET
            records.append((args.L, s.trials, s.path))
    elif args.mode == "mixture":
        b = beta if beta is not None else 2.0
        eps = engine.mixture_window(args.L)
        t = _sampling_table(b, args.L + eps, cache)
        g = stream.generator()
        for _ in range(args.replicas):
            Lp, path = mixture_sampler(b, args.L, g, t)
            records.append((Lp, 1, path))
    else:  # tilted
        b = beta if beta is not None else 2.0
        q = args.q if args.q is not None else 1.0 / thermo.a_beta(b) ** 2
        walks = samplers.tilted_walk_sample(b, args.n, q, stream,
                                            size=args.replicas)
        from .paths import AuxWalk, PolymerPath

        with open(d / "samples.jsonl", "w") as f:
            for row in walks:
                signs = np.where(np.arange(1, args.n + 1) % 2 == 1, 1, -1)
                stretches = (row[1:] * signs).tolist()
                f.write(json.dumps({"n": args.n, "q": q, "stretches": stretches},
                                   separators=(",", ":")) + "\n")
        _write_meta(d, "samples", vars(args))
        print(f"wrote {args.replicas} tilted walks to {d/'samples.jsonl'}")
        return EXIT_OK
    iomod.write_sample_dump(d / "samples.jsonl", records)
    _write_meta(d, "samples", vars(args))
    print(f"wrote {len(records)} samples to {d/'samples.jsonl'}")
    return EXIT_OK


def cmd_excursions(args):
    recs = samplers.critical_excursions(args.replicas, RngStream(args.seed, 0))
    d = _outdir(args)
    iomod.write_excursions_csv(d / "excursions.csv", recs)
    _write_meta(d, "excursions", vars(args))
    print(f"wrote {len(recs)} excursions to {d/'excursions.csv'}")
    return EXIT_OK


def cmd_shape(args):
    beta = args.beta if args.beta is not None else 2.0
    bc = thermo.beta_critical()
    q = args.q if args.q is not None else (
        1.0 / thermo.a_beta(beta) ** 2 if beta > bc else 0.5
    )
    ts = np.linspace(0, 1, args.points)
    gamma = thermo.wulff(beta, q, ts)
    d = _outdir(args)
    iomod.write_curve_csv(d / "wulff.csv", ts, gamma)
    _write_meta(d, "wulff", vars(args))
    print(f"wrote profile (beta={beta}, q={iomod.fmt(q)}) to {d/'wulff.csv'}")
    return EXIT_OK


def cmd_experiment(args):
    params = {}
    if args.beta is not None:
        params["beta"] = args.beta
    if args.L is not None and args.name == "crit_prefactor":
        params["sizes"] = tuple(_parse_sizes(args.L))
    if args.n is not None:
        params["n"] = args.n
    if args.replicas is not None:
        params["replicas"] = args.replicas
    params["threads"] = args.threads
    rep = experiments.run(args.name, params, seed=args.seed)
    d = _outdir(args)
    iomod.write_report_json(d / f"experiment_{args.name}.json", rep.to_json())
    for k, v in rep.measurements.items():
        if isinstance(v, dict) and set(v) >= {"L"} and len(v) == 2:
            keys = list(v)
            iomod.write_curve_csv(d / f"{args.name}_{keys[1]}.csv",
                                  v[keys[0]], v[keys[1]])
    _write_meta(d, f"experiment_{args.name}", vars(args))
    status = "PASS" if rep.passed else "FAIL"
    for c in rep.criteria:
        mark = "ok " if c.passed else "FAIL"
        print(f"[{mark}] {c.name}: measured={iomod.fmt(c.measured)}"
              + (f" reference={iomod.fmt(c.reference)}" if c.reference is not None else "")
              + f" tol={c.tolerance} ({c.mode})")
    print(f"experiment {args.name}: {status} in {rep.wall_time_s:.1f}s")
    return EXIT_OK if rep.passed else EXIT_NUMERICAL


def cmd_selftest(args):
    import subprocess

    test = ["-k", "A1 or A2 or A4 or A10"] if args.quick else []
    cmd = [sys.executable, "-m", "pytest",
           str(Path(__file__).resolve().parents[2] / "tests" / "test_acceptance.py"),
           "-v", *test]
    res = subprocess.run(cmd)
    return EXIT_OK if res.returncode == 0 else EXIT_NUMERICAL


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if not args.command:
        ap.print_help()
        return EXIT_USAGE
    try:
        return {
            "constants": cmd_constants,
            "zpartition": cmd_zpartition,
            "extension": cmd_extension,
            "sample": cmd_sample,
            "excursions": cmd_excursions,
            "shape": cmd_shape,
            "experiment": cmd_experiment,
            "selftest": cmd_selftest,
        }[args.command](args)
    except (ValueError,) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except MemoryError as e:
        print(f"budget error: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except RuntimeError as e:
        msg = str(e)
        print(f"numerical error: {msg}", file=sys.stderr)
        return EXIT_BUDGET if "budget" in msg else EXIT_NUMERICAL


def entry():
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())
