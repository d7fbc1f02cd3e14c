"""Command-line entry point.

Exit codes: 0 success, 1 assertion/experiment failure (the failing row is
printed), 2 argument/config errors.  CSV output uses '.' decimals and 17
significant digits; run metadata (seed, config hash, version, timing)
goes to '#' comment lines so reruns are byte-identical in the data cells.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import List, Optional

import numpy as np

from . import __version__
from .config import ConfigError, config_hash, read_config, schedule_from_mapping
from .controlled import (
    ControlKind,
    ControlledSpec,
    ConstraintSet3,
    DeltaSpec,
    classify,
    perturbation_sandwich,
    verify_sandwich,
)
from .correlations import (
    BoxSet2,
    aux_Ft,
    aux_G,
    correlation_bound_check,
    correlation_exact,
    double_sum,
)
from .counting import TargetPoint, count_L, count_N_widmer, count_Q, weighted_sum
from .domains import Box, FlowTime, ParamSchedule
from .experiments import (
    equidistribution_trend,
    height_moment,
    l2_siegel_controlled,
    level_set_measure,
    main_asymptotics,
    thin_strip,
)
from .heights import LatticeSpec, brute_force_minima, height
from .quadrature import adaptive_simpson
from .schmidt import dyadic_cover, make_synthetic_family, moment_pipeline
from .tessellation import band_endpoints, index_set, verify_partition
from .volumes import (
    VolumeReport,
    omega_section_area,
    omega_section_area_mc,
    omega_section_area_quad,
    omega_volume,
    omega_volume_mc,
    omega_volume_quad,
    xi_area,
    xi_area_mc,
    xi_area_quad,
)

F17 = lambda v: format(float(v), ".17g")


def _parse_pair(text: str):
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 'a,b', got {text!r}")
    return float(parts[0]), float(parts[1])


def _schedule_from_args(args) -> ParamSchedule:
    return ParamSchedule(a=args.a, b=args.b, c=args.c, T=args.T)


def _h_from_spec(spec: str):
    if spec == "one":
        return np.vectorize(lambda u: 1.0, otypes=[np.float64])
    if spec == "linear":
        return np.vectorize(lambda u: u, otypes=[np.float64])
    if spec.startswith("file:"):
        knots = np.loadtxt(spec[5:], ndmin=2)
        xs, ys = knots[:, 0], knots[:, 1]
        return np.vectorize(lambda u: float(np.interp(u, xs, ys)), otypes=[np.float64])
    raise ConfigError(f"unknown weight spec {spec!r} (use one|linear|file:<path>)")


def _emit(args, text: str) -> None:
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_count(args) -> int:
    points: List[tuple] = []
    if args.x is not None:
        points.append((None, TargetPoint(*args.x)))
    else:
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=args.seed, spawn_key=(0xC0DE,))
        )
        for _ in range(args.random):
            points.append((args.seed, TargetPoint(rng.random(), rng.random())))
    h = _h_from_spec(args.h) if args.h != "one" else None
    lines = ["seed,x1,x2,T,a,b,c,count,weighted_sum,elapsed_ns"]
    for seed, x in points:
        if args.set == "Q" and h is None:
            rep = count_Q(x, _schedule_from_args(args))
        elif args.set == "Q":
            rep = weighted_sum(x, _schedule_from_args(args), h)
        elif args.set == "L":
            rep = count_L(x, args.b, args.T)
        else:
            rep = count_N_widmer(x, args.b, args.T)
        lines.append(
            ",".join(
                [
                    "" if seed is None else str(seed),
                    F17(x.x1),
                    F17(x.x2),
                    F17(args.T),
                    F17(args.a),
                    F17(args.b),
                    F17(args.c),
                    str(rep.count),
                    F17(rep.weighted_sum),
                    str(rep.elapsed_ns),
                ]
            )
        )
    _emit(args, "\n".join(lines) + "\n")
    return 0


def cmd_vol(args) -> int:
    s = _schedule_from_args(args)
    if args.quantity == "xi":
        closed = xi_area(args.gamma)
        if args.oracle == "quad":
            rep = VolumeReport(closed, xi_area_quad(args.gamma), "Quadrature", args.nodes)
        else:
            est, err = xi_area_mc(args.gamma, args.samples, args.seed, args.threads)
            rep = VolumeReport(closed, est, "MonteCarlo", args.samples, stderr=err)
    elif args.quantity == "section":
        closed = omega_section_area(s, args.y)
        if args.oracle == "quad":
            rep = VolumeReport(closed, omega_section_area_quad(s, args.y), "Quadrature", args.nodes)
        else:
            est, err = omega_section_area_mc(s, args.y, args.samples, args.seed, args.threads)
            rep = VolumeReport(closed, est, "MonteCarlo", args.samples, stderr=err)
    else:
        closed = omega_volume(s)
        if args.oracle == "quad":
            rep = VolumeReport(closed, omega_volume_quad(s), "Quadrature", args.nodes)
        else:
            est, err = omega_volume_mc(s, args.samples, args.seed, args.threads)
            rep = VolumeReport(closed, est, "MonteCarlo", args.samples, stderr=err)
    payload = rep.to_dict()
    payload["quantity"] = args.quantity
    _emit(args, json.dumps(payload, indent=2, default=float) + "\n")
    if rep.stderr is not None and rep.stderr > 0 and rep.abs_error > 3.0 * rep.stderr:
        print(f"FAIL vol {args.quantity}: |error| {rep.abs_error} > 3 sigma", file=sys.stderr)
        return 1
    return 0


def cmd_tessellate(args) -> int:
    s = _schedule_from_args(args)
    alpha, beta = band_endpoints(s)
    report = verify_partition(s, args.samples, args.seed, args.threads, raise_on_violation=False)
    print(f"band=[{F17(alpha)},{F17(beta)}) tiles={report.tile_count}")
    print(
        f"sampled={report.n_sampled} in_strip={report.n_in_strip} "
        f"other_tile_checks={report.n_checked_other_tiles} violations={len(report.violations)}"
    )
    if report.violations:
        print(f"witness: {report.violations[0]}", file=sys.stderr)
        return 1
    return 0


def cmd_height(args) -> int:
    spec = LatticeSpec(TargetPoint(*args.x), args.r)
    t = FlowTime(*args.t)
    rep = height(spec, t)
    out = {
        "s1": rep.s1,
        "s2": rep.s2,
        "s3": rep.s3,
        "ht": rep.ht,
        "s1_witness": {"p1": rep.s1_witness[0], "p2": rep.s1_witness[1], "q": rep.s1_witness[2]},
        "s2_witness": {"m": rep.s2_witness.m, "w1": rep.s2_witness.w1, "w2": rep.s2_witness.w2},
    }
    if args.oracle:
        s1o, s2o = brute_force_minima(spec, t, args.coeff_bound)
        out["oracle"] = {"s1": s1o, "s2": s2o, "coeff_bound": args.coeff_bound}
        out["oracle_match"] = bool(s1o == rep.s1 and s2o == rep.s2)
    _emit(args, json.dumps(out, indent=2, default=float) + "\n")
    return 0


def cmd_controlled(args) -> int:
    if args.config:
        sections = read_config(args.config)
        grid = [sec for name, sec in sections.items() if name.startswith("delta")]
        if not grid:
            raise ConfigError("config has no [delta*] sections")
        specs = [
            DeltaSpec(
                a=float(sec["a"]), b=float(sec["b"]),
                u1m=float(sec["u1m"]), u1p=float(sec["u1p"]),
                u2m=float(sec["u2m"]), u2p=float(sec["u2p"]),
                gamma=float(sec["gamma"]), delta=float(sec["delta"]),
            )
            for sec in grid
        ]
        M = args.M
    else:
        specs = [
            DeltaSpec(a=0.05, b=0.2, u1m=0.3, u1p=0.5, u2m=0.3, u2p=0.5, gamma=0.1, delta=1.0)
        ]
        M = args.M
    fails = 0
    for i, d in enumerate(specs):
        eps = args.eps or 0.5 * min(1 / (2 * M), d.gamma / (2 * M), d.a / (M * M + 1))
        rep = verify_sandwich(d, eps, M, samples=args.samples, n_g=args.n_g, seed=args.seed + i)
        status = "PASS" if rep.ok else "FAIL"
        print(
            f"{status} delta[{i}] eps={F17(eps)} containment_violations="
            f"{rep.containment_violations} coverage_violations={rep.coverage_violations} "
            f"symdiff_points={rep.sym_diff_points}"
        )
        if not rep.ok:
            fails += 1
            print(f"witness: {rep.witnesses[0] if rep.witnesses else '?'}", file=sys.stderr)
    return 1 if fails else 0


def cmd_corr(args) -> int:
    t = FlowTime(*args.t)
    if args.op == "exact":
        B = BoxSet2([((-args.half, args.half), (-args.half, args.half))])
        val = correlation_exact(B, B, args.q1, args.q2)
        _emit(args, f"q1,q2,value\n{args.q1},{args.q2},{F17(val)}\n")
        return 0
    if args.op == "bound":
        D = BoxSet2([((-args.half, args.half), (-args.half, args.half))])
        lhs, rhs = correlation_bound_check(D, D, t, args.q1, args.q2, args.M)
        ok = lhs <= rhs
        _emit(args, f"q1,q2,lhs,rhs,ok\n{args.q1},{args.q2},{F17(lhs)},{F17(rhs)},{int(ok)}\n")
        return 0 if ok else 1
    res = double_sum(t, args.alpha, args.beta, args.M)
    _emit(
        args,
        "t1,t2,alpha,beta,value,bound,ratio\n"
        f"{F17(t.t1)},{F17(t.t2)},{F17(args.alpha)},{F17(args.beta)},"
        f"{F17(res.value)},{F17(res.bound)},{F17(res.ratio)}\n",
    )
    return 0


def cmd_schmidt(args) -> int:
    lines = ["check,param,value"]
    for s in range(1, args.smax + 1):
        for N in range(1, 1 << s):
            dyadic_cover(N, s).validate()
    lines.append(f"dyadic_covers_valid,smax={args.smax},1")
    fam = make_synthetic_family(beta_T=args.betaT, seed=args.seed, kind=args.family)
    rep = moment_pipeline(fam, kappa=args.kappa, eps=args.eps)
    lines.append(f"D_T,betaT={args.betaT},{F17(rep.D_T)}")
    lines.append(f"measure_C,fitted,{F17(rep.fitted_measure_C)}")
    lines.append(f"conclusion_failures,,{rep.conclusion_failures}")
    lines.append(f"p3_failures,,{rep.p3_failures}")
    _emit(args, "\n".join(lines) + "\n")
    return 0 if rep.ok else 1


_EXPERIMENT_DEFAULTS = {
    "levelset": {"t": "3,3", "r": "1", "L_grid": "4,8,16,32,64", "n": "100000"},
    "heightmoment": {
        "t": "4,4", "r": "1", "rho": "0.135335283236613", "eta": "54.598150033144236",
        "theta": "square", "kappa": "1", "n": "100000",
    },
    "l2siegel": {
        "t": "4,4", "eps": "0.001", "gamma": "0.1", "M": "2", "kind": "II", "n": "10000",
    },
    "thinstrip": {"T_grid": "1e3,1e4,1e5,1e6,1e7", "n": "10000"},
    "asymptotics": {"b": "0.05", "T_grid": "1e4,1e5,1e6,1e7", "n_points": "200"},
    "equidist": {
        "box": "-1,1,-1,1,1,2",
        "t_grid": "0,0;1,1;2,2;3,3;4,4;5,5;6,6",
        "n": "20000",
    },
}


def _floats(text: str) -> List[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def run_experiment(name: str, params: dict, seed: int, threads: int):
    if name == "levelset":
        return level_set_measure(
            FlowTime(*_floats(params["t"])), float(params["r"]),
            _floats(params["L_grid"]), int(float(params["n"])), seed, threads,
        )
    if name == "heightmoment":
        return height_moment(
            FlowTime(*_floats(params["t"])), float(params["r"]), float(params["rho"]),
            float(params["eta"]), params["theta"], int(float(params["n"])), seed,
            kappa=float(params["kappa"]), threads=threads,
        )
    if name == "l2siegel":
        eps, gamma, M = float(params["eps"]), float(params["gamma"]), float(params["M"])
        kind = ControlKind.TYPE_II if params["kind"].upper().endswith("II") else ControlKind.TYPE_I
        if kind is ControlKind.TYPE_II:
            region = ConstraintSet3(
                x1_range=(-M, M), x2_range=(-M, M), y_range=(gamma, gamma + eps)
            )
        else:
            hub = float(params.get("hub", "0.05"))
            region = ConstraintSet3(
                x1_range=(-M, M), x2_range=(-M, M), y_range=(gamma, M),
                product=(hub * (1 - eps), hub),
            )
        E = ControlledSpec(eps=eps, gamma=gamma, M=M, kind=kind, region=region)
        return l2_siegel_controlled(
            E, FlowTime(*_floats(params["t"])), int(float(params["n"])), seed, threads
        )
    if name == "thinstrip":
        return thin_strip(_floats(params["T_grid"]), int(float(params["n"])), seed, threads)
    if name == "asymptotics":
        return main_asymptotics(
            float(params["b"]), _floats(params["T_grid"]),
            int(float(params["n_points"])), seed, threads,
        )
    if name == "equidist":
        bb = _floats(params["box"])
        box = Box((bb[0], bb[1]), (bb[2], bb[3]), (bb[4], bb[5]))
        ts = [FlowTime(*_floats(chunk)) for chunk in params["t_grid"].split(";") if chunk]
        return equidistribution_trend(box, ts, int(float(params["n"])), seed, threads)
    raise ConfigError(f"unknown experiment {name!r}")


def cmd_experiment(args) -> int:
    params = dict(_EXPERIMENT_DEFAULTS.get(args.name, {}))
    if args.config:
        sections = read_config(args.config)
        overrides = sections.get(args.name, {})
        unknown = set(overrides) - set(params)
        if unknown:
            raise ConfigError(f"unknown keys for {args.name}: {sorted(unknown)}")
        params.update(overrides)
    table = run_experiment(args.name, params, args.seed, args.threads)
    if args.out and args.out.endswith(".json"):
        _emit(args, json.dumps(table.to_json(), indent=2) + "\n")
    else:
        _emit(args, table.to_csv())
    failures = []
    if args.name == "thinstrip":
        if table.meta["max_identity_sigmas"] > 3.0:
            failures.append(f"identity off by {table.meta['max_identity_sigmas']} sigma")
        if not table.meta["fraction_monotone_2sigma"]:
            failures.append("nonempty fraction not monotone within 2 sigma")
    if args.name == "asymptotics":
        coeff = table.meta["fitted_coefficient"]
        target = table.meta["target_coefficient"]
        if not (0.8 * target <= coeff <= 1.2 * target):
            failures.append(f"fitted coefficient {coeff} outside +-20% band around {target}")
    if args.name == "equidist" and not table.meta["deviation_monotone_2sigma"]:
        failures.append("deviation trend not monotone within 2 sigma")
    for f in failures:
        print(f"FAIL {args.name}: {f}", file=sys.stderr)
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mdlab", description=__doc__)
    p.add_argument("--version", action="version", version=f"mdlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp, schedule=True):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--out", type=str, default=None)
        if schedule:
            sp.add_argument("--a", type=float, default=0.01)
            sp.add_argument("--b", type=float, default=0.1)
            sp.add_argument("--c", type=float, default=0.49)
            sp.add_argument("--T", type=float, default=1e4)

    sp = sub.add_parser("count", help="exact solution counting")
    add_common(sp)
    sp.add_argument("--x", type=_parse_pair, default=None, help="target pair 'x1,x2'")
    sp.add_argument("--random", type=int, default=1, help="number of random targets")
    sp.add_argument("--set", choices=["Q", "L", "N"], default="Q")
    sp.add_argument("--h", type=str, default="one", help="one|linear|file:<path>")
    sp.set_defaults(fn=cmd_count)

    sp = sub.add_parser("vol", help="closed forms vs oracles")
    add_common(sp)
    sp.add_argument("--quantity", choices=["xi", "section", "volume"], default="volume")
    sp.add_argument("--gamma", type=float, default=0.1)
    sp.add_argument("--y", type=float, default=10.0)
    sp.add_argument("--oracle", choices=["mc", "quad"], default="quad")
    sp.add_argument("--samples", type=int, default=10 ** 6)
    sp.add_argument("--nodes", type=int, default=256)
    sp.set_defaults(fn=cmd_vol)

    sp = sub.add_parser("tessellate", help="verify the strip tile partition")
    add_common(sp)
    sp.add_argument("--samples", type=int, default=10 ** 5)
    sp.set_defaults(fn=cmd_tessellate)

    sp = sub.add_parser("height", help="lattice minima and height")
    add_common(sp, schedule=False)
    sp.add_argument("--x", type=_parse_pair, required=True)
    sp.add_argument("--r", type=float, default=1.0)
    sp.add_argument("--t", type=_parse_pair, default=(0.0, 0.0))
    sp.add_argument("--oracle", action="store_true")
    sp.add_argument("--coeff-bound", type=int, default=20)
    sp.set_defaults(fn=cmd_height)

    sp = sub.add_parser("controlled", help="perturbation sandwich verification")
    add_common(sp, schedule=False)
    sp.add_argument("--config", type=str, default=None)
    sp.add_argument("--M", type=float, default=2.0)
    sp.add_argument("--eps", type=float, default=None)
    sp.add_argument("--samples", type=int, default=10 ** 5)
    sp.add_argument("--n-g", type=int, default=10)
    sp.set_defaults(fn=cmd_controlled)

    sp = sub.add_parser("corr", help="correlation identities and kernel sums")
    add_common(sp, schedule=False)
    sp.add_argument("--op", choices=["exact", "bound", "double-sum"], default="double-sum")
    sp.add_argument("--q1", type=int, default=1)
    sp.add_argument("--q2", type=int, default=2)
    sp.add_argument("--half", type=float, default=0.25, help="rectangle half-width")
    sp.add_argument("--t", type=_parse_pair, default=(2.0, 2.0))
    sp.add_argument("--M", type=float, default=2.0)
    sp.add_argument("--alpha", type=float, default=0.5)
    sp.add_argument("--beta", type=float, default=1.5)
    sp.set_defaults(fn=cmd_corr)

    sp = sub.add_parser("schmidt", help="dyadic covers and the moment pipeline")
    add_common(sp, schedule=False)
    sp.add_argument("--smax", type=int, default=10)
    sp.add_argument("--betaT", type=int, default=64)
    sp.add_argument("--kappa", type=float, default=1.0)
    sp.add_argument("--eps", type=float, default=0.5)
    sp.add_argument("--family", choices=["pm1", "zero", "concentrated"], default="pm1")
    sp.set_defaults(fn=cmd_schmidt)

    sp = sub.add_parser("experiment", help="run a named experiment")
    add_common(sp, schedule=False)
    sp.add_argument("--name", required=True, choices=list(_EXPERIMENT_DEFAULTS))
    sp.add_argument("--config", type=str, default=None)
    sp.set_defaults(fn=cmd_experiment)
    return p


def dispatch(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        return args.fn(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except AssertionError as exc:
        print(f"assertion failure: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
