"""Command-line surface: band structure, gaps, counting experiments, verification.

Subcommands: bands | gaps | regularity | gamma | edge-conditions | count |
asymptotics | pdo | weaklp | verify.  Exit codes: 0 success, 1 verification
failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import acceptance
from .floquet import (
    band_structure,
    bands_to_csv,
    check_gap_edge_regularity,
    find_gaps,
    format_real,
    gap_edge,
)
from .gamma import edge_integral, gamma_coefficient, weak_edge_membership
from .pdo_lab import commutator_decay, cwikel_ratio, dp_vs_formula, homogeneous_symbol, parse_torus_function
from .periodic_graph import (
    GraphError,
    GraphSpec,
    assemble_truncated,
    build_graph,
    dimer_chain,
    parse_theta,
    sample_potential,
    square_lattice,
)
from .spectral_counts import CountingError, asymptotic_table, bs_matrix, counting_bs, counting_direct
from .weak_lp import WeightedSequence, membership_verdicts, weak_quasinorm


class UsageError(ValueError):
    """Bad flags or configuration; maps to exit code 2."""


def _load_graph(token: str):
    """A path to a JSON graph document, or a builtin: square:<d>[:Q] | dimer."""
    if token == "dimer":
        return dimer_chain()
    if token.startswith("square:"):
        parts = token.split(":")
        try:
            d = int(parts[1])
            q = float(parts[2]) if len(parts) > 2 else 0.0
        except (IndexError, ValueError) as exc:
            raise UsageError(f"bad builtin graph token {token!r}") from exc
        return square_lattice(d, q)
    path = Path(token)
    if not path.exists():
        raise UsageError(f"graph file not found: {token}")
    return build_graph(GraphSpec.from_json(path))


def _parse_sign(s: str) -> str:
    if s in ("plus", "+"):
        return "+"
    if s in ("minus", "-"):
        return "-"
    raise UsageError(f"sign must be plus or minus, got {s!r}")


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _gap_json(g) -> dict:
    return {
        "lower": None if not math.isfinite(g.lower) else g.lower,
        "upper": None if not math.isfinite(g.upper) else g.upper,
        "kind": g.kind,
        "band_index": g.band_index,
        "grid_step": g.grid_step,
    }


# ---------------------------------------------------------------------------
# subcommand handlers


def _cmd_bands(args) -> int:
    graph = _load_graph(args.graph)
    bands = band_structure(graph, args.grid)
    _emit(bands_to_csv(bands), args.out)
    return 0


def _cmd_gaps(args) -> int:
    graph = _load_graph(args.graph)
    gaps = find_gaps(band_structure(graph, args.grid))
    _emit(json.dumps([_gap_json(g) for g in gaps], indent=2) + "\n", args.out)
    return 0


def _cmd_regularity(args) -> int:
    graph = _load_graph(args.graph)
    gaps = find_gaps(band_structure(graph, args.grid))
    if not 0 <= args.gap_index < len(gaps):
        raise UsageError(f"gap index {args.gap_index} out of range (found {len(gaps)} gaps)")
    rep = check_gap_edge_regularity(graph, gaps[args.gap_index], args.which)
    doc = {
        "edge": {"value": rep.edge.value, "sign": rep.edge.sign, "band_index": rep.edge.band_index},
        "verdict": rep.verdict,
        "extremizers": [list(map(float, x)) for x in rep.extremizers],
        "hessians": [[list(map(float, row)) for row in h] for h in rep.hessians],
    }
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return 0


def _cmd_gamma(args) -> int:
    graph = _load_graph(args.graph)
    bands = band_structure(graph, args.grid)
    theta = parse_theta(args.theta)
    res = gamma_coefficient(bands, args.lam, args.p, _parse_sign(args.sign), theta)
    line = ",".join(
        [
            format_real(res.lam),
            format_real(res.p),
            res.sign,
            format_real(res.value),
            format_real(float(res.torus_integrals.sum())),
            format_real(res.sphere_integral),
            str(res.grids[-1]),
        ]
    )
    _emit("lambda,p,sign,gamma,torus_sum,sphere,grid\n" + line + "\n", args.out)
    return 0


def _cmd_edge_conditions(args) -> int:
    graph = _load_graph(args.graph)
    bands = band_structure(graph, args.grid)
    gaps = find_gaps(bands)
    if not 0 <= args.gap_index < len(gaps):
        raise UsageError(f"gap index {args.gap_index} out of range (found {len(gaps)} gaps)")
    edge = gap_edge(gaps[args.gap_index], args.which, graph.nu)
    rep = edge_integral(bands, edge, args.kappa)
    doc = {
        "edge": {"value": edge.value, "sign": edge.sign},
        "kappa": args.kappa,
        "grids": list(rep.grids),
        "estimates": [float(x) for x in rep.estimates],
        "verdict": rep.verdict,
    }
    if args.p is not None:
        weak = weak_edge_membership(bands, edge, args.p)
        doc["weak"] = {"p": args.p, "sup": weak.weak_sup, "member": weak.weak_member}
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return 0


def _cmd_count(args) -> int:
    graph = _load_graph(args.graph)
    theta = parse_theta(args.theta)
    sign = _parse_sign(args.sign)
    H = assemble_truncated(graph, args.L)
    V = sample_potential(graph, theta, args.p, args.L)
    X = bs_matrix(H, V, args.lam)
    cb = counting_bs(X, args.tau, sign)
    cd = counting_direct(H, V, args.lam, args.tau, sign)
    flags = ["boundary"] if cb.boundary else []
    header = "lambda,tau,L,N_bs,N_direct,flags\n"
    line = ",".join(
        [format_real(args.lam), format_real(args.tau), str(args.L), str(cb.value), str(cd.value), ";".join(flags)]
    )
    _emit(header + line + "\n", args.out)
    return 0


def _cmd_asymptotics(args) -> int:
    graph = _load_graph(args.graph)
    theta = parse_theta(args.theta)
    table = asymptotic_table(
        graph,
        theta,
        p=args.p,
        lam=args.lam,
        sign=_parse_sign(args.sign),
        tau_list=args.tau,
        L_list=args.L,
        grid=args.grid,
        support_c=args.support_c,
    )
    _emit(table.to_csv(), args.out)
    return 0


def _cmd_pdo(args) -> int:
    f = parse_torus_function(args.f)
    if args.mode == "dp":
        g = parse_torus_function(args.g)
        est, formula = dp_vs_formula(f, args.v, g, args.p, args.L, args.M or 8 * args.L)
        header = "L,M,dp_sup,dp_inf,formula\n"
        line = ",".join(
            [str(args.L), str(args.M or 8 * args.L), format_real(est.sup_est), format_real(est.inf_est), format_real(formula)]
        )
        _emit(header + line + "\n", args.out)
        return 0
    if args.mode == "cwikel":
        W = homogeneous_symbol(args.v, args.p, args.dim, args.L)
        q = args.q if args.q is not None else (args.p if args.p > 2 else 2.0)
        ratio = cwikel_ratio(f, W, args.p, q, args.L, args.M or 8 * args.L)
        _emit(f"p,q,L,ratio\n{format_real(args.p)},{format_real(q)},{args.L},{format_real(ratio)}\n", args.out)
        return 0
    if args.mode == "commutator":
        W = homogeneous_symbol(args.v, args.p, args.dim, args.L)
        coeffs = {int(t): complex(c) for t, c in json.loads(args.coeffs).items()}
        rep = commutator_decay(coeffs, W, args.p, args.L)
        lines = ["m,s_m,m^{1/p}s_m"]
        for i, (s, pr) in enumerate(zip(rep.svalues.values, rep.products), start=1):
            lines.append(f"{i},{format_real(s)},{format_real(pr)}")
        _emit("\n".join(lines) + "\n", args.out)
        return 0
    raise UsageError(f"unknown pdo mode {args.mode!r}")


def _cmd_weaklp(args) -> int:
    try:
        values = np.loadtxt(args.values).ravel()
    except OSError as exc:
        raise UsageError(f"cannot read values file: {exc}") from exc
    seq = WeightedSequence(values)
    q = weak_quasinorm(seq, args.p)
    doc = {"count": len(seq), "p": args.p, "weak_quasinorm": q}
    if len(seq) >= 16:
        v = membership_verdicts(seq, args.p)
        doc["weak_member"] = v.weak
        doc["small_o"] = v.small_o
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return 0


def _cmd_verify(args) -> int:
    only = args.only
    results = acceptance.run_all(only)
    text = acceptance.format_results(results) + "\n"
    _emit(text, args.out)
    if args.out:
        sys.stdout.write(text)
    return 0 if all(r.passed for r in results) else 1


# ---------------------------------------------------------------------------
# parser


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="gapcount", description=__doc__)
    sub = top.add_subparsers(dest="command", required=True)

    def add_common(p, graph=True):
        if graph:
            p.add_argument("--graph", required=True, help="graph JSON path or builtin (square:<d>[:Q], dimer)")
        p.add_argument("--out", default=None, help="output file (default: stdout)")

    p = sub.add_parser("bands", help="sample band functions on a torus grid")
    add_common(p)
    p.add_argument("--grid", type=int, default=64)
    p.set_defaults(fn=_cmd_bands)

    p = sub.add_parser("gaps", help="detect spectral gaps")
    add_common(p)
    p.add_argument("--grid", type=int, default=64)
    p.set_defaults(fn=_cmd_gaps)

    p = sub.add_parser("regularity", help="check gap-edge regularity")
    add_common(p)
    p.add_argument("--grid", type=int, default=64)
    p.add_argument("--gap-index", type=int, default=0)
    p.add_argument("--which", choices=("lower", "upper"), default="upper")
    p.set_defaults(fn=_cmd_regularity)

    p = sub.add_parser("gamma", help="asymptotic coefficient at a point in a gap")
    add_common(p)
    p.add_argument("--grid", type=int, default=64)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--sign", required=True, help="plus | minus")
    p.add_argument("--theta", default="const:1")
    p.set_defaults(fn=_cmd_gamma)

    p = sub.add_parser("edge-conditions", help="integrability ladder at a gap edge")
    add_common(p)
    p.add_argument("--grid", type=int, default=32)
    p.add_argument("--gap-index", type=int, default=0)
    p.add_argument("--which", choices=("lower", "upper"), default="upper")
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--p", type=float, default=None, help="also run the weak membership check")
    p.set_defaults(fn=_cmd_edge_conditions)

    p = sub.add_parser("count", help="counting function at one (lambda, tau)")
    add_common(p)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--theta", default="const:1")
    p.add_argument("--sign", required=True)
    p.set_defaults(fn=_cmd_count)

    p = sub.add_parser("asymptotics", help="counting table against tau^p * Gamma")
    add_common(p)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--sign", required=True)
    p.add_argument("--theta", default="const:1")
    p.add_argument("--tau", type=float, nargs="+", required=True)
    p.add_argument("--L", type=int, nargs="+", required=True)
    p.add_argument("--grid", type=int, default=64)
    p.add_argument("--support-c", type=float, default=10.0)
    p.set_defaults(fn=_cmd_asymptotics)

    p = sub.add_parser("pdo", help="finite-section pseudodifferential experiments")
    add_common(p, graph=False)
    p.add_argument("--mode", choices=("dp", "cwikel", "commutator"), required=True)
    p.add_argument("--f", default="one", help="torus function preset (one | halftorus | exp:<lags>)")
    p.add_argument("--g", default="one")
    p.add_argument("--v", type=float, default=1.0, help="constant angular factor of the lattice symbol")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--q", type=float, default=None)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--M", type=int, default=None)
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--coeffs", default='{"1": 1.0}', help='JSON lag->coefficient map for the commutator symbol')
    p.set_defaults(fn=_cmd_pdo)

    p = sub.add_parser("weaklp", help="weak-lp functionals of a sampled sequence")
    add_common(p, graph=False)
    p.add_argument("--values", required=True, help="whitespace-separated values file")
    p.add_argument("--p", type=float, required=True)
    p.set_defaults(fn=_cmd_weaklp)

    p = sub.add_parser("verify", help="run the full verification suite")
    add_common(p, graph=False)
    p.add_argument("--only", type=int, nargs="+", default=None, help="criterion numbers to run")
    p.set_defaults(fn=_cmd_verify)

    return top


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except (UsageError, GraphError, CountingError, ValueError, OSError) as exc:
        print(f"gapcount: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
