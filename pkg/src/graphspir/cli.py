"""Command-line driver.

    graphspir run     --graph path --n 3 --scheme general --target 1 --q 3 --seed 7
    graphspir verify  --graph m --scheme general --q 2
    graphspir rates   --family path --n 3 --setting fr
    graphspir table1

Exit codes: 0 success or all checks pass, 1 a verification check failed,
2 usage errors and refused (over-budget) computations.
"""

from __future__ import annotations

import argparse
import random
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import analysis
from .converters import fr_from_pir, fr_multigraph_from_pir, fr_star, gr_from_pir, gr_multigraph_from_pir
from .faults import FAULTS, inject
from .field import PrimeField
from .general_scheme import GeneralScheme
from .graphs import GraphSpec, MultiGraphSpec, build_family, load_edge_list, m_graph, star_center
from .pir_base import base_scheme_for, lift_pir_multigraph, load_pir, pir_s4
from .protocol import (
    MessageDatabase,
    RandomnessPool,
    Refusal,
    Scheme,
    execute,
    format_form,
    label_text,
    message_letters,
    rate_of,
    randomness_ratios,
)
from .verifier import DEFAULT_BUDGET, verify_all

SCHEMES = ("general", "pir", "gr-from-pir", "fr-from-pir", "fr-star", "gr-multigraph", "fr-multigraph")
FAMILIES = ("path", "cycle", "star", "complete", "m", "custom")


class UsageError(ValueError):
    pass


def build_graph(args: argparse.Namespace) -> GraphSpec:
    if args.graph == "custom":
        if not args.edges:
            raise UsageError("--graph custom needs --edges FILE")
        return load_edge_list(args.edges)
    if args.graph == "m":
        return m_graph()
    if args.n is None:
        raise UsageError(f"--graph {args.graph} needs --n")
    return build_family(args.graph, args.n)


def _base_pir(graph: GraphSpec, args: argparse.Namespace, for_gr: bool):
    if args.pir:
        t = load_pir(Path(args.pir).read_text())
        if t.graph.edges != graph.edges:
            raise UsageError(f"PIR scheme {t.name} is defined on a different graph")
        return t
    if for_gr and graph.edges == build_family("star", 4).edges:
        return pir_s4()
    try:
        return base_scheme_for(graph)
    except ValueError as exc:
        raise UsageError(f"{exc}; pass --pir FILE to supply one") from None


def build_scheme(args: argparse.Namespace) -> Scheme:
    graph = build_graph(args)
    r = args.r
    if r < 1:
        raise UsageError("--r must be at least 1")
    name = args.scheme or ("fr-from-pir" if args.setting == "fr" else "general")
    if name == "general":
        if args.setting == "fr":
            raise UsageError("the general scheme uses per-edge randomness; drop --setting fr")
        s: Scheme = GeneralScheme(graph if r == 1 else MultiGraphSpec(graph, r), endpoint=args.endpoint)
    elif name == "pir":
        t = _base_pir(graph, args, for_gr=True)
        s = (t if r == 1 else lift_pir_multigraph(t, r)).as_scheme()
    elif name == "gr-from-pir":
        if r != 1:
            raise UsageError("gr-from-pir works on simple graphs; use --scheme gr-multigraph for --r > 1")
        s = gr_from_pir(_base_pir(graph, args, for_gr=True))
    elif name == "fr-from-pir":
        if r != 1:
            raise UsageError("fr-from-pir works on simple graphs; use --scheme fr-multigraph for --r > 1")
        s = fr_from_pir(_base_pir(graph, args, for_gr=False), graph)
    elif name == "fr-star":
        if star_center(graph) is None:
            raise UsageError(f"fr-star needs a star graph (or the 3-server path), not {graph.name}")
        if r != 1:
            raise UsageError("fr-star has no multigraph version")
        t = args.t if args.t is not None else analysis.star_fr_rate(graph.N)[0]
        s = fr_star(graph.N, t, graph)
    elif name == "gr-multigraph":
        s = gr_multigraph_from_pir(_base_pir(graph, args, for_gr=True), r)
    elif name == "fr-multigraph":
        s = fr_multigraph_from_pir(_base_pir(graph, args, for_gr=False), graph, r)
    else:
        raise UsageError(f"unknown scheme {name!r}")
    if getattr(args, "inject_fault", None):
        try:
            s = inject(s, args.inject_fault)
        except TypeError as exc:
            raise UsageError(str(exc)) from None
    return s


def parse_target(text: Optional[str], scheme: Scheme):
    if text is None:
        return scheme.targets[0]
    try:
        parts = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise UsageError(f"--target must be an index like 1 or 1,2, got {text!r}") from None
    target = parts[0] if len(parts) == 1 else parts
    if target not in scheme.targets:
        shown = " ".join(label_text(t).replace(" ", "") for t in scheme.targets)
        raise UsageError(f"target {text} is not a message of {scheme.descriptor.graph.name}; choose from {shown}")
    return target


# ---------------------------------------------------------------------------
# subcommands


def cmd_run(args: argparse.Namespace) -> int:
    scheme = build_scheme(args)
    field = PrimeField(args.q)
    target = parse_target(args.target, scheme)
    desc = scheme.descriptor
    rng = np.random.default_rng(args.seed)
    db = MessageDatabase.random(desc, field, rng)
    pool = RandomnessPool.random(desc, field, rng)
    coins = scheme.sample_coins(random.Random(args.seed), field)
    tr = execute(scheme, db, pool, coins, target, field)
    letters = message_letters(desc.graph)
    rho, rho_total = randomness_ratios(scheme)
    head = f"# scheme={scheme.name} graph={desc.graph.name} q={field.q} seed={args.seed} target={label_text(target)}"
    print(head + f" L={desc.L} downloads={desc.total_downloads} rate={rate_of(scheme)}"
          + (f" rho={rho}" if rho is not None else "") + f" rho_total={rho_total}")
    psi = desc.info("psi")
    if psi is not None:
        print("# psi: " + " ".join(f"{m}->{v}" for m, v in psi.table().items()))
    for n in desc.graph.servers:
        forms = scheme.answer_forms(n, tr.queries[n])
        cells = [f"{format_form(f, letters)} = {v}" for f, v in zip(forms, tr.answers[n])]
        print(f"{n}: " + ", ".join(cells))
    print(f"W_{label_text(target)} = {','.join(str(x) for x in tr.decoded)}" + ("" if tr.ok else "  (decoding failed)"))
    return 0 if tr.ok else 1


def cmd_verify(args: argparse.Namespace) -> int:
    scheme = build_scheme(args)
    report = verify_all(scheme, args.q, budget=args.budget, engine=args.engine, jobs=args.jobs)
    sys.stdout.write(report.text())
    return 0 if report.passed else 1


def _n_values(text: str) -> list[int]:
    if "-" in text:
        lo, hi = text.split("-", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(text)]


def cmd_rates(args: argparse.Namespace) -> int:
    settings = ("gr", "fr") if args.setting == "both" else (args.setting,)
    try:
        ns = _n_values(args.n)
    except ValueError:
        raise UsageError(f"--n must be an integer or a range like 3-12, got {args.n!r}") from None
    rows = [analysis.multigraph_rates(args.family, n, args.r, s) for n in ns for s in settings]
    sys.stdout.write(analysis.render(analysis.summary_rows(rows), args.format))
    return 0


def cmd_table1(args: argparse.Namespace) -> int:
    sys.stdout.write(analysis.render(analysis.table1(args.n), args.format))
    if args.format == "text":
        print("* capacity")
    return 0


# ---------------------------------------------------------------------------


def _scheme_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", choices=FAMILIES, default="path", help="storage graph family (m: the 4-server M graph)")
    p.add_argument("--edges", help="edge-list file for --graph custom (first line N, then 'i j' per edge)")
    p.add_argument("--n", type=int, help="number of servers")
    p.add_argument("--r", type=int, default=1, help="edge multiplicity of the multigraph")
    p.add_argument("--q", "--field-order", dest="q", type=int, default=3, help="prime field order")
    p.add_argument("--setting", choices=("gr", "fr"), default="gr", help="per-edge (gr) or shared (fr) randomness")
    p.add_argument("--scheme", choices=SCHEMES, help="construction to run (default: general, or fr-from-pir with --setting fr)")
    p.add_argument("--pir", help="base PIR scheme file for the converters")
    p.add_argument("--t", type=int, help="sum size for fr-star (default: the best t)")
    p.add_argument("--endpoint", choices=("high", "low"), default="high", help="replica that receives e_m in the general scheme")
    p.add_argument("--inject-fault", choices=FAULTS, help="deliberately break the scheme")


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="graphspir", description="Symmetric PIR on graph-replicated storage.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("run", help="execute one seeded retrieval and print the answer table")
    _scheme_flags(p)
    p.add_argument("--target", help="desired message, e.g. 1, or 1,2 on a multigraph")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="check reliability, user privacy and database privacy exactly")
    _scheme_flags(p)
    p.add_argument("--engine", choices=("auto", "exhaustive", "linear"), default="auto")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="joint states allowed for exhaustive checks")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for the linear engine")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("rates", help="rates, bounds and randomness ratios")
    p.add_argument("--family", choices=("path", "cycle", "star", "complete"), default="path")
    p.add_argument("--n", default="3", help="servers, or a range such as 3-12")
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--setting", choices=("gr", "fr", "both"), default="both")
    p.add_argument("--format", choices=("text", "tsv"), default="text")
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("table1", help="PIR and SPIR rates for the standard graph families")
    p.add_argument("--n", type=int, help="also evaluate at this many servers")
    p.add_argument("--format", choices=("text", "tsv"), default="text")
    p.set_defaults(func=cmd_table1)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = make_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except Refusal as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 2
    except (UsageError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
