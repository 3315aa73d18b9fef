"""PIR -> SPIR converters.

All outputs are ``TableScheme`` instances: per-target answer templates over
abstract indices plus the coin groups the user permutes privately.

* ``gr_from_pir``: graph-replicated randomness, two phases. The base scheme is
  first run on the pad vectors R_l, then on the messages with every W_l[mu]
  masked by R_l[psi(mu)].
* ``fr_from_pir``: one shared pool. The user first downloads y raw pool
  symbols from each server, then runs x padded repetitions of the base scheme.
* ``fr_star``: the shared-pool scheme built on the t-sum star scheme.
* ``gr_multigraph_from_pir`` / ``fr_multigraph_from_pir``: the same ideas
  applied to the staged lift on G^(r).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Optional

from .graphs import POOL, GraphSpec, MultiGraphSpec, Replication, star_center
from .pir_base import (
    PirScheme,
    check_psi_compatible,
    check_shared_interference,
    comb,
    lift_pir_multigraph,
    pir_star_t,
    psi,
    require_srp,
    subsets_in_order,
)
from .protocol import CoinGroup, Descriptor, Form, TableScheme, Var, make_form


@dataclass(frozen=True)
class PsiMap:
    """m -> m + L/2 on the first half, m -> m - L/2 on the second (1-based)."""

    L: int

    def __post_init__(self) -> None:
        if self.L < 2 or self.L % 2:
            raise ValueError("psi needs an even length L >= 2")

    def __call__(self, m: int) -> int:
        if not 1 <= m <= self.L:
            raise ValueError(f"{m} outside 1..{self.L}")
        return psi(m - 1, self.L) + 1

    def table(self) -> dict[int, int]:
        return {m: self(m) for m in range(1, self.L + 1)}


@dataclass(frozen=True)
class PadUse:
    server: int
    parts: tuple[tuple[Hashable, int], ...]
    role: str  # desired | interference | side | reuse | sum
    pads: tuple[int, ...]


@dataclass(frozen=True)
class CrAssignment:
    """Which pool indices pad which symbol occurrences, and what is downloaded raw."""

    downloaded: dict[int, tuple[int, ...]]
    uses: tuple[PadUse, ...]
    size: int

    def validate(self) -> None:
        raw = {p for v in self.downloaded.values() for p in v}
        owner: dict[int, tuple] = {}
        for u in self.uses:
            if u.role in ("interference", "side", "sum"):
                for p in u.pads:
                    if p in raw:
                        raise AssertionError(f"pad s{p + 1} hides {u.parts} but is downloaded raw")
                    if owner.setdefault(p, u.parts) != u.parts:
                        raise AssertionError(f"pad s{p + 1} reused across {owner[p]} and {u.parts}")
        used = raw | {p for u in self.uses for p in u.pads}
        if used != set(range(self.size)):
            raise AssertionError(f"pool has {self.size} symbols but {len(used)} are used")


def _groups_for(messages, L: int, extra: tuple[CoinGroup, ...] = ()) -> list[CoinGroup]:
    return [CoinGroup(f"W{m}", L, (("W", m),)) for m in messages] + list(extra)


def _w_terms(parts, shift: int = 0):
    return [(Var("W", lab, idx + shift), 1) for lab, idx in parts]


def gr_from_pir(T: PirScheme) -> TableScheme:
    """Two-phase conversion with per-edge pads; rate halves, rho = 1."""
    if not isinstance(T.graph, GraphSpec):
        raise ValueError("gr_from_pir expects a scheme on a simple graph; use gr_multigraph_from_pir")
    require_srp(T)
    check_psi_compatible(T)
    lp = T.L
    templates = {}
    for k in T.targets:
        per = {}
        for n in T.graph.servers:
            answers = T.answers[k].get(n, ())
            phase1 = [make_form((Var("R", vs.edge, vs.mu), 1) for vs in a.symbols) for a in answers]
            phase2 = [
                make_form(
                    [t for vs in a.symbols for t in _w_terms(vs.parts)]
                    + [(Var("R", vs.edge, psi(vs.mu, lp)), 1) for vs in a.symbols]
                )
                for a in answers
            ]
            per[n] = tuple(phase1 + phase2)
        templates[k] = per
    desc = Descriptor(
        name=f"gr({T.name})",
        graph=T.graph,
        mode=Replication.GRAPH,
        L=lp,
        randomness=tuple((l, lp) for l in T.graph.messages),
        downloads=tuple(2 * d for d in T.downloads),
        extra=(("psi", PsiMap(lp)), ("base", T.name), ("base_rate", T.rate)),
    )
    # one permutation per edge, shared by W_l and R_l
    groups = [CoinGroup(f"W{l}|R{l}", lp, (("W", l), ("R", l))) for l in T.graph.messages]
    return TableScheme(desc, templates, groups)


def gr_multigraph_from_pir(T: PirScheme, r: int) -> TableScheme:
    """Graph-replicated SPIR on G^(r); the rate stays R_PIR / 2 for every r.

    One stand-alone run of T on R retrieves the first L' symbols of R_k. Every
    run of T in the lift (one per non-empty A of [r]) is masked by a run of T
    on R inside some L'-block of the pads. Blocks are assigned as follows:
    A = {tau} uses block 0 through psi. Each A without tau gets its own fresh
    block in (size, lexicographic) order and uses it unshifted. A containing
    tau uses the block of A - {tau} through psi, which avoids any server's own
    indices and lines the pads up for cancellation.
    """
    lifted = lift_pir_multigraph(T, r)
    lp = T.L
    L = lifted.L
    mg = lifted.graph
    templates = {}
    for (k, tau) in lifted.targets:
        others = [a for a in subsets_in_order(r) if tau not in a]
        block_of = {a: 1 + i for i, a in enumerate(others)}

        def assoc(a: tuple[int, ...]) -> tuple[int, bool]:
            if a == (tau,):
                return 0, True
            if tau not in a:
                return block_of[a], False
            return block_of[tuple(m for m in a if m != tau)], True

        per = {}
        for n in mg.servers:
            forms: list[Form] = [
                make_form((Var("R", vs.edge, vs.mu), 1) for vs in a.symbols) for a in T.answers[k].get(n, ())
            ]
            for a in lifted.answers[(k, tau)][n]:
                b, shifted = assoc(a.subset)
                pads = [
                    (Var("R", vs.edge, b * lp + (psi(vs.mu, lp) if shifted else vs.mu)), 1) for vs in a.symbols
                ]
                forms.append(make_form([t for vs in a.symbols for t in _w_terms(vs.parts)] + pads))
            per[n] = tuple(forms)
        templates[(k, tau)] = per
    desc = Descriptor(
        name=f"gr({T.name}^({r}))",
        graph=mg,
        mode=Replication.GRAPH,
        L=L,
        randomness=tuple((l, L) for l in mg.bundles),
        downloads=tuple(d * 2**r for d in T.downloads),
        extra=(("psi", PsiMap(lp)), ("base", T.name), ("base_rate", T.rate), ("r", r)),
    )
    groups = _groups_for(mg.messages, L, tuple(CoinGroup(f"R{l}", L, (("R", l),)) for l in mg.bundles))
    return TableScheme(desc, templates, groups)


def fr_parameters(sub_len: int, n_servers: int) -> tuple[int, int, int]:
    """(lcm, x, y) with x L'/2 = (N-1) y as small as possible."""
    if sub_len % 2:
        raise ValueError("L' must be even")
    half = sub_len // 2
    ell = math.lcm(half, n_servers - 1)
    return ell, ell // half, ell // (n_servers - 1)


def _fr_build(P: PirScheme, name: str) -> TableScheme:
    base = P.base or P
    require_srp(base)
    check_shared_interference(base)
    g = P.graph
    N = g.N
    ell, x, y = fr_parameters(base.L, N)
    per_rep = P.L
    L = x * per_rep
    multi = isinstance(g, MultiGraphSpec)
    order = subsets_in_order(P.r)
    templates = {}
    crs = {}
    size = None
    for theta in P.targets:
        k = g.bundle_of(theta)
        tau = theta[1] if multi else None
        i, j = g.endpoints(k)
        count = 0

        def fresh() -> int:
            nonlocal count
            count += 1
            return count - 1

        downloaded = {n: tuple(fresh() for _ in range(y)) for n in g.servers}
        shared = [p for n in g.servers if n not in (i, j) for p in downloaded[n]]
        seen = {i: 0, j: 0}
        pad_of: dict[tuple, int] = {}
        uses: list[PadUse] = []
        per: dict[int, list[Form]] = {n: [make_form([(Var("S", POOL, p), 1)]) for p in downloaded[n]] for n in g.servers}
        for u in range(x):
            for a in order:
                for n in g.servers:
                    for ans in P.answers[theta][n]:
                        if ans.subset != a:
                            continue
                        terms = []
                        for vs in ans.symbols:
                            parts = tuple((lab, idx + u * per_rep) for lab, idx in vs.parts)
                            terms += _w_terms(parts)
                            if vs.edge != k or (tau is not None and tau not in vs.subset):
                                role = "interference" if vs.edge != k else "side"
                                if parts not in pad_of:
                                    pad_of[parts] = fresh()
                                pad = pad_of[parts]
                            elif len(vs.subset) == 1:
                                role = "desired"
                                m = seen[n]
                                seen[n] += 1
                                other = j if n == i else i
                                pad = downloaded[other][m] if m < y else shared[m - y]
                            else:
                                role = "reuse"
                                pad = pad_of[tuple(p for p in parts if p[0] != theta)]
                            uses.append(PadUse(n, parts, role, (pad,)))
                            terms.append((Var("S", POOL, pad), 1))
                        per[n].append(make_form(terms))
        if seen[i] != (N - 1) * y or seen[j] != (N - 1) * y:
            raise AssertionError("desired pads do not balance x L'/2 = (N-1) y")
        cr = CrAssignment(downloaded, tuple(uses), count)
        cr.validate()
        crs[theta] = cr
        if size is not None and size != count:
            raise AssertionError("pool size depends on the target")
        size = count
        templates[theta] = {n: tuple(v) for n, v in per.items()}
    expected = N * y + Fraction(x * base.L, 2) * ((2**P.r - 1) * g.bundles.__len__() - 1)
    if size != expected:
        raise AssertionError(f"pool size {size} differs from N y + (x L'/2)((2^r - 1) K' - 1) = {expected}")
    downloads = tuple(y + x * len(P.answers[P.targets[0]][n]) for n in g.servers)
    desc = Descriptor(
        name=name,
        graph=g,
        mode=Replication.FULL,
        L=L,
        randomness=((POOL, size),),
        downloads=downloads,
        extra=(("lcm", ell), ("x", x), ("y", y), ("H(R)", size), ("cr", crs), ("base", base.name), ("r", P.r)),
    )
    groups = _groups_for(g.messages, L, (CoinGroup("S", size, (("S", POOL),)),))
    return TableScheme(desc, templates, groups)


def fr_from_pir(T: PirScheme, graph: Optional[GraphSpec] = None) -> TableScheme:
    """Shared-pool conversion: rate L'x / (D'x + N y)."""
    if not isinstance(T.graph, GraphSpec):
        raise ValueError("fr_from_pir expects a scheme on a simple graph")
    if graph is not None and graph.edges != T.graph.edges:
        raise ValueError(f"{T.name} is defined on {T.graph.name}, not {graph.name}")
    return _fr_build(T, f"fr({T.name})")


def fr_multigraph_from_pir(T: PirScheme, graph: Optional[GraphSpec], r: int) -> TableScheme:
    """Shared-pool conversion of the staged lift on G^(r)."""
    if graph is not None and graph.edges != T.graph.edges:
        raise ValueError(f"{T.name} is defined on {T.graph.name}, not {graph.name}")
    return _fr_build(lift_pir_multigraph(T, r), f"fr({T.name}^({r}))")


def fr_star(n: int, t: int, graph: Optional[GraphSpec] = None) -> TableScheme:
    """Shared-pool SPIR on a star from the t-sum scheme.

    Each leaf symbol gets its own pad. The centre returns, raw, the pads that
    hide W_k at leaf k. A centre t-sum containing W_k reuses the t-1 pads of
    its other symbols. Any other t-sum gets t-1 fresh pads, so every centre
    answer carries the same number of pads.
    """
    if not 2 <= t <= n - 1:
        raise ValueError(f"t must lie in [2, {n - 1}]")
    P = pir_star_t(n, t, graph)
    g = P.graph
    c = star_center(g)
    templates = {}
    crs = {}
    size = None
    for k in P.targets:
        count = 0

        def fresh() -> int:
            nonlocal count
            count += 1
            return count - 1

        pad_of: dict[tuple, int] = {}
        uses: list[PadUse] = []
        per: dict[int, list[Form]] = {}
        for n_ in g.servers:
            if n_ == c:
                continue
            forms = []
            for a in P.answers[k][n_]:
                (vs,) = a.symbols
                pad = pad_of.setdefault(vs.parts, fresh())
                uses.append(PadUse(n_, vs.parts, "desired" if vs.edge == k else "interference", (pad,)))
                forms.append(make_form(_w_terms(vs.parts) + [(Var("S", POOL, pad), 1)]))
            per[n_] = forms
        leaf_k = next(n_ for n_ in g.servers if n_ != c and k in g.edges_at(n_))
        raw = tuple(pad_of[a.symbols[0].parts] for a in P.answers[k][leaf_k])
        centre = [make_form([(Var("S", POOL, p), 1)]) for p in raw]
        for a in P.answers[k][c]:
            w = [t_ for vs in a.symbols for t_ in _w_terms(vs.parts)]
            if any(vs.edge == k for vs in a.symbols):
                pads = tuple(pad_of[vs.parts] for vs in a.symbols if vs.edge != k)
                role = "reuse"
            else:
                pads = tuple(fresh() for _ in range(t - 1))
                role = "sum"
            uses.append(PadUse(c, tuple(p for vs in a.symbols for p in vs.parts), role, pads))
            centre.append(make_form(w + [(Var("S", POOL, p), 1) for p in pads]))
        per[c] = centre
        cr = CrAssignment({c: raw}, tuple(uses), count)
        crs[k] = cr
        if size is not None and size != count:
            raise AssertionError("pool size depends on the target")
        size = count
        templates[k] = {n_: tuple(v) for n_, v in per.items()}
    closed = comb(n - 3, t - 2) + (t - 1) * comb(n - 1, t)
    if size != closed:
        raise AssertionError(f"constructed pool has {size} symbols, closed form gives {closed}")
    extra_dl = comb(n - 3, t - 2)
    downloads = tuple(len(templates[P.targets[0]][n_]) for n_ in g.servers)
    if sum(downloads) != P.D + extra_dl:
        raise AssertionError("download count differs from D' + C(N-3, t-2)")
    desc = Descriptor(
        name=f"fr-star({g.name},t={t})",
        graph=g,
        mode=Replication.FULL,
        L=P.L,
        randomness=((POOL, size),),
        downloads=downloads,
        extra=(("t", t), ("H(R)", size), ("cr", crs), ("base", P.name)),
    )
    groups = _groups_for(g.messages, P.L, (CoinGroup("S", size, (("S", POOL),)),))
    return TableScheme(desc, templates, groups)
