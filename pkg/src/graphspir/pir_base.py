"""PIR schemes used as inputs to the SPIR converters.

A PIR scheme is stored as an answer template: for every target and server, a
list of sums of message symbols over abstract indices 0..L-1. The user's
private per-message permutations are applied at run time (see
``PirScheme.as_scheme``).

Each summand is a ``VirtualSymbol``. In a scheme on a simple graph that is
just one symbol W_l[mu]. In the staged multigraph lift a summand is the sum
over m in A of W_{(l,m)}[...] for a subset A of [r]. The converters need to
know which base edge, subset and base position each summand came from, so
the structure is kept rather than flattened.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Iterable, Mapping, Optional, Sequence

from .graphs import AnyGraph, GraphSpec, MultiGraphSpec, Replication, build_family, star_center
from .protocol import CoinGroup, Descriptor, Form, TableScheme, Var, make_form, message_letters


@dataclass(frozen=True)
class VirtualSymbol:
    edge: int
    subset: tuple[int, ...]
    mu: int
    parts: tuple[tuple[Hashable, int], ...]


@dataclass(frozen=True)
class PirAnswer:
    subset: tuple[int, ...]
    symbols: tuple[VirtualSymbol, ...]

    def form(self) -> Form:
        return make_form((Var("W", lab, idx), 1) for vs in self.symbols for lab, idx in vs.parts)


def comb(n: int, k: int) -> int:
    """Binomial coefficient, zero outside 0 <= k <= n."""
    if n < 0 or k < 0 or k > n:
        return 0
    return math.comb(n, k)


def psi(mu: int, length: int) -> int:
    """Half-length shift on 0-based indices: the first half maps onto the second and back."""
    if length % 2:
        raise ValueError("psi needs an even length")
    h = length // 2
    if not 0 <= mu < length:
        raise ValueError(f"index {mu} outside 0..{length - 1}")
    return mu + h if mu < h else mu - h


@dataclass(frozen=True)
class PirScheme:
    name: str
    graph: AnyGraph
    sub_len: int
    L: int
    answers: Mapping[Hashable, Mapping[int, tuple[PirAnswer, ...]]]
    base: Optional["PirScheme"] = None
    r: int = 1

    def __post_init__(self) -> None:
        counts = {t: tuple(len(per.get(n, ())) for n in self.graph.servers) for t, per in self.answers.items()}
        if len(set(counts.values())) > 1:
            raise ValueError("per-server answer counts must not depend on the target")
        if set(self.answers) != set(self.graph.messages):
            raise ValueError("answer template must cover every message")

    @property
    def targets(self) -> tuple:
        return self.graph.messages

    @property
    def downloads(self) -> tuple[int, ...]:
        t = self.targets[0]
        return tuple(len(self.answers[t].get(n, ())) for n in self.graph.servers)

    @property
    def D(self) -> int:
        return sum(self.downloads)

    @property
    def rate(self) -> Fraction:
        return Fraction(self.L, self.D)

    def forms(self, target) -> dict[int, tuple[Form, ...]]:
        return {n: tuple(a.form() for a in self.answers[target].get(n, ())) for n in self.graph.servers}

    def retrieval_sets(self, target) -> dict[tuple[Hashable, int], tuple[int, ...]]:
        """P_{l,n}: the abstract indices of message l that server n touches."""
        out: dict[tuple[Hashable, int], set[int]] = {}
        for n in self.graph.servers:
            for a in self.answers[target].get(n, ()):
                for vs in a.symbols:
                    for lab, idx in vs.parts:
                        out.setdefault((lab, n), set()).add(idx)
        return {k: tuple(sorted(v)) for k, v in out.items()}

    def as_scheme(self) -> TableScheme:
        """The PIR scheme itself as an executable (pad-free) scheme."""
        desc = Descriptor(
            name=f"pir({self.name})",
            graph=self.graph,
            mode=Replication.NONE,
            L=self.L,
            randomness=(),
            downloads=self.downloads,
        )
        groups = [CoinGroup(f"W{m}", self.L, (("W", m),)) for m in self.graph.messages]
        return TableScheme(desc, {t: self.forms(t) for t in self.targets}, groups)


def _simple(edge: int, mu: int) -> VirtualSymbol:
    return VirtualSymbol(edge, (1,), mu, ((edge, mu),))


def _answer(symbols: Iterable[tuple[int, int]]) -> PirAnswer:
    return PirAnswer((1,), tuple(_simple(l, mu) for l, mu in symbols))


def parse_sum(text: str, graph: GraphSpec) -> PirAnswer:
    """``a2+b2`` -> symbols (edge 1, index 1), (edge 2, index 1); letters follow edge order."""
    inv = {v: k for k, v in message_letters(graph).items()}
    syms = []
    for tok in text.replace(" ", "").split("+"):
        m = re.fullmatch(r"([a-z]+)(\d+)", tok)
        if not m or m.group(1) not in inv:
            raise ValueError(f"bad symbol {tok!r} in {text!r}")
        syms.append((inv[m.group(1)], int(m.group(2)) - 1))
    return _answer(syms)


def from_rows(name: str, graph: GraphSpec, sub_len: int, rows: Mapping[int, Mapping[int, Sequence[str]]]) -> PirScheme:
    answers = {
        k: {n: tuple(parse_sum(c, graph) for c in cells) for n, cells in per.items()}
        for k, per in rows.items()
    }
    return PirScheme(name, graph, sub_len, sub_len, answers)


def relabel(
    per_server: Mapping[int, tuple[PirAnswer, ...]],
    server_map: Mapping[int, int],
    edge_map: Mapping[int, int],
) -> dict[int, tuple[PirAnswer, ...]]:
    """Move a one-target template along a graph automorphism."""
    out = {}
    for n, answers in per_server.items():
        out[server_map[n]] = tuple(
            _answer((edge_map[vs.edge], vs.mu) for vs in a.symbols) for a in answers
        )
    return out


def pir_p3() -> PirScheme:
    g = build_family("path", 3)
    rows = {
        1: {1: ["a1"], 2: ["a2+b2"], 3: ["b2"]},
        2: {1: ["a1"], 2: ["a1+b1"], 3: ["b2"]},
    }
    return from_rows("P3", g, 2, rows)


def pir_c3() -> PirScheme:
    g = build_family("cycle", 3)
    k1 = {
        1: ["a1", "c1", "a2+c2", "a3+c3"],
        2: ["a4", "b1", "a5+b2", "a6+b3"],
        3: ["b2", "c2", "b3+c1", "b1+c3"],
    }
    base = from_rows("C3", g, 6, {1: k1, 2: k1, 3: k1}).answers[1]
    rot_s = {1: 2, 2: 3, 3: 1}
    rot_e = {1: 2, 2: 3, 3: 1}
    k2 = relabel(base, rot_s, rot_e)
    k3 = relabel(k2, rot_s, rot_e)
    return PirScheme("C3", g, 6, 6, {1: base, 2: k2, 3: k3})


def pir_s4() -> PirScheme:
    g = build_family("star", 4)
    rows = {
        1: {1: ["a1"], 2: ["b1"], 3: ["c1"], 4: ["a2+b1+c1"]},
        2: {1: ["a1"], 2: ["b1"], 3: ["c1"], 4: ["a1+b2+c1"]},
        3: {1: ["a1"], 2: ["b1"], 3: ["c1"], 4: ["a1+b1+c2"]},
    }
    return from_rows("S4", g, 2, rows)


def _star(n: int, graph: Optional[GraphSpec]) -> tuple[GraphSpec, int, dict[int, int]]:
    g = build_family("star", n) if graph is None else graph
    if g.N != n:
        raise ValueError(f"graph has {g.N} servers, expected {n}")
    c = star_center(g)
    if c is None:
        raise ValueError(f"{g.name} is not a star graph")
    leaf = {k: (i if j == c else j) for k, (i, j) in enumerate(g.edges, start=1)}
    return g, c, leaf


def pir_star_simple(n: int, graph: Optional[GraphSpec] = None) -> PirScheme:
    """Leaf n serves one symbol of its message; the centre serves one sum with a new W_k symbol."""
    if n < 3:
        raise ValueError("star schemes need N >= 3")
    g, c, leaf = _star(n, graph)
    answers = {}
    for k in g.messages:
        per: dict[int, tuple[PirAnswer, ...]] = {leaf[l]: (_answer([(l, 0)]),) for l in g.messages}
        per[c] = (_answer([(l, 1 if l == k else 0) for l in g.messages]),)
        answers[k] = per
    return PirScheme(f"S{n}-simple", g, 2, 2, answers)


def pir_star_t(n: int, t: int, graph: Optional[GraphSpec] = None) -> PirScheme:
    """The t-sum star scheme.

    The centre serves every t-sum over t-subsets of the messages with new
    symbols, C(N-2, t-1) symbols per message. The desired leaf serves
    C(N-3, t-2) new symbols of W_k. Every other leaf serves the symbols of its
    own message that appear next to W_k in the centre's sums.
    """
    if n < 3:
        raise ValueError("star schemes need N >= 3")
    if not 1 <= t <= n - 1:
        raise ValueError(f"t must lie in [1, {n - 1}]")
    g, c, leaf = _star(n, graph)
    msgs = g.messages
    subsets = list(itertools.combinations(msgs, t))
    idx: dict[tuple[int, tuple[int, ...]], int] = {}
    seen = {m: 0 for m in msgs}
    for s in subsets:
        for m in s:
            idx[(m, s)] = seen[m]
            seen[m] += 1
    per_msg = comb(n - 2, t - 1)
    extra = comb(n - 3, t - 2)
    sub_len = per_msg + extra
    answers = {}
    for k in msgs:
        per: dict[int, tuple[PirAnswer, ...]] = {}
        per[c] = tuple(_answer([(m, idx[(m, s)]) for m in s]) for s in subsets)
        for l in msgs:
            if l == k:
                per[leaf[l]] = tuple(_answer([(k, per_msg + i)]) for i in range(extra))
            else:
                per[leaf[l]] = tuple(_answer([(l, idx[(l, s)])]) for s in subsets if k in s and l in s)
        answers[k] = per
    return PirScheme(f"S{n}-t{t}", g, sub_len, sub_len, answers)


@dataclass(frozen=True)
class SrpReport:
    ok: bool
    counts: dict[Hashable, tuple[int, int]]


def check_srp(s: PirScheme) -> SrpReport:
    """Does every replica pair split the desired symbols evenly and disjointly?"""
    ok = s.L % 2 == 0
    counts = {}
    for tgt in s.targets:
        i, j = s.graph.endpoints(s.graph.bundle_of(tgt))
        p = s.retrieval_sets(tgt)
        pi, pj = set(p.get((tgt, i), ())), set(p.get((tgt, j), ()))
        counts[tgt] = (len(pi), len(pj))
        if not (len(pi) == len(pj) == s.L // 2 and not pi & pj and len(pi | pj) == s.L):
            ok = False
    return SrpReport(ok, counts)


def require_srp(s: PirScheme) -> None:
    rep = check_srp(s)
    if not rep.ok:
        raise ValueError(f"{s.name} does not satisfy the symmetric retrieval property: {rep.counts}")


def check_psi_compatible(s: PirScheme) -> None:
    """psi must move every P_{l,n} off itself, and map the desired half at i onto the half at j."""
    for tgt in s.targets:
        p = s.retrieval_sets(tgt)
        for (lab, n), idxs in p.items():
            if set(psi(m, s.L) for m in idxs) & set(idxs):
                raise ValueError(f"{s.name}: psi does not clear P for message {lab} at server {n}")
        i, j = s.graph.endpoints(s.graph.bundle_of(tgt))
        if {psi(m, s.L) for m in p[(tgt, i)]} != set(p[(tgt, j)]):
            raise ValueError(f"{s.name}: psi does not pair the desired halves of target {tgt}")


def check_shared_interference(s: PirScheme) -> None:
    """Non-desired symbols must be the same index set at both replicas."""
    for tgt in s.targets:
        p = s.retrieval_sets(tgt)
        for lab in s.graph.messages:
            if lab == tgt:
                continue
            i, j = s.graph.endpoints(s.graph.bundle_of(lab))
            if p.get((lab, i), ()) != p.get((lab, j), ()):
                raise ValueError(f"{s.name}: interference of message {lab} differs across replicas for target {tgt}")


def subsets_in_order(r: int) -> list[tuple[int, ...]]:
    """Non-empty subsets of [r] by size, then lexicographically."""
    return [a for s in range(1, r + 1) for a in itertools.combinations(range(1, r + 1), s)]


def lift_pir_multigraph(T: PirScheme, r: int) -> PirScheme:
    """Staged r-stage lift of an SRP scheme on G to the multigraph G^(r).

    For every non-empty A of [r] the base scheme is run on the summed messages
    V_l^A = sum_{m in A} W_{(l,m)}. Each summand normally takes a fresh block
    of L' indices. When A contains the desired slice tau, the co-bundle parts
    W_{(k,m)} (m != tau) instead reuse the symbols retrieved for A - {tau} at
    the other replica, so the user can cancel them.
    """
    if r < 1:
        raise ValueError("r must be at least 1")
    if not isinstance(T.graph, GraphSpec):
        raise ValueError("lift expects a scheme on a simple graph")
    require_srp(T)
    check_psi_compatible(T)
    lp = T.L
    mg = MultiGraphSpec(T.graph, r)
    order = subsets_in_order(r)
    answers = {}
    for k in T.targets:
        for tau in range(1, r + 1):
            blocks: dict[tuple[tuple[int, int], tuple[int, ...]], int] = {}
            used: dict[tuple[int, int], int] = {}
            for a in order:
                for l in T.graph.messages:
                    for m in a:
                        if l == k and tau in a and m != tau:
                            continue
                        msg = (l, m)
                        blocks[(msg, a)] = used.get(msg, 0)
                        used[msg] = blocks[(msg, a)] + 1
            per: dict[int, list[PirAnswer]] = {n: [] for n in mg.servers}
            for a in order:
                rest = tuple(m for m in a if m != tau)
                for n in mg.servers:
                    for ans in T.answers[k].get(n, ()):
                        syms = []
                        for vs in ans.symbols:
                            parts = []
                            for m in a:
                                msg = (vs.edge, m)
                                if vs.edge == k and tau in a and m != tau:
                                    parts.append((msg, blocks[(msg, rest)] * lp + psi(vs.mu, lp)))
                                else:
                                    parts.append((msg, blocks[(msg, a)] * lp + vs.mu))
                            syms.append(VirtualSymbol(vs.edge, a, vs.mu, tuple(parts)))
                        per[n].append(PirAnswer(a, tuple(syms)))
            answers[(k, tau)] = {n: tuple(v) for n, v in per.items()}
    return PirScheme(f"{T.name}^({r})", mg, T.sub_len, 2 ** (r - 1) * lp, answers, base=T, r=r)


# ---------------------------------------------------------------------------
# declarative text format
#
#   pir P3
#   servers 3
#   edge 1 2
#   edge 2 3
#   L 2
#   target 1
#   1: a1
#   2: a2+b2
#   3: b2
#   target 2
#   ...


def dump_pir(s: PirScheme) -> str:
    if not isinstance(s.graph, GraphSpec):
        raise ValueError("only schemes on simple graphs have a text form")
    letters = message_letters(s.graph)
    out = [f"pir {s.name}", f"servers {s.graph.N}"]
    out += [f"edge {i} {j}" for i, j in s.graph.edges]
    out.append(f"L {s.L}")
    for k in s.targets:
        out.append(f"target {k}")
        for n in s.graph.servers:
            cells = [
                "+".join(f"{letters[vs.edge]}{vs.mu + 1}" for vs in a.symbols)
                for a in s.answers[k].get(n, ())
            ]
            out.append(f"{n}: {', '.join(cells)}")
    return "\n".join(out) + "\n"


def load_pir(text: str) -> PirScheme:
    name, n_servers, edges, sub_len = "custom", None, [], None
    rows: dict[int, dict[int, list[str]]] = {}
    cur: Optional[int] = None
    for raw in text.splitlines():
        ln = raw.split("#", 1)[0].strip()
        if not ln:
            continue
        head, _, rest = ln.partition(" ")
        if head == "pir":
            name = rest.strip()
        elif head == "servers":
            n_servers = int(rest)
        elif head == "edge":
            a, b = rest.split()
            edges.append((int(a), int(b)))
        elif head == "L":
            sub_len = int(rest)
        elif head == "target":
            cur = int(rest)
            rows[cur] = {}
        elif ":" in ln and cur is not None:
            srv, _, body = ln.partition(":")
            rows[cur][int(srv)] = [c.strip() for c in body.split(",") if c.strip()]
        else:
            raise ValueError(f"cannot parse line {raw!r}")
    if n_servers is None or sub_len is None:
        raise ValueError("scheme text needs 'servers' and 'L' lines")
    g = GraphSpec(n_servers, tuple(edges), name=name)
    return from_rows(name, g, sub_len, rows)


def base_scheme_for(graph: GraphSpec) -> PirScheme:
    """The built-in SRP base scheme for a graph, when one exists."""
    c = star_center(graph)
    if graph.name == "P3" or (graph.N == 3 and graph.edges == ((1, 2), (2, 3))):
        return pir_p3()
    if graph.N == 3 and graph.edges == ((1, 2), (2, 3), (1, 3)):
        return pir_c3()
    if c is not None and graph.N >= 4:
        return pir_star_simple(graph.N, graph)
    raise ValueError(
        f"no built-in SRP PIR scheme for {graph.name}; built-ins cover P3, C3 and star graphs"
    )
