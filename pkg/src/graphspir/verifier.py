"""Exact checks of reliability, user privacy and database privacy.

Two kinds of engine:

* exhaustive: enumerate every coin value and every assignment of the stored
  symbols (vectorised with numpy) and compute distributions and mutual
  information from integer counts. Refuses beyond a budget of joint states.
* linear: every scheme here is linear once the coins are fixed, so the user's
  view is ``M_J w_J + M_U w_U + M_RH r_H + (known)``. Uniform independent
  unknowns make the view uniform on a coset of a column space, which gives
  ``I(W_J; view) = rank[M_U | M_RH | M_J] - rank[M_U | M_RH]`` in q-ary units.

User privacy is checked by comparing per-server query distributions across
targets. Coins are independent of (W, R) and each answer is a function of the
query and the server's own contents, so equal query distributions give equal
joint distributions of (Q_n, A_n, W_n, R_n). ``check_user_privacy_joint``
compares the joint distributions directly for small instances.

Nothing here samples. A check either runs exactly or refuses.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Any, Hashable, Iterable, Optional, Sequence, Union

import networkx as nx
import numpy as np

from .field import PrimeField, left_null_space, rank
from .graphs import POOL, MultiGraphSpec, Replication
from .protocol import (
    Descriptor,
    Form,
    MessageDatabase,
    RandomnessPool,
    Refusal,
    Scheme,
    TableScheme,
    Var,
    format_form,
    message_letters,
)

DEFAULT_BUDGET = 1 << 24  # joint (coin, database, pool) states for the exhaustive engine
ISO_THRESHOLD = 1 << 17  # above this many coins, permutation schemes use the isomorphism engine
SYMBOLIC_COIN_CAP = 4096

MI = Union[Fraction, float]


# ---------------------------------------------------------------------------
# reports


def fmt_label(label: Hashable) -> str:
    if isinstance(label, tuple):
        return "(" + ",".join(str(x) for x in label) + ")"
    return str(label)


def fmt_set(labels: Iterable[Hashable]) -> str:
    return "{" + ",".join(fmt_label(x) for x in labels) + "}"


def fmt_mi(mi: Optional[MI]) -> str:
    if mi is None:
        return "-"
    if isinstance(mi, Fraction):
        return str(mi)
    return f"{mi:.6g}"


@dataclass(frozen=True)
class CheckResult:
    check: str
    engine: str
    verdict: str  # pass | fail | refused
    target: Optional[Hashable] = None
    J: Optional[tuple] = None
    mi: Optional[MI] = None
    mi_max: Optional[MI] = None
    coverage: str = ""
    witness: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def line(self) -> str:
        parts = [f"check={self.check}", f"engine={self.engine}"]
        if self.target is not None:
            parts.append(f"target={fmt_label(self.target)}")
        if self.J is not None:
            parts.append(f"J={fmt_set(self.J)}")
        parts.append(f"verdict={self.verdict}")
        if self.mi is not None:
            parts.append(f"mi={fmt_mi(self.mi)}")
        if self.mi_max is not None:
            parts.append(f"mi_max={fmt_mi(self.mi_max)}")
        if self.coverage:
            parts.append(f"coverage={self.coverage}")
        out = " ".join(parts)
        if self.witness:
            out += f"\n  witness: {self.witness}"
        return out


@dataclass
class VerificationReport:
    scheme: str
    graph: str
    q: int
    results: list[CheckResult] = dc_field(default_factory=list)
    agreement: list[str] = dc_field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.verdict != "fail" for r in self.results) and not any("disagree" in a for a in self.agreement)

    def by_check(self, check: str, engine: Optional[str] = None) -> list[CheckResult]:
        return [r for r in self.results if r.check == check and (engine is None or r.engine == engine)]

    def check_passed(self, check: str, engine: Optional[str] = None) -> bool:
        rs = [r for r in self.by_check(check, engine) if r.verdict != "refused"]
        return bool(rs) and all(r.passed for r in rs)

    def lines(self) -> list[str]:
        out = [f"scheme={self.scheme} graph={self.graph} q={self.q}"]
        out += [r.line() for r in self.results]
        out += [f"agreement: {a}" for a in self.agreement]
        out.append(f"overall={'pass' if self.passed else 'fail'}")
        return out

    def text(self) -> str:
        return "\n".join(self.lines()) + "\n"


# ---------------------------------------------------------------------------
# symbols, partitions and batches


def stored_vars(desc: Descriptor) -> tuple[list[Var], list[Var]]:
    w = [Var("W", m, i) for m in desc.messages for i in range(desc.L)]
    kind = "S" if desc.mode is Replication.FULL else "R"
    r = [Var(kind, lab, i) for lab, n in desc.randomness for i in range(n)]
    return w, r


@dataclass(frozen=True)
class Partition:
    """Hidden W_J, unknown messages U, unknown randomness R_H, and known side information."""

    hidden: tuple[Var, ...]
    unknown_w: tuple[Var, ...]
    unknown_r: tuple[Var, ...]
    known: tuple[Var, ...]


def privacy_partition(desc: Descriptor, target: Hashable, J: Sequence[Hashable]) -> Partition:
    """Who knows what when testing I(W_J ; view) for one target.

    Shared pool: the user conditions on the coins only, so every W outside J
    and all of the pool are unknown. Per-edge randomness on a simple graph: the
    side information is everything except W_k, W_J and R_J. On a multigraph J
    ranges over bundles; the other messages of the target's own bundle are
    hidden as well, and R_k joins the unknowns because it pads them.
    """
    g = desc.graph
    wv, rv = stored_vars(desc)
    Jset = set(J)
    if desc.mode is Replication.FULL:
        hidden_m = Jset
        unknown_m = {m for m in desc.messages if m not in Jset}
        unknown_r_lab = {POOL}
    else:
        k = g.bundle_of(target)
        if isinstance(g, MultiGraphSpec):
            hidden_m = {m for m in desc.messages if g.bundle_of(m) in Jset or (g.bundle_of(m) == k and m != target)}
            unknown_r_lab = Jset | {k}
        else:
            hidden_m = Jset
            unknown_r_lab = Jset
        unknown_m = {target}
    hidden = tuple(v for v in wv if v.label in hidden_m)
    unknown_w = tuple(v for v in wv if v.label in unknown_m)
    unknown_r = tuple(v for v in rv if v.label in unknown_r_lab)
    taken = set(hidden) | set(unknown_w) | set(unknown_r)
    known = tuple(v for v in wv + rv if v not in taken)
    return Partition(hidden, unknown_w, unknown_r, known)


def j_sets(desc: Descriptor, target: Hashable) -> tuple[list[tuple], bool]:
    """The J sets to test and whether that list is every subset."""
    g = desc.graph
    allow_empty = False
    if desc.mode is not Replication.FULL and isinstance(g, MultiGraphSpec):
        k = g.bundle_of(target)
        cands = [b for b in g.bundles if b != k]
        allow_empty = g.r >= 2
    else:
        cands = [m for m in desc.messages if m != target]
    if len(cands) <= 5:
        out = [c for s in range(1, len(cands) + 1) for c in itertools.combinations(cands, s)]
        complete = True
    else:
        out = [(c,) for c in cands] + [tuple(cands)]
        complete = False
    if allow_empty:
        out = [()] + out
    return out, complete


class Batch:
    """Every assignment of the stored symbols at once, as arrays with a trailing batch axis."""

    def __init__(self, desc: Descriptor, q: int) -> None:
        self.desc = desc
        self.q = q
        wv, rv = stored_vars(desc)
        self.vars = wv + rv
        self.index = {v: i for i, v in enumerate(self.vars)}
        self.size = q ** len(self.vars)
        ar = np.arange(self.size, dtype=np.int64)
        self.X = np.stack([(ar // q**i) % q for i in range(len(self.vars))]) if self.vars else np.zeros((0, 1), np.int64)
        self.db = {m: self.X[[self.index[Var("W", m, i)] for i in range(desc.L)]] for m in desc.messages}
        kind = "S" if desc.mode is Replication.FULL else "R"
        self.pool = {lab: self.X[[self.index[Var(kind, lab, i)] for i in range(n)]] for lab, n in desc.randomness}
        st = desc.storage()
        self.local = {
            n: ({m: self.db[m] for m in st.messages[n]}, {lab: self.pool[lab] for lab in st.randomness[n]})
            for n in desc.graph.servers
        }

    def rows(self, vs: Sequence[Var]) -> np.ndarray:
        if not vs:
            return np.zeros((0, self.size), dtype=np.int64)
        return self.X[[self.index[v] for v in vs]]

    def answers(self, scheme: Scheme, queries: dict, field: PrimeField) -> dict[int, np.ndarray]:
        out = {}
        for n in self.desc.graph.servers:
            w, r = self.local[n]
            vals = scheme.answer(n, queries[n], w, r, field)
            out[n] = (
                np.stack([np.broadcast_to(np.asarray(v, dtype=np.int64), (self.size,)) for v in vals])
                if len(vals)
                else np.zeros((0, self.size), dtype=np.int64)
            )
        return out


def _coin_count(scheme: Scheme, field: PrimeField) -> int:
    return scheme.coin_domain_size(field)


def _exhaustive_states(scheme: Scheme, field: PrimeField) -> int:
    wv, rv = stored_vars(scheme.descriptor)
    return _coin_count(scheme, field) * field.q ** (len(wv) + len(rv))


def _short(obj: Any, limit: int = 120) -> str:
    s = repr(obj)
    return s if len(s) <= limit else s[: limit - 3] + "..."


def _coin_text(coins: Any) -> str:
    if hasattr(coins, "h"):
        return "h=" + ",".join(str(x) for x in coins.h)
    return "perms=" + _short(coins)


def _symbolic_coins(scheme: Scheme, field: PrimeField) -> tuple[list, str]:
    n = _coin_count(scheme, field)
    if n <= SYMBOLIC_COIN_CAP:
        return list(scheme.enumerate_coins(field)), f"coins=all({n})"
    groups = scheme.permutation_groups()
    if groups is None:
        raise Refusal(f"{scheme.name}: {n} coin values and no permutation structure to reduce them")
    ident = tuple(tuple(range(g.size)) for g in groups)
    rev = tuple(tuple(reversed(range(g.size))) for g in groups)
    shift = tuple(tuple((i + 1) % g.size for i in range(g.size)) for g in groups)
    # permutations only rename symbol indices, so every coin is a relabelling of these
    return [ident, rev, shift], "coins=orbit-representatives(3)"


# ---------------------------------------------------------------------------
# linear view


@dataclass(frozen=True)
class ViewMatrixization:
    """The user's received answers as an affine map of the stored symbols, for one coin."""

    rows: tuple[tuple[int, int], ...]
    w_vars: tuple[Var, ...]
    r_vars: tuple[Var, ...]
    M_w: np.ndarray
    M_r: np.ndarray
    offset: np.ndarray

    def evaluate(self, db: MessageDatabase, pool: RandomnessPool, q: int) -> np.ndarray:
        wvec = np.array([db.messages[v.label][v.index] for v in self.w_vars], dtype=np.int64)
        rvec = np.array(
            [pool.vectors[POOL if v.kind == "S" else v.label][v.index] for v in self.r_vars], dtype=np.int64
        )
        return (self.M_w @ wvec + self.M_r @ rvec + self.offset) % q


def view_forms(scheme: Scheme, coins: Any, target: Hashable, field: PrimeField) -> list[tuple[int, int, Form]]:
    queries = scheme.make_queries(coins, target, field)
    out = []
    for n in scheme.descriptor.graph.servers:
        for pos, f in enumerate(scheme.answer_forms(n, queries[n])):
            out.append((n, pos, f))
    return out


def matrixize(scheme: Scheme, coins: Any, target: Hashable, field: PrimeField) -> ViewMatrixization:
    desc = scheme.descriptor
    wv, rv = stored_vars(desc)
    rows = view_forms(scheme, coins, target, field)
    wi = {v: i for i, v in enumerate(wv)}
    ri = {v: i for i, v in enumerate(rv)}
    mw = np.zeros((len(rows), len(wv)), dtype=np.int64)
    mr = np.zeros((len(rows), len(rv)), dtype=np.int64)
    for i, (_, _, f) in enumerate(rows):
        for v, c in f:
            if v.kind == "W":
                mw[i, wi[v]] = (mw[i, wi[v]] + c) % field.q
            else:
                mr[i, ri[v]] = (mr[i, ri[v]] + c) % field.q
    return ViewMatrixization(
        tuple((n, p) for n, p, _ in rows), tuple(wv), tuple(rv), mw, mr, np.zeros(len(rows), dtype=np.int64)
    )


def _columns(vm: ViewMatrixization, vs: Sequence[Var]) -> np.ndarray:
    idx_w = {v: i for i, v in enumerate(vm.w_vars)}
    idx_r = {v: i for i, v in enumerate(vm.r_vars)}
    cols = []
    for v in vs:
        cols.append(vm.M_w[:, idx_w[v]] if v.kind == "W" else vm.M_r[:, idx_r[v]])
    if not cols:
        return np.zeros((len(vm.rows), 0), dtype=np.int64)
    return np.stack(cols, axis=1)


# ---------------------------------------------------------------------------
# reliability


def check_reliability(
    scheme: Scheme, q: int, engine: str = "auto", budget: int = DEFAULT_BUDGET
) -> list[CheckResult]:
    """Symbolic: the decoder composed with the answer map must be the projection onto W_k.

    Exhaustive: decode every (coin, database, pool) and compare.
    """
    field = PrimeField(q)
    out = []
    if engine in ("auto", "symbolic"):
        out.append(_reliability_symbolic(scheme, field))
    if engine in ("auto", "exhaustive"):
        states = _exhaustive_states(scheme, field)
        if states <= budget:
            out.append(_reliability_exhaustive(scheme, field))
        elif engine == "exhaustive":
            raise Refusal(f"{scheme.name}: {states} joint states exceed the budget {budget}; use the symbolic engine")
        else:
            out.append(CheckResult("reliability", "exhaustive", "refused", coverage=f"states={states}>budget"))
    return out


def _reliability_symbolic(scheme: Scheme, field: PrimeField) -> CheckResult:
    q = field.q
    desc = scheme.descriptor
    letters = message_letters(desc.graph)
    coins_list, coverage = _symbolic_coins(scheme, field)
    wv, rv = stored_vars(desc)
    allv = wv + rv
    col = {v: i for i, v in enumerate(allv)}
    for coins in coins_list:
        for t in scheme.targets:
            rows = view_forms(scheme, coins, t, field)
            A = len(rows)
            m = np.zeros((A, len(allv)), dtype=np.int64)
            for i, (_, _, f) in enumerate(rows):
                for v, c in f:
                    m[i, col[v]] = (m[i, col[v]] + c) % q
            # feed unit answer vectors through the decoder to read off its matrix
            eye = np.eye(A, dtype=np.int64)
            answers: dict[int, list] = {}
            for i, (n, _, _) in enumerate(rows):
                answers.setdefault(n, []).append(eye[i])
            for n in desc.graph.servers:
                answers.setdefault(n, [])
            d = np.asarray(scheme.decode(answers, coins, t, field), dtype=np.int64).reshape(desc.L, A)
            want = np.zeros((desc.L, len(allv)), dtype=np.int64)
            for mu in range(desc.L):
                want[mu, col[Var("W", t, mu)]] = 1
            resid = (d @ m - want) % q
            bad = np.argwhere(resid)
            if bad.size:
                mu = int(bad[0][0])
                extra = [(allv[j], int(resid[mu, j])) for j in np.nonzero(resid[mu])[0]]
                return CheckResult(
                    "reliability", "symbolic", "fail", target=t, coverage=coverage,
                    witness=f"{_coin_text(coins)}: decoded symbol {mu} of W_{fmt_label(t)} is off by "
                    f"{format_form(tuple(extra), letters)}",
                )
    return CheckResult("reliability", "symbolic", "pass", coverage=coverage)


def _reliability_exhaustive(scheme: Scheme, field: PrimeField) -> CheckResult:
    desc = scheme.descriptor
    b = Batch(desc, field.q)
    count = 0
    for coins in scheme.enumerate_coins(field):
        count += 1
        for t in scheme.targets:
            ans = b.answers(scheme, scheme.make_queries(coins, t, field), field)
            dec = np.asarray(scheme.decode({n: list(a) for n, a in ans.items()}, coins, t, field)).reshape(desc.L, -1)
            diff = np.nonzero(np.any(dec % field.q != b.db[t], axis=0))[0]
            if diff.size:
                i = int(diff[0])
                vals = {str(v): int(b.X[j, i]) for j, v in enumerate(b.vars)}
                return CheckResult(
                    "reliability", "exhaustive", "fail", target=t, coverage=f"coins={count}",
                    witness=f"{_coin_text(coins)}: decoded {dec[:, i].tolist()} != {b.db[t][:, i].tolist()} "
                    f"at {_short(vals, 200)}",
                )
    return CheckResult("reliability", "exhaustive", "pass", coverage=f"coins={count} states={count * b.size}")


# ---------------------------------------------------------------------------
# user privacy


def _query_key(query: Any) -> Any:
    return query


def check_user_privacy(
    scheme: Scheme, q: int, engine: str = "auto", budget: int = DEFAULT_BUDGET
) -> CheckResult:
    """Per-server query distributions must not depend on the target."""
    field = PrimeField(q)
    n_coins = _coin_count(scheme, field)
    if engine == "auto":
        if n_coins <= ISO_THRESHOLD:
            engine = "enumerate"
        elif scheme.permutation_groups() is not None:
            engine = "isomorphism"
        else:
            raise Refusal(f"{scheme.name}: {n_coins} coin values, too many to enumerate")
    if engine == "enumerate":
        if n_coins * len(scheme.targets) > budget:
            raise Refusal(f"{scheme.name}: {n_coins} coins x {len(scheme.targets)} targets exceed the budget {budget}")
        return _user_privacy_enumerate(scheme, field)
    if engine == "isomorphism":
        if not isinstance(scheme, TableScheme) or scheme.permutation_groups() is None:
            raise Refusal("the isomorphism engine needs coins that are independent index permutations")
        return _user_privacy_isomorphism(scheme)
    if engine == "joint":
        return check_user_privacy_joint(scheme, q, budget)
    raise ValueError(f"unknown user-privacy engine {engine!r}")


def _describe_query(scheme: Scheme, query: Any) -> str:
    if isinstance(query, tuple) and query and isinstance(query[0], tuple) and query[0] and isinstance(query[0][0], tuple):
        letters = message_letters(scheme.descriptor.graph)
        return "[" + ", ".join(format_form(f, letters) for f in query) + "]"
    return _short(query)


def _user_privacy_enumerate(scheme: Scheme, field: PrimeField) -> CheckResult:
    targets = scheme.targets
    counters = {t: {n: Counter() for n in scheme.descriptor.graph.servers} for t in targets}
    count = 0
    for coins in scheme.enumerate_coins(field):
        count += 1
        for t in targets:
            qs = scheme.make_queries(coins, t, field)
            for n, qn in qs.items():
                counters[t][n][_query_key(qn)] += 1
    base = targets[0]
    for t in targets[1:]:
        for n in scheme.descriptor.graph.servers:
            a, b = counters[base][n], counters[t][n]
            if a != b:
                diff = next(iter((a - b) or (b - a)))
                who = base if (a - b) else t
                return CheckResult(
                    "user_privacy", "enumerate", "fail", coverage=f"coins={count}",
                    witness=f"server {n}: query {_describe_query(scheme, diff)} has probability "
                    f"{Fraction(a[diff], count)} under target {fmt_label(base)} but "
                    f"{Fraction(b[diff], count)} under target {fmt_label(t)} (seen for {fmt_label(who)})",
                )
    return CheckResult("user_privacy", "enumerate", "pass", coverage=f"coins={count}")


def query_graph(scheme: TableScheme, target: Hashable, n: int) -> nx.Graph:
    """Answers to server n as a coloured bipartite graph over permutable index slots.

    Two targets induce the same query distribution at n exactly when these
    graphs are isomorphic, since uniform permutations spread each template
    over its whole orbit.
    """
    g = nx.Graph()
    groups = scheme.coin_groups
    for gi, grp in enumerate(groups):
        for i in range(grp.size):
            g.add_node(("slot", gi, i), color=("slot", gi))
    for ai, f in enumerate(scheme.templates[target][n]):
        a = ("ans", ai)
        g.add_node(a, color=("ans",))
        links: dict[Any, list] = {}
        for v, c in f:
            gi = scheme._group_of.get((v.kind, v.label))
            node = ("slot", gi, v.index) if gi is not None else ("fixed", v)
            if gi is None and node not in g:
                g.add_node(node, color=("fixed", v))
            links.setdefault(node, []).append((v.kind, str(v.label), c % 10**9))
        for node, lab in links.items():
            g.add_edge(a, node, label=tuple(sorted(lab)))
    return g


def _user_privacy_isomorphism(scheme: TableScheme) -> CheckResult:
    targets = scheme.targets
    nm = nx.algorithms.isomorphism.categorical_node_match("color", None)
    em = nx.algorithms.isomorphism.categorical_edge_match("label", None)
    for n in scheme.descriptor.graph.servers:
        g0 = query_graph(scheme, targets[0], n)
        for t in targets[1:]:
            g1 = query_graph(scheme, t, n)
            if not nx.is_isomorphic(g0, g1, node_match=nm, edge_match=em):
                letters = message_letters(scheme.descriptor.graph)
                shown = ", ".join(format_form(f, letters) for f in scheme.templates[t][n])
                return CheckResult(
                    "user_privacy", "isomorphism", "fail", coverage="orbits",
                    witness=f"server {n}: query [{shown}] for target {fmt_label(t)} never occurs "
                    f"for target {fmt_label(targets[0])}",
                )
    return CheckResult("user_privacy", "isomorphism", "pass", coverage="orbits")


def check_user_privacy_joint(scheme: Scheme, q: int, budget: int = DEFAULT_BUDGET) -> CheckResult:
    """Compare the full joint distribution of (Q_n, A_n, W_n, R_n) across targets."""
    field = PrimeField(q)
    states = _exhaustive_states(scheme, field)
    if states * len(scheme.targets) > budget:
        raise Refusal(f"{scheme.name}: joint user-privacy check needs {states} states per target")
    desc = scheme.descriptor
    b = Batch(desc, q)
    st = desc.storage()
    wv, rv = stored_vars(desc)
    local_vars = {
        n: [v for v in wv if v.label in st.messages[n]]
        + [v for v in rv if (POOL if v.kind == "S" else v.label) in st.randomness[n]]
        for n in desc.graph.servers
    }
    counters = {t: {n: Counter() for n in desc.graph.servers} for t in scheme.targets}
    for coins in scheme.enumerate_coins(field):
        for t in scheme.targets:
            qs = scheme.make_queries(coins, t, field)
            ans = b.answers(scheme, qs, field)
            for n in desc.graph.servers:
                rows = np.concatenate([ans[n], b.rows(local_vars[n])], axis=0)
                uniq, cnt = np.unique(rows.T, axis=0, return_counts=True)
                for row, c in zip(uniq, cnt):
                    counters[t][n][(_query_key(qs[n]), tuple(int(x) for x in row))] += int(c)
    base = scheme.targets[0]
    for t in scheme.targets[1:]:
        for n in desc.graph.servers:
            if counters[base][n] != counters[t][n]:
                return CheckResult(
                    "user_privacy", "joint", "fail",
                    witness=f"server {n}: joint law of (Q, A, W_n, R_n) differs between targets "
                    f"{fmt_label(base)} and {fmt_label(t)}",
                )
    return CheckResult("user_privacy", "joint", "pass", coverage=f"states={states}")


# ---------------------------------------------------------------------------
# database privacy, exhaustive


def _power_of(ratio: Fraction, q: int) -> Optional[int]:
    """e with q**e == ratio, if any."""
    num, den = ratio.numerator, ratio.denominator
    if num != 1 and den != 1:
        return None
    val, sign = (den, -1) if num == 1 else (num, 1)
    e = 0
    while val % q == 0:
        val //= q
        e += 1
    return sign * e if val == 1 else None


def exact_mutual_information(x_ids: np.ndarray, v_ids: np.ndarray, q: int) -> tuple[MI, bool]:
    """I(X; V) in q-ary units from equally likely samples; exact when every ratio is a power of q."""
    B = len(x_ids)
    nx_ = np.bincount(x_ids)
    nv = np.bincount(v_ids)
    width = len(nv)
    pairs, cp = np.unique(x_ids.astype(np.int64) * width + v_ids, return_counts=True)
    num = cp.astype(object) * B
    den = nx_[pairs // width].astype(object) * nv[pairs % width].astype(object)
    independent = bool(np.all(num == den))
    if independent:
        return Fraction(0), True
    exact = Fraction(0)
    approx = 0.0
    is_exact = True
    for c, a, d in zip(cp, num, den):
        r = Fraction(int(a), int(d))
        e = _power_of(r, q)
        if e is not None:
            exact += Fraction(int(c), B) * e
        else:
            is_exact = False
        approx += (int(c) / B) * math.log(float(r), q)
    return (exact if is_exact else approx), False


def _encode_rows(rows: np.ndarray, q: int) -> np.ndarray:
    """Dense ids for the columns of ``rows`` (entries in 0..q-1)."""
    if rows.shape[0] == 0:
        return np.zeros(rows.shape[1], dtype=np.int64)
    if rows.shape[0] * math.log2(q) < 62:
        code = (np.power(q, np.arange(rows.shape[0], dtype=np.int64)) @ rows).astype(np.int64)
    else:
        _, code = np.unique(rows.T, axis=0, return_inverse=True)
    _, inv = np.unique(code.reshape(-1), return_inverse=True)
    return inv.reshape(-1)


def _targets_and_js(scheme: Scheme, target, J) -> list[tuple[Hashable, tuple, bool]]:
    desc = scheme.descriptor
    out = []
    for t in (scheme.targets if target is None else (target,)):
        if J is None:
            js, complete = j_sets(desc, t)
        else:
            js, complete = [tuple(J)], False
        for j in js:
            part = privacy_partition(desc, t, j)
            if part.hidden:
                out.append((t, j, complete))
    return out


def check_db_privacy_exhaustive(
    scheme: Scheme, q: int, target: Optional[Hashable] = None, J: Optional[Sequence] = None,
    budget: int = DEFAULT_BUDGET,
) -> list[CheckResult]:
    """Exact I(W_J ; coins, queries, answers, side information), averaged over coins."""
    field = PrimeField(q)
    states = _exhaustive_states(scheme, field)
    if states > budget:
        raise Refusal(
            f"{scheme.name}: {states} joint states exceed the exhaustive budget {budget}; use the linear engine"
        )
    desc = scheme.descriptor
    b = Batch(desc, q)
    tasks = _targets_and_js(scheme, target, J)
    parts = {(t, j): privacy_partition(desc, t, j) for t, j, _ in tasks}
    acc: dict[tuple, list] = {(t, j): [] for t, j, _ in tasks}
    n_coins = 0
    for coins in scheme.enumerate_coins(field):
        n_coins += 1
        views = {}
        for t in {t for t, _, _ in tasks}:
            ans = b.answers(scheme, scheme.make_queries(coins, t, field), field)
            views[t] = np.concatenate([ans[n] for n in desc.graph.servers], axis=0)
        for t, j, _ in tasks:
            p = parts[(t, j)]
            v_ids = _encode_rows(np.concatenate([views[t], b.rows(p.known)], axis=0), q)
            x_ids = _encode_rows(b.rows(p.hidden), q)
            mi, _ = exact_mutual_information(x_ids, v_ids, q)
            acc[(t, j)].append((mi, coins))
    out = []
    for t, j, complete in tasks:
        vals = acc[(t, j)]
        total = sum(m for m, _ in vals)
        avg = total / n_coins if isinstance(total, Fraction) else float(total) / n_coins
        worst_mi, worst_coin = max(vals, key=lambda mc: float(mc[0]))
        cov = f"coins={n_coins} states={n_coins * b.size}" + ("" if complete else " J=partial")
        if avg == 0:
            out.append(CheckResult("db_privacy", "exhaustive", "pass", t, j, mi=Fraction(0), coverage=cov))
        else:
            out.append(
                CheckResult(
                    "db_privacy", "exhaustive", "fail", t, j, mi=avg, mi_max=worst_mi, coverage=cov,
                    witness=f"{_coin_text(worst_coin)} leaks I = {fmt_mi(worst_mi)} symbols of W_J",
                )
            )
    return out


# ---------------------------------------------------------------------------
# database privacy, linear


def _linear_coins(scheme: Scheme, field: PrimeField, budget: int) -> tuple[list, str]:
    if isinstance(scheme, TableScheme):
        # a permutation coin renames columns and leaves every rank unchanged
        return [scheme.identity_coins()], "coins=orbit-representative"
    n = _coin_count(scheme, field)
    if n > budget:
        raise Refusal(f"{scheme.name}: {n} coin values exceed the budget for the linear engine")
    return list(scheme.enumerate_coins(field)), f"coins=all({n})"


def _linear_task(args) -> CheckResult:
    scheme, q, t, j, complete, coins_list, coverage = args
    field = PrimeField(q)
    desc = scheme.descriptor
    p = privacy_partition(desc, t, j)
    letters = message_letters(desc.graph)
    total = Fraction(0)
    witness = None
    worst = Fraction(0)
    for coins in coins_list:
        vm = matrixize(scheme, coins, t, field)
        mu = _columns(vm, list(p.unknown_w) + list(p.unknown_r))
        mj = _columns(vm, p.hidden)
        leak = rank(np.concatenate([mu, mj], axis=1), q) - rank(mu, q)
        total += leak
        if leak and witness is None:
            worst = Fraction(leak)
            ys = left_null_space(mu, q)
            for y in ys:
                f = (y @ mj) % q
                if np.any(f):
                    combo = tuple((v, int(c)) for v, c in zip(p.hidden, f) if c)
                    used = " + ".join(
                        f"{int(c)}*A{vm.rows[i][0]}.{vm.rows[i][1] + 1}" for i, c in enumerate(y) if c
                    )
                    witness = f"{_coin_text(coins)}: {used} = {format_form(combo, letters)} + known"
                    break
    avg = total / len(coins_list)
    cov = coverage + ("" if complete else " J=partial")
    if avg == 0:
        return CheckResult("db_privacy", "linear", "pass", t, j, mi=Fraction(0), coverage=cov)
    return CheckResult("db_privacy", "linear", "fail", t, j, mi=avg, mi_max=worst, coverage=cov, witness=witness)


def check_db_privacy_linear(
    scheme: Scheme, q: int, target: Optional[Hashable] = None, J: Optional[Sequence] = None,
    jobs: int = 1, budget: int = DEFAULT_BUDGET,
) -> list[CheckResult]:
    """Span criterion per coin: col(M_J) must lie inside col([M_U | M_RH])."""
    field = PrimeField(q)
    coins_list, coverage = _linear_coins(scheme, field, budget)
    tasks = [(scheme, q, t, j, c, coins_list, coverage) for t, j, c in _targets_and_js(scheme, target, J)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_linear_task, tasks))
    return [_linear_task(a) for a in tasks]


# ---------------------------------------------------------------------------
# everything


def verify_all(
    scheme: Scheme, q: int, budget: int = DEFAULT_BUDGET, engine: str = "auto", jobs: int = 1
) -> VerificationReport:
    """Reliability, user privacy and database privacy, recording cross-engine agreement."""
    field = PrimeField(q)
    desc = scheme.descriptor
    rep = VerificationReport(scheme.name, desc.graph.name, q)
    states = _exhaustive_states(scheme, field)
    want_exh = engine in ("auto", "exhaustive")
    if engine == "exhaustive" and states > budget:
        raise Refusal(f"{scheme.name}: {states} joint states exceed the exhaustive budget {budget}")
    run_exh = want_exh and states <= budget

    rep.results += check_reliability(scheme, q, "auto" if run_exh else "symbolic", budget)
    rep.results.append(check_user_privacy(scheme, q, "auto", budget))

    lin = []
    if engine in ("auto", "linear"):
        lin = check_db_privacy_linear(scheme, q, jobs=jobs, budget=budget)
        rep.results += lin
    exh = []
    if run_exh:
        exh = check_db_privacy_exhaustive(scheme, q, budget=budget)
        rep.results += exh
    elif want_exh:
        rep.results.append(
            CheckResult("db_privacy", "exhaustive", "refused", coverage=f"states={states}>budget; linear engine is authoritative")
        )

    rel = {r.engine: r.verdict for r in rep.by_check("reliability") if r.verdict != "refused"}
    if len(rel) == 2:
        rep.agreement.append(
            f"reliability symbolic={rel['symbolic']} exhaustive={rel['exhaustive']} "
            + ("agree" if len(set(rel.values())) == 1 else "disagree")
        )
    if lin and exh:
        lmap = {(r.target, r.J): r for r in lin}
        agree = True
        for r in exh:
            other = lmap.get((r.target, r.J))
            if other is None:
                continue
            if other.verdict != r.verdict:
                agree = False
                rep.agreement.append(
                    f"db_privacy target={fmt_label(r.target)} J={fmt_set(r.J)} linear={other.verdict} "
                    f"exhaustive={r.verdict} disagree"
                )
        if agree:
            rep.agreement.append(f"db_privacy linear and exhaustive agree on {len(exh)} (target, J) pairs")
    return rep


def engines_agree(report: VerificationReport) -> Optional[bool]:
    """None when only one database-privacy engine ran."""
    lin = {(r.target, r.J): r.verdict for r in report.by_check("db_privacy", "linear")}
    exh = {(r.target, r.J): r.verdict for r in report.by_check("db_privacy", "exhaustive") if r.verdict != "refused"}
    if not lin or not exh:
        return None
    return all(lin.get(k) == v for k, v in exh.items())


# ---------------------------------------------------------------------------
# structural comparison of answer tables


def answer_table_graph(forms: dict[int, Sequence[Form]]) -> nx.Graph:
    """All servers' answers as one coloured graph over symbol nodes.

    Symbol nodes are coloured by their family (kind, label) only, so two
    tables are isomorphic exactly when they agree after renumbering the
    indices inside each family of message symbols and pads.
    """
    g = nx.Graph()
    for n, row in forms.items():
        for ai, f in enumerate(row):
            a = ("ans", n, ai)
            g.add_node(a, color=("ans", n))
            for v, c in f:
                node = ("sym", v)
                if node not in g:
                    g.add_node(node, color=("sym", v.kind, str(v.label)))
                g.add_edge(a, node, coeff=c)
    return g


def tables_match(scheme: TableScheme, target: Hashable, expected: dict[int, Sequence[Form]], q: int = 0) -> bool:
    """Does the scheme's answer table for ``target`` equal ``expected`` up to index renaming?

    With ``q`` given, coefficients are compared modulo q.
    """
    ours = scheme.templates[target]
    if set(ours) != set(expected) or any(len(ours[n]) != len(expected[n]) for n in ours):
        return False

    def norm(forms):
        return {n: [tuple((v, c % q if q else c) for v, c in f) for f in row] for n, row in forms.items()}

    g0, g1 = answer_table_graph(norm(ours)), answer_table_graph(norm(expected))
    nm = nx.algorithms.isomorphism.categorical_node_match("color", None)
    em = nx.algorithms.isomorphism.categorical_edge_match("coeff", None)
    return nx.is_isomorphic(g0, g1, node_match=nm, edge_match=em)
