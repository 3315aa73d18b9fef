"""Scheme-agnostic execution core.

Every scheme in this package is linear: for a fixed coin value each answer
symbol is an F_q-linear combination of stored message and randomness symbols.
Such a combination is a ``Form``, a sorted tuple of ``(Var, coefficient)``
pairs with integer coefficients that are reduced modulo q only when evaluated.

Symbols are carried as ints, or as numpy integer arrays when the verifier
evaluates a whole batch of databases at once; every operation here is
written so that both work.
"""

from __future__ import annotations

import itertools
import math
import random
from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Hashable, Iterable, Iterator, Mapping, NamedTuple, Optional, Sequence

import numpy as np

from .field import PrimeField, solve
from .graphs import POOL, AnyGraph, MultiGraphSpec, Replication, StorageMap, storage_map


class Var(NamedTuple):
    """One stored symbol: kind W (message), R (per-edge pad) or S (shared pool)."""

    kind: str
    label: Hashable
    index: int


Term = tuple[Var, int]
Form = tuple[Term, ...]


def make_form(terms: Iterable[Term]) -> Form:
    acc: dict[Var, int] = {}
    for v, c in terms:
        acc[v] = acc.get(v, 0) + c
    return tuple(sorted((v, c) for v, c in acc.items() if c != 0))


def form_vars(form: Form) -> list[Var]:
    return [v for v, _ in form]


class DecodeFailure(RuntimeError):
    """The decoder did not return the requested message."""


class DimensionMismatch(ValueError):
    pass


class Refusal(RuntimeError):
    """An exact computation was requested beyond its configured budget."""


@dataclass(frozen=True)
class Descriptor:
    name: str
    graph: AnyGraph
    mode: Replication
    L: int
    randomness: tuple[tuple[Hashable, int], ...]
    downloads: tuple[int, ...]
    extra: tuple[tuple[str, Any], ...] = ()

    @property
    def messages(self) -> tuple:
        return self.graph.messages

    @property
    def total_downloads(self) -> int:
        return sum(self.downloads)

    @property
    def total_randomness(self) -> int:
        return sum(n for _, n in self.randomness)

    def randomness_length(self, label: Hashable) -> int:
        return dict(self.randomness)[label]

    def storage(self) -> StorageMap:
        return storage_map(self.graph, self.mode)

    def info(self, key: str, default: Any = None) -> Any:
        return dict(self.extra).get(key, default)


@dataclass
class MessageDatabase:
    """W_k in F_q^L for every message label (arrays may carry a batch axis)."""

    L: int
    messages: dict[Hashable, Any]

    @classmethod
    def random(cls, desc: Descriptor, field: PrimeField, rng: np.random.Generator) -> "MessageDatabase":
        return cls(desc.L, {m: rng.integers(0, field.q, desc.L) for m in desc.messages})

    @classmethod
    def zeros(cls, desc: Descriptor) -> "MessageDatabase":
        return cls(desc.L, {m: np.zeros(desc.L, dtype=np.int64) for m in desc.messages})


@dataclass
class RandomnessPool:
    """Per-bundle vectors (graph-replicated) or the single shared pool."""

    vectors: dict[Hashable, Any]

    @classmethod
    def random(cls, desc: Descriptor, field: PrimeField, rng: np.random.Generator) -> "RandomnessPool":
        return cls({lab: rng.integers(0, field.q, n) for lab, n in desc.randomness})

    @classmethod
    def zeros(cls, desc: Descriptor) -> "RandomnessPool":
        return cls({lab: np.zeros(n, dtype=np.int64) for lab, n in desc.randomness})


def local_view(
    desc: Descriptor, db: MessageDatabase, pool: RandomnessPool, n: int
) -> tuple[dict, dict]:
    st = desc.storage()
    w = {m: db.messages[m] for m in st.messages[n]}
    r = {lab: pool.vectors[lab] for lab in st.randomness[n]}
    return w, r


def eval_form(form: Form, w: Mapping, r: Mapping, q: int) -> Any:
    total: Any = 0
    for v, c in form:
        if v.kind == "W":
            vec = w[v.label]
        elif v.kind == "R":
            vec = r[v.label]
        else:
            vec = r[POOL]
        total = total + c * vec[v.index]
    return total % q


class Scheme(ABC):
    """An executable retrieval protocol over some storage graph."""

    descriptor: Descriptor

    @property
    def name(self) -> str:
        return self.descriptor.name

    @property
    def targets(self) -> tuple:
        return self.descriptor.messages

    @abstractmethod
    def coin_domain_size(self, field: PrimeField) -> int: ...

    @abstractmethod
    def enumerate_coins(self, field: PrimeField) -> Iterator[Any]: ...

    @abstractmethod
    def sample_coins(self, rng: random.Random, field: PrimeField) -> Any: ...

    @abstractmethod
    def make_queries(self, coins: Any, target: Hashable, field: PrimeField) -> dict[int, Any]: ...

    @abstractmethod
    def answer(self, server: int, query: Any, w: Mapping, r: Mapping, field: PrimeField) -> list: ...

    @abstractmethod
    def answer_forms(self, server: int, query: Any) -> list[Form]:
        """The answer to ``query`` as linear forms over stored symbols."""

    @abstractmethod
    def decode(self, answers: Mapping[int, Sequence], coins: Any, target: Hashable, field: PrimeField) -> Any: ...

    def permutation_groups(self) -> Optional[tuple["CoinGroup", ...]]:
        """Coin structure when the coins are exactly independent index permutations."""
        return None


# ---------------------------------------------------------------------------
# table schemes: symbolic answer templates plus private index permutations


@dataclass(frozen=True)
class CoinGroup:
    """One uniformly random permutation of ``range(size)``, applied to every family listed."""

    name: str
    size: int
    families: tuple[tuple[str, Hashable], ...]


class TableScheme(Scheme):
    """A scheme given by per-target answer templates over abstract symbol indices.

    The user draws one permutation per coin group and relabels the template's
    abstract indices through it. Each server receives its relabelled forms as a
    sorted tuple, so the transmitted order carries nothing beyond the set.
    Decoding inverts the template once per (target, q) by linear algebra and
    undoes the permutation on the desired message.
    """

    def __init__(
        self,
        descriptor: Descriptor,
        templates: Mapping[Hashable, Mapping[int, Sequence[Form]]],
        coin_groups: Sequence[CoinGroup],
        *,
        unblinded: bool = False,
    ) -> None:
        self.descriptor = descriptor
        self.templates = {t: {n: tuple(fs) for n, fs in per.items()} for t, per in templates.items()}
        self.coin_groups = tuple(coin_groups)
        self.unblinded = unblinded
        self._group_of: dict[tuple[str, Hashable], int] = {}
        for gi, g in enumerate(self.coin_groups):
            for fam in g.families:
                if fam in self._group_of:
                    raise ValueError(f"family {fam} in two coin groups")
                self._group_of[fam] = gi
        self._decoders: dict[tuple[Hashable, int], np.ndarray] = {}
        self._validate()

    def _validate(self) -> None:
        d = self.descriptor
        st = d.storage()
        rlen = dict(d.randomness)
        if set(self.templates) != set(d.messages):
            raise ValueError("templates must cover every target")
        for t, per in self.templates.items():
            for n in d.graph.servers:
                forms = per.get(n, ())
                if len(forms) != d.downloads[n - 1]:
                    raise ValueError(
                        f"target {t}, server {n}: {len(forms)} answers, descriptor says {d.downloads[n - 1]}"
                    )
                for f in forms:
                    for v, _ in f:
                        if v.kind == "W":
                            ok = v.label in st.messages[n] and 0 <= v.index < d.L
                        elif v.kind == "R":
                            ok = v.label in st.randomness[n] and 0 <= v.index < rlen[v.label]
                        else:
                            ok = POOL in st.randomness[n] and 0 <= v.index < rlen[POOL]
                        if not ok:
                            raise ValueError(f"target {t}: server {n} cannot serve {v}")

    # coins -----------------------------------------------------------------

    def coin_domain_size(self, field: PrimeField) -> int:
        if self.unblinded:
            return 1
        return math.prod(math.factorial(g.size) for g in self.coin_groups)

    def identity_coins(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(range(g.size)) for g in self.coin_groups)

    def enumerate_coins(self, field: PrimeField) -> Iterator[tuple[tuple[int, ...], ...]]:
        if self.unblinded:
            yield self.identity_coins()
            return
        yield from itertools.product(*(itertools.permutations(range(g.size)) for g in self.coin_groups))

    def sample_coins(self, rng: random.Random, field: PrimeField) -> tuple[tuple[int, ...], ...]:
        if self.unblinded:
            return self.identity_coins()
        return tuple(tuple(rng.sample(range(g.size), g.size)) for g in self.coin_groups)

    def permutation_groups(self) -> Optional[tuple[CoinGroup, ...]]:
        return None if self.unblinded else self.coin_groups

    def _relabel(self, form: Form, coins: Sequence[Sequence[int]]) -> Form:
        out = []
        for v, c in form:
            g = self._group_of.get((v.kind, v.label))
            out.append((v if g is None else Var(v.kind, v.label, coins[g][v.index]), c))
        return tuple(sorted(out))

    def _relabelled(self, coins, target, n) -> tuple[list[Form], list[int]]:
        mapped = [self._relabel(f, coins) for f in self.templates[target][n]]
        order = sorted(range(len(mapped)), key=mapped.__getitem__)
        return mapped, order

    def make_queries(self, coins, target, field=None) -> dict[int, tuple[Form, ...]]:
        out = {}
        for n in self.descriptor.graph.servers:
            mapped, order = self._relabelled(coins, target, n)
            out[n] = tuple(mapped[i] for i in order)
        return out

    def answer(self, server, query, w, r, field) -> list:
        return [eval_form(f, w, r, field.q) for f in query]

    def answer_forms(self, server, query) -> list[Form]:
        return list(query)

    # decoding ----------------------------------------------------------------

    def template_rows(self, target) -> list[tuple[int, int, Form]]:
        return [
            (n, pos, f)
            for n in self.descriptor.graph.servers
            for pos, f in enumerate(self.templates[target][n])
        ]

    def decoder(self, target, q: int) -> np.ndarray:
        """Matrix D with D @ (template answers) = abstract symbols of the target."""
        key = (target, q)
        if key not in self._decoders:
            rows = self.template_rows(target)
            want = [Var("W", target, mu) for mu in range(self.descriptor.L)]
            cols = {v: i for i, v in enumerate(want)}
            for _, _, f in rows:
                for v, _ in f:
                    cols.setdefault(v, len(cols))
            m = np.zeros((len(rows), len(cols)), dtype=np.int64)
            for i, (_, _, f) in enumerate(rows):
                for v, c in f:
                    m[i, cols[v]] = c % q
            d = []
            for mu in range(self.descriptor.L):
                e = np.zeros(len(cols), dtype=np.int64)
                e[mu] = 1
                y = solve(m.T, e, q)
                if y is None:
                    raise DecodeFailure(f"symbol {mu} of message {target} is not recoverable from the answers")
                d.append(y)
            self._decoders[key] = np.array(d, dtype=np.int64).reshape(self.descriptor.L, len(rows))
        return self._decoders[key]

    def decode(self, answers, coins, target, field):
        q = field.q
        dmat = self.decoder(target, q)
        vals: list[Any] = []
        for n in self.descriptor.graph.servers:
            _, order = self._relabelled(coins, target, n)
            slot: list[Any] = [None] * len(order)
            for pos, i in enumerate(order):
                slot[i] = answers[n][pos]
            vals.extend(slot)
        stacked = np.stack([np.asarray(v, dtype=np.int64) for v in np.broadcast_arrays(*vals)]) if vals else None
        abstract = np.tensordot(dmat, stacked, axes=(1, 0)) % q
        g = self._group_of.get(("W", target))
        perm = coins[g] if g is not None else tuple(range(self.descriptor.L))
        out = np.empty_like(abstract)
        for mu in range(self.descriptor.L):
            out[perm[mu]] = abstract[mu]
        return out

    def with_templates(self, templates, *, name: Optional[str] = None, unblinded: Optional[bool] = None) -> "TableScheme":
        d = self.descriptor
        if name is not None:
            d = Descriptor(name, d.graph, d.mode, d.L, d.randomness, d.downloads, d.extra)
        return TableScheme(d, templates, self.coin_groups, unblinded=self.unblinded if unblinded is None else unblinded)


# ---------------------------------------------------------------------------
# transcripts


@dataclass(frozen=True)
class Transcript:
    scheme: str
    q: int
    target: Hashable
    coins: Any
    queries: dict[int, Any]
    answers: dict[int, tuple[int, ...]]
    decoded: tuple[int, ...]
    expected: tuple[int, ...]
    downloads: dict[int, int]

    @property
    def ok(self) -> bool:
        return self.decoded == self.expected

    def lines(self) -> list[str]:
        out = [f"{n}: {','.join(str(a) for a in ans)}" for n, ans in self.answers.items()]
        out.append(f"W_{label_text(self.target)} = {','.join(str(x) for x in self.decoded)}")
        return out

    def text(self) -> str:
        return "\n".join(self.lines()) + "\n"


def label_text(label: Hashable) -> str:
    if isinstance(label, tuple):
        return ",".join(str(x) for x in label)
    return str(label)


def _check_dims(desc: Descriptor, db: MessageDatabase, pool: RandomnessPool) -> None:
    if set(db.messages) != set(desc.messages):
        raise DimensionMismatch("database labels do not match the scheme's messages")
    for m, vec in db.messages.items():
        if len(vec) != desc.L:
            raise DimensionMismatch(f"message {m} has {len(vec)} symbols, scheme needs L={desc.L}")
    for lab, n in desc.randomness:
        if lab not in pool.vectors or len(pool.vectors[lab]) != n:
            raise DimensionMismatch(f"randomness {lab} must have {n} symbols")


def execute(scheme: Scheme, db: MessageDatabase, pool: RandomnessPool, coins, target, field: PrimeField) -> Transcript:
    """One protocol run; does not judge the outcome."""
    desc = scheme.descriptor
    _check_dims(desc, db, pool)
    queries = scheme.make_queries(coins, target, field)
    answers: dict[int, tuple[int, ...]] = {}
    for n in desc.graph.servers:
        w, r = local_view(desc, db, pool, n)
        answers[n] = tuple(int(a) for a in scheme.answer(n, queries[n], w, r, field))
        if len(answers[n]) != desc.downloads[n - 1]:
            raise DimensionMismatch(f"server {n} returned {len(answers[n])} symbols")
    decoded = tuple(int(x) for x in np.asarray(scheme.decode(answers, coins, target, field)).reshape(-1))
    expected = tuple(int(x) % field.q for x in db.messages[target])
    return Transcript(
        scheme.name, field.q, target, coins, queries, answers, decoded, expected,
        {n: len(a) for n, a in answers.items()},
    )


def run_transcript(scheme: Scheme, db: MessageDatabase, pool: RandomnessPool, coins, target, field: PrimeField) -> Transcript:
    """Run the protocol and insist on exact recovery of the target message."""
    tr = execute(scheme, db, pool, coins, target, field)
    if not tr.ok:
        raise DecodeFailure(f"{scheme.name}: decoded {tr.decoded}, expected W_{label_text(target)} = {tr.expected}")
    return tr


def rate_of(scheme: Scheme) -> Fraction:
    d = scheme.descriptor
    return Fraction(d.L, d.total_downloads)


def randomness_ratios(scheme: Scheme) -> tuple[Optional[Fraction], Fraction]:
    """(rho, rho_total); rho is None when randomness is not per-edge."""
    d = scheme.descriptor
    total = Fraction(d.total_randomness, d.L)
    if d.mode is Replication.GRAPH:
        lengths = {n for _, n in d.randomness}
        if len(lengths) != 1:
            raise ValueError("per-edge randomness vectors must have equal length")
        return Fraction(lengths.pop(), d.L), total
    return None, total


def enumerate_coins(scheme: Scheme, field: PrimeField) -> Iterator[Any]:
    return scheme.enumerate_coins(field)


# ---------------------------------------------------------------------------
# symbolic names used in answer-table dumps: a, b, c, ... for messages, s for pads

LETTERS = "abcdefghijklmnopqrstuvwxyz"


def message_letters(graph: AnyGraph) -> dict[Hashable, str]:
    msgs = graph.messages
    if len(msgs) > len(LETTERS):
        return {m: f"w{label_text(m).replace(',', '_')}_" for m in msgs}
    return {m: LETTERS[i] for i, m in enumerate(msgs)}


def var_name(v: Var, letters: Mapping[Hashable, str]) -> str:
    if v.kind == "W":
        return f"{letters[v.label]}{v.index + 1}"
    if v.kind == "R":
        return f"s{v.label}_{v.index + 1}"
    return f"s{v.index + 1}"


def format_form(form: Form, letters: Mapping[Hashable, str]) -> str:
    if not form:
        return "0"
    parts = []
    # message symbols first, then pads, as in hand-written answer tables
    order = {lab: i for i, lab in enumerate(letters)}
    for v, c in sorted(form, key=lambda t: (t[0].kind != "W", order.get(t[0].label, 0), t[0])):
        name = var_name(v, letters)
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        parts.append(f"{sign}{'' if mag == 1 else mag}{name}")
    s = "".join(parts)
    return s[1:] if s.startswith("+") else s


def format_table(scheme: TableScheme, target) -> list[str]:
    letters = message_letters(scheme.descriptor.graph)
    return [
        f"{n}: " + ", ".join(format_form(f, letters) for f in scheme.templates[target][n])
        for n in scheme.descriptor.graph.servers
    ]


def parse_form(text: str, letters: Mapping[Hashable, str]) -> Form:
    """Inverse of ``format_form``: sums such as ``a2+b2-s1_1`` or ``2a1-3s4``."""
    import re

    inv = {v: k for k, v in letters.items()}
    terms: list[Term] = []
    for sign, mag, name in re.findall(r"([+-]?)(\d*)([a-z]+\d+(?:_\d+)?)", text.replace(" ", "")):
        c = (-1 if sign == "-" else 1) * (int(mag) if mag else 1)
        m = re.fullmatch(r"s(\d+)_(\d+)", name)
        if m:
            terms.append((Var("R", int(m.group(1)), int(m.group(2)) - 1), c))
            continue
        m = re.fullmatch(r"s(\d+)", name)
        if m:
            terms.append((Var("S", POOL, int(m.group(1)) - 1), c))
            continue
        m = re.fullmatch(r"([a-z]+)(\d+)", name)
        if not m or m.group(1) not in inv:
            raise ValueError(f"unknown symbol {name!r}")
        terms.append((Var("W", inv[m.group(1)], int(m.group(2)) - 1), c))
    return make_form(terms)


def parse_table(lines: Iterable[str], graph: AnyGraph) -> dict[int, tuple[Form, ...]]:
    """Read ``server: cell, cell, ...`` rows into per-server forms."""
    letters = message_letters(graph)
    out: dict[int, tuple[Form, ...]] = {}
    for ln in lines:
        ln = ln.split("#", 1)[0].strip()
        if not ln:
            continue
        head, _, body = ln.partition(":")
        cells = [c.strip() for c in body.split(",") if c.strip()]
        out[int(head)] = tuple(parse_form(c, letters) for c in cells)
    return out


def is_multigraph(graph: AnyGraph) -> bool:
    return isinstance(graph, MultiGraphSpec)
