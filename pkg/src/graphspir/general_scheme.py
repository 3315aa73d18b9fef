"""The general graph-replicated SPIR scheme: rate 1/N with one pad symbol per edge.

The user draws h uniformly from F_q^K and forms H = I(G) diag(h), where I(G)
is the signed incidence matrix. Server n receives row n of H with the zeros
dropped, and one endpoint of the desired edge additionally receives the unit
vector e_m marking the desired message. Each server returns a single symbol,
Q_n . W_n + sum over its edges of I(n, l) R_l. Every incidence column sums to
zero, so adding all N answers cancels each h_l W_l and each R_l and leaves W_k.

On a multigraph the query matrix is the block row [I diag(h_1) ... I diag(h_r)]
and each bundle still contributes a single pad R_l.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Hashable, Iterator, Mapping, Optional, Sequence

import numpy as np

from .field import PrimeField
from .graphs import AnyGraph, GraphSpec, MultiGraphSpec, Replication, signed_incidence
from .protocol import Descriptor, Form, Scheme, Var, make_form


@dataclass(frozen=True)
class GeneralSchemeCoins:
    """One coefficient per message, in the graph's message order."""

    h: tuple[int, ...]


def _base(graph: AnyGraph) -> GraphSpec:
    return graph.base if isinstance(graph, MultiGraphSpec) else graph


def desired_server(graph: AnyGraph, target: Hashable, endpoint: str = "high") -> int:
    if target not in graph.messages:
        raise KeyError(f"unknown target {target!r}")
    i, j = graph.endpoints(graph.bundle_of(target))
    return j if endpoint == "high" else i


def gs_make_queries(
    graph: AnyGraph,
    coins: GeneralSchemeCoins,
    target: Hashable,
    field: PrimeField,
    endpoint: str = "high",
    incidence: Optional[np.ndarray] = None,
) -> dict[int, tuple[int, ...]]:
    """Row n of H (zeros dropped), plus e_m at the chosen endpoint of the target."""
    msgs = graph.messages
    if len(coins.h) != len(msgs):
        raise ValueError(f"need {len(msgs)} coefficients, got {len(coins.h)}")
    inc = signed_incidence(_base(graph)).as_array() if incidence is None else incidence
    pos = {m: i for i, m in enumerate(msgs)}
    j = desired_server(graph, target, endpoint)
    out = {}
    for n in graph.servers:
        row = []
        for m in graph.messages_at(n):
            v = inc[n - 1, graph.bundle_of(m) - 1] * coins.h[pos[m]]
            if n == j and m == target:
                v += 1
            row.append(int(v) % field.q)
        out[n] = tuple(row)
    return out


def gs_answer(
    graph: AnyGraph,
    n: int,
    query: Sequence[int],
    w: Mapping,
    r: Mapping,
    field: PrimeField,
    incidence: Optional[np.ndarray] = None,
    pads: bool = True,
):
    """Q_n . W_n + sum_{l in F_n} I(n, l) R_l for single-symbol messages."""
    msgs = graph.messages_at(n)
    if len(query) != len(msgs):
        raise ValueError(f"server {n} expects a query of length {len(msgs)}, got {len(query)}")
    inc = signed_incidence(_base(graph)).as_array() if incidence is None else incidence
    total = 0
    for coef, m in zip(query, msgs):
        total = total + int(coef) * w[m][0]
    if pads:
        for l in graph.edges_at(n):
            total = total + int(inc[n - 1, l - 1]) * r[l][0]
    return total % field.q


def gs_decode(answers: Mapping[int, Sequence], field: PrimeField):
    """The sum of all answers."""
    total = 0
    for a in answers.values():
        total = total + a[0]
    return total % field.q


class GeneralScheme(Scheme):
    """The general scheme on a simple graph or a uniform multigraph.

    ``endpoint`` picks which replica of the desired message receives e_m.
    ``drop_pads``, ``flip`` and ``unblinded`` exist only to build deliberately
    broken variants for the verifier's fault-detection tests.
    """

    def __init__(
        self,
        graph: AnyGraph,
        endpoint: str = "high",
        *,
        drop_pads: bool = False,
        flip: Optional[tuple[int, int]] = None,
        unblinded: bool = False,
    ) -> None:
        if endpoint not in ("high", "low"):
            raise ValueError("endpoint must be 'high' or 'low'")
        self.graph = graph
        self.endpoint = endpoint
        self.drop_pads = drop_pads
        self.unblinded = unblinded
        inc = signed_incidence(_base(graph)).as_array()
        if flip is not None:
            n, k = flip
            inc[n - 1, k - 1] = -inc[n - 1, k - 1]
        self.flip = flip
        self.incidence = inc
        tags = [t for t, on in (("no-pads", drop_pads), ("flipped", flip), ("unblinded", unblinded)) if on]
        name = f"general({graph.name})" + (f"[{','.join(tags)}]" if tags else "")
        self.descriptor = Descriptor(
            name=name,
            graph=graph,
            mode=Replication.GRAPH,
            L=1,
            randomness=tuple((l, 1) for l in graph.bundles),
            downloads=(1,) * graph.N,
            extra=(("endpoint", endpoint),),
        )

    def coin_domain_size(self, field: PrimeField) -> int:
        return field.q ** len(self.graph.messages)

    def enumerate_coins(self, field: PrimeField) -> Iterator[GeneralSchemeCoins]:
        for h in itertools.product(range(field.q), repeat=len(self.graph.messages)):
            yield GeneralSchemeCoins(h)

    def sample_coins(self, rng: random.Random, field: PrimeField) -> GeneralSchemeCoins:
        return GeneralSchemeCoins(tuple(rng.randrange(field.q) for _ in self.graph.messages))

    def make_queries(self, coins, target, field):
        qs = gs_make_queries(self.graph, coins, target, field, self.endpoint, self.incidence)
        if self.unblinded:
            # the marker travels alongside the vector: the server now sees m
            j = desired_server(self.graph, target, self.endpoint)
            return {n: (v, target if n == j else None) for n, v in qs.items()}
        return qs

    def _vector(self, query):
        return query[0] if self.unblinded else query

    def answer(self, server, query, w, r, field):
        return [gs_answer(self.graph, server, self._vector(query), w, r, field, self.incidence, not self.drop_pads)]

    def answer_forms(self, server, query) -> list[Form]:
        vec = self._vector(query)
        terms = [(Var("W", m, 0), int(c)) for c, m in zip(vec, self.graph.messages_at(server))]
        if not self.drop_pads:
            terms += [(Var("R", l, 0), int(self.incidence[server - 1, l - 1])) for l in self.graph.edges_at(server)]
        return [make_form(terms)]

    def decode(self, answers, coins, target, field):
        return np.asarray([gs_decode(answers, field)])
