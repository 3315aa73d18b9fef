"""Storage graphs: servers are vertices, messages are edges.

Vertices are numbered 1..N and edges carry labels 1..K' in the order they were
given. A multigraph replaces every edge by ``r`` parallel copies; its messages
are labelled ``(k, t)`` and listed t-major, i.e. ``(1,1), (2,1), ..., (K',1),
(1,2), ...`` which is also the column order of the stacked query matrix.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Hashable, Optional, Union

import networkx as nx
import numpy as np


class Replication(str, enum.Enum):
    """Where the servers' common randomness lives."""

    GRAPH = "gr"  # R_k only at the two endpoints of edge (bundle) k
    FULL = "fr"  # every server holds all of R
    NONE = "none"  # plain PIR, no server randomness


@dataclass(frozen=True)
class GraphSpec:
    n_servers: int
    edges: tuple[tuple[int, int], ...]
    name: str = "custom"

    def __post_init__(self) -> None:
        if self.n_servers < 2:
            raise ValueError("a storage graph needs at least 2 servers")
        norm = []
        for e in self.edges:
            i, j = (int(v) for v in e)
            if i == j:
                raise ValueError(f"self-loop at vertex {i}")
            if not (1 <= i <= self.n_servers and 1 <= j <= self.n_servers):
                raise ValueError(f"edge {e} has a vertex outside 1..{self.n_servers}")
            norm.append((min(i, j), max(i, j)))
        if len(set(norm)) != len(norm):
            raise ValueError("repeated edge; use lift_multigraph for parallel edges")
        object.__setattr__(self, "edges", tuple(norm))
        g = nx.Graph()
        g.add_nodes_from(range(1, self.n_servers + 1))
        g.add_edges_from(norm)
        if not nx.is_connected(g):
            raise ValueError("storage graph must be connected")

    @property
    def N(self) -> int:
        return self.n_servers

    @property
    def K(self) -> int:
        return len(self.edges)

    @property
    def messages(self) -> tuple[int, ...]:
        return tuple(range(1, self.K + 1))

    @property
    def bundles(self) -> tuple[int, ...]:
        return self.messages

    @property
    def servers(self) -> range:
        return range(1, self.N + 1)

    def endpoints(self, k: int) -> tuple[int, int]:
        """(lower, higher) endpoint of edge k."""
        return self.edges[k - 1]

    def edges_at(self, n: int) -> tuple[int, ...]:
        """Labels of the edges incident to server n, ascending (the set F_n)."""
        return tuple(k for k, e in enumerate(self.edges, start=1) if n in e)

    def bundle_of(self, label: Hashable) -> int:
        return int(label)  # type: ignore[arg-type]

    def messages_at(self, n: int) -> tuple[int, ...]:
        return self.edges_at(n)

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self.servers)
        for k, (i, j) in enumerate(self.edges, start=1):
            g.add_edge(i, j, label=k)
        return g


@dataclass(frozen=True)
class MultiGraphSpec:
    """G^(r): every edge of ``base`` replaced by r parallel edges."""

    base: GraphSpec
    r: int

    def __post_init__(self) -> None:
        if self.r < 1:
            raise ValueError("multiplicity r must be at least 1")

    @property
    def name(self) -> str:
        return f"{self.base.name}^({self.r})"

    @property
    def N(self) -> int:
        return self.base.N

    @property
    def K(self) -> int:
        return self.base.K * self.r

    @property
    def servers(self) -> range:
        return self.base.servers

    @property
    def messages(self) -> tuple[tuple[int, int], ...]:
        return tuple((k, t) for t in range(1, self.r + 1) for k in self.base.messages)

    @property
    def bundles(self) -> tuple[int, ...]:
        return self.base.messages

    def endpoints(self, k: int) -> tuple[int, int]:
        return self.base.endpoints(k)

    def edges_at(self, n: int) -> tuple[int, ...]:
        return self.base.edges_at(n)

    def bundle_of(self, label: Hashable) -> int:
        return label[0]  # type: ignore[index]

    def messages_at(self, n: int) -> tuple[tuple[int, int], ...]:
        f = self.base.edges_at(n)
        return tuple((k, t) for t in range(1, self.r + 1) for k in f)


AnyGraph = Union[GraphSpec, MultiGraphSpec]


def build_family(kind: str, n: int) -> GraphSpec:
    """Canonical path, cycle, complete or star graph on n servers."""
    kind = kind.lower()
    if kind == "path":
        if n < 2:
            raise ValueError("path needs N >= 2")
        edges = [(k, k + 1) for k in range(1, n)]
    elif kind == "cycle":
        if n < 3:
            raise ValueError("cycle needs N >= 3")
        edges = [(k, k + 1) for k in range(1, n)] + [(1, n)]
    elif kind == "star":
        if n < 3:
            raise ValueError("star needs N >= 3")
        edges = [(k, n) for k in range(1, n)]
    elif kind == "complete":
        if n < 2:
            raise ValueError("complete graph needs N >= 2")
        edges = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
    elif kind == "custom":
        raise ValueError("custom graphs are built from an edge list; use parse_edge_list")
    else:
        raise ValueError(f"unknown graph family {kind!r}")
    prefix = {"path": "P", "cycle": "C", "star": "S", "complete": "K"}[kind]
    return GraphSpec(n, tuple(edges), name=f"{prefix}{n}")


def m_graph() -> GraphSpec:
    """The four-server, four-message example graph shaped like the letter M."""
    return GraphSpec(4, ((1, 2), (1, 3), (2, 3), (3, 4)), name="M")


def lift_multigraph(g: GraphSpec, r: int) -> MultiGraphSpec:
    return MultiGraphSpec(g, r)


@dataclass(frozen=True)
class SignedIncidence:
    """Vertex-by-edge matrix: +1 at the lower endpoint, -1 at the higher."""

    matrix: tuple[tuple[int, ...], ...]

    def entry(self, n: int, k: int) -> int:
        return self.matrix[n - 1][k - 1]

    def as_array(self) -> np.ndarray:
        return np.array(self.matrix, dtype=np.int64)

    def column_sums(self) -> tuple[int, ...]:
        return tuple(int(s) for s in self.as_array().sum(axis=0))


def signed_incidence(g: GraphSpec) -> SignedIncidence:
    m = [[0] * g.K for _ in range(g.N)]
    for k, (i, j) in enumerate(g.edges):
        m[i - 1][k] = 1
        m[j - 1][k] = -1
    return SignedIncidence(tuple(tuple(row) for row in m))


@dataclass(frozen=True)
class StorageMap:
    mode: Replication
    messages: dict[int, tuple] = field(default_factory=dict)
    randomness: dict[int, tuple] = field(default_factory=dict)

    def holds_message(self, n: int, label: Hashable) -> bool:
        return label in self.messages[n]

    def holds_randomness(self, n: int, label: Hashable) -> bool:
        return label in self.randomness[n]


POOL = 0  # label of the single fully-replicated randomness vector


def storage_map(g: AnyGraph, mode: Replication | str) -> StorageMap:
    mode = Replication(mode)
    msgs = {n: g.messages_at(n) for n in g.servers}
    if mode is Replication.GRAPH:
        rand = {n: g.edges_at(n) for n in g.servers}
    elif mode is Replication.FULL:
        rand = {n: (POOL,) for n in g.servers}
    else:
        rand = {n: () for n in g.servers}
    return StorageMap(mode, msgs, rand)


def degree(g: AnyGraph, n: int) -> int:
    return len(g.edges_at(n))


def is_regular(g: AnyGraph) -> Optional[int]:
    """The common degree d if every vertex has degree d, else None."""
    ds = {degree(g, n) for n in g.servers}
    return ds.pop() if len(ds) == 1 else None


def is_path(g: GraphSpec) -> bool:
    degs = sorted(degree(g, n) for n in g.servers)
    return g.K == g.N - 1 and degs == [1, 1] + [2] * (g.N - 2)


def star_center(g: GraphSpec) -> Optional[int]:
    """The vertex touching every edge, when the graph is a star (N >= 3)."""
    if g.N < 3 or g.K != g.N - 1:
        return None
    for n in g.servers:
        if degree(g, n) == g.K:
            return n
    return None


def parse_edge_list(text: str, name: str = "custom") -> GraphSpec:
    """First non-blank line is N, then one ``i j`` pair per line (1-indexed)."""
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ValueError("empty edge list")
    try:
        n = int(lines[0])
        edges = []
        for ln in lines[1:]:
            a, b = ln.split()
            edges.append((int(a), int(b)))
    except ValueError as exc:
        raise ValueError(f"malformed edge list: {exc}") from None
    return GraphSpec(n, tuple(edges), name=name)


def load_edge_list(path: str | Path) -> GraphSpec:
    p = Path(path)
    return parse_edge_list(p.read_text(), name=p.stem)


def dump_edge_list(g: GraphSpec) -> str:
    return "\n".join([str(g.N)] + [f"{i} {j}" for i, j in g.edges]) + "\n"
