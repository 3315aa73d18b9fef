"""Loader for the hand-transcribed answer tables in tests/golden/."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from graphspir.converters import fr_from_pir, fr_multigraph_from_pir, fr_star, gr_from_pir, gr_multigraph_from_pir
from graphspir.graphs import MultiGraphSpec, build_family
from graphspir.pir_base import base_scheme_for, pir_s4, pir_star_simple
from graphspir.protocol import parse_table

GOLDEN = Path(__file__).parent / "golden"


@dataclass
class Golden:
    name: str
    scheme: str
    family: str
    n: int
    r: int = 1
    t: int = 0
    tables: dict = field(default_factory=dict)

    def graph(self):
        g = build_family(self.family, self.n)
        return g if self.r == 1 else MultiGraphSpec(g, self.r)

    def build(self):
        g = build_family(self.family, self.n)
        if self.scheme == "gr-from-pir":
            return gr_from_pir(pir_s4() if (self.family, self.n) == ("star", 4) else base_scheme_for(g))
        if self.scheme == "fr-from-pir":
            base = pir_star_simple(self.n, g) if self.family == "star" else base_scheme_for(g)
            return fr_from_pir(base, g)
        if self.scheme == "fr-star":
            return fr_star(self.n, self.t, g)
        if self.scheme == "gr-multigraph":
            return gr_multigraph_from_pir(base_scheme_for(g), self.r)
        if self.scheme == "fr-multigraph":
            return fr_multigraph_from_pir(base_scheme_for(g), g, self.r)
        raise ValueError(self.scheme)


def load(name: str) -> Golden:
    path = GOLDEN / name
    meta: dict = {}
    sections: dict = {}
    current = None
    for raw in path.read_text().splitlines():
        ln = raw.split("#", 1)[0].strip()
        if not ln:
            continue
        if ln.startswith("[target"):
            parts = tuple(int(x) for x in ln[len("[target"):-1].split(","))
            current = parts[0] if len(parts) == 1 else parts
            sections[current] = []
        elif current is None:
            key, _, val = ln.partition(" ")
            meta[key] = val.strip()
        else:
            sections[current].append(ln)
    family, n = meta["graph"].split()
    g = Golden(name, meta["scheme"], family, int(n), int(meta.get("r", 1)), int(meta.get("t", 0)))
    graph = g.graph()
    g.tables = {t: parse_table(lines, graph) for t, lines in sections.items()}
    return g


def names() -> list[str]:
    return sorted(p.name for p in GOLDEN.glob("*.txt"))
