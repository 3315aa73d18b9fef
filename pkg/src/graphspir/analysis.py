"""Closed-form rates, capacity bounds and randomness ratios, in exact rationals.

Notation: N servers, K (or K' per multiplicity) messages, a base PIR scheme
with sub-packetisation L' and D' downloads satisfying the symmetric retrieval
property, and for multigraphs a = 2 - 2^(1-r).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .graphs import GraphSpec, build_family, is_path, is_regular
from .pir_base import comb

F = Fraction


def _a(r: int) -> Fraction:
    if r < 1:
        raise ValueError("multiplicity r must be at least 1")
    return 2 - F(2, 2**r)


@dataclass(frozen=True)
class RateSummary:
    family: str
    N: int
    r: int
    setting: str
    achieved: Optional[Fraction]
    rho: Optional[Fraction] = None
    rho_total: Optional[Fraction] = None
    lower: Optional[Fraction] = None
    upper: Optional[Fraction] = None
    exact: bool = False
    rho_total_lower: Optional[Fraction] = None
    notes: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        if self.lower is not None and self.achieved is not None and self.lower > self.achieved:
            raise AssertionError(f"{self.family}: lower bound above the achieved rate")
        if self.upper is not None and self.achieved is not None and self.achieved > self.upper:
            raise AssertionError(f"{self.family}: achieved rate above the upper bound")

    @property
    def capacity(self) -> Optional[Fraction]:
        return self.achieved if self.exact else None


# ---------------------------------------------------------------------------
# graph-replicated randomness


def gr_capacity(graph: GraphSpec) -> tuple[Fraction, bool, Fraction]:
    """(1/N, exact?, rho*). The general scheme gives 1/N everywhere; it is the capacity on paths and regular graphs."""
    exact = is_path(graph) or is_regular(graph) is not None
    return F(1, graph.N), exact, F(1)


# ---------------------------------------------------------------------------
# fully-replicated randomness


def srp_parameters(sub_len: int, n: int) -> tuple[int, int, int]:
    if sub_len % 2:
        raise ValueError(f"L' = {sub_len} is odd; the symmetric retrieval property needs it even")
    half = sub_len // 2
    ell = math.lcm(half, n - 1)
    return ell, ell // half, ell // (n - 1)


def fr_rate_from_srp(sub_len: int, downloads: int, n: int, k: int) -> tuple[Fraction, Fraction]:
    """Rate L'x/(D'x + Ny) and rho_total (K-1)/2 + Ny/(L'x)."""
    _, x, y = srp_parameters(sub_len, n)
    return F(sub_len * x, downloads * x + n * y), F(k - 1, 2) + F(n * y, sub_len * x)


def pir_capacity(family: str, n: int) -> Optional[Fraction]:
    """Known PIR capacities: 2/N on paths, 2/(N+1) on cycles."""
    if family == "path":
        return F(2, n)
    if family == "cycle":
        return F(2, n + 1)
    return None


def fr_bounds(family: str, n: int) -> tuple[Fraction, Fraction, Fraction, Fraction]:
    """(achievable rate, rate upper bound, achievable rho_total, rho*_total lower bound)."""
    if n < 3:
        raise ValueError("fully-replicated bounds need N >= 3")
    if family == "path":
        return (
            F(2) / (n + F(n, n - 1)),
            F(2) / (n + F(2, n - 1)),
            F(n - 2, 2) + F(n, 2 * (n - 1)),
            F(n - 2, 2) + F(1, n - 1),
        )
    if family == "cycle":
        return (
            F(2) / (n + 1 + F(n, n - 1)),
            F(2) / (n + 1 + F(1, n - 1)),
            F(n - 1, 2) + F(n, 2 * (n - 1)),
            F(n - 1, 2) + F(1, 2 * (n - 1)),
        )
    raise ValueError(f"no fully-replicated bounds for family {family!r}")


def fr_capacity_p3() -> tuple[Fraction, Fraction]:
    """C_FR(P3) and rho*_total(P3)."""
    return F(1, 2), F(1)


def star_rate_t(n: int, t: int) -> tuple[Fraction, Fraction]:
    """(rate, rho_total) of the t-sum star scheme with shared randomness."""
    if not 2 <= t <= n - 1:
        raise ValueError(f"t must lie in [2, {n - 1}]")
    sub = comb(n - 2, t - 1) + comb(n - 3, t - 2)
    dl = n * comb(n - 3, t - 2) + comb(n - 1, t)
    h = comb(n - 3, t - 2) + (t - 1) * comb(n - 1, t)
    return F(sub, dl), F(h, sub)


def star_fr_rate(n: int) -> tuple[int, Fraction, Fraction]:
    """Best t (smallest on ties), its rate and rho_total."""
    if n < 3:
        raise ValueError("star needs N >= 3")
    best = max(range(2, n), key=lambda t: (star_rate_t(n, t)[0], -t))
    rate, rho = star_rate_t(n, best)
    if not rate > F(2) / (n + F(n, n - 1)):
        raise AssertionError("star scheme should beat the generic shared-pool conversion")
    return best, rate, rho


# ---------------------------------------------------------------------------
# multigraphs


def fr_multigraph_rate_from_srp(sub_len: int, downloads: int, n: int, k_base: int, r: int) -> tuple[Fraction, Fraction]:
    """Rate 2^(r-1) L'x / ((2^r - 1) D'x + Ny) and rho_total of the shared-pool lift."""
    _, x, y = srp_parameters(sub_len, n)
    L = 2 ** (r - 1) * sub_len * x
    h = n * y + F(x * sub_len, 2) * ((2**r - 1) * k_base - 1)
    return F(L, (2**r - 1) * downloads * x + n * y), h / L


def fr_multigraph_closed_form(family: str, n: int, r: int) -> tuple[Fraction, Fraction]:
    """Achievable (rate, rho_total) on P_N^(r) or C_N^(r)."""
    a = _a(r)
    b = 2 - a  # = 2^(1-r)
    if family == "path":
        return F(2) / (n * a + F(n, n - 1) * b), F(1, n - 1) + F(n * (n - 2), 2 * (n - 1)) * a
    if family == "cycle":
        return F(2) / ((n + 1) * a + F(n, n - 1) * b), F(1, n - 1) + F(n * n - n - 1, 2 * (n - 1)) * a
    raise ValueError(f"no closed form for family {family!r}")


def fr_multigraph_upper(family: str, n: int, r: int) -> Fraction:
    a = _a(r)
    b = 2 - a
    if family == "path":
        return F(2) / (n * a + F(n, n - 1) * b - (2 - F(n, n - 1)) * a)
    if family == "cycle":
        return F(2) / ((n + 1) * a + F(n, n - 1) * b - a)
    raise ValueError(f"no upper bound for family {family!r}")


def fr_multigraph_rho_lower(family: str, n: int, r: int, printed: bool = False) -> Fraction:
    """Lower bound on rho*_total over G^(r).

    The path bound is 1/(N-1) + (N-2)a/2, which equals 1/U - 1 for the rate
    upper bound U and reduces to the simple-graph bound at r = 1. With
    ``printed=True`` the alternative expression with a -(3/2)a correction is
    returned instead; it does not reduce correctly at r = 1.
    """
    a = _a(r)
    if family == "path":
        if printed:
            return F(1, n - 1) + F(n * (n - 2), 2 * (n - 1)) * a - F(3, 2) * a
        return F(1, n - 1) + F(n - 2, 2) * a
    if family == "cycle":
        return F(1, n - 1) + F(n * n - n - 1, 2 * (n - 1)) * a - a / 2
    raise ValueError(f"no randomness bound for family {family!r}")


def _family_graph(family: str, n: int) -> GraphSpec:
    return build_family(family, n)


def multigraph_rates(family: str, n: int, r: int = 1, setting: str = "gr") -> RateSummary:
    """Rates and bounds for ``family`` on n servers with multiplicity r."""
    if setting == "gr":
        g = _family_graph(family, n)
        low, exact, rho = gr_capacity(g)
        notes = ("capacity" if exact else "lower bound only",)
        return RateSummary(
            family, n, r, "gr", achieved=low, rho=rho, rho_total=F(g.K), lower=low,
            upper=low if exact else None, exact=exact, rho_total_lower=None, notes=notes,
        )
    if setting != "fr":
        raise ValueError(f"unknown setting {setting!r}")
    if family in ("path", "cycle"):
        if n < 3:
            raise ValueError("fully-replicated bounds need N >= 3")
        rate, rho_t = fr_multigraph_closed_form(family, n, r)
        upper = fr_multigraph_upper(family, n, r)
        rho_low = fr_multigraph_rho_lower(family, n, r)
        notes: tuple[str, ...] = ()
        if family == "path" and n == 3 and r == 1:
            cap, rho_star = fr_capacity_p3()
            notes = (f"capacity {cap} with rho*_total {rho_star} via the star scheme (t=2)",)
        return RateSummary(
            family, n, r, "fr", achieved=rate, rho_total=rho_t, lower=rate, upper=upper, exact=False,
            rho_total_lower=rho_low, notes=notes,
        )
    if family == "star" and r == 1:
        t, rate, rho_t = star_fr_rate(n)
        return RateSummary(family, n, r, "fr", achieved=rate, rho_total=rho_t, lower=rate, notes=(f"t={t}",))
    raise ValueError(f"no fully-replicated result for family {family!r} with r={r}")


# ---------------------------------------------------------------------------
# summary table of rates by graph family


@dataclass(frozen=True)
class Table1Row:
    graph: str
    pir: str
    general: str
    derived: str
    capacity: tuple[bool, bool, bool]


TABLE1 = (
    Table1Row("Path P_N", "2/N", "1/N", "1/N", (True, True, True)),
    Table1Row("Cyclic C_N", "2/(N+1)", "1/N", "1/(N+1)", (True, True, False)),
    Table1Row("Complete K_N", ">= (4/3 - o(1))/N", "1/N", ">= (2/3 - o(1))/N", (False, True, False)),
    Table1Row("Star S_N", "2/N", "1/N", "1/N", (False, False, False)),
)


def table1_values(n: int) -> dict[str, tuple[Fraction, Fraction, Fraction]]:
    """Numeric values at N; the complete-graph entries keep only the non-o(1) part."""
    if n < 3:
        raise ValueError("summary-table families need N >= 3")
    return {
        "Path P_N": (F(2, n), F(1, n), F(1, n)),
        "Cyclic C_N": (F(2, n + 1), F(1, n), F(1, n + 1)),
        "Complete K_N": (F(4, 3 * n), F(1, n), F(2, 3 * n)),
        "Star S_N": (F(2, n), F(1, n), F(1, n)),
    }


def table1(n: Optional[int] = None) -> list[tuple[str, ...]]:
    head = ("graph", "PIR", "general SPIR", "PIR-derived SPIR")
    rows = [head]
    vals = table1_values(n) if n is not None else None
    for row in TABLE1:
        cells = [c + ("*" if cap else "") for c, cap in zip((row.pir, row.general, row.derived), row.capacity)]
        if vals is not None:
            cells = [f"{c} = {v}" for c, v in zip(cells, vals[row.graph])]
        rows.append((row.graph, *cells))
    return rows


# ---------------------------------------------------------------------------
# output


def _cell(v) -> str:
    if v is None:
        return "-"
    return str(v)


def summary_rows(summaries: list[RateSummary]) -> list[tuple[str, ...]]:
    head = ("family", "N", "r", "setting", "achieved", "lower", "upper", "exact", "rho", "rho_total", "rho_total_lower", "notes")
    rows = [head]
    for s in summaries:
        rows.append(
            (
                s.family, str(s.N), str(s.r), s.setting, _cell(s.achieved), _cell(s.lower), _cell(s.upper),
                "yes" if s.exact else "no", _cell(s.rho), _cell(s.rho_total), _cell(s.rho_total_lower),
                ";".join(s.notes) or "-",
            )
        )
    return rows


def render(rows: list[tuple[str, ...]], fmt: str = "text") -> str:
    if fmt == "tsv":
        return "\n".join("\t".join(r) for r in rows) + "\n"
    if fmt != "text":
        raise ValueError(f"unknown format {fmt!r}")
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows) + "\n"
