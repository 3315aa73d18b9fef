"""Acceptance suite: one PASS/FAIL line per criterion.

Run under pytest (the lines are repeated in the terminal summary) or directly:

    python3 tests/test_acceptance.py
"""

from __future__ import annotations

import sys
import time
from fractions import Fraction as F
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import goldens  # noqa: E402
from graphspir import analysis as A  # noqa: E402
from graphspir.converters import (  # noqa: E402
    fr_from_pir,
    fr_multigraph_from_pir,
    fr_star,
    gr_from_pir,
    gr_multigraph_from_pir,
)
from graphspir.faults import drop_pads, flip_sign, unblind  # noqa: E402
from graphspir.general_scheme import GeneralScheme  # noqa: E402
from graphspir.graphs import MultiGraphSpec, build_family, m_graph  # noqa: E402
from graphspir.pir_base import pir_c3, pir_p3, pir_s4, pir_star_simple  # noqa: E402
from graphspir.protocol import rate_of, randomness_ratios  # noqa: E402
from graphspir.verifier import (  # noqa: E402
    check_db_privacy_linear,
    check_user_privacy,
    check_user_privacy_joint,
    engines_agree,
    j_sets,
    tables_match,
    verify_all,
)

P3 = build_family("path", 3)
C3 = build_family("cycle", 3)
S4 = build_family("star", 4)
GENERAL_GRAPHS = [P3, C3, S4, m_graph(), MultiGraphSpec(P3, 2)]

RESULTS: list[str] = []


class Check:
    """Collects sub-results for one criterion."""

    def __init__(self) -> None:
        self.failures: list[str] = []
        self.notes: list[str] = []

    def expect(self, ok: bool, what: str) -> None:
        if not ok:
            self.failures.append(what)

    def note(self, text: str) -> None:
        self.notes.append(text)


def _report(num: int, title: str, budget_s: float, body) -> tuple[bool, str]:
    c = Check()
    t0 = time.perf_counter()
    body(c)
    dt = time.perf_counter() - t0
    c.expect(dt < budget_s, f"took {dt:.1f}s, budget {budget_s:.0f}s")
    ok = not c.failures
    detail = "; ".join(c.failures if c.failures else c.notes)
    line = f"{'PASS' if ok else 'FAIL'} criterion {num}: {title} [{dt:.1f}s] {detail}"
    RESULTS.append(line)
    print(line)
    return ok, line


def _verified(c: Check, scheme, q: int) -> None:
    rep = verify_all(scheme, q)
    c.expect(rep.passed, f"{scheme.name} q={q} verify_all failed")


def _golden(c: Check, name: str) -> None:
    g = goldens.load(name)
    s = g.build()
    for t, table in g.tables.items():
        c.expect(tables_match(s, t, table), f"{name} target {t} differs")


# ---------------------------------------------------------------------------


def body_1(c: Check) -> None:
    engines = 0
    for g in GENERAL_GRAPHS:
        s = GeneralScheme(g)
        c.expect(rate_of(s) == F(1, g.N), f"{g.name} rate {rate_of(s)}")
        c.expect(randomness_ratios(s)[0] == 1, f"{g.name} rho")
        for q in (2, 3):
            rep = verify_all(s, q)
            c.expect(rep.passed, f"{g.name} q={q} verify_all failed")
            if engines_agree(rep) is not None:
                engines += 1
    c.note(f"rate 1/N and rho=1 on {len(GENERAL_GRAPHS)} graphs; 10 verifications, {engines} with both engines")


def body_2(c: Check) -> None:
    for name in ("gr_p3.txt", "gr_c3.txt", "gr_s4.txt"):
        _golden(c, name)
    for base, rate in ((pir_p3(), F(1, 3)), (pir_c3(), F(1, 4)), (pir_s4(), F(1, 4))):
        s = gr_from_pir(base)
        c.expect(rate_of(s) == rate, f"{s.name} rate {rate_of(s)}")
        _verified(c, s, 2)
    c.note("three answer tables match; rates 1/3, 1/4, 1/4; all verify at q=2")


def body_3(c: Check) -> None:
    cases = [
        (fr_from_pir(pir_p3()), F(4, 9), 5, F(5, 4)),
        (fr_from_pir(pir_c3()), F(4, 11), None, F(7, 4)),
        (fr_from_pir(pir_star_simple(4), S4), F(3, 8), None, F(5, 3)),
        (fr_star(4, 2), F(3, 7), 4, F(4, 3)),
    ]
    t, _, _ = A.star_fr_rate(3)
    cases.append((fr_star(3, t, P3), F(1, 2), None, F(1)))
    c.expect(A.fr_capacity_p3() == (F(1, 2), F(1)), "C_FR(P3)")
    used = []
    for s, rate, h, rho in cases:
        d = s.descriptor
        c.expect(rate_of(s) == rate, f"{s.name} rate {rate_of(s)} != {rate}")
        c.expect(randomness_ratios(s)[1] == rho, f"{s.name} rho_total {randomness_ratios(s)[1]} != {rho}")
        if h is not None:
            c.expect(d.total_randomness == h, f"{s.name} H(R) {d.total_randomness}")
        for tgt in s.targets:
            _, complete = j_sets(d, tgt)
            c.expect(complete, f"{s.name} J enumeration incomplete")
        lin = check_db_privacy_linear(s, 2)
        c.expect(all(r.passed for r in lin), f"{s.name} linear db privacy")
        up = check_user_privacy(s, 2)
        c.expect(up.passed, f"{s.name} user privacy")
        used.append(f"{s.name}:{up.engine}")
    c.note("rates and pool sizes exact; all J pass; user privacy " + ", ".join(used))


def body_4(c: Check) -> None:
    gr = gr_multigraph_from_pir(pir_p3(), 2)
    c.expect(rate_of(gr) == F(1, 3) == rate_of(gr_from_pir(pir_p3())), f"gr multigraph rate {rate_of(gr)}")
    _golden(c, "gr_p3_r2.txt")
    _verified(c, gr, 2)
    fr = fr_multigraph_from_pir(pir_p3(), P3, 2)
    d = fr.descriptor
    c.expect(d.L == 8, f"L={d.L}")
    c.expect(d.total_randomness == 13, f"H(R)={d.total_randomness}")
    c.expect(rate_of(fr) == F(8, 21), f"rate {rate_of(fr)}")
    c.expect(A.fr_multigraph_closed_form("path", 3, 2)[0] == F(8, 21), "closed form")
    _golden(c, "fr_p3_r2.txt")
    _verified(c, fr, 2)
    c.note("gr rate 1/3; fr L=8 H(R)=13 rate 8/21 = closed form; both tables match; both verify at q=2")


def body_5(c: Check) -> None:
    count = 0
    for n in range(3, 13):
        for fam in ("path", "cycle"):
            ach, up, rho, rho_low = A.fr_bounds(fam, n)
            c.expect(1 / ach == 1 / A.pir_capacity(fam, n) + F(n, 2 * (n - 1)), f"{fam} N={n} reciprocal")
            c.expect(rho == 1 / ach - 1, f"{fam} N={n} rho_total")
            c.expect(rho_low <= rho and ach <= up, f"{fam} N={n} sandwich")
            for r in (1, 2, 3):
                s = A.multigraph_rates(fam, n, r, "fr")
                c.expect(s.lower <= s.achieved <= s.upper, f"{fam} N={n} r={r} multigraph sandwich")
                c.expect(s.rho_total_lower <= s.rho_total, f"{fam} N={n} r={r} randomness sandwich")
                if r == 1:
                    c.expect((s.achieved, s.upper, s.rho_total, s.rho_total_lower) == (ach, up, rho, rho_low),
                             f"{fam} N={n} collapse at r=1")
                count += 1
        for fam in ("path", "cycle", "star", "complete"):
            base = A.multigraph_rates(fam, n, 1, "gr")
            for r in (2, 3):
                s = A.multigraph_rates(fam, n, r, "gr")
                c.expect((s.achieved, s.rho, s.exact) == (base.achieved, base.rho, base.exact), f"gr {fam} N={n} r={r}")
    expected = [
        ("graph", "PIR", "general SPIR", "PIR-derived SPIR"),
        ("Path P_N", "2/N*", "1/N*", "1/N*"),
        ("Cyclic C_N", "2/(N+1)*", "1/N*", "1/(N+1)"),
        ("Complete K_N", ">= (4/3 - o(1))/N", "1/N*", ">= (2/3 - o(1))/N"),
        ("Star S_N", "2/N", "1/N", "1/N"),
    ]
    c.expect(A.table1() == expected, "rates-by-family table differs")
    c.note(f"{count} shared-pool (N, r) cases plus graph-replicated r-invariance; rates table regenerated")


def body_6(c: Check) -> None:
    s = GeneralScheme(P3)
    L = s.descriptor.L
    rep = verify_all(drop_pads(s), 2)
    exh = [r for r in rep.by_check("db_privacy", "exhaustive") if r.verdict == "fail"]
    lin = [r for r in rep.by_check("db_privacy", "linear") if r.verdict == "fail" and r.witness]
    c.expect(bool(exh) and bool(lin), "drop-pad not caught by both engines")
    c.expect(all(r.mi_max == L for r in exh), "drop-pad witness coin does not leak L symbols")
    avg = exh[0].mi if exh else None
    rel = verify_all(flip_sign(s), 3).by_check("reliability")
    c.expect(bool(rel) and all(r.verdict == "fail" for r in rel), "flip-sign not caught by reliability")
    up = verify_all(unblind(s), 2)
    c.expect(not up.check_passed("user_privacy"), "unblind not caught by user privacy")
    detected = 3 - sum(1 for f in c.failures if "not caught" in f)
    c.note(f"{detected}/3 detected; drop-pad worst-coin MI = {L} = L (average over coins {avg}), "
           f"linear witness '{lin[0].witness if lin else '-'}'")


def body_7(c: Check) -> None:
    agree = 0
    for g in GENERAL_GRAPHS[:4]:
        for q in (2, 3):
            rep = verify_all(GeneralScheme(g), q)
            e = engines_agree(rep)
            c.expect(e is True, f"{g.name} q={q} engines {e}")
            agree += e is True
            bad = verify_all(drop_pads(GeneralScheme(g)), q)
            c.expect(not bad.check_passed("db_privacy", "linear") and not bad.check_passed("db_privacy", "exhaustive"),
                     f"{g.name} q={q} faulty variant not failed by both engines")
    c.expect(agree >= 6, f"only {agree} agreeing instances")
    joint = check_user_privacy_joint(GeneralScheme(P3), 2)
    reduced = check_user_privacy(GeneralScheme(P3), 2, "enumerate")
    c.expect(joint.passed and reduced.passed, "joint and query-only user privacy disagree")
    c.note(f"{agree} instances agree (faulty variants fail on both); joint user-privacy check passes on P3 q=2")


CRITERIA = [
    (1, "general scheme rate and feasibility", 30, body_1),
    (2, "graph-replicated conversions reproduce the answer tables", 60, body_2),
    (3, "shared-pool conversions", 300, body_3),
    (4, "multigraph constructions", 300, body_4),
    (5, "formula suite", 5, body_5),
    (6, "fault detection", 120, body_6),
    (7, "engine cross-validation", 600, body_7),
]


@pytest.mark.parametrize("num,title,budget,body", CRITERIA, ids=[f"criterion_{c[0]}" for c in CRITERIA])
def test_criterion(num, title, budget, body):
    ok, line = _report(num, title, budget, body)
    assert ok, line


if __name__ == "__main__":
    results = [_report(*c)[0] for c in CRITERIA]
    sys.exit(0 if all(results) else 1)
