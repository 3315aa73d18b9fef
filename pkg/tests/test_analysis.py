from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from graphspir import analysis as A
from graphspir.converters import fr_from_pir, fr_multigraph_from_pir, fr_star
from graphspir.graphs import build_family
from graphspir.pir_base import pir_c3, pir_p3
from graphspir.protocol import rate_of, randomness_ratios

NS = st.integers(3, 12)
RS = st.sampled_from([1, 2, 3])


def test_srp_parameters():
    assert A.srp_parameters(2, 3) == (2, 2, 1)
    assert A.srp_parameters(6, 3) == (6, 2, 3)
    with pytest.raises(ValueError):
        A.srp_parameters(3, 3)


@pytest.mark.parametrize(
    "args,rate,rho",
    [((2, 3, 3, 2), F(4, 9), F(5, 4)), ((6, 12, 3, 3), F(4, 11), F(7, 4)), ((2, 4, 4, 3), F(3, 8), F(5, 3))],
)
def test_fr_rate_from_srp(args, rate, rho):
    assert A.fr_rate_from_srp(*args) == (rate, rho)


@pytest.mark.parametrize("make,args", [(lambda: fr_from_pir(pir_p3()), (2, 3, 3, 2)), (lambda: fr_from_pir(pir_c3()), (6, 12, 3, 3))])
def test_formula_matches_construction(make, args):
    s = make()
    assert (rate_of(s), randomness_ratios(s)[1]) == A.fr_rate_from_srp(*args)


@given(NS)
def test_fr_reciprocal_identity(n):
    # achievable shared-pool rates: 1/R = 1/C_PIR + N/(2(N-1)), and rho_total = 1/R - 1
    for fam in ("path", "cycle"):
        ach, up, rho, rho_low = A.fr_bounds(fam, n)
        assert 1 / ach == 1 / A.pir_capacity(fam, n) + F(n, 2 * (n - 1))
        assert rho == 1 / ach - 1
        assert ach <= up
        assert rho_low <= rho
        # the upper bound's reciprocal differs only in the N-dependent correction
        assert 1 / up - 1 == rho_low if fam == "path" else 1 / up - 1 >= rho_low


@given(NS, RS)
def test_multigraph_collapses_and_sandwiches(n, r):
    for fam in ("path", "cycle"):
        rate, rho = A.fr_multigraph_closed_form(fam, n, r)
        up = A.fr_multigraph_upper(fam, n, r)
        low = A.fr_multigraph_rho_lower(fam, n, r)
        assert rate <= up
        assert low <= rho
        assert rho == 1 / rate - 1
        if r == 1:
            ach, up1, rho1, low1 = A.fr_bounds(fam, n)
            assert (rate, up, rho, low) == (ach, up1, rho1, low1)


@given(NS, RS)
def test_closed_form_equals_srp_evaluation_for_capacity_pir(n, r):
    # a capacity-achieving SRP path scheme has L' = 2, D' = N, K = N - 1
    assert A.fr_multigraph_rate_from_srp(2, n, n, n - 1, r)[0] == A.fr_multigraph_closed_form("path", n, r)[0]


def test_printed_rho_bound_does_not_collapse():
    assert A.fr_multigraph_rho_lower("path", 3, 1) == A.fr_bounds("path", 3)[3]
    assert A.fr_multigraph_rho_lower("path", 3, 1, printed=True) != A.fr_bounds("path", 3)[3]


def test_p3_r2_values():
    s = A.multigraph_rates("path", 3, 2, "fr")
    assert (s.achieved, s.upper, s.rho_total) == (F(8, 21), F(4, 9), F(13, 8))
    built = fr_multigraph_from_pir(pir_p3(), build_family("path", 3), 2)
    assert rate_of(built) == s.achieved
    assert randomness_ratios(built)[1] == s.rho_total


@given(NS, RS)
def test_graph_replicated_summary_is_r_invariant(n, r):
    for fam in ("path", "cycle", "star", "complete"):
        a = A.multigraph_rates(fam, n, 1, "gr")
        b = A.multigraph_rates(fam, n, r, "gr")
        assert (a.achieved, a.rho, a.exact) == (b.achieved, b.rho, b.exact) == (F(1, n), 1, A.gr_capacity(build_family(fam, n))[1])


@given(st.integers(4, 8), st.data())
def test_star_rate_matches_construction(n, data):
    t = data.draw(st.integers(2, n - 1))
    s = fr_star(n, t)
    assert (rate_of(s), randomness_ratios(s)[1]) == A.star_rate_t(n, t)


def test_star_best_t():
    assert A.star_fr_rate(4) == (2, F(3, 7), F(4, 3))
    assert A.star_fr_rate(3) == (2, F(1, 2), F(1))
    assert A.star_fr_rate(3)[1] == A.fr_capacity_p3()[0]


def test_rate_summary_sandwich_guard():
    with pytest.raises(AssertionError):
        A.RateSummary("path", 3, 1, "fr", achieved=F(1, 2), upper=F(1, 3))


def test_p3_row_keeps_generic_rate_and_notes_capacity():
    s = A.multigraph_rates("path", 3, 1, "fr")
    assert s.achieved == F(4, 9) and s.upper == F(1, 2) and not s.exact
    assert any("1/2" in n for n in s.notes)


def test_unknown_inputs():
    with pytest.raises(ValueError):
        A.multigraph_rates("star", 4, 2, "fr")
    with pytest.raises(ValueError):
        A.multigraph_rates("path", 4, 1, "xx")


EXPECTED_TABLE = [
    ("graph", "PIR", "general SPIR", "PIR-derived SPIR"),
    ("Path P_N", "2/N*", "1/N*", "1/N*"),
    ("Cyclic C_N", "2/(N+1)*", "1/N*", "1/(N+1)"),
    ("Complete K_N", ">= (4/3 - o(1))/N", "1/N*", ">= (2/3 - o(1))/N"),
    ("Star S_N", "2/N", "1/N", "1/N"),
]


def test_table1_text():
    assert A.table1() == EXPECTED_TABLE


@given(NS)
def test_table1_values_agree_with_formulas(n):
    v = A.table1_values(n)
    assert v["Path P_N"] == (A.pir_capacity("path", n), A.gr_capacity(build_family("path", n))[0], F(1, n))
    assert v["Cyclic C_N"][0] == A.pir_capacity("cycle", n)
    # the PIR-derived column is half the PIR rate
    for row in v.values():
        assert row[2] == row[0] / 2


def test_render_tsv():
    out = A.render(A.table1(), "tsv")
    assert out.splitlines()[1].split("\t") == ["Path P_N", "2/N*", "1/N*", "1/N*"]
