import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphspir.converters import fr_from_pir, fr_star, gr_from_pir, gr_multigraph_from_pir
from graphspir.general_scheme import GeneralScheme
from graphspir.graphs import MultiGraphSpec, build_family, m_graph
from graphspir.pir_base import pir_p3, pir_s4
from graphspir.protocol import Refusal, Var
from graphspir.verifier import (
    check_db_privacy_exhaustive,
    check_db_privacy_linear,
    check_reliability,
    check_user_privacy,
    check_user_privacy_joint,
    engines_agree,
    exact_mutual_information,
    j_sets,
    privacy_partition,
    verify_all,
)

P3 = build_family("path", 3)


def _mi_oracle(xs, vs, q):
    """Plain-float I(X;V) = H(X) + H(V) - H(X,V), base q."""
    n = len(xs)

    def h(c):
        return -sum(k / n * math.log(k / n, q) for k in c.values())

    return h(Counter(xs)) + h(Counter(vs)) - h(Counter(zip(xs, vs)))


@settings(max_examples=80)
@given(st.sampled_from([2, 3]), st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=40))
def test_mutual_information_matches_entropy_oracle(q, pairs):
    xs = np.array([p[0] for p in pairs])
    vs = np.array([p[1] for p in pairs])
    mi, indep = exact_mutual_information(xs, vs, q)
    assert math.isclose(float(mi), _mi_oracle(xs.tolist(), vs.tolist(), q), abs_tol=1e-9)
    if indep:
        assert mi == 0


def test_mutual_information_exact_when_uniform():
    # X uniform on F_3, V = X: one full symbol
    xs = np.arange(9) % 3
    mi, _ = exact_mutual_information(xs, xs.copy(), 3)
    assert mi == Fraction(1)
    mi, indep = exact_mutual_information(xs, np.arange(9) // 3, 3)
    assert mi == 0 and indep


def test_partition_simple_graph_replicated():
    s = GeneralScheme(m_graph())
    p = privacy_partition(s.descriptor, 1, (3,))
    assert p.hidden == (Var("W", 3, 0),)
    assert p.unknown_w == (Var("W", 1, 0),)
    assert p.unknown_r == (Var("R", 3, 0),)
    assert Var("W", 2, 0) in p.known and Var("R", 1, 0) in p.known


def test_partition_shared_pool():
    s = fr_from_pir(pir_p3())
    p = privacy_partition(s.descriptor, 1, (2,))
    assert {v.label for v in p.hidden} == {2}
    assert not p.known
    assert len(p.unknown_r) == 5


def test_partition_multigraph_hides_co_bundle():
    s = GeneralScheme(MultiGraphSpec(P3, 2))
    p = privacy_partition(s.descriptor, (1, 1), ())
    assert {v.label for v in p.hidden} == {(1, 2)}
    assert {v.label for v in p.unknown_r} == {1}


def test_j_sets():
    js, complete = j_sets(GeneralScheme(m_graph()).descriptor, 1)
    assert complete and len(js) == 7
    js, complete = j_sets(GeneralScheme(build_family("star", 8)).descriptor, 1)
    assert not complete and js[-1] == tuple(range(2, 8)) and len(js) == 7
    js, _ = j_sets(GeneralScheme(MultiGraphSpec(P3, 2)).descriptor, (1, 1))
    assert js == [(), (2,)]


@pytest.mark.parametrize(
    "graph", [P3, build_family("cycle", 3), build_family("star", 4), m_graph(), MultiGraphSpec(P3, 2)],
    ids=lambda g: g.name,
)
def test_general_scheme_verifies_q2(graph):
    rep = verify_all(GeneralScheme(graph), 2)
    assert rep.passed, rep.text()
    assert engines_agree(rep)
    assert rep.text().rstrip().endswith("overall=pass")


def test_refusal_over_budget():
    s = fr_from_pir(pir_p3())
    with pytest.raises(Refusal):
        check_db_privacy_exhaustive(s, 2)
    with pytest.raises(Refusal):
        verify_all(s, 2, engine="exhaustive")
    with pytest.raises(Refusal):
        check_reliability(s, 2, "exhaustive")


def test_auto_records_refused_exhaustive():
    rep = verify_all(fr_from_pir(pir_p3()), 2)
    assert [r.verdict for r in rep.by_check("db_privacy", "exhaustive")] == ["refused"]
    assert rep.passed and engines_agree(rep) is None


@pytest.mark.parametrize(
    "make", [lambda: gr_from_pir(pir_p3()), lambda: fr_from_pir(pir_p3()), lambda: gr_from_pir(pir_s4()),
             lambda: fr_star(4, 2)],
    ids=["gr-P3", "fr-P3", "gr-S4", "fr-star-S4"],
)
def test_isomorphism_agrees_with_enumeration(make):
    s = make()
    a = check_user_privacy(s, 2, "enumerate")
    b = check_user_privacy(s, 2, "isomorphism")
    assert a.verdict == b.verdict == "pass"


def test_isomorphism_engine_catches_broken_template():
    s = gr_from_pir(pir_p3())
    t = {k: dict(v) for k, v in s.templates.items()}
    t[2][1] = tuple(reversed(t[2][1][:1])) + (t[2][1][0],)  # server 1 sees a phase-1 form twice
    bad = s.with_templates(t, name="broken")
    assert check_user_privacy(bad, 2, "enumerate").verdict == "fail"
    assert check_user_privacy(bad, 2, "isomorphism").verdict == "fail"


def test_joint_user_privacy_general_p3():
    r = check_user_privacy_joint(GeneralScheme(P3), 2)
    assert r.passed, r.line()


def test_joint_refuses_large():
    with pytest.raises(Refusal):
        check_user_privacy_joint(fr_from_pir(pir_p3()), 2)


def test_linear_parallel_matches_serial():
    s = gr_multigraph_from_pir(pir_p3(), 2)
    a = check_db_privacy_linear(s, 2, jobs=1)
    b = check_db_privacy_linear(s, 2, jobs=2)
    assert [r.line() for r in a] == [r.line() for r in b]


def test_check_line_format():
    rep = verify_all(GeneralScheme(P3), 3)
    lines = rep.lines()
    assert lines[0] == "scheme=general(P3) graph=P3 q=3"
    assert any(l.startswith("check=db_privacy engine=linear target=1 J={2} verdict=pass mi=0") for l in lines)
