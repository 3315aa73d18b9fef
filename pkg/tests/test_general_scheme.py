import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphspir.field import PrimeField
from graphspir.general_scheme import GeneralScheme, GeneralSchemeCoins, desired_server, gs_make_queries
from graphspir.graphs import MultiGraphSpec, build_family, m_graph
from graphspir.protocol import MessageDatabase, RandomnessPool, rate_of, randomness_ratios, run_transcript

GRAPHS = {
    "P3": build_family("path", 3),
    "C3": build_family("cycle", 3),
    "S4": build_family("star", 4),
    "M": m_graph(),
    "P3^(2)": MultiGraphSpec(build_family("path", 3), 2),
}


@pytest.mark.parametrize("name", GRAPHS)
def test_rate_one_over_n(name):
    s = GeneralScheme(GRAPHS[name])
    g = GRAPHS[name]
    assert rate_of(s) == type(rate_of(s))(1, g.N)
    assert randomness_ratios(s)[0] == 1


def test_p3_queries_match_hand_computation():
    g = GRAPHS["P3"]
    F = PrimeField(3)
    # h = (1, 2), target 1 handed to its higher endpoint (server 2)
    qs = gs_make_queries(g, GeneralSchemeCoins((1, 2)), 1, F)
    # server 2 holds messages 1 and 2 with signs -1 and +1; e_1 is added there
    assert qs == {1: (1,), 2: (0, 2), 3: (1,)}


def test_endpoint_choice():
    g = GRAPHS["P3"]
    assert desired_server(g, 1, "high") == 2
    assert desired_server(g, 1, "low") == 1
    with pytest.raises(KeyError):
        desired_server(g, 9)


@pytest.mark.parametrize("name", GRAPHS)
@pytest.mark.parametrize("endpoint", ["high", "low"])
def test_decodes_for_every_coin_q2(name, endpoint):
    s = GeneralScheme(GRAPHS[name], endpoint)
    F = PrimeField(2)
    rng = np.random.default_rng(5)
    db = MessageDatabase.random(s.descriptor, F, rng)
    pool = RandomnessPool.random(s.descriptor, F, rng)
    for coins in s.enumerate_coins(F):
        for t in s.targets:
            run_transcript(s, db, pool, coins, t, F)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(list(GRAPHS)), st.sampled_from([3, 5, 7]), st.integers(0, 10**6))
def test_decodes_random(name, q, seed):
    s = GeneralScheme(GRAPHS[name])
    F = PrimeField(q)
    rng = np.random.default_rng(seed)
    db = MessageDatabase.random(s.descriptor, F, rng)
    pool = RandomnessPool.random(s.descriptor, F, rng)
    coins = s.sample_coins(random.Random(seed), F)
    for t in s.targets:
        assert run_transcript(s, db, pool, coins, t, F).ok


def test_coin_domain():
    s = GeneralScheme(GRAPHS["M"])
    F = PrimeField(3)
    assert s.coin_domain_size(F) == 81
    assert len(list(s.enumerate_coins(F))) == 81
    assert next(iter(s.enumerate_coins(F))) == GeneralSchemeCoins((0, 0, 0, 0))


def test_answer_forms_carry_incidence_signs():
    s = GeneralScheme(GRAPHS["P3"])
    f = s.answer_forms(2, (1, 1))[0]
    pads = {v.label: c for v, c in f if v.kind == "R"}
    assert pads == {1: -1, 2: 1}


def test_bad_endpoint():
    with pytest.raises(ValueError):
        GeneralScheme(GRAPHS["P3"], "middle")
