import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import BruteStableSet
from stablesets.arith import character_mod_q
from stablesets.phase import Arc, circular_distance, phase
from stablesets.schedule import PRE_EPOCH, locate
from stablesets.stable_set import (
    StableSetParams,
    contains,
    evaluate,
    margin,
    near_boundary,
    selected_T,
    strip_q,
)

# decisions closer than this to a boundary are rounding-level ties
TIE = 1e-9


def test_strip_q_examples():
    assert strip_q(3, 18) == (2, 2)
    assert strip_q(3, 7) == (0, 7)
    assert strip_q(3, 27) == (3, 1)


def test_params_validation(toy, toy_neg, toy5):
    P = StableSetParams(toy)
    assert P.forbidden_arc == Arc(0.25, 0.5) and P.path == "sign"
    assert StableSetParams(toy5).forbidden_arc == Arc(0.0, 0.25)
    with pytest.raises(ValueError):
        StableSetParams(toy_neg)
    with pytest.raises(ValueError):
        StableSetParams(toy5, path="sign")
    with pytest.raises(ValueError):
        StableSetParams(toy, forbidden_arc=Arc(0.0, 0.3))
    with pytest.raises(ValueError):
        StableSetParams(toy, char=character_mod_q(5))


def test_pure_powers_are_members(toy, toy5):
    for s in (toy, toy5):
        P = StableSetParams(s)
        m = 0
        while s.q**m < P.upper:
            assert contains(P, s.q**m)
            assert margin(P, s.q**m) == math.inf
            m += 1


def test_selected_T_extremes(toy):
    P = StableSetParams(toy)
    e = toy.epochs[0]
    for n in range(e.N[0], e.N[0] + 300):
        if n % 3:
            assert selected_T(P, n) == (1, e.T)
    for n in range(e.N[e.J], e.N[e.J] + 300):
        if n % 3:
            assert selected_T(P, n) == (2, toy.T_terminal)
    assert selected_T(P, 5) == (1, e.T)


def test_selected_T_mid_cell_against_direct_comparison(toy):
    P = StableSetParams(toy)
    e = toy.epochs[0]
    a = e.eps * 2 - 1
    for n in range(e.N[2], e.N[2] + 2000):
        if n % 3 == 0:
            continue
        re_t = math.cos(2 * math.pi * phase(n, e.t).turns)
        if abs(re_t - a) < 1e-9:
            continue
        assert selected_T(P, n)[0] == (1 if re_t >= a else 2)


def test_residue_one_cell_zero_rule(toy):
    P = StableSetParams(toy)
    e = toy.epochs[0]
    for n in range(e.N[0], e.N[0] + 3000):
        if n % 3 == 1:
            re = math.cos(2 * math.pi * phase(n, e.T).turns)
            if abs(re) > 1e-9:
                assert contains(P, n) == (re > 0)


def test_against_brute_force_oracle(toy):
    P = StableSetParams(toy)
    brute = BruteStableSet(toy)
    rng = np.random.default_rng(7)
    for n in rng.integers(1, toy.terminal, 400):
        n = int(n)
        if margin(P, n) > TIE:
            assert contains(P, n) == brute.contains(n)


def test_vector_path_matches_scalar(toy, toy5):
    for s in (toy, toy5):
        P = StableSetParams(s)
        ev = evaluate(P, 1, 1, s.terminal - 1)
        rng = np.random.default_rng(11)
        for n in rng.integers(1, s.terminal, 1500):
            n = int(n)
            if ev.margin[n - 1] > TIE:
                assert ev.member[n - 1] == contains(P, n)
                assert abs(ev.margin[n - 1] - margin(P, n)) < TIE


def test_margin_equals_independent_distances(toy):
    P = StableSetParams(toy)
    e = toy.epochs[0]
    for n in range(e.N[1], e.N[1] + 200):
        if n % 3 == 0:
            continue
        ell, T = selected_T(P, n)
        phi = phase(n, T).turns
        d_sign = min(circular_distance(phi, 0.25), circular_distance(phi, 0.75))
        a = e.eps * 1 - 1
        theta = phase(n, e.t).turns
        d_branch = abs(min(theta, 1 - theta) - math.acos(a) / (2 * math.pi))
        assert margin(P, n) == pytest.approx(min(d_sign, d_branch), abs=1e-15)


def test_margin_zero_on_boundary(toy):
    # a forbidden arc placed exactly on psi puts n on the decision boundary
    P = StableSetParams(toy, path="arc")
    n = 10007
    _, T = selected_T(P, n)
    psi = (phase(n, T).turns + P.char.exponent(n) / 2) % 1
    Q = StableSetParams(toy, forbidden_arc=Arc(psi, 0.5), path="arc")
    assert margin(Q, n) == 0.0


def test_q_stability_exact(toy, toy5):
    for s in (toy, toy5):
        P = StableSetParams(s)
        base = evaluate(P, 1, 1, s.terminal - 1).member
        tripled = evaluate(P, s.q, s.q, s.terminal - 1).member
        assert np.array_equal(base, tripled)


@settings(max_examples=200, deadline=None)
@given(n=st.integers(1, 10**6))
def test_q_stability_scalar(toy, n):
    P = StableSetParams(toy)
    n = n % (toy.terminal - 1) + 1
    assert contains(P, 3 * n) == contains(P, n)


def test_perturbation_soundness(toy):
    # p = 2 has verified |chi(2) 2^{iT} - 1| <= eps at every frequency
    P = StableSetParams(toy)
    eps = toy.epochs[0].eps
    radius = math.asin(eps / 2) / math.pi
    hi = toy.terminal // 2
    a = evaluate(P, 1, 1, hi - 1)
    b = evaluate(P, 2, 2, hi - 1)
    same = (a.cell == b.cell) & (a.ell == b.ell) & (a.margin > radius + TIE) & (a.m == b.m)
    assert same.sum() > 1000
    assert np.array_equal(a.member[same], b.member[same])


def test_sign_and_arc_paths_agree_with_positive_margin(toy):
    sign = evaluate(StableSetParams(toy, path="sign"), 1, 1, toy.terminal - 1)
    arc = evaluate(StableSetParams(toy, path="arc"), 1, 1, toy.terminal - 1)
    ok = sign.margin > 2.0**-52
    assert np.array_equal(sign.member[ok], arc.member[ok])


def test_near_boundary_mask(toy):
    b = toy.epochs[0].N[1]
    mask = near_boundary(toy, b - 5, 1, 11)
    assert list(mask) == [False] * 3 + [True] * 5 + [False] * 3


def test_out_of_range(toy):
    P = StableSetParams(toy)
    with pytest.raises(ValueError):
        contains(P, 3 * toy.terminal)
    with pytest.raises(ValueError):
        evaluate(P, toy.terminal + 1, 3, 2)
