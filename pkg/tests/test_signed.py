import math

import numpy as np
import pytest

from oracles import BruteStableSet
from stablesets.signed import SignedParams, evaluate, f, margin, selected_ell

TIE = 1e-9


def test_params(toy, toy_neg, toy5):
    SignedParams(toy_neg)
    with pytest.raises(ValueError):
        SignedParams(toy)
    with pytest.raises(ValueError):
        SignedParams(toy5)


def test_small_values(toy_neg):
    F = SignedParams(toy_neg)
    assert f(F, 1) == 1
    assert f(F, 3) == -1
    assert f(F, 9) == 1
    assert margin(F, 27) == math.inf


def test_antisymmetry_at_three_exhaustive(toy_neg):
    F = SignedParams(toy_neg)
    n = toy_neg.terminal - 1
    a = evaluate(F, 1, 1, n).member
    b = evaluate(F, 3, 3, n).member
    assert np.array_equal(b, -a)
    assert set(np.unique(a)) <= {-1, 1}


def test_against_brute_force_oracle(toy_neg):
    F = SignedParams(toy_neg)
    brute = BruteStableSet(toy_neg)
    rng = np.random.default_rng(3)
    for n in rng.integers(1, toy_neg.terminal, 400):
        n = int(n)
        if margin(F, n) > TIE:
            assert f(F, n) == brute.f(n)


def test_vector_matches_scalar(toy_neg):
    F = SignedParams(toy_neg)
    ev = evaluate(F, 1, 1, 50000)
    for n in range(1, 50001, 37):
        if ev.margin[n - 1] > TIE:
            assert ev.member[n - 1] == f(F, n)


def test_consecutive_flip_under_margin(toy_neg):
    F = SignedParams(toy_neg)
    c = toy_neg.terminal - 2
    ev = evaluate(F, 1, 1, c, offsets=[0, 1])
    n = np.arange(1, c + 1)
    T = np.array([toy_neg.T(int(l)) for l in range(1, toy_neg.K + 2)])[ev.ell[:, 0] - 1]
    sel = (n % 3 == 1) & (ev.margin[:, 0] > T / n)
    assert sel.sum() > c // 4
    assert np.all(ev.member[sel, 0] * ev.member[sel, 1] == -1)


def test_sign_flip_soundness_p2(toy_neg):
    F = SignedParams(toy_neg)
    eps = toy_neg.epochs[0].eps
    radius = math.asin(eps / 2) / math.pi
    hi = toy_neg.terminal // 2
    a = evaluate(F, 1, 1, hi - 1)
    b = evaluate(F, 2, 2, hi - 1)
    same = (a.cell == b.cell) & (a.ell == b.ell) & (a.margin > radius + TIE) & (a.m == b.m)
    assert same.sum() > 1000
    assert np.array_equal(b.member[same], -a.member[same])


def test_local_constancy(toy_neg):
    # on windows of n + h = 1 mod 3 with wide margins and one branch, f is constant
    F = SignedParams(toy_neg)
    H = 12
    lo = toy_neg.epochs[0].N[0]
    c = 20000
    ev = evaluate(F, lo, 1, c, offsets=list(range(1, H + 1)))
    n = lo + np.arange(c)[:, None] + np.arange(1, H + 1)[None, :]
    res1 = n % 3 == 1
    T = np.array([toy_neg.T(l) for l in range(1, toy_neg.K + 2)])[ev.ell - 1]
    wide = np.where(res1, ev.margin > T * H / n, True).all(axis=1)
    one_branch = np.where(res1, ev.ell == ev.ell[:, [0]], True).all(axis=1)
    one_branch &= np.where(res1, ev.cell == ev.cell[:, [0]], True).all(axis=1)
    rows = wide & one_branch
    assert rows.sum() > 1000
    for i in np.flatnonzero(rows)[:3000]:
        vals = set(ev.member[i][res1[i]].tolist())
        assert len(vals) == 1


def test_selected_ell_matches_stable_set_rule(toy_neg):
    F = SignedParams(toy_neg)
    e = toy_neg.epochs[0]
    assert selected_ell(F, e.N[0] + 1) == 1
    assert selected_ell(F, e.N[e.J] + 1) == 2
