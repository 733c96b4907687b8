import dataclasses
import math

import pytest

from stablesets.schedule import (
    PRE_EPOCH,
    Cell,
    InfeasibleScheduleError,
    J_for,
    Schedule,
    alpha,
    build_schedule,
    locate,
    validate,
)
from stablesets.search import TargetMode


def failed(s):
    return [c.name for c in validate(s) if not c.passed]


def test_J_formula():
    assert J_for(0.5) == 5
    assert J_for(0.3) == 8
    assert J_for(1.0) == 3
    assert J_for(2 / 3) == 4


def test_single_epoch_example():
    s = build_schedule(K=1, eps_rule=[0.5], D_rule=[7], q=3)
    assert s.epochs[0].J == 5 and len(s.epochs[0].N) == 6
    assert failed(s) == []


def test_budget_decreases_for_finer_second_epoch():
    s = build_schedule(K=2, eps_rule=[0.5, 0.25], D_rule=[7, 11])
    assert s.error_budget(2) < s.error_budget(1)
    assert s.union_budget(2) < s.union_budget(1)
    assert failed(s) == []


def test_block_growth_honours_D():
    s = build_schedule(K=1, eps_rule=[0.5], D_rule=[7], growth_factor=2)
    N = s.epochs[0].N
    assert all(b >= 7 * a + 1 for a, b in zip(N, N[1:]))


def test_desk_schedule_validates(desk, desk_neg, desk5):
    for s in (desk, desk_neg, desk5):
        assert failed(s) == []
        assert s.K == 2 and [e.eps for e in s.epochs] == [0.5, 0.3]


def test_validate_reports_broken_separation(toy):
    e = toy.epochs[0]
    bad_N = (e.N[0], e.N[0] + 1) + e.N[2:]
    s = dataclasses.replace(toy, epochs=(dataclasses.replace(e, N=bad_N),))
    names = failed(s)
    assert "N[1,j] separation" in names
    assert len(validate(s)) == len(validate(toy))


def test_validate_reports_t_below_T(toy):
    e = toy.epochs[0]
    s = dataclasses.replace(toy, epochs=(dataclasses.replace(e, t=e.T / 2),))
    assert "t[1] >= T[1]" in failed(s)


def test_locate_examples(desk):
    N = desk.epochs[0].N
    assert locate(desk, N[0]) == Cell(1, 0)
    assert locate(desk, N[1] - 1) == Cell(1, 0)
    assert locate(desk, N[1]) == Cell(1, 1)
    assert locate(desk, 1) == PRE_EPOCH
    assert locate(desk, desk.epochs[1].N[0] - 1) == Cell(1, desk.epochs[0].J)
    assert locate(desk, desk.terminal - 1) == Cell(2, desk.epochs[1].J)
    with pytest.raises(ValueError):
        locate(desk, desk.terminal)


def test_alpha_examples(desk):
    e = desk.epochs[0]
    assert alpha(desk, e.N[0]) == -1
    assert alpha(desk, e.N[4]) == pytest.approx(1.0)
    assert alpha(desk, e.N[e.J]) > 1
    assert alpha(desk, 5) == -1


def test_json_roundtrip_is_exact(desk):
    back = Schedule.from_json(desk.to_json())
    assert back == desk
    assert isinstance(back.terminal, int) and back.terminal > 2**63


def test_build_is_deterministic():
    a = build_schedule(K=1, eps_rule=[0.5], D_rule=[7])
    b = build_schedule(K=1, eps_rule=[0.5], D_rule=[7])
    assert a.to_json() == b.to_json()


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(K=2, eps_rule=[0.3, 0.5], D_rule=[7, 11]),
        dict(K=2, eps_rule=[0.5, 0.3], D_rule=[11, 7]),
        dict(K=0),
        dict(K=1, eps_rule=[0.5], D_rule=[7], growth_factor=1.5),
        dict(K=3, eps_rule=[0.5, 0.3], D_rule=[7, 11]),
        dict(K=1, eps_rule=[1.5], D_rule=[7]),
    ],
)
def test_infeasible_rules(kwargs):
    with pytest.raises(InfeasibleScheduleError):
        build_schedule(**kwargs)


def test_callable_rules_match_sequences():
    a = build_schedule(K=1, eps_rule=lambda k: 0.5, D_rule=lambda k: 7)
    b = build_schedule(K=1, eps_rule=[0.5, 0.5], D_rule=[7, 7])
    assert a.epochs == b.epochs and a.T_terminal == b.T_terminal


def test_chain_ordering(desk):
    g = desk.growth_factor
    for e in desk.epochs:
        Tn = desk.T(e.k + 1)
        assert g * max(e.D, 1 / e.eps) <= e.T
        assert g * e.T <= e.t and g * e.t <= Tn and g * Tn <= e.N[0]
