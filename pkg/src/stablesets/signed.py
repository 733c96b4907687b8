"""A +-1 function with f(pn) = -f(n) for most n and biased shifted correlations.

f(3^m n) = (-1)^m sign(Re(chi(n) n^{i T_ell})), with T_ell selected exactly as
for the stable set and f(1) = +1.  The schedule targets chi(p) p^{iT} ~ -1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .arith import DirichletCharacter, character_mod_q
from .phase import TIE_SIGN, circular_distance, phase, sign_of_turns
from .schedule import Schedule
from .search import TargetMode
from .stable_set import Evaluation, _branch_margin, _check_range, _core, _select, strip_q


@dataclass(frozen=True)
class SignedParams:
    schedule: Schedule
    char: DirichletCharacter = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.char is None:
            object.__setattr__(self, "char", character_mod_q(self.schedule.q))
        if self.schedule.q != 3 or self.char.q != 3:
            raise ValueError("the signed function is defined for q = 3 only")
        if self.schedule.mode is not TargetMode.NEG_CHI:
            raise ValueError("the signed function needs a NEG_CHI schedule")

    @property
    def q(self) -> int:
        return 3

    @property
    def upper(self) -> int:
        return 3 * self.schedule.terminal

    def value_array(self, start: int, stride: int, count: int, offsets=None) -> np.ndarray:
        return evaluate(self, start, stride, count, offsets).member


def _chi_sign(chi, phi):
    """sign(Re(chi e(phi))) for chi = +-1, with ties going to TIE_SIGN."""
    s = chi * sign_of_turns(phi)
    tie = (phi == 0.25) | (phi == 0.75)
    if np.ndim(phi):
        return np.where(tie, TIE_SIGN, s).astype(np.int8)
    return TIE_SIGN if tie else int(s)


def f(params: SignedParams, n: int) -> int:
    s = params.schedule
    _check_range(s, n)
    m, n1 = strip_q(3, n)
    sign_m = -1 if m % 2 else 1
    if n1 == 1:
        return sign_m
    _cell, ell, _a, _theta = _select(s, n1)
    chi = 1 - 2 * params.char.exponent(n1)
    return sign_m * _chi_sign(chi, phase(n1, s.T(ell)).turns)


def selected_ell(params: SignedParams, n1: int) -> int:
    return _select(params.schedule, n1)[1]


def margin(params: SignedParams, n: int) -> float:
    s = params.schedule
    _check_range(s, n)
    _m, n1 = strip_q(3, n)
    if n1 == 1:
        return math.inf
    _cell, ell, a, theta = _select(s, n1)
    phi = phase(n1, s.T(ell)).turns
    d = min(float(circular_distance(phi, 0.25)), float(circular_distance(phi, 0.75)))
    return min(d, _branch_margin(a, theta))


def evaluate(params: SignedParams, start: int, stride: int, count: int, offsets=None) -> Evaluation:
    """Values (in ``member``, int8 +-1) and margins for n = start + i*stride (+ offsets[h])."""
    ev = _core(params.schedule, start, stride, count, offsets)
    chi = np.where(ev.residue == 1, 1, -1)
    val = _chi_sign(chi, ev.phi)
    val = np.where(ev.pure, 1, val)
    val = np.where(ev.m % 2 == 1, -val, val).astype(np.int8)
    d = np.minimum(circular_distance(ev.phi, 0.25), circular_distance(ev.phi, 0.75))
    ev.member = val
    ev.margin = np.where(ev.pure, np.inf, np.minimum(d, ev.branch_margin))
    return ev
