"""Membership in the stable set S, for q = 3 and for a general odd prime q.

For n = q^m n' (q not dividing n') the deciding frequency comes from the cell
(k, j) of n': T_k when Re(n'^{i t_k}) >= alpha(n'), else T_{k+1}.  Pure powers
of q are always members.

All phase comparisons are made on turn values, never on floats of cos:

* Re(z) >= alpha  <=>  dist(arg z, 0) <= acos(alpha) / 2pi
* Re(z) > 0       <=>  arg z within a quarter turn of 0 (ties go to TIE_SIGN)
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .arith import DirichletCharacter, character_mod_q, valuation
from .phase import (
    Arc,
    circular_distance,
    phase,
    phase_many_T,
    progression_turns,
    sign_of_turns,
    wrap,
)
from .schedule import PRE_EPOCH, Cell, Schedule, alpha_of_cell, locate
from .search import TargetMode

# -- shared helpers ----------------------------------------------------------


def strip_q(q: int, n: int) -> tuple[int, int]:
    return valuation(q, n)


def branch_halfwidth(alpha: float) -> float:
    """Turns a such that Re(e(theta)) >= alpha <=> dist(theta, 0) <= a; -1 if never."""
    if alpha <= -1:
        return 0.5
    if alpha > 1:
        return -1.0
    return math.acos(alpha) / (2 * math.pi)


def default_arc(q: int) -> Arc:
    # for q = 3 the arc is centred on the negative real axis, which makes the
    # arc test coincide with chi(n) sign(Re n^{iT}) > 0
    if q == 3:
        return Arc(0.25, 0.5)
    return Arc(0.0, 1.0 / (q - 1))


def _check_range(s: Schedule, n: int) -> None:
    if n < 1 or n >= s.q * s.terminal:
        raise ValueError(f"n = {n} outside [1, q*terminal) = [1, {s.q * s.terminal})")


@dataclass(frozen=True)
class StableSetParams:
    schedule: Schedule
    char: DirichletCharacter = None  # type: ignore[assignment]
    forbidden_arc: Arc = None  # type: ignore[assignment]
    path: str = ""

    def __post_init__(self):
        s = self.schedule
        if self.char is None:
            object.__setattr__(self, "char", character_mod_q(s.q))
        if self.forbidden_arc is None:
            object.__setattr__(self, "forbidden_arc", default_arc(s.q))
        if not self.path:
            object.__setattr__(self, "path", "sign" if s.q == 3 else "arc")
        if self.char.q != s.q:
            raise ValueError("character modulus differs from the schedule's q")
        if s.mode is not TargetMode.CONJ_CHI:
            raise ValueError("stable sets need a CONJ_CHI schedule")
        if not math.isclose(self.forbidden_arc.length, 1.0 / (s.q - 1), rel_tol=0, abs_tol=1e-15):
            raise ValueError("forbidden arc must have length 1/(q-1) turns")
        if self.path not in ("sign", "arc"):
            raise ValueError("path is 'sign' or 'arc'")
        if self.path == "sign" and s.q != 3:
            raise ValueError("the sign path exists only for q = 3")

    @property
    def q(self) -> int:
        return self.schedule.q

    @property
    def upper(self) -> int:
        return self.q * self.schedule.terminal

    def member_array(self, start: int, stride: int, count: int, offsets=None) -> np.ndarray:
        return evaluate(self, start, stride, count, offsets).member


# -- scalar reference path ---------------------------------------------------


def _select(s: Schedule, n1: int) -> tuple[Cell, int, float, float]:
    """(cell, ell, alpha, theta) for q-free n1; theta is NaN when unused."""
    cell = locate(s, n1)
    if cell == PRE_EPOCH:
        return cell, 1, -1.0, math.nan
    e = s.epoch(cell.k)
    a = alpha_of_cell(s, cell)
    theta = phase(n1, e.t).turns
    hw = branch_halfwidth(a)
    take_k = float(circular_distance(theta, 0.0)) <= hw
    return cell, (cell.k if take_k else cell.k + 1), a, theta


def selected_T(params, n1: int) -> tuple[int, float]:
    """(ell, T_ell) chosen for a q-free n1."""
    s = params.schedule
    if n1 % s.q == 0:
        raise ValueError("selected_T expects n not divisible by q")
    _cell, ell, _a, _theta = _select(s, n1)
    return ell, s.T(ell)


def _turns_of_chi_n(params, n1: int, T: float) -> tuple[float, float]:
    """(arg n1^{iT}, arg chi(n1) n1^{iT}) in turns."""
    phi = phase(n1, T).turns
    return phi, wrap(phi + params.char.exponent(n1) / params.char.order)


def contains(params: StableSetParams, n: int) -> bool:
    s = params.schedule
    _check_range(s, n)
    _m, n1 = strip_q(s.q, n)
    if n1 == 1:
        return True
    ell, T = selected_T(params, n1)
    phi, psi = _turns_of_chi_n(params, n1, T)
    if params.path == "sign":
        chi = 1 - 2 * params.char.exponent(n1)
        return chi * sign_of_turns(phi) > 0
    return not params.forbidden_arc.contains_turns(psi)


def _branch_margin(alpha: float, theta: float) -> float:
    if not -1 < alpha <= 1:
        return math.inf
    return abs(float(circular_distance(theta, 0.0)) - branch_halfwidth(alpha))


def margin(params, n: int) -> float:
    """Distance in turns from the nearest decision boundary among the active tests."""
    s = params.schedule
    _check_range(s, n)
    _m, n1 = strip_q(s.q, n)
    if n1 == 1:
        return math.inf
    _cell, ell, a, theta = _select(s, n1)
    phi, psi = _turns_of_chi_n(params, n1, s.T(ell))
    if getattr(params, "path", "sign") == "sign":
        d = min(float(circular_distance(phi, 0.25)), float(circular_distance(phi, 0.75)))
    else:
        arc = params.forbidden_arc
        d = min(float(circular_distance(psi, arc.lo)), float(circular_distance(psi, wrap(arc.hi))))
    return min(d, _branch_margin(a, theta))


# -- vectorised progression path ---------------------------------------------


@dataclass
class Evaluation:
    """Per-element results for n = start + i*stride.

    ``cell`` is the flat cell index of n' (-1 for the pre-epoch region), ``ell``
    the epoch index of the frequency used, ``phi`` the turns of n'^{i T_ell}.
    """

    start: int
    stride: int
    m: np.ndarray
    residue: np.ndarray
    pure: np.ndarray
    cell: np.ndarray
    ell: np.ndarray
    phi: np.ndarray
    branch_margin: np.ndarray
    member: np.ndarray = field(default=None)  # type: ignore[assignment]
    margin: np.ndarray = field(default=None)  # type: ignore[assignment]


def _valuation_progression(q: int, start: int, stride: int, count: int, off: np.ndarray):
    """q-adic valuation of start + i*stride + off[h] and the residue of n / q^m mod q.

    Arrays have shape (count, len(off)).
    """
    e = 1
    while q ** (e + 1) * (max(count, 1) + int(off.max()) + 1) < 2**62:
        e += 1
    Q = q**e
    i = np.arange(count, dtype=np.int64)[:, None]
    r = (start % Q + i * (stride % Q) + off[None, :]) % Q
    m = np.zeros(r.shape, dtype=np.int64)
    cur = r.copy()
    for _ in range(e):
        z = (cur % q == 0) & (r != 0)
        if not z.any():
            break
        m[z] += 1
        cur[z] //= q
    residue = cur % q
    # q^e divides n: valuation and residue from exact integers
    for ii, hh in zip(*np.nonzero(r == 0)):
        mv, n1 = valuation(q, start + int(ii) * stride + int(off[hh]))
        m[ii, hh] = mv
        residue[ii, hh] = n1 % q
    return m, residue


def _thresholds(bounds, qm: int, start: int, stride: int, count: int) -> np.ndarray:
    """First index i with start + i*stride >= qm*b, for every boundary b."""
    th = []
    for b in bounds:
        x = qm * b - start
        th.append(0 if x <= 0 else min(-(-x // stride), count))
    return np.asarray(th, dtype=np.int64)


def _core(s: Schedule, start: int, stride: int, count: int, offsets=None) -> Evaluation:
    start, stride, count = int(start), int(stride), int(count)
    flat = offsets is None
    off = np.zeros(1, dtype=np.int64) if flat else np.asarray(offsets, dtype=np.int64).reshape(-1)
    if stride < 1:
        raise ValueError("stride must be at least 1")
    if count < 0:
        raise ValueError("count must be non-negative")
    if off.size == 0 or off.min() < 0:
        raise ValueError("offsets must be non-negative")
    if count and (start < 1 or start + (count - 1) * stride + int(off.max()) >= s.q * s.terminal):
        raise ValueError(f"progression leaves [1, q*terminal) = [1, {s.q * s.terminal})")
    q, K = s.q, s.K
    H = off.size
    F = s.frequencies()
    P = progression_turns(start, stride, count, F, offsets=off)
    m, residue = _valuation_progression(q, start, stride, count, off)
    qph = np.asarray(phase_many_T(q, F))
    if m.any():
        P -= m[None, :, :] * qph[:, None, None]
        P -= np.floor(P)

    i = np.broadcast_to(np.arange(count, dtype=np.int64)[:, None], (count, H))
    bounds = s.boundaries()
    ncell = len(bounds) - 1
    cell = np.empty((count, H), dtype=np.int64)
    pure = np.zeros((count, H), dtype=bool)
    top = start + count * stride + int(off.max())
    for h, o in enumerate(off.tolist()):
        mh = m[:, h]
        for mv in np.unique(mh):
            sel = mh == mv
            th = _thresholds(bounds, q ** int(mv), start + o, stride, count)
            cell[sel, h] = np.searchsorted(th, i[sel, h], side="right") - 1
        qm = 1
        while qm < top:
            x = qm - start - o
            if x >= 0 and x % stride == 0 and x // stride < count:
                pure[x // stride, h] = True
            qm *= q
    if np.any((cell >= ncell) & ~pure):
        raise ValueError("some n / q^m lies beyond the schedule terminal")

    # per-cell tables, shifted by one so that index 0 is the pre-epoch region
    cells = s.cells()
    k_of = np.array([1] + [c.k for c in cells] + [K], dtype=np.int64)
    alpha_of = np.array([-1.0] + [alpha_of_cell(s, c) for c in cells] + [-1.0])
    hw_of = np.array([branch_halfwidth(a) for a in alpha_of])
    live_of = (alpha_of > -1) & (alpha_of <= 1)
    live_of[0] = False
    c1 = np.clip(cell, -1, ncell) + 1

    kk = k_of[c1]
    ih = np.broadcast_to(np.arange(H)[None, :], (count, H))
    theta = P[K + kk, i, ih]  # row K + k holds t_k
    dist0 = circular_distance(theta, 0.0)
    take_k = (c1 == 0) | (dist0 <= hw_of[c1])
    ell = np.where(take_k, kk, kk + 1)
    phi = P[ell - 1, i, ih]
    bm = np.where(live_of[c1], np.abs(dist0 - hw_of[c1]), np.inf)
    ev = Evaluation(start, stride, m, residue, pure, cell, ell, phi, bm)
    if flat:
        for name in ("m", "residue", "pure", "cell", "ell", "phi", "branch_margin"):
            setattr(ev, name, getattr(ev, name)[:, 0])
    return ev


def evaluate(params: StableSetParams, start: int, stride: int, count: int, offsets=None) -> Evaluation:
    """Membership and margins for n = start + i*stride (+ offsets[h]), i < count."""
    ev = _core(params.schedule, start, stride, count, offsets)
    char = params.char
    if params.path == "sign":
        chi = np.where(ev.residue == 1, 1, -1)
        member = chi * sign_of_turns(ev.phi) > 0
        d = np.minimum(circular_distance(ev.phi, 0.25), circular_distance(ev.phi, 0.75))
    else:
        ex = char.exponent_array()[ev.residue]
        psi = ev.phi + ex / char.order
        psi -= np.floor(psi)
        arc = params.forbidden_arc
        member = ~arc.contains_turns(psi)
        d = np.minimum(circular_distance(psi, arc.lo), circular_distance(psi, wrap(arc.hi)))
    ev.member = member | ev.pure
    ev.margin = np.where(ev.pure, np.inf, np.minimum(d, ev.branch_margin))
    return ev


def near_boundary(s: Schedule, start: int, stride: int, count: int, width: int = 3) -> np.ndarray:
    """Mask of n with |n - N_{k,j}| < width for some boundary of the schedule."""
    start, stride, count = int(start), int(stride), int(count)
    out = np.zeros(count, dtype=bool)
    for b in s.boundaries():
        lo, hi = b - width + 1, b + width - 1
        i0 = max(0, -(-(lo - start) // stride))
        i1 = min(count - 1, (hi - start) // stride)
        if i0 <= i1:
            out[i0:i1 + 1] = True
    return out
