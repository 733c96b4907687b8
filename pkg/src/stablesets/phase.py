"""Phases of the Archimedean characters n^{iT}, measured in turns.

Everything downstream reads arg(n^{iT}) / 2pi through this module.  Two
evaluation routes exist:

* ``phase`` -- one integer at a time, ``T * ln n`` reduced at 192 bits.
* ``progression_turns`` -- whole arithmetic progressions.  The progression
  is cut into blocks; each block base gets the 192-bit treatment and the
  members of the block are reached by a float64 ``log1p`` offset whose
  swept angle is capped at ``BLOCK_TURNS`` turns.  That cap is what keeps
  the float64 part inside the error budget.

Both routes return values in [0, 1) and are bit-for-bit deterministic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from mpmath.ctx_mp import MPContext

MAX_LOG_PRODUCT = 1e15
"""Largest supported ``T * ln n``; above it the precision contract is void."""

PHASE_TOLERANCE = 1e-9
BLOCK_TURNS = 2.0**18
BLOCK_MAX = 1 << 20

TIE_SIGN = 1
"""Sign assigned when Re(.) is exactly 0.  Fixed for the whole construction."""

_HP_BITS = 192
_hp = MPContext()
_hp.prec = _HP_BITS
_HP_TWO_PI = 2 * _hp.pi

SCALAR_ERROR = 2.0**-52
# float64 rounding of d/n0, log1p, C*delta, F0 + ., and C itself, each at most
# one ulp relative on a quantity bounded by BLOCK_TURNS turns.
BLOCK_ERROR = SCALAR_ERROR + 8 * BLOCK_TURNS * 2.0**-53


class PrecisionContractError(ValueError):
    """Raised for inputs outside the range where the phase error bound holds."""


@dataclass(frozen=True)
class Phase:
    """A point of the unit circle in turns, with a bound on its rounding error."""

    turns: float
    err_budget: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.turns < 1.0:
            raise ValueError(f"turns must lie in [0, 1), got {self.turns!r}")
        if self.err_budget < 0:
            raise ValueError("err_budget must be non-negative")

    def __add__(self, other: "Phase") -> "Phase":
        return Phase(wrap(self.turns + other.turns), self.err_budget + other.err_budget)

    def __neg__(self) -> "Phase":
        return Phase(wrap(-self.turns), self.err_budget)


@dataclass(frozen=True)
class Arc:
    """Half-open circular interval ``[lo, lo + length)`` in turns; may wrap past 1.

    A length of 0 is accepted as the empty arc.
    """

    lo: float
    length: float

    def __post_init__(self):
        if not 0.0 <= self.lo < 1.0:
            raise ValueError(f"arc start must lie in [0, 1), got {self.lo!r}")
        if not 0.0 <= self.length <= 1.0:
            raise ValueError(f"arc length must lie in [0, 1], got {self.length!r}")

    @property
    def hi(self) -> float:
        return self.lo + self.length

    def contains_turns(self, turns):
        """Vectorised membership of raw turn values (scalars or arrays)."""
        if self.length >= 1.0:
            return np.ones(np.shape(turns), dtype=bool) if np.ndim(turns) else True
        return np.mod(np.subtract(turns, self.lo), 1.0) < self.length


def wrap(x: float) -> float:
    """Reduce a float to [0, 1)."""
    r = x - math.floor(x)
    return 0.0 if r >= 1.0 else r


def _check_T(T: float) -> float:
    T = float(T)
    if not (math.isfinite(T) and T > 0):
        raise PrecisionContractError(f"T must be a positive finite real, got {T!r}")
    return T


def _check_n(n) -> int:
    if isinstance(n, bool) or int(n) != n:
        raise PrecisionContractError(f"n must be an integer, got {n!r}")
    n = int(n)
    if n < 1:
        raise PrecisionContractError(f"n must be positive, got {n}")
    return n


def _check_magnitude(n: int, T: float) -> None:
    if T * math.log(n) > MAX_LOG_PRODUCT:
        raise PrecisionContractError(
            f"precision contract violated: T*ln(n) = {T * math.log(n):.3e} "
            f"exceeds {MAX_LOG_PRODUCT:.0e}"
        )


def _hp_turns(log_n, T: float) -> float:
    x = _hp.mpf(T) * log_n / _HP_TWO_PI
    r = float(x - _hp.floor(x))
    # a fraction just below 1 can round up to 1.0 in float64
    return 0.0 if r >= 1.0 else r


def _hp_log(n: int):
    return _hp.log(_hp.mpf(n))


def phase(n: int, T: float) -> Phase:
    """frac(T ln n / 2pi) for a single integer ``n``.

    Raises PrecisionContractError when ``T ln n`` exceeds ``MAX_LOG_PRODUCT``.
    """
    n = _check_n(n)
    T = _check_T(T)
    _check_magnitude(n, T)
    if n == 1:
        return Phase(0.0, 0.0)
    return Phase(_hp_turns(_hp_log(n), T), SCALAR_ERROR)


def phase_many_T(n: int, Ts: Sequence[float]) -> list[float]:
    """Turns of n^{iT} for several T, sharing one high-precision logarithm."""
    n = _check_n(n)
    Ts = [_check_T(T) for T in Ts]
    for T in Ts:
        _check_magnitude(n, T)
    if n == 1:
        return [0.0] * len(Ts)
    log_n = _hp_log(n)
    return [_hp_turns(log_n, T) for T in Ts]


def re_value(n: int, T: float) -> float:
    return math.cos(2 * math.pi * phase(n, T).turns)


def sign_of_turns(turns):
    """Sign of cos(2 pi turns) with the tie policy applied at exact quarter turns.

    Works on floats and on numpy arrays.
    """
    positive = (turns <= 0.25) | (turns >= 0.75)
    if np.ndim(turns):
        out = np.where(positive, 1, -1).astype(np.int8)
        if TIE_SIGN < 0:
            out[(turns == 0.25) | (turns == 0.75)] = -1
        return out
    if turns == 0.25 or turns == 0.75:
        return TIE_SIGN
    return 1 if positive else -1


def re_sign(n: int, T: float, tie: int = TIE_SIGN) -> int:
    """sign(Re(n^{iT})).  ``tie`` exists for completeness; constructions use the default."""
    if tie not in (1, -1):
        raise ValueError("tie must be +1 or -1")
    t = phase(n, T).turns
    if t == 0.25 or t == 0.75:
        return tie
    return 1 if (t < 0.25 or t > 0.75) else -1


def in_arc(p: Phase, a: Arc) -> bool:
    return bool(a.contains_turns(p.turns))


def circular_distance(x, y):
    """Distance between turn values on the circle, in turns (range [0, 1/2])."""
    # |x - y| first keeps the result bit-symmetric in its arguments
    d = np.mod(np.abs(np.subtract(x, y)), 1.0)
    return np.minimum(d, 1.0 - d)


def chordal_distance(p: Phase, q: Phase) -> float:
    return 2.0 * abs(math.sin(math.pi * (p.turns - q.turns)))


def chord_to_turns(eps: float) -> float:
    """Largest angular offset, in turns, whose chord is at most ``eps``."""
    if eps >= 2.0:
        return 0.5
    return math.asin(eps / 2.0) / math.pi


def progression_turns(start: int, stride: int, count: int, Ts: Sequence[float], offsets=None) -> np.ndarray:
    """Turns of n^{iT} for n = start + i*stride (+ offsets[h]), i < count, every T in ``Ts``.

    Returns shape ``(len(Ts), count)``, or ``(len(Ts), count, len(offsets))``
    when non-negative integer ``offsets`` are given; one high-precision base
    then serves a whole window of nearby integers.  Absolute error per entry
    is at most ``BLOCK_ERROR`` (about 2.3e-10 turns).
    """
    start, stride, count = int(start), int(stride), int(count)
    Ts = [_check_T(T) for T in Ts]
    flat = offsets is None
    off = np.zeros(1, dtype=np.int64) if flat else np.asarray(offsets, dtype=np.int64).reshape(-1)
    H = off.size
    out = np.empty((len(Ts), count, H), dtype=np.float64)
    if count == 0 or not Ts or H == 0:
        return out[:, :, 0] if flat else out
    if start < 1 or stride < 0 or off.min() < 0:
        raise PrecisionContractError("progression must stay in the positive integers")
    max_off = int(off.max())
    last = start + (count - 1) * stride + max_off
    for T in Ts:
        _check_magnitude(last, T)

    hp_C = [_hp.mpf(T) / _HP_TWO_PI for T in Ts]
    C = np.array([float(c) for c in hp_C])
    cmax = float(C.max())
    ramp = np.arange(min(count, BLOCK_MAX), dtype=np.float64)
    foff = off.astype(np.float64)
    fstride = float(stride)

    i0 = 0
    while i0 < count:
        n0 = start + i0 * stride
        room = BLOCK_TURNS * n0 / cmax - max_off
        if stride == 0:
            L = count - i0
        else:
            L = int(room / stride) if room > 0 else 1
            L = max(1, min(L, BLOCK_MAX, count - i0))
        if n0 == 1:
            base = [0.0] * len(Ts)
        else:
            log_n0 = _hp_log(n0)
            base = []
            for c in hp_C:
                x = c * log_n0
                r = float(x - _hp.floor(x))
                base.append(0.0 if r >= 1.0 else r)
        if L == 1 and max_off == 0:
            out[:, i0, 0] = base
        elif room <= 0:
            # offsets too wide for one base: evaluate each member on its own
            for h, o in enumerate(off.tolist()):
                out[:, i0, h] = phase_many_T(n0 + o, Ts) if n0 + o > 1 else 0.0
        else:
            delta = (ramp[:L] * fstride)[:, None] + foff[None, :]
            delta /= n0
            np.log1p(delta, out=delta)
            for row, (b, c) in enumerate(zip(base, C)):
                seg = out[row, i0:i0 + L, :]
                np.multiply(delta, c, out=seg)
                seg += b
                seg -= np.floor(seg)
        i0 += L
    return out[:, :, 0] if flat else out
