"""Grid search for T with every p^{iT} near a prescribed point of the circle.

Existence is guaranteed by the Q-linear independence of the log p, but no
effective bound on T is known, so the search carries an explicit step budget.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .arith import DirichletCharacter
from .phase import Phase, chord_to_turns, chordal_distance, circular_distance, phase, wrap

log = logging.getLogger(__name__)

_SCAN_CHUNK = 1 << 18
_SCREEN_SLACK = 1e-9


class SearchBudgetExhausted(RuntimeError):
    """No valid T within max_steps.  A resource limit, not a proof of absence."""


class TargetMode(str, enum.Enum):
    CONJ_CHI = "conj_chi"   # p^{iT} ~ conj(chi(p))
    ONE = "one"             # p^{iT} ~ 1
    NEG_CHI = "neg_chi"     # chi(p) p^{iT} ~ -1


@dataclass(frozen=True)
class TargetSpec:
    primes: tuple[int, ...]
    targets: tuple[Phase, ...]
    eps: float
    T0: float = 0.0

    def __post_init__(self):
        if len(self.primes) != len(self.targets):
            raise ValueError("primes and targets differ in length")
        if any(b <= a for a, b in zip(self.primes, self.primes[1:])):
            raise ValueError("primes must be distinct and ascending")
        if not 0.0 < self.eps <= 2.0:
            raise ValueError("eps must lie in (0, 2]")
        if self.T0 < 0:
            raise ValueError("T0 must be non-negative")


def targets_for_mode(char: DirichletCharacter, primes: Sequence[int], mode: TargetMode) -> list[Phase]:
    mode = TargetMode(mode)
    out = []
    for p in primes:
        e = char.exponent(p)
        if e is None:
            raise ValueError(f"prime {p} is the modulus; exclude it from the targets")
        r = e / char.order
        if mode is TargetMode.CONJ_CHI:
            t = -r
        elif mode is TargetMode.ONE:
            t = 0.0
        else:
            t = 0.5 - r
        out.append(Phase(wrap(t)))
    return out


def max_step(primes: Sequence[int], eps: float) -> float:
    """Largest scan step for which no eps/2-shrunk target window can be stepped over."""
    if not primes:
        return 1.0
    return math.asin(min(eps, 2.0) / 4.0) / math.log(max(primes))


def target_distances(spec: TargetSpec, T: float) -> list[float]:
    """Chordal distance |p^{iT} - target_p| for every prime, via the scalar phase path."""
    return [chordal_distance(phase(p, T), tgt) for p, tgt in zip(spec.primes, spec.targets)]


def satisfies(spec: TargetSpec, T: float, eps: float | None = None) -> bool:
    eps = spec.eps if eps is None else eps
    return all(d <= eps for d in target_distances(spec, T))


def find_T(spec: TargetSpec, step: float | None = None, max_steps: int = 10**9) -> float:
    """Smallest grid point T = T0 + k*step (k >= 1) meeting every target within eps.

    Candidates are screened in float64 around exact per-chunk anchors and then
    re-verified through ``phase`` before being returned.
    """
    guard = max_step(spec.primes, spec.eps)
    if step is None:
        step = guard
    if not step > 0 or step > guard * (1 + 1e-12):
        raise ValueError(f"step {step!r} breaks the window guard {guard:.6g}")
    if max_steps < 1:
        raise ValueError("max_steps must be at least 1")

    radius = chord_to_turns(spec.eps) + _SCREEN_SLACK
    rate = np.array([math.log(p) / (2 * math.pi) for p in spec.primes])
    tgt = np.array([t.turns for t in spec.targets])

    k0 = 1
    while k0 <= max_steps:
        k = np.arange(k0, min(k0 + _SCAN_CHUNK, max_steps + 1), dtype=np.float64)
        Ts = spec.T0 + k * step
        ok = np.ones(k.size, dtype=bool)
        anchor = float(Ts[0])
        # exact (Sterbenz) once the chunk spans less than a factor 2; before
        # that T is small and the rounding sits far below the screening slack
        offset = Ts - anchor
        for p, r, t in zip(spec.primes, rate, tgt):
            base = phase(p, anchor).turns
            ok &= circular_distance(base + offset * r, t) <= radius
        for idx in np.flatnonzero(ok):
            T = float(spec.T0 + float(k[idx]) * step)
            if satisfies(spec, T):
                log.debug("find_T: hit at k=%d, T=%r", int(k[idx]), T)
                return T
        k0 += _SCAN_CHUNK
    raise SearchBudgetExhausted(
        f"no T within {max_steps} steps of {step:.4g} above T0={spec.T0} "
        f"({len(spec.primes)} primes, eps={spec.eps})"
    )


def search_cost_estimate(num_primes: int, eps: float) -> float:
    """Rough count of target windows to traverse; a planning figure only."""
    if num_primes == 0:
        return 1.0
    angle = 2.0 * math.asin(min(eps, 2.0) / 2.0)
    return (2.0 * math.pi / angle) ** num_primes
