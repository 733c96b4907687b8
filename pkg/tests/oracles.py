"""Independent reference implementations used only by the tests.

Nothing here imports the package's phase or membership code: phases come from
the stdlib ``decimal`` module, membership from a direct transcription of the
definition evaluated with mpmath complex arithmetic.
"""
from __future__ import annotations

from decimal import Decimal, localcontext

import mpmath

_DIGITS = 80


def _pi() -> Decimal:
    # Python decimal documentation recipe, run at the ambient precision
    with localcontext() as ctx:
        ctx.prec += 2
        three = Decimal(3)
        lasts, t, s, n, na, d, da = 0, three, 3, 1, 0, 0, 24
        while s != lasts:
            lasts = s
            n, na = n + na, na + 8
            d, da = d + da, da + 32
            t = (t * n) / d
            s += t
    return +s


def decimal_turns(n: int, T: float) -> float:
    """frac(T ln n / 2pi) with 80 significant digits."""
    with localcontext() as ctx:
        ctx.prec = _DIGITS
        x = Decimal(T) * Decimal(n).ln() / (2 * _pi())
        return float(x - int(x))


def legendre_chi3(n: int) -> int:
    r = n % 3
    return 0 if r == 0 else (1 if r == 1 else -1)


def brute_character(q: int):
    """Map r -> discrete log base the least primitive root, by brute search."""
    for g in range(2, q):
        seen = {}
        x = 1
        for e in range(q - 1):
            if x in seen:
                break
            seen[x] = e
            x = x * g % q
        if len(seen) == q - 1:
            return g, seen
    raise ValueError(q)


def brute_cell(bounds_by_epoch, n):
    """Linear scan for (k, j) with N_{k,j} <= n < next boundary; (0, 0) below."""
    flat = [(k, j, N) for k, Ns in bounds_by_epoch for j, N in enumerate(Ns)]
    if n < flat[0][2]:
        return (0, 0)
    cell = None
    for k, j, N in flat:
        if N <= n:
            cell = (k, j)
    return cell


class BruteStableSet:
    """Membership in S for q = 3 straight from the definition, at 50 digits."""

    def __init__(self, schedule, neg=False):
        self.s = schedule
        self.bounds = [(e.k, list(e.N)) for e in schedule.epochs]
        self.eps = {e.k: e.eps for e in schedule.epochs}
        self.t = {e.k: e.t for e in schedule.epochs}

    def _T(self, ell):
        return self.s.T(ell)

    def deciding(self, n1):
        """(ell, Re(n1^{i T_ell}) as mpf)."""
        mpmath.mp.dps = 50
        k, j = brute_cell(self.bounds, n1)
        if k == 0:
            ell = 1
        else:
            alpha = self.eps[k] * j - 1
            re_t = mpmath.re(mpmath.exp(1j * mpmath.mpf(self.t[k]) * mpmath.log(n1)))
            ell = k if re_t >= alpha else k + 1
        z = mpmath.exp(1j * mpmath.mpf(self._T(ell)) * mpmath.log(n1))
        return ell, mpmath.re(z)

    def contains(self, n):
        while n % 3 == 0:
            n //= 3
        if n == 1:
            return True
        _ell, re = self.deciding(n)
        sign = 1 if re >= 0 else -1
        return legendre_chi3(n) * sign > 0

    def f(self, n):
        m = 0
        while n % 3 == 0:
            n //= 3
            m += 1
        if n == 1:
            return (-1) ** m
        _ell, re = self.deciding(n)
        v = legendre_chi3(n) * re
        return (-1) ** m * (1 if v >= 0 else -1)
