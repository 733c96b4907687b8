"""Primes and the faithful Dirichlet character modulo a prime."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .phase import Phase


def primes_up_to(D: int) -> list[int]:
    """All primes <= D, ascending (plain Eratosthenes on a bool array)."""
    D = int(D)
    if D < 2:
        raise ValueError("D must be at least 2")
    sieve = np.ones(D + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, math.isqrt(D) + 1):
        if sieve[p]:
            sieve[p * p::p] = False
    return np.flatnonzero(sieve).tolist()


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    for d in range(3, math.isqrt(n) + 1, 2):
        if n % d == 0:
            return False
    return True


def _prime_factors(n: int) -> list[int]:
    out, d = [], 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def primitive_root(q: int) -> int:
    """Least primitive root of the prime q."""
    phi = q - 1
    factors = _prime_factors(phi)
    for g in range(2, q):
        if all(pow(g, phi // f, q) != 1 for f in factors):
            return g
    if q == 2:
        return 1
    raise ValueError(f"{q} has no primitive root")  # unreachable for primes


@dataclass(frozen=True)
class DirichletCharacter:
    """Character mod prime q sending the least primitive root to e(1/(q-1)).

    ``exponents[r]`` holds e(r) for 1 <= r < q, so chi(r) = exp(2 pi i e(r)/(q-1));
    index 0 is -1 and marks chi(0) = 0.
    """

    q: int
    generator: int
    exponents: tuple[int, ...]

    @property
    def order(self) -> int:
        return self.q - 1

    def exponent(self, n: int) -> int | None:
        """e(n mod q), or None when q divides n."""
        e = self.exponents[n % self.q]
        return None if e < 0 else e

    def value(self, n: int) -> complex:
        e = self.exponent(n)
        if e is None:
            return 0j
        if self.q == 3:
            return complex(1 - 2 * e)
        return complex(np.exp(2j * np.pi * e / self.order))

    def exponent_array(self) -> np.ndarray:
        return np.asarray(self.exponents, dtype=np.int64)


@lru_cache(maxsize=None)
def character_mod_q(q: int) -> DirichletCharacter:
    if q == 2 or not is_prime(q):
        raise ValueError(f"modulus must be an odd prime, got {q}")
    g = primitive_root(q)
    table = [-1] * q
    x = 1
    for e in range(q - 1):
        table[x] = e
        x = x * g % q
    return DirichletCharacter(q, g, tuple(table))


def chi_phase(char: DirichletCharacter, n: int) -> Phase | None:
    """chi(n) as a Phase, or None (the zero value) when q | n."""
    e = char.exponent(n)
    if e is None:
        return None
    return Phase(e / char.order, 0.0)


def valuation(q: int, n: int) -> tuple[int, int]:
    """(m, n') with n = q^m n' and q not dividing n'."""
    if n < 1:
        raise ValueError("n must be positive")
    m = 0
    while n % q == 0:
        n //= q
        m += 1
    return m, n
