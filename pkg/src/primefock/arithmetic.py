"""Number-theoretic kernel.

Basis states of the prime-indexed Fock space are labelled by their
occupation (the exponent vector of ``n = prod p**a_p``).  Everything the
Hamiltonians and state builders need is a function of those exponents.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np
import sympy

__all__ = [
    "Occupation",
    "ArithmeticProfile",
    "primes_up_to",
    "is_prime",
    "factorize",
    "profile",
    "c_norm_from_exponents",
    "log_c_norm",
]

# exponents above this use lgamma for the factorial product
_EXACT_FACTORIAL_MAX = 20
# trial division covers every n < _TRIAL_LIMIT**2
_TRIAL_LIMIT = 1 << 20

_table_lock = threading.Lock()
_prime_table: tuple[int, ...] = ()
_prime_table_limit = 1


def primes_up_to(limit: int) -> list[int]:
    """All primes ``<= limit`` in ascending order (sieve of Eratosthenes)."""
    if limit < 0:
        raise ValueError("limit must be nonnegative")
    if limit < 2:
        return []
    sieve = np.ones(limit + 1, dtype=bool)
    sieve[:2] = False
    for i in range(2, math.isqrt(limit) + 1):
        if sieve[i]:
            sieve[i * i :: i] = False
    return np.flatnonzero(sieve).tolist()


def _primes_cached(limit: int) -> tuple[int, ...]:
    global _prime_table, _prime_table_limit
    if limit <= _prime_table_limit:
        return _prime_table
    with _table_lock:
        if limit > _prime_table_limit:
            new_limit = min(max(limit, 2 * _prime_table_limit, 1 << 12), _TRIAL_LIMIT)
            _prime_table = tuple(primes_up_to(new_limit))
            _prime_table_limit = new_limit
        return _prime_table


def is_prime(n: int) -> bool:
    n = int(n)
    if n < 2:
        return False
    if n >= _TRIAL_LIMIT**2:
        return bool(sympy.isprime(n))
    root = math.isqrt(n)
    for p in _primes_cached(max(root, 2)):
        if p > root:
            break
        if n % p == 0:
            return n == p
    return True


@dataclass(frozen=True)
class Occupation:
    """Exponent vector of a basis label.

    ``entries`` holds ``(prime, exponent)`` pairs with strictly ascending
    primes and exponents >= 1.  The empty tuple is the vacuum ``n = 1``.
    """

    entries: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        entries = tuple((int(p), int(a)) for p, a in self.entries)
        last = 1
        for p, a in entries:
            if p <= last:
                raise ValueError(f"primes must be strictly ascending, got {entries}")
            if a < 1:
                raise ValueError(f"exponent of {p} must be >= 1, got {a}")
            if not is_prime(p):
                raise ValueError(f"{p} is not prime")
            last = p
        object.__setattr__(self, "entries", entries)

    @classmethod
    def _trusted(cls, entries: tuple[tuple[int, int], ...]) -> Occupation:
        # skips validation: callers guarantee ascending primes and a >= 1
        occ = object.__new__(cls)
        object.__setattr__(occ, "entries", entries)
        return occ

    @classmethod
    def from_exponents(cls, primes: Iterable[int], exponents: Iterable[int]) -> Occupation:
        """Build from parallel prime/exponent sequences, skipping zero exponents."""
        return cls(tuple((p, a) for p, a in zip(primes, exponents) if a))

    @classmethod
    def vacuum(cls) -> Occupation:
        return cls(())

    def exponent(self, p: int) -> int:
        for q, a in self.entries:
            if q == p:
                return a
        return 0

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.entries)

    @property
    def value(self) -> int:
        """The integer label ``n`` (exact Python int, may be large)."""
        n = 1
        for p, a in self.entries:
            n *= p**a
        return n

    @property
    def log_value(self) -> float:
        return math.fsum(a * math.log(p) for p, a in self.entries)

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __repr__(self) -> str:
        if not self.entries:
            return "Occupation(1)"
        body = "*".join(f"{p}^{a}" if a > 1 else str(p) for p, a in self.entries)
        return f"Occupation({body})"


@dataclass(frozen=True)
class ArithmeticProfile:
    big_omega: int
    little_omega: int
    q_energy: int
    omega2: int
    moebius: int
    c_norm: float


def factorize(n: int) -> Occupation:
    """Prime factorization of ``n >= 1``.

    Trial division against the cached prime table; a cofactor with no
    prime factor below the table limit is handed to :func:`sympy.factorint`.
    """
    n = int(n)
    if n < 1:
        raise ValueError(f"cannot factorize {n}: basis labels are positive integers")
    entries = []
    for p in _primes_cached(min(math.isqrt(n), _TRIAL_LIMIT)):
        if p * p > n:
            break
        if n % p == 0:
            a = 0
            while n % p == 0:
                n //= p
                a += 1
            entries.append((p, a))
    if n >= _TRIAL_LIMIT**2:
        entries.extend((int(p), int(a)) for p, a in sorted(sympy.factorint(n).items()))
    elif n > 1:
        entries.append((n, 1))
    return Occupation._trusted(tuple(entries))


def log_c_norm(exponents: Iterable[int]) -> float:
    """``log sqrt(prod a!)``."""
    return 0.5 * math.fsum(math.lgamma(a + 1) for a in exponents)


def c_norm_from_exponents(exponents: Iterable[int]) -> float:
    exponents = list(exponents)
    if all(a <= _EXACT_FACTORIAL_MAX for a in exponents):
        prod = 1
        for a in exponents:
            prod *= math.factorial(a)
        return math.sqrt(prod)
    return math.exp(log_c_norm(exponents))


def profile(occ: Occupation) -> ArithmeticProfile:
    """All the arithmetic invariants of a basis label."""
    exps = [a for _, a in occ.entries]
    little_omega = len(exps)
    squarefree = all(a == 1 for a in exps)
    return ArithmeticProfile(
        big_omega=sum(exps),
        little_omega=little_omega,
        q_energy=sum(a * a for a in exps),
        omega2=sum(a % 2 for a in exps),
        moebius=(-1) ** little_omega if squarefree else 0,
        c_norm=c_norm_from_exponents(exps),
    )
