"""Truncated multiplicative Fock space.

A :class:`TruncationSpec` fixes a finite set of active primes and a cap on
each site's occupation.  The induced basis is the set of occupations with
exponents ``0 <= a_p <= kmax_p``, enumerated in lexicographic order of the
exponent vectors.  That order coincides with C-order of an array of shape
``(kmax_p + 1, ...)``, so a :class:`FockVector` keeps its amplitudes as a
flat complex array and the ladder operators act by slicing along one axis.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterator, Mapping, Sequence, Union

import numpy as np

from .arithmetic import Occupation, factorize, is_prime

__all__ = [
    "ConfigurationError",
    "TruncationSpec",
    "FockVector",
    "basis_state",
    "annihilate",
    "create",
    "gen_shift_down",
    "gen_shift_up",
    "coprime_projector",
    "inner",
    "norm",
    "number_expectations",
    "apply_diagonal_phase",
]

TWO_PI = 2.0 * math.pi


class ConfigurationError(ValueError):
    """An operator or state refers to a prime outside the active set."""


@dataclass(frozen=True)
class TruncationSpec:
    """Finite basis: active primes, per-site caps, amplitude floor.

    ``kmax`` may be a single int (same cap everywhere), a sequence aligned
    with ``active_primes`` or a mapping ``prime -> cap``.
    """

    active_primes: tuple[int, ...]
    kmax: Union[int, Sequence[int], Mapping[int, int]] = 8
    amplitude_floor: float = 0.0

    def __post_init__(self):
        primes = tuple(int(p) for p in self.active_primes)
        if not primes:
            raise ConfigurationError("active_primes must be nonempty")
        if any(b <= a for a, b in zip(primes, primes[1:])):
            raise ConfigurationError(f"active_primes must be strictly ascending: {primes}")
        for p in primes:
            if not is_prime(p):
                raise ConfigurationError(f"{p} is not prime")
        kmax = self.kmax
        if isinstance(kmax, Mapping):
            missing = [p for p in primes if p not in kmax]
            if missing:
                raise ConfigurationError(f"no kmax given for primes {missing}")
            caps = tuple(int(kmax[p]) for p in primes)
        elif isinstance(kmax, (int, np.integer)):
            caps = (int(kmax),) * len(primes)
        else:
            caps = tuple(int(k) for k in kmax)
            if len(caps) != len(primes):
                raise ConfigurationError("kmax sequence must match active_primes")
        if any(k < 0 for k in caps):
            raise ConfigurationError(f"kmax must be nonnegative, got {caps}")
        if self.amplitude_floor < 0:
            raise ConfigurationError("amplitude_floor must be nonnegative")
        object.__setattr__(self, "active_primes", primes)
        object.__setattr__(self, "kmax", caps)
        object.__setattr__(self, "amplitude_floor", float(self.amplitude_floor))

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(k + 1 for k in self.kmax)

    @property
    def size(self) -> int:
        return math.prod(self.shape)

    def axis(self, p: int) -> int:
        try:
            return self.active_primes.index(p)
        except ValueError:
            raise ConfigurationError(
                f"prime {p} is not in the active set {self.active_primes}"
            ) from None

    def cap(self, p: int) -> int:
        return self.kmax[self.axis(p)]

    @cached_property
    def exponents(self) -> np.ndarray:
        """``(size, n_sites)`` integer matrix of exponent vectors in canonical order."""
        grids = np.indices(self.shape).reshape(len(self.shape), -1).T
        grids = np.ascontiguousarray(grids, dtype=np.int64)
        grids.setflags(write=False)
        return grids

    @cached_property
    def basis(self) -> tuple[Occupation, ...]:
        return tuple(
            Occupation.from_exponents(self.active_primes, row)
            for row in itertools.product(*(range(k + 1) for k in self.kmax))
        )

    def contains(self, occ: Occupation) -> bool:
        for p, a in occ:
            if p not in self.active_primes or a > self.cap(p):
                return False
        return True

    def index(self, occ: Occupation) -> int:
        if isinstance(occ, (int, np.integer)):
            occ = factorize(int(occ))
        if not self.contains(occ):
            raise ConfigurationError(f"{occ!r} is outside the truncated basis")
        idx = [0] * len(self.active_primes)
        for p, a in occ:
            idx[self.axis(p)] = a
        return int(np.ravel_multi_index(idx, self.shape))

    def with_kmax(self, kmax) -> TruncationSpec:
        return TruncationSpec(self.active_primes, kmax, self.amplitude_floor)


class FockVector:
    """Immutable state vector over the basis of a :class:`TruncationSpec`.

    Amplitudes are kept densely in canonical order; zero entries are simply
    absent from :meth:`items`.  ``leakage`` accumulates the squared norm of
    components pushed past a site cap by raising operators.
    """

    __slots__ = ("trunc", "_data", "leakage")

    def __init__(self, trunc: TruncationSpec, data, leakage: float = 0.0):
        if isinstance(data, Mapping):
            arr = np.zeros(trunc.size, dtype=complex)
            for occ, amp in data.items():
                arr[trunc.index(occ)] += amp
        else:
            arr = np.array(data, dtype=complex).reshape(-1)
            if arr.size != trunc.size:
                raise ValueError(f"expected {trunc.size} amplitudes, got {arr.size}")
        if trunc.amplitude_floor > 0:
            arr[np.abs(arr) < trunc.amplitude_floor] = 0.0
        arr.setflags(write=False)
        self.trunc = trunc
        self._data = arr
        self.leakage = float(leakage)

    @classmethod
    def zeros(cls, trunc: TruncationSpec) -> FockVector:
        return cls(trunc, np.zeros(trunc.size, dtype=complex))

    @property
    def data(self) -> np.ndarray:
        """Read-only flat amplitude array in canonical basis order."""
        return self._data

    @property
    def tensor(self) -> np.ndarray:
        """Read-only view with one axis per active prime."""
        return self._data.reshape(self.trunc.shape)

    def amplitude(self, occ) -> complex:
        return complex(self._data[self.trunc.index(occ)])

    def items(self) -> Iterator[tuple[Occupation, complex]]:
        basis = self.trunc.basis
        for i in np.flatnonzero(self._data):
            yield basis[i], complex(self._data[i])

    def nnz(self) -> int:
        return int(np.count_nonzero(self._data))

    def norm(self) -> float:
        return norm(self)

    def _check(self, other: FockVector):
        if not isinstance(other, FockVector):
            return NotImplemented
        if other.trunc != self.trunc:
            raise ConfigurationError("vectors live on different truncations")
        return None

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return FockVector(self.trunc, self._data + other._data, self.leakage + other.leakage)

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return FockVector(self.trunc, self._data - other._data, self.leakage + other.leakage)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return FockVector(self.trunc, self._data * scalar, self.leakage * abs(scalar) ** 2)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def __neg__(self):
        return self * -1.0

    def __repr__(self) -> str:
        return (
            f"FockVector(primes={self.trunc.active_primes}, kmax={self.trunc.kmax}, "
            f"nnz={self.nnz()}, norm={self.norm():.6g})"
        )


def basis_state(trunc: TruncationSpec, occ, amplitude: complex = 1.0) -> FockVector:
    """Single basis vector ``amplitude * |n>``; ``occ`` may be an int label."""
    arr = np.zeros(trunc.size, dtype=complex)
    arr[trunc.index(occ)] = amplitude
    return FockVector(trunc, arr)


def _shift(v: FockVector, axis: int, steps: int, weights: np.ndarray | None):
    """Move amplitudes ``steps`` along ``axis`` (negative = lowering).

    ``weights[k]`` multiplies the amplitude found at exponent ``k``.
    Returns the new tensor and the squared norm of input pushed past the cap.
    """
    src = v.tensor
    if weights is not None:
        bshape = [1] * src.ndim
        bshape[axis] = -1
        src = src * weights.reshape(bshape)
    out = np.zeros_like(src)
    n = src.shape[axis]
    lost = 0.0
    if abs(steps) >= n:
        if steps > 0:
            lost = float(np.sum(np.abs(v.tensor) ** 2))
        return out, lost
    take = [slice(None)] * src.ndim
    put = [slice(None)] * src.ndim
    if steps < 0:
        take[axis] = slice(-steps, n)
        put[axis] = slice(0, n + steps)
    else:
        take[axis] = slice(0, n - steps)
        put[axis] = slice(steps, n)
        over = [slice(None)] * src.ndim
        over[axis] = slice(n - steps, n)
        lost = float(np.sum(np.abs(v.tensor[tuple(over)]) ** 2))
    out[tuple(put)] = src[tuple(take)]
    return out, lost


def annihilate(p: int, v: FockVector) -> FockVector:
    """Bosonic lowering: ``a_p |n> = sqrt(a_p(n)) |n/p>``."""
    axis = v.trunc.axis(p)
    k = np.arange(v.trunc.shape[axis])
    out, _ = _shift(v, axis, -1, np.sqrt(k))
    return FockVector(v.trunc, out, v.leakage)


def create(p: int, v: FockVector) -> FockVector:
    """Bosonic raising: ``a_p^dag |n> = sqrt(a_p(n)+1) |np>``.

    Components already at the cap of site ``p`` are dropped; their squared
    norm (before the ``sqrt(a+1)`` factor) is added to ``leakage``.
    """
    axis = v.trunc.axis(p)
    k = np.arange(v.trunc.shape[axis])
    out, lost = _shift(v, axis, 1, np.sqrt(k + 1.0))
    return FockVector(v.trunc, out, v.leakage + lost)


def _factor_active(m: int, trunc: TruncationSpec) -> list[tuple[int, int]]:
    if m < 1:
        raise ConfigurationError(f"shift index must be a positive integer, got {m}")
    entries = factorize(m).entries
    inactive = [p for p, _ in entries if p not in trunc.active_primes]
    if inactive:
        raise ConfigurationError(
            f"{m} has prime factors {inactive} outside the active set {trunc.active_primes}"
        )
    return [(trunc.axis(p), a) for p, a in entries]


def gen_shift_down(m: int, v: FockVector) -> FockVector:
    """Generalized lowering ``b_m |k> = |k/m>`` (zero unless ``m | k``)."""
    tensor = v.tensor
    for axis, a in _factor_active(m, v.trunc):
        tensor, _ = _shift(FockVector(v.trunc, tensor), axis, -a, None)
    return FockVector(v.trunc, tensor, v.leakage)


def gen_shift_up(m: int, v: FockVector) -> FockVector:
    """Generalized raising ``b_m^dag |k> = |km>`` with cap overflow as leakage."""
    tensor = v.tensor
    leak = v.leakage
    for axis, a in _factor_active(m, v.trunc):
        tensor, lost = _shift(FockVector(v.trunc, tensor), axis, a, None)
        leak += lost
    return FockVector(v.trunc, tensor, leak)


def coprime_projector(p: int, v: FockVector) -> FockVector:
    """``pi_p``: keep only components whose label is not divisible by ``p``."""
    axis = v.trunc.axis(p)
    out = np.zeros_like(v.tensor)
    keep = [slice(None)] * out.ndim
    keep[axis] = 0
    out[tuple(keep)] = v.tensor[tuple(keep)]
    return FockVector(v.trunc, out, v.leakage)


def inner(u: FockVector, v: FockVector) -> complex:
    """``<u|v>``, conjugate-linear in ``u``."""
    if u.trunc != v.trunc:
        raise ConfigurationError("inner product of vectors on different truncations")
    return complex(np.vdot(u.data, v.data))


def norm(v: FockVector) -> float:
    return math.sqrt(math.fsum(np.abs(v.data) ** 2))


def number_expectations(v: FockVector, tol: float = 1e-10) -> tuple[float, float]:
    """``(<N>, <M>)``: expected particle number and expected occupied-site count."""
    weights = np.abs(v.data) ** 2
    total = math.fsum(weights)
    if abs(total - 1.0) > tol:
        raise ValueError(f"state is not normalized: |v|^2 = {total!r}")
    exps = v.trunc.exponents
    big = exps.sum(axis=1)
    little = np.count_nonzero(exps, axis=1)
    return math.fsum(big * weights), math.fsum(little * weights)


EnergyLike = Union[Callable[[Occupation], int], np.ndarray]


def apply_diagonal_phase(energy: EnergyLike, t: float, v: FockVector) -> FockVector:
    """Multiply each amplitude by ``exp(i * E(n) * t)``.

    ``energy`` is either a callable on occupations or an integer array of
    energies in canonical basis order.  Energies are integers, so ``t`` is
    reduced modulo 2*pi first.
    """
    if callable(energy):
        energies = np.fromiter((energy(o) for o in v.trunc.basis), dtype=np.int64, count=v.trunc.size)
    else:
        energies = np.asarray(energy)
        if energies.shape != (v.trunc.size,):
            raise ValueError("energy array does not match the basis size")
    tr = math.remainder(float(t), TWO_PI)
    phase = np.exp(1j * np.remainder(energies * tr, TWO_PI))
    return FockVector(v.trunc, v.data * phase, v.leakage)
