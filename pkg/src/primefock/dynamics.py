"""Diagonal Hamiltonians and cat-state creation checks.

States are propagated with ``exp(+i H t)``.  Every Hamiltonian here is
diagonal in the ``|n>`` basis with a nonnegative integer spectrum, so all
evolutions are exact phase multiplications and 2*pi-periodic.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Union

import numpy as np

from .arithmetic import Occupation
from .fock import FockVector, TruncationSpec, apply_diagonal_phase
from .states import (
    SiteParams,
    gen_cs,
    local_cs,
    local_cs_amplitudes,
    moebius_state,
    ncs,
    single_moebius,
    truncation_defect,
)

__all__ = [
    "Tag",
    "HamiltonianKind",
    "energy",
    "energies",
    "evolve",
    "cat_superposition",
    "Residual",
    "residual",
    "cat_residual",
    "factorized_product",
    "factorized_cat_check",
    "FAMILIES",
]

EPLUS = cmath.exp(0.25j * math.pi)
EMINUS = cmath.exp(-0.25j * math.pi)
SQRT_HALF = math.sqrt(0.5)


class Tag(str, Enum):
    HARMONIC = "harmonic"
    LOCAL_QUADRATIC = "local-quadratic"
    GLOBAL_QUADRATIC = "global-quadratic"
    GEN_GLOBAL_QUADRATIC = "gen-global-quadratic"
    FINITE_LOCAL_QUADRATIC = "finite-local-quadratic"
    MIXED_BELOW_X = "mixed-below-x"
    SINGLE_SITE_GEN_QUADRATIC = "single-site-gen-quadratic"


@dataclass(frozen=True)
class HamiltonianKind:
    """A diagonal energy law.

    ``cutoff`` is the prime bound ``x`` of the finite/mixed kinds (sites
    ``p < x`` are quadratic); ``prime`` selects the site of the single-site
    generalized kind.
    """

    tag: Tag
    cutoff: Optional[int] = None
    prime: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "tag", Tag(self.tag))
        needs_cutoff = self.tag in (Tag.FINITE_LOCAL_QUADRATIC, Tag.MIXED_BELOW_X)
        if needs_cutoff and self.cutoff is None:
            raise ValueError(f"{self.tag.value} needs a cutoff")
        if self.tag is Tag.SINGLE_SITE_GEN_QUADRATIC and self.prime is None:
            raise ValueError("single-site-gen-quadratic needs a prime")

    @classmethod
    def harmonic(cls):
        return cls(Tag.HARMONIC)

    @classmethod
    def local_quadratic(cls):
        return cls(Tag.LOCAL_QUADRATIC)

    @classmethod
    def global_quadratic(cls):
        return cls(Tag.GLOBAL_QUADRATIC)

    @classmethod
    def gen_global_quadratic(cls):
        return cls(Tag.GEN_GLOBAL_QUADRATIC)

    @classmethod
    def finite_local_quadratic(cls, cutoff: int):
        return cls(Tag.FINITE_LOCAL_QUADRATIC, cutoff=cutoff)

    @classmethod
    def mixed_below(cls, cutoff: int):
        return cls(Tag.MIXED_BELOW_X, cutoff=cutoff)

    @classmethod
    def single_site_gen_quadratic(cls, prime: int):
        return cls(Tag.SINGLE_SITE_GEN_QUADRATIC, prime=prime)

    def label(self) -> str:
        if self.cutoff is not None:
            return f"{self.tag.value}(x={self.cutoff})"
        if self.prime is not None:
            return f"{self.tag.value}(p={self.prime})"
        return self.tag.value


def energy(kind: HamiltonianKind, occ: Occupation) -> int:
    """Eigenvalue of ``kind`` on the basis state ``occ``."""
    exps = [a for _, a in occ]
    tag = kind.tag
    if tag is Tag.HARMONIC:
        return sum(exps)
    if tag is Tag.LOCAL_QUADRATIC:
        return sum(a * a for a in exps)
    if tag is Tag.GLOBAL_QUADRATIC:
        return sum(exps) ** 2
    if tag is Tag.GEN_GLOBAL_QUADRATIC:
        return len(exps) ** 2
    if tag is Tag.FINITE_LOCAL_QUADRATIC:
        return sum(a * a for p, a in occ if p < kind.cutoff)
    if tag is Tag.MIXED_BELOW_X:
        return sum(a * a if p < kind.cutoff else a for p, a in occ)
    if tag is Tag.SINGLE_SITE_GEN_QUADRATIC:
        return int(occ.exponent(kind.prime) > 0)
    raise ValueError(f"unknown Hamiltonian {kind!r}")


def energies(kind: HamiltonianKind, trunc: TruncationSpec) -> np.ndarray:
    """Vectorized :func:`energy` over the canonical basis of ``trunc``."""
    exps = trunc.exponents
    primes = np.asarray(trunc.active_primes)
    tag = kind.tag
    if tag is Tag.HARMONIC:
        return exps.sum(axis=1)
    if tag is Tag.LOCAL_QUADRATIC:
        return (exps**2).sum(axis=1)
    if tag is Tag.GLOBAL_QUADRATIC:
        return exps.sum(axis=1) ** 2
    if tag is Tag.GEN_GLOBAL_QUADRATIC:
        return np.count_nonzero(exps, axis=1) ** 2
    if tag is Tag.FINITE_LOCAL_QUADRATIC:
        return (exps[:, primes < kind.cutoff] ** 2).sum(axis=1)
    if tag is Tag.MIXED_BELOW_X:
        low = primes < kind.cutoff
        return (exps[:, low] ** 2).sum(axis=1) + exps[:, ~low].sum(axis=1)
    if tag is Tag.SINGLE_SITE_GEN_QUADRATIC:
        if kind.prime not in trunc.active_primes:
            return np.zeros(trunc.size, dtype=np.int64)
        return (exps[:, trunc.axis(kind.prime)] > 0).astype(np.int64)
    raise ValueError(f"unknown Hamiltonian {kind!r}")


def evolve(kind: HamiltonianKind, t: float, v: FockVector, sign: int = 1) -> FockVector:
    """``exp(+i H t) v`` (``sign=-1`` gives ``exp(-i H t)``)."""
    return apply_diagonal_phase(energies(kind, v.trunc), sign * t, v)


def cat_superposition(
    kind: HamiltonianKind, builder: Callable[[int], FockVector], t: float
) -> FockVector:
    """``(e^{i pi/4} U(t) psi(+w) + e^{-i pi/4} U(t) psi(-w)) / sqrt 2``.

    ``builder(+1)`` and ``builder(-1)`` must return the two branch states on
    a shared truncation.
    """
    plus = evolve(kind, t, builder(+1))
    minus = evolve(kind, t, builder(-1))
    return (plus * EPLUS + minus * EMINUS) * SQRT_HALF


@dataclass(frozen=True)
class Residual:
    """Amplitude-wise mismatch between two states on one basis."""

    inf: float
    l2: float
    defect: float

    def __float__(self):
        return self.inf


def residual(u: FockVector, v: FockVector, defect: float = 0.0) -> Residual:
    diff = (u - v).data
    return Residual(
        inf=float(np.max(np.abs(diff))) if diff.size else 0.0,
        l2=math.sqrt(math.fsum(np.abs(diff) ** 2)),
        defect=defect,
    )


FAMILIES = ("local_cs", "ncs", "gen_cs", "moebius", "single_moebius")


def _family_builder(family: str, params, trunc: TruncationSpec, prime: int):
    """Return ``sign -> FockVector`` for the branch states of a family."""
    if family in ("local_cs", "single_moebius"):
        alpha = complex(params)
        build = local_cs if family == "local_cs" else single_moebius
        return lambda sign: build(sign * alpha, prime, trunc)
    make = {"ncs": ncs, "gen_cs": gen_cs, "moebius": moebius_state}.get(family)
    if make is None:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
    if not isinstance(params, SiteParams):
        raise TypeError(f"family {family!r} takes SiteParams")
    neg = params.negated()
    return lambda sign: make(params if sign > 0 else neg, trunc)


def cat_residual(
    kind: HamiltonianKind,
    family: str,
    params: Union[SiteParams, complex],
    t: float,
    trunc: TruncationSpec,
    prime: int = 2,
) -> Residual:
    """Mismatch of the doubling identity ``U(t + pi/2) psi(w) = cat(t)``.

    For ``local_cs`` and ``single_moebius`` ``params`` is the complex
    amplitude placed at site ``prime``; the other families take
    :class:`SiteParams`.
    """
    builder = _family_builder(family, params, trunc, prime)
    psi = builder(+1)
    lhs = evolve(kind, t + math.pi / 2, psi)
    rhs = cat_superposition(kind, builder, t)
    return residual(lhs, rhs, truncation_defect(psi))


def _doubled_site(alpha: complex, kmax: int, t: float) -> np.ndarray:
    k = np.arange(kmax + 1)
    kerr = np.exp(1j * np.remainder(k * k * math.remainder(t, 2 * math.pi), 2 * math.pi))
    plus = local_cs_amplitudes(alpha, kmax) * kerr
    minus = local_cs_amplitudes(-alpha, kmax) * kerr
    return (EPLUS * plus + EMINUS * minus) * SQRT_HALF


def factorized_product(
    kind: HamiltonianKind, params: SiteParams, t: float, trunc: TruncationSpec
) -> FockVector:
    """Explicit tensor product predicted at time ``t + pi/2``.

    Sites ``p < x`` carry the doubled local factor; sites ``p >= x`` carry
    the untouched coherent factor (finite kind) or the harmonically rotated
    one ``|e^{i(t + pi/2)} alpha_p>`` (mixed kind).
    """
    if kind.tag not in (Tag.FINITE_LOCAL_QUADRATIC, Tag.MIXED_BELOW_X):
        raise ValueError("factorized check applies to finite-local or mixed kinds")
    tensor = np.ones((), dtype=complex)
    for p, kmax in zip(trunc.active_primes, trunc.kmax):
        alpha = params.alpha(p)
        if p < kind.cutoff:
            site = _doubled_site(alpha, kmax, t)
        elif kind.tag is Tag.MIXED_BELOW_X:
            site = local_cs_amplitudes(cmath.exp(1j * (t + math.pi / 2)) * alpha, kmax)
        else:
            site = local_cs_amplitudes(alpha, kmax)
        tensor = np.multiply.outer(tensor, site)
    return FockVector(trunc, tensor)


def factorized_cat_check(
    kind: HamiltonianKind, params: SiteParams, t: float, trunc: TruncationSpec
) -> Residual:
    """Compare ``U(t + pi/2) ncs`` against :func:`factorized_product`."""
    psi = ncs(params, trunc)
    lhs = evolve(kind, t + math.pi / 2, psi)
    return residual(lhs, factorized_product(kind, params, t, trunc), truncation_defect(psi))
