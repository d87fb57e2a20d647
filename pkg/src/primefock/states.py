"""Builders for coherent-type states on the prime-indexed site array.

All builders use the analytic normalization of the untruncated state and
never renormalize the truncated vector, so ``1 - |v|^2`` measures exactly
the probability mass cut off by the truncation.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

import numpy as np
from scipy.special import gammainc, gammaln

from .arithmetic import is_prime
from .fock import ConfigurationError, FockVector, TruncationSpec

__all__ = [
    "ParameterError",
    "SiteParams",
    "POISSON_TAIL_TOL",
    "poisson_tail",
    "required_kmax",
    "local_cs_amplitudes",
    "local_cs",
    "ncs",
    "gen_cs",
    "moebius_state",
    "single_moebius",
    "truncation_defect",
    "analytic_defect",
    "auto_truncation",
]

POISSON_TAIL_TOL = 1e-14


class ParameterError(ValueError):
    """State parameters violate a precondition (sigma, convergence radius...)."""


def prime_power_s(p: int, s: complex, k: float = 1.0) -> complex:
    """``p**(-k*s)`` evaluated as ``exp(-k*s*log p)``."""
    return cmath.exp(-k * s * math.log(p))


@dataclass(frozen=True)
class SiteParams:
    """Dirichlet exponent ``s`` plus finitely many nonzero site parameters.

    ``entries`` maps primes to ``z_p`` (or ``zeta_p`` for the generalized
    families); sites not listed carry parameter 0.  ``phases`` holds the
    optional homodyne local-oscillator phases ``theta_p``.
    """

    s: complex
    entries: tuple[tuple[int, complex], ...] = ()
    phases: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        entries = self.entries
        if isinstance(entries, Mapping):
            entries = entries.items()
        entries = tuple(sorted((int(p), complex(z)) for p, z in entries))
        phases = self.phases
        if isinstance(phases, Mapping):
            phases = phases.items()
        phases = tuple(sorted((int(p), float(th) % (2 * math.pi)) for p, th in phases))
        object.__setattr__(self, "s", complex(self.s))
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "phases", phases)
        problems = self.problems()
        if problems:
            raise ParameterError("; ".join(problems))

    def problems(self) -> list[str]:
        out = []
        if not self.s.real > 0.5:
            out.append(f"sigma = Re(s) must exceed 1/2, got {self.s.real!r}")
        primes = [p for p, _ in self.entries]
        if len(set(primes)) != len(primes):
            out.append(f"duplicate primes in site entries: {primes}")
        for p in primes:
            if not is_prime(p):
                out.append(f"site label {p} is not prime")
        for _, z in self.entries:
            if not cmath.isfinite(z):
                out.append(f"site parameter {z!r} is not finite")
        return out

    @property
    def sigma(self) -> float:
        return self.s.real

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.entries)

    def value(self, p: int) -> complex:
        for q, z in self.entries:
            if q == p:
                return z
        return 0j

    def theta(self, p: int) -> float:
        for q, th in self.phases:
            if q == p:
                return th
        return 0.0

    def alpha(self, p: int) -> complex:
        """Local coherent amplitude ``p**(-s) * z_p``."""
        return prime_power_s(p, self.s) * self.value(p)

    def weight(self) -> float:
        """``P(2 sigma, |z|^2) = sum_p p**(-2 sigma) |z_p|^2``."""
        return math.fsum(p ** (-2 * self.sigma) * abs(z) ** 2 for p, z in self.entries)

    def negated(self) -> SiteParams:
        return SiteParams(self.s, tuple((p, -z) for p, z in self.entries), self.phases)

    def replace(self, p: int, z: complex) -> SiteParams:
        entries = {q: w for q, w in self.entries}
        entries[p] = z
        return SiteParams(self.s, tuple(entries.items()), self.phases)

    def generalized_problems(self) -> list[str]:
        """Violations of ``|zeta_p| < p**sigma`` (geometric convergence per site)."""
        return [
            f"|zeta_{p}| = {abs(z):.6g} must be < {p}^sigma = {p ** self.sigma:.6g}"
            for p, z in self.entries
            if not abs(z) < p**self.sigma
        ]

    def check_generalized(self):
        problems = self.generalized_problems()
        if problems:
            raise ParameterError("; ".join(problems))


def _check_support(params: SiteParams, trunc: TruncationSpec):
    outside = [p for p, z in params.entries if z != 0 and p not in trunc.active_primes]
    if outside:
        raise ConfigurationError(
            f"site parameters on primes {outside} outside the active set {trunc.active_primes}"
        )


def poisson_tail(alpha: complex, kmax: int) -> float:
    """Probability mass of ``|alpha>`` above occupation ``kmax``."""
    lam = abs(alpha) ** 2
    if lam == 0:
        return 0.0
    return float(gammainc(kmax + 1, lam))


def required_kmax(alpha: complex) -> int:
    """Conservative cap ``|a|^2 + 20 sqrt(|a|^2 + 1) + 30``."""
    lam = abs(alpha) ** 2
    return math.ceil(lam + 20 * math.sqrt(lam + 1) + 30)


def local_cs_amplitudes(alpha: complex, kmax: int) -> np.ndarray:
    """``exp(-|a|^2/2) a^k / sqrt(k!)`` for ``k = 0..kmax`` (log-space)."""
    k = np.arange(kmax + 1)
    out = np.zeros(kmax + 1, dtype=complex)
    if alpha == 0:
        out[0] = 1.0
        return out
    logs = -0.5 * abs(alpha) ** 2 + k * cmath.log(alpha) - 0.5 * gammaln(k + 1)
    return np.exp(logs)


def _site_vector(trunc: TruncationSpec, p: int, amps: np.ndarray) -> FockVector:
    tensor = np.zeros(trunc.shape, dtype=complex)
    idx = [0] * len(trunc.shape)
    idx[trunc.axis(p)] = slice(None)
    tensor[tuple(idx)] = amps
    return FockVector(trunc, tensor)


def local_cs(alpha: complex, p: int, trunc: TruncationSpec) -> FockVector:
    """Coherent state of amplitude ``alpha`` at site ``p``, vacuum elsewhere."""
    kmax = trunc.cap(p)
    tail = poisson_tail(alpha, kmax)
    if tail > POISSON_TAIL_TOL:
        need = kmax
        while poisson_tail(alpha, need) > POISSON_TAIL_TOL:
            need = max(need + 1, int(need * 1.25))
        raise ParameterError(
            f"kmax_{p} = {kmax} leaves Poisson tail {tail:.3g} > {POISSON_TAIL_TOL:g} for "
            f"|alpha| = {abs(alpha):.6g}; use kmax >= {need} "
            f"(the default rule gives {required_kmax(alpha)})"
        )
    return _site_vector(trunc, p, local_cs_amplitudes(alpha, kmax))


def _log_site_terms(params: SiteParams, trunc: TruncationSpec, values: np.ndarray):
    """Shared ``log(n^-s prod v_p^a_p)`` over the basis; -inf where a zero value is raised."""
    exps = trunc.exponents
    logp = np.log(np.asarray(trunc.active_primes, dtype=float))
    logs = -params.s * (exps @ logp)
    nz = values != 0
    logv = np.zeros(len(values), dtype=complex)
    logv[nz] = np.log(values[nz])
    logs = logs + exps @ logv
    dead = (exps[:, ~nz] > 0).any(axis=1)
    return logs, dead


def _site_values(params: SiteParams, trunc: TruncationSpec) -> np.ndarray:
    _check_support(params, trunc)
    return np.array([params.value(p) for p in trunc.active_primes], dtype=complex)


def ncs(params: SiteParams, trunc: TruncationSpec) -> FockVector:
    """Nonlocal coherent state in Dirichlet form.

    Amplitude at ``|n>`` is ``exp(-P/2) n^-s prod z_p^a_p / c_n`` with
    ``c_n = sqrt(prod a_p!)``.
    """
    values = _site_values(params, trunc)
    logs, dead = _log_site_terms(params, trunc, values)
    logs = logs - 0.5 * params.weight() - 0.5 * gammaln(trunc.exponents + 1).sum(axis=1)
    amps = np.exp(logs)
    amps[dead] = 0.0
    return FockVector(trunc, amps)


def gen_cs(params: SiteParams, trunc: TruncationSpec) -> FockVector:
    """Coherent state of the generalized bosons ``b_p``.

    Amplitude ``sqrt(S) n^-s prod zeta_p^a_p`` with
    ``S = prod (1 - p^(-2 sigma) |zeta_p|^2)``.
    """
    params.check_generalized()
    values = _site_values(params, trunc)
    log_s = math.fsum(math.log1p(-(p ** (-2 * params.sigma)) * abs(z) ** 2) for p, z in params.entries)
    logs, dead = _log_site_terms(params, trunc, values)
    amps = np.exp(logs + 0.5 * log_s)
    amps[dead] = 0.0
    return FockVector(trunc, amps)


def moebius_state(params: SiteParams, trunc: TruncationSpec) -> FockVector:
    """Moebius-weighted state ``sqrt(S_mu) mu(n) n^-s prod zeta_p^a_p``.

    ``S_mu = prod (1 + p^(-2 sigma) |zeta_p|^2)^-1``; the support is the
    squarefree labels, so ``kmax = 1`` per site already captures it exactly.
    """
    values = _site_values(params, trunc)
    log_s = -math.fsum(math.log1p(p ** (-2 * params.sigma) * abs(z) ** 2) for p, z in params.entries)
    logs, dead = _log_site_terms(params, trunc, values)
    exps = trunc.exponents
    dead |= (exps > 1).any(axis=1)
    sign = np.where(np.count_nonzero(exps, axis=1) % 2 == 0, 1.0, -1.0)
    amps = sign * np.exp(logs + 0.5 * log_s)
    amps[dead] = 0.0
    return FockVector(trunc, amps)


def single_moebius(alpha: complex, p: int, trunc: TruncationSpec) -> FockVector:
    """Single-site Moebius state ``(|1> - alpha |p>) / sqrt(1 + |alpha|^2)``."""
    if trunc.cap(p) < 1:
        raise ConfigurationError(f"single-site Moebius state needs kmax_{p} >= 1")
    amps = np.zeros(trunc.cap(p) + 1, dtype=complex)
    amps[0] = 1.0
    amps[1] = -alpha
    return _site_vector(trunc, p, amps / math.sqrt(1.0 + abs(alpha) ** 2))


def truncation_defect(v: FockVector) -> float:
    """``1 - |v|^2`` clipped to ``[0, 1]``."""
    return min(1.0, max(0.0, 1.0 - math.fsum(np.abs(v.data) ** 2)))


def _site_mass(family: str, alpha: complex, k: int) -> float:
    if family in ("ncs", "local_cs"):
        return 1.0 - poisson_tail(alpha, k)
    if family == "gen_cs":
        return 1.0 - abs(alpha) ** (2 * (k + 1))
    if family in ("moebius", "single_moebius"):
        return 1.0 if k >= 1 or alpha == 0 else 1.0 / (1.0 + abs(alpha) ** 2)
    raise ValueError(f"unknown state family {family!r}")


def analytic_defect(family: str, params: SiteParams, trunc: TruncationSpec) -> float:
    """Defect predicted from the per-site factorization (no vector built)."""
    mass = 1.0
    for p in trunc.active_primes:
        mass *= _site_mass(family, params.alpha(p), trunc.cap(p))
    return max(0.0, 1.0 - mass)


def auto_truncation(
    params: SiteParams,
    family: str = "ncs",
    primes: Optional[Iterable[int]] = None,
    defect_target: float = 1e-10,
    max_size: int = 4_000_000,
    amplitude_floor: float = 0.0,
) -> TruncationSpec:
    """Smallest doubling-ladder truncation with analytic defect below target.

    Each site with a nonzero parameter starts at cap 1 and its cap doubles
    until its own tail drops below ``defect_target / n_sites``.
    """
    primes = tuple(sorted(set(primes if primes is not None else params.primes) | set(params.primes)))
    if not primes:
        primes = (2,)
    share = defect_target / len(primes)
    caps = {}
    for p in primes:
        alpha = params.alpha(p)
        k = 0 if alpha == 0 else 1
        while 1.0 - _site_mass(family, alpha, k) >= share:
            k *= 2
            if k > 4096:
                raise ParameterError(f"site {p}: cap exceeds 4096 without reaching the defect target")
        caps[p] = k
    trunc = TruncationSpec(primes, caps, amplitude_floor)
    if trunc.size > max_size:
        raise ParameterError(
            f"truncation {trunc.kmax} has {trunc.size} basis states, over the budget {max_size}"
        )
    return trunc
