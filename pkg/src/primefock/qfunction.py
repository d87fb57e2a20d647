"""Husimi-type functions of coherent and nonlocal coherent states.

``q_value`` always means the phase-space function; the arithmetic energy
``sum_p a_p(n)^2`` is ``q_energy`` elsewhere and never appears here.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .dynamics import HamiltonianKind, energies, evolve
from .fock import TruncationSpec, inner
from .states import ParameterError, SiteParams, ncs

__all__ = [
    "SeriesCapError",
    "QGrid",
    "SERIES_TOL",
    "SERIES_HARD_CAP",
    "required_series_cap",
    "s_closed",
    "q_single",
    "q_ncs",
    "s_dirichlet",
    "overlap_parameter",
    "equivalence_global",
    "separability_check",
    "resolution_matrix",
    "resolution_check_single_site",
]

SERIES_TOL = 1e-18
SERIES_HARD_CAP = 400

_KINDS = {
    "harmonic": HamiltonianKind.harmonic(),
    "local-quadratic": HamiltonianKind.local_quadratic(),
    "global-quadratic": HamiltonianKind.global_quadratic(),
}


class SeriesCapError(ValueError):
    """An exponential-type series would need more terms than allowed."""


@dataclass(frozen=True)
class QGrid:
    """Evaluation points (complex for one site, per-site tuples for NCS) and times."""

    points: tuple
    times: tuple[float, ...]

    def __post_init__(self):
        if not self.points or not self.times:
            raise ValueError("QGrid needs at least one point and one time")
        pts = tuple(self.points)
        times = tuple(float(t) for t in self.times)
        for t in times:
            if not math.isfinite(t):
                raise ValueError(f"non-finite time {t}")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "times", times)


def _as_kind(kind) -> HamiltonianKind:
    if isinstance(kind, HamiltonianKind):
        return kind
    try:
        return _KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown Q-function kind {kind!r}; expected {sorted(_KINDS)}") from None


def required_series_cap(a: complex, tol: float = SERIES_TOL) -> int:
    """Smallest ``k`` with ``|a|^k / k! < tol``."""
    r = abs(a)
    if r == 0:
        return 1
    log_tol = math.log(tol)
    log_r = math.log(r)
    k = max(1, math.ceil(r))
    while k * log_r - math.lgamma(k + 1) >= log_tol:
        k += 1
    return k


def s_closed(a: complex, t: float, kcap: int | None = None) -> complex:
    """``S(t) = sum_k a^k / k! exp(i k^2 t)`` summed in ascending ``k``.

    ``kcap`` is the last index summed; it must leave a first omitted term
    below ``SERIES_TOL`` and may not exceed ``SERIES_HARD_CAP``.
    """
    need = required_series_cap(a)
    if kcap is None:
        kcap = need
    if kcap < need:
        raise SeriesCapError(f"kcap = {kcap} too small for |a| = {abs(a):.6g}; need kcap >= {need}")
    if kcap > SERIES_HARD_CAP:
        raise SeriesCapError(
            f"|a| = {abs(a):.6g} needs {kcap} terms, over the hard cap {SERIES_HARD_CAP}"
        )
    k = np.arange(kcap + 1)
    tr = math.remainder(t, 2 * math.pi)
    phases = np.exp(1j * np.remainder(k * k * tr, 2 * math.pi))
    if a == 0:
        return complex(phases[0])
    terms = np.exp(k * cmath.log(a) - gammaln(k + 1)) * phases
    return complex(math.fsum(terms.real), math.fsum(terms.imag))


def q_single(alpha0: complex, alpha: complex, t: float, kind: str = "harmonic") -> float:
    """Q-function of ``|alpha0>`` evolved for time ``t``, evaluated at ``alpha``."""
    if kind == "harmonic":
        return math.exp(-abs(alpha - cmath.exp(-1j * t) * alpha0) ** 2)
    if kind == "quadratic":
        s = s_closed(alpha0.conjugate() * alpha, t)
        # combine in log-space: |S|^2 may be huge while the prefactor is tiny
        log_q = -abs(alpha) ** 2 - abs(alpha0) ** 2 + 2 * math.log(abs(s)) if s != 0 else -math.inf
        return math.exp(log_q)
    raise ValueError(f"unknown single-site kind {kind!r}; expected 'harmonic' or 'quadratic'")


def q_ncs(
    params0: SiteParams, params: SiteParams, t: float, kind, trunc: TruncationSpec
) -> float:
    """``<s, z| rho(t) |s, z>`` for ``rho(t) = e^{-iHt} |s, z0><s, z0| e^{iHt}``.

    Computed as ``|<s, z| e^{-iHt} |s, z0>|^2`` from truncated kets.  The
    density matrix moves with ``e^{-iHt}`` even though kets elsewhere are
    propagated with ``e^{+iHt}``; this is what makes the harmonic centre
    rotate to ``e^{-it} z0``.
    """
    if params0.s != params.s:
        raise ParameterError("both states must share the same s")
    kind = _as_kind(kind)
    psi0 = evolve(kind, t, ncs(params0, trunc), sign=-1)
    psi = ncs(params, trunc)
    return abs(inner(psi, psi0)) ** 2


def overlap_parameter(params0: SiteParams, params: SiteParams) -> complex:
    """``a = sum_p p^(-2 sigma) conj(z0_p) z_p``."""
    primes = sorted(set(params0.primes) | set(params.primes))
    sigma = params.sigma
    terms = [p ** (-2 * sigma) * params0.value(p).conjugate() * params.value(p) for p in primes]
    return complex(math.fsum(z.real for z in terms), math.fsum(z.imag for z in terms))


def s_dirichlet(
    params0: SiteParams, params: SiteParams, t: float, kind, trunc: TruncationSpec
) -> complex:
    """``sum_n prod_p (p^(-2 sigma) conj(z0_p) z_p)^a_p / c_n^2 * exp(i E(n) t)``
    over the truncated basis."""
    kind = _as_kind(kind)
    exps = trunc.exponents
    sigma = params.sigma
    w = np.array(
        [p ** (-2 * sigma) * params0.value(p).conjugate() * params.value(p) for p in trunc.active_primes],
        dtype=complex,
    )
    nz = w != 0
    logw = np.zeros(len(w), dtype=complex)
    logw[nz] = np.log(w[nz])
    logs = exps @ logw - gammaln(exps + 1).sum(axis=1)
    terms = np.exp(logs)
    terms[(exps[:, ~nz] > 0).any(axis=1)] = 0.0
    tr = math.remainder(t, 2 * math.pi)
    terms = terms * np.exp(1j * np.remainder(energies(kind, trunc) * tr, 2 * math.pi))
    return complex(math.fsum(terms.real), math.fsum(terms.imag))


def equivalence_global(
    params0: SiteParams, params: SiteParams, t: float, trunc: TruncationSpec
) -> tuple[complex, complex]:
    """Globally quadratic ``S(t)`` two ways: basis sum and the one-variable series."""
    direct = s_dirichlet(params0, params, t, "global-quadratic", trunc)
    closed = s_closed(overlap_parameter(params0, params), t)
    return direct, closed


def separability_check(
    params0: SiteParams,
    params: SiteParams,
    t: float,
    trunc: TruncationSpec,
    kind="local-quadratic",
) -> float:
    """Relative gap between the joint Q-function and the product of per-site ones.

    Per-site factors are single-site quadratic Q-functions of
    ``alpha_p = p^-s z_p``; the joint value comes from :func:`q_ncs` under
    ``kind``.
    """
    joint = q_ncs(params0, params, t, kind, trunc)
    product = 1.0
    for p in trunc.active_primes:
        product *= q_single(params0.alpha(p), params.alpha(p), t, "quadratic")
    return abs(joint - product) / product


def resolution_matrix(
    p: int, s: complex, r_max: float, n_r: int, n_mu: int, kmax: int
) -> np.ndarray:
    """Single-site coherent-state frame operator on ``k <= kmax``.

    Integrates ``e^{|alpha|^2} |alpha><alpha|`` against ``d chi_p d mu`` where
    ``alpha = p^-s r e^{2 pi i mu}`` and
    ``d chi_p = 2 p^(-2 sigma) r exp(-p^(-2 sigma) r^2) dr``: Gauss-Legendre
    over ``r in [0, r_max]`` and the periodic trapezoid rule in ``mu``.
    """
    s = complex(s)
    sigma = s.real
    if not sigma > 0.5:
        raise ParameterError(f"sigma = {sigma} must exceed 1/2")
    if n_r < 32 or n_mu < 32:
        raise ValueError("quadrature sizes must be >= 32")
    nodes, weights = np.polynomial.legendre.leggauss(n_r)
    r = 0.5 * r_max * (nodes + 1.0)
    wr = 0.5 * r_max * weights
    lam = p ** (-2 * sigma)
    dchi = 2.0 * lam * r * np.exp(-lam * r * r) * wr
    mu = np.arange(n_mu) / n_mu
    scale = cmath.exp(-s * math.log(p))
    alpha = scale * np.outer(r, np.exp(2j * math.pi * mu)).reshape(-1)
    w = np.repeat(dchi, n_mu) / n_mu
    k = np.arange(kmax + 1)
    # e^{|alpha|^2} cancels the coherent-state normalization exactly
    with np.errstate(divide="ignore"):
        log_abs = np.log(np.abs(alpha))
    cols = np.exp(np.outer(log_abs, k) - 0.5 * gammaln(k + 1)) * np.exp(1j * np.outer(np.angle(alpha), k))
    cols[:, 0] = 1.0
    return (cols.T * w) @ cols.conj()


def resolution_check_single_site(
    p: int,
    s: complex,
    r_max: float | None = None,
    n_r: int = 512,
    n_mu: int = 512,
    kmax: int = 12,
) -> float:
    """``max |M_kl - delta_kl|`` for :func:`resolution_matrix`.

    ``r_max`` defaults to a radius whose Poisson mass beyond reach is
    below 1e-12 for every ``k <= kmax``.
    """
    if r_max is None:
        sigma = complex(s).real
        lam_max = kmax + 12 * math.sqrt(kmax + 1) + 40
        r_max = math.sqrt(lam_max) * p**sigma
    m = resolution_matrix(p, s, r_max, n_r, n_mu, kmax)
    return float(np.max(np.abs(m - np.eye(kmax + 1))))
