"""Homodyne wavefunctions, the beam splitter and Yurke-Stoler interference.

The homodyne quadrature is ``x = (e^{i theta} a + e^{-i theta} a^dag)/sqrt 2``.
A coherent state in that variable is a unit-mass Gaussian centred at
``sqrt 2 Re(e^{i theta} alpha)`` with second central moment 1/2.
"""

from __future__ import annotations

import cmath
import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .fock import TruncationSpec
from .states import SiteParams, ncs, poisson_tail, prime_power_s

__all__ = [
    "GridReachError",
    "HomodyneProfile",
    "psi",
    "psi_site",
    "center",
    "hermite_functions",
    "psi_fock",
    "beam_split",
    "default_grid",
    "cat_port_density",
    "ncs_port_density",
    "count_local_maxima",
]

PI_QUARTER = math.pi ** -0.25
EPLUS = cmath.exp(0.25j * math.pi)
EMINUS = cmath.exp(-0.25j * math.pi)
# one standard deviation of |psi|^2 in the homodyne variable
SIGMA_X = math.sqrt(0.5)
_TAIL_TOL = 1e-17


class GridReachError(ValueError):
    """The sample grid does not cover the Gaussian mass of the profile."""


def psi(alpha: complex, theta: float, x):
    """``<x|alpha>`` with the unit-norm integration constant ``-(Re e^{i theta} alpha)^2``."""
    beta = cmath.exp(1j * theta) * alpha
    x = np.asarray(x, dtype=float)
    return PI_QUARTER * np.exp(-0.5 * x * x + math.sqrt(2) * beta * x - beta.real**2)


def psi_site(s: complex, z: complex, p: int, theta: float, x):
    """Homodyne wavefunction of site ``p`` of a nonlocal coherent state."""
    return psi(prime_power_s(p, s) * z, theta, x)


def center(alpha: complex, theta: float) -> float:
    return math.sqrt(2) * (cmath.exp(1j * theta) * alpha).real


def hermite_functions(kmax: int, x) -> np.ndarray:
    """Normalized Hermite functions ``h_0..h_kmax`` on ``x`` (rows = k).

    Three-term recurrence on the normalized functions, so no factorials.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((kmax + 1,) + x.shape)
    out[0] = PI_QUARTER * np.exp(-0.5 * x * x)
    if kmax >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for k in range(1, kmax):
        out[k + 1] = math.sqrt(2.0 / (k + 1)) * x * out[k] - math.sqrt(k / (k + 1)) * out[k - 1]
    return out


def _cap_for(alpha: complex) -> int:
    kmax = max(8, math.ceil(abs(alpha) ** 2 + 10 * abs(alpha) + 10))
    while poisson_tail(alpha, kmax) > _TAIL_TOL:
        kmax += 8
    return kmax


def psi_fock(alpha: complex, theta: float, t: float, x, kmax: Optional[int] = None):
    """Homodyne wavefunction of ``e^{i N^2 t} |alpha>`` by Fock-state expansion.

    ``<x|k> = e^{i k theta} h_k(x)`` for the rotated quadrature; the global
    phase ``e^{i Re(beta) Im(beta)}`` (``beta = e^{i theta} alpha``) aligns the
    result with :func:`psi` at ``t = 0``.
    """
    from .states import local_cs_amplitudes

    if kmax is None:
        kmax = _cap_for(alpha)
    k = np.arange(kmax + 1)
    tr = math.remainder(t, 2 * math.pi)
    coeff = local_cs_amplitudes(alpha, kmax) * np.exp(1j * (k * theta + np.remainder(k * k * tr, 2 * math.pi)))
    beta = cmath.exp(1j * theta) * alpha
    coeff = coeff * cmath.exp(1j * beta.real * beta.imag)
    return np.tensordot(coeff, hermite_functions(kmax, x), axes=1)


def beam_split(alpha: complex, eta: float) -> tuple[complex, complex]:
    """Port amplitudes ``(sqrt(eta) alpha, -sqrt(1 - eta) alpha)``."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"splitter efficiency eta must lie in [0, 1], got {eta}")
    return math.sqrt(eta) * alpha, -math.sqrt(1.0 - eta) * alpha


def default_grid(alpha: complex, n: int = 2048) -> np.ndarray:
    reach = math.sqrt(2) * abs(alpha) + 10.0
    return np.linspace(-reach, reach, n)


@dataclass
class HomodyneProfile:
    """Port-A density ``P(x)`` on a grid plus its analytic components.

    ``values = envelope_plus + envelope_minus + cross_term``.
    """

    grid: np.ndarray
    values: np.ndarray
    envelope_plus: np.ndarray
    envelope_minus: np.ndarray
    cross_term: np.ndarray
    meta: dict = field(default_factory=dict)
    quadrature_gap: float = 0.0

    def integral(self) -> float:
        return float(np.trapezoid(self.values, self.grid))

    def normalization_error(self) -> float:
        return abs(self.integral() - 1.0)

    def local_maxima(self, lo: float = -math.inf, hi: float = math.inf) -> np.ndarray:
        return self.grid[_local_max_index(self.values, self.grid, lo, hi)]

    def moments(self) -> tuple[float, float]:
        """(mean, second central moment) of the sampled density."""
        mass = np.trapezoid(self.values, self.grid)
        mean = np.trapezoid(self.grid * self.values, self.grid) / mass
        var = np.trapezoid((self.grid - mean) ** 2 * self.values, self.grid) / mass
        return float(mean), float(var)

    def to_csv(self, header: Sequence[str] = ()) -> str:
        buf = io.StringIO()
        for line in header:
            buf.write(f"# {line}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["x", "P", "envelope_plus", "envelope_minus", "cross_term"])
        for row in zip(self.grid, self.values, self.envelope_plus, self.envelope_minus, self.cross_term):
            writer.writerow([format(float(v), ".17g") for v in row])
        return buf.getvalue()


def _local_max_index(values, grid, lo, hi) -> np.ndarray:
    inner = (values[1:-1] > values[:-2]) & (values[1:-1] > values[2:])
    idx = np.flatnonzero(inner) + 1
    return idx[(grid[idx] >= lo) & (grid[idx] <= hi)]


def count_local_maxima(profile: HomodyneProfile, lo: float = -math.inf, hi: float = math.inf) -> int:
    return len(_local_max_index(profile.values, profile.grid, lo, hi))


def _branch_wavefunctions(alpha, theta, t, x, kmax):
    """``(psi_{+alpha,t}(x), psi_{-alpha,t}(x))`` in closed form at t = 0, else by Fock sum."""
    if math.remainder(t, 2 * math.pi) == 0.0:
        return psi(alpha, theta, x), psi(-alpha, theta, x)
    return psi_fock(alpha, theta, t, x, kmax), psi_fock(-alpha, theta, t, x, kmax)


def _reach(beta: complex, t: float) -> tuple[float, float]:
    """Interval holding the Gaussian mass of ``|psi_{+-beta, t}|^2``."""
    if math.remainder(t, 2 * math.pi) == 0.0:
        c = abs(math.sqrt(2) * beta.real)
    else:
        # Kerr-evolved branches spread around the circle of radius sqrt2 |beta|
        c = math.sqrt(2) * abs(beta)
    return -c - 8 * SIGMA_X, c + 8 * SIGMA_X


def cat_port_density(
    alpha: complex,
    eta: float,
    theta_a: float = 0.0,
    theta_b: float = 0.0,
    t: float = 0.0,
    grid: Optional[np.ndarray] = None,
    n_y: int = 256,
    kmax: Optional[int] = None,
    check: bool = True,
) -> HomodyneProfile:
    """Port-A density of the split cat state, by y-quadrature and analytically.

    The output wavefunction is
    ``(e^{i pi/4} A+(x) B+(y) + e^{-i pi/4} A-(x) B-(y)) / sqrt 2`` with
    ``A+- = psi_{+-sqrt(eta) alpha, t}`` and ``B+- = psi_{-+sqrt(1-eta) alpha, t}``.
    ``P(x)`` is integrated over ``y`` with Gauss-Legendre and compared
    pointwise with ``|A+|^2/2 + |A-|^2/2 + Re(i A+ conj(A-) G_B)``, where
    ``G_B = <B-|B+> = exp(-2 (1 - eta) |alpha|^2)``.
    """
    a_amp, b_amp = beam_split(alpha, eta)
    if grid is None:
        grid = default_grid(alpha)
    grid = np.asarray(grid, dtype=float)
    lo, hi = _reach(cmath.exp(1j * theta_a) * a_amp, t)
    if grid[0] > lo or grid[-1] < hi:
        raise GridReachError(
            f"grid [{grid[0]:.4g}, {grid[-1]:.4g}] must cover [{lo:.4g}, {hi:.4g}] "
            f"(8 standard deviations beyond the branch centres); widen it"
        )
    if kmax is None:
        kmax = _cap_for(alpha)

    a_plus, a_minus = _branch_wavefunctions(a_amp, theta_a, t, grid, kmax)

    # port B: Gauss-Legendre over the reach of both branches
    ylo, yhi = _reach(cmath.exp(1j * theta_b) * b_amp, t)
    ylo, yhi = ylo - 4.0, yhi + 4.0
    nodes, weights = np.polynomial.legendre.leggauss(n_y)
    y = 0.5 * (yhi - ylo) * nodes + 0.5 * (yhi + ylo)
    wy = 0.5 * (yhi - ylo) * weights
    b_plus, b_minus = _branch_wavefunctions(b_amp, theta_b, t, y, kmax)

    env_plus = 0.5 * np.abs(a_plus) ** 2
    env_minus = 0.5 * np.abs(a_minus) ** 2
    g_b = math.exp(-2.0 * abs(b_amp) ** 2)
    cross = np.real(1j * a_plus * np.conj(a_minus) * g_b)
    analytic = env_plus + env_minus + cross

    out_plus = EPLUS * np.outer(a_plus, b_plus)
    out_minus = EMINUS * np.outer(a_minus, b_minus)
    quad = 0.5 * (np.abs(out_plus + out_minus) ** 2) @ wy
    gap = float(np.max(np.abs(quad - analytic)))
    if check and gap > 1e-10:
        raise ArithmeticError(f"quadrature and analytic port densities differ by {gap:.3g}")

    meta = {"alpha": complex(alpha), "eta": eta, "theta_a": theta_a, "theta_b": theta_b, "t": t}
    return HomodyneProfile(grid, analytic, env_plus, env_minus, cross, meta, gap)


def ncs_port_density(
    params: SiteParams,
    q: int,
    eta: float,
    theta_a: Optional[float] = None,
    theta_b: float = 0.0,
    t: float = 0.0,
    grid: Optional[np.ndarray] = None,
    **kwargs,
) -> HomodyneProfile:
    """Port-A density when the splitter sits at site ``q`` of a nonlocal cat.

    Only ``alpha = q^-s z_q`` enters.  As a second route the amplitude is
    also read off the built state (ratio of the ``|q>`` and ``|1>``
    amplitudes of a minimal truncation); both must agree to 1e-12.
    """
    alpha = params.alpha(q)
    primes = tuple(sorted(set(params.primes) | {q}))
    probe = ncs(params, TruncationSpec(primes, 1))
    vac = probe.amplitude(1)
    read_off = probe.amplitude(q) / vac
    if abs(read_off - alpha) > 1e-12 * max(1.0, abs(alpha)):
        raise ArithmeticError(f"site amplitude {read_off} disagrees with q^-s z_q = {alpha}")
    if theta_a is None:
        theta_a = params.theta(q)
    prof = cat_port_density(alpha, eta, theta_a, theta_b, t, grid, **kwargs)
    prof.meta["site"] = q
    return prof
