import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from primefock.fock import TruncationSpec
from primefock.qfunction import (
    QGrid,
    SeriesCapError,
    equivalence_global,
    overlap_parameter,
    q_ncs,
    q_single,
    resolution_check_single_site,
    resolution_matrix,
    s_closed,
    s_dirichlet,
    separability_check,
)
from primefock.states import SiteParams, auto_truncation, ncs, truncation_defect

EP, EM = cmath.exp(0.25j * math.pi), cmath.exp(-0.25j * math.pi)

small_complex = st.complex_numbers(max_magnitude=2.5, allow_nan=False, allow_infinity=False)


def test_s_closed_examples():
    a = 0.7 - 1.3j
    assert s_closed(a, 0.0) == pytest.approx(cmath.exp(a), rel=1e-14)
    assert s_closed(0, 1.234) == 1
    half = (EP * cmath.exp(a) + EM * cmath.exp(-a)) / math.sqrt(2)
    assert s_closed(a, math.pi / 2) == pytest.approx(half, rel=1e-13)
    assert s_closed(a, 0.9) == pytest.approx(oracles.s_series(a, 0.9), rel=1e-13)


def test_s_closed_cap_errors():
    with pytest.raises(SeriesCapError, match="need kcap >= "):
        s_closed(3.0, 0.1, kcap=5)
    with pytest.raises(SeriesCapError, match="hard cap"):
        s_closed(200.0, 0.1)


@settings(max_examples=60, deadline=None)
@given(small_complex, small_complex, st.floats(-10, 10))
def test_q_single_bounds_and_t0(alpha0, alpha, t):
    for kind in ("harmonic", "quadratic"):
        q = q_single(alpha0, alpha, t, kind)
        assert 0 <= q <= 1 + 1e-12
        assert q_single(alpha0, alpha, 0.0, kind) == pytest.approx(math.exp(-abs(alpha - alpha0) ** 2), rel=1e-11,
                                                                   abs=1e-300)


def test_q_single_examples():
    assert q_single(1 + 1j, 1 + 1j, 0.0, "quadratic") == pytest.approx(1, rel=1e-14)
    a0, a = 0.8 - 0.2j, -0.3 + 1.1j
    assert q_single(a0, a, math.pi, "quadratic") == pytest.approx(math.exp(-abs(a + a0) ** 2), rel=1e-12)
    direct = math.exp(-abs(a) ** 2 - abs(a0) ** 2) * abs(oracles.s_series(a0.conjugate() * a, math.pi)) ** 2
    assert q_single(a0, a, math.pi, "quadratic") == pytest.approx(direct, rel=1e-12)
    t = 0.7
    assert q_single(a0, a, t, "harmonic") == pytest.approx(math.exp(-abs(a - cmath.exp(-1j * t) * a0) ** 2))
    with pytest.raises(ValueError):
        q_single(a0, a, t, "kerr")


@settings(max_examples=40, deadline=None)
@given(small_complex, small_complex)
def test_q_single_quadratic_at_quarter_period(alpha0, alpha):
    w = alpha0.conjugate() * alpha
    expected = math.exp(-abs(alpha) ** 2 - abs(alpha0) ** 2) * abs(
        (EP * cmath.exp(w) + EM * cmath.exp(-w)) / math.sqrt(2)
    ) ** 2
    assert q_single(alpha0, alpha, math.pi / 2, "quadratic") == pytest.approx(expected, rel=1e-9, abs=1e-14)


def _weighted_gap(params0, params):
    return math.fsum(
        p ** (-2 * params.sigma) * abs(params.value(p) - params0.value(p)) ** 2
        for p in set(params.primes) | set(params0.primes)
    )


def test_q_ncs_examples():
    s = 0.9 + 0.4j
    p0 = SiteParams(s, {2: 1.0 - 0.5j, 3: 0.4j})
    p1 = SiteParams(s, {2: 0.3, 3: -0.6 + 0.2j})
    trunc = TruncationSpec((2, 3), 30)
    defect = truncation_defect(ncs(p0, trunc)) + truncation_defect(ncs(p1, trunc))
    for kind in ("harmonic", "local-quadratic", "global-quadratic"):
        assert q_ncs(p0, p1, 0.0, kind, trunc) == pytest.approx(math.exp(-_weighted_gap(p0, p1)),
                                                               abs=10 * defect + 1e-12)
        vac = SiteParams(s, {})
        assert q_ncs(vac, vac, 1.7, kind, trunc) == pytest.approx(1, abs=1e-15)
    t = 1.9
    rotated = SiteParams(s, {p: cmath.exp(-1j * t) * z for p, z in p0.entries})
    assert q_ncs(p0, p1, t, "harmonic", trunc) == pytest.approx(math.exp(-_weighted_gap(rotated, p1)),
                                                               abs=10 * defect + 1e-12)
    with pytest.raises(ValueError):
        q_ncs(p0, SiteParams(1.0, {}), 0.0, "harmonic", trunc)


def test_harmonic_marginal_is_rotating_gaussian():
    s = 1.0
    p0 = SiteParams(s, {2: 1.2, 3: -0.5j, 5: 0.7})
    trunc = auto_truncation(p0, "ncs", defect_target=1e-13)
    t = 0.6
    for z2 in (0.0, 1.0 + 1.0j, -0.8 + 0.3j, 2.0j):
        probe = p0.replace(2, z2)
        got = q_ncs(p0, probe, t, "harmonic", trunc)
        gauss = math.exp(-(2 ** -2) * abs(z2 - cmath.exp(-1j * t) * 1.2) ** 2)
        # the other sites contribute a t-dependent constant factor
        others = math.exp(-sum(p ** -2 * abs(z - cmath.exp(-1j * t) * z) ** 2 for p, z in p0.entries if p != 2))
        assert got == pytest.approx(gauss * others, rel=1e-9)


def test_absolute_convergence_guard():
    s = 0.8
    z0 = {2: 1.1 - 0.3j, 3: -0.6j}
    z = {2: 0.4 + 0.9j, 3: 1.2}
    mags0 = SiteParams(s, {p: abs(v) for p, v in z0.items()})
    mags = SiteParams(s, {p: abs(v) for p, v in z.items()})
    trunc = TruncationSpec((2, 3), 40)
    total = s_dirichlet(mags0, mags, 0.0, "harmonic", trunc)
    bound = math.exp(sum(p ** (-2 * s) * abs(z0[p].conjugate() * z[p]) for p in z))
    assert total.real == pytest.approx(bound, rel=1e-13)
    assert abs(total.imag) < 1e-15


def test_s_dirichlet_matches_oracle():
    s, z0, z = 0.9, {2: 1.0, 3: 0.5 - 0.5j}, {2: -0.4j, 3: 1.3}
    trunc = TruncationSpec((2, 3), (25, 18))
    for kind in ("harmonic", "local-quadratic", "global-quadratic"):
        got = s_dirichlet(SiteParams(s, z0), SiteParams(s, z), 1.3, kind, trunc)
        ref = oracles.s_basis_sum((2, 3), (25, 18), s + 0j, z0, z, kind, 1.3)
        assert got == pytest.approx(ref, rel=1e-13)


def test_equivalence_global_examples():
    s = 1.0 + 0.2j
    p0, p1 = SiteParams(s, {2: 1.0, 3: 0.5j}), SiteParams(s, {2: 0.7 - 0.2j, 3: -1.0})
    trunc = TruncationSpec((2, 3), 30)
    a = overlap_parameter(p0, p1)
    direct, closed = equivalence_global(p0, p1, 0.0, trunc)
    assert direct == pytest.approx(cmath.exp(a), rel=1e-13)
    assert closed == pytest.approx(cmath.exp(a), rel=1e-14)
    direct, closed = equivalence_global(p0, p1, 1.3, trunc)
    assert abs(direct - closed) <= 1e-12 * abs(closed)
    single0, single1 = SiteParams(s, {2: 1.3}), SiteParams(s, {2: -0.4 + 0.9j})
    t2 = TruncationSpec((2,), 60)
    direct, closed = equivalence_global(single0, single1, 0.77, t2)
    ref = oracles.s_series(single0.alpha(2).conjugate() * single1.alpha(2), 0.77)
    assert direct == pytest.approx(ref, rel=1e-13) and closed == pytest.approx(ref, rel=1e-13)


def test_separability_examples():
    s = 0.8
    one0, one1 = SiteParams(s, {2: 1.2}), SiteParams(s, {2: 0.5j})
    assert separability_check(one0, one1, 0.9, TruncationSpec((2,), 60)) < 1e-13
    p0 = SiteParams(s, {2: 1.1 - 0.2j, 3: 0.9})
    p1 = SiteParams(s, {2: 0.6, 3: 1.2 + 0.3j})
    trunc = auto_truncation(p0, "ncs", defect_target=1e-12)
    defect = truncation_defect(ncs(p0, trunc)) + truncation_defect(ncs(p1, trunc))
    bound = 1e-8 + 10 * defect
    assert separability_check(p0, p1, 1.3, trunc) <= bound
    assert separability_check(p0, p1, 1.3, trunc, kind="global-quadratic") >= 100 * bound


def test_qgrid_validation():
    g = QGrid([0j, 1 + 1j], [0, 0.5])
    assert g.times == (0.0, 0.5)
    with pytest.raises(ValueError):
        QGrid([], [0.0])
    with pytest.raises(ValueError):
        QGrid([0j], [math.nan])


def test_resolution_examples():
    m = resolution_matrix(2, 1.0, r_max=40.0, n_r=256, n_mu=64, kmax=6)
    assert np.max(np.abs(np.diag(m) - 1)) < 1e-6
    off = m - np.diag(np.diag(m))
    assert np.max(np.abs(off)) < 1e-12
    # kmax = 0: total mass of d chi_p over [0, r_max]
    r_max = 3.0
    lam = 2.0**-2
    m0 = resolution_matrix(2, 1.0, r_max=r_max, n_r=128, n_mu=32, kmax=0)
    assert m0[0, 0].real == pytest.approx(1 - math.exp(-lam * r_max**2), rel=1e-12)
    assert resolution_check_single_site(2, 1.0, n_r=512, n_mu=512, kmax=12) <= 1e-6
    with pytest.raises(ValueError):
        resolution_matrix(2, 0.5, 10.0, 64, 64, 3)
