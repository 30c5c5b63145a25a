import cmath
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from waveqed.analysis import band_edges, band_midpoint, find_crp
from waveqed.errors import BandEdgeSingularity, DomainError
from waveqed.oracles import lamb_shift_closed_form
from waveqed.scattering import (
    EIT_POLE,
    InputState,
    SystemParams,
    build_custom,
    build_dark_state,
    build_equal_superposition,
    build_scss,
    build_single_mode,
    emitter_amplitude,
    fault_injection,
    one_sided_limit,
    resolvent,
    scatter,
)
from waveqed.selfenergy import decay_rate_mode, propagating_modes
from waveqed.waveguide import WaveguideGeometry

from conftest import GEOM, cutoff_oracle

MN = [(1, 1), (3, 1), (1, 3), (5, 1)]
CUTOFFS = [cutoff_oracle(m, n) for m, n in MN]
PARITY = [round(math.sin(m * math.pi / 2) * math.sin(n * math.pi / 2)) for m, n in MN]


@st.composite
def scenario(draw, bands=(1, 2, 3)):
    band = draw(st.sampled_from(bands))
    lo, hi = band_edges(GEOM, band)
    frac = draw(st.floats(1e-5, 1 - 1e-5))
    params = SystemParams(
        omega_e=band_midpoint(GEOM, band) + draw(st.floats(-0.5, 0.5)),
        Omega=draw(st.floats(0.0, 2.0)),
        delta=draw(st.floats(-2.0, 2.0)),
        g=draw(st.floats(0.01, 0.3)),
        geom=GEOM,
    )
    re = draw(st.lists(st.floats(-1, 1), min_size=band, max_size=band))
    im = draw(st.lists(st.floats(-1, 1), min_size=band, max_size=band))
    c = np.array(re) + 1j * np.array(im)
    assume(np.linalg.norm(c) > 1e-3)
    return lo + frac * (hi - lo), params, c / np.linalg.norm(c)


def oracle_reflectance(omega, params, c):
    """Reflectance assembled by hand: closed-form shifts, explicit couplings and densities."""
    cut = [w for w in CUTOFFS if w < omega]
    lamb = sum(lamb_shift_closed_form(w, omega, params.g) for w in cut)
    signs = PARITY
    k = [math.sqrt(omega**2 - w**2) for w in cut]
    rho = [omega / kj for kj in k]
    gk = [-params.g * w * s * cmath.exp(-1j * kj * params.geom.z0) / math.sqrt(omega) for w, s, kj in zip(cut, signs, k)]
    gmk = [-params.g * w * s * cmath.exp(1j * kj * params.geom.z0) / math.sqrt(omega) for w, s, kj in zip(cut, signs, k)]
    gamma = sum(2 * math.pi * abs(x) ** 2 * r for x, r in zip(gk, rho))
    drive = params.Omega**2 / (omega - params.omega_e + params.delta) if params.Omega else 0.0
    G = omega - params.omega_e - drive - lamb + 1j * gamma
    S = sum(cj * x for cj, x in zip(c, gk))
    r = [-2j * math.pi * rj * x.conjugate() * S / G for rj, x in zip(rho, gmk)]
    flux = sum(abs(cj) ** 2 / rj for cj, rj in zip(c, rho))
    return sum(abs(x) ** 2 / rj for x, rj in zip(r, rho)) / flux


def gammas(omega, params):
    return np.array([decay_rate_mode(m, omega, params.g) for m in propagating_modes(params.geom, omega)])


# -- resolvent -------------------------------------------------------------------


def test_resolvent_two_level_form(single_mode_params):
    p = single_mode_params.replace(Omega=0.0)
    omega = 5.0
    G = resolvent(omega, p)
    lamb = lamb_shift_closed_form(CUTOFFS[0], omega, p.g)
    assert G.real == pytest.approx(omega - p.omega_e - lamb, rel=1e-12)
    assert G.imag == decay_rate_mode(propagating_modes(GEOM, omega)[0], omega, p.g)


def test_resolvent_pole_marker(single_mode_params):
    p = single_mode_params
    assert resolvent(p.eit_frequency, p) is EIT_POLE
    assert repr(EIT_POLE) == "EIT_POLE"


@settings(max_examples=50, deadline=None)
@given(scenario())
def test_imag_resolvent_positive(case):
    omega, params, _ = case
    G = resolvent(omega, params)
    assume(G is not EIT_POLE)
    assert G.imag > 0


# -- general scattering ------------------------------------------------------------


@settings(max_examples=200, deadline=None)
@given(scenario())
def test_unitarity(case):
    omega, params, c = case
    res = scatter(InputState(omega, c), params)
    assert abs(res.R_total + res.T_total - 1.0) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(scenario(), st.floats(-2, 2))
def test_reflectance_against_hand_assembly(case, z0):
    omega, params, c = case
    params = params.replace(geom=WaveguideGeometry(a=1.5, z0=z0))
    assume(not params.at_eit_pole(omega))
    res = scatter(InputState(omega, c), params)
    assert res.R_total == pytest.approx(oracle_reflectance(omega, params, c), rel=1e-9, abs=1e-14)


def test_generic_two_mode_point(two_mode_params):
    c = np.array([0.6, 0.8j])
    res = scatter(InputState(8.0, c), two_mode_params)
    assert res.R_total == pytest.approx(oracle_reflectance(8.0, two_mode_params, c), rel=1e-10)


@settings(max_examples=50, deadline=None)
@given(scenario(), st.floats(0, 2 * math.pi))
def test_global_phase_invariance(case, phi):
    omega, params, c = case
    a = scatter(InputState(omega, c), params)
    b = scatter(InputState(omega, c * cmath.exp(1j * phi)), params)
    assert b.R_total == pytest.approx(a.R_total, rel=1e-12, abs=1e-15)


@settings(max_examples=50, deadline=None)
@given(scenario())
def test_cauchy_schwarz_bound(case):
    omega, params, c = case
    res = scatter(InputState(omega, c), params)
    assume(not res.at_eit_pole)
    bound = gammas(omega, params).sum() ** 2 / abs(res.G_value) ** 2
    assert res.R_total <= bound * (1 + 1e-12)


@settings(max_examples=30, deadline=None)
@given(scenario(), st.floats(-3, 3))
def test_z0_invariance_for_scss_and_sms(case, z0):
    omega, params, _ = case
    moved = params.replace(geom=WaveguideGeometry(a=1.5, z0=z0))
    for build in (build_scss, lambda w, p: build_single_mode(w, 1, p)):
        r0 = scatter(build(omega, params), params).R_total
        r1 = scatter(build(omega, moved), moved).R_total
        assert r1 == pytest.approx(r0, rel=1e-11, abs=1e-15)


# -- closed forms ---------------------------------------------------------------


@settings(max_examples=50, deadline=None)
@given(scenario(bands=(1,)))
def test_single_mode_closed_form(case):
    omega, params, _ = case
    res = scatter(build_single_mode(omega, 1, params), params)
    assume(not res.at_eit_pole)
    g1 = gammas(omega, params)[0]
    assert res.R_total == pytest.approx(g1**2 / abs(res.G_value) ** 2, rel=1e-12, abs=1e-15)


@settings(max_examples=50, deadline=None)
@given(scenario(bands=(2, 3)))
def test_scss_closed_form(case):
    omega, params, _ = case
    res = scatter(build_scss(omega, params), params)
    assume(not res.at_eit_pole)
    gam = gammas(omega, params)
    G2 = abs(res.G_value) ** 2
    assert res.R_total == pytest.approx(gam.sum() ** 2 / G2, rel=1e-12, abs=1e-15)
    np.testing.assert_allclose(res.T_per_mode, gam / gam.sum() - res.R_per_mode, rtol=1e-10, atol=1e-14)


@settings(max_examples=50, deadline=None)
@given(scenario(bands=(2, 3)), st.integers(1, 3))
def test_sms_closed_form(case, n):
    omega, params, _ = case
    gam = gammas(omega, params)
    assume(n <= len(gam))
    res = scatter(build_single_mode(omega, n, params), params)
    assume(not res.at_eit_pole)
    G2 = abs(res.G_value) ** 2
    assert res.R_per_mode[n - 1] == pytest.approx(gam[n - 1] ** 2 / G2, rel=1e-12, abs=1e-15)
    for j in range(len(gam)):
        if j != n - 1:
            assert res.R_per_mode[j] == pytest.approx(gam[n - 1] * gam[j] / G2, rel=1e-12, abs=1e-15)
            assert res.T_per_mode[j] == pytest.approx(res.R_per_mode[j], rel=1e-12, abs=1e-15)
    assert res.R_total == pytest.approx(gam.sum() * gam[n - 1] / G2, rel=1e-12, abs=1e-15)


def test_sms_bounded_at_fano_resonance(two_mode_params, band2):
    rep = find_crp(band2, "scss", two_mode_params)
    assert rep.crp_count == 2
    for w in rep.crp:
        gam = gammas(w, two_mode_params)
        for n in (1, 2):
            R = scatter(build_single_mode(w, n, two_mode_params), two_mode_params).R_total
            assert R == pytest.approx(gam[n - 1] / gam.sum(), abs=1e-9)
            assert R < 1


# -- input builders ----------------------------------------------------------------


def test_scss_single_mode_is_trivial(single_mode_params):
    c = build_scss(5.0, single_mode_params).coeffs
    assert c.shape == (1,) and abs(abs(c[0]) - 1) < 1e-15


def test_scss_amplitudes_at_eight(two_mode_params):
    c = build_scss(8.0, two_mode_params).coeffs
    rho = [8 / math.sqrt(64 - w**2) for w in CUTOFFS[:2]]
    weights = np.array([r * w for r, w in zip(rho, CUTOFFS[:2])])
    np.testing.assert_allclose(np.abs(c), weights / np.linalg.norm(weights), rtol=1e-13)
    assert abs(c[0]) == pytest.approx(0.28, abs=0.005)
    assert abs(c[1]) == pytest.approx(0.96, abs=0.005)


def test_scss_is_reflectance_maximizer(two_mode_params, band2):
    """Grid search over normalised two-mode inputs at a Fano-resonant frequency."""
    w = find_crp(band2, "scss", two_mode_params).crp[0]
    best, best_c = -1.0, None
    for theta in np.linspace(0, math.pi / 2, 181):
        for phi in np.linspace(0, 2 * math.pi, 73)[:-1]:
            c = np.array([math.cos(theta), cmath.exp(1j * phi) * math.sin(theta)])
            R = scatter(InputState(w, c), two_mode_params).R_total
            if R > best:
                best, best_c = R, c
    scss = build_scss(w, two_mode_params).coeffs
    overlap = abs(np.vdot(scss, best_c))
    assert overlap > 1 - 1e-3
    assert scatter(build_scss(w, two_mode_params), two_mode_params).R_total >= best - 1e-12
    assert scatter(build_scss(w, two_mode_params), two_mode_params).R_total >= 1 - 1e-9


def test_scss_transmission_vanishes_at_root(two_mode_params, band2):
    w = find_crp(band2, "scss", two_mode_params).crp[0]
    res = scatter(build_scss(w, two_mode_params), two_mode_params)
    assert np.all(np.abs(res.T_per_mode) < 1e-9)


@settings(max_examples=30, deadline=None)
@given(scenario(bands=(2, 3)))
def test_dark_state(case):
    omega, params, _ = case
    state = build_dark_state(omega, params)
    modes = propagating_modes(GEOM, omega)
    k = [math.sqrt(omega**2 - m.cutoff**2) for m in modes]
    g = [-params.g * m.cutoff * m.parity / math.sqrt(omega) for m in modes]
    assert abs(sum(c * x for c, x in zip(state.coeffs, g))) < 1e-14
    res = scatter(state, params)
    assert res.R_total <= 1e-12
    np.testing.assert_allclose(res.t, state.coeffs, atol=1e-12)
    assert emitter_amplitude(omega, state, params) == pytest.approx(0, abs=1e-13)
    assert len(k) == state.jmax


def test_dark_state_needs_two_channels(single_mode_params):
    with pytest.raises(DomainError):
        build_dark_state(5.0, single_mode_params)


@pytest.mark.parametrize("band, value", [(1, 1.0), (2, 1 / math.sqrt(2)), (3, 1 / math.sqrt(3))])
def test_equal_superposition(band, value, two_mode_params):
    w = band_midpoint(GEOM, band)
    c = build_equal_superposition(w, two_mode_params).coeffs
    np.testing.assert_allclose(c, value, rtol=1e-15)


def test_custom_normalises_and_checks_length(two_mode_params):
    state = build_custom(8.0, [3, 4j], two_mode_params)
    np.testing.assert_allclose(state.coeffs, [0.6, 0.8j])
    with pytest.raises(DomainError):
        build_custom(8.0, [1, 1, 1], two_mode_params)
    with pytest.raises(DomainError):
        build_custom(8.0, [0, 0], two_mode_params)


def test_single_mode_index_out_of_range(single_mode_params):
    with pytest.raises(DomainError):
        build_single_mode(5.0, 2, single_mode_params)


def test_unnormalised_input_rejected(two_mode_params):
    with pytest.raises(DomainError):
        scatter(InputState(8.0, [1.0, 1.0]), two_mode_params)
    with pytest.raises(DomainError):
        scatter(InputState(8.0, [1.0]), two_mode_params)


# -- EIT pole and band edges --------------------------------------------------------


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 3), st.floats(0.01, 0.99), st.floats(0.05, 2.0), st.integers(0, 2**32 - 1))
def test_eit_pole_transmits_everything(band, frac, Om, seed):
    lo, hi = band_edges(GEOM, band)
    we = band_midpoint(GEOM, band)
    pole = lo + frac * (hi - lo)
    params = SystemParams(omega_e=we, Omega=Om, delta=we - pole, g=0.1, geom=GEOM)
    rng = np.random.default_rng(seed)
    c = rng.normal(size=band) + 1j * rng.normal(size=band)
    state = InputState(params.eit_frequency, c / np.linalg.norm(c))
    res = scatter(state, params)
    assert res.at_eit_pole
    assert res.R_total == 0.0
    np.testing.assert_array_equal(res.t, state.coeffs)
    assert emitter_amplitude(state.omega, state, params) == 0


def test_emitter_amplitude_single_mode(single_mode_params):
    p = single_mode_params
    state = build_single_mode(5.0, 1, p)
    k = math.sqrt(25 - CUTOFFS[0] ** 2)
    g1 = -p.g * CUTOFFS[0] / math.sqrt(math.hypot(CUTOFFS[0], k))
    assert emitter_amplitude(5.0, state, p) == pytest.approx(g1 / resolvent(5.0, p), rel=1e-14)


def test_exact_cutoff_points_to_one_sided_limit(two_mode_params):
    edge = CUTOFFS[1]
    with pytest.raises(BandEdgeSingularity, match="one_sided_limit"):
        scatter(build_equal_superposition(edge + 1e-3, two_mode_params).__class__(edge, [1.0]), two_mode_params)
    limits = one_sided_limit(edge, "+", build_scss, two_mode_params)
    assert [h for h, _ in limits] == [1e-4, 1e-6, 1e-8, 1e-10]
    assert all(0 <= R <= 1 for _, R in limits)


def test_fault_injection_breaks_unitarity(two_mode_params):
    state = build_equal_superposition(8.0, two_mode_params)
    with fault_injection("gamma_sign_flip"):
        broken = scatter(state, two_mode_params)
    healthy = scatter(state, two_mode_params)
    assert abs(healthy.R_total + healthy.T_total - 1) < 1e-12
    assert abs(broken.R_total + broken.T_total - 1) > 1e-3


def test_params_validation():
    with pytest.raises(DomainError):
        SystemParams(omega_e=5, Omega=-1)
    with pytest.raises(DomainError):
        SystemParams(omega_e=5, g=0)
    with pytest.raises(DomainError):
        SystemParams(omega_e=math.nan)
