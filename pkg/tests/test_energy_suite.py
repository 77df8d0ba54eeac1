import numpy as np
import pytest

from capwaves import spectral_core as sc
from capwaves.diagonalization import SIGNS, a_symbol, b_symbol, build_good_unknown, sign_key
from capwaves.energy_suite import (
    LEMMAS, a_energy_symbol, b_energy_symbol, block_norm_proxy, build_W, drift_experiment, energy_of_state,
    energy_total, in_X, lemma_support, m_energy_symbol, q_energy_symbol, sample_blocks, support_violations, symbol_bound_sampler,
    worst_ratio,
)
from capwaves.errors import ConfigurationError
from capwaves.evolution import IntegratorConfig, WaveState, integrate
from conftest import fit_order, random_field

LAT = sc.FrequencyLattice(8 * np.pi, 128)


def _shape(e, lat=LAT):
    c = lat.L / 2

    def env(x):
        return e * np.exp(-((x - c) / 2) ** 2)

    h = sc.from_function(lambda x: env(x) * np.cos(2 * (x - c)), lat)
    p = sc.from_function(lambda x: env(x) * np.sin(2 * (x - c)), lat)
    return WaveState(0.0, h, p)


def test_build_W_trivial_cases(rng):
    u = random_field(LAT, rng, 20).with_coeffs(random_field(LAT, rng, 20).coeffs, real=False)
    gamma = random_field(LAT, rng, 10, amp=0.01)
    assert np.array_equal(build_W(u, gamma, 0).coeffs, u.coeffs)
    W = build_W(u, LAT.zeros(), 2)
    assert np.allclose(W.coeffs, sc.abs_power(LAT.xi, 3.0) * u.coeffs, rtol=1e-13, atol=0)
    with pytest.raises(ConfigurationError):
        build_W(u, gamma, 3)


def test_build_W_correction_is_cubic():
    eps = np.array([0.02, 0.01, 0.005])
    errs = []
    for e in eps:
        s = _shape(e)
        b = build_good_unknown(s.h, s.phi)
        W = build_W(b.u, b.gamma, 2)
        errs.append(sc.l2_norm(W - sc.fractional_derivative(b.u, 3.0)))
    assert fit_order(eps, errs) >= 2.8


def test_energy_of_zero():
    E = energy_total(LAT.zeros(real=False), LAT.zeros(), 2)
    assert E.E2 == 0 and E.E3 == 0 and E.total == 0


def test_free_flow_keeps_E2():
    s = _shape(0.01)
    u0 = build_good_unknown(s.h, s.phi).u
    E0 = energy_total(u0, LAT.zeros(), 2).E2
    for t in (1.0, 7.5):
        assert abs(energy_total(sc.free_flow(u0, t), LAT.zeros(), 2).E2 - E0) <= 1e-10 * E0


def test_cubic_correction_relative_size():
    eps = np.array([0.02, 0.01, 0.005])
    rel = []
    for e in eps:
        E = energy_of_state(_shape(e))
        assert E.E2 > 0 and E.imag_residue < 1e-12
        rel.append(abs(E.E3) / E.E2)
    assert fit_order(eps, rel) >= 0.8


def test_total_is_sum():
    E = energy_of_state(_shape(0.01))
    assert E.total == pytest.approx(E.E2 + E.E3_m + sum(E.E3_a.values()) + sum(E.E3_b.values()), rel=1e-15)


def test_transport_symbol_antisymmetry(rng):
    q = q_energy_symbol(3.0)
    xi = rng.uniform(-40, 40, 2000)
    eta = xi - rng.uniform(-0.05, 0.05, 2000)
    a, b = q(xi, eta), q(eta, xi)
    assert np.count_nonzero(a) > 100
    assert np.allclose(a, -np.conj(b), atol=1e-13 * np.abs(a).max())


def test_m_symbol_divides_phase(rng):
    xi = rng.uniform(-40, 40, 500)
    eta = xi - rng.uniform(-0.05, 0.05, 500)
    phase = np.abs(xi) ** 1.5 - np.abs(xi - eta) ** 1.5 - np.abs(eta) ** 1.5
    assert np.allclose(1j * phase * m_energy_symbol(3.0)(xi, eta), q_energy_symbol(3.0)(xi, eta), atol=1e-12)


def test_energy_symbols_finite_on_zero_modes():
    z = np.array([0.0, 1.0, 1.0, 0.0])
    w = np.array([1.0, 0.0, 1.0, 0.0])
    for e1, e2 in SIGNS:
        for f in (a_energy_symbol(e1, e2, 3.0), b_energy_symbol(e1, e2, 3.0)):
            assert np.all(np.isfinite(f(z, w)))
    assert np.all(np.isfinite(m_energy_symbol(3.0)(z, w)))


def test_drift_nonlinearity_off():
    rep = drift_experiment(_shape, [1e-2, 5e-3, 2.5e-3], IntegratorConfig(dt=0.1, nonlinear=False), 5.0)
    assert np.all(rep.drift_E2 <= 1e-10) and np.all(rep.drift_total <= 1e-10)


def test_drift_needs_three_amplitudes():
    with pytest.raises(ConfigurationError):
        drift_experiment(_shape, [1e-2, 5e-3], IntegratorConfig(dt=0.1), 1.0)


def test_drift_is_quartic_short_run():
    rep = drift_experiment(_shape, [1e-2, 5e-3, 2.5e-3], IntegratorConfig(dt=0.05), 10.0)
    assert rep.exponent_total >= 3.5
    assert rep.exponent_E2 <= 3.4


def test_block_proxy_stable_under_refinement():
    b = (0, -8, 0)
    for e1 in (1, -1):
        p1 = block_norm_proxy(a_symbol(e1, 1), b, 64)
        p2 = block_norm_proxy(a_symbol(e1, 1), b, 128)
        assert p1 > 0 and np.isfinite(p1) and abs(p2 / p1 - 1) <= 0.2


def test_block_proxy_of_constant_cutoff():
    # the kernel of a nonnegative cutoff has l1 norm at least its value at the origin
    p = block_norm_proxy(lambda x, e: np.ones_like(x), (0, -3, 0), 64)
    assert p >= 1.0 - 1e-12


@pytest.mark.parametrize("lemma", LEMMAS)
def test_sampler_ratios_finite_and_stable(lemma):
    blocks = sample_blocks(lemma, 3, seed=2)
    r1, r2 = symbol_bound_sampler(lemma, blocks=blocks, M=64), symbol_bound_sampler(lemma, blocks=blocks, M=128)
    assert all(np.isfinite(r.ratio) for r in r1 + r2)
    w1, w2 = worst_ratio(r1), worst_ratio(r2)
    assert w1 > 0 and abs(w2 / w1 - 1) <= 0.2


def test_support_indicators():
    outside_m = [(0, -3, 0), (0, -5, 0), (2, -1, 2), (1, 0, 1)]
    assert all(in_X(*b) and not lemma_support("boundm_N", b) for b in outside_m)
    assert support_violations("boundm_N", outside_m) == 0
    assert support_violations("bounda", outside_m) == 0
    outside_b = [(0, 0, -16), (-16, 0, -16), (1, 1, 18)]
    assert all(not lemma_support("boundb", b) for b in outside_b if in_X(*b))
    assert support_violations("boundb", [b for b in outside_b if in_X(*b)]) == 0


def test_unknown_lemma():
    with pytest.raises(ConfigurationError):
        symbol_bound_sampler("boundz", 1)


def test_b_symbols_comparable_only(rng):
    xi = rng.uniform(-10, 10, 500)
    eta = xi * 2.0 ** -20
    for e1, e2 in SIGNS:
        assert np.all(b_symbol(e1, e2)(xi, eta) == 0)
