import warnings

import numpy as np
import pytest

from capwaves import spectral_core as sc
from capwaves.errors import ConfigurationError, DomainError
from capwaves.normal_form import Profile, resonant_values
from capwaves.scattering import (
    AsymptoticProfile, PacketConfig, ScatteringRecord, accumulate_phase, asymptotic_profile, centred,
    convergence_monitor, d0_chain, decay_exponent, dyadic_times, log_schedule, packet_state, phase_rate,
    physical_space_check, record_from_profile, run_packet, weighted_sup,
)

LAT = sc.FrequencyLattice(2 * np.pi, 32)


def _profile(times, fhat):
    z = np.zeros_like(fhat, dtype=float)
    return Profile(LAT, np.asarray(times, float), fhat, z, fhat.astype(complex))


def test_constant_amplitude_phase_is_logarithmic():
    t = log_schedule(200.0)
    A = 0.3
    f = np.full((t.size, LAT.N), np.sqrt(A), complex)
    p = accumulate_phase(_profile(t, f))
    expect = (LAT.xi ** 2 * A / (24 * np.pi))[None, :] * np.log1p(t)[:, None]
    assert np.abs(p.L - expect).max() <= 1e-12 * np.abs(expect).max()
    assert np.allclose(p.g, np.exp(1j * expect) * f, atol=1e-12)


def test_phase_rate_matches_resonant_constant():
    for x in (0.5, 1.0, 3.0):
        assert phase_rate(x) == pytest.approx(resonant_values(x).c_tilde / (4 * np.pi ** 2), rel=1e-14)


def test_linear_model_has_no_phase():
    t = log_schedule(20.0)
    p = accumulate_phase(_profile(t, np.ones((t.size, LAT.N), complex)), nonlinear=False)
    assert np.all(p.L == 0) and np.array_equal(p.g, p.fhat)


def test_zero_profile_has_zero_phase():
    t = log_schedule(10.0)
    p = accumulate_phase(_profile(t, np.zeros((t.size, LAT.N), complex)), "L_prime_on_U")
    assert np.all(p.L == 0) and np.all(p.g == 0)


def test_sparse_samples_warn():
    t = np.array([0.0, 0.1, 5.0, 10.0])
    with pytest.warns(RuntimeWarning, match="sparse"):
        accumulate_phase(_profile(t, np.ones((4, LAT.N), complex)))


def test_dense_samples_do_not_warn():
    t = log_schedule(50.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        accumulate_phase(_profile(t, np.ones((t.size, LAT.N), complex)))


def test_phase_variants_and_start():
    with pytest.raises(ConfigurationError):
        accumulate_phase(_profile([0.0, 0.1], np.ones((2, LAT.N), complex)), "L_on_h")
    with pytest.raises(ConfigurationError):
        accumulate_phase(_profile([1.0, 1.1], np.ones((2, LAT.N), complex)))


def test_schedules():
    t = log_schedule(100.0)
    assert t[0] == 0 and t[-1] == 100.0 and np.all(np.diff(t) > 0)
    assert np.all(np.diff(t) <= 0.1 * (1 + t[:-1]) + 1e-12)
    assert dyadic_times(10.0, 379.0).tolist() == [10, 20, 40, 80, 160, 320]


def test_weighted_sup():
    xi = np.array([-4.0, 0.0, 1.0])
    d = np.array([1.0, 5.0, 2.0])
    assert weighted_sup(d, xi, 1.0) == pytest.approx(4 ** 0.1 + 4 ** 1.5)


def _record(g, f):
    n = g.shape[0]
    return ScatteringRecord(LAT, 10.0 * 2.0 ** np.arange(n), g, f, np.ones(n))


def test_convergence_monitor_geometric():
    base = np.ones(LAT.N, complex)
    g = np.array([base * (1 - 0.5 ** m) for m in range(5)])
    f = np.array([base * m for m in range(5)])
    rep = convergence_monitor(_record(g, f))
    assert rep.geometric and rep.passed
    assert np.allclose(rep.corrected_ratios, 0.5)


def test_convergence_monitor_fails_without_decay():
    base = np.ones(LAT.N, complex)
    g = np.array([base * m for m in range(5)])
    rep = convergence_monitor(_record(g, g))
    assert not rep.passed and rep.final_ratio == 1.0


def test_convergence_monitor_needs_four_times():
    z = np.zeros((3, LAT.N), complex)
    with pytest.raises(ConfigurationError):
        convergence_monitor(_record(z, z))


def test_record_requires_samples_at_dyadic_times():
    t = log_schedule(40.0)
    p = accumulate_phase(_profile(t, np.ones((t.size, LAT.N), complex)))
    with pytest.raises(ConfigurationError):
        record_from_profile(p, [10.0, 20.0, 40.0])
    p2 = accumulate_phase(_profile(np.union1d(t, [10.0, 20.0]), np.ones((t.size + 2, LAT.N), complex)))
    rec = record_from_profile(p2, [10.0, 20.0, 40.0])
    assert rec.g.shape == (3, LAT.N)


def test_d0_chain():
    assert abs(d0_chain() - 1 / 54) <= 1e-14
    for y in (-3.0, 0.2, 11.0):
        assert abs(d0_chain(y) - 1 / 54) <= 1e-14


def test_asymptotic_model_single_frequency():
    # a profile concentrated near xi0 gives a model of size |g_inf(xi0)| sqrt(2/(3 pi t))
    lat = sc.FrequencyLattice(64 * np.pi, 1024)
    g = np.exp(-((lat.xi + 1.0) ** 2) * 4).astype(complex)
    asym = AsymptoticProfile(lat, g, np.zeros(lat.N), 1 / 54)
    t = 100.0
    y = 1.5
    val = asym.model(np.array([y * t]), t)[0]
    assert abs(val) == pytest.approx(np.sqrt(2 / (3 * np.pi)) / np.sqrt(1 + t), rel=1e-2)


def test_asymptotic_profile_from_free_flow():
    # free flow: L = 0 in the linear control, and the model reproduces the stationary phase term
    cfg = PacketConfig(L=256 * np.pi, N=2048, eps=0.005, width=3.0, nonlinear=False, t_end=80.0)
    run = run_packet(cfg)
    x_c = cfg.L / 2
    asym = asymptotic_profile(run.profile_U, x_c)
    res = []
    for t in (40.0, 80.0):
        U = sc.free_flow(packet_state(cfg).U, t)
        res.append(physical_space_check(U, t, asym, x_c) / sc.sup_norm(U))
    assert res[1] < 0.1
    assert res[1] / res[0] < 0.6


def test_physical_check_detects_wrap():
    lat = sc.FrequencyLattice(2 * np.pi, 64)
    U = sc.SpectralField(lat, np.ones(lat.N, complex), real=False)
    asym = AsymptoticProfile(lat, np.zeros(lat.N, complex), np.zeros(lat.N), 1 / 54)
    with pytest.raises(DomainError, match="wrap"):
        physical_space_check(U, 10.0, asym, np.pi)


def test_centred_translation():
    lat = sc.FrequencyLattice(2 * np.pi, 128)
    f = sc.from_function(lambda x: np.exp(-(x - 2.0) ** 2 * 4), lat)
    g = sc.from_function(lambda x: np.exp(-(((x + np.pi) % (2 * np.pi)) - np.pi) ** 2 * 4), lat)
    assert np.allclose(centred(f.coeffs, lat, 2.0), g.coeffs, atol=1e-8)


def test_decay_exponent_fit():
    t = np.geomspace(10, 1000, 30)
    assert decay_exponent(t, 3 * t ** -0.5, 20, 500) == pytest.approx(-0.5)
    with pytest.raises(ConfigurationError):
        decay_exponent(t, t, 2000, 3000)


def test_linear_packet_drifts_vanish():
    cfg = PacketConfig(L=128 * np.pi, N=1024, eps=0.005, width=3.0, nonlinear=False, t_end=80.0)
    run = run_packet(cfg)
    rec = record_from_profile(run.profile_U, dyadic_times(cfg.t0, 80.0))
    assert np.all(run.profile_U.L == 0)
    assert rec.drift_uncorrected.max() <= 1e-10
    assert rec.drift_corrected.max() <= 1e-10
