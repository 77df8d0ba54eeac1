"""Acceptance suite: one PASS/FAIL line per criterion at the stated tolerances.

Run with ``pytest -s tests/test_acceptance.py`` to see the verdict lines; the
long wave-packet run behind criteria 6 and 7 takes several minutes.
"""
import time

import numpy as np
import pytest

from capwaves import spectral_core as sc
from capwaves.cli_io import symbol_study
from capwaves.dirichlet_neumann import dn_oracle, dn_series
from capwaves.errors import CFLError, DomainError
from capwaves.energy_suite import drift_experiment, support_violations
from capwaves.evolution import IntegratorConfig, WaveState, hamiltonian, integrate, linear_period
from capwaves.normal_form import phase_lower_bound_suite, resonant_values
from capwaves.scattering import (
    PacketConfig, convergence_monitor, d0_chain, decay_exponent, dyadic_times, record_from_profile, run_packet,
)

pytestmark = pytest.mark.slow


def verdict(n, ok, text):
    print(f"\nCRITERION {n:2d} {'PASS' if ok else 'FAIL'}: {text}")
    return ok


def fit(x, y):
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def test_c01_resonant_constants():
    t0 = time.time()
    xi = np.random.default_rng(0).uniform(-20, 20, 20)
    err_c = max(abs(resonant_values(x).c_res / abs(x) ** 1.5 + 1 / 16) for x in xi)
    err_t = max(abs(resonant_values(x).c_tilde - np.pi * x ** 2 / 6) / (np.pi * x ** 2 / 6) for x in xi)
    dt = time.time() - t0
    ok = err_c <= 1e-12 and err_t <= 1e-12 and dt < 1.0
    assert verdict(1, ok, f"max|c/|xi|^1.5 + 1/16| = {err_c:.2e}, max rel err c~ = {err_t:.2e}, {dt:.2f} s")


def test_c02_d0_chain():
    t0 = time.time()
    err = max(abs(d0_chain(y) - 1 / 54) for y in (-2.5, -0.3, 0.7, 1.7, 9.0))
    dt = time.time() - t0
    assert verdict(2, err <= 1e-14 and dt < 1.0, f"|d0 - 1/54| = {err:.2e}, {dt:.3f} s")


def test_c03_dn_cross_validation():
    t0 = time.time()
    lat = sc.FrequencyLattice(2 * np.pi, 256)
    eps = np.array([0.02, 0.01, 0.005])
    errs = []
    for e in eps:
        h = sc.from_function(lambda x: e * np.cos(x), lat)
        phi = sc.from_function(lambda x: e * np.sin(x), lat)
        errs.append(sc.sup_norm(dn_series(h, phi, 3).total() - dn_oracle(h, phi)))
    order = fit(eps, errs)
    dt = time.time() - t0
    ok = order >= 3.6 and errs[-1] <= 1e-7 and dt < 120
    assert verdict(3, ok, f"order {order:.3f}, error at 0.005 = {errs[-1]:.2e}, {dt:.1f} s")


def test_c04_hamiltonian_conservation():
    t0 = time.time()
    lat = sc.FrequencyLattice(2 * np.pi, 512)
    s = WaveState(0.0, sc.from_function(lambda x: 0.01 * np.cos(x), lat), lat.zeros())
    T = 100 * linear_period(1.0)
    H0 = hamiltonian(s)
    drifts, notes = {}, []
    for scheme in ("ETDRK4", "IFRK4"):
        try:
            out = integrate(s.copy(), IntegratorConfig(dt=0.05, scheme=scheme), t_end=T)
        except (CFLError, DomainError) as exc:
            drifts[scheme] = np.inf
            notes.append(f"{scheme}: {exc}")
            continue
        drifts[scheme] = abs(hamiltonian(out) - H0) / H0
    dt = time.time() - t0
    ok = max(drifts.values()) <= 1e-6 and dt < 300
    txt = ", ".join(f"{k} {v:.2e}" for k, v in drifts.items())
    assert verdict(4, ok, f"relative drift over 100 periods: {txt}, {dt:.0f} s" + "".join(f"; {n}" for n in notes))


def test_c05_quartic_energy_drift():
    t0 = time.time()
    lat = sc.FrequencyLattice(8 * np.pi, 128)
    c = lat.L / 2

    def shape(e):
        env = lambda x: e * np.exp(-((x - c) / 2) ** 2)
        return WaveState(0.0, sc.from_function(lambda x: env(x) * np.cos(2 * (x - c)), lat),
                         sc.from_function(lambda x: env(x) * np.sin(2 * (x - c)), lat))

    rep = drift_experiment(shape, [1e-2, 5e-3, 2.5e-3], IntegratorConfig(dt=0.05), 50.0)
    dt = time.time() - t0
    ok = rep.exponent_total >= 3.5 and 2.5 <= rep.exponent_E2 <= 3.4 and dt < 1200
    assert verdict(5, ok, f"corrected exponent {rep.exponent_total:.3f}, E2 exponent {rep.exponent_E2:.3f}, "
                          f"{dt:.0f} s")


@pytest.fixture(scope="module")
def packet_runs():
    t0 = time.time()
    cfg = PacketConfig(L=512 * np.pi, N=4096, eps=0.005)
    run = run_packet(cfg)
    lin = run_packet(PacketConfig(L=512 * np.pi, N=4096, eps=0.005, nonlinear=False))
    return cfg, run, lin, time.time() - t0


def test_c06_dispersive_decay(packet_runs):
    cfg, run, _, dt = packet_runs
    p = decay_exponent(run.times, run.sup_U, 20.0, cfg.wrap_time() / 2)
    ok = -0.6 <= p <= -0.4 and dt < 1800
    assert verdict(6, ok, f"sup-norm exponent {p:.3f} on [20, {cfg.wrap_time() / 2:.1f}], shared run {dt:.0f} s")


def test_c07_modified_scattering(packet_runs):
    cfg, run, lin, dt = packet_runs
    rep = convergence_monitor(record_from_profile(run.profile_v, dyadic_times(cfg.t0, run.times[-1])))
    lrec = record_from_profile(lin.profile_U, dyadic_times(cfg.t0, lin.times[-1]))
    lin_worst = max(lrec.drift_corrected.max(), lrec.drift_uncorrected.max())
    ok = rep.final_ratio <= 0.2 and lin_worst <= 1e-10 and dt < 1800
    assert verdict(7, ok, f"final corrected/uncorrected = {rep.final_ratio:.3f} "
                          f"(corrected {rep.drift_corrected[-1]:.2e}, uncorrected {rep.drift_uncorrected[-1]:.2e}), "
                          f"linear drifts <= {lin_worst:.1e}")


def test_c08_stationary_phase():
    t0 = time.time()
    lat = sc.FrequencyLattice(2 * np.pi * 64, 1024)
    width, k0 = 2.0, 1.0
    x = lat.x_centered
    f = sc.forward_transform(np.exp(-(x / width) ** 2) * np.exp(1j * k0 * x), lat)
    fhat = lambda xi: width * np.sqrt(np.pi) * np.exp(-(width * (xi - k0)) ** 2 / 4)
    nr = sc.norms(f, 2.0, -0.1, 1.0)
    weights = nr.H + nr.Z
    ys = np.array([-2.2, -1.6, -1.2])
    errs = {}
    for t in (50.0, 100.0, 200.0, 400.0):
        quad = sc.free_flow_quadrature(fhat, t, ys * t, 6.0, 40001)
        errs[t] = np.max(np.abs(quad - sc.stationary_phase_evaluate(f, t, ys * t)))
    C = errs[50.0] * 50.0 ** 0.6 / weights
    worst = max(errs[t] / (C * t ** -0.6 * weights) for t in (100.0, 200.0, 400.0))
    dt = time.time() - t0
    assert verdict(8, worst <= 1.0 and dt < 60, f"C = {C:.3e}, worst ratio to bound {worst:.3f}, {dt:.1f} s")


def test_c09_phase_inequality():
    t0 = time.time()
    rep = phase_lower_bound_suite(10 ** 6, seed=0)
    dt = time.time() - t0
    assert verdict(9, rep.violations == 0 and dt < 5, f"{rep.violations} violations in 10^6 pairs, {dt:.2f} s")


def test_c10_symbol_bounds():
    t0 = time.time()
    study = symbol_study(seed=0, trials=6)
    changes = {k: abs(w2 / w1 - 1) for k, (w1, w2, _) in study.items()}
    bad = (support_violations("boundm_N", [(0, -3, 0), (0, -5, 0), (2, -1, 2), (1, 0, 1)])
           + support_violations("boundb", [(-16, 0, -16), (1, 1, 18), (-20, -1, -17)]))
    dt = time.time() - t0
    ok = max(changes.values()) <= 0.2 and bad == 0 and dt < 300
    txt = ", ".join(f"{k} {study[k][0]:.3g}->{study[k][1]:.3g}" for k in study)
    assert verdict(10, ok, f"worst ratios M->2M: {txt}; support violations {bad}; {dt:.0f} s")
