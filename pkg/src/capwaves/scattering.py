"""Modified scattering diagnostics: the logarithmic phase L, the corrected profile g,
dyadic drift tables and the physical-space asymptotic profile."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import spectral_core as sc
from .errors import ConfigurationError, DomainError
from .evolution import IntegratorConfig, WaveState, integrate
from .normal_form import Profile, normal_form_transform, profile_of
from .spectral_core import SpectralField, abs_power, stationary_point

VARIANTS = ("L_on_v", "L_prime_on_U")
DEFAULT_N2 = 1.0


def phase_rate(xi) -> np.ndarray:
    """|xi|^2 / (24 pi), the coefficient of |f^|^2 / (1 + s) in dL/ds."""
    return np.asarray(xi, float) ** 2 / (24 * np.pi)


def _log_weighted_integral(times: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Cumulative int_0^t w(s)/(1+s) ds for w linear between samples (exact per interval)."""
    out = np.zeros_like(w, dtype=float)
    for i in range(1, times.size):
        s0, s1 = times[i - 1], times[i]
        b = (w[i] - w[i - 1]) / (s1 - s0)
        a = w[i - 1] - b * (s0 + 1)
        out[i] = out[i - 1] + a * np.log((s1 + 1) / (s0 + 1)) + b * (s1 - s0)
    return out


def accumulate_phase(profile: Profile, variant: str = "L_on_v", nonlinear: bool = True) -> Profile:
    """Fill L and g = exp(iL) f^ from the stored profile samples.

    For ``L_on_v`` the rows are e^{-itLambda} v^, for ``L_prime_on_U`` they are
    e^{-itLambda} U^; the phase coefficient is |xi|^2/(24 pi) in both cases. It comes
    from the resonant cubic interaction, so the linear model has L = 0.
    """
    if variant not in VARIANTS:
        raise ConfigurationError(f"variant must be one of {VARIANTS}, got {variant!r}")
    t = profile.times
    if t[0] != 0:
        raise ConfigurationError("the profile series must start at t = 0")
    gaps = np.diff(t) > 0.1 * (1 + t[:-1]) + 1e-12
    if gaps.any():
        warnings.warn(f"profile samples are sparse at t={t[:-1][gaps][0]:.3g}; "
                      "the accumulated phase is only first-order accurate there", RuntimeWarning, stacklevel=2)
    amp2 = np.abs(profile.fhat) ** 2
    if not nonlinear:
        return Profile(profile.lattice, t, profile.fhat, np.zeros_like(amp2), profile.fhat.copy())
    L = phase_rate(profile.lattice.xi)[None, :] * _log_weighted_integral(t, amp2)
    return Profile(profile.lattice, t, profile.fhat, L, np.exp(1j * L) * profile.fhat)


def log_schedule(t_end: float, ratio: float = 0.1, first: float = 0.1) -> np.ndarray:
    """Sample times 0, first, ... with spacing 0.1 (1 + t), ending exactly at t_end."""
    out = [0.0]
    while out[-1] < t_end:
        out.append(min(t_end, out[-1] + max(first, ratio * (1 + out[-1]))))
    return np.array(out)


def dyadic_times(t0: float, t_max: float) -> np.ndarray:
    m = int(np.floor(np.log2(t_max / t0) + 1e-12))
    return t0 * 2.0 ** np.arange(m + 1)


def weighted_sup(diff: np.ndarray, xi: np.ndarray, N2: float = DEFAULT_N2) -> float:
    """sup over xi of (|xi|^{1/10} + |xi|^{N2 + 1/2}) |diff|."""
    w = abs_power(xi, 0.1) + abs_power(xi, N2 + 0.5)
    return float(np.max(w * np.abs(diff)))


# ---------------------------------------------------------------------------


@dataclass
class ScatteringRecord:
    lattice: sc.FrequencyLattice
    dyadic_times: np.ndarray
    g: np.ndarray
    fhat: np.ndarray
    z_history: np.ndarray
    N2: float = DEFAULT_N2
    drift_corrected: np.ndarray = field(init=False)
    drift_uncorrected: np.ndarray = field(init=False)
    residuals: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.dyadic_times)
        if self.g.shape != (n, self.lattice.N) or self.fhat.shape != self.g.shape or len(self.z_history) != n:
            raise ConfigurationError("record tables must match the dyadic schedule")
        xi = self.lattice.xi
        self.drift_corrected = np.array([weighted_sup(self.g[i + 1] - self.g[i], xi, self.N2)
                                         for i in range(n - 1)])
        self.drift_uncorrected = np.array([weighted_sup(self.fhat[i + 1] - self.fhat[i], xi, self.N2)
                                           for i in range(n - 1)])


def record_from_profile(profile: Profile, times, N2: float = DEFAULT_N2) -> ScatteringRecord:
    idx = [int(np.argmin(np.abs(profile.times - t))) for t in times]
    if any(abs(profile.times[i] - t) > 1e-9 * max(1.0, t) for i, t in zip(idx, times)):
        raise ConfigurationError("every dyadic time must be a profile sample")
    lat = profile.lattice
    z = np.array([sc.z_norm(SpectralField(lat, profile.g[i], real=False), N2) for i in idx])
    return ScatteringRecord(lat, np.asarray(times, float), profile.g[idx], profile.fhat[idx], z, N2)


@dataclass(frozen=True)
class ConvergenceReport:
    drift_corrected: np.ndarray
    drift_uncorrected: np.ndarray
    corrected_ratios: np.ndarray
    final_ratio: float
    geometric: bool
    passed: bool


def convergence_monitor(record: ScatteringRecord, ratio: float = 0.8) -> ConvergenceReport:
    """Corrected drifts should shrink geometrically while uncorrected ones do not."""
    if len(record.dyadic_times) < 4:
        raise ConfigurationError("need at least four dyadic snapshots")
    dc, du = record.drift_corrected, record.drift_uncorrected
    with np.errstate(divide="ignore", invalid="ignore"):
        rc = dc[1:] / dc[:-1]
        final = float(dc[-1] / du[-1]) if du[-1] > 0 else float("inf") if dc[-1] > 0 else 0.0
    geometric = bool(np.all(rc[-2:] <= ratio))
    return ConvergenceReport(dc, du, rc, final, geometric, geometric and final <= 0.2)


# ---------------------------------------------------------------------------
# physical space


AMPLITUDE2 = 2 / (3 * np.pi)


def d0_chain(y: float = 1.7) -> float:
    """d0 from the stationary frequency, the amplitude factor and the phase coefficient.

    With |xi0|^{3/2} = kappa |y|^3 and |f_inf|^2 = (2/(3 pi)) |g_inf|^2 the log-phase
    |xi0|^{3/2} |g_inf|^2 / (24 pi) equals d0 |y|^3 |f_inf|^2.
    """
    xi0 = stationary_point(1.0, y)
    kappa = abs(xi0) ** 1.5 / abs(y) ** 3
    return float(kappa / AMPLITUDE2 / (24 * np.pi))


def centred(fhat: np.ndarray, lattice, x_c: float) -> np.ndarray:
    """Coefficients of the field translated so that x_c becomes the origin."""
    return fhat * np.exp(1j * lattice.xi * x_c)


def _interp(xi_grid, vals, xi):
    order = np.argsort(xi_grid)
    xs, v = xi_grid[order], vals[order]
    return np.interp(xi, xs, v.real) + 1j * np.interp(xi, xs, v.imag)


@dataclass(frozen=True)
class AsymptoticProfile:
    """f_inf(y) = sqrt(2i/(3 pi)) g_inf(xi(y)) exp(-i A_inf(xi(y))) with g_inf = |xi|^{1/4} g(T)."""
    lattice: sc.FrequencyLattice
    g_inf: np.ndarray
    A_inf: np.ndarray
    d0: float

    def f_inf(self, y) -> np.ndarray:
        xi = stationary_point(1.0, y)
        xi_grid = self.lattice.xi
        val = _interp(xi_grid, self.g_inf * np.exp(-1j * self.A_inf), xi)
        return np.sqrt(2j / (3 * np.pi)) * val

    def model(self, x, t: float) -> np.ndarray:
        y = np.asarray(x, float) / t
        f = self.f_inf(y)
        return (np.exp(-1j * t * (4 / 27) * np.abs(y) ** 3) / np.sqrt(1 + t) * f
                * np.exp(-1j * self.d0 * np.abs(y) ** 3 * np.abs(f) ** 2 * np.log(1 + t)))


def asymptotic_profile(profile: Profile, x_c: float) -> AsymptoticProfile:
    """Asymptotic data from the final corrected sample (phases taken about x_c)."""
    lat = profile.lattice
    T = profile.times[-1]
    xi = lat.xi
    g = centred(profile.g[-1], lat, x_c)
    g_inf = abs_power(xi, 0.25) * g
    A_inf = profile.L[-1] - np.abs(xi) ** 1.5 * np.abs(g_inf) ** 2 * np.log(1 + T) / (24 * np.pi)
    return AsymptoticProfile(lat, g_inf, A_inf, d0_chain())


def physical_space_check(U: SpectralField, t: float, asym: AsymptoticProfile, x_c: float,
                         edge: float = 0.45, wrap_tol: float = 1e-2) -> float:
    """sup_x |U(x, t) - asymptotic model|, x measured from x_c."""
    lat = U.lattice
    x = (lat.x - x_c + lat.L / 2) % lat.L - lat.L / 2
    u = U.values()
    if np.abs(u[np.abs(x) > edge * lat.L]).max(initial=0) > wrap_tol * np.abs(u).max():
        raise DomainError(f"wrap-around at t={t:.4g}: the solution has reached the box edge")
    return float(np.abs(u - asym.model(x, t)).max())


# ---------------------------------------------------------------------------
# wave-packet experiment


@dataclass(frozen=True)
class PacketConfig:
    L: float = 512 * np.pi
    N: int = 4096
    eps: float = 0.005
    k0: float = 1.0
    width: float = 3.0
    dt: float = 0.1
    t0: float = 10.0
    t_end: float | None = None
    nonlinear: bool = True
    scheme: str = "ETDRK4"
    dn_mode: str = "series3"
    speed_margin: float = 3.0
    nf_tol: float = 1e-10

    def lattice(self) -> sc.FrequencyLattice:
        return sc.FrequencyLattice(self.L, self.N)

    def xi_max(self) -> float:
        """Top of the packet spectrum: k0 plus speed_margin envelope widths in frequency."""
        return self.k0 + self.speed_margin / self.width

    def wrap_time(self) -> float:
        """Recirculation time L / (3 xi_max^{1/2}) of the fastest group velocity."""
        return self.L / (3 * np.sqrt(self.xi_max()))


def packet_state(cfg: PacketConfig) -> WaveState:
    lat = cfg.lattice()
    x_c = cfg.L / 2

    def h(x):
        s = x - x_c
        return cfg.eps * np.exp(-s * s / (2 * cfg.width ** 2)) * np.cos(cfg.k0 * s)

    return WaveState(0.0, sc.from_function(h, lat), lat.zeros())


@dataclass
class PacketRun:
    config: PacketConfig
    times: np.ndarray
    sup_U: np.ndarray
    profile_v: Profile
    profile_U: Profile
    snapshots: dict


def run_packet(cfg: PacketConfig, keep=(), progress=None) -> PacketRun:
    """Evolve a Gaussian packet, sampling e^{-itLambda}v^ and e^{-itLambda}U^ on a log schedule."""
    t_end = cfg.t_end if cfg.t_end is not None else cfg.wrap_time()
    sched = np.unique(np.concatenate([log_schedule(t_end), [t for t in dyadic_times(cfg.t0, t_end)],
                                      [t for t in keep if t <= t_end]]))
    state = packet_state(cfg)
    lat = state.lattice
    icfg = IntegratorConfig(dt=cfg.dt, scheme=cfg.scheme, dn_mode=cfg.dn_mode, nonlinear=cfg.nonlinear)
    fv, fu, sup = [], [], []
    snaps = {}
    for i, t in enumerate(sched):
        if t > state.t:
            state = integrate(state, icfg, t_end=t)
        U = state.U
        v = normal_form_transform(U, tol=cfg.nf_tol) if cfg.nonlinear else U
        fv.append(profile_of(v, t))
        fu.append(profile_of(U, t))
        sup.append(sc.sup_norm(U))
        if any(abs(t - k) < 1e-9 for k in keep):
            snaps[float(t)] = U.copy()
        if progress is not None:
            progress(t, sup[-1])
    fv, fu = np.array(fv), np.array(fu)
    zero = np.zeros_like(fv.real)
    pv = accumulate_phase(Profile(lat, sched, fv, zero, fv), "L_on_v", cfg.nonlinear)
    pu = accumulate_phase(Profile(lat, sched, fu, zero, fu), "L_prime_on_U", cfg.nonlinear)
    return PacketRun(cfg, sched, np.array(sup), pv, pu, snaps)


def decay_exponent(times, sup, t_min: float, t_max: float) -> float:
    times, sup = np.asarray(times), np.asarray(sup)
    sel = (times >= t_min) & (times <= t_max)
    if sel.sum() < 3:
        raise ConfigurationError("not enough samples in the fitting window")
    return float(np.polyfit(np.log(times[sel]), np.log(sup[sel]), 1)[0])
