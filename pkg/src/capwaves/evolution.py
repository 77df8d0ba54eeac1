"""Time integration of capillary water waves on the periodic lattice.

The state is (h, phi) with phi mean-free. Stepping is done in the complex
variable U = |d|h - i|d|^{1/2} phi, whose linear flow is exp(i t |xi|^{3/2}),
with the mean of h carried alongside. Two exponential integrators are provided:
an integrating-factor RK4 (Lawson) and ETDRK4 with contour-integral coefficients.

DN modes:

* ``series2`` / ``series3``: the right-hand side is the variational derivative of
  the Hamiltonian with G(h) truncated at that order (the curvature term is kept
  exact). The truncated Hamiltonian is then conserved by the semi-discrete flow.
* ``oracle``: the full system with G(h) from the boundary-integral solve.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import dirichlet_neumann as dn
from . import spectral_core as sc
from .diagonalization import linear_unknown, unknown_to_hphi
from .errors import CFLError, ConfigurationError, DomainError
from .spectral_core import SpectralField, abs_power

DN_MODES = ("series2", "series3", "oracle")
SCHEMES = ("IFRK4", "ETDRK4")


@dataclass
class WaveState:
    t: float
    h: SpectralField
    phi: SpectralField
    cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.h.lattice != self.phi.lattice:
            raise ConfigurationError("h and phi live on different lattices")
        self.h = self.h.real_part()
        self.phi = sc.mean_free(self.phi.real_part())

    @property
    def lattice(self):
        return self.h.lattice

    @property
    def U(self) -> SpectralField:
        if "U" not in self.cache:
            self.cache["U"] = linear_unknown(self.h, self.phi)
        return self.cache["U"]

    @property
    def h_mean(self) -> complex:
        return self.h.coeffs[0]

    def copy(self) -> "WaveState":
        return WaveState(self.t, self.h.copy(), self.phi.copy())

    def slope(self) -> float:
        return sc.sup_norm(sc.derivative(self.h))


@dataclass(frozen=True)
class Snapshot:
    t: float
    h: SpectralField
    phi: SpectralField
    U: SpectralField
    norms: sc.NormReport


def make_snapshot(state: WaveState, norm_params: tuple = (2.0, -0.1, 1.0)) -> Snapshot:
    """Deep copy of the state with the norm report of U; norm_params = (N, b, N2)."""
    U = state.U.copy()
    return Snapshot(state.t, state.h.copy(), state.phi.copy(), U, sc.norms(U, *norm_params))


def state_from_U(U: SpectralField, h_mean: complex, t: float) -> WaveState:
    h, phi = unknown_to_hphi(U)
    c = h.coeffs.copy()
    c[0] = h_mean
    return WaveState(t, h.with_coeffs(c), phi)


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float
    scheme: str = "ETDRK4"
    dealias: float = 1.0
    dn_mode: str = "series3"
    t_end: float | None = None
    snapshot_schedule: Sequence[float] = ()
    nonlinear: bool = True
    cfl: float = 0.5

    def __post_init__(self):
        if not np.isfinite(self.dt) or self.dt <= 0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.dn_mode not in DN_MODES:
            raise ConfigurationError(f"dn_mode must be one of {DN_MODES}, got {self.dn_mode!r}")
        if not 0 < self.dealias <= 1:
            raise ConfigurationError(f"dealias fraction must lie in (0, 1], got {self.dealias}")


# ---------------------------------------------------------------------------
# right-hand sides


def _D(f, s=1.0):
    return sc.fractional_derivative(f, s)


def dn_apply(h: SpectralField, phi: SpectralField, dn_mode: str) -> SpectralField:
    if dn_mode == "oracle":
        return dn.dn_oracle(h, phi)
    G = _D(phi) + dn.dn2_operator(h, phi)
    if dn_mode == "series3":
        G = G + dn.dn3_operator(h, phi)
    elif dn_mode != "series2":
        raise ConfigurationError(f"unknown dn_mode {dn_mode!r}")
    return G


def _curvature(h: SpectralField) -> SpectralField:
    """d(h_x / sqrt(1 + h_x^2)) = h_xx / (1 + h_x^2)^{3/2}."""
    return sc.derivative(sc.pointwise(lambda a: a / np.sqrt(1 + a * a), sc.derivative(h)))


def _nested(h: SpectralField, a: SpectralField) -> SpectralField:
    """a |d|(h a) with the inner product kept exact on a doubled lattice."""
    N = h.lattice.N
    h2, a2 = sc.resample(h, 2 * N), sc.resample(a, 2 * N)
    return sc.resample(sc.product(a2, _D(sc.product(h2, a2))), N)


def _rhs(h: SpectralField, phi: SpectralField, dn_mode: str):
    G = dn_apply(h, phi, dn_mode)
    px = sc.derivative(phi)
    if dn_mode == "oracle":
        hx = sc.derivative(h)
        quad = sc.pointwise(lambda a, p, g: -0.5 * p * p + (g + a * p) ** 2 / (2 * (1 + a * a)), hx, px, G)
    else:
        a = _D(phi)
        quad = -0.5 * (sc.product(px, px) - sc.product(a, a))
        if dn_mode == "series3":
            quad = quad - sc.product(h, sc.derivative(phi, 2), a) - _nested(h, a)
    pt = sc.mean_free(_curvature(h) + quad)
    return G.real_part(), pt.real_part()


def rhs_hphi(state: WaveState, dn_mode: str = "series3") -> tuple[SpectralField, SpectralField]:
    """(dh/dt, dphi/dt), with the mean of dphi/dt removed (gauge)."""
    return _rhs(state.h, state.phi, dn_mode)


def to_U_rate(ht: SpectralField, pt: SpectralField) -> SpectralField:
    """d/dt of U given d/dt of (h, phi)."""
    out = _D(ht) - 1j * _D(pt, 0.5)
    return out.with_coeffs(out.coeffs, real=False)


def nonlinear_part(U: SpectralField, h_mean: complex, dn_mode: str) -> SpectralField:
    """dU/dt - i|d|^{3/2} U."""
    h, phi = unknown_to_hphi(U)
    c = h.coeffs.copy()
    c[0] = h_mean
    ht, pt = _rhs(h.with_coeffs(c), phi, dn_mode)
    lin = 1j * abs_power(U.xi, 1.5) * U.coeffs
    return U.with_coeffs(to_U_rate(ht, pt).coeffs - lin, real=False)


def quadratic_U_direct(U: SpectralField) -> SpectralField:
    """Q_U = |d| DN_2 + (i/2)|d|^{1/2}[phi_x^2 - (|d|phi)^2]."""
    h, phi = unknown_to_hphi(U)
    px, a = sc.derivative(phi), _D(phi)
    out = _D(dn.dn2_operator(h, phi)) + 0.5j * _D(sc.product(px, px) - sc.product(a, a), 0.5)
    return out.with_coeffs(out.coeffs, real=False)


def cubic_U_direct(U: SpectralField) -> SpectralField:
    """C_U = |d| DN_3 + (3i/2)|d|^{1/2}(h_xx h_x^2) - i|d|^{1/2}[|d|phi (DN_2 + h_x phi_x)]."""
    h, phi = unknown_to_hphi(U)
    hx, a = sc.derivative(h), _D(phi)
    out = (_D(dn.dn3_operator(h, phi)) + 1.5j * _D(sc.product(sc.derivative(h, 2), hx, hx), 0.5)
           + 1j * _D(sc.product(h, sc.derivative(phi, 2), a) + _nested(h, a), 0.5))
    return out.with_coeffs(out.coeffs, real=False)


# quadratic symbols in U: U_{e1} at xi - eta, U_{e2} at eta


def _q_parts(xi, eta):
    z = xi - eta
    ax, ae, az = np.abs(xi), np.abs(eta), np.abs(z)
    t1 = 1j * ax * (xi * eta - ax * ae) * abs_power(eta, -0.5) * abs_power(z, -1.0)
    t2 = 1j * ax * (xi * z - ax * az) * abs_power(eta, -1.0) * abs_power(z, -0.5)
    t3 = 1j * np.sqrt(ax) * (eta * z + ae * az) * abs_power(eta, -0.5) * abs_power(z, -0.5)
    return t1, t2, t3


def q_symbol(e1: int, e2: int) -> Callable:
    if (e1, e2) == (-1, 1):
        raise ConfigurationError("the (-+) interaction is folded into q_{+-}")
    coef = {(1, 1): (1 / 8, 1 / 8, 1 / 8), (1, -1): (-1 / 4, 1 / 4, -1 / 4),
            (-1, -1): (-1 / 8, -1 / 8, 1 / 8)}[(e1, e2)]

    def q(xi, eta):
        t1, t2, t3 = _q_parts(xi, eta)
        val = coef[0] * t1 + coef[1] * t2 + coef[2] * t3
        return sc.with_zero_modes(val, xi, eta, xi - eta)

    return q


Q_CHANNELS = ((1, 1), (1, -1), (-1, -1))


def _signed(U, e):
    return U if e > 0 else U.conj()


def quadratic_U_symbols(U: SpectralField, tol: float = 0.0) -> SpectralField:
    out = np.zeros(U.lattice.N, complex)
    for e1, e2 in Q_CHANNELS:
        out += sc.apply_bilinear(q_symbol(e1, e2), _signed(U, e1), _signed(U, e2), tol=tol).coeffs
    return U.with_coeffs(out, real=False)


# cubic terms: base symbols on (h, phi) slots, h at xi - eta, then eta - sigma, then sigma


def _n3_term(xi, eta, sigma):
    return np.abs(xi) * dn.n3(xi, eta, sigma)


def _curv_term(xi, eta, sigma):
    return 1.5j * np.sqrt(np.abs(xi)) * (xi - eta) ** 2 * (eta - sigma) * sigma


def _product_term(xi, eta, sigma):
    return 1j * np.sqrt(np.abs(xi)) * np.abs(xi - eta) * (np.abs(eta) * np.abs(sigma) - sigma ** 2)


CUBIC_TERMS = (
    (("h", "h", "phi"), _n3_term),
    (("h", "h", "h"), _curv_term),
    (("phi", "h", "phi"), _product_term),
)


def _slot_factor(kind: str, sign: int, zeta):
    if kind == "h":
        return 0.5 * abs_power(zeta, -1.0)
    return 0.5j * sign * abs_power(zeta, -0.5)


def cubic_pattern_symbol(pattern: tuple) -> Callable:
    """Symbol of the cubic part acting on (U_{i1}, U_{i2}, U_{i3}) in slot order."""

    def m(xi, eta, sigma):
        freqs = (xi - eta, eta - sigma, sigma)
        total = 0.0
        for kinds, base in CUBIC_TERMS:
            w = base(xi, eta, sigma)
            for kind, s, z in zip(kinds, pattern, freqs):
                w = w * _slot_factor(kind, s, z)
            total = total + w
        return total

    return m


PATTERNS = tuple((a, b, c) for a in (1, -1) for b in (1, -1) for c in (1, -1))


def cubic_U_symbols(U: SpectralField, tol: float = 0.0) -> SpectralField:
    out = np.zeros(U.lattice.N, complex)
    for p in PATTERNS:
        f, g, k = (_signed(U, s) for s in p)
        out += sc.apply_trilinear(cubic_pattern_symbol(p), f, g, k, tol=tol).coeffs
    return U.with_coeffs(out, real=False)


def rhs_U(state: WaveState, method: str = "direct") -> SpectralField:
    """Q_U + C_U, the quadratic and cubic parts of dU/dt - i|d|^{3/2}U."""
    U = state.U
    if method == "direct":
        return quadratic_U_direct(U) + cubic_U_direct(U)
    if method == "symbol":
        return quadratic_U_symbols(U) + cubic_U_symbols(U)
    raise ConfigurationError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# stepping


def _cfl_number(state_h, state_phi, G, dt) -> float:
    hx, px = sc.derivative(state_h).values(), sc.derivative(state_phi).values()
    g = G.values()
    V = px - hx * (g + hx * px) / (1 + hx * hx)
    return float(dt * np.abs(V).max() * state_h.lattice.xi_max)


def cfl_number(state: WaveState, dt: float, dn_mode: str = "series3") -> float:
    return _cfl_number(state.h, state.phi, dn_apply(state.h, state.phi, dn_mode), dt)


_ETD_CACHE: dict = {}


def _etd_coefficients(lam: np.ndarray, dt: float, M: int = 32):
    key = (lam.tobytes(), dt)
    if key in _ETD_CACHE:
        return _ETD_CACHE[key]
    c = 1j * lam * dt
    r = np.exp(2j * np.pi * (np.arange(1, M + 1) - 0.5) / M)
    z = c[:, None] + r[None, :]
    ez = np.exp(z)
    Q = dt * np.mean((np.exp(z / 2) - 1) / z, axis=1)
    f1 = dt * np.mean((-4 - z + ez * (4 - 3 * z + z * z)) / z ** 3, axis=1)
    f2 = dt * np.mean((2 + z + ez * (z - 2)) / z ** 3, axis=1)
    f3 = dt * np.mean((-4 - 3 * z - z * z + ez * (4 - z)) / z ** 3, axis=1)
    out = (np.exp(c), np.exp(c / 2), Q, f1, f2, f3)
    if len(_ETD_CACHE) > 8:
        _ETD_CACHE.clear()
    _ETD_CACHE[key] = out
    return out


def _mask(lat, frac):
    # the Nyquist mode has no consistent odd derivative on a real field; it is always dropped
    keep = np.abs(lat.index) < lat.N // 2
    if frac < 1:
        keep &= np.abs(lat.index) <= frac * (lat.N // 2)
    return keep.astype(float)


def step(state: WaveState, cfg: IntegratorConfig) -> WaveState:
    """Advance one step of size cfg.dt; the linear flow is applied exactly."""
    lat = state.lattice
    dt = cfg.dt
    lam = abs_power(lat.xi, 1.5)
    mask = _mask(lat, cfg.dealias)
    hm = state.h_mean
    U0 = state.U.coeffs * mask

    def N(c):
        if not cfg.nonlinear:
            return np.zeros_like(c)
        return nonlinear_part(SpectralField(lat, c), hm, cfg.dn_mode).coeffs * mask

    if cfg.nonlinear:
        slope = state.slope()
        if slope >= 1:
            raise DomainError(f"|h_x|_inf = {slope:.3g} >= 1 at t={state.t:.6g}")
        G = dn_apply(state.h, state.phi, cfg.dn_mode)
        cfl = _cfl_number(state.h, state.phi, G, dt)
        if cfl > cfg.cfl:
            raise CFLError(f"step rejected at t={state.t:.6g}: dt*|V|_inf*xi_max = {cfl:.3g} "
                           f"exceeds {cfg.cfl}; reduce dt below {dt * cfg.cfl / cfl:.3g}")
    E = np.exp(1j * lam * dt)
    E2 = np.exp(0.5j * lam * dt)
    if cfg.scheme == "IFRK4":
        k1 = N(U0)
        k2 = N(E2 * (U0 + 0.5 * dt * k1))
        k3 = N(E2 * U0 + 0.5 * dt * k2)
        k4 = N(E * U0 + dt * E2 * k3)
        U1 = E * U0 + dt / 6 * (E * k1 + 2 * E2 * (k2 + k3) + k4)
    else:
        E, E2, Q, f1, f2, f3 = _etd_coefficients(lam, dt)
        Nv = N(U0)
        a = E2 * U0 + Q * Nv
        Na = N(a)
        b = E2 * U0 + Q * Na
        Nb = N(b)
        c = E2 * a + Q * (2 * Nb - Nv)
        Nc = N(c)
        U1 = E * U0 + f1 * Nv + 2 * f2 * (Na + Nb) + f3 * Nc
    if not np.all(np.isfinite(U1)):
        raise DomainError(f"non-finite values after step at t={state.t:.6g}")
    return state_from_U(SpectralField(lat, U1), hm, state.t + dt)


def integrate(state: WaveState, cfg: IntegratorConfig, t_end: float | None = None,
              callback: Callable[[Snapshot], None] | None = None,
              norm_params: tuple = (2.0, -0.1, 1.0)) -> WaveState:
    """Step until t_end, landing exactly on every scheduled snapshot time.

    The callback receives a Snapshot at the start time, at every scheduled time
    and at t_end.
    """
    t_end = cfg.t_end if t_end is None else t_end
    if t_end is None:
        raise ConfigurationError("no end time given")
    marks = sorted({float(s) for s in cfg.snapshot_schedule if state.t < s <= t_end} | {float(t_end)})
    if callback is not None:
        callback(make_snapshot(state, norm_params))
    for mark in marks:
        span = mark - state.t
        n = max(1, int(np.ceil(span / cfg.dt - 1e-9)))
        sub = replace(cfg, dt=span / n)
        for _ in range(n):
            state = step(state, sub)
        state.t = mark
        if callback is not None and (mark in cfg.snapshot_schedule or mark == t_end):
            callback(make_snapshot(state, norm_params))
    return state


# ---------------------------------------------------------------------------
# conserved quantities


def hamiltonian(state: WaveState, dn_mode: str = "series3") -> float:
    """(1/2) int phi G(h) phi + int h_x^2 / (1 + sqrt(1 + h_x^2)) by spectral quadrature."""
    G = dn_apply(state.h, state.phi, dn_mode)
    kinetic = 0.5 * sc.inner(G, state.phi).real
    return float(kinetic + potential_energy(state.h))


def potential_energy(h: SpectralField, pad: int = 2) -> float:
    lat = h.lattice
    M = pad * lat.N
    hx = np.fft.ifft(sc._pad(sc.derivative(h).coeffs, M)).real * (M / lat.L)
    return float(np.sum(hx * hx / (1 + np.sqrt(1 + hx * hx))) * lat.L / M)


def quadratic_energy(state: WaveState) -> float:
    """|| |d|^{1/2} phi ||^2 + || |d| h ||^2 (twice the linear Hamiltonian)."""
    return sc.l2_norm(_D(state.phi, 0.5)) ** 2 + sc.l2_norm(_D(state.h)) ** 2


def linear_period(xi: float) -> float:
    return 2 * np.pi / abs(xi) ** 1.5
