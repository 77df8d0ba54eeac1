"""Quadratic normal form, profile, cubic interaction symbols and resonant constants.

Conventions follow evolution: U = |d|h - i|d|^{1/2} phi, a bilinear symbol m(xi, eta)
takes its first argument at xi - eta and its second at eta, and a trilinear symbol
m(xi, eta, sigma) takes its arguments at xi - eta, eta - sigma and sigma.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import spectral_core as sc
from .errors import ConfigurationError, DomainError
from .evolution import PATTERNS, Q_CHANNELS, cubic_pattern_symbol, q_symbol
from .spectral_core import SpectralField, abs_power

CHANNELS = ((1, 1, -1), (1, 1, 1), (-1, -1, 1), (-1, -1, -1))


def channel_key(iota) -> str:
    return "".join("+" if s > 0 else "-" for s in iota)


def omega_pair(e1: int, e2: int, xi, eta):
    """|xi|^{3/2} - e1 |xi - eta|^{3/2} - e2 |eta|^{3/2}."""
    return np.abs(xi) ** 1.5 - e1 * np.abs(xi - eta) ** 1.5 - e2 * np.abs(eta) ** 1.5


def m_symbol(e1: int, e2: int) -> Callable:
    """Normal-form multiplier -i q / (quadratic phase), zero on the zero modes."""
    q = q_symbol(e1, e2)

    def m(xi, eta):
        xi, eta = np.broadcast_arrays(np.asarray(xi, float), np.asarray(eta, float))
        den = omega_pair(e1, e2, xi, eta)
        live = ~sc.zero_mode_mask(xi, eta, xi - eta) & (den != 0)
        out = np.zeros(xi.shape, complex)
        out[live] = -1j * q(xi[live], eta[live]) / den[live]
        return out

    return m


@dataclass(frozen=True)
class NormalFormMultipliers:
    m: dict = field(default_factory=lambda: {channel_key(c): m_symbol(*c) for c in Q_CHANNELS})
    q: dict = field(default_factory=lambda: {channel_key(c): q_symbol(*c) for c in Q_CHANNELS})

    def defect(self, key: str, xi, eta) -> np.ndarray:
        """m * (quadratic phase) + i q, which vanishes wherever m is defined."""
        e1, e2 = (1 if s == "+" else -1 for s in key)
        return self.m[key](xi, eta) * omega_pair(e1, e2, xi, eta) + 1j * self.q[key](xi, eta)


def _signed(U, e):
    return U if e > 0 else U.conj()


def normal_form_transform(U: SpectralField, multipliers: NormalFormMultipliers | None = None,
                          tol: float = 0.0) -> SpectralField:
    """v = U + M_{++}(U, U) + M_{+-}(U, conj U) + M_{--}(conj U, conj U)."""
    nf = multipliers or NormalFormMultipliers()
    out = U.coeffs.astype(complex).copy()
    for e1, e2 in Q_CHANNELS:
        out += sc.apply_bilinear(nf.m[channel_key((e1, e2))], _signed(U, e1), _signed(U, e2), tol=tol).coeffs
    return U.with_coeffs(out, real=False)


def profile_of(v: SpectralField, t: float) -> np.ndarray:
    """f^(xi, t) = exp(-i t |xi|^{3/2}) v^(xi, t)."""
    return np.exp(-1j * t * abs_power(v.xi, 1.5)) * v.coeffs


# ---------------------------------------------------------------------------
# cubic symbols


def _permutation(pattern, canonical):
    """Slot map sending pattern slot j to the canonical slot with the same sign, order kept."""
    perm = [0, 0, 0]
    for s in (1, -1):
        src = [j for j in range(3) if pattern[j] == s]
        dst = [j for j in range(3) if canonical[j] == s]
        if len(src) != len(dst):
            return None
        for a, b in zip(src, dst):
            perm[a] = b
    return perm


def cubic_multiplier(iota: Sequence[int]) -> Callable:
    """m_iota: every cubic pattern with the sign content of iota, rewritten in iota's slot order."""
    iota = tuple(iota)
    if iota not in CHANNELS:
        raise ConfigurationError(f"channel must be one of {CHANNELS}, got {iota}")
    parts = []
    for p in PATTERNS:
        perm = _permutation(p, iota)
        if perm is not None:
            parts.append((cubic_pattern_symbol(p), perm))

    def m(xi, eta, sigma):
        F = (xi - eta, eta - sigma, sigma)
        total = 0.0
        for sym, perm in parts:
            Fo = [F[perm[j]] for j in range(3)]
            total = total + sym(xi, xi - Fo[0], Fo[2])
        return total

    return m


def psi_phase(iota: Sequence[int], xi, eta, sigma):
    i1, i2, i3 = iota
    return (-np.abs(xi) ** 1.5 + i1 * np.abs(xi - eta) ** 1.5 + i2 * np.abs(eta - sigma) ** 1.5
            + i3 * np.abs(sigma) ** 1.5)


def _c_symbol(iota, nf: NormalFormMultipliers) -> Callable:
    m, q = nf.m, nf.q
    mc = cubic_multiplier(iota)
    key = channel_key(iota)

    if key == "++-":
        def ic(x, e, s):
            return (2 * m["++"](x, e) * q["+-"](e, s) + m["+-"](x, s) * q["++"](x - s, x - e)
                    - m["+-"](x, e) * q["+-"](e, e - s) - 2 * m["--"](x, s) * q["--"](x - s, x - e)
                    + mc(x, e, s))
    elif key == "+++":
        def ic(x, e, s):
            return 2 * m["++"](x, e) * q["++"](e, s) - m["+-"](x, e) * q["--"](e, s) + mc(x, e, s)
    elif key == "--+":
        def ic(x, e, s):
            return (2 * m["++"](x, s) * q["--"](x - s, x - e) + m["+-"](x, x - e) * q["+-"](e, e - s)
                    - m["+-"](x, x - s) * q["++"](x - s, x - e) - 2 * m["--"](x, e) * q["+-"](e, s)
                    + mc(x, e, s))
    else:
        def ic(x, e, s):
            return m["+-"](x, x - e) * q["--"](e, s) - 2 * m["--"](x, e) * q["++"](e, s) + mc(x, e, s)

    def c(xi, eta, sigma):
        xi, eta, sigma = np.broadcast_arrays(*(np.asarray(a, float) for a in (xi, eta, sigma)))
        return -1j * ic(xi, eta, sigma)

    return c


@dataclass(frozen=True)
class CubicSymbols:
    """c^iota(xi, eta, sigma) for the four channels, with their phases Psi^iota."""
    multipliers: NormalFormMultipliers = field(default_factory=NormalFormMultipliers)

    def c(self, iota) -> Callable:
        return _c_symbol(tuple(iota), self.multipliers)

    def m(self, iota) -> Callable:
        return cubic_multiplier(iota)

    @staticmethod
    def psi(iota, xi, eta, sigma):
        return psi_phase(iota, xi, eta, sigma)


# ---------------------------------------------------------------------------
# resonant constants


@dataclass(frozen=True)
class ResonantValues:
    xi: float
    m_res: complex
    c_res: float
    c_tilde: float

    @property
    def d1(self) -> float:
        """m_{++-}(xi, 0, -xi) / (i |xi|^{3/2})."""
        return float((self.m_res / (1j * abs(self.xi) ** 1.5)).real)

    @property
    def d2(self) -> float:
        return self.c_res / abs(self.xi) ** 1.5


def resonant_values(xi: float, symbols: CubicSymbols | None = None) -> ResonantValues:
    """m_{++-}, c^{++-} at (xi, 0, -xi) and c~(xi) = -(8 pi |xi|^{1/2} / 3) c^{++-}(xi, 0, -xi)."""
    if not np.isfinite(xi) or xi == 0:
        raise DomainError(f"resonant values need a nonzero frequency, got {xi}")
    symbols = symbols or CubicSymbols()
    args = (np.array([xi], float), np.array([0.0]), np.array([-xi], float))
    m_res = complex(symbols.m((1, 1, -1))(*args)[0])
    c_val = complex(symbols.c((1, 1, -1))(*args)[0])
    c_tilde = -8 * np.pi * np.sqrt(abs(xi)) / 3 * c_val.real
    return ResonantValues(float(xi), m_res, c_val.real, float(c_tilde))


def c_tilde_closed(xi):
    return np.pi * np.asarray(xi, float) ** 2 / 6


# ---------------------------------------------------------------------------
# cubic right-hand side of the profile equation


def _conj_field(fhat: np.ndarray, lat) -> np.ndarray:
    """Coefficients of conj(f) given those of f."""
    return np.conj(fhat[lat.neg])


def cubic_rhs(fhat: np.ndarray | SpectralField, t: float, lattice=None,
              symbols: CubicSymbols | None = None, tol: float = 0.0) -> dict:
    """I^iota(xi, t) for the four channels, normalised so that
    d/dt f^ = (i / 4 pi^2) sum_iota I^iota + quartic terms."""
    if isinstance(fhat, SpectralField):
        lattice, fhat = fhat.lattice, fhat.coeffs
    if lattice is None:
        raise ConfigurationError("a lattice is needed for raw coefficient arrays")
    symbols = symbols or CubicSymbols()
    fp = SpectralField(lattice, np.asarray(fhat, complex), real=False)
    fm = SpectralField(lattice, _conj_field(fp.coeffs, lattice), real=False)
    out = {}
    for iota in CHANNELS:
        c = symbols.c(iota)

        def sym(xi, eta, sigma, c=c, iota=iota):
            return np.exp(1j * t * psi_phase(iota, xi, eta, sigma)) * c(xi, eta, sigma)

        f1, f2, f3 = (fp if s > 0 else fm for s in iota)
        out[channel_key(iota)] = 4 * np.pi ** 2 * sc.apply_trilinear(sym, f1, f2, f3, tol=tol).coeffs
    return out


def cubic_profile_rate(fhat, t, lattice=None, symbols=None, tol=0.0) -> np.ndarray:
    """(i / 4 pi^2) sum of the four I^iota."""
    I = cubic_rhs(fhat, t, lattice, symbols, tol)
    return 1j / (4 * np.pi ** 2) * sum(I.values())


# ---------------------------------------------------------------------------
# profile with the logarithmic phase correction


@dataclass
class Profile:
    lattice: sc.FrequencyLattice
    times: np.ndarray
    fhat: np.ndarray
    L: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, float)
        if self.fhat.shape != (self.times.size, self.lattice.N):
            raise ConfigurationError("fhat must have shape (len(times), N)")
        if np.any(np.diff(self.times) <= 0):
            raise ConfigurationError("profile times must be strictly increasing")


# ---------------------------------------------------------------------------
# phase geometry


@dataclass(frozen=True)
class PhaseReport:
    samples: int
    violations: int
    min_ratio: float
    max_ratio: float
    block_constants: dict


def phase_pair_value(a, b):
    """(a + b)^{3/2} - b^{3/2} - a^{3/2}."""
    return (a + b) ** 1.5 - b ** 1.5 - a ** 1.5


def phase_lower_bound_suite(samples: int = 1_000_000, seed: int = 0, blocks: int = 6) -> PhaseReport:
    """Check a b^{1/2}/4 <= (a+b)^{3/2} - b^{3/2} - a^{3/2} <= 4 a b^{1/2} on random 0 <= a <= b.

    Also records, per dyadic block triple (k, k1, k2) of (xi, xi - eta, eta), the
    smallest |quadratic phase| / (2^{min k} 2^{max k / 2}) for the three sign pairs.
    """
    if samples < 1:
        raise ConfigurationError("samples must be positive")
    rng = np.random.default_rng(seed)
    u = rng.random((2, samples))
    # log-uniform magnitudes across many scales, plus exact zeros
    mag = 10.0 ** (12 * u - 6)
    a, b = np.sort(mag * (rng.random((2, samples)) > 1e-3), axis=0)
    val = phase_pair_value(a, b)
    scale = a * np.sqrt(b)
    bad = (val < scale / 4) | (val > 4 * scale)
    ratio = np.where(scale > 0, val / np.where(scale > 0, scale, 1), np.nan)

    consts = {}
    for k in range(-blocks // 2, blocks // 2):
        for k1 in range(-blocks // 2, blocks // 2):
            x = 2.0 ** k * (1 + rng.random(2000))
            z = 2.0 ** k1 * (1 + rng.random(2000)) * rng.choice([-1, 1], 2000)
            eta = x - z
            k2 = np.floor(np.log2(np.abs(eta)))
            for e1, e2 in Q_CHANNELS:
                den = np.abs(omega_pair(e1, e2, x, eta))
                lo = np.minimum(np.minimum(np.abs(x), np.abs(z)), np.abs(eta))
                hi = np.maximum(np.maximum(np.abs(x), np.abs(z)), np.abs(eta))
                r = den / (lo * np.sqrt(hi))
                for kk in np.unique(k2):
                    sel = k2 == kk
                    key = (channel_key((e1, e2)), k, k1, int(kk))
                    consts[key] = min(consts.get(key, np.inf), float(r[sel].min()))
    return PhaseReport(samples, int(bad.sum()), float(np.nanmin(ratio)), float(np.nanmax(ratio)), consts)


def psi_min_comparable(iota, xi: float, n: int = 401, spread: float = 2.0) -> float:
    """min |Psi^iota| over (eta, sigma) with every input frequency in [|xi|/spread, spread |xi|]."""
    ax = abs(xi)
    g = np.linspace(-spread * ax, spread * ax, n)
    g = g[np.abs(g) >= ax / spread]
    A, B = np.meshgrid(g, g, indexing="ij")
    C = xi - A - B
    ok = (np.abs(C) >= ax / spread) & (np.abs(C) <= spread * ax)
    eta = xi - A
    sigma = C
    return float(np.abs(psi_phase(iota, xi, eta[ok], sigma[ok])).min())


def q_block_ratio(e1: int, e2: int, k: int, k1: int, k2: int, n: int = 64, seed: int = 0) -> float:
    """sup |q| over a sampled dyadic block divided by 2^k 2^{min(k, k1, k2)/2}; nan if empty."""
    rng = np.random.default_rng(seed)
    x = 2.0 ** k * (1 + rng.random(n * n)) * rng.choice([-1, 1], n * n)
    e = 2.0 ** k2 * (1 + rng.random(n * n)) * rng.choice([-1, 1], n * n)
    z = x - e
    sel = (np.abs(z) >= 2.0 ** k1) & (np.abs(z) < 2.0 ** (k1 + 1))
    if not sel.any():
        return float("nan")
    val = np.abs(q_symbol(e1, e2)(x[sel], e[sel])).max()
    return float(val / (2.0 ** k * 2.0 ** (min(k, k1, k2) / 2)))
