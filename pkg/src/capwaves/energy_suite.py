"""Quadratic energy of W = D^k u, its cubic corrections, the drift experiment and
block-norm sampling of the quadratic and energy symbols."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import spectral_core as sc
from .diagonalization import SIGNS, a_symbol, apply_sigma_gamma, b_symbol, build_good_unknown, sign_key, signed
from .errors import ConfigurationError
from .evolution import IntegratorConfig, WaveState, integrate
from .spectral_core import SpectralField, abs_power, chi

DEFAULT_K = 2


def order_of(k: int) -> float:
    return 1.5 * k


def build_W(u: SpectralField, gamma: SpectralField, k: int = DEFAULT_K) -> SpectralField:
    """k-fold application of |d|^{3/2} + Sigma_gamma."""
    if k not in (0, 1, 2):
        raise ConfigurationError(f"k must be 0, 1 or 2, got {k}")
    W = u.with_coeffs(u.coeffs, real=False)
    for _ in range(k):
        W = sc.fractional_derivative(W, 1.5) + apply_sigma_gamma(W, gamma)
    return W


# ---------------------------------------------------------------------------
# energy symbols


def _masked(val, xi, eta):
    return sc.with_zero_modes(val, xi, eta, xi - eta)


def q_energy_symbol(N: float) -> Callable:
    """Antisymmetrised transport symbol; m_N = q_N / (i (|xi|^{3/2} - |xi-eta|^{3/2} - |eta|^{3/2}))."""

    def q(xi, eta):
        z = xi - eta
        with np.errstate(divide="ignore", invalid="ignore"):
            br = (xi * abs_power(xi, N) * abs_power(eta, -N) * chi(z, eta)
                  - eta * abs_power(eta, N) * abs_power(xi, -N) * chi(-z, xi))
            val = np.where(br != 0, 0.5j * z * abs_power(z, -0.5) * br, 0.0)
        return _masked(val, xi, eta)

    return q


def m_energy_symbol(N: float) -> Callable:
    """Symbol pairing conj(W)(xi), W(eta) and u(xi - eta) in the transport correction."""
    q = q_energy_symbol(N)

    def m(xi, eta):
        num = q(xi, eta)
        with np.errstate(divide="ignore", invalid="ignore"):
            den = 1j * (np.abs(xi) ** 1.5 - np.abs(xi - eta) ** 1.5 - np.abs(eta) ** 1.5)
            val = np.where(num != 0, num / den, 0.0)
        return _masked(val, xi, eta)

    return m


def a_energy_symbol(e1: int, e2: int, N: float) -> Callable:
    a = a_symbol(e1, e2)

    def aN(xi, eta):
        base = a(xi, eta)
        with np.errstate(divide="ignore", invalid="ignore"):
            den = np.abs(xi) ** 1.5 - e2 * np.abs(eta) ** 1.5 - e1 * np.abs(xi - eta) ** 1.5
            val = np.where(base != 0, -1j * abs_power(xi, N) * abs_power(eta, -N) * base / den, 0.0)
        return _masked(val, xi, eta)

    return aN


def b_energy_symbol(e1: int, e2: int, N: float) -> Callable:
    b = b_symbol(e1, e2)

    def bN(xi, eta):
        base = b(xi, eta)
        with np.errstate(divide="ignore", invalid="ignore"):
            den = np.abs(xi) ** 1.5 - e2 * np.abs(eta) ** 1.5 - e1 * np.abs(xi - eta) ** 1.5
            val = np.where(base != 0, -1j * abs_power(xi, N) * base / den, 0.0)
        return _masked(val, xi, eta)

    return bN


# ---------------------------------------------------------------------------
# functionals


@dataclass(frozen=True)
class EnergyFunctional:
    k: int
    E2: float
    E3_m: float
    E3_a: dict
    E3_b: dict
    imag_residue: float

    @property
    def E3(self) -> float:
        return self.E3_m + sum(self.E3_a.values()) + sum(self.E3_b.values())

    @property
    def total(self) -> float:
        return self.E2 + self.E3


def _pairing(W: SpectralField, B: SpectralField) -> complex:
    """(1/L) sum_xi conj(W^)(xi) B^(xi), the lattice form of the double integrals."""
    return complex(np.sum(np.conj(W.coeffs) * B.coeffs) / W.lattice.L)


def energy_total(u: SpectralField, gamma: SpectralField, k: int = DEFAULT_K, tol: float = 0.0) -> EnergyFunctional:
    """E2 = |W|^2/2 and the cubic corrections with N = 3k/2."""
    N = order_of(k)
    W = build_W(u, gamma, k)
    E2 = 0.5 * float(np.sum(np.abs(W.coeffs) ** 2) / u.lattice.L)
    vals, resid = {}, 0.0

    def take(v):
        nonlocal resid
        resid = max(resid, abs(v.imag) / (abs(v) + 1e-300))
        return v.real

    u = u.with_coeffs(u.coeffs, real=False)
    E3_m = _pairing(W, sc.apply_bilinear(m_energy_symbol(N), u, W, tol=tol)).real
    for e1, e2 in SIGNS:
        key = sign_key(e1, e2)
        vals[key] = (_pairing(W, sc.apply_bilinear(a_energy_symbol(e1, e2, N), signed(u, e1), signed(W, e2), tol=tol)),
                     _pairing(W, sc.apply_bilinear(b_energy_symbol(e1, e2, N), signed(u, e1), signed(u, e2), tol=tol)))
    E3_a = {key: v[0].real for key, v in vals.items()}
    E3_b = {key: v[1].real for key, v in vals.items()}
    # the real part is taken by definition; the residue is reported for the record only
    for v in vals.values():
        take(v[0]), take(v[1])
    return EnergyFunctional(k, E2, float(E3_m), E3_a, E3_b, resid)


def energy_of_state(state: WaveState, k: int = DEFAULT_K, tol: float = 0.0,
                    nonlinear: bool = True) -> EnergyFunctional:
    """Energy of a state; the linear model has u = U, gamma = 0 and no cubic corrections."""
    if not nonlinear:
        W = build_W(state.U, state.lattice.zeros(), k)
        E2 = 0.5 * float(np.sum(np.abs(W.coeffs) ** 2) / state.lattice.L)
        zero = {sign_key(*s): 0.0 for s in SIGNS}
        return EnergyFunctional(k, E2, 0.0, dict(zero), dict(zero), 0.0)
    b = build_good_unknown(state.h, state.phi)
    return energy_total(b.u, b.gamma, k, tol)


# ---------------------------------------------------------------------------
# drift experiment


@dataclass(frozen=True)
class DriftReport:
    eps: np.ndarray
    drift_total: np.ndarray
    drift_E2: np.ndarray
    exponent_total: float
    exponent_E2: float
    passed: bool


def _fit(x, y):
    y = np.maximum(np.asarray(y, float), 1e-300)
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def drift_experiment(shape: Callable[[float], WaveState], eps, cfg: IntegratorConfig, T: float,
                     k: int = DEFAULT_K, tol: float = 0.0) -> DriftReport:
    """Evolve identical shapes at several amplitudes and fit |E(T) - E(0)| against eps."""
    eps = np.asarray(eps, float)
    if eps.size < 3:
        raise ConfigurationError("need three or more amplitudes")
    dt_, d2 = [], []
    for e in eps:
        s0 = shape(e)
        s1 = integrate(s0.copy(), cfg, t_end=T)
        E0, E1 = (energy_of_state(s, k, tol, cfg.nonlinear) for s in (s0, s1))
        dt_.append(abs(E1.total - E0.total))
        d2.append(abs(E1.E2 - E0.E2))
    pt, p2 = _fit(eps, dt_), _fit(eps, d2)
    return DriftReport(eps, np.array(dt_), np.array(d2), pt, p2, pt >= 3.5 and 2.5 <= p2 <= 3.4)


# ---------------------------------------------------------------------------
# symbol-bound sampler

LEMMAS = ("bounda", "boundb", "boundm_N")
_BOX = 1.7


@dataclass(frozen=True)
class SymbolBoundReport:
    lemma: str
    symbol: str
    block: tuple
    proxy: float
    bound: float
    ratio: float


def in_X(k: int, k1: int, k2: int) -> bool:
    a = sorted((k, k1, k2))
    return a[2] - a[1] <= 4


def _quadrant_samples(m: Callable, block: tuple, quadrant: tuple, M: int, scan: int = 384) -> np.ndarray:
    """Samples of the block on the tight bounding box of its support in one sign quadrant of (xi - eta, eta)."""
    k, k1, k2 = block
    s1, s2 = quadrant

    def evaluate(z, e):
        Z, E = np.meshgrid(z, e, indexing="ij")
        X = Z + E
        cut = sc.phi_k(X, k) * sc.phi_k(Z, k1) * sc.phi_k(E, k2)
        vals = np.zeros(X.shape, complex)
        on = cut != 0
        if on.any():
            with np.errstate(all="ignore"):
                vals[on] = np.asarray(m(X[on], E[on])) * cut[on]
        return vals

    lo, hi = 0.6, _BOX
    z = s1 * np.linspace(lo, hi, scan) * 2.0 ** k1
    e = s2 * np.linspace(lo, hi, scan) * 2.0 ** k2
    nz = evaluate(z, e) != 0
    if not nz.any():
        return np.zeros((M, M), complex)
    iz, ie = np.nonzero(nz.any(axis=1))[0], np.nonzero(nz.any(axis=0))[0]
    zb = sorted((z[max(iz[0] - 1, 0)], z[min(iz[-1] + 1, scan - 1)]))
    eb = sorted((e[max(ie[0] - 1, 0)], e[min(ie[-1] + 1, scan - 1)]))
    # the samples vanish at both ends, so the periodic extension stays smooth
    zz = np.linspace(zb[0], zb[1], M, endpoint=False)
    ee = np.linspace(eb[0], eb[1], M, endpoint=False)
    return evaluate(zz, ee)


QUADRANTS = ((1, 1), (1, -1), (-1, 1), (-1, -1))


def block_samples(m: Callable, block: tuple, M: int) -> list:
    return [_quadrant_samples(m, block, q, M) for q in QUADRANTS]


def block_norm_proxy(m: Callable, block: tuple, M: int = 64) -> float:
    """Sum over sign quadrants of the l1 norm of the inverse DFT of the block samples.

    The L1 norm of the kernel is invariant under affine changes of the frequency variables,
    so each quadrant is sampled on its own bounding box in (xi - eta, eta); the triangle
    inequality makes the sum an upper estimate for the whole block.
    """
    return float(sum(np.abs(np.fft.ifft2(v)).sum() for v in block_samples(m, block, M)))


def lemma_symbols(lemma: str, N: float = order_of(DEFAULT_K)) -> dict:
    if lemma == "bounda":
        return {f"a{sign_key(e1, 1)}": a_symbol(e1, 1) for e1 in (1, -1)}
    if lemma == "boundb":
        return {f"b{sign_key(*s)}": b_symbol(*s) for s in SIGNS}
    if lemma == "boundm_N":
        return {"m_N": m_energy_symbol(N)}
    raise ConfigurationError(f"lemma must be one of {LEMMAS}, got {lemma!r}")


def lemma_bound(lemma: str, block: tuple) -> float:
    k, k1, k2 = block
    return {"bounda": 2.0 ** (1.5 * k1), "boundb": 2.0 ** (1.5 * k),
            "boundm_N": 2.0 ** (0.5 * k1 - 0.5 * k)}[lemma]


def lemma_support(lemma: str, block: tuple) -> bool:
    k, k1, k2 = block
    if not in_X(*block):
        return False
    if lemma == "boundb":
        return abs(k1 - k2) <= 15
    return k2 - k1 >= 6


def sample_blocks(lemma: str, trials: int, seed: int = 0, kmin: int = -4, kmax: int = 4) -> list:
    """Random triples inside the support of the lemma."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < trials:
        k2 = int(rng.integers(kmin, kmax + 1))
        if lemma == "boundb":
            k1 = k2 + int(rng.integers(-4, 5))
            k = int(rng.integers(min(k1, k2) - 8, max(k1, k2) + 2))
        else:
            k1 = k2 - int(rng.integers(6, 13))
            k = k2 + int(rng.integers(-1, 2))
        b = (k, k1, k2)
        if lemma_support(lemma, b) and b not in out:
            out.append(b)
    return out


def symbol_bound_sampler(lemma: str, trials: int = 12, M: int = 64, seed: int = 0,
                         blocks: list | None = None) -> list:
    """Block-norm proxies against the dyadic bound of the lemma, one report per block and symbol."""
    syms = lemma_symbols(lemma)
    blocks = blocks if blocks is not None else sample_blocks(lemma, trials, seed)
    out = []
    for b in blocks:
        bound = lemma_bound(lemma, b)
        for name, m in syms.items():
            p = block_norm_proxy(m, b, M)
            out.append(SymbolBoundReport(lemma, name, tuple(b), p, bound, p / bound))
    return out


def worst_ratio(reports: list) -> float:
    return max(r.ratio for r in reports)


def support_violations(lemma: str, blocks: list, M: int = 32) -> int:
    """Blocks outside the support indicator on which some symbol has a nonzero sample."""
    bad = 0
    for b in blocks:
        if lemma_support(lemma, b):
            continue
        for m in lemma_symbols(lemma).values():
            if any(np.any(v != 0) for v in block_samples(m, b, M)):
                bad += 1
    return bad
