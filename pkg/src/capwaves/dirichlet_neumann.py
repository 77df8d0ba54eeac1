"""Dirichlet-Neumann operator G(h) for a periodic fluid occupying {y <= h(x)}.

Three independent evaluations are provided:

* ``dn_series``: the multiplier expansion through cubic order,
* ``dn_boundary_integral``: a boundary-integral solve for the harmonic conjugate
  psi of phi along the curve x + i h(x), with G(h) phi = -psi_x,
* ``paralinear_split``: the paradifferential decomposition of G(h) phi.

On the torus every 1/(alpha - beta) kernel is replaced by its periodisation
c cot(c (alpha - beta)), c = pi / L, and the quadratures use the trapezoid rule.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from math import factorial

import numpy as np
from numpy.polynomial import polynomial as P

from . import spectral_core as sc
from .errors import ConfigurationError, DivergenceError
from .spectral_core import SpectralField


def n2(xi, eta):
    """Quadratic symbol, h at xi - eta and phi at eta."""
    return xi * eta - np.abs(xi) * np.abs(eta)


def n3(xi, eta, sigma):
    """Cubic symbol, h at xi - eta and eta - sigma, phi at sigma."""
    return 0.5 * np.abs(xi) * np.abs(sigma) * (np.abs(eta) + np.abs(xi + sigma - eta)
                                               - np.abs(xi) - np.abs(sigma))


@dataclass(frozen=True)
class DNExpansion:
    order0: SpectralField
    order2: SpectralField
    order3: SpectralField
    truncation_order: int

    def total(self) -> SpectralField:
        out = self.order0
        if self.truncation_order >= 2:
            out = out + self.order2
        if self.truncation_order >= 3:
            out = out + self.order3
        return out


def _check_pair(h: SpectralField, phi: SpectralField):
    if h.lattice != phi.lattice:
        raise ConfigurationError("h and phi live on different lattices")


def _slope_warning(h: SpectralField):
    s = sc.sup_norm(sc.derivative(h))
    if s >= 1.0:
        warnings.warn(f"|h_x|_inf = {s:.3g} >= 1; the series for G(h) may not converge",
                      RuntimeWarning, stacklevel=3)


def dn_series(h: SpectralField, phi: SpectralField, max_order: int = 3) -> DNExpansion:
    """|d|phi + DN_2[h, phi] + DN_3[h, h, phi], each by its exact lattice sum."""
    _check_pair(h, phi)
    if max_order not in (1, 2, 3):
        raise ConfigurationError(f"max_order must be 1, 2 or 3, got {max_order}")
    _slope_warning(h)
    zero = phi.lattice.zeros()
    order0 = sc.fractional_derivative(phi, 1.0)
    order2 = sc.apply_bilinear(n2, h, phi, real=True) if max_order >= 2 else zero
    order3 = sc.apply_trilinear(n3, h, h, phi, real=True) if max_order >= 3 else zero
    return DNExpansion(order0, order2.real_part(), order3.real_part(), max_order)


def dn2_operator(h: SpectralField, phi: SpectralField) -> SpectralField:
    """-d(h phi_x) - |d|(h |d|phi), the same term through products."""
    dphi = sc.fractional_derivative(phi, 1.0)
    return (-sc.derivative(sc.product(h, sc.derivative(phi)))
            - sc.fractional_derivative(sc.product(h, dphi), 1.0))


def dn3_operator(h: SpectralField, phi: SpectralField) -> SpectralField:
    """|d|(h|d|(h|d|phi)) + d^2(h^2 |d|phi)/2 + |d|(h^2 phi_xx)/2 through products.

    Intermediate products are formed on a doubled lattice so that the three terms
    cancel as they do for the exact symbol; only the output is truncated.
    """
    N = h.lattice.N
    h, phi = sc.resample(h, 2 * N), sc.resample(phi, 2 * N)
    D = lambda f: sc.fractional_derivative(f, 1.0)
    dphi = D(phi)
    h2 = sc.product(h, h)
    out = (D(sc.product(h, D(sc.product(h, dphi))))
           + 0.5 * sc.derivative(sc.product(h2, dphi), 2)
           + 0.5 * D(sc.product(h2, sc.derivative(phi, 2))))
    return sc.resample(out, N)


# ---------------------------------------------------------------------------
# periodic kernels


def _cot(x):
    return np.cos(x) / np.sin(x)


def _periodic_inverse_power(d: np.ndarray, m: int, L: float) -> np.ndarray:
    """sum_k 1/(d + kL)^m (symmetric summation for m = 1), off the diagonal."""
    c = np.pi / L
    poly = np.array([0.0, 1.0])
    for _ in range(m - 1):
        poly = -P.polymul([1.0, 0.0, 1.0], P.polyder(poly))
    y = _cot(c * d)
    return (-1) ** (m - 1) / factorial(m - 1) * c ** m * P.polyval(y, poly)


class _Geometry:
    """Grid samples of h and the pairwise differences used by every kernel."""

    def __init__(self, h: SpectralField):
        lat = h.lattice
        self.lattice = lat
        self.h = h.values().real
        self.h1 = sc.derivative(h).values().real
        self.h2 = sc.derivative(h, 2).values().real
        x = lat.x
        self.d = x[:, None] - x[None, :]
        self.dh = self.h[:, None] - self.h[None, :]
        self.off = ~np.eye(lat.N, dtype=bool)
        self.w = lat.L / lat.N

    def fill(self, kernel: np.ndarray, diag: np.ndarray) -> np.ndarray:
        k = np.where(self.off, kernel, 0.0)
        k[np.diag_indices_from(k)] = diag
        return k * self.w


def t_matrices(h: SpectralField) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature matrices of T_1 and T_2 acting on grid values."""
    g = _Geometry(h)
    c = np.pi / g.lattice.L
    with np.errstate(all="ignore"):
        z = c * (g.d + 1j * g.dh)
        cauchy = (1 + 1j * g.h1[None, :]) * c * _cot(z) / (np.pi * 1j)
        t1 = -cauchy.real
        t2 = cauchy.imag + c * _cot(c * g.d) / np.pi
    denom = 2 * np.pi * (1 + g.h1 ** 2)
    return g.fill(t1, g.h2 / denom), g.fill(t2, g.h1 * g.h2 / denom)


def rn_matrix(h: SpectralField, n: int) -> np.ndarray:
    if n < 0 or n > 4:
        raise ConfigurationError(f"R_n is implemented for 0 <= n <= 4, got {n}")
    g = _Geometry(h)
    L = g.lattice.L
    with np.errstate(all="ignore"):
        k = (g.dh ** (n + 1) * _periodic_inverse_power(g.d, n + 2, L)
             - g.h1[None, :] * g.dh ** n * _periodic_inverse_power(g.d, n + 1, L)) / np.pi
    return g.fill(k, g.h2 * g.h1 ** n / (2 * np.pi))


def rn_term(h: SpectralField, f: SpectralField, n: int) -> SpectralField:
    """R_n f by trapezoid quadrature of its periodic kernel."""
    _check_pair(h, f)
    out = rn_matrix(h, n) @ f.values()
    return sc.forward_transform(out.real if f.real else out, f.lattice)


def r0_multiplier(h: SpectralField, f: SpectralField) -> SpectralField:
    """R_0 f from its bilinear symbol, f at xi - eta and h at eta."""
    m = lambda xi, eta: (xi - eta) * (np.sign(xi) - np.sign(xi - eta))
    return sc.apply_bilinear(m, f, h, real=f.real)


def r1_multiplier(h: SpectralField, f: SpectralField) -> SpectralField:
    """R_1 f from its symmetrised trilinear symbol."""

    def m(xi, eta, sigma):
        e1, e2 = eta - sigma, sigma
        z = xi - e1 - e2
        return 0.5j * z * (np.abs(z) + np.abs(xi) - np.abs(xi - e1) - np.abs(xi - e2))

    return sc.apply_trilinear(m, f, h, h, real=f.real)


# ---------------------------------------------------------------------------
# boundary integral solve


@dataclass(frozen=True)
class BoundaryIntegralState:
    gamma: np.ndarray
    psi: SpectralField
    iteration_count: int
    residual: float
    history: tuple = ()


def _grid_l2(v: np.ndarray, L: float) -> float:
    return float(np.sqrt(np.sum(np.abs(v) ** 2) * L / v.size))


def dn_boundary_integral(h: SpectralField, phi: SpectralField, tol: float = 1e-12,
                         max_iter: int = 200) -> tuple[SpectralField, BoundaryIntegralState]:
    """G(h) phi = -psi_x, where (I + T_1) psi = (-i H_0 + T_2) phi.

    Picard iteration; after the residual grows once the update is relaxed by 1/2.
    The residual is the absolute grid L^2 norm of the equation defect.
    """
    _check_pair(h, phi)
    if not 1e-13 <= tol <= 1e-6:
        raise ConfigurationError(f"tol must lie in [1e-13, 1e-6], got {tol}")
    lat = phi.lattice
    phi = sc.mean_free(phi)
    T1, T2 = t_matrices(h)
    p = phi.values().real
    rhs = sc.apply_multiplier(phi, 1j * sc.sign(lat.xi), real=True).values().real + T2 @ p
    psi = rhs.copy()
    relax = 1.0
    history = []
    for it in range(1, max_iter + 1):
        defect = psi + T1 @ psi - rhs
        res = _grid_l2(defect, lat.L)
        history.append(res)
        if res <= tol:
            break
        if len(history) > 1 and res > history[-2]:
            relax = 0.5
        psi = psi - relax * defect
    else:
        raise DivergenceError(f"boundary integral iteration did not reach {tol:g} in {max_iter} steps",
                              history=history)
    psi_f = sc.forward_transform(psi, lat)
    G = -sc.derivative(psi_f)
    gamma = lat.x + 1j * h.values().real
    return G, BoundaryIntegralState(gamma, psi_f, it, res, tuple(history))


def dn_oracle(h: SpectralField, phi: SpectralField, tol: float = 1e-12) -> SpectralField:
    return dn_boundary_integral(h, phi, tol)[0]


# ---------------------------------------------------------------------------
# paralinearisation


@dataclass(frozen=True)
class ParalinearSplit:
    B: SpectralField
    V: SpectralField
    omega: SpectralField
    G2: SpectralField
    G_ge3: SpectralField
    G: SpectralField


def g2_symbol(xi, eta):
    """phi at xi - eta, h at eta."""
    return (1.0 - sc.chi(xi - eta, eta)) * (xi * (xi - eta) - np.abs(xi) * np.abs(xi - eta))


def paralinear_split(h: SpectralField, phi: SpectralField, G: SpectralField | None = None,
                     tol: float = 1e-12) -> ParalinearSplit:
    _check_pair(h, phi)
    if G is None:
        G = dn_oracle(h, phi, tol)
    hx, px = sc.derivative(h), sc.derivative(phi)
    B = sc.pointwise(lambda g, a, b: (g + a * b) / (1 + a ** 2), G, hx, px)
    V = sc.pointwise(lambda g, a, p: p - a * (g + a * p) / (1 + a ** 2), G, hx, px)
    V_alt = sc.pointwise(lambda g, a, p: (p - a * g) / (1 + a ** 2), G, hx, px)
    scale = max(sc.l2_norm(V), 1e-300)
    if sc.l2_norm(V - V_alt) > 1e-12 * scale:
        raise AssertionError("the two forms of V disagree")
    omega = phi - sc.paraproduct(B, sc.lp_projection(h, 1, "P_ge"))
    G2 = sc.apply_bilinear(g2_symbol, phi, h, real=True).real_part()
    main = (sc.fractional_derivative(omega, 1.0)
            - sc.fractional_derivative(sc.paraproduct(B, sc.lp_projection(h, 0, "P_le")), 1.0)
            - sc.derivative(sc.paraproduct(V, h)) + G2)
    return ParalinearSplit(B, V, omega, G2, G - main, G)
