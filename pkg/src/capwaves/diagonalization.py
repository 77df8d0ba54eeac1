"""Good unknown u, the surface-tension operator Sigma_gamma and the quadratic symbols.

Symbol convention: for a pair (e1, e2) of signs, A_{e1 e2}(u_{e1}, u_{e2}) has
u_{e1} at xi - eta and u_{e2} at eta, where u_+ = u and u_- = conj(u).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import spectral_core as sc
from .dirichlet_neumann import ParalinearSplit, paralinear_split
from .spectral_core import SpectralField, abs_power, chi, chi_tilde, phi_ge, phi_le

SIGNS = ((1, 1), (1, -1), (-1, 1), (-1, -1))


def sign_key(e1: int, e2: int) -> str:
    return ("+" if e1 > 0 else "-") + ("+" if e2 > 0 else "-")


@dataclass(frozen=True)
class GoodUnknownBundle:
    sigma: SpectralField
    gamma: SpectralField
    p1: SpectralField
    p0: SpectralField
    u: SpectralField


def surface_coefficients(h: SpectralField) -> tuple[SpectralField, SpectralField]:
    """sigma = (1 + h_x^2)^{-3/2} - 1 and gamma = sqrt(1 + sigma) - 1, sampled on the grid."""
    lat = h.lattice
    hx = sc.derivative(h).values()
    sigma = (1 + hx * hx) ** -1.5 - 1
    gamma = np.sqrt(1 + sigma) - 1
    return sc.forward_transform(sigma, lat), sc.forward_transform(gamma, lat)


def _p_ge1(f):
    return sc.lp_projection(f, 1, "P_ge")


def build_good_unknown(h: SpectralField, phi: SpectralField,
                       split: ParalinearSplit | None = None) -> GoodUnknownBundle:
    """u = |d|h - i|d|^{1/2} omega + T_{p1} P_{>=1}|d|h + T_{p0} P_{>=1}|d|^{-1} d h."""
    if split is None:
        split = paralinear_split(h, phi)
    sigma, gamma = surface_coefficients(h)
    p1 = gamma
    p0 = -0.75 * sc.derivative(gamma)
    dh = sc.fractional_derivative(h, 1.0)
    hilb = sc.apply_multiplier(h, 1j * sc.sign(h.xi), real=True)
    u = (dh - 1j * sc.fractional_derivative(split.omega, 0.5)
         + sc.paraproduct(p1, _p_ge1(dh)) + sc.paraproduct(p0, _p_ge1(hilb)))
    return GoodUnknownBundle(sigma, gamma, p1, p0, u.with_coeffs(u.coeffs, real=False))


def linear_unknown(h: SpectralField, phi: SpectralField) -> SpectralField:
    """U = |d|h - i|d|^{1/2} phi."""
    u = sc.fractional_derivative(h, 1.0) - 1j * sc.fractional_derivative(phi, 0.5)
    return u.with_coeffs(u.coeffs, real=False)


def unknown_to_hphi(U: SpectralField) -> tuple[SpectralField, SpectralField]:
    """Invert U = |d|h - i|d|^{1/2} phi for mean-free real h and phi."""
    xi = U.xi
    Uc = U.coeffs
    Um = np.conj(Uc[U.lattice.neg])
    h = 0.5 * abs_power(xi, -1.0) * (Uc + Um)
    phi = 0.5j * abs_power(xi, -0.5) * (Uc - Um)
    return U.with_coeffs(h, real=True), U.with_coeffs(phi, real=True)


def apply_sigma_gamma(g: SpectralField, gamma: SpectralField) -> SpectralField:
    """T_gamma P_{>=1}|d|^{3/2} g - (3/4) T_{gamma_x} P_{>=1} d|d|^{-1/2} g."""
    xi = g.xi
    main = sc.apply_multiplier(g, abs_power(xi, 1.5) * phi_ge(xi, 1), real=False)
    sub = sc.apply_multiplier(g, 1j * np.sign(xi) * abs_power(xi, 0.5) * phi_ge(xi, 1), real=False)
    out = sc.paraproduct(gamma, main) - 0.75 * sc.paraproduct(sc.derivative(gamma), sub)
    return out.with_coeffs(out.coeffs, real=False)


def sigma_gamma_asymmetry(g: SpectralField, gamma: SpectralField) -> float:
    """|Im <Sigma_gamma g, g>| / (|gamma_xx|_inf |g| ||d|^{-1/2} g|)."""
    val = sc.inner(apply_sigma_gamma(g, gamma), g)
    scale = (sc.sup_norm(sc.derivative(gamma, 2)) * sc.l2_norm(g)
             * sc.l2_norm(sc.fractional_derivative(g, -0.5, project=True)))
    return abs(val.imag) / scale if scale > 0 else 0.0


def transport_identity_defect(gamma: SpectralField) -> float:
    """Sup of the defect in the first-order symbol identity given p1 = gamma, p0 = -3 gamma_x / 4."""
    g = gamma.values().real
    gx = sc.derivative(gamma).values().real
    sigma = 2 * g + g * g
    sx = 2 * gx + 2 * g * gx
    p1, p1x, p0 = g, gx, -0.75 * gx
    lhs = 1.5 * sx - 1.5 * p1x + p0
    rhs = 1.5 * g * p1x - g * p0 + 0.75 * gx + 0.75 * gx * p1
    return float(np.abs(lhs - rhs).max())


# ---------------------------------------------------------------------------
# quadratic symbols


def m2_symbol(xi, eta):
    """omega at xi - eta, h at eta."""
    z = xi - eta
    return (chi_tilde(z, eta) * (xi * z - np.abs(xi) * np.abs(z))
            - chi(z, eta) * np.abs(xi) * np.abs(z) * phi_le(eta, 0))


def q2_symbol(xi, eta):
    z = xi - eta
    return (chi_tilde(z, eta) * (eta * z + np.abs(eta) * np.abs(z)) / 2
            + chi(z, eta) * np.abs(eta) * np.abs(z) * phi_le(eta, 0))


def _mask(val, xi, eta):
    return sc.with_zero_modes(val, xi, eta, xi - eta)


def a_symbol(e1: int, e2: int) -> Callable:
    """Low-high symbol a_{e1 e2}(xi, eta)."""

    def a(xi, eta):
        z = xi - eta
        ax, az, ae = np.abs(xi), np.abs(z), np.abs(eta)
        iz, ie = abs_power(z, -0.5), abs_power(eta, -1.0)
        t1 = -xi * z * iz * (ax * ie - 1)
        t2 = az ** 1.5
        t3 = eta * z * iz * (1 - np.sqrt(ax) * np.sqrt(ie))
        t4 = z * z * np.sqrt(ax) * ie * phi_ge(eta, 1)
        low = np.sqrt(az) * ie * phi_le(eta, 0)
        s = np.sqrt(ax) * ae ** 1.5
        if (e1, e2) == (1, 1):
            br = t1 + t2 + t3 + t4 + (ax ** 2 - s) * low
        elif (e1, e2) == (1, -1):
            br = t1 - t2 - t3 + t4 + (ax ** 2 + s) * low
        elif (e1, e2) == (-1, 1):
            br = -t1 - t2 - t3 + t4 + (-ax ** 2 + s) * low
        else:
            br = -t1 + t2 + t3 + t4 + (-ax ** 2 - s) * low
        return _mask(chi(z, eta) * br / 4j, xi, eta)

    return a


def m2_tilde(xi, eta):
    z = xi - eta
    return chi_tilde(z, eta) * (xi * z - np.abs(xi) * np.abs(z))


def q2_tilde(xi, eta):
    z = xi - eta
    return chi_tilde(z, eta) * (eta * z + np.abs(eta) * np.abs(z)) / 2


def b_symbol(e1: int, e2: int) -> Callable:
    """Comparable-frequency symbol b_{e1 e2}(xi, eta)."""

    def b(xi, eta):
        z = xi - eta
        iz = abs_power(z, -0.5)
        first = 0.25j * np.abs(xi) * m2_tilde(xi, eta) * iz * abs_power(eta, -1.0)
        second = 0.25j * np.sqrt(np.abs(xi)) * q2_tilde(xi, eta) * iz * abs_power(eta, -0.5)
        return _mask(e1 * first + e1 * e2 * second, xi, eta)

    return b


@dataclass(frozen=True)
class QuadraticSymbolFamily:
    a: dict = field(default_factory=lambda: {sign_key(*s): a_symbol(*s) for s in SIGNS})
    b: dict = field(default_factory=lambda: {sign_key(*s): b_symbol(*s) for s in SIGNS})

    def symbol(self, e1: int, e2: int) -> Callable:
        """a + b for the pair (e1, e2)."""
        fa, fb = self.a[sign_key(e1, e2)], self.b[sign_key(e1, e2)]
        return lambda xi, eta: fa(xi, eta) + fb(xi, eta)


def eval_quadratic_symbols(family: QuadraticSymbolFamily, xi, eta) -> dict:
    xi, eta = np.broadcast_arrays(np.asarray(xi, float), np.asarray(eta, float))
    out = {}
    for s in SIGNS:
        k = sign_key(*s)
        out["a" + k] = family.a[k](xi, eta)
        out["b" + k] = family.b[k](xi, eta)
    return out


def signed(u: SpectralField, e: int) -> SpectralField:
    return u if e > 0 else u.conj()


def quadratic_terms(u: SpectralField, family: QuadraticSymbolFamily | None = None,
                    tol: float = 0.0) -> SpectralField:
    """N_u = sum over sign pairs of (A + B)(u_{e1}, u_{e2})."""
    family = family or QuadraticSymbolFamily()
    out = np.zeros(u.lattice.N, complex)
    for e1, e2 in SIGNS:
        out += sc.apply_bilinear(family.symbol(e1, e2), signed(u, e1), signed(u, e2), tol=tol).coeffs
    return u.with_coeffs(out, real=False)


def quadratic_terms_hw(h: SpectralField, omega: SpectralField) -> SpectralField:
    """The six quadratic terms written with paraproducts in h and omega."""
    D = lambda f, s=1.0: sc.fractional_derivative(f, s)
    dx = sc.derivative
    T = sc.paraproduct
    wx = dx(omega)
    n1 = -D(dx(T(wx, h))) + dx(T(wx, D(h)))
    n2 = -1j * T(dx(omega, 2), D(omega, 0.5))
    n3 = 1j * D(T(wx, wx), 0.5) - 1j * T(wx, dx(D(omega, 0.5)))
    n4 = -1j * D(T(D(h, 3.0), _p_ge1(h)), 0.5)
    n5 = D(sc.apply_bilinear(m2_symbol, omega, h))
    n6 = -1j * D(sc.apply_bilinear(q2_symbol, omega, omega), 0.5)
    out = n1 + n2 + n3 + n4 + n5 + n6
    return out.with_coeffs(out.coeffs, real=False)


def transport_term(u: SpectralField, V: SpectralField) -> SpectralField:
    """-d T_V u."""
    out = -sc.derivative(sc.paraproduct(V, u))
    return out.with_coeffs(out.coeffs, real=False)
