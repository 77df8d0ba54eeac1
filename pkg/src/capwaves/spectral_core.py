"""Periodic spectral representation and Fourier calculus on a uniform lattice.

Conventions used throughout the package:

* ``f_hat(xi) = int_0^L f(x) exp(-i xi x) dx``, computed as ``(L/N) * fft(samples)``.
* ``f(x) = (1/L) sum_xi f_hat(xi) exp(i xi x)``.
* Bilinear operators ``F[M(f, g)](xi) = (1/L) sum_eta m(xi, eta) f_hat(xi - eta) g_hat(eta)``.
* Trilinear operators
  ``F[M(f, g, h)](xi) = (1/L^2) sum_{eta, sigma} m(xi, eta, sigma) f_hat(xi - eta) g_hat(eta - sigma) h_hat(sigma)``.

These are the lattice versions of ``(1/2pi) int d eta`` and ``(1/4pi^2) int int``.
Coefficient arrays are always stored in numpy FFT order.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError, OutOfBandError

# Plateau and support radii of the Littlewood-Paley bump.
PLATEAU = 5.0 / 4.0
SUPPORT = 8.0 / 5.0
# Frequency gap in the paraproduct cutoff.
PARA_GAP = 10
# Cap on the number of symbol evaluations held in memory at once.
_CHUNK = 1 << 21


@dataclass(frozen=True)
class FrequencyLattice:
    """Uniform periodic grid on [0, L) with N modes."""

    L: float
    N: int

    def __post_init__(self):
        if not np.isfinite(self.L) or self.L <= 0:
            raise ConfigurationError(f"box length must be positive, got {self.L}")
        n = int(self.N)
        if n != self.N or n < 2 or n & (n - 1):
            raise ConfigurationError(f"mode count must be a power of two >= 2, got {self.N}")

    @property
    def R(self) -> float:
        return self.L / (2 * np.pi)

    @property
    def dxi(self) -> float:
        return 2 * np.pi / self.L

    @property
    def xi_max(self) -> float:
        return self.N // 2 * self.dxi

    @cached_property
    def index(self) -> np.ndarray:
        """Signed integer wavenumbers in FFT order."""
        return np.fft.fftfreq(self.N, 1.0 / self.N).round().astype(np.int64)

    @cached_property
    def xi(self) -> np.ndarray:
        return self.index * self.dxi

    @cached_property
    def x(self) -> np.ndarray:
        return self.L * np.arange(self.N) / self.N

    @cached_property
    def x_centered(self) -> np.ndarray:
        x = self.x.copy()
        x[x >= self.L / 2] -= self.L
        return x

    @cached_property
    def neg(self) -> np.ndarray:
        """Positions of -xi for every lattice position (Nyquist maps to itself)."""
        return (-np.arange(self.N)) % self.N

    def position(self, j: np.ndarray) -> np.ndarray:
        return np.asarray(j) % self.N

    def in_band(self, j: np.ndarray) -> np.ndarray:
        j = np.asarray(j)
        return (j >= -(self.N // 2)) & (j < self.N // 2)

    def zeros(self, real: bool = True) -> "SpectralField":
        return SpectralField(self, np.zeros(self.N, complex), real)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients of a periodic function on a lattice."""

    lattice: FrequencyLattice
    coeffs: np.ndarray
    real: bool = False

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (self.lattice.N,):
            raise ConfigurationError(
                f"coefficient length {c.shape} does not match N={self.lattice.N}")
        object.__setattr__(self, "coeffs", c)

    @property
    def xi(self) -> np.ndarray:
        return self.lattice.xi

    def values(self) -> np.ndarray:
        v = np.fft.ifft(self.coeffs) * (self.lattice.N / self.lattice.L)
        return v.real.copy() if self.real else v

    def with_coeffs(self, c, real=None) -> "SpectralField":
        return SpectralField(self.lattice, c, self.real if real is None else real)

    def conj(self) -> "SpectralField":
        return SpectralField(self.lattice, np.conj(self.coeffs[self.lattice.neg]), self.real)

    def real_part(self) -> "SpectralField":
        c = 0.5 * (self.coeffs + np.conj(self.coeffs[self.lattice.neg]))
        return SpectralField(self.lattice, c, True)

    def _check(self, other):
        if isinstance(other, SpectralField) and other.lattice != self.lattice:
            raise ConfigurationError("fields live on different lattices")

    def __add__(self, other):
        if isinstance(other, SpectralField):
            self._check(other)
            return SpectralField(self.lattice, self.coeffs + other.coeffs, self.real and other.real)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, SpectralField):
            self._check(other)
            return SpectralField(self.lattice, self.coeffs - other.coeffs, self.real and other.real)
        return NotImplemented

    def __neg__(self):
        return SpectralField(self.lattice, -self.coeffs, self.real)

    def __mul__(self, c):
        if np.isscalar(c):
            return SpectralField(self.lattice, self.coeffs * c, self.real and np.isrealobj(c))
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, c):
        if np.isscalar(c):
            return SpectralField(self.lattice, self.coeffs / c, self.real and np.isrealobj(c))
        return NotImplemented

    def copy(self) -> "SpectralField":
        return SpectralField(self.lattice, self.coeffs.copy(), self.real)


# ---------------------------------------------------------------------------
# transforms and linear multipliers


def forward_transform(samples, lattice: FrequencyLattice) -> SpectralField:
    s = np.asarray(samples)
    if s.shape != (lattice.N,):
        raise ConfigurationError(f"expected {lattice.N} samples, got shape {s.shape}")
    real = bool(np.isrealobj(s))
    return SpectralField(lattice, np.fft.fft(s) * (lattice.L / lattice.N), real)


def inverse_transform(f: SpectralField) -> np.ndarray:
    return f.values()


def from_function(fn: Callable[[np.ndarray], np.ndarray], lattice: FrequencyLattice) -> SpectralField:
    return forward_transform(fn(lattice.x), lattice)


def apply_multiplier(f: SpectralField, symbol: np.ndarray, real: bool | None = None) -> SpectralField:
    """Multiply coefficients by a real or complex symbol sampled on the lattice."""
    if real is None:
        real = f.real and _preserves_reality(symbol, f.lattice)
    return SpectralField(f.lattice, f.coeffs * symbol, real)


def _preserves_reality(symbol, lattice) -> bool:
    s = np.broadcast_to(np.asarray(symbol, dtype=complex), (lattice.N,))
    return bool(np.allclose(s, np.conj(s[lattice.neg]), rtol=0, atol=1e-14 * (1 + np.abs(s).max())))


def abs_power(xi: np.ndarray, s: float) -> np.ndarray:
    """|xi|^s with the zero mode mapped to zero for every s."""
    a = np.abs(xi)
    out = np.zeros_like(a, dtype=float)
    nz = a > 0
    out[nz] = a[nz] ** s
    return out


def fractional_derivative(f: SpectralField, s: float, project: bool = False) -> SpectralField:
    """|d/dx|^s. Negative powers require a mean-free input unless ``project``."""
    if s < 0 and not project:
        mean = abs(f.coeffs[0])
        scale = np.abs(f.coeffs).max() if f.coeffs.size else 0.0
        if mean > 1e-13 * max(scale, 1e-300):
            raise DomainError("negative fractional power of a field with nonzero mean; "
                              "pass project=True to drop the zero mode")
    return apply_multiplier(f, abs_power(f.xi, s), real=f.real)


def derivative(f: SpectralField, order: int = 1) -> SpectralField:
    return apply_multiplier(f, (1j * f.xi) ** order, real=f.real)


def sign(xi: np.ndarray) -> np.ndarray:
    return np.sign(xi).astype(float)


def hilbert_transform(f: SpectralField) -> SpectralField:
    """Multiplier -sgn(xi), sgn(0) = 0. Maps real fields to imaginary ones."""
    return apply_multiplier(f, -sign(f.xi), real=False)


def free_flow(f: SpectralField, t: float) -> SpectralField:
    """exp(i t |d/dx|^{3/2}) f."""
    return apply_multiplier(f, np.exp(1j * t * abs_power(f.xi, 1.5)), real=False)


def mean_free(f: SpectralField) -> SpectralField:
    c = f.coeffs.copy()
    c[0] = 0.0
    return f.with_coeffs(c)


def inner(f: SpectralField, g: SpectralField) -> complex:
    """int f conj(g) dx."""
    return complex(np.vdot(g.coeffs, f.coeffs) / f.lattice.L)


def l2_norm(f: SpectralField) -> float:
    return float(np.sqrt(np.sum(np.abs(f.coeffs) ** 2) / f.lattice.L))


def sup_norm(f: SpectralField) -> float:
    return float(np.abs(f.values()).max())


def dealias(f: SpectralField, fraction: float) -> SpectralField:
    """Zero every coefficient with |xi| > fraction * xi_max."""
    keep = np.abs(f.lattice.index) <= fraction * (f.lattice.N // 2)
    return f.with_coeffs(np.where(keep, f.coeffs, 0.0))


# ---------------------------------------------------------------------------
# Littlewood-Paley cutoffs


def _smooth_step(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, built from exp(-1/t)."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


def cutoff(x) -> np.ndarray:
    """Even bump equal to 1 on [-5/4, 5/4] and supported in [-8/5, 8/5]."""
    return _smooth_step((SUPPORT - np.abs(x)) / (SUPPORT - PLATEAU))


def phi_k(x, k: int) -> np.ndarray:
    return cutoff(np.asarray(x) / 2.0 ** k) - cutoff(np.asarray(x) / 2.0 ** (k - 1))


def phi_le(x, k: int) -> np.ndarray:
    return cutoff(np.asarray(x) / 2.0 ** k)


def phi_ge(x, k: int) -> np.ndarray:
    return 1.0 - cutoff(np.asarray(x) / 2.0 ** (k - 1))


def phi_wide(x, k: int) -> np.ndarray:
    return phi_k(x, k - 1) + phi_k(x, k) + phi_k(x, k + 1)


LP_KINDS = {"P_k": phi_k, "P_le": phi_le, "P_ge": phi_ge, "P_wide": phi_wide}


def lp_symbol(xi, k: int, kind: str = "P_k") -> np.ndarray:
    try:
        fn = LP_KINDS[kind]
    except KeyError:
        raise ConfigurationError(f"unknown projection kind {kind!r}; use one of {sorted(LP_KINDS)}")
    return fn(xi, k)


def lp_projection(f: SpectralField, k: int, kind: str = "P_k") -> SpectralField:
    return apply_multiplier(f, lp_symbol(f.xi, k, kind), real=f.real)


def dyadic_range(lattice: FrequencyLattice) -> range:
    """All k with P_k nonzero somewhere on the lattice."""
    lo = int(np.floor(np.log2(lattice.dxi))) - 1
    hi = int(np.ceil(np.log2(lattice.xi_max))) + 1
    return range(lo, hi + 1)


def chi(x, y) -> np.ndarray:
    """Low-high cutoff sum_k phi_k(y) phi_{<= k - 10}(x)."""
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    ay = np.abs(y)
    out = np.zeros(x.shape)
    nz = ay > 0
    if not nz.any():
        return out
    base = np.floor(np.log2(ay[nz])).astype(int)
    xs, ys = x[nz], ay[nz]
    acc = np.zeros(xs.shape)
    for shift in (-1, 0, 1, 2):
        k = base + shift
        scale = np.exp2(k.astype(float))
        pk = cutoff(ys / scale) - cutoff(2.0 * ys / scale)
        acc += pk * cutoff(xs / (scale * 2.0 ** -PARA_GAP))
    out[nz] = acc
    return out


def chi_tilde(x, y) -> np.ndarray:
    """Comparable-frequency cutoff 1 - chi(x, y) - chi(y, x)."""
    return 1.0 - chi(x, y) - chi(y, x)


# ---------------------------------------------------------------------------
# products and multilinear operators


def _pad(c: np.ndarray, M: int) -> np.ndarray:
    N = c.size
    out = np.zeros(M, complex)
    out[: N // 2] = c[: N // 2]
    out[M - N // 2:] = c[N // 2:]
    return out


def _truncate(C: np.ndarray, N: int) -> np.ndarray:
    M = C.size
    return np.concatenate([C[: N // 2], C[M - N // 2:]])


def resample(f: SpectralField, N: int) -> SpectralField:
    """Same field on the lattice with N modes (zero padding or truncation)."""
    lat = FrequencyLattice(f.lattice.L, N)
    c = _pad(f.coeffs, N) if N >= f.lattice.N else _truncate(f.coeffs, N)
    return SpectralField(lat, c, f.real)


def product(*fields: SpectralField) -> SpectralField:
    """Exact lattice-truncated product of band-limited fields (zero padding, no aliasing)."""
    if not fields:
        raise ConfigurationError("product of no fields")
    lat = fields[0].lattice
    for f in fields[1:]:
        if f.lattice != lat:
            raise ConfigurationError("fields live on different lattices")
    N, L = lat.N, lat.L
    p = len(fields)
    M = N * (p + 1) // 2
    M += M % 2
    vals = np.ones(M, complex)
    for f in fields:
        vals = vals * (np.fft.ifft(_pad(f.coeffs, M)) * (M / L))
    C = np.fft.fft(vals) * (L / M)
    return SpectralField(lat, _truncate(C, N), all(f.real for f in fields))


def pointwise(fn: Callable[..., np.ndarray], *fields: SpectralField, pad: int = 2) -> SpectralField:
    """Apply a nonlinear pointwise map on a ``pad``-times refined grid and truncate."""
    lat = fields[0].lattice
    N, L = lat.N, lat.L
    M = pad * N
    args = []
    for f in fields:
        v = np.fft.ifft(_pad(f.coeffs, M)) * (M / L)
        args.append(v.real if f.real else v)
    out = fn(*args)
    real = np.isrealobj(out)
    C = np.fft.fft(out) * (L / M)
    return SpectralField(lat, _truncate(C, N), bool(real))


def _active(c: np.ndarray, tol: float) -> np.ndarray:
    a = np.abs(c)
    if tol <= 0:
        return np.flatnonzero(a > 0)
    return np.flatnonzero(a > tol * a.max())


def _accumulate(out_pos, vals, N):
    return (np.bincount(out_pos, weights=vals.real, minlength=N)
            + 1j * np.bincount(out_pos, weights=vals.imag, minlength=N))


def _finite_or_raise(values, *coords):
    bad = ~np.isfinite(values)
    if bad.any():
        i = np.flatnonzero(bad.ravel())[0]
        where = tuple(float(np.broadcast_to(c, values.shape).ravel()[i]) for c in coords)
        raise DomainError(f"symbol is not finite at lattice point {where}")


def apply_bilinear(m: Callable[[np.ndarray, np.ndarray], np.ndarray], f: SpectralField,
                   g: SpectralField, *, tol: float = 0.0, dealias_fraction: float | None = None,
                   real: bool = False) -> SpectralField:
    """(1/L) sum_eta m(xi, eta) f_hat(xi - eta) g_hat(eta), exact on the lattice.

    ``tol`` drops input modes below ``tol`` times the largest coefficient, which
    makes sparse spectra cheap. ``dealias_fraction`` truncates inputs and output.
    """
    lat = f.lattice
    if g.lattice != lat:
        raise ConfigurationError("fields live on different lattices")
    fc, gc = f.coeffs, g.coeffs
    if dealias_fraction is not None:
        fc = dealias(f, dealias_fraction).coeffs
        gc = dealias(g, dealias_fraction).coeffs
    N, idx, dxi = lat.N, lat.index, lat.dxi
    s1, s2 = _active(fc, tol), _active(gc, tol)
    out = np.zeros(N, complex)
    if s1.size == 0 or s2.size == 0:
        return SpectralField(lat, out, real)
    j2 = idx[s2]
    rows = max(1, _CHUNK // s2.size)
    for start in range(0, s1.size, rows):
        p1 = s1[start:start + rows]
        j1 = idx[p1][:, None]
        j = j1 + j2[None, :]
        ok = lat.in_band(j)
        if not ok.any():
            continue
        jj, jeta = j[ok], np.broadcast_to(j2[None, :], j.shape)[ok]
        xi, eta = jj * dxi, jeta * dxi
        with np.errstate(all="ignore"):
            mv = np.asarray(m(xi, eta), dtype=complex)
        mv = np.broadcast_to(mv, xi.shape)
        _finite_or_raise(mv, xi, eta)
        vals = mv * np.broadcast_to(fc[p1][:, None], j.shape)[ok] * gc[lat.position(jeta)]
        out += _accumulate(lat.position(jj), vals, N)
    out /= lat.L
    res = SpectralField(lat, out, real)
    return dealias(res, dealias_fraction) if dealias_fraction is not None else res


def apply_trilinear(m: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray],
                    f: SpectralField, g: SpectralField, h: SpectralField, *, tol: float = 0.0,
                    dealias_fraction: float | None = None, real: bool = False) -> SpectralField:
    """(1/L^2) sum_{eta, sigma} m(xi, eta, sigma) f_hat(xi-eta) g_hat(eta-sigma) h_hat(sigma).

    The intermediate frequency eta ranges over the lattice band as well, so the
    sum is the lattice analogue of the double integral. Cost is O(N^3) for full
    spectra; use ``apply_trilinear_factorized`` when the symbol splits.
    """
    lat = f.lattice
    for other in (g, h):
        if other.lattice != lat:
            raise ConfigurationError("fields live on different lattices")
    cs = [f.coeffs, g.coeffs, h.coeffs]
    if dealias_fraction is not None:
        cs = [dealias(x, dealias_fraction).coeffs for x in (f, g, h)]
    N, idx, dxi = lat.N, lat.index, lat.dxi
    s1, s2, s3 = (_active(c, tol) for c in cs)
    out = np.zeros(N, complex)
    if min(s1.size, s2.size, s3.size) == 0:
        return SpectralField(lat, out, real)
    j1 = idx[s1][:, None]
    j2 = idx[s2][None, :]
    pair = cs[0][s1][:, None] * cs[1][s2][None, :]
    for p3 in s3:
        j3 = idx[p3]
        jeta = j2 + j3
        jxi = j1 + jeta
        ok = lat.in_band(jxi) & lat.in_band(np.broadcast_to(jeta, jxi.shape))
        if not ok.any():
            continue
        jx = jxi[ok]
        je = np.broadcast_to(jeta, jxi.shape)[ok]
        xi, eta = jx * dxi, je * dxi
        sigma = np.full(xi.shape, j3 * dxi)
        with np.errstate(all="ignore"):
            mv = np.broadcast_to(np.asarray(m(xi, eta, sigma), dtype=complex), xi.shape)
        _finite_or_raise(mv, xi, eta, sigma)
        vals = mv * pair[ok] * cs[2][p3]
        out += _accumulate(lat.position(jx), vals, N)
    out /= lat.L ** 2
    res = SpectralField(lat, out, real)
    return dealias(res, dealias_fraction) if dealias_fraction is not None else res


def apply_trilinear_factorized(terms: Sequence[tuple], f: SpectralField, g: SpectralField,
                               h: SpectralField) -> SpectralField:
    """Fast path for m = sum_r a_r(xi) b_r(xi-eta) c_r(eta-sigma) d_r(sigma).

    Each term is a tuple of four callables of one frequency; ``None`` means 1.
    Every term reduces to one exact padded triple product.
    """
    lat = f.lattice
    out = np.zeros(lat.N, complex)

    def mult(fn, fld):
        return fld if fn is None else apply_multiplier(fld, fn(lat.xi), real=False)

    for a, b, c, d in terms:
        p = product(mult(b, f), mult(c, g), mult(d, h))
        out += (p.coeffs if a is None else a(lat.xi) * p.coeffs)
    return SpectralField(lat, out, False)


def paraproduct(a: SpectralField, b: SpectralField, method: str = "blocks") -> SpectralField:
    """T_a b with symbol chi(xi - eta, eta): a at xi - eta, b at eta."""
    if method == "direct":
        return apply_bilinear(lambda xi, eta: chi(xi - eta, eta), a, b, real=a.real and b.real)
    if method != "blocks":
        raise ConfigurationError(f"unknown paraproduct method {method!r}")
    lat = a.lattice
    out = np.zeros(lat.N, complex)
    for k in dyadic_range(lat):
        bk = lp_projection(b, k, "P_k")
        if not np.any(bk.coeffs):
            continue
        ak = lp_projection(a, k - PARA_GAP, "P_le")
        if not np.any(ak.coeffs):
            continue
        out += product(ak, bk).coeffs
    return SpectralField(lat, out, a.real and b.real)


def zero_mode_mask(*freqs) -> np.ndarray:
    """True where any of the given frequencies vanishes."""
    mask = np.zeros(np.broadcast(*freqs).shape, bool)
    for f in freqs:
        mask |= np.asarray(f) == 0
    return mask


def with_zero_modes(value, *freqs):
    """Enforce the zero-mode convention on a symbol value."""
    return np.where(zero_mode_mask(*freqs), 0.0, value)


# ---------------------------------------------------------------------------
# norms


@dataclass(frozen=True)
class NormReport:
    H: float
    Hdot: float
    Wdot: float
    Wtilde: float
    Z: float

    def as_dict(self) -> dict:
        return {"H": self.H, "Hdot": self.Hdot, "Wdot": self.Wdot, "Wtilde": self.Wtilde, "Z": self.Z}


def sobolev_norm(f: SpectralField, N: float) -> float:
    w = (1.0 + f.xi ** 2) ** (N / 2)
    return float(np.sqrt(np.sum(np.abs(w * f.coeffs) ** 2) / f.lattice.L))


def z_norm(f: SpectralField, N2: float) -> float:
    return float(np.max((abs_power(f.xi, 0.1) + abs_power(f.xi, N2 + 0.5)) * np.abs(f.coeffs)))


def norms(f: SpectralField, N: float, b: float, N2: float) -> NormReport:
    lat = f.lattice
    hdot2 = 0.0
    wdot = 0.0
    wtil = sup_norm(f)
    for k in dyadic_range(lat):
        pk = lp_projection(f, k)
        l2 = l2_norm(pk)
        if l2 == 0.0:
            continue
        sup = sup_norm(pk)
        hdot2 += l2 ** 2 * (2.0 ** (2 * N * k) + 2.0 ** (2 * b * k))
        wdot += sup * (2.0 ** (N * k) + 2.0 ** (b * k))
        if k >= 0:
            wtil += 2.0 ** (N * k) * sup
    return NormReport(sobolev_norm(f, N), float(np.sqrt(hdot2)), float(wdot), float(wtil), z_norm(f, N2))


# ---------------------------------------------------------------------------
# free flow asymptotics


def fourier_at(f: SpectralField, xi) -> np.ndarray:
    """Box Fourier integral at arbitrary frequencies, x centred in [-L/2, L/2).

    Agrees with the stored coefficients on lattice frequencies and interpolates
    smoothly in between for fields localised away from the box edges.
    """
    lat = f.lattice
    vals = f.values()
    xi = np.atleast_1d(np.asarray(xi, float))
    phase = np.exp(-1j * np.outer(xi, lat.x_centered))
    return phase @ vals * (lat.L / lat.N)


def stationary_point(t: float, x) -> np.ndarray:
    """Frequency where t|xi|^{3/2} + x xi is stationary."""
    y = np.asarray(x, float) / t
    return -(4.0 / 9.0) * y ** 2 * np.sign(y)


def stationary_phase_evaluate(f: SpectralField, t: float, x) -> np.ndarray:
    """Leading large-time term of (exp(i t Lambda) f)(x), x measured from the box centre."""
    if t == 0:
        raise DomainError("stationary phase needs t != 0")
    if t < 0:
        raise DomainError("stationary phase is implemented for forward times t > 0")
    x = np.atleast_1d(np.asarray(x, float))
    xi0 = stationary_point(t, x)
    if np.any(np.abs(xi0) > f.lattice.xi_max):
        raise OutOfBandError(f"stationary frequency outside the band |xi| <= {f.lattice.xi_max}")
    y = np.abs(x / t)
    amp = np.sqrt(2j / (3 * np.pi * t))
    return amp * np.exp(-1j * t * (4.0 / 27.0) * y ** 3) * np.abs(xi0) ** 0.25 * fourier_at(f, xi0)


def free_flow_quadrature(fhat: Callable[[np.ndarray], np.ndarray], t: float, x, xi_max: float,
                         n: int) -> np.ndarray:
    """(1/2pi) int exp(i(t|xi|^{3/2} + x xi)) fhat(xi) d xi by the trapezoid rule on [-xi_max, xi_max]."""
    x = np.atleast_1d(np.asarray(x, float))
    xi = np.linspace(-xi_max, xi_max, n)
    w = np.full(n, xi[1] - xi[0])
    w[[0, -1]] *= 0.5
    base = w * fhat(xi) * np.exp(1j * t * np.abs(xi) ** 1.5)
    out = np.empty(x.shape, complex)
    for i, xv in enumerate(x):
        out[i] = np.sum(base * np.exp(1j * xv * xi))
    return out / (2 * np.pi)
