import numpy as np
import pytest

from capwaves.spectral_core import FrequencyLattice, SpectralField


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def delta(lattice, j, amp=1.0, real=False):
    """Field with a single coefficient ``amp`` at integer wavenumber j."""
    c = np.zeros(lattice.N, complex)
    c[j % lattice.N] = amp
    return SpectralField(lattice, c, real)


def random_field(lattice, rng, band=None, real=True, amp=1.0, mean_free=True):
    """Random band-limited field; ``band`` caps |j|."""
    band = lattice.N // 4 if band is None else band
    c = np.zeros(lattice.N, complex)
    j = lattice.index
    sel = (np.abs(j) <= band) & (np.abs(j) < lattice.N // 2)
    c[sel] = rng.normal(size=sel.sum()) + 1j * rng.normal(size=sel.sum())
    if mean_free:
        c[0] = 0
    f = SpectralField(lattice, c * amp * lattice.L / np.sqrt(sel.sum()), False)
    return f.real_part() if real else f


def fit_order(eps, errs):
    """Least-squares slope of log(err) against log(eps)."""
    return float(np.polyfit(np.log(eps), np.log(errs), 1)[0])


@pytest.fixture
def lat64():
    return FrequencyLattice(2 * np.pi, 64)
