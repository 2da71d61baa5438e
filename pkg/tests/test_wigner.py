import numpy as np
import pytest
from numpy.polynomial.hermite import hermval

from ppk import fcs, fock, model, superop, wigner
from ppk.errors import GridError


def vacuum_density(dim):
    rho = np.zeros((dim, dim), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def quadrature_density_oracle(rho, xs):
    """P(x) = <x|rho|x> via the oscillator eigenfunctions of x = a + a^dag."""
    from scipy.special import gammaln

    dim = rho.shape[0]
    xi = xs / np.sqrt(2.0)
    lognorm = -0.25 * np.log(np.pi) - 0.5 * (np.arange(dim) * np.log(2.0)
                                             + gammaln(np.arange(dim) + 1.0))
    psis = np.empty((dim, len(xs)))
    for n in range(dim):
        c = np.zeros(n + 1)
        c[n] = 1.0
        psis[n] = hermval(xi, c) * np.exp(lognorm[n] - 0.5 * xi ** 2)
    psis /= 2.0 ** 0.25  # x = sqrt(2) xi rescaling of the density
    return np.real(np.einsum("ix,ij,jx->x", psis, rho, psis))


def test_vacuum_gaussian():
    xs = np.linspace(-6, 6, 121)
    grid = wigner.wigner(vacuum_density(20), xs, xs)
    X, P = np.meshgrid(xs, xs, indexing="ij")
    expected = np.exp(-0.5 * (X ** 2 + P ** 2)) / (2 * np.pi)
    assert np.max(np.abs(grid.values - expected)) < 1e-8
    assert grid.values.max() == pytest.approx(1 / (2 * np.pi), abs=1e-8)
    assert grid.norm() == pytest.approx(1.0, abs=1e-3)


def test_coherent_state_peak_position():
    alpha = 1.5 - 0.5j
    rho = fock.pure_to_density(fock.coherent_state(30, alpha))
    xs = np.linspace(-8, 8, 161)
    grid = wigner.wigner(rho, xs, xs)
    i, j = np.unravel_index(np.argmax(grid.values), grid.values.shape)
    assert grid.x_values[i] == pytest.approx(2 * alpha.real, abs=0.1)
    assert grid.p_values[j] == pytest.approx(2 * alpha.imag, abs=0.1)
    assert grid.values.max() == pytest.approx(1 / (2 * np.pi), rel=1e-4)


def test_fock_state_negativity():
    # |1> has W(0,0) = -1/(2 pi) in this scaling
    rho = np.zeros((10, 10), dtype=complex)
    rho[1, 1] = 1.0
    xs = np.linspace(-6, 6, 121)
    grid = wigner.wigner(rho, xs, xs)
    center = grid.values[60, 60]
    assert center == pytest.approx(-1 / (2 * np.pi), rel=1e-6)


def test_marginal_against_hermite_oracle():
    p = model.ModelParams(delta=0.0, g=1.0, u=1 / 3)
    stats = fcs.CurrentStatistics(p)
    xs, ps = wigner.default_grid(p, stats.rho)
    grid = wigner.wigner(stats.rho, xs, ps)
    marginal = grid.marginal_x()
    oracle = quadrature_density_oracle(stats.rho, xs)
    assert np.max(np.abs(marginal - oracle)) < 1e-4


def test_parity_symmetry():
    p = model.ModelParams(delta=2.0, g=1.0, u=1 / 3)
    stats = fcs.CurrentStatistics(p)
    xs, ps = wigner.default_grid(p, stats.rho)
    grid = wigner.wigner(stats.rho, xs, ps)
    assert np.max(np.abs(grid.values - grid.values[::-1, ::-1])) < 1e-8


def test_grid_too_small_raises():
    rho = fock.pure_to_density(fock.coherent_state(40, 3.0))
    xs = np.linspace(-3, 3, 31)
    with pytest.raises(GridError):
        wigner.wigner(rho, xs, xs)


def test_default_grid_covers_lobes():
    p = model.ModelParams(delta=2.0, g=1.0, u=1 / 3)
    stats = fcs.CurrentStatistics(p)
    xs, _ = wigner.default_grid(p, stats.rho)
    n0 = model.semiclassical_fixed_points(p).n0
    assert xs[-1] >= 2 * np.sqrt(n0) + 4
    assert xs[1] - xs[0] <= 0.15
    assert 0.0 in xs


def test_count_local_maxima_gaussians():
    xs = np.linspace(-8, 8, 161)
    X, P = np.meshgrid(xs, xs, indexing="ij")
    one = np.exp(-((X - 2) ** 2 + P ** 2))
    two = one + np.exp(-((X + 2) ** 2 + P ** 2))
    g1 = wigner.WignerGrid(xs, xs, one)
    g2 = wigner.WignerGrid(xs, xs, two)
    assert len(wigner.count_local_maxima(g1)) == 1
    assert len(wigner.count_local_maxima(g2)) == 2


def test_trimodal_point():
    p = model.ModelParams(delta=2.0, g=1.0, u=1 / 3)
    stats = fcs.CurrentStatistics(p)
    xs, ps = wigner.default_grid(p, stats.rho)
    grid = wigner.wigner(stats.rho, xs, ps)
    peaks = wigner.count_local_maxima(grid)
    assert len(peaks) == 3
    assert grid.values.min() >= -1e-6
    assert abs(grid.norm() - 1.0) < 1e-3
    # lobes sit on the p axis at the stable fixed-point amplitude
    fp = model.semiclassical_fixed_points(p)
    lobe_p = 2 * np.sqrt(fp.n0) * np.sin(fp.lobe_phase)
    ps_found = sorted(pk[1] for pk in peaks)
    assert ps_found[0] == pytest.approx(-lobe_p, abs=0.3)
    assert ps_found[1] == pytest.approx(0.0, abs=0.2)
    assert ps_found[2] == pytest.approx(lobe_p, abs=0.3)
