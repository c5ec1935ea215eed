"""Tests for the periodic spectral calculus layer."""

import numpy as np
import pytest

from quasineutral.errors import GridMismatch, NonZeroMean
from quasineutral.spectral import (
    PeriodicGrid,
    ScalarField,
    VectorField,
    curl,
    dealias,
    derivative,
    div,
    grad,
    helmholtz,
    hs_norm,
    inner_l2,
    l2_norm,
    laplacian,
    poisson_solve,
    sample_at,
    velocity_from_divcurl,
)

TWO_PI = 2.0 * np.pi


@pytest.fixture(scope="module")
def grid():
    return PeriodicGrid(32)


def random_band_limited(grid, rng, kmax=6):
    """Seeded random field with modes |k_i| <= kmax, zero mean."""
    spec = np.fft.fft2(rng.standard_normal((grid.n, grid.n)))
    keep = (np.abs(grid.kx) <= kmax) & (np.abs(grid.ky) <= kmax)
    spec = spec * keep
    spec[0, 0] = 0.0
    return ScalarField.from_spectrum(grid, spec)


def random_vector(grid, rng, kmax=6):
    return VectorField(
        random_band_limited(grid, rng, kmax), random_band_limited(grid, rng, kmax)
    )


# ---------------------------------------------------------------- grid/types


def test_grid_rejects_odd_or_tiny_resolution():
    with pytest.raises(ValueError):
        PeriodicGrid(33)
    with pytest.raises(ValueError):
        PeriodicGrid(6)


def test_real_spectral_round_trip(grid):
    rng = np.random.default_rng(1)
    f = ScalarField(grid, rng.standard_normal((grid.n, grid.n)))
    back = ScalarField.from_spectrum(grid, f.spectrum)
    assert np.max(np.abs(back.values - f.values)) < 1e-13


def test_spectrum_of_real_field_is_hermitian(grid):
    rng = np.random.default_rng(2)
    f = ScalarField(grid, rng.standard_normal((grid.n, grid.n)))
    spec = f.spectrum
    flipped = np.conj(spec[(-np.arange(grid.n)) % grid.n][:, (-np.arange(grid.n)) % grid.n])
    assert np.max(np.abs(spec - flipped)) < 1e-9 * np.max(np.abs(spec))


def test_grid_mismatch_raises():
    a = ScalarField.zeros(PeriodicGrid(16))
    b = ScalarField.zeros(PeriodicGrid(32))
    with pytest.raises(GridMismatch):
        _ = a + b


def test_values_are_immutable(grid):
    f = ScalarField.zeros(grid)
    with pytest.raises(ValueError):
        f.values[0, 0] = 1.0


# ---------------------------------------------------------------- derivative


def test_derivative_of_constant_vanishes(grid):
    c = ScalarField.constant(grid, 3.7)
    for order in [(1, 0), (0, 1), (2, 1), (0, 4)]:
        assert l2_norm(derivative(c, order)) < 1e-14


def test_derivative_matches_symbolic_sine(grid):
    f = ScalarField.from_function(grid, lambda x, y: np.sin(TWO_PI * x))
    expected = TWO_PI * np.cos(TWO_PI * grid.x)
    got = derivative(f, (1, 0)).values
    assert np.max(np.abs(got - expected)) < 1e-10


def test_mixed_partials_commute(grid):
    rng = np.random.default_rng(3)
    f = random_band_limited(grid, rng)
    direct = derivative(f, (1, 1))
    nested = derivative(derivative(f, (1, 0)), (0, 1))
    assert np.max(np.abs(direct.spectrum - nested.spectrum)) < 1e-10


def test_derivative_order_cap(grid):
    f = ScalarField.zeros(grid)
    with pytest.raises(ValueError):
        derivative(f, (3, 2))


# ---------------------------------------------------------------- hs_norm


def test_hs_norm_of_constant(grid):
    c = ScalarField.constant(grid, -2.5)
    for s in [0.0, 1.0, 2.5]:
        assert hs_norm(c, s) == pytest.approx(2.5, abs=1e-13)


def test_hs_norm_sine_l2(grid):
    f = ScalarField.from_function(grid, lambda x, y: np.sin(TWO_PI * x))
    assert hs_norm(f, 0.0) == pytest.approx(1.0 / np.sqrt(2.0), abs=1e-12)


def test_hs_norm_sine_h1(grid):
    # two modes k = +-(1,0), each coefficient magnitude 1/2:
    # sum (1 + 4 pi^2) * 1/4 * 2 = (1 + 4 pi^2) / 2
    f = ScalarField.from_function(grid, lambda x, y: np.sin(TWO_PI * x))
    expected = np.sqrt((1.0 + 4.0 * np.pi**2) / 2.0)
    assert hs_norm(f, 1.0) == pytest.approx(expected, rel=1e-12)


def test_parseval(grid):
    rng = np.random.default_rng(4)
    for _ in range(5):
        f = ScalarField(grid, rng.standard_normal((grid.n, grid.n)))
        quad = np.sqrt((f.values**2).mean())
        assert hs_norm(f, 0.0) == pytest.approx(quad, rel=1e-10)


# ---------------------------------------------------------------- poisson


def test_poisson_zero_rhs(grid):
    assert l2_norm(poisson_solve(ScalarField.zeros(grid))) == 0.0


def test_poisson_eigenfunction(grid):
    rhs = ScalarField.from_function(grid, lambda x, y: np.sin(TWO_PI * x))
    phi = poisson_solve(rhs)
    expected = -np.sin(TWO_PI * grid.x) / (4.0 * np.pi**2)
    assert np.max(np.abs(phi.values - expected)) < 1e-12


def test_poisson_inverse_property(grid):
    rng = np.random.default_rng(5)
    rhs = random_band_limited(grid, rng)
    phi = poisson_solve(rhs)
    res = laplacian(phi) - rhs
    assert l2_norm(res) < 1e-12 * l2_norm(rhs)


def test_poisson_rejects_nonzero_mean(grid):
    rhs = ScalarField.constant(grid, 1.0)
    with pytest.raises(NonZeroMean):
        poisson_solve(rhs)


def test_poisson_linearity(grid):
    rng = np.random.default_rng(6)
    f = random_band_limited(grid, rng)
    g = random_band_limited(grid, rng)
    lhs = poisson_solve(2.0 * f + (-0.5) * g)
    rhs = 2.0 * poisson_solve(f) + (-0.5) * poisson_solve(g)
    assert l2_norm(lhs - rhs) < 1e-12 * max(l2_norm(lhs), 1.0)


# ---------------------------------------------------------------- helmholtz


def test_helmholtz_pure_gradient(grid):
    q = ScalarField.from_function(grid, lambda x, y: np.cos(TWO_PI * y))
    v = grad(q)
    sol, pot, mean = helmholtz(v)
    assert hs_norm(sol, 0.0) < 1e-12
    assert hs_norm(VectorField(pot.x - v.x, pot.y - v.y), 0.0) < 1e-12
    assert np.max(np.abs(mean)) < 1e-14


def test_helmholtz_fixes_divergence_free_fields(grid):
    rng = np.random.default_rng(7)
    omega = random_band_limited(grid, rng)
    v = velocity_from_divcurl(ScalarField.zeros(grid), omega, (0.0, 0.0))
    sol, pot, mean = helmholtz(v)
    assert hs_norm(VectorField(sol.x - v.x, sol.y - v.y), 0.0) < 1e-12
    assert hs_norm(pot, 0.0) < 1e-12


def test_helmholtz_recomposition_and_idempotence(grid):
    rng = np.random.default_rng(8)
    v = random_vector(grid, rng) + (0.3, -1.2)
    sol, pot, mean = helmholtz(v)
    rebuilt = sol + pot + (mean[0], mean[1])
    assert hs_norm(rebuilt - v, 0.0) < 1e-12
    # projector is idempotent on its range
    sol2, pot2, mean2 = helmholtz(sol)
    assert hs_norm(sol2 - sol, 0.0) < 1e-12
    assert hs_norm(pot2, 0.0) < 1e-12
    assert np.max(np.abs(mean2)) < 1e-13
    assert l2_norm(div(sol)) < 1e-12
    assert l2_norm(curl(pot)) < 1e-12


def test_helmholtz_parts_are_l2_orthogonal(grid):
    rng = np.random.default_rng(9)
    for _ in range(3):
        v = random_vector(grid, rng)
        sol, pot, _ = helmholtz(v)
        ip = inner_l2(sol.x, pot.x) + inner_l2(sol.y, pot.y)
        bound = 1e-10 * max(hs_norm(sol, 0.0) * hs_norm(pot, 0.0), 1e-300)
        assert abs(ip) <= bound


def test_derivative_commutes_with_solenoidal_projection(grid):
    rng = np.random.default_rng(10)
    v = random_vector(grid, rng)
    sol, _, _ = helmholtz(v)
    for order in [(1, 0), (0, 2), (1, 1)]:
        dsol = VectorField(derivative(sol.x, order), derivative(sol.y, order))
        assert l2_norm(div(dsol)) < 1e-10


# ------------------------------------------------------ velocity_from_divcurl


def test_divcurl_constant_field(grid):
    v = velocity_from_divcurl(ScalarField.zeros(grid), ScalarField.zeros(grid), (1.0, 0.0))
    assert np.max(np.abs(v.x.values - 1.0)) < 1e-14
    assert np.max(np.abs(v.y.values)) < 1e-14


def test_divcurl_round_trip(grid):
    rng = np.random.default_rng(11)
    v = random_vector(grid, rng) + (0.7, 0.1)
    rebuilt = velocity_from_divcurl(div(v), curl(v), v.mean())
    assert hs_norm(rebuilt - v, 0.0) < 1e-12


def test_divcurl_divergence_constraint(grid):
    omega = ScalarField.from_function(
        grid, lambda x, y: np.sin(TWO_PI * x) * np.sin(TWO_PI * y)
    )
    v = velocity_from_divcurl(ScalarField.zeros(grid), omega, (0.0, 0.0))
    assert l2_norm(div(v)) < 1e-12
    assert l2_norm(curl(v) - omega) < 1e-12


def test_divcurl_rejects_mass(grid):
    beta = ScalarField.constant(grid, 0.4)
    with pytest.raises(NonZeroMean):
        velocity_from_divcurl(beta, ScalarField.zeros(grid), (0.0, 0.0))


# ---------------------------------------------------------------- dealias


def test_dealias_keeps_resolved_band(grid):
    rng = np.random.default_rng(12)
    f = random_band_limited(grid, rng, kmax=grid.n // 3)
    assert np.max(np.abs(dealias(f).values - f.values)) < 1e-13


def test_dealias_kills_high_mode():
    grid = PeriodicGrid(8)
    k = grid.n // 2 - 1  # 3 > 8/3
    f = ScalarField.from_function(grid, lambda x, y: np.cos(TWO_PI * k * x))
    assert l2_norm(dealias(f)) < 1e-14


def test_dealias_idempotent(grid):
    rng = np.random.default_rng(13)
    f = ScalarField(grid, rng.standard_normal((grid.n, grid.n)))
    once = dealias(f)
    twice = dealias(once)
    assert np.max(np.abs(twice.values - once.values)) == 0.0


# ---------------------------------------------------------------- sampling


def test_sample_at_reproduces_grid_values(grid):
    rng = np.random.default_rng(14)
    f = random_band_limited(grid, rng)
    vals = sample_at(f, grid.x.ravel(), grid.y.ravel())
    assert np.max(np.abs(vals - f.values.ravel())) < 1e-11


def test_sample_at_off_grid_matches_formula(grid):
    f = ScalarField.from_function(
        grid, lambda x, y: np.cos(TWO_PI * x) + 0.5 * np.sin(TWO_PI * 2 * y)
    )
    rng = np.random.default_rng(15)
    px = rng.uniform(0.0, 3.0, size=50)  # periodicity included
    py = rng.uniform(-1.0, 1.0, size=50)
    expected = np.cos(TWO_PI * px) + 0.5 * np.sin(TWO_PI * 2 * py)
    assert np.max(np.abs(sample_at(f, px, py) - expected)) < 1e-11
