"""Tests for the periodic Monge-Ampere solver."""

import numpy as np
import pytest

from quasineutral.errors import EllipticityLost, NoConvergence, NotPositive
from quasineutral.monge_ampere import (
    ConvexPotential,
    comatrix,
    defect_amplitude_family,
    determinant,
    hessian,
    hessian_bump,
    linearization_defect,
    linearized_apply,
    linearized_step,
    ma_residual,
    ma_solve,
    min_eigenvalue,
    pushforward_defect,
)
from quasineutral.spectral import (
    PeriodicGrid,
    ScalarField,
    dealias,
    hs_norm,
    integral,
    l2_norm,
    laplacian,
    poisson_solve,
    zero_mean,
)

TWO_PI = 2.0 * np.pi


@pytest.fixture(scope="module")
def grid():
    return PeriodicGrid(64)


def bump(grid, a):
    return ScalarField.from_function(
        grid, lambda x, y: a * np.cos(TWO_PI * x) * np.cos(TWO_PI * y)
    )


def random_small_phi(grid, rng, scale=0.002, kmax=5):
    spec = np.fft.fft2(rng.standard_normal((grid.n, grid.n)))
    keep = (np.abs(grid.kx) <= kmax) & (np.abs(grid.ky) <= kmax)
    spec *= keep
    spec[0, 0] = 0.0
    f = ScalarField.from_spectrum(grid, spec)
    return f * (scale / max(l2_norm(f), 1e-300))


# ---------------------------------------------------------------- residual


def test_residual_identity_map(grid):
    phi = ScalarField.zeros(grid)
    rho = ScalarField.constant(grid, 1.0)
    assert l2_norm(ma_residual(phi, rho)) < 1e-14


def test_residual_manufactured_is_zero(grid):
    phi_star = bump(grid, 0.01)
    rho = determinant(phi_star)
    assert l2_norm(ma_residual(phi_star, rho)) < 1e-12


def test_determinant_has_unit_mass(grid):
    # mass identity: the quadratic part of the determinant is a null Lagrangian
    rng = np.random.default_rng(20)
    for _ in range(3):
        phi = random_small_phi(grid, rng, scale=0.01)
        assert integral(determinant(phi)) == pytest.approx(1.0, abs=1e-10)


def test_residual_mean_is_mass_defect(grid):
    rng = np.random.default_rng(21)
    phi = random_small_phi(grid, rng, scale=0.005)
    rho = ScalarField.from_function(
        grid, lambda x, y: 1.0 + 0.03 * np.cos(TWO_PI * x)
    ) + 0.002
    assert integral(ma_residual(phi, rho)) == pytest.approx(
        1.0 - integral(rho), abs=1e-10
    )


# ---------------------------------------------------------------- comatrix


def test_comatrix_identity_at_zero(grid):
    m = comatrix(hessian(ScalarField.zeros(grid)))
    assert np.max(np.abs(m.m11.values - 1.0)) < 1e-14
    assert np.max(np.abs(m.m12.values)) < 1e-14
    assert np.max(np.abs(m.m22.values - 1.0)) < 1e-14


def test_comatrix_matrix_identity(grid):
    rng = np.random.default_rng(22)
    phi = random_small_phi(grid, rng, scale=0.01)
    h = hessian(phi)
    m = comatrix(h)
    a11 = 1.0 + h.xx.values
    a12 = h.xy.values
    a22 = 1.0 + h.yy.values
    det = a11 * a22 - a12 * a12
    # M A = det(A) I, checked entrywise at every node
    assert np.max(np.abs(m.m11.values * a11 + m.m12.values * a12 - det)) < 1e-12
    assert np.max(np.abs(m.m11.values * a12 + m.m12.values * a22)) < 1e-12
    assert np.max(np.abs(m.m12.values * a11 + m.m22.values * a12)) < 1e-12
    assert np.max(np.abs(m.m12.values * a12 + m.m22.values * a22 - det)) < 1e-12


def test_comatrix_trace_linearization_at_zero(grid):
    rng = np.random.default_rng(23)
    delta = random_small_phi(grid, rng, scale=1.0)
    m = comatrix(hessian(ScalarField.zeros(grid)))
    hd = hessian(delta)
    trace = m.m11 * hd.xx + 2.0 * (m.m12 * hd.xy) + m.m22 * hd.yy
    assert l2_norm(trace - laplacian(delta)) < 1e-11


def test_comatrix_rows_divergence_free(grid):
    # d1 M^i1 + d2 M^i2 = 0 for the cofactors of a Hessian; this is the
    # identity that actually justifies the divergence-form rewrite
    rng = np.random.default_rng(24)
    phi = random_small_phi(grid, rng, scale=0.01)
    m = comatrix(hessian(phi))
    from quasineutral.spectral import dx, dy

    row1 = dx(m.m11) + dy(m.m12)
    row2 = dx(m.m12) + dy(m.m22)
    assert l2_norm(row1) < 1e-11
    assert l2_norm(row2) < 1e-11


# ---------------------------------------------------------------- linear step


def test_linearized_step_reduces_to_poisson(grid):
    rhs = ScalarField.from_function(grid, lambda x, y: np.sin(TWO_PI * x))
    delta = linearized_step(ScalarField.zeros(grid), rhs, tol=1e-14)
    assert l2_norm(delta - poisson_solve(rhs)) < 1e-12


def test_linearized_step_zero_rhs(grid):
    delta = linearized_step(ScalarField.zeros(grid), ScalarField.zeros(grid))
    assert l2_norm(delta) == 0.0


def test_linearized_step_manufactured(grid):
    rng = np.random.default_rng(25)
    phi_k = bump(grid, 0.005)
    delta_star = zero_mean(dealias(random_small_phi(grid, rng, scale=0.3)))
    rhs = linearized_apply(phi_k, delta_star)
    got = linearized_step(phi_k, rhs, tol=1e-12)
    assert l2_norm(got - delta_star) < 1e-9 * max(l2_norm(delta_star), 1.0)


def test_linearized_step_ellipticity_guard(grid):
    # Hessian amplitude beyond the floor: 0.03 * 4 pi^2 > 0.9
    phi_bad = bump(grid, 0.03)
    rhs = ScalarField.from_function(grid, lambda x, y: np.sin(TWO_PI * x))
    with pytest.raises(EllipticityLost):
        linearized_step(phi_bad, rhs, lambda_floor=0.5)


# ---------------------------------------------------------------- ma_solve


def test_ma_solve_uniform_density(grid):
    pot, report = ma_solve(ScalarField.constant(grid, 1.0))
    assert l2_norm(pot.phi) < 1e-13
    assert report.iterations <= 1
    assert report.continuity_steps == 0


def test_ma_solve_manufactured_recovery(grid):
    phi_star = bump(grid, 0.01)
    rho = determinant(phi_star)
    tol = 1e-10
    pot, report = ma_solve(rho, tol=tol)
    assert hs_norm(pot.phi - phi_star, 2.0) <= 10.0 * tol
    assert report.residual_l2[-1] <= tol
    assert pot.min_eigenvalue >= 0.1


def test_ma_solve_two_mode_density(grid):
    rho = ScalarField.from_function(
        grid, lambda x, y: 1.0 + 0.05 * (np.cos(TWO_PI * x) + np.cos(2 * TWO_PI * y))
    )
    tol = 1e-10
    pot, report = ma_solve(rho, tol=tol)
    # recompute the residual independently of the solver's bookkeeping
    assert l2_norm(ma_residual(pot, rho / rho.mean())) <= tol
    # accepted Newton iterates decrease monotonically
    res = report.residual_l2
    assert all(res[i + 1] < res[i] for i in range(len(res) - 1))
    assert len(report.damping_used) == report.iterations


def test_ma_solve_warm_start(grid):
    phi_star = bump(grid, 0.01)
    rho = determinant(phi_star)
    cold_pot, cold = ma_solve(rho)
    warm_pot, warm = ma_solve(rho, initial=cold_pot)
    assert warm.iterations <= 1
    assert hs_norm(warm_pot.phi - cold_pot.phi, 2.0) < 1e-9


def test_ma_solve_rejects_nonpositive_density(grid):
    rho = ScalarField.from_function(grid, lambda x, y: 1.0 + 1.5 * np.cos(TWO_PI * x))
    with pytest.raises(NotPositive):
        ma_solve(rho)


def test_ma_solve_rejects_oversized_fluctuation(grid):
    rho = ScalarField.from_function(grid, lambda x, y: 1.0 + 0.5 * np.cos(TWO_PI * x))
    with pytest.raises(ValueError):
        ma_solve(rho, h2_limit=1.0)


def test_convex_potential_requires_ellipticity(grid):
    with pytest.raises(EllipticityLost):
        ConvexPotential(bump(grid, 0.04))


def test_min_eigenvalue_analytic(grid):
    # lambda_min = 1 - a 4 pi^2 (c_x c_y + |s_x s_y|), minimized where the
    # bracket equals 1 (everywhere on the diagonal)
    a = 0.01
    lam = min_eigenvalue(hessian(bump(grid, a)))
    assert lam == pytest.approx(1.0 - a * 4.0 * np.pi**2, rel=1e-10)


# ------------------------------------------------------- linearization defect


def test_defect_vanishes_for_uniform_density(grid):
    pot, _ = ma_solve(ScalarField.constant(grid, 1.0))
    rho = ScalarField.constant(grid, 1.0)
    assert linearization_defect(pot, rho, 2.0) < 1e-9


def test_defect_quadratic_slope(grid):
    fam = defect_amplitude_family(grid, [0.04, 0.02, 0.01, 0.005], s=2.0)
    devs = np.log([f[0] for f in fam])
    defs_ = np.log([f[1] for f in fam])
    slope = np.polyfit(devs, defs_, 1)[0]
    assert 1.8 <= slope <= 2.2


def test_defect_constant_is_stable(grid):
    fam = defect_amplitude_family(grid, [0.04, 0.02, 0.01, 0.005], s=2.0)
    consts = [defect / dev**2 for dev, defect, _ in fam]
    assert max(consts) / min(consts) < 2.0


def test_hessian_distance_ratio_bounded(grid):
    # first linearization bound: ||D^2 psi - I|| / ||rho - 1|| stays flat
    fam = defect_amplitude_family(grid, [0.04, 0.02, 0.01, 0.005], s=2.0)
    ratios = [r for _, _, r in fam]
    assert max(ratios) / min(ratios) < 2.0


# ---------------------------------------------------------------- pushforward


def test_pushforward_identity_map(grid):
    pot = ConvexPotential(ScalarField.zeros(grid))
    rho = ScalarField.constant(grid, 1.0)
    f = ScalarField.from_function(grid, lambda x, y: np.cos(TWO_PI * x) * np.sin(TWO_PI * y))
    assert abs(pushforward_defect(pot, rho, f)) < 1e-11


def test_pushforward_constant_test_function(grid):
    phi_star = bump(grid, 0.01)
    rho = determinant(phi_star)
    pot, _ = ma_solve(rho)
    f = ScalarField.constant(grid, 4.2)
    assert abs(pushforward_defect(pot, rho, f)) < 1e-9


def test_pushforward_spectral_refinement():
    defects = []
    for n in (8, 16):
        grid = PeriodicGrid(n)
        phi_star = bump(grid, 0.01)
        rho = determinant(phi_star)
        pot, _ = ma_solve(rho)
        f = ScalarField.from_function(grid, lambda x, y: np.cos(2 * TWO_PI * x))
        defects.append(abs(pushforward_defect(pot, rho, f)))
    # doubling n must slash the quadrature error far faster than any power
    assert defects[1] < defects[0] * 1e-3
    assert defects[1] < 1e-9


def test_bump_profile_hessian_scale(grid):
    # hessian_bump is normalized so amplitude a produces Hessian entries ~ a
    h = hessian(hessian_bump(grid))
    assert np.max(np.abs(h.xx.values)) == pytest.approx(1.0, rel=1e-10)
