"""Periodic Monge-Ampere solver.

Solves det(I + D^2 phi) = rho for a zero-mean periodic phi, the periodic part
of the transport potential psi(x) = |x|^2/2 + phi(x).  The solver is a damped
Newton iteration whose linear steps invert the divergence-form operator
sum_ij d_i(M^ij d_j delta) with M the cofactor matrix of I + D^2 phi, using
conjugate gradients preconditioned by the inverse Laplacian (M is a small
perturbation of the identity in the quasi-neutral regime).  If Newton from
phi = 0 stalls, a homotopy through det(I + D^2 phi_t) = t rho + (1 - t) is
walked with warm starts.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from .errors import EllipticityLost, NoConvergence, NotPositive
from .spectral import (
    PeriodicGrid,
    ScalarField,
    dealias,
    derivative,
    dx,
    dy,
    hs_norm,
    l2_norm,
    laplacian,
    sample_at,
    zero_mean,
)

DEFAULT_TOL = 1e-10
DEFAULT_LAMBDA_FLOOR = 0.1
DEFAULT_MAX_NEWTON = 30
CONTINUITY_STAGES = 8
MAX_DAMPING_HALVINGS = 20
# admissibility guard mirroring the smallness hypothesis on ||rho - 1||_H2
DEFAULT_H2_LIMIT = 50.0


@dataclass(frozen=True)
class HessianField:
    """Second derivatives of the periodic potential part (xy stored once)."""

    xx: ScalarField
    xy: ScalarField
    yy: ScalarField


@dataclass(frozen=True)
class CofactorField:
    """Entries of the 2x2 cofactor matrix M of A = I + D^2 phi."""

    m11: ScalarField
    m12: ScalarField
    m22: ScalarField


def hessian(phi: ScalarField) -> HessianField:
    return HessianField(
        xx=derivative(phi, (2, 0)),
        xy=derivative(phi, (1, 1)),
        yy=derivative(phi, (0, 2)),
    )


def min_eigenvalue(h: HessianField) -> float:
    """Smallest eigenvalue of I + D^2 phi over all grid nodes."""
    a = 1.0 + h.xx.values
    c = 1.0 + h.yy.values
    b = h.xy.values
    lam = 0.5 * (a + c) - np.sqrt(0.25 * (a - c) ** 2 + b * b)
    return float(lam.min())


class ConvexPotential:
    """Zero-mean periodic phi with psi = |x|^2/2 + phi uniformly convex.

    The additive constant is fixed by the zero-mean gauge.  Construction
    fails with EllipticityLost when I + D^2 phi is not positive definite
    at every node.
    """

    __slots__ = ("phi", "hessian", "min_eigenvalue")

    def __init__(self, phi: ScalarField):
        self.phi = zero_mean(phi)
        self.hessian = hessian(self.phi)
        self.min_eigenvalue = min_eigenvalue(self.hessian)
        if self.min_eigenvalue <= 0.0:
            raise EllipticityLost(
                f"I + D^2 phi has min eigenvalue {self.min_eigenvalue:.3e} <= 0"
            )

    @property
    def grid(self):
        return self.phi.grid

    def gradient_map(self):
        """Displacement map x -> x + grad(phi), the gradient of psi."""
        g = self.grid
        return g.x + dx(self.phi).values, g.y + dy(self.phi).values


@dataclass
class MASolveReport:
    """Iteration trace of one Monge-Ampere solve."""

    iterations: int = 0
    residual_l2: list = field(default_factory=list)
    damping_used: list = field(default_factory=list)
    continuity_steps: int = 0


def _phi_of(p) -> ScalarField:
    return p.phi if isinstance(p, ConvexPotential) else p


def determinant(phi) -> ScalarField:
    """det(I + D^2 phi) with dealiased quadratic products."""
    h = hessian(_phi_of(phi))
    prod = (1.0 + h.xx) * (1.0 + h.yy) - h.xy * h.xy
    return dealias(prod)


def ma_residual(phi, rho: ScalarField) -> ScalarField:
    """det(I + D^2 phi) - rho."""
    return determinant(phi) - rho


def comatrix(h: HessianField) -> CofactorField:
    return CofactorField(m11=1.0 + h.yy, m12=-h.xy, m22=1.0 + h.xx)


def linearized_apply(phi, delta: ScalarField) -> ScalarField:
    """Divergence-form linearization sum_ij d_i(M^ij d_j delta) at phi."""
    m = comatrix(hessian(_phi_of(phi)))
    gx = dx(delta)
    gy = dy(delta)
    f1 = m.m11 * gx + m.m12 * gy
    f2 = m.m12 * gx + m.m22 * gy
    return dealias(dx(f1) + dy(f2))


def linearized_step(
    phi_k,
    rhs: ScalarField,
    tol: float = 1e-12,
    lambda_floor: float = DEFAULT_LAMBDA_FLOOR,
    maxiter: int = 400,
) -> ScalarField:
    """Zero-mean delta with sum_ij d_i(M^ij d_j delta) = rhs to relative tol.

    Conjugate gradients on the (negated, SPD) operator with the inverse
    Laplacian as preconditioner; both act inside the dealiased band.
    """
    phi = _phi_of(phi_k)
    grid = phi.grid
    h = hessian(phi)
    lam = min_eigenvalue(h)
    if lam < lambda_floor:
        raise EllipticityLost(
            f"min eigenvalue {lam:.3e} below floor {lambda_floor:.3e}"
        )
    m = comatrix(h)
    m11, m12, m22 = m.m11.values, m.m12.values, m.m22.values
    sx = grid.axis_symbol(0, 1)
    sy = grid.axis_symbol(1, 1)
    mask = grid.dealias_mask
    n = grid.n

    def neg_l(u):
        spec = np.fft.fft2(u.reshape(n, n))
        ux = np.fft.ifft2(sx * spec).real
        uy = np.fft.ifft2(sy * spec).real
        f1 = m11 * ux + m12 * uy
        f2 = m12 * ux + m22 * uy
        out = np.fft.ifft2((sx * np.fft.fft2(f1) + sy * np.fft.fft2(f2)) * mask).real
        return -out.ravel()

    def precond(u):
        spec = np.fft.fft2(u.reshape(n, n))
        return np.fft.ifft2(spec * (-grid.inv_laplacian)).real.ravel()

    b = zero_mean(dealias(rhs))
    bnorm = l2_norm(b)
    if bnorm == 0.0:
        return ScalarField.zeros(grid)
    shape = (n * n, n * n)
    op = LinearOperator(shape, matvec=neg_l, dtype=np.float64)
    pre = LinearOperator(shape, matvec=precond, dtype=np.float64)
    x, info = cg(op, -b.values.ravel(), rtol=tol, atol=0.0, maxiter=maxiter, M=pre)
    if info != 0:
        raise NoConvergence(f"linear solve stalled (info={info})")
    delta = zero_mean(ScalarField(grid, x.reshape(n, n)))
    return delta


def _newton(rho, phi, tol, max_newton, lambda_floor, report, inner_tol=1e-6):
    """Damped Newton on det(I + D^2 phi) = rho from the given iterate.

    Accepts a step only when the L2 residual strictly decreases and the
    ellipticity floor holds; the step is halved up to 20 times otherwise.
    """
    res = ma_residual(phi, rho)
    rnorm = l2_norm(res)
    report.residual_l2.append(rnorm)
    for _ in range(max_newton):
        if rnorm <= tol:
            return phi
        delta = linearized_step(
            phi, zero_mean(res) * (-1.0), tol=inner_tol, lambda_floor=lambda_floor
        )
        alpha = 1.0
        accepted = False
        elliptic_blocked = False
        for _ in range(MAX_DAMPING_HALVINGS):
            trial = zero_mean(phi + alpha * delta)
            if min_eigenvalue(hessian(trial)) < lambda_floor:
                elliptic_blocked = True
                alpha *= 0.5
                continue
            trial_res = ma_residual(trial, rho)
            trial_norm = l2_norm(trial_res)
            if trial_norm < rnorm:
                accepted = True
                break
            elliptic_blocked = False
            alpha *= 0.5
        if not accepted:
            if elliptic_blocked:
                raise EllipticityLost("no step length keeps the ellipticity floor")
            raise NoConvergence("damping exhausted without residual decrease")
        phi, res, rnorm = trial, trial_res, trial_norm
        report.iterations += 1
        report.residual_l2.append(rnorm)
        report.damping_used.append(alpha)
    if rnorm <= tol:
        return phi
    raise NoConvergence(
        f"Newton cap {max_newton} reached with residual {rnorm:.3e} > {tol:.3e}"
    )


def ma_solve(
    rho: ScalarField,
    tol: float = DEFAULT_TOL,
    max_newton: int = DEFAULT_MAX_NEWTON,
    lambda_floor: float = DEFAULT_LAMBDA_FLOOR,
    initial=None,
    h2_limit: float = DEFAULT_H2_LIMIT,
):
    """Solve det(I + D^2 phi) = rho; returns (ConvexPotential, MASolveReport).

    rho must be pointwise positive; it is renormalized to unit mass.  The
    smallness guard on ||rho - 1||_H2 rejects densities far outside the
    regime where the solver's ellipticity assumptions make sense.  `initial`
    warm-starts Newton (a ConvexPotential or zero-mean ScalarField); the
    continuity path is attempted when plain Newton fails.
    """
    if float(rho.values.min()) <= 0.0:
        raise NotPositive(f"density must be positive, min {rho.values.min():.3e}")
    mass = rho.mean()
    if abs(mass - 1.0) > 0.1:
        raise ValueError(f"density mass {mass:.6f} too far from 1 to renormalize")
    rho = rho / mass
    dev = hs_norm(rho - 1.0, 2.0)
    if dev > h2_limit:
        raise ValueError(
            f"||rho - 1||_H2 = {dev:.3e} exceeds admissible limit {h2_limit:.3e}"
        )
    grid = rho.grid
    phi0 = zero_mean(_phi_of(initial)) if initial is not None else ScalarField.zeros(grid)

    report = MASolveReport()
    try:
        phi = _newton(rho, phi0, tol, max_newton, lambda_floor, report)
        return ConvexPotential(phi), report
    except (NoConvergence, EllipticityLost):
        pass

    # homotopy from the trivial problem, warm-starting every stage
    report = MASolveReport()
    phi = ScalarField.zeros(grid)
    for stage in range(1, CONTINUITY_STAGES + 1):
        t = stage / CONTINUITY_STAGES
        rho_t = t * rho + (1.0 - t)
        stage_tol = tol if stage == CONTINUITY_STAGES else max(tol, 1e-8)
        phi = _newton(rho_t, phi, stage_tol, max_newton, lambda_floor, report)
        report.continuity_steps += 1
    return ConvexPotential(phi), report


def linearization_defect(potential, rho: ScalarField, s: float) -> float:
    """H^s distance between the Laplacian of phi and the density excess.

    For phi solving the Monge-Ampere problem this measures the quadratic
    remainder of the determinant expansion around the identity.
    """
    phi = _phi_of(potential)
    return hs_norm(laplacian(phi) - (rho - 1.0), s)


def pushforward_defect(potential, rho: ScalarField, f: ScalarField) -> float:
    """Quadrature of f(grad psi) d rho minus the quadrature of f.

    Vanishes (to solver + quadrature accuracy) because grad psi pushes rho
    forward to the uniform measure; f is evaluated at the displaced nodes by
    trigonometric interpolation.
    """
    pot = potential if isinstance(potential, ConvexPotential) else ConvexPotential(potential)
    gx, gy = pot.gradient_map()
    vals = sample_at(f, gx.ravel(), gy.ravel())
    pushed = float(np.mean(vals * rho.values.ravel()))
    return pushed - f.mean()


def hessian_bump(grid: PeriodicGrid) -> ScalarField:
    """cos(2 pi x) cos(2 pi y) / (4 pi^2): unit-scale Hessian test profile."""
    amp = 1.0 / (4.0 * np.pi**2)
    return ScalarField.from_function(
        grid, lambda x, y: amp * np.cos(2.0 * np.pi * x) * np.cos(2.0 * np.pi * y)
    )


def defect_amplitude_family(grid, amplitudes, s=2.0, tol=DEFAULT_TOL):
    """Solve the bump family rho_a = det(I + a D^2 phi0) and collect defects.

    Returns a list of (deviation, defect, hessian_ratio) triples where
    deviation = ||rho_a - 1||_H^s, defect is the linearization defect at the
    solved potential and hessian_ratio = ||D^2 psi - I||_H^s / deviation.
    """
    phi0 = hessian_bump(grid)
    out = []
    for a in amplitudes:
        rho_a = determinant(a * phi0)
        pot, _ = ma_solve(rho_a, tol=tol)
        deviation = hs_norm(rho_a - 1.0, s)
        defect = linearization_defect(pot, rho_a, s)
        h = pot.hessian
        d2_dist = float(
            np.sqrt(
                hs_norm(h.xx, s) ** 2 + 2.0 * hs_norm(h.xy, s) ** 2 + hs_norm(h.yy, s) ** 2
            )
        )
        out.append((deviation, defect, d2_dist / deviation))
    return out
