"""Right-hand sides, conserved quantities and time integrators for the
incompressible Euler flow and its two electrostatic couplings on the torus.

Sign convention: the momentum equation reads dv/dt + v.grad(v) = +grad(p)
for the uncoupled flow, +grad(phi)/eps with eps*Lap(phi) = rho - 1 for the
Poisson coupling, and +(grad(psi) - x)/eps^2 = grad(phi)/eps^2 with
det(D^2 psi) = rho for the Monge-Ampere coupling.

Two steppers are provided.  `rk4` is the classical explicit scheme on the
primitive variables (restricted to dt <= c_stiff * eps on the coupled
systems, since the electrostatic oscillation has frequency 1/eps).
`lie-split-if` is a Strang composition: the linear oscillation block, which
rotates the pair (div v, rho - 1) mode by mode at rate 1/eps, is advanced by
its exact flow, and the remaining non-stiff terms by rk4.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from . import monge_ampere as ma
from .errors import NotPositive, StepRejected
from .spectral import (
    ScalarField,
    VectorField,
    curl,
    dealias,
    div,
    dx,
    dy,
    grad,
    l2_norm,
    laplacian,
    poisson_solve,
    velocity_from_divcurl,
    zero_mean,
)

COUPLING_NONE = "none"
COUPLING_POISSON = "poisson"
COUPLING_MA = "monge-ampere"
COUPLINGS = (COUPLING_NONE, COUPLING_POISSON, COUPLING_MA)

C_STIFF = 0.5  # rk4 stability fraction of the oscillation period
MIN_DENSITY = 0.1  # positivity guard; the regime keeps rho = 1 + O(eps^2)


@dataclass(frozen=True)
class FlowState:
    """Primitive variables of one of the three systems at a fixed time."""

    t: float
    rho: ScalarField
    v: VectorField
    eps: float
    coupling: str

    def validate(self):
        if self.coupling not in COUPLINGS:
            raise ValueError(f"unknown coupling {self.coupling!r}")
        if self.eps <= 0.0:
            raise ValueError("eps must be positive")
        if abs(self.rho.mean() - 1.0) > 1e-12:
            raise ValueError(f"density mass {self.rho.mean():.15f} != 1")
        if float(self.rho.values.min()) <= 0.0:
            raise NotPositive("density must stay pointwise positive")
        if self.coupling == COUPLING_NONE:
            if l2_norm(div(self.v)) > 1e-10:
                raise ValueError("uncoupled flow must be divergence-free")
            if float(np.max(np.abs(self.rho.values - 1.0))) > 1e-10:
                raise ValueError("uncoupled flow must have uniform density")
        return self


@dataclass(frozen=True)
class BaseFlow:
    """Reference incompressible solution: velocity, pressure, vorticity."""

    velocity: VectorField
    pressure: ScalarField
    vorticity: ScalarField


@dataclass(frozen=True)
class PerturbationState:
    """Rescaled div/curl variables (omega1, beta1, rho_tilde1).

    omega1 = (curl v - curl vbar)/eps, beta1 = (div v)/eps and
    rho_tilde1 = (rho - 1)/eps^2 - Lap(p).  `momentum` stores the conserved
    integral of rho*v, which is exactly what is needed to invert the change
    of variables back to a primitive velocity.
    """

    omega1: ScalarField
    beta1: ScalarField
    rho_tilde1: ScalarField
    eps: float
    base: BaseFlow
    momentum: np.ndarray


def advect(v: VectorField, f: ScalarField) -> ScalarField:
    """Dealiased transport term v . grad(f)."""
    return dealias(v.x * dx(f) + v.y * dy(f))


def velocity_gradient_contraction(u: VectorField, w: VectorField) -> ScalarField:
    """Dealiased double contraction sum_ij d_i(u^j) d_j(w^i)."""
    return dealias(
        dx(u.x) * dx(w.x) + dx(u.y) * dy(w.x) + dy(u.x) * dx(w.y) + dy(u.y) * dy(w.y)
    )


def pressure_from_velocity(vbar: VectorField) -> ScalarField:
    """Zero-mean pressure with Lap(p) = grad(v):grad(v) for divergence-free v."""
    rhs = velocity_gradient_contraction(vbar, vbar)
    return poisson_solve(zero_mean(rhs))


def euler_rhs(omega: ScalarField, mean_v) -> ScalarField:
    """Vorticity tendency -v.grad(omega) of the incompressible flow."""
    v = velocity_from_divcurl(ScalarField.zeros(omega.grid), omega, mean_v)
    return -advect(v, omega)


def _continuity_rhs(rho: ScalarField, v: VectorField) -> ScalarField:
    # conservative form keeps the mean of the tendency exactly zero
    return -(dx(dealias(rho * v.x)) + dy(dealias(rho * v.y)))


def poisson_potential(rho: ScalarField, eps: float) -> ScalarField:
    """phi with eps * Lap(phi) = rho - 1."""
    return poisson_solve(zero_mean(rho - 1.0)) * (1.0 / eps)


def ep_rhs(state: FlowState):
    """(d rho/dt, d v/dt) for the Poisson coupling."""
    phi = poisson_potential(state.rho, state.eps)
    force = grad(phi) * (1.0 / state.eps)
    dv = VectorField(
        -advect(state.v, state.v.x) + force.x,
        -advect(state.v, state.v.y) + force.y,
    )
    return _continuity_rhs(state.rho, state.v), dv


def ema_rhs(state: FlowState, solver=None):
    """(d rho/dt, d v/dt) for the Monge-Ampere coupling.

    `solver` is an optional WarmMASolver reused along a trajectory.
    """
    phi = (solver or WarmMASolver()).potential(state.rho)
    force = grad(phi) * (1.0 / state.eps**2)
    dv = VectorField(
        -advect(state.v, state.v.x) + force.x,
        -advect(state.v, state.v.y) + force.y,
    )
    return _continuity_rhs(state.rho, state.v), dv


def energy(state: FlowState, solver=None) -> float:
    """Conserved energy of the state's system.

    Euler: kinetic only.  Poisson: kinetic + |grad phi|^2 / 2 with
    eps Lap(phi) = rho - 1.  Monge-Ampere: kinetic +
    rho |grad psi - x|^2 / (2 eps^2).
    """
    kin = 0.5 * float(
        (state.rho.values * (state.v.x.values**2 + state.v.y.values**2)).mean()
    )
    if state.coupling == COUPLING_NONE:
        return kin
    if state.coupling == COUPLING_POISSON:
        g = grad(poisson_potential(state.rho, state.eps))
        return kin + 0.5 * float((g.x.values**2 + g.y.values**2).mean())
    phi = (solver or WarmMASolver()).potential(state.rho)
    g = grad(phi)
    pot = float((state.rho.values * (g.x.values**2 + g.y.values**2)).mean())
    return kin + 0.5 * pot / state.eps**2


def momentum(state: FlowState) -> np.ndarray:
    """Quadrature of rho * v."""
    return np.array(
        [
            float((state.rho.values * state.v.x.values).mean()),
            float((state.rho.values * state.v.y.values).mean()),
        ]
    )


def perturbation_from_primitive(state: FlowState, base: BaseFlow) -> PerturbationState:
    eps = state.eps
    omega1 = (curl(state.v) - base.vorticity) * (1.0 / eps)
    beta1 = div(state.v) * (1.0 / eps)
    rho1 = (state.rho - 1.0) * (1.0 / eps**2)
    return PerturbationState(
        omega1=omega1,
        beta1=beta1,
        rho_tilde1=rho1 - laplacian(base.pressure),
        eps=eps,
        base=base,
        momentum=momentum(state),
    )


def primitive_from_perturbation(u: PerturbationState, t=0.0, coupling=COUPLING_POISSON) -> FlowState:
    """Invert the change of variables; the stored momentum pins the mean."""
    eps = u.eps
    rho1 = u.rho_tilde1 + laplacian(u.base.pressure)
    rho = 1.0 + (eps**2) * rho1
    v0 = velocity_from_divcurl(
        eps * u.beta1, u.base.vorticity + eps * u.omega1, (0.0, 0.0)
    )
    weighted = np.array(
        [
            float((rho.values * v0.x.values).mean()),
            float((rho.values * v0.y.values).mean()),
        ]
    )
    mean = (u.momentum - weighted) / rho.mean()
    return FlowState(
        t=t, rho=rho, v=v0 + (mean[0], mean[1]), eps=eps, coupling=coupling
    )


def _rotate_pair(a: ScalarField, b: ScalarField, theta: float):
    ca, sa = math.cos(theta), math.sin(theta)
    return ca * a + sa * b, (-sa) * a + ca * b


def rotation_phase(u: PerturbationState, dt: float) -> PerturbationState:
    """Exact flow of the oscillation block over dt.

    (beta1, rho_tilde1) rotates by the angle dt/eps; omega1 is untouched and
    the L2 x L2 norm of the pair is preserved exactly.
    """
    beta, rho_t = _rotate_pair(u.beta1, u.rho_tilde1, dt / u.eps)
    return replace(u, beta1=beta, rho_tilde1=rho_t)


def oscillation_filter(u: PerturbationState, t: float):
    """Remove the 1/eps time oscillation from the stiff pair.

    Returns the real and imaginary parts of e^{i t / eps} (beta + i rho),
    which are constant in time under the pure rotation dynamics.
    """
    theta = t / u.eps
    ca, sa = math.cos(theta), math.sin(theta)
    beta_f = ca * u.beta1 - sa * u.rho_tilde1
    rho_f = sa * u.beta1 + ca * u.rho_tilde1
    return beta_f, rho_f


class WarmMASolver:
    """Monge-Ampere solve with warm starts along a trajectory."""

    def __init__(self, tol=ma.DEFAULT_TOL, max_newton=ma.DEFAULT_MAX_NEWTON,
                 lambda_floor=ma.DEFAULT_LAMBDA_FLOOR):
        self.tol = tol
        self.max_newton = max_newton
        self.lambda_floor = lambda_floor
        self.last = None
        self.reports = 0
        self.newton_total = 0

    def potential(self, rho: ScalarField) -> ScalarField:
        pot, report = ma.ma_solve(
            rho,
            tol=self.tol,
            max_newton=self.max_newton,
            lambda_floor=self.lambda_floor,
            initial=self.last,
        )
        self.last = pot
        self.reports += 1
        self.newton_total += report.iterations
        return pot.phi


class Stepper:
    """Advances one trajectory; owns the trajectory's warm MA solver.

    Raises StepRejected when the new density loses positivity or the MA
    solve fails, so the caller can halve dt and retry.
    """

    def __init__(self, scheme="rk4", ma_tol=ma.DEFAULT_TOL,
                 ma_max_newton=ma.DEFAULT_MAX_NEWTON, c_stiff=C_STIFF,
                 min_density=MIN_DENSITY):
        if scheme not in ("rk4", "lie-split-if"):
            raise ValueError(f"unknown scheme {scheme!r}")
        self.scheme = scheme
        self.c_stiff = c_stiff
        self.min_density = min_density
        self.ma_solver = WarmMASolver(tol=ma_tol, max_newton=ma_max_newton)
        self.max_mass_drift = 0.0

    # -- right-hand sides ---------------------------------------------------

    def _full_rhs(self, state):
        if state.coupling == COUPLING_POISSON:
            return ep_rhs(state)
        try:
            return ema_rhs(state, solver=self.ma_solver)
        except (ma.NoConvergence, ma.EllipticityLost, NotPositive) as exc:
            raise StepRejected(f"MA solve failed: {exc}") from exc

    def _remainder_rhs(self, state):
        # non-stiff terms left after removing the exact oscillation block
        drho = -(
            dx(dealias((state.rho - 1.0) * state.v.x))
            + dy(dealias((state.rho - 1.0) * state.v.y))
        )
        dvx = -advect(state.v, state.v.x)
        dvy = -advect(state.v, state.v.y)
        if state.coupling == COUPLING_MA:
            try:
                phi = self.ma_solver.potential(state.rho)
            except (ma.NoConvergence, ma.EllipticityLost, NotPositive) as exc:
                raise StepRejected(f"MA solve failed: {exc}") from exc
            corr = grad(phi - poisson_solve(zero_mean(state.rho - 1.0))) * (
                1.0 / state.eps**2
            )
            dvx = dvx + corr.x
            dvy = dvy + corr.y
        return drho, VectorField(dvx, dvy)

    # -- elementary updates ---------------------------------------------------

    @staticmethod
    def _apply(state, drho, dv, coef, t):
        return replace(
            state,
            t=t,
            rho=state.rho + coef * drho,
            v=VectorField(state.v.x + coef * dv.x, state.v.y + coef * dv.y),
        )

    def _rk4(self, state, dt, rhs):
        t = state.t
        k1 = rhs(state)
        k2 = rhs(self._apply(state, *k1, 0.5 * dt, t + 0.5 * dt))
        k3 = rhs(self._apply(state, *k2, 0.5 * dt, t + 0.5 * dt))
        k4 = rhs(self._apply(state, *k3, dt, t + dt))
        drho = k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]
        dvx = k1[1].x + 2.0 * k2[1].x + 2.0 * k3[1].x + k4[1].x
        dvy = k1[1].y + 2.0 * k2[1].y + 2.0 * k3[1].y + k4[1].y
        return self._apply(state, drho, VectorField(dvx, dvy), dt / 6.0, t + dt)

    @staticmethod
    def _oscillation_flow(state, tau):
        """Exact rotation of (div v, rho - 1) at rate 1/eps over tau."""
        grid = state.rho.grid
        eps = state.eps
        b = div(state.v)
        delta = zero_mean(state.rho - 1.0)
        theta = tau / eps
        ca, sa = math.cos(theta), math.sin(theta)
        b_spec = b.spectrum
        d_spec = delta.spectrum
        b_new = ca * b_spec + (sa / eps) * d_spec
        d_new = (-eps * sa) * b_spec + ca * d_spec
        db = ScalarField.from_spectrum(grid, (b_new - b_spec) * grid.inv_laplacian)
        dv = grad(db)
        return replace(
            state,
            rho=1.0 + ScalarField.from_spectrum(grid, d_new),
            v=VectorField(state.v.x + dv.x, state.v.y + dv.y),
        )

    def _step_euler(self, state, dt):
        # vorticity form: keeps the velocity exactly divergence-free
        omega = curl(state.v)
        mean_v = state.v.mean()

        def rhs(om, _t):
            return euler_rhs(om, mean_v)

        t = state.t
        k1 = rhs(omega, t)
        k2 = rhs(omega + 0.5 * dt * k1, t + 0.5 * dt)
        k3 = rhs(omega + 0.5 * dt * k2, t + 0.5 * dt)
        k4 = rhs(omega + dt * k3, t + dt)
        omega = omega + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        v = velocity_from_divcurl(ScalarField.zeros(state.rho.grid), omega, mean_v)
        return replace(state, t=t + dt, v=v)

    # -- public stepping ------------------------------------------------------

    def step(self, state: FlowState, dt: float) -> FlowState:
        if dt <= 0.0:
            raise ValueError("dt must be positive")
        if state.coupling == COUPLING_NONE:
            return self._step_euler(state, dt)
        if self.scheme == "rk4":
            if dt > self.c_stiff * state.eps:
                raise ValueError(
                    f"rk4 needs dt <= {self.c_stiff} * eps = "
                    f"{self.c_stiff * state.eps:.3e}, got {dt:.3e}"
                )
            new = self._rk4(state, dt, self._full_rhs)
        else:
            half = self._oscillation_flow(state, 0.5 * dt)
            mid = self._rk4(half, dt, self._remainder_rhs)
            new = self._oscillation_flow(mid, 0.5 * dt)
        return self._finalize(new)

    def _finalize(self, state):
        mass = state.rho.mean()
        self.max_mass_drift = max(self.max_mass_drift, abs(mass - 1.0))
        rho = state.rho / mass
        if float(rho.values.min()) < self.min_density:
            raise StepRejected(
                f"density minimum {rho.values.min():.3e} below guard "
                f"{self.min_density}"
            )
        return replace(state, rho=rho)


def step(state: FlowState, dt: float, scheme: str = "rk4") -> FlowState:
    """One-off step with a fresh Stepper (no warm start reuse)."""
    return Stepper(scheme=scheme).step(state, dt)
