"""Initial conditions, epsilon sweeps and rate fitting.

The sweeps reproduce, at desk scale, the convergence picture of the
quasi-neutral limit: with well-prepared data both coupled systems track the
incompressible reference at O(eps) in velocity and O(eps^2) in density, the
two couplings sit O(eps^2)/O(eps^3) from each other, and with non-prepared
data the solenoidal part still converges while the potential part only
oscillates itself away in time average.

Every run is deterministic given (config, seed): initial fields come from a
fresh seeded generator and the shared Euler reference trajectory is computed
once per sweep and reused bit-identically across epsilons.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .config import SweepConfig, resolve_dt, resolve_scheme
from .dynamics import (
    BaseFlow,
    COUPLING_MA,
    COUPLING_NONE,
    COUPLING_POISSON,
    FlowState,
    PerturbationState,
    Stepper,
    energy,
    euler_rhs,
    momentum,
    oscillation_filter,
    pressure_from_velocity,
)
from .errors import DegenerateFit, StepRejected, UnknownKind
from .spectral import (
    PeriodicGrid,
    ScalarField,
    VectorField,
    curl,
    div,
    grad,
    helmholtz,
    hs_norm,
    l2_norm,
    laplacian,
    poisson_solve,
    solenoidal_part,
    velocity_from_divcurl,
    zero_mean,
)

TWO_PI = 2.0 * np.pi

# velocity scale of the analytic base flows; keeps the pressure response
# (and hence the density oscillation rho - 1 ~ eps^2 Lap p) deep inside the
# positivity regime at the largest desk-scale epsilon
BASE_SPEED = 1.0 / TWO_PI

IC_BAND = 4  # initial perturbations use modes |k_i| <= 4
NOISE_FLOOR = 1e-11  # below this an error series carries no rate information
MIN_DENSITY_IC = 0.5  # cap perturbations so initial densities stay over this


# --------------------------------------------------------------- base flows


def make_base_flow(kind: str, grid: PeriodicGrid) -> BaseFlow:
    """Analytic divergence-free reference flow sampled on the grid.

    taylor-green: the steady cellular eigenflow.  double-shear: two smoothed
    counter-flowing jets with a small recirculation, genuinely unsteady.
    shear: a single parallel jet; steady and force-free for all three
    systems, useful as an exactly-degenerate reference.
    """
    a = BASE_SPEED
    if kind == "taylor-green":
        vx = ScalarField.from_function(
            grid, lambda x, y: -a * np.sin(TWO_PI * x) * np.cos(TWO_PI * y)
        )
        vy = ScalarField.from_function(
            grid, lambda x, y: a * np.cos(TWO_PI * x) * np.sin(TWO_PI * y)
        )
    elif kind == "double-shear":
        vx = ScalarField.from_function(
            grid,
            lambda x, y: -a * (np.sin(TWO_PI * y) + 0.5 * np.sin(2 * TWO_PI * y)),
        )
        vy = ScalarField.from_function(
            grid, lambda x, y: 0.05 * a * np.sin(TWO_PI * x)
        )
    elif kind == "shear":
        vx = ScalarField.from_function(grid, lambda x, y: a * np.sin(TWO_PI * y))
        vy = ScalarField.zeros(grid)
    else:
        raise UnknownKind(f"unknown base flow kind {kind!r}")
    v = VectorField(vx, vy)
    return base_flow_from_velocity(v)


def base_flow_from_velocity(v: VectorField) -> BaseFlow:
    return BaseFlow(velocity=v, pressure=pressure_from_velocity(v), vorticity=curl(v))


# ---------------------------------------------------------- initial data


def _random_band_limited(grid, rng, s, kmax=IC_BAND):
    """Seeded random zero-mean field with |k_i| <= kmax and unit H^s norm."""
    spec = np.fft.fft2(rng.standard_normal((grid.n, grid.n)))
    keep = (np.abs(grid.kx) <= kmax) & (np.abs(grid.ky) <= kmax)
    spec = spec * keep
    spec[0, 0] = 0.0
    f = ScalarField.from_spectrum(grid, spec)
    return f * (1.0 / hs_norm(f, s))


def _cap_density_fluctuation(delta: ScalarField) -> ScalarField:
    """Scale delta so that min(1 + delta) stays above the positivity margin."""
    low = float(delta.values.min())
    if 1.0 + low < MIN_DENSITY_IC:
        delta = delta * ((1.0 - MIN_DENSITY_IC) / (-low))
    return delta


def make_well_prepared_ic(
    base: BaseFlow,
    eps: float,
    seed: int,
    amplitude: float,
    s: float = 2.0,
    coupling: str = COUPLING_POISSON,
) -> FlowState:
    """v0 = vbar + eps * v1, rho0 = 1 + eps^2 * rho1 with unit-H^s samples.

    v1 and rho1 are seeded band-limited fields of unit H^s norm scaled by
    `amplitude`; rho1 is zero-mean so the total mass is exactly one, and is
    capped if needed to keep the density positive.
    """
    grid = base.velocity.grid
    rng = np.random.default_rng(seed)
    v1 = VectorField(
        _random_band_limited(grid, rng, s), _random_band_limited(grid, rng, s)
    )
    scale = amplitude / math.sqrt(2.0)  # joint H^s norm of the pair is 1
    v1 = v1 * scale
    rho1 = _random_band_limited(grid, rng, s) * amplitude
    delta = _cap_density_fluctuation((eps**2) * rho1)
    return FlowState(
        t=0.0,
        rho=1.0 + delta,
        v=base.velocity + eps * v1,
        eps=eps,
        coupling=coupling,
    )


def make_nonprepared_ic(
    grid: PeriodicGrid,
    eps: float,
    seed: int,
    s: float = 2.0,
    coupling: str = COUPLING_POISSON,
) -> FlowState:
    """O(1) solenoidal + O(1) potential velocity and rho0 = 1 + eps * rho1.

    The solenoidal sample, the gradient sample and rho1 are drawn in a fixed
    order from one seeded generator, so they do not depend on eps; only the
    density scaling does.
    """
    rng = np.random.default_rng(seed)
    omega0 = _random_band_limited(grid, rng, s - 1.0)
    q0 = _random_band_limited(grid, rng, s + 1.0)
    rho1 = _random_band_limited(grid, rng, s - 1.0)
    sol = velocity_from_divcurl(ScalarField.zeros(grid), omega0, (0.0, 0.0))
    sol = sol * (1.0 / hs_norm(sol, s))
    pot = grad(q0)
    pot = pot * (1.0 / hs_norm(pot, s))
    delta = _cap_density_fluctuation(eps * rho1)
    return FlowState(
        t=0.0, rho=1.0 + delta, v=sol + pot, eps=eps, coupling=coupling
    )


# ------------------------------------------------------------- time grids


@dataclass(frozen=True)
class TimeGrid:
    """Shared stepping schedule of one sweep."""

    scheme: str
    dt: float
    nsteps: int
    sample_steps: tuple

    @property
    def sample_times(self):
        return np.array([k * self.dt for k in self.sample_steps])


def resolve_time_grid(config: SweepConfig) -> TimeGrid:
    scheme = resolve_scheme(config)
    dt = resolve_dt(config, scheme)
    nsteps = max(1, int(round(config.final_time / dt)))
    dt = config.final_time / nsteps  # land on final_time exactly
    # keep at least ~20 samples per oscillation period 2 pi eps_min
    cadence = config.sample_cadence
    period_steps = TWO_PI * min(config.epsilon_list) / dt
    cadence = max(1, min(cadence, int(period_steps / 20.0) or 1))
    steps = list(range(0, nsteps + 1, cadence))
    if steps[-1] != nsteps:
        steps.append(nsteps)
    return TimeGrid(scheme=scheme, dt=dt, nsteps=nsteps, sample_steps=tuple(steps))


# --------------------------------------------------------- Euler reference


@dataclass
class EulerReference:
    """Reference incompressible trajectory sampled on the shared schedule."""

    times: np.ndarray
    velocities: list
    vorticities: list
    pressure_laplacians: list

    def at(self, index):
        return (
            self.velocities[index],
            self.vorticities[index],
            self.pressure_laplacians[index],
        )


def euler_reference(base: BaseFlow, tg: TimeGrid) -> EulerReference:
    """rk4 vorticity evolution of the reference flow on the sweep schedule."""
    omega = base.vorticity
    mean_v = base.velocity.mean()
    grid = omega.grid
    zeros = ScalarField.zeros(grid)
    sample_set = set(tg.sample_steps)
    velocities, vorticities, dps = [], [], []

    def record(om):
        v = velocity_from_divcurl(zeros, om, mean_v)
        velocities.append(v)
        vorticities.append(om)
        dps.append(laplacian(pressure_from_velocity(v)))

    if 0 in sample_set:
        record(omega)
    dt = tg.dt
    for k in range(1, tg.nsteps + 1):
        k1 = euler_rhs(omega, mean_v)
        k2 = euler_rhs(omega + 0.5 * dt * k1, mean_v)
        k3 = euler_rhs(omega + 0.5 * dt * k2, mean_v)
        k4 = euler_rhs(omega + dt * k3, mean_v)
        omega = omega + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if k in sample_set:
            record(omega)
    return EulerReference(
        times=tg.sample_times,
        velocities=velocities,
        vorticities=vorticities,
        pressure_laplacians=dps,
    )


# ------------------------------------------------------------- run records


RUN_SERIES = (
    "err_v_hs",
    "err_rho_hs",
    "energy",
    "momentum_x",
    "momentum_y",
    "norm_omega1",
    "norm_beta1",
    "norm_rhotilde1",
    "norm_filtered_beta",
    "norm_filtered_rho",
    "norm_potential_part",
)
EXTRA_SERIES_NONPREPARED = ("err_pi_v_hs", "norm_v_hs", "int_beta_sq")


@dataclass
class RunRecord:
    """Sampled diagnostics of one coupled run."""

    eps: float
    coupling: str
    prepared: bool
    times: np.ndarray
    series: dict
    fields: dict | None = None
    completed: bool = True
    abort_reason: str | None = None
    max_mass_drift: float = 0.0

    def sup(self, name):
        return float(np.max(self.series[name]))

    def column_names(self):
        names = ["t", *RUN_SERIES]
        names += sorted(k for k in self.series if k not in RUN_SERIES)
        return names


class _Diagnostics:
    """Per-sample measurement shared by all studies."""

    def __init__(self, config, prepared, stepper, keep_fields):
        self.s = config.sobolev_s
        self.prepared = prepared
        self.stepper = stepper
        self.keep = keep_fields
        self.series = {name: [] for name in RUN_SERIES}
        if not prepared:
            for name in EXTRA_SERIES_NONPREPARED:
                self.series[name] = []
        self.fields = {} if keep_fields else None
        if keep_fields == "primitive":
            self.fields = {"rho": [], "vx": [], "vy": []}
        elif keep_fields == "stiff-pair":
            self.fields = {"beta": [], "rho1": []}

    def measure(self, state, ref_v, ref_omega, ref_dp):
        s = self.s
        eps = state.eps
        put = self.series
        put["err_v_hs"].append(hs_norm(state.v - ref_v, s))
        put["err_rho_hs"].append(hs_norm(state.rho - 1.0, s - 1.0))
        solver = self.stepper.ma_solver if state.coupling == COUPLING_MA else None
        put["energy"].append(energy(state, solver=solver))
        mom = momentum(state)
        put["momentum_x"].append(mom[0])
        put["momentum_y"].append(mom[1])
        sol, pot, mean = helmholtz(state.v)
        put["norm_potential_part"].append(l2_norm(pot))
        beta_raw = div(state.v)
        if self.prepared:
            omega1 = (curl(state.v) - ref_omega) * (1.0 / eps)
            beta1 = beta_raw * (1.0 / eps)
            rho_t1 = (state.rho - 1.0) * (1.0 / eps**2) - ref_dp
            norm_s = s
        else:
            omega1 = curl(state.v)
            beta1 = beta_raw
            rho_t1 = (state.rho - 1.0) * (1.0 / eps)
            norm_s = s - 1.0
        put["norm_omega1"].append(hs_norm(omega1, norm_s))
        put["norm_beta1"].append(hs_norm(beta1, norm_s))
        put["norm_rhotilde1"].append(hs_norm(rho_t1, norm_s))
        theta = state.t / eps
        ca, sa = math.cos(theta), math.sin(theta)
        beta_f = ca * beta1 - sa * rho_t1
        rho_f = sa * beta1 + ca * rho_t1
        put["norm_filtered_beta"].append(l2_norm(beta_f))
        put["norm_filtered_rho"].append(l2_norm(rho_f))
        if not self.prepared:
            pi_v = VectorField(sol.x + mean[0], sol.y + mean[1])
            put["err_pi_v_hs"].append(hs_norm(pi_v - ref_v, s - 1.0))
            put["norm_v_hs"].append(hs_norm(state.v, s))
            put["int_beta_sq"].append(float((beta_raw.values**2).mean()))
        if self.keep == "primitive":
            self.fields["rho"].append(state.rho.values)
            self.fields["vx"].append(state.v.x.values)
            self.fields["vy"].append(state.v.y.values)
        elif self.keep == "stiff-pair":
            self.fields["beta"].append(beta1.values)
            self.fields["rho1"].append(rho_t1.values)


def run_simulation(
    config: SweepConfig,
    ic: FlowState,
    base: BaseFlow,
    reference: EulerReference | None = None,
    time_grid: TimeGrid | None = None,
    prepared: bool = True,
    keep_fields=None,
) -> RunRecord:
    """Evolve one coupled run against the shared Euler reference.

    On StepRejected the failing step is retried with up to three halvings;
    if it still fails the record is returned truncated and flagged.
    """
    tg = time_grid or resolve_time_grid(config)
    ref = reference or euler_reference(base, tg)
    stepper = Stepper(
        scheme=tg.scheme, ma_tol=config.ma_tol, ma_max_newton=config.ma_max_newton
    )
    diag = _Diagnostics(config, prepared, stepper, keep_fields)
    sample_index = {step: i for i, step in enumerate(tg.sample_steps)}
    state = ic
    times = []
    completed = True
    reason = None
    if 0 in sample_index:
        diag.measure(state, *ref.at(0))
        times.append(0.0)
    for k in range(1, tg.nsteps + 1):
        try:
            state = _robust_step(stepper, state, tg.dt)
        except StepRejected as exc:
            completed = False
            reason = str(exc)
            break
        if k in sample_index:
            diag.measure(state, *ref.at(sample_index[k]))
            times.append(k * tg.dt)
    return RunRecord(
        eps=ic.eps,
        coupling=ic.coupling,
        prepared=prepared,
        times=np.array(times),
        series={k: np.array(v) for k, v in diag.series.items()},
        fields=diag.fields,
        completed=completed,
        abort_reason=reason,
        max_mass_drift=stepper.max_mass_drift,
    )


def _robust_step(stepper, state, dt, max_halvings=3):
    pieces = 1
    for attempt in range(max_halvings + 1):
        try:
            out = state
            for _ in range(pieces):
                out = stepper.step(out, dt / pieces)
            return out
        except StepRejected:
            if attempt == max_halvings:
                raise
            pieces *= 2


# ------------------------------------------------------------- rate fitting


@dataclass
class RateFit:
    """Least-squares slope of log(error) against log(eps)."""

    quantity: str
    points: list  # (eps, error) pairs, eps descending
    slope: float | None
    intercept: float | None
    r2: float | None
    flag: str = ""

    @property
    def degenerate(self):
        return self.flag == "degenerate"


def fit_rate(points, quantity: str = "") -> RateFit:
    """Fit a log-log slope through (eps, error) pairs.

    Needs at least three strictly positive points; raises DegenerateFit when
    every error sits below the noise floor (nothing to fit but roundoff).
    """
    pts = sorted(((float(e), float(err)) for e, err in points), reverse=True)
    if len(pts) < 3:
        raise ValueError(f"need >= 3 points to fit a rate, got {len(pts)}")
    if any(e <= 0.0 or err < 0.0 for e, err in pts):
        raise ValueError("epsilons must be positive and errors non-negative")
    if all(err < NOISE_FLOOR for _, err in pts):
        raise DegenerateFit(
            f"all errors below the {NOISE_FLOOR:g} noise floor for {quantity or 'fit'}"
        )
    if any(err <= 0.0 for _, err in pts):
        raise ValueError("errors must be positive to take logs")
    x = np.log([e for e, _ in pts])
    y = np.log([err for _, err in pts])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot < 1e-300 else 1.0 - ss_res / ss_tot
    return RateFit(
        quantity=quantity,
        points=pts,
        slope=float(slope),
        intercept=float(intercept),
        r2=r2,
    )


def _fit_or_flag(points, quantity):
    try:
        return fit_rate(points, quantity)
    except DegenerateFit:
        pts = sorted(((float(e), float(err)) for e, err in points), reverse=True)
        return RateFit(
            quantity=quantity,
            points=pts,
            slope=None,
            intercept=None,
            r2=None,
            flag="degenerate",
        )


def _spread_ratio(values):
    lo, hi = min(values), max(values)
    if hi < NOISE_FLOOR:
        return 1.0  # everything at noise level counts as uniformly bounded
    return hi / max(lo, 1e-300)


# ---------------------------------------------------------------- studies


@dataclass
class ConvergenceReport:
    """Sweep result for one coupling: limit rates plus boundedness ratios."""

    coupling: str
    velocity_fit: RateFit
    density_fit: RateFit
    rescaled_velocity_ratio: float
    rescaled_density_ratio: float
    records: dict

    @property
    def completed(self):
        return all(rec.completed for rec in self.records.values())


def convergence_study(config: SweepConfig, coupling=None) -> ConvergenceReport:
    """Well-prepared sweep measuring the distance to the Euler reference.

    Expected slopes: about 1 for sup_t ||v - vbar||_{H^s} and about 2 for
    sup_t ||rho - 1||_{H^{s-1}}.
    """
    coupling = coupling or config.couplings()[0]
    grid = PeriodicGrid(config.grid_n)
    base = make_base_flow(config.base_flow, grid)
    tg = resolve_time_grid(config)
    ref = euler_reference(base, tg)
    records = {}
    for eps in config.epsilon_list:
        ic = make_well_prepared_ic(
            base, eps, config.seed, config.amplitude, s=config.sobolev_s,
            coupling=coupling,
        )
        records[eps] = run_simulation(
            config, ic, base, reference=ref, time_grid=tg
        )
    err_v = {eps: rec.sup("err_v_hs") for eps, rec in records.items()}
    err_rho = {eps: rec.sup("err_rho_hs") for eps, rec in records.items()}
    return ConvergenceReport(
        coupling=coupling,
        velocity_fit=_fit_or_flag(err_v.items(), f"{coupling}:velocity_error"),
        density_fit=_fit_or_flag(err_rho.items(), f"{coupling}:density_error"),
        rescaled_velocity_ratio=_spread_ratio(
            [err_v[eps] / eps for eps in config.epsilon_list]
        ),
        rescaled_density_ratio=_spread_ratio(
            [err_rho[eps] / eps**2 for eps in config.epsilon_list]
        ),
        records=records,
    )


@dataclass
class GapReport:
    """Distance between the two couplings along paired trajectories."""

    velocity_fit: RateFit
    density_fit: RateFit
    gap_over_euler_distance: list  # (eps, ratio), eps descending
    records: dict

    @property
    def ratios_strictly_decreasing(self):
        vals = [r for _, r in self.gap_over_euler_distance]
        return all(b < a for a, b in zip(vals, vals[1:]))


def ep_ema_gap_study(config: SweepConfig) -> GapReport:
    """Run both couplings from identical data and fit the gap rates.

    Expected slopes: about 2 for the velocity gap and 3 for the density gap,
    one order better than either system's distance to the Euler limit.
    """
    grid = PeriodicGrid(config.grid_n)
    base = make_base_flow(config.base_flow, grid)
    tg = resolve_time_grid(config)
    ref = euler_reference(base, tg)
    s = config.sobolev_s
    gap_v, gap_rho, ratios = {}, {}, []
    records = {}
    for eps in config.epsilon_list:
        pair = {}
        for coupling in (COUPLING_POISSON, COUPLING_MA):
            ic = make_well_prepared_ic(
                base, eps, config.seed, config.amplitude, s=s, coupling=coupling
            )
            pair[coupling] = run_simulation(
                config, ic, base, reference=ref, time_grid=tg,
                keep_fields="primitive",
            )
        records[eps] = pair
        ep, ema = pair[COUPLING_POISSON], pair[COUPLING_MA]
        nsamp = min(len(ep.times), len(ema.times))
        dv, drho = 0.0, 0.0
        for i in range(nsamp):
            diff_v = VectorField(
                ScalarField(grid, ep.fields["vx"][i] - ema.fields["vx"][i]),
                ScalarField(grid, ep.fields["vy"][i] - ema.fields["vy"][i]),
            )
            diff_rho = ScalarField(grid, ep.fields["rho"][i] - ema.fields["rho"][i])
            dv = max(dv, hs_norm(diff_v, s))
            drho = max(drho, hs_norm(diff_rho, s - 1.0))
        gap_v[eps] = dv
        gap_rho[eps] = drho
        ratios.append((eps, dv / max(ep.sup("err_v_hs"), 1e-300)))
    return GapReport(
        velocity_fit=_fit_or_flag(gap_v.items(), "velocity_gap"),
        density_fit=_fit_or_flag(gap_rho.items(), "density_gap"),
        gap_over_euler_distance=ratios,
        records=records,
    )


# ------------------------------------------------- non-prepared diagnostics


def dominant_frequency(times, series) -> float:
    """Dominant frequency of a uniformly sampled series (Hann + zero pad +
    parabolic peak refinement)."""
    y = np.asarray(series, dtype=np.float64)
    y = y - y.mean()
    m = len(y)
    if m < 8:
        raise ValueError("series too short for a frequency estimate")
    dt = float(times[1] - times[0])
    w = np.hanning(m)
    padded = np.zeros(8 * m)
    padded[:m] = y * w
    spec = np.abs(np.fft.rfft(padded))
    spec[0] = 0.0
    peak = int(np.argmax(spec))
    if 0 < peak < len(spec) - 1:
        s0, s1, s2 = spec[peak - 1], spec[peak], spec[peak + 1]
        denom = s0 - 2.0 * s1 + s2
        shift = 0.0 if denom == 0.0 else 0.5 * (s0 - s2) / denom
    else:
        shift = 0.0
    return (peak + shift) / (len(padded) * dt)


def window_averaged_potential_norm(grid, times, beta_snapshots, width) -> float:
    """Largest L2 norm of the time-averaged potential velocity over sliding
    windows of the given width.

    Averaging the field (not its norm) over a window spanning several
    oscillation periods is the computable proxy for weak convergence to 0.
    """
    betas = np.stack(beta_snapshots)
    m = len(times)
    prefix = np.concatenate([np.zeros((1, grid.n, grid.n)), np.cumsum(betas, axis=0)])
    worst = 0.0
    found = False
    for i in range(m):
        j = i
        while j + 1 < m and times[j + 1] - times[i] <= width:
            j += 1
        if times[j] - times[i] < 0.75 * width:
            continue  # window does not fit
        found = True
        avg_beta = ScalarField(grid, (prefix[j + 1] - prefix[i]) / (j + 1 - i))
        pot = grad(poisson_solve(zero_mean(avg_beta)))
        worst = max(worst, l2_norm(pot))
    if not found:
        raise ValueError("no window of the requested width fits the record")
    return worst


def _field_tv_rate(grid, times, snapshots_a, snapshots_b):
    """Total variation in time of an L2 x L2 pair, per unit time."""
    tv = 0.0
    for i in range(len(times) - 1):
        da = snapshots_a[i + 1] - snapshots_a[i]
        db = snapshots_b[i + 1] - snapshots_b[i]
        tv += math.hypot(
            float(np.sqrt((da**2).mean())), float(np.sqrt((db**2).mean()))
        )
    span = float(times[-1] - times[0])
    return tv / span


@dataclass
class NonpreparedCase:
    """Diagnostics of one non-prepared run."""

    eps: float
    coupling: str
    sup_v_hs: float
    sup_rho1_hs: float
    sup_pi_error: float
    peak_potential: float
    window_avg_potential: float
    window_width: float
    dominant_freq: float
    target_freq: float
    resolvable_freq: bool
    filtered_tv_rate: float
    unfiltered_tv_rate: float
    completed: bool
    record: RunRecord


@dataclass
class NonpreparedReport:
    cases: dict  # coupling -> list of NonpreparedCase, eps descending

    def boundedness_ratio(self, coupling):
        cases = self.cases[coupling]
        return max(
            _spread_ratio([c.sup_v_hs for c in cases]),
            _spread_ratio([c.sup_rho1_hs for c in cases]),
        )

    def filtered_tv_ratio(self, coupling):
        return _spread_ratio([c.filtered_tv_rate for c in self.cases[coupling]])

    def pi_errors(self, coupling):
        return [(c.eps, c.sup_pi_error) for c in self.cases[coupling]]


def nonprepared_study(config: SweepConfig) -> NonpreparedReport:
    """Sweep with O(1) divergence data and rho - 1 = O(eps).

    Checks, per coupling: uniform boundedness of (v, (rho-1)/eps); strong
    convergence of the solenoidal part to the Euler flow started from it;
    decay of the window-averaged potential part; the 1/(2 pi eps) oscillation
    of the divergence (measured on the squared-norm series at twice that
    frequency); and the uniform-in-eps variation of the filtered pair.
    """
    grid = PeriodicGrid(config.grid_n)
    tg = resolve_time_grid(config)
    s = config.sobolev_s
    cases = {}
    for coupling in config.couplings():
        per_eps = []
        ref = None
        for eps in config.epsilon_list:
            ic = make_nonprepared_ic(grid, eps, config.seed, s=s, coupling=coupling)
            if ref is None:
                # solenoidal sample is eps-independent: one reference per sweep
                base = base_flow_from_velocity(solenoidal_part(ic.v))
                ref = euler_reference(base, tg)
            rec = run_simulation(
                config, ic, base, reference=ref, time_grid=tg,
                prepared=False, keep_fields="stiff-pair",
            )
            times = rec.times
            width = min(0.8 * (times[-1] - times[0]), 4.0 * TWO_PI * eps)
            wavg = window_averaged_potential_norm(
                grid, times, rec.fields["beta"], width
            )
            target = 1.0 / (math.pi * eps)
            span = float(times[-1] - times[0])
            resolvable = span * target >= 3.0
            freq = dominant_frequency(times, rec.series["int_beta_sq"])
            filtered_beta = []
            filtered_rho = []
            for i, t in enumerate(times):
                theta = t / eps
                ca, sa = math.cos(theta), math.sin(theta)
                filtered_beta.append(
                    ca * rec.fields["beta"][i] - sa * rec.fields["rho1"][i]
                )
                filtered_rho.append(
                    sa * rec.fields["beta"][i] + ca * rec.fields["rho1"][i]
                )
            per_eps.append(
                NonpreparedCase(
                    eps=eps,
                    coupling=coupling,
                    sup_v_hs=rec.sup("norm_v_hs"),
                    sup_rho1_hs=rec.sup("norm_rhotilde1"),
                    sup_pi_error=rec.sup("err_pi_v_hs"),
                    peak_potential=rec.sup("norm_potential_part"),
                    window_avg_potential=wavg,
                    window_width=width,
                    dominant_freq=freq,
                    target_freq=target,
                    resolvable_freq=resolvable,
                    filtered_tv_rate=_field_tv_rate(
                        grid, times, filtered_beta, filtered_rho
                    ),
                    unfiltered_tv_rate=_field_tv_rate(
                        grid, times, rec.fields["beta"], rec.fields["rho1"]
                    ),
                    completed=rec.completed,
                    record=rec,
                )
            )
        cases[coupling] = per_eps
    return NonpreparedReport(cases=cases)
