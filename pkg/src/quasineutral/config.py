"""Sweep configuration: defaults, validation, and the line-oriented
``key = value`` config format used by the command line tool."""

from dataclasses import dataclass, field, fields, replace

from .errors import ParseError, ValidationError

DEFAULT_EPSILONS = (0.2, 0.1, 0.05, 0.025)
BASE_FLOW_KINDS = ("taylor-green", "double-shear", "shear")
COUPLING_CHOICES = ("poisson", "monge-ampere", "both")
DT_POLICIES = ("rk4", "lie-split-if")

# scheme auto-selection threshold: the exact-rotation splitting takes over
# once the oscillation period 2 pi eps gets short
SPLIT_EPS_THRESHOLD = 0.05


@dataclass
class SweepConfig:
    """Desk-scale experiment parameters (defaults run in minutes)."""

    grid_n: int = 64
    sobolev_s: float = 2.0
    final_time: float = 0.5
    dt: float | None = None
    dt_policy: str | None = None  # None selects per-sweep automatically
    epsilon_list: tuple = DEFAULT_EPSILONS
    base_flow: str = "taylor-green"
    amplitude: float = 1.0
    seed: int = 0
    coupling: str = "poisson"
    ma_tol: float = 1e-10
    ma_max_newton: int = 30
    sample_cadence: int = 5
    # slope acceptance bands (overridable in config files)
    band_velocity: tuple = (0.8, 1.2)
    band_density: tuple = (1.7, 2.3)
    band_gap_velocity: tuple = (1.6, 2.4)
    band_gap_density: tuple = (2.5, 3.5)

    def validate(self):
        if self.grid_n % 2 != 0 or self.grid_n < 8:
            raise ValidationError("must be even and >= 8", field="grid_n")
        if self.sobolev_s < 2.0:
            raise ValidationError("must be >= 2", field="sobolev_s")
        if self.final_time <= 0.0:
            raise ValidationError("must be positive", field="final_time")
        if self.dt is not None and self.dt <= 0.0:
            raise ValidationError("must be positive", field="dt")
        if self.dt_policy is not None and self.dt_policy not in DT_POLICIES:
            raise ValidationError(
                f"must be one of {DT_POLICIES}", field="dt_policy"
            )
        eps = tuple(self.epsilon_list)
        if len(eps) == 0 or any(e <= 0.0 for e in eps):
            raise ValidationError("entries must be positive", field="epsilon_list")
        if any(eps[i + 1] >= eps[i] for i in range(len(eps) - 1)):
            raise ValidationError(
                "must be strictly decreasing", field="epsilon_list"
            )
        if self.base_flow not in BASE_FLOW_KINDS:
            raise ValidationError(
                f"must be one of {BASE_FLOW_KINDS}", field="base_flow"
            )
        if self.amplitude < 0.0:
            raise ValidationError("must be non-negative", field="amplitude")
        if self.coupling not in COUPLING_CHOICES:
            raise ValidationError(
                f"must be one of {COUPLING_CHOICES}", field="coupling"
            )
        if self.ma_tol <= 0.0:
            raise ValidationError("must be positive", field="ma_tol")
        if self.ma_max_newton < 1:
            raise ValidationError("must be >= 1", field="ma_max_newton")
        if self.sample_cadence < 1:
            raise ValidationError("must be >= 1", field="sample_cadence")
        for name in ("band_velocity", "band_density", "band_gap_velocity",
                     "band_gap_density"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ValidationError("band must be (low, high)", field=name)
        return self

    def couplings(self):
        if self.coupling == "both":
            return ("poisson", "monge-ampere")
        return (self.coupling,)


def resolve_scheme(config) -> str:
    """Integrator for the whole sweep (shared so the Euler reference is too)."""
    if config.dt_policy is not None:
        return config.dt_policy
    return "lie-split-if" if min(config.epsilon_list) <= SPLIT_EPS_THRESHOLD else "rk4"


def resolve_dt(config, scheme: str) -> float:
    if config.dt is not None:
        return config.dt
    if scheme == "lie-split-if":
        return 1e-3
    return min(0.5 * min(config.epsilon_list), 2e-3)


_LIST_KEYS = {"epsilon_list"}
_BAND_KEYS = {"band_velocity", "band_density", "band_gap_velocity", "band_gap_density"}
_INT_KEYS = {"grid_n", "seed", "ma_max_newton", "sample_cadence"}
_FLOAT_KEYS = {"sobolev_s", "final_time", "dt", "amplitude", "ma_tol"}
_STR_KEYS = {"dt_policy", "base_flow", "coupling"}
KNOWN_KEYS = _LIST_KEYS | _BAND_KEYS | _INT_KEYS | _FLOAT_KEYS | _STR_KEYS


def _parse_number(text, lineno, want_int=False):
    text = text.strip()
    try:
        if want_int:
            return int(text)
        return float(text)
    except ValueError:
        kind = "integer" if want_int else "number"
        raise ParseError(f"expected {kind}, got {text!r}", line=lineno) from None


def parse_config(text: str) -> SweepConfig:
    """Parse ``key = value`` lines into a validated SweepConfig.

    ``#`` starts a comment, blank lines are skipped, lists are
    comma-separated.  Unknown keys are rejected.
    """
    updates = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError("expected 'key = value'", line=lineno)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in KNOWN_KEYS:
            raise ValidationError("unknown config key", field=key)
        if not value:
            raise ParseError(f"empty value for {key}", line=lineno)
        if key in _INT_KEYS:
            updates[key] = _parse_number(value, lineno, want_int=True)
        elif key in _FLOAT_KEYS:
            updates[key] = _parse_number(value, lineno)
        elif key in _LIST_KEYS:
            updates[key] = tuple(
                _parse_number(part, lineno) for part in value.split(",")
            )
        elif key in _BAND_KEYS:
            parts = [p for p in value.split(",")]
            if len(parts) != 2:
                raise ParseError(f"{key} takes two comma-separated numbers", line=lineno)
            updates[key] = tuple(_parse_number(p, lineno) for p in parts)
        else:
            updates[key] = value
    return replace(SweepConfig(), **updates).validate()


def apply_overrides(config: SweepConfig, pairs) -> SweepConfig:
    """Apply ``key=value`` strings (CLI --set) on top of a config."""
    text = "\n".join(pairs)
    parsed = parse_config(text)
    touched = set()
    for pair in pairs:
        key = pair.partition("=")[0].strip()
        touched.add(key)
    updates = {k: getattr(parsed, k) for k in touched}
    return replace(config, **updates).validate()
