"""Domain types, unit conventions and the ``key = value`` configuration format.

Conventions used throughout the package:

* times are femtoseconds, angles handed to the public API are degrees;
* analyzer angles are measured from the V axis (0 deg = V, 90 deg = H,
  45 deg = X, -45 deg = Y);
* amplitudes are baseband envelopes, the optical carrier is dropped.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError

__all__ = [
    "PumpPulse",
    "Crystal",
    "FilterSpec",
    "DelayElement",
    "AnalyzerPair",
    "TimeGrid",
    "ModelKind",
    "ExperimentConfig",
    "default_config",
    "load_config",
    "dump_config",
    "validate_config",
    "grid_violations",
    "required_span",
    "minimal_grid",
    "sized_for",
]

# dt must resolve the narrowest time scale by this factor
GRID_RESOLUTION = 20
# envelope half-widths kept inside the grid
GRID_MARGIN_SIGMAS = 4.0


@dataclass(frozen=True)
class PumpPulse:
    sigma_p: float = 60.0
    t0: float = 0.0

    def envelope(self, t):
        """Unit-peak Gaussian envelope ``exp(-(t - t0)^2 / (2 sigma_p^2))``."""
        return _gaussian(t, self.t0, self.sigma_p)


def _gaussian(t, center, width):
    x = (np.asarray(t, dtype=float) - center) / width
    return np.exp(-0.5 * x * x)


@dataclass(frozen=True)
class Crystal:
    """Crystal response.

    ``DL`` is the e/o group-delay difference accumulated over the full
    crystal length, ``r`` weights the pump envelope argument along the
    support strip and ``tau_c`` is the longitudinal compensation delay.
    """

    DL: float = 600.0
    r: float = 0.5
    tau_c: float = 0.0


@dataclass(frozen=True)
class FilterSpec:
    sigma_f: float = 100.0
    enabled: bool = False


@dataclass(frozen=True)
class DelayElement:
    tau: float = 0.0
    present: bool = True

    @property
    def effective_tau(self) -> float:
        return float(self.tau) if self.present else 0.0


@dataclass(frozen=True)
class AnalyzerPair:
    """Two linear analyzers; angles are reduced modulo 180 degrees on construction."""

    theta1: float
    theta2: float

    def __post_init__(self):
        object.__setattr__(self, "theta1", float(self.theta1) % 180.0)
        object.__setattr__(self, "theta2", float(self.theta2) % 180.0)

    def projections(self):
        """Return ``(c1, s1, c2, s2)``, the X and Y projection factors per analyzer."""
        a1 = math.pi / 4 - math.radians(self.theta1)
        a2 = math.pi / 4 - math.radians(self.theta2)
        return math.cos(a1), math.sin(a1), math.cos(a2), math.sin(a2)

    def xy_vector(self):
        """Projection vector onto the (XX, XY, YX, YY) basis."""
        c1, s1, c2, s2 = self.projections()
        return (c1 * c2, c1 * s2, s1 * c2, s1 * s2)

    def hv_coefficients(self):
        """``(sin t1 cos t2, cos t1 sin t2)``: weights of the direct and exchanged pairing."""
        t1 = math.radians(self.theta1)
        t2 = math.radians(self.theta2)
        return math.sin(t1) * math.cos(t2), math.cos(t1) * math.sin(t2)


@dataclass(frozen=True)
class TimeGrid:
    t_min: float = -1500.0
    t_max: float = 2100.0
    n: int = 1201

    @property
    def dt(self) -> float:
        return (self.t_max - self.t_min) / (self.n - 1)

    @property
    def times(self):
        return self.t_min + self.dt * np.arange(self.n)

    def refined(self, factor: int = 2) -> "TimeGrid":
        """Same span with ``factor`` times finer spacing."""
        return TimeGrid(self.t_min, self.t_max, (self.n - 1) * factor + 1)


class ModelKind(enum.Enum):
    FULL = "full"
    TRUNCATED = "truncated"

    @classmethod
    def parse(cls, value) -> "ModelKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ConfigError(f"model must be 'full' or 'truncated' (got {value!r})") from None


@dataclass(frozen=True)
class ExperimentConfig:
    pump: PumpPulse = field(default_factory=PumpPulse)
    crystal: Crystal = field(default_factory=Crystal)
    filter: FilterSpec = field(default_factory=FilterSpec)
    delay: DelayElement = field(default_factory=DelayElement)
    grid: TimeGrid = field(default_factory=TimeGrid)
    model: ModelKind = ModelKind.FULL

    def with_(self, **changes) -> "ExperimentConfig":
        """Copy with flat document keys changed, e.g. ``cfg.with_(tau_fs=50)``."""
        values = _to_flat(self)
        for key, value in changes.items():
            if key not in _KEYS:
                raise ConfigError(f"unknown key {key!r}")
            values[key] = value
        return _from_flat(values)


def default_config() -> ExperimentConfig:
    return ExperimentConfig()


def _parse_bool(text):
    lowered = str(text).strip().lower()
    if lowered in ("true", "yes", "1"):
        return True
    if lowered in ("false", "no", "0"):
        return False
    raise ValueError(f"expected true/false, got {text!r}")


def _parse_int(text):
    value = float(text)
    if not value.is_integer():
        raise ValueError(f"expected an integer, got {text!r}")
    return int(value)


# document key -> (section, attribute, parser)
_KEYS = {
    "sigma_p_fs": ("pump", "sigma_p", float),
    "t0_fs": ("pump", "t0", float),
    "DL_fs": ("crystal", "DL", float),
    "r": ("crystal", "r", float),
    "tau_c_fs": ("crystal", "tau_c", float),
    "filter_sigma_fs": ("filter", "sigma_f", float),
    "filter_enabled": ("filter", "enabled", _parse_bool),
    "tau_fs": ("delay", "tau", float),
    "delay_present": ("delay", "present", _parse_bool),
    "grid_tmin_fs": ("grid", "t_min", float),
    "grid_tmax_fs": ("grid", "t_max", float),
    "grid_n": ("grid", "n", _parse_int),
    "model": (None, "model", ModelKind.parse),
}


def _to_flat(cfg: ExperimentConfig) -> dict:
    flat = {}
    for key, (section, attr, _) in _KEYS.items():
        flat[key] = getattr(cfg, attr) if section is None else getattr(getattr(cfg, section), attr)
    return flat


def _from_flat(flat: dict) -> ExperimentConfig:
    cfg = ExperimentConfig()
    sections = {}
    for key, value in flat.items():
        section, attr, parse = _KEYS[key]
        if isinstance(value, str) or (parse is _parse_int and not isinstance(value, int)):
            value = parse(value)
        elif parse is float:
            value = float(value)
        elif parse is ModelKind.parse:
            value = ModelKind.parse(value)
        if section is None:
            cfg = replace(cfg, **{attr: value})
        else:
            sections.setdefault(section, {})[attr] = value
    for section, attrs in sections.items():
        cfg = replace(cfg, **{section: replace(getattr(cfg, section), **attrs)})
    return cfg


def load_config(text: str) -> ExperimentConfig:
    """Parse a ``key = value`` document and return a validated configuration.

    Blank lines and ``#`` comments are ignored; unset keys keep their defaults.
    Raises :class:`ConfigError` on malformed lines, unknown or repeated keys,
    unparsable values, and on any invariant violation.
    """
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, _, value = (part.strip() for part in line.partition("="))
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        parse = _KEYS[key][2]
        try:
            values[key] = parse(value)
        except (ValueError, ConfigError) as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None

    cfg = _from_flat(values)
    problems = validate_config(cfg)
    if problems:
        raise ConfigError("invalid configuration: " + "; ".join(problems), problems)
    return cfg


def dump_config(cfg: ExperimentConfig) -> str:
    """Serialize every key; floats use ``repr`` so a reload is field-wise equal."""
    lines = []
    for key, value in _to_flat(cfg).items():
        if isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, ModelKind):
            text = value.value
        else:
            text = repr(value)
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"


def required_span(pump: PumpPulse, crystal: Crystal, sigma_f: float | None = None,
                  tau: float = 0.0) -> tuple[float, float]:
    """Time interval a grid must cover.

    The stated rule ``[t0 - 4 s - |tau| - tau_c, t0 + 4 s + DL + |tau|]`` with
    ``s = sigma_p + sigma_f`` is widened to the true support of the amplitude,
    whose o-time reaches ``t0 + 4 s + (1 + r) DL - tau_c`` under pump walk-off.
    """
    margin = GRID_MARGIN_SIGMAS * (pump.sigma_p + (sigma_f or 0.0))
    lo = pump.t0 - margin - abs(tau) - crystal.tau_c
    reach = max(crystal.DL, (1.0 + crystal.r) * crystal.DL - crystal.tau_c)
    hi = pump.t0 + margin + reach + abs(tau)
    return lo, hi


def grid_violations(grid: TimeGrid, pump: PumpPulse, crystal: Crystal,
                    sigma_f: float | None = None, tau: float = 0.0) -> list[str]:
    """Resolution and coverage problems of ``grid`` for the given physics."""
    problems = []
    if grid.n < 64:
        problems.append(f"grid_n must be >= 64 (got {grid.n})")
    if not grid.t_max > grid.t_min:
        problems.append(f"grid_tmax_fs must exceed grid_tmin_fs ({grid.t_max} <= {grid.t_min})")
    if problems or pump.sigma_p <= 0 or crystal.DL <= 0 or (sigma_f is not None and sigma_f <= 0):
        return problems

    scales = [pump.sigma_p, crystal.DL] + ([sigma_f] if sigma_f is not None else [])
    dt_max = min(scales) / GRID_RESOLUTION
    if grid.dt > dt_max * (1 + 1e-12):
        problems.append(
            f"grid spacing {grid.dt:.6g} fs exceeds {dt_max:.6g} fs "
            f"(min time scale / {GRID_RESOLUTION}); raise grid_n"
        )
    lo, hi = required_span(pump, crystal, sigma_f, tau)
    if grid.t_min > lo or grid.t_max < hi:
        problems.append(
            f"grid [{grid.t_min:.6g}, {grid.t_max:.6g}] fs does not cover the required "
            f"[{lo:.6g}, {hi:.6g}] fs"
        )
    return problems


def minimal_grid(pump: PumpPulse, crystal: Crystal, sigma_f: float | None = None,
                 tau: float = 0.0, pad: float = 0.05, refine: int = 1) -> TimeGrid:
    """Smallest grid meeting the sizing rule, widened by ``pad`` of the span each side.

    ``refine`` divides the largest legal spacing further.
    """
    scales = [pump.sigma_p, crystal.DL] + ([sigma_f] if sigma_f is not None else [])
    dt = min(scales) / GRID_RESOLUTION / refine
    lo, hi = required_span(pump, crystal, sigma_f, tau)
    extra = pad * (hi - lo)
    n = max(64, int(math.ceil((hi - lo + 2 * extra) / dt)) + 1)
    return TimeGrid(lo - extra, lo - extra + dt * (n - 1), n)


def sized_for(cfg: "ExperimentConfig", **kwargs) -> "ExperimentConfig":
    """``cfg`` with its grid replaced by :func:`minimal_grid` for the configured physics."""
    sigma_f = cfg.filter.sigma_f if cfg.filter.enabled else None
    grid = minimal_grid(cfg.pump, cfg.crystal, sigma_f, cfg.delay.effective_tau, **kwargs)
    return replace(cfg, grid=grid)


def validate_config(cfg: ExperimentConfig) -> list[str]:
    """Every violated invariant of ``cfg``; an empty list means usable."""
    problems = []
    if not _finite_positive(cfg.pump.sigma_p):
        problems.append(f"sigma_p_fs must be > 0 (got {cfg.pump.sigma_p})")
    if not math.isfinite(cfg.pump.t0):
        problems.append(f"t0_fs must be finite (got {cfg.pump.t0})")
    if not _finite_positive(cfg.crystal.DL):
        problems.append(f"DL_fs must be > 0 (got {cfg.crystal.DL})")
    if not 0.0 <= cfg.crystal.r <= 1.0:
        problems.append(f"r must lie in [0, 1] (got {cfg.crystal.r})")
    if not 0.0 <= cfg.crystal.tau_c <= max(cfg.crystal.DL, 0.0):
        problems.append(f"tau_c_fs must lie in [0, DL_fs] (got {cfg.crystal.tau_c})")
    if cfg.filter.enabled and not _finite_positive(cfg.filter.sigma_f):
        problems.append(f"filter_sigma_fs must be > 0 when the filter is enabled (got {cfg.filter.sigma_f})")
    if not math.isfinite(cfg.delay.tau):
        problems.append(f"tau_fs must be finite (got {cfg.delay.tau})")
    if not isinstance(cfg.model, ModelKind):
        problems.append(f"model must be a ModelKind (got {cfg.model!r})")
    sigma_f = cfg.filter.sigma_f if cfg.filter.enabled else None
    problems.extend(grid_violations(cfg.grid, cfg.pump, cfg.crystal, sigma_f, cfg.delay.effective_tau))
    return problems


def _finite_positive(x) -> bool:
    return math.isfinite(x) and x > 0


def config_fields():
    """Names of the document keys, in serialization order."""
    return list(_KEYS)

