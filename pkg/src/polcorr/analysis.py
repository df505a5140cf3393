"""Angle and delay scans, sinusoidal visibility fits, synthetic counts and data ingestion.

Every coincidence curve in this package is exactly ``a0 + a1 cos 2t + a2 sin 2t``
in the second analyzer angle, so visibilities come from a linear least-squares
fit on that basis rather than from an iterative optimizer.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from ._csv import render
from .amplitude import prepare_amplitude
from .config import AnalyzerPair, DelayElement, ExperimentConfig, ModelKind, grid_violations, validate_config
from .errors import ConfigError, DataError, GridError, NumericalError
from .interference import (
    ComponentAmplitudes,
    component_amplitudes,
    detection_amplitude,
    field_rate,
    rate_no_delay,
)
from .poisson import poisson_counts

__all__ = [
    "ModulationCurve",
    "VisibilityResult",
    "Simulation",
    "default_theta2",
    "scan_theta2",
    "scan_tau",
    "fit_modulation",
    "visibility_map",
    "synth_counts",
    "ingest_counts_csv",
    "curve_to_csv",
    "visibility_map_to_csv",
    "tau_scan_to_csv",
    "fit_to_csv",
]

SIMULATED = "simulated"
MEASURED = "measured"
MIN_POINTS = 5


def default_theta2(points: int = 41) -> np.ndarray:
    """Evenly spaced analyzer angles over 0..180 deg inclusive."""
    return np.linspace(0.0, 180.0, points)


@dataclass(frozen=True)
class ModulationCurve:
    """Coincidence rate (or counts) against the second analyzer angle at fixed ``theta1``."""

    theta1: float
    theta2: np.ndarray
    values: np.ndarray
    sigma: np.ndarray | None = None
    kind: str = SIMULATED

    def __post_init__(self):
        theta2 = np.array(self.theta2, dtype=float).ravel()
        values = np.array(self.values, dtype=float).ravel()
        if theta2.shape != values.shape:
            raise DataError(f"{theta2.size} angles but {values.size} values")
        if theta2.size < MIN_POINTS:
            raise DataError(f"a modulation curve needs at least {MIN_POINTS} points, got {theta2.size}")
        if not (np.all(np.isfinite(theta2)) and np.all(np.isfinite(values))):
            raise DataError("angles and values must be finite")
        # 0 and 180 deg may both appear (closed scan range); exact repeats may not
        if np.unique(theta2).size != theta2.size:
            raise DataError("theta2 values must be distinct")
        sigma = self.sigma
        if sigma is not None:
            sigma = np.array(sigma, dtype=float).ravel()
            if sigma.shape != values.shape:
                raise DataError(f"{sigma.size} sigmas for {values.size} values")
            if not np.all(sigma > 0):
                raise DataError("sigma must be > 0")
            sigma.setflags(write=False)
        if self.kind not in (SIMULATED, MEASURED):
            raise DataError(f"kind must be {SIMULATED!r} or {MEASURED!r}")
        for arr in (theta2, values):
            arr.setflags(write=False)
        object.__setattr__(self, "theta1", float(self.theta1))
        object.__setattr__(self, "theta2", theta2)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "sigma", sigma)

    @property
    def points(self):
        sig = self.sigma if self.sigma is not None else [None] * len(self.values)
        return list(zip(self.theta2.tolist(), self.values.tolist(), list(sig)))

    def scaled(self, factor: float) -> "ModulationCurve":
        sigma = None if self.sigma is None else self.sigma * factor
        return ModulationCurve(self.theta1, self.theta2, self.values * factor, sigma, self.kind)


@dataclass(frozen=True)
class VisibilityResult:
    a0: float
    a1: float
    a2: float
    V: float
    sigma_V: float
    residual_rms: float
    covariance: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def exceeds_unity(self) -> bool:
        """Fitted visibility above 1: reported as is, flagged here."""
        return self.V > 1.0

    @property
    def phase_deg(self) -> float:
        """Angle of maximum fitted rate, degrees in [0, 180)."""
        return math.degrees(0.5 * math.atan2(self.a2, self.a1)) % 180.0


def _design(theta2_deg) -> np.ndarray:
    two = 2.0 * np.radians(theta2_deg)
    return np.column_stack([np.ones_like(two), np.cos(two), np.sin(two)])


def fit_modulation(curve: ModulationCurve) -> VisibilityResult:
    """Least-squares fit of ``a0 + a1 cos 2t + a2 sin 2t``; weighted when ``sigma`` is given.

    Uncertainties: with ``sigma``, the covariance is ``(X^T W X)^-1``; for
    measured data without ``sigma`` it is scaled by the residual variance;
    simulated (noiseless) curves report ``sigma_V = 0``.
    """
    X = _design(curve.theta2)
    y = curve.values
    if np.linalg.matrix_rank(X) < 3:
        raise NumericalError("singular design: angles do not resolve the 2-theta harmonic")

    if curve.sigma is not None:
        w = 1.0 / curve.sigma
        coef, *_ = np.linalg.lstsq(X * w[:, None], y * w, rcond=None)
        cov = np.linalg.inv((X * (w * w)[:, None]).T @ X)
    else:
        coef, *_ = np.linalg.lstsq(X, y, rcond=None)
        if curve.kind == MEASURED:
            dof = len(y) - 3
            resid = y - X @ coef
            cov = (resid @ resid / dof) * np.linalg.inv(X.T @ X)
        else:
            cov = np.zeros((3, 3))

    a0, a1, a2 = (float(c) for c in coef)
    if not a0 > 0:
        raise NumericalError(f"fitted offset a0 = {a0:.6g} is not positive")
    amp = math.hypot(a1, a2)
    V = amp / a0
    if amp > 0:
        grad = np.array([-V / a0, a1 / (a0 * amp), a2 / (a0 * amp)])
        var_V = float(grad @ cov @ grad)
    else:
        var_V = float(cov[1, 1] + cov[2, 2]) / a0 ** 2
    resid = y - X @ coef
    return VisibilityResult(
        a0=a0,
        a1=a1,
        a2=a2,
        V=V,
        sigma_V=math.sqrt(max(var_V, 0.0)),
        residual_rms=float(np.sqrt(np.mean(resid ** 2))),
        covariance=cov,
    )


class Simulation:
    """One validated configuration with its amplitude built once and reused across scans."""

    def __init__(self, cfg: ExperimentConfig):
        problems = validate_config(cfg)
        if problems:
            raise ConfigError("invalid configuration: " + "; ".join(problems), problems)
        self.cfg = cfg
        self.amp = prepare_amplitude(cfg)
        self._components: dict[float, ComponentAmplitudes] = {}

    def components(self, tau: float | None = None) -> ComponentAmplitudes:
        """Component amplitudes at delay ``tau`` (default: the configured delay)."""
        if tau is None:
            delay = self.cfg.delay
        else:
            delay = DelayElement(tau=float(tau), present=True)
        key = delay.effective_tau
        if key not in self._components:
            if key != self.cfg.delay.effective_tau:
                sigma_f = self.cfg.filter.sigma_f if self.cfg.filter.enabled else None
                problems = grid_violations(self.cfg.grid, self.cfg.pump, self.cfg.crystal, sigma_f, key)
                if problems:
                    raise GridError(f"tau = {key} fs: " + "; ".join(problems))
            self._components[key] = component_amplitudes(self.amp, delay)
        return self._components[key]

    def rate(self, theta1: float, theta2: float, model=None, tau=None) -> float:
        model = self.cfg.model if model is None else ModelKind.parse(model)
        field = detection_amplitude(self.components(tau), AnalyzerPair(theta1, theta2), model)
        return field_rate(field)

    def rate_no_delay(self, theta1: float, theta2: float) -> float:
        return rate_no_delay(self.amp, AnalyzerPair(theta1, theta2))

    def curve(self, theta1, theta2_list=None, model=None, tau=None) -> ModulationCurve:
        theta2_list = default_theta2() if theta2_list is None else np.asarray(theta2_list, dtype=float)
        values = [self.rate(theta1, t2, model, tau) for t2 in theta2_list]
        return ModulationCurve(theta1, theta2_list, values)

    def curve_no_delay(self, theta1, theta2_list=None) -> ModulationCurve:
        theta2_list = default_theta2() if theta2_list is None else np.asarray(theta2_list, dtype=float)
        return ModulationCurve(theta1, theta2_list, [self.rate_no_delay(theta1, t2) for t2 in theta2_list])


def _simulation(cfg) -> Simulation:
    return cfg if isinstance(cfg, Simulation) else Simulation(cfg)


def scan_theta2(cfg, theta1: float, theta2_list=None) -> ModulationCurve:
    """Coincidence rate at fixed ``theta1`` over ``theta2_list`` with the configured model and delay.

    ``cfg`` may be an :class:`ExperimentConfig` or a prepared :class:`Simulation`.
    """
    return _simulation(cfg).curve(theta1, theta2_list)


def scan_tau(cfg, theta1: float, tau_list, theta2_list=None) -> list[tuple[float, VisibilityResult]]:
    sim = _simulation(cfg)
    out = []
    for tau in tau_list:
        curve = sim.curve(theta1, theta2_list, tau=float(tau))
        out.append((float(tau), fit_modulation(curve)))
    return out


def visibility_map(cfg, theta1_list, theta2_list=None) -> list[tuple[float, float, float]]:
    """Rows ``(theta1, V_full, V_truncated)`` at the configured delay."""
    sim = _simulation(cfg)
    rows = []
    for theta1 in theta1_list:
        v_full = fit_modulation(sim.curve(theta1, theta2_list, ModelKind.FULL)).V
        v_trunc = fit_modulation(sim.curve(theta1, theta2_list, ModelKind.TRUNCATED)).V
        rows.append((float(theta1), v_full, v_trunc))
    return rows


def synth_counts(curve: ModulationCurve, n_peak: float, seed: int) -> ModulationCurve:
    """Poisson counts with mean proportional to the curve, the maximum mapped to ``n_peak``."""
    if n_peak < 10:
        raise ValueError(f"n_peak must be >= 10 (got {n_peak})")
    values = curve.values
    if np.any(values < 0):
        raise DataError("synthetic counts need a non-negative rate curve")
    peak = values.max()
    means = values * (n_peak / peak) if peak > 0 else np.zeros_like(values)
    counts = np.array(poisson_counts(means, seed), dtype=float)
    sigma = np.sqrt(np.maximum(counts, 1.0))
    return ModulationCurve(curve.theta1, curve.theta2, counts, sigma, MEASURED)


def ingest_counts_csv(text: str, theta1: float = float("nan")) -> ModulationCurve:
    """Parse ``theta2_deg,counts[,sigma]`` data into a measured curve."""
    reader = csv.reader(io.StringIO(text))
    header = None
    rows = []
    for lineno, row in enumerate(reader, start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        cells = [cell.strip() for cell in row]
        if header is None:
            header = cells
            if header not in (["theta2_deg", "counts"], ["theta2_deg", "counts", "sigma"]):
                raise DataError(f"line {lineno}: header must be 'theta2_deg,counts[,sigma]', got {','.join(cells)!r}")
            continue
        if len(cells) != len(header):
            raise DataError(f"line {lineno}: expected {len(header)} fields, got {len(cells)}")
        try:
            numbers = [float(cell) for cell in cells]
        except ValueError:
            raise DataError(f"line {lineno}: non-numeric field in {','.join(cells)!r}") from None
        if not all(math.isfinite(x) for x in numbers):
            raise DataError(f"line {lineno}: non-finite value")
        if len(numbers) == 3 and numbers[2] <= 0:
            raise DataError(f"line {lineno}: sigma must be > 0")
        rows.append(numbers)
    if header is None:
        raise DataError("empty CSV document")
    if len(rows) < MIN_POINTS:
        raise DataError(f"need at least {MIN_POINTS} data rows, got {len(rows)}")

    data = np.array(rows)
    reduced = np.round(np.mod(data[:, 0], 180.0), 9) % 180.0
    _, first_index, counts = np.unique(reduced, return_index=True, return_counts=True)
    if np.any(counts > 1):
        dup = data[np.sort(first_index[counts > 1])[0], 0]
        raise DataError(f"duplicate analyzer angle {dup:g} deg (modulo 180)")
    sigma = data[:, 2] if data.shape[1] == 3 else np.sqrt(np.maximum(data[:, 1], 1.0))
    return ModulationCurve(theta1, data[:, 0], data[:, 1], sigma, MEASURED)


def curve_to_csv(curve: ModulationCurve) -> str:
    if curve.kind == MEASURED and curve.sigma is not None:
        return render(["theta2_deg", "counts", "sigma"], zip(curve.theta2, curve.values, curve.sigma))
    return render(["theta2_deg", "rate"], zip(curve.theta2, curve.values))


def visibility_map_to_csv(rows) -> str:
    return render(["theta1_deg", "V_full", "V_truncated"], rows)


def tau_scan_to_csv(results) -> str:
    return render(["tau_fs", "V", "sigma_V"], ((tau, r.V, r.sigma_V) for tau, r in results))


def fit_to_csv(result: VisibilityResult) -> str:
    return render(
        ["V", "sigma_V", "a0", "a1", "a2", "residual_rms"],
        [(result.V, result.sigma_V, result.a0, result.a1, result.a2, result.residual_rms)],
    )
