"""scikit-learn style front end.

``CoincidenceSimulator`` exposes every configuration field as an estimator
parameter, so it clones, grid-searches and pickles like any other estimator;
``fit`` builds the amplitude and ``predict`` maps analyzer angle pairs to
coincidence rates. ``ModulationFitter`` is a regressor on the analyzer angle
whose fitted attributes carry the visibility.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, column_or_1d

from .amplitude import norm, overlap
from .analysis import MEASURED, SIMULATED, ModulationCurve, Simulation, _design, fit_modulation
from .config import (
    Crystal,
    DelayElement,
    ExperimentConfig,
    FilterSpec,
    ModelKind,
    PumpPulse,
    TimeGrid,
)
from .interference import bell_fidelity, density_matrix

__all__ = ["CoincidenceSimulator", "ModulationFitter", "check_angle_pairs"]


def check_angle_pairs(X) -> np.ndarray:
    """Validate an ``(n_samples, 2)`` array of ``(theta1, theta2)`` in degrees."""
    X = check_array(X, dtype=np.float64, ensure_2d=True)
    if X.shape[1] != 2:
        raise ValueError(f"expected 2 columns (theta1, theta2), got {X.shape[1]}")
    return X


def _angles_1d(X) -> np.ndarray:
    X = check_array(np.asarray(X, dtype=float).reshape(len(X), -1), dtype=np.float64)
    if X.shape[1] != 1:
        raise ValueError(f"expected a single angle column, got {X.shape[1]}")
    return X[:, 0]


class CoincidenceSimulator(BaseEstimator):
    """Coincidence rates of the pulsed type-II source behind the X-Y delay and analyzers.

    Parameters mirror the configuration document keys (times in fs).

    Attributes
    ----------
    simulation_ : Simulation
    overlap_ : complex
        Normalized transpose overlap of the (filtered) amplitude.
    norm_ : float
    density_matrix_ : PolarizationDensityMatrix
        At the configured delay.
    bell_fidelity_ : float
    """

    def __init__(self, sigma_p=60.0, t0=0.0, DL=600.0, r=0.5, tau_c=0.0,
                 filter_sigma=100.0, filter_enabled=False, tau=0.0, delay_present=True,
                 t_min=-1500.0, t_max=2100.0, n_grid=1201, model="full"):
        self.sigma_p = sigma_p
        self.t0 = t0
        self.DL = DL
        self.r = r
        self.tau_c = tau_c
        self.filter_sigma = filter_sigma
        self.filter_enabled = filter_enabled
        self.tau = tau
        self.delay_present = delay_present
        self.t_min = t_min
        self.t_max = t_max
        self.n_grid = n_grid
        self.model = model

    def to_config(self) -> ExperimentConfig:
        return ExperimentConfig(
            pump=PumpPulse(float(self.sigma_p), float(self.t0)),
            crystal=Crystal(float(self.DL), float(self.r), float(self.tau_c)),
            filter=FilterSpec(float(self.filter_sigma), bool(self.filter_enabled)),
            delay=DelayElement(float(self.tau), bool(self.delay_present)),
            grid=TimeGrid(float(self.t_min), float(self.t_max), int(self.n_grid)),
            model=ModelKind.parse(self.model),
        )

    @classmethod
    def from_config(cls, cfg: ExperimentConfig) -> "CoincidenceSimulator":
        return cls(
            sigma_p=cfg.pump.sigma_p, t0=cfg.pump.t0,
            DL=cfg.crystal.DL, r=cfg.crystal.r, tau_c=cfg.crystal.tau_c,
            filter_sigma=cfg.filter.sigma_f, filter_enabled=cfg.filter.enabled,
            tau=cfg.delay.tau, delay_present=cfg.delay.present,
            t_min=cfg.grid.t_min, t_max=cfg.grid.t_max, n_grid=cfg.grid.n,
            model=cfg.model.value,
        )

    def fit(self, X=None, y=None):
        """Build the amplitude. ``X`` and ``y`` are ignored (present for pipeline compatibility)."""
        sim = Simulation(self.to_config())
        self.simulation_ = sim
        self.norm_ = norm(sim.amp)
        self.overlap_ = overlap(sim.amp).O
        self.density_matrix_ = density_matrix(sim.components())
        self.bell_fidelity_ = bell_fidelity(self.density_matrix_)
        return self

    def predict(self, X, model=None):
        """Coincidence rate for each ``(theta1, theta2)`` row of ``X`` (degrees)."""
        check_is_fitted(self, "simulation_")
        X = check_angle_pairs(X)
        return np.array([self.simulation_.rate(t1, t2, model) for t1, t2 in X])

    def predict_no_delay(self, X):
        """Rates with the delay element removed."""
        check_is_fitted(self, "simulation_")
        X = check_angle_pairs(X)
        return np.array([self.simulation_.rate_no_delay(t1, t2) for t1, t2 in X])

    def curve(self, theta1, theta2=None, model=None) -> ModulationCurve:
        check_is_fitted(self, "simulation_")
        return self.simulation_.curve(theta1, theta2, model)

    def visibility(self, theta1, theta2=None, model=None) -> float:
        return fit_modulation(self.curve(theta1, theta2, model)).V


class ModulationFitter(RegressorMixin, BaseEstimator):
    """Least-squares fit of ``a0 + a1 cos 2t + a2 sin 2t`` to rate or count data.

    Parameters
    ----------
    noiseless : bool
        Treat unweighted data as exact model output (``visibility_err_ = 0``)
        instead of estimating the noise from the residuals.

    Attributes
    ----------
    coef_ : ndarray of shape (3,)
        ``(a0, a1, a2)``.
    visibility_, visibility_err_, residual_rms_ : float
    result_ : VisibilityResult
    """

    def __init__(self, noiseless=False):
        self.noiseless = noiseless

    def fit(self, X, y, sigma=None):
        theta2 = _angles_1d(X)
        y = column_or_1d(check_array(np.asarray(y, dtype=float).reshape(-1, 1), dtype=np.float64))
        kind = SIMULATED if (self.noiseless and sigma is None) else MEASURED
        curve = ModulationCurve(np.nan, theta2, y, sigma, kind)
        result = fit_modulation(curve)
        self.result_ = result
        self.coef_ = np.array([result.a0, result.a1, result.a2])
        self.visibility_ = result.V
        self.visibility_err_ = result.sigma_V
        self.residual_rms_ = result.residual_rms
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        return _design(_angles_1d(X)) @ self.coef_

