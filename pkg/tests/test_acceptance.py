"""Acceptance suite: one check per criterion, runnable under pytest or as a script.

    python tests/test_acceptance.py      # prints one PASS/FAIL line per criterion
"""
from __future__ import annotations

import sys
from functools import lru_cache

import numpy as np
import pytest

from polcorr import (
    AnalyzerPair,
    ModelKind,
    ModulationCurve,
    Simulation,
    bell_fidelity,
    density_matrix,
    fit_modulation,
    mixture_law_rate,
    norm,
    overlap,
    rate_from_rho,
    synth_counts,
)
from polcorr.analysis import SIMULATED, scan_tau, visibility_map
from polcorr.config import default_config, grid_violations, sized_for

DL = 600.0
THETA1_SET = (0.0, 15.0, 30.0, 45.0, 60.0, 75.0, 90.0)
TAU_C_SET = (0.0, DL / 4, DL / 2)
SIGMA_F_SET = (None, 100.0, 300.0, 800.0)
ANGLES_5 = np.arange(0.0, 180.0 + 1e-9, 5.0)


def _cfg(tau_c=0.0, sigma_f=None, **extra):
    cfg = default_config().with_(tau_c_fs=tau_c, **extra)
    if sigma_f is not None:
        cfg = cfg.with_(filter_enabled=True, filter_sigma_fs=sigma_f)
    f = cfg.filter.sigma_f if cfg.filter.enabled else None
    if grid_violations(cfg.grid, cfg.pump, cfg.crystal, f, cfg.delay.effective_tau):
        cfg = sized_for(cfg)
    return cfg


@lru_cache(maxsize=None)
def _sim(tau_c=0.0, sigma_f=None) -> Simulation:
    return Simulation(_cfg(tau_c, sigma_f))


def _v(sim, theta1, model=ModelKind.FULL, tau=None):
    return fit_modulation(sim.curve(theta1, model=model, tau=tau)).V


def check_1():
    sim = _sim()
    scale = norm(sim.amp)
    worst = 0.0
    for t1 in ANGLES_5:
        for t2 in ANGLES_5:
            d = abs(sim.rate(t1, t2, ModelKind.FULL, 0.0) - sim.rate_no_delay(t1, t2))
            worst = max(worst, d / scale)
    return worst <= 1e-10, f"max |R_full - R_nodelay| / N = {worst:.2e}"


def check_2():
    sim = _sim()
    worst_ratio, min_v = 0.0, 1.0
    for t1 in THETA1_SET:
        curve = sim.curve(t1, model=ModelKind.TRUNCATED, tau=0.0)
        min_v = min(min_v, fit_modulation(curve).V)
        law = np.sin(np.radians(t1 + curve.theta2)) ** 2
        # cross ratio R(a) law(b) vs R(b) law(a), measured against the curve scale
        k = np.argmax(law)
        cross = curve.values * law[k] - curve.values[k] * law
        worst_ratio = max(worst_ratio, float(np.max(np.abs(cross))) / (curve.values[k] * law[k]))
    ok = min_v >= 0.999 and worst_ratio <= 1e-9
    return ok, f"min V = {min_v:.6f}, cross-ratio deviation = {worst_ratio:.2e}"


def check_3():
    sim = _sim()
    v90, v0, v45 = (_v(sim, t, tau=0.0) for t in (90.0, 0.0, 45.0))
    ok = v90 >= 0.99 and v0 >= 0.99 and v45 <= 0.01
    return ok, f"V(90) = {v90:.6f}, V(0) = {v0:.6f}, V(45) = {v45:.2e}"


def _settings():
    for tau_c in TAU_C_SET:
        for sigma_f in SIGMA_F_SET:
            yield tau_c, sigma_f


def check_4():
    worst = 0.0
    for tau_c, sigma_f in _settings():
        sim = _sim(tau_c, sigma_f)
        worst = max(worst, abs(_v(sim, 45.0, tau=0.0) - abs(overlap(sim.amp).O)))
    return worst <= 1e-6, f"max |V(45) - |O|| over 12 settings = {worst:.2e}"


def check_5():
    rows = []
    for sigma_f in (50.0, 75.0, 100.0, 125.0, 150.0, 200.0, 300.0):
        sim = _sim(0.0, sigma_f)
        v45, v90 = _v(sim, 45.0, tau=0.0), _v(sim, 90.0, tau=0.0)
        rows.append((sigma_f, v45, v90))
        if 0.10 <= v45 <= 0.25 and v90 >= 0.99:
            return True, f"sigma_f = {sigma_f:g} fs: V(45) = {v45:.4f}, V(90) = {v90:.6f}"
    return False, "no setting in scan: " + ", ".join(f"{s:g}:{a:.3f}/{b:.3f}" for s, a, b in rows)


def check_6():
    sim = _sim()
    f0 = bell_fidelity(density_matrix(sim.components(0.0)))
    o0 = abs(overlap(sim.amp).O)
    worst = -np.inf
    for tau_c, sigma_f in _settings():
        s = _sim(tau_c, sigma_f)
        f = bell_fidelity(density_matrix(s.components(0.0)))
        worst = max(worst, f - (0.5 + abs(overlap(s.amp).O) / 2))
    ok = abs(f0 - 0.5) <= 1e-6 and worst <= 1e-6
    return ok, f"F(O={o0:.1e}) = {f0:.9f}, max F - (1/2 + |O|/2) = {worst:.2e}"


def check_7():
    grid = np.arange(0.0, 180.0 + 1e-9, 15.0)
    rho_spread, mix_dev = 0.0, 0.0
    for tau_c, sigma_f in _settings():
        sim = _sim(tau_c, sigma_f)
        comp = sim.components(0.0)
        rho = density_matrix(comp)
        total = norm(sim.amp)
        O = overlap(sim.amp).O
        ratios = []
        for t1 in grid:
            for t2 in grid:
                direct = sim.rate(t1, t2, ModelKind.FULL, 0.0)
                pair = AnalyzerPair(t1, t2)
                mix_dev = max(mix_dev, abs(mixture_law_rate(total, O, pair) - direct) / total)
                from_rho = rate_from_rho(rho, pair)
                if direct > 1e-6 * total:
                    ratios.append(direct / from_rho)
        ratios = np.array(ratios)
        rho_spread = max(rho_spread, float((ratios.max() - ratios.min()) / ratios.mean()))
    ok = rho_spread <= 1e-8 and mix_dev <= 1e-8
    return ok, f"rho-vs-direct spread = {rho_spread:.2e}, mixture-law deviation = {mix_dev:.2e}"


def check_8():
    values = [abs(overlap(_sim(0.0, s).amp).O) for s in (50.0, 100.0, 200.0, 400.0, 800.0)]
    monotone = all(b >= a for a, b in zip(values, values[1:]))
    ok = monotone and values[-1] >= 0.9
    return ok, "|O| = " + ", ".join(f"{v:.4f}" for v in values)


def check_9():
    theta2 = np.linspace(0.0, 180.0, 41)
    truth = ModulationCurve(45.0, theta2, 1.0 + 0.5 * np.cos(np.radians(2 * theta2)), kind=SIMULATED)
    inside = 0
    for seed in range(100):
        fit = fit_modulation(synth_counts(truth, 1e5, seed))
        inside += abs(fit.V - 0.5) <= 3 * fit.sigma_V
    return inside >= 95, f"{inside}/100 fits within 3 sigma_V"


def check_10():
    base = default_config()
    coarse = Simulation(base)
    fine = Simulation(base.with_(grid_n=2 * base.grid.n - 1))
    thetas = list(THETA1_SET)
    taus = (0.0, 50.0, 100.0, 200.0, 400.0)
    dv = 0.0
    for a, b in zip(visibility_map(coarse, thetas), visibility_map(fine, thetas)):
        dv = max(dv, abs(a[1] - b[1]), abs(a[2] - b[2]))
    for t1 in (0.0, 45.0, 90.0):
        for (_, ra), (_, rb) in zip(scan_tau(coarse, t1, taus), scan_tau(fine, t1, taus)):
            dv = max(dv, abs(ra.V - rb.V))
    do = abs(overlap(coarse.amp).O - overlap(fine.amp).O)
    return dv <= 1e-5 and do <= 1e-6, f"max dV = {dv:.2e}, dO = {do:.2e}"


CHECKS = {
    1: ("delay identity at tau = 0", check_1),
    2: ("truncated sin^2 law", check_2),
    3: ("unfiltered visibility pattern", check_3),
    4: ("V(45) equals |O|", check_4),
    5: ("filter scan reaches the 10-25% regime", check_5),
    6: ("Bell fidelity bound", check_6),
    7: ("oracle equivalences", check_7),
    8: ("spectral filtering raises |O|", check_8),
    9: ("fit coverage over 100 seeds", check_9),
    10: ("grid convergence", check_10),
}


@pytest.mark.parametrize("number", sorted(CHECKS))
def test_criterion(number):
    title, check = CHECKS[number]
    ok, detail = check()
    print(f"[{'PASS' if ok else 'FAIL'}] {number:2d} {title}: {detail}")
    assert ok, detail


def main() -> int:
    failures = 0
    for number in sorted(CHECKS):
        title, check = CHECKS[number]
        ok, detail = check()
        failures += not ok
        print(f"[{'PASS' if ok else 'FAIL'}] {number:2d} {title}: {detail}", flush=True)
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
