"""Acceptance run: one test per criterion, each reporting PASS or FAIL.

Run alone with ``pytest tests/test_acceptance.py -v``; the summary block at
the end of the session lists every criterion with its measured value.
"""

import math

import numpy as np
import pytest

from conftest import random_params, record_criterion
from oracles import integrate_planner, stage1_root
from safespeed import model as m
from safespeed.model import FlightParams
from safespeed.sim import SimConfig, empirical_max_speed, ode_reference_trajectory
from safespeed.solver import (
    LatencyModel,
    SolverConfig,
    SweepSpec,
    coupling_surface,
    find_crossings,
    max_safe_speed,
    saturation_ratio_peak,
    sweep,
)
from safespeed.validation import DEFAULT_GRIDS, validate_model

CFG = SolverConfig()
DEFAULTS = FlightParams()


def check(number, passed, detail):
    record_criterion(number, bool(passed), detail)
    assert passed, detail


def test_c01_twenty_percent_claim():
    rep = validate_model(DEFAULTS, DEFAULT_GRIDS, SimConfig(dt=1e-4))
    n = sum(1 for row in rep.rows() if row.empirical is not None and row.empirical <= rep.speed_ceiling)
    check(1, rep.passed and n > 0,
          f"max rel err {rep.max_error:.4f} over {n} points (bound 0.20, exact-mode model)")


def test_c02_oracle_equivalence():
    rng = np.random.default_rng(20240611)
    worst_y = worst_v = 0.0
    for p in random_params(rng, 20):
        v = 0.6 * m.stage1_speed_limit(p)
        T_prime = m.stage1_duration(p, v) - p.tau
        # the clamped integration only follows the closed form before either switch time
        edge = T_prime - max(m.accel_switch_time(p, v, "paper"), m.accel_switch_time(p, v, "exact"))
        states = ode_reference_trajectory(p, v, 1e-6)
        s = np.array([q.s for q in states])
        stop = int(np.searchsorted(s, edge, side="right"))
        for i in np.linspace(0, stop - 1, 60).astype(int):
            ref = m.trajectory_state(p, v, states[i].s, "paper")
            worst_y = max(worst_y, abs(states[i].y - ref.y))
            worst_v = max(worst_v, abs(states[i].v_y - ref.v_y))
    check(2, worst_y <= 1e-3 and worst_v <= 1e-2,
          f"max |dy| {worst_y:.2e} m, max |dv_y| {worst_v:.2e} m/s over 20 sets")


def test_c03_planner_residual():
    rng = np.random.default_rng(3)
    worst = 0.0
    for p in random_params(rng, 10):
        v = 0.6 * m.stage1_speed_limit(p)
        T_prime = m.stage1_duration(p, v) - p.tau
        edge = T_prime - m.accel_switch_time(p, v, "paper")
        for s in np.linspace(0.0, edge, 100, endpoint=False):
            q = m.trajectory_state(p, v, float(s))
            u = T_prime - s
            # landing condition of the re-planned constant acceleration, in metres
            res = 0.5 * q.a_y * u * u + q.v_y * u - (m.inflated_radius(p, v, p.tau + s) - q.y)
            worst = max(worst, abs(res) / (p.r + p.d))
    check(3, worst <= 1e-9, f"max residual / (r+d) = {worst:.2e}")


def test_c04_degeneration():
    problems = []
    p0 = FlightParams(e=0.0)
    for v in np.linspace(2.0, 24.0, 12):
        term = m.terminal_state(p0, float(v))
        T_prime = m.stage1_duration(p0, float(v)) - p0.tau
        expect = 2 * m.inflated_radius(p0, float(v), p0.tau) / T_prime
        if term.t_prime != 0.0 or abs(term.v_y_T - expect) > 1e-9:
            problems.append(f"v={v:.2f}")
        acc = {m.trajectory_state(p0, float(v), s).a_y for s in np.linspace(0, T_prime, 7)}
        if max(acc) - min(acc) > 1e-9:
            problems.append(f"non-constant a_y at v={v:.2f}")
    wide = FlightParams(R=1e6)
    sol = max_safe_speed(wide, CFG)
    rel = abs(sol.v_safe - m.stage1_speed_limit(wide)) / m.stage1_speed_limit(wide)
    ok = not problems and sol.binding == "stage1" and rel <= 1e-6
    check(4, ok, f"e=0 issues {problems or 'none'}; R=1e6 rel diff {rel:.1e}, binding {sol.binding}")


def test_c05_stage1_bound():
    v = m.stage1_speed_limit(DEFAULTS)
    ref = stage1_root(0.1, 0.37, 20.0, 6.0, 0.01)
    check(5, abs(v - 24.82) <= 0.01 and abs(v - ref) <= 1e-6,
          f"v_x_max {v:.4f} m/s, residual bisection {ref:.4f}")


MONO_GRIDS = {
    "tau": (np.linspace(0.0, 0.03, 8), -1),
    "e": (np.linspace(0.0, 0.03, 8), -1),
    "r": (np.linspace(0.05, 0.3, 8), -1),
    "d": (np.linspace(0.2, 0.6, 8), -1),
    "S": (np.linspace(4.0, 12.0, 8), +1),
    "R": (np.linspace(2.5, 4.0, 8), +1),
    "a_max": (np.linspace(10.0, 30.0, 8), +1),
    "j_max": (np.linspace(60.0, 200.0, 8), +1),
}


def test_c06_monotonicity():
    slack = 2 * CFG.v_tolerance
    broken = []
    for param, (grid, sign) in MONO_GRIDS.items():
        res = sweep(SweepSpec(DEFAULTS, param, tuple(grid)), CFG)
        v = np.array([row.v_safe for row in res.rows])
        if np.any(sign * np.diff(v) < -slack):
            broken.append(f"{param} {np.round(v, 2).tolist()}")
    check(6, not broken, "violations: " + ("; ".join(broken) if broken else "none"))


def test_c07_scaling_covariance():
    rng = np.random.default_rng(11)
    worst = 0.0
    for p in [DEFAULTS, *random_params(rng, 4)]:
        base = max_safe_speed(p, CFG).v_safe
        for k in (0.5, 2.0, 5.0):
            q = p.replace(r=k * p.r, d=k * p.d, R=k * p.R, S=k * p.S,
                          a_max=k * p.a_max, j_max=k * p.j_max)
            scaled = max_safe_speed(q, SolverConfig(v_tolerance=k * CFG.v_tolerance)).v_safe
            if base > 0:
                worst = max(worst, abs(scaled - k * base) / (k * base))
    check(7, worst <= 1e-6, f"max relative deviation {worst:.2e}")


def test_c08_two_stage_structure():
    sol = max_safe_speed(DEFAULTS, CFG)
    peak = saturation_ratio_peak(DEFAULTS)
    # without a second crossing the infeasible band runs up to v_x_max
    upper = sol.v2 if sol.v2 is not None else sol.v_x_max
    ok = (sol.v1 is not None and sol.v1 < sol.v_x_max and sol.binding == "stage2"
          and 8.5 <= sol.v1 <= 9.5 and sol.v1 <= peak <= upper)
    check(8, ok, f"v1 {sol.v1:.4f}, v2 {sol.v2}, v_x_max {sol.v_x_max:.4f}, t'/T argmax {peak:.4f}")


def test_c09_drift_sweep_shape():
    grid = tuple(np.linspace(0.0, 0.03, 7))
    wide = sweep(SweepSpec(DEFAULTS.replace(R=3.5), "e", grid), CFG).rows
    narrow = sweep(SweepSpec(DEFAULTS.replace(R=2.5), "e", grid), CFG).rows
    ok = wide[0].binding == "stage1" and all(r.binding == "stage2" for r in narrow if r.value >= 0.005)
    check(9, ok, "R=3.5 bindings " + ",".join(r.binding for r in wide)
          + " | R=2.5 bindings " + ",".join(r.binding for r in narrow))


def test_c10_interior_peak():
    lm = LatencyModel(tau0=0.002, c_S=0.001, c_e=0.00005, e0=0.002)
    e_grid, S_grid = np.linspace(0.0, 0.03, 13), np.linspace(4.0, 12.0, 9)
    res = coupling_surface(DEFAULTS, e_grid, S_grid, lm, CFG)
    corner = (float(e_grid[0]), float(S_grid[-1]))
    check(10, tuple(res.argmax) != corner, f"argmax (e, S) = {tuple(res.argmax)}, corner {corner}")


def test_c11_simulator_convergence():
    coarse = empirical_max_speed(DEFAULTS, SimConfig(dt=1e-4))
    fine = empirical_max_speed(DEFAULTS, SimConfig(dt=5e-5))
    diff = abs(coarse.v_max - fine.v_max)
    check(11, diff <= 0.02, f"v_max {coarse.v_max:.4f} vs {fine.v_max:.4f}, diff {diff:.4f}")
