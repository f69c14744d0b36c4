import csv
import math

import numpy as np
import pytest

from oracles import integrate_planner
from safespeed import sim
from safespeed import model as m
from safespeed.model import FlightParams
from safespeed.sim import (
    CLEARED,
    COLLIDED_STAGE1,
    EXCEEDED_L,
    INFEASIBLE_LATENCY,
    NonMonotoneVerdict,
    Obstacle,
    SimConfig,
    StepTooLarge,
    WorldLayout,
    _check_monotone,
    empirical_max_speed,
    ode_reference_trajectory,
    simulate_run,
)
from safespeed.solver import SolverConfig, max_safe_speed
from safespeed.validation import validate_model

SC = SimConfig()


def run(p, v, sc=SC, record=True):
    return simulate_run(p, sc, WorldLayout.for_config(p, sc), v, record=record)


class TestSimConfig:
    @pytest.mark.parametrize("kw", [
        {"dt": 0.0}, {"collision_model": "voxels"}, {"bisection_tolerance": -1.0},
        {"max_speed_probe": 0.5}, {"latency": -0.01},
    ])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            SimConfig(**kw)

    def test_dead_time_override(self, defaults):
        assert SC.dead_time(defaults) == defaults.tau
        assert SimConfig(latency=0.05).dead_time(defaults) == 0.05


class TestOdeReference:
    def test_zero_drift_matches_closed_form(self):
        p = FlightParams(e=0.0)
        states = ode_reference_trajectory(p, 10.0, 1e-5)
        last = states[-1]
        assert last.y == pytest.approx(0.47, abs=1e-6)
        T_prime = m.stage1_duration(p, 10.0) - p.tau
        assert last.v_y == pytest.approx(2 * 0.47 / T_prime, rel=1e-4)
        assert last.v_y == pytest.approx(1.700, abs=1e-3)

    def test_drifting_terminal_speed(self, defaults):
        last = ode_reference_trajectory(defaults, 10.0, 1e-6)[-1]
        assert last.v_y == pytest.approx(2.479, abs=1e-2)

    def test_matches_oracle_before_saturation(self, defaults):
        v = 10.0
        T_prime = m.stage1_duration(defaults, v)
        s_check = 0.5 * T_prime
        states = ode_reference_trajectory(defaults, v, 1e-5)
        st = min(states, key=lambda q: abs(q.s - s_check))
        y_ref, vy_ref = integrate_planner(0.1, 0.37, 0.01, 0.01, 6.0, v, st.s)
        assert st.y == pytest.approx(y_ref, abs=1e-6)
        assert st.v_y == pytest.approx(vy_ref, abs=1e-5)

    def test_terminal_matches_exact_model(self, defaults):
        term = m.terminal_state(defaults, 10.0, mode="exact")
        last = ode_reference_trajectory(defaults, 10.0, 1e-5)[-1]
        assert last.y == pytest.approx(term.y_T, abs=1e-5)
        assert last.v_y == pytest.approx(term.v_y_T, abs=1e-4)

    def test_coarse_step_rejected(self, defaults, monkeypatch):
        # exact hold updates keep the real planner smooth, so force a chattering command
        calls = iter(range(10**6))
        monkeypatch.setattr(sim, "planner_acceleration",
                            lambda *a: 1e3 * (-1) ** next(calls))
        with pytest.raises(StepTooLarge):
            ode_reference_trajectory(defaults, 10.0, 0.01)

    def test_clamped(self, defaults):
        states = ode_reference_trajectory(defaults, 20.0, 1e-4)
        assert max(abs(q.a_y) for q in states) <= defaults.a_max


class TestSimulateRun:
    def test_slow_clears(self, defaults):
        _, v = run(defaults, 5.0)
        assert v.outcome == CLEARED
        assert v.y_max <= m.return_distance(defaults)

    def test_fast_exceeds(self, defaults):
        # exact-mode threshold for the defaults sits near 17.4 m/s
        _, v = run(defaults, 17.5)
        assert v.outcome == EXCEEDED_L

    def test_beyond_stage1_bound_collides(self):
        p = FlightParams(e=0.0, R=1e6)
        _, v = run(p, m.stage1_speed_limit(p) + 1.0)
        assert v.outcome == COLLIDED_STAGE1

    def test_latency_longer_than_window(self, defaults):
        _, v = run(defaults.replace(tau=10.0), 5.0)
        assert v.outcome == INFEASIBLE_LATENCY

    def test_range_past_start(self, defaults):
        with pytest.raises(ValueError, match="start_distance"):
            run(defaults.replace(S=30.0), 5.0)

    def test_trace_invariants(self, defaults):
        trace, verdict = run(defaults, 12.0)
        assert np.all(np.diff(trace.t) > 0)
        assert np.all(np.diff(trace.t) <= SC.dt + 1e-12)
        assert np.all(np.abs(trace.ay) <= defaults.a_max + 1e-9)
        assert verdict.y_max >= trace.y.max() - 1e-12
        ret = np.array([ph == "return" for ph in trace.phase])
        jerk = np.abs(np.diff(trace.ay[ret]) / np.diff(trace.t[ret]))
        assert jerk.max() <= defaults.j_max * (1 + 1e-6)
        assert set(trace.phase) == {"cruise", "latency", "avoid", "return", "done"}

    def test_terminal_speed_matches_model(self, defaults):
        _, verdict = run(defaults, 10.0, SimConfig(dt=1e-5), record=False)
        term = m.terminal_state(defaults, 10.0, mode="exact")
        assert verdict.v_y_terminal == pytest.approx(term.v_y_T, abs=1e-3)

    def test_drift_alone_changes_outcome(self):
        # same speed, drift on vs off: only the map drift differs
        v = 20.0
        assert run(FlightParams(e=0.0), v)[1].outcome == CLEARED
        assert run(FlightParams(e=0.01), v)[1].outcome == EXCEEDED_L

    def test_collision_geometry_ignores_drift(self):
        # drift only enters the planner's map; the true obstacles are the same
        for sc in (SC, SimConfig(collision_model="explicit-obstacles")):
            assert WorldLayout.for_config(FlightParams(e=0.0), sc) == \
                WorldLayout.for_config(FlightParams(e=0.03), sc)

    def test_trace_csv(self, defaults, tmp_path):
        trace, _ = run(defaults, 8.0)
        path = tmp_path / "trace.csv"
        trace.to_csv(path)
        with open(path) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["t", "x", "y", "vy", "ay", "r_inflated", "phase"]
        assert len(rows) == len(trace) + 1

    def test_explicit_layout_clears_slow(self, defaults):
        sc = SimConfig(collision_model="explicit-obstacles")
        _, v = run(defaults, 5.0, sc)
        assert v.outcome == CLEARED

    def test_explicit_layout_overlap(self, defaults):
        with pytest.raises(ValueError, match="overlap"):
            WorldLayout.explicit(defaults.replace(R=0.8), SC)


class TestObstacle:
    def test_boundary_is_not_inside(self):
        o = Obstacle(0.0, 0.0, 0.1, 0.37)
        assert o.contains(0.0, 0.0)
        assert not o.contains(0.47, 0.0)
        assert not o.contains(0.0, -0.47)


class TestEmpiricalSpeed:
    def test_defaults_near_exact_model(self, defaults):
        res = empirical_max_speed(defaults)
        model = max_safe_speed(defaults, SolverConfig(mode="exact")).v_safe
        assert res.v_max == pytest.approx(model, rel=0.01)
        lo, hi = res.bracket
        assert hi - lo <= SC.bisection_tolerance

    def test_open_world_drift_free(self):
        p = FlightParams(e=0.0, R=1e6)
        res = empirical_max_speed(p)
        assert res.v_max == pytest.approx(m.stage1_speed_limit(p), rel=0.05)

    def test_bracket_tightens(self, defaults):
        res = empirical_max_speed(defaults, SimConfig(bisection_tolerance=0.01))
        lo, hi = res.bracket
        assert lo <= res.v_max < hi and hi - lo <= 0.01
        assert res.n_runs == len(res.verdicts)

    @pytest.mark.slow
    @pytest.mark.parametrize("p", [FlightParams(e=0.03, tau=0.03), FlightParams(e=0.0, S=12.0)])
    def test_step_size_convergence_extremes(self, p):
        coarse = empirical_max_speed(p, SimConfig(dt=1e-4)).v_max
        fine = empirical_max_speed(p, SimConfig(dt=5e-5)).v_max
        assert abs(coarse - fine) <= SC.bisection_tolerance

    def test_monotone_check(self):
        _check_monotone([(1.0, True), (2.0, False), (1.5, True)])
        with pytest.raises(NonMonotoneVerdict):
            _check_monotone([(1.0, True), (2.0, False), (3.0, True)])


class TestValidation:
    def test_empty_grid(self, defaults):
        rep = validate_model(defaults, {})
        assert rep.max_error is None and rep.passed

    def test_drift_free_point(self, defaults):
        rep = validate_model(defaults, {"e": [0.0]})
        row = rep.panels["e"].rows[0]
        assert row.rel_err <= 0.05
        assert rep.passed
