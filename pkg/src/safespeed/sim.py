"""Time-stepped lateral kinematics used as an independent check on the model.

The UAV is a point flying at constant ``v_x`` along ``y = 0``.  Lateral motion
is a double integrator driven by the re-planning law (stage 1) and a
jerk-limited reversal (stage 2).  Drift only distorts the planner's map;
collision verdicts use the true geometry.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .model import (
    SLACK,
    FlightParams,
    TrajectoryState,
    inflated_radius,
    planner_acceleration,
    return_distance,
    stage1_duration,
)

COLLISION_MODELS = ("excursion-bound", "explicit-obstacles")

CLEARED = "cleared"
COLLIDED_STAGE1 = "collided-stage1"
EXCEEDED_L = "exceeded-L-stage2"
INFEASIBLE_LATENCY = "infeasible-latency"


class StepTooLarge(ValueError):
    """The planner command jumps by more than ``a_max`` between two steps."""


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-4
    start_distance: float = 25.0
    latency: Optional[float] = None  # dead time (s); None means FlightParams.tau
    collision_model: str = "excursion-bound"
    bisection_tolerance: float = 0.02
    max_speed_probe: float = 64.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.collision_model not in COLLISION_MODELS:
            raise ValueError(f"collision_model must be one of {COLLISION_MODELS}")
        if not self.bisection_tolerance > 0:
            raise ValueError("bisection_tolerance must be positive")
        if not self.max_speed_probe > 1.0:
            raise ValueError("max_speed_probe must exceed the 1 m/s starting probe")
        if self.latency is not None and self.latency < 0:
            raise ValueError("latency must be non-negative")

    def dead_time(self, p: FlightParams) -> float:
        return p.tau if self.latency is None else self.latency


@dataclass(frozen=True)
class Obstacle:
    """Square obstacle of half-width ``r`` inflated by ``d`` on every side."""

    cx: float
    cy: float
    r: float
    d: float

    @property
    def half(self) -> float:
        return self.r + self.d

    def contains(self, x: float, y: float) -> bool:
        h = self.half - SLACK
        return abs(x - self.cx) < h and abs(y - self.cy) < h


@dataclass(frozen=True)
class WorldLayout:
    obstacles: tuple
    boundary_y: Optional[float] = None  # virtual wall for the excursion-bound model

    @property
    def primary(self) -> Obstacle:
        return self.obstacles[0]

    @classmethod
    def excursion_bound(cls, p: FlightParams, sc: SimConfig) -> "WorldLayout":
        return cls((Obstacle(sc.start_distance, 0.0, p.r, p.d),), return_distance(p))

    @classmethod
    def explicit(cls, p: FlightParams, sc: SimConfig) -> "WorldLayout":
        """Three obstacles: one ahead, one beside it at ``y = R``, one a spacing downstream."""
        x0 = sc.start_distance
        obs = (
            Obstacle(x0, 0.0, p.r, p.d),
            Obstacle(x0, p.R, p.r, p.d),
            Obstacle(x0 + p.R, 0.0, p.r, p.d),
        )
        for i, a in enumerate(obs):
            for b in obs[i + 1:]:
                if abs(a.cx - b.cx) < a.half + b.half and abs(a.cy - b.cy) < a.half + b.half:
                    raise ValueError("inflated obstacles overlap; increase R")
        return cls(obs, None)

    @classmethod
    def for_config(cls, p: FlightParams, sc: SimConfig) -> "WorldLayout":
        if sc.collision_model == "explicit-obstacles":
            return cls.explicit(p, sc)
        return cls.excursion_bound(p, sc)


@dataclass
class SimTrace:
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    vy: np.ndarray
    ay: np.ndarray
    r_inflated: np.ndarray
    phase: list

    def __len__(self):
        return len(self.t)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x", "y", "vy", "ay", "r_inflated", "phase"])
            for row in zip(self.t, self.x, self.y, self.vy, self.ay, self.r_inflated, self.phase):
                w.writerow([f"{v:.9g}" for v in row[:-1]] + [row[-1]])


@dataclass(frozen=True)
class SimVerdict:
    outcome: str
    y_max: float
    v_y_terminal: float  # lateral speed when passing the obstacle face

    @property
    def cleared(self) -> bool:
        return self.outcome == CLEARED


def _jerk_step(y, vy, ay, jerk, h):
    y += vy * h + 0.5 * ay * h * h + jerk * h**3 / 6.0
    vy += ay * h + 0.5 * jerk * h * h
    ay += jerk * h
    return y, vy, ay


def ode_reference_trajectory(p: FlightParams, v_x: float, dt: float) -> list[TrajectoryState]:
    """Integrate the re-planning law over the control window ``[0, T')``.

    The acceleration is recomputed from the current state every step,
    clamped to ``+-a_max`` and held over the step.
    """
    T_prime = stage1_duration(p, v_x) - p.tau
    if T_prime <= 0:
        raise ValueError(f"v_x={v_x}: no control time after latency")
    n = max(1, math.ceil(T_prime / dt - 1e-9))
    s = y = vy = 0.0
    out = []
    prev_a = None
    for k in range(n):
        h = min(dt, T_prime - s)
        u = T_prime - s
        if u > 1e-3 * dt or prev_a is None:
            a_cmd = planner_acceleration(p, v_x, T_prime, s, y, vy)
            a = min(max(a_cmd, -p.a_max), p.a_max)
        else:
            a = prev_a
        if prev_a is not None and abs(a - prev_a) > p.a_max:
            raise StepTooLarge(f"dt={dt} too coarse: command jumped {prev_a:.3g} -> {a:.3g} at s={s:.6g}")
        out.append(TrajectoryState(s, y, vy, a, abs(a) >= p.a_max))
        y, vy, _ = _jerk_step(y, vy, a, 0.0, h)
        s = (k + 1) * dt if k + 1 < n else T_prime
        prev_a = a
    out.append(TrajectoryState(T_prime, y, vy, prev_a, abs(prev_a) >= p.a_max))
    return out


class _Recorder:
    def __init__(self, enabled):
        self.enabled = enabled
        self.rows = []

    def add(self, *row):
        if self.enabled:
            self.rows.append(row)

    def add_block(self, t, x, phase, r_infl):
        if self.enabled:
            for ti, xi, ri in zip(t, x, r_infl):
                self.rows.append((ti, xi, 0.0, 0.0, 0.0, ri, phase))

    def trace(self) -> SimTrace:
        if not self.rows:
            cols = [np.empty(0)] * 6
            return SimTrace(*cols, [])
        cols = list(zip(*self.rows))
        return SimTrace(*(np.asarray(c, dtype=float) for c in cols[:6]), list(cols[6]))


def simulate_run(p: FlightParams, sc: SimConfig, layout: WorldLayout, v_x: float,
                 record: bool = True) -> tuple[SimTrace, SimVerdict]:
    """Fly one approach at forward speed ``v_x`` and classify the outcome."""
    if v_x <= 0:
        raise ValueError(f"v_x must be positive, got {v_x}")
    obs = layout.primary
    x_face_true = obs.cx - obs.r
    x_det = x_face_true - p.S
    if x_det < 0:
        raise ValueError(
            f"S={p.S} reaches past the start: obstacle face at {x_face_true} m needs start_distance >= S + r"
        )
    x_face = obs.cx - obs.half          # inflated face: end of stage 1
    dt, a_max, j_max = sc.dt, p.a_max, p.j_max
    tau = sc.dead_time(p)
    T = stage1_duration(p, v_x)
    t_det = x_det / v_x
    rec = _Recorder(record)
    r0 = p.r + p.d

    # cruise and dead time: no lateral command, sampled on the dt grid
    if record:
        t_cruise = np.arange(0.0, t_det, dt)
        rec.add_block(t_cruise, v_x * t_cruise, "cruise", np.full(len(t_cruise), r0))
        t_lat = t_det + np.arange(0.0, min(tau, T), dt)
        rec.add_block(t_lat, v_x * t_lat, "latency", r0 + p.e * v_x * (t_lat - t_det))

    if T <= tau:
        return rec.trace(), SimVerdict(INFEASIBLE_LATENCY, 0.0, 0.0)

    T_prime = T - tau
    # stage 1: re-planning against the drifting map
    s = y = vy = 0.0
    y_max = 0.0
    n = max(1, math.ceil(T_prime / dt - 1e-9))
    prev_a = None
    a = 0.0
    for k in range(n):
        h = min(dt, T_prime - s)
        u = T_prime - s
        if u > 1e-3 * dt or prev_a is None:
            a_cmd = planner_acceleration(p, v_x, T_prime, s, y, vy)
            a = min(max(a_cmd, -a_max), a_max)
        if prev_a is not None and abs(a - prev_a) > a_max:
            raise StepTooLarge(f"dt={dt} too coarse: command jumped {prev_a:.3g} -> {a:.3g}")
        t = t_det + tau + s
        rec.add(t, v_x * t, y, vy, a, inflated_radius(p, v_x, tau + s), "avoid")
        y, vy, _ = _jerk_step(y, vy, a, 0.0, h)
        y_max = max(y_max, y)
        s = (k + 1) * dt if k + 1 < n else T_prime
        prev_a = a
        if layout.boundary_y is None:
            for o in layout.obstacles:
                if o.contains(v_x * (t_det + tau + s), y):
                    return rec.trace(), SimVerdict(COLLIDED_STAGE1, y_max, vy)

    v_y_T = vy
    if y < r0 - SLACK or (layout.boundary_y is None and obs.contains(x_face, y)):
        return rec.trace(), SimVerdict(COLLIDED_STAGE1, y_max, v_y_T)

    # stage 2: command a_max, ramp down to -a_max at j_max, brake to v_y = 0
    t = t_det + T
    ay = a_max
    t_ramp = 2.0 * a_max / j_max
    elapsed = 0.0
    outcome = CLEARED
    while vy > 0.0:
        if elapsed < t_ramp - 1e-12:
            jerk = -j_max
            h = min(dt, t_ramp - elapsed)
        else:
            jerk, ay = 0.0, -a_max
            h = min(dt, vy / a_max)
        rec.add(t, v_x * t, y, vy, ay, inflated_radius(p, v_x, tau + T_prime + elapsed), "return")
        if jerk == 0.0 and h == vy / a_max:
            y += 0.5 * vy * h
            vy = 0.0
        else:
            y, vy, ay = _jerk_step(y, vy, ay, jerk, h)
        elapsed += h
        t += h
        if vy <= 0.0 and jerk != 0.0:
            # velocity returned to zero inside the ramp: the peak is here
            vy = 0.0
        y_max = max(y_max, y)
        if layout.boundary_y is not None:
            if y > layout.boundary_y + SLACK:
                outcome = EXCEEDED_L
                break
        elif any(o.contains(v_x * t, y) for o in layout.obstacles):
            outcome = EXCEEDED_L
            break
    rec.add(t, v_x * t, y, vy, ay, inflated_radius(p, v_x, tau + T_prime + elapsed), "done")
    return rec.trace(), SimVerdict(outcome, y_max, v_y_T)


@dataclass
class EmpiricalSpeedResult:
    v_max: float
    bracket: tuple  # (last cleared, first failed or None)
    n_runs: int
    verdicts: list = field(default_factory=list)  # (v_x, outcome) in probe order


class NonMonotoneVerdict(RuntimeError):
    """A faster probe cleared where a slower one failed."""


def _check_monotone(history: Iterable[tuple]) -> None:
    history = list(history)
    failed = [v for v, ok in history if not ok]
    cleared = [v for v, ok in history if ok]
    if failed and cleared and max(cleared) > min(failed):
        raise NonMonotoneVerdict(
            f"cleared at {max(cleared):.4f} m/s but failed at {min(failed):.4f} m/s; "
            "bisection assumes a single threshold"
        )


def empirical_max_speed(p: FlightParams, sc: SimConfig = SimConfig(),
                        layout: Optional[WorldLayout] = None) -> EmpiricalSpeedResult:
    """Largest forward speed the simulator clears, by doubling then bisection."""
    layout = layout or WorldLayout.for_config(p, sc)
    history = []
    verdicts = []

    def probe(v):
        _, verdict = simulate_run(p, sc, layout, v, record=False)
        history.append((v, verdict.cleared))
        verdicts.append((v, verdict.outcome))
        _check_monotone(history)
        return verdict.cleared

    v = 1.0
    if not probe(v):
        return EmpiricalSpeedResult(0.0, (0.0, v), len(history), verdicts)
    lo, hi = v, None
    while hi is None:
        v = min(2.0 * lo, sc.max_speed_probe)
        if probe(v):
            lo = v
            if v >= sc.max_speed_probe:
                return EmpiricalSpeedResult(lo, (lo, None), len(history), verdicts)
        else:
            hi = v
    while hi - lo > sc.bisection_tolerance:
        mid = 0.5 * (lo + hi)
        if probe(mid):
            lo = mid
        else:
            hi = mid
    return EmpiricalSpeedResult(lo, (lo, hi), len(history), verdicts)
