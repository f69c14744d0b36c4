"""Maximum safe speed: feasibility crossings, sweeps and the latency surface."""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .model import (
    MODES,
    PARAM_NAMES,
    SLACK,
    FlightParams,
    Mode,
    TerminalState,
    accel_switch_time,
    stage1_duration,
    stage1_speed_limit,
    stage2_max_terminal_vy,
    terminal_state,
)


@dataclass(frozen=True)
class SolverConfig:
    grid_points: int = 512
    v_tolerance: float = 1e-4
    mode: Mode = "paper"

    def __post_init__(self):
        if self.grid_points < 64:
            raise ValueError(f"grid_points must be >= 64, got {self.grid_points}")
        if not self.v_tolerance > 0:
            raise ValueError(f"v_tolerance must be positive, got {self.v_tolerance}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")


@dataclass(frozen=True)
class Crossings:
    v1: Optional[float] = None
    v2: Optional[float] = None


@dataclass(frozen=True)
class SpeedSolution:
    v_safe: float
    v_x_max: float
    v1: Optional[float]
    v2: Optional[float]
    binding: str  # "stage1" | "stage2" | "latency"
    terminal: Optional[TerminalState]
    saturation_ratio_peak: Optional[float] = None


def params_hash(p: FlightParams) -> str:
    """Short stable digest of the resolved parameters."""
    blob = json.dumps(p.as_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def stage2_margin(p: FlightParams, v_x: float, mode: Mode = "paper") -> float:
    """``v_y(T) - v_y_max(T)``; positive means stage 2 overshoots.

    Where no terminal speed is admissible the margin is ``+inf``.
    """
    term = terminal_state(p, v_x, mode)
    if term.v_y_max_T is None:
        return math.inf
    return term.v_y_T - term.v_y_max_T


def _bisect_crossing(g: Callable[[float], float], lo: float, hi: float, tol: float,
                     rising: bool) -> float:
    """Locate a sign change of ``g`` in ``[lo, hi]``.

    For a rising crossing (``g(lo) <= 0 < g(hi)``) the feasible end ``lo`` is
    returned; for a falling one the feasible end ``hi``.
    """
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        bad = g(mid) > SLACK
        if bad == rising:
            hi = mid
        else:
            lo = mid
    return lo if rising else hi


def find_crossings(p: FlightParams, cfg: SolverConfig = SolverConfig()) -> Crossings:
    """First rising and next falling crossing of the stage-2 margin on ``(0, v_x_max]``."""
    v_x_max = stage1_speed_limit(p)
    g = lambda v: stage2_margin(p, v, cfg.mode)
    grid = v_x_max * np.arange(1, cfg.grid_points + 1) / cfg.grid_points
    bad = [g(float(v)) > SLACK for v in grid]

    # the v -> 0 limit: T grows without bound, v_y(T) -> 0 and y(T) -> r + d + e (S - d)
    y_lim = p.r + p.d + p.e * (p.S - p.d)
    prev_bad = stage2_max_terminal_vy(p, y_lim, cfg.mode) is None
    prev_v = 0.0
    # no admissible speed even as v -> 0: the first crossing sits at zero
    v1 = 0.0 if prev_bad else None
    v2 = None
    for v, is_bad in zip(grid, bad):
        v = float(v)
        if v1 is None and is_bad and not prev_bad:
            lo = prev_v if prev_v > 0 else v * 1e-9
            v1 = _bisect_crossing(g, lo, v, cfg.v_tolerance, rising=True)
        elif v1 is not None and not is_bad and prev_bad:
            lo = prev_v if prev_v > 0 else v * 1e-9
            v2 = _bisect_crossing(g, lo, v, cfg.v_tolerance, rising=False)
            break
        prev_bad, prev_v = is_bad, v
    return Crossings(v1, v2)


def saturation_ratio(p: FlightParams, v_x: float, mode: Mode = "paper") -> float:
    """Fraction of stage 1 flown at saturated acceleration, ``t' / T``."""
    return accel_switch_time(p, v_x, mode) / stage1_duration(p, v_x)


def saturation_ratio_peak(p: FlightParams, grid_points: int = 512, mode: Mode = "paper") -> float:
    """Grid argmax of :func:`saturation_ratio` over ``(0, v_x_max]``."""
    v_x_max = stage1_speed_limit(p)
    grid = v_x_max * np.arange(1, grid_points + 1) / grid_points
    ratios = [saturation_ratio(p, float(v), mode) for v in grid]
    return float(grid[int(np.argmax(ratios))])


def max_safe_speed(p: FlightParams, cfg: SolverConfig = SolverConfig()) -> SpeedSolution:
    """Largest forward speed that clears both stages.

    The feasible band above ``v2`` is never returned: speeds past ``v1`` are
    rejected outright.
    """
    v_x_max = stage1_speed_limit(p)
    cross = find_crossings(p, cfg)
    peak = saturation_ratio_peak(p, cfg.grid_points, cfg.mode)
    if cross.v1 is not None and cross.v1 < v_x_max:
        if cross.v1 <= 0.0:
            return SpeedSolution(0.0, v_x_max, cross.v1, cross.v2, "stage2", None, peak)
        v_safe, binding = cross.v1, "stage2"
    else:
        v_safe, binding = v_x_max, "stage1"
    return SpeedSolution(
        v_safe=v_safe,
        v_x_max=v_x_max,
        v1=cross.v1,
        v2=cross.v2,
        binding=binding,
        terminal=terminal_state(p, v_safe, cfg.mode),
        saturation_ratio_peak=peak,
    )


@dataclass(frozen=True)
class SweepSpec:
    base: FlightParams
    param: str
    values: Sequence[float]
    simulate: bool = False

    def __post_init__(self):
        if self.param not in PARAM_NAMES:
            raise ValueError(f"param must be one of {PARAM_NAMES}, got {self.param!r}")
        vals = list(self.values)
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("sweep values must be strictly increasing")


@dataclass
class SweepRow:
    param: str
    value: float
    v_safe: Optional[float] = None
    binding: Optional[str] = None
    v1: Optional[float] = None
    v2: Optional[float] = None
    empirical: Optional[float] = None
    rel_err: Optional[float] = None
    params_hash: Optional[str] = None
    error: Optional[str] = None


@dataclass
class SweepResult:
    param: str
    rows: list = field(default_factory=list)


def _solve_row(spec: SweepSpec, value: float, cfg: SolverConfig,
               empirical: Optional[Callable[[FlightParams], float]]) -> SweepRow:
    row = SweepRow(spec.param, float(value))
    try:
        p = spec.base.replace(**{spec.param: float(value)})
        row.params_hash = params_hash(p)
        sol = max_safe_speed(p, cfg)
        row.v_safe, row.binding, row.v1, row.v2 = sol.v_safe, sol.binding, sol.v1, sol.v2
        if empirical is not None:
            row.empirical = empirical(p)
            if row.empirical > 0:
                row.rel_err = abs(row.v_safe - row.empirical) / row.empirical
    except (ValueError, ArithmeticError) as exc:
        row.error = f"{type(exc).__name__}: {exc}"
    return row


def sweep(spec: SweepSpec, cfg: SolverConfig = SolverConfig(),
          empirical: Optional[Callable[[FlightParams], float]] = None,
          workers: int = 1) -> SweepResult:
    """Solve each grid value independently; failures are kept in-row.

    ``empirical`` maps resolved parameters to a measured maximum speed and is
    only consulted when ``spec.simulate`` is set.
    """
    emp = empirical if spec.simulate else None
    job = lambda v: _solve_row(spec, v, cfg, emp)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(job, spec.values))
    else:
        rows = [job(v) for v in spec.values]
    return SweepResult(spec.param, rows)


@dataclass(frozen=True)
class LatencyModel:
    """Latency as a function of drift rate and sensing range.

    ``tau(e, S) = tau0 + c_S * S + c_e / (e + e0)``: better localization
    and longer range both cost time.  The defaults are demo values.
    """

    tau0: float = 0.002
    c_S: float = 0.001
    c_e: float = 0.00005
    e0: float = 0.002

    def __post_init__(self):
        for name in ("tau0", "c_S", "c_e"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not self.e0 > 0:
            raise ValueError("e0 must be positive")

    def __call__(self, e: float, S: float) -> float:
        return self.tau0 + self.c_S * S + self.c_e / (e + self.e0)


@dataclass
class SurfaceResult:
    e_grid: list
    S_grid: list
    tau: np.ndarray       # shape (len(S_grid), len(e_grid))
    v_safe: np.ndarray    # same shape
    argmax: tuple         # (e, S)


def coupling_surface(p_base: FlightParams, e_grid: Sequence[float], S_grid: Sequence[float],
                     lm: LatencyModel = LatencyModel(), cfg: SolverConfig = SolverConfig()) -> SurfaceResult:
    e_grid = [float(e) for e in e_grid]
    S_grid = [float(S) for S in S_grid]
    if not e_grid or not S_grid:
        raise ValueError("surface grids must be non-empty")
    tau = np.empty((len(S_grid), len(e_grid)))
    v = np.full_like(tau, np.nan)
    for i, S in enumerate(S_grid):
        for j, e in enumerate(e_grid):
            tau[i, j] = lm(e, S)
            try:
                v[i, j] = max_safe_speed(p_base.replace(e=e, S=S, tau=tau[i, j]), cfg).v_safe
            except (ValueError, ArithmeticError):
                pass
    i, j = np.unravel_index(np.nanargmax(v), v.shape)
    return SurfaceResult(e_grid, S_grid, tau, v, (e_grid[j], S_grid[i]))
