"""Closed-form flight-envelope model.

Lateral obstacle avoidance for a UAV cruising at constant forward speed
``v_x``.  Stage 1 steers away from an obstacle straight ahead whose apparent
half-width grows with localization drift; stage 2 reverses the lateral
velocity under a jerk limit before reaching the neighbouring obstacle.

Every function here is a pure function of its arguments.  Time inside the
stage-1 trajectory is measured from control onset (``s``), i.e. absolute
time since detection is ``tau + s`` and the control window is
``[0, T - tau)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Mapping, Optional

Mode = Literal["paper", "exact"]
MODES = ("paper", "exact")

# Absolute slack (SI units) for every feasibility comparison.
SLACK = 1e-9


class InfeasibleLatency(ValueError):
    """The UAV gets no control time: ``T <= tau`` for the candidate speed."""


def total_latency(components: Mapping[str, float] | None) -> float:
    """Sum named latency terms (seconds). Empty or ``None`` gives 0."""
    if not components:
        return 0.0
    for name, value in components.items():
        if value < 0:
            raise ValueError(f"latency component {name!r} is negative: {value}")
    # math.fsum keeps the result independent of summation order
    return math.fsum(components.values())


@dataclass(frozen=True)
class FlightParams:
    """Scenario parameters.

    Attributes:
        r: obstacle half-width (m).
        d: safety / inflation distance (m).
        a_max: lateral acceleration limit (m/s^2).
        j_max: lateral jerk limit (m/s^3).
        R: mean obstacle spacing (m).
        e: drift rate, lateral map error per metre of forward travel.
        S: sensing range (m).
        tau: total latency (s).
        latency_components: optional named latency terms; when given,
            ``tau`` must equal their sum.
    """

    r: float = 0.1
    d: float = 0.37
    a_max: float = 20.0
    j_max: float = 120.0
    R: float = 3.0
    e: float = 0.01
    S: float = 6.0
    tau: float = 0.01
    latency_components: Optional[Mapping[str, float]] = field(default=None, compare=False)

    def __post_init__(self):
        for name, value in self.as_dict().items():
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}")
        checks = [
            ("r", self.r > 0, "r > 0"),
            ("d", self.d > 0, "d > 0"),
            ("a_max", self.a_max > 0, "a_max > 0"),
            ("j_max", self.j_max > 0, "j_max > 0"),
            ("S", self.S > self.d, "S > d"),
            ("R", self.R > self.r + self.d, "R > r + d"),
            ("e", self.e >= 0, "e >= 0"),
            ("tau", self.tau >= 0, "tau >= 0"),
        ]
        for name, ok, relation in checks:
            if not ok:
                raise ValueError(f"{name}: violates {relation} ({self.as_dict()})")
        if self.latency_components is not None:
            total = total_latency(self.latency_components)
            if abs(total - self.tau) > 1e-12:
                raise ValueError(
                    f"tau: {self.tau} does not equal the latency component sum {total}"
                )

    @classmethod
    def from_latency(cls, components: Mapping[str, float], **kwargs) -> "FlightParams":
        return cls(tau=total_latency(components), latency_components=dict(components), **kwargs)

    def as_dict(self) -> dict:
        return {
            "r": self.r, "d": self.d, "a_max": self.a_max, "j_max": self.j_max,
            "R": self.R, "e": self.e, "S": self.S, "tau": self.tau,
        }

    def replace(self, **changes) -> "FlightParams":
        values = self.as_dict()
        values.update(changes)
        if "tau" not in changes and self.latency_components is not None:
            values["latency_components"] = self.latency_components
        return FlightParams(**values)


PARAM_NAMES = ("r", "d", "a_max", "j_max", "R", "e", "S", "tau")


@dataclass(frozen=True)
class DerivedParams:
    L: float
    T: float
    T_prime: float
    v_x: float


@dataclass(frozen=True)
class TrajectoryState:
    s: float
    y: float
    v_y: float
    a_y: float
    saturated: bool = False


@dataclass(frozen=True)
class TerminalState:
    """End of stage 1.

    ``v_y_max_T`` is ``None`` when no terminal lateral speed (not even zero)
    lets stage 2 stay inside the return distance.
    """

    y_T: float
    v_y_T: float
    t_prime: float
    v_y_max_T: Optional[float]
    saturated_throughout: bool = False

    @property
    def stage2_ok(self) -> bool:
        return self.v_y_max_T is not None and self.v_y_T <= self.v_y_max_T + SLACK


def return_distance(p: FlightParams) -> float:
    """Lateral room before the neighbouring obstacle, ``R - r - d``."""
    L = p.R - p.r - p.d
    if L <= 0:
        raise ValueError(f"R: violates R > r + d (L = {L})")
    return L


def stage1_duration(p: FlightParams, v_x: float) -> float:
    """Time from detection to reaching the inflated obstacle face."""
    if v_x <= 0:
        raise ValueError(f"v_x must be positive, got {v_x}")
    return (p.S - p.d) / v_x


def derive(p: FlightParams, v_x: float) -> DerivedParams:
    T = stage1_duration(p, v_x)
    return DerivedParams(L=return_distance(p), T=T, T_prime=T - p.tau, v_x=v_x)


def _control_window(p: FlightParams, v_x: float) -> float:
    T_prime = stage1_duration(p, v_x) - p.tau
    if T_prime <= 0:
        raise InfeasibleLatency(
            f"v_x={v_x}: stage-1 time {T_prime + p.tau:.6g} s does not exceed latency {p.tau} s"
        )
    return T_prime


def stage1_speed_limit(p: FlightParams) -> float:
    """Largest forward speed that can still sidestep the obstacle at a_max.

    Solves ``0.5 * a_max * ((S - d)/v - tau)**2 = r + d`` for ``v``.  The
    published rearrangement carries a minus sign in the denominator, which
    would make the bound negative; the plus sign below is the one the
    defining relation forces.
    """
    return (p.S - p.d) / (p.tau + math.sqrt(2.0 * (p.r + p.d) / p.a_max))


def inflated_radius(p: FlightParams, v_x: float, t: float) -> float:
    """Apparent obstacle half-width in the planner's map ``t`` s after detection."""
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    return p.r + p.d + p.e * v_x * t


def _closed_form(p: FlightParams, v_x: float, T_prime: float, s: float):
    """Unsaturated planner trajectory ``(y, v_y, a_y)`` at ``s`` in ``[0, T')``."""
    k = p.e * v_x
    r_tau = inflated_radius(p, v_x, p.tau)
    r_T = inflated_radius(p, v_x, p.tau + T_prime)
    u = T_prime - s
    if k == 0.0:
        log_term = 0.0
    else:
        # log(T'/u) without cancellation for small s
        log_term = -math.log1p(-s / T_prime)
    y = (
        r_T
        - 2.0 * k * u * log_term
        - k * u * u / T_prime
        - r_tau * (T_prime - s) * (T_prime + s) / T_prime**2
    )
    v_y = 2.0 * k * log_term - 2.0 * k * s / T_prime + 2.0 * r_tau * s / T_prime**2
    a_y = 2.0 * r_tau / T_prime**2
    if k != 0.0:
        a_y += 2.0 * k / u - 2.0 * k / T_prime
    return y, v_y, a_y


def planner_acceleration(p: FlightParams, v_x: float, T_prime: float, s: float,
                         y: float, v_y: float) -> float:
    """Acceleration that lands exactly on the inflated edge at the face.

    Re-plans from the current state: with ``u = T' - s`` remaining, the
    constant acceleration ``a`` solving
    ``a*u**2/2 + v_y*u = r'(tau + s) - y``.
    """
    u = T_prime - s
    return 2.0 * (inflated_radius(p, v_x, p.tau + s) - y - v_y * u) / (u * u)


def accel_switch_time(p: FlightParams, v_x: float, mode: Mode = "paper") -> float:
    """Duration of the final saturated (``a_y = a_max``) stretch of stage 1.

    ``paper`` uses the published expression, which leaves out the
    ``2 r'(tau) / T'^2`` offset of the planner acceleration.  ``exact`` solves
    ``a_y(T' - t') = a_max`` on the closed form.  When the planner already
    demands more than ``a_max`` at onset, ``exact`` returns ``T'`` itself
    (saturated throughout); see :func:`saturates_at_onset`.
    """
    _check_mode(mode)
    T_prime = _control_window(p, v_x)
    k = p.e * v_x
    if k == 0.0:
        return 0.0
    if mode == "paper":
        return 2.0 * k / (p.a_max + 2.0 * k / T_prime)
    denom = p.a_max + 2.0 * k / T_prime - 2.0 * inflated_radius(p, v_x, p.tau) / T_prime**2
    if denom <= 0:
        return T_prime
    return min(2.0 * k / denom, T_prime)


def saturates_at_onset(p: FlightParams, v_x: float) -> bool:
    """True when the first planner command already exceeds ``a_max``."""
    T_prime = _control_window(p, v_x)
    return 2.0 * inflated_radius(p, v_x, p.tau) / T_prime**2 >= p.a_max


def trajectory_state(p: FlightParams, v_x: float, s: float, mode: Mode = "paper") -> TrajectoryState:
    """Stage-1 lateral state ``s`` seconds after control onset."""
    T_prime = _control_window(p, v_x)
    if not 0.0 <= s <= T_prime:
        raise ValueError(f"s={s} outside control window [0, {T_prime}]")
    t_sw = accel_switch_time(p, v_x, mode)
    s_sw = T_prime - t_sw
    if mode == "exact" and saturates_at_onset(p, v_x):
        return TrajectoryState(s, 0.5 * p.a_max * s * s, p.a_max * s, p.a_max, True)
    if p.e * v_x == 0.0:
        # no drift: constant acceleration, regular up to T'
        y, v_y, a_y = _closed_form(p, v_x, T_prime, s)
        return TrajectoryState(s, y, v_y, a_y, False)
    # keep the switch point off the log singularity when t' is below resolution
    s_sw = min(s_sw, math.nextafter(T_prime, 0.0))
    if s <= s_sw:
        y, v_y, a_y = _closed_form(p, v_x, T_prime, s)
        return TrajectoryState(s, y, v_y, a_y, False)
    y0, v0, _ = _closed_form(p, v_x, T_prime, s_sw)
    h = s - s_sw
    return TrajectoryState(s, y0 + v0 * h + 0.5 * p.a_max * h * h, v0 + p.a_max * h, p.a_max, True)


def stage2_max_terminal_vy(p: FlightParams, y_T: float, mode: Mode = "paper") -> Optional[float]:
    """Largest stage-1 terminal lateral speed stage 2 can absorb within ``L``.

    Stage 2 ramps acceleration from ``+a_max`` to ``-a_max`` at ``j_max`` and
    then brakes at ``-a_max``.  Its peak excursion is
    ``y_T + 2 a v/j + c a^3/j^2 + v^2/(2a)`` with ``c = 2`` as published
    (``paper``) or ``c = 2/3`` from integrating the ramp (``exact``).
    Returns ``None`` when even ``v = 0`` overshoots.
    """
    _check_mode(mode)
    if y_T < 0:
        raise ValueError(f"y_T must be non-negative, got {y_T}")
    a, j = p.a_max, p.j_max
    c0 = y_T + ramp_displacement(p, mode) - return_distance(p)
    if c0 > 0:
        return None
    b = 2.0 * a / j
    disc = b * b - 2.0 * c0 / a
    if disc < 0:
        return None
    root = a * (-b + math.sqrt(disc))
    return max(root, 0.0)


def ramp_displacement(p: FlightParams, mode: Mode = "paper") -> float:
    """Velocity-independent displacement of the stage-2 jerk ramp."""
    coeff = 2.0 if mode == "paper" else 2.0 / 3.0
    return coeff * p.a_max**3 / p.j_max**2


def stage2_excursion(p: FlightParams, y_T: float, v_y_T: float, mode: Mode = "paper") -> float:
    """Peak lateral position reached in stage 2."""
    a, j = p.a_max, p.j_max
    return y_T + 2.0 * a * v_y_T / j + ramp_displacement(p, mode) + v_y_T**2 / (2.0 * a)


def terminal_state(p: FlightParams, v_x: float, mode: Mode = "paper") -> TerminalState:
    """Lateral position and speed at the end of stage 1, plus the stage-2 bound."""
    if v_x <= 0:
        raise ValueError(f"v_x must be positive, got {v_x}")
    T_prime = _control_window(p, v_x)
    if mode == "exact" and saturates_at_onset(p, v_x):
        y_T = 0.5 * p.a_max * T_prime**2
        v_y_T = p.a_max * T_prime
        return TerminalState(y_T, v_y_T, T_prime, stage2_max_terminal_vy(p, y_T, mode), True)
    t_sw = accel_switch_time(p, v_x, mode)
    if t_sw == 0.0:
        y_T = inflated_radius(p, v_x, p.tau + T_prime)
        v_y_T = 2.0 * inflated_radius(p, v_x, p.tau) / T_prime
    else:
        s_sw = min(T_prime - t_sw, math.nextafter(T_prime, 0.0))
        h = T_prime - s_sw
        y0, v0, _ = _closed_form(p, v_x, T_prime, s_sw)
        y_T = y0 + v0 * h + 0.5 * p.a_max * h * h
        v_y_T = v0 + p.a_max * h
    return TerminalState(y_T, v_y_T, t_sw, stage2_max_terminal_vy(p, y_T, mode))


def stage2_feasible(p: FlightParams, v_x: float, mode: Mode = "paper") -> tuple[bool, str]:
    """Whether stage 2 fits inside ``L`` at forward speed ``v_x``.

    Returns ``(ok, reason)``; reason is one of ``"ok"``, ``"stage2"``
    (terminal speed too high), ``"no-room"`` (even zero terminal speed
    overshoots) or ``"latency"``.
    """
    try:
        term = terminal_state(p, v_x, mode)
    except InfeasibleLatency:
        return False, "latency"
    if term.v_y_max_T is None:
        return False, "no-room"
    if term.stage2_ok:
        return True, "ok"
    return False, "stage2"


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
