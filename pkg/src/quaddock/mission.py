"""Three-phase docking state machine, Safety-Period gate and touchdown predicate."""

from __future__ import annotations

import csv
import enum
import math
from collections import deque
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import MissionSection, PlatformSection, SpSection, ValidationError
from .perception import TagMeasurement
from .world import PlatformState, UavState


class Phase(str, enum.Enum):
    ACQUISITION = "Acquisition"
    TRACKING = "Tracking"
    LANDING = "Landing"
    DOCKED = "Docked"
    ABORTED = "Aborted"


class MissionEvent(str, enum.Enum):
    TAG_ACQUIRED = "TagAcquired"
    TAG_LOST = "TagLost"
    SP_SATISFIED = "SpSatisfied"
    SP_REVOKED = "SpRevoked"
    TOUCHDOWN = "Touchdown"
    FOV_VIOLATION = "FovViolation"
    TIMEOUT = "Timeout"


ALLOWED_TRANSITIONS = {
    Phase.ACQUISITION: {Phase.TRACKING, Phase.ABORTED},
    Phase.TRACKING: {Phase.LANDING, Phase.ABORTED},
    Phase.LANDING: {Phase.TRACKING, Phase.DOCKED, Phase.ABORTED},
    Phase.DOCKED: set(),
    Phase.ABORTED: set(),
}

TERMINAL = (Phase.DOCKED, Phase.ABORTED)


def is_valid_trace(phases: Sequence[Phase]) -> bool:
    """True if consecutive distinct phases follow allowed transitions from Acquisition."""
    if not phases:
        return True
    if Phase(phases[0]) is not Phase.ACQUISITION:
        return False
    prev = Phase(phases[0])
    for ph in phases[1:]:
        ph = Phase(ph)
        if ph is prev:
            continue
        if ph not in ALLOWED_TRANSITIONS[prev]:
            return False
        prev = ph
    return True


# --------------------------------------------------------------------------
# Safety-Period window
# --------------------------------------------------------------------------


class SpWindow:
    """Time-stamped samples covering the most recent ``t_s`` seconds.

    Each sample stores ``|e|^2``, ``|omega_t|``, ``|phi_t|`` and ``|theta_t|``.
    Running trapezoid sums make every query O(1); the window integral is cut
    exactly at ``t - t_s`` by linear interpolation inside the oldest segment.
    The window is warm once the oldest sample is at or before ``t - t_s``.
    """

    _EPS = 1e-9

    def __init__(self, t_s: float):
        if not t_s > 0:
            raise ValidationError("sp.t_s", f"must be > 0, got {t_s!r}")
        self.t_s = float(t_s)
        self.clear()

    def clear(self) -> None:
        self._samples: deque[tuple[float, float, float, float, float]] = deque()
        self._sums = [0.0, 0.0, 0.0, 0.0]

    def __len__(self) -> int:
        return len(self._samples)

    @property
    def t_last(self) -> float | None:
        return self._samples[-1][0] if self._samples else None

    def push(self, t: float, e, omega_norm: float, roll_abs: float, pitch_abs: float) -> None:
        e = np.asarray(e, dtype=float)
        sample = (float(t), float(e @ e), float(omega_norm), abs(float(roll_abs)), abs(float(pitch_abs)))
        if self._samples:
            last = self._samples[-1]
            if sample[0] <= last[0]:
                raise ValidationError("sp.t", f"timestamps must increase ({sample[0]} <= {last[0]})")
            h = sample[0] - last[0]
            for i in range(4):
                self._sums[i] += 0.5 * h * (last[i + 1] + sample[i + 1])
        self._samples.append(sample)
        start = sample[0] - self.t_s
        # keep exactly one sample at or before the window start
        while len(self._samples) >= 2 and self._samples[1][0] <= start + self._EPS:
            a, b = self._samples[0], self._samples[1]
            h = b[0] - a[0]
            for i in range(4):
                self._sums[i] -= 0.5 * h * (a[i + 1] + b[i + 1])
            self._samples.popleft()

    @property
    def warmed(self) -> bool:
        if len(self._samples) < 2:
            return False
        return self._samples[0][0] <= self._samples[-1][0] - self.t_s + self._EPS

    @property
    def status(self) -> str:
        return "ready" if self.warmed else "warming"

    def _window_integrals(self) -> list[float]:
        a, b = self._samples[0], self._samples[1]
        start = self._samples[-1][0] - self.t_s
        out = list(self._sums)
        cut = start - a[0]
        if cut > 0.0:
            h = b[0] - a[0]
            w = cut / h
            for i in range(4):
                # area of the trapezoid between a and the interpolated point at `start`
                mid = a[i + 1] + w * (b[i + 1] - a[i + 1])
                out[i] -= 0.5 * cut * (a[i + 1] + mid)
        return out

    def mean_square_error(self) -> float:
        return self._window_integrals()[0] / self.t_s

    def mean_stability(self, w_omega: float, w_phi: float, w_theta: float) -> float:
        _, i_omega, i_phi, i_theta = self._window_integrals()
        return (w_omega * i_omega + w_phi * i_phi + w_theta * i_theta) / self.t_s


# relative slack absorbing quadrature rounding on the pass/fail boundary
_SLACK = 1e-9


def sp_error_check(window: SpWindow, eps_p: float) -> bool:
    """Tracking-accuracy condition: RMS of ``|e|`` over the window <= ``eps_p``.

    False while the window is still warming up.
    """
    if not window.warmed:
        return False
    return math.sqrt(max(window.mean_square_error(), 0.0)) <= eps_p * (1.0 + _SLACK)


def sp_stability_check(window: SpWindow, w_omega: float, w_phi: float, w_theta: float,
                       eps_t: float) -> bool:
    """Platform-stability condition on the windowed mean of
    ``w_omega |omega| + w_phi |phi| + w_theta |theta|``."""
    if not window.warmed:
        return False
    return window.mean_stability(w_omega, w_phi, w_theta) <= eps_t * (1.0 + _SLACK)


# --------------------------------------------------------------------------
# Setpoints and touchdown
# --------------------------------------------------------------------------


def altitude_setpoint(phase: Phase, z_q: float, z_t: float, delta_a: float, delta_t: float) -> float | None:
    """Altitude reference for the phase; None for terminal phases."""
    if not (delta_a > delta_t > 0):
        raise ValidationError("mission.delta_a", f"need delta_a > delta_t > 0, got {delta_a}, {delta_t}")
    phase = Phase(phase)
    if phase is Phase.ACQUISITION:
        return z_q + delta_a
    if phase is Phase.TRACKING:
        return z_q + delta_t
    if phase is Phase.LANDING:
        return z_t
    return None


@dataclass(frozen=True)
class TouchdownLimits:
    half_length: float = 0.25
    half_width: float = 0.20
    v_max: float = 0.6
    contact_tol: float = 0.03

    @classmethod
    def from_config(cls, platform: PlatformSection, mission: MissionSection) -> "TouchdownLimits":
        return cls(platform.plate_half_length, platform.plate_half_width, mission.v_td_max, mission.contact_tol)


def plate_offset(uav: UavState, platform: PlatformState, plate_height: float = 0.05) -> tuple[float, float, float]:
    """UAV offset from the plate centre in the platform heading frame: (along, across, up)."""
    yaw = platform.attitude.yaw
    c, s = math.cos(yaw), math.sin(yaw)
    a = platform.attitude
    # plate centre; small-angle tilt is ignored for the in-plane offset
    top_z = platform.position[2] + plate_height * math.cos(a.roll) * math.cos(a.pitch)
    dx = uav.position[0] - platform.position[0]
    dy = uav.position[1] - platform.position[1]
    return (c * dx + s * dy, -s * dx + c * dy, float(uav.position[2] - top_z))


def touchdown_check(uav: UavState, platform: PlatformState, limits: TouchdownLimits,
                    plate_height: float = 0.05) -> bool:
    """Contact on the plate inside its half-extents at a gentle relative descent rate."""
    along, across, rel_h = plate_offset(uav, platform, plate_height)
    rel_vz = float(uav.velocity[2] - platform.velocity[2])
    return (abs(along) <= limits.half_length and abs(across) <= limits.half_width
            and abs(rel_vz) <= limits.v_max and rel_h <= limits.contact_tol)


# --------------------------------------------------------------------------
# State machine
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MissionState:
    phase: Phase = Phase.ACQUISITION
    docking: int = 0
    t_start: float = 0.0
    tag_lost_since: float | None = None
    reason: str = ""


@dataclass(frozen=True)
class Sensors:
    """Inputs the state machine sees at one control step.

    ``e`` is the measured tracking error w.r.t. the current reference (None
    without a tag), ``contact`` is None until the UAV reaches the plate, then
    the touchdown verdict.
    """

    tag: TagMeasurement | None = None
    e: np.ndarray | None = None
    z_q: float | None = None
    z_t: float | None = None
    uav_z: float = 0.0
    ground_z: float = 0.0
    contact: bool | None = None
    contact_reason: str = ""
    fault: str = ""


@dataclass(frozen=True)
class Commands:
    phase: Phase
    docking: int
    z_setpoint: float | None


def mission_step(state: MissionState, sensors: Sensors, sp: SpWindow, mission: MissionSection,
                 sp_cfg: SpSection, d_s: float, t: float, t_max: float = math.inf
                 ) -> tuple[MissionState, Commands, list[tuple[MissionEvent, str]]]:
    """Advance the docking state machine by one control step.

    The SP window is fed here (one sample per step while a tag is visible)
    and cleared whenever the tag is lost, so landing is only authorised on
    a fully warmed window.
    """
    events: list[tuple[MissionEvent, str]] = []
    phase = state.phase

    def finish(new: MissionState) -> tuple[MissionState, Commands, list]:
        z = None
        if new.phase not in TERMINAL and sensors.z_q is not None:
            z_t = sensors.z_t if sensors.z_t is not None else sensors.z_q
            z = altitude_setpoint(new.phase, sensors.z_q, z_t, mission.delta_a, mission.delta_t)
        return new, Commands(new.phase, new.docking, z), events

    if phase in TERMINAL:
        return finish(state)

    if sensors.fault:
        return finish(replace(state, phase=Phase.ABORTED, reason=sensors.fault))

    if t - state.t_start > t_max:
        events.append((MissionEvent.TIMEOUT, phase.value))
        return finish(replace(state, phase=Phase.ABORTED, reason="timeout"))

    tag = sensors.tag
    if phase is Phase.ACQUISITION:
        if tag is not None and sensors.e is not None:
            r = math.hypot(float(sensors.e[0]), float(sensors.e[1]))
            if r <= mission.handover_factor * d_s:
                events.append((MissionEvent.TAG_ACQUIRED, f"r={r:.3f}"))
                sp.clear()
                _push(sp, t, sensors, mission)
                return finish(replace(state, phase=Phase.TRACKING, docking=1, tag_lost_since=None))
        return finish(state)

    # Tracking / Landing
    if phase is Phase.LANDING and sensors.contact is not None:
        if sensors.contact:
            events.append((MissionEvent.TOUCHDOWN, ""))
            return finish(replace(state, phase=Phase.DOCKED))
        return finish(replace(state, phase=Phase.ABORTED, reason=sensors.contact_reason or "bad_touchdown"))

    if phase is Phase.TRACKING and sensors.uav_z - sensors.ground_z < mission.z_min:
        return finish(replace(state, phase=Phase.ABORTED, reason="altitude_floor"))

    if tag is None or sensors.e is None:
        lost_since = state.tag_lost_since
        if lost_since is None:
            events.append((MissionEvent.TAG_LOST, phase.value))
            lost_since = t
            sp.clear()
        if t - lost_since > mission.tag_loss_timeout:
            return finish(replace(state, phase=Phase.ABORTED, reason="tag_lost", tag_lost_since=lost_since))
        if phase is Phase.LANDING:
            events.append((MissionEvent.SP_REVOKED, "tag_lost"))
            return finish(replace(state, phase=Phase.TRACKING, tag_lost_since=lost_since))
        return finish(replace(state, tag_lost_since=lost_since))

    state = replace(state, tag_lost_since=None)
    _push(sp, t, sensors, mission)
    sp_ok = (sp_error_check(sp, sp_cfg.eps_p)
             and sp_stability_check(sp, sp_cfg.w_omega, sp_cfg.w_phi, sp_cfg.w_theta, sp_cfg.eps_t))
    if phase is Phase.TRACKING and sp_ok:
        events.append((MissionEvent.SP_SATISFIED, ""))
        return finish(replace(state, phase=Phase.LANDING))
    if phase is Phase.LANDING and not sp_ok:
        events.append((MissionEvent.SP_REVOKED, sp.status))
        return finish(replace(state, phase=Phase.TRACKING))
    return finish(state)


def _push(sp: SpWindow, t: float, sensors: Sensors, mission: MissionSection) -> None:
    tag = sensors.tag
    e = np.asarray(sensors.e, dtype=float)
    if mission.sp_horizontal_only:
        e = np.array([e[0], e[1], 0.0])
    omega = np.asarray(tag.omega, dtype=float)
    if sp.t_last is not None and t <= sp.t_last:
        return
    sp.push(t, e, float(np.linalg.norm(omega)), tag.attitude.roll, tag.attitude.pitch)


EVENT_LOG_COLUMNS = ("t_s", "phase", "event", "reason")


def write_event_log(rows: Iterable[tuple], path: str | Path) -> Path:
    """Mission event CSV: time, phase after the step, event name, reason."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(EVENT_LOG_COLUMNS)
        for t, phase, event, reason in rows:
            w.writerow([f"{t:.4f}", Phase(phase).value, MissionEvent(event).value, reason])
    return path
