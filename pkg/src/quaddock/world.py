"""Terrain tracks, kinematic quadruped platform and translational UAV dynamics."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .core import Attitude, PlatformSection, SimulationFault, ValidationError, rotation_matrix

TERRAIN_KINDS = ("flat", "stair_track", "slope_track")

# difficulty progression of the benchmark tracks
STEP_HEIGHT_0 = 0.10
STEP_HEIGHT_INC = 0.01
INCLINE_0 = 0.15
INCLINE_INC = 0.05


@dataclass(frozen=True)
class Terrain:
    """Height field made of equal-length sections laid out along +x.

    ``levels[k]`` is the step height (m) of a stair section or the incline
    (rad) of a slope section. Each section rises over its first half and
    falls back to zero over the second half; heights are independent of y
    and zero outside ``[0, total_length)``.
    """

    kind: str = "flat"
    section_length: float = 8.0
    levels: tuple = ()
    tread: float = 0.5
    steps_per_flight: int = 4

    @property
    def level_count(self) -> int:
        return max(len(self.levels), 1)

    @property
    def total_length(self) -> float:
        return self.level_count * self.section_length

    def level_at(self, x: float) -> int:
        if x < 0 or x >= self.total_length:
            return -1
        return int(x // self.section_length)


def make_track(kind: str, level_count: int, section_length: float = 8.0, *,
               tread: float = 0.5, steps_per_flight: int = 4) -> Terrain:
    """Benchmark track whose difficulty grows by one level per section.

    Stair level ``k`` has risers of ``0.10 + 0.01 k`` m; slope level ``k``
    has an incline of ``0.15 + 0.05 k`` rad.
    """
    if kind not in TERRAIN_KINDS:
        raise ValidationError("terrain.kind", f"unknown kind {kind!r}")
    if not isinstance(level_count, int) or level_count < 1:
        raise ValidationError("terrain.level_count", f"must be an integer >= 1, got {level_count!r}")
    if not section_length > 0:
        raise ValidationError("terrain.section_length", f"must be > 0, got {section_length!r}")
    if not tread > 0:
        raise ValidationError("terrain.tread", f"must be > 0, got {tread!r}")
    if kind == "stair_track":
        levels = tuple(round(STEP_HEIGHT_0 + STEP_HEIGHT_INC * k, 10) for k in range(level_count))
    elif kind == "slope_track":
        levels = tuple(round(INCLINE_0 + INCLINE_INC * k, 10) for k in range(level_count))
    else:
        levels = (0.0,) * level_count
    return Terrain(kind, float(section_length), levels, float(tread), int(steps_per_flight))


def uniform_stairs(step_height: float, level_count: int = 10, section_length: float = 8.0,
                   tread: float = 0.5, steps_per_flight: int = 4) -> Terrain:
    """Stair track with the same riser height in every section."""
    if not step_height > 0:
        raise ValidationError("terrain.step_height", f"must be > 0, got {step_height!r}")
    base = make_track("stair_track", level_count, section_length, tread=tread,
                      steps_per_flight=steps_per_flight)
    return replace(base, levels=(float(step_height),) * level_count)


def uniform_slope(incline: float, level_count: int = 1, section_length: float = 8.0) -> Terrain:
    base = make_track("slope_track", level_count, section_length)
    return replace(base, levels=(float(incline),) * level_count)


def terrain_height(terrain: Terrain, x: float, y: float = 0.0) -> float:
    """Ground height at ``(x, y)``; total, pure and finite."""
    kind = terrain.kind
    if kind == "flat":
        return 0.0
    L = terrain.section_length
    if x < 0.0 or x >= terrain.total_length:
        return 0.0
    k = int(x // L)
    xi = x - k * L
    level = terrain.levels[k]
    if kind == "stair_track":
        t = terrain.tread
        n = min(terrain.steps_per_flight, math.floor(xi / t), math.floor((L - xi) / t))
        return level * max(n, 0)
    half = 0.5 * L
    run = xi if xi < half else L - xi
    return math.tan(level) * run


def export_heightfield(terrain: Terrain, path: str | Path, *, x_step: float = 0.05,
                       y_range: tuple[float, float] = (-1.0, 1.0), y_step: float = 0.5) -> Path:
    """Write a CSV grid (x, y, height) for plotting."""
    path = Path(path)
    xs = np.arange(0.0, terrain.total_length, x_step)
    ys = np.arange(y_range[0], y_range[1] + 1e-9, y_step)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x_m", "y_m", "height_m"])
        for y in ys:
            for x in xs:
                w.writerow([f"{x:.4f}", f"{y:.4f}", repr(terrain_height(terrain, float(x), float(y)))])
    return path


# --------------------------------------------------------------------------
# Quadruped platform
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PlatformState:
    """Torso state of the emulated quadruped.

    ``cmd_velocity`` is the commanded planar velocity (m/s); ``speed`` is the
    planar speed actually achieved (acceleration-limited). ``docking`` is the
    docking flag D.
    """

    position: np.ndarray
    attitude: Attitude = field(default_factory=Attitude)
    omega: np.ndarray = field(default_factory=lambda: np.zeros(3))
    cmd_velocity: tuple = (0.0, 0.0)
    docking: int = 0
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    acceleration: np.ndarray = field(default_factory=lambda: np.zeros(3))
    speed: float = 0.0


def _foot_heights(terrain: Terrain, x: float, y: float, yaw: float, params: PlatformSection):
    cy, sy = math.cos(yaw), math.sin(yaw)
    hl, hw = 0.5 * params.body_length, 0.5 * params.body_width
    front = terrain_height(terrain, x + hl * cy, y + hl * sy)
    rear = terrain_height(terrain, x - hl * cy, y - hl * sy)
    left = terrain_height(terrain, x - hw * sy, y + hw * cy)
    right = terrain_height(terrain, x + hw * sy, y - hw * cy)
    return front, rear, left, right


def surface_attitude(terrain: Terrain, x: float, y: float, yaw: float,
                     params: PlatformSection) -> tuple[float, float]:
    """Roll and pitch the torso takes when its feet rest on the terrain.

    Front/rear and left/right foot heights are sampled a body length and a
    body width apart, so stairs yield the averaged incline the legs span.
    """
    front, rear, left, right = _foot_heights(terrain, x, y, yaw, params)
    pitch = -math.atan2(front - rear, params.body_length)
    roll = math.atan2(left - right, params.body_width)
    return roll, pitch


def torso_height_target(terrain: Terrain, x: float, y: float, yaw: float,
                        params: PlatformSection) -> float:
    front, rear, _, _ = _foot_heights(terrain, x, y, yaw, params)
    return 0.5 * (front + rear) + params.standing_height


def make_platform(terrain: Terrain, x: float, y: float = 0.0, *, yaw: float = 0.0,
                  cmd_velocity: tuple = (0.0, 0.0), docking: int = 0,
                  params: PlatformSection | None = None, attitude: Attitude | None = None) -> PlatformState:
    """Platform standing at rest at ``(x, y)`` in its terrain-following pose."""
    params = params or PlatformSection()
    if attitude is None:
        roll, pitch = surface_attitude(terrain, x, y, yaw, params)
        attitude = Attitude(roll, pitch, yaw)
    z = torso_height_target(terrain, x, y, yaw, params)
    return PlatformState(position=np.array([x, y, z]), attitude=attitude,
                         cmd_velocity=(float(cmd_velocity[0]), float(cmd_velocity[1])),
                         docking=int(docking))


def platform_step(state: PlatformState, terrain: Terrain, dt: float,
                  params: PlatformSection | None = None) -> PlatformState:
    """Advance the kinematic quadruped by ``dt``.

    With D=0 roll/pitch follow the terrain-surface pose through a first-order
    lag ``tau_follow``; with D=1 they decay toward level with ``tau_align``
    and the commanded speed is clamped to ``dock_speed_max``. Torso height
    follows the footprint terrain height through a critically damped
    second-order response, so its velocity and acceleration stay bounded on
    stairs. Angular rates are finite differences of the attitude.
    """
    if not dt > 0:
        raise ValidationError("dt", f"must be > 0, got {dt!r}")
    params = params or PlatformSection()
    D = state.docking
    vx_cmd, vy_cmd = state.cmd_velocity
    speed_cmd = math.hypot(vx_cmd, vy_cmd)
    att = state.attitude
    yaw = att.yaw
    if speed_cmd > 1e-12:
        yaw = math.atan2(vy_cmd, vx_cmd)
    if D == 1:
        speed_cmd = min(speed_cmd, params.dock_speed_max)

    dv_max = params.accel_max * dt
    speed = state.speed + min(max(speed_cmd - state.speed, -dv_max), dv_max)

    x, y, z = float(state.position[0]), float(state.position[1]), float(state.position[2])
    _, pitch_surf = surface_attitude(terrain, x, y, yaw, params)
    horiz = speed * math.cos(pitch_surf)
    cy, sy = math.cos(yaw), math.sin(yaw)
    x_new = x + horiz * cy * dt
    y_new = y + horiz * sy * dt

    # torso height: critically damped second-order tracking of the footprint height
    w = params.height_omega
    z_ref = torso_height_target(terrain, x_new, y_new, yaw, params)
    vz = float(state.velocity[2])
    az = w * w * (z_ref - z) - 2.0 * w * vz
    vz_new = vz + az * dt
    z_new = z + vz_new * dt

    if D == 1:
        roll_t, pitch_t, tau = 0.0, 0.0, params.tau_align
    else:
        roll_t, pitch_t = surface_attitude(terrain, x_new, y_new, yaw, params)
        tau = params.tau_follow
    decay = math.exp(-dt / tau)
    roll = roll_t + (att.roll - roll_t) * decay
    pitch = pitch_t + (att.pitch - pitch_t) * decay
    dyaw = (yaw - att.yaw + math.pi) % (2.0 * math.pi) - math.pi

    velocity = np.array([(x_new - x) / dt, (y_new - y) / dt, vz_new])
    acceleration = (velocity - state.velocity) / dt
    acceleration[2] = az
    return PlatformState(
        position=np.array([x_new, y_new, z_new]),
        attitude=Attitude(roll, pitch, yaw),
        omega=np.array([(roll - att.roll) / dt, (pitch - att.pitch) / dt, dyaw / dt]),
        cmd_velocity=state.cmd_velocity,
        docking=D,
        velocity=velocity,
        acceleration=acceleration,
        speed=speed,
    )


def tag_position(platform: PlatformState, params: PlatformSection | None = None) -> np.ndarray:
    """World position of the tag at the centre of the landing plate."""
    params = params or PlatformSection()
    a = platform.attitude
    up = rotation_matrix(a.roll, a.pitch, a.yaw)[:, 2]
    return platform.position + params.plate_height * up


def gravity_projection(attitude: Attitude) -> np.ndarray:
    """World gravity direction (0, 0, -1) expressed in the body frame.

    Equals ``R.T @ (0, 0, -1)`` for the body->world rotation of
    :class:`Attitude`; yaw drops out. A level body gives (0, 0, -1) and a
    nose-down pitch ``theta`` gives ``g_x = sin(theta)``.
    """
    sr, cr = math.sin(attitude.roll), math.cos(attitude.roll)
    sp, cp = math.sin(attitude.pitch), math.cos(attitude.pitch)
    return np.array([sp, -sr * cp, -cr * cp])


# --------------------------------------------------------------------------
# UAV
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class UavState:
    position: np.ndarray
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    attitude: Attitude = field(default_factory=Attitude)


@dataclass(frozen=True)
class UavModel:
    """Translational model ``M p'' = u - G(v)`` with ``G = m g e_z + c v``."""

    mass_matrix: np.ndarray
    gravity: float = 9.81
    drag: float = 0.0

    def __post_init__(self):
        m = np.asarray(self.mass_matrix, dtype=float)
        if m.shape != (3, 3) or not np.allclose(m, m.T) or np.min(np.linalg.eigvalsh(m)) <= 0:
            raise ValidationError("uav.mass_matrix", "must be symmetric positive definite 3x3")
        object.__setattr__(self, "mass_matrix", m)
        object.__setattr__(self, "_minv", np.linalg.inv(m))
        object.__setattr__(self, "_weight", m @ np.array([0.0, 0.0, self.gravity]))

    @classmethod
    def from_mass(cls, mass: float, gravity: float = 9.81, drag: float = 0.0) -> "UavModel":
        return cls(mass * np.eye(3), gravity, drag)

    @property
    def mass_inverse(self) -> np.ndarray:
        return self._minv

    def gravity_aero(self, velocity: np.ndarray | None = None) -> np.ndarray:
        """The force vector G: weight plus linear drag."""
        if self.drag and velocity is not None:
            return self._weight + self.drag * velocity
        return self._weight


def thrust_attitude(u: np.ndarray, yaw: float = 0.0) -> Attitude:
    """Roll/pitch that point the body z-axis along the force ``u`` (logging only)."""
    n = np.linalg.norm(u)
    if n < 1e-9:
        return Attitude(0.0, 0.0, yaw)
    # rotate into the yaw frame, then solve R[:, 2] = u / |u|
    c, s = math.cos(yaw), math.sin(yaw)
    ux = (c * u[0] + s * u[1]) / n
    uy = (-s * u[0] + c * u[1]) / n
    uz = u[2] / n
    roll = math.asin(max(-1.0, min(1.0, -uy)))
    pitch = math.atan2(ux, uz)
    half = math.pi / 2 - 1e-6
    return Attitude(max(-half, min(half, roll)), max(-half, min(half, pitch)), yaw)


def uav_step(state: UavState, model: UavModel, u: np.ndarray, dt: float,
             disturbance: np.ndarray | None = None) -> UavState:
    """Advance the UAV by ``dt`` under force ``u`` held constant over the step.

    Acceleration ``M^-1 (u + d - G(v))`` is evaluated at the start of the step
    and integrated exactly: ``p += v dt + a dt^2 / 2``, ``v += a dt``.
    """
    if not dt > 0:
        raise ValidationError("dt", f"must be > 0, got {dt!r}")
    u = np.asarray(u, dtype=float)
    if u.shape != (3,) or not np.all(np.isfinite(u)):
        raise SimulationFault(f"non-finite control force {u}")
    f = u - model.gravity_aero(state.velocity)
    if disturbance is not None:
        f = f + disturbance
    a = model.mass_inverse @ f
    v = state.velocity
    position = state.position + dt * v + (0.5 * dt * dt) * a
    velocity = v + dt * a
    if not (np.all(np.isfinite(position)) and np.all(np.isfinite(velocity))):
        raise SimulationFault("UAV state became non-finite")
    return UavState(position, velocity, thrust_attitude(u, state.attitude.yaw))
