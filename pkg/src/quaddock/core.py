"""Shared value types, configuration loading and seeded random streams.

Configuration is a hierarchical YAML file. Every key is optional; anything
left out takes the value from the defaults table in ``docs/defaults.md``
(which is generated from the dataclasses below and checked by the tests).
"""

from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import yaml

CONFIG_ENV_VAR = "QUADDOCK_CONFIG"


class QuadDockError(Exception):
    """Base class for all package errors."""


class ConfigError(QuadDockError):
    """The configuration file could not be read or parsed."""


class ConfigFileError(ConfigError, OSError):
    """The configuration file could not be read."""


class ValidationError(QuadDockError, ValueError):
    """A value violates a documented invariant."""

    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


class SimulationFault(QuadDockError):
    """A trial cannot continue (non-finite state, bad force, ...)."""


# --------------------------------------------------------------------------
# Small value types
# --------------------------------------------------------------------------


def vec3(x: float = 0.0, y: float = 0.0, z: float = 0.0) -> np.ndarray:
    """Build a finite 3-vector (float64 array of shape (3,))."""
    v = np.array([x, y, z], dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValidationError("vec3", f"non-finite component in {v}")
    return v


def as_vec3(v: Any, name: str = "vec3") -> np.ndarray:
    arr = np.asarray(v, dtype=float).reshape(3)
    if not np.all(np.isfinite(arr)):
        raise ValidationError(name, f"non-finite component in {arr}")
    return arr


@dataclass(frozen=True)
class Attitude:
    """Roll, pitch, yaw in radians.

    Rotation body->world is ``Rz(yaw) @ Ry(pitch) @ Rx(roll)``. In the
    x-forward, y-left, z-up body frame a positive pitch tips the nose down
    and a positive roll lifts the left side.
    """

    roll: float = 0.0
    pitch: float = 0.0
    yaw: float = 0.0

    def validate(self) -> "Attitude":
        half = math.pi / 2
        if not (-half < self.roll < half):
            raise ValidationError("attitude.roll", f"{self.roll} outside (-pi/2, pi/2)")
        if not (-half < self.pitch < half):
            raise ValidationError("attitude.pitch", f"{self.pitch} outside (-pi/2, pi/2)")
        if not (-math.pi <= self.yaw < math.pi):
            raise ValidationError("attitude.yaw", f"{self.yaw} outside [-pi, pi)")
        return self

    def rotation(self) -> np.ndarray:
        return rotation_matrix(self.roll, self.pitch, self.yaw)


def wrap_angle(a: float) -> float:
    """Wrap to [-pi, pi)."""
    return (a + math.pi) % (2.0 * math.pi) - math.pi


def rotation_matrix(roll: float, pitch: float, yaw: float) -> np.ndarray:
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    return np.array(
        [
            [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
            [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
            [-sp, cp * sr, cp * cr],
        ]
    )


# --------------------------------------------------------------------------
# Configuration sections
# --------------------------------------------------------------------------

Diag = tuple  # 3-tuple of floats; a scalar in the file expands to all axes


def _diag(value: Any, name: str) -> tuple[float, float, float]:
    if isinstance(value, (int, float)):
        return (float(value),) * 3
    vals = tuple(float(v) for v in value)
    if len(vals) != 3:
        raise ValidationError(name, f"expected scalar or 3 values, got {len(vals)}")
    return vals  # type: ignore[return-value]


def _positive(name: str, value: float) -> None:
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise ValidationError(name, f"must be > 0, got {value!r}")


def _nonneg(name: str, value: float) -> None:
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value >= 0):
        raise ValidationError(name, f"must be >= 0, got {value!r}")


def _all_positive(name: str, values: tuple) -> None:
    for v in values:
        _positive(name, v)


@dataclass(frozen=True)
class ControllerGains:
    """Gains of the acquisition PI law and the tracking controllers.

    ``kp``/``ki`` drive the acquisition velocity command; ``alpha``, ``beta``,
    ``p``, ``q`` shape the sliding surface; ``k_d``, ``k_sw``, ``k_b`` are the
    reaching, switching and barrier gains (force units). The ``pid_*`` and
    ``smc_lambda`` entries belong to the comparison baselines.
    """

    kp: Diag = (1.0, 1.0, 1.0)
    ki: Diag = (0.4, 0.4, 0.4)
    i_clamp: Diag = (2.0, 2.0, 2.0)
    alpha: Diag = (1.5, 1.5, 1.5)
    beta: Diag = (1.0, 1.0, 1.0)
    p: int = 5
    q: int = 3
    k_d: Diag = (4.0, 4.0, 4.0)
    # above the steady wind bound, so the sliding modes reject it without an integrator
    k_sw: Diag = (1.6, 1.6, 1.6)
    k_b: Diag = (0.2, 0.2, 0.2)
    d_s: float = 0.5
    eps_reg: float = 1e-6
    boundary_layer: float = 0.0
    smc_lambda: Diag = (1.5, 1.5, 1.5)
    pid_kp: Diag = (6.0, 6.0, 6.0)
    pid_ki: Diag = (0.5, 0.5, 0.5)
    pid_kd: Diag = (4.0, 4.0, 4.0)
    pid_i_clamp: Diag = (1.0, 1.0, 1.0)

    def validate(self) -> "ControllerGains":
        for name in ("kp", "ki", "i_clamp", "alpha", "beta", "k_d", "k_sw", "k_b",
                     "smc_lambda", "pid_kp", "pid_ki", "pid_kd", "pid_i_clamp"):
            _all_positive(f"gains.{name}", getattr(self, name))
        check_exponents(self.p, self.q)
        _positive("gains.d_s", self.d_s)
        _positive("gains.eps_reg", self.eps_reg)
        _nonneg("gains.boundary_layer", self.boundary_layer)
        return self


def check_exponents(p: int, q: int) -> None:
    """Sliding-surface exponents: odd positive integers with 1 < p/q < 2."""
    if not (isinstance(p, (int, np.integer)) and isinstance(q, (int, np.integer))):
        raise ValidationError("gains.p/q", f"p and q must be integers, got {p!r}, {q!r}")
    if p <= 0 or q <= 0 or p % 2 == 0 or q % 2 == 0:
        raise ValidationError("gains.p/q", f"p={p}, q={q} must be odd positive integers")
    if not (q < p < 2 * q):
        raise ValidationError("gains.p/q", f"need 1 < p/q < 2, got {p}/{q}")


@dataclass(frozen=True)
class SimSection:
    dt: float = 0.005
    gravity: float = 9.81
    seed: int = 0
    t_max: float = 60.0
    perception_rate: float = 30.0
    feedforward: str = "truth"  # or "finite_difference"

    def validate(self) -> "SimSection":
        _positive("sim.dt", self.dt)
        _positive("sim.gravity", self.gravity)
        _positive("sim.t_max", self.t_max)
        _positive("sim.perception_rate", self.perception_rate)
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ValidationError("sim.seed", f"must be a non-negative integer, got {self.seed!r}")
        if self.feedforward not in ("truth", "finite_difference"):
            raise ValidationError("sim.feedforward", f"unknown mode {self.feedforward!r}")
        return self


@dataclass(frozen=True)
class UavSection:
    mass_matrix: tuple = ((1.5, 0.0, 0.0), (0.0, 1.5, 0.0), (0.0, 0.0, 1.5))
    drag: float = 0.0
    thrust_limit: float = 40.0
    vel_gain: float = 2.5
    acq_speed_max: float = 2.0

    def validate(self) -> "UavSection":
        m = np.asarray(self.mass_matrix, dtype=float)
        if m.shape != (3, 3) or not np.all(np.isfinite(m)):
            raise ValidationError("uav.mass_matrix", "must be a finite 3x3 matrix")
        if not np.allclose(m, m.T):
            raise ValidationError("uav.mass_matrix", "must be symmetric")
        if np.min(np.linalg.eigvalsh(m)) <= 0:
            raise ValidationError("uav.mass_matrix", "must be positive definite")
        _nonneg("uav.drag", self.drag)
        _positive("uav.thrust_limit", self.thrust_limit)
        _positive("uav.vel_gain", self.vel_gain)
        _positive("uav.acq_speed_max", self.acq_speed_max)
        return self


@dataclass(frozen=True)
class CameraSection:
    """Downward-looking pinhole camera (pixels)."""

    width: int = 640
    height: int = 480
    focal_px: float = 240.0
    gimbal: bool = True

    def validate(self) -> "CameraSection":
        _positive("camera.width", self.width)
        _positive("camera.height", self.height)
        _positive("camera.focal_px", self.focal_px)
        return self


@dataclass(frozen=True)
class PerceptionSection:
    tau_conf: float = 0.5
    median_window: int = 5
    conf_midpoint: float = 8.0
    conf_slope: float = 1.5

    def validate(self) -> "PerceptionSection":
        if not (0.0 < self.tau_conf < 1.0):
            raise ValidationError("perception.tau_conf", f"must lie in (0, 1), got {self.tau_conf}")
        w = self.median_window
        if not isinstance(w, int) or w < 3 or w % 2 == 0:
            raise ValidationError("perception.median_window", f"must be odd and >= 3, got {w!r}")
        _positive("perception.conf_midpoint", self.conf_midpoint)
        _positive("perception.conf_slope", self.conf_slope)
        return self


@dataclass(frozen=True)
class NoiseSection:
    enabled: bool = True
    pixel_std_base: float = 1.0
    pixel_std_per_m: float = 0.5
    confidence_std: float = 0.05
    outlier_prob: float = 0.05
    tag_pos_std: float = 0.01
    platform_vel_std: float = 0.02
    platform_att_std: float = 0.005
    platform_rate_std: float = 0.01

    def validate(self) -> "NoiseSection":
        for f in dataclasses.fields(self):
            if f.name != "enabled":
                _nonneg(f"noise.{f.name}", getattr(self, f.name))
        if self.outlier_prob > 1:
            raise ValidationError("noise.outlier_prob", "must be <= 1")
        return self


@dataclass(frozen=True)
class PlatformSection:
    standing_height: float = 0.60
    plate_height: float = 0.05
    plate_half_length: float = 0.25
    plate_half_width: float = 0.20
    body_length: float = 0.65
    body_width: float = 0.31
    tau_align: float = 0.4
    tau_follow: float = 0.2
    dock_speed_max: float = 0.3
    accel_max: float = 1.0
    height_omega: float = 10.0
    align_tolerance: float = 0.02

    def validate(self) -> "PlatformSection":
        for f in dataclasses.fields(self):
            _positive(f"platform.{f.name}", getattr(self, f.name))
        return self


@dataclass(frozen=True)
class MissionSection:
    delta_a: float = 2.0
    delta_t: float = 0.8
    handover_factor: float = 0.5
    z_min: float = 0.15
    tag_loss_timeout: float = 1.0
    ref_omega: float = 2.0
    ref_speed_max: float = 0.5
    ref_accel_max: float = 2.0
    descent_speed: float = 0.3
    contact_tol: float = 0.03
    v_td_max: float = 0.6
    sp_horizontal_only: bool = False

    def validate(self) -> "MissionSection":
        _positive("mission.delta_t", self.delta_t)
        if not self.delta_a > self.delta_t:
            raise ValidationError("mission.delta_a", f"need delta_a > delta_t > 0, got {self.delta_a} <= {self.delta_t}")
        for name in ("handover_factor", "z_min", "tag_loss_timeout", "ref_omega", "ref_speed_max",
                     "ref_accel_max", "descent_speed", "contact_tol", "v_td_max"):
            _positive(f"mission.{name}", getattr(self, name))
        if self.handover_factor >= 1.0:
            raise ValidationError("mission.handover_factor", "must be < 1 so tracking starts inside the barrier domain")
        return self


@dataclass(frozen=True)
class SpSection:
    t_s: float = 1.0
    eps_p: float = 0.08
    eps_t: float = 0.15
    w_omega: float = 0.5
    w_phi: float = 1.0
    w_theta: float = 1.0

    def validate(self) -> "SpSection":
        _positive("sp.t_s", self.t_s)
        _positive("sp.eps_p", self.eps_p)
        _positive("sp.eps_t", self.eps_t)
        for name in ("w_omega", "w_phi", "w_theta"):
            _nonneg(f"sp.{name}", getattr(self, name))
        return self


@dataclass(frozen=True)
class RewardSection:
    alpha_0: float = 0.2
    beta_0: float = 0.05
    alpha_1: float = 5.0
    beta_1: float = 1.0
    deadzone: float = 0.01

    def validate(self) -> "RewardSection":
        for f in dataclasses.fields(self):
            _nonneg(f"rewards.{f.name}", getattr(self, f.name))
        if self.alpha_1 < self.alpha_0:
            raise ValidationError("rewards.alpha_1", "must be >= alpha_0")
        if self.beta_1 < self.beta_0:
            raise ValidationError("rewards.beta_1", "must be >= beta_0")
        return self


@dataclass(frozen=True)
class CurriculumSection:
    lin_vel_init: float = 0.3
    lin_vel_full: float = 1.0
    lin_vel_step: float = 0.1
    yaw_rate_init: float = 0.2
    yaw_rate_full: float = 1.0
    yaw_rate_step: float = 0.1
    dock_lin_vel_cap: float = 0.3
    dock_yaw_rate_cap: float = 0.1
    promote_distance: float = 4.0
    dock_stability_max: float = 0.05
    dock_slowdown: int = 2
    max_level: int = 9
    dock_probability: float = 0.5

    def validate(self) -> "CurriculumSection":
        for name in ("lin_vel_init", "lin_vel_full", "lin_vel_step", "yaw_rate_init", "yaw_rate_full",
                     "yaw_rate_step", "dock_lin_vel_cap", "dock_yaw_rate_cap", "promote_distance",
                     "dock_stability_max"):
            _positive(f"curriculum.{name}", getattr(self, name))
        if not isinstance(self.dock_slowdown, int) or self.dock_slowdown < 1:
            raise ValidationError("curriculum.dock_slowdown", "must be an integer >= 1")
        if not isinstance(self.max_level, int) or self.max_level < 0:
            raise ValidationError("curriculum.max_level", "must be an integer >= 0")
        if not 0.0 <= self.dock_probability <= 1.0:
            raise ValidationError("curriculum.dock_probability", "must lie in [0, 1]")
        return self


@dataclass(frozen=True)
class ScenarioSection:
    """Per-trial randomization ranges."""

    ring_min: float = 0.5
    ring_max: float = 2.0
    platform_speed: float = 0.3
    speed_jitter: float = 0.15
    start_x_max: float = 8.0
    wind_max: float = 1.5
    gust_max: float = 4.0
    gust_duration_min: float = 0.4
    gust_duration_max: float = 1.5
    gust_window: float = 20.0
    tracking_duration: float = 8.0
    tracking_r0_max: float = 0.25

    def validate(self) -> "ScenarioSection":
        for f in dataclasses.fields(self):
            _nonneg(f"scenario.{f.name}", getattr(self, f.name))
        if self.ring_max < self.ring_min:
            raise ValidationError("scenario.ring_max", "must be >= ring_min")
        if self.gust_duration_max < self.gust_duration_min:
            raise ValidationError("scenario.gust_duration_max", "must be >= gust_duration_min")
        return self


@dataclass(frozen=True)
class SimConfig:
    sim: SimSection = field(default_factory=SimSection)
    uav: UavSection = field(default_factory=UavSection)
    camera: CameraSection = field(default_factory=CameraSection)
    perception: PerceptionSection = field(default_factory=PerceptionSection)
    noise: NoiseSection = field(default_factory=NoiseSection)
    gains: ControllerGains = field(default_factory=ControllerGains)
    platform: PlatformSection = field(default_factory=PlatformSection)
    mission: MissionSection = field(default_factory=MissionSection)
    sp: SpSection = field(default_factory=SpSection)
    rewards: RewardSection = field(default_factory=RewardSection)
    curriculum: CurriculumSection = field(default_factory=CurriculumSection)
    scenario: ScenarioSection = field(default_factory=ScenarioSection)

    def validate(self) -> "SimConfig":
        for f in dataclasses.fields(self):
            getattr(self, f.name).validate()
        return self

    def replace(self, **overrides: Any) -> "SimConfig":
        """Return a copy with dotted-key overrides, e.g. ``{"sp.eps_p": 0.1}``."""
        return apply_overrides(self, overrides)


_SECTION_TYPES = {
    "sim": SimSection, "uav": UavSection, "camera": CameraSection,
    "perception": PerceptionSection, "noise": NoiseSection, "gains": ControllerGains,
    "platform": PlatformSection, "mission": MissionSection, "sp": SpSection,
    "rewards": RewardSection, "curriculum": CurriculumSection, "scenario": ScenarioSection,
}


def _coerce(section: type, name: str, value: Any, default: Any) -> Any:
    key = f"{_section_name(section)}.{name}"
    if isinstance(default, tuple) and default and isinstance(default[0], tuple):
        try:
            return tuple(tuple(float(x) for x in row) for row in value)
        except TypeError as exc:
            raise ValidationError(key, f"expected a 3x3 matrix, got {value!r}") from exc
    if isinstance(default, tuple):
        try:
            return _diag(value, key)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(key, f"expected scalar or 3 numbers, got {value!r}") from exc
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ValidationError(key, f"expected true/false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ValidationError(key, f"expected an integer, got {value!r}")
        return int(value)
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValidationError(key, f"expected a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ValidationError(key, f"expected a string, got {value!r}")
        return value
    return value


def _section_name(section: type) -> str:
    for k, v in _SECTION_TYPES.items():
        if v is section:
            return k
    return section.__name__


def config_from_dict(data: Mapping[str, Any] | None, base: SimConfig | None = None) -> SimConfig:
    """Merge a nested mapping onto ``base`` (defaults when omitted) and validate."""
    base = base or SimConfig()
    data = data or {}
    if not isinstance(data, Mapping):
        raise ConfigError("top level of the configuration must be a mapping")
    if "seed" in data:
        # top-level shorthand for sim.seed
        data = dict(data)
        sim = dict(data.get("sim") or {})
        sim["seed"] = data.pop("seed")
        data["sim"] = sim
    sections = {}
    for name, section_type in _SECTION_TYPES.items():
        current = getattr(base, name)
        raw = data.get(name)
        if raw is None:
            sections[name] = current
            continue
        if not isinstance(raw, Mapping):
            raise ValidationError(name, "section must be a mapping")
        known = {f.name: f for f in dataclasses.fields(section_type)}
        updates = {}
        for key, value in raw.items():
            if key not in known:
                raise ValidationError(f"{name}.{key}", "unknown key")
            updates[key] = _coerce(section_type, key, value, getattr(current, key))
        sections[name] = dataclasses.replace(current, **updates)
    unknown = set(data) - set(_SECTION_TYPES)
    if unknown:
        raise ValidationError(sorted(unknown)[0], "unknown section")
    return SimConfig(**sections).validate()


def config_to_dict(config: SimConfig) -> dict[str, Any]:
    def plain(v: Any) -> Any:
        if isinstance(v, tuple):
            return [plain(x) for x in v]
        return v

    return {
        name: {f.name: plain(getattr(getattr(config, name), f.name))
               for f in dataclasses.fields(_SECTION_TYPES[name])}
        for name in _SECTION_TYPES
    }


def dump_config(config: SimConfig) -> str:
    return yaml.safe_dump(config_to_dict(config), sort_keys=False, default_flow_style=None)


def parse_config(text: str, source: str = "<string>") -> SimConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{source}:{mark.line + 1}:{mark.column + 1}" if mark else source
        raise ConfigError(f"{where}: {getattr(exc, 'problem', None) or exc}") from exc
    return config_from_dict(data)


def load_config(path: str | os.PathLike | None = None) -> SimConfig:
    """Load and validate a configuration file.

    With ``path=None`` the file named by ``$QUADDOCK_CONFIG`` is used, or the
    built-in defaults when that variable is unset.
    """
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR)
        if not path:
            return SimConfig()
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigFileError(f"{p}: {exc.strerror or exc}") from exc
    return parse_config(text, str(p))


def save_config(config: SimConfig, path: str | os.PathLike) -> None:
    Path(path).write_text(dump_config(config))


def apply_overrides(config: SimConfig, overrides: Mapping[str, Any]) -> SimConfig:
    """Apply ``{"section.key": value}`` overrides; values may be YAML strings.

    A bare ``seed`` key is accepted as shorthand for ``sim.seed``.
    """
    nested: dict[str, dict[str, Any]] = {}
    for dotted, value in overrides.items():
        if dotted == "seed":
            dotted = "sim.seed"
        if "." not in dotted:
            raise ValidationError(dotted, "override keys must look like section.key")
        section, key = dotted.split(".", 1)
        if isinstance(value, str):
            try:
                value = yaml.safe_load(value)
            except yaml.YAMLError as exc:
                raise ConfigError(f"override {dotted}: {exc}") from exc
        nested.setdefault(section, {})[key] = value
    return config_from_dict(nested, base=config)


def defaults_table() -> list[tuple[str, Any]]:
    """Flat ``(key, default)`` list; the source of ``docs/defaults.md``."""
    rows = []
    for name, section in config_to_dict(SimConfig()).items():
        for key, value in section.items():
            rows.append((f"{name}.{key}", value))
    return rows


# unit and meaning of every key, rendered into docs/defaults.md
KEY_DOCS: dict[str, tuple[str, str]] = {
    "sim.dt": ("s", "control and dynamics step"),
    "sim.gravity": ("m/s^2", "gravitational acceleration"),
    "sim.seed": ("", "default trial seed / batch seed base"),
    "sim.t_max": ("s", "mission timeout"),
    "sim.perception_rate": ("Hz", "camera frame rate (zero-order hold between frames)"),
    "sim.feedforward": ("", "platform acceleration feedforward: truth or finite_difference"),
    "uav.mass_matrix": ("kg", "translational inertia matrix M"),
    "uav.drag": ("N s/m", "linear drag coefficient inside G"),
    "uav.thrust_limit": ("N", "force-norm saturation"),
    "uav.vel_gain": ("1/s", "velocity-loop gain during acquisition"),
    "uav.acq_speed_max": ("m/s", "horizontal speed cap during acquisition"),
    "camera.width": ("px", "image width"),
    "camera.height": ("px", "image height"),
    "camera.focal_px": ("px", "pinhole focal length"),
    "camera.gimbal": ("", "camera stays nadir-pointing (yaw only)"),
    "perception.tau_conf": ("", "detector confidence threshold"),
    "perception.median_window": ("frames", "median filter length (odd)"),
    "perception.conf_midpoint": ("m", "range at which mean confidence is 0.5"),
    "perception.conf_slope": ("m", "logistic scale of confidence vs range"),
    "noise.enabled": ("", "master switch for all measurement noise"),
    "noise.pixel_std_base": ("px", "centroid noise at zero range"),
    "noise.pixel_std_per_m": ("px/m", "centroid noise growth with range"),
    "noise.confidence_std": ("", "confidence noise"),
    "noise.outlier_prob": ("", "probability of a random-pixel outlier frame"),
    "noise.tag_pos_std": ("m", "tag position noise per axis"),
    "noise.platform_vel_std": ("m/s", "reported platform velocity noise"),
    "noise.platform_att_std": ("rad", "reported roll/pitch noise"),
    "noise.platform_rate_std": ("rad/s", "reported angular-rate noise"),
    "gains.kp": ("1/s", "acquisition proportional gain (diagonal)"),
    "gains.ki": ("1/s^2", "acquisition integral gain (diagonal)"),
    "gains.i_clamp": ("m s", "acquisition anti-windup clamp"),
    "gains.alpha": ("1/s", "sliding-surface linear gain"),
    "gains.beta": ("", "sliding-surface fractional-power gain"),
    "gains.p": ("", "fractional exponent numerator (odd)"),
    "gains.q": ("", "fractional exponent denominator (odd)"),
    "gains.k_d": ("N s/m", "reaching-law gain"),
    "gains.k_sw": ("N", "switching gain"),
    "gains.k_b": ("N m", "barrier-gradient gain"),
    "gains.d_s": ("m", "FOV radius / barrier boundary"),
    "gains.eps_reg": ("m", "regularizer of |e|^(p/q-1)"),
    "gains.boundary_layer": ("", "tanh switching width; 0 selects sign()"),
    "gains.smc_lambda": ("1/s", "linear SMC surface slope"),
    "gains.pid_kp": ("N/m", "PID proportional gain"),
    "gains.pid_ki": ("N/(m s)", "PID integral gain"),
    "gains.pid_kd": ("N s/m", "PID derivative gain"),
    "gains.pid_i_clamp": ("m s", "PID anti-windup clamp"),
    "platform.standing_height": ("m", "torso height above the footprint terrain"),
    "platform.plate_height": ("m", "landing plate (tag) above the torso centre"),
    "platform.plate_half_length": ("m", "plate half extent along the heading"),
    "platform.plate_half_width": ("m", "plate half extent across the heading"),
    "platform.body_length": ("m", "front/rear foot spacing"),
    "platform.body_width": ("m", "left/right foot spacing"),
    "platform.tau_align": ("s", "levelling time constant with D=1"),
    "platform.tau_follow": ("s", "terrain-following time constant with D=0"),
    "platform.dock_speed_max": ("m/s", "speed clamp with D=1"),
    "platform.accel_max": ("m/s^2", "gait acceleration limit"),
    "platform.height_omega": ("rad/s", "torso-height natural frequency"),
    "platform.align_tolerance": ("rad", "steady-state tilt tolerance with D=1"),
    "mission.delta_a": ("m", "acquisition altitude above the torso"),
    "mission.delta_t": ("m", "tracking altitude above the torso"),
    "mission.handover_factor": ("", "handover radius as a fraction of d_s"),
    "mission.z_min": ("m", "tracking safety floor above local terrain"),
    "mission.tag_loss_timeout": ("s", "abort after losing the tag this long"),
    "mission.ref_omega": ("rad/s", "altitude reference natural frequency"),
    "mission.ref_speed_max": ("m/s", "altitude reference speed limit while tracking"),
    "mission.ref_accel_max": ("m/s^2", "altitude reference acceleration limit"),
    "mission.descent_speed": ("m/s", "altitude reference speed limit while landing"),
    "mission.contact_tol": ("m", "relative height counted as contact"),
    "mission.v_td_max": ("m/s", "maximum relative touchdown speed"),
    "mission.sp_horizontal_only": ("", "use only e_x, e_y in the SP error check"),
    "sp.t_s": ("s", "safety-period window length"),
    "sp.eps_p": ("m", "RMS tracking-error threshold"),
    "sp.eps_t": ("", "platform-stability threshold"),
    "sp.w_omega": ("s", "weight of |omega|"),
    "sp.w_phi": ("", "weight of |roll|"),
    "sp.w_theta": ("", "weight of |pitch|"),
    "rewards.alpha_0": ("", "tilt coefficient with D=0"),
    "rewards.beta_0": ("s^2", "rate coefficient with D=0"),
    "rewards.alpha_1": ("", "tilt coefficient with D=1"),
    "rewards.beta_1": ("s^2", "rate coefficient with D=1"),
    "rewards.deadzone": ("", "tilt deadzone on g_x^2 + g_y^2"),
    "curriculum.lin_vel_init": ("m/s", "initial forward-speed command bound"),
    "curriculum.lin_vel_full": ("m/s", "full forward-speed command bound"),
    "curriculum.lin_vel_step": ("m/s", "bound increment per promotion"),
    "curriculum.yaw_rate_init": ("rad/s", "initial yaw-rate command bound"),
    "curriculum.yaw_rate_full": ("rad/s", "full yaw-rate command bound"),
    "curriculum.yaw_rate_step": ("rad/s", "bound increment per promotion"),
    "curriculum.dock_lin_vel_cap": ("m/s", "forward-speed cap with D=1"),
    "curriculum.dock_yaw_rate_cap": ("rad/s", "yaw-rate cap with D=1"),
    "curriculum.promote_distance": ("m", "distance counted as a successful episode"),
    "curriculum.dock_stability_max": ("", "max mean HA penalty for a D=1 promotion"),
    "curriculum.dock_slowdown": ("episodes", "qualifying D=1 episodes per level"),
    "curriculum.max_level": ("", "highest terrain level"),
    "curriculum.dock_probability": ("", "probability of sampling D=1 per episode"),
    "scenario.ring_min": ("m", "min initial horizontal UAV offset (mission)"),
    "scenario.ring_max": ("m", "max initial horizontal UAV offset (mission)"),
    "scenario.platform_speed": ("m/s", "nominal gait speed"),
    "scenario.speed_jitter": ("", "relative gait-speed jitter (uniform)"),
    "scenario.start_x_max": ("m", "platform start position range along the track"),
    "scenario.wind_max": ("N", "constant wind force magnitude range"),
    "scenario.gust_max": ("N", "gust peak force range"),
    "scenario.gust_duration_min": ("s", "shortest gust"),
    "scenario.gust_duration_max": ("s", "longest gust"),
    "scenario.gust_window": ("s", "gust onsets are drawn in [0, gust_window] (mission)"),
    "scenario.tracking_duration": ("s", "length of a tracking-only trial"),
    "scenario.tracking_r0_max": ("m", "max initial offset of a tracking-only trial"),
}


def defaults_markdown() -> str:
    """The defaults table as Markdown."""
    lines = ["# Configuration defaults", "",
             "Generated from `quaddock.core.defaults_markdown()`; `tests/test_docs.py` keeps it in sync.", "",
             "| key | default | unit | meaning |", "|---|---|---|---|"]
    for key, value in defaults_table():
        unit, meaning = KEY_DOCS.get(key, ("", ""))
        lines.append(f"| `{key}` | `{value}` | {unit} | {meaning} |")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# Random streams
# --------------------------------------------------------------------------


def rng_stream(seed: int, stream_id: int) -> np.random.Generator:
    """Independent, reproducible generator for ``(seed, stream_id)``.

    Streams are derived with ``SeedSequence(seed, spawn_key=(stream_id,))``,
    so distinct ids give statistically independent PCG64 streams.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream_id),))
    return np.random.Generator(np.random.PCG64(ss))


# stream ids used by the simulator
STREAM_SCENARIO = 0
STREAM_DETECTION = 1
STREAM_TAG = 2
STREAM_FEEDBACK = 3
STREAM_WIND = 4
