"""Simulated sensing: long-range detector, median filter, tag measurements."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .core import (Attitude, CameraSection, NoiseSection, PerceptionSection, PlatformSection,
                   QuadDockError, ValidationError, rotation_matrix)
from .world import PlatformState, Terrain, UavState, tag_position, terrain_height

# camera axes (x right, y down, z optical) expressed in the UAV body frame
_CAM_IN_BODY = np.array([[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]])


class EstimationError(QuadDockError):
    """A pixel cannot be lifted to a world position."""


@dataclass(frozen=True)
class Detection:
    u: float
    v: float
    confidence: float
    t: float = 0.0

    @property
    def centroid(self) -> tuple[float, float]:
        return (self.u, self.v)


@dataclass(frozen=True)
class TagMeasurement:
    """World-frame tag position plus the platform attitude/rate sample."""

    p_t: np.ndarray
    attitude: Attitude
    omega: np.ndarray
    valid: bool = True


@dataclass(frozen=True)
class PlatformFeedback:
    """What the quadruped reports over the link: velocity estimate and IMU."""

    velocity: np.ndarray
    acceleration: np.ndarray
    attitude: Attitude
    omega: np.ndarray


def camera_rotation(uav: UavState, camera: CameraSection) -> np.ndarray:
    """Camera-to-world rotation."""
    a = uav.attitude
    if camera.gimbal:
        body = rotation_matrix(0.0, 0.0, a.yaw)
    else:
        body = rotation_matrix(a.roll, a.pitch, a.yaw)
    return body @ _CAM_IN_BODY


def project(point: np.ndarray, uav: UavState, camera: CameraSection) -> tuple[float, float] | None:
    """Pixel of a world point, or None when it is behind the camera."""
    pc = camera_rotation(uav, camera).T @ (np.asarray(point, dtype=float) - uav.position)
    if pc[2] <= 1e-9:
        return None
    f = camera.focal_px
    return (0.5 * camera.width + f * pc[0] / pc[2], 0.5 * camera.height + f * pc[1] / pc[2])


def _in_image(px: tuple[float, float], camera: CameraSection) -> bool:
    return 0.0 <= px[0] <= camera.width and 0.0 <= px[1] <= camera.height


def detection_confidence(distance: float, perception: PerceptionSection) -> float:
    """Mean detector confidence: logistic, decreasing with range."""
    z = (distance - perception.conf_midpoint) / perception.conf_slope
    return 1.0 / (1.0 + math.exp(min(z, 700.0)))


def sample_detection(uav: UavState, platform: PlatformState, camera: CameraSection,
                     perception: PerceptionSection, noise: NoiseSection,
                     rng: np.random.Generator, t: float = 0.0) -> Detection | None:
    """Raw detector output before the confidence gate.

    The torso centre is projected through the pinhole camera; pixel noise
    grows with range, confidence falls with range, and a small fraction of
    frames return a uniformly random outlier pixel. Returns None only when
    the target is outside the image. The same number of random draws is
    consumed on every call, so the stream stays aligned.
    """
    draws = rng.standard_normal(3)
    outlier_u, outlier_v, outlier_flag = rng.random(3)
    px = project(platform.position, uav, camera)
    if px is None or not _in_image(px, camera):
        return None
    distance = float(np.linalg.norm(platform.position - uav.position))
    conf = detection_confidence(distance, perception)
    u, v = px
    if noise.enabled:
        conf += noise.confidence_std * draws[0]
        sigma = noise.pixel_std_base + noise.pixel_std_per_m * distance
        u += sigma * draws[1]
        v += sigma * draws[2]
        if outlier_flag < noise.outlier_prob:
            u, v = outlier_u * camera.width, outlier_v * camera.height
    conf = min(max(conf, 0.0), 1.0)
    u = min(max(u, 0.0), float(camera.width))
    v = min(max(v, 0.0), float(camera.height))
    return Detection(u, v, conf, t)


def detect_long_range(uav: UavState, platform: PlatformState, camera: CameraSection,
                      perception: PerceptionSection, noise: NoiseSection,
                      rng: np.random.Generator, t: float = 0.0) -> Detection | None:
    """Detector output gated by ``tau_conf``: None below the threshold or out of view."""
    det = sample_detection(uav, platform, camera, perception, noise, rng, t)
    if det is None or det.confidence < perception.tau_conf:
        return None
    return det


@dataclass(frozen=True)
class MedianWindow:
    """Last ``size`` image-plane centroids (oldest first)."""

    size: int = 5
    buffer: tuple = ()

    def __post_init__(self):
        if not isinstance(self.size, int) or self.size < 3 or self.size % 2 == 0:
            raise ValidationError("median_window", f"must be odd and >= 3, got {self.size!r}")
        if len(self.buffer) > self.size:
            raise ValidationError("median_window", "buffer longer than window")


def median_update(window: MedianWindow, sample: tuple[float, float]) -> tuple[MedianWindow, tuple[float, float]]:
    """Push a centroid and return the per-axis median of the buffer.

    A partially filled buffer is allowed; with an even count the lower
    median is returned so the output is always one of the stored values.
    """
    u, v = float(sample[0]), float(sample[1])
    if not (math.isfinite(u) and math.isfinite(v)):
        raise ValidationError("sample", f"non-finite centroid {sample!r}")
    buf = (window.buffer + ((u, v),))[-window.size:]
    us = sorted(s[0] for s in buf)
    vs = sorted(s[1] for s in buf)
    mid = (len(buf) - 1) // 2
    return MedianWindow(window.size, buf), (us[mid], vs[mid])


def lift_to_world(det: Detection | tuple[float, float], uav: UavState, camera: CameraSection,
                  terrain: Terrain, height_offset: float = 0.0, iterations: int = 8) -> np.ndarray:
    """Back-project a pixel onto the plane ``terrain height + height_offset``.

    The plane height is re-evaluated at each intersection estimate (fixed
    point iteration), which converges in one step on piecewise-flat ground.
    """
    u, v = det.centroid if isinstance(det, Detection) else det
    f = camera.focal_px
    ray_c = np.array([(u - 0.5 * camera.width) / f, (v - 0.5 * camera.height) / f, 1.0])
    ray = camera_rotation(uav, camera) @ ray_c
    if abs(ray[2]) < 1e-9:
        raise EstimationError("pixel ray is parallel to the ground plane")
    o = uav.position
    point = np.array([o[0], o[1], 0.0])
    for _ in range(iterations):
        z_plane = terrain_height(terrain, point[0], point[1]) + height_offset
        s = (z_plane - o[2]) / ray[2]
        if s <= 0:
            raise EstimationError("ground plane lies behind the camera")
        new = o + s * ray
        if np.allclose(new, point, atol=1e-9, rtol=0.0):
            point = new
            break
        point = new
    return point


def tag_measure(uav: UavState, platform: PlatformState, d_s: float, noise: NoiseSection,
                rng: np.random.Generator, params: PlatformSection | None = None) -> TagMeasurement | None:
    """Noisy world-frame tag position, or None outside the FOV disk.

    The tag is visible iff the true horizontal offset satisfies
    ``e_x^2 + e_y^2 <= d_s^2`` and the UAV is above the tag.
    """
    draws = rng.standard_normal(6)
    p_tag = tag_position(platform, params)
    e = uav.position - p_tag
    if e[0] * e[0] + e[1] * e[1] > d_s * d_s or e[2] <= 0.0:
        return None
    att = platform.attitude
    omega = platform.omega
    p_t = p_tag
    if noise.enabled:
        p_t = p_tag + noise.tag_pos_std * draws[:3]
        att = Attitude(att.roll + noise.platform_att_std * draws[3],
                       att.pitch + noise.platform_att_std * draws[4], att.yaw)
        omega = omega + noise.platform_rate_std * np.array([draws[5], -draws[5], 0.0])
    return TagMeasurement(p_t, att, omega, True)


def platform_feedback(platform: PlatformState, noise: NoiseSection,
                      rng: np.random.Generator) -> PlatformFeedback:
    """Velocity/IMU report sent by the quadruped every control step."""
    draws = rng.standard_normal(3)
    vel = platform.velocity
    if noise.enabled:
        vel = vel + noise.platform_vel_std * draws
    return PlatformFeedback(vel, platform.acceleration, platform.attitude, platform.omega)


DETECTION_LOG_COLUMNS = ("t_s", "u_px", "v_px", "confidence", "accepted")


def write_detection_log(rows: Iterable[tuple], path: str | Path) -> Path:
    """CSV of per-frame detections: time, pixel centroid, confidence, accepted flag."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(DETECTION_LOG_COLUMNS)
        for t, u, v, conf, accepted in rows:
            w.writerow([f"{t:.4f}", "" if u is None else f"{u:.3f}", "" if v is None else f"{v:.3f}",
                        "" if conf is None else f"{conf:.4f}", int(bool(accepted))])
    return path
