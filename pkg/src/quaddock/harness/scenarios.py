"""Named terrain presets and per-trial randomization."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import ScenarioSection, ValidationError
from ..world import Terrain, make_track, uniform_slope, uniform_stairs

TERRAIN_PRESETS = {
    "flat": lambda: make_track("flat", 10),
    # docking comparison scenario: 12 cm risers everywhere
    "stair12": lambda: uniform_stairs(0.12, level_count=10),
    "stair_track": lambda: make_track("stair_track", 10),
    "slope_track": lambda: make_track("slope_track", 10),
    "slope20": lambda: uniform_slope(math.radians(20.0), level_count=10),
}


def get_terrain(terrain_id: str) -> Terrain:
    try:
        return TERRAIN_PRESETS[terrain_id]()
    except KeyError:
        raise ValidationError("terrain", f"unknown terrain {terrain_id!r}; choose from {sorted(TERRAIN_PRESETS)}") from None


@dataclass(frozen=True)
class Gust:
    t0: float
    duration: float
    force: np.ndarray

    def at(self, t: float) -> np.ndarray | None:
        if not (self.t0 <= t <= self.t0 + self.duration):
            return None
        return self.force * (0.5 * (1.0 - math.cos(2.0 * math.pi * (t - self.t0) / self.duration)))


@dataclass(frozen=True)
class Scenario:
    """Randomized initial conditions and disturbances of one trial."""

    platform_x0: float
    platform_speed: float
    uav_offset: np.ndarray          # horizontal offset of the UAV from the torso (m)
    uav_velocity: np.ndarray
    wind: np.ndarray                # constant force (N)
    gusts: tuple

    def disturbance(self, t: float) -> np.ndarray:
        f = self.wind
        for g in self.gusts:
            extra = g.at(t)
            if extra is not None:
                f = f + extra
        return f


N_GUSTS = 3


def _horizontal(rng: np.random.Generator, magnitude: float) -> np.ndarray:
    ang = rng.uniform(0.0, 2.0 * math.pi)
    return np.array([magnitude * math.cos(ang), magnitude * math.sin(ang), 0.0])


def _disturbances(cfg: ScenarioSection, rng: np.random.Generator, window: float):
    wind = _horizontal(rng, rng.uniform(0.0, cfg.wind_max))
    gusts = []
    for _ in range(N_GUSTS):
        t0 = rng.uniform(0.0, window)
        dur = rng.uniform(cfg.gust_duration_min, cfg.gust_duration_max)
        gusts.append(Gust(t0, dur, _horizontal(rng, rng.uniform(0.0, cfg.gust_max))))
    return wind, tuple(gusts)


def _speed(cfg: ScenarioSection, rng: np.random.Generator) -> float:
    return max(0.0, cfg.platform_speed * (1.0 + rng.uniform(-cfg.speed_jitter, cfg.speed_jitter)))


def sample_mission_scenario(cfg: ScenarioSection, rng: np.random.Generator) -> Scenario:
    """UAV starts hovering in a ring around the quadruped, inside detection range."""
    x0 = rng.uniform(0.0, cfg.start_x_max)
    speed = _speed(cfg, rng)
    radius = rng.uniform(cfg.ring_min, cfg.ring_max)
    ang = rng.uniform(0.0, 2.0 * math.pi)
    offset = np.array([radius * math.cos(ang), radius * math.sin(ang), 0.0])
    wind, gusts = _disturbances(cfg, rng, cfg.gust_window)
    return Scenario(x0, speed, offset, np.zeros(3), wind, gusts)


def sample_tracking_scenario(cfg: ScenarioSection, rng: np.random.Generator, d_s: float) -> Scenario:
    """Tracking already engaged: small horizontal offset and relative velocity."""
    x0 = rng.uniform(0.0, cfg.start_x_max)
    speed = _speed(cfg, rng)
    r0 = min(cfg.tracking_r0_max, 0.99 * d_s) * math.sqrt(rng.uniform(0.0, 1.0))
    ang = rng.uniform(0.0, 2.0 * math.pi)
    offset = np.array([r0 * math.cos(ang), r0 * math.sin(ang), 0.0])
    vel = np.append(rng.uniform(-0.2, 0.2, size=2), 0.0)
    wind, gusts = _disturbances(cfg, rng, cfg.tracking_duration)
    return Scenario(x0, speed, offset, vel, wind, gusts)
