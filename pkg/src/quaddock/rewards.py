"""Orientation and task-conditioned horizontal-alignment terms, curriculum schedule.

Both reward terms are penalties: larger values mean a worse posture. They
are returned raw; a training loop would weight them with a negative scale.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable

import numpy as np

from .core import CurriculumSection, RewardSection, ValidationError
from .world import gravity_projection

HaRewardParams = RewardSection

_UNIT_TOL = 1e-6


def _check_unit(g) -> np.ndarray:
    g = np.asarray(g, dtype=float).reshape(3)
    n = float(np.linalg.norm(g))
    if not abs(n - 1.0) <= _UNIT_TOL:
        raise ValidationError("g", f"gravity direction must be a unit vector, |g| = {n}")
    return g


def r_ori(g) -> float:
    """Squared horizontal projection ``g_x^2 + g_y^2`` of the body-frame gravity direction."""
    g = _check_unit(g)
    return float(g[0] * g[0] + g[1] * g[1])


def ha_coefficients(docking: int, params: HaRewardParams) -> tuple[float, float]:
    if docking not in (0, 1):
        raise ValidationError("D", f"docking flag must be 0 or 1, got {docking!r}")
    return (params.alpha_1, params.beta_1) if docking else (params.alpha_0, params.beta_0)


def r_ha(g, omega_x: float, omega_y: float, docking: int, params: HaRewardParams) -> float:
    """``alpha(D) max(g_x^2 + g_y^2 - delta, 0) + beta(D) (omega_x^2 + omega_y^2)``."""
    tilt = r_ori(g)
    a, b = ha_coefficients(docking, params)
    return a * max(tilt - params.deadzone, 0.0) + b * (omega_x * omega_x + omega_y * omega_y)


# --------------------------------------------------------------------------
# Two-fold curriculum
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CurriculumState:
    """Command ranges and terrain level for one docking-mode stream.

    ``progress`` counts qualifying docking-mode episodes since the last
    promotion.
    """

    docking: int = 0
    lin_vel_max: float = 0.3
    yaw_rate_max: float = 0.2
    level: int = 0
    progress: int = 0

    @classmethod
    def initial(cls, docking: int, cfg: CurriculumSection) -> "CurriculumState":
        lin, yaw = cfg.lin_vel_init, cfg.yaw_rate_init
        if docking:
            lin, yaw = min(lin, cfg.dock_lin_vel_cap), min(yaw, cfg.dock_yaw_rate_cap)
        return cls(int(docking), lin, yaw, 0, 0)


@dataclass(frozen=True)
class EpisodeStats:
    """Outcome of one episode: distance walked (m) and mean HA penalty."""

    distance: float
    mean_ha_penalty: float = 0.0


def curriculum_step(state: CurriculumState, stats: EpisodeStats, docking: int,
                    cfg: CurriculumSection) -> CurriculumState:
    """Update command ranges and terrain level after an episode.

    D=0: a successful episode (distance >= ``promote_distance``) widens the
    command ranges toward their full bounds and promotes the terrain level.
    D=1: ranges stay capped at the docking limits; promotion also requires
    ``mean_ha_penalty <= dock_stability_max`` and a level is gained only
    every ``dock_slowdown`` qualifying episodes.
    """
    if docking not in (0, 1):
        raise ValidationError("D", f"docking flag must be 0 or 1, got {docking!r}")
    success = stats.distance >= cfg.promote_distance
    if docking == 0:
        if not success:
            return replace(state, docking=0)
        return CurriculumState(
            0,
            min(state.lin_vel_max + cfg.lin_vel_step, cfg.lin_vel_full),
            min(state.yaw_rate_max + cfg.yaw_rate_step, cfg.yaw_rate_full),
            min(state.level + 1, cfg.max_level),
            0,
        )

    lin = min(state.lin_vel_max, cfg.dock_lin_vel_cap)
    yaw = min(state.yaw_rate_max, cfg.dock_yaw_rate_cap)
    level, progress = state.level, state.progress
    if success:
        lin = min(lin + cfg.lin_vel_step, cfg.dock_lin_vel_cap)
        yaw = min(yaw + cfg.yaw_rate_step, cfg.dock_yaw_rate_cap)
        if stats.mean_ha_penalty <= cfg.dock_stability_max:
            progress += 1
            if progress >= cfg.dock_slowdown:
                level, progress = min(level + 1, cfg.max_level), 0
    return CurriculumState(1, lin, yaw, level, progress)


def sample_docking_flag(rng: np.random.Generator, cfg: CurriculumSection) -> int:
    """Draw the docking flag for a training episode with ``dock_probability``."""
    return int(rng.random() < cfg.dock_probability)


REWARD_TRACE_COLUMNS = ("t_s", "r_ori", "r_ha", "D")


def write_reward_trace(rows: Iterable[tuple], path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(REWARD_TRACE_COLUMNS)
        for t, ro, rh, d in rows:
            w.writerow([f"{t:.4f}", f"{ro:.6g}", f"{rh:.6g}", int(d)])
    return path


def reward_trace(times, attitudes, omegas, dockings, params: HaRewardParams):
    """Evaluate both terms along a platform trajectory; yields CSV rows."""
    for t, att, om, d in zip(times, attitudes, omegas, dockings):
        g = gravity_projection(att)
        yield (t, r_ori(g), r_ha(g, float(om[0]), float(om[1]), int(d), params), int(d))

