"""Posture-alignment transient of the emulated quadruped under the docking flag."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ..core import SimConfig, ValidationError
from ..rewards import r_ha, r_ori
from ..world import gravity_projection, make_platform, platform_step, uniform_slope


@dataclass(frozen=True)
class AlignmentTrace:
    """Time series of one alignment run; angles in rad, ``g`` is (n, 3)."""

    t: np.ndarray
    docking: np.ndarray
    roll: np.ndarray
    pitch: np.ndarray
    g: np.ndarray
    r_ori: np.ndarray
    r_ha: np.ndarray
    incline: float
    t_on: float
    t_off: float

    def time_to_level(self, gz_max: float = -0.995) -> float:
        """Seconds after D switches on until ``g_z <= gz_max`` first holds; inf if never."""
        idx = np.nonzero((self.t >= self.t_on) & (self.g[:, 2] <= gz_max))[0]
        return float(self.t[idx[0]] - self.t_on) if idx.size else math.inf

    def rows(self):
        for i in range(len(self.t)):
            yield (float(self.t[i]), int(self.docking[i]), float(self.roll[i]), float(self.pitch[i]),
                   *(float(x) for x in self.g[i]), float(self.r_ori[i]), float(self.r_ha[i]))


ALIGNMENT_COLUMNS = ("t_s", "D", "roll_rad", "pitch_rad", "g_x", "g_y", "g_z", "r_ori", "r_ha")


def alignment_trace(config: SimConfig, incline: float = 0.35, t_on: float = 2.0, t_off: float = 6.0,
                    duration: float = 10.0, dt: float | None = None) -> AlignmentTrace:
    """Platform standing on a uniform incline; D=1 on ``[t_on, t_off)``, D=0 elsewhere.

    Starts in the terrain-following pose (pitch magnitude ``incline``).
    """
    if not (0.0 <= t_on <= t_off <= duration):
        raise ValidationError("t_on", f"need 0 <= t_on <= t_off <= duration, got {t_on}, {t_off}, {duration}")
    dt = dt or config.sim.dt
    params = config.platform
    terrain = uniform_slope(incline)
    # middle of the ascending half, feet all on the incline
    state = make_platform(terrain, 0.25 * terrain.section_length, params=params)
    n = int(round(duration / dt)) + 1
    t = np.arange(n) * dt
    D = ((t >= t_on - 1e-12) & (t < t_off - 1e-12)).astype(int)
    roll, pitch, g = np.empty(n), np.empty(n), np.empty((n, 3))
    ro, rh = np.empty(n), np.empty(n)
    for i in range(n):
        if i:
            state = platform_step(_with_flag(state, int(D[i - 1])), terrain, dt, params)
        a = state.attitude
        roll[i], pitch[i] = a.roll, a.pitch
        g[i] = gravity_projection(a)
        ro[i] = r_ori(g[i])
        rh[i] = r_ha(g[i], float(state.omega[0]), float(state.omega[1]), int(D[i]), config.rewards)
    return AlignmentTrace(t, D, roll, pitch, g, ro, rh, incline, t_on, t_off)


def _with_flag(state, docking: int):
    return state if state.docking == docking else replace(state, docking=docking)
