"""Acquisition PI law, the NFTSMC-BF tracking law and the comparison baselines.

All tracking controllers return a force ``u`` (N) for the plant
``M p'' = u - G``. Diagonal gains are passed as 3-sequences; a scalar works
as shorthand. The tracking error is ``e = p_uav - p_ref`` throughout.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable

import numpy as np

from .core import ControllerGains, QuadDockError, ValidationError, check_exponents
from .world import UavModel


class BarrierDomainError(QuadDockError, ValueError):
    """The horizontal error is on or outside the barrier boundary."""


class ControllerFault(QuadDockError):
    """A controller produced a non-finite intermediate value."""


CONTROLLERS = ("pid", "smc", "nftsmc", "nftsmc_bf")


@lru_cache(maxsize=256)
def _diag_cached(values: tuple) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


def diag(value) -> np.ndarray:
    """Diagonal of a gain given as scalar, 3-sequence or 3x3 diagonal matrix."""
    if isinstance(value, tuple):
        return _diag_cached(value) if len(value) == 3 else _diag_cached((float(value[0]),) * 3)
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(3, float(arr))
    if arr.shape == (3, 3):
        return np.diag(arr).copy()
    return arr.reshape(3)


# --------------------------------------------------------------------------
# Acquisition
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PiState:
    """Integral of the acquisition error (m s) and its anti-windup clamp."""

    integral: np.ndarray = field(default_factory=lambda: np.zeros(3))
    clamp: np.ndarray = field(default_factory=lambda: np.full(3, np.inf))


def pi_acquisition(e_acq, state: PiState, kp, ki, dt: float) -> tuple[np.ndarray, PiState]:
    """Velocity command ``Kp e + Ki * integral(e)`` with ``e = p_target - p_uav``.

    The integral uses the rectangle rule and is clamped component-wise.
    """
    if not dt > 0:
        raise ValidationError("dt", f"must be > 0, got {dt!r}")
    e = np.asarray(e_acq, dtype=float)
    integral = np.clip(state.integral + e * dt, -state.clamp, state.clamp)
    v_cmd = diag(kp) * e + diag(ki) * integral
    return v_cmd, PiState(integral, state.clamp)


# --------------------------------------------------------------------------
# Sliding surface and barrier
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TrackingInput:
    """Error, error rate and reference acceleration for one control step."""

    e: np.ndarray
    e_dot: np.ndarray
    ref_accel: np.ndarray = field(default_factory=lambda: np.zeros(3))


def frac_pow(x, p: int, q: int):
    """Sign-preserving power ``sign(x) |x|^(p/q)``; odd and continuous."""
    check_exponents(p, q)
    x = np.asarray(x, dtype=float)
    out = np.sign(x) * np.abs(x) ** (p / q)
    return float(out) if out.ndim == 0 else out


def sliding_surface(inp: TrackingInput, alpha, beta, p: int, q: int) -> np.ndarray:
    """``s = e_dot + alpha e + beta sign(e)|e|^(p/q)`` element-wise."""
    e = inp.e
    return inp.e_dot + diag(alpha) * e + diag(beta) * frac_pow(e, p, q)


def _planar_sq(e) -> float:
    return float(e[0]) * float(e[0]) + float(e[1]) * float(e[1])


def barrier(e, d_s: float) -> float:
    """Logarithmic barrier ``log(1 / (d_s^2 - e_x^2 - e_y^2))``; e_z is ignored."""
    gap = d_s * d_s - _planar_sq(e)
    if gap <= 0.0:
        raise BarrierDomainError(f"horizontal error {math.sqrt(_planar_sq(e)):.4f} m >= d_s = {d_s}")
    return -math.log(gap)


def barrier_gradient(e, d_s: float) -> np.ndarray:
    """Gradient ``(2 e_x, 2 e_y, 0) / (d_s^2 - r^2)`` of :func:`barrier`."""
    ex, ey = float(e[0]), float(e[1])
    gap = d_s * d_s - (ex * ex + ey * ey)
    if gap <= 0.0:
        raise BarrierDomainError(f"horizontal error {math.hypot(ex, ey):.4f} m >= d_s = {d_s}")
    return np.array([2.0 * ex / gap, 2.0 * ey / gap, 0.0])


def clamp_to_barrier(e, d_s: float, fraction: float = 0.99) -> tuple[np.ndarray, bool]:
    """Project ``e`` radially onto ``fraction * d_s`` if it lies outside that disk.

    Returns the (possibly) clamped copy and whether clamping happened.
    """
    e = np.asarray(e, dtype=float)
    r = math.sqrt(_planar_sq(e))
    limit = fraction * d_s
    if r <= limit:
        return e, False
    out = e.copy()
    out[:2] *= limit / r
    return out, True


def _switch(s: np.ndarray, boundary_layer: float) -> np.ndarray:
    if boundary_layer > 0.0:
        return np.tanh(s / boundary_layer)
    return np.sign(s)


# --------------------------------------------------------------------------
# Tracking laws
# --------------------------------------------------------------------------


def nftsmc_bf(inp: TrackingInput, s: np.ndarray, model: UavModel, gains: ControllerGains, *,
              velocity: np.ndarray | None = None, barrier_e: np.ndarray | None = None,
              use_barrier: bool = True) -> np.ndarray:
    """Constraint-aware terminal sliding-mode law.

    ``u = M (a_ref - alpha e_dot - beta (p/q) diag(|e|^(p/q-1)) e_dot) + G
    - K_d s - K_sw sgn(s) - K_b grad B(e)``.

    ``|e|^(p/q-1)`` is evaluated as ``(|e| + eps_reg)^(p/q-1)``. The barrier
    term uses ``barrier_e`` when given (the mission layer passes a clamped
    error after a measurement loss) and raises :class:`BarrierDomainError`
    outside the domain. ``use_barrier=False`` gives the plain NFTSMC law.
    """
    e, e_dot = inp.e, inp.e_dot
    alpha, beta = diag(gains.alpha), diag(gains.beta)
    r = gains.p / gains.q
    nonlinear = beta * r * (np.abs(e) + gains.eps_reg) ** (r - 1.0) * e_dot
    equivalent = model.mass_matrix @ (inp.ref_accel - alpha * e_dot - nonlinear)
    u = (equivalent + model.gravity_aero(velocity)
         - diag(gains.k_d) * s - diag(gains.k_sw) * _switch(s, gains.boundary_layer))
    if use_barrier:
        u = u - diag(gains.k_b) * barrier_gradient(inp.e if barrier_e is None else barrier_e, gains.d_s)
    if not np.all(np.isfinite(u)):
        raise ControllerFault(f"non-finite control force {u}")
    return u


def nftsmc_control(inp: TrackingInput, s: np.ndarray, model: UavModel, gains: ControllerGains, *,
                   velocity: np.ndarray | None = None) -> np.ndarray:
    """The same law with ``K_b = 0`` (no barrier, no domain restriction)."""
    return nftsmc_bf(inp, s, model, gains, velocity=velocity, use_barrier=False)


def smc_control(inp: TrackingInput, model: UavModel, gains: ControllerGains, *,
                velocity: np.ndarray | None = None) -> np.ndarray:
    """Conventional SMC on the linear surface ``s = e_dot + lambda e``."""
    lam = diag(gains.smc_lambda)
    s = inp.e_dot + lam * inp.e
    u = (model.mass_matrix @ (inp.ref_accel - lam * inp.e_dot) + model.gravity_aero(velocity)
         - diag(gains.k_d) * s - diag(gains.k_sw) * _switch(s, gains.boundary_layer))
    if not np.all(np.isfinite(u)):
        raise ControllerFault(f"non-finite control force {u}")
    return u


@dataclass(frozen=True)
class PidState:
    integral: np.ndarray = field(default_factory=lambda: np.zeros(3))


def pid_control(inp: TrackingInput, state: PidState, gains: ControllerGains, model: UavModel,
                dt: float, *, velocity: np.ndarray | None = None) -> tuple[np.ndarray, PidState]:
    """Gravity-compensated PID on the tracking error (no reference feedforward).

    ``u = G - (Kp e + Ki integral(e) + Kd e_dot)``; the integral is clamped
    to ``pid_i_clamp``.
    """
    clamp = diag(gains.pid_i_clamp)
    integral = np.clip(state.integral + inp.e * dt, -clamp, clamp)
    u = model.gravity_aero(velocity) - (diag(gains.pid_kp) * inp.e + diag(gains.pid_ki) * integral
                                        + diag(gains.pid_kd) * inp.e_dot)
    if not np.all(np.isfinite(u)):
        raise ControllerFault(f"non-finite control force {u}")
    return u, PidState(integral)


def saturate(u: np.ndarray, limit: float) -> tuple[np.ndarray, bool]:
    """Scale ``u`` down to norm ``limit``; returns the force and a saturation flag."""
    n = math.sqrt(float(u @ u))
    if n <= limit:
        return u, False
    return u * (limit / n), True


# --------------------------------------------------------------------------
# Scalar on-surface dynamics
# --------------------------------------------------------------------------


def terminal_settling_bound(e0: float, alpha: float, beta: float, p: int, q: int) -> float:
    """``(q / (alpha (p - q))) ln((alpha e0^((p-q)/q) + beta) / beta)``.

    This is the exact time for ``e' = -alpha e - beta e^((2q-p)/q)`` to reach
    zero from ``e0``; it is the reference bound used by the acceptance suite.
    """
    check_exponents(p, q)
    return q / (alpha * (p - q)) * math.log((alpha * abs(e0) ** ((p - q) / q) + beta) / beta)


def surface_settling_time(e0: float, alpha: float, beta: float, exponent: float, dt: float,
                          tol: float = 1e-3, t_max: float = 100.0) -> float:
    """Time for ``e' = -alpha e - beta sign(e)|e|^exponent`` to enter ``|e| < tol``.

    Classic RK4 with step ``dt``; the crossing time is linearly interpolated.
    Returns ``inf`` if the tolerance is not reached by ``t_max``.
    """
    def f(x: float) -> float:
        return -alpha * x - beta * math.copysign(abs(x) ** exponent, x)

    x, t = float(e0), 0.0
    if abs(x) < tol:
        return 0.0
    while t < t_max:
        k1 = f(x)
        k2 = f(x + 0.5 * dt * k1)
        k3 = f(x + 0.5 * dt * k2)
        k4 = f(x + dt * k3)
        x_new = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if abs(x_new) < tol:
            frac = (abs(x) - tol) / (abs(x) - abs(x_new)) if abs(x) != abs(x_new) else 1.0
            return t + frac * dt
        x, t = x_new, t + dt
    return math.inf


def linear_settling_time(e0: float, lam: float, dt: float, tol: float = 1e-3, t_max: float = 100.0) -> float:
    """Settling time of the linear surface ``e' = -lambda e`` (same integrator)."""
    return surface_settling_time(e0, lam, 0.0, 1.0, dt, tol, t_max)


# --------------------------------------------------------------------------
# Trace log
# --------------------------------------------------------------------------

TRACE_COLUMNS = ("t_s", "e_x_m", "e_y_m", "e_z_m", "edot_x_mps", "edot_y_mps", "edot_z_mps",
                 "s_x", "s_y", "s_z", "barrier", "u_norm_N", "saturated")


def write_trace(rows: Iterable[tuple], path: str | Path) -> Path:
    """Per-step controller trace: t, e, e_dot, s, B, |u|, saturation flag."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for row in rows:
            t, e, e_dot, s, b, u_norm, sat = row
            w.writerow([f"{t:.4f}", *(f"{x:.6g}" for x in e), *(f"{x:.6g}" for x in e_dot),
                        *(f"{x:.6g}" for x in s), "" if b is None else f"{b:.6g}", f"{u_norm:.6g}", int(sat)])
    return path
