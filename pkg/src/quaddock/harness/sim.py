"""Closed-loop trial simulation: world + perception + control + mission."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any

import numpy as np

from .. import control as ctl
from ..core import (STREAM_DETECTION, STREAM_FEEDBACK, STREAM_SCENARIO, STREAM_TAG, SimConfig,
                    SimulationFault, ValidationError, rng_stream)
from ..mission import (MissionEvent, MissionState, Phase, Sensors, SpWindow, TouchdownLimits,
                       mission_step, plate_offset, touchdown_check)
from ..perception import (EstimationError, MedianWindow, lift_to_world, median_update,
                          platform_feedback, sample_detection, tag_measure)
from ..world import (PlatformState, Terrain, UavModel, UavState, gravity_projection, make_platform,
                     platform_step, tag_position, terrain_height, uav_step)
from .scenarios import Scenario, get_terrain, sample_mission_scenario, sample_tracking_scenario


@dataclass
class TrialResult:
    """Outcome of one trial. ``success`` is true exactly when the UAV docked."""

    seed: int
    controller: str
    terrain: str
    final_phase: str
    reason: str
    touchdown_error: float | None
    time_to_dock: float | None
    max_barrier: float | None
    max_r_ratio: float
    fov_violation: bool
    faults: list
    saturation_steps: int
    duration: float
    transitions: list = field(default_factory=list)
    events: list = field(default_factory=list)

    @property
    def fault_count(self) -> int:
        return len(self.faults)

    @property
    def success(self) -> bool:
        return self.final_phase == Phase.DOCKED.value

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["success"] = self.success
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "TrialResult":
        d = dict(d)
        d.pop("success", None)
        d["transitions"] = [list(x) for x in d.get("transitions", [])]
        d["events"] = [list(x) for x in d.get("events", [])]
        d["faults"] = [list(x) for x in d.get("faults", [])]
        return cls(**d)


@dataclass
class TrialLog:
    """Per-step records kept when a trial runs verbosely."""

    steps: list = field(default_factory=list)
    trace: list = field(default_factory=list)
    detections: list = field(default_factory=list)
    events: list = field(default_factory=list)
    rewards: list = field(default_factory=list)

    STEP_COLUMNS = ("t_s", "phase", "D", "uav_x_m", "uav_y_m", "uav_z_m", "tag_x_m", "tag_y_m", "tag_z_m",
                    "z_ref_m", "r_true_m", "platform_roll_rad", "platform_pitch_rad", "platform_gz")


class TrackingController:
    """Uniform wrapper around the four tracking laws (state + barrier handling)."""

    def __init__(self, controller_id: str, cfg: SimConfig, model: UavModel):
        if controller_id not in ctl.CONTROLLERS:
            raise ValidationError("controller", f"unknown controller {controller_id!r}; choose from {ctl.CONTROLLERS}")
        self.id = controller_id
        self.gains = cfg.gains
        self.model = model
        self.dt = cfg.sim.dt
        self.pid_state = ctl.PidState()

    def reset(self) -> None:
        self.pid_state = ctl.PidState()

    def compute(self, inp: ctl.TrackingInput, velocity: np.ndarray):
        """Returns ``(u, s, barrier_value, clamped)``."""
        g = self.gains
        if self.id == "pid":
            u, self.pid_state = ctl.pid_control(inp, self.pid_state, g, self.model, self.dt, velocity=velocity)
            return u, inp.e_dot + ctl.diag(g.pid_kp) / ctl.diag(g.pid_kd) * inp.e, None, False
        if self.id == "smc":
            s = inp.e_dot + ctl.diag(g.smc_lambda) * inp.e
            return ctl.smc_control(inp, self.model, g, velocity=velocity), s, None, False
        s = ctl.sliding_surface(inp, g.alpha, g.beta, g.p, g.q)
        if self.id == "nftsmc":
            return ctl.nftsmc_control(inp, s, self.model, g, velocity=velocity), s, None, False
        e_b, clamped = ctl.clamp_to_barrier(inp.e, g.d_s)
        u = ctl.nftsmc_bf(inp, s, self.model, g, velocity=velocity, barrier_e=e_b)
        return u, s, ctl.barrier(e_b, g.d_s), clamped


class _ReferenceGovernor:
    """Second-order, rate- and acceleration-limited altitude reference."""

    def __init__(self, z: float, vz: float, omega: float, a_max: float):
        self.z, self.vz, self.az = z, vz, 0.0
        self.omega, self.a_max = omega, a_max

    def step(self, target: float, v_max: float, dt: float) -> None:
        w = self.omega
        a = w * w * (target - self.z) - 2.0 * w * self.vz
        a = min(max(a, -self.a_max), self.a_max)
        vz = min(max(self.vz + a * dt, -v_max), v_max)
        self.az = (vz - self.vz) / dt
        self.vz = vz
        self.z += vz * dt


def _model(cfg: SimConfig) -> UavModel:
    return UavModel(np.asarray(cfg.uav.mass_matrix, dtype=float), cfg.sim.gravity, cfg.uav.drag)


def _initial_platform(cfg: SimConfig, terrain: Terrain, scenario: Scenario, docking: int) -> PlatformState:
    speed = scenario.platform_speed
    if docking:
        speed = min(speed, cfg.platform.dock_speed_max)
    p = make_platform(terrain, scenario.platform_x0, 0.0, cmd_velocity=(scenario.platform_speed, 0.0),
                      docking=docking, params=cfg.platform)
    return replace(p, speed=speed, velocity=np.array([speed, 0.0, 0.0]))


def run_trial(config: SimConfig, controller: str, terrain: str, seed: int, *,
              log: TrialLog | None = None) -> TrialResult:
    """Full docking mission (acquisition -> tracking -> landing) for one seed.

    Identical ``(config, controller, terrain, seed)`` give identical results.
    """
    terrain_obj = get_terrain(terrain)
    scenario = sample_mission_scenario(config.scenario, rng_stream(seed, STREAM_SCENARIO))
    return _simulate(config, controller, terrain, terrain_obj, scenario, seed, mission=True,
                     duration=config.sim.t_max, log=log)


def run_tracking_trial(config: SimConfig, controller: str, terrain: str, seed: int, *,
                       duration: float | None = None, log: TrialLog | None = None) -> TrialResult:
    """Tracking phase only: starts engaged above the moving platform, no landing."""
    terrain_obj = get_terrain(terrain)
    scenario = sample_tracking_scenario(config.scenario, rng_stream(seed, STREAM_SCENARIO), config.gains.d_s)
    return _simulate(config, controller, terrain, terrain_obj, scenario, seed, mission=False,
                     duration=duration or config.scenario.tracking_duration, log=log)


def _simulate(cfg: SimConfig, controller_id: str, terrain_id: str, terrain: Terrain, scenario: Scenario,
              seed: int, *, mission: bool, duration: float, log: TrialLog | None) -> TrialResult:
    dt = cfg.sim.dt
    gains = cfg.gains
    d_s = gains.d_s
    d_s2 = d_s * d_s
    pcfg, mcfg = cfg.platform, cfg.mission
    model = _model(cfg)
    controller = TrackingController(controller_id, cfg, model)
    rng_det = rng_stream(seed, STREAM_DETECTION)
    rng_tag = rng_stream(seed, STREAM_TAG)
    rng_fb = rng_stream(seed, STREAM_FEEDBACK)
    limits = TouchdownLimits.from_config(pcfg, mcfg)

    platform = _initial_platform(cfg, terrain, scenario, docking=0 if mission else 1)
    torso = platform.position
    if mission:
        start = torso + scenario.uav_offset + np.array([0.0, 0.0, mcfg.delta_a])
        uav = UavState(start, np.zeros(3))
        state = MissionState(Phase.ACQUISITION, 0, 0.0)
    else:
        start = tag_position(platform, pcfg) + scenario.uav_offset
        start[2] = torso[2] + mcfg.delta_t
        uav = UavState(start, platform.velocity + scenario.uav_velocity)
        state = MissionState(Phase.TRACKING, 1, 0.0)

    sp = SpWindow(cfg.sp.t_s)
    window = MedianWindow(cfg.perception.median_window)
    pi_state = ctl.PiState(np.zeros(3), np.asarray(gains.i_clamp, dtype=float))
    hold_xy = uav.position[:2].copy()
    hover_z = uav.position[2]
    p_q_est: np.ndarray | None = None
    held_tag = None
    held_t = 0.0
    tag_visible = False
    gov = None if mission else _ReferenceGovernor(uav.position[2], uav.velocity[2], mcfg.ref_omega, mcfg.ref_accel_max)
    v_ff_filt = platform.velocity.copy()

    frame_period = 1.0 / cfg.sim.perception_rate
    next_frame = 0.0
    transitions = [[0.0, state.phase.value]]
    events: list[list] = []
    faults: list[list] = []
    was_visible = True
    sat_steps = 0
    max_b = -math.inf
    max_ratio = 0.0
    fov_violation = False
    outside = False
    touchdown_error = None
    time_to_dock = None
    n_steps = int(round(duration / dt))
    t = 0.0
    mass = model.mass_matrix

    for n in range(n_steps):
        t = n * dt
        phase = state.phase
        tag_true = tag_position(platform, pcfg)

        # ---- perception at the camera rate (zero-order hold in between)
        if t + 1e-12 >= next_frame:
            next_frame += frame_period
            if phase is Phase.ACQUISITION:
                det = sample_detection(uav, platform, cfg.camera, cfg.perception, cfg.noise, rng_det, t)
                accepted = det is not None and det.confidence >= cfg.perception.tau_conf
                if accepted:
                    window, centroid = median_update(window, det.centroid)
                    try:
                        p_q_est = lift_to_world(centroid, uav, cfg.camera, terrain, pcfg.standing_height)
                    except EstimationError:
                        pass  # keep the previous estimate
                if log is not None:
                    log.detections.append((t, det.u if det else None, det.v if det else None,
                                           det.confidence if det else None, accepted))
            tag = tag_measure(uav, platform, d_s, cfg.noise, rng_tag, pcfg)
            tag_visible = tag is not None
            if tag_visible:
                held_tag, held_t = tag, t

        fb = platform_feedback(platform, cfg.noise, rng_fb)
        if held_tag is not None:
            p_t = held_tag.p_t
            if not tag_visible:
                p_t = p_t + fb.velocity * (t - held_t)
        else:
            p_t = None

        # ---- truth monitors while the barrier controller is responsible
        if phase in (Phase.TRACKING, Phase.LANDING):
            dx = uav.position[0] - tag_true[0]
            dy = uav.position[1] - tag_true[1]
            r2 = dx * dx + dy * dy
            max_ratio = max(max_ratio, math.sqrt(r2) / d_s)
            if r2 >= d_s2:
                fov_violation = True
                if not outside:
                    events.append([round(t, 6), phase.value, MissionEvent.FOV_VIOLATION.value, f"r={math.sqrt(r2):.3f}"])
                outside = True
            else:
                outside = False
                max_b = max(max_b, -math.log(d_s2 - r2))

        # ---- mission logic
        if mission:
            e_meas = None
            z_ref_now = gov.z if gov is not None else uav.position[2]
            if tag_visible and p_t is not None:
                e_meas = uav.position - np.array([p_t[0], p_t[1], z_ref_now])
            contact, contact_reason = None, ""
            if phase is Phase.LANDING:
                along, across, rel_h = plate_offset(uav, platform, pcfg.plate_height)
                if rel_h <= limits.contact_tol:
                    contact = touchdown_check(uav, platform, limits, pcfg.plate_height)
                    if not contact:
                        rel_vz = uav.velocity[2] - platform.velocity[2]
                        contact_reason = "hard_touchdown" if abs(rel_vz) > limits.v_max else "missed_plate"
                    else:
                        touchdown_error = math.hypot(along, across)
            if phase is Phase.ACQUISITION:
                z_q = p_q_est[2] if p_q_est is not None else None
                z_t = None
            else:
                z_t = p_t[2] if p_t is not None else None
                z_q = z_t - pcfg.plate_height if z_t is not None else None
            sensors = Sensors(tag=held_tag if tag_visible else None, e=e_meas, z_q=z_q, z_t=z_t,
                              uav_z=float(uav.position[2]),
                              ground_z=terrain_height(terrain, uav.position[0], uav.position[1]),
                              contact=contact, contact_reason=contact_reason)
            new_state, cmd, evs = mission_step(state, sensors, sp, mcfg, cfg.sp, d_s, t, cfg.sim.t_max)
            for ev, reason in evs:
                events.append([round(t, 6), new_state.phase.value, ev.value, reason])
                if ev is MissionEvent.TAG_LOST:
                    faults.append([round(t, 6), "tag_lost", phase.value])
            if new_state.phase is not phase:
                transitions.append([round(t, 6), new_state.phase.value])
                if new_state.phase is Phase.TRACKING and phase is Phase.ACQUISITION:
                    gov = _ReferenceGovernor(uav.position[2], uav.velocity[2], mcfg.ref_omega, mcfg.ref_accel_max)
                    controller.reset()
                if new_state.phase is Phase.DOCKED:
                    time_to_dock = t
            if new_state.docking != platform.docking:
                platform = replace(platform, docking=new_state.docking)
            state = new_state
            phase = state.phase
            if phase is Phase.ABORTED or phase is Phase.DOCKED:
                break
            z_set = cmd.z_setpoint
        else:
            if held_tag is not None and p_t is not None:
                z_set = p_t[2] - pcfg.plate_height + mcfg.delta_t
            else:
                z_set = gov.z
            if tag_visible != was_visible and not tag_visible:
                faults.append([round(t, 6), "tag_lost", phase.value])
            was_visible = tag_visible

        # ---- control
        if phase is Phase.ACQUISITION:
            if p_q_est is not None:
                target_xy = p_q_est[:2]
                target_z = z_set if z_set is not None else hover_z
            else:
                target_xy = hold_xy
                target_z = hover_z
            e_acq = np.array([target_xy[0] - uav.position[0], target_xy[1] - uav.position[1],
                              target_z - uav.position[2]])
            v_cmd, pi_state = ctl.pi_acquisition(e_acq, pi_state, gains.kp, gains.ki, dt)
            if p_q_est is not None:
                # the quadruped reports its velocity; feed it forward
                v_cmd[:2] += fb.velocity[:2]
            vh = math.hypot(v_cmd[0], v_cmd[1])
            if vh > cfg.uav.acq_speed_max:
                v_cmd[:2] *= cfg.uav.acq_speed_max / vh
            v_cmd[2] = min(max(v_cmd[2], -1.0), 1.0)
            u = model.gravity_aero(uav.velocity) + mass @ (cfg.uav.vel_gain * (v_cmd - uav.velocity))
            s_vec, b_val, clamped = None, None, False
        else:
            if z_set is None:
                z_set = gov.z
            v_max = mcfg.descent_speed if phase is Phase.LANDING else mcfg.ref_speed_max
            gov.step(z_set, v_max, dt)
            if p_t is None:
                p_t = tag_true
            ref = np.array([p_t[0], p_t[1], gov.z])
            ref_vel = np.array([fb.velocity[0], fb.velocity[1], gov.vz])
            if cfg.sim.feedforward == "truth":
                a_xy = platform.acceleration
            else:
                v_prev = v_ff_filt
                v_ff_filt = v_ff_filt + (dt / 0.2) * (fb.velocity - v_ff_filt)
                a_xy = (v_ff_filt - v_prev) / dt
            ref_acc = np.array([a_xy[0], a_xy[1], gov.az])
            inp = ctl.TrackingInput(uav.position - ref, uav.velocity - ref_vel, ref_acc)
            try:
                u, s_vec, b_val, clamped = controller.compute(inp, uav.velocity)
            except (ctl.ControllerFault, ctl.BarrierDomainError) as exc:
                state = replace(state, phase=Phase.ABORTED, reason=f"controller_fault: {exc}")
                transitions.append([round(t, 6), Phase.ABORTED.value])
                break
            if clamped:
                faults.append([round(t, 6), "barrier_clamp", phase.value])

        u, saturated = ctl.saturate(u, cfg.uav.thrust_limit)
        sat_steps += int(saturated)

        if log is not None:
            g = gravity_projection(platform.attitude)
            log.steps.append((t, phase.value, platform.docking, *uav.position, *tag_true,
                              gov.z if gov is not None else float("nan"),
                              math.hypot(uav.position[0] - tag_true[0], uav.position[1] - tag_true[1]),
                              platform.attitude.roll, platform.attitude.pitch, g[2]))
            if s_vec is not None:
                log.trace.append((t, inp.e, inp.e_dot, s_vec, b_val, float(np.linalg.norm(u)), saturated))

        try:
            uav = uav_step(uav, model, u, dt, scenario.disturbance(t))
        except SimulationFault as exc:
            state = replace(state, phase=Phase.ABORTED, reason=f"sim_fault: {exc}")
            transitions.append([round(t, 6), Phase.ABORTED.value])
            break
        platform = platform_step(platform, terrain, dt, pcfg)

    if log is not None:
        log.events.extend((e[0], e[1], e[2], e[3]) for e in events)

    final = state.phase
    reason = state.reason
    if mission and final not in (Phase.DOCKED, Phase.ABORTED):
        final, reason = Phase.ABORTED, "timeout"
        events.append([round(t, 6), final.value, MissionEvent.TIMEOUT.value, "duration"])
        transitions.append([round(t, 6), final.value])
    return TrialResult(
        seed=int(seed), controller=controller_id, terrain=terrain_id, final_phase=final.value, reason=reason,
        touchdown_error=None if touchdown_error is None else round(touchdown_error, 9),
        time_to_dock=None if time_to_dock is None else round(time_to_dock, 6),
        max_barrier=None if (max_b == -math.inf or fov_violation) else round(max_b, 9),
        max_r_ratio=round(max_ratio, 9), fov_violation=fov_violation, faults=faults,
        saturation_steps=sat_steps, duration=round(t, 6), transitions=transitions, events=events,
    )
