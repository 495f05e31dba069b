import csv
import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quaddock import control as ctl
from quaddock.core import ControllerGains, ValidationError
from quaddock.world import UavModel, UavState, uav_step

G = ControllerGains()
MODEL = UavModel.from_mass(1.5)
finite = st.floats(-5, 5)
vec = st.lists(finite, min_size=3, max_size=3).map(np.array)


def closed_loop(law, e0, v0=(0.0, 0.0, 0.0), dt=0.005, t_end=8.0, gains=G, target_v=(0.0, 0.0, 0.0)):
    """Track a constant-velocity target with an ideal model; returns (t, e, s, u) arrays."""
    target_v = np.asarray(target_v, dtype=float)
    s = UavState(np.asarray(e0, dtype=float), np.asarray(v0, dtype=float) + target_v)
    pid = ctl.PidState()
    ts, es, ss, us = [], [], [], []
    for k in range(int(round(t_end / dt))):
        t = k * dt
        ref = target_v * t
        inp = ctl.TrackingInput(s.position - ref, s.velocity - target_v, np.zeros(3))
        if law == "pid":
            u, pid = ctl.pid_control(inp, pid, gains, MODEL, dt)
            sv = inp.e_dot
        elif law == "smc":
            u = ctl.smc_control(inp, MODEL, gains)
            sv = inp.e_dot + ctl.diag(gains.smc_lambda) * inp.e
        else:
            sv = ctl.sliding_surface(inp, gains.alpha, gains.beta, gains.p, gains.q)
            if law == "nftsmc":
                u = ctl.nftsmc_control(inp, sv, MODEL, gains)
            else:
                u = ctl.nftsmc_bf(inp, sv, MODEL, gains)
        ts.append(t), es.append(inp.e), ss.append(sv), us.append(u)
        s = uav_step(s, MODEL, u, dt)
    return np.array(ts), np.array(es), np.array(ss), np.array(us)


def settle_time(t, e, tol):
    """First time after which ||e|| stays below tol."""
    n = np.linalg.norm(e, axis=1)
    above = np.nonzero(n >= tol)[0]
    if above.size == 0:
        return 0.0
    if above[-1] == len(t) - 1:
        return math.inf
    return float(t[above[-1] + 1])


# ---------------------------------------------------------------- acquisition

def test_pi_examples():
    v, st0 = ctl.pi_acquisition(np.zeros(3), ctl.PiState(), 1.0, 1.0, 0.01)
    assert np.array_equal(v, np.zeros(3))
    v, _ = ctl.pi_acquisition(np.array([1.0, 0, 0]), ctl.PiState(), 0.5, 0.0, 0.01)
    assert np.allclose(v, [0.5, 0, 0])


def test_pi_integral_rectangle_rule():
    state = ctl.PiState()
    for _ in range(200):
        v, state = ctl.pi_acquisition(np.array([1.0, 0, 0]), state, 0.0, 0.1, 0.01)
    assert np.allclose(v, [0.2, 0, 0], atol=1e-6)


@given(st.lists(vec, min_size=1, max_size=50), st.floats(0.1, 3.0))
def test_pi_clamp_invariant(errors, clamp):
    state = ctl.PiState(np.zeros(3), np.full(3, clamp))
    for e in errors:
        _, state = ctl.pi_acquisition(e, state, 1.0, 1.0, 0.1)
        assert np.all(np.abs(state.integral) <= clamp)


def test_pi_rejects_bad_dt():
    with pytest.raises(ValidationError):
        ctl.pi_acquisition(np.zeros(3), ctl.PiState(), 1.0, 1.0, 0.0)


# ---------------------------------------------------------------- surface and barrier

def test_frac_pow_examples():
    assert ctl.frac_pow(0.0, 5, 3) == 0.0
    assert ctl.frac_pow(1.0, 7, 5) == 1.0
    assert ctl.frac_pow(-8.0, 5, 3) == pytest.approx(-32.0, rel=1e-14)
    with pytest.raises(ValidationError):
        ctl.frac_pow(1.0, 4, 3)


@given(st.floats(-100, 100))
def test_frac_pow_is_odd(x):
    assert ctl.frac_pow(-x, 5, 3) == -ctl.frac_pow(x, 5, 3)


def test_surface_examples():
    z = ctl.TrackingInput(np.zeros(3), np.zeros(3))
    assert np.array_equal(ctl.sliding_surface(z, 1.0, 1.0, 5, 3), np.zeros(3))
    one = ctl.TrackingInput(np.ones(3), np.zeros(3))
    assert np.allclose(ctl.sliding_surface(one, 1.0, 1.0, 5, 3), [2, 2, 2])


@given(vec, vec, st.lists(st.floats(0.1, 5), min_size=3, max_size=3),
       st.lists(st.floats(0.1, 5), min_size=3, max_size=3))
def test_surface_matches_scalar_recomputation(e, e_dot, alpha, beta):
    s = ctl.sliding_surface(ctl.TrackingInput(e, e_dot), tuple(alpha), tuple(beta), 5, 3)
    for i in range(3):
        x = float(e[i])
        ref = float(e_dot[i]) + alpha[i] * x + beta[i] * math.copysign(abs(x) ** (5 / 3), x)
        assert s[i] == pytest.approx(ref, rel=1e-12, abs=1e-12)


def test_barrier_examples():
    assert ctl.barrier(np.zeros(3), 0.5) == pytest.approx(-2 * math.log(0.5))
    assert ctl.barrier(np.array([0.0, 0.0, 5.0]), 1.0) == 0.0
    assert ctl.barrier(np.array([0.999 * 0.5, 0, 0]), 0.5) > ctl.barrier(np.array([0.9 * 0.5, 0, 0]), 0.5)
    with pytest.raises(ctl.BarrierDomainError):
        ctl.barrier(np.array([0.3, 0.4, 0.0]), 0.5)
    with pytest.raises(ctl.BarrierDomainError):
        ctl.barrier_gradient(np.array([0.6, 0.0, 0.0]), 0.5)


def test_barrier_monotone_sweep():
    rs = np.linspace(0.0, 0.4999, 500)
    b = [ctl.barrier(np.array([r, 0.0, 0.0]), 0.5) for r in rs]
    assert np.all(np.diff(b) > 0)


def test_gradient_examples():
    assert np.array_equal(ctl.barrier_gradient(np.zeros(3), 0.5), np.zeros(3))
    g = ctl.barrier_gradient(np.array([0.2, 0.0, 3.0]), 0.5)
    assert g[0] > 0 and g[1] == 0 and g[2] == 0


def test_gradient_finite_differences():
    rng = np.random.default_rng(11)
    d_s = 0.5
    for _ in range(100):
        r = d_s * 0.95 * math.sqrt(rng.random())
        a = rng.uniform(0, 2 * math.pi)
        e = np.array([r * math.cos(a), r * math.sin(a), rng.normal()])
        grad = ctl.barrier_gradient(e, d_s)
        h = 1e-6
        fd = np.array([(ctl.barrier(e + h * ei, d_s) - ctl.barrier(e - h * ei, d_s)) / (2 * h) for ei in np.eye(3)])
        assert np.linalg.norm(fd - grad) <= 1e-6 * max(np.linalg.norm(grad), 1.0)


def test_clamp_to_barrier():
    e, clamped = ctl.clamp_to_barrier(np.array([0.6, 0.8, 0.1]), 0.5)
    assert clamped and math.hypot(e[0], e[1]) == pytest.approx(0.495) and e[2] == 0.1
    e2, clamped = ctl.clamp_to_barrier(np.array([0.1, 0.0, 0.0]), 0.5)
    assert not clamped and np.array_equal(e2, [0.1, 0.0, 0.0])


# ---------------------------------------------------------------- laws

def test_equilibrium_gives_gravity_compensation():
    inp = ctl.TrackingInput(np.zeros(3), np.zeros(3), np.zeros(3))
    weight = MODEL.gravity_aero()
    assert np.array_equal(ctl.nftsmc_bf(inp, np.zeros(3), MODEL, G), weight)
    assert np.array_equal(ctl.nftsmc_control(inp, np.zeros(3), MODEL, G), weight)
    assert np.array_equal(ctl.smc_control(inp, MODEL, G), weight)
    u, _ = ctl.pid_control(inp, ctl.PidState(), G, MODEL, 0.005)
    assert np.array_equal(u, weight)


def test_reaching_law_sign():
    inp = ctl.TrackingInput(np.zeros(3), np.zeros(3), np.zeros(3))
    u = ctl.nftsmc_bf(inp, np.array([1.0, 0, 0]), MODEL, G)
    assert np.allclose(u - MODEL.gravity_aero(), [-G.k_d[0] - G.k_sw[0], 0, 0])


@given(st.lists(st.floats(-0.35, 0.35), min_size=3, max_size=3).map(np.array), vec, vec)
def test_nftsmc_is_bf_without_barrier(e, e_dot, a):
    inp = ctl.TrackingInput(e, e_dot, a)
    s = ctl.sliding_surface(inp, G.alpha, G.beta, G.p, G.q)
    assert np.array_equal(ctl.nftsmc_control(inp, s, MODEL, G),
                          ctl.nftsmc_bf(inp, s, MODEL, replace(G, k_b=(0.0, 0.0, 0.0))))


def test_law_is_finite_at_zero_error_with_motion():
    inp = ctl.TrackingInput(np.zeros(3), np.array([1.0, -1.0, 0.5]))
    s = ctl.sliding_surface(inp, G.alpha, G.beta, G.p, G.q)
    assert np.all(np.isfinite(ctl.nftsmc_bf(inp, s, MODEL, G)))


def test_pid_anti_windup():
    state = ctl.PidState()
    inp = ctl.TrackingInput(np.array([5.0, 0, 0]), np.zeros(3))
    for _ in range(1000):
        _, state = ctl.pid_control(inp, state, G, MODEL, 0.01)
    assert state.integral[0] == pytest.approx(G.pid_i_clamp[0])


def test_saturation():
    u, flag = ctl.saturate(np.array([30.0, 40.0, 0.0]), 25.0)
    assert flag and np.linalg.norm(u) == pytest.approx(25.0)
    u, flag = ctl.saturate(np.array([1.0, 0, 0]), 25.0)
    assert not flag


# ---------------------------------------------------------------- closed loop

def test_closed_loop_converges_and_refines():
    e0 = (0.5 * G.d_s, 0.0, 0.3)
    t, e, _, _ = closed_loop("nftsmc_bf", e0, dt=0.005)
    tr, er, _, _ = closed_loop("nftsmc_bf", e0, dt=0.0005)
    t_star, t_ref = settle_time(t, e, 1e-2), settle_time(tr, er, 1e-2)
    assert math.isfinite(t_star) and math.isfinite(t_ref)
    assert abs(t_star - t_ref) <= 0.05 * t_ref


def test_terminal_surface_settles_no_later_than_linear():
    e0 = (0.3, -0.2, 0.4)
    t, e_n, _, _ = closed_loop("nftsmc", e0, t_end=15.0)
    _, e_s, _, _ = closed_loop("smc", e0, t_end=15.0)
    assert settle_time(t, e_n, 1e-3) <= settle_time(t, e_s, 1e-3)


def test_reaching_condition_along_trajectory():
    dt = 0.005
    _, _, s, _ = closed_loop("nftsmc_bf", (0.2, -0.1, 0.3), v0=(0.3, 0.2, -0.1), dt=dt, t_end=3.0)
    sdot = np.diff(s, axis=0) / dt
    norm = np.linalg.norm(s[:-1], axis=1)
    mask = norm > 0.05
    assert mask.sum() > 10
    assert np.all(np.einsum("ij,ij->i", s[:-1][mask], sdot[mask]) < 0)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 0.9), st.floats(0, 2 * math.pi), st.floats(0.0, 0.3), st.floats(0, 2 * math.pi),
       st.floats(0.0, 0.2), st.floats(0, 2 * math.pi))
def test_barrier_keeps_error_inside_disk(r0, a0, speed, heading, v_rel, a_rel):
    e0 = (r0 * G.d_s * math.cos(a0), r0 * G.d_s * math.sin(a0), 0.2)
    v0 = (v_rel * math.cos(a_rel), v_rel * math.sin(a_rel), 0.0)
    tv = (speed * math.cos(heading), speed * math.sin(heading), 0.0)
    _, e, _, _ = closed_loop("nftsmc_bf", e0, v0=v0, t_end=4.0, target_v=tv)
    assert np.all(e[:, 0] ** 2 + e[:, 1] ** 2 < G.d_s ** 2)


def test_smoothed_switching_limits_high_frequency_power():
    gains = replace(G, boundary_layer=0.05)
    dt = 0.005
    _, _, _, u = closed_loop("nftsmc_bf", (0.2, 0.1, 0.2), dt=dt, t_end=10.0, gains=gains)
    x = u[:, 0] - u[:, 0].mean()
    power = np.abs(np.fft.rfft(x)) ** 2
    freq = np.fft.rfftfreq(x.size, dt)
    assert power[freq > 50.0].sum() < 0.05 * power.sum()


# ---------------------------------------------------------------- scalar on-surface dynamics

@pytest.mark.parametrize("e0", [0.1, 0.5, 1.0])
def test_bound_is_exact_for_the_sub_unity_exponent(e0):
    """The closed-form bound is the settling time of ``e' = -a e - b e^((2q-p)/q)``."""
    bound = ctl.terminal_settling_bound(e0, 1.5, 1.0, 5, 3)
    # RK4 chatters near zero at about (beta dt)^1.5; the remaining tail below tol lasts < 1.5 tol^(2/3)
    t = ctl.surface_settling_time(e0, 1.5, 1.0, 1.0 / 3.0, 1e-5, tol=1e-6)
    assert bound - 2e-4 <= t <= bound + 1e-6


def test_linear_settling_time_closed_form():
    t = ctl.linear_settling_time(0.5, 1.5, 1e-3, tol=1e-3)
    assert t == pytest.approx(math.log(0.5 / 1e-3) / 1.5, rel=1e-4)


def test_trace_log(tmp_path):
    row = (0.0, np.zeros(3), np.ones(3), np.ones(3), None, 14.7, False)
    path = ctl.write_trace([row], tmp_path / "t.csv")
    rows = list(csv.reader(path.open()))
    assert tuple(rows[0]) == ctl.TRACE_COLUMNS
    assert rows[1][10] == "" and rows[1][12] == "0"
