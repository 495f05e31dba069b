import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quaddock.core import (Attitude, ConfigError, ControllerGains, SimConfig, ValidationError, apply_overrides,
                           check_exponents, config_from_dict, dump_config, load_config, parse_config,
                           rng_stream, rotation_matrix, vec3, wrap_angle)


def test_minimal_file_takes_defaults(tmp_path):
    f = tmp_path / "c.yaml"
    f.write_text("seed: 1\n")
    cfg = load_config(f)
    assert cfg.sim.seed == 1
    assert cfg == apply_overrides(SimConfig(), {"sim.seed": 1})
    assert cfg.gains == ControllerGains()


def test_negative_dt_names_the_field(tmp_path):
    f = tmp_path / "c.yaml"
    f.write_text("sim:\n  dt: -0.01\n")
    with pytest.raises(ValidationError) as info:
        load_config(f)
    assert info.value.field == "sim.dt"


def test_parse_error_carries_line_context():
    with pytest.raises(ConfigError, match=r"cfg\.yaml:\d+:\d+: "):
        parse_config("sim:\n  dt: 0.01\n  seed: [1, 2\n", "cfg.yaml")


def test_unknown_key_rejected():
    with pytest.raises(ValidationError, match="sim.dtt"):
        config_from_dict({"sim": {"dtt": 0.1}})


def test_env_var_default_path(tmp_path, monkeypatch):
    f = tmp_path / "c.yaml"
    f.write_text("sp:\n  eps_p: 0.05\n")
    monkeypatch.setenv("QUADDOCK_CONFIG", str(f))
    assert load_config().sp.eps_p == 0.05
    monkeypatch.delenv("QUADDOCK_CONFIG")
    assert load_config() == SimConfig()


@pytest.mark.parametrize("key,value", [
    ("sp.t_s", 0.0), ("sp.eps_p", -1.0), ("sp.eps_t", 0.0), ("mission.delta_t", 2.5),
    ("perception.tau_conf", 1.0), ("perception.tau_conf", 0.0), ("perception.median_window", 4),
    ("gains.p", 4), ("gains.q", 5), ("gains.alpha", [1.0, -1.0, 1.0]), ("gains.d_s", 0.0),
    ("uav.mass_matrix", [[1, 0, 0], [0, -1, 0], [0, 0, 1]]),
])
def test_invariant_violations(key, value):
    with pytest.raises(ValidationError):
        apply_overrides(SimConfig(), {key: value})


def test_scalar_gain_expands_to_diagonal():
    cfg = apply_overrides(SimConfig(), {"gains.k_b": 0.7})
    assert cfg.gains.k_b == (0.7, 0.7, 0.7)


@pytest.mark.parametrize("p,q,ok", [(5, 3, True), (7, 5, True), (3, 3, False), (9, 3, False), (4, 3, False),
                                    (5, 2, False), (7, 3, False)])
def test_exponent_rule(p, q, ok):
    if ok:
        check_exponents(p, q)
    else:
        with pytest.raises(ValidationError):
            check_exponents(p, q)


_SAFE = {
    "sim.dt": st.floats(1e-4, 0.05),
    "sim.seed": st.integers(0, 2**63 - 1),
    "sim.t_max": st.floats(1.0, 500.0),
    "gains.alpha": st.lists(st.floats(0.01, 50.0), min_size=3, max_size=3),
    "gains.k_b": st.floats(0.01, 10.0),
    "gains.d_s": st.floats(0.05, 5.0),
    "gains.boundary_layer": st.floats(0.0, 1.0),
    "perception.tau_conf": st.floats(0.01, 0.99),
    "perception.median_window": st.sampled_from([3, 5, 7, 9]),
    "noise.enabled": st.booleans(),
    "noise.tag_pos_std": st.floats(0.0, 0.1),
    "sp.t_s": st.floats(0.1, 5.0),
    "sp.eps_p": st.floats(0.001, 1.0),
    "mission.delta_t": st.floats(0.1, 1.0),
    "mission.sp_horizontal_only": st.booleans(),
    "platform.tau_align": st.floats(0.01, 5.0),
    "scenario.gust_max": st.floats(0.0, 10.0),
    "sim.feedforward": st.sampled_from(["truth", "finite_difference"]),
}


@settings(max_examples=100, deadline=None)
@given(st.fixed_dictionaries({}, optional=_SAFE))
def test_config_round_trip(overrides):
    cfg = apply_overrides(SimConfig(), overrides)
    again = parse_config(dump_config(cfg))
    assert again == cfg
    assert dump_config(again) == dump_config(cfg)


def test_rng_determinism_and_separation():
    a = rng_stream(42, 0).random(1000)
    b = rng_stream(42, 0).random(1000)
    c = rng_stream(42, 1).random(1000)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_rng_statistics():
    x = rng_stream(42, 0).random(1_000_000)
    y = rng_stream(42, 1).random(1_000_000)
    assert abs(x.mean() - 0.5) < 0.01
    # |r| below 5 standard errors of the null correlation
    assert abs(np.corrcoef(x, y)[0, 1]) < 5.0 / math.sqrt(x.size)


def test_rotation_matrix_is_orthonormal():
    r = rotation_matrix(0.3, -0.4, 2.0)
    assert np.allclose(r @ r.T, np.eye(3), atol=1e-14)
    assert math.isclose(np.linalg.det(r), 1.0, rel_tol=1e-14)


def test_attitude_ranges():
    Attitude(0.1, -0.2, -math.pi).validate()
    for bad in (Attitude(math.pi / 2, 0, 0), Attitude(0, -math.pi / 2, 0), Attitude(0, 0, math.pi)):
        with pytest.raises(ValidationError):
            bad.validate()
    assert -math.pi <= wrap_angle(7.0) < math.pi


def test_vec3_rejects_non_finite():
    with pytest.raises(ValidationError):
        vec3(0.0, float("nan"), 1.0)
