import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quaddock.core import (Attitude, CameraSection, NoiseSection, PerceptionSection, PlatformSection,
                           ValidationError, rng_stream)
from quaddock.perception import (EstimationError, MedianWindow, camera_rotation, detect_long_range,
                                 detection_confidence, lift_to_world, median_update, project,
                                 sample_detection, tag_measure, write_detection_log)
from quaddock.world import UavState, make_platform, make_track, tag_position, terrain_height, uniform_stairs

CAM = CameraSection()
PERC = PerceptionSection()
P = PlatformSection()
QUIET = NoiseSection(enabled=False)
FLAT = make_track("flat", 1)


def _platform(x=0.0, y=0.0):
    return make_platform(FLAT, x, y, params=P)


# ---------------------------------------------------------------- detector

def test_target_below_projects_to_centre():
    plat = _platform(2.0, 1.0)
    uav = UavState(plat.position + [0.0, 0.0, 1.0])
    det = detect_long_range(uav, plat, CAM, PERC, QUIET, rng_stream(0, 1))
    assert det is not None
    assert det.centroid == pytest.approx((CAM.width / 2, CAM.height / 2))
    assert det.confidence >= PERC.tau_conf


def test_target_outside_frustum():
    plat = _platform()
    uav = UavState(np.array([10.0, 0.0, 1.0]))
    assert detect_long_range(uav, plat, CAM, PERC, QUIET, rng_stream(0, 1)) is None
    assert project(plat.position, UavState(plat.position - [0.0, 0.0, 1.0]), CAM) is None


def test_acceptance_rate_falls_with_range():
    noise = NoiseSection()
    rates = []
    for h in (2.0, 4.0, 6.0, 7.0, 8.0, 9.0, 10.0, 12.0, 16.0):
        rng = rng_stream(7, int(h * 10))
        plat = _platform()
        uav = UavState(plat.position + [0.0, 0.0, h])
        hits = sum(detect_long_range(uav, plat, CAM, PERC, noise, rng) is not None for _ in range(10_000))
        rates.append(hits / 10_000)
    assert all(b <= a for a, b in zip(rates, rates[1:])), rates
    assert rates[0] > 0.99 and rates[-1] < 0.01


@settings(max_examples=200, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.5, 15), st.integers(0, 10_000),
       st.floats(0.05, 0.95))
def test_gate_never_passes_low_confidence(dx, dy, h, seed, tau):
    perc = PerceptionSection(tau_conf=tau)
    plat = _platform()
    uav = UavState(plat.position + [dx, dy, h])
    det = detect_long_range(uav, plat, CAM, perc, NoiseSection(), rng_stream(seed, 1))
    assert det is None or det.confidence >= tau
    if det is not None:
        assert 0 <= det.u <= CAM.width and 0 <= det.v <= CAM.height and 0 <= det.confidence <= 1


def test_detection_consumes_fixed_draws():
    plat = _platform()
    a, b = rng_stream(3, 1), rng_stream(3, 1)
    sample_detection(UavState(np.array([50.0, 0, 1.0])), plat, CAM, PERC, NoiseSection(), a)
    sample_detection(UavState(plat.position + [0, 0, 2.0]), plat, CAM, PERC, NoiseSection(), b)
    assert a.random() == b.random()


def test_confidence_is_logistic_in_range():
    assert detection_confidence(PERC.conf_midpoint, PERC) == pytest.approx(0.5)
    assert detection_confidence(1.0, PERC) > detection_confidence(5.0, PERC)


# ---------------------------------------------------------------- median filter

def test_median_examples():
    w = MedianWindow(3)
    for u in (3.0, 1.0, 9.0):
        w, out = median_update(w, (u, 0.0))
    assert out[0] == 3.0
    w = MedianWindow(5)
    for _ in range(8):
        w, out = median_update(w, (2.5, -1.0))
        assert out == (2.5, -1.0)


# a spike as the very first sample is its own median, so positions start at 1
@pytest.mark.parametrize("pos", range(1, 12))
def test_single_spike_is_rejected(pos):
    w = MedianWindow(5)
    for i in range(12):
        w, out = median_update(w, (1e3 if i == pos else 0.0, 1e3 if i == pos else 0.0))
        assert out[0] <= 0.0 and out[1] <= 0.0


@given(st.lists(st.tuples(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6)), min_size=1, max_size=30),
       st.sampled_from([3, 5, 7]))
def test_median_is_an_order_statistic(samples, size):
    w = MedianWindow(size)
    for s in samples:
        w, out = median_update(w, s)
        assert out[0] in [b[0] for b in w.buffer]
        assert out[1] in [b[1] for b in w.buffer]
        assert len(w.buffer) <= size


def test_median_window_validation():
    for bad in (4, 1, 2):
        with pytest.raises(ValidationError):
            MedianWindow(bad)
    with pytest.raises(ValidationError):
        median_update(MedianWindow(3), (float("nan"), 0.0))


# ---------------------------------------------------------------- lifting

def test_centre_pixel_lifts_to_nadir():
    uav = UavState(np.array([1.5, -2.0, 3.0]))
    p = lift_to_world((CAM.width / 2, CAM.height / 2), uav, CAM, FLAT)
    assert np.allclose(p, [1.5, -2.0, 0.0])


@settings(max_examples=100, deadline=None)
@given(st.floats(-0.4, 0.4), st.floats(-0.4, 0.4), st.floats(-3, 3), st.floats(0.5, 4.0),
       st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), st.booleans())
def test_projection_round_trip(roll, pitch, yaw, h, gx, gy, gimbal):
    cam = CameraSection(gimbal=gimbal)
    terrain = uniform_stairs(0.12, level_count=2)
    uav = UavState(np.array([4.0, 0.0, 2.0 + h]), attitude=Attitude(roll, pitch, yaw))
    ground = np.array([4.0 + gx, gy, 0.0])
    ground[2] = terrain_height(terrain, ground[0], ground[1])
    px = project(ground, uav, cam)
    if px is None:
        return
    p = lift_to_world(px, uav, cam, terrain)
    again = project(p, uav, cam)
    assert math.dist(px, again) < 1.0


def test_horizontal_ray_is_an_estimation_error():
    cam = CameraSection(gimbal=False)
    uav = UavState(np.array([0.0, 0.0, 2.0]), attitude=Attitude(0.5, 0.0, 0.0))
    r = camera_rotation(uav, cam)
    d = np.array([0.0, 1.0, 0.0])
    rc = r.T @ d
    if rc[2] < 0:
        rc = -rc
    px = (CAM.width / 2 + CAM.focal_px * rc[0] / rc[2], CAM.height / 2 + CAM.focal_px * rc[1] / rc[2])
    with pytest.raises(EstimationError):
        lift_to_world(px, uav, cam, FLAT)


def test_plane_behind_camera_is_an_estimation_error():
    uav = UavState(np.array([0.0, 0.0, -1.0]))
    with pytest.raises(EstimationError):
        lift_to_world((CAM.width / 2, CAM.height / 2), uav, CAM, FLAT)


# ---------------------------------------------------------------- tag

def test_tag_exactly_below_without_noise():
    plat = _platform(1.0, 2.0)
    tag = tag_position(plat, P)
    m = tag_measure(UavState(tag + [0.0, 0.0, 0.8]), plat, 0.5, QUIET, rng_stream(0, 2), P)
    assert m is not None and m.valid
    assert np.array_equal(m.p_t, tag)


def test_tag_outside_disk():
    plat = _platform()
    tag = tag_position(plat, P)
    assert tag_measure(UavState(tag + [0.505, 0.0, 0.8]), plat, 0.5, QUIET, rng_stream(0, 2), P) is None


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 2).filter(lambda z: abs(z) > 1e-9))
def test_tag_visibility_iff_inside_disk_and_above(dx, dy, dz):
    plat = _platform()
    tag = tag_position(plat, P)
    m = tag_measure(UavState(tag + [dx, dy, dz]), plat, 0.5, NoiseSection(), rng_stream(1, 2), P)
    visible = dx * dx + dy * dy <= 0.25 and dz > 0
    assert (m is not None) == visible


def test_tag_noise_std():
    noise = NoiseSection(tag_pos_std=0.02)
    plat = _platform()
    tag = tag_position(plat, P)
    uav = UavState(tag + [0.0, 0.0, 0.8])
    rng = rng_stream(5, 2)
    xs = np.array([tag_measure(uav, plat, 0.5, noise, rng, P).p_t for _ in range(10_000)])
    std = (xs - tag).std(axis=0)
    assert np.all(np.abs(std - 0.02) < 0.05 * 0.02)


def test_detection_log(tmp_path):
    path = write_detection_log([(0.0, 320.0, 240.0, 0.9, True), (0.1, None, None, None, False)],
                               tmp_path / "d.csv")
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["t_s", "u_px", "v_px", "confidence", "accepted"]
    assert rows[2] == ["0.1000", "", "", "", "0"]
