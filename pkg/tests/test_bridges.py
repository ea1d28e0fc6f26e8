import math

import numpy as np
import pytest

from bridges import bridge_positions, sample_bridge, sample_bridges, sample_stream, tilt_path, tilt_positions
from model import Path, make_params

from errors import ValidationError

from constants import BRIDGE_STREAM, DIRECT_STREAM, TILTED_STREAM


def test_endpoints_are_exact():
    params = make_params(3, 1.0, 2, 4, 1.0)
    start = np.array([0.1, -0.2, 0.3])
    end = np.array([0.5, -1.0, 2.0])
    for index in range(20):
        path = sample_bridge(params, start, end, params.total_steps, sample_stream(11, index, BRIDGE_STREAM))
        assert np.array_equal(path.start, start)
        assert np.array_equal(path.end, end)
        assert path.count == params.total_steps


def test_batch_matches_single_streams():
    params = make_params(2, 1.0, 2, 3, 1.0)
    zero = np.zeros(2)
    batch = sample_bridges(params, zero, zero, params.total_steps, 5, [3, 4, 9], BRIDGE_STREAM)
    for row, index in enumerate([3, 4, 9]):
        single = sample_bridge(params, zero, zero, params.total_steps, sample_stream(5, index, BRIDGE_STREAM))
        np.testing.assert_array_equal(batch[row], single.positions)


def test_streams_differ_by_tag_and_index():
    first = sample_stream(5, 0, TILTED_STREAM).standard_normal(4)
    assert not np.array_equal(first, sample_stream(5, 0, DIRECT_STREAM).standard_normal(4))
    assert not np.array_equal(first, sample_stream(5, 1, TILTED_STREAM).standard_normal(4))
    np.testing.assert_array_equal(first, sample_stream(5, 0, TILTED_STREAM).standard_normal(4))


def test_midpoint_variance():
    params = make_params(1, 1.0, 2, 2, 1.0)
    zero = np.zeros(1)
    positions = sample_bridges(params, zero, zero, params.total_steps, 3, range(20000), BRIDGE_STREAM)
    midpoint = positions[:, 2, 0]
    expected = 1.0 / (2.0 * math.pi) * 1.0 * (1.0 - 1.0 / 2.0)
    assert expected == pytest.approx(0.0795775, rel=1e-6)
    assert abs(np.mean(midpoint)) <= 4.0 * math.sqrt(expected / midpoint.size)
    assert abs(np.var(midpoint) - expected) <= 4.0 * expected * math.sqrt(2.0 / midpoint.size)


def test_bridge_covariance():
    params = make_params(2, 1.0, 1, 4, 2.0)
    zero = np.zeros(2)
    positions = sample_bridges(params, zero, zero, params.total_steps, 8, range(20000), BRIDGE_STREAM)
    first, third = positions[:, 1, 1], positions[:, 3, 1]
    # sigma^2 s (T - t) / T with s = 1/4, t = 3/4
    expected = params.sigma2 * 0.25 * 0.25
    assert abs(np.mean(first * third) - expected) <= 0.05 * params.sigma2


def test_mean_follows_ramp():
    params = make_params(3, 1.0, 2, 2, 1.0)
    end = np.array([1.0, -2.0, 0.5])
    positions = sample_bridges(params, np.zeros(3), end, params.total_steps, 13, range(8000), BRIDGE_STREAM)
    mean = np.mean(positions, axis=0)
    standard = math.sqrt(params.sigma2 * params.total_time / 4.0 / 8000)
    for j in range(params.total_steps + 1):
        assert np.all(np.abs(mean[j] - j / params.total_steps * end) <= 4.0 * standard + 1e-15)


def test_needs_a_step():
    params = make_params(3, 1.0, 1, 1, 1.0)
    with pytest.raises(ValidationError):
        sample_bridge(params, np.zeros(3), np.zeros(3), 0, sample_stream(1, 0, BRIDGE_STREAM))


def test_rejects_wrong_dimension():
    params = make_params(3, 1.0, 1, 2, 1.0)
    with pytest.raises(ValidationError):
        bridge_positions(params, np.zeros(2), np.zeros(2), np.zeros((2, 3)))


def test_tilt_examples():
    params = make_params(3, 1.0, 2, 2, 1.0)
    path = sample_bridge(params, np.zeros(3), np.zeros(3), params.total_steps, sample_stream(2, 0, BRIDGE_STREAM))
    np.testing.assert_array_equal(tilt_path(path, np.zeros(3)).positions, path.positions)
    tilted = tilt_path(path, [1.0, 0.0, 0.0])
    np.testing.assert_allclose(tilted.end, [1.0, 0.0, 0.0], rtol=0.0, atol=1e-15)
    np.testing.assert_allclose(tilted.positions[2] - path.positions[2], [0.5, 0.0, 0.0], rtol=0.0, atol=1e-15)


def test_tilt_positions_on_grid():
    params = make_params(1, 1.0, 1, 4, 1.0)
    path = Path(params, np.zeros((5, 1)))
    np.testing.assert_allclose(tilt_positions(path.positions, [2.0])[:, 0], [0.0, 0.5, 1.0, 1.5, 2.0])


def test_tilted_bridge_has_direct_bridge_law():
    params = make_params(3, 1.0, 2, 2, 1.0)
    zero = np.zeros(3)
    x = np.array([1.0, 0.0, 0.0])
    tilted = tilt_positions(sample_bridges(params, zero, zero, params.total_steps, 4, range(10000), TILTED_STREAM), x)
    direct = sample_bridges(params, zero, x, params.total_steps, 4, range(10000), DIRECT_STREAM)
    difference = np.mean(tilted[:, 1:-1], axis=0) - np.mean(direct[:, 1:-1], axis=0)
    spread = math.sqrt(2.0 * params.sigma2 * params.total_time / 4.0 / 10000)
    assert np.all(np.abs(difference) <= 4.0 * spread)
    variance = np.var(tilted[:, 2, 0]) - np.var(direct[:, 2, 0])
    assert abs(variance) <= 0.1 * params.sigma2


def test_tilted_bridge_matches_direct_bridge_in_distribution():
    params = make_params(3, 1.0, 2, 2, 1.0)
    zero = np.zeros(3)
    x = np.array([1.0, 0.0, 0.0])
    middle = params.total_steps // 2
    tilted = tilt_positions(sample_bridges(params, zero, zero, params.total_steps, 15, range(20000), TILTED_STREAM), x)
    direct = sample_bridges(params, zero, x, params.total_steps, 15, range(20000), DIRECT_STREAM)
    tilted_values = np.exp(-0.3 * np.sum(tilted[:, middle] ** 2, axis=1))
    direct_values = np.exp(-0.3 * np.sum(direct[:, middle] ** 2, axis=1))
    combined = math.hypot(np.std(tilted_values, ddof=1), np.std(direct_values, ddof=1)) / math.sqrt(20000)
    assert combined > 0.0
    assert abs(np.mean(tilted_values) - np.mean(direct_values)) <= 4.0 * combined
