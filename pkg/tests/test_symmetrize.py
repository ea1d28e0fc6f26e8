import math

import numpy as np
import pytest

from scipy import integrate, stats

from bridges import sample_stream
from estimators import estimate_ratio, self_energy_table
from model import make_params
from potentials import make_coulomb, make_free, make_power_law, scale, soft_core
from symmetrize import (SymmetrizationConfig, ball_volume, compare_classical_forms, estimate_S_bosonic, estimate_S_classical,
                        haar_rotations, permutation_weights, permutations_of, sample_ball, theorem2_check)
from world_mode import RotationForm, WorldMode

from errors import SizeError, UncertifiedPotentialError, ValidationError

from constants import ROTATION_STREAM, WORLD_STREAM

SOFT_COULOMB = soft_core(make_coulomb(3), 0.05)
IONS = np.array([[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])


@pytest.mark.parametrize('nu', [2, 3])
def test_haar_rotations_are_rotations(nu):
    rotations = haar_rotations(nu, sample_stream(1, 0, ROTATION_STREAM), 1000)
    np.testing.assert_allclose(np.linalg.det(rotations), 1.0, rtol=0.0, atol=1e-12)
    identity = np.broadcast_to(np.eye(nu), rotations.shape)
    np.testing.assert_allclose(rotations @ np.swapaxes(rotations, 1, 2), identity, rtol=0.0, atol=1e-12)


def test_haar_rotations_in_one_dimension():
    rotations = haar_rotations(1, sample_stream(1, 0, ROTATION_STREAM), 200)
    assert set(np.unique(rotations)) == {-1.0, 1.0}


def test_haar_rotations_are_uniform():
    rotations = haar_rotations(3, sample_stream(2, 0, ROTATION_STREAM), 10000)
    # the first coordinate of a uniform point on the sphere is uniform on [-1, 1]
    assert stats.kstest(rotations[:, 0, 0], 'uniform', args=(-1.0, 2.0)).pvalue > 0.01
    assert stats.kstest(rotations[:, 2, 1], 'uniform', args=(-1.0, 2.0)).pvalue > 0.01


def test_haar_rotations_need_low_dimension():
    with pytest.raises(NotImplementedError):
        haar_rotations(4, sample_stream(1, 0, ROTATION_STREAM), 1)


def test_ball():
    assert ball_volume(3, 1.0) == pytest.approx(4.0 * math.pi / 3.0)
    assert ball_volume(1, 2.0) == pytest.approx(4.0)
    points = sample_ball(sample_stream(3, 0, WORLD_STREAM), 5000, 2.0, 3)
    radii = np.linalg.norm(points, axis=1)
    assert np.all(radii <= 2.0)
    # (r / L)^nu is uniform on [0, 1]
    assert abs(np.mean((radii / 2.0) ** 3) - 0.5) <= 4.0 * math.sqrt(1.0 / 12.0 / 5000)


def test_permutation_weights():
    params = make_params(3, 1.0, 1, 1, 1.0)
    weights = permutation_weights(params, [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    np.testing.assert_allclose(weights, [1.0, math.exp(-2.0 * math.pi)], rtol=1e-12)
    assert permutations_of(3).shape == (6, 3)
    assert permutations_of(0).shape == (1, 0)
    with pytest.raises(SizeError):
        permutations_of(9)


def test_no_ions_reduces_to_self_energy():
    params = make_params(3, 1.0, 2, 2, 1.0)
    x = np.array([0.5, 0.0, 0.0])
    estimate = estimate_S_classical(params, SOFT_COULOMB, SOFT_COULOMB, np.zeros((0, 3)), x, 200, 4, 3, RotationForm.NONE)
    table = self_energy_table(params, SOFT_COULOMB, [x], 200, 3)
    assert estimate.mean == pytest.approx(float(np.mean(np.exp(-table['energy'][:, 0]))), rel=1e-12)


def test_rotating_forms_agree():
    params = make_params(3, 1.0, 2, 2, 1.0)
    difference = compare_classical_forms(params, SOFT_COULOMB, scale(SOFT_COULOMB, -1.0), IONS, np.array([1.0, 0.0, 0.0]), 600, 8, 4)
    assert difference.stderr > 0.0
    assert abs(difference.mean) <= 4.0 * difference.stderr


def test_symmetrized_function_is_spherical():
    params = make_params(3, 1.0, 2, 2, 1.0)
    u3 = scale(SOFT_COULOMB, -1.0)
    estimates = [estimate_S_classical(params, SOFT_COULOMB, u3, IONS, direction, 600, 8, 5, RotationForm.ROTATE_IONS)
                 for direction in np.eye(3)]
    for first in estimates:
        for second in estimates:
            assert abs(first.mean - second.mean) <= 4.0 * math.hypot(first.stderr, second.stderr) + 1e-12


def test_without_external_interaction_ratio_is_isolated_ratio():
    params = make_params(3, 1.0, 2, 2, 1.0)
    config = SymmetrizationConfig(params=params, mode=WorldMode.CLASSICAL, u1=SOFT_COULOMB, u3=make_free(3), ions=IONS,
                                  samples=300, rotations=4, seed=6, form=RotationForm.ROTATE_IONS)
    report = theorem2_check(config, [1.0])
    isolated = estimate_ratio(params, SOFT_COULOMB, [1.0, 0.0, 0.0], 300, 6)
    assert report.rows[0].ratio.mean == pytest.approx(isolated.mean, rel=1e-9)


def test_single_boson_factorizes():
    params = make_params(3, 1.0, 2, 2, 1.0)
    x = np.array([0.5, 0.0, 0.0])
    free = make_free(3)
    bosonic = estimate_S_bosonic(params, SOFT_COULOMB, free, free, 1, 1.5, x, 200, 7)
    isolated = estimate_S_classical(params, SOFT_COULOMB, free, np.zeros((0, 3)), x, 200, 1, 7, RotationForm.NONE)
    assert bosonic.mean == pytest.approx(ball_volume(3, 1.5) * isolated.mean, rel=1e-9)


def test_bosonic_free_oracle():
    params = make_params(1, 1.0, 2, 2, 1.0)
    free = make_free(1)
    estimate = estimate_S_bosonic(params, free, free, free, 2, 1.0, [0.0], 4000, 8)

    def integrand(first, second):
        return 1.0 + math.exp(-2.0 * math.pi * (first - second) ** 2)

    exact, _ = integrate.dblquad(integrand, -1.0, 1.0, lambda first: -1.0, lambda first: 1.0)
    assert estimate.stderr > 0.0
    assert abs(estimate.mean - exact) <= 4.0 * estimate.stderr


def test_interacting_bosonic_oracle():
    # one slice and one leg pin the bridge at the origin and the trajectories at their ions
    params = make_params(1, 1.0, 1, 1, 1.0)
    pot = soft_core(make_coulomb(1), 0.5)
    u2, u3 = scale(pot, 1.3), scale(pot, 0.7)
    estimate = estimate_S_bosonic(params, pot, u2, u3, 2, 1.0, [0.5], 6000, 16)

    def integrand(second, first):
        weight = 1.0 + math.exp(-2.0 * math.pi * (first - second) ** 2)
        energy = float(u3.value([first])) + float(u3.value([second])) + float(u2.value([first - second]))
        return weight * math.exp(-energy)

    exact, _ = integrate.dblquad(integrand, -1.0, 1.0, lambda first: -1.0, lambda first: 1.0)
    assert estimate.stderr > 0.0
    assert abs(estimate.mean - exact) <= 4.0 * estimate.stderr


def test_bosonic_ratio_without_external_interaction():
    params = make_params(3, 1.0, 2, 2, 1.0)
    free = make_free(3)
    config = SymmetrizationConfig(params=params, mode=WorldMode.QUANTUM, u1=SOFT_COULOMB, u3=free, u2=SOFT_COULOMB, M=2, L=2.0,
                                  samples=1500, seed=9)
    report = theorem2_check(config, [1.0])
    isolated = estimate_ratio(params, SOFT_COULOMB, [1.0, 0.0, 0.0], 1500, 19)
    row = report.rows[0]
    assert row.form_difference is None
    assert abs(row.ratio.mean - isolated.mean) <= 4.0 * math.hypot(row.ratio.stderr, isolated.stderr)


def test_neutral_classical_plasma():
    params = make_params(3, 1.0, 2, 2, 1.0)
    config = SymmetrizationConfig(params=params, mode=WorldMode.CLASSICAL, u1=SOFT_COULOMB, u3=scale(SOFT_COULOMB, -1.0), ions=IONS,
                                  samples=400, rotations=8, seed=10)
    report = theorem2_check(config, [0.5, 1.0])
    assert report.reports['u1'].passed and report.reports['u3'].passed
    assert len(report.rows) == 2
    for row in report.rows:
        assert row.form_difference is not None and row.unsymmetrized is not None
        assert row.full_ratio.mean == pytest.approx(row.ratio.mean * math.exp(-math.pi * float(row.x @ row.x) / 2.0), rel=1e-12)
    assert report.passed


def test_neutral_bosonic_plasma():
    params = make_params(3, 1.0, 2, 2, 1.0)
    config = SymmetrizationConfig(params=params, mode=WorldMode.QUANTUM, u1=SOFT_COULOMB, u2=SOFT_COULOMB, u3=scale(SOFT_COULOMB, -1.0),
                                  M=2, L=2.0, samples=400, seed=11)
    report = theorem2_check(config, [1.0])
    assert report.passed


def test_refuses_uncertified_potential():
    params = make_params(3, 1.0, 2, 2, 1.0)
    config = SymmetrizationConfig(params=params, mode=WorldMode.CLASSICAL, u1=make_power_law(2.0, 3), u3=SOFT_COULOMB, ions=IONS,
                                  samples=10, rotations=2)
    with pytest.raises(UncertifiedPotentialError) as error:
        theorem2_check(config, [1.0])
    assert not error.value.reports['u1'].passed
    assert error.value.reports['u3'].passed


def test_config_validation():
    params = make_params(3, 1.0, 2, 2, 1.0)
    with pytest.raises(SizeError):
        SymmetrizationConfig(params=params, mode=WorldMode.QUANTUM, u1=SOFT_COULOMB, u3=SOFT_COULOMB, M=9)
    with pytest.raises(ValidationError):
        SymmetrizationConfig(params=params, mode=WorldMode.CLASSICAL, u1=SOFT_COULOMB, u3=SOFT_COULOMB)
    with pytest.raises(ValidationError):
        SymmetrizationConfig(params=params, mode=WorldMode.CLASSICAL, u1=SOFT_COULOMB, u3=SOFT_COULOMB, ions=[1.0, 0.0])
    with pytest.raises(ValidationError):
        SymmetrizationConfig(params=params, mode=WorldMode.CLASSICAL, u1=SOFT_COULOMB, u3=SOFT_COULOMB, ions=IONS,
                             form=RotationForm.NONE)
    world = SymmetrizationConfig(params=params, mode=WorldMode.QUANTUM, u1=SOFT_COULOMB, u3=SOFT_COULOMB, M=2,
                                 world_wavelength=0.5).world_params
    assert world.n == 1 and world.wavelength == 0.5
