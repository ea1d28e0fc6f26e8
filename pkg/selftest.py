"""
Fast checks of the exact identities every component must satisfy, run by the selftest subcommand.
Each check returns True if it holds.
"""
import math

import numpy as np

from bridges import sample_bridge, sample_bridges, sample_stream, tilt_path
from energy import ExternalWorld, external_energy, pair_energy_U2, self_energy
from estimators import (check_tilt_identity, convexity_scan, estimate_full_ratio, estimate_laplacian_I, estimate_ratio,
                        self_energy_table)
from model import Path, make_params, measure_mass
from potentials import (PotentialSpec, laplacian_u, make_coulomb, make_dipole, make_free, make_power_law, scale, soft_core,
                        solve_radial_ode, verify_superharmonic)
from symmetrize import (SymmetrizationConfig, ball_volume, estimate_S_bosonic, estimate_S_classical, haar_rotations,
                        permutation_weights, theorem2_check)
from world_mode import RotationForm, WorldMode

from errors import ValidationError

from constants import BRIDGE_STREAM, ROTATION_STREAM

SOFT_CORE = 0.05


def _close(value: float, expected: float, tolerance: float = 1e-12) -> bool:
    return abs(value - expected) <= tolerance * max(1.0, abs(expected))


def _within(first, second, sigmas: float = 4.0) -> bool:
    return abs(first.mean - second.mean) <= sigmas * math.hypot(first.stderr, second.stderr) + 1e-9 * abs(second.mean)


def _soft_coulomb():
    return soft_core(make_coulomb(3), SOFT_CORE)


# region model

def check_total_wavelength(samples: int, seed: int) -> bool:
    return _close(make_params(3, 1.0, 4, 8, 1.0).total_wavelength, 2.0)


def check_sigma2(samples: int, seed: int) -> bool:
    return _close(make_params(3, 1.0, 1, 1, 1.0).sigma2, 1.0 / (2.0 * math.pi))


def check_zero_dimension(samples: int, seed: int) -> bool:
    try:
        make_params(0, 1.0, 1, 1, 1.0)
    except ValidationError as error:
        return error.field == 'nu'
    return False


def check_measure_mass(samples: int, seed: int) -> bool:
    params = make_params(3, 1.0, 1, 1, 1.0)
    return (_close(measure_mass(params, [0, 0, 0], [0, 0, 0], 1.0), 1.0)
            and _close(measure_mass(params, [0, 0, 0], [1, 0, 0], 1.0), math.exp(-math.pi))
            and _close(measure_mass(params, [0, 0, 0], [1, 0, 0], 4.0), math.exp(-math.pi / 4.0) / 8.0))

# endregion model

# region potentials

def check_coulomb_value(samples: int, seed: int) -> bool:
    return _close(float(make_coulomb(3).value([2.0, 0.0, 0.0])), 0.5)


def check_dipole_value(samples: int, seed: int) -> bool:
    return _close(float(make_dipole(2.0, 3).f(4.0)), -0.25)


def check_constant_ode_solution(samples: int, seed: int) -> bool:
    spec = PotentialSpec(g=lambda t: 0.0, a=1.0, b=1.0, c1=5.0, nu=3)
    return all(_close(solve_radial_ode(spec, s), 5.0, 1e-10) for s in (0.3, 1.0, 3.0, 30.0))


def check_laplacian_of_square(samples: int, seed: int) -> bool:
    pot = make_power_law(-1.0, 3)
    return all(_close(laplacian_u(pot, 3, s), 6.0) for s in (0.01, 1.0, 7.5, 100.0))


def check_soft_core_identity(samples: int, seed: int) -> bool:
    pot = make_coulomb(3)
    return soft_core(pot, 0.0) is pot


def check_soft_core_origin(samples: int, seed: int) -> bool:
    return _close(float(soft_core(make_coulomb(3), 1.0).value(np.zeros(3))), 1.0)


def check_certification(samples: int, seed: int) -> bool:
    return (verify_superharmonic(make_coulomb(3)).passed and verify_superharmonic(make_coulomb(2)).passed
            and verify_superharmonic(make_dipole(4.0, 3)).passed
            and not verify_superharmonic(make_power_law(2.0, 3)).passed)

# endregion potentials

# region bridges

def check_bridge_mean(samples: int, seed: int) -> bool:
    params = make_params(3, 1.0, 2, 2, 1.0)
    zero = np.zeros(3)
    positions = sample_bridges(params, zero, zero, params.total_steps, seed, range(max(samples, 2)), BRIDGE_STREAM)
    interior = positions[:, 1:-1]
    stderr = np.std(interior, axis=0, ddof=1) / math.sqrt(interior.shape[0])
    return not np.any(positions[:, [0, -1]]) and bool(np.all(np.abs(np.mean(interior, axis=0)) <= 4.0 * stderr))


def check_bridge_endpoints(samples: int, seed: int) -> bool:
    params = make_params(3, 1.0, 2, 4, 1.0)
    end = np.array([0.5, -1.0, 2.0])
    for index in range(min(samples, 100)):
        path = sample_bridge(params, np.zeros(3), end, params.total_steps, sample_stream(seed, index, BRIDGE_STREAM))
        if not (np.array_equal(path.start, np.zeros(3)) and np.array_equal(path.end, end)):
            return False
    return True


def check_tilt(samples: int, seed: int) -> bool:
    params = make_params(3, 1.0, 2, 2, 1.0)
    path = sample_bridge(params, np.zeros(3), np.zeros(3), params.total_steps, sample_stream(seed, 0, BRIDGE_STREAM))
    unchanged = np.array_equal(tilt_path(path, np.zeros(3)).positions, path.positions)
    tilted = tilt_path(path, [1.0, 0.0, 0.0])
    return (unchanged and np.allclose(tilted.end, path.end + [1.0, 0.0, 0.0], rtol=0.0, atol=1e-15)
            and np.allclose(tilted.positions[2] - path.positions[2], [0.5, 0.0, 0.0], rtol=0.0, atol=1e-15))

# endregion bridges

# region energy

def _hand_path() -> Path:
    return Path(make_params(3, 1.0, 2, 1, 1.0), [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])


def _still(point) -> Path:
    return Path(make_params(3, 1.0, 1, 1, 1.0), [point, point])


def check_free_self_energy(samples: int, seed: int) -> bool:
    free = self_energy(_hand_path(), make_free(3), [1.0, 0.0, 0.0])
    return free.value == 0.0 and not np.any(free.gradient) and free.laplacian == 0.0


def check_self_energy_at_origin(samples: int, seed: int) -> bool:
    params = make_params(3, 1.0, 3, 2, 1.0)
    path = sample_bridge(params, np.zeros(3), np.zeros(3), params.total_steps, sample_stream(seed, 0, BRIDGE_STREAM))
    pot = _soft_coulomb()
    positions = path.positions
    # beta U by direct summation over leg pairs and offsets
    direct = 0.0
    for k in range(params.n):
        for l in range(k + 1, params.n):
            for j in range(params.slices):
                direct += params.step * float(pot.value(positions[l * params.slices + j] - positions[k * params.slices + j]))
    return _close(self_energy(path, pot).value, direct) and self_energy(path, pot, np.zeros(3)).value == self_energy(path, pot).value


def check_energies(samples: int, seed: int) -> bool:
    coulomb = make_coulomb(3)
    shifted = self_energy(_hand_path(), coulomb, [1.0, 0.0, 0.0])
    ions = external_energy(_still([0.0, 0.0, 0.0]), ExternalWorld.classical([[2.0, 0.0, 0.0]], coulomb), [1.0, 0.0, 0.0])
    pair = pair_energy_U2(ExternalWorld.quantum([_still([0, 0, 0]), _still([1, 0, 0])], coulomb, coulomb))
    return (_close(self_energy(_hand_path(), coulomb).value, 1.0)
            and _close(shifted.value, 2.0 / 3.0) and np.allclose(shifted.gradient, [-2.0 / 9.0, 0.0, 0.0], rtol=1e-12, atol=0.0)
            and shifted.laplacian == 0.0
            and _close(ions.value, 0.5) and not np.any(ions.gradient)
            and _close(pair, 1.0))


def check_no_ions(samples: int, seed: int) -> bool:
    empty = external_energy(_still([0.0, 0.0, 0.0]), ExternalWorld.classical(np.zeros((0, 3)), make_coulomb(3)), [1.0, 0.0, 0.0])
    return empty.value == 0.0 and not np.any(empty.gradient) and empty.laplacian == 0.0


def check_single_trajectory_pair_energy(samples: int, seed: int) -> bool:
    coulomb = make_coulomb(3)
    return pair_energy_U2(ExternalWorld.quantum([_still([0, 0, 0])], coulomb, coulomb)) == 0.0


def check_free_pair_energy(samples: int, seed: int) -> bool:
    world = ExternalWorld.quantum([_still([0, 0, 0]), _still([1, 0, 0])], make_free(3), make_coulomb(3))
    return pair_energy_U2(world) == 0.0

# endregion energy

# region estimators

def check_free_ratio(samples: int, seed: int) -> bool:
    ratio = estimate_ratio(make_params(3, 1.0, 4, 2, 1.0), make_free(3), [1.0, 0.0, 0.0], samples, seed)
    return ratio.mean == 1.0 and ratio.stderr == 0.0


def check_zero_shift(samples: int, seed: int) -> bool:
    # soft core keeps coincident bridge points finite
    estimate = estimate_ratio(make_params(3, 1.0, 2, 2, 1.0), _soft_coulomb(), [0.0, 0.0, 0.0], samples, seed)
    return estimate.mean == 1.0


def check_free_full_ratio(samples: int, seed: int) -> bool:
    full = estimate_full_ratio(make_params(3, 1.0, 4, 2, 1.0), make_free(3), [1.0, 0.0, 0.0], samples, seed)
    return _close(full.mean, math.exp(-math.pi / 4.0))


def check_full_ratio_at_origin(samples: int, seed: int) -> bool:
    return estimate_full_ratio(make_params(3, 1.0, 2, 2, 1.0), _soft_coulomb(), [0.0, 0.0, 0.0], samples, seed).mean == 1.0


def check_free_laplacian(samples: int, seed: int) -> bool:
    return estimate_laplacian_I(make_params(3, 1.0, 4, 2, 1.0), make_free(3), [1.0, 0.0, 0.0], samples, seed).mean == 0.0


def check_free_convexity(samples: int, seed: int) -> bool:
    rows = convexity_scan(make_params(3, 1.0, 4, 2, 1.0), make_free(3), [1.0, 0.0, 0.0], [-1.0, 0.0, 1.0], samples, seed)
    return all(row.ratio.mean == 1.0 for row in rows) and rows[1].second_difference == 0.0


def check_free_tilt_identity(samples: int, seed: int) -> bool:
    return check_tilt_identity(make_params(3, 1.0, 4, 2, 1.0), make_free(3), [1.0, 0.0, 0.0], samples, seed).mean == 0.0


def check_tilt_identity_at_origin(samples: int, seed: int) -> bool:
    estimate = check_tilt_identity(make_params(3, 1.0, 2, 2, 1.0), _soft_coulomb(), [0.0, 0.0, 0.0], max(samples, 2), seed)
    return abs(estimate.mean) <= 4.0 * estimate.stderr

# endregion estimators

# region symmetrize

def check_rotations(samples: int, seed: int) -> bool:
    for nu in (2, 3):
        rotations = haar_rotations(nu, sample_stream(seed, 0, ROTATION_STREAM), 1000)
        if np.max(np.abs(np.linalg.det(rotations) - 1.0)) > 1e-12:
            return False
        if not np.allclose(rotations @ np.swapaxes(rotations, 1, 2), np.eye(nu), rtol=0.0, atol=1e-12):
            return False
    return True


def check_permutation_weights(samples: int, seed: int) -> bool:
    weights = permutation_weights(make_params(3, 1.0, 1, 1, 1.0), [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    return _close(weights[0], 1.0) and _close(weights[1], math.exp(-2.0 * math.pi))


def check_classical_without_ions(samples: int, seed: int) -> bool:
    params = make_params(3, 1.0, 2, 2, 1.0)
    x = np.array([0.5, 0.0, 0.0])
    count = min(samples, 200)
    pot = _soft_coulomb()
    estimate = estimate_S_classical(params, pot, pot, np.zeros((0, 3)), x, count, 4, seed, RotationForm.NONE)
    table = self_energy_table(params, pot, [x], count, seed)
    return _close(estimate.mean, float(np.mean(np.exp(-table['energy'][:, 0]))), 1e-12)


def check_classical_without_external_interaction(samples: int, seed: int) -> bool:
    params = make_params(3, 1.0, 2, 2, 1.0)
    count = min(samples, 300)
    pot = _soft_coulomb()
    config = SymmetrizationConfig(params=params, mode=WorldMode.CLASSICAL, u1=pot, u3=make_free(3), ions=[[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]],
                                  samples=count, rotations=4, seed=seed, form=RotationForm.ROTATE_IONS)
    isolated = estimate_ratio(params, pot, [1.0, 0.0, 0.0], count, seed)
    return _within(theorem2_check(config, [1.0]).rows[0].ratio, isolated)


def check_single_boson(samples: int, seed: int) -> bool:
    params = make_params(3, 1.0, 2, 2, 1.0)
    x = np.array([0.5, 0.0, 0.0])
    count = min(samples, 200)
    free = make_free(3)
    pot = _soft_coulomb()
    bosonic = estimate_S_bosonic(params, pot, free, free, 1, 1.5, x, count, seed)
    isolated = estimate_S_classical(params, pot, free, np.zeros((0, 3)), x, count, 1, seed, RotationForm.NONE)
    scaled = isolated.scaled(ball_volume(3, 1.5) * params.wavelength ** -3)
    return _within(bosonic, scaled)


def check_symmetrized_origin(samples: int, seed: int) -> bool:
    pot = _soft_coulomb()
    config = SymmetrizationConfig(params=make_params(3, 1.0, 2, 2, 1.0), mode=WorldMode.CLASSICAL, u1=pot, u3=scale(pot, -1.0),
                                  ions=[[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]], samples=min(samples, 200), rotations=4, seed=seed)
    return theorem2_check(config, [0.0]).rows[0].ratio.mean == 1.0

# endregion symmetrize


CHECKS = [
    ('make_params_total_wavelength', check_total_wavelength),
    ('make_params_sigma2', check_sigma2),
    ('make_params_zero_dimension', check_zero_dimension),
    ('measure_mass', check_measure_mass),
    ('make_coulomb_value', check_coulomb_value),
    ('make_dipole_value', check_dipole_value),
    ('solve_radial_ode_constant', check_constant_ode_solution),
    ('laplacian_u_square', check_laplacian_of_square),
    ('soft_core_identity', check_soft_core_identity),
    ('soft_core_origin', check_soft_core_origin),
    ('certification', check_certification),
    ('bridge_zero_mean', check_bridge_mean),
    ('bridge_endpoints', check_bridge_endpoints),
    ('tilt_path', check_tilt),
    ('self_energy_free', check_free_self_energy),
    ('self_energy_origin', check_self_energy_at_origin),
    ('energies', check_energies),
    ('external_energy_no_ions', check_no_ions),
    ('pair_energy_single_trajectory', check_single_trajectory_pair_energy),
    ('pair_energy_free', check_free_pair_energy),
    ('estimate_ratio_free', check_free_ratio),
    ('estimate_ratio_origin', check_zero_shift),
    ('estimate_full_ratio_free', check_free_full_ratio),
    ('estimate_full_ratio_origin', check_full_ratio_at_origin),
    ('estimate_laplacian_free', check_free_laplacian),
    ('convexity_scan_free', check_free_convexity),
    ('tilt_identity_free', check_free_tilt_identity),
    ('tilt_identity_origin', check_tilt_identity_at_origin),
    ('haar_rotation', check_rotations),
    ('permutation_weights', check_permutation_weights),
    ('classical_no_ions', check_classical_without_ions),
    ('classical_no_external_interaction', check_classical_without_external_interaction),
    ('bosonic_single_particle', check_single_boson),
    ('symmetrized_ratio_origin', check_symmetrized_origin),
]
"""
list:
(name, check) pairs run by the selftest subcommand.
"""


def run_selftest(samples: int, seed: int, verbose: bool = False) -> list:
    """
    Runs every check.

    Returns
    -------
    list: (name, passed) pairs.
    """
    results = []
    for name, check in CHECKS:
        passed = bool(check(samples, seed))
        if verbose:
            print('[selftest] {0}: {1}'.format(name, 'pass' if passed else 'FAIL'))
        results.append((name, passed))
    return results
