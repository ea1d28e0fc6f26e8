"""
The bridge in the field of M external particles and the two spherical symmetrizations of it:
Haar rotations of immobile ions (classical) and the permutation and ball integral of bosonic
trajectories (quantum).
"""
import itertools
import math

from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from scipy.spatial.transform import Rotation
from scipy.special import gamma, logsumexp

from bridges import bridge_positions, sample_bridges, sample_stream
from energy import external_energy_batch, pair_energy_batch, self_energy_batch
from estimators import Diagnostics, Estimate, SampleRunner, clamp_energies, jackknife_loo, jackknife_stderr, ratio_estimate
from model import ModelParams, as_vector, gaussian_factor
from potentials import RadialPotential, SuperharmonicReport, verify_superharmonic
from world_mode import RotationForm, WorldMode

from errors import DegenerateEstimateError, SizeError, UncertifiedPotentialError, ValidationError

from constants import BATCH_ELEMENTS, BATCH_SIZE, BRIDGE_STREAM, DEFAULT_ROTATIONS, DEFAULT_SAMPLES, DEFAULT_SEED, IDENTITY_SIGMAS, LOWER_BOUND_SIGMAS, MAX_PERMUTED, ROTATION_STREAM, WORLD_STREAM


# region sampling

def haar_rotations(nu: int, rng_stream: np.random.Generator, count: int) -> np.ndarray:
    """
    count Haar distributed rotations of shape (count, nu, nu).
    nu = 1 draws +-1, nu = 2 a uniform angle, nu = 3 a uniform unit quaternion.
    """
    if nu == 1:
        return rng_stream.choice(np.array([-1.0, 1.0]), size=count).reshape(count, 1, 1)
    if nu == 2:
        angle = rng_stream.uniform(0.0, 2.0 * math.pi, size=count)
        cosine, sine = np.cos(angle), np.sin(angle)
        return np.stack([np.stack([cosine, -sine], axis=-1), np.stack([sine, cosine], axis=-1)], axis=-2)
    if nu == 3:
        # normalized gaussian quaternions are uniform on the unit sphere
        return Rotation.from_quat(rng_stream.standard_normal((count, 4))).as_matrix()
    raise NotImplementedError('Haar rotations are implemented for nu in (1, 2, 3), got {0}'.format(nu))


def haar_rotation(nu: int, rng_stream: np.random.Generator) -> np.ndarray:
    """
    One Haar distributed rotation of shape (nu, nu).
    """
    return haar_rotations(nu, rng_stream, 1)[0]


def ball_volume(nu: int, L: float) -> float:
    """
    Volume pi^(nu/2) / Gamma(nu/2 + 1) L^nu of the ball of radius L.
    """
    return float(math.pi ** (nu / 2.0) / gamma(nu / 2.0 + 1.0) * L ** nu)


def sample_ball(rng_stream: np.random.Generator, M: int, L: float, nu: int) -> np.ndarray:
    """
    M points uniform in the ball of radius L, shape (M, nu).
    """
    directions = rng_stream.standard_normal((M, nu))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = L * rng_stream.uniform(size=M) ** (1.0 / nu)
    return directions * radii[:, None]


def permutations_of(M: int) -> np.ndarray:
    """
    All permutations of range(M), shape (M!, M).
    """
    if M > MAX_PERMUTED:
        raise SizeError('{0} external particles, at most {1} permutations are enumerated'.format(M, MAX_PERMUTED))
    orders = list(itertools.permutations(range(M)))
    return np.array(orders, dtype=int).reshape(len(orders), M)


def log_permutation_weights(world_params: ModelParams, ions: np.ndarray, permutations: np.ndarray) -> np.ndarray:
    """
    log prod_i mass(x_i, x_pi(i), beta) for ions of shape (..., M, nu), result of shape (..., M!).
    """
    ions = np.asarray(ions, dtype=float)
    wavelength2 = world_params.wavelength_squared_at(world_params.beta)
    difference = ions[..., :, None, :] - ions[..., None, :, :]
    log_mass = -0.5 * world_params.nu * math.log(wavelength2) - math.pi * np.sum(difference ** 2, axis=-1) / wavelength2
    particles = np.arange(ions.shape[-2])
    return np.sum(log_mass[..., particles, permutations], axis=-1)


def permutation_weights(world_params: ModelParams, ions) -> np.ndarray:
    """
    Masses prod_i lambda^-nu exp(-pi |x_i - x_pi(i)|^2 / lambda^2) of every permutation pi,
    ordered as itertools.permutations.
    """
    ions = np.asarray(ions, dtype=float).reshape(-1, world_params.nu)
    return np.exp(log_permutation_weights(world_params, ions, permutations_of(ions.shape[0])))

# endregion sampling

# region kernels

def _points(params: ModelParams, xs) -> List[np.ndarray]:
    """
    x values as nu-vectors, scalars are radii along the first axis.
    """
    points = []
    for x in xs:
        if np.ndim(x) == 0:
            vector = np.zeros(params.nu)
            vector[0] = float(x)
            points.append(vector)
        else:
            points.append(as_vector(params, x))
    return points


def _batch_size(batch_size: int, repetitions: int) -> int:
    return max(1, min(batch_size, BATCH_ELEMENTS // max(repetitions, 1)))


def _violations(laplacian: np.ndarray) -> np.ndarray:
    with np.errstate(invalid='ignore'):
        return np.any(np.isfinite(laplacian) & (laplacian > 0.0), axis=1)


def classical_table(params: ModelParams, u1: RadialPotential, u3: RadialPotential, ions, xs, N: int, rotations: int, seed: int,
                    form: RotationForm = RotationForm.ROTATE_X, workers: int = 1, batch_size: int = BATCH_SIZE,
                    check_sign: bool = False, verbose: bool = False) -> dict:
    """
    Total energies of N bridges in the field of rotated ions.

    Returns
    -------
    dict: 'energy' of shape (N, len(xs), R) with R = 1 for the form NONE, and 'violation' of shape (N,),
    True where a combined energy Laplacian was positive (only with check_sign).
    """
    nu = params.nu
    ions = np.asarray(ions, dtype=float).reshape(-1, nu)
    repetitions = 1 if form == RotationForm.NONE else int(rotations)
    if repetitions < 1:
        raise ValidationError('rotations', 'must be >= 1, got {0}'.format(rotations))
    zero = np.zeros(nu)
    points = _points(params, xs)

    def batch(indices):
        rows = len(indices)
        positions = sample_bridges(params, zero, zero, params.total_steps, seed, indices, BRIDGE_STREAM)
        if form != RotationForm.NONE:
            matrices = np.stack([haar_rotations(nu, sample_stream(seed, index, ROTATION_STREAM), repetitions) for index in indices])
            repeated = np.repeat(positions, repetitions, axis=0)
        energies, violation = [], np.zeros(rows, dtype=bool)
        for x in points:
            if form == RotationForm.ROTATE_IONS:
                self_terms = self_energy_batch(params, positions, u1, x, derivatives=check_sign)
                rotated = np.einsum('brij,mj->brmi', matrices, ions).reshape(rows * repetitions, ions.shape[0], nu)
                external = external_energy_batch(params, repeated, rotated, u3, x, derivatives=check_sign)
                total = self_terms.value[:, None] + external.value.reshape(rows, repetitions)
                if check_sign:
                    laplacian = self_terms.laplacian[:, None] + external.laplacian.reshape(rows, repetitions)
            elif form == RotationForm.ROTATE_X:
                # rotating the ions by g equals rotating x by g^T
                shifted = np.einsum('brji,j->bri', matrices, x).reshape(rows * repetitions, nu)
                terms = (self_energy_batch(params, repeated, u1, shifted, derivatives=check_sign)
                         + external_energy_batch(params, repeated, ions, u3, shifted, derivatives=check_sign))
                total = terms.value.reshape(rows, repetitions)
                if check_sign:
                    laplacian = terms.laplacian.reshape(rows, repetitions)
            else:
                terms = (self_energy_batch(params, positions, u1, x, derivatives=check_sign)
                         + external_energy_batch(params, positions, ions, u3, x, derivatives=check_sign))
                total = terms.value[:, None]
                if check_sign:
                    laplacian = terms.laplacian[:, None]
            energies.append(total)
            if check_sign:
                violation |= _violations(laplacian)
        return {'energy': np.stack(energies, axis=1), 'violation': violation}

    runner = SampleRunner(workers, _batch_size(batch_size, repetitions), verbose, 'classical-{0}'.format(form.value))
    return runner.gather(batch, N)


def bosonic_table(params: ModelParams, u1: RadialPotential, u2: Optional[RadialPotential], u3: RadialPotential, M: int, L: float,
                  xs, N: int, seed: int, world_params: ModelParams = None, workers: int = 1, batch_size: int = BATCH_SIZE,
                  check_sign: bool = False, verbose: bool = False) -> dict:
    """
    Total energies of N bridges among M bosonic trajectories, for every permutation.

    Per sample the ions are drawn uniform in the ball of radius L, then every permutation pi gets
    normalized bridges x_i -> x_pi(i) over beta.

    Returns
    -------
    dict: 'energy' of shape (N, len(xs), M!), 'log_weight' of shape (N, M!) and 'violation' of shape (N,).
    """
    nu, J = params.nu, params.slices
    world_params = (world_params or params).single_leg()
    permutations = permutations_of(M)
    count = permutations.shape[0]
    zero = np.zeros(nu)
    points = _points(params, xs)

    def batch(indices):
        rows = len(indices)
        positions = sample_bridges(params, zero, zero, params.total_steps, seed, indices, BRIDGE_STREAM)
        ions = np.empty((rows, M, nu))
        normals = np.empty((rows, count, M, J, nu))
        for row, index in enumerate(indices):
            rng = sample_stream(seed, index, WORLD_STREAM)
            ions[row] = sample_ball(rng, M, L, nu)
            normals[row] = rng.standard_normal((count, M, J, nu))
        starts = np.broadcast_to(ions[:, None], (rows, count, M, nu))
        ends = ions[:, permutations]
        world = bridge_positions(world_params, starts, ends, normals).reshape(rows * count, M, J + 1, nu)
        pair = pair_energy_batch(world_params, world, u2).reshape(rows, count)
        repeated = np.repeat(positions, count, axis=0)
        energies, violation = [], np.zeros(rows, dtype=bool)
        for x in points:
            self_terms = self_energy_batch(params, positions, u1, x, derivatives=check_sign)
            external = external_energy_batch(params, repeated, world, u3, x, derivatives=check_sign)
            energies.append(self_terms.value[:, None] + external.value.reshape(rows, count) + pair)
            if check_sign:
                violation |= _violations(self_terms.laplacian[:, None] + external.laplacian.reshape(rows, count))
        return {'energy': np.stack(energies, axis=1), 'violation': violation,
                'log_weight': log_permutation_weights(world_params, ions, permutations)}

    runner = SampleRunner(workers, _batch_size(batch_size, count), verbose, 'bosonic')
    return runner.gather(batch, N)


def _log_values(table: dict, offset: float = 0.0):
    """
    Per-sample log of the symmetrized weight, shape (K, len(xs)), and the diagnostics.
    """
    energies, kept, diagnostics = clamp_energies(table['energy'])
    exponents = -energies
    if 'log_weight' in table:
        exponents = exponents + table['log_weight'][kept][:, None, :]
        values = logsumexp(exponents, axis=2) + offset
    else:
        values = logsumexp(exponents, axis=2) - math.log(energies.shape[2]) + offset
    diagnostics = Diagnostics(singular_hits=diagnostics.singular_hits, clamp_hits=diagnostics.clamp_hits,
                              rejected=diagnostics.rejected, sign_violations=int(np.count_nonzero(table['violation'][kept])))
    return values, diagnostics


def _shifted(values: np.ndarray):
    finite = values[np.isfinite(values)]
    shift = float(np.max(finite)) if finite.size else 0.0
    return np.exp(values - shift), shift


def _mean_estimate(values: np.ndarray, seed: int, diagnostics: Diagnostics) -> Estimate:
    """
    Mean of e^values with the standard error of the mean.
    """
    weights, shift = _shifted(values)
    if weights.shape[0] < 2:
        raise DegenerateEstimateError('fewer than 2 samples survived', diagnostics)
    scale = math.exp(shift)
    return Estimate(mean=float(np.mean(weights)) * scale, stderr=float(np.std(weights, ddof=1) / math.sqrt(weights.shape[0])) * scale,
                    n_samples=int(weights.shape[0]), seed=int(seed), diagnostics=diagnostics)

# endregion kernels


def estimate_S_classical(params: ModelParams, u1: RadialPotential, u3: RadialPotential, ions, x, N_paths: int, N_rotations: int,
                         seed: int, form: RotationForm = RotationForm.ROTATE_X, workers: int = 1) -> Estimate:
    """
    S(I)(x) for immobile ions, the mean over 0 -> 0 bridges and Haar rotations g of
    e^(-E_omega(x) - E_{omega, g ions}(x)).

    Parameter
    ---------
    params: ModelParams
    u1, u3: RadialPotential
    ions:
        Shape (M, nu).
    x:
        nu-vector.
    N_paths, N_rotations: int
        Bridges and rotations per bridge.
    seed: int
    form: RotationForm
        ROTATE_IONS and ROTATE_X estimate the same function, NONE the unsymmetrized estimand.
    """
    table = classical_table(params, u1, u3, ions, [x], N_paths, N_rotations, seed, form, workers)
    values, diagnostics = _log_values(table)
    return _mean_estimate(values[:, 0], seed, diagnostics)


def estimate_S_bosonic(params: ModelParams, u1: RadialPotential, u2: Optional[RadialPotential], u3: RadialPotential, M: int, L: float, x,
                       N: int, seed: int, world_params: ModelParams = None, workers: int = 1) -> Estimate:
    """
    The unnormalized bosonic estimand
    sum over pi of prod_i int_{|x_i| < L} dx_i int P_{x_i x_pi(i)}(d omega_i) I_{omega^M}(x),
    as V^M times the mean over uniform ions of sum_pi mass(pi) e^(-E_omega0(x) - E_{omega0, omega^M}(x) - beta U2).
    """
    if not L > 0:
        raise ValidationError('L', 'must be positive, got {0}'.format(L))
    table = bosonic_table(params, u1, u2, u3, M, L, [x], N, seed, world_params, workers)
    values, diagnostics = _log_values(table, M * math.log(ball_volume(params.nu, L)))
    return _mean_estimate(values[:, 0], seed, diagnostics)


def _ratio_loo(values: np.ndarray):
    """
    Ratios of every column to column 0 and their delete-1 values.
    """
    weights, _ = _shifted(values)
    return weights, jackknife_loo(weights, weights[:, 0])


def compare_classical_forms(params: ModelParams, u1: RadialPotential, u3: RadialPotential, ions, x, N_paths: int, N_rotations: int,
                            seed: int, workers: int = 1) -> Estimate:
    """
    Paired difference of S(I)(x) / S(I)(0) between the rotate-ions and the rotate-x form.
    Both forms see the same bridges and rotations.
    """
    zero = np.zeros(params.nu)
    results = []
    for form in (RotationForm.ROTATE_IONS, RotationForm.ROTATE_X):
        table = classical_table(params, u1, u3, ions, [zero, x], N_paths, N_rotations, seed, form, workers)
        results.append(table)
    return _form_difference(results[0], results[1], seed)[1]


def _form_difference(first: dict, second: dict, seed: int):
    """
    Per-column ratio differences of two paired classical tables, as a list of Estimates, and the last one.
    """
    first_values, first_diagnostics = _log_values(first)
    second_values, second_diagnostics = _log_values(second)
    if first_values.shape != second_values.shape:
        raise ValidationError('forms', 'samples were rejected differently by the two forms')
    first_weights, first_loo = _ratio_loo(first_values)
    second_weights, second_loo = _ratio_loo(second_values)
    diagnostics = first_diagnostics.merge(second_diagnostics)
    differences = []
    for column in range(first_values.shape[1]):
        mean = float(np.sum(first_weights[:, column]) / np.sum(first_weights[:, 0])
                     - np.sum(second_weights[:, column]) / np.sum(second_weights[:, 0]))
        stderr = float(jackknife_stderr(first_loo[:, column] - second_loo[:, column]))
        differences.append(Estimate(mean=mean, stderr=stderr, n_samples=int(first_values.shape[0]), seed=int(seed), diagnostics=diagnostics))
    return differences, differences[-1]


@dataclass(frozen=True, eq=False)
class SymmetrizationConfig:
    """
    Everything a symmetrized ratio check needs.

    Attributes
    ----------
    params: ModelParams
        The bridge omega_0.
    mode: WorldMode
        CLASSICAL rotates the given ions, QUANTUM integrates M bosonic trajectories over the ball of radius L.
    u1, u3: RadialPotential
        Self interaction and bridge to external particle interaction, both must be superharmonic.
    u2: RadialPotential or None
        Interaction among the external trajectories.
    ions:
        Shape (M, nu), classical mode.
    M: int
        Number of trajectories, quantum mode.
    L: float
        Ball radius, quantum mode.
    samples, rotations: int
        Bridges and rotations per bridge.
    world_wavelength: float or None
        Thermal wavelength of the external particles, by default that of the bridge.
    form: RotationForm
        Form the classical ratios are quoted in.
    """
    params: ModelParams
    mode: WorldMode
    u1: RadialPotential
    u3: RadialPotential
    u2: Optional[RadialPotential] = None
    ions: Optional[np.ndarray] = None
    M: int = 0
    L: float = 1.0
    samples: int = DEFAULT_SAMPLES
    rotations: int = DEFAULT_ROTATIONS
    seed: int = DEFAULT_SEED
    workers: int = 1
    world_wavelength: Optional[float] = None
    batch_size: int = BATCH_SIZE
    form: RotationForm = RotationForm.ROTATE_X
    verbose: bool = False

    def __post_init__(self):
        if self.mode == WorldMode.CLASSICAL:
            if self.ions is None:
                raise ValidationError('ions', 'classical mode needs ion positions')
            if np.size(self.ions) % self.params.nu:
                raise ValidationError('ions', 'expected a multiple of {0} coordinates, got {1}'.format(self.params.nu, np.size(self.ions)))
            object.__setattr__(self, 'ions', np.asarray(self.ions, dtype=float).reshape(-1, self.params.nu))
        else:
            if self.M > MAX_PERMUTED:
                raise SizeError('{0} external particles, at most {1} permutations are enumerated'.format(self.M, MAX_PERMUTED))
            if not self.L > 0:
                raise ValidationError('L', 'must be positive, got {0}'.format(self.L))
        if self.form == RotationForm.NONE:
            raise ValidationError('form', 'ratios are quoted in a rotating form')

    @property
    def world_params(self) -> ModelParams:
        if self.world_wavelength is None:
            return self.params.single_leg()
        return self.params.single_leg().with_wavelength(self.world_wavelength)


@dataclass(frozen=True, eq=False)
class SymmetrizedRow:
    """
    One x of a symmetrized ratio check. form_difference and unsymmetrized are None in quantum mode.
    """
    x: np.ndarray
    ratio: Estimate
    full_ratio: Estimate
    form_difference: Optional[Estimate]
    unsymmetrized: Optional[Estimate]
    passed: bool


@dataclass(frozen=True)
class SymmetrizedReport:
    """
    Result of theorem2_check.
    """
    rows: List[SymmetrizedRow]
    reports: Dict[str, SuperharmonicReport] = field(default_factory=dict)
    diagnostics: Diagnostics = Diagnostics()

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)


def certify(pots: Dict[str, RadialPotential], nu: int) -> Dict[str, SuperharmonicReport]:
    """
    Verifies the unregularized form of every potential, raises UncertifiedPotentialError if one fails.
    """
    reports = {label: verify_superharmonic(pot.certification_target(), nu) for label, pot in pots.items()}
    if not all(report.passed for report in reports.values()):
        raise UncertifiedPotentialError(reports)
    return reports


def theorem2_check(config: SymmetrizationConfig, x_grid) -> SymmetrizedReport:
    """
    S(I)(x) / S(I)(0) for every x of x_grid, with the full ratio e^(-pi x^2 / lambda_{n beta}^2) S(I)(x) / S(I)(0).

    Common bridges, rotations and ions serve every x. A row passes if its ratio is at least 1 - 3 stderr and,
    in classical mode, the two rotating forms agree within 4 stderr. Scalars in x_grid are radii along the first axis.
    """
    params = config.params
    reports = certify({'u1': config.u1, 'u3': config.u3}, params.nu)
    points = [np.zeros(params.nu)] + _points(params, x_grid)
    if config.mode == WorldMode.CLASSICAL:
        other = RotationForm.ROTATE_IONS if config.form == RotationForm.ROTATE_X else RotationForm.ROTATE_X
        tables = {form: classical_table(params, config.u1, config.u3, config.ions, points, config.samples, config.rotations, config.seed,
                                        form, config.workers, config.batch_size, check_sign=form == config.form, verbose=config.verbose)
                  for form in (config.form, other, RotationForm.NONE)}
        values, diagnostics = _log_values(tables[config.form])
        differences, _ = _form_difference(tables[config.form], tables[other], config.seed)
        unsymmetrized_values, _ = _log_values(tables[RotationForm.NONE])
        unsymmetrized_weights, _ = _shifted(unsymmetrized_values)
    else:
        table = bosonic_table(params, config.u1, config.u2, config.u3, config.M, config.L, points, config.samples, config.seed,
                              config.world_params, config.workers, config.batch_size, check_sign=True, verbose=config.verbose)
        values, diagnostics = _log_values(table)
        differences = None
    weights, _ = _shifted(values)
    rows = []
    for column, x in enumerate(points[1:], start=1):
        ratio = ratio_estimate(weights[:, column], weights[:, 0], config.seed, diagnostics)
        difference, unsymmetrized = None, None
        passed = ratio.at_least(1.0, LOWER_BOUND_SIGMAS)
        if differences is not None:
            difference = differences[column]
            unsymmetrized = ratio_estimate(unsymmetrized_weights[:, column], unsymmetrized_weights[:, 0], config.seed, Diagnostics())
            passed = passed and abs(difference.mean) <= IDENTITY_SIGMAS * difference.stderr
        rows.append(SymmetrizedRow(x=x, ratio=ratio, full_ratio=ratio.scaled(gaussian_factor(params, x)), form_difference=difference,
                                unsymmetrized=unsymmetrized, passed=passed))
    if config.verbose:
        for row in rows:
            print('[symmetrized] |x|={0:.4g} ratio={1:.6g} +- {2:.2g}'.format(float(np.linalg.norm(row.x)), row.ratio.mean, row.ratio.stderr))
    return SymmetrizedReport(rows=rows, reports=reports, diagnostics=diagnostics)
