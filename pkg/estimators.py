"""
Monte Carlo estimators of I(x) / I(0), the full endpoint ratio, the Laplacian of I and the tilt identity.

All bridges start and end at 0 unless noted. The same bridge ensemble serves every x of an estimate,
errors of ratios come from the delete-1 jackknife over samples.
"""
import math

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, List, Optional

import numpy as np

from numpy.polynomial.hermite_e import hermegauss

from bridges import sample_bridges, tilt_positions
from energy import self_energy_batch
from model import ModelParams, as_vector, gaussian_factor
from potentials import RadialPotential

from errors import DegenerateEstimateError, DomainError, SizeError, ValidationError

from constants import BATCH_SIZE, BRIDGE_STREAM, DIRECT_STREAM, ENERGY_CLAMP, QUADRATURE_MAX_DIMENSION, TILTED_STREAM


@dataclass(frozen=True)
class Diagnostics:
    """
    Counters attached to every estimate.

    Attributes
    ----------
    singular_hits: int
        Samples that hit a singularity of a potential. A +inf energy (repulsive) keeps the sample with weight 0,
        a -inf energy (attractive) rejects it and is counted in rejected as well.
    clamp_hits: int
        Energies below -ENERGY_CLAMP that were clamped.
    rejected: int
        Samples dropped because an energy was nan or -inf.
    sign_violations: int
        Samples whose energy Laplacian was positive.
    uncertified: bool
        A potential the estimate relies on is not certified superharmonic.
    nonnegative_fraction: float or None
        Fraction of samples with a nonnegative Laplacian integrand.
    """
    singular_hits: int = 0
    clamp_hits: int = 0
    rejected: int = 0
    sign_violations: int = 0
    uncertified: bool = False
    nonnegative_fraction: Optional[float] = None

    def merge(self, other: 'Diagnostics') -> 'Diagnostics':
        fractions = [fraction for fraction in (self.nonnegative_fraction, other.nonnegative_fraction) if fraction is not None]
        return Diagnostics(singular_hits=self.singular_hits + other.singular_hits,
                           clamp_hits=self.clamp_hits + other.clamp_hits,
                           rejected=self.rejected + other.rejected,
                           sign_violations=self.sign_violations + other.sign_violations,
                           uncertified=self.uncertified or other.uncertified,
                           nonnegative_fraction=min(fractions) if fractions else None)


@dataclass(frozen=True)
class Estimate:
    """
    A Monte Carlo estimate with its jackknife standard error.
    """
    mean: float
    stderr: float
    n_samples: int
    seed: int
    diagnostics: Diagnostics = Diagnostics()

    def scaled(self, factor: float) -> 'Estimate':
        return replace(self, mean=self.mean * factor, stderr=self.stderr * abs(factor))

    def at_least(self, bound: float, sigmas: float) -> bool:
        """
        True if mean >= bound - sigmas * stderr.
        """
        return self.mean >= bound - sigmas * self.stderr


@dataclass(frozen=True)
class ConvexityRow:
    """
    One radius of a convexity scan. Second differences are nan at the ends of the radius grid.
    """
    radius: float
    ratio: Estimate
    second_difference: float
    second_stderr: float
    even_difference: float
    even_stderr: float


class SampleRunner:
    """
    Evaluates a batch function over the sample indices 0 .. total - 1.

    The index range is cut into batches of fixed size, the batches are evaluated by a thread pool
    and concatenated in index order, so the result does not depend on the worker count.
    """

    def __init__(self, workers: int = 1, batch_size: int = BATCH_SIZE, verbose: bool = False, label: str = 'sampler'):
        if workers < 1 or batch_size < 1:
            raise ValidationError('workers', 'workers and batch size must be >= 1')
        self._workers = int(workers)
        self._batch_size = int(batch_size)
        self._verbose = verbose
        self._label = label

    @property
    def workers(self) -> int:
        return self._workers

    def batches(self, total: int) -> List[range]:
        return [range(start, min(start + self._batch_size, total)) for start in range(0, total, self._batch_size)]

    def gather(self, function: Callable, total: int) -> dict:
        """
        Calls function(indices) per batch, each call returns a dict of arrays with a leading sample axis.
        Returns the arrays concatenated over all batches.
        """
        batches = self.batches(total)
        if self._verbose:
            print('[{0}] {1} samples in {2} batches on {3} workers'.format(self._label, total, len(batches), self._workers))
        if self._workers == 1:
            results = [function(indices) for indices in batches]
        else:
            with ThreadPoolExecutor(max_workers=self._workers) as pool:
                results = list(pool.map(function, batches))
        if self._verbose:
            print('[{0}] done'.format(self._label))
        return {key: np.concatenate([result[key] for result in results], axis=0) for key in results[0]}


# region weights

def _check_samples(N: int) -> int:
    if isinstance(N, bool) or not isinstance(N, (int, np.integer)) or N < 2:
        raise ValidationError('N', 'need at least 2 samples, got {0!r}'.format(N))
    return int(N)


def clamp_energies(energies: np.ndarray):
    """
    Applies the rejection and clamp policy to energies of shape (N, ...).

    Rows with a nan or -inf energy are dropped, energies below -ENERGY_CLAMP are clamped,
    rows with a +inf energy are kept with weight 0. Rows with an infinite energy of either sign count as singular hits.

    Returns
    -------
    (np.ndarray, np.ndarray, Diagnostics): kept energies, the kept row mask and the counters.
    """
    energies = np.asarray(energies, dtype=float)
    flat = energies.reshape(energies.shape[0], -1)
    attractive = np.any(flat == -np.inf, axis=1)
    rejected = np.any(np.isnan(flat), axis=1) | attractive
    kept = flat[~rejected]
    clamped = kept < -ENERGY_CLAMP
    kept = np.where(clamped, -ENERGY_CLAMP, kept)
    repulsive = np.any(kept == np.inf, axis=1)
    diagnostics = Diagnostics(singular_hits=int(np.count_nonzero(repulsive) + np.count_nonzero(attractive)),
                              clamp_hits=int(np.count_nonzero(clamped)), rejected=int(np.count_nonzero(rejected)))
    return kept.reshape((-1,) + energies.shape[1:]), ~rejected, diagnostics


def relative_weights(energies: np.ndarray):
    """
    Weights e^(-E + E_min) of clamped energies, sharing one shift E_min.

    Returns
    -------
    (np.ndarray, float): the weights and the shift, e^(-E) = weights * e^(-shift).
    """
    finite = energies[np.isfinite(energies)]
    shift = float(np.min(finite)) if finite.size else 0.0
    with np.errstate(over='ignore'):
        return np.exp(-(energies - shift)), shift


def jackknife_loo(numerators: np.ndarray, denominators: np.ndarray) -> np.ndarray:
    """
    Delete-1 ratios (A - a_i) / (B - b_i). numerators may carry trailing axes.
    """
    numerators = np.asarray(numerators, dtype=float)
    denominators = np.asarray(denominators, dtype=float)
    total_denominator = np.sum(denominators)
    with np.errstate(divide='ignore', invalid='ignore'):
        remaining = (total_denominator - denominators).reshape((-1,) + (1,) * (numerators.ndim - 1))
        return (np.sum(numerators, axis=0) - numerators) / remaining


def jackknife_stderr(loo: np.ndarray) -> np.ndarray:
    """
    sqrt((N - 1) / N * sum (loo_i - mean loo)^2) along the sample axis, inf if a delete-1 value is undefined.
    """
    loo = np.asarray(loo, dtype=float)
    count = loo.shape[0]
    with np.errstate(invalid='ignore'):
        spread = np.sqrt((count - 1.0) / count * np.sum((loo - np.mean(loo, axis=0)) ** 2, axis=0))
    return np.where(np.all(np.isfinite(loo), axis=0), spread, np.inf)


def ratio_estimate(numerators: np.ndarray, denominators: np.ndarray, seed: int, diagnostics: Diagnostics) -> Estimate:
    """
    sum(numerators) / sum(denominators) with its jackknife standard error.
    """
    if numerators.shape[0] < 2:
        raise DegenerateEstimateError('fewer than 2 samples survived', diagnostics)
    total = float(np.sum(denominators))
    if not total > 0:
        raise DegenerateEstimateError('every denominator weight vanished', diagnostics)
    mean = float(np.sum(numerators)) / total
    stderr = float(jackknife_stderr(jackknife_loo(numerators, denominators)))
    return Estimate(mean=mean, stderr=stderr, n_samples=int(numerators.shape[0]), seed=int(seed), diagnostics=diagnostics)

# endregion weights

# region ensemble

def _zero(params: ModelParams) -> np.ndarray:
    return np.zeros(params.nu)


def self_energy_table(params: ModelParams, pot: RadialPotential, xs, N: int, seed: int, runner: SampleRunner = None,
                      derivative_column: int = None) -> dict:
    """
    Energies E_omega(x) of N common 0 -> 0 bridges for every x in xs.

    Returns
    -------
    dict: 'energy' of shape (N, len(xs)), with derivative_column also 'gradient' (N, nu) and 'laplacian' (N,)
    of that column.
    """
    runner = runner or SampleRunner()
    xs = [as_vector(params, x) for x in xs]
    zero = _zero(params)

    def batch(indices):
        positions = sample_bridges(params, zero, zero, params.total_steps, seed, indices, BRIDGE_STREAM)
        columns = [self_energy_batch(params, positions, pot, x, derivatives=False).value for x in xs]
        result = {'energy': np.stack(columns, axis=1)}
        if derivative_column is not None:
            terms = self_energy_batch(params, positions, pot, xs[derivative_column])
            result['gradient'] = terms.gradient
            result['laplacian'] = terms.laplacian
        return result

    return runner.gather(batch, N)


def _sign_violations(laplacian: np.ndarray) -> int:
    return int(np.count_nonzero(laplacian[np.isfinite(laplacian)] > 0.0))

# endregion ensemble


def estimate_ratio(params: ModelParams, pot: RadialPotential, x, N: int, seed: int, runner: SampleRunner = None,
                   check_sign: bool = False) -> Estimate:
    """
    I(x) / I(0) from N common bridges, each weighted by e^(-E(x)) in the numerator and e^(-E(0)) in the denominator.

    Parameter
    ---------
    params: ModelParams
    pot: RadialPotential
        u1.
    x:
        nu-vector.
    N: int
        Number of bridges, >= 2.
    seed: int
    runner: SampleRunner
        Batching and workers, single threaded by default.
    check_sign: bool
        Also count samples with a positive energy Laplacian at x.

    Returns
    -------
    Estimate
    """
    N = _check_samples(N)
    table = self_energy_table(params, pot, [x, _zero(params)], N, seed, runner, 0 if check_sign else None)
    energies, kept, diagnostics = clamp_energies(table['energy'])
    if check_sign:
        diagnostics = replace(diagnostics, sign_violations=_sign_violations(table['laplacian'][kept]),
                              uncertified=not pot.claims_superharmonic)
    weights, _ = relative_weights(energies)
    return ratio_estimate(weights[:, 0], weights[:, 1], seed, diagnostics)


def estimate_full_ratio(params: ModelParams, pot: RadialPotential, x, N: int, seed: int, runner: SampleRunner = None,
                        check_sign: bool = False) -> Estimate:
    """
    The endpoint ratio int P_0x e^(-beta U) / int P_00 e^(-beta U) = e^(-pi x^2 / (n lambda^2)) I(x) / I(0).
    """
    return estimate_ratio(params, pot, x, N, seed, runner, check_sign).scaled(gaussian_factor(params, x))


def estimate_laplacian_I(params: ModelParams, pot: RadialPotential, x, N: int, seed: int, runner: SampleRunner = None) -> Estimate:
    """
    Laplacian of I at x over I(0), the mean of e^(-E(x)) (|grad E(x)|^2 - laplacian E(x)) over the mean of e^(-E(0)).
    The diagnostics report the fraction of samples with a nonnegative integrand and flag uncertified potentials.
    """
    N = _check_samples(N)
    table = self_energy_table(params, pot, [x, _zero(params)], N, seed, runner, 0)
    energies, kept, diagnostics = clamp_energies(table['energy'])
    gradient = table['gradient'][kept]
    laplacian = table['laplacian'][kept]
    weights, _ = relative_weights(energies)
    with np.errstate(invalid='ignore'):
        bracket = np.sum(gradient * gradient, axis=1) - laplacian
    # weight 0 rows have nan derivatives
    integrand = np.where(weights[:, 0] > 0.0, weights[:, 0] * bracket, 0.0)
    fraction = float(np.count_nonzero(integrand >= 0.0)) / max(integrand.shape[0], 1)
    diagnostics = replace(diagnostics, sign_violations=_sign_violations(np.where(weights[:, 0] > 0.0, laplacian, 0.0)),
                          uncertified=not pot.claims_superharmonic, nonnegative_fraction=fraction)
    return ratio_estimate(integrand, weights[:, 1], seed, diagnostics)


def convexity_scan(params: ModelParams, pot: RadialPotential, axis, radii, N: int, seed: int, runner: SampleRunner = None) -> List[ConvexityRow]:
    """
    I(r axis) / I(0) for radii symmetric around 0, one bridge ensemble for every radius.

    Second differences use the three neighbouring radii, 2 [(I+ - I) / h+ - (I - I-) / h-] / (h+ + h-),
    and carry jackknife errors. even_difference is I(r) - I(-r).
    """
    N = _check_samples(N)
    direction = as_vector(params, axis, 'axis')
    length = float(np.linalg.norm(direction))
    if length == 0.0:
        raise DomainError('axis must be nonzero')
    direction = direction / length
    radii = np.unique(np.asarray(radii, dtype=float))
    if 0.0 not in radii or not np.allclose(np.sort(-radii), radii):
        raise DomainError('radii must be symmetric around 0 and contain 0, got {0}'.format(list(radii)))
    origin = int(np.argmin(np.abs(radii)))
    table = self_energy_table(params, pot, [radius * direction for radius in radii], N, seed, runner)
    energies, _, diagnostics = clamp_energies(table['energy'])
    weights, _ = relative_weights(energies)
    ratios = [ratio_estimate(weights[:, column], weights[:, origin], seed, diagnostics) for column in range(len(radii))]
    loo = jackknife_loo(weights, weights[:, origin])
    rows = []
    for index, radius in enumerate(radii):
        second, second_stderr = math.nan, math.nan
        if 0 < index < len(radii) - 1:
            upper = radii[index + 1] - radius
            lower = radius - radii[index - 1]

            def curvature(values):
                return 2.0 * ((values[..., index + 1] - values[..., index]) / upper
                              - (values[..., index] - values[..., index - 1]) / lower) / (upper + lower)

            second = float(curvature(np.array([ratio.mean for ratio in ratios])))
            second_stderr = float(jackknife_stderr(curvature(loo)))
        mirror = int(np.argmin(np.abs(radii + radius)))
        even = ratios[index].mean - ratios[mirror].mean
        even_stderr = float(jackknife_stderr(loo[:, index] - loo[:, mirror]))
        rows.append(ConvexityRow(radius=float(radius), ratio=ratios[index], second_difference=second,
                                 second_stderr=second_stderr, even_difference=even, even_stderr=even_stderr))
    return rows


def check_tilt_identity(params: ModelParams, pot: RadialPotential, x, N: int, seed: int, runner: SampleRunner = None) -> Estimate:
    """
    Difference of the two sides of the tilt identity in normalized form,
    g E_00[e^(-beta U(tilted omega))] - g E_0x[e^(-beta U(omega))] with g = e^(-pi x^2 / (n lambda^2)),
    the mass ratio of the 0 -> x and 0 -> 0 bridge measures. Both sides use independent streams.
    """
    N = _check_samples(N)
    runner = runner or SampleRunner()
    x = as_vector(params, x)
    zero = _zero(params)
    steps = params.total_steps

    def batch(indices):
        tilted = tilt_positions(sample_bridges(params, zero, zero, steps, seed, indices, TILTED_STREAM), x)
        direct = sample_bridges(params, zero, x, steps, seed, indices, DIRECT_STREAM)
        return {'tilted': self_energy_batch(params, tilted, pot, zero, derivatives=False).value,
                'direct': self_energy_batch(params, direct, pot, zero, derivatives=False).value}

    table = runner.gather(batch, N)
    tilted, _, tilted_diagnostics = clamp_energies(table['tilted'])
    direct, _, direct_diagnostics = clamp_energies(table['direct'])
    diagnostics = tilted_diagnostics.merge(direct_diagnostics)
    if tilted.shape[0] < 2 or direct.shape[0] < 2:
        raise DegenerateEstimateError('fewer than 2 samples survived', diagnostics)
    tilted_weights = np.exp(-tilted)
    direct_weights = np.exp(-direct)
    factor = gaussian_factor(params, x)
    difference = factor * (np.mean(tilted_weights) - np.mean(direct_weights))
    stderr = factor * math.sqrt(np.var(tilted_weights, ddof=1) / tilted.shape[0] + np.var(direct_weights, ddof=1) / direct.shape[0])
    return Estimate(mean=float(difference), stderr=stderr, n_samples=int(min(tilted.shape[0], direct.shape[0])),
                    seed=int(seed), diagnostics=diagnostics)


def quadrature_ratio(params: ModelParams, pot: RadialPotential, x, points: int = 16, chunk: int = 65536) -> float:
    """
    I(x) / I(0) by tensor Gauss-Hermite quadrature over the free grid points of the 0 -> 0 bridge.

    The free points are Gaussian with covariance sigma^2 t_i (T - t_j) / T per coordinate, so
    they are mapped from standard normal nodes through its Cholesky factor.
    The dimension (nJ - 1) nu must not exceed QUADRATURE_MAX_DIMENSION.
    """
    x = as_vector(params, x)
    steps = params.total_steps
    free = steps - 1
    dimension = free * params.nu
    if dimension > QUADRATURE_MAX_DIMENSION:
        raise SizeError('quadrature over {0} dimensions, at most {1} supported'.format(dimension, QUADRATURE_MAX_DIMENSION))
    if dimension == 0:
        return 1.0
    nodes, node_weights = hermegauss(points)
    node_weights = node_weights / math.sqrt(2.0 * math.pi)
    times = np.arange(1, steps) * params.step
    total = params.total_time
    covariance = params.sigma2 * np.minimum.outer(times, times) * (total - np.maximum.outer(times, times)) / total
    factor = np.linalg.cholesky(covariance)
    numerator, denominator = 0.0, 0.0
    count = points ** dimension
    for start in range(0, count, chunk):
        index = np.array(np.unravel_index(np.arange(start, min(start + chunk, count)), (points,) * dimension)).T
        weight = np.prod(node_weights[index], axis=1)
        normals = nodes[index].reshape(-1, free, params.nu)
        positions = np.zeros((normals.shape[0], steps + 1, params.nu))
        positions[:, 1:steps] = np.einsum('ij,bjv->biv', factor, normals)
        at_x = self_energy_batch(params, positions, pot, x, derivatives=False).value
        at_zero = self_energy_batch(params, positions, pot, np.zeros(params.nu), derivatives=False).value
        with np.errstate(over='ignore'):
            numerator += float(np.sum(weight * np.exp(-np.maximum(at_x, -ENERGY_CLAMP))))
            denominator += float(np.sum(weight * np.exp(-np.maximum(at_zero, -ENERGY_CLAMP))))
    if not denominator > 0:
        raise DegenerateEstimateError('quadrature denominator vanished')
    return numerator / denominator
