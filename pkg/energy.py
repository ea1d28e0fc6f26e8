"""
Interaction energies of a bridge, their x-gradients and x-Laplacians.

The batched kernels take positions with a leading sample axis and return EnergyTerms whose fields carry
that axis. The single-path operations wrap them and raise on singular configurations.
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from model import ModelParams, Path, as_vector
from potentials import RadialPotential, superharmonic_density
from world_mode import WorldMode

from errors import ModeError, SingularConfigurationError, ValidationError


@dataclass(frozen=True, eq=False)
class EnergyTerms:
    """
    Value, x-gradient and x-Laplacian of an energy, the exponent of the weight e^(-value).
    Fields are scalars and nu-vectors for one path, arrays with a leading sample axis for a batch.
    The derivatives are None if they were not requested.
    """
    value: np.ndarray
    gradient: Optional[np.ndarray] = None
    laplacian: Optional[np.ndarray] = None

    def __add__(self, other: 'EnergyTerms') -> 'EnergyTerms':
        gradient = None if self.gradient is None or other.gradient is None else self.gradient + other.gradient
        laplacian = None if self.laplacian is None or other.laplacian is None else self.laplacian + other.laplacian
        return EnergyTerms(self.value + other.value, gradient, laplacian)

    def single(self) -> 'EnergyTerms':
        """
        Row 0 of a batch of one, as python floats and a vector.
        """
        gradient = None if self.gradient is None else np.array(self.gradient[0])
        laplacian = None if self.laplacian is None else float(self.laplacian[0])
        return EnergyTerms(float(self.value[0]), gradient, laplacian)


@dataclass(frozen=True, eq=False)
class ExternalWorld:
    """
    The M external particles acting on the bridge.

    Attributes
    ----------
    mode: WorldMode
        CLASSICAL: fixed ions, QUANTUM: trajectories over [0, beta].
    u3: RadialPotential
        Interaction of the bridge with an external particle.
    u2: RadialPotential or None
        Interaction among the external particles, unused in classical mode.
    ions: np.ndarray or None
        Shape (M, nu), classical mode.
    trajectories: tuple[Path]
        M paths with J steps over [0, beta], quantum mode.
    """
    mode: WorldMode
    u3: RadialPotential
    u2: Optional[RadialPotential] = None
    ions: Optional[np.ndarray] = None
    trajectories: Tuple[Path, ...] = ()

    @classmethod
    def classical(cls, ions, u3: RadialPotential) -> 'ExternalWorld':
        ions = np.array(ions, dtype=float).reshape(-1, u3.nu) if np.size(ions) else np.zeros((0, u3.nu))
        ions.setflags(write=False)
        return cls(mode=WorldMode.CLASSICAL, u3=u3, ions=ions)

    @classmethod
    def quantum(cls, trajectories, u2: RadialPotential, u3: RadialPotential) -> 'ExternalWorld':
        trajectories = tuple(trajectories)
        if trajectories:
            first = trajectories[0].params
            for index, trajectory in enumerate(trajectories):
                params = trajectory.params
                if (params.beta, params.slices, params.nu) != (first.beta, first.slices, first.nu):
                    raise ValidationError('trajectories', 'trajectory {0} does not share beta, J and nu'.format(index))
                if trajectory.count != params.slices:
                    raise ValidationError('trajectories', 'trajectory {0} must have J = {1} steps, got {2}'.format(
                        index, params.slices, trajectory.count))
        return cls(mode=WorldMode.QUANTUM, u3=u3, u2=u2, trajectories=trajectories)

    @property
    def M(self) -> int:
        if self.mode == WorldMode.CLASSICAL:
            return self.ions.shape[0]
        return len(self.trajectories)

    def world_positions(self) -> np.ndarray:
        """
        Trajectory positions stacked to shape (M, J + 1, nu).
        """
        return np.stack([trajectory.positions for trajectory in self.trajectories])


# region kernels

def _per_row(x, rows: int, nu: int) -> np.ndarray:
    """
    x as shape (rows, nu), a single nu-vector is broadcast.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return np.broadcast_to(x, (rows, nu))
    return x


def _reduce(pot: RadialPotential, nu: int, h: float, y: np.ndarray, weight: np.ndarray, derivatives: bool, axes: tuple) -> EnergyTerms:
    """
    h * sum u(y), h * sum weight grad u(y) and h * sum weight^2 laplacian u(y) over axes.
    weight broadcasts against y without its last axis.
    """
    s = np.sum(y * y, axis=-1)
    with np.errstate(all='ignore'):
        value = h * np.sum(pot.f(s), axis=axes)
        if not derivatives:
            return EnergyTerms(value)
        slope = 2.0 * weight * pot.df(s)
        gradient = h * np.sum(slope[..., None] * y, axis=axes)
        laplacian = h * np.sum(weight * weight * 2.0 * superharmonic_density(pot, nu, s), axis=axes)
    return EnergyTerms(value, gradient, laplacian)


def self_energy_batch(params: ModelParams, positions: np.ndarray, pot: RadialPotential, x, derivatives: bool = True) -> EnergyTerms:
    """
    Self energy E(x) of a batch of bridges.

    Pairs legs k < l at equal offsets j: u(omega(l beta + t_j) - omega(k beta + t_j) + ((l - k) / n) x),
    left-endpoint rule with step h.

    Parameter
    ---------
    params: ModelParams
    positions: np.ndarray
        Shape (B, nJ + 1, nu).
    pot: RadialPotential
    x:
        nu-vector or shape (B, nu).
    derivatives: bool
        Also compute the x-gradient and x-Laplacian.
    """
    rows = positions.shape[0]
    n, J, nu = params.n, params.slices, params.nu
    x = _per_row(x, rows, nu)
    first, second = np.triu_indices(n, 1)
    if first.size == 0:
        zeros = np.zeros(rows)
        return EnergyTerms(zeros, np.zeros((rows, nu)), zeros.copy()) if derivatives else EnergyTerms(zeros)
    legs = positions[:, :n * J].reshape(rows, n, J, nu)
    shift = ((second - first) / n)[None, :, None]
    y = legs[:, second] - legs[:, first] + shift[..., None] * x[:, None, None, :]
    return _reduce(pot, nu, params.step, y, shift, derivatives, (1, 2))


def external_energy_batch(params: ModelParams, positions: np.ndarray, world: np.ndarray, pot: RadialPotential, x, derivatives: bool = True) -> EnergyTerms:
    """
    Energy of a batch of bridges in the field of M external particles.

    u3(omega_0(k beta + t_j) - omega_i(t_j) + c_kj x) with c_kj = (kJ + j) / (nJ).

    Parameter
    ---------
    params: ModelParams
    positions: np.ndarray
        Shape (B, nJ + 1, nu).
    world: np.ndarray
        Ions of shape (M, nu) or (B, M, nu), or trajectories of shape (B, M, J + 1, nu).
    pot: RadialPotential
        u3.
    x:
        nu-vector or shape (B, nu).
    """
    rows = positions.shape[0]
    n, J, nu = params.n, params.slices, params.nu
    x = _per_row(x, rows, nu)
    world = np.asarray(world, dtype=float)
    M = world.shape[-2] if world.ndim <= 3 else world.shape[1]
    if M == 0:
        zeros = np.zeros(rows)
        return EnergyTerms(zeros, np.zeros((rows, nu)), zeros.copy()) if derivatives else EnergyTerms(zeros)
    bridge = positions[:, :n * J].reshape(rows, n, 1, J, nu)
    if world.ndim == 4:
        external = world[:, None, :, :J, :]
    else:
        external = np.broadcast_to(world, (rows, M, nu))[:, None, :, None, :]
    shift = (np.arange(n * J) / (n * J)).reshape(1, n, 1, J)
    y = bridge - external + shift[..., None] * x[:, None, None, None, :]
    return _reduce(pot, nu, params.step, y, shift, derivatives, (1, 2, 3))


def pair_energy_batch(params: ModelParams, world: np.ndarray, pot: Optional[RadialPotential]) -> np.ndarray:
    """
    beta U2 of a batch of external trajectories of shape (B, M, J + 1, nu).
    """
    rows, M = world.shape[0], world.shape[1]
    first, second = np.triu_indices(M, 1)
    if pot is None or first.size == 0:
        return np.zeros(rows)
    J = params.slices
    y = world[:, first, :J] - world[:, second, :J]
    with np.errstate(all='ignore'):
        return params.step * np.sum(pot.f(np.sum(y * y, axis=-1)), axis=(1, 2))

# endregion kernels

# region single path

def _raise_singular(pot: RadialPotential, s: np.ndarray, labels) -> None:
    """
    Raises with the labelled indices of the first zero distance of a singular potential.
    """
    if not np.any(s == 0.0) or not pot.is_singular():
        return
    hit = tuple(np.argwhere(s == 0.0)[0])
    raise SingularConfigurationError(labels(hit))


def _check_steps(path: Path, params: ModelParams) -> None:
    if path.count != params.total_steps:
        raise ValidationError('path', 'expected {0} steps, got {1}'.format(params.total_steps, path.count))


def self_energy(path: Path, pot: RadialPotential, x=None) -> EnergyTerms:
    """
    E_omega(x) with its x-gradient and x-Laplacian. E_omega(0) is beta U(omega).

    Raises SingularConfigurationError carrying (k, l, j) if a singular pot is evaluated at distance 0.
    """
    params = path.params
    _check_steps(path, params)
    x = np.zeros(params.nu) if x is None else as_vector(params, x)
    n, J = params.n, params.slices
    first, second = np.triu_indices(n, 1)
    if first.size:
        legs = path.positions[:n * J].reshape(n, J, params.nu)
        y = legs[second] - legs[first] + ((second - first) / n)[:, None, None] * x
        _raise_singular(pot, np.sum(y * y, axis=-1), lambda hit: (first[hit[0]], second[hit[0]], hit[1]))
    return self_energy_batch(params, path.positions[None], pot, x).single()


def external_energy(path0: Path, world: ExternalWorld, x=None) -> EnergyTerms:
    """
    E_{omega_0, omega^M}(x) with its x-gradient and x-Laplacian.

    Raises SingularConfigurationError carrying (k, i, j) if a singular u3 is evaluated at distance 0.
    """
    params = path0.params
    _check_steps(path0, params)
    x = np.zeros(params.nu) if x is None else as_vector(params, x)
    if world.M == 0:
        return EnergyTerms(0.0, np.zeros(params.nu), 0.0)
    n, J = params.n, params.slices
    if world.mode == WorldMode.CLASSICAL:
        external = world.ions
        points = world.ions[None, :, None, :]
    else:
        external = world.world_positions()[None]
        points = external[0][None, :, :J, :]
    bridge = path0.positions[:n * J].reshape(n, 1, J, params.nu)
    shift = (np.arange(n * J) / (n * J)).reshape(n, 1, J, 1)
    y = bridge - points[0] + shift * x
    _raise_singular(world.u3, np.sum(y * y, axis=-1), lambda hit: hit)
    return external_energy_batch(params, path0.positions[None], external, world.u3, x).single()


def pair_energy_U2(world: ExternalWorld) -> float:
    """
    beta U2 = h * sum over i < j and grid times of u2(omega_i(t) - omega_j(t)).

    Raises ModeError in classical mode and SingularConfigurationError carrying (i, j, t).
    """
    if world.mode != WorldMode.QUANTUM:
        raise ModeError('pair energy needs quantum trajectories, the world is {0}'.format(world.mode.value))
    if world.M <= 1 or world.u2 is None:
        return 0.0
    params = world.trajectories[0].params
    positions = world.world_positions()
    first, second = np.triu_indices(world.M, 1)
    y = positions[first, :params.slices] - positions[second, :params.slices]
    _raise_singular(world.u2, np.sum(y * y, axis=-1), lambda hit: (first[hit[0]], second[hit[0]], hit[1]))
    return float(pair_energy_batch(params, positions[None], world.u2)[0])

# endregion single path
