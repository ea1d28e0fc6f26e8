"""
Units, parameters and the path type shared by every other module.
"""
import math

from dataclasses import dataclass, replace

import numpy as np

from errors import DomainError, ValidationError

from constants import DEFAULT_BETA, DEFAULT_WAVELENGTH, TWO_PI


def _check_integer(field: str, value) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ValidationError(field, 'must be an integer, got {0!r}'.format(value))
    if value < 1:
        raise ValidationError(field, 'must be >= 1, got {0}'.format(value))
    return int(value)


def _check_positive(field: str, value) -> float:
    try:
        number = float(value)
    except (TypeError, ValueError):
        raise ValidationError(field, 'must be a real number, got {0!r}'.format(value))
    if not math.isfinite(number) or number <= 0.0:
        raise ValidationError(field, 'must be positive and finite, got {0!r}'.format(value))
    return number


@dataclass(frozen=True)
class ModelParams:
    """
    Parameters of the bridge model.

    Attributes
    ----------
    nu: int
        Dimension of space.
    beta: float
        Inverse temperature, the time span of one leg.
    n: int
        Number of legs, the bridge spans the total time n * beta.
    slices: int
        Quadrature slices J per leg, the time step is beta / J.
    wavelength: float
        Thermal wavelength lambda_beta, the length unit. Mass and hbar only enter through it.
    """
    nu: int
    beta: float = DEFAULT_BETA
    n: int = 1
    slices: int = 1
    wavelength: float = DEFAULT_WAVELENGTH

    def __post_init__(self):
        object.__setattr__(self, 'nu', _check_integer('nu', self.nu))
        object.__setattr__(self, 'beta', _check_positive('beta', self.beta))
        object.__setattr__(self, 'n', _check_integer('n', self.n))
        object.__setattr__(self, 'slices', _check_integer('slices', self.slices))
        object.__setattr__(self, 'wavelength', _check_positive('wavelength', self.wavelength))

    @property
    def step(self) -> float:
        """
        Time step h = beta / J.
        """
        return self.beta / self.slices

    @property
    def total_time(self) -> float:
        return self.n * self.beta

    @property
    def total_steps(self) -> int:
        return self.n * self.slices

    @property
    def sigma2(self) -> float:
        """
        Per-coordinate variance rate sigma^2 = lambda_beta^2 / (2 pi beta).
        """
        return self.wavelength ** 2 / (TWO_PI * self.beta)

    def wavelength_squared_at(self, t: float) -> float:
        """
        Returns lambda_t^2 = lambda_beta^2 * t / beta.
        """
        return self.wavelength ** 2 * (t / self.beta)

    def wavelength_at(self, t: float) -> float:
        """
        Returns lambda_t = lambda_beta * sqrt(t / beta).
        """
        return self.wavelength * math.sqrt(t / self.beta)

    @property
    def total_wavelength(self) -> float:
        """
        lambda at the full span n * beta.
        """
        return self.wavelength_at(self.total_time)

    def with_wavelength(self, wavelength: float) -> 'ModelParams':
        """
        Same grid for a particle of a different mass.
        """
        return replace(self, wavelength=wavelength)

    def single_leg(self) -> 'ModelParams':
        """
        Same grid restricted to one leg, the span of the external trajectories.
        """
        return replace(self, n=1)


def make_params(nu: int, beta: float, n: int, J: int, wavelength: float) -> ModelParams:
    """
    Builds validated model parameters.

    Parameter
    ---------
    nu: int
        Dimension, >= 1.
    beta: float
        Inverse temperature, > 0.
    n: int
        Number of legs, >= 1.
    J: int
        Slices per leg, >= 1.
    wavelength: float
        Thermal wavelength at beta, > 0.

    Returns
    -------
    ModelParams: The validated record. A ValidationError names the first bad field.
    """
    return ModelParams(nu=nu, beta=beta, n=n, slices=J, wavelength=wavelength)


@dataclass(frozen=True, eq=False)
class Path:
    """
    Positions of one trajectory on the uniform time grid t_j = j * h.
    Index k * J + j holds omega(k * beta + t_j). The positions are read only.
    """
    params: ModelParams
    positions: np.ndarray

    def __post_init__(self):
        positions = np.array(self.positions, dtype=float)
        if positions.ndim != 2 or positions.shape[1] != self.params.nu or positions.shape[0] < 2:
            raise ValidationError('positions', 'expected shape (count + 1, {0}), got {1}'.format(
                self.params.nu, positions.shape))
        positions.setflags(write=False)
        object.__setattr__(self, 'positions', positions)

    @property
    def count(self) -> int:
        """
        Number of steps of the path.
        """
        return self.positions.shape[0] - 1

    @property
    def start(self) -> np.ndarray:
        return self.positions[0]

    @property
    def end(self) -> np.ndarray:
        return self.positions[-1]

    @property
    def total_time(self) -> float:
        return self.count * self.params.step

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.count + 1) * self.params.step


def as_vector(params: ModelParams, x, field: str = 'x') -> np.ndarray:
    """
    Converts x into a float vector of length nu.
    """
    vector = np.asarray(x, dtype=float).reshape(-1)
    if vector.shape != (params.nu,):
        raise ValidationError(field, 'expected a vector of length {0}, got shape {1}'.format(
            params.nu, np.shape(x)))
    return vector


def measure_mass(params: ModelParams, start, end, t: float) -> float:
    """
    Total mass lambda_t^-nu * exp(-pi |end - start|^2 / lambda_t^2) of the Wiener bridge measure over time t.

    Parameter
    ---------
    params: ModelParams
        Supplies nu and lambda_beta.
    start, end:
        The end points.
    t: float
        Time span, > 0.
    """
    if not t > 0:
        raise DomainError('time span must be positive, got {0}'.format(t))
    distance = as_vector(params, end, 'end') - as_vector(params, start, 'start')
    wavelength2 = params.wavelength_squared_at(t)
    return float(wavelength2 ** (-params.nu / 2.0) * math.exp(-math.pi * float(distance @ distance) / wavelength2))


def gaussian_factor(params: ModelParams, x) -> float:
    """
    The tilt prefactor exp(-pi |x|^2 / lambda_{n beta}^2) = exp(-pi |x|^2 / (n lambda_beta^2)).
    """
    shift = as_vector(params, x)
    return math.exp(-math.pi * float(shift @ shift) / (params.n * params.wavelength ** 2))
