"""
Radial pair potentials u(y) = f(|y|^2), their derivatives and their superharmonicity certificates.

A radial u is superharmonic away from the origin iff nu f'(s) + 2 s f''(s) <= 0 for every s > 0,
the Laplacian being 2 [nu f'(s) + 2 s f''(s)]. The quantity nu f'(s) + 2 s f''(s) is called the
density below.
"""
import math
import warnings

from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from scipy.integrate import quad, IntegrationWarning
from scipy.interpolate import BPoly

from errors import DivergenceError, DomainError, PotentialEvaluationError, ValidationError

from constants import SUPERHARMONIC_GRID_MIN, SUPERHARMONIC_GRID_MAX, SUPERHARMONIC_GRID_POINTS, SUPERHARMONIC_TOLERANCE, SPEC_CHECK_POINTS, ODE_ABSOLUTE_TOLERANCE, ODE_RELATIVE_TOLERANCE, ODE_TABLE_MIN, ODE_TABLE_MAX, ODE_TABLE_POINTS

POTENTIAL_NAMES = ('coulomb', 'power-law', 'dipole', 'ode', 'free')
"""
tuple[str]:
Names of the potential catalog.
"""


@dataclass(frozen=True, eq=False)
class RadialPotential:
    """
    A radial potential u(y) = f(|y|^2).

    Attributes
    ----------
    f, df, d2f: Callable
        f, f' and f'' on arrays of s = |y|^2 > 0. Pure functions.
    label: str
        Human readable description.
    claims_superharmonic: bool
        True if nu f' + 2 s f'' <= 0 holds for every s > 0.
    nu: int
        Dimension the potential was built for.
    density: Callable or None
        Closed form of nu f'(s) + 2 s f''(s) in dimension nu, if known.
    base: RadialPotential or None
        The unregularized potential, if this one is soft-cored.
    softening: float
        Soft-core radius epsilon, 0 if not regularized.
    """
    f: Callable
    df: Callable
    d2f: Callable
    label: str
    claims_superharmonic: bool
    nu: int
    density: Optional[Callable] = None
    base: Optional['RadialPotential'] = None
    softening: float = 0.0

    def value(self, y) -> float:
        """
        Returns u(y).
        """
        y = np.asarray(y, dtype=float)
        return self.f(np.sum(y * y, axis=-1))

    def gradient(self, y) -> np.ndarray:
        """
        Returns grad u(y) = 2 f'(|y|^2) y.
        """
        y = np.asarray(y, dtype=float)
        return 2.0 * self.df(np.sum(y * y, axis=-1))[..., None] * y

    def is_singular(self) -> bool:
        """
        True if u is infinite at the origin.
        """
        with np.errstate(all='ignore'):
            return not bool(np.isfinite(self.f(np.zeros(1)))[0])

    def certification_target(self) -> 'RadialPotential':
        """
        The potential whose superharmonicity the lower bounds need, the base of a soft-cored potential.
        """
        return self.base if self.base is not None else self


class SuperharmonicReport(NamedTuple):
    """
    Result of a grid certification.
    """
    passed: bool
    worst_value: float
    worst_s: float


@dataclass(frozen=True, eq=False)
class PotentialSpec:
    """
    Data of the radial ode nu f'(s) + 2 s f''(s) = -g(s) with f(a) = c1, f'(b) = c2 b^(-nu/2).

    Attributes
    ----------
    g: Callable
        Nonnegative source term, called with floats (and with arrays by make_ode_potential).
    a, b: float
        Positive boundary points, math.inf allowed.
    c1, c2: float
        Boundary values.
    nu: int
        Dimension.
    """
    g: Callable
    a: float = 1.0
    b: float = 1.0
    c1: float = 0.0
    c2: float = 0.0
    nu: int = 3

    def __post_init__(self):
        if isinstance(self.nu, bool) or not isinstance(self.nu, (int, np.integer)) or self.nu < 1:
            raise ValidationError('nu', 'must be an integer >= 1, got {0!r}'.format(self.nu))
        for field in ('a', 'b'):
            value = float(getattr(self, field))
            if not value > 0:
                raise ValidationError(field, 'must be positive or inf, got {0!r}'.format(value))
            object.__setattr__(self, field, value)
        grid = np.geomspace(SUPERHARMONIC_GRID_MIN, SUPERHARMONIC_GRID_MAX, SPEC_CHECK_POINTS)
        for s in grid:
            value = float(self.g(float(s)))
            if not value >= 0:
                raise ValidationError('g', 'must be nonnegative, g({0}) = {1}'.format(s, value))


# region evaluators

def _zeros(s):
    return np.zeros_like(np.asarray(s, dtype=float))


def _power_evaluators(coefficient: float, power: float, nu: int):
    """
    Evaluators of f(s) = coefficient * s^power and the closed form density.
    """
    if coefficient == 0.0:
        return _zeros, _zeros, _zeros, _zeros
    factor = coefficient * power * (nu - 2.0 + 2.0 * power)

    def f(s):
        return coefficient * np.power(np.asarray(s, dtype=float), power)

    def df(s):
        return coefficient * power * np.power(np.asarray(s, dtype=float), power - 1.0)

    def d2f(s):
        return coefficient * power * (power - 1.0) * np.power(np.asarray(s, dtype=float), power - 2.0)

    if factor == 0.0:
        density = _zeros
    else:
        def density(s):
            return factor * np.power(np.asarray(s, dtype=float), power - 1.0)
    return f, df, d2f, density


def _log_evaluators(sign: int):
    """
    Evaluators of f(s) = -sign ln(s) / 2, the two dimensional Coulomb potential.
    """
    def f(s):
        return -0.5 * sign * np.log(np.asarray(s, dtype=float))

    def df(s):
        return -0.5 * sign / np.asarray(s, dtype=float)

    def d2f(s):
        s = np.asarray(s, dtype=float)
        return 0.5 * sign / (s * s)

    return f, df, d2f, _zeros


def _vectorized(function: Callable) -> Callable:
    """
    Wraps a scalar function so that it accepts arrays.
    """
    def wrapper(s):
        s = np.asarray(s, dtype=float)
        try:
            result = np.asarray(function(s), dtype=float)
            if result.shape == s.shape:
                return result
        except (TypeError, ValueError):
            pass
        return np.vectorize(function, otypes=[float])(s)
    return wrapper

# endregion evaluators

# region catalog

def make_coulomb(nu: int, sign: int = 1) -> RadialPotential:
    """
    The nu dimensional Coulomb potential, repulsive for sign = +1.

    nu = 3: f(s) = sign s^(-1/2), nu = 2: f(s) = -sign ln(s) / 2, otherwise sign s^(1 - nu/2) for nu > 2
    and -sign s^(1/2) for nu = 1. Harmonic away from 0 for both signs.
    """
    if isinstance(nu, bool) or not isinstance(nu, (int, np.integer)) or nu < 1:
        raise DomainError('coulomb potential needs an integer nu >= 1, got {0!r}'.format(nu))
    if sign not in (1, -1):
        raise DomainError('sign must be +1 or -1, got {0!r}'.format(sign))
    if nu == 2:
        f, df, d2f, density = _log_evaluators(sign)
    elif nu == 1:
        f, df, d2f, density = _power_evaluators(-float(sign), 0.5, nu)
    else:
        f, df, d2f, density = _power_evaluators(float(sign), 1.0 - nu / 2.0, nu)
    return RadialPotential(f=f, df=df, d2f=d2f, label='coulomb(nu={0},sign={1:+d})'.format(nu, sign),
                           claims_superharmonic=True, nu=int(nu), density=density)


def make_power_law(alpha: float, nu: int, coefficient: float = 1.0) -> RadialPotential:
    """
    f(s) = coefficient s^(-alpha), the solution of the radial ode for g(s) = alpha (nu - 2 - 2 alpha) s^(-alpha - 1).
    Superharmonic iff coefficient * alpha * (nu - 2 - 2 alpha) >= 0.
    """
    alpha = float(alpha)
    coefficient = float(coefficient)
    f, df, d2f, density = _power_evaluators(coefficient, -alpha, nu)
    claims = coefficient == 0.0 or coefficient * alpha * (nu - 2.0 - 2.0 * alpha) >= 0.0
    return RadialPotential(f=f, df=df, d2f=d2f, label='power-law(alpha={0},nu={1},c={2})'.format(alpha, nu, coefficient),
                           claims_superharmonic=claims, nu=int(nu), density=density)


def make_dipole(alpha: float, nu: int) -> RadialPotential:
    """
    f(s) = -s^(1 - alpha) / ((alpha - 1)(2 alpha - nu)), solving the radial ode for g(s) = s^(-alpha)
    with a = b = inf. alpha = 4 in three dimensions is the induced dipole-dipole attraction.
    """
    alpha = float(alpha)
    if nu < 3 or not alpha > nu / 2.0:
        raise DomainError('dipole potential needs nu >= 3 and alpha > nu/2, got alpha={0}, nu={1}'.format(alpha, nu))
    coefficient = -1.0 / ((alpha - 1.0) * (2.0 * alpha - nu))
    f, df, d2f, _ = _power_evaluators(coefficient, 1.0 - alpha, nu)

    def density(s):
        return -np.power(np.asarray(s, dtype=float), -alpha)

    return RadialPotential(f=f, df=df, d2f=d2f, label='dipole(alpha={0},nu={1})'.format(alpha, nu),
                           claims_superharmonic=True, nu=int(nu), density=density)


def make_free(nu: int) -> RadialPotential:
    """
    u = 0, the free gas.
    """
    return RadialPotential(f=_zeros, df=_zeros, d2f=_zeros, label='free(nu={0})'.format(nu),
                           claims_superharmonic=True, nu=int(nu), density=_zeros)


def soft_core(pot: RadialPotential, epsilon: float) -> RadialPotential:
    """
    Regularizes pot to f_eps(s) = f(s + eps^2).
    The superharmonicity claim is not inherited, it is re-established on the default grid.
    """
    epsilon = float(epsilon)
    if epsilon < 0:
        raise DomainError('soft-core radius must be >= 0, got {0}'.format(epsilon))
    if epsilon == 0.0:
        return pot
    shift = epsilon * epsilon

    def f(s):
        return pot.f(np.asarray(s, dtype=float) + shift)

    def df(s):
        return pot.df(np.asarray(s, dtype=float) + shift)

    def d2f(s):
        return pot.d2f(np.asarray(s, dtype=float) + shift)

    density = None
    if pot.density is not None:
        # nu f'(a) + 2 s f''(a) = density(a) - 2 eps^2 f''(a) with a = s + eps^2
        def density(s):
            shifted = np.asarray(s, dtype=float) + shift
            return pot.density(shifted) - 2.0 * shift * pot.d2f(shifted)

    softened = RadialPotential(f=f, df=df, d2f=d2f, label='soft_core({0},eps={1})'.format(pot.label, epsilon),
                               claims_superharmonic=False, nu=pot.nu, density=density,
                               base=pot.certification_target(), softening=math.hypot(pot.softening, epsilon))
    claims = verify_superharmonic(softened, pot.nu).passed
    return RadialPotential(f=f, df=df, d2f=d2f, label=softened.label, claims_superharmonic=claims, nu=pot.nu,
                           density=density, base=softened.base, softening=softened.softening)


def scale(pot: RadialPotential, factor: float) -> RadialPotential:
    """
    The potential factor * u. For negative factors the claim is re-established on the default grid.
    """
    factor = float(factor)
    if factor == 1.0:
        return pot
    if factor == 0.0:
        return make_free(pot.nu)

    def f(s):
        return factor * pot.f(s)

    def df(s):
        return factor * pot.df(s)

    def d2f(s):
        return factor * pot.d2f(s)

    density = None
    if pot.density is not None:
        def density(s):
            return factor * pot.density(s)

    base = scale(pot.base, factor) if pot.base is not None else None
    scaled = RadialPotential(f=f, df=df, d2f=d2f, label='{0}*{1}'.format(factor, pot.label),
                             claims_superharmonic=pot.claims_superharmonic, nu=pot.nu, density=density,
                             base=base, softening=pot.softening)
    if factor > 0.0:
        return scaled
    claims = verify_superharmonic(scaled, pot.nu).passed
    return RadialPotential(f=f, df=df, d2f=d2f, label=scaled.label, claims_superharmonic=claims, nu=pot.nu,
                           density=density, base=base, softening=pot.softening)

# endregion catalog

# region laplacian

def superharmonic_density(pot: RadialPotential, nu: int, s):
    """
    Returns nu f'(s) + 2 s f''(s), from the closed form when one exists for this nu.
    """
    s = np.asarray(s, dtype=float)
    if pot.density is not None and nu == pot.nu:
        return pot.density(s)
    return nu * pot.df(s) + 2.0 * s * pot.d2f(s)


def laplacian_u(pot: RadialPotential, nu: int, y_norm2):
    """
    Laplacian of y -> f(|y|^2) at |y|^2 = y_norm2, i.e. 2 [nu f'(s) + 2 s f''(s)].

    Parameter
    ---------
    pot: RadialPotential
    nu: int
        Dimension the Laplacian is taken in.
    y_norm2: float or array
        |y|^2, must be positive.
    """
    s = np.asarray(y_norm2, dtype=float)
    if np.any(~(s > 0)):
        raise DomainError('laplacian needs |y|^2 > 0, got {0}'.format(y_norm2))
    result = 2.0 * superharmonic_density(pot, nu, s)
    return float(result) if result.ndim == 0 else result


def default_grid() -> np.ndarray:
    """
    The log-spaced certification grid on [1e-3, 1e3].
    """
    return np.geomspace(SUPERHARMONIC_GRID_MIN, SUPERHARMONIC_GRID_MAX, SUPERHARMONIC_GRID_POINTS)


def verify_superharmonic(pot: RadialPotential, nu: int = None, s_grid=None, tolerance: float = SUPERHARMONIC_TOLERANCE) -> SuperharmonicReport:
    """
    Certifies nu f'(s) + 2 s f''(s) <= 0 on a grid.

    Parameter
    ---------
    pot: RadialPotential
    nu: int
        Dimension, by default the dimension of pot.
    s_grid: array
        Positive grid points, by default 200 log-spaced points on [1e-3, 1e3].
    tolerance: float
        Relative slack, scaled by max(1, |f'(s)| s, nu |f'(s)| + 2 s |f''(s)|).

    Returns
    -------
    SuperharmonicReport: passed, the largest density on the grid and where it occurs.
    """
    nu = pot.nu if nu is None else nu
    s = default_grid() if s_grid is None else np.asarray(s_grid, dtype=float).reshape(-1)
    if s.size == 0 or np.any(~(s > 0)):
        raise DomainError('certification grid must be nonempty and positive')
    try:
        with np.errstate(all='ignore'):
            density = np.asarray(superharmonic_density(pot, nu, s), dtype=float)
            df = np.asarray(pot.df(s), dtype=float)
            d2f = np.asarray(pot.d2f(s), dtype=float)
    except Exception as exception:
        for point in s:
            try:
                superharmonic_density(pot, nu, np.array([point]))
            except Exception as inner_exception:
                raise PotentialEvaluationError(float(point), str(inner_exception)) from inner_exception
        raise PotentialEvaluationError(float('nan'), str(exception)) from exception
    broken = ~np.isfinite(density)
    if np.any(broken):
        raise PotentialEvaluationError(float(s[np.argmax(broken)]), 'non-finite density')
    with np.errstate(all='ignore'):
        magnitude = np.maximum.reduce([np.ones_like(s), np.abs(df) * s, nu * np.abs(df) + 2.0 * s * np.abs(d2f)])
    magnitude = np.where(np.isfinite(magnitude), magnitude, 1.0)
    allowed = tolerance * magnitude
    worst = int(np.argmax(density))
    return SuperharmonicReport(passed=bool(np.all(density <= allowed)), worst_value=float(density[worst]),
                               worst_s=float(s[worst]))

# endregion laplacian

# region radial_ode

def _quad(function: Callable, lower: float, upper: float, integral: str, absolute: float, relative: float) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter('error', IntegrationWarning)
        try:
            value, _ = quad(function, lower, upper, epsabs=absolute, epsrel=relative, limit=200)
        except IntegrationWarning as warning:
            raise DivergenceError(integral, str(warning)) from warning
        except (OverflowError, ZeroDivisionError) as exception:
            raise DivergenceError(integral, str(exception)) from exception
    if not math.isfinite(value):
        raise DivergenceError(integral, 'non-finite value')
    return value


def _tail(function: Callable, lower: float, integral: str, absolute: float, relative: float) -> float:
    """
    Integral of function over [lower, inf), mapped onto [0, 1/lower] by t = 1/u.
    """
    def mapped(u):
        return function(1.0 / u) / (u * u)
    return _quad(mapped, 0.0, 1.0 / lower, integral, absolute, relative)


def _oriented_integral(function: Callable, start: float, stop: float, integral: str, absolute: float, relative: float) -> float:
    """
    The oriented integral from start to stop, either end may be inf.
    """
    if start == stop:
        return 0.0
    if math.isinf(stop):
        return _tail(function, start, integral, absolute, relative)
    if math.isinf(start):
        return -_tail(function, stop, integral, absolute, relative)
    return _quad(function, start, stop, integral, absolute, relative)


def _inner_integral(spec: PotentialSpec, x: float, absolute: float, relative: float) -> float:
    """
    Integral of g(t) t^(nu/2 - 1) from b to x.
    """
    exponent = spec.nu / 2.0 - 1.0
    return _oriented_integral(lambda t: float(spec.g(t)) * t ** exponent, spec.b, x, 'inner', absolute, relative)


def _c2_branch(spec: PotentialSpec, s: float) -> float:
    if spec.c2 == 0.0:
        return 0.0
    if spec.nu == 2:
        if math.isinf(spec.a):
            raise DivergenceError('c2', 'ln(a) diverges for a = inf')
        return math.log(s) - math.log(spec.a)
    power = 1.0 - spec.nu / 2.0
    if math.isinf(spec.a):
        if power > 0:
            raise DivergenceError('c2', 'a^(1 - nu/2) diverges for a = inf and nu < 2')
        return s ** power / power
    return (s ** power - spec.a ** power) / power


def solve_radial_ode(spec: PotentialSpec, s: float, absolute_tolerance: float = ODE_ABSOLUTE_TOLERANCE, relative_tolerance: float = ODE_RELATIVE_TOLERANCE) -> float:
    """
    Solution of nu f' + 2 s f'' = -g at s,
    f(s) = c1 - 1/2 int_a^s dx x^(-nu/2) int_b^x dt g(t) t^(nu/2-1) + c2 (s^(1-nu/2) - a^(1-nu/2)) / (1 - nu/2),
    with ln(s) - ln(a) for the c2 branch when nu = 2. Infinite a or b are mapped onto finite intervals.

    Parameter
    ---------
    spec: PotentialSpec
    s: float
        Positive point.
    absolute_tolerance, relative_tolerance: float
        Passed to every adaptive quadrature.

    Returns
    -------
    float: f(s). A DivergenceError names the integral that does not converge.
    """
    s = float(s)
    if not s > 0:
        raise DomainError('radial ode needs s > 0, got {0}'.format(s))
    half = spec.nu / 2.0

    def outer_integrand(x):
        return x ** (-half) * _inner_integral(spec, x, absolute_tolerance, relative_tolerance)

    outer = _oriented_integral(outer_integrand, spec.a, s, 'outer', absolute_tolerance, relative_tolerance)
    return spec.c1 - 0.5 * outer + spec.c2 * _c2_branch(spec, s)


def radial_ode_derivative(spec: PotentialSpec, s: float, absolute_tolerance: float = ODE_ABSOLUTE_TOLERANCE, relative_tolerance: float = ODE_RELATIVE_TOLERANCE) -> float:
    """
    f'(s) = s^(-nu/2) [c2 - 1/2 int_b^s g(t) t^(nu/2-1) dt] of the radial ode solution.
    """
    s = float(s)
    inner = _inner_integral(spec, s, absolute_tolerance, relative_tolerance)
    return s ** (-spec.nu / 2.0) * (spec.c2 - 0.5 * inner)


def make_ode_potential(spec: PotentialSpec, s_min: float = ODE_TABLE_MIN, s_max: float = ODE_TABLE_MAX, points: int = ODE_TABLE_POINTS) -> RadialPotential:
    """
    A potential backed by solve_radial_ode.
    f, f' and f'' (the last from the ode) are tabulated on a log grid and joined by one piecewise quintic in ln s,
    so f' and f'' are the derivatives of the interpolated f. Outside [s_min, s_max] the polynomial extrapolates.
    """
    grid = np.geomspace(s_min, s_max, points)
    g = _vectorized(spec.g)
    nu = spec.nu
    values = np.array([solve_radial_ode(spec, s) for s in grid])
    slopes = np.array([radial_ode_derivative(spec, s) for s in grid])
    curvatures = (-g(grid) - nu * slopes) / (2.0 * grid)
    # derivatives in t = ln s
    table = BPoly.from_derivatives(np.log(grid), np.column_stack((values, grid * slopes, grid ** 2 * curvatures + grid * slopes)))
    first = table.derivative(1)
    second = table.derivative(2)

    def f(s):
        return table(np.log(np.asarray(s, dtype=float)))

    def df(s):
        s = np.asarray(s, dtype=float)
        return first(np.log(s)) / s

    def d2f(s):
        s = np.asarray(s, dtype=float)
        t = np.log(s)
        return (second(t) - first(t)) / s ** 2

    def density(s):
        return -g(s)

    label = 'ode(a={0},b={1},c1={2},c2={3},nu={4})'.format(spec.a, spec.b, spec.c1, spec.c2, nu)
    return RadialPotential(f=f, df=df, d2f=d2f, label=label, claims_superharmonic=True, nu=int(nu), density=density)


def power_source(coefficient: float, exponent: float) -> Callable:
    """
    The source g(s) = coefficient * s^(-exponent) used by the catalog.
    """
    def g(s):
        return coefficient * np.power(s, -exponent)
    return g

# endregion radial_ode


def build_potential(name: str, nu: int, block: dict = None) -> RadialPotential:
    """
    Builds a potential of the catalog.

    Parameter
    ---------
    name: str
        One of 'coulomb', 'power-law', 'dipole', 'ode', 'free'.
    nu: int
        Dimension.
    block: dict
        Parameters: sign, alpha, coefficient, g_coefficient, g_exponent, a, b, c1, c2 and soft_core
        (the soft-core radius, applied to any potential).

    Returns
    -------
    RadialPotential
    """
    block = block or {}
    if name == 'coulomb':
        pot = make_coulomb(nu, int(block.get('sign', 1)))
    elif name == 'power-law':
        pot = make_power_law(block.get('alpha', 0.5), nu, block.get('coefficient', 1.0))
    elif name == 'dipole':
        pot = make_dipole(block.get('alpha', 4.0), nu)
    elif name == 'ode':
        spec = PotentialSpec(g=power_source(float(block.get('g_coefficient', 1.0)), float(block.get('g_exponent', 4.0))),
                             a=block.get('a', math.inf), b=block.get('b', math.inf), c1=float(block.get('c1', 0.0)),
                             c2=float(block.get('c2', 0.0)), nu=nu)
        pot = make_ode_potential(spec)
    elif name == 'free':
        pot = make_free(nu)
    else:
        raise DomainError('unknown potential {0!r}, expected one of {1}'.format(name, ', '.join(POTENTIAL_NAMES)))
    return soft_core(pot, float(block.get('soft_core', 0.0)))
