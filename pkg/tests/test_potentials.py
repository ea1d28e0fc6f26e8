import math

import numpy as np
import pytest

from potentials import (PotentialSpec, RadialPotential, build_potential, laplacian_u, make_coulomb, make_dipole, make_free,
                        make_ode_potential, make_power_law, power_source, radial_ode_derivative, scale, soft_core,
                        solve_radial_ode, superharmonic_density, verify_superharmonic)

from errors import DivergenceError, DomainError, PotentialEvaluationError, ValidationError

GRID = np.geomspace(1e-3, 1e3, 200)


@pytest.mark.parametrize('nu', [2, 3])
@pytest.mark.parametrize('sign', [1, -1])
def test_coulomb_is_harmonic(nu, sign):
    pot = make_coulomb(nu, sign)
    assert pot.claims_superharmonic
    assert np.all(superharmonic_density(pot, nu, GRID) == 0.0)
    report = verify_superharmonic(pot)
    assert report.passed
    assert report.worst_value == 0.0


def test_coulomb_derivatives_cancel():
    pot = make_coulomb(3)
    # the generic formula, not the closed form
    generic = 3 * pot.df(GRID) + 2 * GRID * pot.d2f(GRID)
    magnitude = 3 * np.abs(pot.df(GRID)) + 2 * GRID * np.abs(pot.d2f(GRID))
    assert np.all(np.abs(generic) <= 1e-12 * magnitude)


def test_coulomb_values():
    assert make_coulomb(3).value([0.0, 2.0, 0.0]) == pytest.approx(0.5)
    assert make_coulomb(2).value([math.e, 0.0]) == pytest.approx(-1.0)
    assert make_coulomb(3).is_singular()


def test_coulomb_rejects_bad_arguments():
    with pytest.raises(DomainError):
        make_coulomb(3, sign=0)
    with pytest.raises(DomainError):
        make_coulomb(0)


def test_dipole_density():
    pot = make_dipole(4.0, 3)
    assert pot.claims_superharmonic
    generic = 3 * pot.df(GRID) + 2 * GRID * pot.d2f(GRID)
    np.testing.assert_allclose(generic, -GRID ** -4.0, rtol=1e-8)
    np.testing.assert_allclose(superharmonic_density(pot, 3, GRID), -GRID ** -4.0, rtol=1e-12)
    assert verify_superharmonic(pot).passed


@pytest.mark.parametrize('alpha, nu', [(1.0, 3), (4.0, 2)])
def test_dipole_domain(alpha, nu):
    with pytest.raises(DomainError):
        make_dipole(alpha, nu)


def test_power_law_not_superharmonic():
    pot = make_power_law(2.0, 3)
    assert not pot.claims_superharmonic
    report = verify_superharmonic(pot)
    assert not report.passed
    assert report.worst_s == pytest.approx(1e-3)
    assert report.worst_value == pytest.approx(6e9, rel=1e-9)


@pytest.mark.parametrize('alpha, coefficient, claims', [
    (0.5, 1.0, True),
    (-1.0, 1.0, False),
    (2.0, -1.0, True),
    (0.25, 1.0, True),
    (3.0, 0.0, True),
])
def test_power_law_claim(alpha, coefficient, claims):
    pot = make_power_law(alpha, 3, coefficient)
    assert pot.claims_superharmonic == claims
    assert verify_superharmonic(pot).passed == claims


def test_laplacian_of_square():
    pot = make_power_law(-1.0, 3)
    assert laplacian_u(pot, 3, 1.0) == pytest.approx(6.0)
    assert laplacian_u(pot, 3, 7.5) == pytest.approx(6.0)


def test_laplacian_needs_positive_distance():
    with pytest.raises(DomainError):
        laplacian_u(make_coulomb(3), 3, 0.0)


def test_free_potential():
    pot = make_free(3)
    assert pot.value([1.0, 2.0, 3.0]) == 0.0
    assert not pot.is_singular()
    assert verify_superharmonic(pot).passed


def test_soft_core_repulsive_coulomb():
    pot = soft_core(make_coulomb(3), 0.05)
    assert pot.claims_superharmonic
    assert pot.softening == 0.05
    assert pot.base.label == make_coulomb(3).label
    assert not pot.is_singular()
    assert pot.value(np.zeros(3)) == pytest.approx(20.0)


def test_soft_core_attractive_coulomb_falls_back_to_base():
    pot = soft_core(make_coulomb(3, -1), 0.05)
    assert not pot.claims_superharmonic
    assert not verify_superharmonic(pot).passed
    assert verify_superharmonic(pot.certification_target()).passed


def test_soft_core_zero_is_identity():
    pot = make_coulomb(3)
    assert soft_core(pot, 0.0) is pot
    with pytest.raises(DomainError):
        soft_core(pot, -0.1)


def test_scale():
    pot = make_coulomb(3)
    doubled = scale(pot, 2.5)
    assert doubled.value([1.0, 0.0, 0.0]) == pytest.approx(2.5)
    negative = scale(soft_core(pot, 0.05), -1.0)
    assert negative.value([2.0, 0.0, 0.0]) == pytest.approx(-soft_core(pot, 0.05).value([2.0, 0.0, 0.0]))
    assert verify_superharmonic(negative.certification_target()).passed
    assert scale(pot, 0.0).value([1.0, 0.0, 0.0]) == 0.0


def test_failing_evaluator_reports_point():
    def broken(s):
        raise ValueError('no derivative')

    pot = RadialPotential(f=make_free(3).f, df=broken, d2f=broken, label='broken', claims_superharmonic=False, nu=3)
    with pytest.raises(PotentialEvaluationError) as error:
        verify_superharmonic(pot)
    assert error.value.s == pytest.approx(1e-3)


def test_non_finite_density_reports_point():
    def density(s):
        return np.where(s > 1.0, np.nan, 0.0)

    pot = RadialPotential(f=make_free(3).f, df=make_free(3).df, d2f=make_free(3).d2f, label='nan', claims_superharmonic=False, nu=3,
                          density=density)
    with pytest.raises(PotentialEvaluationError) as error:
        verify_superharmonic(pot)
    assert error.value.s > 1.0


@pytest.mark.parametrize('s', [0.5, 1.0, 5.0, 50.0])
def test_radial_ode_dipole_source(s):
    spec = PotentialSpec(g=lambda t: t ** -4.0, a=math.inf, b=math.inf, nu=3)
    assert solve_radial_ode(spec, s) == pytest.approx(-s ** -3.0 / 15.0, rel=1e-6)
    assert radial_ode_derivative(spec, s) == pytest.approx(s ** -4.0 / 5.0, rel=1e-6)


def test_radial_ode_constant():
    spec = PotentialSpec(g=lambda t: 0.0, a=1.0, b=1.0, c1=5.0, nu=3)
    assert solve_radial_ode(spec, 0.3) == pytest.approx(5.0)
    assert solve_radial_ode(spec, 30.0) == pytest.approx(5.0)


def test_radial_ode_c2_branch():
    spec = PotentialSpec(g=lambda t: 0.0, a=1.0, b=1.0, c2=1.0, nu=3)
    assert solve_radial_ode(spec, 4.0) == pytest.approx(1.0)
    two_dimensional = PotentialSpec(g=lambda t: 0.0, a=1.0, b=1.0, c2=1.0, nu=2)
    assert solve_radial_ode(two_dimensional, math.e) == pytest.approx(1.0)


@pytest.mark.parametrize('nu', [1, 2])
def test_radial_ode_c2_divergence(nu):
    spec = PotentialSpec(g=lambda t: 0.0, a=math.inf, b=1.0, c2=1.0, nu=nu)
    with pytest.raises(DivergenceError) as error:
        solve_radial_ode(spec, 1.0)
    assert error.value.integral == 'c2'


def test_radial_ode_divergent_source():
    spec = PotentialSpec(g=lambda t: 1.0, a=math.inf, b=math.inf, nu=3)
    with pytest.raises(DivergenceError):
        solve_radial_ode(spec, 1.0)


def test_radial_ode_domain():
    spec = PotentialSpec(g=lambda t: 0.0)
    with pytest.raises(DomainError):
        solve_radial_ode(spec, 0.0)


def test_potential_spec_validation():
    with pytest.raises(ValidationError) as error:
        PotentialSpec(g=lambda t: -1.0)
    assert error.value.field == 'g'
    with pytest.raises(ValidationError) as error:
        PotentialSpec(g=lambda t: 0.0, a=0.0)
    assert error.value.field == 'a'


def test_ode_potential_matches_dipole(ode_potential):
    s = np.array([0.5, 1.0, 4.0])
    np.testing.assert_allclose(ode_potential.f(s), -s ** -3.0 / 15.0, rtol=1e-6)
    np.testing.assert_allclose(superharmonic_density(ode_potential, 3, s), -s ** -4.0, rtol=1e-12)
    assert verify_superharmonic(ode_potential).passed


def test_small_ode_table():
    spec = PotentialSpec(g=power_source(1.0, 4.0), a=math.inf, b=math.inf, nu=3)
    pot = make_ode_potential(spec, 0.1, 10.0, 30)
    np.testing.assert_allclose(pot.f([0.5, 2.0]), [-0.5 ** -3.0 / 15.0, -2.0 ** -3.0 / 15.0], rtol=1e-5)


def test_build_potential():
    pot = build_potential('coulomb', 3, {'soft_core': 0.05})
    assert pot.softening == 0.05
    assert build_potential('power-law', 3, {'alpha': 2.0}).claims_superharmonic is False
    assert build_potential('free', 2).value([1.0, 1.0]) == 0.0
    with pytest.raises(DomainError):
        build_potential('yukawa', 3)


def catalog():
    return [
        make_coulomb(3),
        make_coulomb(2),
        make_coulomb(1, -1),
        soft_core(make_coulomb(3), 0.5),
        soft_core(make_coulomb(2, -1), 0.5),
        make_dipole(4.0, 3),
        make_dipole(2.5, 4),
        make_power_law(0.25, 3),
        make_power_law(-1.0, 2, 0.5),
    ]


@pytest.fixture(scope='module')
def ode_potential():
    return build_potential('ode', 3, {'g_coefficient': 1.0, 'g_exponent': 4.0, 'soft_core': 0.0})


def assert_derivatives_match_finite_differences(pot):
    s = np.geomspace(1e-2, 1e2, 60)
    h = 1e-4 * s
    with np.errstate(all='ignore'):
        slope = (pot.f(s + h) - pot.f(s - h)) / (2.0 * h)
        curvature = (pot.df(s + h) - pot.df(s - h)) / (2.0 * h)
    np.testing.assert_allclose(pot.df(s), slope, rtol=1e-5, atol=0.0)
    np.testing.assert_allclose(pot.d2f(s), curvature, rtol=1e-5, atol=0.0)


@pytest.mark.parametrize('pot', catalog(), ids=lambda pot: pot.label)
def test_derivatives_match_finite_differences(pot):
    assert_derivatives_match_finite_differences(pot)


def test_ode_potential_derivatives_match_finite_differences(ode_potential):
    assert_derivatives_match_finite_differences(ode_potential)
    s = np.geomspace(1e-2, 1e2, 60)
    np.testing.assert_allclose(ode_potential.f(s), -s ** -3.0 / 15.0, rtol=1e-6)
    np.testing.assert_allclose(3.0 * ode_potential.df(s) + 2.0 * s * ode_potential.d2f(s), -s ** -4.0, rtol=1e-5)


def finite_difference_laplacian(pot, y, h):
    total = 0.0
    for axis in range(y.size):
        step = np.zeros(y.size)
        step[axis] = h
        values = [pot.value(y + k * step) for k in (-2, -1, 0, 1, 2)]
        total += (-values[0] + 16.0 * values[1] - 30.0 * values[2] + 16.0 * values[3] - values[4]) / (12.0 * h * h)
    return total


@pytest.mark.parametrize('pot', catalog(), ids=lambda pot: pot.label)
@pytest.mark.parametrize('radius', [0.1, 0.7, 3.0, 10.0])
def test_laplacian_matches_finite_differences(pot, radius):
    direction = np.array([1.0, 2.0, 2.0, 4.0])[:pot.nu]
    y = radius * direction / np.linalg.norm(direction)
    exact = laplacian_u(pot, pot.nu, radius ** 2)
    numeric = finite_difference_laplacian(pot, y, 1e-3 * radius)
    # Coulomb is harmonic, so the error is measured against the size of u / |y|^2 as well
    scale = abs(exact) + abs(float(pot.value(y))) / radius ** 2
    assert abs(numeric - exact) <= 1e-5 * scale


@pytest.mark.parametrize('spec', [
    PotentialSpec(g=lambda t: 1.0 / (1.0 + t) ** 2, a=1.0, b=2.0, c1=0.3, c2=0.7, nu=3),
    PotentialSpec(g=lambda t: math.exp(-t), a=0.5, b=math.inf, c1=-1.0, c2=0.2, nu=2),
    PotentialSpec(g=power_source(2.0, 3.0), a=math.inf, b=math.inf, c1=0.0, c2=0.4, nu=4),
], ids=['finite-limits', 'two-dimensional', 'infinite-limits'])
def test_radial_ode_residual(spec):
    for s in np.geomspace(0.5, 50.0, 7):
        h = 1e-3 * s
        slope = (solve_radial_ode(spec, s + h) - solve_radial_ode(spec, s - h)) / (2.0 * h)
        curvature = (radial_ode_derivative(spec, s + h) - radial_ode_derivative(spec, s - h)) / (2.0 * h)
        assert slope == pytest.approx(radial_ode_derivative(spec, s), rel=1e-5, abs=1e-12)
        residual = spec.nu * slope + 2.0 * s * curvature + spec.g(s)
        assert abs(residual) <= 1e-5 * (spec.nu * abs(slope) + 2.0 * s * abs(curvature) + spec.g(s))


@pytest.mark.parametrize('alpha, nu', [(1.6, 3), (2.0, 3), (4.0, 3), (6.0, 3), (2.5, 4), (5.0, 4), (3.0, 5), (8.0, 6)])
def test_dipole_family_is_certified(alpha, nu):
    pot = make_dipole(alpha, nu)
    assert verify_superharmonic(pot).passed
    assert verify_superharmonic(pot, nu, GRID).passed


@pytest.mark.parametrize('pot', [make_dipole(4.0, 3), make_power_law(0.25, 3), soft_core(make_coulomb(3), 0.05)],
                         ids=lambda pot: pot.label)
def test_sign_flip_breaks_certification(pot):
    report = verify_superharmonic(pot)
    assert report.passed and report.worst_value < 0.0
    assert not verify_superharmonic(scale(pot, -1.0)).passed
