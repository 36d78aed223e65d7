import numpy as np
import pytest

from conftest import ALT_DIMS
from grushinlab.fields import FunctionField, IdentityField, fd_grad, make_perturbed
from grushinlab.geometry import DEFAULT_DIMS, Dims, DomainError, euler_from_grad, gauge, sample_ball, sample_ball_collared
from grushinlab.solutions import (
    CoordinateT,
    CoordinateZ,
    GaussianModulated,
    PlanarHarmonic,
    builtin_members,
    grushin_laplacian_fd,
    manufactured,
    parse_solution,
    residual,
)


def probe(d, n=200, seed=0):
    return sample_ball_collared(1.0, n, seed, d, collar=1e-2, absolute=True)


@pytest.mark.parametrize("d", ALT_DIMS)
def test_members_solve_their_equation(d):
    P = probe(d)
    for u in builtin_members(d):
        r = residual(u, u.exact_potential, IdentityField(d), P)
        assert np.max(np.abs(r)) < 1e-6, u.label


def test_potential_constants():
    d = DEFAULT_DIMS
    # V = (rho^2 - Q - 2 kappa) psi, evaluated where psi = 1 and rho = 0.5
    P = np.array([[0.5, 0.0, 0.0]])
    expected = {"gauss": 0.25 - 4, "z1*gauss": 0.25 - 6, "t1*gauss": 0.25 - 8, "p3*gauss": 0.25 - 10}
    for u in builtin_members(d):
        if u.label in expected:
            assert u.exact_potential(P)[0] == pytest.approx(expected[u.label])


def test_quadratic_residual_is_two():
    d = DEFAULT_DIMS
    u = FunctionField(lambda P: P[..., 0] ** 2, d)
    r = residual(u, None, None, probe(d, 50))
    assert np.allclose(r, 2.0, atol=1e-6)


def test_residual_sees_wrong_potential():
    u = GaussianModulated(CoordinateT())
    wrong = GaussianModulated(None).exact_potential
    assert np.max(np.abs(residual(u, wrong, None, probe(DEFAULT_DIMS, 50)))) > 1e-3


def test_residual_collar():
    with pytest.raises(DomainError):
        residual(CoordinateZ(), None, None, np.array([[1e-3, 0.0, 0.1]]), h=1e-3)


def test_linear_residual_with_perturbed_A_is_small_but_nonzero():
    # z1 is not a solution for a variable A; the probe must notice
    r = residual(CoordinateZ(), None, make_perturbed(0.05), probe(DEFAULT_DIMS, 50))
    assert np.max(np.abs(r)) > 1e-3


@pytest.mark.parametrize("d", ALT_DIMS)
def test_homogeneous_members_satisfy_Zu(d):
    P = sample_ball(1.0, 300, 3, d)
    for u in (CoordinateZ(d), CoordinateT(d)) + ((PlanarHarmonic(3, d),) if d.m >= 2 else ()):
        assert np.max(np.abs(euler_from_grad(u.grad(P), P, d) - u.kappa * u(P))) < 1e-12


@pytest.mark.parametrize("d", ALT_DIMS)
def test_analytic_grads_match_fd(d):
    P = probe(d, 100)
    for u in builtin_members(d):
        assert np.allclose(u.grad(P), fd_grad(u, P, d), atol=1e-7), u.label


def test_grushin_laplacian_matches_residual_for_identity():
    d = DEFAULT_DIMS
    u = GaussianModulated(PlanarHarmonic(3))
    P = probe(d, 100)
    lap = grushin_laplacian_fd(u, P)
    assert np.allclose(lap, u.exact_potential(P) * u(P), atol=1e-6)


def test_bound_C0_holds():
    P = sample_ball(1.0, 5000, 11)
    for u in builtin_members():
        assert np.max(np.abs(u(P))) <= u.bound_C0(1.0) + 1e-12, u.label


def test_gaussian_grad_at_origin_is_zero():
    u = GaussianModulated(None)
    assert np.array_equal(u.grad(np.zeros((1, 3))), np.zeros((1, 3)))


def test_kappas_and_labels():
    d = Dims(2, 1, 2.0)
    assert manufactured("coordinate_t", dims=d).kappa == 3.0
    assert manufactured("gaussian_modulated", {"factor": "t1"}, d).kappa == 3.0
    assert manufactured("planar_harmonic", {"p": 4}, d).kappa == 4.0
    assert manufactured("gaussian_radial", dims=d).label == "gauss"
    assert len(builtin_members(d)) == 7


@pytest.mark.parametrize("spec,label", [
    ("coordinate_z", "z1"), ("coordinate_z:2", "z2"), ("coordinate_t", "t1"),
    ("planar_harmonic:3", "p3"), ("gaussian_radial", "gauss"),
    ("gaussian_modulated:p3", "p3*gauss"), ("gaussian_modulated", "z1*gauss"),
])
def test_parse_solution(spec, label):
    assert parse_solution(spec).label == label


@pytest.mark.parametrize("spec", ["nope", "gaussian_modulated:q", "planar_harmonic:0", "coordinate_z:5"])
def test_parse_solution_errors(spec):
    with pytest.raises(ValueError):
        parse_solution(spec)


def test_planar_harmonic_needs_two_z():
    with pytest.raises(ValueError):
        PlanarHarmonic(2, Dims(1, 1, 1.0))


def test_gaussian_value():
    P = np.array([[0.3, 0.1, 0.05]])
    assert GaussianModulated(None)(P)[0] == pytest.approx(np.exp(-0.5 * gauge(P)[0] ** 2))
