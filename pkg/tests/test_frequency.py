import math

import numpy as np
import pytest
from scipy import special

from grushinlab.fields import IdentityField, make_perturbed
from grushinlab.frequency import (
    CSV_COLUMNS,
    DegenerateHeight,
    FrequencyConfig,
    ProfileRow,
    RadialProfile,
    cauchy_schwarz_gap,
    doubling_violation,
    energy_I,
    flux_I,
    frequency_N,
    frequency_comparison_fit,
    geometric_radii,
    h_cap_excess,
    height_H,
    monotonicity_fit,
    radial_profile,
    three_ball_slack,
    vanishing_order,
    variation_residuals,
)
from grushinlab.geometry import DEFAULT_DIMS
from grushinlab.quadrature import omega
from grushinlab.solutions import CoordinateT, CoordinateZ, GaussianModulated, PlanarHarmonic

B = 1 << 15
ID = IdentityField()


def synthetic(N, r=None, K=1.0, alpha=1.0):
    r = np.linspace(0.1, 0.9, len(N)) if r is None else r
    rows = [ProfileRow(r=float(x), H=1.0, H_err=0.0, I_energy=float(n), I_flux=float(n), I_err=0.0,
                       N=float(n), N_err=0.0, N_adjusted=float(n), h=1.0, h_err=0.0, sup_u=1.0,
                       FF=1.0, FF_err=0.0, flux_gap=0.0, flux_gap_err=0.0)
            for x, n in zip(r, N)]
    return RadialProfile(rows, alpha, K, 4.0)


def test_config_validation():
    assert FrequencyConfig(K=9.0).alpha_value == 3.0
    assert FrequencyConfig(alpha=0.5).alpha_value == 0.5
    for bad in ({"radii": (0.5, 0.3)}, {"radii": (0.0, 0.5)}, {"radii": (0.5, 1.2)}, {"K": 0.5},
                {"alpha": -1.0}, {"radii": ()}):
        with pytest.raises(ValueError):
            FrequencyConfig(**bad)


def test_height_closed_form_for_z1():
    # H = r^(Q+2a+2) int_{B_1} z1^2 psi (1-rho^2)^a; the angular factor cancels against
    # the alpha = 0 value through the radial Beta integral
    u = CoordinateZ()
    Q = DEFAULT_DIMS.Q
    h0 = height_H(u, ID, 1.0, 0.0, B).value
    for a in (1.0, 2.0):
        ratio = height_H(u, ID, 1.0, a, B).value / h0
        exact = (Q + 2) / 2 * special.beta((Q + 2) / 2, a + 1)
        assert ratio == pytest.approx(exact, rel=2e-3)
    assert height_H(u, ID, 0.5, 1.0, B).value == pytest.approx(
        0.5 ** (Q + 4) * height_H(u, ID, 1.0, 1.0, B).value, rel=1e-12)


@pytest.mark.parametrize("u,kappa", [(CoordinateZ(), 1.0), (CoordinateT(), 2.0), (PlanarHarmonic(3), 3.0)])
@pytest.mark.parametrize("alpha", [0.0, 1.5])
def test_homogeneous_frequency(u, kappa, alpha):
    fv = frequency_N(u, ID, None, 0.6, alpha, B)
    assert fv.N == pytest.approx(2 * (alpha + 1) * kappa, rel=5e-3)
    assert not fv.flagged or abs(fv.I_energy.value - fv.I_flux.value) < 1e-2 * fv.H.value


def test_flux_and_energy_forms_agree_with_potential():
    u = GaussianModulated(PlanarHarmonic(3))
    Ie = energy_I(u, ID, u.exact_potential, 0.7, 1.0, B).value
    If = flux_I(u, ID, 0.7, 1.0, B).value
    assert Ie == pytest.approx(If, rel=1e-3)


def test_flux_energy_with_perturbed_A_differ_for_nonsolution():
    # z1 does not solve the perturbed equation, so the two forms need not agree
    A = make_perturbed(0.1)
    Ie = energy_I(CoordinateZ(), A, None, 0.8, 1.0, B).value
    If = flux_I(CoordinateZ(), A, 0.8, 1.0, B).value
    assert abs(Ie - If) > 1e-6 * abs(Ie)


def test_degenerate_height():
    from grushinlab.fields import FunctionField
    zero = FunctionField(lambda P: np.zeros(len(P)), DEFAULT_DIMS, grad=lambda P: np.zeros_like(P))
    with pytest.raises(DegenerateHeight):
        frequency_N(zero, ID, None, 0.5, 1.0, B)


@pytest.fixture(scope="module")
def gauss_profile():
    u = GaussianModulated(CoordinateZ())
    cfg = FrequencyConfig(alpha=1.0, radii=geometric_radii(0.1, 0.9, 11), K=6.0, quad_budget=B)
    return radial_profile(u, ID, u.exact_potential, cfg, "z1*gauss")


def test_profile_csv(gauss_profile):
    text = gauss_profile.to_csv()
    lines = text.strip().split("\n")
    assert lines[0].split(",") == list(CSV_COLUMNS)
    assert len(lines) == 12
    assert float(lines[1].split(",")[0]) == pytest.approx(0.1)


def test_profile_cauchy_schwarz_and_hcap(gauss_profile):
    assert np.all(cauchy_schwarz_gap(gauss_profile) >= -1e-12)
    om = omega(DEFAULT_DIMS, B)
    assert np.all(h_cap_excess(gauss_profile, om.value + 3 * om.err_est) <= 0)


def test_variation_residuals_small_on_potential_solution(gauss_profile):
    vt = variation_residuals(gauss_profile)
    assert len(vt.r) == 7
    assert np.max(vt.rel_H) < 1e-2
    # the potential contributes O(K r) relative to I; the budgeted ratio stays small
    assert np.max(vt.budget_I) < 1.0


def test_variation_needs_geometric_grid():
    p = synthetic(np.linspace(1, 2, 9), r=np.linspace(0.1, 0.9, 9))
    with pytest.raises(ValueError):
        variation_residuals(p)
    with pytest.raises(ValueError):
        variation_residuals(synthetic(np.ones(5)))


def test_monotonicity_fit_synthetic():
    assert monotonicity_fit(synthetic([2, 2, 2, 2])).C1_fit == 0.0
    rep = monotonicity_fit(synthetic([3.0, 2.9, 2.8, 2.7], K=1.0))
    assert rep.passed and rep.C1_fit + rep.C2_fit > 0
    # smallest sum wins, ties to smaller C1
    r = np.array([0.1, 0.5, 0.9])
    Nv = np.array([1.0, 0.99, 0.98])
    rep = monotonicity_fit(synthetic(Nv, r=r))
    adj = np.exp(rep.C1_fit * r) * (Nv + rep.C2_fit * r ** 2)
    assert np.all(np.diff(adj) >= -1e-3 * Nv[:-1])
    bad = monotonicity_fit(synthetic([100.0, 1.0, 1.5], r=np.array([0.1, 0.11, 0.12]), K=1.0))
    assert not bad.passed and bad.witness == [(0.1, 0.11)]


def test_comparison_and_doubling():
    rep = frequency_comparison_fit(synthetic([4.0, 3.0, 2.0]))
    assert rep.passed and 1.0 <= rep.Cbar
    assert np.all(np.array([4, 3, 2])[:, None] <= rep.Cbar * (np.array([4, 3, 2])[None, :] + rep.C2) + 1e-9)
    assert frequency_comparison_fit(synthetic([1.0, 2.0, 3.0])).C2 == 0.0
    assert doubling_violation(synthetic([1.0, 2.0])) >= 0.0


def test_three_ball_homogeneous_zero_constants():
    rep = three_ball_slack(CoordinateZ(), ID, 0.1, 0.2, 0.9, 1.0, budget=B)
    assert rep.passed and rep.C_fit == 0.0 and rep.Cpp_fit == 0.0
    # log h is affine in log r with slope Q+2: slack is explicit
    s = (1 - rep.theta) * math.log(0.1) + rep.theta * math.log(0.9) - math.log(0.2)
    assert rep.slack0 == pytest.approx((DEFAULT_DIMS.Q + 2) * s, rel=1e-10)
    with pytest.raises(ValueError):
        three_ball_slack(CoordinateZ(), ID, 0.1, 0.3, 0.5, 1.0)
    with pytest.raises(ValueError):
        three_ball_slack(CoordinateZ(), ID, 0.1, 0.2, 0.9, 1.0, Cbar=0.5)


@pytest.mark.parametrize("u,kappa", [(GaussianModulated(None), 0.0), (GaussianModulated(CoordinateT()), 2.0)])
def test_vanishing_order_slopes(u, kappa):
    rep = vanishing_order(u, K=u.exact_potential.K_hat)
    assert rep.slope == pytest.approx(kappa, abs=0.05)
    assert rep.dominates and rep.reliable
    r = np.array(rep.radii)
    assert np.all(np.array(rep.sups) >= rep.C1 * r ** rep.exponent_fit * (1 - 1e-12))


def test_vanishing_order_validation_and_noise():
    with pytest.raises(ValueError):
        vanishing_order(CoordinateZ(), radii=(0.1, 0.5))
    from grushinlab.fields import FunctionField
    tiny = FunctionField(lambda P: 1e-20 * P[:, 0], DEFAULT_DIMS)
    rep = vanishing_order(tiny, radii=(0.01, 0.1))
    assert not rep.reliable and math.isnan(rep.slope)
