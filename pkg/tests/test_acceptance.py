"""The fourteen acceptance criteria, each at its stated tolerance.

Every test prints one ``[PASS]``/``[FAIL] criterion N`` line; the lines are
collected again in the terminal summary.
"""
import math
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import record
from grushinlab.cli import main
from grushinlab.fdsolve import convergence_study, grid_to_field
from grushinlab.fields import (
    F_coeffs,
    F_from_grad,
    GaugePotential,
    IdentityField,
    ZeroPotential,
    check_potential,
    check_structural,
    make_coefficients,
    make_perturbed,
    ratio_by_psi_decade,
)
from grushinlab.frequency import (
    FrequencyConfig,
    cauchy_schwarz_gap,
    geometric_radii,
    monotonicity_fit,
    radial_profile,
    three_ball_slack,
    variation_residuals,
    vanishing_order,
)
from grushinlab.geometry import DEFAULT_DIMS, euler_field, gauge, gauge_grad, identity_suite, sample_ball_collared
from grushinlab.solutions import (
    CoordinateT,
    CoordinateZ,
    GaussianModulated,
    PlanarHarmonic,
    builtin_members,
    residual,
)

D = DEFAULT_DIMS
ID = IdentityField(D)
LIN_RADII = (0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8)
ALL_PROFILES = []


def certified_K(u):
    V = u.exact_potential
    if V is None or isinstance(V, ZeroPotential):
        return 1.0
    return check_potential(V, ID).K_hat


def profile(u, alpha, radii, K=1.0, **kw):
    cfg = FrequencyConfig(alpha=alpha, radii=tuple(radii), K=K, **kw)
    prof = radial_profile(u, ID, u.exact_potential, cfg, label=u.label)
    ALL_PROFILES.append(prof)
    return prof


def homogeneous():
    return [CoordinateZ(D), CoordinateT(D), PlanarHarmonic(3, D)]


def gaussians():
    return [GaussianModulated(f, D) for f in (None, CoordinateZ(D), CoordinateT(D), PlanarHarmonic(3, D))]


# ---------------------------------------------------------------------------

def test_criterion_01_geometry_identities():
    t0 = time.perf_counter()
    res = identity_suite(D, n=10_000, seed=0, collar=1e-3)
    dt = time.perf_counter() - t0
    tol = {"Zrho": 1e-8, "Zpsi": 1e-8, "Xrho2": 1e-10, "divZ": 1e-6, "commutator": 1e-6}
    ok = all(res[k] < tol[k] for k in tol) and dt < 10
    record(1, "geometry identity suite", ok,
           ", ".join(f"{k}={res[k]:.1e}" for k in tol) + f", {dt:.1f}s")
    assert ok


def test_criterion_02_F_equals_Z():
    t0 = time.perf_counter()
    P = sample_ball_collared(1.0, 10_000, 0, D, collar=1e-3, absolute=True)
    errZ = float(np.max(np.abs(F_coeffs(ID, P) - euler_field(P, D))))
    A = make_perturbed(0.05)
    errrho = float(np.max(np.abs(F_from_grad(A, P, gauge_grad(P, D)) - gauge(P, D))))
    dt = time.perf_counter() - t0
    ok = errZ < 1e-10 and errrho < 1e-10 and dt < 10
    record(2, "F = Z for A = I, F rho = rho (eps=0.05)", ok, f"|F-Z|={errZ:.1e}, |Frho-rho|={errrho:.1e}, {dt:.1f}s")
    assert ok


def test_criterion_03_hypothesis_checker():
    t0 = time.perf_counter()
    ident = check_structural(ID)
    eps = 0.05
    pert = check_structural(make_perturbed(eps))
    lv = np.array(pert.levels)
    spread = float((lv.max() - lv.min()) / lv.max())
    tb = make_coefficients("tblock")
    ratios = ratio_by_psi_decade(tb)
    growth = ratios[1:] / ratios[:-1]
    tb_rep = check_structural(tb)
    dt = time.perf_counter() - t0
    ok = (ident.Lambda_hat == 0.0 and pert.Lambda_hat <= 10 * eps and spread <= 0.05
          and np.all(growth >= 10 * (1 - 1e-9)) and tb_rep.status != "pass" and dt < 30)
    record(3, "hypothesis checker", ok,
           f"identity={ident.Lambda_hat}, perturbed={pert.Lambda_hat:.4f} (spread {spread:.1%}), "
           f"tblock growth min {growth.min():.1f}x, status {tb_rep.status}, {dt:.1f}s")
    assert ok


def test_criterion_04_potential_certification():
    t0 = time.perf_counter()
    Q = D.Q
    k4 = check_potential(GaugePotential(Q), ID).K_hat
    k9 = check_potential(GaugePotential(Q + 2 * 3), ID).K_hat
    dt = time.perf_counter() - t0
    ok_a = abs(k4 - 4) <= 0.01 * 4
    ok_b = abs(k9 - 9) <= 0.01 * 9
    record(4, "potential certification", ok_a and ok_b and dt < 30,
           f"V=(rho^2-4)psi: K={k4:.4f} (want 4); V=(rho^2-10)psi: K={k9:.4f} (want 9; "
           f"sup |rho^2-10| on B_1 is 10 at the origin), {dt:.1f}s")
    assert ok_a and dt < 30


@pytest.mark.xfail(strict=True, reason="sup of |rho^2 - 10| over B_1 is 10, attained as rho -> 0; "
                                       "the stated target of 9 cannot be met by a correct certificate")
def test_criterion_04b_stated_K_for_p3():
    k = check_potential(GaugePotential(D.Q + 2 * 3), ID).K_hat
    assert abs(k - 9) <= 0.01 * 9


def test_criterion_05_manufactured_residuals():
    t0 = time.perf_counter()
    P = sample_ball_collared(1.0, 1000, 0, D, collar=1e-2, absolute=True)
    worst = {u.label: float(np.max(np.abs(residual(u, u.exact_potential, ID, P, h=1e-3))))
             for u in builtin_members(D)}
    dt = time.perf_counter() - t0
    ok = max(worst.values()) < 1e-6 and dt < 60
    record(5, "manufactured residuals", ok, f"max {max(worst.values()):.1e}, {dt:.1f}s")
    assert ok


def test_criterion_06_flux_equals_energy():
    t0 = time.perf_counter()
    worst, where = 0.0, None
    for u in builtin_members(D):
        K = certified_K(u)
        for alpha in sorted({0.0, 1.0, math.sqrt(K)}):
            prof = profile(u, alpha, (0.3, 0.5, 0.7), K=K, quad_budget=200_000, replicates=16)
            for row in prof.rows:
                rel = abs(row.I_flux - row.I_energy) / max(abs(row.I_energy), row.H)
                if rel > worst:
                    worst, where = rel, (u.label, alpha, row.r)
    dt = time.perf_counter() - t0
    ok = worst < 1e-2 and dt < 300
    record(6, "flux = energy", ok, f"worst {worst:.1e} at {where}, {dt:.0f}s")
    assert ok


@pytest.fixture(scope="module")
def homogeneous_profiles():
    return {(u.label, alpha): (u, profile(u, alpha, LIN_RADII)) for u in homogeneous() for alpha in (0.0, 1.0, 2.0)}


def test_criterion_07_homogeneous_frequency(homogeneous_profiles):
    worst_dev = worst_spread = 0.0
    for (label, alpha), (u, prof) in homogeneous_profiles.items():
        N = prof.column("N")
        target = 2 * (alpha + 1) * u.kappa
        worst_dev = max(worst_dev, float(np.max(np.abs(N - target) / target)))
        worst_spread = max(worst_spread, float((N.max() - N.min()) / np.mean(N)))
    ok = worst_dev < 1e-2 and worst_spread < 1e-2
    record(7, "N = 2(alpha+1)kappa for homogeneous u", ok,
           f"max deviation {worst_dev:.1e}, max spread {worst_spread:.1e}")
    assert ok


@pytest.fixture(scope="module")
def variation_profiles():
    radii = geometric_radii(0.1, 0.9, 30)
    return {u.label: profile(u, 1.0, radii) for u in homogeneous()}


def test_criterion_08_first_variation(variation_profiles):
    worst_H = worst_I = 0.0
    for prof in variation_profiles.values():
        tab = variation_residuals(prof)
        worst_H = max(worst_H, float(np.max(tab.rel_H)))
        worst_I = max(worst_I, float(np.max(tab.rel_I)))
    ok = worst_H < 2e-2 and worst_I < 2e-2
    record(8, "first-variation residuals", ok, f"res_H/H {worst_H:.1e}, res_I/I {worst_I:.1e}")
    assert ok


@pytest.fixture(scope="module")
def gaussian_profiles():
    out = {}
    for u in gaussians():
        K = certified_K(u)
        out[u.label] = (K, profile(u, "sqrtK", LIN_RADII, K=K))
    return out


def test_criterion_09_monotonicity(homogeneous_profiles, variation_profiles, gaussian_profiles):
    worst = 0.0
    for prof in [p for _, p in homogeneous_profiles.values()] + list(variation_profiles.values()):
        N = prof.column("N")
        slack = np.diff(N) + 1e-3 * np.abs(N[:-1])
        worst = min(worst, float(np.min(slack)))
    ok_a = worst >= 0
    fits, witnesses = {}, {}
    for label, (K, prof) in gaussian_profiles.items():
        rep = monotonicity_fit(prof, K)
        fits[label] = (rep.C1_fit, rep.C2_fit) if rep.passed else None
        if not rep.passed:
            witnesses[label] = rep.witness
    ok_b = all(v is not None for v in fits.values())
    record(9, "frequency monotonicity", ok_a and ok_b,
           f"(a) min slack at (0,0) {worst:.1e}; (b) fitted (C1,C2) {fits}"
           + (f"; witnesses {witnesses}" if witnesses else ""))
    assert ok_a and ok_b


def test_criterion_10_cauchy_schwarz(homogeneous_profiles, variation_profiles, gaussian_profiles):
    assert len(ALL_PROFILES) > 0
    worst = min(float(np.min(cauchy_schwarz_gap(p))) for p in ALL_PROFILES)
    ok = worst + 1e-9 >= 0
    record(10, "Cauchy-Schwarz step", ok, f"{len(ALL_PROFILES)} profiles, min gap {worst:.2e}")
    assert ok


def test_criterion_11_three_ball():
    reps = {}
    for u in builtin_members(D):
        reps[u.label] = three_ball_slack(u, ID, 0.1, 0.2, 0.9, certified_K(u))
    ok = all(r.passed for r in reps.values())
    record(11, "three-ball inequality", ok,
           ", ".join(f"{k}: C+C''={r.C_fit + r.Cpp_fit:.1f}" if r.passed else f"{k}: no fit"
                     for k, r in reps.items()))
    assert ok


def test_criterion_12_vanishing_order():
    expected = {"gauss": 0.0, "z1*gauss": 1.0, "t1*gauss": D.beta + 1, "p3*gauss": 3.0}
    lines, ok = [], True
    for u in gaussians():
        rep = vanishing_order(u, K=certified_K(u))
        e = expected[u.label]
        close = abs(rep.slope) <= 0.05 if e == 0 else abs(rep.slope - e) <= 0.05 * e
        ok &= close and rep.dominates
        lines.append(f"{u.label}: slope {rep.slope:.4f}, C2 sqrt K {rep.exponent_fit:.3f}")
    record(12, "vanishing order", ok, "; ".join(lines))
    assert ok


def test_criterion_13_fd_convergence():
    t0 = time.perf_counter()
    studies, ok = {}, True
    grid_u = None
    for u in (GaussianModulated(None, D), GaussianModulated(CoordinateZ(D), D)):
        study, grids = convergence_study(u, (17, 33, 65))
        studies[u.label] = study
        ok &= study.monotone and min(study.orders) >= 1
        if u.label == "z1*gauss":
            grid_u, grid = u, grids[-1]
    K = certified_K(grid_u)
    cfg = FrequencyConfig(alpha="sqrtK", radii=(0.3, 0.5), K=K)
    exact = radial_profile(grid_u, ID, grid_u.exact_potential, cfg).column("N")
    approx = radial_profile(grid_to_field(grid), ID, grid_u.exact_potential, cfg).column("N")
    rel = float(np.max(np.abs(approx - exact) / np.abs(exact)))
    dt = time.perf_counter() - t0
    ok = ok and rel < 0.05 and dt < 600
    record(13, "FD solver convergence", ok,
           "; ".join(f"{k}: errors {[f'{e:.1e}' for e in s.errors]}, orders {[round(o, 2) for o in s.orders]}"
                     for k, s in studies.items()) + f"; grid N rel diff {rel:.1e}, {dt:.0f}s")
    assert ok


def _csvs(root: Path) -> dict:
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*.csv"))}


def test_criterion_14_determinism(tmp_path):
    codes = [main(["all", "--seed", "0", "--out", str(tmp_path / name), "--quiet"]) for name in ("a", "b")]
    a, b = _csvs(tmp_path / "a"), _csvs(tmp_path / "b")
    ok = len(a) > 0 and a.keys() == b.keys() and all(a[k] == b[k] for k in a)
    record(14, "determinism of `all`", ok, f"{len(a)} CSV files compared, exit codes {codes}")
    assert ok
