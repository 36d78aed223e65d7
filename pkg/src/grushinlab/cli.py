"""Batch runner: ``grushinlab <subcommand> [--config FILE] [flags]``.

Configuration is an INI file with the sections below; any flag overrides the
matching key.  Every run writes ``report.json`` (sorted keys, no timestamps)
and, where applicable, one CSV per profile or grid into ``--out``.

    [general]       m, k, beta, seed, quad_budget, replicates, R1
    [coefficients]  family (identity | perturbed | tblock), eps
    [potential]     kind (auto | none | gauge), c
    [solution]      spec: manufactured "kind[:arg]", "fd:kind[:arg]", "grid:PATH", or "all"
    [frequency]     alpha (number | sqrtK), radii ("a,b,c" | "lin:a:b:n" | "geom:a:b:n"), K (number | auto)
    [threeball]     r1, r2, r3, cbar
    [vanishing]     rmin, rmax, n
    [solve]         sizes (e.g. "17,33,65"), z_half, t_half

Exit status: 0 when every check passes, 1 on any failure, 2 when nothing
failed but some check was inconclusive, 3 for usage or configuration errors.
"""
from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import platform
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .fdsolve import GridSolution, SolverError, convergence_study, grid_to_field, solve_fd, staggered_box
from .fields import (
    GaugePotential,
    IdentityField,
    ZeroPotential,
    check_potential,
    check_structural,
    make_coefficients,
    ratio_by_psi_decade,
)
from .frequency import (
    FrequencyConfig,
    cauchy_schwarz_gap,
    doubling_violation,
    ellipticity_constant,
    frequency_comparison_fit,
    geometric_radii,
    h_cap_excess,
    monotonicity_fit,
    radial_profile,
    three_ball_slack,
    vanishing_order,
)
from .geometry import Dims, gauge_bounds, identity_suite, sample_ball_collared
from .quadrature import omega
from .solutions import builtin_members, parse_solution, residual

COMMANDS = ("geometry-check", "hypothesis-check", "potential-check", "residual-check", "solve",
            "frequency", "monotonicity", "threeball", "vanishing-order", "all")

DEFAULTS = {
    "general": {"m": "2", "k": "1", "beta": "1.0", "seed": "0", "quad_budget": "200000",
                "replicates": "16", "R1": "1.0"},
    "coefficients": {"family": "identity", "eps": "0.05"},
    "potential": {"kind": "auto", "c": "4.0"},
    "solution": {"spec": "coordinate_z"},
    "frequency": {"alpha": "sqrtK", "radii": "lin:0.2:0.8:7", "K": "auto"},
    "threeball": {"r1": "0.1", "r2": "0.2", "r3": "0.9", "cbar": "1.0"},
    "vanishing": {"rmin": "0.002", "rmax": "0.3333333333333333", "n": "19"},
    "solve": {"sizes": "17,33,65", "z_half": "0.6", "t_half": "0.15"},
}

# flag name -> (section, key)
FLAGS = {
    "m": ("general", "m"), "k": ("general", "k"), "beta": ("general", "beta"),
    "seed": ("general", "seed"), "quad_budget": ("general", "quad_budget"),
    "replicates": ("general", "replicates"), "R1": ("general", "R1"),
    "family": ("coefficients", "family"), "eps": ("coefficients", "eps"),
    "potential": ("potential", "kind"), "c": ("potential", "c"),
    "solution": ("solution", "spec"),
    "alpha": ("frequency", "alpha"), "radii": ("frequency", "radii"), "K": ("frequency", "K"),
    "r1": ("threeball", "r1"), "r2": ("threeball", "r2"), "r3": ("threeball", "r3"),
    "cbar": ("threeball", "cbar"),
    "rmin": ("vanishing", "rmin"), "rmax": ("vanishing", "rmax"), "n_radii": ("vanishing", "n"),
    "sizes": ("solve", "sizes"), "z_half": ("solve", "z_half"), "t_half": ("solve", "t_half"),
}


EXIT_USAGE = 3


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration

@dataclass
class ExperimentConfig:
    raw: dict

    def get(self, section, key, kind=str, check=None, what=""):
        val = self.raw[section][key]
        try:
            out = kind(val)
        except (TypeError, ValueError):
            raise ConfigError(f"{section}.{key}: expected {kind.__name__}, got {val!r}") from None
        if check is not None and not check(out):
            raise ConfigError(f"{section}.{key}: {what} (got {val!r})")
        return out

    @property
    def dims(self) -> Dims:
        return Dims(self.get("general", "m", int, lambda v: v >= 1, "must be >= 1"),
                    self.get("general", "k", int, lambda v: v >= 0, "must be >= 0"),
                    self.get("general", "beta", float, lambda v: v > 0, "must be > 0"))

    @property
    def seed(self) -> int:
        return self.get("general", "seed", int, lambda v: v >= 0, "must be >= 0")

    @property
    def budget(self) -> int:
        return self.get("general", "quad_budget", int, lambda v: v >= 64, "must be >= 64")

    @property
    def replicates(self) -> int:
        return self.get("general", "replicates", int, lambda v: v >= 2, "must be >= 2")

    @property
    def R1(self) -> float:
        return self.get("general", "R1", float, lambda v: 0 < v <= 1, "must lie in (0, 1]")

    def coefficients(self):
        fam = self.get("coefficients", "family", str, lambda v: v in ("identity", "perturbed", "tblock"),
                       "must be identity | perturbed | tblock")
        eps = self.get("coefficients", "eps", float)
        return make_coefficients(fam, self.dims, self.R1, eps)

    def alpha(self):
        val = self.raw["frequency"]["alpha"]
        if val == "sqrtK":
            return val
        return self.get("frequency", "alpha", float, lambda v: v >= 0, "must be >= 0 or 'sqrtK'")

    def radii(self) -> tuple:
        return parse_radii(self.raw["frequency"]["radii"], "frequency.radii")

    def sizes(self) -> tuple:
        try:
            out = tuple(int(x) for x in self.raw["solve"]["sizes"].split(","))
        except ValueError:
            raise ConfigError(f"solve.sizes: expected comma-separated integers, got "
                              f"{self.raw['solve']['sizes']!r}") from None
        if any(n < 3 for n in out):
            raise ConfigError("solve.sizes: every grid needs at least 3 nodes per axis")
        return out

    def as_dict(self) -> dict:
        return {s: dict(sorted(v.items())) for s, v in sorted(self.raw.items())}


def parse_radii(spec: str, where: str) -> tuple:
    try:
        if spec.startswith(("lin:", "geom:")):
            kind, a, b, n = spec.split(":")
            a, b, n = float(a), float(b), int(n)
            r = np.linspace(a, b, n) if kind == "lin" else np.geomspace(a, b, n)
            return tuple(float(f"{x:.12g}") for x in r)
        return tuple(float(x) for x in spec.split(","))
    except ValueError:
        raise ConfigError(f"{where}: expected 'a,b,..', 'lin:a:b:n' or 'geom:a:b:n', got {spec!r}") from None


def load_config(path: str | None, overrides: dict) -> ExperimentConfig:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    cp.read_dict(DEFAULTS)
    if path:
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        user = configparser.ConfigParser()
        user.optionxform = str
        user.read(path, encoding="utf-8")
        for sec in user.sections():
            if sec not in DEFAULTS:
                raise ConfigError(f"unknown section [{sec}]")
            for key, val in user[sec].items():
                if key not in DEFAULTS[sec]:
                    raise ConfigError(f"{sec}.{key}: unknown key")
                cp[sec][key] = val
    for flag, val in overrides.items():
        if val is not None:
            sec, key = FLAGS[flag]
            cp[sec][key] = str(val)
    return ExperimentConfig({s: dict(cp[s]) for s in cp.sections()})


# ---------------------------------------------------------------------------
# reports

@dataclass
class Check:
    name: str
    anchor: str
    points: int
    max_violation: float
    tolerance: float
    status: str
    details: dict = field(default_factory=dict)

    def as_dict(self):
        return {"name": self.name, "anchor": self.anchor, "points": self.points,
                "max_violation": _clean(self.max_violation), "tolerance": self.tolerance,
                "status": self.status, "details": _clean(self.details)}


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _status(ok: bool) -> str:
    return "pass" if ok else "fail"


def _bounded(name, anchor, points, value, tol, **details) -> Check:
    return Check(name, anchor, points, value, tol, _status(value <= tol), details)


class Run:
    def __init__(self, cfg: ExperimentConfig, out: Path):
        self.cfg = cfg
        self.out = out
        self.checks: list[Check] = []
        self.artifacts: list[str] = []

    def add(self, check: Check):
        self.checks.append(check)

    def write(self, name: str, text: str):
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / name).write_text(text, encoding="utf-8")
        self.artifacts.append(name)

    def exit_status(self) -> int:
        if any(c.status == "fail" for c in self.checks):
            return 1
        if any(c.status == "inconclusive" for c in self.checks):
            return 2
        return 0

    def report(self, command: str) -> dict:
        return {
            "command": command,
            "config": self.cfg.as_dict(),
            "seed": self.cfg.seed,
            "versions": {"grushinlab": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                         "python": platform.python_version()},
            "checks": [c.as_dict() for c in self.checks],
            "artifacts": sorted(self.artifacts),
            "exit_status": self.exit_status(),
        }


# ---------------------------------------------------------------------------
# wiring

def solutions_for(cfg: ExperimentConfig, A=None):
    """``[(u, V, label)]`` for the configured solution spec."""
    d = cfg.dims
    spec = cfg.raw["solution"]["spec"]
    if spec == "all":
        members = builtin_members(d)
        return [(u, potential_for(cfg, u), u.label) for u in members]
    if spec.startswith("grid:"):
        g = GridSolution.load(spec[5:])
        V = potential_for(cfg, None)
        return [(grid_to_field(g), V, "grid")]
    try:
        if spec.startswith("fd:"):
            base = parse_solution(spec[3:], d)
            box, h = staggered_box(cfg.sizes()[-1], float(cfg.raw["solve"]["z_half"]),
                                   float(cfg.raw["solve"]["t_half"]), d)
            V = potential_for(cfg, base)
            g = solve_fd(A or cfg.coefficients(), V, box, h, base)
            return [(grid_to_field(g), V, f"fd-{base.label}")]
        u = parse_solution(spec, d)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"solution.spec: {exc}") from None
    return [(u, potential_for(cfg, u), u.label)]


def potential_for(cfg: ExperimentConfig, u):
    d = cfg.dims
    kind = cfg.get("potential", "kind", str, lambda v: v in ("auto", "none", "gauge"),
                   "must be auto | none | gauge")
    if kind == "none":
        return ZeroPotential(d)
    if kind == "gauge":
        return GaugePotential(cfg.get("potential", "c", float), d, cfg.R1)
    if u is not None and getattr(u, "exact_potential", None) is not None:
        return u.exact_potential
    return ZeroPotential(d)


def certified_K(cfg: ExperimentConfig, V, A) -> float:
    val = cfg.raw["frequency"]["K"]
    if val != "auto":
        return cfg.get("frequency", "K", float, lambda v: v >= 1, "must be >= 1 or 'auto'")
    if isinstance(V, ZeroPotential):
        return 1.0
    return check_potential(V, A, cfg.R1, seed=cfg.seed).K_hat


def _safe(label: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_" else "_" for ch in label)


# ---------------------------------------------------------------------------
# subcommands

def cmd_geometry(run: Run):
    cfg = run.cfg
    n = 10_000
    res = identity_suite(cfg.dims, n, cfg.seed)
    rows = (("Z rho = rho", "Z is the dilation generator; rho is 1-homogeneous", "Zrho", 1e-8),
            ("Z psi = 0", "psi is 0-homogeneous", "Zpsi", 1e-8),
            ("|X rho|^2 = psi", "angle function identity", "Xrho2", 1e-10),
            ("div Z = Q", "homogeneous dimension", "divZ", 1e-6),
            ("[X_i, Z] = X_i", "X_i is 1-homogeneous", "commutator", 1e-6))
    for name, anchor, key, tol in rows:
        run.add(_bounded(name, anchor, n, res[key], tol))
    # ratio bounds: violation is sup(ratio) - bound; rounding allowance 1e-12
    gb = gauge_bounds(cfg.dims, cfg.R1, n, cfg.seed)
    bounds = (("|X_i rho| <= psi^(1+1/(2 beta))", "horizontal z-derivatives of the gauge", "Xz_rho", 1.0),
              ("|X_(m+j) rho| <= (beta+1) psi^(1/2)", "horizontal t-derivatives of the gauge", "Xt_rho", 1.0),
              ("|X_i psi| <= C beta psi / |z|", "z-derivatives of psi, fitted C <= 10", "Xz_psi", 10.0),
              ("|X_(m+j) psi| <= C beta psi / rho", "t-derivatives of psi, fitted C <= 10", "Xt_psi", 10.0))
    for name, anchor, key, bound in bounds:
        details = {"sup_ratio": gb[key], "bound": bound}
        if key == "Xt_rho":
            # the rho^(1/2) form is not dilation invariant: reported, never asserted
            details["sup_ratio_rho_half_form"] = gb["Xt_rho_sqrt_rho"]
        run.add(_bounded(name, anchor, n, gb[key] - bound, 1e-12, **details))


def cmd_hypothesis(run: Run):
    cfg = run.cfg
    A = cfg.coefficients()
    rep = check_structural(A, cfg.R1, seed=cfg.seed)
    details = {"Lambda_hat": rep.Lambda_hat, "levels": rep.levels, "bound_maxima": rep.bound_maxima,
               "lambda_hat": rep.lambda_hat, "stable": rep.stable, "family": A.name}
    if rep.status in ("inconclusive", "structural"):
        details["ratio_by_psi_decade"] = ratio_by_psi_decade(A).tolist()
    status = {"pass": "pass", "fail": "fail", "inconclusive": "inconclusive", "structural": "fail"}[rep.status]
    run.add(Check("structural hypothesis (H)", "coefficient structure near the characteristic set",
                  16 * 2000, rep.Lambda_hat - rep.budget, 0.0, status, details))


def cmd_potential(run: Run):
    cfg = run.cfg
    A = cfg.coefficients()
    for u, V, label in solutions_for(cfg, A):
        rep = check_potential(V, A, cfg.R1, seed=cfg.seed)
        K = rep.K_hat
        viol = max(rep.max_V_ratio, rep.max_FV_ratio) - K
        run.add(Check(f"potential bounds [{label}]", "|V|, |FV| <= K psi", 16 * 2000, viol, 0.0,
                      "pass" if rep.stable else "inconclusive",
                      {"K_hat": K, "max_V_ratio": rep.max_V_ratio, "max_FV_ratio": rep.max_FV_ratio,
                       "levels": rep.levels}))


def cmd_residual(run: Run):
    cfg = run.cfg
    A = cfg.coefficients()
    n, h = 1000, 1e-3
    P = sample_ball_collared(cfg.R1, n, cfg.seed, cfg.dims, collar=10 * h, absolute=True)
    for u, V, label in solutions_for(cfg, A):
        res = float(np.max(np.abs(residual(u, V, A, P, h))))
        run.add(_bounded(f"PDE residual [{label}]", "X_i(a_ij X_j u) = V u", n, res, 1e-6))


def _profile(run: Run, u, V, label, A, alpha=None, radii=None):
    cfg = run.cfg
    K = certified_K(cfg, V, A)
    try:
        fc = FrequencyConfig(alpha=cfg.alpha() if alpha is None else alpha, radii=radii or cfg.radii(),
                             R1=cfg.R1, K=K, quad_budget=cfg.budget, replicates=cfg.replicates,
                             seed=cfg.seed)
    except ValueError as exc:
        raise ConfigError(f"frequency: {exc}") from None
    prof = radial_profile(u, A, V, fc, label)
    run.write(f"profile_{_safe(label)}.csv", prof.to_csv())
    return prof


def _frequency_checks(run: Run, prof, label, A):
    pts = len(prof.rows)
    gap = [abs(r.I_flux - r.I_energy) / max(abs(r.I_energy), r.H) for r in prof.rows]
    noisy = any(r.degenerate or r.H_err > 1e-2 * r.H for r in prof.rows)
    run.add(Check(f"flux = energy [{label}]", "two expressions for I(r)", pts, max(gap), 1e-2,
                  "inconclusive" if noisy else _status(max(gap) <= 1e-2),
                  {"alpha": prof.alpha, "K": prof.K, "flagged_radii": [r.r for r in prof.rows if r.flagged]}))
    cs = cauchy_schwarz_gap(prof)
    run.add(_bounded(f"Cauchy-Schwarz [{label}]", "I^2 <= 4(a+1)^2 H int (Fu)^2 w mu", pts,
                     float(np.max(-cs)), 1e-9))
    cfg = run.cfg
    om = omega(cfg.dims, cfg.budget, cfg.seed)
    lam = 1.0 if isinstance(A, IdentityField) else ellipticity_constant(A, cfg.R1, seed=cfg.seed)
    excess = h_cap_excess(prof, om.value + 3 * om.err_est, lam) / np.maximum(prof.column("h"), 1e-300)
    run.add(_bounded(f"h cap [{label}]", "h(r) <= omega r^Q sup|u|^2 / lambda", pts, float(np.max(excess)),
                     1e-2, omega=om.value, lam=lam))


def cmd_frequency(run: Run):
    cfg = run.cfg
    A = cfg.coefficients()
    for u, V, label in solutions_for(cfg, A):
        prof = _profile(run, u, V, label, A)
        _frequency_checks(run, prof, label, A)


def _monotonicity_checks(run: Run, prof, label):
    rep = monotonicity_fit(prof)
    if rep.passed:
        adj = prof.adjusted(rep.C1_fit, rep.C2_fit)
        at_fit = float(max(0.0, -np.min(np.diff(adj) + 1e-3 * np.abs(prof.column("N")[:-1])))) if len(adj) > 1 else 0.0
    else:
        at_fit = rep.max_violation
    run.add(Check(f"frequency monotonicity [{label}]", "e^(C1 r)(N + C2 K r^2) nondecreasing",
                  len(prof.rows), at_fit, 0.0, _status(rep.passed),
                  {"C1_fit": rep.C1_fit, "C2_fit": rep.C2_fit, "witness": rep.witness, "K": prof.K,
                   "max_violation_at_zero": rep.max_violation,
                   "doubling_drop": doubling_violation(prof)}))
    cmp_ = frequency_comparison_fit(prof)
    run.add(Check(f"frequency comparison [{label}]", "N(r) <= Cbar (N(s) + C2 K), r < s",
                  len(prof.rows), 0.0 if cmp_.passed else float("inf"), 0.0, _status(cmp_.passed),
                  {"Cbar": cmp_.Cbar, "C2": cmp_.C2}))


def cmd_monotonicity(run: Run):
    cfg = run.cfg
    A = cfg.coefficients()
    for u, V, label in solutions_for(cfg, A):
        prof = _profile(run, u, V, label, A)
        _monotonicity_checks(run, prof, label)


def cmd_threeball(run: Run):
    cfg = run.cfg
    A = cfg.coefficients()
    r1, r2, r3 = (cfg.get("threeball", k, float) for k in ("r1", "r2", "r3"))
    cbar = cfg.get("threeball", "cbar", float, lambda v: v >= 1, "must be >= 1")
    if not 0 < r1 < r2 < 2 * r2 < r3 <= cfg.R1:
        raise ConfigError("threeball: need 0 < r1 < r2 < 2 r2 < r3 <= R1")
    for u, V, label in solutions_for(cfg, A):
        K = certified_K(cfg, V, A)
        rep = three_ball_slack(u, A, r1, r2, r3, K, cbar, cfg.budget, cfg.seed, cfg.replicates)
        run.add(Check(f"three-ball [{label}]", "h(r2) <= e^C (r3/2r2)^(C'' sqrt K) h(r3)^theta h(r1)^(1-theta)",
                      4, 0.0 if rep.passed else float("inf"), 0.0, _status(rep.passed),
                      {"slack_at_zero": rep.slack0, "slack_at_zero_h2r2": rep.slack0_2r2, "C": rep.C_fit,
                       "Cpp": rep.Cpp_fit, "theta": rep.theta, "K": K, "h": rep.h}))


def cmd_vanishing(run: Run):
    cfg = run.cfg
    A = cfg.coefficients()
    rmin = cfg.get("vanishing", "rmin", float, lambda v: v > 0, "must be > 0")
    rmax = cfg.get("vanishing", "rmax", float, lambda v: v <= cfg.R1 / 3 + 1e-12, "must be <= R1/3")
    n = cfg.get("vanishing", "n", int, lambda v: v >= 2, "must be >= 2")
    radii = geometric_radii(rmin, rmax, n)
    for u, V, label in solutions_for(cfg, A):
        K = certified_K(cfg, V, A)
        rep = vanishing_order(u, radii, K, cfg.R1, seed=cfg.seed, dims=cfg.dims)
        details = {"slope": rep.slope, "exponent_fit": rep.exponent_fit, "C1": rep.C1, "C2": rep.C2,
                   "K": K, "kappa": getattr(u, "kappa", None), "reliable": rep.reliable}
        status = "inconclusive" if not rep.reliable else _status(rep.dominates)
        run.add(Check(f"vanishing order [{label}]", "sup_{B_r}|u| >= C1 (r/R1)^(C2 sqrt K)", n,
                      max(0.0, rep.slope - rep.exponent_fit) if rep.reliable else float("nan"), 1e-9,
                      status, details))


def cmd_solve(run: Run):
    cfg = run.cfg
    A = cfg.coefficients()
    spec = cfg.raw["solution"]["spec"]
    base = parse_solution(spec[3:] if spec.startswith("fd:") else spec, cfg.dims)
    V = potential_for(cfg, base)
    sizes = cfg.sizes()
    zh, th = float(cfg.raw["solve"]["z_half"]), float(cfg.raw["solve"]["t_half"])
    try:
        exact = isinstance(A, IdentityField) and V is base.exact_potential
        study, grids = convergence_study(base, sizes, A, zh, th) if exact else (None, None)
        if grids is None:
            grids = [solve_fd(A, V, *staggered_box(n, zh, th, cfg.dims), base) for n in sizes]
    except SolverError as exc:
        run.add(Check(f"fd solve [{base.label}]", "divergence-form Dirichlet solve", 0, float("inf"), 0.0,
                      "fail", {"error": f"{type(exc).__name__}: {exc}"}))
        return
    for n, g in zip(sizes, grids):
        run.write(f"grid_{_safe(base.label)}_{n}.csv", g.to_csv())
    if study is not None and len(sizes) > 1:
        order = min(study.orders)
        run.add(Check(f"fd convergence [{base.label}]", "nodal sup error vs manufactured truth",
                      len(sizes), max(0.0, 1.0 - order), 0.0, _status(study.monotone and order >= 1.0),
                      {"sizes": study.sizes, "errors": study.errors, "orders": study.orders,
                       "iterations": study.iterations}))
    else:
        run.add(Check(f"fd solve [{base.label}]", "divergence-form Dirichlet solve", len(sizes),
                      max(g.rel_residual for g in grids), 1e-10,
                      _status(all(g.rel_residual < 1e-10 for g in grids)),
                      {"iterations": [g.iterations for g in grids]}))


def cmd_all(run: Run):
    """Every suite over all built-in members; profiles use alpha = sqrt K."""
    cfg = run.cfg
    cmd_geometry(run)
    for fam in ("identity", "perturbed"):
        cfg.raw["coefficients"]["family"] = fam
        cmd_hypothesis(run)
    cfg.raw["coefficients"]["family"] = "identity"
    cfg.raw["solution"]["spec"] = "all"
    cmd_potential(run)
    cmd_residual(run)
    A = cfg.coefficients()
    for u, V, label in solutions_for(cfg, A):
        prof = _profile(run, u, V, label, A)
        _frequency_checks(run, prof, label, A)
        _monotonicity_checks(run, prof, label)
    cmd_threeball(run)
    cmd_vanishing(run)
    cfg.raw["solution"]["spec"] = "gaussian_modulated:z1"
    cmd_solve(run)


HANDLERS = {
    "geometry-check": cmd_geometry, "hypothesis-check": cmd_hypothesis, "potential-check": cmd_potential,
    "residual-check": cmd_residual, "solve": cmd_solve, "frequency": cmd_frequency,
    "monotonicity": cmd_monotonicity, "threeball": cmd_threeball, "vanishing-order": cmd_vanishing,
    "all": cmd_all,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="grushinlab", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="INI configuration file")
        sp.add_argument("--out", default="grushinlab-out", help="output directory")
        sp.add_argument("--quiet", action="store_true")
        for flag in FLAGS:
            sp.add_argument(f"--{flag.replace('_', '-')}", dest=flag, default=None)
    return p


def run(command: str, cfg: ExperimentConfig, out: Path) -> tuple[int, dict]:
    r = Run(cfg, out)
    HANDLERS[command](r)
    report = r.report(command)
    r.out.mkdir(parents=True, exist_ok=True)
    (r.out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return r.exit_status(), report


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, {k: getattr(args, k) for k in FLAGS})
        cfg.dims  # validate early
        status, report = run(args.command, cfg, Path(args.out))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if not args.quiet:
        for c in report["checks"]:
            print(f"{c['status']:>12}  {c['name']}  (max violation {c['max_violation']}, tol {c['tolerance']})")
        print(f"exit status {status}; report in {Path(args.out) / 'report.json'}")
    return status


if __name__ == "__main__":
    sys.exit(main())
