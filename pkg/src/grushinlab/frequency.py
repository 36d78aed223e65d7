"""Height, energy, frequency, and the growth estimates built on them."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .fields import (
    CoefficientField,
    IdentityField,
    F_from_grad,
    ZeroPotential,
    eval_mu,
    ellipticity_scan,
)
from .geometry import DEFAULT_DIMS, Dims, dilate, to_horizontal
from .quadrature import DEFAULT_BUDGET, DEFAULT_REPLICATES, QuadResult, ball_rule, sup_on_ball

CSV_COLUMNS = ("r", "H", "H_err", "I_energy", "I_flux", "I_err", "N", "N_adjusted", "h", "sup_u")


class DegenerateHeight(ArithmeticError):
    """H(r) is at or below the quadrature noise floor."""


@dataclass
class FrequencyConfig:
    alpha: float | str = "sqrtK"
    radii: tuple = (0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8)
    R1: float = 1.0
    K: float = 1.0
    quad_budget: int = DEFAULT_BUDGET
    replicates: int = DEFAULT_REPLICATES
    seed: int = 0
    C1: float = 0.0
    C2: float = 0.0
    sup_samples: int = 4096

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        if r.ndim != 1 or len(r) == 0 or np.any(np.diff(r) <= 0):
            raise ValueError("radii must be a nonempty increasing sequence")
        if not (0 < r[0] and r[-1] <= self.R1 <= 1.0):
            raise ValueError("radii must lie in (0, R1] with R1 <= 1")
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.alpha_value < 0:
            raise ValueError("alpha must be >= 0")

    @property
    def alpha_value(self) -> float:
        return math.sqrt(self.K) if self.alpha == "sqrtK" else float(self.alpha)


def geometric_radii(r_min: float, r_max: float, n: int) -> tuple:
    return tuple(float(x) for x in np.geomspace(r_min, r_max, n))


# ---------------------------------------------------------------------------
# the integrals

_KEYS = ("H", "I_grad", "I_V", "I_flux", "FF", "h")


def _integrals(u, A, V, r, alpha, rule):
    """Per-replicate sums of every profile integrand at radius ``r``."""
    d = rule.dims
    identity = isinstance(A, IdentityField)

    def part(s):
        Y = rule.points[s]
        P = dilate(Y, r, d)
        w0 = rule.one_minus[s]
        wa = w0 ** alpha
        uv = u(P)
        G = u.grad(P)
        Xu = to_horizontal(G, P, d)
        if identity:
            mu = rule.psi[s]
            AXX = np.sum(Xu * Xu, axis=1)
        else:
            mu = np.where(rule.psi[s] == 0, 0.0, eval_mu(A, P))
            AXX = np.einsum("ni,nij,nj->n", Xu, A.matrix(P), Xu)
        Fu = F_from_grad(A, P, G)
        Vv = V(P)
        u2 = uv * uv
        cols = (u2 * wa * mu, AXX * wa * w0, Vv * u2 * wa * w0, uv * Fu * wa * mu, Fu * Fu * wa * mu, u2 * mu)
        return np.stack([np.bincount(rule.rep[s], weights=c, minlength=rule.replicates) for c in cols])

    sums = np.sum(rule.map_chunks(part), axis=0) * rule.cell
    Q = d.Q
    scale = {
        "H": r ** (Q + 2 * alpha),
        "I_grad": r ** (Q + 2 * alpha + 2),
        "I_V": r ** (Q + 2 * alpha + 2),
        "I_flux": 2 * (alpha + 1) * r ** (Q + 2 * alpha),
        "FF": r ** (Q + 2 * alpha),
        "h": r ** Q,
    }
    return {k: sums[i] * scale[k] for i, k in enumerate(_KEYS)}


def _qr(x, rule) -> QuadResult:
    return QuadResult(float(np.mean(x)), float(np.std(x, ddof=1) / math.sqrt(len(x))), rule.evaluations)


def _rule(dims, budget, replicates, seed):
    return ball_rule(dims, int(budget), int(replicates), int(seed))


def height_H(u, A: CoefficientField, r: float, alpha: float, budget=DEFAULT_BUDGET, seed=0,
             replicates=DEFAULT_REPLICATES) -> QuadResult:
    """``int_{B_r} u^2 (r^2 - rho^2)^alpha mu``."""
    rule = _rule(A.dims, budget, replicates, seed)
    return _qr(_integrals(u, A, ZeroPotential(A.dims), r, alpha, rule)["H"], rule)


def energy_I(u, A: CoefficientField, V, r: float, alpha: float, budget=DEFAULT_BUDGET, seed=0,
             replicates=DEFAULT_REPLICATES) -> QuadResult:
    """``int_{B_r} (<A Xu, Xu> + V u^2) (r^2 - rho^2)^(alpha+1)``."""
    rule = _rule(A.dims, budget, replicates, seed)
    s = _integrals(u, A, V or ZeroPotential(A.dims), r, alpha, rule)
    return _qr(s["I_grad"] + s["I_V"], rule)


def flux_I(u, A: CoefficientField, r: float, alpha: float, budget=DEFAULT_BUDGET, seed=0,
           replicates=DEFAULT_REPLICATES) -> QuadResult:
    """``2(alpha+1) int_{B_r} u Fu (r^2 - rho^2)^alpha mu``."""
    rule = _rule(A.dims, budget, replicates, seed)
    return _qr(_integrals(u, A, ZeroPotential(A.dims), r, alpha, rule)["I_flux"], rule)


@dataclass
class FrequencyValue:
    N: float
    err: float
    I_energy: QuadResult
    I_flux: QuadResult
    H: QuadResult
    flagged: bool


def frequency_N(u, A: CoefficientField, V, r: float, alpha: float, budget=DEFAULT_BUDGET, seed=0,
                replicates=DEFAULT_REPLICATES) -> FrequencyValue:
    """``I_energy / H``; flagged when the two forms of I disagree beyond 3 errors."""
    rule = _rule(A.dims, budget, replicates, seed)
    s = _integrals(u, A, V or ZeroPotential(A.dims), r, alpha, rule)
    return _frequency_from(s, rule)


def _frequency_from(s, rule) -> FrequencyValue:
    H = _qr(s["H"], rule)
    if not H.value > max(3 * H.err_est, 1e-300):
        raise DegenerateHeight(f"H = {H.value:.3e} +- {H.err_est:.1e}")
    Ie = s["I_grad"] + s["I_V"]
    Iqe, Iqf = _qr(Ie, rule), _qr(s["I_flux"], rule)
    Nrep = Ie / s["H"]
    diff = _qr(Ie - s["I_flux"], rule)
    flagged = abs(diff.value) > 3 * diff.err_est + 1e-12 * max(abs(Iqe.value), H.value)
    return FrequencyValue(Iqe.value / H.value, float(np.std(Nrep, ddof=1) / math.sqrt(len(Nrep))),
                          Iqe, Iqf, H, bool(flagged))


# ---------------------------------------------------------------------------
# radial profiles

@dataclass
class ProfileRow:
    r: float
    H: float
    H_err: float
    I_energy: float
    I_flux: float
    I_err: float
    N: float
    N_err: float
    N_adjusted: float
    h: float
    h_err: float
    sup_u: float
    FF: float
    FF_err: float
    flux_gap: float
    flux_gap_err: float
    flagged: bool = False
    degenerate: bool = False


@dataclass
class RadialProfile:
    rows: list
    alpha: float
    K: float
    Q: float
    C1: float = 0.0
    C2: float = 0.0
    label: str = ""

    def column(self, name) -> np.ndarray:
        return np.array([getattr(row, name) for row in self.rows], dtype=float)

    @property
    def r(self):
        return self.column("r")

    def adjusted(self, C1: float, C2: float) -> np.ndarray:
        r, N = self.r, self.column("N")
        return np.exp(C1 * r) * (N + C2 * self.K * r ** 2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in self.rows:
            w.writerow([repr(float(getattr(row, c))) for c in CSV_COLUMNS])
        return buf.getvalue()


def radial_profile(u, A: CoefficientField, V, cfg: FrequencyConfig, label: str = "") -> RadialProfile:
    """One row per radius, all computed on the same dilated point set."""
    d = A.dims
    V = V or ZeroPotential(d)
    alpha = cfg.alpha_value
    rule = _rule(d, cfg.quad_budget, cfg.replicates, cfg.seed)
    rows = []
    for r in cfg.radii:
        s = _integrals(u, A, V, float(r), alpha, rule)
        H = _qr(s["H"], rule)
        Ie = s["I_grad"] + s["I_V"]
        Iq, If = _qr(Ie, rule), _qr(s["I_flux"], rule)
        gap = _qr(Ie - s["I_flux"], rule)
        FF, hq = _qr(s["FF"], rule), _qr(s["h"], rule)
        degenerate = not H.value > max(3 * H.err_est, 1e-300)
        if degenerate:
            N = Nerr = float("nan")
        else:
            N = Iq.value / H.value
            Nrep = Ie / s["H"]
            Nerr = float(np.std(Nrep, ddof=1) / math.sqrt(len(Nrep)))
        flagged = bool(abs(gap.value) > 3 * gap.err_est + 1e-12 * max(abs(Iq.value), H.value))
        sup = sup_on_ball(u, float(r), cfg.sup_samples, cfg.seed, d)
        rows.append(ProfileRow(
            r=float(r), H=H.value, H_err=H.err_est, I_energy=Iq.value, I_flux=If.value,
            I_err=max(Iq.err_est, If.err_est), N=N, N_err=Nerr,
            N_adjusted=math.exp(cfg.C1 * r) * (N + cfg.C2 * cfg.K * r * r),
            h=hq.value, h_err=hq.err_est, sup_u=sup, FF=FF.value, FF_err=FF.err_est,
            flux_gap=gap.value, flux_gap_err=gap.err_est, flagged=flagged, degenerate=degenerate,
        ))
    return RadialProfile(rows, alpha, cfg.K, d.Q, cfg.C1, cfg.C2, label)


# ---------------------------------------------------------------------------
# first variation

def _log_derivative(y: np.ndarray, s: np.ndarray) -> np.ndarray:
    """5-point central ``dy/ds`` at interior nodes of a uniform ``s`` grid."""
    ds = s[1] - s[0]
    if not np.allclose(np.diff(s), ds, rtol=1e-8, atol=0):
        raise ValueError("radii must form a geometric grid")
    return (-y[4:] + 8 * y[3:-1] - 8 * y[1:-3] + y[:-4]) / (12 * ds)


@dataclass
class VariationTable:
    r: np.ndarray
    res_H: np.ndarray
    res_I: np.ndarray
    rel_H: np.ndarray
    rel_I: np.ndarray
    budget_I: np.ndarray
    noisy: bool


def variation_residuals(profile: RadialProfile, K: float | None = None) -> VariationTable:
    """Residuals of the first-variation formulas for H and I.

    ``res_H = H' - (2a+Q) H/r - I_flux/((a+1) r)`` and
    ``res_I = I' - (2a+Q) I/r - 4(a+1)/r int (Fu)^2 (r^2-rho^2)^a mu``.
    Derivatives are 5-point differences in ``log r``: ``H'`` from ``log H``
    (exact on power laws) and ``I' = N' H + N H'``.
    """
    if len(profile.rows) < 9:
        raise ValueError("need at least 9 radii")
    K = profile.K if K is None else K
    a, Q = profile.alpha, profile.Q
    r = profile.r
    s = np.log(r)
    H, N = profile.column("H"), profile.column("N")
    Ifl, FF = profile.column("I_flux"), profile.column("FF")
    I = profile.column("I_energy")
    sl = slice(2, -2)
    dH = _log_derivative(np.log(H), s) * H[sl] / r[sl]
    dN = _log_derivative(N, s) / r[sl]
    dI = dN * H[sl] + N[sl] * dH
    rr = r[sl]
    res_H = dH - (2 * a + Q) * H[sl] / rr - Ifl[sl] / ((a + 1) * rr)
    res_I = dI - (2 * a + Q) * I[sl] / rr - 4 * (a + 1) * FF[sl] / rr
    rel_H = np.abs(res_H) / H[sl]
    rel_I = np.abs(res_I) / np.abs(I[sl])
    budget_I = np.abs(res_I) / (np.abs(I[sl]) + K * rr * H[sl])
    Herr = profile.column("H_err")[sl]
    noisy = bool(np.any(Herr / H[sl] > 0.1 * np.maximum(rel_H, 1e-3)))
    return VariationTable(rr, res_H, res_I, rel_H, rel_I, budget_I, noisy)


def cauchy_schwarz_gap(profile: RadialProfile) -> np.ndarray:
    """``4(a+1)^2 H int (Fu)^2 w mu - I_flux^2`` per radius (nonnegative for any u)."""
    a = profile.alpha
    return 4 * (a + 1) ** 2 * profile.column("H") * profile.column("FF") - profile.column("I_flux") ** 2


# ---------------------------------------------------------------------------
# monotonicity and comparison

@dataclass
class MonotonicityReport:
    C1_fit: float | None
    C2_fit: float | None
    max_violation: float
    passed: bool
    witness: list = field(default_factory=list)


def _nondecreasing(vals: np.ndarray, N: np.ndarray, tol: float) -> np.ndarray:
    """Along the last axis: every step >= -tol |N|."""
    return np.all(np.diff(vals, axis=-1) >= -tol * np.abs(N[..., :-1]), axis=-1)


def monotonicity_fit(profile: RadialProfile, K: float | None = None, C_max: float = 20.0,
                     step: float = 0.1, tol: float = 1e-3) -> MonotonicityReport:
    """Smallest ``C1 + C2`` (ties: smaller C1) on the grid making
    ``exp(C1 r)(N + C2 K r^2)`` nondecreasing within ``-tol N``."""
    K = profile.K if K is None else K
    r, N = profile.r, profile.column("N")
    steps = np.diff(N)
    max_violation = float(max(0.0, -np.min(steps))) if len(steps) else 0.0
    grid = np.round(np.arange(0.0, C_max + step / 2, step), 10)
    C1, C2 = np.meshgrid(grid, grid, indexing="ij")
    adj = np.exp(C1[..., None] * r) * (N + C2[..., None] * K * r ** 2)
    ok = _nondecreasing(adj, N, tol)
    if not ok.any():
        bad = np.where(np.diff(N) < -tol * np.abs(N[:-1]))[0]
        return MonotonicityReport(None, None, max_violation, False,
                                  [(float(r[i]), float(r[i + 1])) for i in bad])
    total = np.where(ok, C1 + C2, np.inf)
    best = np.min(total)
    cand = np.argwhere(total <= best + 1e-12)
    i, j = min(cand.tolist(), key=lambda ij: (grid[ij[0]], grid[ij[1]]))
    return MonotonicityReport(float(grid[i]), float(grid[j]), max_violation, True)


@dataclass
class ComparisonReport:
    Cbar: float | None
    C2: float | None
    passed: bool


def frequency_comparison_fit(profile: RadialProfile, K: float | None = None, Cbar_max: float = 20.0,
                             C2_max: float = 20.0, step: float = 0.1) -> ComparisonReport:
    """Smallest ``Cbar >= 1, C2 >= 0`` with ``N(r) <= Cbar (N(s) + C2 K)`` for all ``r < s``."""
    K = profile.K if K is None else K
    N = profile.column("N")
    i, j = np.triu_indices(len(N), k=1)
    Nr, Ns = N[i], N[j]
    for total in np.arange(0.0, Cbar_max - 1 + C2_max + step / 2, step):
        for cb in np.arange(1.0, min(Cbar_max, 1.0 + total) + step / 2, step):
            c2 = round(total - (cb - 1.0), 10)
            if c2 < 0 or c2 > C2_max:
                continue
            if np.all(Nr <= cb * (Ns + c2 * K) + 1e-12 * np.abs(Nr)):
                return ComparisonReport(float(round(cb, 10)), float(c2), True)
    return ComparisonReport(None, None, False)


def doubling_violation(profile: RadialProfile) -> float:
    """Largest drop of ``log H - (2a + Q) log r`` between consecutive radii."""
    g = np.log(profile.column("H")) - (2 * profile.alpha + profile.Q) * np.log(profile.r)
    return float(max(0.0, -np.min(np.diff(g)))) if len(g) > 1 else 0.0


def h_cap_excess(profile: RadialProfile, omega_value: float, lam: float = 1.0) -> np.ndarray:
    """``h(r) - lam^-1 omega r^Q sup|u|^2`` per radius (should be <= 0)."""
    r = profile.r
    return profile.column("h") - omega_value / lam * r ** profile.Q * profile.column("sup_u") ** 2


# ---------------------------------------------------------------------------
# three-ball inequality

@dataclass
class ThreeBallReport:
    r1: float
    r2: float
    r3: float
    K: float
    Cbar: float
    theta: float
    h: dict
    slack0: float
    slack0_2r2: float
    C_fit: float | None
    Cpp_fit: float | None
    passed: bool


def three_ball_slack(u, A: CoefficientField, r1: float, r2: float, r3: float, K: float,
                     Cbar: float = 1.0, budget: int = DEFAULT_BUDGET, seed: int = 0,
                     replicates: int = DEFAULT_REPLICATES, C_max: float = 20.0,
                     step: float = 0.1) -> ThreeBallReport:
    """Slack of ``log h(r2) <= C + C'' sqrt(K) log(r3/(2 r2)) + theta log h(r3) + (1-theta) log h(r1)``.

    ``theta = b0/(a0+b0)`` with ``a0 = log(r3/(2 r2))``, ``b0 = Cbar^2 log(2 r2/r1)``.
    Reports the slack at ``C = C'' = 0`` and the smallest ``C + C''`` on the
    grid ``[0, C_max]^2`` that makes it nonnegative.  ``slack0_2r2`` is the
    same zero-constant slack with ``h(2 r2)`` on the left.
    """
    if not (0 < r1 < r2 < 2 * r2 < r3):
        raise ValueError("need 0 < r1 < r2 < 2 r2 < r3")
    if Cbar < 1:
        raise ValueError("Cbar must be >= 1")
    d = A.dims
    rule = _rule(d, budget, replicates, seed)
    V = ZeroPotential(d)
    hv = {}
    for name, r in (("r1", r1), ("r2", r2), ("2r2", 2 * r2), ("r3", r3)):
        hv[name] = float(np.mean(_integrals(u, A, V, r, 0.0, rule)["h"]))
    a0 = math.log(r3 / (2 * r2))
    b0 = Cbar ** 2 * math.log(2 * r2 / r1)
    theta = b0 / (a0 + b0)
    base = theta * math.log(hv["r3"]) + (1 - theta) * math.log(hv["r1"]) - math.log(hv["r2"])
    grid = np.round(np.arange(0.0, C_max + step / 2, step), 10)
    best = None
    for total in np.round(np.arange(0.0, 2 * C_max + step / 2, step), 10):
        for C in grid:
            Cpp = round(total - C, 10)
            if Cpp < 0 or Cpp > C_max:
                continue
            if base + C + Cpp * math.sqrt(K) * a0 >= 0:
                best = (float(C), float(Cpp))
                break
        if best:
            break
    base2 = base + math.log(hv["r2"]) - math.log(hv["2r2"])
    return ThreeBallReport(r1, r2, r3, K, Cbar, theta, hv, base, base2,
                           best[0] if best else None, best[1] if best else None, best is not None)


# ---------------------------------------------------------------------------
# vanishing order

@dataclass
class VanishingReport:
    radii: list
    sups: list
    slope: float
    exponent_fit: float
    C1: float
    C2: float
    K: float
    dominates: bool
    reliable: bool


def vanishing_order(u, radii=None, K: float = 1.0, R1: float = 1.0, n: int = 4096, seed: int = 0,
                    noise_floor: float = 1e-12, kappa_max: float = 3.0, C2_step: float = 0.01,
                    dims: Dims | None = None) -> VanishingReport:
    """Decay rate of ``sup_{B_r} |u|`` as ``r -> 0``.

    ``slope`` is the least-squares slope of ``log sup`` against ``log r`` over
    the smallest decade of radii.  ``exponent_fit = C2 sqrt(K)`` is the
    smallest exponent (on a ``C2`` grid) for which ``sup(r) / r^e`` is
    nonincreasing across all radii; with ``C1`` anchored at the largest radius
    the power-law lower bound ``C1 (r/R1)^e`` then holds at every radius.
    """
    dims = dims or getattr(u, "dims", DEFAULT_DIMS)
    if radii is None:
        radii = geometric_radii(2e-3 * R1, R1 / 3.0, 19)
    r = np.asarray(radii, dtype=float)
    if np.any(np.diff(r) <= 0) or r[0] <= 0 or r[-1] > R1 / 3.0 + 1e-12:
        raise ValueError("radii must increase within (0, R1/3]")
    sups = np.array([sup_on_ball(u, float(x), n, seed, dims) for x in r])
    reliable = bool(np.all(sups > noise_floor) and r[0] >= 10 * noise_floor ** (1.0 / kappa_max))
    if np.any(sups <= noise_floor):
        return VanishingReport(r.tolist(), sups.tolist(), float("nan"), float("nan"),
                               float("nan"), float("nan"), K, False, False)
    x, y = np.log(r), np.log(sups)
    dec = r <= 10 * r[0] * (1 + 1e-12)
    slope = float(np.polyfit(x[dec], y[dec], 1)[0])
    local = np.diff(y) / np.diff(x)
    e_need = max(0.0, float(np.max(local)))
    sk = math.sqrt(K)
    C2 = math.ceil(e_need / sk / C2_step - 1e-9) * C2_step
    e = C2 * sk
    C1 = float(sups[-1] * (R1 / r[-1]) ** e)
    C1 = min(C1, float(np.min(sups / (r / R1) ** e)))
    dominates = e >= slope - 1e-9 * max(1.0, abs(slope))
    return VanishingReport(r.tolist(), sups.tolist(), slope, e, C1, C2, K, bool(dominates), reliable)


def ellipticity_constant(A: CoefficientField, R1: float = 1.0, n: int = 4000, seed: int = 0) -> float:
    from .geometry import sample_ball

    _, lo, hi = ellipticity_scan(A, sample_ball(R1, n, seed, A.dims))
    return min(lo, 1.0 / hi)
