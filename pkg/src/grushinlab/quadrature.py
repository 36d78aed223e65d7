"""Weighted integrals and sup-norms on gauge balls.

All integrals are taken on the unit ball and carried to ``B_r`` by the
dilation substitution, so one randomized point set serves every radius:

    int_{B_r} g (r^2 - rho^2)^alpha = r^(Q + 2 alpha) int_{B_1} g(delta_r y) (1 - rho(y)^2)^alpha dy
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from .fields import CoefficientField, IdentityField, eval_mu
from .geometry import DEFAULT_DIMS, Dims, angle_psi, box_halfwidths, dilate, gauge

DEFAULT_BUDGET = 200_000
DEFAULT_REPLICATES = 16
WORKERS_ENV = "GRUSHINLAB_WORKERS"


def n_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class WeightSpec:
    alpha: float = 0.0
    extra: str = "none"  # none | mu | psi

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.extra not in ("none", "mu", "psi"):
            raise ValueError(f"unknown weight factor {self.extra!r}")


@dataclass
class QuadResult:
    value: float
    err_est: float
    evaluations: int
    inconclusive: bool = False

    def as_dict(self):
        return {"value": self.value, "err_est": self.err_est, "evaluations": self.evaluations,
                "inconclusive": self.inconclusive}


class BallRule:
    """Randomized QMC rule for ``B_1``.

    Each replicate is an independently scrambled Sobol' set of ``2^s`` points
    in the bounding box of ``B_1`` (``2^s >= budget``); points outside the ball
    are rejected but still counted, so the estimator is the plain box average
    of ``1_{B_1} g``.
    """

    def __init__(self, dims: Dims = DEFAULT_DIMS, budget: int = DEFAULT_BUDGET,
                 replicates: int = DEFAULT_REPLICATES, seed: int = 0):
        self.dims = dims
        self.replicates = replicates
        self.log2n = max(1, math.ceil(math.log2(max(int(budget), 2))))
        self.n_box = 2 ** self.log2n
        half = box_halfwidths(1.0, dims)
        self.cell = float(np.prod(2 * half)) / self.n_box
        pts, reps = [], []
        for i, child in enumerate(np.random.SeedSequence(seed).spawn(replicates)):
            x = qmc.Sobol(d=dims.N, scramble=True, seed=np.random.default_rng(child)).random_base2(self.log2n)
            y = (2.0 * x - 1.0) * half
            y = y[gauge(y, dims) < 1.0]
            pts.append(y)
            reps.append(np.full(len(y), i, dtype=np.int32))
        self.points = np.concatenate(pts)
        self.rep = np.concatenate(reps)
        self.rho = gauge(self.points, dims)
        self.psi = angle_psi(self.points, dims, at_origin=0.0)
        self.one_minus = 1.0 - self.rho ** 2
        self.evaluations = self.n_box * replicates

    def __len__(self):
        return len(self.points)

    def chunks(self, size: int = 1 << 17):
        """Slices covering the accepted points in fixed order."""
        return [slice(i, min(i + size, len(self))) for i in range(0, len(self), size)]

    def result(self, sums: np.ndarray, scale: float = 1.0, rtol: float | None = None) -> QuadResult:
        est = sums * scale
        value = float(np.mean(est))
        err = float(np.std(est, ddof=1) / math.sqrt(len(est))) if len(est) > 1 else float("nan")
        inc = bool(rtol is not None and err > rtol * abs(value) and err > 1e-300)
        return QuadResult(value, err, self.evaluations, inc)

    def map_chunks(self, fn, size: int = 1 << 17):
        """Evaluate ``fn(slice)`` on every chunk; results come back in chunk order."""
        sl = self.chunks(size)
        w = n_workers()
        if w == 1:
            return [fn(s) for s in sl]
        with ThreadPoolExecutor(w) as ex:
            return list(ex.map(fn, sl))


@lru_cache(maxsize=8)
def ball_rule(dims: Dims = DEFAULT_DIMS, budget: int = DEFAULT_BUDGET,
              replicates: int = DEFAULT_REPLICATES, seed: int = 0) -> BallRule:
    return BallRule(dims, budget, replicates, seed)


def weight_factor(extra: str, A: CoefficientField | None, P, psi_unit, dims):
    if extra == "none":
        return 1.0
    if extra == "psi" or A is None or isinstance(A, IdentityField):
        return psi_unit
    mu = eval_mu(A, P)
    return np.where(psi_unit == 0.0, 0.0, mu)


def integrate_ball(f, r: float, w: WeightSpec = WeightSpec(), A: CoefficientField | None = None,
                   budget: int = DEFAULT_BUDGET, seed: int = 0, dims: Dims | None = None,
                   replicates: int = DEFAULT_REPLICATES, rtol: float | None = None) -> QuadResult:
    """``int_{B_r} f (r^2 - rho^2)^alpha [mu | psi]``.

    ``f`` is a callable on points or a constant.  With ``rtol`` set, a result
    whose replicate error exceeds ``rtol |value|`` is flagged inconclusive.
    """
    if not r > 0:
        raise ValueError("radius must be positive")
    dims = dims or (A.dims if A is not None else getattr(f, "dims", DEFAULT_DIMS))
    rule = ball_rule(dims, budget, replicates, seed)

    def part(s):
        Y = rule.points[s]
        P = dilate(Y, r, dims)
        fv = f(P) if callable(f) else np.full(len(Y), float(f))
        g = fv * rule.one_minus[s] ** w.alpha * weight_factor(w.extra, A, P, rule.psi[s], dims)
        return np.bincount(rule.rep[s], weights=g, minlength=rule.replicates)

    sums = np.sum(rule.map_chunks(part), axis=0) * rule.cell
    return rule.result(sums, r ** (dims.Q + 2 * w.alpha), rtol)


def omega(dims: Dims = DEFAULT_DIMS, budget: int = DEFAULT_BUDGET, seed: int = 0) -> QuadResult:
    """``int_{B_1} psi``."""
    return integrate_ball(1.0, 1.0, WeightSpec(0.0, "psi"), None, budget, seed, dims)


def sup_on_ball(u, r: float, n: int = 4096, seed: int = 0, dims: Dims | None = None,
                polish: int = 4) -> float:
    """Max of ``|u|`` over quasi-uniform samples of ``B_r``, then a local polish.

    The result is a lower bound for the true supremum.
    """
    if not r > 0:
        raise ValueError("radius must be positive")
    dims = dims or getattr(u, "dims", DEFAULT_DIMS)
    rule = ball_rule(dims, max(n // 2, 64), 1, seed)
    Y = rule.points
    vals = np.abs(np.asarray(u(dilate(Y, r, dims)), dtype=float))
    best = float(vals.max())
    if polish <= 0:
        return best

    def project(y):
        rho = float(gauge(y, dims))
        return dilate(y, r / rho, dims) if rho > r else y

    def neg(y):
        return -float(np.abs(u(project(y)[None, :]))[0])

    for idx in np.argsort(vals)[::-1][:polish]:
        y0 = dilate(Y[idx], r, dims)
        res = minimize(neg, y0, method="Nelder-Mead",
                       options={"xatol": 1e-10 * max(r, 1e-300), "fatol": 1e-14 * max(best, 1e-300),
                                "maxiter": 2000})
        best = max(best, -float(res.fun))
    return best
