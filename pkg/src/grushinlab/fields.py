"""Scalar fields, coefficient matrices satisfying (H), potentials, and F.

A *scalar field* is any callable ``f(P) -> values``.  If it also has a
``grad(P)`` method returning the coordinate gradient, that is used;
otherwise gradients come from 4th-order central differences.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    DEFAULT_DIMS,
    Dims,
    DomainError,
    angle_psi,
    as_points,
    euler_field,
    gauge,
    gauge_grad,
    gauge_xgrad,
    psi_grad,
    sample_ball_collared,
    split,
    to_horizontal,
    znorm,
)

PSI_SWITCH = 1e-4
COLLAR = 1e-3


class ConditioningError(ArithmeticError):
    """F cannot be extended across ``z = 0`` for this coefficient family."""


class StructuralError(ValueError):
    """A coefficient field is not symmetric or not uniformly elliptic."""


# ---------------------------------------------------------------------------
# finite differences

def fd_step(P, dims: Dims) -> np.ndarray:
    """Per-point step ``1e-4 max(1, rho)``, capped at ``|z|/10`` off ``z = 0``."""
    P = np.atleast_2d(P)
    h = 1e-4 * np.maximum(1.0, gauge(P, dims))
    zn = znorm(P, dims)
    return np.where(zn > 0, np.minimum(h, 0.1 * zn), h)


def fd_grad(f, P, dims: Dims, h=None) -> np.ndarray:
    """4th-order central-difference coordinate gradient of ``f``."""
    P = as_points(P, dims)
    single = P.ndim == 1
    P2 = np.atleast_2d(P)
    n = len(P2)
    h = fd_step(P2, dims) if h is None else np.broadcast_to(np.asarray(h, float), (n,))
    G = np.empty_like(P2)
    for a in range(dims.N):
        d = np.zeros_like(P2)
        d[:, a] = h
        stack = np.concatenate([P2 + 2 * d, P2 + d, P2 - d, P2 - 2 * d])
        v = np.asarray(f(stack), dtype=float).reshape(4, n)
        G[:, a] = (-v[0] + 8 * v[1] - 8 * v[2] + v[3]) / (12 * h)
    return G[0] if single else G


def fd_div(vec, P, dims: Dims, h=None) -> np.ndarray:
    """Divergence of a coordinate vector field ``vec(P) -> (n, N)``."""
    P2 = np.atleast_2d(as_points(P, dims))
    n = len(P2)
    h = fd_step(P2, dims) if h is None else np.broadcast_to(np.asarray(h, float), (n,))
    out = np.zeros(n)
    for a in range(dims.N):
        d = np.zeros_like(P2)
        d[:, a] = h
        stack = np.concatenate([P2 + 2 * d, P2 + d, P2 - d, P2 - 2 * d])
        v = np.asarray(vec(stack))[:, a].reshape(4, n)
        out += (-v[0] + 8 * v[1] - 8 * v[2] + v[3]) / (12 * h)
    return out


def coordinate_grad(f, P, dims: Dims) -> np.ndarray:
    g = getattr(f, "grad", None)
    if g is not None:
        return g(P)
    return fd_grad(f, P, dims)


class ScalarField:
    """Base class: subclasses implement ``__call__`` and may override ``grad``."""

    dims: Dims = DEFAULT_DIMS

    def __call__(self, P):
        raise NotImplementedError

    def grad(self, P):
        return fd_grad(self, P, self.dims)

    def xgrad(self, P):
        return to_horizontal(self.grad(P), P, self.dims)


class FunctionField(ScalarField):
    def __init__(self, fn, dims: Dims = DEFAULT_DIMS, grad=None):
        self.fn = fn
        self.dims = dims
        self._grad = grad

    def __call__(self, P):
        return self.fn(as_points(P, self.dims))

    def grad(self, P):
        if self._grad is None:
            return fd_grad(self.fn, P, self.dims)
        return self._grad(as_points(P, self.dims))


def gauge_field(dims: Dims = DEFAULT_DIMS) -> FunctionField:
    return FunctionField(lambda P: gauge(P, dims), dims, lambda P: gauge_grad(P, dims))


def psi_field(dims: Dims = DEFAULT_DIMS) -> FunctionField:
    return FunctionField(lambda P: angle_psi(P, dims), dims, lambda P: psi_grad(P, dims))


# ---------------------------------------------------------------------------
# coefficient fields

def hweights(P, dims: Dims) -> np.ndarray:
    """The (H) size weights: ``rho`` on the z-z block, ``|z|^(b+1)/rho^b`` elsewhere."""
    P = as_points(P, dims)
    rho = gauge(P, dims)
    zn = znorm(P, dims)
    b = dims.beta
    with np.errstate(invalid="ignore", divide="ignore"):
        w = np.where(rho > 0, zn ** (b + 1.0) / rho ** b, 0.0)
    W = np.empty(P.shape[:-1] + (dims.N, dims.N))
    W[...] = w[..., None, None]
    W[..., : dims.m, : dims.m] = rho[..., None, None]
    return W


class CoefficientField:
    """Symmetric matrix field ``A = I + B`` with ``A(0) = I``.

    Subclasses implement :meth:`bmatrix`; they may supply closed-form
    :meth:`xderiv` and :meth:`normalized_b`.
    """

    name = "generic"
    dims: Dims = DEFAULT_DIMS
    lam: float = 1.0
    R1: float = 1.0

    def bmatrix(self, P) -> np.ndarray:
        raise NotImplementedError

    def matrix(self, P) -> np.ndarray:
        return self.bmatrix(P) + np.eye(self.dims.N)

    def xderiv(self, P) -> np.ndarray:
        """``out[..., l, i, j] = X_l b_ij`` (finite differences by default)."""
        P = as_points(P, self.dims)
        P2 = np.atleast_2d(P)
        n, N = len(P2), self.dims.N
        flat = lambda Q: self.bmatrix(Q).reshape(len(Q), N * N)
        G = np.empty((n, N, N * N))
        h = fd_step(P2, self.dims)
        for a in range(N):
            d = np.zeros_like(P2)
            d[:, a] = h
            v = flat(np.concatenate([P2 + 2 * d, P2 + d, P2 - d, P2 - 2 * d])).reshape(4, n, N * N)
            G[:, a] = (-v[0] + 8 * v[1] - 8 * v[2] + v[3]) / (12 * h[:, None])
        zn = znorm(P2, self.dims)
        G[:, self.dims.m:] *= (zn ** self.dims.beta)[:, None, None]
        G = G.reshape(n, N, N, N)
        return G[0] if P.ndim == 1 else G

    def normalized_b(self, P) -> np.ndarray:
        """``B`` divided entrywise by :func:`hweights`.

        Generic fallback by division; raises :class:`ConditioningError` when
        the quotient is not bounded, which means the blocks violate (H).
        """
        W = hweights(P, self.dims)
        with np.errstate(invalid="ignore", divide="ignore"):
            Bh = self.bmatrix(P) / W
        if not np.all(np.isfinite(Bh)) or np.max(np.abs(Bh), initial=0.0) > 1e3:
            raise ConditioningError(
                f"{self.name}: B is not controlled by the (H) weights near z = 0")
        return Bh


class IdentityField(CoefficientField):
    name = "identity"

    def __init__(self, dims: Dims = DEFAULT_DIMS, R1: float = 1.0):
        self.dims = dims
        self.R1 = R1
        self.lam = 1.0

    def bmatrix(self, P):
        P = as_points(P, self.dims)
        return np.zeros(P.shape[:-1] + (self.dims.N, self.dims.N))

    def xderiv(self, P):
        P = as_points(P, self.dims)
        N = self.dims.N
        return np.zeros(P.shape[:-1] + (N, N, N))

    def normalized_b(self, P):
        return self.bmatrix(P)


class PerturbedField(CoefficientField):
    """``b_ij = eps * s_ij * weight_ij`` with the (H) weights of :func:`hweights`."""

    name = "perturbed"

    def __init__(self, eps: float, S=None, dims: Dims = DEFAULT_DIMS, R1: float = 1.0):
        N = dims.N
        S = np.ones((N, N)) if S is None else np.asarray(S, dtype=float)
        if S.shape != (N, N):
            raise ValueError(f"S must be {N}x{N}")
        if not np.allclose(S, S.T):
            raise StructuralError("S must be symmetric")
        self.eps = float(eps)
        self.S = S
        self.dims = dims
        self.R1 = R1
        # |B|_2 <= |B|_F <= eps * R1 * |S|_F on B_R1, since both weights are <= rho
        delta = abs(self.eps) * R1 * np.linalg.norm(S)
        self.lam = 1.0 - delta
        if self.lam < 0.5:
            raise StructuralError(
                f"eps={eps} too large: ellipticity bound {self.lam:.3f} < 1/2 on B_{R1}")

    def bmatrix(self, P):
        return self.eps * self.S * hweights(P, self.dims)

    def normalized_b(self, P):
        P = as_points(P, self.dims)
        return np.broadcast_to(self.eps * self.S, P.shape[:-1] + self.S.shape).copy()

    def xderiv(self, P):
        d = self.dims
        P = as_points(P, d)
        z, _ = split(P, d)
        b = d.beta
        rho = gauge(P, d)
        if np.any(rho == 0):
            raise DomainError("X-derivatives of the coefficients are evaluated off the origin")
        zn = np.linalg.norm(z, axis=-1)
        grho = gauge_grad(P, d)
        w = zn ** (b + 1.0) / rho ** b
        # (b+1)|z|^(b-1) z / rho^b, guarded on z = 0
        with np.errstate(invalid="ignore", divide="ignore"):
            zc = np.where(zn > 0, (b + 1.0) * zn ** (b - 1.0) / rho ** b, 0.0)
        gw = (-b * w / rho)[..., None] * grho
        gw[..., : d.m] += zc[..., None] * z
        xr = to_horizontal(grho, P, d)
        xw = to_horizontal(gw, P, d)
        N, m = d.N, d.m
        out = np.empty(P.shape[:-1] + (N, N, N))
        out[...] = xw[..., :, None, None]
        out[..., :, :m, :m] = xr[..., :, None, None]
        return self.eps * self.S * out


class TBlockViolation(CoefficientField):
    """``A = I + eps * rho`` on the t-t diagonal only; breaks the cross-block bound."""

    name = "tblock"

    def __init__(self, eps: float, dims: Dims = DEFAULT_DIMS, R1: float = 1.0):
        if dims.k == 0:
            raise ValueError("needs k >= 1")
        self.eps = float(eps)
        self.dims = dims
        self.R1 = R1
        self.lam = 1.0 - abs(self.eps) * R1

    def bmatrix(self, P):
        P = as_points(P, self.dims)
        rho = gauge(P, self.dims)
        N, m = self.dims.N, self.dims.m
        B = np.zeros(P.shape[:-1] + (N, N))
        for j in range(m, N):
            B[..., j, j] = self.eps * rho
        return B


class MatrixFunctionField(CoefficientField):
    """Wrap a user callable ``P -> B(P)``; derivatives by finite differences."""

    name = "function"

    def __init__(self, bfun, dims: Dims = DEFAULT_DIMS, lam: float = 1.0, R1: float = 1.0):
        self.bfun = bfun
        self.dims = dims
        self.lam = lam
        self.R1 = R1

    def bmatrix(self, P):
        return self.bfun(as_points(P, self.dims))


def make_perturbed(eps: float, S=None, dims: Dims = DEFAULT_DIMS, R1: float = 1.0) -> CoefficientField:
    if eps == 0:
        return IdentityField(dims, R1)
    return PerturbedField(eps, S, dims, R1)


def make_coefficients(name: str, dims: Dims = DEFAULT_DIMS, R1: float = 1.0, eps: float = 0.05,
                      S=None) -> CoefficientField:
    """Coefficient families addressable by name."""
    if name == "identity":
        return IdentityField(dims, R1)
    if name == "perturbed":
        return make_perturbed(eps, S, dims, R1)
    if name == "tblock":
        return TBlockViolation(eps, dims, R1)
    raise ValueError(f"unknown coefficient family {name!r} (identity | perturbed | tblock)")


# ---------------------------------------------------------------------------
# mu, sigma, F

def _quad(M, v):
    return np.einsum("...i,...ij,...j->...", v, M, v)


def eval_mu(A: CoefficientField, P) -> np.ndarray:
    xr = gauge_xgrad(P, A.dims)
    return _quad(A.matrix(P), xr)


def eval_sigma(A: CoefficientField, P) -> np.ndarray:
    xr = gauge_xgrad(P, A.dims)
    return _quad(A.bmatrix(P), xr)


def unit_direction(P, dims: Dims) -> np.ndarray:
    """``X rho / psi^(1/2)``, a unit vector defined off the origin."""
    z, t = split(P, dims)
    rho = gauge(P, dims)
    zn = np.linalg.norm(z, axis=-1)
    b = dims.beta
    e_z = (zn ** b / rho ** (b + 1.0))[..., None] * z
    e_t = ((b + 1.0) / rho ** (b + 1.0))[..., None] * t
    return np.concatenate([e_z, e_t], axis=-1)


def F_coeffs(A: CoefficientField, P, psi_switch: float = PSI_SWITCH) -> np.ndarray:
    """Coordinate components of F, continuous across ``z = 0``.

    Away from ``z = 0`` the defining quotient is used.  Where ``psi`` is below
    ``psi_switch`` F is written as Z minus ``(sigma/mu) Z`` plus the B-term,
    with the common factor ``psi^(1/2)`` removed by hand using the normalized
    coefficients ``B / weights``.
    """
    d = A.dims
    P = as_points(P, d)
    single = P.ndim == 1
    P = np.atleast_2d(P)
    rho = gauge(P, d)
    if np.any(rho == 0):
        raise DomainError("F is not defined at the origin")
    zn = znorm(P, d)
    psi = (zn / rho) ** (2.0 * d.beta)
    out = np.empty_like(P)
    far = psi >= psi_switch
    if np.any(far):
        Pf = P[far]
        xr = gauge_xgrad(Pf, d)
        Ax = np.einsum("...ij,...j->...i", A.matrix(Pf), xr)
        mu = np.sum(Ax * xr, axis=-1)
        c = (rho[far] / mu)[:, None] * Ax
        c[:, d.m:] *= (zn[far] ** d.beta)[:, None]
        out[far] = c
    near = ~far
    if np.any(near):
        Pn = P[near]
        zf, _ = split(Pn, d)
        e = unit_direction(Pn, d)
        Bh = A.normalized_b(Pn)
        Be = np.einsum("...ij,...j->...i", A.bmatrix(Pn), e)
        bee = np.sum(Be * e, axis=-1)
        aee = 1.0 + bee
        rn, zz = rho[near], zn[near]
        m = d.m
        tz = Bh[:, :m, :m] @ zf[..., None]
        tz = tz[..., 0] + zz[:, None] * np.einsum("nij,nj->ni", Bh[:, :m, m:], e[:, m:])
        tt = (zz ** (d.beta + 1.0))[:, None] * np.einsum("nij,nj->ni", Bh[:, m:, :], e)
        T = np.concatenate([tz, tt], axis=-1) * (rn / aee)[:, None]
        out[near] = euler_field(Pn, d) * (1.0 - bee / aee)[:, None] + T
    return out[0] if single else out


def F_from_grad(A: CoefficientField, P, G) -> np.ndarray:
    return np.sum(F_coeffs(A, P) * G, axis=-1)


def F_apply(A: CoefficientField, f, P) -> np.ndarray:
    return F_from_grad(A, P, coordinate_grad(f, P, A.dims))


# ---------------------------------------------------------------------------
# hypothesis (H) checker

@dataclass
class HypothesisReport:
    Lambda_hat: float
    bound_maxima: dict
    worst_point: dict
    levels: list
    stable: bool
    symmetric: bool
    lambda_hat: float
    budget: float
    status: str  # pass | fail | inconclusive | structural

    @property
    def passed(self) -> bool:
        return self.status == "pass"


BOUND_NAMES = ("b_zz/rho", "b_other/weight", "Xb_zz", "Xb_other/psi^1/2")


def structural_ratios(A: CoefficientField, P) -> np.ndarray:
    """Per-point values of the four (H) ratios, shape ``(n, 4)``."""
    d = A.dims
    P = np.atleast_2d(as_points(P, d))
    m = d.m
    rho = gauge(P, d)
    psi = angle_psi(P, d)
    B = np.abs(A.bmatrix(P))
    XB = np.abs(A.xderiv(P))
    w_other = psi ** (0.5 + 0.5 / d.beta) * rho
    zz = np.zeros(B.shape[1:], bool)
    zz[:m, :m] = True
    r1 = np.max(np.where(zz, B, 0.0), axis=(1, 2)) / rho
    r2 = np.max(np.where(zz, 0.0, B), axis=(1, 2)) / w_other
    kz = np.zeros(XB.shape[1:], bool)
    kz[:m, :m, :m] = True
    r3 = np.max(np.where(kz, XB, 0.0), axis=(1, 2, 3))
    r4 = np.max(np.where(kz, 0.0, XB), axis=(1, 2, 3)) / np.sqrt(psi)
    return np.stack([r1, r2, r3, r4], axis=1)


def ellipticity_scan(A: CoefficientField, P):
    """Return (max asymmetry, smallest eigenvalue, largest eigenvalue)."""
    M = A.matrix(np.atleast_2d(P))
    asym = float(np.max(np.abs(M - np.swapaxes(M, -1, -2)), initial=0.0))
    ev = np.linalg.eigvalsh(0.5 * (M + np.swapaxes(M, -1, -2)))
    return asym, float(ev.min()), float(ev.max())


def _stable(a, b, rtol=0.05):
    return abs(b - a) <= rtol * max(abs(b), 1e-300) or a == b


def check_structural(A: CoefficientField, R1: float | None = None, n: int = 2000, seed: int = 0,
                     budget: float = 1.0) -> HypothesisReport:
    """Sampled (H) constants over ``B_R1`` at refinement levels n, 4n, 16n."""
    d = A.dims
    R1 = A.R1 if R1 is None else R1
    levels = []
    P = None
    ratios = None
    for lvl, size in enumerate((n, 4 * n, 16 * n)):
        P = sample_ball_collared(R1, size, seed + 1000 * lvl, d, collar=COLLAR)
        ratios = structural_ratios(A, P)
        levels.append(float(np.max(ratios)))
    maxima = ratios.max(axis=0)
    worst = {name: P[int(np.argmax(ratios[:, i]))].tolist() for i, name in enumerate(BOUND_NAMES)}
    asym, lo, hi = ellipticity_scan(A, P)
    lam_hat = min(lo, 1.0 / hi) if hi > 0 else 0.0
    symmetric = asym <= 1e-12
    stable = _stable(levels[1], levels[2])
    Lh = levels[-1]
    if not symmetric or lam_hat <= 0:
        status = "structural"
    elif not stable:
        status = "inconclusive"
    else:
        status = "pass" if Lh <= budget else "fail"
    return HypothesisReport(
        Lambda_hat=Lh,
        bound_maxima=dict(zip(BOUND_NAMES, map(float, maxima))),
        worst_point=worst,
        levels=levels,
        stable=stable,
        symmetric=symmetric,
        lambda_hat=lam_hat,
        budget=budget,
        status=status,
    )


def points_at_psi(psi_value: float, rho_value: float, n: int, seed: int, dims: Dims) -> np.ndarray:
    """Random points with prescribed gauge and angle function."""
    rng = np.random.default_rng(seed)
    b1 = dims.beta + 1.0
    zn = rho_value * psi_value ** (1.0 / (2.0 * dims.beta))
    tn = np.sqrt(max(rho_value ** (2 * b1) - zn ** (2 * b1), 0.0)) / b1
    z = rng.normal(size=(n, dims.m))
    z *= zn / np.linalg.norm(z, axis=1, keepdims=True)
    t = rng.normal(size=(n, dims.k))
    t *= tn / np.linalg.norm(t, axis=1, keepdims=True)
    return np.concatenate([z, t], axis=1)


def ratio_by_psi_decade(A: CoefficientField, psi_levels=(1e-1, 1e-2, 1e-3, 1e-4), rho_value=0.5,
                        n=200, seed=0) -> np.ndarray:
    """Max (H) ratio at each prescribed ``psi`` level (divergence diagnostic)."""
    return np.array([
        float(np.max(structural_ratios(A, points_at_psi(p, rho_value, n, seed, A.dims))))
        for p in psi_levels
    ])


# ---------------------------------------------------------------------------
# potentials

class Potential(ScalarField):
    K_hat: float | None = None
    provenance: str = "estimated"


class ZeroPotential(Potential):
    provenance = "closed-form"
    K_hat = 1.0

    def __init__(self, dims: Dims = DEFAULT_DIMS):
        self.dims = dims

    def __call__(self, P):
        P = as_points(P, self.dims)
        return np.zeros(P.shape[:-1])

    def grad(self, P):
        return np.zeros_like(as_points(P, self.dims))


class GaugePotential(Potential):
    """``V = (rho^2 - c) psi``; with A = I one has ``Z V = 2 rho^2 psi``."""

    provenance = "closed-form"

    def __init__(self, c: float, dims: Dims = DEFAULT_DIMS, R1: float = 1.0):
        self.c = float(c)
        self.dims = dims
        self.R1 = R1
        self.K_hat = max(1.0, abs(self.c), abs(R1 * R1 - self.c), 2.0 * R1 * R1)

    def __call__(self, P):
        P = as_points(P, self.dims)
        rho = gauge(P, self.dims)
        return (rho ** 2 - self.c) * angle_psi(P, self.dims, at_origin=0.0)

    def grad(self, P):
        P = as_points(P, self.dims)
        rho = gauge(P, self.dims)
        psi = angle_psi(P, self.dims)
        return ((2 * rho * psi)[..., None] * gauge_grad(P, self.dims)
                + (rho ** 2 - self.c)[..., None] * psi_grad(P, self.dims))


class FunctionPotential(Potential):
    def __init__(self, fn, dims: Dims = DEFAULT_DIMS, grad=None):
        self.fn = fn
        self.dims = dims
        self._grad = grad

    def __call__(self, P):
        return self.fn(as_points(P, self.dims))

    def grad(self, P):
        if self._grad is None:
            return fd_grad(self.fn, P, self.dims)
        return self._grad(as_points(P, self.dims))


@dataclass
class PotentialReport:
    K_hat: float
    max_V_ratio: float
    max_FV_ratio: float
    levels: list = field(default_factory=list)
    stable: bool = True

    @property
    def status(self) -> str:
        return "pass" if self.stable else "fail"


def check_potential(V, A: CoefficientField, R1: float = 1.0, n: int = 2000, seed: int = 0) -> PotentialReport:
    """Certified ``K >= 1`` with ``|V| <= K psi`` and ``|F V| <= K psi`` on samples."""
    d = A.dims
    levels = []
    rv = rf = 0.0
    for lvl, size in enumerate((n, 4 * n, 16 * n)):
        P = sample_ball_collared(R1, size, seed + 1000 * lvl, d, collar=COLLAR)
        psi = angle_psi(P, d)
        rv = float(np.max(np.abs(V(P)) / psi))
        rf = float(np.max(np.abs(F_apply(A, V, P)) / psi))
        levels.append(max(1.0, rv, rf))
    return PotentialReport(K_hat=levels[-1], max_V_ratio=rv, max_FV_ratio=rf, levels=levels,
                           stable=_stable(levels[1], levels[2]))


# ---------------------------------------------------------------------------
# sampled structural estimates

def estimate_ratios(A: CoefficientField, P) -> dict:
    """Pointwise ratios whose suprema are the fitted constants of the estimates.

    Keys: ``divF`` for ``|Q - div F|/rho``, ``Fmu`` for ``|F mu|/(rho psi)``,
    ``F-Z`` for ``max|F - Z|/rho^2``, ``sigma`` for ``|sigma|/(rho psi^(3/2+1/(2b)))``,
    ``sigma/mu`` for ``|sigma/mu|/(rho psi)``.
    """
    d = A.dims
    P = np.atleast_2d(P)
    rho = gauge(P, d)
    psi = angle_psi(P, d)
    mu = eval_mu(A, P)
    sigma = eval_sigma(A, P)
    divF = fd_div(lambda Q: F_coeffs(A, Q), P, d)
    mu_field = FunctionField(lambda Q: eval_mu(A, Q), d)
    Fmu = F_from_grad(A, P, fd_grad(mu_field, P, d))
    FZ = np.max(np.abs(F_coeffs(A, P) - euler_field(P, d)), axis=1)
    return {
        "divF": np.abs(d.Q - divF) / rho,
        "Fmu": np.abs(Fmu) / (rho * psi),
        "F-Z": FZ / rho ** 2,
        "sigma": np.abs(sigma) / (rho * psi ** (1.5 + 0.5 / d.beta)),
        "sigma/mu": np.abs(sigma / mu) / (rho * psi),
    }


def fitted_constants(A: CoefficientField, R1: float = 1.0, n: int = 10_000, seed: int = 0,
                     collar: float = COLLAR) -> dict:
    P = sample_ball_collared(R1, n, seed, A.dims, collar=collar)
    return {k: float(np.max(v)) for k, v in estimate_ratios(A, P).items()}
