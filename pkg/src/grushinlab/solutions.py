"""Manufactured solutions of ``X_i(a_ij X_j u) = V u`` and a residual probe.

Each Gaussian member ``u = f exp(-rho^2/2)`` with ``f`` homogeneous of degree
``kappa`` and ``B f = 0`` has ``V = (rho^2 - Q - 2 kappa) psi``: the radial
part contributes ``(rho^2 - Q) psi`` and the cross term
``2 <Xf, X exp(-rho^2/2)> = -2 kappa psi u``.
"""
from __future__ import annotations

import numpy as np

from .fields import (
    CoefficientField,
    GaugePotential,
    IdentityField,
    Potential,
    ScalarField,
    ZeroPotential,
)
from .geometry import DEFAULT_DIMS, Dims, DomainError, as_points, gauge, gauge_grad, znorm

KINDS = ("coordinate_z", "coordinate_t", "planar_harmonic", "gaussian_radial", "gaussian_modulated")


class SolutionField(ScalarField):
    kappa: float | None = None
    exact_potential: Potential | None = None
    label: str = "solution"

    def bound_C0(self, R1: float = 1.0) -> float:
        raise NotImplementedError


class CoordinateZ(SolutionField):
    def __init__(self, dims: Dims = DEFAULT_DIMS, index: int = 0):
        if not 0 <= index < dims.m:
            raise ValueError("z index out of range")
        self.dims, self.index = dims, index
        self.kappa = 1.0
        self.exact_potential = ZeroPotential(dims)
        self.label = f"z{index + 1}"

    def __call__(self, P):
        return as_points(P, self.dims)[..., self.index].copy()

    def grad(self, P):
        G = np.zeros_like(as_points(P, self.dims))
        G[..., self.index] = 1.0
        return G

    def bound_C0(self, R1=1.0):
        return R1


class CoordinateT(SolutionField):
    def __init__(self, dims: Dims = DEFAULT_DIMS, index: int = 0):
        if not 0 <= index < dims.k:
            raise ValueError("t index out of range")
        self.dims, self.index = dims, index
        self.kappa = dims.beta + 1.0
        self.exact_potential = ZeroPotential(dims)
        self.label = f"t{index + 1}"

    def __call__(self, P):
        return as_points(P, self.dims)[..., self.dims.m + self.index].copy()

    def grad(self, P):
        G = np.zeros_like(as_points(P, self.dims))
        G[..., self.dims.m + self.index] = 1.0
        return G

    def bound_C0(self, R1=1.0):
        b1 = self.dims.beta + 1.0
        return R1 ** b1 / b1


class PlanarHarmonic(SolutionField):
    """``Re((z1 + i z2)^p)``."""

    def __init__(self, p: int, dims: Dims = DEFAULT_DIMS):
        if dims.m < 2:
            raise ValueError("planar_harmonic needs m >= 2")
        if int(p) != p or p < 1:
            raise ValueError("p must be a positive integer")
        self.dims, self.p = dims, int(p)
        self.kappa = float(p)
        self.exact_potential = ZeroPotential(dims)
        self.label = f"p{self.p}"

    def _w(self, P):
        P = as_points(P, self.dims)
        return P[..., 0] + 1j * P[..., 1]

    def __call__(self, P):
        return np.real(self._w(P) ** self.p)

    def grad(self, P):
        P = as_points(P, self.dims)
        dw = self.p * self._w(P) ** (self.p - 1)
        G = np.zeros_like(P)
        G[..., 0] = dw.real
        G[..., 1] = -dw.imag
        return G

    def bound_C0(self, R1=1.0):
        return R1 ** self.p


class GaussianModulated(SolutionField):
    """``f exp(-rho^2/2)``; ``f = None`` gives the plain Gaussian."""

    def __init__(self, f: SolutionField | None = None, dims: Dims = DEFAULT_DIMS):
        self.dims, self.f = dims, f
        self.kappa = 0.0 if f is None else f.kappa
        self.exact_potential = GaugePotential(dims.Q + 2.0 * self.kappa, dims)
        self.label = "gauss" if f is None else f"{f.label}*gauss"

    def _g(self, P):
        return np.exp(-0.5 * gauge(P, self.dims) ** 2)

    def __call__(self, P):
        g = self._g(P)
        return g if self.f is None else self.f(P) * g

    def grad(self, P):
        P = as_points(P, self.dims)
        rho = gauge(P, self.dims)
        g = np.exp(-0.5 * rho ** 2)
        with np.errstate(invalid="ignore"):
            gg = (-rho * g)[..., None] * gauge_grad(np.where(rho[..., None] == 0, 1.0, P), self.dims)
        gg = np.where(rho[..., None] == 0, 0.0, gg)
        if self.f is None:
            return gg
        return self.f(P)[..., None] * gg + g[..., None] * self.f.grad(P)

    def bound_C0(self, R1=1.0):
        return 1.0 if self.f is None else self.f.bound_C0(R1)


def _parse_inner(spec: str, dims: Dims) -> SolutionField:
    if spec in ("z1", "z", "coordinate_z"):
        return CoordinateZ(dims)
    if spec in ("t1", "t", "coordinate_t"):
        return CoordinateT(dims)
    if spec.startswith("z") and spec[1:].isdigit():
        return CoordinateZ(dims, int(spec[1:]) - 1)
    if spec.startswith("t") and spec[1:].isdigit():
        return CoordinateT(dims, int(spec[1:]) - 1)
    if spec.startswith("p") and spec[1:].isdigit():
        return PlanarHarmonic(int(spec[1:]), dims)
    raise ValueError(f"unknown modulating factor {spec!r} (z1 | t1 | p<degree>)")


def manufactured(kind: str, params: dict | None = None, dims: Dims = DEFAULT_DIMS) -> SolutionField:
    """Build a manufactured solution (with ``A = I``) by kind name.

    ``params``: ``index`` for the coordinate kinds, ``p`` for planar_harmonic,
    ``factor`` (``"z1"``, ``"t1"``, ``"p3"``, ...) for gaussian_modulated.
    """
    params = dict(params or {})
    if kind == "coordinate_z":
        return CoordinateZ(dims, params.get("index", 0))
    if kind == "coordinate_t":
        return CoordinateT(dims, params.get("index", 0))
    if kind == "planar_harmonic":
        return PlanarHarmonic(params.get("p", 3), dims)
    if kind == "gaussian_radial":
        return GaussianModulated(None, dims)
    if kind == "gaussian_modulated":
        return GaussianModulated(_parse_inner(str(params.get("factor", "z1")), dims), dims)
    raise ValueError(f"unknown manufactured kind {kind!r}; expected one of {KINDS}")


def parse_solution(spec: str, dims: Dims = DEFAULT_DIMS) -> SolutionField:
    """``"kind[:arg]"``, e.g. ``coordinate_z``, ``planar_harmonic:3``, ``gaussian_modulated:t1``."""
    kind, _, arg = spec.partition(":")
    if kind == "planar_harmonic" and arg:
        return manufactured(kind, {"p": int(arg.lstrip("p"))}, dims)
    if kind == "gaussian_modulated":
        return manufactured(kind, {"factor": arg or "z1"}, dims)
    if kind in ("coordinate_z", "coordinate_t") and arg:
        return manufactured(kind, {"index": int(arg.lstrip("zt")) - 1}, dims)
    return manufactured(kind, None, dims)


def builtin_members(dims: Dims = DEFAULT_DIMS, p: int = 3) -> list[SolutionField]:
    """All built-in manufactured members at the given dimensions."""
    out = [CoordinateZ(dims)]
    if dims.k:
        out.append(CoordinateT(dims))
    if dims.m >= 2:
        out.append(PlanarHarmonic(p, dims))
    out.append(GaussianModulated(None, dims))
    out.append(GaussianModulated(CoordinateZ(dims), dims))
    if dims.k:
        out.append(GaussianModulated(CoordinateT(dims), dims))
    if dims.m >= 2:
        out.append(GaussianModulated(PlanarHarmonic(p, dims), dims))
    return out


# ---------------------------------------------------------------------------

def _xdiff(f, P, i, h, dims: Dims):
    """4th-order central difference of ``f`` along the flow of ``X_i``.

    For ``i >= m`` the flow moves only ``t`` and keeps ``|z|`` fixed, so the
    coordinate step is ``h |z|^beta`` and the quotient is taken against ``h``.
    """
    n = len(P)
    d = np.zeros_like(P)
    d[:, i] = h if i < dims.m else h * znorm(P, dims) ** dims.beta
    v = np.asarray(f(np.concatenate([P + 2 * d, P + d, P - d, P - 2 * d]))).reshape(4, n)
    return (-v[0] + 8 * v[1] - 8 * v[2] + v[3]) / (12 * h)


def fd_xgrad(f, P, h, dims: Dims) -> np.ndarray:
    P = np.atleast_2d(P)
    return np.stack([_xdiff(f, P, i, h, dims) for i in range(dims.N)], axis=1)


def residual(u, V, A: CoefficientField | None, P, h: float = 1e-3, dims: Dims | None = None) -> np.ndarray:
    """``sum_ij X_i(a_ij X_j u) - V u`` by nested central differences.

    Both the inner X-gradient and the outer X-divergence are differenced along
    the vector fields (4th-order stencils, step ``h``), independently of any
    analytic gradient of ``u``.  Points need ``|z| >= 10 h``.
    """
    dims = dims or (A.dims if A is not None else getattr(u, "dims", DEFAULT_DIMS))
    A = A or IdentityField(dims)
    P = np.atleast_2d(as_points(P, dims))
    if np.any(znorm(P, dims) < 10 * h):
        raise DomainError(f"residual probe needs |z| >= {10 * h:g} (collar around z = 0)")

    def flux(Q, i):
        return np.einsum("nj,nj->n", A.matrix(Q)[:, i, :], fd_xgrad(u, Q, h, dims))

    out = np.zeros(len(P))
    for i in range(dims.N):
        out += _xdiff(lambda Q, i=i: flux(Q, i), P, i, h, dims)
    Vv = 0.0 if V is None else V(P)
    return out - Vv * u(P)


def grushin_laplacian_fd(u, P, h: float = 1e-3, dims: Dims = DEFAULT_DIMS) -> np.ndarray:
    """``Delta_z u + |z|^(2 beta) Delta_t u`` from 5-point second differences along each X_i."""
    P = np.atleast_2d(as_points(P, dims))
    n = len(P)
    out = np.zeros(n)
    zb = znorm(P, dims) ** dims.beta
    for a in range(dims.N):
        d = np.zeros_like(P)
        d[:, a] = h if a < dims.m else h * zb
        v = np.asarray(u(np.concatenate([P + 2 * d, P + d, P, P - d, P - 2 * d]))).reshape(5, n)
        out += (-v[0] + 16 * v[1] - 30 * v[2] + 16 * v[3] - v[4]) / (12 * h * h)
    return out
