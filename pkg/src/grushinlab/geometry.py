"""Closed-form calculus for the Baouendi-Grushin vector fields.

Points are stored as float arrays whose last axis has length ``N = m + k``:
the first ``m`` entries are the ``z`` coordinates, the remaining ``k`` the
``t`` coordinates.  Every function accepts a single point of shape ``(N,)``
or a batch of shape ``(n, N)`` and returns values with the matching leading
shape.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    """Raised when a quantity is evaluated where it is undefined."""


@dataclass(frozen=True)
class Dims:
    """Dimension metadata ``(m, k, beta)``."""

    m: int = 2
    k: int = 1
    beta: float = 1.0

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be a positive integer")
        if self.k < 0:
            raise ValueError("k must be nonnegative")
        if not self.beta > 0:
            raise ValueError("beta must be positive")

    @property
    def N(self) -> int:
        return self.m + self.k

    @property
    def Q(self) -> float:
        """Homogeneous dimension ``m + (beta+1) k``."""
        return self.m + (self.beta + 1.0) * self.k

    @property
    def euler_weights(self) -> np.ndarray:
        """Coefficients of Z in coordinates: 1 on z, beta+1 on t."""
        return np.concatenate([np.ones(self.m), np.full(self.k, self.beta + 1.0)])


DEFAULT_DIMS = Dims()


def as_points(P, dims: Dims) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    if P.shape[-1] != dims.N:
        raise ValueError(f"points must have last axis {dims.N}, got shape {P.shape}")
    return P


def split(P, dims: Dims):
    P = as_points(P, dims)
    return P[..., : dims.m], P[..., dims.m:]


def make_point(z, t, dims: Dims = DEFAULT_DIMS) -> np.ndarray:
    return as_points(np.concatenate([np.atleast_1d(z), np.atleast_1d(t)]).astype(float), dims)


def znorm(P, dims: Dims) -> np.ndarray:
    z, _ = split(P, dims)
    return np.linalg.norm(z, axis=-1)


def gauge(P, dims: Dims = DEFAULT_DIMS) -> np.ndarray:
    z, t = split(P, dims)
    b1 = dims.beta + 1.0
    z2 = np.sum(z * z, axis=-1)
    t2 = np.sum(t * t, axis=-1)
    return (z2 ** b1 + b1 * b1 * t2) ** (1.0 / (2.0 * b1))


def dilate(P, a: float, dims: Dims = DEFAULT_DIMS) -> np.ndarray:
    """Anisotropic dilation ``(z, t) -> (a z, a^(beta+1) t)``."""
    if not a > 0:
        raise ValueError(f"dilation factor must be positive, got {a}")
    P = as_points(P, dims)
    scale = np.concatenate([np.full(dims.m, a), np.full(dims.k, a ** (dims.beta + 1.0))])
    return P * scale


def _check_not_origin(rho):
    if np.any(rho == 0.0):
        raise DomainError("quantity undefined at the origin")


def gauge_grad(P, dims: Dims = DEFAULT_DIMS) -> np.ndarray:
    """Coordinate gradient of the gauge."""
    z, t = split(P, dims)
    rho = gauge(P, dims)
    _check_not_origin(rho)
    b = dims.beta
    zn = np.linalg.norm(z, axis=-1)
    inv = rho ** (-(2.0 * b + 1.0))
    gz = (zn ** (2.0 * b) * inv)[..., None] * z
    gt = ((b + 1.0) * inv)[..., None] * t
    return np.concatenate([gz, gt], axis=-1)


def to_horizontal(G, P, dims: Dims) -> np.ndarray:
    """Convert a coordinate gradient into components along ``X_1..X_N``."""
    zn = znorm(P, dims)
    out = np.array(G, dtype=float, copy=True)
    out[..., dims.m:] *= (zn ** dims.beta)[..., None]
    return out


def gauge_xgrad(P, dims: Dims = DEFAULT_DIMS) -> np.ndarray:
    return to_horizontal(gauge_grad(P, dims), P, dims)


def angle_psi(P, dims: Dims = DEFAULT_DIMS, at_origin: float | None = None) -> np.ndarray:
    """``|z|^(2 beta) / rho^(2 beta)``, in [0, 1] and zero on ``z = 0``.

    The origin raises unless ``at_origin`` supplies a value (quadrature uses 0).
    """
    rho = gauge(P, dims)
    zn = znorm(P, dims)
    if at_origin is None:
        _check_not_origin(rho)
        return (zn / rho) ** (2.0 * dims.beta)
    with np.errstate(invalid="ignore", divide="ignore"):
        psi = (zn / rho) ** (2.0 * dims.beta)
    return np.where(rho == 0.0, at_origin, psi)


def psi_grad(P, dims: Dims = DEFAULT_DIMS) -> np.ndarray:
    """Coordinate gradient of the angle function."""
    z, _ = split(P, dims)
    rho = gauge(P, dims)
    _check_not_origin(rho)
    b = dims.beta
    zn = np.linalg.norm(z, axis=-1)
    psi = (zn / rho) ** (2.0 * b)
    grho = gauge_grad(P, dims)
    # 2 beta psi z/|z|^2 written without the 0/0 on z = 0
    with np.errstate(invalid="ignore", divide="ignore"):
        zfac = np.where(zn > 0, 2.0 * b * zn ** (2.0 * b - 2.0) / rho ** (2.0 * b), 0.0)
    out = (-2.0 * b * psi / rho)[..., None] * grho
    out[..., : dims.m] += zfac[..., None] * z
    return out


def psi_xgrad(P, dims: Dims = DEFAULT_DIMS) -> np.ndarray:
    return to_horizontal(psi_grad(P, dims), P, dims)


def euler_from_grad(G, P, dims: Dims) -> np.ndarray:
    """``Z f`` from the coordinate gradient of ``f``."""
    P = as_points(P, dims)
    return np.sum(G * P * dims.euler_weights, axis=-1)


def euler_field(P, dims: Dims = DEFAULT_DIMS) -> np.ndarray:
    """Coordinates of Z, i.e. ``(z, (beta+1) t)``."""
    return as_points(P, dims) * dims.euler_weights


def div_Z(dims: Dims = DEFAULT_DIMS) -> float:
    return dims.Q


def euler_apply(f, P, dims: Dims = DEFAULT_DIMS) -> np.ndarray:
    """Apply Z to a scalar field (see :mod:`grushinlab.fields` for the protocol)."""
    from .fields import coordinate_grad

    return euler_from_grad(coordinate_grad(f, P, dims), P, dims)


def xgrad_apply(f, P, dims: Dims = DEFAULT_DIMS) -> np.ndarray:
    from .fields import coordinate_grad

    return to_horizontal(coordinate_grad(f, P, dims), P, dims)


def box_halfwidths(r: float, dims: Dims) -> np.ndarray:
    """Half side lengths of the smallest box containing the gauge ball ``B_r``."""
    b1 = dims.beta + 1.0
    return np.concatenate([np.full(dims.m, r), np.full(dims.k, r ** b1 / b1)])


def sample_ball(r: float, n: int, seed: int, dims: Dims = DEFAULT_DIMS) -> np.ndarray:
    """``n`` Lebesgue-uniform points of ``B_r`` by rejection from the bounding box."""
    if not r > 0:
        raise ValueError("radius must be positive")
    if n < 0:
        raise ValueError("n must be nonnegative")
    out = np.empty((n, dims.N))
    if n == 0:
        return out
    rng = np.random.default_rng(seed)
    half = box_halfwidths(r, dims)
    filled = 0
    while filled < n:
        batch = max(64, int(1.8 * (n - filled)))
        cand = rng.uniform(-half, half, size=(batch, dims.N))
        cand = cand[gauge(cand, dims) < r]
        take = min(len(cand), n - filled)
        out[filled: filled + take] = cand[:take]
        filled += take
    return out


def sample_ball_collared(r, n, seed, dims=DEFAULT_DIMS, collar=1e-3, absolute=False):
    """Like :func:`sample_ball` but drops points with ``|z| <= collar * rho``.

    With ``absolute=True`` the collar is ``|z| <= collar``.
    """
    out = np.empty((0, dims.N))
    s = seed
    while len(out) < n:
        P = sample_ball(r, 2 * (n - len(out)) + 16, s, dims)
        zn = znorm(P, dims)
        keep = zn > (collar if absolute else collar * gauge(P, dims))
        out = np.concatenate([out, P[keep]])
        s += 7919
    return out[:n]


def _poly_fields(dims: Dims):
    """Polynomial test fields with closed-form gradients."""
    m = dims.m

    def f1(P):
        P = as_points(P, dims)
        return P[..., 0] ** 2 * P[..., -1] + P[..., m - 1] ** 3

    def g1(P):
        P = as_points(P, dims)
        G = np.zeros_like(P)
        G[..., 0] += 2 * P[..., 0] * P[..., -1]
        G[..., m - 1] += 3 * P[..., m - 1] ** 2
        G[..., -1] += P[..., 0] ** 2
        return G

    def f2(P):
        P = as_points(P, dims)
        return np.sum(P, axis=-1) ** 2 + P[..., -1] ** 2

    def g2(P):
        P = as_points(P, dims)
        G = np.repeat((2 * np.sum(P, axis=-1))[..., None], dims.N, axis=-1)
        G[..., -1] += 2 * P[..., -1]
        return G

    return [(f1, g1), (f2, g2)]


def identity_suite(dims: Dims = DEFAULT_DIMS, n: int = 10_000, seed: int = 0, collar: float = 1e-3) -> dict:
    """Max pointwise errors of the basic identities on ``B_1`` with ``|z| > collar``.

    Keys: ``Zrho``, ``Zpsi``, ``Xrho2``, ``divZ``, ``commutator`` (``[X_i, Z] f - X_i f``).
    """
    from .fields import FunctionField, fd_div, fd_grad

    P = sample_ball_collared(1.0, n, seed, dims, collar=collar, absolute=True)
    rho = gauge(P, dims)
    out = {
        "Zrho": float(np.max(np.abs(euler_from_grad(gauge_grad(P, dims), P, dims) - rho))),
        "Zpsi": float(np.max(np.abs(euler_from_grad(psi_grad(P, dims), P, dims)))),
        "Xrho2": float(np.max(np.abs(np.sum(gauge_xgrad(P, dims) ** 2, axis=-1) - angle_psi(P, dims)))),
        "divZ": float(np.max(np.abs(fd_div(lambda Q: euler_field(Q, dims), P, dims) - dims.Q))),
    }
    comm = 0.0
    for f, g in _poly_fields(dims):
        Zf = FunctionField(lambda Q, g=g: euler_from_grad(g(Q), Q, dims), dims)
        XZf = to_horizontal(fd_grad(Zf, P, dims), P, dims)
        Xf = to_horizontal(g(P), P, dims)
        for i in range(dims.N):
            Xif = FunctionField(lambda Q, g=g, i=i: to_horizontal(g(Q), Q, dims)[..., i], dims)
            ZXif = euler_from_grad(fd_grad(Xif, P, dims), P, dims)
            comm = max(comm, float(np.max(np.abs(XZf[:, i] - ZXif - Xf[:, i]))))
    out["commutator"] = comm
    return out


def gauge_bounds(dims: Dims = DEFAULT_DIMS, R1: float = 1.0, n: int = 10_000, seed: int = 0,
                 collar: float = 1e-3) -> dict:
    """Sampled suprema of the derivative bounds on ``rho`` and ``psi`` over ``B_R1``.

    Points with ``|z| < collar * rho`` are skipped.  Keys:

    * ``Xz_rho``: ``|X_i rho| / psi^(1 + 1/(2 beta))`` for ``i <= m`` (bounded by 1)
    * ``Xt_rho``: ``|X_{m+j} rho| / ((beta + 1) psi^(1/2))`` (bounded by 1)
    * ``Xt_rho_sqrt_rho``: ``|X_{m+j} rho| / ((beta + 1) rho^(1/2))``, not scale invariant; reported only
    * ``Xz_psi``: ``|X_i psi| |z| / (beta psi)``, a fitted constant
    * ``Xt_psi``: ``|X_{m+j} psi| rho / (beta psi)``, a fitted constant
    """
    P = sample_ball_collared(R1, n, seed, dims, collar=collar)
    rho, psi, zn = gauge(P, dims), angle_psi(P, dims), znorm(P, dims)
    Xr, Xp = gauge_xgrad(P, dims), psi_xgrad(P, dims)
    m, b = dims.m, dims.beta
    Xz_rho, Xt_rho = np.abs(Xr[:, :m]), np.abs(Xr[:, m:])
    return {
        "Xz_rho": float(np.max(Xz_rho / psi[:, None] ** (1 + 0.5 / b))),
        "Xt_rho": float(np.max(Xt_rho / ((b + 1) * np.sqrt(psi)[:, None]))),
        "Xt_rho_sqrt_rho": float(np.max(Xt_rho / ((b + 1) * np.sqrt(rho)[:, None]))),
        "Xz_psi": float(np.max(np.abs(Xp[:, :m]) * (zn / (b * psi))[:, None])),
        "Xt_psi": float(np.max(np.abs(Xp[:, m:]) * (rho / (b * psi))[:, None])),
    }
