"""Divergence-form finite differences for ``X_i(a_ij X_j u) = V u`` on a box.

With ``D = diag(1, .., 1, |z|^beta, .., |z|^beta)`` the operator is
``div(D A D grad u)``.  Diagonal fluxes use face-centred coefficients, cross
terms the symmetric nodal 4-point form, and ``V`` sits on the diagonal.  The
z-nodes sit at half-integer multiples of the spacing so ``|z| > 0`` at every
node.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .fields import CoefficientField, IdentityField, Potential, ZeroPotential
from .geometry import DEFAULT_DIMS, Dims, DomainError, as_points, znorm
from .solutions import SolutionField

REL_TOL = 1e-10


class SolverError(RuntimeError):
    """The iterative solve did not reach the requested residual."""


class IndefiniteSystem(SolverError):
    """Nonpositive curvature met: ``V`` is too negative for this box."""


@dataclass
class GridSolution:
    dims: Dims
    lo: np.ndarray
    h: np.ndarray
    values: np.ndarray
    provenance: str = ""
    iterations: int = 0
    rel_residual: float = 0.0

    @property
    def shape(self):
        return self.values.shape

    @property
    def hi(self):
        return self.lo + self.h * (np.array(self.shape) - 1)

    def axes(self):
        return [self.lo[a] + self.h[a] * np.arange(n) for a, n in enumerate(self.shape)]

    def nodes(self) -> np.ndarray:
        return _mesh(self.axes())

    def to_csv(self) -> str:
        d = self.dims
        buf = io.StringIO()
        header = {
            "m": str(d.m), "k": str(d.k), "beta": repr(float(d.beta)),
            "lo": " ".join(repr(float(x)) for x in self.lo),
            "h": " ".join(repr(float(x)) for x in self.h),
            "shape": " ".join(str(n) for n in self.shape),
            "provenance": self.provenance,
        }
        for key, val in header.items():
            buf.write(f"# {key}={val}\n")
        names = [f"z{i + 1}" for i in range(d.m)] + [f"t{j + 1}" for j in range(d.k)]
        buf.write(",".join(names + ["u"]) + "\n")
        for p, v in zip(self.nodes(), self.values.ravel()):
            buf.write(",".join(repr(float(x)) for x in p) + "," + repr(float(v)) + "\n")
        return buf.getvalue()

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_csv())

    @classmethod
    def from_csv(cls, text: str) -> "GridSolution":
        meta, body = {}, []
        for line in text.splitlines():
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                meta[key] = val
            elif line.strip():
                body.append(line)
        try:
            dims = Dims(int(meta["m"]), int(meta["k"]), float(meta["beta"]))
            lo = np.array([float(x) for x in meta["lo"].split()])
            h = np.array([float(x) for x in meta["h"].split()])
            shape = tuple(int(x) for x in meta["shape"].split())
        except (KeyError, ValueError) as exc:
            raise ValueError(f"malformed grid header: {exc}") from None
        vals = np.array([float(line.rsplit(",", 1)[1]) for line in body[1:]])
        if vals.size != math.prod(shape):
            raise ValueError(f"grid has {vals.size} values, header says {shape}")
        return cls(dims, lo, h, vals.reshape(shape), meta.get("provenance", ""))

    @classmethod
    def load(cls, path) -> "GridSolution":
        with open(path, encoding="utf-8") as fh:
            return cls.from_csv(fh.read())


def _mesh(axes) -> np.ndarray:
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))


def staggered_box(n: int, z_half: float = 0.6, t_half: float = 0.15, dims: Dims = DEFAULT_DIMS):
    """Box and spacing for ``n`` nodes per axis, every node at ``(j + 1/2) h``.

    Staggering ``t`` as well keeps nodes off ``t = 0``, where the Gaussian
    members are only Lipschitz at the origin.
    """
    if n < 3:
        raise ValueError("need at least 3 nodes per axis")
    hz = 2 * z_half / (n - 1)
    ht = 2 * t_half / (n - 1)
    box = [(-z_half + hz / 2, z_half + hz / 2)] * dims.m + [(-t_half + ht / 2, t_half + ht / 2)] * dims.k
    return box, np.array([hz] * dims.m + [ht] * dims.k)


def _dfactor(P, dims: Dims) -> np.ndarray:
    out = np.ones((len(P), dims.N))
    out[:, dims.m:] = (znorm(P, dims) ** dims.beta)[:, None]
    return out


def assemble(A: CoefficientField, V: Potential, lo, h, shape):
    """Rows of ``-L + V`` for interior nodes, columns over all nodes."""
    dims = A.dims
    N = dims.N
    shape = tuple(shape)
    idx = np.arange(math.prod(shape)).reshape(shape)
    inner = idx[(slice(1, -1),) * N].ravel()
    axes = [lo[a] + h[a] * np.arange(n) for a, n in enumerate(shape)]
    P = _mesh(axes)[inner]
    strides = np.array(idx.strides) // idx.itemsize
    rows, cols, vals = [], [], []

    def add(off, v):
        rows.append(inner)
        cols.append(inner + off)
        vals.append(v)

    diag = np.asarray(V(P), dtype=float) * np.ones(len(P))
    for a in range(N):
        e = np.zeros(N)
        e[a] = 0.5 * h[a]
        for sgn in (1, -1):
            Pf = P + sgn * e
            K = A.matrix(Pf)[:, a, a] * _dfactor(Pf, dims)[:, a] ** 2 / h[a] ** 2
            diag = diag + K
            add(sgn * strides[a], -K)
    if not _diagonal_only(A):
        for a in range(N):
            for b in range(N):
                if a == b:
                    continue
                for sa in (1, -1):
                    Pn = P.copy()
                    Pn[:, a] += sa * h[a]
                    K = A.matrix(Pn)[:, a, b] * _dfactor(Pn, dims)[:, a] * _dfactor(Pn, dims)[:, b]
                    K = K / (4 * h[a] * h[b])
                    for sb in (1, -1):
                        add(sa * strides[a] + sb * strides[b], -sa * sb * K)
    add(0, diag)
    M = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(math.prod(shape),) * 2)
    return M[inner], inner


def _diagonal_only(A) -> bool:
    return isinstance(A, IdentityField) or bool(getattr(A, "diagonal", False))


def pcg(M, b, tol: float = REL_TOL, maxiter: int | None = None):
    """Jacobi-preconditioned conjugate gradients for a symmetric matrix.

    Returns ``(x, iterations, relative residual)``.  Raises
    :class:`IndefiniteSystem` on nonpositive curvature and
    :class:`SolverError` when ``maxiter`` is exhausted.
    """
    n = len(b)
    maxiter = maxiter or 20 * n
    bn = float(np.linalg.norm(b))
    x = np.zeros(n)
    if bn == 0:
        return x, 0, 0.0
    dinv = M.diagonal()
    if np.any(dinv <= 0):
        raise IndefiniteSystem("nonpositive diagonal entry")
    dinv = 1.0 / dinv
    r = b.copy()
    zv = dinv * r
    p = zv.copy()
    rz = r @ zv
    for it in range(1, maxiter + 1):
        Ap = M @ p
        curv = p @ Ap
        if curv <= 0:
            raise IndefiniteSystem(f"curvature {curv:.3e} at iteration {it}")
        step = rz / curv
        x += step * p
        r -= step * Ap
        rel = float(np.linalg.norm(r)) / bn
        if rel < tol:
            # confirm against the true residual
            rel = float(np.linalg.norm(b - M @ x)) / bn
            if rel < tol:
                return x, it, rel
            r = b - M @ x
        zv = dinv * r
        rz_new = r @ zv
        p = zv + (rz_new / rz) * p
        rz = rz_new
    raise SolverError(f"no convergence in {maxiter} iterations (relative residual {rel:.2e})")


def solve_fd(A: CoefficientField | None, V: Potential | None, box, h, boundary: SolutionField,
             tol: float = REL_TOL, maxiter: int | None = None) -> GridSolution:
    """Dirichlet problem on ``box`` (one ``(lo, hi)`` per axis) with spacing ``h``.

    Boundary nodes take ``boundary`` exactly; interior nodes solve the
    stencil to relative residual ``tol``.
    """
    dims = A.dims if A is not None else getattr(boundary, "dims", DEFAULT_DIMS)
    A = A or IdentityField(dims)
    V = V or ZeroPotential(dims)
    box = np.asarray(box, dtype=float)
    if box.shape != (dims.N, 2) or np.any(box[:, 1] <= box[:, 0]):
        raise ValueError(f"box must be {dims.N} increasing (lo, hi) pairs")
    h = np.broadcast_to(np.asarray(h, dtype=float), (dims.N,)).copy()
    counts = (box[:, 1] - box[:, 0]) / h
    shape = tuple(int(round(c)) + 1 for c in counts)
    if not np.allclose(counts, np.round(counts), rtol=0, atol=1e-8) or min(shape) < 3:
        raise ValueError("box sides must be multiples of h with at least 3 nodes per axis")
    lo = box[:, 0]
    axes = [lo[a] + h[a] * np.arange(n) for a, n in enumerate(shape)]
    nodes = _mesh(axes)
    if np.any(znorm(nodes, dims) == 0):
        raise DomainError("a grid node lies on z = 0; offset the z-axes by half a cell")
    u = np.asarray(boundary(nodes), dtype=float).copy()
    Mrows, inner = assemble(A, V, lo, h, shape)
    is_inner = np.zeros(len(nodes), dtype=bool)
    is_inner[inner] = True
    M_II = Mrows[:, inner].tocsr()
    b = -(Mrows[:, ~is_inner] @ u[~is_inner])
    x, its, rel = pcg(M_II, b, tol, maxiter)
    u[inner] = x
    return GridSolution(dims, lo.copy(), h, u.reshape(shape),
                        f"dirichlet:{getattr(boundary, 'label', 'field')}", its, rel)


class GridField(SolutionField):
    """Multilinear interpolant of a :class:`GridSolution`."""

    def __init__(self, g: GridSolution):
        self.g = g
        self.dims = g.dims
        self.kappa = None
        self.exact_potential = None
        self.label = "grid"
        self._lo, self._h = g.lo, g.h
        self._n = np.array(g.shape)
        self._corners = np.array(np.meshgrid(*[[0, 1]] * self.dims.N, indexing="ij")).reshape(self.dims.N, -1).T

    def _locate(self, P):
        P = np.atleast_2d(as_points(P, self.dims))
        s = (P - self._lo) / self._h
        tol = 1e-9
        # snap to nodes so nodal values come back exactly
        sr = np.round(s)
        s = np.where(np.abs(s - sr) < tol, sr, s)
        if np.any(s < -tol) or np.any(s > self._n - 1 + tol):
            raise DomainError("evaluation outside the grid box")
        i = np.clip(np.floor(s).astype(int), 0, self._n - 2)
        return P, i, np.clip(s - i, 0.0, 1.0)

    def _weights(self, f):
        c = self._corners[None, :, :]
        fr = f[:, None, :]
        return np.where(c == 1, fr, 1.0 - fr)

    def _values(self, i):
        idx = i[:, None, :] + self._corners[None, :, :]
        return self.g.values[tuple(idx[..., a] for a in range(self.dims.N))]

    def __call__(self, P):
        single = np.ndim(P) == 1
        _, i, f = self._locate(P)
        out = np.sum(self._values(i) * np.prod(self._weights(f), axis=-1), axis=1)
        return out[0] if single else out

    def grad(self, P):
        single = np.ndim(P) == 1
        _, i, f = self._locate(P)
        vals = self._values(i)
        W = self._weights(f)
        sign = np.where(self._corners == 1, 1.0, -1.0)
        out = np.empty((len(f), self.dims.N))
        for a in range(self.dims.N):
            Wa = W.copy()
            Wa[..., a] = sign[None, :, a]
            out[:, a] = np.sum(vals * np.prod(Wa, axis=-1), axis=1) / self._h[a]
        return out[0] if single else out

    def bound_C0(self, R1=1.0):
        return float(np.max(np.abs(self.g.values)))


def grid_to_field(g: GridSolution) -> GridField:
    return GridField(g)


@dataclass
class ConvergenceStudy:
    sizes: list
    errors: list
    orders: list = field(default_factory=list)
    iterations: list = field(default_factory=list)

    @property
    def monotone(self) -> bool:
        return all(b < a for a, b in zip(self.errors, self.errors[1:]))


def convergence_study(u: SolutionField, sizes=(17, 33, 65), A: CoefficientField | None = None,
                      z_half: float = 0.6, t_half: float = 0.15) -> tuple[ConvergenceStudy, list]:
    """Solve with ``u`` as Dirichlet data and its exact potential; nodal sup errors per grid."""
    dims = u.dims
    V = u.exact_potential or ZeroPotential(dims)
    errs, its, grids = [], [], []
    for n in sizes:
        box, h = staggered_box(n, z_half, t_half, dims)
        g = solve_fd(A or IdentityField(dims), V, box, h, u)
        errs.append(float(np.max(np.abs(g.values.ravel() - u(g.nodes())))))
        its.append(g.iterations)
        grids.append(g)
    orders = [math.log(e0 / e1) / math.log((n1 - 1) / (n0 - 1)) if e1 > 0 else float("inf")
              for e0, e1, n0, n1 in zip(errs, errs[1:], sizes, sizes[1:])]
    return ConvergenceStudy(list(sizes), errs, orders, its), grids
