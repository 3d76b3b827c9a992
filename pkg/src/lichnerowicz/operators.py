"""Schrödinger operator, residuals and the shifted linear solve.

Boundary residuals at ``BOUNDARY1`` nodes follow the domain's
``boundary_scheme``.  With ``"balance"`` (default) the normal derivative is
closed by the half-cell balance,

    ∂_ν u ≈ (1/s_i) [ Σ_j w_ij (u_i - u_j) - v_i f(x_i, u_i) ],

which is the flux stencil corrected by the interior equation integrated over
the boundary cell.  It is second-order consistent and keeps every shifted
system an M-matrix.  ``"flux"`` drops the correction.
"""
from __future__ import annotations

import io
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import TextIO

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import InvalidArgument, NumericError
from .fields import ProblemSpec, as_field
from .mesh import BoundaryClass, DiscreteDomain

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SchrodingerOperator:
    """``L = Δ + a`` assembled as a sparse matrix acting on all nodes."""

    domain: DiscreteDomain
    a: np.ndarray

    @cached_property
    def matrix(self) -> sp.csr_matrix:
        return (self.domain.laplacian + sp.diags(self.a)).tocsr()

    @property
    def interior_rows(self) -> np.ndarray:
        return self.domain.interior

    @property
    def boundary0_rows(self) -> np.ndarray:
        return self.domain.boundary0

    @property
    def boundary1_rows(self) -> np.ndarray:
        return self.domain.boundary1

    def apply(self, u) -> np.ndarray:
        return self.matrix @ np.asarray(u, dtype=float)

    def __matmul__(self, u):
        return self.apply(u)

    def normal_derivative(self, u, source=None) -> np.ndarray:
        """Normal derivative at every boundary node (zero elsewhere).

        ``source`` is the zeroth-order part of the interior equation at the
        nodes (e.g. ``f(x, u)``); the balance scheme subtracts
        ``(v/s) * source`` at ``BOUNDARY1`` nodes.  ``BOUNDARY0`` nodes always
        use the flux stencil.
        """
        return normal_derivative(self.domain, u, source)

    def dump_coo(self, target: str | TextIO) -> None:
        """Write ``row col value`` lines of the assembled matrix."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        buf = io.StringIO()
        buf.write(f"# n={self.domain.n} nnz={coo.nnz}\n")
        for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            buf.write(f"{r} {c} {float(v)!r}\n")
        if isinstance(target, str):
            from .io import atomic_write_text

            atomic_write_text(target, buf.getvalue())
        else:
            target.write(buf.getvalue())


def assemble_schrodinger(domain: DiscreteDomain, a) -> SchrodingerOperator:
    a = as_field(a, domain.n, "a")
    if domain.weights.nnz and np.any(domain.weights.data <= 0):
        raise InvalidArgument("nonpositive conductance: discrete maximum principle would fail")
    a.setflags(write=False)
    return SchrodingerOperator(domain, a)


def normal_derivative(domain: DiscreteDomain, u, source=None) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    nd = domain.flux_derivative(u)
    if source is not None and domain.boundary_scheme == "balance":
        b1 = domain.boundary1
        nd[b1] -= domain.volumes[b1] / domain.areas[b1] * np.asarray(source, dtype=float)[b1]
    return nd


@dataclass(frozen=True)
class ResidualPair:
    """Interior residual on ``Interior`` nodes and boundary residual on ``BOUNDARY1`` nodes."""

    interior_nodes: np.ndarray
    interior: np.ndarray
    boundary_nodes: np.ndarray
    boundary: np.ndarray

    @property
    def interior_sup(self) -> float:
        return float(np.max(np.abs(self.interior))) if self.interior.size else 0.0

    @property
    def boundary_sup(self) -> float:
        return float(np.max(np.abs(self.boundary))) if self.boundary.size else 0.0

    @property
    def sup(self) -> float:
        return max(self.interior_sup, self.boundary_sup)

    def interior_extreme(self, kind: str) -> tuple[float, int | None]:
        return _extreme(self.interior, self.interior_nodes, kind)

    def boundary_extreme(self, kind: str) -> tuple[float, int | None]:
        return _extreme(self.boundary, self.boundary_nodes, kind)

    def is_supersolution(self, tol: float) -> bool:
        return bool(np.all(self.interior <= tol) and np.all(self.boundary >= -tol))

    def is_subsolution(self, tol: float) -> bool:
        return bool(np.all(self.interior >= -tol) and np.all(self.boundary <= tol))

    def to_dict(self) -> dict:
        imax, inode = self.interior_extreme("max")
        imin, _ = self.interior_extreme("min")
        bmax, _ = self.boundary_extreme("max")
        bmin, bnode = self.boundary_extreme("min")
        return {"interior_sup": self.interior_sup, "boundary_sup": self.boundary_sup,
                "interior_max": imax, "interior_min": imin, "boundary_max": bmax, "boundary_min": bmin}


def _extreme(vals: np.ndarray, nodes: np.ndarray, kind: str):
    if vals.size == 0:
        return 0.0, None
    j = int(np.argmax(vals) if kind == "max" else np.argmin(vals))
    return float(vals[j]), int(nodes[j])


def residual_from_parts(domain: DiscreteDomain, u, f_values, g_values) -> ResidualPair:
    """Residual given precomputed ``f(x, u)`` and ``g(x, u)`` at every node."""
    u = np.asarray(u, dtype=float)
    f_values = np.asarray(f_values, dtype=float)
    lap = domain.laplacian_of(u)
    it = domain.interior
    b1 = domain.boundary1
    interior = lap[it] + f_values[it]
    nd = normal_derivative(domain, u, f_values)
    boundary = nd[b1] - np.asarray(g_values, dtype=float)[b1]
    return ResidualPair(it, interior, b1, boundary)


def residual(spec, u) -> ResidualPair:
    """Residual of the semilinear problem ``spec`` at the positive field ``u``.

    ``spec`` is any object with a ``domain`` and ``f(u)``, ``boundary_g(u)``
    methods, e.g. a ``ProblemSpec``.
    """
    f_values = spec.f(u)
    g_values = spec.boundary_g(u)
    return residual_from_parts(spec.domain, u, f_values, g_values)


def certificate_tolerance(*fields: np.ndarray, scale: float = 1e-9) -> float:
    """``scale * (1 + Σ sup-norms)``."""
    return scale * (1.0 + sum(float(np.max(np.abs(f))) for f in fields))


class ShiftedSolver:
    """Factorized shifted system of the monotone step.

    Solves for ``v`` with

    * ``(Δ + a - H) v = -F`` at interior nodes,
    * ``∂_ν v + K v = G`` at ``BOUNDARY1`` nodes, where under the balance
      scheme ``∂_ν v`` is closed with the source ``(a - H) v + F``,
    * ``v = d`` at ``BOUNDARY0`` nodes.

    ``H`` and ``K`` may be scalars or per-node arrays; ``H ≥ a`` and ``K ≥ 0``
    make the reduced matrix an M-matrix.
    """

    def __init__(self, domain: DiscreteDomain, a, H=0.0, K=0.0, method: str = "direct") -> None:
        n = domain.n
        self.domain = domain
        self.a = as_field(a, n, "a")
        self.H = np.broadcast_to(np.asarray(H, dtype=float), (n,)).copy()
        self.K = np.broadcast_to(np.asarray(K, dtype=float), (n,)).copy()
        if np.any(self.H < 0) or np.any(self.K < 0) or not (np.all(np.isfinite(self.H)) and np.all(np.isfinite(self.K))):
            raise InvalidArgument("shifts H and K must be finite and nonnegative")
        if method not in ("direct", "gmres"):
            raise InvalidArgument(f"unknown linear solver {method!r}")
        self.method = method
        free = domain.free
        self.free = free
        self.fixed = domain.boundary0
        vol, area = domain.volumes, domain.areas
        b1 = domain.classes == BoundaryClass.BOUNDARY1
        balance = domain.boundary_scheme == "balance"
        # row scaling: 1/v at interior rows, 1/s at Boundary1 rows
        scale = np.where(b1, 1.0 / np.where(b1, area, 1.0), 1.0 / vol)
        zeroth = np.where(b1, 0.0, self.H - self.a)
        if balance:
            zeroth = np.where(b1, vol / np.where(b1, area, 1.0) * (self.H - self.a), zeroth)
        zeroth = zeroth + np.where(b1, self.K, 0.0)
        self.rhs_weight = np.where(b1, vol / np.where(b1, area, 1.0) if balance else 0.0, 1.0)
        self.g_weight = b1.astype(float)
        full = sp.diags(scale) @ domain.stiffness + sp.diags(zeroth)
        full = full.tocsr()
        self.matrix = full[free][:, free].tocsc()
        self.coupling = full[free][:, self.fixed].tocsr()
        self._lu = None
        self._precond = None
        self._amplification = None
        if free.size == 0:
            return
        row_abs = np.asarray(abs(self.matrix).sum(axis=1)).ravel()
        dominance = 2.0 * np.abs(self.matrix.diagonal()) - row_abs
        self.dominance_margin = float(dominance.min())
        slack = 1e-12 * row_abs
        if np.all(dominance >= -slack) and not np.any(dominance > slack):
            # weakly dominant Z-matrix with no strictly dominant row: constants lie in the kernel
            raise NumericError("shifted system is singular: no Dirichlet node and zero shifts",
                               min_diagonal_dominance=self.dominance_margin)
        try:
            if method == "direct":
                self._lu = spla.splu(self.matrix)
            else:
                ilu = spla.spilu(self.matrix, drop_tol=1e-6, fill_factor=10)
                self._precond = spla.LinearOperator(self.matrix.shape, ilu.solve)
        except RuntimeError as exc:
            raise NumericError("shifted system is singular", diagnostic=str(exc),
                               min_diagonal_dominance=self.dominance_margin) from exc

    def solve(self, interior_rhs, boundary_rhs=0.0, dirichlet_values=0.0) -> np.ndarray:
        domain = self.domain
        n = domain.n
        F = np.broadcast_to(np.asarray(interior_rhs, dtype=float), (n,))
        G = np.broadcast_to(np.asarray(boundary_rhs, dtype=float), (n,))
        d = np.asarray(dirichlet_values, dtype=float)
        if d.ndim == 0:
            d = np.full(self.fixed.size, float(d))
        elif d.shape == (n,):
            d = d[self.fixed]
        elif d.shape != (self.fixed.size,):
            raise InvalidArgument("dirichlet_values must cover every Boundary0 node")
        v = np.zeros(n)
        v[self.fixed] = d
        if self.free.size == 0:
            return v
        rhs = (self.rhs_weight * F + self.g_weight * G)[self.free] - self.coupling @ d
        if not np.all(np.isfinite(rhs)):
            raise NumericError("non-finite right-hand side in shifted solve")
        if self._lu is not None:
            x = self._lu.solve(rhs)
        else:
            x, info = spla.gmres(self.matrix, rhs, rtol=1e-13, atol=0.0, maxiter=1000, M=self._precond)
            if info != 0:
                raise NumericError("iterative shifted solve did not converge", info=int(info))
        res = np.max(np.abs(self.matrix @ x - rhs)) if x.size else 0.0
        scale = float(abs(self.matrix).sum(axis=1).max()) * float(np.max(np.abs(x), initial=0.0)) \
            + float(np.max(np.abs(rhs), initial=0.0))
        if not np.all(np.isfinite(x)) or res > 1e-10 * max(scale, 1e-300):
            raise NumericError("shifted solve residual too large", relative_residual=float(res / max(scale, 1e-300)),
                               min_diagonal_dominance=self.dominance_margin)
        v[self.free] = x
        return v

    @property
    def amplification(self) -> float:
        """``max A⁻¹ |A| 1`` over the free block, a bound on relative roundoff growth.

        ``A`` is an M-matrix, so ``A⁻¹ ≥ 0`` and one solve gives the exact sup.
        """
        if self._amplification is None:
            if self.free.size == 0:
                self._amplification = 1.0
            else:
                row_abs = np.asarray(abs(self.matrix).sum(axis=1)).ravel()
                if self._lu is not None:
                    z = self._lu.solve(row_abs)
                else:
                    z, _ = spla.gmres(self.matrix, row_abs, rtol=1e-8, atol=0.0, maxiter=1000, M=self._precond)
                self._amplification = float(max(1.0, np.max(np.abs(z))))
        return self._amplification


def solve_shifted(domain: DiscreteDomain, a, H, K, interior_rhs, boundary_rhs, dirichlet_values,
                  method: str = "direct") -> np.ndarray:
    """One-shot version of :class:`ShiftedSolver`."""
    return ShiftedSolver(domain, a, H, K, method).solve(interior_rhs, boundary_rhs, dirichlet_values)
