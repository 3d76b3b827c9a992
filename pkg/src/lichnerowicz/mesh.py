"""Weighted-graph discretizations of manifolds with boundary.

A domain is a graph whose nodes carry volumes ``v_i`` and whose edges carry
conductances ``w_ij``.  The discrete Laplacian is

    (Δu)_i = (1/v_i) Σ_j w_ij (u_j - u_i)

and the outward normal derivative at a boundary node with area ``s_i`` is
built from the same conductances, ``(Nu)_i = (1/s_i) Σ_j w_ij (u_i - u_j)``.
Boundary nodes are either ``BOUNDARY0`` (artificial Dirichlet frontier inside
the manifold) or ``BOUNDARY1`` (the manifold boundary carrying the nonlinear
Neumann condition).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import IntEnum
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components, dijkstra

from .errors import InvalidArgument

logger = logging.getLogger(__name__)

BOUNDARY_SCHEMES = ("balance", "flux")


class BoundaryClass(IntEnum):
    INTERIOR = 0
    BOUNDARY0 = 1
    BOUNDARY1 = 2

    @classmethod
    def parse(cls, value: "BoundaryClass | str | int") -> "BoundaryClass":
        if isinstance(value, BoundaryClass):
            return value
        if isinstance(value, (int, np.integer)):
            return cls(int(value))
        key = str(value).strip().lower()
        aliases = {
            "interior": cls.INTERIOR,
            "boundary0": cls.BOUNDARY0,
            "b0": cls.BOUNDARY0,
            "dirichlet": cls.BOUNDARY0,
            "boundary1": cls.BOUNDARY1,
            "b1": cls.BOUNDARY1,
            "neumann": cls.BOUNDARY1,
        }
        if key not in aliases:
            raise InvalidArgument(f"unknown boundary class {value!r}")
        return aliases[key]


@dataclass(frozen=True, eq=False)
class DiscreteDomain:
    """Immutable weighted-graph domain.

    Parameters
    ----------
    volumes : (n,) array
        Positive node volumes.
    weights : (n, n) sparse matrix
        Symmetric conductances with empty diagonal.
    classes : (n,) int array
        ``BoundaryClass`` value per node.
    areas : (n,) array
        Boundary area weights, positive exactly on boundary nodes.
    coords : (n, d) array, optional
        Node coordinates used for radii, CSV output and frontier areas.
    origin : (d,) array, optional
        Center used for the radial coordinate; defaults to zero.
    boundary_scheme : {"balance", "flux"}
        How the Neumann residual is discretized at ``BOUNDARY1`` nodes.
        ``"balance"`` closes the half-cell balance (second order);
        ``"flux"`` uses the bare flux stencil (first order).
    parent_nodes : (n,) int array, optional
        Node ids in the root domain this one was restricted from.
    """

    volumes: np.ndarray
    weights: sp.csr_matrix
    classes: np.ndarray
    areas: np.ndarray
    coords: np.ndarray | None = None
    origin: np.ndarray | None = None
    boundary_scheme: str = "balance"
    parent_nodes: np.ndarray | None = field(default=None)

    def __post_init__(self) -> None:
        vol = np.array(self.volumes, dtype=float)
        n = vol.shape[0]
        W = sp.csr_matrix(self.weights, dtype=float)
        W.sum_duplicates()
        W.eliminate_zeros()
        cls = np.array(self.classes, dtype=np.int8)
        areas = np.array(self.areas, dtype=float)
        if vol.ndim != 1 or n == 0:
            raise InvalidArgument("volumes must be a nonempty 1-D array")
        if W.shape != (n, n) or cls.shape != (n,) or areas.shape != (n,):
            raise InvalidArgument("volumes, weights, classes and areas disagree in size")
        if not np.all(np.isfinite(vol)) or np.any(vol <= 0):
            raise InvalidArgument("node volumes must be positive and finite")
        if W.nnz and (not np.all(np.isfinite(W.data)) or np.any(W.data <= 0)):
            raise InvalidArgument("edge conductances must be positive and finite")
        if W.diagonal().any():
            raise InvalidArgument("conductance matrix must have an empty diagonal")
        if abs(W - W.T).max() > 1e-14 * (1.0 + (abs(W).max() if W.nnz else 0.0)):
            raise InvalidArgument("conductances must be symmetric")
        if not np.all(np.isin(cls, [c.value for c in BoundaryClass])):
            raise InvalidArgument("unknown boundary class code")
        boundary = cls != BoundaryClass.INTERIOR
        if np.any(areas[boundary] <= 0) or not np.all(np.isfinite(areas)):
            raise InvalidArgument("boundary nodes need positive area weights")
        areas = np.where(boundary, areas, 0.0)
        degree = np.diff(W.indptr)
        if n > 1 and np.any(degree[boundary] == 0):
            bad = int(np.flatnonzero(boundary & (degree == 0))[0])
            raise InvalidArgument(f"boundary node {bad} has no neighbour", node=bad)
        active = np.flatnonzero(cls != BoundaryClass.BOUNDARY0)
        if active.size > 1:
            ncomp, _ = connected_components(W[active][:, active], directed=False)
            if ncomp != 1:
                raise InvalidArgument("interior and Boundary1 nodes must form a connected graph")
        if self.boundary_scheme not in BOUNDARY_SCHEMES:
            raise InvalidArgument(f"boundary_scheme must be one of {BOUNDARY_SCHEMES}")
        coords = None
        if self.coords is not None:
            coords = np.array(self.coords, dtype=float)
            if coords.ndim == 1:
                coords = coords[:, None]
            if coords.shape[0] != n:
                raise InvalidArgument("coordinate array does not match node count")
        origin = None
        if coords is not None:
            origin = np.zeros(coords.shape[1]) if self.origin is None else np.array(self.origin, float).reshape(-1)
        parent = np.arange(n) if self.parent_nodes is None else np.array(self.parent_nodes, dtype=np.int64)
        for arr in (vol, cls, areas, parent) + ((coords,) if coords is not None else ()):
            arr.setflags(write=False)
        W.data.setflags(write=False)
        object.__setattr__(self, "volumes", vol)
        object.__setattr__(self, "weights", W)
        object.__setattr__(self, "classes", cls)
        object.__setattr__(self, "areas", areas)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "parent_nodes", parent)

    @property
    def n(self) -> int:
        return int(self.volumes.shape[0])

    @cached_property
    def degree(self) -> np.ndarray:
        return np.asarray(self.weights.sum(axis=1)).ravel()

    @cached_property
    def interior(self) -> np.ndarray:
        return np.flatnonzero(self.classes == BoundaryClass.INTERIOR)

    @cached_property
    def boundary0(self) -> np.ndarray:
        return np.flatnonzero(self.classes == BoundaryClass.BOUNDARY0)

    @cached_property
    def boundary1(self) -> np.ndarray:
        return np.flatnonzero(self.classes == BoundaryClass.BOUNDARY1)

    @cached_property
    def free(self) -> np.ndarray:
        """Nodes whose value is an unknown (everything but ``BOUNDARY0``)."""
        return np.flatnonzero(self.classes != BoundaryClass.BOUNDARY0)

    @cached_property
    def boundary(self) -> np.ndarray:
        return np.flatnonzero(self.classes != BoundaryClass.INTERIOR)

    @cached_property
    def stiffness(self) -> sp.csr_matrix:
        """Graph Laplacian ``D - W`` (symmetric positive semidefinite)."""
        return (sp.diags(self.degree) - self.weights).tocsr()

    @cached_property
    def laplacian(self) -> sp.csr_matrix:
        """Matrix of the discrete Laplacian ``-(1/v) (D - W)``."""
        return (-sp.diags(1.0 / self.volumes) @ self.stiffness).tocsr()

    @cached_property
    def normal_stencil(self) -> sp.csr_matrix:
        """Flux stencil ``(1/s_i) Σ_j w_ij (u_i - u_j)``; zero rows off the boundary."""
        inv = np.zeros(self.n)
        b = self.boundary
        inv[b] = 1.0 / self.areas[b]
        return (sp.diags(inv) @ self.stiffness).tocsr()

    @cached_property
    def radius(self) -> np.ndarray:
        """Distance of each node from ``origin`` (node index if no coordinates)."""
        if self.coords is None:
            return np.arange(self.n, dtype=float)
        return np.linalg.norm(self.coords - self.origin, axis=1)

    def laplacian_of(self, u: np.ndarray) -> np.ndarray:
        return self.laplacian @ u

    def flux_derivative(self, u: np.ndarray) -> np.ndarray:
        return self.normal_stencil @ u

    def neighbors(self, i: int) -> np.ndarray:
        W = self.weights
        return W.indices[W.indptr[i]:W.indptr[i + 1]]

    def hop_distance(self, sources: np.ndarray) -> np.ndarray:
        """Graph (hop-count) distance from a node set; ``inf`` if unreachable."""
        src = _as_index(sources, self.n)
        if src.size == 0:
            return np.full(self.n, np.inf)
        adj = self.weights.copy()
        adj.data = np.ones_like(adj.data)
        return np.min(np.atleast_2d(dijkstra(adj, directed=False, indices=src, min_only=True)), axis=0)

    def dilate(self, nodes: np.ndarray, radius: int = 1) -> np.ndarray:
        """Indices of nodes within ``radius`` hops of ``nodes``."""
        return np.flatnonzero(self.hop_distance(nodes) <= radius)

    def with_scheme(self, scheme: str) -> "DiscreteDomain":
        return DiscreteDomain(self.volumes, self.weights, self.classes, self.areas,
                              self.coords, self.origin, scheme, self.parent_nodes)


def _as_index(nodes, n: int) -> np.ndarray:
    arr = np.asarray(nodes)
    if arr.dtype == bool:
        if arr.shape != (n,):
            raise InvalidArgument("boolean node mask has the wrong length")
        return np.flatnonzero(arr)
    idx = np.unique(arr.astype(np.int64).ravel())
    if idx.size and (idx[0] < 0 or idx[-1] >= n):
        raise InvalidArgument("node index out of range")
    return idx


def _path_domain(x: np.ndarray, edge_w: np.ndarray, vols: np.ndarray, end_areas: tuple[float, float],
                 end_classes: tuple[BoundaryClass, BoundaryClass], scheme: str) -> DiscreteDomain:
    n = x.size
    rows = np.arange(n - 1)
    W = sp.coo_matrix((np.r_[edge_w, edge_w], (np.r_[rows, rows + 1], np.r_[rows + 1, rows])), shape=(n, n))
    classes = np.zeros(n, dtype=np.int8)
    classes[0], classes[-1] = end_classes
    areas = np.zeros(n)
    areas[0], areas[-1] = end_areas
    return DiscreteDomain(vols, W.tocsr(), classes, areas, coords=x, boundary_scheme=scheme)


def build_interval_mesh(length: float, n: int, left_class="boundary0", right_class="boundary1",
                        boundary_scheme: str = "balance") -> DiscreteDomain:
    """Uniform grid on ``[0, length]`` with half cells at both ends.

    >>> d = build_interval_mesh(1.0, 3, "boundary0", "boundary1")
    >>> d.volumes.tolist()
    [0.25, 0.5, 0.25]
    """
    if int(n) != n or n < 3:
        raise InvalidArgument("interval mesh needs n >= 3 nodes")
    if not length > 0:
        raise InvalidArgument("interval length must be positive")
    left, right = BoundaryClass.parse(left_class), BoundaryClass.parse(right_class)
    if BoundaryClass.INTERIOR in (left, right):
        raise InvalidArgument("interval endpoints must be boundary nodes")
    n = int(n)
    x = np.linspace(0.0, float(length), n)
    h = length / (n - 1)
    vols = np.full(n, h)
    vols[[0, -1]] = h / 2
    return _path_domain(x, np.full(n - 1, 1.0 / h), vols, (1.0, 1.0), (left, right), boundary_scheme)


def _evaluate_warp(warp: Callable[[np.ndarray], np.ndarray], r: np.ndarray) -> np.ndarray:
    try:
        vals = np.asarray(warp(r), dtype=float)
        if vals.shape != r.shape:
            vals = np.broadcast_to(vals, r.shape).astype(float)
    except (TypeError, ValueError):
        vals = np.array([float(warp(t)) for t in r])
    if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
        bad = r[~(np.isfinite(vals) & (vals > 0))][0]
        raise InvalidArgument(f"warp must be positive on [r0, R]; got {vals[r == bad][0]} at r={bad}")
    return vals


def build_radial_mesh(r0: float, R: float, n: int, warp: Callable[[np.ndarray], np.ndarray], m: int,
                      boundary_scheme: str = "balance") -> DiscreteDomain:
    """Radial grid for the warped product ``dr² + warp(r)² g_sphere``.

    Conductances are ``warp(r_{i+1/2})^{m-1} / h`` and volumes integrate the
    density ``warp^{m-1}`` over each dual cell by the midpoint rule, so the
    graph Laplacian of a radial field approximates
    ``u'' + (m-1) warp'/warp u'``.  The sphere at ``r0`` is ``BOUNDARY1``
    and the outer sphere at ``R`` is ``BOUNDARY0``.  The common factor of the
    unit sphere's area is dropped from all weights.
    """
    if not 0 < r0 < R:
        raise InvalidArgument("radial mesh needs 0 < r0 < R")
    if int(m) != m or m < 2:
        raise InvalidArgument("dimension m must be an integer >= 2")
    if int(n) != n or n < 3:
        raise InvalidArgument("radial mesh needs n >= 3 nodes")
    n, m = int(n), int(m)
    r = np.linspace(float(r0), float(R), n)
    h = (R - r0) / (n - 1)
    mid = 0.5 * (r[:-1] + r[1:])
    dens = lambda t: _evaluate_warp(warp, t) ** (m - 1)
    edge_w = dens(mid) / h
    vols = dens(r) * h
    vols[0] = dens(np.array([r0 + h / 4]))[0] * h / 2
    vols[-1] = dens(np.array([R - h / 4]))[0] * h / 2
    ends = dens(np.array([r0, R]))
    return _path_domain(r, edge_w, vols, (ends[0], ends[1]),
                        (BoundaryClass.BOUNDARY1, BoundaryClass.BOUNDARY0), boundary_scheme)


def build_rectangle_mesh(lx: float, ly: float, nx: int, ny: int, sides: dict | None = None,
                         boundary_scheme: str = "balance") -> DiscreteDomain:
    """Structured finite-volume grid on ``[0, lx] x [0, ly]``.

    ``sides`` maps ``left``, ``right``, ``bottom``, ``top`` to a boundary
    class (default all ``BOUNDARY0``).  A corner is ``BOUNDARY0`` as soon as
    one of its two sides is.  Node ``(i, j)`` has index ``i + nx*j``.
    """
    if nx < 3 or ny < 3:
        raise InvalidArgument("rectangle mesh needs at least 3 nodes per direction")
    if not (lx > 0 and ly > 0):
        raise InvalidArgument("rectangle side lengths must be positive")
    sides = {k: BoundaryClass.parse(v) for k, v in (sides or {}).items()}
    unknown = set(sides) - {"left", "right", "bottom", "top"}
    if unknown:
        raise InvalidArgument(f"unknown rectangle sides {sorted(unknown)}")
    side = {k: sides.get(k, BoundaryClass.BOUNDARY0) for k in ("left", "right", "bottom", "top")}
    if BoundaryClass.INTERIOR in side.values():
        raise InvalidArgument("rectangle sides must be boundary classes")
    hx, hy = lx / (nx - 1), ly / (ny - 1)
    cx = np.full(nx, hx)
    cx[[0, -1]] = hx / 2
    cy = np.full(ny, hy)
    cy[[0, -1]] = hy / 2
    idx = np.arange(nx * ny).reshape(ny, nx)
    rows, cols, vals = [], [], []
    # horizontal faces have height cy[j], vertical faces width cx[i]
    a, b = idx[:, :-1].ravel(), idx[:, 1:].ravel()
    rows += [a, b]; cols += [b, a]; vals += [np.repeat(cy, nx - 1) / hx] * 2
    a, b = idx[:-1, :].ravel(), idx[1:, :].ravel()
    rows += [a, b]; cols += [b, a]; vals += [np.tile(cx, ny - 1) / hy] * 2
    n = nx * ny
    W = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)).tocsr()
    vols = np.outer(cy, cx).ravel()
    areas = np.zeros((ny, nx))
    classes = np.zeros((ny, nx), dtype=np.int8)
    masks = {
        "left": (slice(None), 0, cy[:, None]),
        "right": (slice(None), -1, cy[:, None]),
        "bottom": (0, slice(None), cx[None, :]),
        "top": (-1, slice(None), cx[None, :]),
    }
    for jj, ii, face in masks.values():
        areas[jj, ii] += np.squeeze(face)
    # B1 first, then B0 overrides at shared corners
    for name in ("left", "right", "bottom", "top"):
        jj, ii, _ = masks[name]
        if side[name] == BoundaryClass.BOUNDARY1:
            cur = classes[jj, ii]
            classes[jj, ii] = np.where(cur == 0, BoundaryClass.BOUNDARY1, cur)
    for name in ("left", "right", "bottom", "top"):
        jj, ii, _ = masks[name]
        if side[name] == BoundaryClass.BOUNDARY0:
            classes[jj, ii] = BoundaryClass.BOUNDARY0
    X, Y = np.meshgrid(np.linspace(0, lx, nx), np.linspace(0, ly, ny))
    coords = np.column_stack([X.ravel(), Y.ravel()])
    return DiscreteDomain(vols, W, classes.ravel(), areas.ravel(), coords=coords, boundary_scheme=boundary_scheme)


def restrict(domain: DiscreteDomain, subset) -> DiscreteDomain:
    """Induced subdomain on ``subset``.

    Nodes adjacent to excluded nodes become ``BOUNDARY0``.  This also applies
    to original ``BOUNDARY1`` nodes on the frontier, which keeps the free
    nodes of a subdomain free in every larger subdomain.  Elsewhere original
    classes are kept.  The area of a new frontier node is the total face area
    towards the removed nodes (``Σ w_ij |x_i - x_j|``).
    """
    idx = _as_index(subset, domain.n)
    if idx.size == 0:
        raise InvalidArgument("cannot restrict to an empty node set")
    if idx.size == domain.n:
        return domain
    W = domain.weights
    sub_w = W[idx][:, idx].tocsr()
    ncomp, _ = connected_components(sub_w, directed=False)
    if ncomp != 1:
        raise InvalidArgument("restriction subset must induce a connected subgraph")
    keep = np.zeros(domain.n, dtype=bool)
    keep[idx] = True
    removed = W[idx][:, ~keep].tocsr()
    if domain.coords is not None:
        coo = removed.tocoo()
        rem_cols = np.flatnonzero(~keep)[coo.col]
        dist = np.linalg.norm(domain.coords[idx][coo.row] - domain.coords[rem_cols], axis=1)
        face = np.bincount(coo.row, weights=coo.data * dist, minlength=idx.size)
    else:
        face = np.asarray(removed.sum(axis=1)).ravel()
    frontier = np.diff(removed.indptr) > 0
    classes = domain.classes[idx].copy()
    areas = domain.areas[idx].copy()
    classes[frontier] = BoundaryClass.BOUNDARY0
    areas[frontier] += face[frontier]
    if np.any(areas[frontier] <= 0):
        areas[frontier] = np.where(areas[frontier] > 0, areas[frontier], 1.0)
    coords = None if domain.coords is None else domain.coords[idx]
    return DiscreteDomain(domain.volumes[idx], sub_w, classes, areas, coords, domain.origin,
                          domain.boundary_scheme, domain.parent_nodes[idx])


@dataclass(frozen=True, eq=False)
class Exhaustion:
    """Strictly nested node sets ``Ω_1 ⊊ ... ⊊ Ω_N`` with ``Ω_N`` the whole domain."""

    domain: DiscreteDomain
    members: tuple[np.ndarray, ...]
    thresholds: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        members = tuple(_as_index(m, self.domain.n) for m in self.members)
        if not members:
            raise InvalidArgument("an exhaustion needs at least one member")
        if members[-1].size != self.domain.n:
            raise InvalidArgument("last exhaustion member must cover every node")
        b1 = np.zeros(self.domain.n, dtype=bool)
        b1[self.domain.boundary1] = True
        for k in range(len(members) - 1):
            small, big = members[k], members[k + 1]
            if small.size >= big.size or not np.all(np.isin(small, big)):
                raise InvalidArgument(f"exhaustion members {k} and {k + 1} are not strictly nested")
        for mem in members:
            mem.setflags(write=False)
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "thresholds", tuple(float(t) for t in self.thresholds))

    def __len__(self) -> int:
        return len(self.members)

    def subdomain(self, k: int) -> DiscreteDomain:
        return self._subdomains[k]

    @cached_property
    def _subdomains(self) -> tuple[DiscreteDomain, ...]:
        return tuple(restrict(self.domain, m) for m in self.members)

    def boundary1_of(self, k: int) -> np.ndarray:
        """Root node ids of the ``BOUNDARY1`` part of member ``k``."""
        sub = self.subdomain(k)
        return sub.parent_nodes[sub.boundary1]

    def boundary0_of(self, k: int) -> np.ndarray:
        sub = self.subdomain(k)
        return sub.parent_nodes[sub.boundary0]

    @classmethod
    def trivial(cls, domain: DiscreteDomain) -> "Exhaustion":
        return cls(domain, (np.arange(domain.n),))


def build_exhaustion(domain: DiscreteDomain, count: int, policy: str | Sequence[float] = "radius") -> Exhaustion:
    """Nested members cut by thresholds on the radial coordinate.

    ``policy`` is ``"radius"`` (thresholds ``k R / count``, ``R`` the largest
    radius), ``"shells"`` (``r_min + k (R - r_min) / count``) or an explicit
    increasing list of thresholds.  The last member is always the full
    domain.  ``count == 1`` returns the trivial one-member exhaustion.
    """
    if int(count) != count or count < 1:
        raise InvalidArgument("exhaustion count must be a positive integer")
    count = int(count)
    if count == 1:
        return Exhaustion.trivial(domain)
    r = domain.radius
    rmin, rmax = float(r.min()), float(r.max())
    if isinstance(policy, str):
        k = np.arange(1, count + 1)
        if policy == "radius":
            thr = k * rmax / count
        elif policy == "shells":
            thr = rmin + k * (rmax - rmin) / count
        else:
            raise InvalidArgument(f"unknown exhaustion policy {policy!r}")
    else:
        thr = np.asarray(policy, dtype=float)
        if thr.size != count:
            raise InvalidArgument("explicit thresholds must have `count` entries")
    thr = np.array(thr, dtype=float)
    thr[-1] = max(thr[-1], rmax)
    slack = 1e-12 * max(1.0, rmax)
    members = [np.flatnonzero(r <= t + slack) for t in thr]
    members[-1] = np.arange(domain.n)
    sizes = [m.size for m in members]
    if sizes[0] == 0 or any(a >= b for a, b in zip(sizes, sizes[1:])):
        raise InvalidArgument(f"domain has too few radial shells for {count} strictly nested members")
    return Exhaustion(domain, tuple(members), tuple(thr))
