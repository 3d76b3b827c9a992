"""First Zaremba (mixed) and Dirichlet eigenpairs of ``L = Δ + a``.

On a region the eigenproblem is the minimization of

    Q(u) = Σ_edges w_ij (u_i - u_j)² - Σ_i v_i a_i u_i²

over fields vanishing on the region's ``BOUNDARY0`` nodes, relative to
``‖u‖² = Σ v_i u_i²``.  Zaremba leaves ``BOUNDARY1`` nodes free, Dirichlet
pins them to zero too.  The symmetric form ``M^{-1/2} A M^{-1/2}`` on the free
nodes is a Z-matrix, so its first eigenvector is the unique positive one.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components

from .errors import InvalidArgument, NumericError
from .fields import ProblemSpec, as_field
from .mesh import BoundaryClass, DiscreteDomain, Exhaustion, restrict

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Eigenpair:
    """First eigenpair on a region.

    ``v`` is a field on the region's subdomain (``nodes`` maps it back to the
    parent domain); it is positive on free nodes, zero elsewhere, and
    normalized in the volume-weighted L² norm.
    """

    zeta: float
    v: np.ndarray
    residual_norm: float
    normalization: float
    nodes: np.ndarray
    domain: DiscreteDomain
    kind: str = "zaremba"

    def extended(self, n: int) -> np.ndarray:
        """``v`` extended by zero to the parent domain of size ``n``."""
        out = np.zeros(n)
        out[self.nodes] = self.v
        return out

    def sup_normalized(self) -> np.ndarray:
        return self.v / np.max(self.v)

    def rayleigh_quotient(self, a_local: np.ndarray) -> float:
        d, v = self.domain, self.v
        W = d.weights.tocoo()
        q = 0.5 * float(np.sum(W.data * (v[W.row] - v[W.col]) ** 2)) - float(np.sum(d.volumes * a_local * v * v))
        return q / float(np.sum(d.volumes * v * v))


def _region_nodes(domain: DiscreteDomain, region) -> np.ndarray:
    if region is None:
        return np.arange(domain.n)
    arr = np.asarray(region)
    if arr.dtype == bool:
        return np.flatnonzero(arr)
    return np.unique(arr.astype(np.int64))


def _symmetric_form(sub: DiscreteDomain, a_sub: np.ndarray, free: np.ndarray) -> sp.csr_matrix:
    K = sub.stiffness[free][:, free]
    A = K - sp.diags(sub.volumes[free] * a_sub[free])
    s = 1.0 / np.sqrt(sub.volumes[free])
    return (sp.diags(s) @ A @ sp.diags(s)).tocsr()


def _first_eigenpair(S: sp.csr_matrix, tol: float = 1e-12, max_iter: int = 5000) -> tuple[float, np.ndarray]:
    """Smallest eigenpair of a symmetric irreducible Z-matrix.

    Shift-invert power iteration from the constant vector with a Gershgorin
    lower bound as shift, then Rayleigh-quotient refinement.  The result is
    accepted only if the eigenvector is strictly positive.
    """
    n = S.shape[0]
    if n == 1:
        return float(S[0, 0]), np.ones(1)
    diag = S.diagonal()
    off = np.asarray(abs(S).sum(axis=1)).ravel() - np.abs(diag)
    scale = float(np.max(np.abs(diag) + off))
    shift = float(np.min(diag - off)) - 1e-3 * max(scale, 1.0)
    eye = sp.identity(n, format="csc")
    lu = spla.splu((S - shift * eye).tocsc())
    x = np.ones(n) / math.sqrt(n)
    rho = float(x @ (S @ x))
    stop = tol * max(scale, 1.0)
    for it in range(max_iter):
        y = lu.solve(x)
        x = y / np.linalg.norm(y)
        rho_new = float(x @ (S @ x))
        res = np.linalg.norm(S @ x - rho_new * x)
        if res <= stop:
            return rho_new, x
        gap_guess = abs(rho_new - shift)
        if abs(rho_new - rho) <= 1e-8 * (abs(rho_new) + gap_guess) and res <= 1e-4 * gap_guess:
            rho = rho_new
            break
        rho = rho_new
    x_fixed, rho_fixed = x.copy(), rho
    # Rayleigh-quotient refinement
    for _ in range(30):
        try:
            y = spla.splu((S - rho * eye).tocsc()).solve(x)
        except RuntimeError:
            break
        if not np.all(np.isfinite(y)):
            break
        x = y / np.linalg.norm(y)
        if x.sum() < 0:
            x = -x
        rho = float(x @ (S @ x))
        if np.linalg.norm(S @ x - rho * x) <= stop:
            break
    if np.min(x) > 0 and np.linalg.norm(S @ x - rho * x) <= stop * 10:
        return rho, x
    logger.debug("Rayleigh refinement left the positive cone; continuing fixed-shift iteration")
    x, rho = x_fixed, rho_fixed
    for _ in range(50 * max_iter):
        y = lu.solve(x)
        x = y / np.linalg.norm(y)
        rho = float(x @ (S @ x))
        if np.linalg.norm(S @ x - rho * x) <= stop:
            return rho, x
    raise NumericError("first eigenpair iteration did not converge", residual=float(np.linalg.norm(S @ x - rho * x)))


def _eigen(domain: DiscreteDomain, a, region, kind: str) -> Eigenpair:
    a = as_field(a, domain.n, "a")
    nodes = _region_nodes(domain, region)
    if nodes.size == 0:
        raise InvalidArgument("eigen region is empty")
    sub = restrict(domain, nodes)
    a_sub = a[nodes]
    allowed = [BoundaryClass.INTERIOR] if kind == "dirichlet" else [BoundaryClass.INTERIOR, BoundaryClass.BOUNDARY1]
    free = np.flatnonzero(np.isin(sub.classes, allowed))
    if free.size == 0:
        raise InvalidArgument("eigen region has no free node")
    ncomp, _ = connected_components(sub.weights[free][:, free], directed=False)
    if ncomp != 1:
        raise InvalidArgument("free nodes of the eigen region are disconnected")
    S = _symmetric_form(sub, a_sub, free)
    zeta, y = _first_eigenpair(S)
    if y.sum() < 0:
        y = -y
    if not np.min(y) > 0:
        raise NumericError("first eigenvector is not strictly positive", min_entry=float(np.min(y)))
    v = np.zeros(sub.n)
    v[free] = y / np.sqrt(sub.volumes[free])
    res = float(np.linalg.norm(S @ y - zeta * y))
    norm = float(np.sqrt(np.sum(sub.volumes * v * v)))
    if not res <= 1e-8:
        raise NumericError("eigen residual above 1e-8", residual=res)
    return Eigenpair(float(zeta), v, res, norm, nodes, sub, kind)


def zaremba_first(domain: DiscreteDomain, a, region=None) -> Eigenpair:
    """First eigenpair with Dirichlet on ``BOUNDARY0`` and Neumann on ``BOUNDARY1``."""
    return _eigen(domain, a, region, "zaremba")


def dirichlet_first(domain: DiscreteDomain, a, region=None) -> Eigenpair:
    """First eigenpair with every boundary node of the region pinned."""
    return _eigen(domain, a, region, "dirichlet")


@dataclass
class SetSpectrum:
    """Value of the first eigenvalue of a node set with the ladder audit."""

    value: float
    ladder_values: list[float] = field(default_factory=list)
    ladder_sizes: list[int] = field(default_factory=list)
    dirichlet_values: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"value": _num(self.value), "ladder_values": [_num(v) for v in self.ladder_values],
                "ladder_sizes": list(self.ladder_sizes),
                "dirichlet_values": [_num(v) for v in self.dirichlet_values]}


def _num(x: float):
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def default_ladder(domain: DiscreteDomain, B, radii=(1, 2, 3)) -> list[np.ndarray]:
    """Graph dilations of ``B``."""
    return [domain.dilate(B, r) for r in radii]


def zeta_of_bounded_set(domain: DiscreteDomain, a, B, ladder=None, with_dirichlet: bool = False) -> SetSpectrum:
    """First eigenvalue of a node set, as the max over a ladder of supersets.

    By domain monotonicity the smallest ladder member gives the max.  An
    empty ``B`` has value ``+inf``.
    """
    B = _region_nodes(domain, B)
    if B.size == 0:
        return SetSpectrum(math.inf)
    ladder = default_ladder(domain, B) if ladder is None else [_region_nodes(domain, m) for m in ladder]
    if not ladder:
        raise InvalidArgument("empty enlargement ladder")
    values, sizes, dvals = [], [], []
    prev = None
    for member in ladder:
        if not np.all(np.isin(B, member)):
            raise InvalidArgument("ladder member does not contain the set")
        if prev is not None and not np.all(np.isin(prev, member)):
            raise InvalidArgument("ladder is not ordered by inclusion")
        prev = member
        values.append(zaremba_first(domain, a, member).zeta)
        sizes.append(int(member.size))
        if with_dirichlet:
            try:
                dvals.append(dirichlet_first(domain, a, member).zeta)
            except InvalidArgument:
                dvals.append(math.nan)
    return SetSpectrum(max(values), values, sizes, dvals)


@dataclass
class SpectralReport:
    absorption: SetSpectrum
    source: SetSpectrum

    @property
    def absorption_ok(self) -> bool:
        return self.absorption.value > 0

    @property
    def source_ok(self) -> bool:
        return self.source.value > 0

    def to_dict(self) -> dict:
        return {"spectral_absorption_set": {"passed": self.absorption_ok, **self.absorption.to_dict()},
                "spectral_source_set": {"passed": self.source_ok, **self.source.to_dict()}}


def exhaustion_ladder(exhaustion: Exhaustion, B: np.ndarray) -> list[np.ndarray]:
    """Proper exhaustion members containing ``B``."""
    return [m for m in exhaustion.members[:-1] if np.all(np.isin(B, m))]


def verify_spectral_hypotheses(spec: ProblemSpec, ladders: dict | None = None,
                               exhaustion: Exhaustion | None = None) -> SpectralReport:
    """First eigenvalues of ``B₀`` under ``Δ + a`` and of ``C₀`` under ``Δ - a``.

    ``ladders`` may map ``"absorption"`` / ``"source"`` to explicit ladders.
    Otherwise graph dilations are used, or the proper exhaustion members
    containing the set if an exhaustion is given and dilations are not
    requested.
    """
    ladders = ladders or {}
    d = spec.domain
    out = []
    for key, nodes, a in (("absorption", spec.absorption_set, spec.a), ("source", spec.source_set, -spec.a)):
        ladder = ladders.get(key)
        if ladder is None and exhaustion is not None and nodes.size:
            ladder = exhaustion_ladder(exhaustion, nodes) or None
        out.append(zeta_of_bounded_set(d, a, nodes, ladder, with_dirichlet=True))
    return SpectralReport(*out)
