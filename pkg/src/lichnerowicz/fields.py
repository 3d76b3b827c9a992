"""Coefficient fields, boundary nonlinearities and the problem specification.

The interior nonlinearity is ``f(x, u) = a u - b_θ u^σ + c u^τ`` with
``b_θ = b₊ - θ b₋``; the boundary relation is ``∂_ν u = g(x, u)``.
Scalar fields are plain ``float64`` arrays with one entry per node.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, InvalidArgument
from .mesh import DiscreteDomain, Exhaustion

PASS, FAIL, UNVERIFIED = "pass", "fail", "unverified"


def as_field(values, n: int, name: str = "field") -> np.ndarray:
    """Broadcast a scalar or array to a finite length-``n`` float array."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        arr = np.full(n, float(arr))
    if arr.shape != (n,):
        raise InvalidArgument(f"{name} has length {arr.size}, expected {n}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgument(f"{name} contains non-finite values")
    return arr.copy()


def positive_part(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def negative_part(x: np.ndarray) -> np.ndarray:
    return np.maximum(-x, 0.0)


def b_theta(b, theta: float) -> np.ndarray:
    """``b₊ - θ b₋``.

    >>> b_theta(np.array([1.0, -2.0]), 0.5).tolist()
    [1.0, -1.0]
    """
    if not 0.0 < theta <= 1.0:
        raise InvalidArgument(f"theta must lie in (0, 1], got {theta}")
    b = np.asarray(b, dtype=float)
    if theta == 1.0:
        return b.copy()
    return positive_part(b) - theta * negative_part(b)


@dataclass(frozen=True)
class Exponents:
    sigma: float
    tau: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.sigma) and math.isfinite(self.tau)):
            raise InvalidArgument("exponents must be finite")
        if not self.tau < 1.0 < self.sigma:
            raise InvalidArgument(f"exponents must satisfy tau < 1 < sigma, got tau={self.tau}, sigma={self.sigma}")

    def dual(self) -> "Exponents":
        return Exponents(2.0 - self.tau, 2.0 - self.sigma)


class BoundaryNonlinearity:
    """Interface for ``g(x, t)``; ``t`` must be positive."""

    n: int

    def at(self, nodes: np.ndarray, t: np.ndarray) -> np.ndarray:
        """Evaluate at ``nodes`` with ``t`` broadcastable to ``nodes``' shape."""
        raise NotImplementedError

    def __call__(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return self.at(np.arange(self.n), u)

    def dual(self) -> "BoundaryNonlinearity":
        raise NotImplementedError

    def restrict(self, nodes: np.ndarray) -> "BoundaryNonlinearity":
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class PowerSum(BoundaryNonlinearity):
    """``g(x, t) = Σ_i g_i(x) t^{q_i}`` with strictly increasing ``q_i``."""

    coefficients: tuple[np.ndarray, ...]
    powers: tuple[float, ...]

    def __post_init__(self) -> None:
        coefs = tuple(np.array(c, dtype=float) for c in self.coefficients)
        powers = tuple(float(q) for q in self.powers)
        if len(coefs) != len(powers):
            raise InvalidArgument("one coefficient field per exponent is required")
        if coefs and len({c.shape for c in coefs}) != 1:
            raise InvalidArgument("coefficient fields must share one length")
        if any(not math.isfinite(q) for q in powers) or any(b <= a for a, b in zip(powers, powers[1:])):
            raise InvalidArgument("PowerSum exponents must be finite and strictly increasing")
        for c in coefs:
            if c.ndim != 1 or not np.all(np.isfinite(c)):
                raise InvalidArgument("PowerSum coefficients must be finite 1-D fields")
            c.setflags(write=False)
        object.__setattr__(self, "coefficients", coefs)
        object.__setattr__(self, "powers", powers)

    @classmethod
    def from_terms(cls, terms: Sequence[tuple[object, float]], n: int) -> "PowerSum":
        """Build from ``(coefficient, exponent)`` pairs in any order."""
        terms = sorted(((as_field(c, n, "g coefficient"), float(q)) for c, q in terms), key=lambda t: t[1])
        return cls(tuple(c for c, _ in terms), tuple(q for _, q in terms))

    @classmethod
    def zero(cls, n: int) -> "PowerSum":
        return cls((np.zeros(n),), (1.0,))

    @property
    def n(self) -> int:  # type: ignore[override]
        return int(self.coefficients[0].size) if self.coefficients else 0

    @property
    def terms(self) -> list[tuple[np.ndarray, float]]:
        return list(zip(self.coefficients, self.powers))

    def at(self, nodes, t):
        nodes = np.asarray(nodes)
        t = np.asarray(t, dtype=float)
        out = np.zeros(np.broadcast_shapes(t.shape, nodes.shape))
        for c, q in self.terms:
            out += c[nodes] * t ** q
        return out

    def ratio_slope(self, nodes, t):
        """Exact ``d/dt (g/t) = Σ (q_i - 1) g_i t^{q_i - 2}``."""
        nodes = np.asarray(nodes)
        t = np.asarray(t, dtype=float)
        out = np.zeros(np.broadcast_shapes(t.shape, nodes.shape))
        for c, q in self.terms:
            out += (q - 1.0) * c[nodes] * t ** (q - 2.0)
        return out

    def dual(self) -> "PowerSum":
        # -t² Σ g_i t^{-q_i} = Σ (-g_i) t^{2 - q_i}; exponents reverse order
        return PowerSum(tuple(-c for c in reversed(self.coefficients)),
                        tuple(2.0 - q for q in reversed(self.powers)))

    def restrict(self, nodes) -> "PowerSum":
        nodes = np.asarray(nodes)
        return PowerSum(tuple(c[nodes] for c in self.coefficients), self.powers)


@dataclass(frozen=True, eq=False)
class Tabulated(BoundaryNonlinearity):
    """User-supplied ``g(x, t)`` through ``func(node_ids, t) -> values``.

    ``func`` must be vectorized over broadcast arrays.  ``node_map`` keeps
    the original node ids after restriction.
    """

    func: Callable[[np.ndarray, np.ndarray], np.ndarray]
    n: int
    node_map: np.ndarray | None = None

    def __post_init__(self) -> None:
        nm = np.arange(self.n) if self.node_map is None else np.asarray(self.node_map, dtype=np.int64)
        if nm.shape != (self.n,):
            raise InvalidArgument("node_map length must equal n")
        object.__setattr__(self, "node_map", nm)

    def at(self, nodes, t):
        nodes = np.asarray(nodes)
        t = np.asarray(t, dtype=float)
        shape = np.broadcast_shapes(t.shape, nodes.shape)
        vals = np.asarray(self.func(np.broadcast_to(self.node_map[nodes], shape), np.broadcast_to(t, shape)), dtype=float)
        return np.broadcast_to(vals, shape).copy()

    def dual(self) -> "Tabulated":
        base = self.func

        def dual_func(x, t):
            return -(t ** 2) * np.asarray(base(x, 1.0 / t), dtype=float)

        return Tabulated(dual_func, self.n, self.node_map)

    def restrict(self, nodes) -> "Tabulated":
        nodes = np.asarray(nodes)
        return Tabulated(self.func, int(nodes.size), self.node_map[nodes])


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """Full data of ``Δu + a u - b_θ u^σ + c u^τ = 0``, ``∂_ν u = g(x, u)``."""

    domain: DiscreteDomain
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    exponents: Exponents
    g: BoundaryNonlinearity = field(default=None)  # type: ignore[assignment]
    theta: float = 1.0

    def __post_init__(self) -> None:
        n = self.domain.n
        a = as_field(self.a, n, "a")
        b = as_field(self.b, n, "b")
        c = as_field(self.c, n, "c")
        if np.any(c < 0):
            bad = int(np.flatnonzero(c < 0)[0])
            raise InvalidArgument(f"c must be nonnegative (c={c[bad]} at node {bad})", node=bad)
        if not 0.0 < self.theta <= 1.0:
            raise InvalidArgument(f"theta must lie in (0, 1], got {self.theta}")
        g = PowerSum.zero(n) if self.g is None else self.g
        if g.n != n:
            raise InvalidArgument("boundary nonlinearity does not match the domain size")
        for arr in (a, b, c):
            arr.setflags(write=False)
        bt = b_theta(b, self.theta)
        bt.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "_b_theta", bt)

    @property
    def sigma(self) -> float:
        return self.exponents.sigma

    @property
    def tau(self) -> float:
        return self.exponents.tau

    @property
    def b_theta(self) -> np.ndarray:
        return self._b_theta  # type: ignore[attr-defined]

    @property
    def absorption_set(self) -> np.ndarray:
        """``B₀ = {b ≤ 0}`` as node indices."""
        return np.flatnonzero(self.b <= 0)

    @property
    def source_set(self) -> np.ndarray:
        """``C₀ = {c = 0}`` as node indices."""
        return np.flatnonzero(self.c == 0)

    def _check_positive(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if u.shape != (self.domain.n,):
            raise InvalidArgument(f"field has length {u.size}, expected {self.domain.n}")
        bad = np.flatnonzero(~(u > 0))
        if bad.size:
            raise DomainError(f"field must be positive; u={u[bad[0]]} at node {bad[0]}", node=int(bad[0]))
        return u

    def f(self, u) -> np.ndarray:
        u = self._check_positive(u)
        return self.f_at(np.arange(self.domain.n), u)

    def f_at(self, nodes, t) -> np.ndarray:
        """``f(x, t)`` at ``nodes`` for values ``t`` broadcastable to them."""
        t = np.asarray(t, dtype=float)
        out = self.a[nodes] * t - self.b_theta[nodes] * t ** self.sigma
        c = self.c[nodes]
        return out + np.where(c != 0, c * t ** self.tau, 0.0)

    def boundary_g(self, u) -> np.ndarray:
        u = self._check_positive(u)
        return self.g(u)

    def g_at(self, nodes, t) -> np.ndarray:
        return self.g.at(nodes, t)

    def with_theta(self, theta: float) -> "ProblemSpec":
        return replace(self, theta=float(theta))

    def with_absorption_plus(self) -> "ProblemSpec":
        """Same problem with ``b`` replaced by ``b₊``."""
        return replace(self, b=positive_part(self.b), theta=1.0)

    def restrict(self, nodes, subdomain: DiscreteDomain) -> "ProblemSpec":
        """Restrict coefficient data to ``nodes`` (indices into this domain)."""
        nodes = np.asarray(nodes)
        if nodes.size != subdomain.n:
            raise InvalidArgument("subdomain size does not match the node selection")
        return ProblemSpec(subdomain, self.a[nodes], self.b[nodes], self.c[nodes], self.exponents,
                           self.g.restrict(nodes), self.theta)


def dual_problem(spec: ProblemSpec) -> ProblemSpec:
    """Reciprocal-transformed problem: positive supersolutions ``v`` of it give
    subsolutions ``1/v`` of the ``b₊`` version of ``spec``."""
    return ProblemSpec(spec.domain, -spec.a, spec.c, positive_part(spec.b), spec.exponents.dual(),
                       spec.g.dual(), 1.0)


# ---------------------------------------------------------------------------
# condition checkers


@dataclass
class ConditionResult:
    status: str
    heuristic: bool = False
    witness: object = None
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def to_dict(self) -> dict:
        return {"status": self.status, "heuristic": self.heuristic, "witness": _plain(self.witness),
                "detail": self.detail}


def _plain(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    return x


@dataclass
class DefocusingReport:
    """Sign and dominance checks of a power-sum nonlinearity.

    Term indices ``k``, ``h`` and the witness of a failed sign condition are
    1-based, matching the ``g_1, …, g_ν`` numbering by increasing exponent.
    """

    sign_condition: bool
    sign_witness: tuple[int, int] | None
    superlinear_dominance: bool
    k: int | None
    ratio_sup_k: dict[int, float]
    sublinear_dominance: bool
    h: int | None
    ratio_sup_h: dict[int, float]
    offending_node: int | None = None
    detail: str = ""

    @property
    def strongly_defocusing(self) -> bool:
        return self.sign_condition and self.superlinear_dominance and self.sublinear_dominance

    def to_dict(self) -> dict:
        return _plain({
            "sign_condition": self.sign_condition, "sign_witness": self.sign_witness,
            "superlinear_dominance": self.superlinear_dominance, "k": self.k,
            "ratio_sup_k": {str(i): v for i, v in self.ratio_sup_k.items()},
            "sublinear_dominance": self.sublinear_dominance, "h": self.h,
            "ratio_sup_h": {str(i): v for i, v in self.ratio_sup_h.items()},
            "offending_node": self.offending_node, "strongly_defocusing": self.strongly_defocusing,
            "detail": self.detail,
        })


def _dominance(g: PowerSum, nodes: np.ndarray, candidates: list[int], others: list[int]):
    """First candidate term nonvanishing on ``nodes``; sup of |g_i / g_k|."""
    offending = None
    for k in candidates:
        gk = g.coefficients[k][nodes]
        zero = np.flatnonzero(gk == 0)
        if zero.size:
            if offending is None:
                offending = int(nodes[zero[0]])
            continue
        sups = {i + 1: float(np.max(np.abs(g.coefficients[i][nodes] / gk))) if nodes.size else 0.0
                for i in others}
        return k + 1, sups, None
    return None, {}, offending


def check_defocusing(g: PowerSum, nodes=None) -> DefocusingReport:
    """Check the strong-defocusing conditions of a power sum on boundary ``nodes``.

    The three checks are: every term satisfies ``(q_i - 1) g_i ≤ 0``; some term
    with ``q_k > 1`` is nowhere zero and dominates all terms with ``q_i ≤ 1``;
    some term with ``q_h < 1`` is nowhere zero and dominates all terms with
    ``q_i ≥ 1``.
    """
    if not isinstance(g, PowerSum):
        raise InvalidArgument("defocusing conditions are defined for power sums only")
    nodes = np.arange(g.n) if nodes is None else np.asarray(nodes, dtype=np.int64)
    sign_ok, witness = True, None
    for i, (c, q) in enumerate(g.terms):
        prod = (q - 1.0) * c[nodes]
        bad = np.flatnonzero(prod > 0)
        if bad.size:
            sign_ok, witness = False, (i + 1, int(nodes[bad[0]]))
            break
    q = np.array(g.powers)
    sup_terms = [i for i in range(q.size) if q[i] > 1]
    low_terms = [i for i in range(q.size) if q[i] <= 1]
    k, sup_k, off_k = _dominance(g, nodes, sup_terms, low_terms)
    sub_terms = [i for i in range(q.size) if q[i] < 1]
    high_terms = [i for i in range(q.size) if q[i] >= 1]
    h, sup_h, off_h = _dominance(g, nodes, sub_terms, high_terms)
    notes = []
    if not sup_terms:
        notes.append("no term with exponent > 1")
    elif k is None:
        notes.append(f"every term with exponent > 1 vanishes somewhere (node {off_k})")
    if not sub_terms:
        notes.append("no term with exponent < 1")
    elif h is None:
        notes.append(f"every term with exponent < 1 vanishes somewhere (node {off_h})")
    return DefocusingReport(sign_ok, witness, k is not None, k, sup_k, h is not None, h, sup_h,
                            off_k if k is None and off_k is not None else off_h if h is None else None,
                            "; ".join(notes))


@dataclass
class GConditionReport:
    conditions: dict[str, ConditionResult]
    omega_bar: float | None
    gamma_bar: float | None

    @property
    def all_pass(self) -> bool:
        return all(r.passed for r in self.conditions.values())

    @property
    def heuristic(self) -> bool:
        return any(r.heuristic for r in self.conditions.values())

    def to_dict(self) -> dict:
        return {"conditions": {k: v.to_dict() for k, v in self.conditions.items()},
                "omega_bar": self.omega_bar, "gamma_bar": self.gamma_bar, "all_pass": self.all_pass}


DEFAULT_T_GRID = np.logspace(-3, 3, 61)


def _refine_root(func: Callable[[float], float], lo: float, hi: float, iters: int = 80) -> float:
    """Bisection in log t for a sign change of ``func`` between ``lo`` and ``hi``."""
    flo = func(lo)
    for _ in range(iters):
        mid = math.sqrt(lo * hi)
        fm = func(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi / lo - 1 < 1e-14:
            break
    return hi


def _powersum_limit(g: PowerSum, nodes: np.ndarray, at_zero: bool) -> tuple[bool, int | None]:
    """Exact limit of ``g/t`` as ``t → 0`` (``+∞`` wanted) or ``t → ∞`` (``-∞`` wanted)."""
    order = list(range(len(g.powers)))
    if not at_zero:
        order.reverse()
    for node in nodes:
        ok = False
        for i in order:
            c = g.coefficients[i][node]
            if c != 0:
                q = g.powers[i]
                ok = (q < 1 and c > 0) if at_zero else (q > 1 and c < 0)
                break
        if not ok:
            return False, int(node)
    return True, None


def check_g_conditions(g: BoundaryNonlinearity, t_grid=None, nodes=None) -> GConditionReport:
    """Sampled check of the boundary growth conditions and of ``g/t`` monotonicity.

    Conditions reported:

    ``boundary_positive_near_zero``
        ``g(x, ω) ≥ 0`` for all ``0 < ω ≤ ω̄``; witness ``ω̄``.
    ``boundary_negative_at_infinity``
        ``g(x, γ) ≤ 0`` for all ``γ ≥ γ̄``; witness ``γ̄``.
    ``boundary_superlinear_at_zero``
        ``g(x, s)/s → +∞`` as ``s → 0⁺``.
    ``boundary_sublinear_at_infinity``
        ``g(x, t)/t → -∞`` as ``t → ∞``.
    ``boundary_ratio_monotone``
        ``t ↦ g(x, t)/t`` non-increasing on consecutive grid pairs.

    Limits of power sums are decided from the leading terms exactly; for
    tabulated ``g`` they are extrapolated from the samples and flagged
    ``heuristic``.  Witnesses of power sums with a monotone ratio are
    refined by bisection and are then exact.
    """
    t = np.asarray(DEFAULT_T_GRID if t_grid is None else t_grid, dtype=float)
    if t.ndim != 1 or t.size < 2 or np.any(t <= 0) or np.any(np.diff(t) <= 0):
        raise InvalidArgument("t_grid must be a strictly increasing positive sequence")
    nodes = np.arange(g.n) if nodes is None else np.asarray(nodes, dtype=np.int64)
    conds: dict[str, ConditionResult] = {}
    if nodes.size == 0:
        for name in ("boundary_positive_near_zero", "boundary_negative_at_infinity",
                     "boundary_superlinear_at_zero", "boundary_sublinear_at_infinity",
                     "boundary_ratio_monotone"):
            conds[name] = ConditionResult(PASS, detail="vacuous: no boundary nodes")
        return GConditionReport(conds, None, None)
    vals = g.at(nodes[None, :], t[:, None])
    if not np.all(np.isfinite(vals)):
        raise InvalidArgument("boundary nonlinearity is not finite on the sample grid")
    ratio = vals / t[:, None]
    # monotonicity of g/t on consecutive pairs
    tol = 1e-12 * (np.abs(ratio[:-1]) + np.abs(ratio[1:]) + 1.0)
    rise = ratio[1:] - ratio[:-1] > tol
    if rise.any():
        j, col = np.argwhere(rise)[0]
        conds["boundary_ratio_monotone"] = ConditionResult(
            FAIL, True, {"node": int(nodes[col]), "t_pair": [float(t[j]), float(t[j + 1])]},
            "g/t increases between consecutive samples")
    else:
        conds["boundary_ratio_monotone"] = ConditionResult(PASS, True, None, "checked on the sample grid only")
    monotone = not rise.any()
    exact_power = isinstance(g, PowerSum)
    if exact_power:
        slope = g.ratio_slope(nodes[None, :], t[:, None])
        monotone_exact = bool(np.all(slope <= 1e-14 * (1 + np.abs(slope))))
        exact_power_monotone = monotone_exact and all(
            not np.any((q - 1.0) * c[nodes] > 0) for c, q in g.terms)
    else:
        exact_power_monotone = False
    if exact_power_monotone:
        conds["boundary_ratio_monotone"] = ConditionResult(PASS, False, None, "every term has (q-1) g_q <= 0")

    # g >= 0 near zero
    row_min = vals.min(axis=1)
    ok = row_min >= 0
    omega = None
    if ok[0]:
        j = int(np.argmin(ok)) - 1 if not ok.all() else t.size - 1
        omega = float(t[j])
        if exact_power_monotone and j + 1 < t.size:
            fn = lambda s: float(np.min(g.at(nodes, s)))
            omega = _refine_root(lambda s: 1.0 if fn(s) >= 0 else -1.0, float(t[j]), float(t[j + 1]))
            omega = float(omega) if fn(omega) >= 0 else float(t[j])
        conds["boundary_positive_near_zero"] = ConditionResult(PASS, not exact_power_monotone, omega)
    else:
        node = int(nodes[np.argmin(vals[0])])
        conds["boundary_positive_near_zero"] = ConditionResult(
            FAIL, not exact_power_monotone, {"node": node, "t": float(t[0])}, "g < 0 at the smallest sample")
    # g <= 0 at infinity
    row_max = vals.max(axis=1)
    ok = row_max <= 0
    gamma = None
    if ok[-1]:
        bad = np.flatnonzero(~ok)
        j = int(bad[-1]) + 1 if bad.size else 0
        gamma = float(t[j])
        if exact_power_monotone and j > 0:
            fn = lambda s: float(np.max(g.at(nodes, s)))
            gamma = _refine_root(lambda s: 1.0 if fn(s) > 0 else -1.0, float(t[j - 1]), float(t[j]))
            if fn(gamma) > 0:
                gamma = float(t[j])
        conds["boundary_negative_at_infinity"] = ConditionResult(PASS, not exact_power_monotone, gamma)
    else:
        node = int(nodes[np.argmax(vals[-1])])
        conds["boundary_negative_at_infinity"] = ConditionResult(
            FAIL, not exact_power_monotone, {"node": node, "t": float(t[-1])}, "g > 0 at the largest sample")
    # limits
    for name, at_zero in (("boundary_superlinear_at_zero", True), ("boundary_sublinear_at_infinity", False)):
        if exact_power:
            passed, node = _powersum_limit(g, nodes, at_zero)
            conds[name] = ConditionResult(PASS if passed else FAIL, False,
                                          None if passed else {"node": node}, "leading power-sum term")
        else:
            conds[name] = _extrapolated_limit(ratio, at_zero, nodes)
    return GConditionReport(conds, omega, gamma)


def _extrapolated_limit(ratio: np.ndarray, at_zero: bool, nodes: np.ndarray) -> ConditionResult:
    """Heuristic verdict on a divergent limit of ``g/t`` from its sampled tail."""
    seg = ratio[:5] if at_zero else ratio[-5:][::-1]
    sign = 1.0 if at_zero else -1.0
    s = sign * seg  # should grow without bound towards the limit
    growing = np.all(s[1:] < s[:-1], axis=0)
    big = s[0] > 10.0 * np.maximum(1.0, np.abs(s[-1]))
    if np.all(growing & big):
        return ConditionResult(PASS, True, None, "extrapolated from the sampled tail")
    if np.any(~growing):
        col = int(np.argmax(~growing))
        return ConditionResult(FAIL, True, {"node": int(nodes[col])}, "sampled tail does not diverge")
    return ConditionResult(UNVERIFIED, True, None, "growth too slow to decide from samples")


@dataclass
class TailRatio:
    member: int
    absorption_ratio: float
    source_ratio: float

    def to_dict(self) -> dict:
        return {"member": self.member, "absorption_ratio": _finite_or_str(self.absorption_ratio),
                "source_ratio": _finite_or_str(self.source_ratio)}


def _finite_or_str(x: float):
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def _tail_sup(num: np.ndarray, den: np.ndarray) -> float:
    if num.size == 0:
        return 0.0
    if np.any(den <= 0):
        return math.inf
    return float(np.max(num / den))


def asymptotic_ratio_report(spec: ProblemSpec, exhaustion: Exhaustion) -> list[TailRatio]:
    """Sup of ``(a₊ + c)/b₊`` and ``(a₋ + b₊)/c`` over each exhaustion tail.

    The tail of member ``k`` is the complement of ``Ω_k``; the last member has
    an empty tail and is skipped.  A denominator vanishing anywhere on a tail
    yields ``inf``.
    """
    if exhaustion.domain.n != spec.domain.n:
        raise InvalidArgument("exhaustion was built on a different domain")
    a, c = spec.a, spec.c
    bp = positive_part(spec.b)
    out = []
    for k, mem in enumerate(exhaustion.members[:-1]):
        tail = np.ones(spec.domain.n, dtype=bool)
        tail[mem] = False
        out.append(TailRatio(k, _tail_sup(positive_part(a[tail]) + c[tail], bp[tail]),
                             _tail_sup(negative_part(a[tail]) + bp[tail], c[tail])))
    return out
