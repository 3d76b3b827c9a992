"""Monotone iteration between ordered barriers and the exhaustion solve.

One monotone step maps ``w`` to the solution ``v`` of

    (Δ - H) v = -(f(x, w) + H w)       at interior nodes,
    ∂_ν v + K v = g(x, w) + K w        at Boundary1 nodes,
    v = d                              at Boundary0 nodes,

with ``F = f + H t`` and ``G = g + K t`` non-decreasing on the barrier band.
Shifts are per node and are re-estimated on the current band
``[u_k⁻, u_k⁺]`` as it shrinks; every iterate stays a sub- or supersolution,
so shifts valid for the current band keep the step monotone.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Protocol

import numpy as np

from .barriers import BarrierOptions, BarrierPair, build_barriers
from .errors import (ConstructionFailure, HypothesisFailure, InvalidArgument, LichnerowiczError, NonConvergence,
                     SchemeFailure)
from .fields import FAIL, PASS, ProblemSpec, asymptotic_ratio_report, check_g_conditions
from .mesh import BoundaryClass, DiscreteDomain, Exhaustion
from .operators import ResidualPair, ShiftedSolver, normal_derivative, residual
from .spectral import verify_spectral_hypotheses

logger = logging.getLogger(__name__)


class SemilinearProblem(Protocol):
    domain: DiscreteDomain

    def f_at(self, nodes, t) -> np.ndarray: ...

    def g_at(self, nodes, t) -> np.ndarray: ...

    def f(self, u) -> np.ndarray: ...

    def boundary_g(self, u) -> np.ndarray: ...


@dataclass
class MonotoneConfig:
    """Settings of the monotone iteration.

    ``H`` and ``K`` fix the shifts (scalars or per-node arrays); ``None``
    estimates them from the band with :func:`lipschitz_shifts`, and with
    ``adaptive`` re-estimates them as the band shrinks.
    """

    H: float | np.ndarray | None = None
    K: float | np.ndarray | None = None
    tol: float = 1e-8
    max_iter: int = 20000
    ordering_tol: float = 1e-12
    samples: int = 65
    safety: float = 1.5
    adaptive: bool = True
    nodewise: bool = True
    residual_factor: float = 10.0
    method: str = "direct"

    def __post_init__(self) -> None:
        if not self.tol > 0:
            raise InvalidArgument("tol must be positive")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise InvalidArgument("max_iter must be a positive integer")
        if self.ordering_tol < 0:
            raise InvalidArgument("ordering_tol must be nonnegative")
        if self.samples < 2 or self.safety < 1:
            raise InvalidArgument("need samples >= 2 and safety >= 1")


def _slopes(fn, nodes: np.ndarray, T: np.ndarray) -> np.ndarray:
    """Max over samples of ``-∂f/∂t`` per node from central differences and secants."""
    delta = 1e-6 * T
    vals = fn(nodes[None, :], T)
    central = (fn(nodes[None, :], T + delta) - fn(nodes[None, :], T - delta)) / (2.0 * delta)
    if not (np.all(np.isfinite(vals)) and np.all(np.isfinite(central))):
        raise InvalidArgument("non-finite nonlinearity samples on the band; use a larger lower barrier")
    neg = np.max(-central, axis=0)
    dT = np.diff(T, axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        secant = np.where(dT > 0, -np.diff(vals, axis=0) / np.where(dT > 0, dT, 1.0), -np.inf)
    if secant.size:
        neg = np.maximum(neg, np.max(secant, axis=0))
    return np.maximum(neg, 0.0)


def lipschitz_shifts(problem, lo, hi, samples: int = 257, safety: float = 1.5):
    """Shifts making ``f + H t`` and ``g + K t`` non-decreasing on ``[lo, hi]``.

    Scalar ``lo``/``hi`` give scalar ``H``, ``K`` (max over nodes); arrays of
    node bounds give per-node shifts.  ``H`` is taken over free nodes and
    ``K`` over Boundary1 nodes; both are ``safety`` times the sampled maximum
    of the negative slope, clipped at 0.
    """
    d = problem.domain
    scalar = np.ndim(lo) == 0 and np.ndim(hi) == 0
    lo_a = np.broadcast_to(np.asarray(lo, dtype=float), (d.n,))
    hi_a = np.broadcast_to(np.asarray(hi, dtype=float), (d.n,))
    if np.any(~(lo_a > 0)) or np.any(hi_a < lo_a):
        raise InvalidArgument("lipschitz_shifts needs 0 < lo <= hi")
    s = np.linspace(0.0, 1.0, int(samples))[:, None]
    T = lo_a[None, :] * (hi_a / lo_a)[None, :] ** s
    free, b1 = d.free, d.boundary1
    H = np.zeros(d.n)
    K = np.zeros(d.n)
    if free.size:
        H[free] = safety * _slopes(problem.f_at, free, T[:, free])
    if b1.size:
        K[b1] = safety * _slopes(problem.g_at, b1, T[:, b1])
    if scalar:
        return float(H.max(initial=0.0)), float(K.max(initial=0.0))
    return H, K


def monotone_step(problem, config: MonotoneConfig, w, dirichlet_values, H=None, K=None,
                  solver: ShiftedSolver | None = None) -> np.ndarray:
    """One application of the monotone operator ``T``."""
    d = problem.domain
    w = np.asarray(w, dtype=float)
    H = config.H if H is None else H
    K = config.K if K is None else K
    if solver is None:
        if H is None or K is None:
            Hs, Ks = lipschitz_shifts(problem, float(np.min(w[d.free])) if d.free.size else 1.0,
                                      float(np.max(w[d.free])) if d.free.size else 1.0, config.samples, config.safety)
            H = Hs if H is None else H
            K = Ks if K is None else K
        solver = ShiftedSolver(d, 0.0, H, K, config.method)
    Hn, Kn = solver.H, solver.K
    F = problem.f(w) + Hn * w
    G = problem.boundary_g(w) + Kn * w
    return solver.solve(F, G, dirichlet_values)


@dataclass
class SolveReport:
    solution: np.ndarray
    upper: np.ndarray
    iterations: int
    gaps: list[tuple[float, float]]
    ordering_violations: int
    residual: ResidualPair
    upper_residual: ResidualPair
    branch: str = "both"
    limit_gap: float = 0.0
    refactorizations: int = 0
    converged: bool = True

    @property
    def interior_residual(self) -> float:
        return self.residual.interior_sup

    @property
    def boundary_residual(self) -> float:
        return self.residual.boundary_sup

    def to_dict(self) -> dict:
        return {"iterations": self.iterations, "ordering_violations": self.ordering_violations,
                "interior_residual": self.interior_residual, "boundary_residual": self.boundary_residual,
                "branch": self.branch, "limit_gap": self.limit_gap, "refactorizations": self.refactorizations,
                "final_gap_lower": self.gaps[-1][0] if self.gaps else None,
                "final_gap_upper": self.gaps[-1][1] if self.gaps else None,
                "converged": self.converged}


def _initial_shifts(problem, config: MonotoneConfig, lo: np.ndarray, hi: np.ndarray):
    d = problem.domain
    if config.H is not None and config.K is not None:
        return (np.broadcast_to(np.asarray(config.H, float), (d.n,)).copy(),
                np.broadcast_to(np.asarray(config.K, float), (d.n,)).copy())
    hi = np.maximum(hi, lo)  # iterates may cross within the audit slack
    if config.nodewise:
        H, K = lipschitz_shifts(problem, lo, hi, config.samples, config.safety)
    else:
        fr = d.free
        Hs, Ks = lipschitz_shifts(problem, float(lo[fr].min()), float(hi[fr].max()), config.samples, config.safety)
        H, K = np.full(d.n, Hs), np.full(d.n, Ks)
    if config.H is not None:
        H = np.broadcast_to(np.asarray(config.H, float), (d.n,)).copy()
    if config.K is not None:
        K = np.broadcast_to(np.asarray(config.K, float), (d.n,)).copy()
    if d.boundary0.size == 0 and not np.any(H[d.free] > 0) and not np.any(K > 0):
        H[:] = 1.0  # any positive shift makes the pure Neumann system invertible
    return H, K


def _ordering_slack(config: MonotoneConfig, solver: ShiftedSolver, scale: float) -> float:
    # never below what the shifted solve can resolve
    floor = 16.0 * np.finfo(float).eps * solver.amplification
    return max(config.ordering_tol, floor) * scale


def monotone_solve(problem, config: MonotoneConfig, phi, psi, dirichlet_values=None) -> SolveReport:
    """Iterate ``T`` from the subsolution ``phi`` and the supersolution ``psi``.

    The chain ``phi ≤ u_k⁻ ≤ u_{k+1}⁻ ≤ u_{k+1}⁺ ≤ u_k⁺ ≤ psi`` is audited at
    every step with slack ``max(ordering_tol, 16 eps κ) * sup psi``, where
    ``κ`` is :attr:`ShiftedSolver.amplification`; a violation raises
    :class:`SchemeFailure`.  Iteration stops once both gaps are ``≤ tol``
    and the ascending iterate has residual ``≤ residual_factor * tol``.
    """
    d = problem.domain
    phi = np.array(phi, dtype=float)
    psi = np.array(psi, dtype=float)
    if phi.shape != (d.n,) or psi.shape != (d.n,):
        raise InvalidArgument("barrier fields do not match the domain")
    if np.any(~(phi > 0)):
        raise InvalidArgument("lower barrier must be positive")
    if np.any(phi > psi):
        bad = int(np.flatnonzero(phi > psi)[0])
        raise InvalidArgument(f"barriers are not ordered at node {bad}", node=bad)
    b0 = d.boundary0
    if dirichlet_values is None:
        dvals = psi[b0]
    else:
        dv = np.asarray(dirichlet_values, dtype=float)
        dvals = dv[b0] if dv.shape == (d.n,) else np.broadcast_to(dv, b0.shape).astype(float)
    if np.any(dvals < phi[b0]) or np.any(dvals > psi[b0]):
        raise InvalidArgument("Dirichlet values must lie between the barriers")
    lo, hi = phi.copy(), psi.copy()
    lo[b0] = dvals
    hi[b0] = dvals
    scale = max(1.0, float(np.max(np.abs(psi))))
    H, K = _initial_shifts(problem, config, lo, hi)
    solver = ShiftedSolver(d, 0.0, H, K, config.method)
    slack = _ordering_slack(config, solver, scale)
    refactor = 1
    gaps: list[tuple[float, float]] = []
    fixed_shifts = config.H is not None and config.K is not None
    for k in range(1, int(config.max_iter) + 1):
        if config.adaptive and not fixed_shifts and k > 1 and (k < 20 or k % 5 == 0):
            Hn, Kn = _initial_shifts(problem, config, lo, hi)
            need = np.any(Hn > solver.H) or np.any(Kn > solver.K)
            loose = np.any(solver.H > 2.0 * Hn + 1e-12) or np.any(solver.K > 2.0 * Kn + 1e-12)
            if need or loose:
                solver = ShiftedSolver(d, 0.0, np.maximum(Hn, 0.0), np.maximum(Kn, 0.0), config.method)
                slack = _ordering_slack(config, solver, scale)
                refactor += 1
        new_lo = monotone_step(problem, config, lo, dvals, solver=solver)
        new_hi = monotone_step(problem, config, hi, dvals, solver=solver)
        for name, bad in (("lower iterate decreased", new_lo < lo - slack),
                          ("iterates crossed", new_hi < new_lo - slack),
                          ("upper iterate increased", new_hi > hi + slack)):
            if bad.any():
                node = int(np.flatnonzero(bad)[0])
                raise SchemeFailure(f"ordering chain broken: {name}", iteration=k, node=node,
                                    gap_history=gaps[-20:])
        g_lo = float(np.max(np.abs(new_lo - lo)))
        g_hi = float(np.max(np.abs(new_hi - hi)))
        gaps.append((g_lo, g_hi))
        lo, hi = new_lo, new_hi
        if g_lo <= config.tol and g_hi <= config.tol:
            res = residual(problem, lo)
            if res.sup <= config.residual_factor * config.tol:
                res_hi = residual(problem, hi)
                return SolveReport(lo, hi, k, gaps, 0, res, res_hi, "both", float(np.max(hi - lo)), refactor)
    raise NonConvergence("monotone iteration did not reach the tolerance", max_iter=int(config.max_iter),
                         gap_history=gaps[-50:], residual=residual(problem, lo).sup)


# ---------------------------------------------------------------------------
# truncated boundary problems


@dataclass(frozen=True, eq=False)
class TruncatedProblem:
    """``∂_ν w = g_n(x, w)`` with ``g_n = ψ g + A (1 - ψ) (m - w)/δ``."""

    base: ProblemSpec
    psi: np.ndarray
    midpoint: np.ndarray
    half_width: np.ndarray
    A_n: float

    @property
    def domain(self) -> DiscreteDomain:
        return self.base.domain

    def f_at(self, nodes, t):
        return self.base.f_at(nodes, t)

    def f(self, u):
        return self.base.f(u)

    def g_at(self, nodes, t):
        nodes = np.asarray(nodes)
        psi = self.psi[nodes]
        out = self.A_n * (1.0 - psi) * (self.midpoint[nodes] - t) / self.half_width[nodes]
        return out + np.where(psi > 0, psi * self.base.g_at(nodes, t), 0.0)

    def boundary_g(self, u):
        u = self.base._check_positive(u)
        return self.g_at(np.arange(self.domain.n), u)


def compute_An(problem: ProblemSpec, u_minus, u_plus) -> float:
    """Relaxation constant of the truncated problem on a subdomain.

    Max of ``g(x, u⁻)`` and ``(g(x, u⁺))₋`` over Boundary1 nodes and of
    ``∂_ν u⁻`` and ``(∂_ν u⁺)₋`` over all boundary nodes.
    """
    d = problem.domain
    u_minus = np.asarray(u_minus, dtype=float)
    u_plus = np.asarray(u_plus, dtype=float)
    b1, bd = d.boundary1, d.boundary
    nd_m = normal_derivative(d, u_minus, problem.f(u_minus))
    nd_p = normal_derivative(d, u_plus, problem.f(u_plus))
    terms = [0.0]
    if b1.size:
        terms += [float(np.max(problem.g_at(b1, u_minus[b1]))),
                  float(np.max(np.maximum(-problem.g_at(b1, u_plus[b1]), 0.0)))]
    if bd.size:
        terms += [float(np.max(nd_m[bd])), float(np.max(np.maximum(-nd_p[bd], 0.0)))]
    return max(terms)


def truncated_nonlinearity(problem: ProblemSpec, psi_n, u_minus, u_plus, A_n: float) -> TruncatedProblem:
    d = problem.domain
    psi_n = np.broadcast_to(np.asarray(psi_n, dtype=float), (d.n,)).copy()
    if np.any(psi_n < 0) or np.any(psi_n > 1):
        raise InvalidArgument("cutoff must take values in [0, 1]")
    if np.any(psi_n[d.classes != BoundaryClass.BOUNDARY1] != 0) and not np.all(psi_n == 1):
        psi_n[d.classes != BoundaryClass.BOUNDARY1] = 0.0
    u_minus = np.asarray(u_minus, dtype=float)
    u_plus = np.asarray(u_plus, dtype=float)
    delta = 0.5 * (u_plus - u_minus)
    bd = d.boundary
    if np.any(delta[bd] <= 0):
        bad = int(bd[np.flatnonzero(delta[bd] <= 0)[0]])
        raise InvalidArgument("barriers must be strictly ordered on the boundary", node=bad)
    delta = np.where(delta > 0, delta, 1.0)
    return TruncatedProblem(problem, psi_n, 0.5 * (u_plus + u_minus), delta, float(A_n))


def boundary_cutoff(sub: DiscreteDomain, core_root_ids: np.ndarray | None) -> np.ndarray:
    """``ψ_n``: 1 on the core ``Γ_n`` (root ids), ramping to 0 next to ``∂₀Ω_n``."""
    psi = np.zeros(sub.n)
    b1 = sub.boundary1
    if core_root_ids is None:
        psi[b1] = 1.0
        return psi
    in_core = np.isin(sub.parent_nodes, core_root_ids) & (sub.classes == BoundaryClass.BOUNDARY1)
    if not in_core.any():
        psi[b1] = 1.0
        return psi
    d_in = sub.hop_distance(np.flatnonzero(in_core))
    d_out = np.maximum(sub.hop_distance(sub.boundary0) - 1.0, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        ramp = np.where(np.isfinite(d_out), d_out / (d_in + d_out), 1.0)
    ramp = np.nan_to_num(ramp, nan=0.0)
    psi[b1] = np.clip(ramp[b1], 0.0, 1.0)
    psi[in_core] = 1.0
    return psi


@dataclass
class ExhaustionReport:
    reports: list[SolveReport]
    differences: list[list[float]]
    mode: str
    A_values: list[float]
    warm_start_used: list[bool]
    solutions: list[np.ndarray] = field(default_factory=list)
    failure_index: int | None = None
    failure: dict | None = None

    @property
    def innermost_differences(self) -> list[float]:
        return list(self.differences[0]) if self.differences else []

    def to_dict(self) -> dict:
        return {"mode": self.mode, "members": [r.to_dict() for r in self.reports],
                "differences": self.differences, "A_values": self.A_values,
                "warm_start_used": self.warm_start_used, "failure_index": self.failure_index,
                "failure": self.failure}


def exhaustion_solve(spec: ProblemSpec, exhaustion: Exhaustion, barriers: BarrierPair,
                     config: MonotoneConfig | None = None, mode: str = "sequential") -> ExhaustionReport:
    """Solve the truncated problem on each member, innermost first.

    Boundary0 values of each member are pinned to ``u⁺``.  In
    ``"sequential"`` mode the descending branch starts from the previous
    member's last upper iterate, extended by ``u⁺``; it is used only if it
    passes the supersolution check on the new member.  The last member
    solves the original problem (``ψ ≡ 1``).
    """
    if mode not in ("sequential", "independent"):
        raise InvalidArgument("mode must be 'sequential' or 'independent'")
    cfg = config or MonotoneConfig()
    if exhaustion.domain.n != spec.domain.n:
        raise InvalidArgument("exhaustion was built on a different domain")
    u_minus, u_plus = barriers.u_minus, barriers.u_plus
    reports: list[SolveReport] = []
    sols: list[np.ndarray] = []
    A_vals: list[float] = []
    warm: list[bool] = []
    prev_upper: np.ndarray | None = None
    prev_nodes: np.ndarray | None = None
    N = len(exhaustion)
    out = ExhaustionReport(reports, [], mode, A_vals, warm, sols)
    for k in range(N):
        nodes = exhaustion.members[k]
        sub = exhaustion.subdomain(k)
        base = spec.restrict(nodes, sub)
        um, up = u_minus[nodes], u_plus[nodes]
        if k == N - 1:
            problem = base
            A_vals.append(0.0)
        else:
            core = exhaustion.boundary1_of(k - 1) if k > 0 else None
            psi_n = boundary_cutoff(sub, core)
            A_n = compute_An(base, um, up)
            A_vals.append(A_n)
            problem = base if np.all(psi_n[sub.boundary1] == 1.0) else truncated_nonlinearity(base, psi_n, um, up, A_n)
        start = up
        used = False
        if mode == "sequential" and prev_upper is not None:
            cand = u_plus.copy()
            cand[prev_nodes] = prev_upper
            cand = np.minimum(cand[nodes], up)
            cert = residual(problem, cand)
            if cert.is_supersolution(cfg.ordering_tol * max(1.0, float(np.max(cand)))):
                start, used = cand, True
        warm.append(used)
        try:
            rep = monotone_solve(problem, cfg, um, start, up[sub.boundary0])
        except LichnerowiczError as exc:
            out.failure_index = k
            out.failure = exc.to_dict()
            return out
        reports.append(rep)
        full = u_plus.copy()
        full[nodes] = rep.solution
        sols.append(full)
        prev_upper, prev_nodes = rep.upper, nodes
    out.differences = _by_member(sols, exhaustion)
    return out


def _by_member(sols: list[np.ndarray], exhaustion: Exhaustion) -> list[list[float]]:
    """``table[i][j] = ‖u_{j+2} - u_{j+1}‖_{∞, Ω_{i+1}}`` for members ``i ≤ j``."""
    N = len(sols)
    table = []
    for i in range(N - 1):
        mem = exhaustion.members[i]
        table.append([float(np.max(np.abs(sols[j + 1][mem] - sols[j][mem]))) for j in range(i, N - 1)])
    return table


# ---------------------------------------------------------------------------
# end-to-end pipeline


CONDITION_ORDER = (
    "boundary_positive_near_zero", "boundary_negative_at_infinity", "boundary_superlinear_at_zero",
    "boundary_sublinear_at_infinity", "boundary_ratio_monotone", "tail_ratio_absorption", "tail_ratio_source",
    "absorption_set_compact", "source_set_compact", "spectral_absorption_set", "spectral_source_set",
)


@dataclass
class HypothesisReport:
    conditions: dict[str, dict[str, Any]]

    @property
    def failed(self) -> list[str]:
        return [k for k in CONDITION_ORDER if k in self.conditions and self.conditions[k]["status"] != PASS]

    @property
    def all_pass(self) -> bool:
        return not self.failed

    def to_dict(self) -> dict:
        return {"conditions": self.conditions, "failed": self.failed}


def _compact(spec: ProblemSpec, exhaustion: Exhaustion, nodes: np.ndarray) -> dict:
    d = spec.domain
    if nodes.size == 0:
        return {"status": PASS, "detail": "empty set"}
    members = exhaustion.members[:-1]
    if members:
        k = next((i for i, m in enumerate(members) if np.all(np.isin(nodes, m))), None)
        if k is None:
            return {"status": FAIL, "detail": "not contained in a proper exhaustion member"}
        return {"status": PASS, "member": k}
    near = d.dilate(nodes, 1)
    if near.size < d.n and not np.any(np.isin(d.boundary0, near)):
        return {"status": PASS, "detail": "one-member exhaustion; set stays off the outer frontier"}
    return {"status": FAIL, "detail": "one-member exhaustion; set reaches the outer frontier"}


def check_hypotheses(spec: ProblemSpec, exhaustion: Exhaustion, t_grid=None) -> HypothesisReport:
    """Evaluate every structural hypothesis of the existence theory."""
    d = spec.domain
    conds: dict[str, dict[str, Any]] = {}
    greport = check_g_conditions(spec.g, t_grid, d.boundary1)
    for name, res in greport.conditions.items():
        conds[name] = res.to_dict()
    tails = asymptotic_ratio_report(spec, exhaustion)
    for name, attr in (("tail_ratio_absorption", "absorption_ratio"), ("tail_ratio_source", "source_ratio")):
        if tails:
            val = getattr(tails[-1], attr)
            conds[name] = {"status": PASS if math.isfinite(val) else FAIL, "heuristic": True,
                           "value": val if math.isfinite(val) else "inf", "tails": [t.to_dict() for t in tails]}
        else:
            conds[name] = {"status": PASS, "heuristic": True, "detail": "no exhaustion tail"}
    active = np.zeros(d.n, dtype=bool)
    active[d.free] = True
    B0 = np.flatnonzero((spec.b <= 0) & active)
    C0 = np.flatnonzero((spec.c == 0) & active)
    conds["absorption_set_compact"] = _compact(spec, exhaustion, B0)
    conds["source_set_compact"] = _compact(spec, exhaustion, C0)
    if conds["absorption_set_compact"]["status"] == PASS and conds["source_set_compact"]["status"] == PASS:
        try:
            sr = verify_spectral_hypotheses(spec, exhaustion=exhaustion)
            sd = sr.to_dict()
            for key, ok in (("spectral_absorption_set", sr.absorption_ok), ("spectral_source_set", sr.source_ok)):
                conds[key] = {"status": PASS if ok else FAIL, **{k: v for k, v in sd[key].items() if k != "passed"}}
        except LichnerowiczError as exc:
            for key in ("spectral_absorption_set", "spectral_source_set"):
                conds[key] = {"status": "unverified", "detail": exc.message}
    else:
        for key in ("spectral_absorption_set", "spectral_source_set"):
            conds[key] = {"status": "unverified", "detail": "set is not compact"}
    return HypothesisReport(conds)


@dataclass
class SolveResult:
    theta: float
    theta_0: float
    barriers: BarrierPair
    report: SolveReport
    exhaustion: ExhaustionReport
    hypotheses: HypothesisReport | None

    @property
    def solution(self) -> np.ndarray:
        return self.report.solution

    def to_dict(self) -> dict:
        return {"theta": self.theta, "theta_0": self.theta_0, "barriers": self.barriers.to_dict(),
                "solve": self.report.to_dict(), "exhaustion": self.exhaustion.to_dict(),
                "hypotheses": None if self.hypotheses is None else self.hypotheses.to_dict()}


def solve_lichnerowicz(spec: ProblemSpec, exhaustion: Exhaustion | None = None, theta: float | str = "auto",
                       config: MonotoneConfig | None = None, barrier_options: BarrierOptions | None = None,
                       check: bool = True, override: tuple[str, ...] = (),
                       exhaustion_mode: str = "sequential") -> SolveResult:
    """Hypotheses, barriers, ordering, then the exhaustion solve.

    ``override`` lists hypothesis names allowed to fail.  Failures raise
    :class:`HypothesisFailure`, :class:`ConstructionFailure`,
    :class:`SchemeFailure` or :class:`NonConvergence`.
    """
    ex = exhaustion or Exhaustion.trivial(spec.domain)
    hyp = None
    if check:
        t_grid = None if barrier_options is None else barrier_options.t_grid
        hyp = check_hypotheses(spec, ex, t_grid)
        failed = [c for c in hyp.failed if c not in override]
        if failed:
            raise HypothesisFailure(f"hypothesis {failed[0]} does not hold", condition=failed[0],
                                    failed=failed, report=hyp.conditions[failed[0]])
    pair = build_barriers(spec, ex, theta, barrier_options)
    spec_t = spec.with_theta(pair.theta)
    exr = exhaustion_solve(spec_t, ex, pair, config, exhaustion_mode)
    if exr.failure is not None:
        kind = exr.failure.get("kind")
        cls = NonConvergence if kind == "nonconvergence" else SchemeFailure
        details = {k: v for k, v in exr.failure.items() if k not in ("kind", "message")}
        raise cls(f"member {exr.failure_index} failed: {exr.failure.get('message')}",
                  member=exr.failure_index, cause_kind=kind, **details)
    final = exr.reports[-1]
    u = final.solution
    slack = 1e-12 * max(1.0, float(np.max(pair.u_plus)))
    if np.any(u < pair.u_minus - slack) or np.any(u > pair.u_plus + slack):
        raise SchemeFailure("solution escapes the barrier sandwich")
    return SolveResult(pair.theta, pair.theta_0, pair, final, exr, hyp)
