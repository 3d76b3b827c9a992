"""Explicit super- and subsolutions with their constant ledger.

The supersolution is ``u⁺ = η (ψ u₁ + (1 - ψ) μ)``: ``u₁`` is the
sup-normalized first Zaremba eigenfunction of a region ``D`` around
``B₀ = {b ≤ 0}``, ``ψ`` a cutoff equal to 1 on a smaller region ``D′`` and 0
off ``D``, and ``μ`` a constant large enough for the tail.  Nodes split into

* core:       ψ = 1 at the node and its neighbours (eigen identity ``L u₁ = -ζ u₁``),
* far:        ψ = 0 at the node and its neighbours (constant ``η μ``),
* transition: everything else, controlled by the measured ``H = max (L w)₊``.

The subsolution is ``1/v`` for the supersolution ``v`` of the dual problem.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.optimize import brentq

from .errors import ConstructionFailure, HypothesisFailure, InvalidArgument
from .fields import (GConditionReport, ProblemSpec, check_g_conditions, dual_problem, negative_part,
                     positive_part)
from .mesh import DiscreteDomain, Exhaustion
from .operators import ResidualPair, certificate_tolerance, residual
from .spectral import dirichlet_first, zaremba_first

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# f(t) = A t^p + B t^q - C with q < 0 < p


@dataclass(frozen=True)
class PqParams:
    A: float
    B: float
    C: float
    p: float
    q: float

    def __post_init__(self) -> None:
        vals = (self.A, self.B, self.C, self.p, self.q)
        if not all(math.isfinite(v) for v in vals):
            raise InvalidArgument("pq parameters must be finite")
        if not (self.A > 0 and self.B > 0 and self.C > 0):
            raise InvalidArgument("pq parameters need A, B, C > 0")
        if not self.q < 0 < self.p:
            raise InvalidArgument("pq parameters need q < 0 < p")

    def f(self, t):
        t = np.asarray(t, dtype=float)
        return self.A * t ** self.p + self.B * t ** self.q - self.C


@dataclass(frozen=True)
class PqMargin:
    M_value: float
    lhs: float
    rhs: float
    satisfied: bool


@dataclass(frozen=True)
class PqMinimum:
    t_bar: float
    f_at_t_bar: float


def pq_constant(p: float, q: float) -> float:
    """``M(p, q) = (-q/p)^{p/(p-q)} + (-q/p)^{q/(p-q)}``."""
    r = -q / p
    if r == 1.0:
        return 2.0
    return r ** (p / (p - q)) + r ** (q / (p - q))


def pq_margin(params: PqParams) -> PqMargin:
    """Sufficient condition ``A^{-q} B^p < (C/M)^{p-q}`` for ``min f < 0``."""
    A, B, C, p, q = params.A, params.B, params.C, params.p, params.q
    M = pq_constant(p, q)
    log_lhs = -q * math.log(A) + p * math.log(B)
    log_rhs = (p - q) * (math.log(C) - math.log(M))
    lhs = _safe_exp(log_lhs)
    rhs = _safe_exp(log_rhs)
    return PqMargin(M, lhs, rhs, log_lhs < log_rhs)


def _safe_exp(x: float) -> float:
    return math.exp(x) if x < 700 else math.inf


def pq_minimizer(params: PqParams) -> PqMinimum:
    """Closed-form minimizer ``t̄ = (-q B / (p A))^{1/(p-q)}`` of ``f``."""
    A, B, p, q = params.A, params.B, params.p, params.q
    t_bar = math.exp((math.log(-q * B) - math.log(p * A)) / (p - q))
    value = float(params.f(t_bar))
    if pq_margin(params).satisfied and not value < 0:
        raise ConstructionFailure("pq minimum is not negative although the margin condition holds",
                                  t_bar=t_bar, f=value)
    return PqMinimum(t_bar, value)


# ---------------------------------------------------------------------------
# options and results


def default_theta_grid() -> np.ndarray:
    """Descending grid ``10^{-k/16}``, ``k = 0..1600``."""
    return 10.0 ** (-np.arange(0, 1601) / 16.0)


@dataclass
class BarrierOptions:
    tol_scale: float = 1e-9
    theta_grid: np.ndarray | None = None
    cutoff: str = "linear"
    escalation_factor: float = 2.0
    escalation_cap: float = 2.0 ** 40
    t_grid: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.cutoff not in ("linear", "smooth"):
            raise InvalidArgument("cutoff must be 'linear' or 'smooth'")
        if not self.tol_scale > 0:
            raise InvalidArgument("tol_scale must be positive")
        if not (self.escalation_factor > 1 and self.escalation_cap >= 1):
            raise InvalidArgument("escalation needs factor > 1 and cap >= 1")

    def grid(self) -> np.ndarray:
        g = default_theta_grid() if self.theta_grid is None else np.asarray(self.theta_grid, dtype=float)
        g = np.sort(g[(g > 0) & (g <= 1)])[::-1]
        if g.size == 0:
            raise InvalidArgument("theta grid has no value in (0, 1]")
        return g


@dataclass
class SupersolutionResult:
    u_plus: np.ndarray
    theta: float
    theta_0: float
    certificate: ResidualPair
    tolerance: float
    ledger: dict[str, Any]
    D_prime: np.ndarray | None
    D: np.ndarray | None
    cutoff: np.ndarray
    heuristic: bool = False


def _root_decreasing(fn, lo: float = 1e-12, hi: float = 1.0) -> float:
    """Root of a strictly decreasing function on ``(0, ∞)`` by bracketing in log t."""
    while fn(lo) <= 0:
        lo /= 1e3
        if lo < 1e-300:
            return 0.0
    while fn(hi) > 0:
        hi *= 2.0
        if hi > 1e300:
            raise ConstructionFailure("no root found for a barrier constant")
    return math.exp(brentq(lambda s: fn(math.exp(s)), math.log(lo), math.log(hi), xtol=1e-14, rtol=1e-14))


def _neighbour_extremes(domain: DiscreteDomain, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    W = domain.weights
    vals = x[W.indices]
    starts = W.indptr[:-1]
    has = np.diff(W.indptr) > 0
    lo = np.where(has, np.minimum.reduceat(vals, np.minimum(starts, vals.size - 1)), x) if vals.size else x.copy()
    hi = np.where(has, np.maximum.reduceat(vals, np.minimum(starts, vals.size - 1)), x) if vals.size else x.copy()
    return lo, hi


def _select_regions(spec: ProblemSpec, exhaustion: Exhaustion, B0: np.ndarray, ledger: dict):
    """Pick ``D′ ⊇ dilate(B₀)`` and ``D ⊇ dilate(D′)`` with positive Zaremba eigenvalue."""
    d = spec.domain
    members = [np.asarray(m) for m in exhaustion.members[:-1]]
    source = "exhaustion"
    need = d.dilate(B0, 1)
    if not any(np.all(np.isin(need, m)) for m in members):
        if not any(np.all(np.isin(B0, m)) for m in members) and members:
            raise HypothesisFailure("absorption set {b <= 0} is not contained in a proper exhaustion member",
                                    condition="absorption_set_compact")
        # fall back to graph dilations of B0
        source = "dilation"
        members = []
        r = 1
        while True:
            m = d.dilate(B0, r)
            if m.size >= d.n:
                break
            members.append(m)
            r = r + 1 if r < 4 else 2 * r
        if not members:
            raise HypothesisFailure("absorption set {b <= 0} leaves no proper neighbourhood",
                                    condition="absorption_set_compact")
    ledger["region_source"] = source
    dprime = next((m for m in members if np.all(np.isin(need, m))), None)
    if dprime is None:
        raise HypothesisFailure("no candidate region contains a neighbourhood of {b <= 0}",
                                condition="absorption_set_compact")
    need2 = d.dilate(dprime, 1)
    zetas = []
    for m in members:
        if m.size <= dprime.size or not np.all(np.isin(need2, m)):
            continue
        ep = zaremba_first(d, spec.a, m)
        zetas.append(ep.zeta)
        if ep.zeta > 0:
            ledger["zeta_candidates"] = zetas
            return dprime, m, ep
    ledger["zeta_candidates"] = zetas
    raise HypothesisFailure("no admissible region around {b <= 0} has a positive Zaremba eigenvalue",
                            condition="spectral_absorption_set", zeta_candidates=zetas)


def _cutoff(domain: DiscreteDomain, dprime: np.ndarray, nonfree: np.ndarray, profile: str) -> np.ndarray:
    d_in = domain.hop_distance(dprime)
    d_out = domain.hop_distance(nonfree)
    with np.errstate(invalid="ignore", divide="ignore"):
        psi = np.where(np.isfinite(d_out), d_out / (d_in + d_out), 1.0)
    psi = np.nan_to_num(psi, nan=0.0)
    psi[nonfree] = 0.0
    if profile == "smooth":
        psi = psi * psi * (3.0 - 2.0 * psi)
    return np.clip(psi, 0.0, 1.0)


def _lambda2(spec: ProblemSpec, nodes: np.ndarray, w: np.ndarray, K: float, rho: float) -> float:
    """Least ``η`` with ``g(x, ηw)/(ηw) + K/ρ ≤ 0`` on ``nodes``."""
    if nodes.size == 0 or K <= 0:
        return 0.0

    def ok(eta: float) -> bool:
        t = eta * w[nodes]
        return bool(np.all(spec.g_at(nodes, t) / t + K / rho <= 0))

    hi = 1.0
    while not ok(hi):
        hi *= 2.0
        if hi > 1e300:
            raise ConstructionFailure("boundary flux condition cannot be met", condition="lambda_2")
    lo = hi / 2.0
    while ok(lo):
        hi, lo = lo, lo / 2.0
        if lo < 1e-300:
            return 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-14 * hi:
            break
    return hi


def build_supersolution(spec: ProblemSpec, exhaustion: Exhaustion | None = None, theta: float | str = "auto",
                        options: BarrierOptions | None = None,
                        g_report: GConditionReport | None = None) -> SupersolutionResult:
    """Certified supersolution of the ``b_θ`` problem.

    With ``theta="auto"`` the largest grid value ``θ₀`` for which the
    analytic constant conditions hold is used; a numeric ``theta`` builds
    for that value (the ledger then records whether the analytic conditions
    hold).  The candidate is always re-verified by :func:`residual`; on a
    failed check ``η`` and ``μ`` are doubled up to the escalation cap.
    """
    opts = options or BarrierOptions()
    d = spec.domain
    ex = exhaustion or Exhaustion.trivial(d)
    if ex.domain is not d and ex.domain.n != d.n:
        raise InvalidArgument("exhaustion was built on a different domain")
    sigma, tau = spec.sigma, spec.tau
    active = np.zeros(d.n, dtype=bool)
    active[d.free] = True
    b1 = d.boundary1
    ledger: dict[str, Any] = {"cutoff_profile": opts.cutoff, "boundary_scheme": d.boundary_scheme}

    gcond = g_report or check_g_conditions(spec.g, opts.t_grid, b1)
    gamma_res = gcond.conditions["boundary_negative_at_infinity"]
    if b1.size and not gamma_res.passed:
        raise HypothesisFailure("g is not eventually nonpositive on the boundary; no upper boundary witness",
                                condition="boundary_negative_at_infinity", witness=gamma_res.witness)
    gamma_bar = float(gcond.gamma_bar or 0.0) if b1.size else 0.0
    heuristic = bool(gamma_res.heuristic) if b1.size else False

    B0 = np.flatnonzero((spec.b <= 0) & active)
    ledger["B0_size"] = int(B0.size)
    bminus = float(np.max(negative_part(spec.b[active]), initial=0.0))
    dprime = D = None
    zeta = None
    if B0.size == 0:
        psi = np.zeros(d.n)
        u1 = np.zeros(d.n)
        branch = "empty_absorption_set"
    else:
        dprime, D, ep = _select_regions(spec, ex, B0, ledger)
        zeta = ep.zeta
        u1 = ep.extended(d.n)
        u1 /= np.max(u1)
        free_in_D = np.zeros(d.n, dtype=bool)
        free_in_D[ep.nodes[ep.domain.free]] = True
        psi = _cutoff(d, dprime, np.flatnonzero(~free_in_D), opts.cutoff)
        try:
            ledger["zeta_dirichlet_D"] = dirichlet_first(d, spec.a, D).zeta
        except Exception:  # logged alternative only
            ledger["zeta_dirichlet_D"] = None
        branch = None

    nb_lo, nb_hi = _neighbour_extremes(d, psi)
    core = active & (psi == 1.0) & (nb_lo == 1.0)
    far = active & (psi == 0.0) & (nb_hi == 0.0)
    trans = active & ~core & ~far
    if B0.size and not np.all(core[B0]):
        bad = int(B0[~core[B0]][0])
        raise ConstructionFailure("absorption set is not covered by the cutoff core", node=bad)
    ledger.update(core_size=int(core.sum()), transition_size=int(trans.sum()), far_size=int(far.sum()))

    bplus = positive_part(spec.b)
    if far.any():
        Gamma = float(np.max((positive_part(spec.a[far]) + spec.c[far]) / bplus[far]))
    else:
        Gamma = 0.0
    if Gamma > 0:
        Lambda0 = _root_decreasing(lambda t: Gamma - t ** (sigma - 1) + Gamma * t ** (tau - 1))
    else:
        Lambda0 = 0.0
    mu = max(2.0 * Lambda0, 1.0)

    xi = c_core = None
    if B0.size:
        xi = float(np.min(u1[core])) ** (tau - 1)
        c_core = float(np.max(spec.c[core]))
        if bminus == 0:
            branch = "no_negative_part"
        elif c_core > 0:
            branch = "pq"
        else:
            branch = "source_free_core"
    ledger.update(branch=branch, zeta=zeta, xi=xi, c_core=c_core, b_minus_sup=bminus, Gamma=Gamma,
                  Lambda0=Lambda0, gamma_bar=gamma_bar)

    def transition_constants(mu_: float):
        w_ = psi * u1 + (1.0 - psi) * mu_
        if trans.any():
            Lw = d.laplacian_of(w_) + spec.a * w_
            H_ = float(np.max(positive_part(Lw[trans])))
            eps_ = float(np.min(spec.b[trans] * w_[trans] ** sigma))
            E_ = float(np.max(spec.c[trans] * w_[trans] ** tau))
            if H_ == 0 and E_ == 0:
                L1 = 0.0
            else:
                L1 = _root_decreasing(lambda t: H_ - eps_ * t ** (sigma - 1) + E_ * t ** (tau - 1))
        else:
            H_ = eps_ = E_ = 0.0
            L1 = 0.0
        rho_ = float(np.min(w_[b1])) if b1.size else math.inf
        kset = b1[trans[b1]] if d.boundary_scheme == "balance" else b1[~far[b1]]
        K_ = float(np.max(positive_part(-d.flux_derivative(w_)[kset]), initial=0.0))
        L2 = _lambda2(spec, kset, w_, K_, rho_) if b1.size else 0.0
        return w_, H_, eps_, E_, L1, rho_, K_, L2

    w, H, eps, E, Lambda1, rho, K, Lambda2 = transition_constants(mu)
    gamma_term = gamma_bar / rho if b1.size else 0.0
    req = max(1.0, Lambda1, Lambda2, gamma_term)
    ledger.update(mu=mu, H=H, epsilon=eps, E=E, Lambda1=Lambda1, rho=rho if b1.size else None, K=K,
                  Lambda2=Lambda2, required_eta=req)

    grid = opts.grid()
    M1 = M2 = None
    if branch == "pq":
        p, q = sigma - 1.0, tau - 1.0
        B = xi * c_core
        Mpq = pq_constant(p, q)
        # θ < M₁  <=>  (θ b₋)^{-q} B^p < (ζ/M)^{p-q}
        log_M1 = ((p - q) * (math.log(zeta) - math.log(Mpq)) + q * math.log(bminus) - p * math.log(B)) / (-q)
        M1 = _safe_exp(log_M1)
        M2 = math.exp((math.log(-q * B) - math.log(p * bminus)) / (p - q))
        log_bound = min(0.0, (sigma - tau) * (math.log(M2) - math.log(req)))
        feasible = grid[(np.log(grid) <= log_bound + 1e-15) & (np.log(grid) < log_M1)]

        def eta_of(th: float) -> float:
            return th ** (1.0 / (tau - sigma)) * M2

        def analytic_ok(th: float) -> bool:
            return math.log(th) < log_M1 and math.log(th) <= log_bound + 1e-15
    elif branch == "source_free_core":
        log_bound = min(0.0, math.log(zeta) - math.log(bminus) - (sigma - 1) * math.log(2 * req))
        feasible = grid[np.log(grid) <= log_bound + 1e-15]

        def eta_of(th: float) -> float:
            return 0.5 * (zeta / (th * bminus)) ** (1.0 / (sigma - 1))

        def analytic_ok(th: float) -> bool:
            return math.log(th) <= log_bound + 1e-15
    else:
        eta_fixed = req
        if branch == "no_negative_part" and c_core > 0:
            eta_c = (2.0 * xi * c_core / zeta) ** (1.0 / (1.0 - tau))
            ledger["eta_source"] = eta_c
            eta_fixed = max(req, eta_c)
        feasible = grid[:1]

        def eta_of(th: float) -> float:
            return eta_fixed

        def analytic_ok(th: float) -> bool:
            return True
    ledger.update(M1=M1, M2=M2)

    if theta == "auto":
        if feasible.size == 0:
            raise ConstructionFailure("no theta on the grid satisfies the barrier constant conditions",
                                      condition="theta_grid", M1=M1, M2=M2, required_eta=req)
        theta_use = float(feasible[0])
        theta_0 = theta_use
    else:
        theta_use = float(theta)
        if not 0 < theta_use <= 1:
            raise InvalidArgument(f"theta must lie in (0, 1], got {theta}")
        theta_0 = float(feasible[0]) if feasible.size else 0.0
    ok_analytic = analytic_ok(theta_use)
    eta = eta_of(theta_use)
    if not ok_analytic:
        eta = max(eta, req)
    ledger.update(theta=theta_use, theta_0=theta_0, eta_initial=eta, analytic_conditions_met=ok_analytic)

    spec_t = spec.with_theta(theta_use)
    factor, escalations = 1.0, 0
    worst = None
    while True:
        mu_k = mu * factor
        w_k = psi * u1 + (1.0 - psi) * mu_k
        u = eta * factor * w_k
        cert = residual(spec_t, u)
        tol = certificate_tolerance(u, scale=opts.tol_scale)
        if cert.is_supersolution(tol):
            break
        imax, inode = cert.interior_extreme("max")
        bmin, bnode = cert.boundary_extreme("min")
        worst = {"node": inode, "interior_residual": imax} if imax > tol else {"node": bnode, "boundary_residual": bmin}
        if factor * opts.escalation_factor > opts.escalation_cap:
            raise ConstructionFailure("supersolution certificate fails within the escalation cap",
                                      theta=theta_use, theta_0=theta_0, escalations=escalations,
                                      analytic_conditions_met=ok_analytic, **worst)
        factor *= opts.escalation_factor
        escalations += 1
    ledger.update(eta=eta * factor, mu_final=mu * factor, escalations=escalations,
                  certificate=cert.to_dict(), certificate_tol=tol, heuristic=heuristic)
    if escalations:
        logger.info("supersolution needed %d escalation steps", escalations)
    return SupersolutionResult(u, theta_use, theta_0, cert, tol, ledger, dprime, D, psi, heuristic)


@dataclass
class SubsolutionResult:
    u_minus: np.ndarray
    dual: SupersolutionResult
    certificate: ResidualPair
    certificate_theta: ResidualPair
    tolerance: float
    ledger: dict[str, Any]


def build_subsolution(spec: ProblemSpec, exhaustion: Exhaustion | None = None,
                      options: BarrierOptions | None = None) -> SubsolutionResult:
    """``u⁻ = 1/v`` with ``v`` the supersolution of the dual problem.

    Certified for the problem with ``b₊`` in place of ``b``, hence for every
    ``b_θ``.
    """
    dual = dual_problem(spec)
    try:
        sup = build_supersolution(dual, exhaustion, 1.0, options)
    except HypothesisFailure as exc:
        mapping = {"absorption_set_compact": "source_set_compact",
                   "spectral_absorption_set": "spectral_source_set"}
        cond = exc.details.get("condition")
        details = {k: v for k, v in exc.details.items() if k != "condition"}
        raise HypothesisFailure(f"dual problem: {exc.message}", condition=mapping.get(cond, cond),
                                dual=True, **details) from exc
    except ConstructionFailure as exc:
        raise ConstructionFailure(f"dual problem: {exc.message}", dual=True, **exc.details) from exc
    u_minus = 1.0 / sup.u_plus
    tol = certificate_tolerance(u_minus, scale=(options or BarrierOptions()).tol_scale)
    cert = residual(spec.with_absorption_plus(), u_minus)
    cert_t = residual(spec, u_minus)
    if not (cert.is_subsolution(tol) and cert_t.is_subsolution(tol)):
        imin, node = cert.interior_extreme("min")
        raise ConstructionFailure("reciprocal of the dual supersolution fails the subsolution check",
                                  node=node, interior_residual=imin)
    ledger = {"dual": sup.ledger, "certificate": cert.to_dict(), "certificate_tol": tol,
              "certifies_every_theta": True}
    return SubsolutionResult(u_minus, sup, cert, cert_t, tol, ledger)


def _check_sub(spec: ProblemSpec, u: np.ndarray, tol: float) -> tuple[ResidualPair, ResidualPair]:
    return residual(spec.with_absorption_plus(), u), residual(spec, u)


def scale_subsolution(u_minus, s: float, spec: ProblemSpec, tol_scale: float = 1e-9) -> np.ndarray:
    """``s u⁻`` for ``s ∈ (0, 1)``, re-certified as a subsolution."""
    if not 0.0 < s < 1.0:
        raise InvalidArgument(f"scaling factor must lie in (0, 1), got {s}")
    us = s * np.asarray(u_minus, dtype=float)
    tol = certificate_tolerance(us, scale=tol_scale)
    cert, cert_t = _check_sub(spec, us, tol)
    if not (cert.is_subsolution(tol) and cert_t.is_subsolution(tol)):
        imin, inode = cert.interior_extreme("min")
        bmax, bnode = cert.boundary_extreme("max")
        node = inode if imin < -tol else bnode
        raise ConstructionFailure("scaled subsolution fails its certificate", s=s, node=node,
                                  interior_min=imin, boundary_max=bmax)
    return us


@dataclass
class BarrierPair:
    u_minus: np.ndarray
    u_plus: np.ndarray
    s: float
    ledger: dict[str, Any]
    sub_certificate: ResidualPair
    super_certificate: ResidualPair
    D_prime: np.ndarray | None = None
    D: np.ndarray | None = None
    theta: float = 1.0
    theta_0: float = 1.0

    def to_dict(self) -> dict:
        return {"s": self.s, "theta": self.theta, "theta_0": self.theta_0, "ledger": self.ledger,
                "sub_certificate": self.sub_certificate.to_dict(),
                "super_certificate": self.super_certificate.to_dict(),
                "D_prime_size": None if self.D_prime is None else int(self.D_prime.size),
                "D_size": None if self.D is None else int(self.D.size)}


def order_barriers(u_minus, u_plus, spec: ProblemSpec, tol_scale: float = 1e-9,
                   ledger: dict | None = None) -> BarrierPair:
    """Scale ``u⁻`` by ``s = min(0.5 inf u⁺ / sup u⁻, 0.9)`` and check ``0 < s u⁻ < u⁺``."""
    u_minus = np.asarray(u_minus, dtype=float)
    u_plus = np.asarray(u_plus, dtype=float)
    m = float(np.min(u_plus))
    if not m > 0:
        raise InvalidArgument("supersolution must have a positive infimum")
    s = min(0.5 * m / float(np.max(u_minus)), 0.9)
    us = scale_subsolution(u_minus, s, spec, tol_scale)
    if not np.all((us > 0) & (us < u_plus)):
        bad = int(np.flatnonzero(~((us > 0) & (us < u_plus)))[0])
        raise ConstructionFailure("barriers are not strictly ordered", node=bad)
    tol_p = certificate_tolerance(u_plus, scale=tol_scale)
    sup_cert = residual(spec, u_plus)
    if not sup_cert.is_supersolution(tol_p):
        raise ConstructionFailure("upper barrier fails its supersolution certificate")
    sub_cert = residual(spec, us)
    info = dict(ledger or {})
    info.update(s=s, inf_u_plus=m, sup_u_minus=float(np.max(u_minus)))
    return BarrierPair(us, u_plus, s, info, sub_cert, sup_cert)


def build_barriers(spec: ProblemSpec, exhaustion: Exhaustion | None = None, theta: float | str = "auto",
                   options: BarrierOptions | None = None) -> BarrierPair:
    """Supersolution, dual subsolution and the scaled ordered pair."""
    sup = build_supersolution(spec, exhaustion, theta, options)
    spec_t = spec.with_theta(sup.theta)
    sub = build_subsolution(spec_t, exhaustion, options)
    tol_scale = (options or BarrierOptions()).tol_scale
    pair = order_barriers(sub.u_minus, sup.u_plus, spec_t, tol_scale,
                          {"supersolution": sup.ledger, "subsolution": sub.ledger})
    pair.D_prime, pair.D = sup.D_prime, sup.D
    pair.theta, pair.theta_0 = sup.theta, sup.theta_0
    return pair
