import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_bvp
from scipy.optimize import brentq

from lichnerowicz import Exponents, PowerSum, ProblemSpec, residual
from lichnerowicz.barriers import build_barriers, order_barriers
from lichnerowicz.errors import ConstructionFailure, HypothesisFailure, InvalidArgument, NonConvergence, SchemeFailure
from lichnerowicz.iteration import (MonotoneConfig, boundary_cutoff, check_hypotheses, compute_An, exhaustion_solve,
                                    lipschitz_shifts, monotone_solve, monotone_step, solve_lichnerowicz,
                                    truncated_nonlinearity)
from lichnerowicz.mesh import Exhaustion, build_exhaustion, build_interval_mesh, build_radial_mesh

from conftest import bump_b, constant_spec, radial_spec


def linear_spec(n=30, left="boundary1", right="boundary1"):
    """f = 1 - u as a = -1, b = 0, c = 1, tau = 0."""
    d = build_interval_mesh(1.0, n, left, right)
    return ProblemSpec(d, -1.0, 0.0, 1.0, Exponents(2, 0))


def test_linear_source_shift():
    H, K = lipschitz_shifts(linear_spec(), 0.5, 2.0)
    assert H == pytest.approx(1.5, rel=1e-9)
    assert K == 0.0


def test_constant_lichnerowicz_shift():
    H, _ = lipschitz_shifts(constant_spec(), 0.5, 2.0)
    expected = 1.5 * max(5 * 0.5**4 + 7 * 0.5**-8, 5 * 2.0**4 + 7 * 2.0**-8)
    assert expected == pytest.approx(2688.46875)
    assert H == pytest.approx(expected, rel=1e-6)


def test_nodewise_shifts_follow_band():
    spec = constant_spec(n=10)
    lo = np.full(10, 0.5)
    lo[5:] = 1.0
    H, _ = lipschitz_shifts(spec, lo, np.full(10, 2.0))
    assert np.all(H[5:] < H[:5])


def test_lipschitz_requires_positive_band():
    with pytest.raises(InvalidArgument):
        lipschitz_shifts(constant_spec(), 0.0, 1.0)


def test_monotone_step_constant_algebra():
    spec = linear_spec()
    v = monotone_step(spec, MonotoneConfig(H=2.0, K=0.0), np.full(spec.domain.n, 0.5), None)
    np.testing.assert_allclose(v, 0.75, atol=1e-12)


def test_monotone_step_fixed_point():
    spec = constant_spec(a=3.0, left="boundary1", right="boundary0")
    root = brentq(lambda u: 3 * u + u**-7 - u**5, 1.0, 2.0, xtol=1e-15)
    w = np.full(spec.domain.n, root)
    v = monotone_step(spec, MonotoneConfig(H=5000.0, K=0.0), w, root)
    np.testing.assert_allclose(v, w, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_monotone_step_is_order_preserving(seed):
    rng = np.random.default_rng(seed)
    spec = radial_spec(60)
    n = spec.domain.n
    lo, hi = 0.4, 2.3
    H, K = lipschitz_shifts(spec, lo, hi)
    cfg = MonotoneConfig(H=H, K=K)
    w1 = rng.uniform(lo, hi, n)
    w2 = np.minimum(w1 + rng.uniform(0.0, 1.0, n), hi)
    d = 1.0
    v1 = monotone_step(spec, cfg, w1, d)
    v2 = monotone_step(spec, cfg, w2, d)
    assert np.all(v1 <= v2 + 1e-12)


def test_linear_problem_converges_to_one():
    spec = linear_spec()
    n = spec.domain.n
    rep = monotone_solve(spec, MonotoneConfig(), np.full(n, 0.5), np.full(n, 2.0))
    np.testing.assert_allclose(rep.solution, 1.0, atol=1e-8)
    assert rep.ordering_violations == 0


def test_constant_lichnerowicz_converges_to_one():
    spec = constant_spec()
    n = spec.domain.n
    rep = monotone_solve(spec, MonotoneConfig(), np.full(n, 0.5), np.full(n, 2.0))
    np.testing.assert_allclose(rep.solution, 1.0, atol=1e-8)
    assert rep.residual.sup <= 1e-7


def test_positive_potential_matches_scalar_root():
    spec = constant_spec(a=3.0)
    n = spec.domain.n
    rep = monotone_solve(spec, MonotoneConfig(), np.full(n, 0.5), np.full(n, 2.0))
    root = brentq(lambda u: 3 * u + u**-7 - u**5, 1.0, 2.0, xtol=1e-15)
    np.testing.assert_allclose(rep.solution, root, atol=1e-8)


def test_broken_shift_is_caught_by_ordering_audit():
    spec = constant_spec(left="boundary0", right="boundary0")
    n = spec.domain.n
    with pytest.raises(SchemeFailure) as info:
        monotone_solve(spec, MonotoneConfig(H=1.0, K=0.0), np.full(n, 0.5), np.full(n, 2.0), 1.0)
    assert "iteration" in info.value.details and "node" in info.value.details


def test_iteration_budget_exhaustion():
    spec = constant_spec()
    n = spec.domain.n
    with pytest.raises(NonConvergence) as info:
        monotone_solve(spec, MonotoneConfig(max_iter=2), np.full(n, 0.5), np.full(n, 2.0))
    assert len(info.value.details["gap_history"]) == 2


def test_unordered_barriers_rejected():
    spec = constant_spec()
    n = spec.domain.n
    with pytest.raises(InvalidArgument):
        monotone_solve(spec, MonotoneConfig(), np.full(n, 2.0), np.full(n, 0.5))


def test_relaxation_constant_vanishes_for_constant_barriers():
    spec = constant_spec(left="boundary1", right="boundary0")
    n = spec.domain.n
    assert compute_An(spec, np.full(n, 0.5), np.full(n, 2.0)) == 0.0


def test_relaxation_constant_takes_max_term():
    d = build_interval_mesh(1.0, 20, "boundary1", "boundary0")
    spec = ProblemSpec(d, 0.0, 1.0, 1.0, Exponents(5, -7), PowerSum.from_terms([(2.0, 0.0)], d.n))
    assert compute_An(spec, np.full(d.n, 0.5), np.full(d.n, 2.0)) == 2.0


def test_relaxation_constant_on_radial_members():
    spec = radial_spec(400)
    ex = build_exhaustion(spec.domain, 4)
    pair = build_barriers(spec, ex)
    for k in range(3):
        nodes = ex.members[k]
        sub = spec.restrict(nodes, ex.subdomain(k))
        assert np.isfinite(compute_An(sub, pair.u_minus[nodes], pair.u_plus[nodes]))


def _rect_problem():
    from lichnerowicz.mesh import build_rectangle_mesh

    d = build_rectangle_mesh(1.0, 1.0, 6, 6, {"left": "boundary1"})
    g = PowerSum.from_terms([(1.0, 0.5), (-1.0, 3.0)], d.n)
    return ProblemSpec(d, 0.0, 1.0, 1.0, Exponents(5, -7), g)


def test_truncation_identity_cutoff():
    spec = _rect_problem()
    n = spec.domain.n
    t = truncated_nonlinearity(spec, np.ones(n), np.full(n, 0.5), np.full(n, 2.0), 3.0)
    u = np.linspace(0.6, 1.9, n)
    np.testing.assert_array_equal(t.boundary_g(u), spec.boundary_g(u))


def test_truncation_vanishes_at_midpoint():
    spec = _rect_problem()
    n = spec.domain.n
    um, up = np.full(n, 0.5), np.full(n, 2.0)
    t = truncated_nonlinearity(spec, np.zeros(n), um, up, 3.0)
    np.testing.assert_allclose(t.boundary_g(0.5 * (um + up)), 0.0, atol=1e-15)


def test_truncation_at_lower_barrier_equals_relaxation_constant():
    spec = _rect_problem()
    n = spec.domain.n
    um, up = np.full(n, 0.5), np.full(n, 2.0)
    A = compute_An(spec, um, up)
    t = truncated_nonlinearity(spec, np.zeros(n), um, up, A)
    b1 = spec.domain.boundary1
    gv = t.boundary_g(um)[b1]
    np.testing.assert_allclose(gv, A)
    assert np.all(gv >= spec.boundary_g(um)[b1])


def test_truncation_rejects_touching_barriers():
    spec = _rect_problem()
    n = spec.domain.n
    with pytest.raises(InvalidArgument):
        truncated_nonlinearity(spec, np.zeros(n), np.ones(n), np.ones(n), 1.0)


def test_boundary_cutoff_ramps_to_zero():
    from lichnerowicz.mesh import build_rectangle_mesh

    d = build_rectangle_mesh(2.0, 1.0, 21, 6, {"bottom": "boundary1"})
    ex = build_exhaustion(d, 3, [0.9, 1.6, 10.0])
    sub = ex.subdomain(1)
    psi = boundary_cutoff(sub, ex.boundary1_of(0))
    b1 = sub.boundary1
    assert psi[b1].max() == 1.0 and psi[b1].min() == 0.0
    assert np.all(psi[sub.classes != 2] == 0.0)


def test_single_member_exhaustion_matches_direct_solve():
    spec = radial_spec(300)
    ex = Exhaustion.trivial(spec.domain)
    pair = build_barriers(spec, ex)
    cfg = MonotoneConfig()
    exr = exhaustion_solve(spec, ex, pair, cfg)
    direct = monotone_solve(spec, cfg, pair.u_minus, pair.u_plus)
    np.testing.assert_array_equal(exr.reports[0].solution, direct.solution)
    assert exr.differences == []


@pytest.mark.parametrize("mode", ["sequential", "independent"])
def test_constant_problem_on_every_member(mode):
    d = build_interval_mesh(1.0, 41, "boundary1", "boundary0")
    spec = ProblemSpec(d, 0.0, 1.0, 1.0, Exponents(5, -7))
    pair = order_barriers(np.full(d.n, 0.5), np.ones(d.n), spec)
    ex = build_exhaustion(d, 3)
    exr = exhaustion_solve(spec, ex, pair, MonotoneConfig(tol=1e-12), mode)
    assert exr.failure is None
    for rep in exr.reports:
        np.testing.assert_allclose(rep.solution, 1.0, atol=1e-10)
    for row in exr.differences:
        assert max(row) <= 1e-10


def _radial_bvp(r, D, guess):
    """Collocation solution of u'' + 2u'/r - u/r² - u⁵ + u⁻⁷ = 0, -u'(r0) = √u - u³, u(R) = D."""

    def rhs(x, y):
        u, du = y
        return np.vstack([du, -2.0 * du / x + u / x**2 + u**5 - u**-7])

    def bc(ya, yb):
        return np.array([ya[1] + np.sqrt(ya[0]) - ya[0] ** 3, yb[0] - D])

    x = r[::50]
    y0 = np.vstack([guess[::50], np.gradient(guess[::50], x)])
    sol = solve_bvp(rhs, bc, x, y0, tol=1e-10, max_nodes=100000)
    assert sol.success, sol.message
    return sol.sol(r)[0]


def test_radial_solution_matches_collocation():
    d = build_radial_mesh(1.0, 3.0, 2001, lambda r: r, 3)
    r = d.coords[:, 0]
    g = PowerSum.from_terms([(1.0, 0.5), (-1.0, 3.0)], d.n)
    spec = ProblemSpec(d, -1.0 / r**2, 1.0, 1.0, Exponents(5, -7), g)
    result = solve_lichnerowicz(spec, config=MonotoneConfig(tol=1e-10))
    u = result.solution
    guess = 0.5 * (result.barriers.u_minus + result.barriers.u_plus)
    ref = _radial_bvp(r, u[-1], guess)
    assert np.max(np.abs(u - ref)) <= 1e-5


def test_radial_pipeline_residuals():
    spec = radial_spec(1000)
    ex = build_exhaustion(spec.domain, 4)
    res = solve_lichnerowicz(spec, ex)
    assert res.report.interior_residual <= 1e-7
    assert res.report.boundary_residual <= 1e-7
    assert np.all(res.barriers.u_minus <= res.solution) and np.all(res.solution <= res.barriers.u_plus)
    assert residual(spec, res.solution).sup <= 1e-7


def test_bump_beyond_threshold_fails_structurally():
    spec = radial_spec(600, b=bump_b)
    ex = build_exhaustion(spec.domain, 4)
    with pytest.raises((ConstructionFailure, SchemeFailure, NonConvergence)):
        solve_lichnerowicz(spec, ex, theta=1.0)


def test_hypothesis_order_and_failure():
    d = build_radial_mesh(1.0, 20.0, 300, lambda r: r, 3)
    r = d.coords[:, 0]
    g = PowerSum.from_terms([(1.0, 0.5), (-1.0, 3.0)], d.n)
    spec = ProblemSpec(d, -1.0 / r**2, np.where(r <= 6.0, 1.0, 0.0), 1.0, Exponents(5, -7), g)
    ex = build_exhaustion(d, 4)
    rep = check_hypotheses(spec, ex)
    assert rep.failed[0] == "tail_ratio_absorption"
    with pytest.raises(HypothesisFailure) as info:
        solve_lichnerowicz(spec, ex)
    assert info.value.details["condition"] == "tail_ratio_absorption"


def test_radial_hypotheses_pass(radial):
    rep = check_hypotheses(radial, build_exhaustion(radial.domain, 4))
    assert rep.all_pass, rep.failed
