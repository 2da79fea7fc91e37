"""Method drivers: hand-checkable rows, stop statuses, options, oracles."""

import math

import numpy as np
import pytest

from conftest import hand_problem
from gapcert.adgt import schedule_advance, schedule_init, theorem_bound
from gapcert.methods import (
    METHOD_KINDS,
    MethodOptions,
    cg_krylov_oracle,
    claimed_bound,
    krylov_basis,
    run_method,
    schedule_mu,
)
from gapcert.problem import SpectrumSpec, gen_spectrum_problem, make_problem, spectrum_profile

HAND_TOL = 1e-12


def small_problem(n=10, kappa=50.0, seed=61, profile="geometric"):
    return gen_spectrum_problem(
        SpectrumSpec(spectrum_profile(profile, n, kappa), seed=seed, x0_mode="seeded"))


# ---------------------------------------------------------------- hand fixture

def test_nesterov_hand_row0():
    p = hand_problem()
    tr = run_method(p, "nesterov", iters=4)
    r = tr.records[0]
    assert (r.k, r.a, r.A) == (0, 1.0, 1.0)
    assert math.isnan(r.a_prime)
    np.testing.assert_array_equal(r.x, [1.0, 1.0])
    np.testing.assert_allclose(r.y, [0.5, 0.0], atol=HAND_TOL)
    np.testing.assert_allclose(r.v, [0.5, 0.0], atol=HAND_TOL)
    assert abs(r.f_x - 1.5) <= HAND_TOL
    assert abs(r.f_y - 0.125) <= HAND_TOL
    assert abs(r.grad_norm - math.sqrt(5.0)) <= HAND_TOL
    assert abs(r.cert.U - 0.125) <= HAND_TOL
    assert abs(r.cert.L_anchored - (-0.75)) <= HAND_TOL
    assert abs(r.cert.G_anchored - 0.875) <= HAND_TOL
    assert abs(r.cert.Phi - (-0.125)) <= HAND_TOL
    assert abs(r.cert.bound_rhs - 1.0) <= HAND_TOL  # (L - mu)/2 * R^2 at k = 0


def test_nesterov_hand_row1():
    p = hand_problem()
    tr = run_method(p, "nesterov", iters=4)
    r = tr.records[1]
    s = schedule_advance(schedule_init(1.0, 2.0))
    assert abs(r.a - s.a) <= HAND_TOL
    assert abs(r.A - s.A) <= HAND_TOL
    assert abs(r.a_prime - s.a_prime) <= HAND_TOL
    # y0 = v0 = (1/2, 0), so the momentum combination stays put
    np.testing.assert_allclose(r.x, [0.5, 0.0], atol=1e-15)
    np.testing.assert_allclose(r.y, [0.25, 0.0], atol=1e-15)
    assert abs(r.f_y - 0.03125) <= HAND_TOL
    assert abs(r.cert.coupling_residual) <= 1e-14
    assert r.cert.G_anchored <= claimed_bound("nesterov", 1, 1.0, 2.0, 2.0) + HAND_TOL


def test_nemirovski_plane_hand_hits_optimum_in_one_step():
    # span{y0, v0} is the x-axis, which contains the minimizer (0,0)
    p = hand_problem()
    tr = run_method(p, "nemirovski_plane", iters=4)
    assert tr.status == "exact"
    assert len(tr.records) == 2
    r = tr.records[1]
    np.testing.assert_allclose(r.x, [0.0, 0.0], atol=1e-14)
    assert abs(r.f_y - 0.0) <= HAND_TOL
    # flat schedule: A1 = 1 + golden ratio, mu0 = L, and the gap identity
    # G1 = ((mu0/2) R^2 + Phi1) / A1 = (2 - 1/4) / A1 stays hand-checkable.
    # The point is optimal but the lower model has not caught up yet.
    A1 = 2.618033988749895
    assert abs(r.cert.Phi - (-0.25)) <= HAND_TOL
    assert abs(r.cert.G_anchored - 1.75 / A1) <= HAND_TOL
    assert r.f_y - p.f_star <= r.cert.bound_rhs + HAND_TOL


def test_cg_hand_values():
    p = hand_problem()
    tr = run_method(p, "cg", iters=6)
    r1 = tr.records[1]
    np.testing.assert_allclose(r1.y, [4.0 / 9.0, -1.0 / 9.0], atol=HAND_TOL)
    assert abs(r1.f_y - 1.0 / 9.0) <= HAND_TOL
    assert tr.records[-1].k == 2
    assert tr.status in ("exact", "grad_tol")
    assert abs(tr.records[-1].f_y - p.f_star) <= HAND_TOL


# ---------------------------------------------------------------- schedules

def test_schedule_mu_per_method():
    p = small_problem()
    assert p.mu > 0.0
    assert schedule_mu("nesterov", p) == p.mu
    assert schedule_mu("cg_shadow", p) == p.mu
    assert schedule_mu("nemirovski_plane", p) == 0.0
    assert schedule_mu("nemirovski_line", p) == 0.0
    assert run_method(p, "nemirovski_plane", iters=3).mu_sched == 0.0
    assert run_method(p, "nesterov", iters=3).mu_sched == p.mu


def test_claimed_bound_branches():
    # nemirovski methods claim only the polynomial rate
    for k in range(5):
        poly = 4.0 / ((k + 1) * (k + 2)) * 0.5 * (2.0 - 1.0) * 2.0
        assert claimed_bound("nemirovski_line", k, 1.0, 2.0, 2.0) == poly
        assert claimed_bound("nemirovski_plane", k, 1.0, 2.0, 2.0) == poly
    # nesterov and the shadow claim the two-branch theorem rate
    for k in range(5):
        assert claimed_bound("nesterov", k, 1.0, 2.0, 2.0) \
            == theorem_bound(k, 1.0, 2.0, 2.0)
        assert claimed_bound("cg_shadow", k, 1.0, 2.0, 2.0) \
            == theorem_bound(k, 1.0, 2.0, 2.0)


# ---------------------------------------------------------------- trace shape

def test_records_are_contiguous_and_default_iters():
    p = small_problem(n=6, kappa=1e4)
    tr = run_method(p, "nesterov", grad_tol=0.0,
                    options=MethodOptions(gap_floor=0.0))
    assert [r.k for r in tr.records] == list(range(2 * p.n + 1))
    assert tr.status == "max_iters"


def test_momentum_query_point_formula():
    p = small_problem(n=8)
    tr = run_method(p, "nesterov", iters=10, grad_tol=0.0)
    for prev, r in zip(tr.records, tr.records[1:]):
        A_prev = r.A - r.a
        combo = (A_prev * prev.y + r.a_prime * prev.v) / (A_prev + r.a_prime)
        assert np.linalg.norm(r.x - combo) <= 1e-12 * (1.0 + np.linalg.norm(combo))


def test_descent_and_bound_per_row():
    p = small_problem(n=12, kappa=300.0, seed=63)
    tol = 1e-9 * p.tol_scale
    for method in ("nesterov", "cg_shadow", "nemirovski_plane", "nemirovski_line"):
        tr = run_method(p, method, iters=30, grad_tol=1e-12)
        assert tr.warnings == ()
        phi_prev = None
        for r in tr.records:
            assert r.cert.G_anchored >= -tol
            # the claimed rate caps the true error on every row
            assert r.f_y - p.f_star <= r.cert.bound_rhs + tol
            if method in ("nesterov", "cg_shadow"):
                # mu-schedule methods: even the certified gap obeys the claim
                assert r.cert.G_anchored <= r.cert.bound_rhs + tol
            assert abs(r.cert.bound_rhs
                       - claimed_bound(method, r.k, p.mu, p.L, p.radius2)) == 0.0
            if phi_prev is not None:
                assert r.cert.Phi <= phi_prev + tol
            phi_prev = r.cert.Phi


def test_plane_span_gradient_orthogonal_to_plane():
    p = small_problem(n=9, seed=64)
    tr = run_method(p, "nemirovski_plane", iters=12, grad_tol=1e-12)
    A_norm = np.linalg.norm(p.A)
    for prev, r in zip(tr.records, tr.records[1:]):
        cap = 1e-9 * A_norm * (1.0 + np.linalg.norm(r.x))
        assert abs(np.dot(r.g, prev.y)) <= cap * np.linalg.norm(prev.y)
        assert abs(np.dot(r.g, prev.v)) <= cap * np.linalg.norm(prev.v)


def test_line_gradient_orthogonal_to_search_direction():
    p = small_problem(n=9, seed=65)
    tr = run_method(p, "nemirovski_line", iters=12, grad_tol=1e-12)
    A_norm = np.linalg.norm(p.A)
    for prev, r in zip(tr.records, tr.records[1:]):
        d = prev.v - prev.y
        cap = 1e-9 * A_norm * np.linalg.norm(d) * (1.0 + np.linalg.norm(r.x))
        assert abs(np.dot(r.g, d)) <= cap


def test_footnote_affine_plane_variant():
    p = small_problem(n=8, seed=66)
    tr = run_method(p, "nemirovski_plane", iters=14, grad_tol=1e-12,
                    options=MethodOptions(plane_variant="footnote_affine"))
    tol = 1e-9 * p.tol_scale
    for r in tr.records:
        assert r.f_y - p.f_star <= r.cert.bound_rhs + tol
        assert r.cert.G_anchored >= -tol


# ---------------------------------------------------------------- cg

def test_cg_monotone_descent():
    p = small_problem(n=14, kappa=500.0, seed=67)
    tr = run_method(p, "cg", iters=2 * p.n, grad_tol=0.0)
    for prev, r in zip(tr.records, tr.records[1:]):
        assert r.f_y <= prev.f_y + 1e-12 * p.tol_scale


def test_cg_terminates_within_n_at_structural_tolerance():
    p = small_problem(n=12, kappa=100.0, seed=68, profile="uniform")
    tr = run_method(p, "cg", iters=2 * p.n, grad_tol=1e-8)
    assert tr.status in ("exact", "grad_tol")
    assert tr.records[-1].k <= p.n


def test_cg_matches_subspace_oracle():
    p = small_problem(n=10, kappa=40.0, seed=69)
    tr = run_method(p, "cg", iters=p.n, grad_tol=1e-10)
    cap = 1e-9 * (1.0 + abs(p.eval(p.x0)))
    for r in tr.records[1:]:
        oracle = cg_krylov_oracle(p, r.k)
        assert abs(r.f_y - p.eval(oracle)) <= cap


def test_cg_oracle_check_option_passes_on_honest_runs():
    p = small_problem(n=8, seed=70)
    tr = run_method(p, "cg", iters=p.n, grad_tol=1e-10,
                    options=MethodOptions(cg_oracle_check=True))
    assert tr.status in ("exact", "grad_tol", "max_iters")


def test_cg_exact_termination_on_single_mode_start():
    # x0 - x* along one eigenvector: one step, residual exactly zero
    p = make_problem(np.diag([1.0, 2.0]), [0.0, 0.0], [1.0, 0.0])
    tr = run_method(p, "cg", iters=4)
    assert tr.status == "exact"
    assert tr.records[-1].k == 1
    np.testing.assert_array_equal(tr.records[-1].y, [0.0, 0.0])


def test_cg_shadow_reproduces_plain_cg_points():
    """The shadow's row k certifies the conjugate-gradient iterate k+1:
    its y points are the plain run's, shifted by one index."""
    p = small_problem(n=10, kappa=80.0, seed=71)
    plain = run_method(p, "cg", iters=p.n, grad_tol=1e-10)
    shadow = run_method(p, "cg_shadow", iters=p.n, grad_tol=1e-10)
    for b in shadow.records:
        if b.k + 1 >= len(plain.records):
            break
        a = plain.records[b.k + 1]
        assert np.array_equal(a.y, b.y)
        assert a.f_y == b.f_y
    # the shadow adds a certificate on top
    assert not math.isnan(shadow.records[1].cert.G_anchored)
    assert math.isnan(plain.records[1].cert.G_anchored)


def test_cg_certify_option_upgrades():
    p = small_problem(n=6, seed=72)
    tr = run_method(p, "cg", iters=6, options=MethodOptions(cg_certify=True))
    assert tr.method == "cg_shadow"
    assert tr.certified


# ---------------------------------------------------------------- gd

def test_gd_row_semantics():
    p = small_problem(n=7, seed=73)
    tr = run_method(p, "gradient_descent", iters=9, grad_tol=0.0)
    for r in tr.records:
        np.testing.assert_array_equal(r.y, r.x - r.g / p.L)
        assert math.isnan(r.cert.G_anchored)
        assert math.isnan(r.cert.Phi)
    for prev, r in zip(tr.records, tr.records[1:]):
        np.testing.assert_array_equal(r.x, prev.y)
        assert r.f_y <= prev.f_y


# ---------------------------------------------------------------- statuses

def test_status_grad_tol():
    p = small_problem(n=8, kappa=10.0, seed=74)
    tr = run_method(p, "nesterov", iters=400, grad_tol=1e-6,
                    options=MethodOptions(gap_floor=0.0))
    assert tr.status == "grad_tol"
    assert tr.records[-1].grad_norm <= 1e-6 * tr.records[0].grad_norm


def test_status_gap_floor():
    p = small_problem(n=8, kappa=10.0, seed=74)
    tr = run_method(p, "nesterov", iters=2000, grad_tol=0.0)
    assert tr.status == "gap_floor"
    assert tr.records[-1].cert.G_anchored <= 1e-12 * p.tol_scale
    # disabling the floor runs to the iteration cap
    tr2 = run_method(p, "nesterov", iters=60, grad_tol=0.0,
                     options=MethodOptions(gap_floor=0.0))
    assert tr2.status == "max_iters"


def test_gap_floor_ignored_without_anchor():
    p = small_problem(n=8, kappa=10.0, seed=74)
    tr = run_method(p, "nesterov", iters=300, grad_tol=0.0, anchored=False)
    assert tr.status == "max_iters"


def test_unanchored_trace_has_no_anchor_columns():
    p = small_problem(n=6, seed=75)
    tr = run_method(p, "nesterov", iters=8, grad_tol=0.0, anchored=False)
    for r in tr.records:
        assert math.isnan(r.cert.L_anchored)
        assert math.isnan(r.cert.G_anchored)
        assert math.isnan(r.cert.bound_rhs)
        assert math.isfinite(r.cert.Phi)
        assert math.isfinite(r.cert.U)


# ---------------------------------------------------------------- mu = L

def test_mu_equals_L_certified_methods_close_at_step_zero():
    """A multiple of the identity: one gradient step is exact. The methods
    on the mu schedule cannot advance their weights (mu0 = 0) and return
    the single fully closed k = 0 row instead; the flat-schedule methods
    and the uncertified drivers simply converge."""
    p = make_problem(2.0 * np.eye(3), [0.0, 0.0, 0.0], [1.0, 2.0, 3.0])
    assert p.mu == p.L
    for method in ("nesterov", "cg_shadow"):
        tr = run_method(p, method, iters=5)
        assert tr.status == "exact"
        assert len(tr.records) == 1
        r = tr.records[0]
        assert (r.a, r.A) == (1.0, 1.0)
        assert r.cert.G_anchored == 0.0
        assert abs(r.f_y - p.f_star) <= 1e-15 * p.tol_scale
        assert tr.mu_sched == p.L
    for method in ("nemirovski_plane", "nemirovski_line", "cg", "gradient_descent"):
        tr = run_method(p, method, iters=5)
        assert tr.status == "exact"
        assert abs(tr.records[-1].f_y - p.f_star) <= 1e-15 * p.tol_scale


# ---------------------------------------------------------------- options

def test_validation_errors():
    p = hand_problem()
    with pytest.raises(ValueError, match="unknown method"):
        run_method(p, "momentum")
    with pytest.raises(ValueError, match="at least 1"):
        run_method(p, "nesterov", iters=0)
    with pytest.raises(ValueError, match="nonnegative"):
        run_method(p, "nesterov", grad_tol=-1e-9)
    with pytest.raises(ValueError, match="certified methods only"):
        run_method(p, "cg", options=MethodOptions(fault=("a_inflate", 1, 1e-6)))
    with pytest.raises(ValueError, match="plane_variant"):
        MethodOptions(plane_variant="cubic")
    with pytest.raises(ValueError, match="unknown fault"):
        MethodOptions(fault=("swap_xy", 1))


def test_method_kinds_tuple():
    assert METHOD_KINDS == ("nesterov", "nemirovski_plane", "nemirovski_line",
                            "cg", "cg_shadow", "gradient_descent")


def test_paranoid_mode_accepts_honest_runs():
    p = small_problem(n=10, seed=76)
    tr = run_method(p, "nesterov", iters=20, grad_tol=1e-12,
                    options=MethodOptions(paranoid=True))
    assert tr.warnings == ()


def test_fault_runs_produce_a_trace_without_self_rejection():
    p = small_problem(n=8, seed=77)
    for fault in (("a_inflate", 2, 1e-6), ("y_equals_x", 2), ("v_drop_mu", 2)):
        tr = run_method(p, "nesterov", iters=6, grad_tol=0.0,
                        options=MethodOptions(fault=fault))
        assert len(tr.records) == 7
        assert tr.warnings == ()


def test_runs_are_deterministic():
    p = small_problem(n=9, seed=78)
    a = run_method(p, "nesterov", iters=15, grad_tol=0.0)
    b = run_method(p, "nesterov", iters=15, grad_tol=0.0)
    for ra, rb in zip(a.records, b.records):
        assert np.array_equal(ra.x, rb.x)
        assert np.array_equal(ra.v, rb.v)
        assert ra.f_y == rb.f_y
        assert ra.cert.Phi == rb.cert.Phi
