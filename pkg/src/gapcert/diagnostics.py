"""Independent checks for certified traces.

The solvers in :mod:`gapcert.methods` write traces; this module re-reads
them with fresh arithmetic and reports what holds.  Checks come in two
families:

* column checks act on the recorded scalars only: weight-schedule
  identities, gap-potential monotonicity, the per-step inequality, coupling
  size, and the anchored lower-bound / rate inequalities.  These are the
  checks that still run when all you have is a CSV of columns.
* recompute checks need the recorded vectors: gradients, objective values,
  the lower-bound recursion, and the coupling residuals are rebuilt from
  scratch and compared against what the trace recorded.

Tolerances.  Let ``scale = 1 + |f(x0)| + L * ||x0 - x*||^2``.  Almost every
check runs at the flat ``1e-9 * scale``: the recorded potential and coupling
columns are built from bounded-size increments (objective differences of
nearby points, the m recursion's own increment), so their per-step rounding
error does not grow with the accumulated weight A_k.  The two checks that
compare against quantities assembled from A_k-sized terms
(``phi_anchored_consistent``, which ties the incremental potential to the
anchored gap, and the paranoid direct under-estimator recomputation) are
cancellation-limited and scale their tolerance by ``max(1, A_k)``.  Every
report's ``worst`` field is normalized by the same factor used in its
check, so ``worst <= tol`` iff the check passed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .adgt import (
    Schedule,
    lower_state_advance,
    lower_state_init,
    m_direct,
    anchored_lower_bound,
    coupling_residual,
    potential,
    schedule_advance,
    schedule_init,
    theorem_bound,
)
from .linalg import jacobi_eigh, orthonormal_basis, sym_eig_range
from .methods import CertifiedTrace, claimed_bound, krylov_basis, schedule_mu
from .problem import QuadraticProblem

__all__ = [
    "VerificationReport",
    "SandwichRow",
    "certificate_scale",
    "check_certificate",
    "check_columns",
    "trace_columns",
    "check_cg_orthogonality",
    "check_krylov_membership",
    "restricted_sandwich",
    "theorem_bound",
    "verify_ok",
]

STEP_TOL = 1e-9          # per-step checks, factor scale
ANCHOR_TOL = 1e-9        # anchored checks, factor scale
CONSIST_TOL = 1e-12      # copies of the same number (gap = U - L, etc.)
ORTHOGONALITY_TOL = 1e-8
MEMBERSHIP_TOL = 1e-8
SANDWICH_TOL = 1e-8
SANDWICH_1D_TOL = 1e-6
_GRAD_CUTOFF = 1e-10     # a gradient this small relative to g0 counts as zero
# Orthogonality is claimed only while gradients exceed termination noise.
# Runs terminate at ||g|| <= 1e-8 ||g0||; within a decade of that threshold
# the recomputed inner products are rounding-dominated, so the claim starts
# one decade above it.
ORTHOGONALITY_NOISE_RATIO = 1e-7
_MEMBERSHIP_MAX_N = 64
_SANDWICH_MAX_N = 64

COLUMN_NAMES = (
    "iter", "a", "A", "a_prime", "f_x", "f_y", "grad_norm",
    "U", "L_anchored", "G_anchored", "Phi", "coupling_residual", "bound_rhs",
)


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of one named check over a whole trace.

    ``worst`` is the largest normalized residual seen; ``at_iter`` is the
    row where it occurred (None when the check had nothing to measure).
    """

    check: str
    passed: bool
    worst: float
    at_iter: int | None

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "pass": bool(self.passed),
            "worst": float(self.worst),
            "at_iter": self.at_iter,
        }

    def __str__(self) -> str:
        tag = "pass" if self.passed else "FAIL"
        where = "" if self.at_iter is None else f" at iter {self.at_iter}"
        return f"[{tag}] {self.check}: worst {self.worst:.3e}{where}"


def verify_ok(reports: list[VerificationReport]) -> bool:
    return all(r.passed for r in reports)


def certificate_scale(problem: QuadraticProblem) -> float:
    """Normalization for absolute tolerances on this problem."""
    return problem.tol_scale


class _Worst:
    """Tracks the largest normalized residual and where it happened."""

    def __init__(self) -> None:
        self.value = -math.inf
        self.at: int | None = None
        self.seen = False

    def update(self, residual: float, at_iter: int) -> None:
        self.seen = True
        if residual > self.value or math.isnan(residual):
            self.value = residual
            self.at = at_iter

    def report(self, check: str, tol: float) -> VerificationReport:
        if not self.seen:
            return VerificationReport(check, True, 0.0, None)
        bad = math.isnan(self.value) or self.value > tol
        return VerificationReport(check, not bad, self.value, self.at)


def trace_columns(trace: CertifiedTrace) -> dict[str, np.ndarray]:
    """Scalar columns of a trace, keyed by :data:`COLUMN_NAMES`.

    This is the exact surface the CSV format serializes and the column
    checks consume."""
    rec = trace.records
    return {
        "iter": np.array([r.k for r in rec], dtype=float),
        "a": np.array([r.a for r in rec]),
        "A": np.array([r.A for r in rec]),
        "a_prime": np.array([r.a_prime for r in rec]),
        "f_x": np.array([r.f_x for r in rec]),
        "f_y": np.array([r.f_y for r in rec]),
        "grad_norm": np.array([r.grad_norm for r in rec]),
        "U": np.array([r.cert.U for r in rec]),
        "L_anchored": np.array([r.cert.L_anchored for r in rec]),
        "G_anchored": np.array([r.cert.G_anchored for r in rec]),
        "Phi": np.array([r.cert.Phi for r in rec]),
        "coupling_residual": np.array([r.cert.coupling_residual for r in rec]),
        "bound_rhs": np.array([r.cert.bound_rhs for r in rec]),
    }


def check_columns(
    columns: dict[str, np.ndarray],
    problem: QuadraticProblem,
    method: str,
    *,
    mu_sched: float | None = None,
    anchored: bool = True,
) -> list[VerificationReport]:
    """Run every check that needs only the recorded scalar columns.

    ``columns`` maps the names in :data:`COLUMN_NAMES` to equal-length float
    arrays (``iter`` must be 0..rows-1).  This is the verification surface
    for CSV traces, which carry no iterate vectors; the method name and the
    problem must be supplied alongside because the columns do not encode
    them.
    """
    for name in COLUMN_NAMES:
        if name not in columns:
            raise ValueError(f"missing column {name!r}")
    rows = len(columns["iter"])
    if rows == 0:
        raise ValueError("empty trace")
    if not np.array_equal(columns["iter"], np.arange(rows, dtype=float)):
        raise ValueError("iter column must be 0..rows-1")

    if mu_sched is None:
        mu_sched = schedule_mu(method, problem)
    L = problem.L
    mu0 = L - mu_sched
    # mu0 = 0 is legal only for the single-row mu = L short-circuit runs.
    if mu0 < 0.0 or (mu0 == 0.0 and rows > 1):
        raise ValueError("degenerate conditioning: mu_sched must be below L")
    scale = certificate_scale(problem)
    R2 = problem.radius2
    f_star = problem.f_star

    a = columns["a"]
    A = columns["A"]
    ap = columns["a_prime"]
    f_x = columns["f_x"]
    f_y = columns["f_y"]
    gn = columns["grad_norm"]
    U = columns["U"]
    Lb = columns["L_anchored"]
    G = columns["G_anchored"]
    Phi = columns["Phi"]
    coup = columns["coupling_residual"]
    rhs = columns["bound_rhs"]

    reports: list[VerificationReport] = []

    # schedule_consistency: the three defining identities, checked as data.
    w = _Worst()
    w.update(abs(a[0] - 1.0), 0)
    w.update(abs(A[0] - 1.0), 0)
    for k in range(1, rows):
        wk = mu0 + mu_sched * A[k]
        w.update(abs(A[k] - A[k - 1] - a[k]) / A[k], k)
        w.update(abs(a[k] ** 2 * L - A[k] * wk) / (A[k] * wk), k)
        w.update(abs(ap[k] * wk - a[k] * (mu0 + mu_sched * A[k - 1])) / (a[k] * wk), k)
    reports.append(w.report("schedule_consistency", STEP_TOL))

    # descent_step: each y improves on its query point by the gradient term.
    w = _Worst()
    for k in range(rows):
        w.update((f_y[k] - f_x[k] + gn[k] ** 2 / (2.0 * L)) / scale, k)
    reports.append(w.report("descent_step", STEP_TOL))

    # phi_monotone: the scaled gap A_k G_k never increases.
    w = _Worst()
    for k in range(1, rows):
        w.update((Phi[k] - Phi[k - 1]) / scale, k)
    reports.append(w.report("phi_monotone", STEP_TOL))

    # lemma2_step: one-step potential drop against its closed-form budget.
    # The schedule makes the gradient coefficient vanish; keeping the term
    # means a tampered schedule shows up here too, not only above.
    w = _Worst()
    for k in range(1, rows):
        coef = a[k] ** 2 / (2.0 * (mu0 + mu_sched * A[k])) - A[k] / (2.0 * L)
        budget = coef * gn[k] ** 2 + coup[k]
        w.update((Phi[k] - Phi[k - 1] - budget) / scale, k)
    reports.append(w.report("lemma2_step", STEP_TOL))

    # coupling_small: the query-point combination kills the cross term.
    w = _Worst()
    for k in range(1, rows):
        w.update(abs(coup[k]) / scale, k)
    reports.append(w.report("coupling_small", STEP_TOL))

    if anchored:
        w = _Worst()
        for k in range(rows):
            w.update(abs(G[k] - (U[k] - Lb[k])) / scale, k)
        reports.append(w.report("gap_consistent", CONSIST_TOL))

        w = _Worst()
        for k in range(rows):
            w.update(abs(U[k] - f_y[k]) / scale, k)
        reports.append(w.report("upper_consistent", CONSIST_TOL))

        w = _Worst()
        for k in range(rows):
            w.update((Lb[k] - f_star) / scale, k)
        reports.append(w.report("anchored_lower_bound", ANCHOR_TOL))

        w = _Worst()
        w.update((G[0] - 0.5 * mu0 * R2) / scale, 0)
        reports.append(w.report("prop1_at_0", ANCHOR_TOL))

        w = _Worst()
        for k in range(rows):
            w.update((f_y[k] - f_star - rhs[k]) / scale, k)
        reports.append(w.report("bound_holds", ANCHOR_TOL))

        w = _Worst()
        for k in range(rows):
            want = claimed_bound(method, k, problem.mu, L, R2)
            w.update(abs(rhs[k] - want) / (1.0 + abs(want)), k)
        reports.append(w.report("bound_rhs_recompute", CONSIST_TOL))

        # Tie the incrementally built potential to the anchored gap: the
        # two agree exactly in real arithmetic but the right side is a
        # difference of A_k-sized terms, so this is the one column check
        # whose tolerance must grow with A_k.
        w = _Worst()
        for k in range(rows):
            tie = Phi[k] - (A[k] * G[k] - 0.5 * mu0 * R2)
            w.update(abs(tie) / (scale * max(1.0, A[k])), k)
        reports.append(w.report("phi_anchored_consistent", STEP_TOL))

    return reports


def _recompute_checks(
    trace: CertifiedTrace, mu_sched: float, paranoid: bool
) -> list[VerificationReport]:
    """Rebuild schedule, gradients, and the lower-bound recursion from the
    recorded iterates and compare against the recorded columns."""
    problem = trace.problem
    scale = certificate_scale(problem)
    rec = trace.records

    w_grad = _Worst()
    w_obj = _Worst()
    w_v = _Worst()
    w_lower = _Worst()
    w_phi = _Worst()
    w_coup = _Worst()
    w_m = _Worst()

    if mu_sched >= problem.L:
        # single-row mu = L runs: no advance exists, but k = 0 is well-defined
        sched = Schedule(
            k=0, a=1.0, A=1.0, a_prime=None, mu=mu_sched, mu0=0.0, L=problem.L
        )
    else:
        sched = schedule_init(mu_sched, problem.L)
    xs: list[np.ndarray] = []
    gs: list[np.ndarray] = []
    weights: list[float] = []
    state = None
    phi = 0.0
    y_prev = None
    v_prev = None

    for r in rec:
        g_rec = problem.grad(r.x)
        gnorm = float(np.linalg.norm(g_rec))
        w_grad.update(
            float(np.linalg.norm(g_rec - r.g)) / (1.0 + gnorm), r.k
        )
        w_obj.update(abs(problem.eval(r.x) - r.f_x) / scale, r.k)
        w_obj.update(abs(problem.eval(r.y) - r.f_y) / scale, r.k)
        w_obj.update(abs(r.cert.U - r.f_y) / scale, r.k)

        if r.k == 0:
            state = lower_state_init(problem.x0, r.f_x, g_rec, sched)
            phi = potential(r.f_y, sched, state)
        else:
            sched = schedule_advance(sched)
            coup_rec = coupling_residual(
                g_rec, r.x, y_prev, v_prev, sched.A - sched.a, sched.a_prime
            )
            w_coup.update(abs(coup_rec - r.cert.coupling_residual) / scale, r.k)
            state, dm = lower_state_advance(state, sched, r.x, r.f_x, g_rec)
            phi += (
                (sched.A - sched.a) * problem.eval_diff(r.y, y_prev)
                + sched.a * problem.eval_diff(r.y, r.x)
                - dm
            )

        xs.append(r.x)
        gs.append(g_rec)
        weights.append(sched.a)
        if r.v is not None:
            w_v.update(
                float(np.linalg.norm(state.v - r.v))
                / (1.0 + float(np.linalg.norm(state.v))),
                r.k,
            )
        if trace.anchored:
            lb = anchored_lower_bound(sched, state, problem.radius2)
            w_lower.update(abs(lb - r.cert.L_anchored) / scale, r.k)
        w_phi.update(abs(phi - r.cert.Phi) / scale, r.k)
        if paranoid:
            m_ref = m_direct(
                state.v, weights, xs, gs, mu_sched, sched.mu0, problem.x0
            )
            w_m.update(
                abs(m_ref - state.m_at_v) / (scale * max(1.0, sched.A)), r.k
            )
        y_prev = r.y
        v_prev = state.v

    reports = [
        w_grad.report("gradient_recompute", ANCHOR_TOL),
        w_obj.report("objective_recompute", ANCHOR_TOL),
        w_v.report("v_recompute", 1e-8),
        w_phi.report("phi_recompute", STEP_TOL),
        w_coup.report("coupling_recompute", STEP_TOL),
    ]
    if trace.anchored:
        reports.insert(3, w_lower.report("lower_anchored_recompute", ANCHOR_TOL))
    if paranoid:
        reports.append(w_m.report("m_direct_recompute", STEP_TOL))
    return reports


def check_certificate(
    trace: CertifiedTrace, *, paranoid: bool | None = None
) -> list[VerificationReport]:
    """Full verification pass over a certified trace.

    Runs every column check plus the vector recompute checks.  ``paranoid``
    additionally rebuilds each lower-model value by the direct quadratic
    sum (cost grows with k squared); by default it turns on for problems
    with at most 64 variables.
    """
    if not trace.certified:
        raise ValueError(
            f"method {trace.method!r} carries no certificate to check"
        )
    if paranoid is None:
        paranoid = trace.problem.n <= 64
    cols = trace_columns(trace)
    reports = check_columns(
        cols,
        trace.problem,
        trace.method,
        mu_sched=trace.mu_sched,
        anchored=trace.anchored,
    )
    reports.extend(_recompute_checks(trace, trace.mu_sched, paranoid))
    return reports


def check_cg_orthogonality(
    trace: CertifiedTrace, *, noise_ratio: float = ORTHOGONALITY_NOISE_RATIO
) -> VerificationReport:
    """Worst normalized inner product between gradients at distinct
    conjugate-gradient iterates.

    Gradients with norm below ``noise_ratio`` times the starting gradient's
    norm are excluded as termination noise: recomputing the gradient of a
    nearly converged iterate costs an absolute error around machine epsilon
    times the problem's natural gradient magnitude, and once that error is
    within a couple of digits of the gradient itself the normalized inner
    product measures rounding, not geometry.  The default sits one decade
    above the 1e-8 relative-gradient threshold the structural claims use
    for termination.
    """
    if trace.method not in ("cg", "cg_shadow"):
        raise ValueError("orthogonality check applies to conjugate-gradient traces")
    problem = trace.problem
    g0n = float(np.linalg.norm(problem.grad(problem.x0)))
    grads = []
    for r in trace.records:
        g = problem.grad(r.y)
        n = float(np.linalg.norm(g))
        if n > noise_ratio * g0n:
            grads.append((r.k, g, n))
    w = _Worst()
    for idx, (ki, gi, ni) in enumerate(grads):
        for kj, gj, nj in grads[idx + 1:]:
            w.update(abs(float(np.dot(gi, gj))) / (ni * nj), kj)
    return w.report("cg_orthogonality", ORTHOGONALITY_TOL)


def check_krylov_membership(trace: CertifiedTrace) -> list[VerificationReport]:
    """Confirm the iterates live in the nested families of subspaces
    reachable by repeated multiplication with the matrix.

    With K_i spanned by the first i vectors A d, A^2 d, ..., A^i d for
    d = x0 - x*, the query point at row i lies in x0 + K_i and the
    lower-model minimizer at row i lies in x0 + K_{i+1}.  Residuals are
    normalized by 1 + the projected vector's norm.  Intended for small
    problems; refuses n > 64 because the basis cost grows cubically.
    """
    problem = trace.problem
    if problem.n > _MEMBERSHIP_MAX_N:
        raise ValueError(f"membership check is limited to n <= {_MEMBERSHIP_MAX_N}")
    if trace.records[0].v is None:
        raise ValueError("membership check needs a certified trace with v iterates")
    depth = min(len(trace.records), problem.n)
    basis = krylov_basis(problem, depth)

    def residual(vec: np.ndarray, dim: int) -> float:
        shifted = vec - problem.x0
        use = min(dim, len(basis))
        if use > 0:
            Q = np.column_stack(basis[:use])
            shifted = shifted - Q @ (Q.T @ shifted)
        return float(np.linalg.norm(shifted)) / (
            1.0 + float(np.linalg.norm(vec - problem.x0))
        )

    w_x = _Worst()
    w_v = _Worst()
    for r in trace.records:
        w_x.update(residual(r.x, r.k), r.k)
        w_v.update(residual(r.v, r.k + 1), r.k)
    return [
        w_x.report("krylov_membership_x", MEMBERSHIP_TOL),
        w_v.report("krylov_membership_v", MEMBERSHIP_TOL),
    ]


@dataclass(frozen=True)
class SandwichRow:
    """Curvature window seen from one conjugate-gradient iterate.

    ``mu_i`` comes from the compressed inverse on the unexplored
    complement (sharp for the distance to optimality), ``ell_i`` from the
    compressed matrix itself (safe for the one-step progress bound).
    """

    i: int
    comp_dim: int
    mu_i: float
    ell_i: float
    f_y: float
    f_y_next: float
    grad_norm: float


def restricted_sandwich(
    trace: CertifiedTrace, *, _operator: str = "hybrid"
) -> tuple[list[SandwichRow], list[VerificationReport]]:
    """Per-iterate two-sided curvature estimates for conjugate gradients.

    At iterate i with gradient g, let C span the orthogonal complement of
    the explored subspace K_i.  The checks certify, with mu_i and ell_i
    read off compressions of the matrix onto C:

    * lower:  f* >= f(y_i) - ||g||^2 / (2 mu_i),
    * upper:  f(y_i) - f(y_{i+1}) >= ||g||^2 / (2 ell_i),
    * mid:    f(y_{i+1}) >= f*,
    * a one-dimensional complement forces exact termination next step.

    The default operator pairs mu_i = 1 / lambda_max of the compressed
    (pseudo-)inverse with ell_i = lambda_max of the compressed matrix; both
    inequalities are exact statements about the quadratic, so failures mean
    arithmetic or bookkeeping bugs, not model error.  ``_operator`` admits
    "harmonic" and "arithmetic" single-compression variants for comparison;
    the harmonic upper side and the arithmetic lower side are not valid in
    general and can genuinely fail.
    """
    if trace.method != "cg":
        raise ValueError("sandwich check applies to plain conjugate-gradient traces")
    problem = trace.problem
    n = problem.n
    if n > _SANDWICH_MAX_N:
        raise ValueError(f"sandwich check is limited to n <= {_SANDWICH_MAX_N}")
    if _operator not in ("hybrid", "harmonic", "arithmetic"):
        raise ValueError(f"unknown operator {_operator!r}")

    scale = certificate_scale(problem)
    f_star = problem.f_star
    eigs, V = jacobi_eigh(problem.A)
    lam_max = eigs[-1]
    pinv_eigs = np.where(eigs > 1e-12 * lam_max, 1.0 / np.where(eigs == 0, 1.0, eigs), 0.0)
    A_pinv = (V * pinv_eigs) @ V.T
    singular = bool(np.any(eigs <= 1e-12 * lam_max))

    depth = min(len(trace.records) - 1, n)
    basis = krylov_basis(problem, depth) if depth > 0 else []
    g0n = float(np.linalg.norm(problem.grad(problem.x0)))
    eye = np.eye(n)

    rows: list[SandwichRow] = []
    w_lower = _Worst()
    w_upper = _Worst()
    w_mid = _Worst()
    w_1d = _Worst()
    w_env = _Worst()

    for i in range(len(trace.records) - 1):
        y = trace.records[i].y
        y_next = trace.records[i + 1].y
        g = problem.grad(y)
        gn = float(np.linalg.norm(g))
        if gn <= _GRAD_CUTOFF * g0n:
            continue
        use = min(i, len(basis))
        if use > 0:
            Q = np.column_stack(basis[:use])
            proj = eye - Q @ Q.T
        else:
            proj = eye
        comp = orthonormal_basis([proj[:, j] for j in range(n)])
        if not comp:
            continue
        C = np.column_stack(comp)
        H = C.T @ A_pinv @ C
        h_min, h_max = sym_eig_range(H)
        if h_max <= 0.0:
            continue
        M = C.T @ problem.A @ C
        m_min, m_max = sym_eig_range(M)
        if _operator == "harmonic":
            mu_i = 1.0 / h_max
            ell_i = math.inf if h_min <= 1e-14 * h_max else 1.0 / h_min
        elif _operator == "arithmetic":
            mu_i, ell_i = m_min, m_max
        else:
            mu_i = 1.0 / h_max
            ell_i = m_max

        fy = problem.eval(y)
        fy_next = problem.eval(y_next)
        rows.append(SandwichRow(i, len(comp), mu_i, ell_i, fy, fy_next, gn))

        w_lower.update((fy - gn ** 2 / (2.0 * mu_i) - f_star) / scale, i)
        drop = 0.0 if math.isinf(ell_i) else gn ** 2 / (2.0 * ell_i)
        w_upper.update((drop - (fy - fy_next)) / scale, i)
        w_mid.update((f_star - fy_next) / scale, i)
        if len(comp) == 1:
            w_1d.update(abs(fy_next - f_star) / scale, i)
        env = max(
            (problem.mu - mu_i) / problem.L,
            (mu_i - ell_i) / problem.L,
        )
        if not math.isinf(ell_i) and (_operator != "harmonic" or not singular):
            env = max(env, (ell_i - problem.L) / problem.L)
        w_env.update(env, i)

    reports = [
        w_lower.report("sandwich_lower", SANDWICH_TOL),
        w_upper.report("sandwich_upper", SANDWICH_TOL),
        w_mid.report("sandwich_mid", SANDWICH_TOL),
        w_1d.report("sandwich_exact_1d", SANDWICH_1D_TOL),
        w_env.report("sandwich_envelope", SANDWICH_TOL),
    ]
    return rows, reports
