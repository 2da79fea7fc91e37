"""Certified first-order methods for convex quadratics.

Five methods share one driver:

* ``nesterov``: query point is the momentum combination
  ``x_k = (A_{k-1} y_{k-1} + a'_k v_{k-1}) / (A_{k-1} + a'_k)``, descent step
  ``y_k = x_k - (1/L) grad f(x_k)``.
* ``nemirovski_plane``: query point minimizes f exactly over a
  two-dimensional subspace spanned by ``y_{k-1}`` and ``v_{k-1}`` (variant
  ``"span"``), or over the affine plane through ``y_{k-1}`` spanned by
  ``y_{k-1} - x0`` and the accumulated weighted gradient sum (variant
  ``"footnote_affine"``). Both run on the mu = 0 schedule.
* ``nemirovski_line``: query point minimizes f exactly on the segment line
  through ``y_{k-1}`` and ``v_{k-1}``; mu = 0 schedule.
* ``cg``: conjugate gradients by the classical two-term recurrence. With
  ``kind="cg_shadow"`` the driver additionally certifies the run by pairing
  each conjugate-gradient iterate ``y_{k+1}`` with a momentum query point
  ``x_k``; since ``y_{k+1}`` minimizes f over a subspace containing
  ``x_k - (1/L) grad f(x_k)``, the pair satisfies every inequality the
  certificate needs, one index ahead of the plain methods. The rate claim at
  row ``k`` therefore covers the conjugate-gradient iterate ``k+1``.
* ``gradient_descent``: fixed-step baseline, no certificate.

Certified rows carry the weight schedule, the anchor-free potential, the
anchored gap, the momentum-coupling residual, and the guaranteed rate bound;
verification of all of these lives in :mod:`gapcert.diagnostics`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .adgt import (
    LowerBoundState,
    Schedule,
    anchored_lower_bound,
    coupling_residual,
    lower_state_advance,
    lower_state_init,
    m_direct,
    potential,
    schedule_advance,
    schedule_init,
    theorem_bound,
)
from .linalg import SubspaceSpec, affine_subspace_min
from .problem import QuadraticProblem

__all__ = [
    "METHOD_KINDS",
    "MethodOptions",
    "Certificate",
    "TraceRecord",
    "CertifiedTrace",
    "run_method",
    "krylov_basis",
    "cg_krylov_oracle",
]

METHOD_KINDS = (
    "nesterov",
    "nemirovski_plane",
    "nemirovski_line",
    "cg",
    "cg_shadow",
    "gradient_descent",
)

_CERTIFIED = ("nesterov", "nemirovski_plane", "nemirovski_line", "cg_shadow")

_PARANOID_AUTO_N = 64
_ORACLE_TOL = 1e-9
_NAN = float("nan")


@dataclass(frozen=True)
class MethodOptions:
    """Run options.

    ``cg_certify`` upgrades a ``"cg"`` run to the certified shadow run
    (same as passing kind ``"cg_shadow"`` directly). ``paranoid=None``
    enables the direct recomputation of the under-estimator value
    automatically for n <= 64. ``fault`` is a verification self-test hook:
    it corrupts the run in a prescribed way ("a_inflate", k, eps) /
    ("y_equals_x", k) / ("v_drop_mu", k) and disables the run-time
    self-checks so the corrupted trace reaches the verifier, which must
    then reject it. ``gap_floor`` ends an anchored certified run once the
    certified gap falls below ``gap_floor * scale``: past that point the
    rattle of the iterates at machine precision gets amplified by the
    geometrically growing weights and the per-step columns stop being
    meaningful. Set it to 0.0 to disable.
    """

    plane_variant: str = "span"
    cg_certify: bool = False
    cg_oracle_check: bool = False
    paranoid: bool | None = None
    fault: tuple | None = None
    gap_floor: float = 1e-12

    def __post_init__(self):
        if self.plane_variant not in ("span", "footnote_affine"):
            raise ValueError(f"unknown plane_variant {self.plane_variant!r}")
        if self.fault is not None:
            name = self.fault[0]
            if name not in ("a_inflate", "y_equals_x", "v_drop_mu"):
                raise ValueError(f"unknown fault {name!r}")


@dataclass(frozen=True)
class Certificate:
    """Per-iteration certificate values (NaN where a field is not claimed)."""

    U: float
    L_anchored: float
    G_anchored: float
    Phi: float
    coupling_residual: float
    bound_rhs: float


@dataclass(frozen=True)
class TraceRecord:
    k: int
    a: float
    A: float
    a_prime: float
    x: np.ndarray
    y: np.ndarray
    g: np.ndarray
    v: np.ndarray | None
    f_x: float
    f_y: float
    grad_norm: float
    cert: Certificate


@dataclass(frozen=True)
class CertifiedTrace:
    """Immutable run record: one row per iteration, k = 0 included.

    ``warnings`` holds run-time self-check violations (descent inequality,
    potential monotonicity); they are recorded rather than raised so a
    suspect trace can still be dumped and inspected.
    """

    method: str
    records: tuple[TraceRecord, ...]
    status: str
    problem: QuadraticProblem
    mu_sched: float
    anchored: bool
    options: MethodOptions = field(default_factory=MethodOptions)
    warnings: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.records)

    @property
    def certified(self) -> bool:
        return self.method in _CERTIFIED


def claimed_bound(method: str, k: int, mu: float, L: float, R2: float) -> float:
    """Rate claim attached to row k.

    The momentum methods with exact subspace searches run on the mu = 0
    schedule, so only the polynomial branch of the rate is claimed for them;
    nesterov and the certified conjugate-gradient shadow claim the full
    two-branch bound.
    """
    if method in ("nemirovski_plane", "nemirovski_line"):
        return 4.0 / ((k + 1) * (k + 2)) * 0.5 * (L - mu) * R2
    return theorem_bound(k, mu, L, R2)


def schedule_mu(kind: str, problem: QuadraticProblem) -> float:
    """Strong-convexity constant fed to the weight schedule for ``kind``.

    The subspace-search momentum methods deliberately run the mu = 0
    schedule even on strongly convex problems: their query points come from
    exact minimizations, so no coupling coefficient depends on mu, and the
    certificate still closes.  Everything else uses the problem's mu.
    """
    if kind.startswith("nemirovski"):
        return 0.0
    return problem.mu


class _CGState:
    """Lazy conjugate-gradient recurrence; after exact termination the
    iterate is a fixed point of :meth:`advance`."""

    def __init__(self, problem: QuadraticProblem):
        self.problem = problem
        self.y = problem.x0.copy()
        self.r = problem.b - problem.A @ self.y
        self.rr = float(np.dot(self.r, self.r))
        self.p = self.r.copy()
        self.r0_norm = math.sqrt(self.rr)
        self.exact = self.rr == 0.0

    @property
    def resid_norm(self) -> float:
        return math.sqrt(self.rr)

    def advance(self) -> np.ndarray:
        if self.exact:
            return self.y
        Ap = self.problem.A @ self.p
        pAp = float(np.dot(self.p, Ap))
        if not (pAp > 0.0 and math.isfinite(pAp)):
            # PSD with b in range(A) only reaches this at exact convergence.
            self.exact = True
            self.rr = 0.0
            return self.y
        alpha = self.rr / pAp
        self.y = self.y + alpha * self.p
        self.r = self.r - alpha * Ap
        rr_new = float(np.dot(self.r, self.r))
        if rr_new == 0.0:
            self.exact = True
        else:
            self.p = self.r + (rr_new / self.rr) * self.p
        self.rr = rr_new
        return self.y


def krylov_basis(problem: QuadraticProblem, k: int) -> list[np.ndarray]:
    """Orthonormal basis of ``span{A d, A^2 d, ..., A^k d}``, ``d = x0 - x*``.

    Built incrementally: each new direction is ``A`` applied to the last
    basis vector, then orthogonalized (twice) against the basis. This spans
    the same subspace as the raw powers but keeps all directions alive at
    working precision, where the raw powers collapse onto the top eigenvector
    within a few steps. Construction stops early if the subspace becomes
    invariant.
    """
    A = problem.A
    basis: list[np.ndarray] = []
    w = A @ (problem.x0 - problem.x_star)
    for _ in range(k):
        scale = float(np.linalg.norm(w))
        if scale == 0.0:
            break
        v = w.copy()
        for _pass in range(2):
            for q in basis:
                v -= np.dot(q, v) * q
        nrm = float(np.linalg.norm(v))
        if nrm <= 1e-12 * scale:
            break
        v /= nrm
        basis.append(v)
        w = A @ v
    return basis


def cg_krylov_oracle(problem: QuadraticProblem, k: int) -> np.ndarray:
    """Explicit subspace minimizer the conjugate-gradient iterate must match:
    argmin of f over ``x0 + span{A d, ..., A^k d}``."""
    basis = krylov_basis(problem, k)
    return affine_subspace_min(
        problem.A, problem.b, SubspaceSpec(problem.x0, tuple(basis))
    )


def _query_point(
    method: str,
    options: MethodOptions,
    problem: QuadraticProblem,
    sched_new: Schedule,
    y_prev: np.ndarray,
    v_prev: np.ndarray,
    state: LowerBoundState,
) -> np.ndarray:
    A_prev = sched_new.A - sched_new.a
    ap = sched_new.a_prime
    if method in ("nesterov", "cg_shadow"):
        return (A_prev * y_prev + ap * v_prev) / (A_prev + ap)
    if method == "nemirovski_plane":
        if options.plane_variant == "span":
            sub = SubspaceSpec(np.zeros(problem.n), (y_prev, v_prev))
        else:
            sub = SubspaceSpec(
                y_prev, (y_prev - problem.x0, state.sum_ag / problem.L)
            )
        return affine_subspace_min(problem.A, problem.b, sub)
    if method == "nemirovski_line":
        return affine_subspace_min(
            problem.A, problem.b, SubspaceSpec(y_prev, (v_prev - y_prev,))
        )
    raise ValueError(f"no query point rule for {method!r}")


def _advance_schedule(sched: Schedule, k: int, fault: tuple | None) -> Schedule:
    s = schedule_advance(sched)
    if fault is not None and fault[0] == "a_inflate" and fault[1] == k:
        a_bad = s.a * (1.0 + fault[2])
        A_bad = sched.A + a_bad
        ap_bad = a_bad * (s.mu0 + s.mu * sched.A) / (s.mu0 + s.mu * A_bad)
        s = replace(s, a=a_bad, A=A_bad, a_prime=ap_bad)
    return s


def _run_certified(
    problem: QuadraticProblem,
    method: str,
    iters: int,
    grad_tol: float,
    options: MethodOptions,
    anchored: bool,
) -> CertifiedTrace:
    mu_sched = schedule_mu(method, problem)
    L = problem.L
    sched = schedule_init(mu_sched, L)
    paranoid = options.paranoid
    if paranoid is None:
        paranoid = problem.n <= _PARANOID_AUTO_N
    fault = options.fault
    if fault is not None:
        paranoid = False  # self-checks would reject the corruption at run time

    R2 = problem.radius2 if anchored else _NAN
    x = problem.x0.copy()
    g = problem.grad(x)
    f_x = problem.eval(x)
    g0_norm = float(np.linalg.norm(g))

    cg = _CGState(problem) if method == "cg_shadow" else None
    if cg is not None:
        y = cg.advance()
    else:
        y = x - g / L
    f_y = problem.eval(y)
    state = lower_state_init(problem.x0, f_x, g, sched)
    weights, xs, gs = [sched.a], [x], [g]
    # The potential is carried incrementally. Its definition
    # A_k U_k - sum_af - m_k subtracts terms that all grow with A_k while
    # the value itself stays bounded, so evaluating it directly turns into
    # cancellation noise of size eps * A_k * scale once A_k is large. The
    # increments below are built from objective differences of nearby
    # points and from the m recursion's own increment, all of bounded size,
    # which keeps the recorded column accurate to eps * scale per step.
    phi = potential(f_y, sched, state)
    scale = problem.tol_scale
    warnings: list[str] = []
    self_check = fault is None

    def certificate(k: int, U: float, coup: float) -> Certificate:
        if anchored:
            L_anch = anchored_lower_bound(sched, state, R2)
            G_anch = U - L_anch
            bound = claimed_bound(method, k, problem.mu, L, R2)
        else:
            L_anch = G_anch = bound = _NAN
        return Certificate(
            U=U,
            L_anchored=L_anch,
            G_anchored=G_anch,
            Phi=phi,
            coupling_residual=coup,
            bound_rhs=bound,
        )

    records = [
        TraceRecord(
            k=0,
            a=sched.a,
            A=sched.A,
            a_prime=_NAN,
            x=x,
            y=y,
            g=g,
            v=state.v,
            f_x=f_x,
            f_y=f_y,
            grad_norm=g0_norm,
            cert=certificate(0, f_y, _NAN),
        )
    ]

    def stop_norm() -> float:
        return cg.resid_norm if cg is not None else float(np.linalg.norm(g))

    def stop_ref() -> float:
        return cg.r0_norm if cg is not None else g0_norm

    def gap_floored() -> bool:
        # Once the certified gap is down at the round-off floor the iterates
        # only rattle in place while A_k keeps growing geometrically, so the
        # per-step columns would record amplified rounding noise, not
        # algorithm behaviour. Stop: the certificate has nothing left to say.
        return (
            self_check
            and anchored
            and records[-1].cert.G_anchored <= options.gap_floor * scale
        )

    status = "max_iters"
    if stop_norm() == 0.0:
        status = "exact"
        iters = 0
    elif stop_norm() <= grad_tol * stop_ref():
        status = "grad_tol"
        iters = 0
    elif gap_floored():
        status = "gap_floor"
        iters = 0

    for k in range(1, iters + 1):
        y_prev, v_prev = y, state.v
        sched = _advance_schedule(sched, k, fault)
        x = _query_point(method, options, problem, sched, y_prev, v_prev, state)
        g = problem.grad(x)
        f_x = problem.eval(x)
        coup = coupling_residual(
            g, x, y_prev, v_prev, sched.A - sched.a, sched.a_prime
        )
        drop_mu = fault is not None and fault[0] == "v_drop_mu" and fault[1] == k
        state, dm = lower_state_advance(
            state, sched, x, f_x, g,
            _drop_mu_once=drop_mu, _verify_closed_form=self_check,
        )
        weights.append(sched.a)
        xs.append(x)
        gs.append(g)
        if cg is not None:
            y = cg.advance()
        else:
            y = x - g / L
        if fault is not None and fault[0] == "y_equals_x" and fault[1] == k:
            y = x.copy()
        f_y = problem.eval(y)
        # Phi_k - Phi_{k-1} = A_{k-1}(U_k - U_{k-1}) + a_k(U_k - f(x_k)) - dm
        dphi = (
            (sched.A - sched.a) * problem.eval_diff(y, y_prev)
            + sched.a * problem.eval_diff(y, x)
            - dm
        )
        phi += dphi
        if self_check:
            gn2 = float(np.dot(g, g))
            if f_y > f_x - gn2 / (2.0 * L) + 1e-9 * scale:
                warnings.append(f"descent inequality violated at k={k}")
            if dphi > 1e-9 * scale:
                warnings.append(f"potential increased at k={k}")
        if paranoid:
            m_dir = m_direct(
                state.v, weights, xs, gs, mu_sched, sched.mu0, problem.x0
            )
            tol = 1e-9 * (1.0 + abs(state.m_at_v) + abs(state.sum_af))
            if abs(m_dir - state.m_at_v) > tol:
                raise RuntimeError(
                    "under-estimator recursion drifted from direct evaluation "
                    f"at k={k} (|delta| = {abs(m_dir - state.m_at_v):.3e})"
                )
        records.append(
            TraceRecord(
                k=k,
                a=sched.a,
                A=sched.A,
                a_prime=sched.a_prime,
                x=x,
                y=y,
                g=g,
                v=state.v,
                f_x=f_x,
                f_y=f_y,
                grad_norm=float(np.linalg.norm(g)),
                cert=certificate(k, f_y, coup),
            )
        )
        if stop_norm() == 0.0:
            status = "exact"
            break
        if stop_norm() <= grad_tol * stop_ref():
            status = "grad_tol"
            break
        if gap_floored():
            status = "gap_floor"
            break

    return CertifiedTrace(
        method=method,
        records=tuple(records),
        status=status,
        problem=problem,
        mu_sched=mu_sched,
        anchored=anchored,
        options=options,
        warnings=tuple(warnings),
    )


def _uncertified_cert(U: float) -> Certificate:
    return Certificate(
        U=U,
        L_anchored=_NAN,
        G_anchored=_NAN,
        Phi=_NAN,
        coupling_residual=_NAN,
        bound_rhs=_NAN,
    )


def _run_exact_one_step(
    problem: QuadraticProblem, kind: str, options: MethodOptions, anchored: bool
) -> CertifiedTrace:
    """mu = L: the matrix is L times the identity, so one gradient step lands
    exactly on the minimizer. The weight schedule cannot advance (mu0 = 0
    leaves the a-recurrence without a positive root) but none is needed: the
    k = 0 certificate already closes with v0 = y0 = x* and a zero gap."""
    L = problem.L
    sched = Schedule(k=0, a=1.0, A=1.0, a_prime=None, mu=L, mu0=0.0, L=L)
    x = problem.x0.copy()
    g = problem.grad(x)
    f_x = problem.eval(x)
    y = x - g / L
    f_y = problem.eval(y)
    state = lower_state_init(problem.x0, f_x, g, sched)
    phi = potential(f_y, sched, state)
    if anchored:
        R2 = problem.radius2
        L_anch = anchored_lower_bound(sched, state, R2)
        G_anch = f_y - L_anch
        bound = claimed_bound(kind, 0, problem.mu, L, R2)
    else:
        L_anch = G_anch = bound = _NAN
    record = TraceRecord(
        k=0,
        a=1.0,
        A=1.0,
        a_prime=_NAN,
        x=x,
        y=y,
        g=g,
        v=state.v,
        f_x=f_x,
        f_y=f_y,
        grad_norm=float(np.linalg.norm(g)),
        cert=Certificate(
            U=f_y,
            L_anchored=L_anch,
            G_anchored=G_anch,
            Phi=phi,
            coupling_residual=_NAN,
            bound_rhs=bound,
        ),
    )
    return CertifiedTrace(
        method=kind,
        records=(record,),
        status="exact",
        problem=problem,
        mu_sched=L,
        anchored=anchored,
        options=options,
    )


def _run_cg(
    problem: QuadraticProblem, iters: int, grad_tol: float, options: MethodOptions
) -> CertifiedTrace:
    cg = _CGState(problem)
    f0 = problem.eval(cg.y)
    g0 = -cg.r
    records = [
        TraceRecord(
            k=0,
            a=_NAN,
            A=_NAN,
            a_prime=_NAN,
            x=cg.y.copy(),
            y=cg.y.copy(),
            g=g0,
            v=None,
            f_x=f0,
            f_y=f0,
            grad_norm=cg.resid_norm,
            cert=_uncertified_cert(f0),
        )
    ]
    status = "max_iters"
    if cg.exact:
        status = "exact"
        iters = 0
    elif cg.resid_norm <= grad_tol * cg.r0_norm:
        status = "grad_tol"
        iters = 0
    for k in range(1, iters + 1):
        y = cg.advance().copy()
        if options.cg_oracle_check:
            oracle = cg_krylov_oracle(problem, k)
            dev = abs(problem.eval(y) - problem.eval(oracle))
            if dev > _ORACLE_TOL * (1.0 + abs(problem.eval(problem.x0))):
                raise RuntimeError(
                    f"conjugate-gradient iterate diverged from the subspace "
                    f"oracle at k={k} (|delta f| = {dev:.3e})"
                )
        f = problem.eval(y)
        records.append(
            TraceRecord(
                k=k,
                a=_NAN,
                A=_NAN,
                a_prime=_NAN,
                x=y,
                y=y,
                g=-cg.r.copy(),
                v=None,
                f_x=f,
                f_y=f,
                grad_norm=cg.resid_norm,
                cert=_uncertified_cert(f),
            )
        )
        if cg.exact:
            status = "exact"
            break
        if cg.resid_norm <= grad_tol * cg.r0_norm:
            status = "grad_tol"
            break
    return CertifiedTrace(
        method="cg",
        records=tuple(records),
        status=status,
        problem=problem,
        mu_sched=problem.mu,
        anchored=False,
        options=options,
    )


def _run_gd(
    problem: QuadraticProblem, iters: int, grad_tol: float, options: MethodOptions
) -> CertifiedTrace:
    L = problem.L
    x = problem.x0.copy()
    g = problem.grad(x)
    g0_norm = float(np.linalg.norm(g))
    records: list[TraceRecord] = []
    status = "max_iters"
    for k in range(iters + 1):
        y = x - g / L
        records.append(
            TraceRecord(
                k=k,
                a=_NAN,
                A=_NAN,
                a_prime=_NAN,
                x=x,
                y=y,
                g=g,
                v=None,
                f_x=problem.eval(x),
                f_y=problem.eval(y),
                grad_norm=float(np.linalg.norm(g)),
                cert=_uncertified_cert(problem.eval(y)),
            )
        )
        gn = float(np.linalg.norm(g))
        if gn == 0.0:
            status = "exact"
            break
        if gn <= grad_tol * g0_norm:
            status = "grad_tol"
            break
        x = y
        g = problem.grad(x)
    return CertifiedTrace(
        method="gradient_descent",
        records=tuple(records),
        status=status,
        problem=problem,
        mu_sched=problem.mu,
        anchored=False,
        options=options,
    )


def run_method(
    problem: QuadraticProblem,
    kind: str,
    iters: int | None = None,
    grad_tol: float = 1e-12,
    options: MethodOptions | None = None,
    anchored: bool = True,
) -> CertifiedTrace:
    """Run a method and return its (certified) trace.

    ``iters`` defaults to ``2 n``; ``grad_tol`` is relative to the start
    gradient norm. ``anchored=True`` adds the lower-bound / gap / rate-bound
    fields, which use the problem's certified minimizer. Record count is the
    number of executed iterations plus one (the k = 0 row).
    """
    if kind not in METHOD_KINDS:
        raise ValueError(f"unknown method {kind!r}; choose from {METHOD_KINDS}")
    options = options or MethodOptions()
    if kind == "cg" and options.cg_certify:
        kind = "cg_shadow"
    if iters is None:
        iters = 2 * problem.n
    if iters < 1:
        raise ValueError("iters must be at least 1")
    if grad_tol < 0.0:
        raise ValueError("grad_tol must be nonnegative")
    if options.fault is not None and kind not in _CERTIFIED:
        raise ValueError("fault injection applies to certified methods only")
    if kind == "cg":
        return _run_cg(problem, iters, grad_tol, options)
    if kind == "gradient_descent":
        return _run_gd(problem, iters, grad_tol, options)
    if schedule_mu(kind, problem) >= problem.L:
        return _run_exact_one_step(problem, kind, options, anchored)
    return _run_certified(problem, kind, iters, grad_tol, options, anchored)
