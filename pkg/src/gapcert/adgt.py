"""Gap-certificate bookkeeping for accelerated first-order methods on quadratics.

The certificate tracks three coupled objects per iteration:

* a weight schedule ``a_k`` with partial sums ``A_k``, chosen so that
  ``a_k^2 / (A_k (mu0 + mu A_k)) = 1/L`` where ``mu0 = L - mu``;
* an upper bound ``U_k = f(y_k)`` at the method's descent points;
* a lower bound assembled from the gradient inequalities collected at the
  query points ``x_i``: with

  ``m_k(u) = sum_i a_i (<g_i, u - x_i> + (mu/2)||u - x_i||^2) + (mu0/2)||u - x0||^2``

  minimized at ``v_k``, the anchored lower bound is
  ``L_k = (sum_i a_i f(x_i) + m_k(v_k))/A_k - (mu0 / (2 A_k)) ||x0 - x*||^2``.

The product ``A_k (U_k - L_k)`` is non-increasing along a valid run, which is
what turns the schedule growth of ``A_k`` into a convergence rate. Because
the anchored term needs ``x*``, the run-time invariant is phrased through the
anchor-free potential ``Phi_k = A_k U_k - sum_i a_i f(x_i) - m_k(v_k)``,
which differs from ``A_k (U_k - L_k)`` by the constant
``(mu0/2)||x0 - x*||^2`` and is therefore monotone exactly when the scaled
gap is.

``v_k`` and ``m_k(v_k)`` are maintained by O(n) recursions; both admit
independent recomputation (closed-form sums for ``v_k``, direct evaluation
over the stored history for ``m_k``) and the recursions are cross-checked
against those routes during runs and verification.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Schedule",
    "schedule_init",
    "schedule_advance",
    "theorem_bound",
    "LowerBoundState",
    "lower_state_init",
    "lower_state_advance",
    "m_direct",
    "potential",
    "anchored_lower_bound",
    "coupling_residual",
]

_V_CHECK_TOL = 1e-10


@dataclass(frozen=True)
class Schedule:
    """Weight state after iteration k. ``a_prime`` is undefined at k = 0."""

    k: int
    a: float
    A: float
    a_prime: float | None
    mu: float
    mu0: float
    L: float


def schedule_init(mu: float, L: float) -> Schedule:
    """Start the schedule: a_0 = A_0 = 1, mu0 = L - mu.

    Requires ``0 <= mu < L``. ``mu = L`` leaves no room for the regularizer
    (mu0 = 0) and the advance equation loses its positive root, so it is
    rejected as degenerate conditioning.
    """
    if not (L > 0.0 and math.isfinite(L)):
        raise ValueError("L must be positive and finite")
    if mu < 0.0:
        raise ValueError("mu must be nonnegative")
    if mu >= L:
        raise ValueError("degenerate conditioning: mu must be strictly below L")
    return Schedule(k=0, a=1.0, A=1.0, a_prime=None, mu=mu, mu0=L - mu, L=L)


def schedule_advance(s: Schedule) -> Schedule:
    """Advance one step: a_{k+1} is the positive root of

    ``(1 - mu/L) a^2 - ((mu0 + 2 mu A_k)/L) a - A_k (mu0 + mu A_k)/L = 0``

    which keeps ``a^2 = A (mu0 + mu A)/L`` exact for the new partial sum,
    and ``a'_{k+1} = a_{k+1} (mu0 + mu A_k) / (mu0 + mu A_{k+1})``.
    """
    mu, mu0, L = s.mu, s.mu0, s.L
    alpha = 1.0 - mu / L
    beta = (mu0 + 2.0 * mu * s.A) / L
    gamma = s.A * (mu0 + mu * s.A) / L
    # All three coefficients are positive, so the + branch is cancellation-free.
    a_new = (beta + math.sqrt(beta * beta + 4.0 * alpha * gamma)) / (2.0 * alpha)
    A_new = s.A + a_new
    if not math.isfinite(A_new):
        raise ValueError("weight schedule overflow; reduce the iteration count")
    a_prime = a_new * (mu0 + mu * s.A) / (mu0 + mu * A_new)
    return Schedule(k=s.k + 1, a=a_new, A=A_new, a_prime=a_prime, mu=mu, mu0=mu0, L=L)


def theorem_bound(k: int, mu: float, L: float, R2: float) -> float:
    """Guaranteed tail of a certified run after k iterations:

    ``min{ 4/((k+1)(k+2)), (1 - sqrt(mu/L))^k } * ((L - mu)/2) * R2``

    with ``R2 = ||x0 - x*||^2``. For ``mu = 0`` the geometric branch is the
    constant 1 and the polynomial branch carries the rate.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    poly = 4.0 / ((k + 1) * (k + 2))
    geo = (1.0 - math.sqrt(mu / L)) ** k
    return min(poly, geo) * 0.5 * (L - mu) * R2


@dataclass(frozen=True)
class LowerBoundState:
    """Minimizer ``v_k`` of the accumulated under-estimator and its value.

    The running sums make the closed form of ``v_k`` available at any time:
    ``v_k = (mu0 x0 + mu sum_ax - sum_ag) / (mu0 + mu A_k)``.
    """

    v: np.ndarray
    m_at_v: float
    sum_af: float
    sum_ax: np.ndarray
    sum_ag: np.ndarray
    x0: np.ndarray


def _check_v_closed_form(v: np.ndarray, state_sums, sched: Schedule) -> None:
    mu0, mu = sched.mu0, sched.mu
    x0, sum_ax, sum_ag = state_sums
    v_closed = (mu0 * x0 + mu * sum_ax - sum_ag) / (mu0 + mu * sched.A)
    err = float(np.linalg.norm(v - v_closed))
    if err > _V_CHECK_TOL * (1.0 + float(np.linalg.norm(v))):
        raise RuntimeError(
            f"lower-bound minimizer drifted from its closed form (|delta| = {err:.3e})"
        )


def lower_state_init(x0, f0: float, g0, sched: Schedule) -> LowerBoundState:
    """State after iteration 0: a single gradient inequality plus regularizer."""
    x0 = np.asarray(x0, dtype=np.float64)
    g0 = np.asarray(g0, dtype=np.float64)
    mu, mu0 = sched.mu, sched.mu0
    denom = mu0 + mu * sched.A
    v0 = (mu0 * x0 + mu * sched.a * x0 - sched.a * g0) / denom
    d = v0 - x0
    dd = float(np.dot(d, d))
    m0 = sched.a * (float(np.dot(g0, d)) + 0.5 * mu * dd) + 0.5 * mu0 * dd
    sum_ax = sched.a * x0
    sum_ag = sched.a * g0
    _check_v_closed_form(v0, (x0, sum_ax, sum_ag), sched)
    return LowerBoundState(
        v=v0, m_at_v=m0, sum_af=sched.a * f0, sum_ax=sum_ax, sum_ag=sum_ag, x0=x0.copy()
    )


def lower_state_advance(
    state: LowerBoundState,
    sched: Schedule,
    x_k,
    f_xk: float,
    g_k,
    _drop_mu_once: bool = False,
    _verify_closed_form: bool = True,
) -> tuple[LowerBoundState, float]:
    """Fold the iteration-k gradient inequality into the under-estimator.

    ``sched`` must already be advanced to step k. The minimizer moves by

    ``v_k = ((mu0 + mu A_{k-1}) v_{k-1} + mu a_k x_k - a_k g_k) / (mu0 + mu A_k)``

    and its value by

    ``m_k(v_k) = m_{k-1}(v_{k-1}) + ((mu0 + mu A_{k-1})/2) ||v_k - v_{k-1}||^2
    + a_k <g_k, v_k - x_k> + (a_k mu / 2) ||v_k - x_k||^2``.

    Returns the new state together with the m increment. The increment's
    terms stay bounded even when ``m_at_v`` itself grows with ``A_k``, so
    callers assembling potential differences should consume it directly
    rather than subtracting consecutive ``m_at_v`` values.

    ``_drop_mu_once`` is a fault-injection hook for verification self-tests:
    it updates ``v`` as if the objective had no strong convexity for this one
    step, producing a certificate that must fail downstream verification.
    ``_verify_closed_form=False`` skips the run-time drift check on ``v``;
    fault-injection runs need it off for the steps after the fault, where
    the poisoned ``v`` must survive into the trace for the verifier to catch.
    """
    if sched.k < 1:
        raise ValueError("advance needs a schedule at k >= 1")
    x_k = np.asarray(x_k, dtype=np.float64)
    g_k = np.asarray(g_k, dtype=np.float64)
    mu, mu0, a, A = sched.mu, sched.mu0, sched.a, sched.A
    A_prev = A - a
    w_prev = mu0 + mu * A_prev
    w_new = mu0 + mu * A
    if _drop_mu_once:
        v_new = state.v - (a / mu0) * g_k
    else:
        v_new = (w_prev * state.v + mu * a * x_k - a * g_k) / w_new
    dv = v_new - state.v
    dx = v_new - x_k
    dm = (
        0.5 * w_prev * float(np.dot(dv, dv))
        + a * float(np.dot(g_k, dx))
        + 0.5 * a * mu * float(np.dot(dx, dx))
    )
    sum_ax = state.sum_ax + a * x_k
    sum_ag = state.sum_ag + a * g_k
    if _verify_closed_form and not _drop_mu_once:
        _check_v_closed_form(v_new, (state.x0, sum_ax, sum_ag), sched)
    new_state = LowerBoundState(
        v=v_new,
        m_at_v=state.m_at_v + dm,
        sum_af=state.sum_af + a * f_xk,
        sum_ax=sum_ax,
        sum_ag=sum_ag,
        x0=state.x0,
    )
    return new_state, dm


def m_direct(u, weights, xs, gs, mu: float, mu0: float, x0) -> float:
    """Direct evaluation of the under-estimator's quadratic part at ``u``.

    Used as the independent route against the ``m_at_v`` recursion: the two
    must agree to roundoff on any untampered run.
    """
    u = np.asarray(u, dtype=np.float64)
    x0 = np.asarray(x0, dtype=np.float64)
    total = 0.0
    for a_i, x_i, g_i in zip(weights, xs, gs):
        d = u - x_i
        total += a_i * (float(np.dot(g_i, d)) + 0.5 * mu * float(np.dot(d, d)))
    d0 = u - x0
    return total + 0.5 * mu0 * float(np.dot(d0, d0))


def potential(U_k: float, sched: Schedule, state: LowerBoundState) -> float:
    """Anchor-free gap potential ``Phi_k = A_k U_k - sum_af - m_k(v_k)``."""
    return sched.A * U_k - state.sum_af - state.m_at_v


def anchored_lower_bound(sched: Schedule, state: LowerBoundState, R2: float) -> float:
    """``L_k <= f(x*)``, valid for every minimizer at squared distance R2 from x0."""
    return (state.sum_af + state.m_at_v) / sched.A - 0.5 * sched.mu0 * R2 / sched.A


def coupling_residual(g_k, x_k, y_prev, v_prev, A_prev: float, a_prime: float) -> float:
    """How far the query point is from the certified momentum combination:

    ``<g_k, (A_{k-1} + a'_k) x_k - A_{k-1} y_{k-1} - a'_k v_{k-1}>``.

    Exactly zero (up to roundoff) for every supported method; the per-step
    gap inequality charges this inner product, so verification bounds its
    magnitude instead of trusting the construction.

    Computed as ``<g_k, A_{k-1}(x_k - y_{k-1}) + a'_k (x_k - v_{k-1})>``:
    late in a run the iterates agree to many digits, and scaling each one
    by the grown weights before subtracting would drown the residual in
    rounding noise of size ``eps * A_k * ||x_k||``.
    """
    g_k = np.asarray(g_k, dtype=np.float64)
    x_k = np.asarray(x_k, dtype=np.float64)
    combo = A_prev * (x_k - np.asarray(y_prev, dtype=np.float64))
    combo = combo + a_prime * (x_k - np.asarray(v_prev, dtype=np.float64))
    return float(np.dot(g_k, combo))
