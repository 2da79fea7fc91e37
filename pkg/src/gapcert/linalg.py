"""Dense symmetric linear algebra used by the solvers and their certificates.

Everything here works on plain ``numpy.ndarray`` data. The only structured
type is :class:`SubspaceSpec`, which bundles the anchor point and direction
list of an affine subspace so that exact subspace minimization has a single
entry point.

The eigenvalue routine is a cyclic Jacobi iteration rather than a LAPACK
call: it is simple, it is accurate for symmetric matrices, and its sweep
criterion (off-diagonal Frobenius mass) gives a clean, testable convergence
statement. Matrices passed to it are small in practice (restricted spectra,
normal systems of subspace searches), so the O(n^3)-per-sweep cost is
irrelevant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SubspaceSpec",
    "as_vector",
    "sym_matrix",
    "dot",
    "solve_spd",
    "jacobi_eigh",
    "sym_eig_range",
    "orthonormal_basis",
    "affine_subspace_min",
]

# Sweep convergence: off-diagonal Frobenius mass relative to the whole matrix.
_JACOBI_TOL = 1e-14
_JACOBI_MAX_SWEEPS = 60

# Eigenvalues of a normal system below this fraction of the largest one are
# treated as zero curvature (pseudo-solved), slightly below as roundoff noise,
# and anything clearly negative triggers an "unbounded" error.
_CURVATURE_DROP = 1e-12


def as_vector(x) -> np.ndarray:
    """Return ``x`` as a finite 1-D float64 array."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    return v


def sym_matrix(M) -> np.ndarray:
    """Return ``M`` as a finite square float64 array, symmetrized as (M + M^T)/2."""
    A = np.asarray(M, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return 0.5 * (A + A.T)


def dot(x, y) -> float:
    """Euclidean inner product with an explicit dimension check."""
    x = as_vector(x)
    y = as_vector(y)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    return float(np.dot(x, y))


def solve_spd(M, rhs) -> np.ndarray:
    """Solve ``M x = rhs`` for symmetric positive definite ``M`` via Cholesky.

    Raises ``ValueError`` ("matrix is not SPD") when the factorization meets a
    non-positive pivot.
    """
    A = sym_matrix(M)
    b = as_vector(rhs)
    n = A.shape[0]
    if b.shape[0] != n:
        raise ValueError(f"dimension mismatch: matrix is {n}x{n}, rhs has {b.shape[0]}")
    try:
        C = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise ValueError("matrix is not SPD") from exc
    # Forward then backward substitution on the triangular factor.
    y = np.empty(n)
    for i in range(n):
        y[i] = (b[i] - C[i, :i] @ y[:i]) / C[i, i]
    x = np.empty(n)
    for i in range(n - 1, -1, -1):
        x[i] = (y[i] - C[i + 1 :, i] @ x[i + 1 :]) / C[i, i]
    return x


def jacobi_eigh(M, tol: float = _JACOBI_TOL, max_sweeps: int = _JACOBI_MAX_SWEEPS):
    """Full symmetric eigendecomposition by cyclic Jacobi rotations.

    Returns ``(w, V)`` with eigenvalues ``w`` ascending and orthonormal
    eigenvector columns ``V``, so that ``M = V @ diag(w) @ V.T``. Sweeps stop
    once the off-diagonal Frobenius norm falls below ``tol * ||M||_F``.
    """
    A = sym_matrix(M).copy()
    n = A.shape[0]
    V = np.eye(n)
    if n == 1:
        return A.diagonal().copy(), V
    fro = float(np.linalg.norm(A))
    if fro == 0.0:
        return np.zeros(n), V
    thresh = tol * fro
    # Rotations on entries already far below the target mass are wasted work.
    skip = thresh / (n * n)
    for _ in range(max_sweeps):
        off = float(np.sqrt(2.0 * np.sum(np.tril(A, -1) ** 2)))
        if off <= thresh:
            w = A.diagonal().copy()
            order = np.argsort(w, kind="stable")
            return w[order], V[:, order]
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= skip:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                col_p = A[:, p].copy()
                col_q = A[:, q].copy()
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q
                row_p = A[p, :].copy()
                row_q = A[q, :].copy()
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q
                A[p, q] = 0.0
                A[q, p] = 0.0
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    raise RuntimeError("Jacobi iteration did not converge")


def sym_eig_range(M) -> tuple[float, float]:
    """Smallest and largest eigenvalue of a symmetric matrix."""
    w, _ = jacobi_eigh(M)
    return float(w[0]), float(w[-1])


def orthonormal_basis(vectors, drop_tol: float = 1e-12) -> list[np.ndarray]:
    """Orthonormalize ``vectors`` by modified Gram-Schmidt.

    Each vector is orthogonalized against the basis built so far, then once
    more in a full re-orthogonalization pass; this second pass is what keeps
    the basis orthonormal to working precision when the input vectors are
    strongly correlated. A vector whose remaining norm is at most
    ``drop_tol`` times its original norm is considered dependent and dropped.
    """
    basis: list[np.ndarray] = []
    for raw in vectors:
        v = as_vector(raw).copy()
        scale = float(np.linalg.norm(v))
        if scale == 0.0:
            continue
        for _ in range(2):
            for q in basis:
                v -= np.dot(q, v) * q
        nrm = float(np.linalg.norm(v))
        if nrm <= drop_tol * scale:
            continue
        basis.append(v / nrm)
    return basis


@dataclass(frozen=True)
class SubspaceSpec:
    """Affine subspace ``anchor + span{directions}``.

    ``directions`` may be empty (the subspace is the single point ``anchor``),
    and may be linearly dependent; dependence is resolved by the subspace
    minimizer, not by the caller.
    """

    anchor: np.ndarray
    directions: tuple[np.ndarray, ...] = field(default=())

    def __post_init__(self):
        anchor = as_vector(self.anchor)
        dirs = tuple(as_vector(d) for d in self.directions)
        for d in dirs:
            if d.shape != anchor.shape:
                raise ValueError(
                    f"dimension mismatch: anchor has {anchor.shape[0]}, "
                    f"direction has {d.shape[0]}"
                )
        object.__setattr__(self, "anchor", anchor)
        object.__setattr__(self, "directions", dirs)


def affine_subspace_min(A, b, subspace: SubspaceSpec) -> np.ndarray:
    """Exact minimizer of ``f(x) = 0.5 x^T A x - b^T x`` over an affine subspace.

    Writing ``x = anchor + D c`` the optimality condition is the normal system
    ``(D^T A D) c = D^T (b - A anchor)``. The normal matrix is
    eigendecomposed; eigenvalues at or below ``1e-12`` of the largest are
    truncated, which yields the minimum-norm coefficient vector when the
    system is singular. A clearly negative eigenvalue means the restricted
    quadratic has negative curvature, so the objective is unbounded below on
    the subspace and a ``ValueError`` is raised.
    """
    A = sym_matrix(A)
    b = as_vector(b)
    anchor = subspace.anchor
    if anchor.shape[0] != A.shape[0]:
        raise ValueError(
            f"dimension mismatch: matrix is {A.shape[0]}x{A.shape[0]}, "
            f"anchor has {anchor.shape[0]}"
        )
    if not subspace.directions:
        return anchor.copy()
    D = np.column_stack(subspace.directions)
    G = sym_matrix(D.T @ A @ D)
    h = D.T @ (b - A @ anchor)
    w, V = jacobi_eigh(G)
    wmax = float(w[-1])
    if wmax <= 0.0:
        # No positive curvature at all: either everything is flat (gradient
        # must vanish too) or the objective escapes to -inf.
        if float(w[0]) < -_CURVATURE_DROP * max(abs(float(w[0])), 1.0) or np.linalg.norm(
            h
        ) > 0.0:
            raise ValueError("objective is unbounded below on the subspace")
        return anchor.copy()
    cut = _CURVATURE_DROP * wmax
    if float(w[0]) < -cut:
        raise ValueError("objective is unbounded below on the subspace")
    hv = V.T @ h
    inv = np.where(w > cut, 1.0 / np.where(w > cut, w, 1.0), 0.0)
    c = V @ (inv * hv)
    return anchor + D @ c
