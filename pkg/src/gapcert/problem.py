"""Convex quadratic problems: ``f(x) = 0.5 <A x, x> - <b, x>`` with ``A`` symmetric PSD.

A problem instance is immutable and carries everything the certificates need:
the curvature range ``(mu, L)`` (the extreme eigenvalues of ``A``), the start
point, a minimizer ``x_star``, and the optimal value ``f_star``. Solvers are
expected to touch only ``eval``/``grad``/``mu``/``L``/``x0``; the minimizer
exists for certification and diagnostics.

Problems come from three places: direct construction from a dense matrix,
the deterministic spectrum generator (:func:`gen_spectrum_problem`), or a
JSON file (:func:`load_problem`). The generator builds ``A = Q^T diag(lam) Q``
with ``Q`` drawn from the QR factorization of a seeded Gaussian matrix
(R-diagonal signs normalized positive) and ``b = A z`` for a seeded ``z``, so
``b`` is always in the range of ``A`` and identical inputs reproduce the
problem bit for bit.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .linalg import as_vector, solve_spd, sym_eig_range, sym_matrix

__all__ = [
    "QuadraticProblem",
    "SpectrumSpec",
    "spectrum_profile",
    "make_problem",
    "gen_spectrum_problem",
    "optimal_point",
    "load_problem",
    "save_problem",
]

_RANGE_TOL = 1e-8
# Requested eigenvalues this far below zero (relative to the largest) are a
# user error, closer to zero is clamped roundoff.
_EIG_NEG_TOL = 1e-12


@dataclass(frozen=True)
class SpectrumSpec:
    """Deterministic generator input: eigenvalues, rotation seed, start mode."""

    eigenvalues: tuple[float, ...]
    seed: int
    x0_mode: str = "ones"  # "ones" or "seeded"

    def __post_init__(self):
        eigs = tuple(float(e) for e in self.eigenvalues)
        if not eigs:
            raise ValueError("spectrum needs at least one eigenvalue")
        top = max(eigs)
        if top <= 0.0:
            raise ValueError("spectrum must contain a positive eigenvalue")
        if min(eigs) < -_EIG_NEG_TOL * top:
            raise ValueError("eigenvalues must be nonnegative (convex quadratic)")
        # Canonical ascending order: the spec of the generated problem is the
        # multiset of eigenvalues, not their listing order.
        eigs = tuple(sorted(max(e, 0.0) for e in eigs))
        if self.x0_mode not in ("ones", "seeded"):
            raise ValueError(f"unknown x0_mode {self.x0_mode!r}")
        object.__setattr__(self, "eigenvalues", eigs)
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True)
class QuadraticProblem:
    A: np.ndarray
    b: np.ndarray
    x0: np.ndarray
    mu: float
    L: float
    x_star: np.ndarray
    f_star: float
    spectrum: SpectrumSpec | None = None

    @property
    def n(self) -> int:
        return self.x0.shape[0]

    def eval(self, x) -> float:
        x = np.asarray(x, dtype=np.float64)
        return float(0.5 * np.dot(x, self.A @ x) - np.dot(self.b, x))

    def grad(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return self.A @ x - self.b

    def eval_diff(self, x, z) -> float:
        """f(x) - f(z) through the midpoint gradient.

        For a quadratic the identity f(x) - f(z) = <grad((x+z)/2), x - z>
        is exact, and evaluating it keeps the rounding error proportional
        to ||x - z|| instead of to the absolute objective values.  The
        certificate columns need objective differences between nearby
        points long after both values have converged to f*, where the
        direct subtraction would be pure cancellation noise.
        """
        x = np.asarray(x, dtype=np.float64)
        z = np.asarray(z, dtype=np.float64)
        return float(np.dot(self.grad(0.5 * (x + z)), x - z))

    @property
    def radius2(self) -> float:
        """Squared distance from the start to the certified minimizer."""
        d = self.x0 - self.x_star
        return float(np.dot(d, d))

    @property
    def tol_scale(self) -> float:
        """Normalization for absolute tolerances: 1 + |f(x0)| + L ||x0 - x*||^2."""
        return 1.0 + abs(self.eval(self.x0)) + self.L * self.radius2


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


def optimal_point(A, b, x0, mu: float) -> np.ndarray:
    """A minimizer of the quadratic.

    For ``mu > 0`` the minimizer is unique and solved by Cholesky. For
    ``mu = 0`` the solution set ``{x : A x = b}`` is an affine subspace and
    the Euclidean projection of ``x0`` onto it is returned, i.e. the nearest
    minimizer; it yields the strongest start-distance statements. Raises
    ``ValueError`` when ``b`` is not in the range of ``A`` (the quadratic
    would be unbounded below).
    """
    A = sym_matrix(A)
    b = as_vector(b)
    x0 = as_vector(x0)
    if mu > 0.0:
        x = solve_spd(A, b)
    else:
        # x0 - pinv(A) (A x0 - b): min-norm least squares keeps the correction
        # inside range(A), which is exactly the normal space of the solution set.
        corr, *_ = np.linalg.lstsq(A, A @ x0 - b, rcond=None)
        x = x0 - corr
    resid = float(np.linalg.norm(A @ x - b))
    if resid > _RANGE_TOL * (1.0 + float(np.linalg.norm(b))):
        raise ValueError("b is not in the range of A: the quadratic is unbounded below")
    return x


def make_problem(A, b, x0, spectrum: SpectrumSpec | None = None) -> QuadraticProblem:
    """Assemble a problem from dense data, computing (mu, L) and the minimizer."""
    A = sym_matrix(A)
    b = as_vector(b)
    x0 = as_vector(x0)
    n = A.shape[0]
    if b.shape[0] != n or x0.shape[0] != n:
        raise ValueError("dimension mismatch between A, b, x0")
    if spectrum is not None:
        eigs = spectrum.eigenvalues
        mu, L = min(eigs), max(eigs)
    else:
        mu, L = sym_eig_range(A)
        if mu < -_EIG_NEG_TOL * max(L, 1.0):
            raise ValueError("A has a negative eigenvalue: problem is not convex")
        mu = max(mu, 0.0)
    if L <= 0.0:
        raise ValueError("A must have a positive eigenvalue")
    # Eigenvalues within roundoff of zero count as zero curvature.
    if mu <= _EIG_NEG_TOL * L:
        mu = 0.0
    x_star = optimal_point(A, b, x0, mu)
    f_star = float(0.5 * np.dot(x_star, A @ x_star) - np.dot(b, x_star))
    return QuadraticProblem(
        A=_freeze(A),
        b=_freeze(b),
        x0=_freeze(x0),
        mu=float(mu),
        L=float(L),
        x_star=_freeze(x_star),
        f_star=f_star,
        spectrum=spectrum,
    )


def gen_spectrum_problem(spec: SpectrumSpec) -> QuadraticProblem:
    """Deterministic rotated-spectrum instance; identical spec => identical bits."""
    eigs = np.array(spec.eigenvalues, dtype=np.float64)
    n = eigs.shape[0]
    rng = np.random.default_rng(spec.seed)
    G = rng.standard_normal((n, n))
    Q, R = np.linalg.qr(G)
    signs = np.sign(np.diag(R))
    signs[signs == 0.0] = 1.0
    Q = Q * signs  # makes the QR factorization unique, hence reproducible
    A = Q.T @ (eigs[:, None] * Q)
    z = rng.standard_normal(n)
    b = A @ z
    if spec.x0_mode == "seeded":
        x0 = rng.standard_normal(n)
    else:
        x0 = np.ones(n)
    return make_problem(A, b, x0, spectrum=spec)


def spectrum_profile(profile: str, n: int, kappa: float) -> tuple[float, ...]:
    """Eigenvalue lists for the named condition-number profiles.

    All profiles place the spectrum in ``[1, kappa]`` with both endpoints
    attained: ``uniform`` is a linear grid, ``geometric`` a logarithmic grid,
    ``clustered`` puts half the eigenvalues within 2% of each endpoint.
    """
    if n < 2:
        raise ValueError("profiles need n >= 2")
    if not kappa > 1.0:
        raise ValueError("kappa must exceed 1")
    if profile == "uniform":
        return tuple(np.linspace(1.0, kappa, n))
    if profile == "geometric":
        return tuple(np.geomspace(1.0, kappa, n))
    if profile == "clustered":
        lo = n // 2
        hi = n - lo
        lower = 1.0 + 0.02 * np.arange(lo) / max(lo - 1, 1)
        upper = kappa * (1.0 - 0.02 * np.arange(hi) / max(hi - 1, 1))
        return tuple(np.concatenate([lower, upper[::-1]]))
    raise ValueError(f"unknown profile {profile!r} (uniform|geometric|clustered|explicit)")


def problem_to_dict(p: QuadraticProblem) -> dict:
    """JSON-ready dict with the full dense matrix (row-major rows)."""
    return {
        "n": p.n,
        "A": [list(map(float, row)) for row in p.A],
        "b": [float(v) for v in p.b],
        "x0": [float(v) for v in p.x0],
    }


def problem_from_dict(data: dict) -> QuadraticProblem:
    if "n" not in data:
        raise ValueError("problem file must declare n")
    n = int(data["n"])
    if "spectrum" in data:
        s = data["spectrum"]
        spec = SpectrumSpec(
            eigenvalues=tuple(s["eigenvalues"]),
            seed=int(s["seed"]),
            x0_mode=s.get("x0_mode", "ones"),
        )
        if len(spec.eigenvalues) != n:
            raise ValueError("spectrum length disagrees with n")
        prob = gen_spectrum_problem(spec)
        if "b" in data or "x0" in data:
            b = as_vector(data["b"]) if "b" in data else prob.b
            x0 = as_vector(data["x0"]) if "x0" in data else prob.x0
            prob = make_problem(prob.A, b, x0, spectrum=spec)
        return prob
    if "A" not in data:
        raise ValueError("problem file needs either A or spectrum")
    A = np.asarray(data["A"], dtype=np.float64)
    if A.ndim == 1:
        if A.shape[0] != n * n:
            raise ValueError("flat A must have n*n entries")
        A = A.reshape(n, n)
    if A.shape != (n, n):
        raise ValueError(f"A must be {n}x{n}")
    if "b" not in data or "x0" not in data:
        raise ValueError("dense problem files must provide b and x0")
    return make_problem(A, as_vector(data["b"]), as_vector(data["x0"]))


def save_problem(p: QuadraticProblem, path: str) -> None:
    """Write the dense JSON form atomically (temp file + rename)."""
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(problem_to_dict(p), fh, indent=1)
        fh.write("\n")
    os.replace(tmp, path)


def load_problem(path: str) -> QuadraticProblem:
    with open(path) as fh:
        data = json.load(fh)
    return problem_from_dict(data)
