"""Accelerated first-order methods on convex quadratics, each run carrying a
machine-checked duality-gap certificate.

The pieces:

* :mod:`gapcert.problem`: immutable quadratic instances and generators.
* :mod:`gapcert.adgt`: the weight schedule, lower-bound recursion, gap
  potential, and rate bound that make up the certificate.
* :mod:`gapcert.methods`: the certified solvers (nesterov, the two
  nemirovski subspace-search variants, conjugate gradients plain and with a
  shadow certificate) plus a gradient-descent baseline.
* :mod:`gapcert.diagnostics`: independent re-verification of traces.
* :mod:`gapcert.cli`: ``gapcert run | verify | sweep``.
"""

from .adgt import (
    Schedule,
    LowerBoundState,
    anchored_lower_bound,
    potential,
    schedule_advance,
    schedule_init,
    theorem_bound,
)
from .diagnostics import (
    SandwichRow,
    VerificationReport,
    check_certificate,
    check_cg_orthogonality,
    check_columns,
    check_krylov_membership,
    restricted_sandwich,
    trace_columns,
    verify_ok,
)
from .methods import (
    METHOD_KINDS,
    Certificate,
    CertifiedTrace,
    MethodOptions,
    TraceRecord,
    cg_krylov_oracle,
    claimed_bound,
    krylov_basis,
    run_method,
    schedule_mu,
)
from .problem import (
    QuadraticProblem,
    SpectrumSpec,
    gen_spectrum_problem,
    load_problem,
    make_problem,
    optimal_point,
    save_problem,
    spectrum_profile,
)

__version__ = "0.1.0"

__all__ = [
    "Schedule",
    "LowerBoundState",
    "anchored_lower_bound",
    "potential",
    "schedule_advance",
    "schedule_init",
    "theorem_bound",
    "SandwichRow",
    "VerificationReport",
    "check_certificate",
    "check_cg_orthogonality",
    "check_columns",
    "check_krylov_membership",
    "restricted_sandwich",
    "trace_columns",
    "verify_ok",
    "METHOD_KINDS",
    "Certificate",
    "CertifiedTrace",
    "MethodOptions",
    "TraceRecord",
    "cg_krylov_oracle",
    "claimed_bound",
    "krylov_basis",
    "run_method",
    "schedule_mu",
    "QuadraticProblem",
    "SpectrumSpec",
    "gen_spectrum_problem",
    "load_problem",
    "make_problem",
    "optimal_point",
    "save_problem",
    "spectrum_profile",
    "__version__",
]
