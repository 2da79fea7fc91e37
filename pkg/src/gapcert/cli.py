"""Command-line front end: ``gapcert run | verify | sweep``.

``run`` executes a method on a generated or loaded problem and writes the
certificate trace to a file (CSV of the scalar columns, or JSON carrying the
problem and the full iterate vectors so a trace can be re-verified later
without the original inputs). ``verify`` replays the diagnostics over a trace
file, or over a fresh in-memory run, and reports one line per check as JSON.
``sweep`` times methods across condition numbers and tabulates observed
iteration counts next to the counts the rate bound predicts.

Exit codes: 0 success, 1 verification failure, 2 input error. Output files
are written atomically (temp file + rename) and identical invocations
produce byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile

import numpy as np

from .adgt import theorem_bound
from .diagnostics import (
    COLUMN_NAMES,
    VerificationReport,
    check_certificate,
    check_columns,
    trace_columns,
    verify_ok,
)
from .methods import (
    METHOD_KINDS,
    Certificate,
    CertifiedTrace,
    MethodOptions,
    TraceRecord,
    run_method,
    schedule_mu,
)
from .problem import (
    QuadraticProblem,
    SpectrumSpec,
    gen_spectrum_problem,
    load_problem,
    make_problem,
    problem_from_dict,
    problem_to_dict,
    spectrum_profile,
)

__all__ = [
    "main",
    "parse_gen_spec",
    "write_trace",
    "load_trace_json",
    "load_trace_csv",
    "sweep_problem",
    "iterations_to_target",
    "predicted_iterations",
    "SWEEP_TARGET_REL",
]

# Certificate checks are not claimed for these methods; verify reports them
# as skipped and exits 0.
_UNCERTIFIED = ("cg", "gradient_descent")

SWEEP_TARGET_REL = 1e-6

_TRACE_FORMAT = "gapcert-trace"
_TRACE_VERSION = 1


class _InputError(Exception):
    """User input problem: message printed to stderr, exit code 2."""


# ---------------------------------------------------------------------------
# problem generation


def parse_gen_spec(text: str) -> QuadraticProblem:
    """Build a problem from a ``--gen`` string.

    Grammar: comma-separated ``key=value`` pairs. Either an explicit
    spectrum ``n=2,eigs=1:2,seed=1`` (colon-separated eigenvalues) or a
    profile ``n=50,profile=geometric,kappa=100,seed=7`` with profile one of
    uniform | geometric | clustered. Optional ``x0=ones|seeded`` picks the
    start point mode (default ones).
    """
    fields: dict[str, str] = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise _InputError(f"--gen: expected key=value, got {part!r}")
        key, _, value = part.partition("=")
        key = key.strip()
        if key in fields:
            raise _InputError(f"--gen: duplicate key {key!r}")
        fields[key] = value.strip()

    known = {"n", "eigs", "profile", "kappa", "seed", "x0"}
    unknown = set(fields) - known
    if unknown:
        raise _InputError(f"--gen: unknown keys {sorted(unknown)}")
    try:
        n = int(fields["n"])
    except KeyError:
        raise _InputError("--gen: n is required") from None
    except ValueError:
        raise _InputError(f"--gen: bad n {fields['n']!r}") from None
    try:
        seed = int(fields.get("seed", "0"))
    except ValueError:
        raise _InputError(f"--gen: bad seed {fields['seed']!r}") from None
    x0_mode = fields.get("x0", "ones")
    if x0_mode not in ("ones", "seeded"):
        raise _InputError(f"--gen: x0 must be ones or seeded, got {x0_mode!r}")

    if "eigs" in fields:
        if "profile" in fields or "kappa" in fields:
            raise _InputError("--gen: eigs and profile/kappa are exclusive")
        try:
            eigs = tuple(float(e) for e in fields["eigs"].split(":"))
        except ValueError:
            raise _InputError(f"--gen: bad eigs {fields['eigs']!r}") from None
        if len(eigs) != n:
            raise _InputError(f"--gen: n={n} but {len(eigs)} eigenvalues given")
    elif "profile" in fields:
        if "kappa" not in fields:
            raise _InputError("--gen: profile needs kappa")
        try:
            kappa = float(fields["kappa"])
        except ValueError:
            raise _InputError(f"--gen: bad kappa {fields['kappa']!r}") from None
        try:
            eigs = spectrum_profile(fields["profile"], n, kappa)
        except ValueError as exc:
            raise _InputError(f"--gen: {exc}") from None
    else:
        raise _InputError("--gen: need either eigs=... or profile=...,kappa=...")

    try:
        spec = SpectrumSpec(eigenvalues=eigs, seed=seed, x0_mode=x0_mode)
        return gen_spectrum_problem(spec)
    except ValueError as exc:
        raise _InputError(f"--gen: {exc}") from None


def _resolve_problem(args) -> QuadraticProblem:
    if getattr(args, "problem", None) and getattr(args, "gen", None):
        raise _InputError("--problem and --gen are exclusive")
    if getattr(args, "problem", None):
        try:
            return load_problem(args.problem)
        except FileNotFoundError:
            raise _InputError(f"problem file not found: {args.problem}") from None
        except (ValueError, json.JSONDecodeError, KeyError, TypeError) as exc:
            raise _InputError(f"bad problem file {args.problem}: {exc}") from None
    if getattr(args, "gen", None):
        return parse_gen_spec(args.gen)
    raise _InputError("need a problem: pass --problem FILE or --gen SPEC")


# ---------------------------------------------------------------------------
# trace files


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".gapcert-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(value: float) -> str:
    return "%.17g" % value


def trace_to_csv(trace: CertifiedTrace) -> str:
    """Scalar columns only; 17 significant digits for exact round-trips."""
    cols = trace_columns(trace)
    lines = [",".join(COLUMN_NAMES)]
    rows = len(cols["iter"])
    for i in range(rows):
        cells = []
        for name in COLUMN_NAMES:
            value = cols[name][i]
            cells.append(str(int(value)) if name == "iter" else _fmt(value))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _jf(value: float) -> float | None:
    """JSON-safe float: NaN becomes null (strict JSON has no NaN)."""
    return None if math.isnan(value) else float(value)


def _vec(value) -> list[float] | None:
    return None if value is None else [float(x) for x in value]


def trace_to_json(trace: CertifiedTrace) -> str:
    """Self-contained trace: problem, options, and full iterate vectors."""
    problem = trace.problem
    pdict = problem_to_dict(problem)
    if problem.spectrum is not None:
        # Spectrum + b + x0 reconstructs A deterministically and spares the
        # loader an eigensolve; the matrix itself is redundant then.
        del pdict["A"]
        pdict["spectrum"] = {
            "eigenvalues": [float(e) for e in problem.spectrum.eigenvalues],
            "seed": problem.spectrum.seed,
            "x0_mode": problem.spectrum.x0_mode,
        }
    opt = trace.options
    data = {
        "format": _TRACE_FORMAT,
        "version": _TRACE_VERSION,
        "method": trace.method,
        "status": trace.status,
        "anchored": trace.anchored,
        "mu_sched": trace.mu_sched,
        "warnings": list(trace.warnings),
        "options": {
            "plane_variant": opt.plane_variant,
            "cg_certify": opt.cg_certify,
            "cg_oracle_check": opt.cg_oracle_check,
            "paranoid": opt.paranoid,
            "gap_floor": opt.gap_floor,
        },
        "problem": pdict,
        "records": [
            {
                "iter": r.k,
                "a": _jf(r.a),
                "A": _jf(r.A),
                "a_prime": _jf(r.a_prime),
                "f_x": r.f_x,
                "f_y": r.f_y,
                "grad_norm": r.grad_norm,
                "U": _jf(r.cert.U),
                "L_anchored": _jf(r.cert.L_anchored),
                "G_anchored": _jf(r.cert.G_anchored),
                "Phi": _jf(r.cert.Phi),
                "coupling_residual": _jf(r.cert.coupling_residual),
                "bound_rhs": _jf(r.cert.bound_rhs),
                "x": _vec(r.x),
                "y": _vec(r.y),
                "g": _vec(r.g),
                "v": _vec(r.v),
            }
            for r in trace.records
        ],
    }
    return json.dumps(data, separators=(",", ":"), allow_nan=False) + "\n"


def write_trace(trace: CertifiedTrace, path: str, fmt: str) -> None:
    if fmt == "csv":
        _atomic_write(path, trace_to_csv(trace))
    elif fmt == "json":
        _atomic_write(path, trace_to_json(trace))
    else:
        raise _InputError(f"unknown format {fmt!r} (csv|json)")


def _unjf(value) -> float:
    return math.nan if value is None else float(value)


def load_trace_json(path: str) -> CertifiedTrace:
    """Rebuild a CertifiedTrace (problem included) from a JSON trace file."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise _InputError(f"trace file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise _InputError(f"malformed JSON trace {path}: {exc}") from None
    try:
        if data.get("format") != _TRACE_FORMAT:
            raise ValueError("not a gapcert trace file")
        if int(data.get("version", -1)) != _TRACE_VERSION:
            raise ValueError(f"unsupported trace version {data.get('version')}")
        problem = problem_from_dict(data["problem"])
        odata = data.get("options", {})
        options = MethodOptions(
            plane_variant=odata.get("plane_variant", "span"),
            cg_certify=bool(odata.get("cg_certify", False)),
            cg_oracle_check=bool(odata.get("cg_oracle_check", False)),
            paranoid=odata.get("paranoid"),
            gap_floor=float(odata.get("gap_floor", 1e-12)),
        )
        records = []
        for rd in data["records"]:
            records.append(
                TraceRecord(
                    k=int(rd["iter"]),
                    a=_unjf(rd["a"]),
                    A=_unjf(rd["A"]),
                    a_prime=_unjf(rd["a_prime"]),
                    x=np.asarray(rd["x"], dtype=np.float64),
                    y=np.asarray(rd["y"], dtype=np.float64),
                    g=np.asarray(rd["g"], dtype=np.float64),
                    v=None if rd["v"] is None else np.asarray(rd["v"], dtype=np.float64),
                    f_x=float(rd["f_x"]),
                    f_y=float(rd["f_y"]),
                    grad_norm=float(rd["grad_norm"]),
                    cert=Certificate(
                        U=_unjf(rd["U"]),
                        L_anchored=_unjf(rd["L_anchored"]),
                        G_anchored=_unjf(rd["G_anchored"]),
                        Phi=_unjf(rd["Phi"]),
                        coupling_residual=_unjf(rd["coupling_residual"]),
                        bound_rhs=_unjf(rd["bound_rhs"]),
                    ),
                )
            )
        method = str(data["method"])
        if method not in METHOD_KINDS:
            raise ValueError(f"unknown method in trace: {method!r}")
        return CertifiedTrace(
            method=method,
            records=tuple(records),
            status=str(data.get("status", "unknown")),
            problem=problem,
            mu_sched=float(data["mu_sched"]),
            anchored=bool(data["anchored"]),
            options=options,
            warnings=tuple(data.get("warnings", ())),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise _InputError(f"malformed trace {path}: {exc}") from None


def load_trace_csv(path: str) -> dict[str, np.ndarray]:
    """Columns of a CSV trace. The CSV carries no problem or method, so the
    caller must supply those to the column checks."""
    try:
        with open(path) as fh:
            lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    except FileNotFoundError:
        raise _InputError(f"trace file not found: {path}") from None
    if not lines:
        raise _InputError(f"empty trace file: {path}")
    header = lines[0].split(",")
    if header != list(COLUMN_NAMES):
        raise _InputError(
            f"bad CSV header in {path}: expected {','.join(COLUMN_NAMES)}"
        )
    rows = []
    for ln in lines[1:]:
        cells = ln.split(",")
        if len(cells) != len(COLUMN_NAMES):
            raise _InputError(f"ragged CSV row in {path}: {ln!r}")
        try:
            rows.append([float(c) for c in cells])
        except ValueError:
            raise _InputError(f"non-numeric CSV cell in {path}: {ln!r}") from None
    if not rows:
        raise _InputError(f"no data rows in {path}")
    arr = np.asarray(rows, dtype=np.float64)
    return {name: arr[:, j] for j, name in enumerate(COLUMN_NAMES)}


# ---------------------------------------------------------------------------
# run


def _worst_violation(reports: list[VerificationReport]) -> float:
    return max((r.worst for r in reports if r.at_iter is not None), default=0.0)


def cmd_run(args) -> int:
    problem = _resolve_problem(args)
    if args.method not in METHOD_KINDS:
        raise _InputError(f"unknown method {args.method!r}; choose from {METHOD_KINDS}")
    options = MethodOptions(paranoid=args.paranoid)
    try:
        trace = run_method(
            problem,
            args.method,
            iters=args.iters,
            grad_tol=args.grad_tol,
            options=options,
            anchored=args.anchored,
        )
    except ValueError as exc:
        raise _InputError(str(exc)) from None

    out = args.out or f"gapcert_trace.{args.format}"
    write_trace(trace, out, args.format)

    last = trace.records[-1]
    final_gap = last.f_y - problem.f_star
    if trace.certified:
        reports = check_certificate(trace, paranoid=args.paranoid)
        worst = f"{_worst_violation(reports):.3e}"
        if not verify_ok(reports):
            worst += " (FAIL)"
    else:
        worst = "not claimed"
    print(
        f"gapcert run: method={trace.method} n={problem.n} "
        f"iterations={last.k} status={trace.status} "
        f"f_minus_fstar={final_gap:.6e} worst_violation={worst} trace={out}"
    )
    for w in trace.warnings:
        print(f"  warning: {w}")
    return 0


# ---------------------------------------------------------------------------
# verify


def _report_json(
    method: str,
    reports: list[VerificationReport],
    not_claimed: list[str],
    overall: bool,
) -> str:
    return json.dumps(
        {
            "method": method,
            "overall_pass": overall,
            "checks": [r.to_dict() for r in reports],
            "not_claimed": not_claimed,
        },
        indent=1,
    )


_NOT_CLAIMED_CHECKS = [
    "schedule_consistency",
    "descent_step",
    "phi_monotone",
    "lemma2_step",
    "coupling_small",
    "bound_holds",
]


def cmd_verify(args) -> int:
    if args.trace:
        if args.trace.endswith(".json"):
            trace = load_trace_json(args.trace)
            method = trace.method
            if method in _UNCERTIFIED:
                reports: list[VerificationReport] = []
                print(_report_json(method, reports, _NOT_CLAIMED_CHECKS, True))
                return 0
            try:
                reports = check_certificate(trace, paranoid=args.paranoid)
            except (ValueError, RuntimeError) as exc:
                raise _InputError(f"cannot verify {args.trace}: {exc}") from None
        else:
            # CSV carries columns only; problem and method come from flags.
            if not args.method:
                raise _InputError("CSV traces need --method (no metadata inside)")
            method = args.method
            columns = load_trace_csv(args.trace)
            if method in _UNCERTIFIED:
                print(_report_json(method, [], _NOT_CLAIMED_CHECKS, True))
                return 0
            problem = _resolve_problem(args)
            anchored = not np.all(np.isnan(columns["L_anchored"]))
            try:
                reports = check_columns(
                    columns,
                    problem,
                    method,
                    mu_sched=schedule_mu(method, problem),
                    anchored=anchored,
                )
            except ValueError as exc:
                raise _InputError(str(exc)) from None
    else:
        # No trace file: run in memory from the flags, then verify.
        if not args.method:
            raise _InputError("inline verify needs --method")
        method = args.method
        if method not in METHOD_KINDS:
            raise _InputError(f"unknown method {method!r}")
        problem = _resolve_problem(args)
        try:
            trace = run_method(
                problem,
                method,
                iters=args.iters,
                grad_tol=args.grad_tol,
                options=MethodOptions(paranoid=args.paranoid),
                anchored=True,
            )
        except ValueError as exc:
            raise _InputError(str(exc)) from None
        if trace.method in _UNCERTIFIED:
            print(_report_json(trace.method, [], _NOT_CLAIMED_CHECKS, True))
            return 0
        reports = check_certificate(trace, paranoid=args.paranoid)

    overall = verify_ok(reports)
    text = _report_json(method, reports, [], overall)
    if args.out:
        _atomic_write(args.out, text + "\n")
    print(text)
    if not overall:
        for r in reports:
            if not r.passed:
                where = "" if r.at_iter is None else f" at iteration {r.at_iter}"
                print(f"violation: {r.check}{where} (worst {r.worst:.3e})", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# sweep


def sweep_problem(n: int, kappa: float, seed: int) -> QuadraticProblem:
    """Instance family for the condition-number sweep.

    Eigenvalues sit at Chebyshev nodes of [1, kappa]: that spacing matches
    the equilibrium distribution of the interval, so a conjugate-gradient
    run cannot exploit gaps in a discrete spectrum and its count follows the
    sqrt(kappa) rate instead of collapsing superlinearly. The start point
    gives every eigenmode the same objective energy (component 1/sqrt(eig),
    plus a seeded 1% jitter), which keeps the slow modes relevant: a random
    start buries them, and the iteration counts then saturate instead of
    scaling with kappa.
    """
    if not kappa > 1.0:
        raise _InputError("sweep kappa must exceed 1")
    if n < 2:
        raise _InputError("sweep needs n >= 2")
    i = np.arange(1, n + 1)
    theta = (2 * i - 1) * np.pi / (2 * n)
    eigs = np.sort((1.0 + kappa) / 2.0 + (kappa - 1.0) / 2.0 * np.cos(theta))
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((n, n))
    Q, R = np.linalg.qr(G)
    signs = np.sign(np.diag(R))
    signs[signs == 0.0] = 1.0
    Q = Q * signs
    A = Q.T @ (eigs[:, None] * Q)
    z = rng.standard_normal(n)
    b = A @ z
    jitter = rng.uniform(-1.0, 1.0, size=n)
    d = Q.T @ ((1.0 + 0.01 * jitter) / np.sqrt(eigs))
    spec = SpectrumSpec(tuple(float(e) for e in eigs), seed=seed)
    return make_problem(A, b, z + d, spectrum=spec)


def predicted_iterations(method: str, problem: QuadraticProblem, rel: float) -> int:
    """Iteration count the rate bound guarantees for relative accuracy ``rel``.

    Accelerated methods: first k with the certified bound below the target
    (the conjugate-gradient certificate covers iterate k+1, hence the +1).
    Gradient descent: classical per-step objective contraction (1 - mu/L)^2.
    """
    target = rel * (problem.eval(problem.x0) - problem.f_star)
    if method == "gradient_descent":
        if problem.mu <= 0.0:
            return -1  # no geometric rate to invert
        ratio = 1.0 - problem.mu / problem.L
        return max(0, math.ceil(math.log(rel) / (2.0 * math.log(ratio))))
    mu, L, R2 = problem.mu, problem.L, problem.radius2
    k = 0
    while theorem_bound(k, mu, L, R2) > target:
        k += 1
        if k > 10**7:
            return -1
    return k + 1 if method == "cg" else k


def iterations_to_target(
    problem: QuadraticProblem, method: str, rel: float, cap: int
) -> int | None:
    """First row index whose f(y) is within ``rel`` of the initial error."""
    target = problem.f_star + rel * (problem.eval(problem.x0) - problem.f_star)
    if method == "gradient_descent":
        # Count-only loop: the sweep would otherwise store millions of
        # iterate vectors for the large-kappa gradient-descent rows.
        L = problem.L
        y = problem.x0.copy()
        g = problem.grad(y)
        for k in range(cap + 1):
            y = y - g / L
            if problem.eval(y) <= target:
                return k
            g = problem.grad(y)
        return None
    trace = run_method(problem, method, iters=cap, grad_tol=0.0)
    for r in trace.records:
        if r.f_y <= target:
            return r.k
    return None


def _sweep_cap(method: str, problem: QuadraticProblem, predicted: int) -> int:
    if method == "cg":
        return problem.n
    if predicted <= 0:
        return 20 * problem.n
    return math.ceil(1.2 * predicted) + 10


def cmd_sweep(args) -> int:
    methods = [m for m in (args.methods_list or "").split(",") if m]
    kappas = [k for k in (args.kappa_list or "").split(",") if k]
    seeds = [s for s in (args.seed or "").split(",") if s]
    if not methods or not kappas or not seeds:
        raise _InputError("sweep grid is empty: need --methods-list, --kappa-list, --seed")
    for m in methods:
        if m not in METHOD_KINDS:
            raise _InputError(f"unknown method {m!r} in --methods-list")
    try:
        kappa_values = [float(k) for k in kappas]
        seed_values = [int(s) for s in seeds]
    except ValueError as exc:
        raise _InputError(f"bad sweep grid value: {exc}") from None

    n = args.n
    lines = ["method,kappa,seed,n,observed_iters,predicted_iters,target_rel"]
    for kappa in kappa_values:
        for seed in seed_values:
            problem = sweep_problem(n, kappa, seed)
            for method in methods:
                predicted = predicted_iterations(method, problem, SWEEP_TARGET_REL)
                cap = _sweep_cap(method, problem, predicted)
                observed = iterations_to_target(
                    problem, method, SWEEP_TARGET_REL, cap
                )
                lines.append(
                    ",".join(
                        [
                            method,
                            _fmt(kappa),
                            str(seed),
                            str(n),
                            "" if observed is None else str(observed),
                            str(predicted),
                            _fmt(SWEEP_TARGET_REL),
                        ]
                    )
                )
                print(
                    f"gapcert sweep: method={method} kappa={kappa:g} seed={seed} "
                    f"observed={observed} predicted={predicted}"
                )
    out = args.out or "gapcert_sweep.csv"
    _atomic_write(out, "\n".join(lines) + "\n")
    print(f"gapcert sweep: wrote {out}")
    if args.gnuplot:
        script = _gnuplot_script(os.path.basename(out), methods)
        _atomic_write(out + ".gp", script)
        print(f"gapcert sweep: wrote {out}.gp")
    return 0


def _gnuplot_script(csv_name: str, methods: list[str]) -> str:
    plots = ", ".join(
        f"'{csv_name}' using 2:($1 eq '{m}' ? $5 : NaN) title '{m}' with linespoints"
        for m in methods
    )
    return (
        "set datafile separator ','\n"
        "set logscale xy\n"
        "set xlabel 'condition number'\n"
        "set ylabel 'iterations to 1e-6 relative accuracy'\n"
        "set key top left\n"
        f"plot {plots}\n"
    )


# ---------------------------------------------------------------------------
# argument parsing


def _add_problem_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--problem", help="problem JSON file (see gapcert.problem)")
    p.add_argument(
        "--gen",
        help="generator spec, e.g. n=2,eigs=1:2,seed=1 or "
        "n=50,profile=geometric,kappa=100,seed=7",
    )


def _bool_flag(text: str) -> bool:
    low = text.lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected true/false, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gapcert",
        description="Certified first-order methods on convex quadratics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a method, write its trace")
    run.add_argument("--method", required=True, help="|".join(METHOD_KINDS))
    _add_problem_flags(run)
    run.add_argument("--iters", type=int, default=None, help="max iterations (default 2n)")
    run.add_argument("--grad-tol", type=float, default=1e-12,
                     help="stop when ||g|| <= tol * ||g0|| (default 1e-12)")
    run.add_argument("--out", default=None, help="trace path (default gapcert_trace.FMT)")
    run.add_argument("--format", choices=("csv", "json"), default="csv")
    run.add_argument("--anchored", type=_bool_flag, default=True,
                     help="record anchored lower bound / gap / rate columns (default true)")
    run.add_argument("--paranoid", type=_bool_flag, default=None,
                     help="force the direct lower-model recomputation on/off")
    run.set_defaults(func=cmd_run)

    verify = sub.add_parser("verify", help="re-check a trace file or a fresh run")
    verify.add_argument("trace", nargs="?", default=None,
                        help="trace file (.json self-contained; .csv needs --method and a problem)")
    verify.add_argument("--method", default=None)
    _add_problem_flags(verify)
    verify.add_argument("--iters", type=int, default=None)
    verify.add_argument("--grad-tol", type=float, default=1e-12)
    verify.add_argument("--out", default=None, help="write the JSON report here too")
    verify.add_argument("--paranoid", type=_bool_flag, default=None)
    verify.set_defaults(func=cmd_verify)

    sweep = sub.add_parser("sweep", help="iteration counts across condition numbers")
    sweep.add_argument("--methods-list", default="cg,nesterov,gradient_descent",
                       help="comma-separated methods")
    sweep.add_argument("--kappa-list", default="100,1000,10000",
                       help="comma-separated condition numbers (> 1)")
    sweep.add_argument("--seed", default="1", help="comma-separated seeds")
    sweep.add_argument("--n", type=int, default=400, help="problem dimension")
    sweep.add_argument("--out", default=None, help="CSV path (default gapcert_sweep.csv)")
    sweep.add_argument("--gnuplot", action="store_true",
                       help="also write a gnuplot script next to the CSV")
    sweep.set_defaults(func=cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _InputError as exc:
        print(f"gapcert: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"gapcert: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
