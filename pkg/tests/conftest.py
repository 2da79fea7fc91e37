"""Shared fixtures: the hand-checkable 2x2 problem and the standard suite."""

import numpy as np
import pytest

from gapcert.problem import (
    QuadraticProblem,
    SpectrumSpec,
    gen_spectrum_problem,
    make_problem,
    spectrum_profile,
)


def hand_problem() -> QuadraticProblem:
    """diag(1,2), b = 0, x0 = (1,1): every certificate number is checkable
    with pencil and paper (f(x0) = 3/2, g0 = (1,2), x* = 0, R^2 = 2)."""
    return make_problem(np.diag([1.0, 2.0]), [0.0, 0.0], [1.0, 1.0])


def suite_specs() -> list[tuple[str, SpectrumSpec]]:
    """24 generator specs: 9 uniform SPD, 9 geometric SPD, 6 singular."""
    out = []
    seed = 101
    for profile in ("uniform", "geometric"):
        for n in (20, 50, 200):
            for kappa in (10, 100, 1e4):
                out.append((
                    f"{profile}-{n}-{kappa:g}",
                    SpectrumSpec(spectrum_profile(profile, n, kappa),
                                 seed=seed, x0_mode="seeded"),
                ))
                seed += 1
    for n in (20, 50, 200):
        for top in (10, 100):
            eigs = (0.0,) + tuple(np.linspace(1.0, top, n - 1))
            out.append((
                f"singular-{n}-{top:g}",
                SpectrumSpec(eigs, seed=seed, x0_mode="seeded"),
            ))
            seed += 1
    return out


@pytest.fixture(scope="session")
def suite() -> list[tuple[str, QuadraticProblem]]:
    return [(name, gen_spectrum_problem(spec)) for name, spec in suite_specs()]
