"""Randomised checks of the discrimination bound over arbitrary protocols."""

from __future__ import annotations

import cmath
import math

import numpy as np
from scipy.stats import unitary_group

from .amplitude import DiscriminationPair, object_from_alpha
from .engine import ISTEP, Protocol, Unitary, UnambiguousPair, run_pair, verify_bound


def random_alpha(rng: np.random.Generator) -> complex:
    # a few exact edge cases mixed into the continuous draw
    u = rng.random()
    if u < 0.05:
        return complex(1.0)
    if u < 0.10:
        return complex(0.0)
    if u < 0.15:
        return cmath.rect(1.0, rng.uniform(-math.pi, math.pi))
    return cmath.rect(math.sqrt(rng.random()), rng.uniform(-math.pi, math.pi))


def random_pair(rng: np.random.Generator) -> DiscriminationPair:
    a1 = random_alpha(rng)
    a2 = a1 if rng.random() < 0.03 else random_alpha(rng)
    return DiscriminationPair(object_from_alpha(a1), object_from_alpha(a2))


def random_protocol(rng: np.random.Generator, dim_max: int = 8, max_steps: int = 20) -> Protocol:
    dim = int(rng.integers(2, dim_max + 1))
    n_mask = int(rng.integers(1, dim + 1))
    mask = tuple(int(i) for i in rng.choice(dim, size=n_mask, replace=False))
    n_steps = int(rng.integers(1, max_steps + 1))
    steps = []
    for _ in range(n_steps):
        if rng.random() < 0.5:
            steps.append(ISTEP)
        else:
            steps.append(Unitary(unitary_group.rvs(dim, random_state=rng)))
    if not any(s is ISTEP for s in steps):
        steps[int(rng.integers(0, n_steps))] = ISTEP
    initial = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    initial /= np.linalg.norm(initial)
    return Protocol(initial, mask, tuple(steps), UnambiguousPair())


def property_sweep(trials: int, dim_max: int = 8, seed: int = 0, max_steps: int = 20) -> dict:
    """Check the inequality chain on ``trials`` random protocols and object pairs.

    Returns ``{trials, failures, worst_slack}`` plus the worst accounting and
    recursion residuals seen, so that a caller can assert on them too.
    """
    if trials < 1 or dim_max < 2:
        raise ValueError("need trials >= 1 and dim_max >= 2")
    rng = np.random.default_rng(seed)
    failures = 0
    worst_slack = math.inf
    worst_accounting = 0.0
    worst_recursion = 0.0
    for _ in range(trials):
        protocol = random_protocol(rng, dim_max, max_steps)
        pair = random_pair(rng)
        trace = run_pair(protocol, pair)
        report = verify_bound(trace)
        if not report.all_hold:
            failures += 1
        worst_slack = min(worst_slack, *report.slacks())
        worst_accounting = max(worst_accounting, trace.trace1.accounting_error,
                               trace.trace2.accounting_error)
        worst_recursion = max(worst_recursion, trace.recursion_residual)
    return {
        "trials": trials,
        "failures": failures,
        "worst_slack": worst_slack,
        "worst_accounting_error": worst_accounting,
        "worst_recursion_residual": worst_recursion,
    }
