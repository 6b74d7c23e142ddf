"""Generic absorption-free measurement protocol simulator.

States are unnormalised complex vectors over a finite basis. A protocol is an
initial unit vector, a fixed interaction mask (the basis indices where the
particle can be absorbed), an ordered list of steps and a final measurement.

Two kinds of step exist:

* ``Unitary`` -- any unitary matrix, dense ``numpy`` or ``scipy.sparse``;
* ``IStep`` -- the conditional interaction step. Components inside the mask
  are multiplied by the object's transmission amplitude; the absorbed branch
  is discarded and its probability is added to ``p_interact``.

Running the same protocol against the two objects of a
:class:`~afm.amplitude.DiscriminationPair` records the overlap
``f = <psi_1|psi_2>`` after every interaction step and checks, step by step,
that it obeys ``f_new = f_old - (1 - conj(a1) a2) <v_1|v_2>`` where ``v_i`` is
the masked part of each state just before the step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
import scipy.sparse as sp

from .amplitude import DiscriminationPair, ObjectModel, bound_rhs, object_from_alpha

UNITARY_TOL = 1e-10
BOUND_SLACK = 1e-9
RECURSION_TOL = 1e-10
RECURSION_FATAL = 1e-8
ACCOUNTING_TOL = 1e-9
DEGENERATE_NORM = 1e-15

M1, M2, INCONCLUSIVE = "M1", "M2", "INCONCLUSIVE"
LABELS = (M1, M2, INCONCLUSIVE)


class EngineError(RuntimeError):
    """Internal consistency check failed; indicates a bug, not bad input."""


def is_unitary(u, tol: float = UNITARY_TOL) -> bool:
    if sp.issparse(u):
        u = sp.csr_matrix(u)
        resid = (u.conj().T @ u - sp.identity(u.shape[0], format="csr")).tocoo()
        return resid.nnz == 0 or float(np.max(np.abs(resid.data))) <= tol
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= tol)


def as_state(amps) -> np.ndarray:
    state = np.array(amps, dtype=complex).reshape(-1)
    if state.size == 0 or not np.all(np.isfinite(state)):
        raise ValueError("state vector must be non-empty and finite")
    return state


def norm_sq(state: np.ndarray) -> float:
    return float(np.vdot(state, state).real)


@dataclass(frozen=True)
class Unitary:
    matrix: object

    def __post_init__(self):
        m = self.matrix
        if sp.issparse(m):
            m = sp.csr_matrix(m, dtype=complex)
        else:
            m = np.array(m, dtype=complex)
            m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class IStep:
    """Marker for an interaction step; the object is supplied at run time."""


ISTEP = IStep()
Step = Union[Unitary, IStep]


@dataclass(frozen=True)
class Projective:
    """Computational-basis measurement; ``labels[i]`` is the outcome of index ``i``."""

    labels: tuple[str, ...]

    def __post_init__(self):
        labels = tuple(self.labels)
        bad = [x for x in labels if x not in LABELS]
        if bad:
            raise ValueError(f"unknown outcome labels {bad}")
        object.__setattr__(self, "labels", labels)

    def indices(self, label: str) -> np.ndarray:
        return np.array([i for i, x in enumerate(self.labels) if x == label], dtype=int)


@dataclass(frozen=True)
class UnambiguousPair:
    """Optimal symmetric unambiguous discrimination of the two final states.

    With normalised finals overlapping by ``s``, the POVM identifies each state
    with conditional probability ``1 - s`` and never misidentifies.
    """


Measurement = Union[Projective, UnambiguousPair]


@dataclass(frozen=True)
class Protocol:
    initial: np.ndarray
    mask: tuple[int, ...]
    steps: tuple[Step, ...]
    measurement: Measurement

    def __post_init__(self):
        initial = as_state(self.initial)
        if abs(norm_sq(initial) - 1.0) > 1e-12:
            raise ValueError("initial state must have unit norm")
        initial.setflags(write=False)
        object.__setattr__(self, "initial", initial)
        dim = initial.size
        mask = tuple(sorted({int(i) for i in self.mask}))
        if not mask:
            raise ValueError("interaction mask must not be empty")
        if mask[0] < 0 or mask[-1] >= dim:
            raise ValueError(f"mask index out of range for dimension {dim}")
        object.__setattr__(self, "mask", mask)
        steps = tuple(self.steps)
        checked = set()
        for step in steps:
            if isinstance(step, IStep):
                continue
            if not isinstance(step, Unitary):
                raise TypeError(f"unsupported step {step!r}")
            if step.dim != dim or step.matrix.shape[1] != dim:
                raise ValueError(f"unitary of shape {step.matrix.shape} in a {dim}-dim protocol")
            # long protocols reuse a handful of matrices; check each once
            if id(step.matrix) not in checked:
                if not is_unitary(step.matrix):
                    raise ValueError("step matrix is not unitary")
                checked.add(id(step.matrix))
        object.__setattr__(self, "steps", steps)
        if isinstance(self.measurement, Projective) and len(self.measurement.labels) != dim:
            raise ValueError("projective measurement must label every basis index")
        if not isinstance(self.measurement, (Projective, UnambiguousPair)):
            raise TypeError("measurement must be Projective or UnambiguousPair")

    @property
    def dim(self) -> int:
        return self.initial.size

    @property
    def n_isteps(self) -> int:
        return sum(isinstance(s, IStep) for s in self.steps)

    def with_measurement(self, measurement: Measurement) -> "Protocol":
        return Protocol(self.initial, self.mask, self.steps, measurement)


@dataclass
class RunTrace:
    v_norms_sq: list[float]
    p_interact: float
    final_state: np.ndarray
    p_ident: float
    p_notident: float

    @property
    def final_norm_sq(self) -> float:
        return norm_sq(self.final_state)

    @property
    def accounting_error(self) -> float:
        return abs(self.final_norm_sq + self.p_interact - 1.0)


@dataclass
class PairTrace:
    trace1: RunTrace
    trace2: RunTrace
    f_history: list[complex]
    pair: DiscriminationPair
    measurement: Measurement
    recursion_residual: float = 0.0
    misident: tuple[float, float] = (0.0, 0.0)

    @property
    def f_final(self) -> complex:
        return self.f_history[-1] if self.f_history else complex(1.0)

    @property
    def p_ident(self) -> tuple[float, float]:
        return self.trace1.p_ident, self.trace2.p_ident


@dataclass
class BoundReport:
    eta_sq: float
    product: float
    p_ident_1: float
    p_ident_2: float
    p_interact_1: float
    p_interact_2: float
    f_final: complex
    lhs_cs: float | None
    rhs_cs: float | None
    lhs_final: float | None
    rhs_final: float | None
    cs_holds: bool
    final_holds: bool
    theorem_holds: bool
    misident: tuple[float, float] = (0.0, 0.0)
    applicable: bool = True

    @property
    def flags(self) -> dict:
        return {
            "cs_holds": self.cs_holds,
            "final_holds": self.final_holds,
            "theorem_holds": self.theorem_holds,
        }

    @property
    def all_hold(self) -> bool:
        return self.cs_holds and self.final_holds and self.theorem_holds

    def slacks(self) -> list[float]:
        """Margins of every inequality checked; negative means violated."""
        out = [self.product - self.eta_sq]
        if self.applicable:
            out += [self.rhs_cs - self.lhs_cs, self.rhs_final - self.lhs_final]
        return out


def apply_unitary(state: np.ndarray, u) -> np.ndarray:
    state = as_state(state)
    shape = u.shape
    if shape != (state.size, state.size):
        raise ValueError(f"dimension mismatch: matrix {shape} vs state {state.size}")
    if not is_unitary(u):
        raise ValueError("matrix is not unitary")
    return np.asarray(u @ state).reshape(-1)


def apply_istep(state: np.ndarray, mask: Sequence[int], obj: ObjectModel) -> tuple[np.ndarray, float]:
    """Contract the masked components by ``obj.alpha``.

    Returns the new state and the squared norm of the masked part *before*
    contraction; the norm drops by exactly ``beta_mag**2`` times that.
    """
    state = as_state(state)
    idx = np.asarray(mask, dtype=int)
    if idx.size and (idx.min() < 0 or idx.max() >= state.size):
        raise ValueError("mask index out of range")
    v = state[idx]
    v_norm_sq = float(np.vdot(v, v).real)
    out = state.copy()
    out[idx] = obj.alpha * v
    return out, v_norm_sq


def _evolve(protocol: Protocol, obj: ObjectModel):
    idx = np.asarray(protocol.mask, dtype=int)
    state = protocol.initial.copy()
    v_norms = []
    for step in protocol.steps:
        if isinstance(step, IStep):
            v = state[idx]
            v_norms.append(float(np.vdot(v, v).real))
            state[idx] = obj.alpha * v
        else:
            state = np.asarray(step.matrix @ state).reshape(-1)
    p_interact = obj.absorption * math.fsum(v_norms)
    return state, v_norms, p_interact


def _projective_probs(measurement: Projective, state: np.ndarray) -> dict[str, float]:
    probs = np.abs(state) ** 2
    return {label: float(probs[measurement.indices(label)].sum()) for label in LABELS}


def run(protocol: Protocol, obj: ObjectModel, which: int = 2) -> RunTrace:
    """Run one object through ``protocol``.

    ``which`` says whether ``obj`` plays the role of object 1 or 2, i.e. which
    outcome label counts as a correct identification. Unambiguous pair
    measurements need both objects; use :func:`run_pair` for those.
    """
    if which not in (1, 2):
        raise ValueError("which must be 1 or 2")
    if not isinstance(protocol.measurement, Projective):
        raise ValueError("unambiguous discrimination needs both objects; use run_pair")
    final, v_norms, p_interact = _evolve(protocol, obj)
    probs = _projective_probs(protocol.measurement, final)
    p_ident = probs[M1 if which == 1 else M2]
    p_notident = norm_sq(final) - p_ident
    return RunTrace(v_norms, p_interact, final, p_ident, p_notident)


def run_pair(protocol: Protocol, pair: DiscriminationPair) -> PairTrace:
    """Run both objects in lock step, tracking and checking the overlap recursion."""
    idx = np.asarray(protocol.mask, dtype=int)
    a1, a2 = pair.alphas
    factor = pair.overlap_factor()
    s1 = protocol.initial.copy()
    s2 = protocol.initial.copy()
    v1n, v2n, f_hist = [], [], []
    f_prev = complex(np.vdot(s1, s2))
    worst = 0.0
    for step in protocol.steps:
        if isinstance(step, IStep):
            v1, v2 = s1[idx], s2[idx]
            v1n.append(float(np.vdot(v1, v1).real))
            v2n.append(float(np.vdot(v2, v2).real))
            predicted = f_prev - factor * complex(np.vdot(v1, v2))
            s1[idx] = a1 * v1
            s2[idx] = a2 * v2
            f_new = complex(np.vdot(s1, s2))
            worst = max(worst, abs(f_new - predicted))
            f_hist.append(f_new)
            f_prev = f_new
        else:
            s1 = np.asarray(step.matrix @ s1).reshape(-1)
            s2 = np.asarray(step.matrix @ s2).reshape(-1)
    if worst > RECURSION_FATAL:
        raise EngineError(f"overlap recursion violated by {worst:.3e}")
    t1 = RunTrace(v1n, pair.obj1.absorption * math.fsum(v1n), s1, 0.0, 0.0)
    t2 = RunTrace(v2n, pair.obj2.absorption * math.fsum(v2n), s2, 0.0, 0.0)
    trace = PairTrace(t1, t2, f_hist, pair, protocol.measurement, worst)
    p1, p2 = discriminate(trace)
    t1.p_ident, t2.p_ident = p1, p2
    t1.p_notident = t1.final_norm_sq - p1
    t2.p_notident = t2.final_norm_sq - p2
    return trace


def unambiguous_success(psi1: np.ndarray, psi2: np.ndarray) -> tuple[float, float]:
    n1, n2 = norm_sq(psi1), norm_sq(psi2)
    if n1 < DEGENERATE_NORM or n2 < DEGENERATE_NORM:
        # a vanishing final means any surviving particle identifies the other object
        return (0.0 if n1 < DEGENERATE_NORM else n1, 0.0 if n2 < DEGENERATE_NORM else n2)
    s = min(1.0, abs(complex(np.vdot(psi1, psi2))) / math.sqrt(n1 * n2))
    return n1 * (1.0 - s), n2 * (1.0 - s)


def discriminate(trace: PairTrace) -> tuple[float, float]:
    psi1, psi2 = trace.trace1.final_state, trace.trace2.final_state
    m = trace.measurement
    if isinstance(m, UnambiguousPair):
        trace.misident = (0.0, 0.0)
        return unambiguous_success(psi1, psi2)
    pr1 = _projective_probs(m, psi1)
    pr2 = _projective_probs(m, psi2)
    # probability that object i is reported as the other one
    trace.misident = (pr1[M2], pr2[M1])
    return pr1[M1], pr2[M2]


def verify_bound(trace: PairTrace) -> BoundReport:
    pair = trace.pair
    p1, p2 = trace.p_ident
    pi1, pi2 = trace.trace1.p_interact, trace.trace2.p_interact
    eta_sq = bound_rhs(pair)
    product = (1.0 - p1) * (1.0 - p2)
    theorem = product >= eta_sq - BOUND_SLACK
    f_n = trace.f_final
    if pair.same_alpha():
        return BoundReport(eta_sq, product, p1, p2, pi1, pi2, f_n, None, None, None, None,
                           True, True, theorem, trace.misident, applicable=False)
    lhs_cs = abs(1.0 - f_n) ** 2 / abs(pair.overlap_factor()) ** 2
    rhs_cs = math.fsum(trace.trace1.v_norms_sq) * math.fsum(trace.trace2.v_norms_sq)
    betas = pair.obj1.absorption * pair.obj2.absorption
    lhs_final = lhs_cs * betas
    rhs_final = pi1 * pi2
    return BoundReport(
        eta_sq, product, p1, p2, pi1, pi2, f_n,
        lhs_cs, rhs_cs, lhs_final, rhs_final,
        cs_holds=lhs_cs <= rhs_cs + BOUND_SLACK,
        final_holds=lhs_final <= rhs_final + BOUND_SLACK,
        theorem_holds=theorem,
        misident=trace.misident,
    )


def amplify(p_ident: float, p_notident: float, p_interact: float) -> float:
    """Identification probability when the protocol is rerun on every inconclusive outcome."""
    vals = (p_ident, p_notident, p_interact)
    if any(v < -ACCOUNTING_TOL for v in vals) or abs(sum(vals) - 1.0) > ACCOUNTING_TOL:
        raise ValueError("probabilities must be non-negative and sum to 1")
    if p_notident >= 1.0 - 1e-15:
        raise ValueError("protocol never identifies anything; repetition cannot help")
    return p_ident / (1.0 - p_notident)


def beam_splitter() -> np.ndarray:
    return np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / math.sqrt(2.0)


def elitzur_vaidman_preset() -> Protocol:
    """Single-pass Mach-Zehnder bomb tester.

    Index 0 is the bright port (inconclusive), index 1 the dark port, which
    can only fire when something sits in arm 1.
    """
    bs = beam_splitter()
    return Protocol(
        initial=np.array([1.0, 0.0], dtype=complex),
        mask=(1,),
        steps=(Unitary(bs), ISTEP, Unitary(bs)),
        measurement=Projective((INCONCLUSIVE, M2)),
    )


def ev_report(alpha2=0.0) -> dict:
    """Run the bomb tester on (transparent, ``alpha2``) and summarise the probed object."""
    pair = DiscriminationPair(object_from_alpha(1.0), object_from_alpha(alpha2))
    trace = run_pair(elitzur_vaidman_preset(), pair)
    report = verify_bound(trace)
    t2 = trace.trace2
    return {
        "p_ident": t2.p_ident,
        "p_notident": t2.p_notident,
        "p_interact": t2.p_interact,
        "final_norm_sq": t2.final_norm_sq,
        "f_final": {"re": trace.f_final.real, "im": trace.f_final.imag},
        "eta_sq": report.eta_sq,
        "product": report.product,
        "flags": report.flags,
    }
