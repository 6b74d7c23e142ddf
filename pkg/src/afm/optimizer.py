"""Near-optimal Zeno schedules for two grey objects with real amplitudes.

Both objects share the initial state ``(sqrt(1 - eps^2), eps)`` in the
``(v, h)`` basis. The first interaction step acts on it directly, so the
interaction-region amplitudes entering it are equal (ratio 1). Every later
rotation angle is chosen so that the interaction-region amplitudes entering
the next step keep the fixed ratio ``v_2 / v_1 = lam``; proportional
``v`` sequences are exactly what saturates the Cauchy-Schwarz step of the
bound. Equivalently the post-step amplitudes satisfy
``b_2 / b_1 = lam * alpha2 / alpha1``.

Along such a trajectory the overlap ``f = a1 a2 + b1 b2`` decreases
monotonically. ``lam`` is searched so that ``f`` lands on zero: the two
finals are then orthogonal and ``(1 - P1)(1 - P2)`` sits on ``eta^2`` up to
terms that vanish with ``eps``.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .amplitude import DiscriminationPair, bound_rhs
from .engine import ISTEP, Protocol, Unitary, UnambiguousPair, run_pair, verify_bound
from .zeno import ZenoSchedule, rotation

STATUS_ORTHOGONAL = "orthogonal"
STATUS_STALLED = "stalled"
STATUS_MAX_STEPS = "max_steps"
STATUS_DEGENERATE = "degenerate"


class DegenerateStepError(ArithmeticError):
    """Numerator and denominator of the angle formula vanish together."""


@dataclass(frozen=True)
class OptState:
    a1: float
    b1: float
    a2: float
    b2: float
    k: int = 0

    @property
    def overlap(self) -> float:
        return self.a1 * self.a2 + self.b1 * self.b2

    @property
    def norms_sq(self) -> tuple[float, float]:
        return self.a1**2 + self.b1**2, self.a2**2 + self.b2**2


@dataclass(frozen=True)
class OptimizerConfig:
    alpha1: float
    alpha2: float
    epsilon: float = 1e-4
    lambda_range: tuple[float, float] = (0.5, 2.0)
    orth_tol: float = 1e-8
    max_steps: int = 10**6
    grid_points: int = 200
    lambda_xtol: float = 1e-9

    def __post_init__(self):
        for name in ("alpha1", "alpha2"):
            a = getattr(self, name)
            if not 0.0 <= a < 1.0:
                raise ValueError(f"{name} must lie in [0, 1), got {a!r}")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.epsilon > 0.01:
            warnings.warn(f"epsilon={self.epsilon} is not small; the bound will be approached loosely")
        lo, hi = self.lambda_range
        if not 0.0 < lo < hi:
            raise ValueError("lambda_range must satisfy 0 < lo < hi")
        if self.orth_tol <= 0 or self.max_steps < 1 or self.grid_points < 3:
            raise ValueError("orth_tol > 0, max_steps >= 1 and grid_points >= 3 required")

    @property
    def pair(self) -> DiscriminationPair:
        return DiscriminationPair.from_alphas(self.alpha1, self.alpha2)


@dataclass
class Evolution:
    trajectory: list[OptState]
    f_history: list[float]
    thetas: list[float]
    halted_at: int | None
    status: str

    @property
    def final(self) -> OptState:
        return self.trajectory[-1]


@dataclass
class OptimizerReport:
    lambda_star: float
    schedule: ZenoSchedule | None
    n_steps: int
    p_ident_1: float
    p_ident_2: float
    product: float
    eta_sq: float
    final_overlap: float
    success: bool
    epsilon: float
    final_overlap_normalized: float = math.nan
    grid_spacing: float = math.nan
    theorem_holds: bool = True
    accounting_error: float = 0.0
    recursion_residual: float = 0.0
    alphas: tuple[float, float] = (math.nan, math.nan)

    @property
    def b_ratio(self) -> float:
        """The same schedule labelled by the post-step ratio ``b2 / b1``."""
        a1, a2 = self.alphas
        return self.lambda_star * a2 / a1 if a1 else math.nan

    def to_dict(self) -> dict:
        return {
            "lambda_star": self.lambda_star,
            "b_ratio": self.b_ratio,
            "n_steps": self.n_steps,
            "p_ident_1": self.p_ident_1,
            "p_ident_2": self.p_ident_2,
            "product": self.product,
            "eta_sq": self.eta_sq,
            "final_overlap": self.final_overlap,
            "final_overlap_normalized": self.final_overlap_normalized,
            "success": self.success,
            "epsilon": self.epsilon,
            "grid_spacing": self.grid_spacing,
            "theorem_holds": self.theorem_holds,
            "schedule": list(self.schedule.thetas) if self.schedule else [],
        }


def step_angle(state: OptState, lam: float) -> float:
    """Rotation making the next interaction-region amplitudes satisfy ``v2 = lam * v1``.

    ``tan(theta) = (lam b1 - b2) / (a2 - lam a1)``; the representative in
    (-pi/2, pi/2] is returned, since ``theta + pi`` only flips the sign of both
    states.
    """
    num = lam * state.b1 - state.b2
    den = state.a2 - lam * state.a1
    scale = max(abs(state.a1), abs(state.a2), abs(state.b1), abs(state.b2), 1e-300)
    if abs(num) <= 1e-300 * scale and abs(den) <= 1e-300 * scale:
        raise DegenerateStepError("angle undefined: both terms vanish")
    if den == 0.0:
        return math.pi / 2
    return math.atan(num / den)


def advance(state: OptState, theta: float, alpha1: float, alpha2: float) -> tuple[OptState, float, float]:
    """Rotate by ``theta`` then apply the interaction step; returns the ``v`` amplitudes too."""
    c, s = math.cos(theta), math.sin(theta)
    v1 = s * state.a1 + c * state.b1
    v2 = s * state.a2 + c * state.b2
    new = OptState(c * state.a1 - s * state.b1, alpha1 * v1,
                   c * state.a2 - s * state.b2, alpha2 * v2, state.k + 1)
    return new, v1, v2


def seed_state(config: OptimizerConfig) -> OptState:
    a = math.sqrt(1.0 - config.epsilon**2)
    return OptState(a, config.epsilon, a, config.epsilon, 0)


def _stalled(v_sq: float, prev_v_sq: float, eps: float) -> bool:
    # interaction amplitude has died away and keeps shrinking: f cannot move any more
    return v_sq < 1e-24 * eps * eps and v_sq <= prev_v_sq


def evolve(config: OptimizerConfig, lam: float, record: bool = True, n_isteps: int | None = None) -> Evolution:
    """Generate the trajectory for ``lam``.

    Halts at the first step with ``f <= orth_tol``, when the trajectory stalls,
    or at ``max_steps``. With ``n_isteps`` set, runs exactly that many
    interaction steps instead and ignores the halting rules.
    """
    x1, x2 = config.alpha1, config.alpha2
    eps = config.epsilon
    a1 = a2 = math.sqrt(1.0 - eps * eps)
    b1 = b2 = eps
    traj = [OptState(a1, b1, a2, b2, 0)] if record else []
    f_hist = [a1 * a2 + b1 * b2]
    thetas = []
    limit = n_isteps if n_isteps is not None else config.max_steps
    prev_v = math.inf
    status = STATUS_MAX_STEPS
    halted = None
    for k in range(1, limit + 1):
        if k == 1:
            theta = 0.0
        else:
            num = lam * b1 - b2
            den = a2 - lam * a1
            if num == 0.0 and den == 0.0:
                status = STATUS_DEGENERATE
                break
            theta = math.atan(num / den) if den != 0.0 else math.pi / 2
        c, s = math.cos(theta), math.sin(theta)
        v1 = s * a1 + c * b1
        v2 = s * a2 + c * b2
        a1, a2 = c * a1 - s * b1, c * a2 - s * b2
        b1, b2 = x1 * v1, x2 * v2
        f = a1 * a2 + b1 * b2
        thetas.append(theta)
        f_hist.append(f)
        if record:
            traj.append(OptState(a1, b1, a2, b2, k))
        if n_isteps is not None:
            continue
        if f <= config.orth_tol:
            status, halted = STATUS_ORTHOGONAL, k
            break
        v_sq = v1 * v1 + v2 * v2
        if k > 1 and _stalled(v_sq, prev_v, eps):
            status = STATUS_STALLED
            break
        prev_v = v_sq
    if n_isteps is not None and status != STATUS_DEGENERATE:
        status = STATUS_ORTHOGONAL if abs(f_hist[-1]) <= config.orth_tol else STATUS_MAX_STEPS
    if not record:
        traj = [OptState(a1, b1, a2, b2, len(thetas))]
    return Evolution(traj, f_hist, thetas, halted, status)


def _objective(config: OptimizerConfig, lam: float) -> float:
    ev = evolve(config, lam, record=False)
    if ev.status == STATUS_DEGENERATE:
        return math.inf
    return abs(ev.f_history[-1])


def _polish(config: OptimizerConfig, lam: float) -> float | None:
    """Move ``lam`` inside its tooth so that the halting overlap is exactly zero."""
    ev = evolve(config, lam, record=False)
    if ev.status != STATUS_ORTHOGONAL:
        return None
    if abs(ev.f_history[-1]) <= config.orth_tol:
        return lam
    n = len(ev.thetas)

    def f_n(x):
        return evolve(config, x, record=False, n_isteps=n).f_history[-1]

    base = f_n(lam)
    lo_lim, hi_lim = config.lambda_range
    step = 1e-13 * max(1.0, abs(lam))
    while step < 1e-2:
        for other in (lam + step, lam - step):
            if lo_lim <= other <= hi_lim and f_n(other) * base < 0.0:
                root = brentq(f_n, min(lam, other), max(lam, other), xtol=1e-16, rtol=4.5e-16)
                check = evolve(config, root, record=False)
                if check.status == STATUS_ORTHOGONAL and abs(check.f_history[-1]) <= config.orth_tol:
                    return root
                return None
        step *= 2.0
    return None


def schedule_protocol(schedule: ZenoSchedule, epsilon: float) -> Protocol:
    """Engine protocol replaying ``schedule`` from the shared seed state."""
    a = math.sqrt(1.0 - epsilon**2)
    steps = []
    for theta in schedule.thetas:
        steps += [Unitary(rotation(theta)), ISTEP]
    return Protocol(np.array([a, epsilon], dtype=complex), (1,), tuple(steps), UnambiguousPair())


def search_lambda(config: OptimizerConfig) -> OptimizerReport:
    """Grid scan plus golden-section refinement of the halting overlap over ``lam``."""
    pair = config.pair
    if pair.same_alpha():
        raise ValueError("alpha1 == alpha2: the objects cannot be told apart")
    lo, hi = config.lambda_range
    grid = np.linspace(lo, hi, config.grid_points)
    values = np.array([_objective(config, lam) for lam in grid])
    i = int(np.argmin(values))
    best_lam, best_val = float(grid[i]), float(values[i])
    if 0 < i < len(grid) - 1 and values[i] < values[i - 1] and values[i] < values[i + 1]:
        res = minimize_scalar(
            lambda x: _objective(config, x),
            bracket=(float(grid[i - 1]), best_lam, float(grid[i + 1])),
            method="golden",
            options={"xtol": config.lambda_xtol / max(1.0, abs(best_lam))},
        )
        if lo <= res.x <= hi and res.fun <= best_val:
            best_lam, best_val = float(res.x), float(res.fun)
    polished = _polish(config, best_lam)
    success = polished is not None
    if success:
        best_lam = polished
    ev = evolve(config, best_lam, record=False)
    schedule = ZenoSchedule(tuple(ev.thetas)) if ev.thetas else None
    report = OptimizerReport(
        lambda_star=best_lam,
        schedule=schedule,
        n_steps=len(ev.thetas),
        p_ident_1=0.0,
        p_ident_2=0.0,
        product=1.0,
        eta_sq=bound_rhs(pair),
        final_overlap=abs(ev.f_history[-1]),
        success=success,
        epsilon=config.epsilon,
        grid_spacing=float(grid[1] - grid[0]),
        alphas=(config.alpha1, config.alpha2),
    )
    if schedule is not None:
        fill_from_engine(report, pair)
    return report


def fill_from_engine(report: OptimizerReport, pair: DiscriminationPair) -> None:
    trace = run_pair(schedule_protocol(report.schedule, report.epsilon), pair)
    bound = verify_bound(trace)
    report.p_ident_1, report.p_ident_2 = trace.p_ident
    report.product = bound.product
    report.theorem_holds = bound.theorem_holds
    n1, n2 = trace.trace1.final_norm_sq, trace.trace2.final_norm_sq
    report.final_overlap_normalized = abs(trace.f_final) / math.sqrt(n1 * n2) if n1 * n2 > 0 else 0.0
    report.accounting_error = max(trace.trace1.accounting_error, trace.trace2.accounting_error)
    report.recursion_residual = trace.recursion_residual


def emit_schedule(report: OptimizerReport, path) -> Path:
    if report.schedule is None or not report.success:
        raise ValueError("only successful reports carry a usable schedule")
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(
            f"# lambda={report.lambda_star!r} epsilon={report.epsilon!r}; full schedule, "
            "including the small-angle run-in and tail; first row is the seed step\n"
        )
        write_schedule_rows(fh, report.schedule.thetas)
    return path


def write_schedule_rows(fh, angles) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["k", "theta_radians"])
    for k, theta in enumerate(angles):
        writer.writerow([k, format(theta, ".17g")])


def read_schedule(path) -> ZenoSchedule:
    rows = [line for line in Path(path).read_text().splitlines() if line and not line.startswith("#")]
    reader = csv.DictReader(rows)
    return ZenoSchedule(tuple(float(r["theta_radians"]) for r in reader))
