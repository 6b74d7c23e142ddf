"""Discretised Fabry-Perot cavity with an object inside.

Cell layout (one mirror on each side of cell 0, which holds the object)::

    ... R-2 R-1 | R0 | R1 R2 ...
    ... L-2 L-1 | L0 | L1 L2 ...

Right movers ``R_n`` step to ``n + 1`` and left movers ``L_n`` to ``n - 1``
each tick, except at the mirrors, where (``is`` = ``1j * s``)::

    R0  -> c L0  + is R1        R-1 -> c L-1 + is R0
    L1  -> c R1  + is L0        L0  -> c R0  + is L-1

Before each tick the cavity components ``R0, L0`` pass through the
interaction step. No propagation phase is accumulated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .amplitude import DiscriminationPair, ObjectModel, as_amplitude, object_from_alpha
from .engine import INCONCLUSIVE, ISTEP, M1, M2, BoundReport, Projective, Protocol, Unitary, run_pair, verify_bound

PLATEAU_TOL = 1e-9
PLATEAU_MIN_RUN = 16
TRANSIENT_TOL = 1e-13


class PlateauError(RuntimeError):
    """The outgoing amplitudes never settled into a steady state."""


def warmup_ticks(c: float, alpha) -> int:
    """Ticks for a cavity transient of ratio ``|c alpha|`` per tick to fall below 1e-13."""
    q = abs(c * as_amplitude(alpha))
    if q == 0.0:
        return 1
    return max(1, math.ceil(math.log(TRANSIENT_TOL) / math.log(q)))


@dataclass(frozen=True)
class FPConfig:
    c: float
    lattice_halfwidth: int = 4
    pulse_len: int = 4096
    t_steps: int = 0

    def __post_init__(self):
        if not 0.0 <= self.c < 1.0:
            raise ValueError(f"mirror coefficient c must lie in [0, 1), got {self.c!r}")
        if self.lattice_halfwidth < 2:
            raise ValueError("lattice_halfwidth must be at least 2")
        if self.pulse_len < 1:
            raise ValueError("pulse_len must be at least 1")
        if self.t_steps < 0:
            raise ValueError("t_steps must be non-negative")

    @property
    def s(self) -> float:
        return math.sqrt(1.0 - self.c * self.c)

    @classmethod
    def auto(cls, c: float, alpha, pulse_len: int | None = None, lattice_halfwidth: int = 4) -> "FPConfig":
        """Pulse long enough for the ring-down heuristic and ticks to drain the cavity."""
        w = warmup_ticks(c, alpha)
        if pulse_len is None:
            ring = 8.0 / (1.0 - c * c)
            pulse_len = max(4096, math.ceil(ring), w + 4 * PLATEAU_MIN_RUN)
        t_steps = pulse_len + lattice_halfwidth + w + 2
        return cls(c, lattice_halfwidth, pulse_len, t_steps)


@dataclass
class FPState:
    """Lattice amplitudes; index ``n + M`` holds cell ``n``."""

    r: np.ndarray
    l: np.ndarray
    feed: list[complex] = field(default_factory=list)
    out_left: list[complex] = field(default_factory=list)
    out_right: list[complex] = field(default_factory=list)
    absorbed: list[float] = field(default_factory=list)

    @property
    def halfwidth(self) -> int:
        return (len(self.r) - 1) // 2

    def lattice_norm_sq(self) -> float:
        return float(np.vdot(self.r, self.r).real + np.vdot(self.l, self.l).real)

    def total_norm_sq(self) -> float:
        """Lattice, pending feed and outgoing bins together."""
        out = sum(abs(z) ** 2 for z in self.out_left) + sum(abs(z) ** 2 for z in self.out_right)
        return self.lattice_norm_sq() + sum(abs(z) ** 2 for z in self.feed) + out


def initial_state(config: FPConfig, amplitude: complex = 1.0) -> FPState:
    """Pulse train of ``pulse_len`` right-moving cells ending at ``R-1``."""
    m = config.lattice_halfwidth
    r = np.zeros(2 * m + 1, dtype=complex)
    l = np.zeros(2 * m + 1, dtype=complex)
    on_lattice = min(m, config.pulse_len)
    r[m - on_lattice : m] = amplitude
    # remaining cells enter at R-M, one per tick
    feed = [complex(amplitude)] * (config.pulse_len - on_lattice)
    return FPState(r, l, feed)


def _tick(r: np.ndarray, l: np.ndarray, c: float, t: complex) -> tuple[np.ndarray, np.ndarray]:
    """Propagation with the mirror rules; the cells leaving at +-M are dropped."""
    m = (len(r) - 1) // 2
    new_r = np.zeros_like(r)
    new_l = np.zeros_like(l)
    new_r[1:m] = r[0 : m - 1]  # R-M..R-2 shift right
    new_r[m + 2 :] = r[m + 1 : -1]  # R1..R(M-1) shift right
    new_r[m] = t * r[m - 1] + c * l[m]
    new_r[m + 1] = t * r[m] + c * l[m + 1]
    new_l[0 : m - 1] = l[1:m]  # L-(M-1)..L-1 shift left
    new_l[m + 1 : -1] = l[m + 2 :]  # L2..LM shift left
    new_l[m] = c * r[m] + t * l[m + 1]
    new_l[m - 1] = c * r[m - 1] + t * l[m]
    return new_r, new_l


def fp_step(state: FPState, config: FPConfig, obj: ObjectModel) -> tuple[FPState, float]:
    """Interaction step on the cavity cell, then one propagation tick."""
    m = state.halfwidth
    r, l = state.r.copy(), state.l.copy()
    v_norm_sq = abs(r[m]) ** 2 + abs(l[m]) ** 2
    r[m] *= obj.alpha
    l[m] *= obj.alpha
    new_r, new_l = _tick(r, l, config.c, 1j * config.s)
    feed = state.feed
    if feed:
        new_r[0] = feed[0]
        feed = feed[1:]
    new_state = FPState(
        new_r,
        new_l,
        feed,
        state.out_left + [complex(l[0])],
        state.out_right + [complex(r[-1])],
        state.absorbed + [obj.absorption * v_norm_sq],
    )
    return new_state, v_norm_sq


def _run_lattice(config: FPConfig, obj: ObjectModel):
    """Repeated :func:`fp_step` without the bookkeeping copies.

    Returns per-tick exits and absorption plus the probability still on the
    lattice or waiting in the feed at the end.
    """
    m = config.lattice_halfwidth
    state = initial_state(config)
    r, l, feed = state.r, state.l, state.feed
    alpha, absorb = obj.alpha, obj.absorption
    c, t = config.c, 1j * config.s
    out_left, out_right, absorbed = [], [], []
    for tick in range(config.t_steps):
        v = abs(r[m]) ** 2 + abs(l[m]) ** 2
        r[m] *= alpha
        l[m] *= alpha
        out_left.append(complex(l[0]))
        out_right.append(complex(r[-1]))
        absorbed.append(absorb * v)
        r, l = _tick(r, l, c, t)
        if tick < len(feed):
            r[0] = feed[tick]
    pending = max(0, len(feed) - config.t_steps)
    remaining = float(np.vdot(r, r).real + np.vdot(l, l).real) + pending
    return out_left, out_right, absorbed, remaining


def closed_form_fL(c: float, alpha) -> complex:
    alpha = as_amplitude(alpha)
    denom = 1.0 - c * c * alpha * alpha
    if abs(c * alpha) >= 1.0:
        raise ValueError("geometric series diverges: |c alpha| >= 1")
    return c * (1.0 - alpha * alpha) / denom


def closed_form_fR(c: float, alpha) -> complex:
    alpha = as_amplitude(alpha)
    if abs(c * alpha) >= 1.0:
        raise ValueError("geometric series diverges: |c alpha| >= 1")
    return -(1.0 - c * c) * alpha / (1.0 - c * c * alpha * alpha)


def series_fL(c: float, alpha, terms: int | None = None) -> complex:
    """Signed multiple-reflection sum ``c - s^2 sum_m c^(2m-1) alpha^(2m)``."""
    alpha = as_amplitude(alpha)
    if terms is None:
        terms = 2 * warmup_ticks(c, alpha) + 8
    q = (c * alpha) ** 2
    total = 0j
    term = alpha * alpha * c  # m = 1
    for _ in range(terms):
        total += term
        term *= q
    return c - (1.0 - c * c) * total


@dataclass
class FPReport:
    fL_sim: complex
    fR_sim: complex
    p_interact: float
    fL_closed: complex
    abs_err: float
    plateau_len: int
    window: tuple[int, int]
    accounting_error: float = 0.0

    def to_dict(self) -> dict:
        return {
            "fL_sim": {"re": self.fL_sim.real, "im": self.fL_sim.imag},
            "fR_sim": {"re": self.fR_sim.real, "im": self.fR_sim.imag},
            "p_interact": self.p_interact,
            "fL_closed": {"re": self.fL_closed.real, "im": self.fL_closed.imag},
            "abs_err": self.abs_err,
            "plateau_len": self.plateau_len,
        }


def plateau(values, start: int, stop: int, tol: float = PLATEAU_TOL) -> tuple[int, int]:
    """Longest run in ``values[start:stop]`` whose consecutive entries agree within ``tol``."""
    stop = min(stop, len(values))
    if stop - start < 1:
        raise PlateauError("steady-state window is empty; increase t_steps or pulse_len")
    best = (start, start + 1)
    run_start = start
    for i in range(start + 1, stop):
        if abs(values[i] - values[i - 1]) > tol:
            run_start = i
        if i + 1 - run_start > best[1] - best[0]:
            best = (run_start, i + 1)
    if best[1] - best[0] < PLATEAU_MIN_RUN:
        raise PlateauError(
            f"no steady plateau: longest agreeing run is {best[1] - best[0]} < {PLATEAU_MIN_RUN}"
        )
    return best


def simulate_fp(config: FPConfig, obj: ObjectModel) -> FPReport:
    """Steady-state reflection and transmission amplitudes for a long pulse train."""
    m = config.lattice_halfwidth
    w = warmup_ticks(config.c, obj.alpha)
    out_left, out_right, absorbed, remaining = _run_lattice(config, obj)
    total = (
        sum(abs(z) ** 2 for z in out_left) + sum(abs(z) ** 2 for z in out_right) + sum(absorbed) + remaining
    )
    accounting = abs(total / config.pulse_len - 1.0)
    # pulse cell j leaves on the left during tick j + m, on the right during tick j + m + 1
    lo, hi = plateau(out_left, m + w, m + config.pulse_len)
    r_lo, r_hi = lo + 1, hi + 1
    if r_hi > len(out_right):
        raise PlateauError("transmitted plateau truncated; increase t_steps")
    f_l = complex(np.mean(out_left[lo:hi]))
    f_r = complex(np.mean(out_right[r_lo:r_hi]))
    # cell j is first in the cavity during tick j + 1
    p_int = float(np.mean(absorbed[lo - m + 1 : hi - m + 1]))
    f_closed = closed_form_fL(config.c, obj.alpha)
    return FPReport(f_l, f_r, p_int, f_closed, abs(f_l - f_closed), hi - lo, (lo, hi), accounting)


def fp_sweep(c_values, alpha, pulse_len: int | None = None) -> list[tuple[float, FPReport]]:
    obj = object_from_alpha(alpha)
    return [(float(c), simulate_fp(FPConfig.auto(float(c), obj.alpha, pulse_len), obj)) for c in c_values]


# -- protocol-engine route ----------------------------------------------------


def _index(n: int, m: int, left: bool) -> int:
    return (2 * m + 1 if left else 0) + n + m


def fp_unitary(c: float, m: int) -> sp.csr_matrix:
    """One propagation tick on a ring of ``2m + 1`` cells per direction.

    The ring closes the lattice so the map is unitary; callers size ``m`` so
    nothing ever reaches the seam.
    """
    s = math.sqrt(1.0 - c * c)
    t = 1j * s
    rows, cols, vals = [], [], []

    def put(dst, src, val):
        rows.append(dst)
        cols.append(src)
        vals.append(val)

    for n in range(-m, m + 1):
        if n not in (-1, 0):
            dst = n + 1 if n < m else -m
            put(_index(dst, m, False), _index(n, m, False), 1.0)
        if n not in (0, 1):
            dst = n - 1 if n > -m else m
            put(_index(dst, m, True), _index(n, m, True), 1.0)
    r_m1, r0, r1 = (_index(k, m, False) for k in (-1, 0, 1))
    l_m1, l0, l1 = (_index(k, m, True) for k in (-1, 0, 1))
    put(r0, r_m1, t)
    put(r0, l0, c)
    put(r1, r0, t)
    put(r1, l1, c)
    put(l0, r0, c)
    put(l0, l1, t)
    put(l_m1, r_m1, c)
    put(l_m1, l0, t)
    dim = 2 * (2 * m + 1)
    return sp.csr_matrix((np.array(vals, dtype=complex), (rows, cols)), shape=(dim, dim))


def build_fp_protocol(c: float, pulse_len: int, t_steps: int) -> Protocol:
    """Normalised pulse train through the cavity, read out by which side it leaves."""
    m = max(pulse_len, t_steps) + 2
    dim = 2 * (2 * m + 1)
    initial = np.zeros(dim, dtype=complex)
    for j in range(1, pulse_len + 1):
        initial[_index(-j, m, False)] = 1.0 / math.sqrt(pulse_len)
    u = Unitary(fp_unitary(c, m))
    labels = [INCONCLUSIVE] * dim
    for n in range(1, m + 1):
        labels[_index(n, m, False)] = M1
        labels[_index(-n, m, True)] = M2
    mask = (_index(0, m, False), _index(0, m, True))
    return Protocol(initial, mask, (ISTEP, u) * t_steps, Projective(tuple(labels)))


def fp_discrimination_report(c: float, alpha2, config: FPConfig | None = None) -> BoundReport:
    """Discriminate an empty cavity from object ``alpha2`` by the exit side."""
    pair = DiscriminationPair.from_alphas(1.0, alpha2)
    if config is None:
        config = FPConfig.auto(c, pair.obj2.alpha)
    elif config.c != c:
        raise ValueError("config.c disagrees with c")
    t_steps = config.t_steps or FPConfig.auto(c, pair.obj2.alpha, config.pulse_len).t_steps
    protocol = build_fp_protocol(c, config.pulse_len, t_steps)
    return verify_bound(run_pair(protocol, pair))
