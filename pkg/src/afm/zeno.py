"""Quantum Zeno interferometer protocols for (transparent, grey) discrimination.

Basis: index 0 is vertical polarisation ``v`` (object-free arm), index 1 is
horizontal ``h`` (the arm holding the object, so the interaction mask is
``{1}``). Every rotation in this package uses

    rotation(theta) @ (v, h) = (v cos(theta) - h sin(theta), v sin(theta) + h cos(theta)).

A round is: rotate by ``theta``, interaction step, then a closing unitary that
returns the object-present state to ``v``. Without the object the photon
walks towards ``h`` by a fixed angle per round; after ``n`` rounds it sits at
``h`` while the object-present amplitude is ``gamma**n`` along ``v``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .amplitude import as_amplitude
from .engine import ISTEP, M1, M2, Projective, Protocol, Unitary

BISECT_LO = 1e-15
BISECT_ITERS = 200
SOLVE_TOL = 1e-12


class NoRootError(ValueError):
    """No rotation angle achieves the requested number of rounds."""


def rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=complex)


@dataclass(frozen=True)
class ZenoSchedule:
    """Rotation angles applied before each interaction step.

    ``closing`` is the per-round unitary applied after each interaction step:
    a signed angle for a plain rotation, a 2x2 matrix otherwise, or ``None``
    when there is none (optimizer schedules).
    """

    thetas: tuple[float, ...]
    closing: float | np.ndarray | None = None

    def __post_init__(self):
        thetas = tuple(float(t) for t in self.thetas)
        if not thetas or not all(math.isfinite(t) for t in thetas):
            raise ValueError("schedule needs at least one finite angle")
        object.__setattr__(self, "thetas", thetas)

    @property
    def n_steps(self) -> int:
        return len(self.thetas)

    def rotations(self) -> list[float]:
        """Every signed rotation angle in application order (CSV rows)."""
        if self.closing is None:
            return list(self.thetas)
        if not isinstance(self.closing, float):
            raise ValueError("closing step is not a plain rotation")
        out = []
        for t in self.thetas:
            out += [t, self.closing]
        return out


def _check_real_alpha(alpha2: float) -> float:
    alpha2 = float(alpha2)
    if not 0.0 <= alpha2 < 1.0:
        raise ValueError(f"alpha2 must lie in [0, 1), got {alpha2!r}")
    return alpha2


def _check_theta(theta: float) -> float:
    theta = float(theta)
    if not 0.0 < theta < math.pi / 2:
        raise ValueError(f"theta must lie in (0, pi/2), got {theta!r}")
    return theta


def theta_prime(theta: float, alpha2: float) -> float:
    """Direction of the object-present state after one interaction step."""
    theta = _check_theta(theta)
    alpha2 = _check_real_alpha(alpha2)
    # same angle as arccos(cos/gamma), but well conditioned for small theta
    return math.atan2(alpha2 * math.sin(theta), math.cos(theta))


def gamma(theta: float, alpha2) -> float:
    """Amplitude kept by the object-present state in one round."""
    theta = _check_theta(theta)
    a = abs(as_amplitude(alpha2))
    if a > 1.0:
        raise ValueError("|alpha2| must not exceed 1")
    return math.hypot(math.cos(theta), a * math.sin(theta))


def peak_theta(alpha2: float) -> float:
    """Angle maximising the per-round advance ``theta - theta'``."""
    alpha2 = _check_real_alpha(alpha2)
    if alpha2 == 0.0:
        return math.pi / 2
    return math.atan(1.0 / math.sqrt(alpha2))


def _bisect(fn, lo: float, hi: float) -> float:
    """Root of an increasing ``fn`` with ``fn(lo) < 0 <= fn(hi)``."""
    for _ in range(BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        if fn(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4e-16 * hi:
            break
    return hi if abs(fn(hi)) <= abs(fn(lo)) else lo


def solve_theta(alpha2: float, n: int) -> float:
    """Rotation angle for which ``n`` rounds carry the object-free photon to ``h``.

    The per-round advance ``theta - theta'`` rises from 0 to a maximum at
    :func:`peak_theta` and falls back to 0 at pi/2, so the small-angle root
    is taken on the rising branch.
    """
    alpha2 = _check_real_alpha(alpha2)
    n = int(n)
    if n < 1:
        raise ValueError("n must be a positive integer")
    if alpha2 == 0.0:
        return math.pi / (2 * n)
    target = math.pi / (2 * n)

    def residual(t):
        return (t - math.atan2(alpha2 * math.sin(t), math.cos(t))) - target

    hi = peak_theta(alpha2)
    if residual(hi) < 0.0:
        best = n * (hi - theta_prime(hi, alpha2))
        raise NoRootError(
            f"alpha2={alpha2!r}: {n} rounds advance at most {best:.6g} rad < pi/2; "
            f"need n >= {math.ceil(math.pi / 2 / (best / n))}"
        )
    theta = _bisect(residual, BISECT_LO, hi)
    if abs(n * residual(theta)) > SOLVE_TOL:
        raise NoRootError(f"bisection residual {n * residual(theta):.3e} above tolerance")
    return theta


def predict_p_ident2(alpha2: float, n: int) -> float:
    theta = solve_theta(alpha2, n)
    return gamma(theta, alpha2) ** (2 * n)


def gamma_asymptotic(alpha2: float, n: int) -> float:
    """Large-``n`` approximation ``1 - (1+a) pi^2 / ((1-a) 4 n^2)``; diagnostic only."""
    return 1.0 - (1.0 + alpha2) * math.pi**2 / ((1.0 - alpha2) * 4.0 * n * n)


def _zeno_protocol(theta: float, closing: np.ndarray, n: int) -> Protocol:
    opening = Unitary(rotation(theta))
    close = Unitary(closing)
    steps = []
    for _ in range(n):
        steps += [opening, ISTEP, close]
    return Protocol(
        initial=np.array([1.0, 0.0], dtype=complex),
        mask=(1,),
        steps=tuple(steps),
        # h means the photon got through untouched: no object
        measurement=Projective((M2, M1)),
    )


def zeno_schedule_real(alpha2: float, n: int) -> ZenoSchedule:
    theta = solve_theta(alpha2, n)
    return ZenoSchedule((theta,) * n, -theta_prime(theta, alpha2))


def build_zeno_real(alpha2: float, n: int) -> Protocol:
    theta = solve_theta(alpha2, n)
    return _zeno_protocol(theta, rotation(-theta_prime(theta, alpha2)), n)


# -- complex transmission amplitude ------------------------------------------


def _closing_unitary(theta: float, alpha2: complex) -> np.ndarray:
    """SU(2) map sending the normalised object-present state to (a phase times) ``v``.

    The leftover diagonal phase is chosen so that the object-free round has a
    real, positive ``<v|.|v>`` element; its rotation axis then lies in the
    equatorial plane and successive rounds advance the photon by the same angle.
    """
    a = abs(alpha2)
    phi = cmath.phase(alpha2) if a > 0 else 0.0
    tp = math.atan2(a * math.sin(theta), math.cos(theta))
    c, s = math.cos(tp), math.sin(tp)
    w0 = np.array(
        [[c, cmath.exp(-1j * phi) * s], [-cmath.exp(1j * phi) * s, c]], dtype=complex
    )
    diag = (w0 @ rotation(theta))[0, 0]
    xi = -cmath.phase(diag) if abs(diag) > 0 else 0.0
    return np.diag([cmath.exp(1j * xi), cmath.exp(-1j * xi)]) @ w0


def omega(theta: float, alpha2) -> float:
    """Angle the object-free photon advances in one complex-case round."""
    theta = _check_theta(theta)
    alpha2 = as_amplitude(alpha2)
    col = _closing_unitary(theta, alpha2) @ rotation(theta)[:, 0]
    return math.atan2(abs(col[1]), abs(col[0]))


def _omega_peak(alpha2: complex) -> float:
    a = abs(alpha2)
    if a == 0.0:
        return math.pi / 2
    res = minimize_scalar(lambda t: -omega(t, alpha2), bounds=(1e-9, math.pi / 2 - 1e-9),
                          method="bounded", options={"xatol": 1e-12})
    return float(res.x)


def solve_theta_complex(alpha2, n: int) -> float:
    """Rotation angle with ``n * omega(theta) == pi/2`` on the small-angle branch."""
    alpha2 = as_amplitude(alpha2)
    if abs(alpha2) >= 1.0:
        raise ValueError("|alpha2| must be below 1")
    n = int(n)
    if n < 1:
        raise ValueError("n must be a positive integer")
    if alpha2.imag == 0.0 and alpha2.real >= 0.0:
        return solve_theta(alpha2.real, n)
    target = math.pi / (2 * n)
    hi = _omega_peak(alpha2)
    if omega(hi, alpha2) < target:
        raise NoRootError(f"{n} rounds cannot reach pi/2 for alpha2={alpha2!r}")
    theta = _bisect(lambda t: omega(t, alpha2) - target, BISECT_LO, hi)
    if abs(n * omega(theta, alpha2) - math.pi / 2) > SOLVE_TOL:
        raise NoRootError("bisection did not converge")
    return theta


def zeno_schedule_complex(alpha2, n: int) -> ZenoSchedule:
    alpha2 = as_amplitude(alpha2)
    theta = solve_theta_complex(alpha2, n)
    return ZenoSchedule((theta,) * n, _closing_unitary(theta, alpha2))


def build_zeno_complex(alpha2, n: int) -> Protocol:
    alpha2 = as_amplitude(alpha2)
    theta = solve_theta_complex(alpha2, n)
    tp = theta_prime(theta, abs(alpha2))
    w = omega(theta, alpha2)
    if not (theta - tp) - 1e-12 <= w <= (theta + tp) + 1e-12:
        raise ArithmeticError(f"round advance {w} outside [{theta - tp}, {theta + tp}]")
    return _zeno_protocol(theta, _closing_unitary(theta, alpha2), n)
