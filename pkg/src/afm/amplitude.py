"""Transparency models and the discrimination bound.

Amplitudes are plain Python ``complex`` values. An object is described by its
transmission amplitude ``alpha``; the magnitude of the absorption amplitude
follows from ``|alpha|**2 + |beta|**2 == 1``. The phase of ``beta`` never
enters any of the quantities computed here, so it is not stored.
"""

from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass

NORM_TOL = 1e-12

_POLAR = re.compile(r"^\s*([-+]?[0-9.eE+-]+)\s*@\s*([-+]?[0-9.eE+-]+)\s*deg\s*$")


def as_amplitude(value) -> complex:
    """Coerce ``value`` to a finite complex number."""
    z = complex(value)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError(f"amplitude must be finite, got {value!r}")
    return z


def parse_complex(text: str) -> complex:
    """Parse ``RE``, ``RE+IMi`` or polar ``MAG@DEGdeg``.

    >>> parse_complex("0.8")
    (0.8+0j)
    >>> parse_complex("0.5-0.25i")
    (0.5-0.25j)
    >>> abs(parse_complex("1@90deg") - 1j) < 1e-15
    True
    """
    m = _POLAR.match(text)
    if m:
        mag, deg = float(m.group(1)), float(m.group(2))
        return as_amplitude(cmath.rect(mag, math.radians(deg)))
    literal = text.strip().replace(" ", "")
    if not literal or literal.lower().count("i") + literal.lower().count("j") > 1:
        raise ValueError(f"cannot parse complex literal {text!r}")
    try:
        z = complex(literal.replace("i", "j").replace("I", "j"))
    except ValueError:
        raise ValueError(f"cannot parse complex literal {text!r}") from None
    return as_amplitude(z)


def format_complex(z: complex) -> str:
    """Inverse of :func:`parse_complex` for the rectangular forms."""
    z = complex(z)
    if z.imag == 0.0:
        return repr(z.real)
    sign = "-" if math.copysign(1.0, z.imag) < 0 else "+"
    return f"{z.real!r}{sign}{abs(z.imag)!r}i"


@dataclass(frozen=True)
class ObjectModel:
    """A semi-transparent object.

    Build these with :func:`object_from_alpha`, which enforces normalisation.
    """

    alpha: complex
    beta_mag: float

    def __post_init__(self):
        alpha = as_amplitude(self.alpha)
        object.__setattr__(self, "alpha", alpha)
        if not math.isfinite(self.beta_mag) or self.beta_mag < 0:
            raise ValueError("beta_mag must be a finite non-negative number")
        if abs(alpha) > 1.0:
            raise ValueError(f"|alpha| = {abs(alpha)!r} exceeds 1")
        if abs(abs(alpha) ** 2 + self.beta_mag**2 - 1.0) > NORM_TOL:
            raise ValueError("|alpha|^2 + beta_mag^2 must equal 1")

    @property
    def absorption(self) -> float:
        """Probability of absorption for unit amplitude inside the interaction region."""
        return self.beta_mag**2


def object_from_alpha(alpha) -> ObjectModel:
    alpha = as_amplitude(alpha)
    mag = abs(alpha)
    if mag > 1.0 + NORM_TOL:
        raise ValueError(f"non-physical transparency: |alpha| = {mag!r} > 1")
    if mag > 1.0 - NORM_TOL and mag != 1.0:
        # snap onto the unit circle so that a transparent object has beta == 0 exactly
        alpha = alpha / mag
        mag = 1.0
    if mag == 1.0:
        return ObjectModel(alpha, 0.0)
    return ObjectModel(alpha, math.sqrt(max(0.0, 1.0 - mag * mag)))


@dataclass(frozen=True)
class DiscriminationPair:
    obj1: ObjectModel
    obj2: ObjectModel

    @classmethod
    def from_alphas(cls, alpha1, alpha2) -> "DiscriminationPair":
        return cls(object_from_alpha(alpha1), object_from_alpha(alpha2))

    @property
    def alphas(self) -> tuple[complex, complex]:
        return self.obj1.alpha, self.obj2.alpha

    def same_alpha(self, tol: float = NORM_TOL) -> bool:
        return abs(self.obj1.alpha - self.obj2.alpha) <= tol

    def swapped(self) -> "DiscriminationPair":
        return DiscriminationPair(self.obj2, self.obj1)

    def overlap_factor(self) -> complex:
        """``1 - conj(alpha1) * alpha2``, the factor driving the overlap recursion."""
        return 1.0 - self.obj1.alpha.conjugate() * self.obj2.alpha


def eta(pair: DiscriminationPair) -> float:
    if pair.same_alpha():
        return 1.0
    denom = abs(pair.overlap_factor())
    value = pair.obj1.beta_mag * pair.obj2.beta_mag / denom
    return min(1.0, max(0.0, value))


def bound_rhs(pair: DiscriminationPair) -> float:
    """Lower bound on ``(1 - P(ident|1)) * (1 - P(ident|2))``."""
    return eta(pair) ** 2


def identity_gap(pair: DiscriminationPair) -> float:
    """Residual of ``|1 - a1* a2|^2 - |b1 b2|^2 - |a1 - a2|^2``; zero for physical pairs."""
    a1, a2 = pair.alphas
    lhs = abs(pair.overlap_factor()) ** 2
    betas = (pair.obj1.beta_mag * pair.obj2.beta_mag) ** 2
    return lhs - betas - abs(a1 - a2) ** 2
