"""Exact arithmetic for smoothness-exponent regimes.

Everything here is rational arithmetic on `fractions.Fraction` (with math.inf
as the sole non-rational sentinel for endpoint integrability orders), so
regime boundaries are decided exactly, never through float rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .grid import PreconditionError

__all__ = [
    "Exponent",
    "parse_exponent",
    "reciprocal",
    "conjugate",
    "is_conjugate_pair",
    "conserves_helicity",
    "holder_time_exponent",
    "holder_time_exponent_w3",
    "embedding_threshold",
    "companion_threshold",
    "balancing_delta",
    "ExponentRegime",
]

Exponent = Union[Fraction, float]


def parse_exponent(text) -> Exponent:
    """Parse "3/5", "0.45", or "inf" into exact form.

    Decimal strings become the exact rational they denote, so "0.45" is
    9/20, not the nearest binary float.
    """
    if isinstance(text, Fraction):
        return text
    if isinstance(text, float):
        if math.isinf(text):
            return math.inf
        raise PreconditionError(
            f"pass exponents as strings or Fractions, not floats ({text!r})"
        )
    if isinstance(text, int):
        return Fraction(text)
    s = str(text).strip()
    if s.lower() in ("inf", "infinity", "oo"):
        return math.inf
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise PreconditionError(f"cannot parse exponent {text!r}") from exc


def reciprocal(p: Exponent) -> Fraction:
    """1/p with the convention 1/inf = 0."""
    if p == math.inf:
        return Fraction(0)
    p = Fraction(p)
    if p <= 0:
        raise PreconditionError(f"integrability order must be positive, got {p}")
    return 1 / p


def conjugate(p: Exponent) -> Exponent:
    """The q with 1/p + 1/q = 1; requires p >= 1."""
    if p == math.inf:
        return Fraction(1)
    p = Fraction(p)
    if p < 1:
        raise PreconditionError(f"order must be >= 1 for a conjugate, got {p}")
    if p == 1:
        return math.inf
    return p / (p - 1)


def is_conjugate_pair(p: Exponent, q: Exponent) -> bool:
    """Exact test of 1/p + 1/q = 1."""
    return reciprocal(p) + reciprocal(q) == 1


def _check_unit_interval(name: str, value: Fraction) -> Fraction:
    value = Fraction(value)
    if not 0 < value < 1:
        raise PreconditionError(f"{name} must lie strictly in (0, 1), got {value}")
    return value


def _check_closed_unit_interval(name: str, value: Fraction) -> Fraction:
    # threshold formulas stay finite at the endpoints, so those are allowed
    value = Fraction(value)
    if not 0 <= value <= 1:
        raise PreconditionError(f"{name} must lie in [0, 1], got {value}")
    return value


def conserves_helicity(theta: Exponent, alpha: Exponent) -> bool:
    """True exactly when 2*theta + alpha >= 1 (boundary included)."""
    theta = _check_unit_interval("theta", theta)
    alpha = _check_unit_interval("alpha", alpha)
    return 2 * theta + alpha >= 1


def holder_time_exponent(theta: Exponent, alpha: Exponent) -> Fraction:
    """Time regularity (alpha + theta) / (1 - theta) of the smoothed pairing."""
    theta = _check_closed_unit_interval("theta", theta)
    alpha = _check_closed_unit_interval("alpha", alpha)
    if theta == 1:
        raise PreconditionError("theta = 1 leaves no time-smoothing budget")
    return (alpha + theta) / (1 - theta)


def holder_time_exponent_w3(theta: Exponent) -> Fraction:
    """Time regularity (2*theta - 1) / (1 - theta); needs theta > 1/2."""
    theta = _check_unit_interval("theta", theta)
    if theta <= Fraction(1, 2):
        raise PreconditionError(
            f"the gradient-integrable route needs theta > 1/2, got {theta}"
        )
    return (2 * theta - 1) / (1 - theta)


def embedding_threshold(theta: Exponent, alpha: Exponent) -> Fraction:
    """Critical integrability 9 / (5 + 2*(alpha - theta))."""
    theta = _check_closed_unit_interval("theta", theta)
    alpha = _check_closed_unit_interval("alpha", alpha)
    return Fraction(9) / (5 + 2 * (alpha - theta))


def companion_threshold(alpha: Exponent) -> tuple[Fraction, Fraction]:
    """(9 / (4 + 3*alpha), (1 - alpha) / 2): the threshold at the matched theta."""
    alpha = _check_closed_unit_interval("alpha", alpha)
    theta = (1 - alpha) / 2
    return Fraction(9) / (4 + 3 * alpha), theta


def balancing_delta(t: float, s: float, theta: Exponent) -> float:
    """Smoothing radius |t - s|^(1/(1-theta)) balancing the two error branches."""
    theta = _check_closed_unit_interval("theta", theta)
    if theta == 1:
        raise PreconditionError("theta = 1 leaves no time-smoothing budget")
    gap = abs(float(t) - float(s))
    return gap ** float(1 / (1 - theta))


@dataclass(frozen=True)
class ExponentRegime:
    """A full exponent bookkeeping record, validated exactly on creation.

    theta is the velocity smoothness, alpha the vorticity smoothness; (p, q)
    and (r, kappa) are the two conjugate integrability pairs used by the
    chain bound.
    """

    theta: Fraction
    alpha: Fraction
    p: Exponent = Fraction(2)
    q: Exponent = Fraction(2)
    r: Exponent = Fraction(2)
    kappa: Exponent = Fraction(2)

    def __post_init__(self):
        object.__setattr__(self, "theta", _check_unit_interval("theta", parse_exponent(self.theta)))
        object.__setattr__(self, "alpha", _check_unit_interval("alpha", parse_exponent(self.alpha)))
        for name in ("p", "q", "r", "kappa"):
            object.__setattr__(self, name, parse_exponent(getattr(self, name)))
        if not is_conjugate_pair(self.p, self.q):
            raise PreconditionError(f"(p, q) = ({self.p}, {self.q}) is not conjugate")
        if not is_conjugate_pair(self.r, self.kappa):
            raise PreconditionError(
                f"(r, kappa) = ({self.r}, {self.kappa}) is not conjugate"
            )

    def conserves_helicity(self) -> bool:
        return conserves_helicity(self.theta, self.alpha)

    def holder_time_exponent(self) -> Fraction:
        return holder_time_exponent(self.theta, self.alpha)

    def holder_time_exponent_w3(self) -> Fraction:
        return holder_time_exponent_w3(self.theta)

    def embedding_threshold(self) -> Fraction:
        return embedding_threshold(self.theta, self.alpha)

    def balancing_delta(self, t: float, s: float) -> float:
        return balancing_delta(t, s, self.theta)

    def as_dict(self) -> dict:
        """Verdict record: exact strings plus float renderings for readers."""

        def enc(x):
            return "inf" if x == math.inf else str(x)

        out = {
            "theta": enc(self.theta),
            "alpha": enc(self.alpha),
            "p": enc(self.p),
            "q": enc(self.q),
            "r": enc(self.r),
            "kappa": enc(self.kappa),
            "conserves": self.conserves_helicity(),
            "time_exponent": enc(self.holder_time_exponent()),
            "time_exponent_float": float(self.holder_time_exponent()),
        }
        if self.theta > Fraction(1, 2):
            w3 = self.holder_time_exponent_w3()
            out["time_exponent_w3"] = enc(w3)
            out["time_exponent_w3_float"] = float(w3)
        companion_p, companion_theta = companion_threshold(self.alpha)
        out["thresholds"] = {
            "embedding": enc(self.embedding_threshold()),
            "embedding_float": float(self.embedding_threshold()),
            "companion": enc(companion_p),
            "companion_float": float(companion_p),
            "companion_theta": enc(companion_theta),
        }
        return out
