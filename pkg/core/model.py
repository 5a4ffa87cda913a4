"""Continuous problem parameters and the sufficient stability margins.

The reaction-diffusion plant ``x_t = a x_xixi + b x`` on ``[0, 1]`` is closed
by the boundary feedback ``x_xi(0) = k1 x(0)``, ``x_xi(1) = k2 x(1)``. A design
point is asymptotically stable when three scalar margins are all strictly
negative; together with a Hurwitz semi-discrete matrix this defines the
feasible set D searched by the optimizer.

Margins effectively force ``a > 0``: ``m1 = kbar - a < 0`` with ``kbar >= 0``.
Nothing here hard-requires it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
import numpy.typing as npt

from .exceptions import ValidationError

PARAM_NAMES: tuple[str, str, str, str] = ("a", "b", "k1", "k2")

FloatArray = npt.NDArray[np.float64]
FreeMask = tuple[bool, bool, bool, bool]


@dataclass(frozen=True, slots=True)
class DesignPoint:
    """Decision variables ``(a, b, k1, k2)`` and which of them may move.

    Attributes:
        a: Diffusion coefficient.
        b: Reaction coefficient.
        k1: Left boundary gain.
        k2: Right boundary gain.
        free_mask: Flags for ``(a, b, k1, k2)``; frozen values never change.
    """

    a: float
    b: float
    k1: float
    k2: float
    free_mask: FreeMask = (True, True, True, True)

    def __post_init__(self) -> None:
        for name in PARAM_NAMES:
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValidationError(
                    f"design value {name} must be finite",
                    context={name: value},
                )
        if len(self.free_mask) != 4:
            raise ValidationError(
                "free_mask must hold four flags", context={"mask": self.free_mask}
            )

    def as_vector(self) -> FloatArray:
        """Return ``[a, b, k1, k2]`` as a float array."""
        return np.array([self.a, self.b, self.k1, self.k2], dtype=float)

    def with_vector(self, values: FloatArray) -> DesignPoint:
        """Return a point with new values; frozen coordinates are kept."""
        current = self.as_vector()
        merged = np.where(np.asarray(self.free_mask), values, current)
        return replace(
            self,
            a=float(merged[0]),
            b=float(merged[1]),
            k1=float(merged[2]),
            k2=float(merged[3]),
        )

    @property
    def free_indices(self) -> tuple[int, ...]:
        """Indices of the movable coordinates."""
        return tuple(i for i, free in enumerate(self.free_mask) if free)

    def require_free(self) -> None:
        """Raise when no coordinate is free to move."""
        if not any(self.free_mask):
            raise ValidationError("free_mask has no free coordinate")


class DesignObjective(str, Enum):
    """Design objective ``f_d`` added to the control cost."""

    ZERO = "zero"
    SQUARE_OF_A = "square_of_a"

    def value(self, point: DesignPoint) -> float:
        """Evaluate ``f_d`` at ``point``."""
        if self is DesignObjective.SQUARE_OF_A:
            return point.a * point.a
        return 0.0

    def gradient(self, point: DesignPoint) -> FloatArray:
        """Gradient of ``f_d`` with respect to ``(a, b, k1, k2)``."""
        grad = np.zeros(4)
        if self is DesignObjective.SQUARE_OF_A:
            grad[0] = 2.0 * point.a
        return grad


@dataclass(frozen=True, slots=True)
class Weights:
    """Quadratic cost weights and the design objective selector."""

    q: float = 1.0
    r: float = 1.0e4
    objective: DesignObjective = DesignObjective.ZERO

    def __post_init__(self) -> None:
        if not (math.isfinite(self.q) and self.q >= 0.0):
            raise ValidationError("state weight q must be >= 0", context={"q": self.q})
        if not (math.isfinite(self.r) and self.r > 0.0):
            raise ValidationError("control weight r must be > 0", context={"r": self.r})


@dataclass(frozen=True, slots=True)
class FeasibilityReport:
    """Stability margins of one design point.

    Attributes:
        kbar: ``max{0, -a k1}``.
        m1: ``kbar - a``.
        m2: ``5 kbar - a + 4 b``.
        m3: ``2 a k2 + kbar + a``.
        theorem_ok: All three margins strictly negative.
        hurwitz_ok: Semi-discrete matrix is Hurwitz; ``None`` until checked.
        max_re_eig: Largest eigenvalue real part when the Hurwitz test ran.
    """

    kbar: float
    m1: float
    m2: float
    m3: float
    theorem_ok: bool
    hurwitz_ok: bool | None = None
    max_re_eig: float | None = field(default=None)

    @property
    def in_d(self) -> bool:
        """Membership in D: margins hold and the matrix is Hurwitz."""
        return self.theorem_ok and bool(self.hurwitz_ok)

    @property
    def margins(self) -> tuple[float, float, float]:
        return (self.m1, self.m2, self.m3)

    def satisfies(self, delta: float = 0.0) -> bool:
        """Margins hold with a safety buffer: every ``m_i < -delta``."""
        if delta < 0.0:
            raise ValidationError(
                "margin buffer must be >= 0", context={"delta": delta}
            )
        return all(m < -delta for m in self.margins)

    def with_hurwitz(self, max_re_eig: float, hurwitz_ok: bool) -> FeasibilityReport:
        """Return a copy carrying the Hurwitz test result."""
        return replace(self, hurwitz_ok=hurwitz_ok, max_re_eig=max_re_eig)

    def violations(self, delta: float = 0.0) -> list[str]:
        """Human-readable list of failed conditions."""
        found: list[str] = []
        for name, value in zip(("m1", "m2", "m3"), self.margins):
            if not value < -delta:
                found.append(f"{name}={value:.6g} >= {-delta:.6g}")
        if self.hurwitz_ok is False:
            found.append(f"max_re_eig={self.max_re_eig:.6g} not < 0 (A not Hurwitz)")
        return found


def kbar(a: float, k1: float) -> float:
    """Left-boundary dissipation deficit ``max{0, -a k1}``."""
    return max(0.0, -a * k1)


def theorem1_margins(point: DesignPoint) -> FeasibilityReport:
    """Evaluate the three sufficient stability margins at ``point``.

    ``hurwitz_ok`` is left unset; see :func:`core.lyapunov.assess_feasibility`.
    """
    kb = kbar(point.a, point.k1)
    m1 = kb - point.a
    m2 = 5.0 * kb - point.a + 4.0 * point.b
    m3 = 2.0 * point.a * point.k2 + kb + point.a
    return FeasibilityReport(
        kbar=kb,
        m1=m1,
        m2=m2,
        m3=m3,
        theorem_ok=(m1 < 0.0 and m2 < 0.0 and m3 < 0.0),
    )


def corollary1_margins(point: DesignPoint) -> FeasibilityReport:
    """Margins for the homogeneous plant (``b = 0``)."""
    if point.b != 0.0:
        raise ValidationError(
            "homogeneous margins require b = 0", context={"b": point.b}
        )
    return theorem1_margins(point)
