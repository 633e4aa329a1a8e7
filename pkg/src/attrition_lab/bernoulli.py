"""Exact solutions of the quadratic-drift ODE ``mu' = A*mu + B*mu**2``.

Every reputation trajectory in this package is a solution of a Bernoulli
differential equation with constant coefficients, so the whole equilibrium
machinery reduces to two primitives: evaluating the closed-form flow map and
inverting it for hitting times.  Both are implemented here in a numerically
careful way (``expm1``/``log1p`` forms) so the ``A -> 0`` limit is seamless.

For ``A != 0`` the solution through ``mu(0) = mu0`` is

    mu(t) = 1 / [ (1/mu0 + B/A) * exp(-A t) - B/A ]

and for ``A == 0`` it is ``mu(t) = 1 / (1/mu0 - B t)``.  The denominator is
monotone in ``t``; if it reaches zero the trajectory escapes to infinity in
finite time, which is reported as :class:`Blowup` rather than clamped, since
no equilibrium construction ever evaluates past such a pole.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "EPS_A",
    "BernoulliDynamics",
    "Blowup",
    "Unreachable",
    "evolve",
    "hitting_time",
    "flow_speed",
]

# Below this magnitude the linear coefficient is treated as exactly zero.
# The expm1-based denominator makes the two branches agree to O(A*t^2) at the
# switch, which is covered by a continuity test.
EPS_A = 1e-9


@dataclass(frozen=True)
class BernoulliDynamics:
    """Coefficients (per unit time) of ``mu' = A*mu + B*mu**2``."""

    A: float
    B: float

    def __post_init__(self):
        if not (math.isfinite(self.A) and math.isfinite(self.B)):
            raise ValueError("dynamics coefficients must be finite")

    def fixed_point(self) -> float | None:
        """Interior stationary level ``-A/B``, or None if B == 0."""
        if self.B == 0.0:
            return None
        return -self.A / self.B


class Blowup(ArithmeticError):
    """The trajectory escapes to infinity before the requested time."""

    def __init__(self, t_star: float):
        self.t_star = t_star
        super().__init__(f"finite-time escape at t = {t_star!r}")


class Unreachable(ValueError):
    """The target level is not on the trajectory's forward path."""


def flow_speed(dyn: BernoulliDynamics, mu: float) -> float:
    """Instantaneous drift ``A*mu + B*mu**2`` at the given level."""
    return dyn.A * mu + dyn.B * mu * mu


def _denominator(dyn: BernoulliDynamics, mu0: float, t):
    """Denominator of the closed form, stable for small ``A`` (array-safe)."""
    if abs(dyn.A) < EPS_A:
        return 1.0 / mu0 - dyn.B * t
    # (1/mu0 + B/A) e^{-At} - B/A  ==  e^{-At}/mu0 + (B/A) expm1(-At)
    return np.exp(-dyn.A * t) / mu0 + (dyn.B / dyn.A) * np.expm1(-dyn.A * t)


def _pole_time(dyn: BernoulliDynamics, mu0: float) -> float:
    """Time at which the denominator vanishes (may be negative)."""
    if abs(dyn.A) < EPS_A:
        return 1.0 / (dyn.B * mu0)
    p = 1.0 / mu0 + dyn.B / dyn.A
    ratio = (dyn.B / dyn.A) / p
    return -math.log(ratio) / dyn.A


def evolve(dyn: BernoulliDynamics, mu0: float, t: float) -> float:
    """Value of the trajectory through ``mu0`` after elapsed time ``t``.

    ``t`` may be negative (backward evolution), which the closed form supports
    directly; the equilibrium constructions rely on this to run reputation
    paths backward from their terminal values.

    Raises:
        Blowup: if the denominator vanishes between 0 and ``t``.
    """
    if not 0.0 < mu0:
        raise ValueError(f"mu0 must be positive, got {mu0!r}")
    if not math.isfinite(t):
        raise ValueError(f"t must be finite, got {t!r}")
    if t == 0.0:
        return mu0
    d = _denominator(dyn, mu0, t)
    # d(0) = 1/mu0 > 0 and d is monotone in t, so a pole lies between 0 and t
    # exactly when d(t) <= 0.
    if d <= 0.0:
        raise Blowup(_pole_time(dyn, mu0))
    return 1.0 / d


def evolve_array(dyn: BernoulliDynamics, mu0: float, t: np.ndarray) -> np.ndarray:
    """Vectorized :func:`evolve`; poles surface as a single :class:`Blowup`."""
    d = _denominator(dyn, mu0, np.asarray(t, dtype=float))
    if np.any(d <= 0.0):
        raise Blowup(_pole_time(dyn, mu0))
    return 1.0 / d


def hitting_time(dyn: BernoulliDynamics, mu0: float, mu_target: float) -> float:
    """Elapsed time for the trajectory to move from ``mu0`` to ``mu_target``.

    Closed form (no root finding):

        t = (1/A) * log[ (1/mu0 + B/A) / (1/mu_target + B/A) ]        A != 0
        t = (1/mu0 - 1/mu_target) / B                                  A == 0

    Raises:
        Unreachable: if the flow at ``mu0`` points away from the target, is
            stationary, or a fixed point separates the two levels.
    """
    for name, v in (("mu0", mu0), ("mu_target", mu_target)):
        if not 0.0 < v:
            raise ValueError(f"{name} must be positive, got {v!r}")
    if mu_target == mu0:
        return 0.0
    v0 = flow_speed(dyn, mu0)
    if v0 == 0.0:
        raise Unreachable(f"mu0 = {mu0!r} is stationary under {dyn}")
    if (mu_target > mu0) != (v0 > 0.0):
        raise Unreachable(
            f"flow at mu0 = {mu0!r} points away from target {mu_target!r}"
        )
    if abs(dyn.A) < EPS_A:
        if dyn.B == 0.0:
            raise Unreachable("degenerate dynamics never move")
        t = (1.0 / mu0 - 1.0 / mu_target) / dyn.B
    else:
        q = dyn.B / dyn.A
        num = 1.0 / mu0 + q
        den = 1.0 / mu_target + q
        # A sign change of 1/mu + B/A between the two levels means the interior
        # fixed point -A/B separates them; the flow can never cross it.
        if den == 0.0 or num == 0.0 or (num > 0.0) != (den > 0.0):
            raise Unreachable(
                f"fixed point separates mu0 = {mu0!r} from target {mu_target!r}"
            )
        t = math.log1p((1.0 / mu0 - 1.0 / mu_target) / den) / dyn.A
    if not math.isfinite(t) or t < 0.0:
        raise Unreachable(
            f"target {mu_target!r} not reached in finite forward time from {mu0!r}"
        )
    return t
