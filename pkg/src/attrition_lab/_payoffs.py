"""Expected-utility functionals for timing deviations, by adaptive quadrature.

``concede_value`` and ``challenge_value`` evaluate a strategic player's
time-zero expected utility from conceding/challenging at a chosen time,
holding the opponent to the profile's closed-form strategy distributions.
They are role-symmetric: the one-sided game is the special case where one
side's challenge machinery is inert.

These functionals are the only place numerical integration appears; the
integrands are built from exact densities, so the quadrature is an audit
tool, not part of the equilibrium construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

from scipy.integrate import quad

__all__ = ["SideView", "QuadratureFailure", "concede_value", "challenge_value",
           "response_values"]

_QUAD_EPSABS = 1e-9
# Accept estimates whose reported error is within one order of the target.
_QUAD_MAX_ERR = 1e-8


class QuadratureFailure(ArithmeticError):
    """Adaptive quadrature could not meet the requested tolerance."""


@dataclass(frozen=True)
class SideView:
    """One player's primitives plus closed-form strategy evaluators.

    ``q`` is THIS player's probability of yielding when challenged;
    ``fdens_scaled``/``gdens_scaled`` are (1 - z) times the densities of the
    strategic concession/challenge distributions; ``Q0`` the time-0 atom of
    the strategic concession distribution; ``c`` is None for a player with no
    challenge option.
    """

    a: float
    r: float
    z: float
    gamma: float
    c: float | None
    k: float
    w: float
    D: float
    T: float
    chal_stop: float
    Q0: float
    mu: Callable
    F: Callable
    G: Callable
    q: Callable
    fdens_scaled: Callable
    gdens_scaled: Callable

    def with_response(self, q: Callable) -> "SideView":
        return replace(self, q=q)


def _survival(me: SideView, opp: SideView, t: float) -> float:
    """P(game not ended by the opponent by time t)."""
    return (1.0 - (1.0 - opp.z) * opp.F(t) - (1.0 - opp.z) * opp.G(t)
            - opp.z * -math.expm1(-opp.gamma * t))


def _history_integral(me: SideView, opp: SideView, t: float) -> float:
    """Discounted value accrued from opponent actions on (0, t].

    Three flows: opponent concessions (I collect my demand), justified
    opponent challenges (I respond via my rule q), and strategic opponent
    challenges (response rule against a bluffing challenger).
    """
    if t <= 0.0:
        return 0.0
    base = 1.0 - opp.a
    see_bonus_just = -me.k * me.D                     # seeing a justified challenger
    see_bonus_strat = ((1.0 - opp.w) - me.k) * me.D   # seeing a bluffing challenger

    def integrand(s: float) -> float:
        disc = math.exp(-me.r * s)
        val = me.a * opp.fdens_scaled(s)
        one_minus_q = 1.0 - me.q(s)
        if opp.gamma > 0.0:
            val += (opp.z * opp.gamma * math.exp(-opp.gamma * s)
                    * (base + one_minus_q * see_bonus_just))
        g = opp.gdens_scaled(s)
        if g != 0.0:
            val += g * (base + one_minus_q * see_bonus_strat)
        return disc * val

    pts = sorted({p for p in (me.chal_stop, opp.chal_stop, opp.T) if 0.0 < p < t})
    val, err = quad(integrand, 0.0, t, points=pts or None, limit=200,
                    epsabs=_QUAD_EPSABS, epsrel=1e-11)
    if err > _QUAD_MAX_ERR * max(1.0, abs(val)):
        raise QuadratureFailure(
            f"history integral error estimate {err!r} exceeds tolerance")
    return val


def concede_value(me: SideView, opp: SideView, t: float) -> float:
    """Expected utility from conceding at time t (strategic type)."""
    if t < 0.0:
        raise ValueError("deviation time must be nonnegative")
    v = _history_integral(me, opp, t)
    if t > 0.0:
        v += me.a * (1.0 - opp.z) * opp.Q0          # opponent's time-0 atom
    else:
        # Simultaneous concession against the opponent's atom: equal split.
        v += (1.0 - opp.z) * opp.Q0 * (me.a + 1.0 - opp.a) / 2.0
    v += math.exp(-me.r * t) * (1.0 - opp.a) * _survival(me, opp, t)
    return v


def challenge_value(me: SideView, opp: SideView, t: float) -> float:
    """Expected utility from challenging at time t (strategic type)."""
    if me.c is None:
        raise ValueError("this player has no challenge option")
    if t < 0.0:
        raise ValueError("deviation time must be nonnegative")
    v = _history_integral(me, opp, t)
    v += me.a * (1.0 - opp.z) * opp.Q0  # concession outruns a simultaneous challenge
    disc = math.exp(-me.r * t)
    q_opp = opp.q(t)
    strategic_alive = (1.0 - opp.z) * (1.0 - opp.F(t) - opp.G(t))
    v += strategic_alive * disc * ((1.0 - q_opp) * me.w + q_opp) * me.D
    v += _survival(me, opp, t) * disc * (1.0 - opp.a - me.c * me.D)
    return v


def response_values(me: SideView, opp: SideView, t: float, nu_opp: float):
    """(yield_value, see_value) for the defender facing a challenge at t.

    ``nu_opp`` is the posterior that the challenger is justified.  Values are
    undiscounted shares at time t; only their difference matters for the
    audit.
    """
    yield_v = 1.0 - opp.a
    see_v = 1.0 - opp.a + (1.0 - nu_opp) * (1.0 - opp.w) * me.D - me.k * me.D
    return yield_v, see_v
