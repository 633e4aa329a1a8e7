"""Welfare and comparative-statics layer for the one-sided game.

Answers the qualitative questions about the challenge opportunity: who gains
from its existence, what the vanishing-prior payoffs are, how payoffs move
with each primitive, and how they respond to the arrival rate.  Everything
here is a thin layer over the closed-form coevolution curves plus targeted
root finding; a finite-difference hook against ``solve`` is provided for
each analytic sign claim so the claims stay auditable.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from .bernoulli import BernoulliDynamics, hitting_time
from .model import Derived, OneSidedGame, derive
from .onesided import CoevolutionCurve, coevolution_curve, solve

__all__ = [
    "NoBenefitRegion",
    "BracketingFailure",
    "BenefitRegion",
    "who_benefits",
    "time_to_reach_one",
    "LimitPayoffs",
    "limit_payoffs_single",
    "MonotonicityReport",
    "comp_statics_check",
    "SignReport",
    "gamma_sensitivity",
]

_KNIFE_RTOL = 1e-9


class NoBenefitRegion(RuntimeError):
    """Condition for a benefit region fails; no crossing points exist."""


class BracketingFailure(ArithmeticError):
    """Root bracketing for the benefit-region boundaries broke down."""


def time_to_reach_one(d: Derived, x: float) -> float:
    """Equilibrium time for player 1's reputation to climb from ``x`` to 1.

    Two-phase when starting below ``mu1_N`` (challenge dynamics up to
    ``mu1_N``, then no-challenge dynamics); infinite at or below the curve
    asymptote when the drift there points down.
    """
    if not 0.0 < x <= 1.0:
        raise ValueError(f"x must lie in (0,1], got {x!r}")
    if x == 1.0:
        return 0.0
    g = d.gamma1
    nochal = BernoulliDynamics(d.lambda1 - g, g)
    if x >= d.mu1_N:
        return hitting_time(nochal, x, 1.0)
    if x <= d.asymptote:
        return math.inf
    chal = BernoulliDynamics(d.lambda1 - g, g / d.nu1_star)
    return hitting_time(chal, x, d.mu1_N) + hitting_time(nochal, d.mu1_N, 1.0)


def _log_curve_gap(d: Derived, curve_g: CoevolutionCurve, mu1: float) -> float:
    """log tilde_mu2(mu1 | gamma1) - log tilde_mu2(mu1 | 0).

    Positive exactly where the challenge opportunity raises the curve (and
    with it player 1's payoff when he is the winner).  Computed in log space
    to stay well-scaled near the asymptote.
    """
    return math.log(curve_g.tilde_mu2(mu1)) - (d.lambda2 / d.lambda1) * math.log(mu1)


def _condition_a_expression(d: Derived) -> float:
    """Single-number form of the benefit condition at ``mu1 = nu1_star``.

    Positive iff the gamma-curve lies above the gamma=0 curve at the peak of
    their gap, i.e. iff a benefit region exists (given ``mu1_N > nu1_star``).
    """
    lam1, lam2, g, nu, ms = d.lambda1, d.lambda2, d.gamma1, d.nu1_star, d.mu2_star
    if abs(g - lam1) < _KNIFE_RTOL * max(g, lam1):
        # L'Hospital of the expression as gamma1 -> lambda1; fall back to the
        # log-gap itself, which is smooth through the knife edge.
        return _log_curve_gap(d, coevolution_curve(d), nu)
    return (lam1 - g) * (((1.0 - nu ** (-g / lam1)) / (1.0 - nu)) * nu
                         + (g / lam1) * ms ** ((lam1 - g) / lam2))


@dataclass(frozen=True)
class BenefitRegion:
    """Classification of priors for which player 1 gains from the ultimatum.

    When ``condition_A_holds``, the two boundaries are the crossings of the
    coevolution curves with and without the challenge opportunity, and the
    strict-benefit set is ``mu1_lower < z1 < mu1_upper`` combined with
    ``z2 < tilde_mu2(z1 | gamma1)``.
    """

    game: OneSidedGame
    condition_A_holds: bool
    t1_with: float
    t1_without: float
    sign_expression: float
    _mu1_lower: float | None
    _mu1_upper: float | None
    _curve: CoevolutionCurve

    @property
    def mu1_lower(self) -> float:
        if not self.condition_A_holds:
            raise NoBenefitRegion("benefit condition fails; no lower boundary")
        return self._mu1_lower

    @property
    def mu1_upper(self) -> float:
        if not self.condition_A_holds:
            raise NoBenefitRegion("benefit condition fails; no upper boundary")
        return self._mu1_upper

    def benefits(self, z1: float, z2: float) -> bool:
        """Does player 1 strictly gain from the challenge opportunity?"""
        if not self.condition_A_holds:
            return False
        if not self._mu1_lower < z1 < self._mu1_upper:
            return False
        return z2 < self._curve.tilde_mu2(z1)


def who_benefits(game: OneSidedGame) -> BenefitRegion:
    """Locate the set of priors where the ultimatum benefits player 1.

    The benefit condition has two clauses: ``mu1_N > nu1_star`` (the
    strategic challenge rate exceeds the justified one somewhere) and the
    curve with challenges lying above the challenge-free curve at
    ``nu1_star`` (equivalently, reputation building from ``nu1_star`` is
    faster with challenges: ``t1_with < t1_without``).
    """
    if game.gamma1 <= 0.0:
        raise ValueError("who_benefits needs gamma1 > 0")
    d = derive(game)
    curve = coevolution_curve(d)
    nu = d.nu1_star
    t1_with = time_to_reach_one(d, nu)
    t1_without = -math.log(nu) / d.lambda1
    expr = _condition_a_expression(d)
    cond = (d.mu1_N > nu) and (t1_with < t1_without)
    if not cond:
        return BenefitRegion(game=game, condition_A_holds=False,
                             t1_with=t1_with, t1_without=t1_without,
                             sign_expression=expr,
                             _mu1_lower=None, _mu1_upper=None, _curve=curve)

    def gap(m: float) -> float:
        return _log_curve_gap(d, curve, m)

    lower = _bracketed_root(gap, nu, d.asymptote, downward=True)
    upper = _bracketed_root(gap, nu, 1.0, downward=False)
    return BenefitRegion(game=game, condition_A_holds=True,
                         t1_with=t1_with, t1_without=t1_without,
                         sign_expression=expr,
                         _mu1_lower=lower, _mu1_upper=upper, _curve=curve)


def _bracketed_root(gap, peak: float, limit: float, downward: bool) -> float:
    """Root of the single-peaked curve gap on one side of its peak.

    Scans geometrically from the peak toward ``limit`` until the gap turns
    negative, then bisects; falls back to a dense scan with a warning if the
    geometric scan degenerates.
    """
    g_peak = gap(peak)
    if g_peak <= 0.0:
        raise BracketingFailure("gap not positive at its peak")
    lo = peak
    for k in range(1, 200):
        frac = 0.5 ** k
        cand = limit + (peak - limit) * frac if downward else 1.0 - (1.0 - peak) * frac
        if downward and cand <= limit * (1.0 + 1e-12) + 1e-300:
            break
        if not downward and cand >= 1.0 - 1e-15:
            break
        try:
            val = gap(cand)
        except Exception:
            break
        if val < 0.0:
            return brentq(gap, min(cand, lo), max(cand, lo), xtol=1e-14, rtol=1e-14)
        lo = cand
    warnings.warn("geometric bracketing degenerated; falling back to dense scan")
    side = (np.linspace(limit + 1e-9, peak, 10_000) if downward
            else np.linspace(peak, 1.0 - 1e-9, 10_000))
    vals = [gap(m) if m > limit else -1.0 for m in side]
    for a, b, va, vb in zip(side, side[1:], vals, vals[1:]):
        if (va < 0.0) != (vb < 0.0):
            return brentq(gap, a, b, xtol=1e-14, rtol=1e-14)
    raise BracketingFailure("no sign change located for the benefit boundary")


# ---------------------------------------------------------------------------
# Limit of rationality (single demand)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LimitPayoffs:
    """Vanishing-prior payoff pair and the winning player.

    ``winner`` is None on the nongeneric knife edge
    ``lambda1 = gamma1 + lambda2``, where the split depends on how the
    priors vanish.  The middle case assumes priors vanish at the same order.
    """

    u1_limit: float | None
    u2_limit: float | None
    winner: int | None
    efficient: bool
    case: str


def limit_payoffs_single(game: OneSidedGame) -> LimitPayoffs:
    """Payoffs as both justified priors vanish (rate comparison only)."""
    d = derive(game)
    lam1, lam2, g = d.lambda1, d.lambda2, game.gamma1
    scale = max(lam1, g + lam2)
    if abs(lam1 - (g + lam2)) < _KNIFE_RTOL * scale:
        return LimitPayoffs(None, None, None, efficient=False,
                            case="knife_edge_lambda1_eq_gamma1_plus_lambda2")
    if lam1 < g:
        case = "fast_ultimatum"
    elif lam1 < g + lam2:
        case = "middle_same_order"
    else:
        case = "player1_dominant"
    if lam1 < g + lam2:
        return LimitPayoffs(1.0 - game.a2, game.a2, winner=2, efficient=True, case=case)
    return LimitPayoffs(game.a1, 1.0 - game.a1, winner=1, efficient=True, case=case)


# ---------------------------------------------------------------------------
# Comparative statics
# ---------------------------------------------------------------------------

_PARAMS = ("z1", "z2", "r1", "r2", "c1", "k2", "w1")


def _windows(game: OneSidedGame, d: Derived, curve: CoevolutionCurve):
    """Region indicators entering the sign table.

    ``win1`` / ``win2``: the winner indicators (z_i at or above the curve);
    ``court1`` / ``court2``: the sub-windows where the court parameters
    (c1, k2, w1) move the relevant curve branch.
    """
    tm1 = curve.tilde_mu1(game.z2)
    win1 = game.z1 >= tm1
    win2 = game.z1 <= tm1  # equivalently z2 >= tilde_mu2(z1)
    court1 = win1 and game.z1 < d.mu1_N
    court2 = win2 and game.z2 < d.mu2_star
    return win1, win2, court1, court2


def _predicted_signs(game: OneSidedGame, param: str):
    """(sign du1, sign du2) for a unit *increase* of ``param``; 0 = constant.

    The z/r rows follow the winner indicators; the court rows (c1, k2, w1)
    are active only on the curve branches that carry those constants.  The
    k2 and w1 rows both act through the challenger-posterior target: raising
    either lowers it, which speeds player 1's reputation building and so
    raises u1 / lowers u2 on the active windows (the proofs' direction; the
    proposition's prose lists k2 with the opposite sign).
    """
    d = derive(game)
    curve = coevolution_curve(d)
    win1, win2, court1, court2 = _windows(game, d, curve)
    if param == "z1":
        return (+1 if win1 else 0), (-1 if win2 else 0)
    if param == "z2":
        return (-1 if win1 else 0), (+1 if win2 else 0)
    if param == "r1":
        return (-1 if win1 else 0), (+1 if win2 else 0)
    if param == "r2":
        return (+1 if win1 else 0), (-1 if win2 else 0)
    if param == "c1":
        return (-1 if court1 else 0), (+1 if court2 else 0)
    if param in ("k2", "w1"):
        return (+1 if court1 else 0), (-1 if court2 else 0)
    raise ValueError(f"unsupported parameter {param!r}; pick one of {_PARAMS}")


@dataclass(frozen=True)
class MonotonicityReport:
    """Observed payoff changes for a parameter bump, with sign predictions."""

    param: str
    delta: float
    du1: float
    du2: float
    pred1: int | None
    pred2: int | None
    same_region: bool
    violations: tuple

    @property
    def ok(self) -> bool:
        return not self.violations


def comp_statics_check(game: OneSidedGame, param: str, delta: float,
                       zero_tol: float = 1e-9) -> MonotonicityReport:
    """Re-solve at ``game`` and ``game + delta`` and test the sign table.

    Predictions are only issued when both evaluation points fall in the same
    region (the payoff map is piecewise smooth with kinks at the region
    boundaries); otherwise ``same_region`` is False and no violation is
    flagged.
    """
    if param not in _PARAMS:
        raise ValueError(f"unsupported parameter {param!r}; pick one of {_PARAMS}")
    bumped = replace(game, **{param: getattr(game, param) + delta})
    base_prof, bump_prof = solve(game), solve(bumped)
    du1 = bump_prof.u1 - base_prof.u1
    du2 = bump_prof.u2 - base_prof.u2

    p_base = _predicted_signs(game, param)
    p_bump = _predicted_signs(bumped, param)
    same_region = p_base == p_bump
    if not same_region:
        return MonotonicityReport(param=param, delta=delta, du1=du1, du2=du2,
                                  pred1=None, pred2=None, same_region=False,
                                  violations=())
    sgn = 1 if delta > 0 else -1
    pred1, pred2 = p_base[0] * sgn, p_base[1] * sgn
    violations = []
    for name, pred, du in (("u1", pred1, du1), ("u2", pred2, du2)):
        if pred == 0:
            if abs(du) > zero_tol:
                violations.append(f"{name} moved by {du!r} outside its window")
        elif du * pred <= 0.0:
            violations.append(f"{name} changed by {du!r}, predicted sign {pred:+d}")
    return MonotonicityReport(param=param, delta=delta, du1=du1, du2=du2,
                              pred1=pred1, pred2=pred2, same_region=True,
                              violations=tuple(violations))


# ---------------------------------------------------------------------------
# Sensitivity to the arrival rate
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SignReport:
    """Analytic sign of du1/dgamma1 against a finite-difference oracle."""

    region: str
    expression: float | None
    predicted_sign: int
    fd_value: float
    agrees: bool


def _dlog_curve_dgamma(game: OneSidedGame, d: Derived, curve: CoevolutionCurve) -> float:
    """d log tilde_mu2(z1) / d gamma1 on the challenge branch (z1 <= mu1_N).

    Derivative of the closed-form branch; the displayed version of this
    expression drops a factor lambda1 and a normalizer, which can flip its
    sign, so the re-derived form is used (finite-difference checked).
    """
    lam1, lam2, g, nu, ms = d.lambda1, d.lambda2, game.gamma1, d.nu1_star, d.mu2_star
    z1 = game.z1
    m_pow = ms ** ((lam1 - g) / lam2)
    n_val = ((lam1 - g) / lam1) / z1 + (g / lam1) / nu
    n_der = (1.0 / lam1) * (1.0 / nu - 1.0 / z1)
    d_val = 1.0 + ((1.0 - nu) / nu) * (g / lam1) * m_pow
    d_der = ((1.0 - nu) / nu) * (1.0 / lam1) * m_pow * (1.0 - (g / lam2) * math.log(ms))
    log_tm2 = math.log(curve.tilde_mu2(z1))
    return (lam2 / (g - lam1)) * (-log_tm2 / lam2 + n_der / n_val - d_der / d_val)


def gamma_sensitivity(game: OneSidedGame, fd_step_rel: float = 1e-4) -> SignReport:
    """Sign of du1/dgamma1: analytic expression vs a centered difference."""
    if game.gamma1 <= 0.0:
        raise ValueError("gamma_sensitivity needs gamma1 > 0")
    d = derive(game)
    if abs(game.gamma1 - d.lambda1) < _KNIFE_RTOL * max(game.gamma1, d.lambda1):
        raise ValueError("gamma1 == lambda1 knife edge; expression undefined")
    curve = coevolution_curve(d)
    tm1 = curve.tilde_mu1(game.z2)

    h = fd_step_rel * game.gamma1
    fd = (solve(replace(game, gamma1=game.gamma1 + h)).u1
          - solve(replace(game, gamma1=game.gamma1 - h)).u1) / (2.0 * h)

    if game.z1 < tm1:
        region, expr, pred = "loser_constant", None, 0
    elif game.z1 <= d.mu1_N:
        expr = _dlog_curve_dgamma(game, d, curve)
        region, pred = "challenge_branch", (1 if expr > 0 else (-1 if expr < 0 else 0))
    else:
        region, expr, pred = "above_mu1_N_decreasing", None, -1
    if pred == 0:
        agrees = abs(fd) < 1e-7
    else:
        agrees = fd * pred > 0.0
    return SignReport(region=region, expression=expr, predicted_sign=pred,
                      fd_value=fd, agrees=agrees)
