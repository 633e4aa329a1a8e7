"""One-sided game with multiple justified demands.

Player 1 announces a demand from his grid; player 2 either accepts or
counter-announces from hers, after which the single-demand machinery takes
over.  A strategic player 2 mixes across demands so that every mimicked
demand pays the same; the mix is pinned down by a payoff-level bisection
that inverts each demand's strictly decreasing payoff map in closed form
(no inner root finding).  Player 1's announcement mix is found by the same
level trick one layer up, using the monotonicity of his subgame payoff in
his time-0 reputation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .bernoulli import BernoulliDynamics, hitting_time
from .model import Derived, MultiDemandGame, derive_for_demands
from .onesided import CoevolutionCurve, DomainError, coevolution_curve

__all__ = [
    "ConvergenceFailure",
    "time_to_one",
    "time_to_one_2",
    "sigma_bar",
    "MimicDistribution",
    "solve_sigma2",
    "MultiEquilibrium",
    "solve_game",
    "limit_payoffs_rich",
]

_MAX_BISECT = 200
_MASS_TOL = 1e-11
# Demand pairs within this margin of exact compatibility (a2 = 1 - a1) are
# treated as compatible: mimicking them is equivalent to conceding.
_COMPAT_TOL = 1e-12


class ConvergenceFailure(ArithmeticError):
    """Level bisection failed to balance the probability mass."""


def _pair_derived(game, a1: float, a2: float) -> Derived:
    return derive_for_demands(game, a1, a2)


def time_to_one(game, a1: float, a2: float, x: float) -> float:
    """Time for player 1's reputation to climb from ``x`` to 1 (demands a1, a2).

    Infinite at or below the curve asymptote; otherwise the challenge-phase
    and no-challenge-phase hitting times composed.  ``inf`` is an ordinary
    return value, not an error.
    """
    if not 0.0 < x <= 1.0:
        raise ValueError(f"x must lie in (0,1], got {x!r}")
    d = _pair_derived(game, a1, a2)
    if x == 1.0:
        return 0.0
    g = d.gamma1
    if x <= d.asymptote:
        return math.inf
    nochal = BernoulliDynamics(d.lambda1 - g, g)
    if x >= d.mu1_N:
        return hitting_time(nochal, x, 1.0)
    chal = BernoulliDynamics(d.lambda1 - g, g / d.nu1_star)
    return hitting_time(chal, x, d.mu1_N) + hitting_time(nochal, d.mu1_N, 1.0)


def time_to_one_2(game, a1: float, a2: float, y: float) -> float:
    """Time for player 2's reputation to climb from ``y`` to 1: -log(y)/lambda2."""
    if not 0.0 < y <= 1.0:
        raise ValueError(f"y must lie in (0,1], got {y!r}")
    d = _pair_derived(game, a1, a2)
    return -math.log(y) / d.lambda2


def _y_star(game, a2_index: int, sigma: float) -> float:
    """Player 2's time-0 reputation when mimicking demand ``a2`` with prob sigma."""
    zpi = game.z2 * game.pi2[a2_index]
    return zpi / (zpi + (1.0 - game.z2) * sigma)


def sigma_bar(game, a1: float, a2: float, x: float) -> float:
    """Maximum equilibrium mimic probability of demand ``a2`` given ``x``.

    Zero for compatible demands; one when player 1's reputation takes at
    least as long to reach 1 as player 2's at full mimicking; otherwise the
    unique probability equating the two times, i.e. the one that puts the
    reputation pair exactly on the coevolution curve of the demand pair.
    """
    if a2 <= 1.0 - a1 + _COMPAT_TOL:
        return 0.0
    if not 0.0 < x < 1.0:
        raise ValueError(f"x must lie in (0,1), got {x!r}")
    idx = game.A2.index(a2)
    d = _pair_derived(game, a1, a2)
    if x <= d.asymptote:
        return 1.0
    curve = coevolution_curve(d)
    try:
        y_req = curve.tilde_mu2(x)
    except (DomainError, OverflowError):
        return 1.0
    if y_req <= 0.0:  # curve value underflowed: any mimic probability works
        return 1.0
    zpi = game.z2 * game.pi2[idx]
    raw = (zpi / (1.0 - game.z2)) * (1.0 - y_req) / y_req
    return min(1.0, raw)


@dataclass(frozen=True)
class MimicDistribution:
    """Player 2's equal-payoff mimicking mix after observing ``a1``.

    ``sigma2`` maps each demand in A2 to its mimic probability, ``sigma_Q``
    is the mass on immediate acceptance, and ``u_hat`` the common payoff of
    every supported action.  ``x_star``/``y_star``/``Q1`` record the induced
    single-demand subgame objects per demand.
    """

    a1: float
    x: float
    sigma2: tuple
    sigma_Q: float
    u_hat: float
    y_star: tuple
    x_star: tuple
    Q1: tuple

    def support(self, game) -> list:
        return [a2 for a2, s in zip(game.A2, self.sigma2) if s > 0.0]


def _payoff_at_sigma(game, a1, idx, a2, x, curve, sigma):
    """u2 of mimicking ``a2`` with probability sigma (strictly decreasing)."""
    D = a1 + a2 - 1.0
    if sigma == 0.0:
        return 1.0 - a1 + (1.0 - x) * D
    y = _y_star(game, idx, sigma)
    try:
        xs = curve.tilde_mu1(y)
    except OverflowError:
        return -math.inf  # required boost unattainable: cap never binds here
    return 1.0 - a1 + (1.0 - x / xs) * D


def solve_sigma2(game, a1: float, x: float, *, bracket_seed: int | None = None) -> MimicDistribution:
    """Unique equal-payoff mimicking mix of player 2 in the subgame (a1, x).

    Bisection on the common payoff level: each candidate level is inverted
    demand-by-demand in closed form through the coevolution curve (capped at
    ``sigma_bar``, floored at zero), and the level moves until the masses
    sum to one.  Shortfall at the bottom level goes to immediate acceptance.
    ``bracket_seed`` jitters the initial bracket; the result must not depend
    on it (exercised by the uniqueness probe).
    """
    if not 0.0 < x <= 1.0:
        raise ValueError(f"x must lie in (0,1], got {x!r}")
    n = len(game.A2)
    base = 1.0 - a1
    if x == 1.0:
        return MimicDistribution(a1=a1, x=x, sigma2=(0.0,) * n, sigma_Q=1.0,
                                 u_hat=base, y_star=(1.0,) * n, x_star=(1.0,) * n,
                                 Q1=(1.0,) * n)

    active = [i for i, a2 in enumerate(game.A2) if a2 > 1.0 - a1 + _COMPAT_TOL]
    curves, caps, u_caps, u_zeros = {}, {}, {}, {}
    for i in active:
        a2 = game.A2[i]
        d = _pair_derived(game, a1, a2)
        curves[i] = coevolution_curve(d)
        cap = sigma_bar(game, a1, a2, x)
        caps[i] = cap
        u_zeros[i] = base + (1.0 - x) * (a1 + a2 - 1.0)
        u_caps[i] = _payoff_at_sigma(game, a1, i, a2, x, curves[i], cap)

    def sigma_at_level(i: int, level: float) -> float:
        a2 = game.A2[i]
        if level >= u_zeros[i]:
            return 0.0
        if level <= u_caps[i]:
            return caps[i]
        D = a1 + a2 - 1.0
        share = (level - base) / D
        denom = 1.0 - share
        if denom <= x:  # rounding pushed the required reputation to/past 1
            return 0.0
        xs = x / denom
        try:
            y = curves[i].tilde_mu2(xs)
        except (DomainError, OverflowError):
            return caps[i]  # rounding pushed xs onto/past the asymptote
        if y <= 0.0:
            return caps[i]
        zpi = game.z2 * game.pi2[i]
        return min(caps[i], (zpi / (1.0 - game.z2)) * (1.0 - y) / y)

    def mass(level: float) -> float:
        return sum(sigma_at_level(i, level) for i in active)

    if mass(base) < 1.0 - _MASS_TOL:
        # Even mimicking at every cap falls short: the rest accepts a1
        # immediately and every supported action pays the concession value.
        sig = [0.0] * n
        for i in active:
            sig[i] = caps[i]
        sigma_Q = 1.0 - sum(sig)
        level = base
    else:
        lo, hi = base, max(u_zeros.values())
        if bracket_seed is not None:
            rng = np.random.default_rng(bracket_seed)
            hi = hi + rng.uniform(0.0, 0.5) * (hi - lo + 1e-6)
        it = 0
        while hi - lo > 1e-17 * max(1.0, abs(hi)) and it < _MAX_BISECT:
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if mass(mid) >= 1.0:
                lo = mid
            else:
                hi = mid
            it += 1
        level = lo
        sig = [0.0] * n
        for i in active:
            sig[i] = sigma_at_level(i, level)
        total = sum(sig)
        # The level interval collapses to float resolution, but the payoff
        # map can be locally flat in sigma (near a cap the curve compresses
        # a whole sigma-range into one float), leaving a mass residual far
        # above one ulp.  Absorb it where payoffs are least sensitive:
        # first into cap-plateau demands (zero payoff cost), otherwise
        # proportionally to the numeric mass-per-level slopes, which shifts
        # every supported payoff by the same first-order amount.
        resid = 1.0 - total
        if abs(resid) > 1e-4:
            raise ConvergenceFailure(
                f"mass residual {resid!r} after {it} bisection steps")
        if resid != 0.0:
            plateau = [i for i in active
                       if sig[i] == caps[i] and sig[i] > 0.0
                       and abs(u_caps[i] - level) <= 1e-9 * max(1.0, abs(level))]
            if plateau:
                j = max(plateau, key=lambda i: sig[i])
                sig[j] += resid
            else:
                h = max(1e-12, 1e-9 * abs(level))
                slopes = {}
                for i in active:
                    if sig[i] > 0.0:
                        slopes[i] = max(0.0, (sig[i] - sigma_at_level(i, level + h)) / h)
                wsum = sum(slopes.values())
                if wsum <= 0.0:
                    raise ConvergenceFailure("cannot absorb mass residual")
                for i, w in slopes.items():
                    sig[i] += resid * w / wsum
        sigma_Q = 0.0
        payoffs = [
            _payoff_at_sigma(game, a1, i, game.A2[i], x, curves[i], sig[i])
            for i in active if sig[i] > 0.0
        ]
        level = sum(payoffs) / len(payoffs)
        spread = max(abs(p - level) for p in payoffs)
        if spread > 1e-9:
            raise ConvergenceFailure(
                f"supported payoffs spread {spread!r} exceeds tolerance")

    ys, xs, q1 = [1.0] * n, [1.0] * n, [0.0] * n
    for i in active:
        if sig[i] > 0.0:
            ys[i] = _y_star(game, i, sig[i])
        xs[i] = curves[i].tilde_mu1(ys[i])
        q1[i] = max(0.0, 1.0 - (x / (1.0 - x)) * (1.0 - xs[i]) / xs[i])
    # Demands never mimicked are announced by justified types only (y = 1).
    for i in range(n):
        if i not in active:
            ys[i], xs[i], q1[i] = 1.0, 1.0, 1.0

    return MimicDistribution(a1=a1, x=x, sigma2=tuple(sig), sigma_Q=sigma_Q,
                             u_hat=level, y_star=tuple(ys), x_star=tuple(xs),
                             Q1=tuple(q1))


def _u1_subgame(game, a1: float, x: float, mimic: MimicDistribution) -> float:
    """Strategic player 1's payoff after announcing ``a1`` at reputation x.

    He collects a1 when accepted immediately and the concession payoff
    1 - a2 in every counter-demand subgame (his reputation only ever jumps
    up at time 0, so the counter-announcing side never concedes first).
    """
    v = (1.0 - game.z2) * mimic.sigma_Q * a1
    for a2, pi, s in zip(game.A2, game.pi2, mimic.sigma2):
        prob = game.z2 * pi + (1.0 - game.z2) * s
        v += prob * (1.0 - a2)
    return v


def u1_of_announcement(game, a1: float, x: float) -> float:
    """Player 1's subgame payoff u1(a1, x) (solves the mimicking fixed point)."""
    return _u1_subgame(game, a1, x, solve_sigma2(game, a1, x))


def _u1_bracket(game, a1: float, x: float, rel: float = 1e-14):
    """Value bracket of u1(a1, .) over a tiny relative neighborhood of x.

    u1 is continuous and increasing in exact arithmetic, but can rise across
    an x-interval narrower than one float ulp (near a pair-curve asymptote),
    and the root solve that produced x resolves it only to ~1e-15 relative.
    The bracket is the honest float-level statement of the payoff at x.
    """
    lo_x = max(1e-300, x * (1.0 - rel))
    hi_x = x * (1.0 + rel)
    lo_v = u1_of_announcement(game, a1, lo_x)
    hi_v = (u1_of_announcement(game, a1, hi_x) if hi_x < 1.0
            else _u1_at_full_reputation(game, a1))
    return (min(lo_v, hi_v), max(lo_v, hi_v))


def _u1_at_full_reputation(game, a1: float) -> float:
    """Limit of u1(a1, x) as x -> 1 (only justified counter-demands remain)."""
    v = (1.0 - game.z2) * a1
    for a2, pi in zip(game.A2, game.pi2):
        v += game.z2 * pi * (1.0 - a2)
    return v


@dataclass(frozen=True)
class MultiEquilibrium:
    """Equilibrium of the multi-demand game: player 1's mix and per-demand
    mimicking fixed points, plus outcome statistics."""

    game: MultiDemandGame
    sigma1: tuple
    x: tuple                      # player 1's reputation per announced demand
    mimic: tuple                  # MimicDistribution per demand in A1
    u1: float                     # common payoff of supported announcements
    u2_given_a1: tuple            # player 2's level u_hat per a1
    monotone_checked: bool

    def outcome_stats(self) -> dict:
        """Outcome distribution summary (invariant across equilibria).

        Time-0 agreement combines player 2's immediate acceptance with the
        strategic player 1's concession atoms; the per-demand no-concede
        masses are the proof's invariant statistics.
        """
        g = self.game
        announce, accept0, no_concede, pair_rows = [], [], [], []
        agree0 = 0.0
        for i, a1 in enumerate(g.A1):
            p_announce = g.z1 * g.pi1[i] + (1.0 - g.z1) * self.sigma1[i]
            p_strategic1 = (1.0 - g.z1) * self.sigma1[i]
            announce.append(p_announce)
            mim = self.mimic[i]
            p_accept = p_announce * (1.0 - g.z2) * mim.sigma_Q
            accept0.append(p_accept)
            agree0 += p_accept
            nc = 0.0
            for j, a2 in enumerate(g.A2):
                p_a2 = g.z2 * g.pi2[j] + (1.0 - g.z2) * mim.sigma2[j]
                agree0 += p_strategic1 * p_a2 * mim.Q1[j]
                nc += p_a2 * (1.0 - mim.Q1[j])
                pair_rows.append({
                    "a1": a1, "a2": a2, "p_pair": p_announce * p_a2,
                    "y_star": mim.y_star[j], "x_star": mim.x_star[j],
                    "Q1": mim.Q1[j],
                })
            no_concede.append(p_strategic1 * nc)
        return {
            "announce_prob": tuple(announce),
            "accept0_prob": tuple(accept0),
            "time0_agreement": agree0,
            "no_concede_mass": tuple(no_concede),
            "pairs": pair_rows,
        }


def solve_game(game: MultiDemandGame, *, x_grid: int = 200,
               restart_seed: int | None = None) -> MultiEquilibrium:
    """Full equilibrium: player 1 maximizes the min payoff over his support.

    For each demand the map ``x -> u1(a1, x)`` is precomputed on a grid and
    verified monotone (flat below a threshold, strictly increasing after);
    the level bisection then inverts it per demand, refined by a bracketed
    root solve on the exact subgame payoff.
    """
    g = game
    n1 = len(g.A1)
    x_min, u_min, u_one = [], [], []
    grids = []
    for i, a1 in enumerate(g.A1):
        xm = g.z1 * g.pi1[i] / (g.z1 * g.pi1[i] + (1.0 - g.z1))
        x_min.append(xm)
        xs = np.linspace(xm, 1.0 - 1e-9, x_grid)
        us = np.array([u1_of_announcement(g, a1, float(xx)) for xx in xs])
        if np.any(np.diff(us) < -1e-9):
            raise ConvergenceFailure(
                f"u1(a1={a1}, x) not monotone on the verification grid")
        grids.append((xs, us))
        u_min.append(us[0])
        u_one.append(_u1_at_full_reputation(g, a1))

    def sigma1_at(i: int, level: float) -> float:
        a1 = g.A1[i]
        if level >= u_one[i]:
            return 0.0
        if level <= u_min[i]:
            return 1.0
        xs, us = grids[i]
        k = int(np.searchsorted(us, level))
        lo_x = xs[max(0, k - 1)]
        hi_x = xs[min(len(xs) - 1, k)]
        if hi_x <= lo_x:
            hi_x = min(1.0 - 1e-12, lo_x + 1e-6)
        f = lambda xx: u1_of_announcement(g, a1, xx) - level
        f_lo, f_hi = f(lo_x), f(hi_x)
        # Expand the bracket if grid interpolation was off by an ulp or two.
        expand = 0
        while f_lo > 0.0 and expand < 60 and lo_x > x_min[i]:
            lo_x = max(x_min[i], lo_x - (hi_x - lo_x)); f_lo = f(lo_x); expand += 1
        while f_hi < 0.0 and expand < 120 and hi_x < 1.0 - 1e-12:
            hi_x = min(1.0 - 1e-12, hi_x + (hi_x - lo_x)); f_hi = f(hi_x); expand += 1
        if f_lo == 0.0:
            x_req = lo_x
        elif f_hi == 0.0:
            x_req = hi_x
        elif f_lo > 0.0:
            x_req = lo_x  # flat region boundary: level met at the floor
        else:
            x_req = brentq(f, lo_x, hi_x, xtol=1e-15, rtol=1e-15)
        zpi = g.z1 * g.pi1[i]
        sig = (zpi / (1.0 - g.z1)) * (1.0 / x_req - 1.0)
        return min(1.0, sig)

    def mass(level: float) -> float:
        return sum(sigma1_at(i, level) for i in range(n1))

    lo = min(u_min)
    hi = max(u_one)
    if restart_seed is not None:
        rng = np.random.default_rng(restart_seed)
        hi = hi + rng.uniform(0.0, 0.5) * max(1e-6, hi - lo)
    if mass(lo) < 1.0 - 1e-12:
        raise ConvergenceFailure("mass below one even at the lowest level")
    it = 0
    while hi - lo > 1e-15 * max(1.0, abs(hi)) and it < _MAX_BISECT:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if mass(mid) >= 1.0:
            lo = mid
        else:
            hi = mid
        it += 1
    level = lo
    sig1 = [sigma1_at(i, level) for i in range(n1)]
    total = sum(sig1)
    resid = 1.0 - total
    if abs(resid) > 1e-4:
        raise ConvergenceFailure(f"player-1 mass residual {resid!r}")
    if resid != 0.0:
        # Absorb the residual where the level map is steepest (there the
        # payoff is least sensitive to the mass), shifting every supported
        # payoff by the same first-order amount.
        h = max(1e-12, 1e-9 * abs(level))
        slopes = {}
        for i in range(n1):
            if sig1[i] > 0.0:
                slopes[i] = max(0.0, (sig1[i] - sigma1_at(i, level + h)) / h)
        wsum = sum(slopes.values())
        if wsum <= 0.0:
            raise ConvergenceFailure("cannot absorb player-1 mass residual")
        for i, w in slopes.items():
            sig1[i] = min(1.0, max(0.0, sig1[i] + resid * w / wsum))
        if abs(sum(sig1) - 1.0) > 1e-10:
            raise ConvergenceFailure("player-1 mass residual survived absorption")

    xs_out, mims, u2s = [], [], []
    brackets = []
    for i, a1 in enumerate(g.A1):
        if sig1[i] > 0.0:
            zpi = g.z1 * g.pi1[i]
            xx = zpi / (zpi + (1.0 - g.z1) * sig1[i])
        else:
            xx = 1.0
        mim = solve_sigma2(g, a1, xx)
        xs_out.append(xx)
        mims.append(mim)
        u2s.append(mim.u_hat)
        if sig1[i] > 0.0:
            brackets.append(_u1_bracket(g, a1, xx))
    # Equal-payoff verification, robust to float cliffs: u1(a1, .) can rise
    # across an x-interval narrower than one ulp (near a pair's curve
    # asymptote), so each supported payoff is only pinned to the bracket of
    # values at the representable neighbors of x.
    level_lo = max(b[0] for b in brackets)
    level_hi = min(b[1] for b in brackets)
    if level_lo - level_hi > 1e-9:
        raise ConvergenceFailure(
            f"supported announcement payoff brackets are disjoint by "
            f"{level_lo - level_hi!r}")
    if level_lo <= level_hi:
        level = min(max(level, level_lo), level_hi)
    else:  # overlap only within the 1e-9 slack
        level = 0.5 * (level_lo + level_hi)

    return MultiEquilibrium(game=g, sigma1=tuple(sig1), x=tuple(xs_out),
                            mimic=tuple(mims), u1=level, u2_given_a1=tuple(u2s),
                            monotone_checked=True)


def limit_payoffs_rich(r1: float, r2: float, gamma1: float, K: int):
    """Vanishing-prior payoff lower bounds on the rich demand grid A^K.

    The opportunity arrival rate replaces player 1's discount rate whenever
    it is larger; bounds lose 1/K to grid coarseness and sum to 1 - 2/K.
    """
    if K < 4:
        raise ValueError(f"K must be at least 4, got {K!r}")
    rho = max(r1, gamma1)
    return r2 / (rho + r2) - 1.0 / K, rho / (rho + r2) - 1.0 / K
