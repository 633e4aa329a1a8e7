"""Piecewise reputation paths and the backward event-driven trace.

Equilibrium reputations are piecewise solutions of ``mu' = A mu + B mu^2``
with phase switches where a player's challenge behavior turns on or off.
The construction runs the pair of paths *backward* from the terminal state
``(1, 1)``, locating phase switches by exact hitting times; the resulting
trace doubles as the reputation coevolution curve.  Forward-time evaluators
are assembled from the same anchors, so no numerical integration or root
finding is involved anywhere.

Player ``i`` challenges while the opponent's reputation is below
``theta_j`` (the opponent-side threshold); i's own reputation then follows
"challenge" dynamics ``(lam_i - gamma_i, gamma_i / nu_i_star)``, and
"no-challenge" dynamics ``(lam_i - gamma_i, gamma_i)`` otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bernoulli import BernoulliDynamics, Unreachable, evolve, evolve_array, hitting_time

__all__ = [
    "PlayerDynamics",
    "PiecewisePath",
    "BackwardTrace",
    "trace_backward",
    "CurveDomainError",
]

# Backward event times closer than this are treated as simultaneous; the tie
# breaks toward the lower player index (measure-zero configuration).
_EVENT_TIE = 1e-12


class CurveDomainError(ValueError):
    """Requested point lies off the traced coevolution curve's domain."""


@dataclass(frozen=True)
class PlayerDynamics:
    """Phase dynamics of one player's reputation.

    ``theta`` is the threshold on THIS player's reputation gating the
    opponent's challenging; None means the opponent never challenges.
    """

    lam: float
    gamma: float
    nu_star: float
    theta: float | None

    @property
    def no_challenge(self) -> BernoulliDynamics:
        return BernoulliDynamics(self.lam - self.gamma, self.gamma)

    @property
    def challenge(self) -> BernoulliDynamics:
        return BernoulliDynamics(self.lam - self.gamma, self.gamma / self.nu_star)


def _reverse(dyn: BernoulliDynamics) -> BernoulliDynamics:
    return BernoulliDynamics(-dyn.A, -dyn.B)


def _backward_limit(dyn: BernoulliDynamics, start: float) -> float:
    """Infimum of the backward flow started at ``start`` (asymptote level)."""
    fp = dyn.fixed_point()
    if fp is not None and 0.0 < fp < start:
        return fp
    return 0.0


@dataclass(frozen=True)
class PiecewisePath:
    """One reputation path, evaluable in forward time from closed forms.

    Each segment ``[knots[k], knots[k+1])`` carries an anchor
    ``(anchor_t, anchor_mu, dyn)``; the value at ``t`` inside the segment is
    ``evolve(dyn, anchor_mu, t - anchor_t)`` (elapsed time may be negative,
    i.e. segments can be anchored at either end).  ``t >= T`` returns the
    terminal value; for never-ending paths ``T`` is ``inf``.
    """

    knots: tuple
    anchors: tuple
    T: float
    terminal: float = 1.0

    def _segment(self, t: float) -> int:
        # knots[0] == 0.0; segment k covers [knots[k], knots[k+1])
        lo, hi = 0, len(self.anchors) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if t >= self.knots[mid]:
                lo = mid
            else:
                hi = mid - 1
        return lo

    def value(self, t: float) -> float:
        if t >= self.T:
            return self.terminal
        if t < 0.0:
            raise ValueError(f"path evaluated at negative time {t!r}")
        at, amu, dyn = self.anchors[self._segment(t)]
        return evolve(dyn, amu, t - at)

    def values(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        out = np.empty_like(ts)
        done = ts >= self.T
        out[done] = self.terminal
        for k, (at, amu, dyn) in enumerate(self.anchors):
            lo = self.knots[k]
            hi = self.knots[k + 1] if k + 1 < len(self.knots) else self.T
            mask = (~done) & (ts >= lo) & (ts < hi)
            if mask.any():
                out[mask] = evolve_array(dyn, amu, ts[mask] - at)
        return out


@dataclass
class _Leg:
    s: float  # backward-time anchor
    mu: float  # value at the anchor
    dyn: BernoulliDynamics  # forward dynamics on [s, next event)


class BackwardTrace:
    """Joint backward trace of both reputations from (1, 1).

    ``cross[i]`` is the backward time at which player ``i``'s reputation
    falls to ``theta_i`` (None if it never does); the opponent challenges at
    forward times before ``T - cross[i]``.
    """

    def __init__(self, legs1, legs2, cross1, cross2):
        self._legs = (legs1, legs2)
        self.cross = (cross1, cross2)

    def _legs_of(self, player: int):
        return self._legs[player - 1]

    def value(self, player: int, s: float) -> float:
        """Reputation of ``player`` at backward time ``s >= 0``."""
        legs = self._legs_of(player)
        leg = legs[0]
        for cand in legs[1:]:
            if cand.s <= s:
                leg = cand
            else:
                break
        return evolve(leg.dyn, leg.mu, -(s - leg.s))

    def reach(self, player: int) -> float:
        """Infimum of values the backward path attains (curve asymptote)."""
        last = self._legs_of(player)[-1]
        return _backward_limit(last.dyn, last.mu)

    def backward_time(self, player: int, v: float) -> float:
        """Backward time at which ``player``'s path passes level ``v``.

        Raises CurveDomainError if ``v`` is outside ``(reach, 1]``.
        """
        if not 0.0 < v <= 1.0:
            raise CurveDomainError(f"reputation level must lie in (0,1], got {v!r}")
        legs = self._legs_of(player)
        for k, leg in enumerate(legs):
            nxt = legs[k + 1].mu if k + 1 < len(legs) else None
            if nxt is not None and v < nxt:
                continue
            try:
                dt = hitting_time(_reverse(leg.dyn), leg.mu, v)
            except Unreachable as e:
                raise CurveDomainError(
                    f"level {v!r} below the curve's reach for player {player}"
                ) from e
            return leg.s + dt
        raise CurveDomainError(f"level {v!r} below the curve's reach for player {player}")

    def partner(self, player: int, v: float) -> float:
        """Coevolution-curve partner: the other player's reputation when
        ``player``'s reputation equals ``v``."""
        s = self.backward_time(player, v)
        return self.value(3 - player, s)

    def forward_path(self, player: int, T: float) -> PiecewisePath:
        """Forward-time path on [0, T] ending at 1, from the trace anchors."""
        legs = self._legs_of(player)
        knots = [0.0]
        anchors = []
        # Deepest leg covers forward [0, T - legs[-1].s]; walk legs backward.
        for leg in reversed(legs):
            t_anchor = T - leg.s
            anchors.append((t_anchor, leg.mu, leg.dyn))
            if leg.s > 0.0 and T - leg.s > 0.0:
                knots.append(T - leg.s)
        # Drop legs entirely after T (anchor at t <= 0 handled naturally:
        # anchors with t_anchor <= 0 only matter if their segment intersects
        # [0, T), which the knot list encodes).
        return PiecewisePath(knots=tuple(knots), anchors=tuple(anchors), T=T)


def trace_backward(p1: PlayerDynamics, p2: PlayerDynamics) -> BackwardTrace:
    """Run both reputations backward from (1,1), switching phases exactly.

    Near the terminal time both reputations exceed the thresholds, so neither
    player challenges; going backward, when player i's path falls to
    ``theta_i`` the *opponent* enters the challenge phase.  Each crossing
    happens at most once because backward paths are strictly decreasing.
    """
    players = (p1, p2)
    legs = ([_Leg(0.0, 1.0, p1.no_challenge)], [_Leg(0.0, 1.0, p2.no_challenge)])
    cross: list = [None, None]

    while True:
        candidates = []
        for idx in (0, 1):
            if cross[idx] is not None:
                continue
            th = players[idx].theta
            if th is None:  # opponent never challenges; no phase switch to find
                continue
            leg = legs[idx][-1]
            if th >= leg.mu:
                # Already at/below threshold at the anchor (can only happen at
                # construction boundaries); treat as crossed there.
                cross[idx] = leg.s
                continue
            try:
                dt = hitting_time(_reverse(leg.dyn), leg.mu, th)
            except Unreachable:
                continue
            candidates.append((leg.s + dt, idx))
        if not candidates:
            break
        candidates.sort(key=lambda c: (c[0], c[1]))
        if len(candidates) == 2 and candidates[1][0] - candidates[0][0] < _EVENT_TIE:
            # Simultaneous crossings: break toward the lower player index.
            candidates = [min(candidates, key=lambda c: c[1])]
        s_evt, idx = candidates[0]
        cross[idx] = s_evt
        jdx = 1 - idx
        new_dyn = players[jdx].challenge
        if new_dyn != legs[jdx][-1].dyn:
            leg_j = legs[jdx][-1]
            mu_j = evolve(leg_j.dyn, leg_j.mu, -(s_evt - leg_j.s))
            legs[jdx].append(_Leg(s_evt, mu_j, new_dyn))

    return BackwardTrace(legs[0], legs[1], cross[0], cross[1])
