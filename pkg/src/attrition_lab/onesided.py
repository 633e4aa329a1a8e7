"""Unique equilibrium of the one-sided single-demand game.

The construction is backward and event-driven: player 2's reputation runs
from 1 down at exponential dynamics, player 1's through the no-challenge and
then the challenge phase, with the phase switch located where player 2's
reputation crosses ``mu2_star``.  Initial concession atoms place the
post-atom prior pair exactly on the traced coevolution curve.  Everything is
a closed form; quadrature appears only in the deviation-payoff audits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _payoffs
from ._paths import (
    BackwardTrace,
    CurveDomainError,
    PiecewisePath,
    PlayerDynamics,
    trace_backward,
)
from .model import Derived, OneSidedGame, derive

__all__ = [
    "DomainError",
    "CoevolutionCurve",
    "coevolution_curve",
    "initial_atoms",
    "EquilibriumProfile",
    "solve",
    "HazardSchedule",
    "hazard_schedule",
    "deviation_payoff_concede",
    "deviation_payoff_challenge",
    "QuadratureFailure",
]

DomainError = CurveDomainError
QuadratureFailure = _payoffs.QuadratureFailure

# Relative tolerance below which gamma1 is treated as equal to lambda1 and the
# L'Hospital form of the curve is used.
_GAMMA_EQ_LAMBDA_RTOL = 1e-9

# Relative tolerance for "prior already on the curve": below it neither side
# gets a time-0 atom.
_TIE_RTOL = 1e-12


def _gamma_equals_lambda(gamma1: float, lam1: float) -> bool:
    return abs(gamma1 - lam1) < _GAMMA_EQ_LAMBDA_RTOL * max(gamma1, lam1)


@dataclass(frozen=True)
class CoevolutionCurve:
    """Closed-form coevolution curve ``mu2 <-> mu1`` of the one-sided game.

    ``tilde_mu1`` maps player 2's reputation to player 1's on the locus of
    equilibrium reputation pairs; ``tilde_mu2`` is its inverse.  Both
    implement the challenge-phase branch (below ``mu2_star``) and the
    no-challenge branch, the ``gamma1 = 0`` power-curve reduction, and the
    ``gamma1 = lambda1`` L'Hospital form.
    """

    d: Derived

    @property
    def asymptote(self) -> float:
        return self.d.asymptote

    def tilde_mu1(self, mu2: float) -> float:
        d = self.d
        if not 0.0 < mu2 <= 1.0:
            raise DomainError(f"tilde_mu1 needs mu2 in (0,1], got {mu2!r}")
        lam1, lam2, g = d.lambda1, d.lambda2, d.gamma1
        if g == 0.0:
            return mu2 ** (lam1 / lam2)
        if _gamma_equals_lambda(g, lam1):
            if mu2 > d.mu2_star:
                return 1.0 / (1.0 - (g / lam2) * math.log(mu2))
            inv_muN = 1.0 - (g / lam2) * math.log(d.mu2_star)
            return 1.0 / ((g / d.nu1_star) / lam2 * math.log(d.mu2_star / mu2) + inv_muN)
        e = (g - lam1) / lam2
        if mu2 > d.mu2_star:
            return (lam1 - g) / (lam1 * mu2 ** e - g)
        den = (lam1 * mu2 ** e
               + (g / d.nu1_star - g) * (mu2 / d.mu2_star) ** e
               - g / d.nu1_star)
        return (lam1 - g) / den

    def tilde_mu2(self, mu1: float) -> float:
        d = self.d
        if not (self.asymptote < mu1 <= 1.0):
            raise DomainError(
                f"tilde_mu2 needs mu1 in ({self.asymptote!r}, 1], got {mu1!r}")
        lam1, lam2, g = d.lambda1, d.lambda2, d.gamma1
        if g == 0.0:
            return mu1 ** (lam2 / lam1)
        if _gamma_equals_lambda(g, lam1):
            if mu1 > d.mu1_N:
                return math.exp((lam2 / g) * (1.0 - 1.0 / mu1))
            # Continuity at mu1_N requires the additive constant 1/mu1_N
            # (= 1 - (g/lam2) log mu2_star), inverting the L'Hospital branch
            # of tilde_mu1.
            inv_muN = 1.0 - (g / lam2) * math.log(d.mu2_star)
            return d.mu2_star * math.exp((inv_muN - 1.0 / mu1) / ((g / d.nu1_star) / lam2))
        p = lam2 / (g - lam1)
        if mu1 > d.mu1_N:
            return ((1.0 - g / lam1) / mu1 + g / lam1) ** p
        num = ((lam1 - g) / lam1) / mu1 + (g / lam1) / d.nu1_star
        den = 1.0 + ((1.0 - d.nu1_star) / d.nu1_star) * (g / lam1) \
            * d.mu2_star ** ((lam1 - g) / lam2)
        return (num / den) ** p


def coevolution_curve(d: Derived) -> CoevolutionCurve:
    """Explicit closed-form coevolution curve for the given derived constants."""
    return CoevolutionCurve(d=d)


def _player_dynamics(game: OneSidedGame, d: Derived):
    """Per-player phase dynamics for the backward trace (one-sided game).

    Player 2 never challenges, so her own threshold is irrelevant
    (``theta=None`` disables the crossing event) and her phase dynamics are
    the pure exponential ``(lambda2, 0)`` in both phases.
    """
    p1 = PlayerDynamics(lam=d.lambda1, gamma=game.gamma1,
                        nu_star=d.nu1_star, theta=None)
    p2 = PlayerDynamics(lam=d.lambda2, gamma=0.0, nu_star=0.5, theta=d.mu2_star)
    return p1, p2


@dataclass(frozen=True)
class EquilibriumProfile:
    """Closed-form equilibrium objects of a solved one-sided game.

    All evaluators are pure functions of time; the profile is immutable and
    safe to use from concurrent callers.
    """

    game: OneSidedGame
    d: Derived
    T: float
    T1: float
    Q1: float
    Q2: float
    loser: int | None
    x1: float  # player 1 reputation at 0 (post-atom)
    x2: float
    u1: float
    u2: float
    path1: PiecewisePath = field(repr=False)
    path2: PiecewisePath = field(repr=False)

    # -- reputations ------------------------------------------------------
    def mu1(self, t):
        if np.ndim(t):
            return self.path1.values(t)
        return self.path1.value(float(t))

    def mu2(self, t):
        if np.ndim(t):
            return self.path2.values(t)
        return self.path2.value(float(t))

    # -- strategy evaluators ----------------------------------------------
    def q2(self, t):
        """Player 2's yield probability when challenged at time t."""
        g = self.game
        if g.gamma1 == 0.0:
            # No justified challenges exist: a challenge reveals rationality
            # and is met by seeing.  Inert value, kept finite.
            return np.zeros_like(t, dtype=float) if np.ndim(t) else 0.0
        if np.ndim(t):
            t = np.asarray(t, dtype=float)
            out = np.ones_like(t)
            m = t < self.T1
            if m.any():
                out[m] = (g.c1 / (1.0 - self.mu2(t[m])) - g.w1) / (1.0 - g.w1)
            return out
        if t < self.T1:
            return (g.c1 / (1.0 - self.mu2(t)) - g.w1) / (1.0 - g.w1)
        return 1.0

    def kappa1(self, t):
        """Strategic player 1's concession hazard lambda1/(1-mu1)."""
        return np.where(np.asarray(t) < self.T, self.d.lambda1 / (1.0 - self.mu1(t)), 0.0) \
            if np.ndim(t) else (self.d.lambda1 / (1.0 - self.mu1(t)) if t < self.T else 0.0)

    def kappa2(self, t):
        return np.where(np.asarray(t) < self.T, self.d.lambda2 / (1.0 - self.mu2(t)), 0.0) \
            if np.ndim(t) else (self.d.lambda2 / (1.0 - self.mu2(t)) if t < self.T else 0.0)

    def chi1(self, t):
        """Strategic player 1's challenge hazard (zero after T1)."""
        d, g = self.d, self.game
        if g.gamma1 == 0.0:
            return np.zeros_like(t, dtype=float) if np.ndim(t) else 0.0
        c = (1.0 - d.nu1_star) / d.nu1_star * g.gamma1
        if np.ndim(t):
            t = np.asarray(t, dtype=float)
            mu = self.mu1(t)
            return np.where(t < self.T1, c * mu / (1.0 - mu), 0.0)
        if t < self.T1:
            mu = self.mu1(t)
            return c * mu / (1.0 - mu)
        return 0.0

    # -- cumulative strategy distributions (strategic types) ---------------
    def G1(self, t):
        """Strategic player 1's cumulative challenge probability."""
        g = self.game
        if g.gamma1 == 0.0 or self.T1 <= 0.0:
            return np.zeros_like(t, dtype=float) if np.ndim(t) else 0.0
        c = (g.z1 / (1.0 - g.z1)) * (1.0 - self.d.nu1_star) / self.d.nu1_star
        tt = np.minimum(t, self.T1) if np.ndim(t) else min(t, self.T1)
        return c * -np.expm1(-g.gamma1 * tt)

    def F1(self, t):
        """Strategic player 1's cumulative concession probability."""
        g = self.game
        survivor = (g.z1 / (1.0 - g.z1)) * np.exp(-g.gamma1 * np.asarray(t, dtype=float)) \
            * (1.0 - self.mu1(t)) / self.mu1(t)
        out = 1.0 - self.G1(t) - survivor
        if np.ndim(t):
            return np.where(np.asarray(t) >= self.T, 1.0 - self.G1(self.T1), out)
        return 1.0 - self.G1(self.T1) if t >= self.T else float(out)

    def F2(self, t):
        g = self.game
        if np.ndim(t):
            out = 1.0 - (g.z2 / (1.0 - g.z2)) * (1.0 - self.mu2(t)) / self.mu2(t)
            return np.where(np.asarray(t) >= self.T, 1.0, out)
        if t >= self.T:
            return 1.0
        m = self.mu2(t)
        return 1.0 - (g.z2 / (1.0 - g.z2)) * (1.0 - m) / m

    # -- strategic survivor mass (used by the sampler and the audits) ------
    def alive1(self, t):
        """P(strategic player 1 has neither conceded nor challenged by t)."""
        g = self.game
        t_arr = np.asarray(t, dtype=float)
        out = (g.z1 / (1.0 - g.z1)) * np.exp(-g.gamma1 * t_arr) \
            * (1.0 - self.mu1(t)) / self.mu1(t)
        return np.where(t_arr >= self.T, 0.0, out) if np.ndim(t) \
            else (0.0 if t >= self.T else float(out))

    def alive2(self, t):
        g = self.game
        out = (g.z2 / (1.0 - g.z2)) * (1.0 - self.mu2(t)) / self.mu2(t)
        return np.where(np.asarray(t) >= self.T, 0.0, out) if np.ndim(t) \
            else (0.0 if t >= self.T else float(out))

    # -- adapter for the shared payoff functionals --------------------------
    def side(self, player: int) -> "_payoffs.SideView":
        g, d = self.game, self.d
        if player == 1:
            return _payoffs.SideView(
                a=g.a1, r=g.r1, z=g.z1, gamma=g.gamma1, c=g.c1, k=0.0, w=g.w1,
                D=d.D, T=self.T, chal_stop=self.T1, Q0=self.Q1,
                mu=self.mu1, F=self.F1, G=self.G1, q=lambda t: 1.0,
                fdens_scaled=self._f1_scaled, gdens_scaled=self._g1_scaled,
            )
        return _payoffs.SideView(
            a=g.a2, r=g.r2, z=g.z2, gamma=0.0, c=None, k=g.k2, w=0.0,
            D=d.D, T=self.T, chal_stop=0.0, Q0=self.Q2,
            mu=self.mu2, F=self.F2, G=lambda t: 0.0, q=self.q2,
            fdens_scaled=self._f2_scaled, gdens_scaled=lambda t: 0.0,
        )

    def _f1_scaled(self, t):
        """(1 - z1) * density of F1 at t (continuous part)."""
        g = self.game
        if not 0.0 < t < self.T:
            return 0.0
        return g.z1 * self.d.lambda1 * math.exp(-g.gamma1 * t) / self.mu1(t)

    def _g1_scaled(self, t):
        g = self.game
        if g.gamma1 == 0.0 or not 0.0 < t < self.T1:
            return 0.0
        return g.z1 * g.gamma1 * (1.0 - self.d.nu1_star) / self.d.nu1_star \
            * math.exp(-g.gamma1 * t)

    def _f2_scaled(self, t):
        g = self.game
        if not 0.0 < t < self.T:
            return 0.0
        return g.z2 * self.d.lambda2 / self.mu2(t)

    def scalars(self) -> dict:
        """Scalar summary used by the JSON serializer."""
        return {
            "T": self.T, "T1": self.T1, "Q1": self.Q1, "Q2": self.Q2,
            "loser": self.loser, "x1": self.x1, "x2": self.x2,
            "u1": self.u1, "u2": self.u2,
            "D": self.d.D, "lambda1": self.d.lambda1, "lambda2": self.d.lambda2,
            "mu2_star": self.d.mu2_star, "nu1_star": self.d.nu1_star,
            "phi1_star": self.d.phi1_star, "mu1_N": self.d.mu1_N,
        }


def initial_atoms(game: OneSidedGame, curve: CoevolutionCurve):
    """Time-0 concession atoms placing the posterior pair on the curve.

    Returns ``(Q1, Q2, loser)`` with ``loser`` in {None, 1, 2}.  At most one
    atom is positive; priors on the curve (within 1e-12 relative) yield none.
    """
    z1, z2 = game.z1, game.z2
    m1 = curve.tilde_mu1(z2)
    if abs(z1 - m1) <= _TIE_RTOL * max(z1, m1):
        return 0.0, 0.0, None
    if z1 < m1:
        q1 = 1.0 - (z1 / (1.0 - z1)) * (1.0 - m1) / m1
        return q1, 0.0, 1
    m2 = curve.tilde_mu2(z1)
    q2 = 1.0 - (z2 / (1.0 - z2)) * (1.0 - m2) / m2
    return 0.0, q2, 2


def solve(game: OneSidedGame) -> EquilibriumProfile:
    """Construct the unique equilibrium profile by backward composition."""
    d = derive(game)
    p1, p2 = _player_dynamics(game, d)
    trace = trace_backward(p1, p2)

    s2 = trace.backward_time(2, game.z2)
    m1_at_z2 = trace.value(1, s2)
    tie = abs(game.z1 - m1_at_z2) <= _TIE_RTOL * max(game.z1, m1_at_z2)
    if tie:
        loser, T = None, s2
        x1, x2, Q1, Q2 = game.z1, game.z2, 0.0, 0.0
    elif game.z1 < m1_at_z2:
        loser, T = 1, s2
        x1, x2 = m1_at_z2, game.z2
        Q1 = 1.0 - (game.z1 / (1.0 - game.z1)) * (1.0 - x1) / x1
        Q2 = 0.0
    else:
        loser = 2
        T = trace.backward_time(1, game.z1)
        x1, x2 = game.z1, trace.value(2, T)
        Q1 = 0.0
        Q2 = 1.0 - (game.z2 / (1.0 - game.z2)) * (1.0 - x2) / x2

    cross2 = trace.cross[1]  # backward time at which mu2 falls to mu2_star
    T1 = 0.0 if (cross2 is None or game.gamma1 == 0.0) else max(0.0, T - cross2)

    path1 = trace.forward_path(1, T)
    path2 = trace.forward_path(2, T)

    # Equilibrium payoffs: the winner collects the opponent's unconditional
    # time-0 concession probability (1 - z_loser/x_loser) times D on top of
    # the concession payoff; the loser gets the concession payoff.
    u1 = 1.0 - game.a2 + ((1.0 - game.z2 / x2) * d.D if loser == 2 else 0.0)
    u2 = 1.0 - game.a1 + ((1.0 - game.z1 / x1) * d.D if loser == 1 else 0.0)

    return EquilibriumProfile(game=game, d=d, T=T, T1=T1, Q1=Q1, Q2=Q2,
                              loser=loser, x1=x1, x2=x2, u1=u1, u2=u2,
                              path1=path1, path2=path2)


# ---------------------------------------------------------------------------
# Deviation payoffs (quadrature against the closed-form evaluators)
# ---------------------------------------------------------------------------

def deviation_payoff_concede(profile: EquilibriumProfile, t: float,
                             player: int = 1, *, game: OneSidedGame | None = None) -> float:
    """Expected payoff of the strategic ``player`` from conceding at time t."""
    if game is not None and game != profile.game:
        raise ValueError("game does not match the profile")
    me, opp = profile.side(player), profile.side(3 - player)
    return _payoffs.concede_value(me, opp, t)


def deviation_payoff_challenge(profile: EquilibriumProfile, t: float,
                               *, game: OneSidedGame | None = None) -> float:
    """Expected payoff of strategic player 1 from challenging at time t."""
    if game is not None and game != profile.game:
        raise ValueError("game does not match the profile")
    return _payoffs.challenge_value(profile.side(1), profile.side(2), t)


# ---------------------------------------------------------------------------
# Hazard schedule
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HazardSchedule:
    """Overall (justified + strategic) hazards of challenging and resolution.

    Piecewise in time with discontinuities at ``T1`` (challenge hazard drops
    by the factor ``nu1_star``) and at ``T`` (resolution hazard drops to the
    justified arrival rate).  Concession hazards are constant at
    ``lambda_i`` on (0, T).
    """

    profile: EquilibriumProfile = field(repr=False)
    T1: float
    T: float
    lambda1: float
    lambda2: float
    gamma1: float
    jumps: tuple

    def challenge_hazard(self, t):
        p, g = self.profile, self.gamma1
        if np.ndim(t):
            t = np.asarray(t, dtype=float)
            mu = p.mu1(t)
            return np.where(t < self.T1, mu / p.d.nu1_star * g,
                            np.where(t < self.T, mu * g, g))
        if t < self.T1:
            return p.mu1(t) / p.d.nu1_star * g
        if t < self.T:
            return p.mu1(t) * g
        return g

    def resolution_hazard(self, t):
        conc = self.lambda1 + self.lambda2
        if np.ndim(t):
            t = np.asarray(t, dtype=float)
            return self.challenge_hazard(t) + np.where(t < self.T, conc, 0.0)
        return self.challenge_hazard(t) + (conc if t < self.T else 0.0)

    def concession_hazard(self, player: int, t):
        lam = self.lambda1 if player == 1 else self.lambda2
        if np.ndim(t):
            return np.where(np.asarray(t) < self.T, lam, 0.0)
        return lam if t < self.T else 0.0


def hazard_schedule(profile: EquilibriumProfile) -> HazardSchedule:
    """Piecewise hazard functions with the located discontinuities."""
    d, g = profile.d, profile.game
    jumps = []
    if g.gamma1 > 0.0 and profile.T1 > 0.0:
        mu_N = profile.mu1(profile.T1)
        left = mu_N / d.nu1_star * g.gamma1
        right = mu_N * g.gamma1
        jumps.append({
            "time": profile.T1, "kind": "challenge",
            "left": left, "right": right, "drop_factor": d.nu1_star,
        })
    conc = d.lambda1 + d.lambda2
    jumps.append({
        "time": profile.T, "kind": "resolution",
        "left": g.gamma1 * profile.mu1(profile.T) + conc, "right": g.gamma1,
        "drop_factor": None,
    })
    return HazardSchedule(profile=profile, T1=profile.T1, T=profile.T,
                          lambda1=d.lambda1, lambda2=d.lambda2,
                          gamma1=g.gamma1, jumps=tuple(jumps))
