"""Two-sided ultimatum: finite-horizon equilibrium and infinite-delay regimes.

With slow opportunity arrival for at least one player the game has a unique
finite-horizon equilibrium built by the same backward event-driven trace as
the one-sided case (which is literally the ``gamma2 = 0`` instance).  With
fast arrival for both players, reputations need not build up: "type-1"
profiles let both reputations decay toward zero forever, and "type-2"
profiles absorb both reputations at the thresholds ``(theta1, theta2)``
where challenge and concession flows balance.  ``classify`` maps priors to
the regime; the constructors validate their inputs against it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _payoffs
from ._paths import (
    CurveDomainError,
    PiecewisePath,
    PlayerDynamics,
    trace_backward,
)
from .bernoulli import BernoulliDynamics, Unreachable, evolve, hitting_time
from .model import TwoSidedDerived, TwoSidedGame, derive_two_sided

__all__ = [
    "RegimeMismatch",
    "AtomOutOfRange",
    "RegimeClass",
    "classify",
    "TwoSidedProfile",
    "solve_finite",
    "steady_state_rates",
    "InfiniteProfile",
    "construct_type1",
    "construct_type2",
    "type1_atom_interval",
    "type2_atom_candidates",
]

_TIE_RTOL = 1e-12
_LOCUS_TOL = 1e-10
_BOUNDARY_RTOL = 1e-12


class RegimeMismatch(RuntimeError):
    """Constructor invoked outside the regime that supports it."""


class AtomOutOfRange(ValueError):
    """Requested time-0 atom leaves the admissible post-atom region."""


def _chal(d2: TwoSidedDerived, i: int) -> BernoulliDynamics:
    g = d2.gamma[i - 1]
    return BernoulliDynamics(d2.lam[i - 1] - g, g / d2.nu_star[i - 1])


def _nochal(d2: TwoSidedDerived, i: int) -> BernoulliDynamics:
    g = d2.gamma[i - 1]
    return BernoulliDynamics(d2.lam[i - 1] - g, g)


def _post_atom(z: float, Q: float) -> float:
    if not 0.0 <= Q < 1.0:
        raise AtomOutOfRange(f"atom must lie in [0,1), got {Q!r}")
    return z / (z + (1.0 - z) * (1.0 - Q))


def _atom_for(z: float, target: float) -> float:
    """Concession atom lifting a prior ``z`` to posterior ``target``."""
    return 1.0 - (z / (1.0 - z)) * (1.0 - target) / target


# ---------------------------------------------------------------------------
# Regime classification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RegimeClass:
    """Regime of a two-sided game at its priors.

    ``regime`` is one of ``unique_finite_T``, ``type1_only``, ``type2_only``,
    ``type1_and_type2``, ``boundary``.  Threshold fields are per player
    (index 0 = player 1); ``type1_atoms``/``type2_atoms`` list admissible
    atom choices (player, max-or-exact Q) for the infinite constructions.
    """

    regime: str
    fast_both: bool
    theta: tuple
    phi_star: tuple
    asymptote: tuple
    type1_exists: bool
    type2_exists: bool
    type1_atoms: tuple
    type2_atoms: tuple

    def admits(self, kind: str) -> bool:
        if kind == "finite":
            return self.regime == "unique_finite_T"
        if kind == "type1":
            return self.type1_exists
        if kind == "type2":
            return self.type2_exists
        raise ValueError(f"unknown regime kind {kind!r}")


def _type2_branch_dynamics(d2: TwoSidedDerived, above: bool):
    """Per-player dynamics on the approach branch to (theta1, theta2).

    Below the thresholds both players challenge; above, neither does.
    """
    if above:
        return _nochal(d2, 1), _nochal(d2, 2)
    return _chal(d2, 1), _chal(d2, 2)


def type2_atom_candidates(game: TwoSidedGame):
    """Atom choices placing the post-atom prior on the absorbing locus.

    Returns a list of ``(player_or_None, Q)`` whose posterior pair reaches
    ``(theta1, theta2)`` in finite time on one of the two approach branches
    (both reputations below the thresholds and rising, or both above and
    falling).  Empty when no such atom exists.
    """
    d2 = derive_two_sided(game)
    if any(g == 0.0 or ph is None or ph <= 0.0
           for g, ph in zip(d2.gamma, d2.phi_star)):
        return []
    th = d2.theta
    if not all(th[i] < d2.phi_star[i] for i in (0, 1)):
        return []
    z = (game.z1, game.z2)
    out = []

    def branch_of(pair):
        if all(pair[i] < th[i] for i in (0, 1)):
            return "below"
        if all(th[i] < pair[i] < d2.phi_star[i] for i in (0, 1)):
            return "above"
        return None

    def on_locus(pair) -> bool:
        br = branch_of(pair)
        if br is None:
            return False
        if br == "below" and not all(pair[i] > d2.asymptote(i + 1) for i in (0, 1)):
            return False
        dyns = _type2_branch_dynamics(d2, above=(br == "above"))
        try:
            t1 = hitting_time(dyns[0], pair[0], th[0])
            t2 = hitting_time(dyns[1], pair[1], th[1])
        except Unreachable:
            return False
        return abs(t1 - t2) <= _LOCUS_TOL * max(1.0, t1, t2)

    if all(abs(z[i] - th[i]) <= _LOCUS_TOL for i in (0, 1)) or on_locus(z):
        out.append((None, 0.0))
    for conceder in (1, 2):
        j = conceder - 1
        other = 1 - j
        z_other = z[other]
        for above in (False, True):
            dyn_o, dyn_c = (_type2_branch_dynamics(d2, above)[other],
                            _type2_branch_dynamics(d2, above)[j])
            lo, hi = ((th[other], d2.phi_star[other]) if above
                      else (d2.asymptote(other + 1), th[other]))
            if not lo < z_other < hi:
                continue
            try:
                t_other = hitting_time(dyn_o, z_other, th[other])
                x_req = evolve(dyn_c, th[j], -t_other)
            except (Unreachable, ArithmeticError):
                continue
            if above and not th[j] < x_req < d2.phi_star[j]:
                continue
            if (not above) and not d2.asymptote(j + 1) < x_req < th[j]:
                continue
            if x_req <= z[j]:
                continue  # atoms can only raise a reputation
            out.append((conceder, _atom_for(z[j], x_req)))
    return out


def type1_atom_interval(game: TwoSidedGame):
    """Admissible type-1 atoms per conceder: list of (player, Q_max).

    Any ``Q in [0, Q_max]`` keeps the post-atom prior inside the decaying
    region (both reputations at or below their challenge-phase stationary
    levels).  Empty when the game or priors do not admit type-1 profiles.
    """
    d2 = derive_two_sided(game)
    if any(g == 0.0 or ph is None or ph <= 0.0
           for g, ph in zip(d2.gamma, d2.phi_star)):
        return []
    z = (game.z1, game.z2)
    if not all(z[i] <= d2.asymptote(i + 1) for i in (0, 1)):
        return []
    out = []
    for conceder in (1, 2):
        j = conceder - 1
        cap = d2.asymptote(conceder)
        if z[j] > cap:
            continue
        out.append((conceder, max(0.0, _atom_for(z[j], cap))))
    return out


def classify(game: TwoSidedGame) -> RegimeClass:
    """Regime of the game at its priors (thresholds plus cell membership)."""
    d2 = derive_two_sided(game)
    fast_both = all(g > 0.0 and ph is not None and ph > 0.0
                    for g, ph in zip(d2.gamma, d2.phi_star))
    asym = (d2.asymptote(1), d2.asymptote(2))
    phi = tuple(p if p is not None else 0.0 for p in d2.phi_star)
    base = dict(fast_both=fast_both, theta=d2.theta, phi_star=phi,
                asymptote=asym)
    if not fast_both:
        return RegimeClass(regime="unique_finite_T", type1_exists=False,
                           type2_exists=False, type1_atoms=(), type2_atoms=(),
                           **base)

    z = (game.z1, game.z2)
    # Boundary detection: cell membership changes within relative tolerance.
    for i in (0, 1):
        for edge in (asym[i], phi[i]):
            if edge > 0.0 and abs(z[i] - edge) <= _BOUNDARY_RTOL * edge:
                return RegimeClass(regime="boundary", type1_exists=False,
                                   type2_exists=False, type1_atoms=(),
                                   type2_atoms=(), **base)

    t1_atoms = tuple(type1_atom_interval(game))
    type1 = all(z[i] < asym[i] for i in (0, 1))
    t2_atoms = tuple(type2_atom_candidates(game))
    type2 = bool(t2_atoms)
    if type1 and type2:
        regime = "type1_and_type2"
    elif type1:
        regime = "type1_only"
    elif type2:
        regime = "type2_only"
    else:
        regime = "unique_finite_T"
    return RegimeClass(regime=regime, type1_exists=type1, type2_exists=type2,
                       type1_atoms=t1_atoms, type2_atoms=t2_atoms, **base)


# ---------------------------------------------------------------------------
# Finite-horizon equilibrium
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TwoSidedProfile:
    """Finite-horizon two-sided equilibrium objects (both players)."""

    game: TwoSidedGame
    d2: TwoSidedDerived
    T: float
    T_stop: tuple       # challenge stop time per player (index 0 = player 1)
    Q: tuple            # time-0 atoms per player
    loser: int | None
    x: tuple            # post-atom reputations
    u: tuple            # strategic payoffs
    path: tuple = field(repr=False)

    def mu(self, player: int, t):
        p = self.path[player - 1]
        return p.values(t) if np.ndim(t) else p.value(float(t))

    def q(self, player: int, t):
        """Player ``player``'s yield probability when challenged at t."""
        i = player - 1
        j = 1 - i
        gam_j = self.d2.gamma[j]
        if gam_j == 0.0:
            return np.zeros_like(t, dtype=float) if np.ndim(t) else 0.0
        c_j = (self.game.c1, self.game.c2)[j]
        w_j = (self.game.w1, self.game.w2)[j]
        stop_j = self.T_stop[j]

        def scalar(tt):
            if tt < stop_j:
                return (c_j / (1.0 - self.mu(player, tt)) - w_j) / (1.0 - w_j)
            return 1.0
        if np.ndim(t):
            return np.array([scalar(float(tt)) for tt in np.asarray(t)])
        return scalar(float(t))

    def kappa(self, player: int, t):
        lam = self.d2.lam[player - 1]
        if np.ndim(t):
            return np.where(np.asarray(t) < self.T,
                            lam / (1.0 - self.mu(player, t)), 0.0)
        return lam / (1.0 - self.mu(player, t)) if t < self.T else 0.0

    def chi(self, player: int, t):
        i = player - 1
        gam = self.d2.gamma[i]
        nu = self.d2.nu_star[i]
        stop = self.T_stop[i]
        if gam == 0.0 or stop <= 0.0:
            return np.zeros_like(t, dtype=float) if np.ndim(t) else 0.0
        c = (1.0 - nu) / nu * gam
        if np.ndim(t):
            t = np.asarray(t, dtype=float)
            mu = self.mu(player, t)
            return np.where(t < stop, c * mu / (1.0 - mu), 0.0)
        if t < stop:
            m = self.mu(player, t)
            return c * m / (1.0 - m)
        return 0.0

    def G(self, player: int, t):
        i = player - 1
        g = self.game
        z = (g.z1, g.z2)[i]
        gam = self.d2.gamma[i]
        nu = self.d2.nu_star[i]
        stop = self.T_stop[i]
        if gam == 0.0 or stop <= 0.0:
            return np.zeros_like(t, dtype=float) if np.ndim(t) else 0.0
        c = (z / (1.0 - z)) * (1.0 - nu) / nu
        tt = np.minimum(t, stop) if np.ndim(t) else min(t, stop)
        return c * -np.expm1(-gam * tt)

    def alive(self, player: int, t):
        """P(strategic ``player`` has neither conceded nor challenged by t)."""
        i = player - 1
        z = (self.game.z1, self.game.z2)[i]
        gam = self.d2.gamma[i]
        t_arr = np.asarray(t, dtype=float)
        out = (z / (1.0 - z)) * np.exp(-gam * t_arr) \
            * (1.0 - self.mu(player, t)) / self.mu(player, t)
        return np.where(t_arr >= self.T, 0.0, out) if np.ndim(t) \
            else (0.0 if t >= self.T else float(out))

    def F(self, player: int, t):
        i = player - 1
        if np.ndim(t):
            return np.where(np.asarray(t) >= self.T,
                            1.0 - self.G(player, self.T_stop[i]),
                            1.0 - self.G(player, t) - self.alive(player, t))
        if t >= self.T:
            return 1.0 - self.G(player, self.T_stop[i])
        return 1.0 - self.G(player, t) - self.alive(player, t)

    def side(self, player: int) -> "_payoffs.SideView":
        g, d2 = self.game, self.d2
        i = player - 1
        a = (g.a1, g.a2)[i]
        r = (g.r1, g.r2)[i]
        z = (g.z1, g.z2)[i]
        c = (g.c1, g.c2)[i]
        k = (g.k1, g.k2)[i]
        w = (g.w1, g.w2)[i]
        gam = d2.gamma[i]
        nu = d2.nu_star[i]
        stop = self.T_stop[i]

        def fdens_scaled(t, i=i, z=z, gam=gam, player=player):
            if not 0.0 < t < self.T:
                return 0.0
            return z * d2.lam[i] * math.exp(-gam * t) / self.mu(player, t)

        def gdens_scaled(t, z=z, gam=gam, nu=nu, stop=stop):
            if gam == 0.0 or not 0.0 < t < stop:
                return 0.0
            return z * gam * (1.0 - nu) / nu * math.exp(-gam * t)

        return _payoffs.SideView(
            a=a, r=r, z=z, gamma=gam, c=(c if gam > 0.0 else None), k=k, w=w,
            D=d2.D, T=self.T, chal_stop=stop, Q0=self.Q[i],
            mu=lambda t: self.mu(player, t),
            F=lambda t: self.F(player, t),
            G=lambda t: self.G(player, t),
            q=lambda t: self.q(player, t),
            fdens_scaled=fdens_scaled, gdens_scaled=gdens_scaled,
        )

    def scalars(self) -> dict:
        return {
            "T": self.T, "T1_stop": self.T_stop[0], "T2_stop": self.T_stop[1],
            "Q1": self.Q[0], "Q2": self.Q[1], "loser": self.loser,
            "x1": self.x[0], "x2": self.x[1], "u1": self.u[0], "u2": self.u[1],
            "D": self.d2.D,
            "lambda1": self.d2.lam[0], "lambda2": self.d2.lam[1],
            "theta1": self.d2.theta[0], "theta2": self.d2.theta[1],
            "nu1_star": self.d2.nu_star[0], "nu2_star": self.d2.nu_star[1],
        }


def _trace_for(game: TwoSidedGame, d2: TwoSidedDerived):
    p1 = PlayerDynamics(lam=d2.lam[0], gamma=game.gamma1,
                        nu_star=d2.nu_star[0], theta=d2.theta[0])
    p2 = PlayerDynamics(lam=d2.lam[1], gamma=game.gamma2,
                        nu_star=d2.nu_star[1], theta=d2.theta[1])
    return trace_backward(p1, p2)


def solve_finite(game: TwoSidedGame) -> TwoSidedProfile:
    """Unique finite-horizon equilibrium (backward event-driven trace)."""
    regime = classify(game)
    if regime.regime != "unique_finite_T":
        raise RegimeMismatch(
            f"finite-horizon solver called in regime {regime.regime!r}")
    d2 = derive_two_sided(game)
    trace = _trace_for(game, d2)

    z = (game.z1, game.z2)
    try:
        s2 = trace.backward_time(2, z[1])
    except CurveDomainError:
        s2 = None
    if s2 is not None:
        m1_at_z2 = trace.value(1, s2)
        tie = abs(z[0] - m1_at_z2) <= _TIE_RTOL * max(z[0], m1_at_z2)
    else:
        m1_at_z2, tie = None, False

    if s2 is not None and tie:
        loser, T = None, s2
        x = list(z)
        Q = [0.0, 0.0]
    elif s2 is not None and z[0] < m1_at_z2:
        loser, T = 1, s2
        x = [m1_at_z2, z[1]]
        Q = [_atom_for(z[0], m1_at_z2), 0.0]
    else:
        loser = 2
        try:
            T = trace.backward_time(1, z[0])
        except CurveDomainError as e:
            raise RegimeMismatch(
                "priors unreachable by the finite-horizon trace") from e
        x = [z[0], trace.value(2, T)]
        Q = [0.0, _atom_for(z[1], x[1])]

    # Player i stops challenging when the opponent's reputation crosses the
    # opponent's threshold.
    stops = []
    for i in (0, 1):
        cross_other = trace.cross[1 - i]
        if d2.gamma[i] == 0.0 or cross_other is None:
            stops.append(0.0)
        else:
            stops.append(max(0.0, T - cross_other))

    paths = (trace.forward_path(1, T), trace.forward_path(2, T))
    u = (1.0 - game.a2 + ((1.0 - z[1] / x[1]) * d2.D if loser == 2 else 0.0),
         1.0 - game.a1 + ((1.0 - z[0] / x[0]) * d2.D if loser == 1 else 0.0))
    return TwoSidedProfile(game=game, d2=d2, T=T, T_stop=tuple(stops),
                           Q=tuple(Q), loser=loser, x=tuple(x), u=u,
                           path=paths)


def deviation_payoff_concede(profile: TwoSidedProfile, t: float, player: int) -> float:
    """Strategic ``player``'s expected payoff from conceding at t."""
    return _payoffs.concede_value(profile.side(player), profile.side(3 - player), t)


def deviation_payoff_challenge(profile: TwoSidedProfile, t: float, player: int) -> float:
    """Strategic ``player``'s expected payoff from challenging at t."""
    return _payoffs.challenge_value(profile.side(player), profile.side(3 - player), t)


# ---------------------------------------------------------------------------
# Steady state and infinite-delay constructions
# ---------------------------------------------------------------------------

def steady_state_rates(game: TwoSidedGame):
    """Challenge rates holding both reputations constant at the thresholds.

    Solves ``0 = lam_i - (1 - theta_i) gamma_i + (1 - theta_i) chi_i`` for
    each player: ``chi_i = gamma_i - lam_i / (1 - theta_i)``, which must be
    positive for the absorbed state to exist.
    """
    d2 = derive_two_sided(game)
    chis = tuple(d2.gamma[i] - d2.lam[i] / (1.0 - d2.theta[i]) for i in (0, 1))
    if any(c <= 0.0 for c in chis):
        raise RegimeMismatch(
            f"steady challenge rates not positive: {chis!r} "
            "(threshold at or above the no-drift level)")
    return chis


@dataclass(frozen=True)
class InfiniteProfile:
    """Never-ending profile: decaying (type-1) or absorbing (type-2).

    ``chi_segments[i]`` lists ``(t0, t1, coef)`` with the strategic challenge
    density satisfying ``(1 - z_i) g_i(t) = coef * exp(-gamma_i t)`` on
    ``[t0, t1)``; closed forms for F/G follow from the Bayes identities.
    """

    game: TwoSidedGame
    d2: TwoSidedDerived
    kind: str
    Q: tuple
    x: tuple
    absorb_time: float  # inf for type-1
    u: tuple
    u_truncation_bound: float
    path: tuple = field(repr=False)
    chi_segments: tuple = field(repr=False)
    constant_players: tuple = ()

    @property
    def T(self) -> float:
        return math.inf

    def mu(self, player: int, t):
        p = self.path[player - 1]
        return p.values(t) if np.ndim(t) else p.value(float(t))

    def kappa(self, player: int, t):
        lam = self.d2.lam[player - 1]
        return lam / (1.0 - self.mu(player, t))

    def chi(self, player: int, t):
        """Strategic challenge hazard chi_i(t) (piecewise per segment)."""
        i = player - 1
        z = (self.game.z1, self.game.z2)[i]
        gam = self.d2.gamma[i]
        if np.ndim(t):
            t = np.asarray(t, dtype=float)
            dens = np.zeros_like(t)
            for t0, t1, coef in self.chi_segments[i]:
                m = (t >= t0) & (t < t1)
                dens[m] = coef * np.exp(-gam * t[m])
            alive = (1.0 - z) * self.alive(player, t)
            return np.where(alive > 0.0, dens / np.maximum(alive, 1e-300), 0.0)
        for t0, t1, coef in self.chi_segments[i]:
            if t0 <= t < t1:
                alive = self.alive(player, t)
                if alive <= 0.0:
                    return 0.0
                return coef * math.exp(-gam * t) / ((1.0 - z) * alive)
        return 0.0

    def alive(self, player: int, t):
        i = player - 1
        z = (self.game.z1, self.game.z2)[i]
        gam = self.d2.gamma[i]
        m = self.mu(player, t)
        return (z / (1.0 - z)) * math.exp(-gam * t) * (1.0 - m) / m \
            if not np.ndim(t) else \
            (z / (1.0 - z)) * np.exp(-gam * np.asarray(t, dtype=float)) \
            * (1.0 - m) / m

    def G(self, player: int, t: float) -> float:
        i = player - 1
        gam = self.d2.gamma[i]
        z = (self.game.z1, self.game.z2)[i]
        total = 0.0
        for t0, t1, coef in self.chi_segments[i]:
            hi = min(t, t1)
            if hi <= t0:
                continue
            total += coef * (math.exp(-gam * t0) - math.exp(-gam * hi)) / gam
        return total / (1.0 - z)

    def F(self, player: int, t: float) -> float:
        return 1.0 - self.G(player, t) - self.alive(player, t)

    def q(self, player: int, t: float) -> float:
        """Yield probability of ``player`` when challenged at t."""
        i = player - 1
        j = 1 - i
        c_j = (self.game.c1, self.game.c2)[j]
        w_j = (self.game.w1, self.game.w2)[j]
        m = self.mu(player, t)
        if m >= self.d2.theta[i]:
            return 1.0
        return (c_j / (1.0 - m) - w_j) / (1.0 - w_j)

    def side(self, player: int) -> "_payoffs.SideView":
        g, d2 = self.game, self.d2
        i = player - 1
        a = (g.a1, g.a2)[i]
        r = (g.r1, g.r2)[i]
        z = (g.z1, g.z2)[i]
        c = (g.c1, g.c2)[i]
        k = (g.k1, g.k2)[i]
        w = (g.w1, g.w2)[i]
        gam = d2.gamma[i]

        def fdens_scaled(t, i=i, z=z, gam=gam, player=player):
            if t <= 0.0:
                return 0.0
            return z * d2.lam[i] * math.exp(-gam * t) / self.mu(player, t)

        def gdens_scaled(t, i=i, gam=gam):
            if t <= 0.0:
                return 0.0
            for t0, t1, coef in self.chi_segments[i]:
                if t0 <= t < t1:
                    return coef * math.exp(-gam * t)
            return 0.0

        return _payoffs.SideView(
            a=a, r=r, z=z, gamma=gam, c=c, k=k, w=w,
            D=d2.D, T=math.inf, chal_stop=math.inf, Q0=self.Q[i],
            mu=lambda t: self.mu(player, t),
            F=lambda t: self.F(player, t),
            G=lambda t: self.G(player, t),
            q=lambda t: self.q(player, t),
            fdens_scaled=fdens_scaled, gdens_scaled=gdens_scaled,
        )

    def scalars(self) -> dict:
        return {
            "kind": self.kind, "Q1": self.Q[0], "Q2": self.Q[1],
            "x1": self.x[0], "x2": self.x[1],
            "absorb_time": self.absorb_time,
            "u1": self.u[0], "u2": self.u[1],
            "u_truncation_bound": self.u_truncation_bound,
            "theta1": self.d2.theta[0], "theta2": self.d2.theta[1],
        }


def _resolve_atom(game: TwoSidedGame, atom_choice):
    """Post-atom reputations from an (player, Q) atom choice."""
    player, Q = (None, 0.0) if atom_choice is None else atom_choice
    x = [game.z1, game.z2]
    Qs = [0.0, 0.0]
    if player is not None:
        if player not in (1, 2):
            raise ValueError(f"atom player must be 1 or 2, got {player!r}")
        x[player - 1] = _post_atom(x[player - 1], Q)
        Qs[player - 1] = Q
    return tuple(x), tuple(Qs)


def _infinite_payoffs(profile_sides) -> tuple:
    """Strategic payoffs by truncated quadrature of the concession value."""
    vals, bounds = [], []
    for me, opp in profile_sides:
        horizon = max(30.0 / me.r, 5.0)
        v = _payoffs.concede_value(me, opp, horizon)
        vals.append(v)
        bounds.append(math.exp(-me.r * horizon))
    return tuple(vals), max(bounds)


def _forward_infinite_paths(game: TwoSidedGame, d2: TwoSidedDerived, x: tuple):
    """Phase-aware decaying paths: player i challenges while mu_j < theta_j.

    Both reputations fall; a downward crossing of theta_j switches player
    i's dynamics from no-challenge to challenge form.  Returns the pair of
    paths plus each player's strategic-challenge activity segments.
    """
    th = d2.theta
    state = list(x)
    t_now = 0.0
    anchors = ([], [])
    chal_active = [state[1] < th[1], state[0] < th[0]]
    segs: tuple = ([], [])
    seg_open = [None, None]

    def dyn_of(i: int):
        return _chal(d2, i + 1) if chal_active[i] else _nochal(d2, i + 1)

    for i in (0, 1):
        anchors[i].append((t_now, state[i], dyn_of(i)))
        if chal_active[i]:
            seg_open[i] = t_now
    for _ in range(2):
        events = []
        for i in (0, 1):
            if state[i] > th[i]:
                try:
                    events.append((hitting_time(dyn_of(i), state[i], th[i]), i))
                except Unreachable:
                    pass
        if not events:
            break
        dt, i_evt = min(events)
        t_now += dt
        for i in (0, 1):
            state[i] = th[i] if i == i_evt else evolve(dyn_of(i), state[i], dt)
        j = 1 - i_evt
        if not chal_active[j]:
            chal_active[j] = True
            seg_open[j] = t_now
            anchors[j].append((t_now, state[j], dyn_of(j)))
        # the crossing player's own dynamics do not change at its crossing
    paths, segments = [], []
    for i in (0, 1):
        knots = tuple([0.0] + [a[0] for a in anchors[i][1:]])
        paths.append(PiecewisePath(knots=knots, anchors=tuple(anchors[i]),
                                   T=math.inf, terminal=0.0))
        z = (game.z1, game.z2)[i]
        gam = d2.gamma[i]
        nu = d2.nu_star[i]
        if seg_open[i] is not None and gam > 0.0:
            coef = z * gam * (1.0 - nu) / nu
            segments.append(((seg_open[i], math.inf, coef),))
        else:
            segments.append(())
    return tuple(paths), tuple(segments)


def construct_type1(game: TwoSidedGame, atom_choice=None) -> InfiniteProfile:
    """Ever-decaying profile: reputations fall toward zero, never reaching it.

    The post-atom prior must lie at or below the challenge-phase stationary
    level for both players; exact equality pins that player's reputation to
    the constant boundary line (steady by the phase dynamics' fixed point).
    """
    d2 = derive_two_sided(game)
    if any(g == 0.0 or ph is None or ph <= 0.0
           for g, ph in zip(d2.gamma, d2.phi_star)):
        raise RegimeMismatch("type-1 profiles need fast arrival for both players")
    x, Qs = _resolve_atom(game, atom_choice)
    asym = (d2.asymptote(1), d2.asymptote(2))
    for i in (0, 1):
        if x[i] > asym[i] * (1.0 + 1e-15):
            raise AtomOutOfRange(
                f"post-atom reputation {x[i]!r} of player {i + 1} exceeds "
                f"the decay region boundary {asym[i]!r}")
    # A player sitting exactly on the decay boundary stays constant (the
    # boundary is the challenge-phase fixed point) provided it is in the
    # challenge phase from the start, i.e. the opponent begins below the
    # opponent-side threshold; otherwise the path simply decays.
    constant = tuple(i + 1 for i in (0, 1)
                     if abs(x[i] - asym[i]) <= _LOCUS_TOL * asym[i]
                     and x[1 - i] < d2.theta[1 - i])
    paths, segments = _forward_infinite_paths(game, d2, x)
    prof = InfiniteProfile(game=game, d2=d2, kind="type1", Q=Qs, x=x,
                           absorb_time=math.inf, u=(0.0, 0.0),
                           u_truncation_bound=0.0, path=paths,
                           chi_segments=segments, constant_players=constant)
    sides = ((prof.side(1), prof.side(2)), (prof.side(2), prof.side(1)))
    u, bound = _infinite_payoffs(sides)
    object.__setattr__(prof, "u", u)
    object.__setattr__(prof, "u_truncation_bound", bound)
    return prof


def construct_type2(game: TwoSidedGame, atom_choice=None) -> InfiniteProfile:
    """Absorbing profile: both reputations reach the thresholds and stay.

    The post-atom prior must lie on the locus of points whose phase flows
    hit ``(theta1, theta2)`` simultaneously (either both from below under
    challenge dynamics, or both from above under no-challenge dynamics);
    afterward both players challenge at the steady rates.
    """
    d2 = derive_two_sided(game)
    if any(g == 0.0 or ph is None or ph <= 0.0
           for g, ph in zip(d2.gamma, d2.phi_star)):
        raise RegimeMismatch("type-2 profiles need fast arrival for both players")
    chis = steady_state_rates(game)  # RegimeMismatch when not positive
    th = d2.theta
    x, Qs = _resolve_atom(game, atom_choice)

    at_theta = all(abs(x[i] - th[i]) <= _LOCUS_TOL for i in (0, 1))
    if at_theta:
        t_abs = 0.0
        dyns = None
    else:
        if all(x[i] < th[i] for i in (0, 1)):
            above = False
            if not all(x[i] > d2.asymptote(i + 1) for i in (0, 1)):
                raise AtomOutOfRange(
                    "below-threshold approach needs reputations above the "
                    "decay boundaries")
        elif all(th[i] < x[i] < d2.phi_star[i] for i in (0, 1)):
            above = True
        else:
            raise AtomOutOfRange(
                f"post-atom pair {x!r} is not on an approach branch to "
                f"the absorbing point {th!r}")
        dyns = _type2_branch_dynamics(d2, above)
        try:
            t1 = hitting_time(dyns[0], x[0], th[0])
            t2 = hitting_time(dyns[1], x[1], th[1])
        except Unreachable as e:
            raise AtomOutOfRange(f"thresholds unreachable from {x!r}") from e
        if abs(t1 - t2) > _LOCUS_TOL * max(1.0, t1, t2):
            raise AtomOutOfRange(
                f"post-atom pair {x!r} misses the absorbing locus: arrival "
                f"times {(t1, t2)!r} differ")
        t_abs = 0.5 * (t1 + t2)

    paths, segments = [], []
    for i in (0, 1):
        z = (game.z1, game.z2)[i]
        gam = d2.gamma[i]
        nu = d2.nu_star[i]
        if t_abs > 0.0:
            knots = (0.0, t_abs)
            anchors = ((t_abs, th[i], dyns[i]),
                       (t_abs, th[i], BernoulliDynamics(0.0, 0.0)))
        else:
            knots = (0.0,)
            anchors = ((0.0, th[i], BernoulliDynamics(0.0, 0.0)),)
        paths.append(PiecewisePath(knots=knots, anchors=anchors,
                                   T=math.inf, terminal=th[i]))
        segs = []
        if t_abs > 0.0 and (dyns is not None and dyns[i].B != gam):
            # Below-threshold approach: both challenge at the posterior-
            # preserving rate until absorption.
            coef = z * gam * (1.0 - nu) / nu
            segs.append((0.0, t_abs, coef))
        segs.append((t_abs, math.inf, chis[i] * z * (1.0 - th[i]) / th[i]))
        segments.append(tuple(segs))
    paths = tuple(paths)
    segments = tuple(segments)

    prof = InfiniteProfile(game=game, d2=d2, kind="type2", Q=Qs, x=x,
                           absorb_time=t_abs, u=(0.0, 0.0),
                           u_truncation_bound=0.0, path=paths,
                           chi_segments=segments)
    sides = ((prof.side(1), prof.side(2)), (prof.side(2), prof.side(1)))
    u, bound = _infinite_payoffs(sides)
    object.__setattr__(prof, "u", u)
    object.__setattr__(prof, "u_truncation_bound", bound)
    return prof
