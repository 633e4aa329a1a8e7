"""Game primitives, derived constants, validation, and JSON (de)serialization.

This module is the single source of truth for every model constant used
elsewhere: the disagreement amount ``D``, the war-of-attrition concession
hazards ``lambda_i``, and the challenge-phase thresholds.  All containers are
frozen dataclasses, so instances are immutable and safe to share across
threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

__all__ = [
    "InvalidGame",
    "OneSidedGame",
    "TwoSidedGame",
    "MultiDemandGame",
    "Derived",
    "TwoSidedDerived",
    "derive",
    "derive_two_sided",
    "derive_for_demands",
    "parse_game",
    "game_to_dict",
    "SCHEMA_TAG",
]

SCHEMA_TAG = "attrition-lab/v1"


class InvalidGame(ValueError):
    """A game primitive violates one of the model's maintained inequalities."""

    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(reason)


def _check(cond: bool, reason: str):
    if not cond:
        raise InvalidGame(reason)


def _check_share(name: str, v: float):
    _check(isinstance(v, (int, float)) and math.isfinite(v), f"{name} must be a finite number")
    _check(0.0 < v < 1.0, f"{name} must lie in (0,1), got {v!r}")


def _check_prob(name: str, v: float):
    _check(isinstance(v, (int, float)) and math.isfinite(v), f"{name} must be a finite number")
    _check(0.0 < v < 1.0, f"{name} must lie in (0,1), got {v!r}")


def _check_rate(name: str, v: float, strict: bool = True):
    _check(isinstance(v, (int, float)) and math.isfinite(v), f"{name} must be a finite number")
    if strict:
        _check(v > 0.0, f"{name} must be > 0, got {v!r}")
    else:
        _check(v >= 0.0, f"{name} must be >= 0, got {v!r}")


@dataclass(frozen=True)
class OneSidedGame:
    """One-sided-ultimatum game with a single justified demand per player.

    Demands ``a1, a2`` are shares of a unit pie, ``z1, z2`` prior justified
    probabilities, ``r1, r2`` discount rates, ``gamma1`` the justified
    challenger's opportunity arrival rate, ``c1``/``k2`` the challenge/seeing
    costs as fractions of the disagreement amount ``D = a1 + a2 - 1``, and
    ``w1`` the probability an unjustified challenger wins in court against an
    unjustified defender.
    """

    a1: float
    a2: float
    z1: float
    z2: float
    r1: float
    r2: float
    gamma1: float
    c1: float
    k2: float
    w1: float

    def __post_init__(self):
        _check_share("a1", self.a1)
        _check_share("a2", self.a2)
        _check(self.a1 + self.a2 > 1.0,
               f"demands must be incompatible: a1 + a2 > 1 (D > 0), got {self.a1 + self.a2!r}")
        _check_prob("z1", self.z1)
        _check_prob("z2", self.z2)
        _check_rate("r1", self.r1)
        _check_rate("r2", self.r2)
        _check_rate("gamma1", self.gamma1, strict=False)
        _check(isinstance(self.w1, (int, float)) and 0.0 <= self.w1 < 1.0,
               f"w1 must lie in [0,1), got {self.w1!r}")
        _check(self.w1 < self.c1 < 1.0,
               f"need w1 < c1 < 1, got w1={self.w1!r}, c1={self.c1!r}")
        _check(0.0 < self.k2 < 1.0 - self.w1,
               f"need 0 < k2 < 1 - w1, got k2={self.k2!r}, 1-w1={1.0 - self.w1!r}")


@dataclass(frozen=True)
class TwoSidedGame:
    """Two-sided-ultimatum game; both players may challenge."""

    a1: float
    a2: float
    z1: float
    z2: float
    r1: float
    r2: float
    gamma1: float
    gamma2: float
    c1: float
    c2: float
    k1: float
    k2: float
    w1: float
    w2: float

    def __post_init__(self):
        _check_share("a1", self.a1)
        _check_share("a2", self.a2)
        _check(self.a1 + self.a2 > 1.0,
               f"demands must be incompatible: a1 + a2 > 1 (D > 0), got {self.a1 + self.a2!r}")
        _check_prob("z1", self.z1)
        _check_prob("z2", self.z2)
        _check_rate("r1", self.r1)
        _check_rate("r2", self.r2)
        _check_rate("gamma1", self.gamma1, strict=False)
        _check_rate("gamma2", self.gamma2, strict=False)
        for i, (w, c, k) in ((1, (self.w1, self.c1, self.k1)),
                             (2, (self.w2, self.c2, self.k2))):
            _check(0.0 <= w < 1.0, f"w{i} must lie in [0,1), got {w!r}")
            _check(w < c < 1.0, f"need w{i} < c{i} < 1, got w{i}={w!r}, c{i}={c!r}")
            _check(0.0 < k < 1.0 - w,
                   f"need 0 < k{i} < 1 - w{i}, got k{i}={k!r}, 1-w{i}={1.0 - w!r}")

    def player(self, i: int) -> dict:
        """Primitives of player ``i`` as a dict with keys a, z, r, gamma, c, k, w."""
        s = str(i)
        return {name: getattr(self, name + s) for name in ("a", "z", "r", "gamma", "c", "k", "w")}


@dataclass(frozen=True)
class MultiDemandGame:
    """One-sided-ultimatum game with finite grids of justified demands."""

    A1: tuple
    A2: tuple
    pi1: tuple
    pi2: tuple
    z1: float
    z2: float
    r1: float
    r2: float
    gamma1: float
    c1: float
    k2: float
    w1: float

    def __post_init__(self):
        object.__setattr__(self, "A1", tuple(float(a) for a in self.A1))
        object.__setattr__(self, "A2", tuple(float(a) for a in self.A2))
        object.__setattr__(self, "pi1", tuple(float(p) for p in self.pi1))
        object.__setattr__(self, "pi2", tuple(float(p) for p in self.pi2))
        for side, grid in (("A1", self.A1), ("A2", self.A2)):
            _check(len(grid) >= 1, f"{side} must be nonempty")
            for a in grid:
                _check_share(f"{side} entry", a)
            _check(all(b > a for a, b in zip(grid, grid[1:])),
                   f"{side} must be strictly increasing")
        _check(max(self.A1) + min(self.A2) > 1.0,
               "max A1 + min A2 must exceed 1 (maximal demand incompatible)")
        _check(max(self.A2) + min(self.A1) > 1.0,
               "max A2 + min A1 must exceed 1 (maximal demand incompatible)")
        for side, grid, pi in (("pi1", self.A1, self.pi1), ("pi2", self.A2, self.pi2)):
            _check(len(pi) == len(grid), f"{side} must have one entry per demand")
            _check(all(p > 0.0 for p in pi), f"{side} entries must be strictly positive")
            _check(abs(sum(pi) - 1.0) <= 1e-12, f"{side} must sum to 1 within 1e-12")
        _check_prob("z1", self.z1)
        _check_prob("z2", self.z2)
        _check_rate("r1", self.r1)
        _check_rate("r2", self.r2)
        _check_rate("gamma1", self.gamma1, strict=False)
        _check(0.0 <= self.w1 < 1.0, f"w1 must lie in [0,1), got {self.w1!r}")
        _check(self.w1 < self.c1 < 1.0,
               f"need w1 < c1 < 1, got w1={self.w1!r}, c1={self.c1!r}")
        _check(0.0 < self.k2 < 1.0 - self.w1,
               f"need 0 < k2 < 1 - w1, got k2={self.k2!r}, 1-w1={1.0 - self.w1!r}")

    def single_demand_game(self, a1: float, a2: float, z1: float, z2: float) -> OneSidedGame:
        """The single-demand continuation game after demands are announced."""
        return OneSidedGame(a1=a1, a2=a2, z1=z1, z2=z2, r1=self.r1, r2=self.r2,
                            gamma1=self.gamma1, c1=self.c1, k2=self.k2, w1=self.w1)


@dataclass(frozen=True)
class Derived:
    """Constants implied by a one-sided game.

    ``phi1_star`` is None when ``gamma1 == 0`` (the challenge machinery is
    inert, not NaN); every other field is always defined.
    """

    D: float
    lambda1: float
    lambda2: float
    mu2_star: float
    nu1_star: float
    phi1_star: float | None
    mu1_N: float
    gamma1: float = field(repr=False)

    @property
    def has_challenge(self) -> bool:
        return self.gamma1 > 0.0

    @property
    def asymptote(self) -> float:
        """Left end of the coevolution-curve domain: max(0, phi1_star * nu1_star)."""
        if self.phi1_star is None:
            return 0.0
        return max(0.0, self.phi1_star * self.nu1_star)


@dataclass(frozen=True)
class TwoSidedDerived:
    """Per-player constants of a two-sided game.

    ``theta[i]`` is the threshold on player i's reputation above which the
    *opponent* stops challenging (``theta_i = 1 - c_j``); ``nu_star[i]`` the
    posterior attached to a challenge by i; ``phi_star[i]`` the level below
    which i's no-challenge reputation drifts down (None when ``gamma_i = 0``).
    Tuples are indexed so that entry 0 is player 1.
    """

    D: float
    lam: tuple
    gamma: tuple
    theta: tuple
    nu_star: tuple
    phi_star: tuple

    def asymptote(self, i: int) -> float:
        phi = self.phi_star[i - 1]
        if phi is None:
            return 0.0
        return max(0.0, phi * self.nu_star[i - 1])


def _mu1_N(lam1: float, lam2: float, gamma1: float, mu2_star: float, nu1_star: float) -> float:
    """Player 1's reputation where challenging stops, from the curve formula."""
    if gamma1 == 0.0:
        return mu2_star ** (lam1 / lam2)
    if abs(gamma1 - lam1) < 1e-9 * max(gamma1, lam1):
        return 1.0 / (1.0 - (gamma1 / lam2) * math.log(mu2_star))
    return (lam1 - gamma1) / (lam1 * mu2_star ** ((gamma1 - lam1) / lam2) - gamma1)


def derive(game: OneSidedGame) -> Derived:
    """Compute all derived constants of a one-sided game (pure function)."""
    D = game.a1 + game.a2 - 1.0
    lam1 = game.r2 * (1.0 - game.a1) / D
    lam2 = game.r1 * (1.0 - game.a2) / D
    mu2_star = 1.0 - game.c1
    nu1_star = 1.0 - game.k2 / (1.0 - game.w1)
    phi1_star = None if game.gamma1 == 0.0 else 1.0 - lam1 / game.gamma1
    mu1_N = _mu1_N(lam1, lam2, game.gamma1, mu2_star, nu1_star)
    return Derived(D=D, lambda1=lam1, lambda2=lam2, mu2_star=mu2_star,
                   nu1_star=nu1_star, phi1_star=phi1_star, mu1_N=mu1_N,
                   gamma1=game.gamma1)


def derive_for_demands(game, a1: float, a2: float) -> Derived:
    """Derived constants for a demand pair, with rates/costs taken from ``game``.

    Used by the multi-demand solver, where the same priors combine with many
    demand pairs.  Requires ``a1 + a2 > 1``.
    """
    if a1 + a2 <= 1.0:
        raise InvalidGame(f"demand pair ({a1!r}, {a2!r}) is compatible; D <= 0")
    D = a1 + a2 - 1.0
    lam1 = game.r2 * (1.0 - a1) / D
    lam2 = game.r1 * (1.0 - a2) / D
    mu2_star = 1.0 - game.c1
    nu1_star = 1.0 - game.k2 / (1.0 - game.w1)
    phi1_star = None if game.gamma1 == 0.0 else 1.0 - lam1 / game.gamma1
    return Derived(D=D, lambda1=lam1, lambda2=lam2, mu2_star=mu2_star,
                   nu1_star=nu1_star,
                   phi1_star=phi1_star,
                   mu1_N=_mu1_N(lam1, lam2, game.gamma1, mu2_star, nu1_star),
                   gamma1=game.gamma1)


def derive_two_sided(game: TwoSidedGame) -> TwoSidedDerived:
    """Per-player derived constants of a two-sided game."""
    D = game.a1 + game.a2 - 1.0
    lam = (game.r2 * (1.0 - game.a1) / D, game.r1 * (1.0 - game.a2) / D)
    gamma = (game.gamma1, game.gamma2)
    theta = (1.0 - game.c2, 1.0 - game.c1)
    nu_star = (1.0 - game.k2 / (1.0 - game.w1), 1.0 - game.k1 / (1.0 - game.w2))
    phi_star = tuple(None if g == 0.0 else 1.0 - l / g for l, g in zip(lam, gamma))
    return TwoSidedDerived(D=D, lam=lam, gamma=gamma, theta=theta,
                           nu_star=nu_star, phi_star=phi_star)


# ---------------------------------------------------------------------------
# JSON interface
# ---------------------------------------------------------------------------

_ONE_SIDED_FIELDS = {f.name for f in fields(OneSidedGame)}
_TWO_SIDED_FIELDS = {f.name for f in fields(TwoSidedGame)}
_MULTI_FIELDS = {f.name for f in fields(MultiDemandGame)}


def parse_game(doc: dict):
    """Build a game from a JSON document.

    The document must carry ``schema: "attrition-lab/v1"`` and exactly the
    field names of one of the three game types; unknown fields are rejected.
    The game kind is dispatched on the field set (the three sets are disjoint
    discriminators: ``gamma2`` implies two-sided, ``A1`` implies multi-demand).
    """
    if not isinstance(doc, dict):
        raise InvalidGame("game document must be a JSON object")
    if doc.get("schema") != SCHEMA_TAG:
        raise InvalidGame(f"missing or unsupported schema tag; expected {SCHEMA_TAG!r}")
    body = {k: v for k, v in doc.items() if k != "schema"}
    keys = set(body)
    if "gamma2" in keys:
        cls, expected = TwoSidedGame, _TWO_SIDED_FIELDS
    elif "A1" in keys or "pi1" in keys:
        cls, expected = MultiDemandGame, _MULTI_FIELDS
    else:
        cls, expected = OneSidedGame, _ONE_SIDED_FIELDS
    unknown = keys - expected
    if unknown:
        raise InvalidGame(f"unknown fields for {cls.__name__}: {sorted(unknown)}")
    missing = expected - keys
    if missing:
        raise InvalidGame(f"missing fields for {cls.__name__}: {sorted(missing)}")
    return cls(**body)


def game_to_dict(game) -> dict:
    """Serialize a game back to its JSON document form (with schema tag)."""
    out = {"schema": SCHEMA_TAG}
    for f in fields(game):
        v = getattr(game, f.name)
        out[f.name] = list(v) if isinstance(v, tuple) else v
    return out
