"""Equilibrium solvers and simulation tools for reputational bargaining with
ultimatum opportunities."""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    InvalidGame,
    OneSidedGame,
    TwoSidedGame,
    MultiDemandGame,
    Derived,
    TwoSidedDerived,
    derive,
    derive_two_sided,
    parse_game,
    game_to_dict,
)
from .bernoulli import (  # noqa: F401
    BernoulliDynamics,
    Blowup,
    Unreachable,
    evolve,
    hitting_time,
)
from .onesided import (  # noqa: F401
    CoevolutionCurve,
    coevolution_curve,
    initial_atoms,
    solve,
    EquilibriumProfile,
    hazard_schedule,
)
