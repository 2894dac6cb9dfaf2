from typing import Optional

from ..dae.model import DaeModel, as_model
from ..dae.state import PartitionedState
from ..exceptions import NotFixedPoint
from ..netmodel.specs import SystemSpec
from ..solvers.equilibrium import solve_long_term_equilibrium
from ..solvers.newton import NewtonConfig


def find_long_term_sep(
    sys: "DaeModel | SystemSpec",
    guess: PartitionedState,
    cfg: Optional[NewtonConfig] = None,
) -> PartitionedState:
    """
    Equilibrium of h_c = f = g = 0 at the guess's z_d.

    Raises NewtonFailure when the solve fails and NotFixedPoint when a
    discrete device would still act at the solution.
    """
    model = as_model(sys)
    sep = solve_long_term_equilibrium(model, guess, cfg)
    pending = model.pending_actions(sep)
    if pending:
        raise NotFixedPoint("; ".join(pending))
    return sep
