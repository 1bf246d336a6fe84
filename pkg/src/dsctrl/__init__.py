"""Direct-search (restarted Nelder-Mead) design of fixed-structure controllers."""

from .engine import NmConfig, RestartConfig, nm_run, restarted_nm
from .lti import (ClosedLoopSystem, StateSpaceModel, close_loop, h2_norm, hinf_norm,
                  spectral_abscissa)
from .objective import WORST
from .shaping import Envelope, PidParams, optimize_shaping, shaping_objective
from .sof import Kind, SofProblem, solve_sof

__version__ = "0.1.0"

__all__ = [
    "NmConfig", "RestartConfig", "nm_run", "restarted_nm",
    "ClosedLoopSystem", "StateSpaceModel", "close_loop", "h2_norm", "hinf_norm",
    "spectral_abscissa", "WORST",
    "Envelope", "PidParams", "optimize_shaping", "shaping_objective",
    "Kind", "SofProblem", "solve_sof",
]
