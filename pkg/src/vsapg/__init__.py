"""Variable smoothing alternating proximal gradient for coupled composite problems."""

from .linops import DenseMap, Gradient2D, Identity, LinearMap
from .functions import (CompositeProblem, L1, MCP, PenaltyGrad, PenaltyXY,
                        QuadraticDataFit, QuadraticTether, SmoothCoupling,
                        ZeroFunction, ZeroTerm, mcp_prox, mcp_value)
from .moreau import SmoothedTerm, SmoothingSchedule
from .report import RunReport, StoppingRule
from .solver import (InfeasibleParameters, VsaPGParams, complexity_certificate,
                     validate)
from .solver import run as run_vsapg

__version__ = "0.1.0"
