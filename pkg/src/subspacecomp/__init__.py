"""Linear computation of subspaces of correlated sources over prime fields."""

from .chain import SubspaceChain, decompose, decompose_independent
from .errors import BudgetError, ConsistencyError, InputError, SubspaceCompError
from .falg import Subspace, span
from .kernels import BACKEND
from .rates import RateReport, TargetSpec, rate_cc, rate_nc, rate_report, rate_ss, rate_sw
from .sim import SimConfig, SimResult, simulate_cc, simulate_cc_side_info, simulate_nested, rate_sweep
from .source import FamilySpec, JointDist, load_distribution, make_family, save_distribution

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BudgetError", "ConsistencyError", "FamilySpec", "InputError", "JointDist",
    "RateReport", "SimConfig", "SimResult", "Subspace", "SubspaceChain", "SubspaceCompError",
    "TargetSpec", "decompose", "decompose_independent", "load_distribution", "make_family",
    "rate_cc", "rate_nc", "rate_report", "rate_ss", "rate_sw", "rate_sweep", "save_distribution",
    "simulate_cc", "simulate_cc_side_info", "simulate_nested", "span",
]
