"""Iterative methods with oracle accounting and trace logging."""
from .agls import AGLSStats, ProxQuadratic, agls, agls_minimize, unconstrained
from .baselines import normalized_gd, subgradient_method
from .config import ALGOS, STEPSIZE_GRID, Heuristics, InnerCriterion, SolverConfig
from .sipp import ProximalSubproblem, adapt_subproblem_heuristics, agls_sipp, asgd_T_k, asgd_inner, sipp
from .sspg import sspg, sspg_stepsize
from .trace import TRACE_COLUMNS, Trace
