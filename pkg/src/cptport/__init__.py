"""Cumulative prospect theory portfolio optimization."""
from .cc import cc_optimize, cc_step, f_ccv, f_cvx, linearize_f_cvx
from .constraints import ConstraintSet, is_feasible, project
from .core import (
    DEFAULT_PARAMS,
    CptParams,
    DecisionWeights,
    ReturnsMatrix,
    SortContext,
    cpt_supergradient,
    cpt_utility,
    cpt_utility_batch,
    decision_weights,
    dot_sort,
    pt_value,
    sort_returns,
    weight_fn,
)
from .data import dirichlet_starts, fit_gmm, load_returns_csv, sample_gmm, write_returns_csv
from .frontier import estimate_moments, frontier, mv_heuristic, solve_mv
from .ga import ga_optimize, ga_softmax_optimize
from .mm import build_minorant, maximize_minorant, mm_optimize
from .oracle import grid_search
from .report import SolveReport, StartRecord

__version__ = "0.1.0"
