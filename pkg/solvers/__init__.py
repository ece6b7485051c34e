"""Solveurs: simplexe borné et problème maître (RMP, Master-MIP)."""
from .master import (
    DualVector,
    MasterProblem,
    MipSolution,
    SideConstraint,
    build_rmp,
    default_penalties,
    fairness_budget_constraint,
    linearize_f1_constraint,
    linearize_precision_constraint,
    reduced_cost,
    solve_master_mip,
)
from .simplex import LinearProgram, LpBasis, LpSolution, format_lp, shift_basis, solve_lp

__all__ = [
    'DualVector',
    'LinearProgram',
    'LpBasis',
    'LpSolution',
    'MasterProblem',
    'MipSolution',
    'SideConstraint',
    'build_rmp',
    'default_penalties',
    'fairness_budget_constraint',
    'format_lp',
    'linearize_f1_constraint',
    'linearize_precision_constraint',
    'reduced_cost',
    'shift_basis',
    'solve_lp',
    'solve_master_mip',
]
