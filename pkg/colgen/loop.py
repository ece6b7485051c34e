"""Boucle de génération de colonnes: RMP, duaux, pricing KSP, puis Master-MIP."""
import logging
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from colgen.pricing import CgConfig, ksp
from graph.feature_graph import FeatureGraph, settings_with_graph
from graph.rules import RuleSettings
from preprocessing.dataset import BinnedDataset
from solvers.master import (
    DualVector,
    MasterProblem,
    MipSolution,
    SideConstraint,
    build_rmp,
    default_penalties,
    reduced_cost,
    solve_master_mip,
)
from solvers.simplex import LpBasis, LpSolution, shift_basis, solve_lp
from utils.errors import SolverError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class IterationLog:
    iteration: int
    rmp_objective: float
    min_rc: Optional[float]
    cols_added: int
    pool_size: int
    elapsed_ms: int

    def line(self) -> str:
        min_rc = "none" if self.min_rc is None else f"{self.min_rc:.6g}"
        return (
            f"iter={self.iteration} rmp_obj={self.rmp_objective:.6g} min_rc={min_rc} "
            f"cols_added={self.cols_added} pool_size={self.pool_size} elapsed_ms={self.elapsed_ms}"
        )


@dataclass
class CgReport:
    iterations_run: int
    columns_generated: int
    nu_lp: float
    nu_ip: float
    gap: float
    converged_by: str
    per_iteration_log: List[IterationLog] = field(default_factory=list)
    solution: Optional[MipSolution] = None
    final_duals: Optional[DualVector] = None
    elapsed_s: float = 0.0


def _solve_rmp(mp: MasterProblem, basis: Optional[LpBasis]) -> LpSolution:
    solution = solve_lp(build_rmp(mp), warm_start=basis)
    if solution.status != "optimal":
        raise SolverError(
            f"RMP non résolu ({solution.status}) avec {len(mp.pool)} colonnes après {solution.iterations} pivots"
        )
    return solution


def _stalled(objectives: Sequence[float], window: int, tolerance: float) -> bool:
    if len(objectives) <= window:
        return False
    return objectives[-window - 1] - objectives[-1] < tolerance


def run_cg(
    graph: FeatureGraph,
    dataset: BinnedDataset,
    config: CgConfig,
    settings: RuleSettings,
    side_constraints: Sequence[SideConstraint] = (),
    penalties: Optional[np.ndarray] = None,
) -> Tuple[MasterProblem, CgReport]:
    """
    Génération de colonnes à partir d'un pool vide, puis Master-MIP sur le pool final.

    Arrêt: plus de coût réduit < −dual_tolerance (dual_feasible), objectif stagnant sur
    la fenêtre (stalled), limite d'itérations, pool plein (column_limit) ou budget de
    temps épuisé (time_limit, vérifié avant la RMP et après le pricing). Le
    Master-MIP reçoit le temps restant, au moins min_mip_time.
    """
    started = time.monotonic()
    settings = settings_with_graph(settings, graph)
    if penalties is None:
        penalties = default_penalties(dataset, settings.metric)
    mp = MasterProblem(dataset.n_samples, penalties, config.leaf_budget, side_constraints, config.max_columns)

    history: List[IterationLog] = []
    objectives: List[float] = []
    basis: Optional[LpBasis] = None
    solution: Optional[LpSolution] = None
    converged_by = "iteration_limit"
    pool_changed = True
    generated = 0

    for iteration in range(1, config.max_iterations + 1):
        if time.monotonic() - started > config.time_limit:
            converged_by = "time_limit"
            break
        solution = _solve_rmp(mp, basis)
        pool_changed = False
        objectives.append(solution.objective_value)
        duals = DualVector.from_duals(solution.duals, dataset.n_samples)

        priced = ksp(graph, dataset, duals, config, settings, side_constraints, exclude=mp.signatures)
        min_rc = reduced_cost(priced[0], duals, side_constraints) if priced else None
        insert_at = len(mp.pool)
        added = mp.add_rules(priced)
        generated += added
        if added:
            basis = shift_basis(solution.basis, insert_at, added)
            pool_changed = True

        entry = IterationLog(
            iteration=iteration,
            rmp_objective=solution.objective_value,
            min_rc=min_rc,
            cols_added=added,
            pool_size=len(mp.pool),
            elapsed_ms=int((time.monotonic() - started) * 1000),
        )
        history.append(entry)
        logger.info(f"🔁 {entry.line()}")

        if not priced:
            converged_by = "dual_feasible"
            break
        if time.monotonic() - started > config.time_limit:
            converged_by = "time_limit"
            break
        if mp.is_full:
            converged_by = "column_limit"
            break
        if _stalled(objectives, config.stall_window, config.stall_tolerance):
            converged_by = "stalled"
            break

    # ν_LP doit porter sur le pool transmis au Master-MIP
    if solution is None or pool_changed:
        solution = _solve_rmp(mp, basis)
    nu_lp = solution.objective_value

    remaining = max(config.min_mip_time, config.time_limit - (time.monotonic() - started))
    mip = solve_master_mip(mp, time_limit=remaining)
    nu_ip = mip.objective
    gap = max(0.0, (nu_ip - nu_lp) / nu_ip) if nu_ip > 1e-12 else 0.0

    report = CgReport(
        iterations_run=len(history),
        columns_generated=generated,
        nu_lp=nu_lp,
        nu_ip=nu_ip,
        gap=gap,
        converged_by=converged_by,
        per_iteration_log=history,
        solution=mip,
        final_duals=DualVector.from_duals(solution.duals, dataset.n_samples),
        elapsed_s=time.monotonic() - started,
    )
    logger.info(
        f"✅ CG terminée ({converged_by}): {report.iterations_run} itérations, {len(mp.pool)} colonnes, "
        f"ν_LP={nu_lp:.6g} ν_IP={nu_ip:.6g} Δ={gap:.4%}"
    )
    return mp, report
