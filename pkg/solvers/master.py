"""
Problème maître OMT: RMP (relaxation LP sur le pool de règles), coûts réduits,
contraintes latérales linéarisées et Master-MIP par séparation et évaluation.
"""
import heapq
import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np
import scipy.sparse as sp

from config import BB_NODE_LIMIT, DEFAULT_MAX_COLUMNS, DEFAULT_TIME_LIMIT_S, PENALTY_FACTOR
from graph.rules import Rule
from preprocessing.dataset import BinnedDataset
from solvers.simplex import LinearProgram, LpBasis, LpSolution, solve_lp
from utils.errors import ConfigError, SolverError

logger = logging.getLogger(__name__)

INTEGRALITY_TOL = 1e-6
PRUNE_TOL = 1e-9


@dataclass(frozen=True)
class SideConstraint:
    """Ligne latérale Σ_j ρ(règle_j) z_j (sens) q; ρ est recalculé pour chaque nouvelle colonne."""

    name: str
    coefficient: Callable[[Rule], float]
    sense: str
    rhs: float

    def __post_init__(self):
        if self.sense not in ("<=", ">="):
            raise ValueError(f"Sens invalide pour {self.name}: {self.sense}")

    def row(self, pool: Sequence[Rule]) -> np.ndarray:
        return np.array([self.coefficient(rule) for rule in pool], dtype=float)

    def satisfied_by(self, value: float, tol: float = 1e-9) -> bool:
        if self.sense == "<=":
            return value <= self.rhs + tol
        return value >= self.rhs - tol


@dataclass(frozen=True)
class DualVector:
    lam: np.ndarray
    mu: float
    tau: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @classmethod
    def from_duals(cls, duals: np.ndarray, n_samples: int) -> "DualVector":
        """Découpe les duaux du RMP: couverture, cardinalité, lignes latérales."""
        return cls(lam=duals[:n_samples].copy(), mu=float(duals[n_samples]), tau=duals[n_samples + 1:].copy())

    @classmethod
    def slack_basis(cls, penalties: np.ndarray, n_side: int = 0) -> "DualVector":
        return cls(lam=np.asarray(penalties, dtype=float).copy(), mu=0.0, tau=np.zeros(n_side))


@dataclass
class MipSolution:
    selected: List[int]
    slack_samples: List[int]
    objective: float
    bound: float
    gap: float
    status: str = "optimal"
    nodes: int = 0


class MasterProblem:
    """
    Pool de règles L̂ et données du maître.

    Args:
        n_samples: nombre N d'échantillons d'entraînement
        penalties: pénalités c_i > 0 des variables d'écart
        leaf_budget: nombre maximal l de règles actives
        side_constraints: lignes latérales (F1, précision, budget d'équité)
        max_columns: taille maximale du pool
    """

    def __init__(
        self,
        n_samples: int,
        penalties: np.ndarray,
        leaf_budget: int,
        side_constraints: Sequence[SideConstraint] = (),
        max_columns: int = DEFAULT_MAX_COLUMNS,
    ):
        penalties = np.asarray(penalties, dtype=float)
        if penalties.shape != (n_samples,) or np.any(penalties <= 0):
            raise ConfigError("Une pénalité c_i > 0 par échantillon est requise")
        if leaf_budget < 1:
            raise ConfigError(f"Budget de feuilles invalide: {leaf_budget}")
        self.n_samples = n_samples
        self.penalties = penalties
        self.leaf_budget = int(leaf_budget)
        self.side_constraints = list(side_constraints)
        self.max_columns = int(max_columns)
        self.pool: List[Rule] = []
        self._signatures: Set[Tuple] = set()

    @property
    def is_full(self) -> bool:
        return len(self.pool) >= self.max_columns

    @property
    def signatures(self) -> Set[Tuple]:
        return self._signatures

    def contains(self, rule: Rule) -> bool:
        return rule.signature in self._signatures

    def add_rules(self, rules: Iterable[Rule]) -> int:
        """Ajoute les règles inédites (par signature) jusqu'à la limite du pool; retourne le nombre ajouté."""
        added = 0
        for rule in rules:
            if self.is_full:
                break
            if rule.signature in self._signatures:
                continue
            self._signatures.add(rule.signature)
            self.pool.append(rule)
            added += 1
        return added

    def objective_of(self, selected: Sequence[int]) -> Tuple[float, List[int]]:
        """Objectif d'une sélection entière et échantillons laissés en écart."""
        covered = np.zeros(self.n_samples, dtype=np.int64)
        for j in selected:
            covered[self.pool[j].cover] += 1
        slack = np.flatnonzero(covered == 0)
        value = float(sum(self.pool[j].loss for j in selected) + self.penalties[slack].sum())
        return value, slack.tolist()


# ============================================================================
# RMP ET COÛTS RÉDUITS
# ============================================================================

def build_rmp(
    mp: MasterProblem,
    z_bounds: Optional[Sequence[Tuple[float, float]]] = None,
) -> LinearProgram:
    """
    Relaxation LP restreinte au pool.

    Variables: z_j (pool) puis s_i (écarts). Lignes: N couvertures (= 1),
    cardinalité (≤ l), puis les lignes latérales.
    """
    n_pool = len(mp.pool)
    n = mp.n_samples
    rows: List[np.ndarray] = []
    cols: List[np.ndarray] = []
    data: List[np.ndarray] = []
    for j, rule in enumerate(mp.pool):
        rows.append(rule.cover)
        cols.append(np.full(rule.support, j, dtype=np.int64))
        data.append(np.ones(rule.support))
    rows.append(np.arange(n))
    cols.append(n_pool + np.arange(n))
    data.append(np.ones(n))
    rows.append(np.full(n_pool, n))
    cols.append(np.arange(n_pool))
    data.append(np.ones(n_pool))
    for m, constraint in enumerate(mp.side_constraints):
        coefficients = constraint.row(mp.pool)
        nonzero = np.flatnonzero(coefficients)
        rows.append(np.full(nonzero.size, n + 1 + m))
        cols.append(nonzero)
        data.append(coefficients[nonzero])

    n_rows = n + 1 + len(mp.side_constraints)
    matrix = sp.csc_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n_rows, n_pool + n),
    )
    lower = np.zeros(n_pool + n)
    upper = np.full(n_pool + n, np.inf)
    if z_bounds is not None:
        for j, (lo, hi) in enumerate(z_bounds):
            lower[j], upper[j] = lo, hi

    return LinearProgram(
        objective=np.concatenate([[rule.loss for rule in mp.pool], mp.penalties]),
        matrix=matrix,
        senses=["="] * n + ["<="] + [c.sense for c in mp.side_constraints],
        rhs=np.concatenate([np.ones(n), [mp.leaf_budget], [c.rhs for c in mp.side_constraints]]),
        lower=lower,
        upper=upper,
        var_names=[f"z{j}" for j in range(n_pool)] + [f"s{i}" for i in range(n)],
        row_names=[f"cover{i}" for i in range(n)] + ["cardinality"] + [c.name for c in mp.side_constraints],
    )


def reduced_cost(rule: Rule, duals: DualVector, side_constraints: Sequence[SideConstraint] = ()) -> float:
    """rc = ξ − (Σ_{i∈couverture} λ_i + μ + Σ_m ρ_m τ_m)."""
    value = rule.loss - float(duals.lam[rule.cover].sum()) - duals.mu
    for m, constraint in enumerate(side_constraints):
        value -= constraint.coefficient(rule) * float(duals.tau[m])
    return float(value)


# ============================================================================
# CONTRAINTES LATÉRALES
# ============================================================================

def _check_delta(delta: float, what: str) -> None:
    if not 0 < delta < 1:
        raise ConfigError(f"{what}: δ doit être dans (0, 1), reçu {delta}")


def linearize_f1_constraint(delta: float, pool: Sequence[Rule] = ()) -> SideConstraint:
    """F1 ≥ δ réécrit en Σ_j [tp_j − δ(tp_j + ½(fp_j + fn_j))] z_j ≥ 0."""
    _check_delta(delta, "min_f1")
    constraint = SideConstraint(
        name="min_f1",
        coefficient=lambda r: r.tp - delta * (r.tp + 0.5 * (r.fp + r.fn)),
        sense=">=",
        rhs=0.0,
    )
    if pool:
        logger.debug(f"Ligne F1 sur {len(pool)} colonnes: {constraint.row(pool)}")
    return constraint


def linearize_precision_constraint(delta: float, pool: Sequence[Rule] = ()) -> SideConstraint:
    """Précision ≥ δ réécrite en Σ_j [tp_j − δ(tp_j + fp_j)] z_j ≥ 0."""
    _check_delta(delta, "min_precision")
    constraint = SideConstraint(
        name="min_precision",
        coefficient=lambda r: r.tp - delta * (r.tp + r.fp),
        sense=">=",
        rhs=0.0,
    )
    if pool:
        logger.debug(f"Ligne précision sur {len(pool)} colonnes: {constraint.row(pool)}")
    return constraint


def fairness_budget_constraint(delta: float) -> SideConstraint:
    """Budget d'équité Σ_j |écart_j| z_j ≤ δ (l'écart d'une règle est une constante une fois évaluée)."""
    if delta < 0:
        raise ConfigError(f"Budget d'équité négatif: {delta}")
    return SideConstraint(name="fairness_budget", coefficient=lambda r: r.disparity, sense="<=", rhs=float(delta))


def default_penalties(dataset: BinnedDataset, metric: str) -> np.ndarray:
    """c_i = PENALTY_FACTOR × perte maximale d'un échantillon (2 pour l'erreur de classification)."""
    if metric == "misclassification":
        worst = 1.0
    else:
        spread = float(dataset.labels.max() - dataset.labels.min()) if dataset.n_samples else 0.0
        worst = spread * spread if metric == "squared_error" else spread
        if worst <= 0:
            worst = 1.0
    return np.full(dataset.n_samples, PENALTY_FACTOR * worst)


# ============================================================================
# MASTER-MIP
# ============================================================================

def _greedy_incumbent(mp: MasterProblem) -> List[int]:
    """Arrondi glouton: règles disjointes par ξ/|couverture| croissant, contraintes latérales respectées."""
    order = sorted(
        (j for j, rule in enumerate(mp.pool) if rule.support > 0),
        key=lambda j: (mp.pool[j].loss / mp.pool[j].support, j),
    )
    covered = np.zeros(mp.n_samples, dtype=bool)
    side_values = np.zeros(len(mp.side_constraints))
    selected: List[int] = []
    for j in order:
        if len(selected) >= mp.leaf_budget:
            break
        rule = mp.pool[j]
        if covered[rule.cover].any():
            continue
        if rule.loss >= mp.penalties[rule.cover].sum():
            continue
        candidate = side_values + np.array([c.coefficient(rule) for c in mp.side_constraints])
        if not all(c.satisfied_by(v) for c, v in zip(mp.side_constraints, candidate)):
            continue
        selected.append(j)
        covered[rule.cover] = True
        side_values = candidate
    return selected


def _solve_node(mp: MasterProblem, fixings: Dict[int, int], warm: Optional[LpBasis]) -> LpSolution:
    bounds = [(float(fixings.get(j, 0)), float(fixings.get(j, 1))) for j in range(len(mp.pool))]
    return solve_lp(build_rmp(mp, bounds), warm_start=warm)


def _branch_variable(mp: MasterProblem, z: np.ndarray) -> Optional[int]:
    fractional = np.flatnonzero(np.abs(z - np.round(z)) > INTEGRALITY_TOL)
    if fractional.size == 0:
        return None
    return int(min(fractional, key=lambda j: (abs(z[j] - 0.5), -mp.pool[j].support, j)))


def solve_master_mip(
    mp: MasterProblem,
    time_limit: float = DEFAULT_TIME_LIMIT_S,
    node_limit: int = BB_NODE_LIMIT,
) -> MipSolution:
    """
    Master-MIP par séparation et évaluation, meilleur d'abord.

    Borne d'un nœud: relaxation LP avec z ∈ [0, 1] et fixations. Branchement sur le
    z le plus proche de 0,5 (égalité: plus grande couverture), fils z=1 exploré en
    premier. L'incumbent initial vient de l'arrondi glouton; en cas de limite de
    temps ou de nœuds, il est retourné avec le statut correspondant.
    """
    started = time.monotonic()
    n_pool = len(mp.pool)

    incumbent = _greedy_incumbent(mp)
    best_value, _ = mp.objective_of(incumbent)
    logger.debug(f"Incumbent glouton: {len(incumbent)} règles, objectif {best_value:.6g}")

    root = _solve_node(mp, {}, None)
    if root.status != "optimal":
        raise SolverError(f"Relaxation racine du Master-MIP: {root.status}")
    bound = root.objective_value

    heap: List[Tuple[float, int, Dict[int, int], Optional[LpSolution]]] = [(bound, 0, {}, root)]
    sequence = 1
    nodes = 0
    status = "optimal"
    while heap:
        # La racine est toujours développée, quelles que soient les limites
        if nodes > 0 and time.monotonic() - started > time_limit:
            status = "time_limit"
            break
        if nodes > 0 and nodes >= node_limit:
            status = "node_limit"
            break
        node_bound, _, fixings, solution = heapq.heappop(heap)
        if node_bound >= best_value - PRUNE_TOL:
            continue
        nodes += 1
        if solution is None:
            solution = _solve_node(mp, fixings, None)
            if solution.status == "infeasible":
                continue
            if solution.status != "optimal":
                logger.warning(f"⚠️ Nœud B&B non résolu ({solution.status}), ignoré")
                continue
        if solution.objective_value >= best_value - PRUNE_TOL:
            continue

        z = solution.primal[:n_pool]
        j = _branch_variable(mp, z)
        if j is None:
            selected = [k for k in range(n_pool) if z[k] > 0.5]
            value, _ = mp.objective_of(selected)
            if value < best_value - PRUNE_TOL:
                incumbent, best_value = selected, value
                logger.debug(f"Nouvel incumbent au nœud {nodes}: {value:.6g}")
            continue

        for fixed in (1, 0):
            child = dict(fixings)
            child[j] = fixed
            heapq.heappush(heap, (solution.objective_value, sequence, child, None))
            sequence += 1

    selected = sorted(incumbent)
    objective, slack = mp.objective_of(selected)
    _check_partition(mp, selected)
    gap = max(0.0, (objective - bound) / objective) if objective > 1e-12 else 0.0
    elapsed = time.monotonic() - started
    logger.info(
        f"✅ Master-MIP {status}: ν_IP={objective:.6g} ν_LP={bound:.6g} Δ={gap:.4%} "
        f"({nodes} nœuds, {elapsed:.2f}s)"
    )
    return MipSolution(
        selected=selected,
        slack_samples=slack,
        objective=objective,
        bound=bound,
        gap=gap,
        status=status,
        nodes=nodes,
    )


def _check_partition(mp: MasterProblem, selected: Sequence[int]) -> None:
    covered = np.zeros(mp.n_samples, dtype=np.int64)
    for j in selected:
        covered[mp.pool[j].cover] += 1
    if np.any(covered > 1):
        raise SolverError(f"Échantillons couverts plusieurs fois: {np.flatnonzero(covered > 1)[:10].tolist()}")
    if len(selected) > mp.leaf_budget:
        raise SolverError(f"{len(selected)} règles sélectionnées > budget {mp.leaf_budget}")
    for constraint in mp.side_constraints:
        value = sum(constraint.coefficient(mp.pool[j]) for j in selected)
        if not constraint.satisfied_by(value):
            raise SolverError(f"Contrainte {constraint.name} violée: {value:.6g} {constraint.sense} {constraint.rhs}")
