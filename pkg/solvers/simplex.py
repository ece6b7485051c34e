"""
Simplexe primal à variables bornées (inverse de base dense, matrice creuse).

Chaque ligne reçoit une variable logique: a·x + l = b, avec l ∈ [0, ∞) pour ≤,
l ∈ (-∞, 0] pour ≥ et l = 0 pour =. La phase 1 n'ajoute des artificielles
que pour les lignes dont la logique initiale est hors bornes.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from config import BLAND_AFTER, LP_ITER_LIMIT, REFACTOR_EVERY, TOL_FEAS, TOL_GAP, TOL_OPT
from utils.errors import SolverError

logger = logging.getLogger(__name__)

SENSES = ("=", "<=", ">=")

BASIC = 0
AT_LOWER = 1
AT_UPPER = 2

PIVOT_TOL = 1e-9
DEGENERATE_STEP = 1e-12


@dataclass
class LinearProgram:
    """min c·x  s.c.  lignes (coefficients, sens, second membre),  lo ≤ x ≤ hi."""

    objective: np.ndarray
    matrix: sp.csc_matrix
    senses: List[str]
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    var_names: Optional[List[str]] = None
    row_names: Optional[List[str]] = None

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        self.rhs = np.asarray(self.rhs, dtype=float)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        self.matrix = sp.csc_matrix(self.matrix, shape=(len(self.rhs), len(self.objective)), dtype=float)
        if any(s not in SENSES for s in self.senses):
            raise ValueError(f"Sens de contrainte inconnu: {set(self.senses) - set(SENSES)}")
        if not np.all(np.isfinite(self.rhs)):
            raise ValueError("Second membre non fini")
        if np.any(self.lower > self.upper) or np.any(self.lower < 0) or not np.all(np.isfinite(self.lower)):
            raise ValueError("Bornes invalides (0 ≤ lo ≤ hi requis)")

    @property
    def n_vars(self) -> int:
        return len(self.objective)

    @property
    def n_rows(self) -> int:
        return len(self.rhs)

    @classmethod
    def from_rows(
        cls,
        objective: Sequence[float],
        rows: Sequence[Tuple[Dict[int, float], str, float]],
        bounds: Optional[Sequence[Tuple[float, float]]] = None,
    ) -> "LinearProgram":
        """Construction à partir de lignes creuses {variable: coefficient}."""
        n = len(objective)
        data, row_idx, col_idx = [], [], []
        for i, (coefficients, _, _) in enumerate(rows):
            for j, value in coefficients.items():
                data.append(float(value))
                row_idx.append(i)
                col_idx.append(int(j))
        matrix = sp.csc_matrix((data, (row_idx, col_idx)), shape=(len(rows), n))
        bounds = bounds or [(0.0, np.inf)] * n
        return cls(
            objective=np.asarray(objective, dtype=float),
            matrix=matrix,
            senses=[sense for _, sense, _ in rows],
            rhs=np.array([rhs for _, _, rhs in rows], dtype=float),
            lower=np.array([lo for lo, _ in bounds], dtype=float),
            upper=np.array([hi for _, hi in bounds], dtype=float),
        )


@dataclass(frozen=True)
class LpBasis:
    """Base d'un LP: indices des variables de base (structurelles puis logiques) et bornes hautes."""

    basic: Tuple[int, ...]
    at_upper: FrozenSet[int] = frozenset()


@dataclass
class LpSolution:
    status: str
    primal: np.ndarray
    duals: np.ndarray
    objective_value: float
    reduced_costs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    basis: Optional[LpBasis] = None
    iterations: int = 0


def shift_basis(basis: LpBasis, insert_at: int, count: int) -> LpBasis:
    """Renumérote une base après l'insertion de `count` colonnes à la position `insert_at`."""

    def shifted(j: int) -> int:
        return j + count if j >= insert_at else j

    return LpBasis(
        basic=tuple(shifted(j) for j in basis.basic),
        at_upper=frozenset(shifted(j) for j in basis.at_upper),
    )


def format_lp(lp: LinearProgram) -> str:
    """Export texte du LP (objectif, lignes, bornes) pour vérification manuelle."""
    var_names = lp.var_names or [f"x{j}" for j in range(lp.n_vars)]
    row_names = lp.row_names or [f"r{i}" for i in range(lp.n_rows)]

    def terms(pairs) -> str:
        text = " ".join(f"{'+' if v >= 0 else '-'} {abs(v):.12g} {var_names[j]}" for j, v in pairs)
        return text or "0"

    lines = ["minimize", f" obj: {terms((j, v) for j, v in enumerate(lp.objective) if v != 0)}", "subject to"]
    rows = lp.matrix.tocsr()
    for i in range(lp.n_rows):
        start, stop = rows.indptr[i], rows.indptr[i + 1]
        pairs = zip(rows.indices[start:stop], rows.data[start:stop])
        lines.append(f" {row_names[i]}: {terms(pairs)} {lp.senses[i]} {lp.rhs[i]:.12g}")
    lines.append("bounds")
    for j in range(lp.n_vars):
        lines.append(f" {lp.lower[j]:.12g} <= {var_names[j]} <= {lp.upper[j]:.12g}")
    lines.append("end")
    return "\n".join(lines) + "\n"


class _Simplex:
    """État d'une résolution: une instance par appel, non partageable."""

    def __init__(self, lp: LinearProgram, tol_feas: float, tol_opt: float, iter_limit: int):
        self.lp = lp
        self.tol_feas = tol_feas
        self.tol_opt = tol_opt
        self.iter_limit = iter_limit
        self.iterations = 0
        self.m = lp.n_rows
        self.n = lp.n_vars

        logical_lower = np.array([-np.inf if s == ">=" else 0.0 for s in lp.senses])
        logical_upper = np.array([0.0 if s in ("=", ">=") else np.inf for s in lp.senses])
        self.matrix = sp.hstack([lp.matrix, sp.identity(self.m, format="csc")], format="csc")
        self.lower = np.concatenate([lp.lower, logical_lower])
        self.upper = np.concatenate([lp.upper, logical_upper])
        self.cost = np.concatenate([lp.objective, np.zeros(self.m)])
        self.rhs = lp.rhs
        self.total = self.n + self.m

        self.basic = np.zeros(self.m, dtype=np.int64)
        self.status = np.full(self.total, AT_LOWER, dtype=np.int8)
        self.x = np.zeros(self.total)
        self.binv = np.eye(self.m)
        self.pivots_since_refactor = 0

    # ------------------------------------------------------------------
    # Accès aux colonnes
    # ------------------------------------------------------------------

    def _column(self, j: int) -> np.ndarray:
        column = np.zeros(self.m)
        start, stop = self.matrix.indptr[j], self.matrix.indptr[j + 1]
        column[self.matrix.indices[start:stop]] = self.matrix.data[start:stop]
        return column

    def _refactor(self) -> None:
        basis_matrix = self.matrix[:, self.basic].toarray()
        self.binv = np.linalg.inv(basis_matrix)
        nonbasic_x = self.x.copy()
        nonbasic_x[self.basic] = 0.0
        self.x[self.basic] = self.binv @ (self.rhs - self.matrix @ nonbasic_x)
        self.pivots_since_refactor = 0

    def _nonbasic_value(self, j: int, prefer_upper: bool) -> Tuple[int, float]:
        if prefer_upper and np.isfinite(self.upper[j]) or not np.isfinite(self.lower[j]):
            return AT_UPPER, self.upper[j]
        return AT_LOWER, self.lower[j]

    # ------------------------------------------------------------------
    # Démarrages
    # ------------------------------------------------------------------

    def warm_start(self, basis: LpBasis) -> bool:
        """Installe une base fournie; False si singulière ou primal-infaisable."""
        basic = np.asarray(basis.basic, dtype=np.int64)
        if basic.size != self.m or len(set(basic.tolist())) != self.m or np.any(basic >= self.total):
            return False
        self.basic = basic
        self.status[:] = AT_LOWER
        for j in range(self.total):
            state, value = self._nonbasic_value(j, j in basis.at_upper)
            self.status[j] = state
            self.x[j] = value
        self.status[basic] = BASIC
        try:
            self._refactor()
        except np.linalg.LinAlgError:
            return False
        xb = self.x[basic]
        feasible = np.all(xb >= self.lower[basic] - self.tol_feas) and np.all(xb <= self.upper[basic] + self.tol_feas)
        return bool(feasible)

    def phase_one(self) -> str:
        """Base logique + artificielles sur les lignes hors bornes, puis min Σ artificielles."""
        lp = self.lp
        self.x[: self.n] = lp.lower
        self.status[: self.n] = AT_LOWER
        residual = self.rhs - lp.matrix @ lp.lower

        artificial_rows, signs = [], []
        for i in range(self.m):
            j = self.n + i
            if self.lower[j] - self.tol_feas <= residual[i] <= self.upper[j] + self.tol_feas:
                self.basic[i] = j
                self.status[j] = BASIC
                self.x[j] = residual[i]
            else:
                self.status[j] = AT_LOWER if np.isfinite(self.lower[j]) else AT_UPPER
                self.x[j] = 0.0
                artificial_rows.append(i)
                signs.append(1.0 if residual[i] > 0 else -1.0)

        if not artificial_rows:
            self.binv = np.eye(self.m)
            return "optimal"

        p = len(artificial_rows)
        artificial = sp.csc_matrix((signs, (artificial_rows, range(p))), shape=(self.m, p))
        self.matrix = sp.hstack([self.matrix, artificial], format="csc")
        self.lower = np.concatenate([self.lower, np.zeros(p)])
        self.upper = np.concatenate([self.upper, np.full(p, np.inf)])
        self.status = np.concatenate([self.status, np.full(p, BASIC, dtype=np.int8)])
        self.x = np.concatenate([self.x, np.abs(residual[artificial_rows])])
        for k, i in enumerate(artificial_rows):
            self.basic[i] = self.total + k
        self.binv = np.eye(self.m)
        for k, i in enumerate(artificial_rows):
            self.binv[i, i] = signs[k]

        phase_cost = np.concatenate([np.zeros(self.total), np.ones(p)])
        outcome = self._iterate(phase_cost)
        infeasibility = float(self.x[self.total:].sum())
        scale = 1.0 + float(np.abs(self.rhs).max(initial=0.0))

        # Les artificielles restant en base (à zéro) sortent par pivot dégénéré
        for r in range(self.m):
            if self.basic[r] < self.total:
                continue
            k = int(self.basic[r]) - self.total
            alpha = np.asarray(self.matrix[:, : self.total].T @ self.binv[r]).ravel()
            alpha[self.basic[self.basic < self.total]] = 0.0
            logical = self.n + artificial_rows[k]
            entering = logical if abs(alpha[logical]) > PIVOT_TOL else int(np.argmax(np.abs(alpha)))
            if abs(alpha[entering]) <= PIVOT_TOL:
                raise SolverError(f"Phase 1: aucune colonne ne peut remplacer l'artificielle de la ligne {artificial_rows[k]}")
            column = self.binv @ self._column(entering)
            pivot_row = self.binv[r] / column[r]
            self.binv -= np.outer(column, pivot_row)
            self.binv[r] = pivot_row
            self.basic[r] = entering
            self.status[entering] = BASIC
            self.status[self.total + k] = AT_LOWER
            self.x[self.total + k] = 0.0
        self.matrix = self.matrix[:, : self.total]
        self.lower = self.lower[: self.total]
        self.upper = self.upper[: self.total]
        self.status = self.status[: self.total]
        self.x = self.x[: self.total]
        self._refactor()

        if outcome == "iteration_limit":
            return outcome
        if infeasibility > self.tol_feas * scale:
            return "infeasible"
        return "optimal"

    # ------------------------------------------------------------------
    # Itérations
    # ------------------------------------------------------------------

    def _iterate(self, cost: np.ndarray) -> str:
        degenerate_run = 0
        bland = False
        upper_gap = self.upper - self.lower
        while True:
            if self.iterations >= self.iter_limit:
                return "iteration_limit"
            y = cost[self.basic] @ self.binv
            reduced = cost - self.matrix.T @ y
            movable = upper_gap > 0
            eligible = movable & (
                ((self.status == AT_LOWER) & (reduced < -self.tol_opt))
                | ((self.status == AT_UPPER) & (reduced > self.tol_opt))
            )
            if not eligible.any():
                return "optimal"
            if bland:
                q = int(np.flatnonzero(eligible)[0])
            else:
                q = int(np.argmax(np.where(eligible, np.abs(reduced), -1.0)))

            direction = 1.0 if self.status[q] == AT_LOWER else -1.0
            alpha = self.binv @ self._column(q)
            delta = -direction * alpha
            xb = self.x[self.basic]
            lb = self.lower[self.basic]
            ub = self.upper[self.basic]

            ratios = np.full(self.m, np.inf)
            decreasing = delta < -PIVOT_TOL
            increasing = delta > PIVOT_TOL
            with np.errstate(invalid="ignore", divide="ignore"):
                ratios[decreasing] = (xb[decreasing] - lb[decreasing]) / -delta[decreasing]
                ratios[increasing] = (ub[increasing] - xb[increasing]) / delta[increasing]
            ratios = np.where(np.isnan(ratios), np.inf, np.maximum(ratios, 0.0))

            t_basic = float(ratios.min()) if self.m else np.inf
            t_flip = float(upper_gap[q])
            self.iterations += 1

            if t_flip <= t_basic:
                if not np.isfinite(t_flip):
                    return "unbounded"
                self.x[q] += direction * t_flip
                self.x[self.basic] += delta * t_flip
                self.status[q] = AT_UPPER if direction > 0 else AT_LOWER
                degenerate_run = 0
                bland = False
                continue

            ties = np.flatnonzero(ratios <= t_basic + 1e-12)
            if bland:
                r = int(ties[np.argmin(self.basic[ties])])
            else:
                r = int(ties[np.argmax(np.abs(alpha[ties]))])
            t = t_basic

            leaving = int(self.basic[r])
            self.x[q] += direction * t
            self.x[self.basic] += delta * t
            if delta[r] < 0:
                self.status[leaving] = AT_LOWER
                self.x[leaving] = self.lower[leaving]
            else:
                self.status[leaving] = AT_UPPER
                self.x[leaving] = self.upper[leaving]

            pivot_row = self.binv[r] / alpha[r]
            self.binv -= np.outer(alpha, pivot_row)
            self.binv[r] = pivot_row
            self.basic[r] = q
            self.status[q] = BASIC
            self.pivots_since_refactor += 1
            if self.pivots_since_refactor >= REFACTOR_EVERY:
                self._refactor()

            if t <= DEGENERATE_STEP:
                degenerate_run += 1
                if degenerate_run >= BLAND_AFTER and not bland:
                    logger.debug(f"Règle de Bland activée après {degenerate_run} pivots dégénérés")
                    bland = True
            else:
                degenerate_run = 0
                bland = False

    def phase_two(self) -> str:
        return self._iterate(self.cost)

    def solution(self, status: str) -> LpSolution:
        y = self.cost[self.basic] @ self.binv
        reduced = self.cost - self.matrix.T @ y
        primal = self.x[: self.n].copy()
        objective = float(self.lp.objective @ primal)
        at_upper = frozenset(int(j) for j in np.flatnonzero(self.status == AT_UPPER))
        if status == "optimal":
            nonbasic = self.status != BASIC
            dual_objective = float(y @ self.rhs + reduced[nonbasic] @ self.x[nonbasic])
            if abs(objective - dual_objective) > TOL_GAP * (1.0 + abs(objective)):
                logger.warning(f"⚠️ Écart primal-dual {objective - dual_objective:.3e}")
        return LpSolution(
            status=status,
            primal=primal,
            duals=y,
            objective_value=objective,
            reduced_costs=reduced[: self.n],
            basis=LpBasis(tuple(int(j) for j in self.basic), at_upper),
            iterations=self.iterations,
        )


def solve_lp(
    lp: LinearProgram,
    tol_feas: float = TOL_FEAS,
    tol_opt: float = TOL_OPT,
    iter_limit: int = LP_ITER_LIMIT,
    warm_start: Optional[LpBasis] = None,
) -> LpSolution:
    """
    Résout le LP; retourne primal, duals (un par ligne) et statut.

    Statuts: optimal, infeasible, iteration_limit, unbounded.
    Une base de démarrage invalide ou primal-infaisable est ignorée (démarrage à froid).
    """
    solver = _Simplex(lp, tol_feas, tol_opt, iter_limit)
    warm = False
    if warm_start is not None:
        try:
            warm = solver.warm_start(warm_start)
        except (IndexError, ValueError):
            warm = False
        if not warm:
            logger.debug("Base de démarrage rejetée, démarrage à froid")
            solver = _Simplex(lp, tol_feas, tol_opt, iter_limit)

    if not warm:
        try:
            outcome = solver.phase_one()
        except np.linalg.LinAlgError as e:
            raise SolverError(f"Base singulière en phase 1: {e}")
        if outcome != "optimal":
            logger.debug(f"Phase 1 terminée: {outcome}")
            return solver.solution(outcome)

    try:
        outcome = solver.phase_two()
    except np.linalg.LinAlgError as e:
        raise SolverError(f"Base singulière en phase 2: {e}")
    logger.debug(f"LP {lp.n_rows}x{lp.n_vars}: {outcome} en {solver.iterations} itérations")
    return solver.solution(outcome)
