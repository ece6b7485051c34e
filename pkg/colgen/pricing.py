"""
Sous-problème de pricing: K plus courts chemins sur le graphe de features.

Les coûts réduits ne sont pas additifs le long des arcs (la perte dépend de la
couverture finale): chaque extension recalcule le coût réduit du chemin partiel.
"""
import heapq
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Set, Tuple

from config import (
    DEFAULT_K,
    DEFAULT_MAX_COLUMNS,
    DEFAULT_MAX_ITERATIONS,
    DEFAULT_MIN_SUPPORT,
    DEFAULT_TIME_LIMIT_S,
    DUAL_TOLERANCE,
    MIN_MIP_TIME_S,
    STALL_TOLERANCE,
    STALL_WINDOW,
)
from graph.feature_graph import FeatureGraph, settings_with_graph
from graph.rules import Rule, RuleSettings, extend, is_admissible, root_rule
from preprocessing.dataset import BinnedDataset
from solvers.master import DualVector, SideConstraint, reduced_cost
from utils.errors import ConfigError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CgConfig:
    """Paramètres de la génération de colonnes."""

    k: int = DEFAULT_K
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    max_columns: int = DEFAULT_MAX_COLUMNS
    dual_tolerance: float = DUAL_TOLERANCE
    stall_window: int = STALL_WINDOW
    stall_tolerance: float = STALL_TOLERANCE
    min_support: float = DEFAULT_MIN_SUPPORT
    max_rule_length: Optional[int] = None
    leaf_budget: int = 8
    time_limit: float = DEFAULT_TIME_LIMIT_S
    min_mip_time: float = MIN_MIP_TIME_S

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"K doit être ≥ 1 (reçu {self.k})")
        if self.max_iterations < 0 or self.max_columns < 1 or self.leaf_budget < 1:
            raise ConfigError("Les limites d'itérations, de colonnes et de feuilles doivent être positives")
        if self.stall_window < 1 or self.dual_tolerance < 0 or self.min_mip_time < 0:
            raise ConfigError("Fenêtre de stagnation ou tolérance duale invalide")
        if self.max_rule_length is not None and self.max_rule_length < 1:
            raise ConfigError(f"Longueur de règle invalide: {self.max_rule_length}")


class _BestList:
    """Au plus K chemins partiels de plus faible coût réduit (égalité: premier inséré conservé)."""

    def __init__(self, k: int):
        self.k = k
        self._heap: List[Tuple[float, int, Rule]] = []

    def __len__(self) -> int:
        return len(self._heap)

    def insert(self, rc: float, seq: int, rule: Rule) -> None:
        entry = (-rc, -seq, rule)
        if len(self._heap) < self.k:
            heapq.heappush(self._heap, entry)
        elif entry[:2] > self._heap[0][:2]:
            heapq.heapreplace(self._heap, entry)

    def ordered(self) -> List[Tuple[float, int, Rule]]:
        return sorted(((-neg_rc, -neg_seq, rule) for neg_rc, neg_seq, rule in self._heap), key=lambda e: e[:2])


def ksp(
    graph: FeatureGraph,
    dataset: BinnedDataset,
    duals: DualVector,
    config: CgConfig,
    settings: RuleSettings,
    side_constraints: Sequence[SideConstraint] = (),
    exclude: Optional[Set[Tuple]] = None,
) -> List[Rule]:
    """
    Balayage couche par couche de la source au puits.

    À chaque nœud, chaque chemin partiel de Π_t est (a) proposé à la liste du
    puits comme règle complète (couches restantes en SKIP) si son coût réduit est
    négatif, puis (b) étendu à chaque nœud de la couche suivante, chaque nœud ne
    gardant que ses K meilleurs chemins. Retourne au plus K règles de coût réduit
    < −dual_tolerance, par coût réduit croissant.
    """
    settings = settings_with_graph(settings, graph)
    exclude = exclude or set()
    sink = _BestList(config.k)
    offered: Set[Tuple] = set()
    seq = 0

    def offer(rc: float, rule: Rule) -> None:
        nonlocal seq
        signature = rule.signature
        if signature in offered or signature in exclude:
            return
        offered.add(signature)
        if rc < -config.dual_tolerance and is_admissible(rule, settings):
            sink.insert(rc, seq, rule)
            seq += 1

    root = root_rule(dataset, settings)
    frontier: List[List[Tuple[float, int, Rule]]] = [[(reduced_cost(root, duals, side_constraints), 0, root)]]
    extensions = 0
    for t in range(len(graph.layers)):
        children: Dict[int, _BestList] = {node.node_id: _BestList(config.k) for node in graph.layer_nodes(t)}
        for entries in frontier:
            for rc, _, rule in entries:
                offer(rc, rule)
                for node in graph.layer_nodes(t):
                    extended = extend(rule, node, dataset, settings)
                    if extended is None:
                        continue
                    extensions += 1
                    child_rc = rc if node.is_skip else reduced_cost(extended, duals, side_constraints)
                    children[node.node_id].insert(child_rc, seq, extended)
                    seq += 1
        frontier = [children[node.node_id].ordered() for node in graph.layer_nodes(t)]

    for entries in frontier:
        for rc, _, rule in entries:
            offer(rc, rule)

    result = [rule for _, _, rule in sink.ordered()]
    logger.debug(f"KSP: {extensions} extensions, {len(result)} colonnes de coût réduit négatif")
    return result
