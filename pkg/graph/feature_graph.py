"""
Graphe de features en couches avec nœuds SKIP.

Une couche par feature (dans l'ordre choisi), un nœud par valeur catégorielle ou
par intervalle (éventuellement cumulatif), plus un nœud SKIP. Les couches
consécutives sont entièrement connectées: les arcs ne sont pas stockés.
"""
import logging
from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from graph.rules import Rule, RuleSettings, extend, is_admissible, root_rule
from preprocessing.dataset import BinnedDataset, BinSpec, format_interval
from utils.constants import PATH_COUNT_SATURATION, SINK, SOURCE
from utils.errors import ConfigError, OracleCapExceeded

logger = logging.getLogger(__name__)

NodeRef = Union[int, str]


@dataclass(frozen=True, eq=False)
class GraphNode:
    node_id: int
    feature_index: int
    layer: int
    condition: FrozenSet[int]
    is_skip: bool = False
    test_cost: float = 0.0
    label: str = ""
    admits: Optional[np.ndarray] = None


@dataclass(frozen=True)
class Layer:
    feature_index: int
    start: int
    stop: int

    @property
    def skip_id(self) -> int:
        return self.stop - 1

    @property
    def size(self) -> int:
        return self.stop - self.start


@dataclass(frozen=True)
class AttributeConstraints:
    """
    Contraintes au niveau des attributs.

    Les références de nœuds sont des identifiants entiers ou des noms:
    "feature" (tous les nœuds non-SKIP de la feature) ou "feature=valeur".
    """

    forbidden_pairs: Tuple[Tuple[NodeRef, NodeRef], ...] = ()
    max_path_cost: Optional[float] = None
    node_costs: Mapping[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class FeatureGraph:
    nodes: List[GraphNode]
    layers: List[Layer]
    source_id: int
    sink_id: int
    feature_order: Tuple[int, ...]
    forbidden: Dict[int, FrozenSet[int]]
    max_path_cost: Optional[float] = None

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def layer_nodes(self, t: int) -> List[GraphNode]:
        layer = self.layers[t]
        return self.nodes[layer.start:layer.stop]

    def children(self, node_id: int) -> List[GraphNode]:
        """Nœuds de la couche suivante (ou le puits après la dernière couche)."""
        node = self.nodes[node_id]
        next_layer = node.layer + 1
        if node_id == self.sink_id:
            return []
        if next_layer >= len(self.layers):
            return [self.nodes[self.sink_id]]
        return self.layer_nodes(next_layer)

    def layer_sizes(self) -> List[int]:
        return [layer.size for layer in self.layers]


def _node_label(dataset: BinnedDataset, feature: int, spec: Optional[BinSpec], span: Tuple[int, int]) -> str:
    name = dataset.schema.feature_names[feature]
    levels = dataset.schema.levels[feature]
    a, b = span
    if levels is not None:
        values = levels[a:b + 1]
        return f"{name}={values[0]}" if a == b else f"{name} in {{{', '.join(values)}}}"
    lo = spec.base_interval(a)[0]
    hi = spec.base_interval(b)[1]
    return f"{name} in {format_interval(lo, hi)}"


def _spans(dataset: BinnedDataset, feature: int, spec: Optional[BinSpec]) -> List[Tuple[int, int]]:
    if spec is not None:
        return list(spec.spans)
    return [(c, c) for c in range(dataset.cardinalities[feature])]


def build_graph(
    dataset: BinnedDataset,
    bin_specs: Optional[Union[Mapping[int, BinSpec], Sequence[Optional[BinSpec]]]] = None,
    feature_order: Optional[Sequence[int]] = None,
    constraints: Optional[AttributeConstraints] = None,
) -> FeatureGraph:
    """Construit le graphe: source, une couche par feature (SKIP en dernier), puits."""
    k = dataset.n_features
    order = tuple(range(k)) if feature_order is None else tuple(int(f) for f in feature_order)
    if sorted(order) != list(range(k)):
        raise ConfigError(f"L'ordre des features n'est pas une permutation de 0..{k - 1}: {order}")
    if bin_specs is None:
        specs = {f: s for f, s in enumerate(dataset.schema.bin_specs) if s is not None}
    elif isinstance(bin_specs, Mapping):
        specs = dict(bin_specs)
    else:
        specs = {f: s for f, s in enumerate(bin_specs) if s is not None}
    constraints = constraints or AttributeConstraints()

    nodes: List[GraphNode] = [GraphNode(0, SOURCE, -1, frozenset(), label="source")]
    layers: List[Layer] = []
    for t, f in enumerate(order):
        start = len(nodes)
        eta = dataset.cardinalities[f]
        spec = specs.get(f)
        name = dataset.schema.feature_names[f]
        feature_cost = float(constraints.node_costs.get(name, 0.0))
        for a, b in _spans(dataset, f, spec):
            condition = frozenset(range(a, b + 1))
            admits = np.zeros(eta, dtype=bool)
            admits[a:b + 1] = True
            label = _node_label(dataset, f, spec, (a, b))
            cost = float(constraints.node_costs.get(label, feature_cost))
            nodes.append(GraphNode(len(nodes), f, t, condition, False, cost, label, admits))
        nodes.append(
            GraphNode(len(nodes), f, t, frozenset(range(eta)), True, 0.0, f"{name}=SKIP", np.ones(eta, dtype=bool))
        )
        layers.append(Layer(f, start, len(nodes)))
    sink_id = len(nodes)
    nodes.append(GraphNode(sink_id, SINK, len(order), frozenset(), label="sink"))

    forbidden = _resolve_forbidden(nodes, constraints.forbidden_pairs)
    graph = FeatureGraph(
        nodes=nodes,
        layers=layers,
        source_id=0,
        sink_id=sink_id,
        feature_order=order,
        forbidden=forbidden,
        max_path_cost=constraints.max_path_cost,
    )
    logger.info(f"✅ Graphe construit: {len(layers)} couches, |V| = {graph.n_nodes}")
    return graph


def _feature_part(label: str) -> str:
    return label.split("=", 1)[0].split(" in ", 1)[0]


def resolve_node_ref(nodes: Sequence[GraphNode], ref: NodeRef) -> List[int]:
    """Identifiants des nœuds non-SKIP désignés par une référence."""
    if isinstance(ref, (int, np.integer)):
        if not 0 <= int(ref) < len(nodes) or nodes[int(ref)].is_skip or nodes[int(ref)].feature_index < 0:
            raise ConfigError(f"Nœud inconnu ou non informatif: {ref}")
        return [int(ref)]
    matches = [
        node.node_id
        for node in nodes
        if node.feature_index >= 0 and not node.is_skip
        and (node.label == ref or ("=" not in ref and _feature_part(node.label) == ref))
    ]
    if not matches:
        raise ConfigError(f"Référence de nœud inconnue: {ref}")
    return matches


def _resolve_forbidden(
    nodes: Sequence[GraphNode], pairs: Sequence[Tuple[NodeRef, NodeRef]]
) -> Dict[int, FrozenSet[int]]:
    adjacency: Dict[int, set] = {}
    for left, right in pairs:
        for u in resolve_node_ref(nodes, left):
            for v in resolve_node_ref(nodes, right):
                if nodes[u].layer == nodes[v].layer:
                    raise ConfigError(f"Paire interdite dans une même couche: {left}, {right}")
                adjacency.setdefault(u, set()).add(v)
                adjacency.setdefault(v, set()).add(u)
    return {u: frozenset(vs) for u, vs in adjacency.items()}


def settings_with_graph(settings: RuleSettings, graph: FeatureGraph) -> RuleSettings:
    """Reporte les contraintes d'attributs du graphe dans les paramètres de règles."""
    return replace(
        settings,
        forbidden=graph.forbidden,
        max_path_cost=graph.max_path_cost if graph.max_path_cost is not None else settings.max_path_cost,
    )


# ============================================================================
# DÉNOMBREMENT ET ÉNUMÉRATION
# ============================================================================

def count_paths(graph: FeatureGraph, max_rule_length: Optional[int] = None) -> int:
    """
    Nombre de chemins source-puits.

    Sans d: produit des tailles de couches. Avec d: programmation dynamique sur le
    nombre de nœuds non-SKIP utilisés. Sature à PATH_COUNT_SATURATION.
    """
    if max_rule_length is None:
        total = 1
        for layer in graph.layers:
            total *= layer.size
    else:
        ways = [1] + [0] * max_rule_length
        for layer in graph.layers:
            informative = layer.size - 1
            ways = [ways[j] + (ways[j - 1] * informative if j > 0 else 0) for j in range(len(ways))]
        total = sum(ways)
    if total > PATH_COUNT_SATURATION:
        logger.warning(f"⚠️ Nombre de chemins saturé ({len(graph.layers)} couches)")
        return PATH_COUNT_SATURATION
    return total


def enumerate_paths(
    graph: FeatureGraph,
    dataset: BinnedDataset,
    settings: RuleSettings,
    cap: int,
) -> List[Rule]:
    """Toutes les règles faisables, une fois chacune (oracle exhaustif)."""
    count = count_paths(graph, settings.max_rule_length)
    if count > cap:
        raise OracleCapExceeded(count, cap)
    settings = settings_with_graph(settings, graph)

    rules: List[Rule] = []
    stack = [root_rule(dataset, settings)]
    last_layer = len(graph.layers) - 1
    while stack:
        rule = stack.pop()
        if rule.layer == last_layer:
            if is_admissible(rule, settings):
                rules.append(rule)
            continue
        # Ordre inverse pour dépiler dans l'ordre des nœuds
        for node in reversed(graph.layer_nodes(rule.layer + 1)):
            extended = extend(rule, node, dataset, settings)
            if extended is not None:
                stack.append(extended)
    logger.debug(f"Énumération: {len(rules)} règles faisables sur {count} chemins")
    return rules
