"""Graphe de features et règles candidates."""
from .feature_graph import (
    AttributeConstraints,
    FeatureGraph,
    GraphNode,
    Layer,
    build_graph,
    count_paths,
    enumerate_paths,
    resolve_node_ref,
    settings_with_graph,
)
from .rules import (
    Rule,
    RuleSettings,
    extend,
    fairness_stats,
    is_admissible,
    path_metric,
    root_rule,
    rule_from_conditions,
)

__all__ = [
    'AttributeConstraints',
    'FeatureGraph',
    'GraphNode',
    'Layer',
    'build_graph',
    'count_paths',
    'enumerate_paths',
    'resolve_node_ref',
    'settings_with_graph',
    'Rule',
    'RuleSettings',
    'extend',
    'fairness_stats',
    'is_admissible',
    'path_metric',
    'root_rule',
    'rule_from_conditions',
]
