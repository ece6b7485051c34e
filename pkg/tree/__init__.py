"""Arbre multi-branches: assemblage, prédiction, évaluation, export, référence gloutonne."""
from .baseline import greedy_baseline
from .export import condition_text, export, load_tree, to_dot, to_json
from .multiway_tree import (
    EvalReport,
    MultiwayTree,
    TreeRule,
    assemble_tree,
    build_trie,
    evaluate,
    predict,
    predict_all,
)

__all__ = [
    'EvalReport',
    'MultiwayTree',
    'TreeRule',
    'assemble_tree',
    'build_trie',
    'condition_text',
    'evaluate',
    'export',
    'greedy_baseline',
    'load_tree',
    'predict',
    'predict_all',
    'to_dot',
    'to_json',
]
