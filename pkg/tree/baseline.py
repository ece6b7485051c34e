"""Arbre glouton de référence: découpage multi-branches minimisant l'impureté de Gini pondérée."""
import logging
import math
from typing import List, Optional, Tuple

import numpy as np

from graph.rules import Condition
from preprocessing.dataset import BinnedDataset
from tree.multiway_tree import MultiwayTree, TreeRule, fallback_for, make_tree
from utils.errors import ConfigError

logger = logging.getLogger(__name__)


def gini(labels: np.ndarray, n_classes: int) -> float:
    if labels.size == 0:
        return 0.0
    p = np.bincount(labels, minlength=n_classes) / labels.size
    return float(1.0 - (p * p).sum())


def _best_split(
    dataset: BinnedDataset, indices: np.ndarray, available: List[int], min_support: int
) -> Tuple[Optional[int], float]:
    labels = dataset.labels[indices]
    best_feature, best_impurity = None, gini(labels, dataset.n_classes)
    for f in available:
        column = dataset.codes[f, indices]
        values, counts = np.unique(column, return_counts=True)
        if values.size < 2 or counts.min() < min_support:
            continue
        impurity = sum(
            count / indices.size * gini(labels[column == value], dataset.n_classes)
            for value, count in zip(values, counts)
        )
        if impurity < best_impurity - 1e-12:
            best_feature, best_impurity = f, impurity
    return best_feature, best_impurity


def greedy_baseline(dataset: BinnedDataset, depth: int, min_support: float = 0.0) -> MultiwayTree:
    """
    Découpage descendant, un enfant par valeur présente de la feature choisie.

    Arrêt à la profondeur d, quand un enfant passerait sous le support minimal
    (fraction de N si < 1) ou quand le nœud est pur. Une racine non découpée
    donne un arbre sans règle (repli seul).
    """
    if not dataset.is_classification:
        raise ConfigError("L'arbre glouton de référence exige une tâche de classification")
    support = int(math.ceil(min_support * dataset.n_samples)) if 0 < min_support < 1 else int(min_support)

    leaves: List[Tuple[Tuple[Condition, ...], np.ndarray]] = []
    stack = [((), np.arange(dataset.n_samples, dtype=np.int64))]
    while stack:
        conditions, indices = stack.pop()
        labels = dataset.labels[indices]
        pure = np.unique(labels).size <= 1
        feature = None
        if not pure and len(conditions) < depth:
            used = {f for f, _ in conditions}
            available = [f for f in range(dataset.n_features) if f not in used]
            feature, _ = _best_split(dataset, indices, available, support)
        if feature is None:
            if conditions:
                leaves.append((conditions, indices))
            continue
        column = dataset.codes[feature, indices]
        for value in sorted(np.unique(column), reverse=True):
            stack.append((conditions + ((feature, frozenset({int(value)})),), indices[column == value]))

    rules = [
        TreeRule(
            conditions=tuple(sorted(conditions, key=lambda c: c[0])),
            label=float(np.argmax(np.bincount(dataset.labels[indices], minlength=dataset.n_classes))),
            pool_index=k,
            support=int(indices.size),
        )
        for k, (conditions, indices) in enumerate(leaves)
    ]
    tree = make_tree(rules, fallback_for(dataset), range(dataset.n_features), depth=depth, leaves=len(rules))
    logger.info(f"🌳 Arbre glouton: {tree.n_rules} feuilles (profondeur ≤ {depth})")
    return tree
