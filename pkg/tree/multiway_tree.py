"""
Arbre à branchements multiples obtenu à partir des règles sélectionnées.

Les règles sont lues comme une liste de décision: la plus spécifique d'abord
(longueur décroissante), puis par indice de pool. Sur l'entraînement elles sont
disjointes; ailleurs les jokers SKIP peuvent se chevaucher.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from graph.rules import Condition
from preprocessing.dataset import BinnedDataset
from solvers.master import MasterProblem, MipSolution
from utils.errors import SolverError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TreeRule:
    conditions: Tuple[Condition, ...]
    label: float
    pool_index: int
    support: int = 0

    @property
    def length(self) -> int:
        return len(self.conditions)

    def matches(self, codes: np.ndarray) -> np.ndarray:
        """Masque des échantillons (codes de forme (k, n)) satisfaisant toutes les conditions."""
        mask = np.ones(codes.shape[1], dtype=bool)
        for f, admitted in self.conditions:
            mask &= np.isin(codes[f], sorted(admitted))
        return mask


@dataclass(frozen=True)
class MultiwayTree:
    rules: Tuple[TreeRule, ...]
    fallback_label: float
    feature_order: Tuple[int, ...]
    task: str = "classification"
    depth: Optional[int] = None
    leaves: Optional[int] = None

    @property
    def is_classification(self) -> bool:
        return self.task == "classification"

    @property
    def n_rules(self) -> int:
        return len(self.rules)


@dataclass
class EvalReport:
    n_samples: int
    accuracy: Optional[float]
    f1: Optional[float]
    confusion: List[List[int]]
    coverage: float
    n_rules: int
    mean_rule_length: float
    rmse: Optional[float] = None
    mae: Optional[float] = None
    classes: List[str] = field(default_factory=list)

    def as_dict(self) -> Dict:
        return {
            "n_samples": self.n_samples,
            "accuracy": self.accuracy,
            "f1": self.f1,
            "confusion": self.confusion,
            "classes": self.classes,
            "coverage": self.coverage,
            "n_rules": self.n_rules,
            "mean_rule_length": self.mean_rule_length,
            "rmse": self.rmse,
            "mae": self.mae,
        }


def _ordered(rules: Sequence[TreeRule]) -> Tuple[TreeRule, ...]:
    return tuple(sorted(rules, key=lambda r: (-r.length, r.pool_index)))


def make_tree(
    rules: Sequence[TreeRule],
    fallback_label: float,
    feature_order: Sequence[int],
    task: str = "classification",
    depth: Optional[int] = None,
    leaves: Optional[int] = None,
) -> MultiwayTree:
    return MultiwayTree(
        rules=_ordered(rules),
        fallback_label=fallback_label,
        feature_order=tuple(feature_order),
        task=task,
        depth=depth,
        leaves=leaves,
    )


def fallback_for(dataset: BinnedDataset) -> float:
    """Classe majoritaire globale (plus petit indice en cas d'égalité) ou moyenne globale."""
    if dataset.n_samples == 0:
        return 0.0
    if dataset.is_classification:
        return float(np.argmax(np.bincount(dataset.labels, minlength=dataset.n_classes)))
    return float(dataset.labels.mean())


def assemble_tree(
    mip: MipSolution,
    mp: MasterProblem,
    dataset: BinnedDataset,
    feature_order: Optional[Sequence[int]] = None,
    depth: Optional[int] = None,
) -> MultiwayTree:
    """
    Matérialise les règles sélectionnées et vérifie la partition de l'entraînement:
    chaque échantillon hors écart correspond à exactement une règle.
    """
    rules = [
        TreeRule(
            conditions=tuple(sorted(mp.pool[j].conditions, key=lambda c: c[0])),
            label=float(int(mp.pool[j].prediction)) if dataset.is_classification else float(mp.pool[j].prediction),
            pool_index=j,
            support=mp.pool[j].support,
        )
        for j in mip.selected
    ]
    order = tuple(range(dataset.n_features)) if feature_order is None else tuple(feature_order)
    tree = make_tree(
        rules,
        fallback_for(dataset),
        order,
        task=dataset.schema.task,
        depth=depth,
        leaves=mp.leaf_budget,
    )

    matched = np.zeros(dataset.n_samples, dtype=np.int64)
    for rule in tree.rules:
        matched += rule.matches(dataset.codes)
    expected = np.ones(dataset.n_samples, dtype=np.int64)
    expected[mip.slack_samples] = 0
    if not np.array_equal(matched, expected):
        bad = np.flatnonzero(matched != expected)
        raise SolverError(f"Partition d'entraînement violée pour {bad.size} échantillons (ex. {bad[:5].tolist()})")

    logger.info(f"🌳 Arbre assemblé: {tree.n_rules} feuilles, {len(mip.slack_samples)} échantillons en écart")
    return tree


# ============================================================================
# PRÉDICTION ET ÉVALUATION
# ============================================================================

def predict_all(tree: MultiwayTree, codes: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Prédictions pour des codes de forme (k, n) et masque des échantillons couverts par une règle."""
    n = codes.shape[1]
    predictions = np.full(n, tree.fallback_label, dtype=float)
    assigned = np.zeros(n, dtype=bool)
    for rule in tree.rules:
        hit = rule.matches(codes) & ~assigned
        predictions[hit] = rule.label
        assigned |= hit
    return predictions, assigned


def predict(tree: MultiwayTree, sample: Sequence[int]) -> float:
    """Étiquette de la première règle satisfaite, sinon l'étiquette de repli."""
    predictions, _ = predict_all(tree, np.asarray(sample, dtype=np.int64).reshape(-1, 1))
    return float(predictions[0])


def _f1(labels: np.ndarray, predictions: np.ndarray, positive: int) -> float:
    tp = int(((predictions == positive) & (labels == positive)).sum())
    fp = int(((predictions == positive) & (labels != positive)).sum())
    fn = int(((predictions != positive) & (labels == positive)).sum())
    denominator = 2 * tp + fp + fn
    return 2 * tp / denominator if denominator else 0.0


def evaluate(tree: MultiwayTree, dataset: BinnedDataset, positive_class: Optional[int] = None) -> EvalReport:
    """Exactitude, F1 (binaire), matrice de confusion et couverture; RMSE et MAE en régression."""
    predictions, assigned = predict_all(tree, dataset.codes)
    n = dataset.n_samples
    lengths = [rule.length for rule in tree.rules]
    report = EvalReport(
        n_samples=n,
        accuracy=None,
        f1=None,
        confusion=[],
        coverage=float(assigned.mean()) if n else 0.0,
        n_rules=tree.n_rules,
        mean_rule_length=float(np.mean(lengths)) if lengths else 0.0,
        classes=list(dataset.schema.classes),
    )
    if dataset.labels is None or n == 0:
        return report

    if tree.is_classification:
        labels = dataset.labels
        predicted = predictions.astype(np.int64)
        known = labels >= 0
        if not known.all():
            logger.warning(f"⚠️ {int((~known).sum())} étiquettes inconnues du modèle, comptées comme erreurs")
        n_classes = dataset.n_classes
        confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
        np.add.at(confusion, (labels[known], predicted[known]), 1)
        report.confusion = confusion.tolist()
        report.accuracy = float((predicted == labels).mean())
        if n_classes == 2:
            positive = 1 if positive_class is None else positive_class
            report.f1 = _f1(labels, predicted, positive)
    else:
        errors = predictions - dataset.labels
        report.rmse = float(np.sqrt(np.mean(errors ** 2)))
        report.mae = float(np.mean(np.abs(errors)))
    return report


# ============================================================================
# VUE EN ARBRE
# ============================================================================

@dataclass
class TrieNode:
    """Nœud de la vue en arbre: une arête par ensemble de codes (None = SKIP, «any»)."""

    feature: Optional[int] = None
    children: Dict[Optional[FrozenSet[int]], "TrieNode"] = field(default_factory=dict)
    label: Optional[float] = None


def build_trie(tree: MultiwayTree) -> TrieNode:
    """
    Vue en arbre indexée par l'ordre des features.

    Les features ignorées par toutes les règles sont omises; les SKIP restants
    deviennent des arêtes joker.
    """
    used = [f for f in tree.feature_order if any(f == g for rule in tree.rules for g, _ in rule.conditions)]
    root = TrieNode()
    for rule in tree.rules:
        conditions = dict(rule.conditions)
        last = max((used.index(f) for f in conditions), default=-1)
        node = root
        for f in used[:last + 1]:
            node.feature = f
            node = node.children.setdefault(conditions.get(f), TrieNode())
        node.label = rule.label
    if not tree.rules:
        root.label = tree.fallback_label
    return root
