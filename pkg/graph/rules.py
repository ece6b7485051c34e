"""
Règles candidates (colonnes): chemins source-puits du graphe de features.

Une règle porte son ensemble d'échantillons couverts, trié, et toutes les
statistiques nécessaires à la perte, aux contraintes F1/précision et à l'équité.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Dict, FrozenSet, Iterable, Optional, Sequence, Tuple

import numpy as np

from config import MAX_GROUPS
from preprocessing.dataset import BinnedDataset
from utils.errors import ConfigError

if TYPE_CHECKING:
    from graph.feature_graph import GraphNode

logger = logging.getLogger(__name__)

METRICS = ("misclassification", "squared_error", "absolute_error")

Condition = Tuple[int, FrozenSet[int]]


@dataclass(frozen=True)
class RuleSettings:
    """Paramètres de faisabilité et de perte utilisés pendant l'extension des chemins."""

    metric: str = "misclassification"
    max_rule_length: Optional[int] = None
    min_support: int = 0
    forbidden: Dict[int, FrozenSet[int]] = field(default_factory=dict)
    max_path_cost: Optional[float] = None
    positive_class: Optional[int] = None
    fairness_delta: Optional[float] = None
    fairness_soft_penalty: float = 0.0

    @classmethod
    def for_dataset(
        cls,
        dataset: BinnedDataset,
        metric: str = "misclassification",
        max_rule_length: Optional[int] = None,
        min_support: float = 0.0,
        **kwargs,
    ) -> "RuleSettings":
        """
        Construit et valide les paramètres pour un jeu de données.

        min_support est une fraction de N si < 1, un nombre d'échantillons sinon.
        """
        if metric not in METRICS:
            raise ConfigError(f"Métrique inconnue: {metric}")
        if metric == "misclassification" and not dataset.is_classification:
            raise ConfigError("L'erreur de classification exige des classes")
        if metric != "misclassification" and dataset.is_classification:
            raise ConfigError(f"La métrique {metric} exige une cible réelle")
        if 0 < min_support < 1:
            support = int(math.ceil(min_support * dataset.n_samples))
        else:
            support = int(min_support)
        settings = cls(metric=metric, max_rule_length=max_rule_length, min_support=support, **kwargs)
        settings.validate(dataset)
        return settings

    def validate(self, dataset: BinnedDataset) -> None:
        if self.fairness_delta is not None:
            if dataset.group_feature is None:
                raise ConfigError("Contrainte d'équité sans feature de groupe")
            if self.positive_class is None:
                raise ConfigError("Contrainte d'équité sans classe positive")
            if dataset.n_groups > MAX_GROUPS:
                raise ConfigError(f"{dataset.n_groups} groupes > {MAX_GROUPS} autorisés")
        if self.positive_class is not None:
            if not dataset.is_classification or not 0 <= self.positive_class < dataset.n_classes:
                raise ConfigError(f"Classe positive invalide: {self.positive_class}")


@dataclass(frozen=True, eq=False)
class Rule:
    """
    Chemin partiel ou complet.

    node_ids: nœuds non-SKIP visités, dans l'ordre des couches
    conditions: (feature, codes admis) pour chaque nœud non-SKIP
    layer: dernière couche traversée (-1 à la source)
    """

    node_ids: Tuple[int, ...]
    conditions: Tuple[Condition, ...]
    cover: np.ndarray
    layer: int
    length: int
    loss: float
    prediction: float
    class_counts: Optional[np.ndarray] = None
    sum_y: float = 0.0
    sum_y2: float = 0.0
    group_counts: Optional[np.ndarray] = None
    tp: int = 0
    fp: int = 0
    fn: int = 0
    path_cost: float = 0.0
    disparity: float = 0.0

    @property
    def support(self) -> int:
        return int(self.cover.size)

    @property
    def signature(self) -> Tuple[Tuple[int, Tuple[int, ...]], ...]:
        return tuple(sorted((f, tuple(sorted(codes))) for f, codes in self.conditions))

    def matches(self, codes: np.ndarray) -> np.ndarray:
        """Masque des échantillons (colonnes de codes) qui satisfont toutes les conditions."""
        mask = np.ones(codes.shape[1], dtype=bool)
        for f, admitted in self.conditions:
            mask &= np.isin(codes[f], list(admitted))
        return mask


# ============================================================================
# STATISTIQUES
# ============================================================================

def _statistics(dataset: BinnedDataset, settings: RuleSettings, cover: np.ndarray) -> Dict:
    n = int(cover.size)
    stats: Dict = {}
    if dataset.is_classification:
        labels = dataset.labels[cover]
        counts = np.bincount(labels, minlength=dataset.n_classes)
        prediction = int(np.argmax(counts)) if n else 0
        stats.update(class_counts=counts, prediction=float(prediction))
        stats["loss"] = float(n - counts.max()) if n else 0.0
        if settings.positive_class is not None:
            positives = int(counts[settings.positive_class])
            if n and prediction == settings.positive_class:
                stats.update(tp=positives, fp=n - positives, fn=0)
            else:
                stats.update(tp=0, fp=0, fn=positives)
        if dataset.group_feature is not None:
            groups = dataset.groups[cover]
            n_groups, n_classes = dataset.n_groups, dataset.n_classes
            flat = np.bincount(groups * n_classes + labels, minlength=n_groups * n_classes)
            stats["group_counts"] = flat.reshape(n_groups, n_classes)
    else:
        y = dataset.labels[cover]
        sum_y = float(y.sum())
        sum_y2 = float((y * y).sum())
        stats.update(sum_y=sum_y, sum_y2=sum_y2)
        if settings.metric == "absolute_error":
            center = float(np.median(y)) if n else 0.0
            stats["loss"] = float(np.abs(y - center).sum())
        else:
            center = sum_y / n if n else 0.0
            stats["loss"] = max(0.0, sum_y2 - sum_y * sum_y / n) if n else 0.0
        stats["prediction"] = center

    if stats.get("group_counts") is not None and settings.positive_class is not None:
        rates = _group_rates(stats["group_counts"], settings.positive_class)
        disparity = float(rates.max() - rates.min()) if rates.size else 0.0
        stats["disparity"] = disparity
        if settings.fairness_delta is not None and settings.fairness_soft_penalty > 0:
            excess = max(0.0, disparity - settings.fairness_delta)
            stats["loss"] += settings.fairness_soft_penalty * n * excess * excess
    return stats


def _group_rates(group_counts: np.ndarray, positive_class: int) -> np.ndarray:
    totals = group_counts.sum(axis=1)
    positives = group_counts[:, positive_class]
    return np.divide(positives, totals, out=np.zeros(len(totals), dtype=float), where=totals > 0)


def root_rule(dataset: BinnedDataset, settings: Optional[RuleSettings] = None) -> Rule:
    """Chemin vide à la source: couvre tous les échantillons."""
    settings = settings or RuleSettings.for_dataset(
        dataset, metric="misclassification" if dataset.is_classification else "squared_error"
    )
    cover = np.arange(dataset.n_samples, dtype=np.int64)
    return Rule(
        node_ids=(),
        conditions=(),
        cover=cover,
        layer=-1,
        length=0,
        **_statistics(dataset, settings, cover),
    )


def extend(rule: Rule, node: "GraphNode", dataset: BinnedDataset, settings: RuleSettings) -> Optional[Rule]:
    """
    Opérateur d'extension d'un chemin partiel vers un nœud de la couche suivante.

    Retourne None si l'extension est infaisable (longueur, support minimal,
    paire interdite ou budget de coût dépassé).
    """
    if node.layer != rule.layer + 1:
        raise ValueError(f"Le nœud {node.node_id} (couche {node.layer}) ne suit pas la couche {rule.layer}")
    if node.is_skip:
        return replace(rule, layer=node.layer)

    length = rule.length + 1
    if settings.max_rule_length is not None and length > settings.max_rule_length:
        return None
    banned = settings.forbidden.get(node.node_id)
    if banned and any(v in banned for v in rule.node_ids):
        return None
    path_cost = rule.path_cost + node.test_cost
    if settings.max_path_cost is not None and path_cost > settings.max_path_cost + 1e-12:
        return None

    cover = rule.cover[node.admits[dataset.codes[node.feature_index, rule.cover]]]
    if cover.size < settings.min_support:
        return None

    return Rule(
        node_ids=rule.node_ids + (node.node_id,),
        conditions=rule.conditions + ((node.feature_index, node.condition),),
        cover=cover,
        layer=node.layer,
        length=length,
        path_cost=path_cost,
        **_statistics(dataset, settings, cover),
    )


def rule_from_conditions(
    dataset: BinnedDataset,
    conditions: Iterable[Condition],
    settings: RuleSettings,
    layer: int = -1,
) -> Rule:
    """Règle construite directement à partir de conditions (feature, codes admis)."""
    conditions = tuple((int(f), frozenset(int(c) for c in codes)) for f, codes in conditions)
    cover = np.arange(dataset.n_samples, dtype=np.int64)
    for f, admitted in conditions:
        cover = cover[np.isin(dataset.codes[f, cover], list(admitted))]
    return Rule(
        node_ids=(),
        conditions=conditions,
        cover=cover,
        layer=layer,
        length=len(conditions),
        **_statistics(dataset, settings, cover),
    )


def is_admissible(rule: Rule, settings: RuleSettings) -> bool:
    """Contraintes vérifiées à la complétion (non monotones le long d'un chemin)."""
    if settings.fairness_delta is not None and settings.fairness_soft_penalty <= 0:
        return rule.disparity <= settings.fairness_delta + 1e-12
    return True


# ============================================================================
# MÉTRIQUES
# ============================================================================

def path_metric(
    rule: Rule,
    metric: str,
    positive_class: Optional[int] = None,
    dataset: Optional[BinnedDataset] = None,
) -> Tuple[float, int, int, int]:
    """
    Perte ξ de la règle et (tp, fp, fn) par rapport à la classe positive.

    La prédiction est la classe majoritaire (plus petit indice en cas d'égalité).
    L'erreur absolue a besoin du jeu de données pour la médiane.
    """
    if metric not in METRICS:
        raise ConfigError(f"Métrique inconnue: {metric}")
    n = rule.support
    if metric == "misclassification":
        if rule.class_counts is None:
            raise ConfigError("L'erreur de classification exige des classes")
        counts = rule.class_counts
        xi = float(n - counts.max()) if n else 0.0
        tp = fp = fn = 0
        if positive_class is not None:
            predicted = int(np.argmax(counts)) if n else -1
            positives = int(counts[positive_class])
            if predicted == positive_class:
                tp, fp = positives, n - positives
            else:
                fn = positives
        return xi, tp, fp, fn

    if rule.class_counts is not None:
        raise ConfigError(f"La métrique {metric} exige une cible réelle")
    if metric == "squared_error":
        xi = max(0.0, rule.sum_y2 - rule.sum_y ** 2 / n) if n else 0.0
        return xi, 0, 0, 0
    if dataset is None:
        raise ValueError("absolute_error: jeu de données requis pour la médiane")
    y = dataset.labels[rule.cover]
    xi = float(np.abs(y - np.median(y)).sum()) if n else 0.0
    return xi, 0, 0, 0


def fairness_stats(rule: Rule, positive_class: int, group_names: Optional[Sequence[str]] = None) -> Dict:
    """
    Taux de positifs φ_g par groupe dans la couverture (0 si le groupe est absent).

    Chaque échantillon d'une règle reçoit la même prédiction: le taux est donc
    mesuré sur les étiquettes positives du groupe.
    """
    if rule.group_counts is None:
        raise ConfigError("Aucune feature de groupe désignée")
    n_groups = rule.group_counts.shape[0]
    if n_groups > MAX_GROUPS:
        raise ConfigError(f"{n_groups} groupes > {MAX_GROUPS} autorisés")
    rates = _group_rates(rule.group_counts, positive_class)
    names = list(group_names) if group_names is not None else list(range(n_groups))
    return {names[g]: float(rates[g]) for g in range(n_groups)}
