"""Fonctions utilitaires."""
import json
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple, Union

from utils.errors import ConfigError

logger = logging.getLogger(__name__)

NodeRef = Union[int, str]

CONSTRAINT_KEYS = {"min_f1", "min_precision", "positive_class", "fairness", "path_budget", "forbidden_pairs"}
FAIRNESS_KEYS = {"group_feature", "per_path_delta", "budget_delta", "soft_penalty"}
BUDGET_KEYS = {"max_cost", "node_costs"}


@dataclass(frozen=True)
class ConstraintsConfig:
    """Contenu du fichier de contraintes (tous les champs sont optionnels)."""

    min_f1: Optional[float] = None
    min_precision: Optional[float] = None
    positive_class: Optional[str] = None
    group_feature: Optional[str] = None
    per_path_delta: Optional[float] = None
    budget_delta: Optional[float] = None
    soft_penalty: float = 0.0
    max_cost: Optional[float] = None
    node_costs: Dict[str, float] = field(default_factory=dict)
    forbidden_pairs: Tuple[Tuple[NodeRef, NodeRef], ...] = ()

    @property
    def needs_positive_class(self) -> bool:
        return any(
            value is not None for value in (self.min_f1, self.min_precision, self.per_path_delta, self.budget_delta)
        )


def load_json(path: str) -> Any:
    """Charge un document JSON; fichier absent ou illisible → ConfigError."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"Fichier introuvable: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"JSON invalide dans {path}: {e}")


def save_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)


def _check_keys(section: str, document: Dict, allowed: set) -> None:
    if not isinstance(document, dict):
        raise ConfigError(f"La section {section} doit être un objet JSON")
    unknown = sorted(set(document) - allowed)
    if unknown:
        raise ConfigError(f"Clés inconnues dans {section}: {', '.join(unknown)}")


def _optional_float(value: Any, name: str) -> Optional[float]:
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} doit être un nombre")
    return float(value)


def parse_constraints(document: Dict) -> ConstraintsConfig:
    """Valide un document de contraintes et le convertit en ConstraintsConfig."""
    _check_keys("contraintes", document, CONSTRAINT_KEYS)
    fairness = document.get("fairness") or {}
    budget = document.get("path_budget") or {}
    _check_keys("fairness", fairness, FAIRNESS_KEYS)
    _check_keys("path_budget", budget, BUDGET_KEYS)

    pairs: List[Tuple[NodeRef, NodeRef]] = []
    for pair in document.get("forbidden_pairs") or []:
        if not isinstance(pair, list) or len(pair) != 2:
            raise ConfigError(f"Paire interdite invalide: {pair}")
        pairs.append((pair[0], pair[1]))

    positive = document.get("positive_class")
    config = ConstraintsConfig(
        min_f1=_optional_float(document.get("min_f1"), "min_f1"),
        min_precision=_optional_float(document.get("min_precision"), "min_precision"),
        positive_class=None if positive is None else str(positive),
        group_feature=fairness.get("group_feature"),
        per_path_delta=_optional_float(fairness.get("per_path_delta"), "per_path_delta"),
        budget_delta=_optional_float(fairness.get("budget_delta"), "budget_delta"),
        soft_penalty=_optional_float(fairness.get("soft_penalty"), "soft_penalty") or 0.0,
        max_cost=_optional_float(budget.get("max_cost"), "max_cost"),
        node_costs={str(k): float(v) for k, v in (budget.get("node_costs") or {}).items()},
        forbidden_pairs=tuple(pairs),
    )
    if (config.per_path_delta is not None or config.budget_delta is not None) and config.group_feature is None:
        raise ConfigError("fairness.group_feature est requis avec une contrainte d'équité")
    return config


def load_constraints(path: Optional[str]) -> ConstraintsConfig:
    if path is None:
        return ConstraintsConfig()
    config = parse_constraints(load_json(path))
    logger.info(f"✅ Contraintes chargées depuis {path}")
    return config


def parse_split(text: str) -> Tuple[float, float, float]:
    """'50,25,25' → (0.5, 0.25, 0.25)."""
    try:
        parts = [float(p) for p in text.split(",")]
    except ValueError:
        raise ConfigError(f"Découpage invalide: {text}")
    if len(parts) != 3 or any(p < 0 for p in parts) or sum(parts) <= 0:
        raise ConfigError(f"Découpage invalide: {text}")
    total = sum(parts)
    return tuple(p / total for p in parts)
