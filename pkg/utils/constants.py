"""Constantes partagées."""

# Marqueurs de nœuds terminaux du graphe de features
SOURCE = -1
SINK = -2

# Code d'une valeur catégorielle jamais vue à l'entraînement
UNSEEN_CODE = -1

# Niveau pour les champs vides d'une colonne catégorielle
NA_LEVEL = "<NA>"

# Version du schéma JSON des arbres exportés
TREE_SCHEMA_VERSION = "omt-tree/1"

# Saturation des compteurs de chemins (diagnostic uniquement)
PATH_COUNT_SATURATION = 2 ** 63 - 1

# Métriques disponibles (nom CLI -> MetricKind)
METRIC_ALIASES = {
    "misclass": "misclassification",
    "misclassification": "misclassification",
    "squared": "squared_error",
    "squared_error": "squared_error",
    "absolute": "absolute_error",
    "absolute_error": "absolute_error",
}
