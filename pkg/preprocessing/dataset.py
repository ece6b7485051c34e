"""
Chargement des données tabulaires, discrétisation par quantiles, binning cumulatif
et encodage des échantillons en codes catégoriels.
"""
import csv
import logging
import re
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from utils.constants import NA_LEVEL, UNSEEN_CODE
from utils.errors import ConfigError, DatasetParseError

logger = logging.getLogger(__name__)

KINDS = ("categorical", "numerical", "ordinal")
TASKS = ("classification", "regression")

SchemaHint = Union[str, List[str]]


@dataclass(frozen=True)
class RawDataset:
    """Colonnes brutes d'un CSV, la colonne cible comprise."""

    column_names: List[str]
    columns: List[Tuple[str, list]]
    label_column: Optional[int]
    n_samples: int
    ordinal_levels: Dict[int, List[str]] = field(default_factory=dict)

    @property
    def feature_columns(self) -> List[int]:
        return [j for j in range(len(self.columns)) if j != self.label_column]

    @property
    def feature_names(self) -> List[str]:
        return [self.column_names[j] for j in self.feature_columns]


@dataclass(frozen=True)
class BinSpec:
    """
    Intervalles d'une feature numérique (ou ordinale).

    thresholds: points de coupure strictement croissants (κ−1 valeurs)
    intervals: intervalles [lo, hi) retenus, bornes extérieures infinies
    spans: pour chaque intervalle, la plage (a, b) inclusive des intervalles de base
    """

    feature_index: int
    kind: str
    thresholds: Tuple[float, ...]
    intervals: Tuple[Tuple[float, float], ...]
    spans: Tuple[Tuple[int, int], ...]

    @property
    def n_base(self) -> int:
        return len(self.thresholds) + 1

    def base_interval(self, code: int) -> Tuple[float, float]:
        lo = self.thresholds[code - 1] if code > 0 else -np.inf
        hi = self.thresholds[code] if code < len(self.thresholds) else np.inf
        return (lo, hi)


@dataclass(frozen=True)
class EncodingSchema:
    """Tout ce qu'il faut pour encoder un nouveau CSV comme le jeu d'entraînement."""

    feature_names: List[str]
    feature_kinds: List[str]
    levels: List[Optional[List[str]]]
    bin_specs: List[Optional[BinSpec]]
    label_name: str
    task: str
    classes: List[str]

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def describe_codes(self, feature: int, codes: Sequence[int]) -> List[str]:
        """Noms lisibles des codes de base d'une feature."""
        spec = self.bin_specs[feature]
        levels = self.levels[feature]
        names = []
        for code in codes:
            if levels is not None:
                names.append(levels[code])
            elif spec is not None:
                lo, hi = spec.base_interval(code)
                names.append(format_interval(lo, hi))
            else:
                names.append(str(code))
        return names


@dataclass(frozen=True)
class BinnedDataset:
    """Échantillons encodés: codes[f][i] est l'indice de la valeur de base prise par i."""

    codes: np.ndarray
    labels: Optional[np.ndarray]
    cardinalities: Tuple[int, ...]
    schema: EncodingSchema
    group_feature: Optional[int] = None
    n_unseen: int = 0

    @property
    def n_samples(self) -> int:
        return int(self.codes.shape[1])

    @property
    def n_features(self) -> int:
        return int(self.codes.shape[0])

    @property
    def is_classification(self) -> bool:
        return self.schema.task == "classification"

    @property
    def n_classes(self) -> int:
        return len(self.schema.classes)

    @property
    def groups(self) -> Optional[np.ndarray]:
        if self.group_feature is None:
            return None
        return self.codes[self.group_feature]

    @property
    def n_groups(self) -> int:
        if self.group_feature is None:
            return 0
        return self.cardinalities[self.group_feature]


def format_interval(lo: float, hi: float) -> str:
    left = "-inf" if np.isinf(lo) else f"{lo:.4g}"
    right = "+inf" if np.isinf(hi) else f"{hi:.4g}"
    return f"[{left}, {right})"


# ============================================================================
# CHARGEMENT CSV
# ============================================================================

def _parses_as_float(value: str) -> bool:
    try:
        float(value)
        return True
    except ValueError:
        return False


def load_csv(
    path: str,
    label_column: Optional[str],
    schema_hints: Optional[Dict[str, SchemaHint]] = None,
) -> RawDataset:
    """
    Charge un CSV (en-tête obligatoire, séparateur ',', pas de guillemets).

    Une colonne est numérique si toutes ses valeurs sont des réels, catégorielle sinon.
    Les indications de schéma remplacent l'inférence; une liste de niveaux déclare
    une colonne ordinale avec cet ordre.
    """
    try:
        frame = pd.read_csv(
            path,
            sep=",",
            dtype=str,
            keep_default_na=False,
            na_filter=False,
            quoting=csv.QUOTE_NONE,
            index_col=False,
            encoding="utf-8",
        )
    except pd.errors.EmptyDataError:
        raise DatasetParseError(f"{path}: en-tête manquant")
    except pd.errors.ParserError as e:
        match = re.search(r"line (\d+)", str(e))
        row = int(match.group(1)) if match else None
        raise DatasetParseError(f"nombre de champs incohérent ({path})", row=row)

    # Les lignes trop courtes sont complétées par NaN par pandas
    ragged = frame.isna().any(axis=1).to_numpy()
    if ragged.any():
        row = int(np.flatnonzero(ragged)[0]) + 2
        raise DatasetParseError(f"nombre de champs incohérent ({path})", row=row)

    column_names = [str(c) for c in frame.columns]
    hints = dict(schema_hints or {})
    unknown = [name for name in hints if name not in column_names]
    if unknown:
        raise ConfigError(f"Colonnes inconnues dans le schéma: {', '.join(unknown)}")

    label_index = None
    if label_column is not None:
        if label_column not in column_names:
            raise ConfigError(f"Colonne cible inconnue: {label_column}")
        label_index = column_names.index(label_column)

    columns: List[Tuple[str, list]] = []
    ordinal_levels: Dict[int, List[str]] = {}
    for j, name in enumerate(column_names):
        raw_values = [str(v) for v in frame[name].tolist()]
        hint = hints.get(name)
        if isinstance(hint, list):
            kind = "ordinal"
            ordinal_levels[j] = [str(level) for level in hint]
        elif hint is not None:
            if hint not in KINDS:
                raise ConfigError(f"Type de colonne inconnu pour {name}: {hint}")
            kind = hint
        else:
            non_empty = [v for v in raw_values if v != ""]
            kind = "numerical" if non_empty and all(_parses_as_float(v) for v in non_empty) else "categorical"

        if kind == "numerical" or (kind == "ordinal" and j not in ordinal_levels and _all_numeric(raw_values)):
            values = []
            for i, v in enumerate(raw_values):
                if v == "":
                    raise DatasetParseError(f"valeur manquante dans la colonne numérique {name}", row=i + 2)
                try:
                    values.append(float(v))
                except ValueError:
                    raise DatasetParseError(f"valeur non numérique '{v}' dans {name}", row=i + 2)
            columns.append((kind, values))
        else:
            columns.append((kind, [v if v != "" else NA_LEVEL for v in raw_values]))

    logger.info(f"✅ {path}: {len(frame)} échantillons, {len(column_names)} colonnes")
    return RawDataset(
        column_names=column_names,
        columns=columns,
        label_column=label_index,
        n_samples=len(frame),
        ordinal_levels=ordinal_levels,
    )


def _all_numeric(values: List[str]) -> bool:
    return bool(values) and all(v != "" and _parses_as_float(v) for v in values)


# ============================================================================
# DISCRÉTISATION
# ============================================================================

def quantile_thresholds(values: Sequence[float], n_bins: int) -> List[float]:
    """
    Seuils aux quantiles j/κ (interpolation linéaire), doublons fusionnés.

    Un seuil égal au minimum créerait un intervalle vide: il est écarté, si bien
    qu'une colonne constante ne produit aucun seuil.
    """
    if n_bins < 2:
        raise ConfigError(f"Nombre d'intervalles invalide: {n_bins} (minimum 2)")
    data = np.asarray(values, dtype=float)
    if data.size == 0:
        raise ConfigError("Impossible de discrétiser une colonne vide")
    probs = np.arange(1, n_bins) / n_bins
    cuts = np.unique(np.quantile(data, probs))
    return [float(t) for t in cuts if t > data.min()]


def make_bin_spec(feature_index: int, thresholds: Sequence[float]) -> BinSpec:
    """BinSpec simple: les κ intervalles de base disjoints."""
    cuts = tuple(float(t) for t in thresholds)
    if any(b <= a for a, b in zip(cuts, cuts[1:])):
        raise ConfigError(f"Seuils non strictement croissants pour la feature {feature_index}")
    n_base = len(cuts) + 1
    spans = tuple((a, a) for a in range(n_base))
    spec = BinSpec(feature_index, "plain", cuts, (), spans)
    return replace(spec, intervals=tuple(_span_interval(spec, a, b) for a, b in spans))


def _span_interval(spec: BinSpec, a: int, b: int) -> Tuple[float, float]:
    return (spec.base_interval(a)[0], spec.base_interval(b)[1])


def apply_cumulative_binning(spec: BinSpec) -> BinSpec:
    """
    Toutes les unions contiguës d'intervalles de base, sauf l'intervalle complet.

    Ordre: par longueur puis par début, les κ bases d'abord.
    """
    n_base = spec.n_base
    if n_base < 2:
        raise ConfigError(
            f"Binning cumulatif impossible sur un seul intervalle (feature {spec.feature_index})"
        )
    spans = [
        (a, a + width)
        for width in range(n_base)
        for a in range(n_base - width)
        if not (a == 0 and a + width == n_base - 1)
    ]
    return BinSpec(
        feature_index=spec.feature_index,
        kind="cumulative",
        thresholds=spec.thresholds,
        intervals=tuple(_span_interval(spec, a, b) for a, b in spans),
        spans=tuple(spans),
    )


def build_bin_specs(raw: RawDataset, n_bins: int, cumulative: bool = True) -> Dict[int, BinSpec]:
    """BinSpec pour chaque feature numérique ou ordinale (indices de feature)."""
    specs: Dict[int, BinSpec] = {}
    for f, j in enumerate(raw.feature_columns):
        kind, values = raw.columns[j]
        if kind == "categorical":
            continue
        if kind == "ordinal" and not _column_is_float(values):
            levels = _ordinal_levels(raw, j)
            thresholds = [k + 0.5 for k in range(len(levels) - 1)]
        else:
            distinct = np.unique(np.asarray(values, dtype=float))
            if 1 < distinct.size <= n_bins:
                # Peu de valeurs distinctes: une valeur par intervalle de base
                thresholds = list((distinct[:-1] + distinct[1:]) / 2.0)
            else:
                thresholds = quantile_thresholds(values, n_bins)
        spec = make_bin_spec(f, thresholds)
        if cumulative and spec.n_base >= 2:
            spec = apply_cumulative_binning(spec)
        elif spec.n_base < 2:
            logger.warning(f"⚠️ Feature {raw.column_names[j]} constante: un seul intervalle")
        specs[f] = spec
    return specs


def _column_is_float(values: list) -> bool:
    return bool(values) and isinstance(values[0], float)


def _ordinal_levels(raw: RawDataset, column: int) -> List[str]:
    if column in raw.ordinal_levels:
        return list(raw.ordinal_levels[column])
    return sorted(set(raw.columns[column][1]))


# ============================================================================
# ENCODAGE
# ============================================================================

def _sorted_classes(values: list) -> List[str]:
    distinct = set(str(v) for v in values)
    if all(_parses_as_float(v) for v in distinct):
        return sorted(distinct, key=float)
    return sorted(distinct)


def _label_text(value) -> str:
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return str(value)


def encode(
    raw: RawDataset,
    bin_specs: Dict[int, BinSpec],
    task: str = "classification",
    schema: Optional[EncodingSchema] = None,
    group_feature: Optional[int] = None,
) -> BinnedDataset:
    """
    Encode chaque échantillon en codes de base.

    Sans schéma, les niveaux catégoriels sont numérotés par ordre d'apparition.
    Avec un schéma (données de test), les niveaux inconnus reçoivent UNSEEN_CODE
    et sont comptés.
    """
    if schema is not None:
        task = schema.task
    if task not in TASKS:
        raise ConfigError(f"Tâche inconnue: {task}")

    feature_columns = raw.feature_columns
    if schema is not None:
        missing = [name for name in schema.feature_names if name not in raw.column_names]
        if missing:
            raise ConfigError(f"Colonnes manquantes: {', '.join(missing)}")
        feature_columns = [raw.column_names.index(name) for name in schema.feature_names]

    n = raw.n_samples
    codes = np.zeros((len(feature_columns), n), dtype=np.int64)
    names: List[str] = []
    kinds: List[str] = []
    levels_out: List[Optional[List[str]]] = []
    specs_out: List[Optional[BinSpec]] = []
    cardinalities: List[int] = []
    n_unseen = 0

    for f, j in enumerate(feature_columns):
        kind, values = raw.columns[j]
        names.append(raw.column_names[j])
        kinds.append(kind if schema is None else schema.feature_kinds[f])
        spec = bin_specs.get(f) if schema is None else schema.bin_specs[f]
        if schema is not None:
            levels = schema.levels[f]
        elif kind == "categorical":
            levels = list(dict.fromkeys(str(v) for v in values))
        elif kind == "ordinal" and not _column_is_float(values):
            levels = _ordinal_levels(raw, j)
        else:
            levels = None

        if levels is None:
            if spec is None:
                raise ConfigError(f"BinSpec manquant pour la feature numérique {raw.column_names[j]}")
            if not _column_is_float(values) and n > 0:
                raise DatasetParseError(f"colonne {raw.column_names[j]} attendue numérique")
            data = np.asarray(values, dtype=float)
            codes[f] = np.searchsorted(np.asarray(spec.thresholds, dtype=float), data, side="right")
            levels_out.append(None)
            cardinalities.append(spec.n_base)
        else:
            index = {level: k for k, level in enumerate(levels)}
            column = np.array([index.get(_label_text(v), UNSEEN_CODE) for v in values], dtype=np.int64)
            unseen = int((column == UNSEEN_CODE).sum())
            if unseen:
                if schema is None:
                    raise DatasetParseError(f"niveau hors liste ordinale dans {raw.column_names[j]}")
                logger.warning(f"⚠️ {unseen} valeurs inconnues dans {raw.column_names[j]}")
                n_unseen += unseen
            codes[f] = column
            levels_out.append(levels)
            cardinalities.append(len(levels))
        specs_out.append(spec)

    labels = None
    label_name = schema.label_name if schema is not None else ""
    classes: List[str] = [] if schema is None else list(schema.classes)
    if raw.label_column is not None:
        label_name = raw.column_names[raw.label_column]
        _, label_values = raw.columns[raw.label_column]
        if task == "regression":
            try:
                labels = np.asarray([float(v) for v in label_values], dtype=float)
            except ValueError:
                raise ConfigError(f"La cible {label_name} n'est pas numérique (régression)")
        else:
            texts = [_label_text(v) for v in label_values]
            if schema is None:
                classes = _sorted_classes(texts)
            index = {c: k for k, c in enumerate(classes)}
            labels = np.array([index.get(t, UNSEEN_CODE) for t in texts], dtype=np.int64)

    out_schema = schema or EncodingSchema(
        feature_names=names,
        feature_kinds=kinds,
        levels=levels_out,
        bin_specs=specs_out,
        label_name=label_name,
        task=task,
        classes=classes,
    )
    dataset = BinnedDataset(
        codes=codes,
        labels=labels,
        cardinalities=tuple(max(1, c) for c in cardinalities),
        schema=out_schema,
        group_feature=group_feature,
        n_unseen=n_unseen,
    )
    logger.debug(f"Encodage: {dataset.n_samples} échantillons, cardinalités {dataset.cardinalities}")
    return dataset


def subset(dataset: BinnedDataset, indices: Sequence[int]) -> BinnedDataset:
    """Restriction aux lignes données, même schéma."""
    idx = np.asarray(indices, dtype=np.int64)
    return replace(
        dataset,
        codes=dataset.codes[:, idx],
        labels=None if dataset.labels is None else dataset.labels[idx],
    )


def subset_raw(raw: RawDataset, indices: Sequence[int]) -> RawDataset:
    """Lignes choisies d'un RawDataset (les seuils se calculent sur l'entraînement seul)."""
    idx = [int(i) for i in indices]
    return replace(
        raw,
        columns=[(kind, [values[i] for i in idx]) for kind, values in raw.columns],
        n_samples=len(idx),
    )


def split_indices(
    n: int, fractions: Sequence[float], seed: int
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Découpage train/val/test à partir d'une seule permutation."""
    if len(fractions) != 3 or any(f < 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigError(f"Fractions de découpage invalides: {fractions}")
    order = np.random.default_rng(seed).permutation(n)
    n_val = int(np.floor(fractions[1] * n))
    n_test = int(np.floor(fractions[2] * n))
    n_train = n - n_val - n_test
    train = np.sort(order[:n_train])
    val = np.sort(order[n_train:n_train + n_val])
    test = np.sort(order[n_train + n_val:])
    return train, val, test


def _entropy(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum())


def information_gain_order(dataset: BinnedDataset) -> List[int]:
    """Features triées par gain d'information décroissant (réduction de variance en régression)."""
    gains = []
    labels = dataset.labels
    for f in range(dataset.n_features):
        column = dataset.codes[f]
        if dataset.is_classification:
            base = _entropy(np.bincount(labels, minlength=dataset.n_classes))
            remainder = 0.0
            for value in np.unique(column):
                mask = column == value
                remainder += mask.mean() * _entropy(np.bincount(labels[mask], minlength=dataset.n_classes))
        else:
            base = float(labels.var())
            remainder = 0.0
            for value in np.unique(column):
                mask = column == value
                remainder += mask.mean() * float(labels[mask].var())
        gains.append(base - remainder)
    order = sorted(range(dataset.n_features), key=lambda f: (-gains[f], f))
    logger.info(f"📊 Ordre par gain d'information: {[dataset.schema.feature_names[f] for f in order]}")
    return order
