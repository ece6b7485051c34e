"""Commandes de la ligne de commande OMT."""
import json
import logging
import os
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from colgen import CgConfig, CgReport, run_cg
from config import (
    DEFAULT_BINS,
    DEFAULT_DEPTH,
    DEFAULT_K,
    DEFAULT_MAX_COLUMNS,
    DEFAULT_MAX_ITERATIONS,
    DEFAULT_MIN_SUPPORT,
    DEFAULT_SPLIT,
    DEFAULT_TIME_LIMIT_S,
    DUAL_TOLERANCE,
    ORACLE_PATH_CAP,
    TUNE_BINS_CANDIDATES,
)
from database import get_db
from graph import (
    AttributeConstraints,
    FeatureGraph,
    RuleSettings,
    build_graph,
    count_paths,
    enumerate_paths,
)
from preprocessing import (
    BinnedDataset,
    EncodingSchema,
    RawDataset,
    build_bin_specs,
    encode,
    information_gain_order,
    load_csv,
    split_indices,
    subset_raw,
)
from solvers import (
    MasterProblem,
    SideConstraint,
    build_rmp,
    default_penalties,
    fairness_budget_constraint,
    format_lp,
    linearize_f1_constraint,
    linearize_precision_constraint,
    reduced_cost,
    solve_master_mip,
)
from tree import MultiwayTree, assemble_tree, evaluate, export, greedy_baseline, load_tree, predict_all, to_json
from utils.constants import METRIC_ALIASES
from utils.errors import ConfigError, OmtError, OracleCapExceeded
from utils.helpers import ConstraintsConfig, load_constraints, load_json, save_text

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_REFUSED = 2


@dataclass(frozen=True)
class RunConfig:
    """Paramètres d'une exécution (un drapeau CLI par champ)."""

    depth: int = DEFAULT_DEPTH
    leaves: Optional[int] = None
    bins: int = DEFAULT_BINS
    metric: str = "misclassification"
    k: int = DEFAULT_K
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    max_columns: int = DEFAULT_MAX_COLUMNS
    min_support: float = DEFAULT_MIN_SUPPORT
    seed: int = 0
    time_limit_s: float = DEFAULT_TIME_LIMIT_S
    split: Tuple[float, float, float] = DEFAULT_SPLIT
    no_split: bool = False
    tune_bins: bool = False
    cumulative: bool = True
    order: str = "natural"
    constraints: Optional[str] = None
    schema: Optional[str] = None
    label: Optional[str] = None
    group_feature: Optional[str] = None
    positive_class: Optional[str] = None
    dump_lp: Optional[str] = None
    db: Optional[str] = None
    record: bool = True

    @property
    def leaf_budget(self) -> int:
        return self.leaves if self.leaves is not None else 2 ** self.depth

    def validate(self) -> "RunConfig":
        if self.depth < 1:
            raise ConfigError(f"Profondeur invalide: {self.depth}")
        if self.leaf_budget < 1:
            raise ConfigError(f"Nombre de feuilles invalide: {self.leaf_budget}")
        if self.metric not in METRIC_ALIASES:
            raise ConfigError(f"Métrique inconnue: {self.metric}")
        if self.order not in ("natural", "gain"):
            raise ConfigError(f"Ordre de features inconnu: {self.order}")
        if abs(sum(self.split) - 1.0) > 1e-9:
            raise ConfigError(f"Les fractions de découpage doivent sommer à 1: {self.split}")
        return replace(self, metric=METRIC_ALIASES[self.metric])


@dataclass
class TrainOutcome:
    tree: MultiwayTree
    schema: EncodingSchema
    report: CgReport
    master: MasterProblem
    train: BinnedDataset
    test: Optional[BinnedDataset]
    bins: int
    accuracies: Dict[str, Optional[float]]


# ============================================================================
# PRÉPARATION
# ============================================================================

def _label_name(raw_path: str, config: RunConfig) -> str:
    if config.label is not None:
        return config.label
    with open(raw_path, "r", encoding="utf-8") as f:
        header = f.readline().strip()
    if not header:
        raise ConfigError(f"{raw_path}: en-tête manquant")
    return header.split(",")[-1]


def load_raw(data_path: str, config: RunConfig) -> RawDataset:
    """CSV brut; la dernière colonne est la cible sauf --label."""
    if not os.path.isfile(data_path):
        raise ConfigError(f"Fichier introuvable: {data_path}")
    hints = load_json(config.schema) if config.schema else None
    return load_csv(data_path, _label_name(data_path, config), hints)


def _task(config: RunConfig) -> str:
    return "classification" if config.metric == "misclassification" else "regression"


def _group_index(names: Sequence[str], group_feature: Optional[str]) -> Optional[int]:
    if group_feature is None:
        return None
    if group_feature not in names:
        raise ConfigError(f"Feature de groupe inconnue: {group_feature}")
    return list(names).index(group_feature)


def encode_splits(
    raw: RawDataset,
    config: RunConfig,
    bins: int,
    train_idx: np.ndarray,
    other: Sequence[np.ndarray] = (),
    group_feature: Optional[str] = None,
) -> Tuple[BinnedDataset, List[Optional[BinnedDataset]]]:
    """Seuils calculés sur l'entraînement; les autres parties sont encodées avec le même schéma."""
    train_raw = subset_raw(raw, train_idx)
    specs = build_bin_specs(train_raw, bins, cumulative=config.cumulative)
    group = _group_index(train_raw.feature_names, group_feature)
    train = encode(train_raw, specs, task=_task(config), group_feature=group)
    encoded: List[Optional[BinnedDataset]] = []
    for idx in other:
        if idx is None or len(idx) == 0:
            encoded.append(None)
            continue
        encoded.append(encode(subset_raw(raw, idx), {}, schema=train.schema, group_feature=group))
    return train, encoded


def _positive_index(dataset: BinnedDataset, name: Optional[str], required: bool) -> Optional[int]:
    if name is None:
        if not required:
            return None
        if dataset.n_classes == 2:
            logger.info(f"Classe positive par défaut: {dataset.schema.classes[1]}")
            return 1
        raise ConfigError("Une classe positive est requise pour cette contrainte")
    if name not in dataset.schema.classes:
        raise ConfigError(f"Classe positive inconnue: {name} (classes: {dataset.schema.classes})")
    return dataset.schema.classes.index(name)


def build_problem(
    train: BinnedDataset, config: RunConfig, constraints: ConstraintsConfig
) -> Tuple[FeatureGraph, RuleSettings, List[SideConstraint], CgConfig, List[int]]:
    """Graphe, paramètres de règles, lignes latérales et configuration CG d'une exécution."""
    positive_name = config.positive_class or constraints.positive_class
    positive = _positive_index(train, positive_name, constraints.needs_positive_class) if train.is_classification else None

    settings = RuleSettings.for_dataset(
        train,
        metric=config.metric,
        max_rule_length=config.depth,
        min_support=config.min_support,
        positive_class=positive,
        fairness_delta=constraints.per_path_delta,
        fairness_soft_penalty=constraints.soft_penalty,
    )
    order = information_gain_order(train) if config.order == "gain" else list(range(train.n_features))
    graph = build_graph(
        train,
        feature_order=order,
        constraints=AttributeConstraints(
            forbidden_pairs=constraints.forbidden_pairs,
            max_path_cost=constraints.max_cost,
            node_costs=constraints.node_costs,
        ),
    )

    side: List[SideConstraint] = []
    if constraints.min_f1 is not None:
        side.append(linearize_f1_constraint(constraints.min_f1))
    if constraints.min_precision is not None:
        side.append(linearize_precision_constraint(constraints.min_precision))
    if constraints.budget_delta is not None:
        if positive is None:
            raise ConfigError("Le budget d'équité exige une classe positive")
        side.append(fairness_budget_constraint(constraints.budget_delta))

    cg_config = CgConfig(
        k=config.k,
        max_iterations=config.max_iterations,
        max_columns=config.max_columns,
        dual_tolerance=DUAL_TOLERANCE,
        min_support=config.min_support,
        max_rule_length=config.depth,
        leaf_budget=config.leaf_budget,
        time_limit=config.time_limit_s,
    )
    return graph, settings, side, cg_config, order


def _accuracy(tree: MultiwayTree, dataset: Optional[BinnedDataset]) -> Optional[float]:
    if dataset is None or dataset.n_samples == 0:
        return None
    report = evaluate(tree, dataset)
    return report.accuracy if tree.is_classification else report.rmse


def train_model(
    raw: RawDataset,
    config: RunConfig,
    constraints: ConstraintsConfig,
    bins: int,
    train_idx: np.ndarray,
    val_idx: np.ndarray,
    test_idx: np.ndarray,
) -> TrainOutcome:
    """Entraîne sur train_idx, évalue sur les trois parties (exactitude, ou RMSE en régression)."""
    group = config.group_feature or constraints.group_feature
    train, (val, test) = encode_splits(raw, config, bins, train_idx, (val_idx, test_idx), group)
    graph, settings, side, cg_config, order = build_problem(train, config, constraints)
    master, report = run_cg(graph, train, cg_config, settings, side, default_penalties(train, settings.metric))
    tree = assemble_tree(report.solution, master, train, order, config.depth)
    accuracies = {
        "train_accuracy": _accuracy(tree, train),
        "val_accuracy": _accuracy(tree, val),
        "test_accuracy": _accuracy(tree, test),
    }
    return TrainOutcome(tree, train.schema, report, master, train, test, bins, accuracies)


def _splits(n: int, config: RunConfig) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    if config.no_split:
        empty = np.zeros(0, dtype=np.int64)
        return np.arange(n, dtype=np.int64), empty, empty
    return split_indices(n, config.split, config.seed)


def _better(candidate: Optional[float], best: Optional[float], classification: bool) -> bool:
    if candidate is None:
        return False
    if best is None:
        return True
    return candidate > best if classification else candidate < best


def tune_and_train(raw: RawDataset, config: RunConfig, constraints: ConstraintsConfig) -> TrainOutcome:
    """Choix de κ sur la validation puis réentraînement sur train+val avec le κ retenu."""
    train_idx, val_idx, test_idx = _splits(raw.n_samples, config)
    if not config.tune_bins:
        return train_model(raw, config, constraints, config.bins, train_idx, val_idx, test_idx)
    if val_idx.size == 0:
        raise ConfigError("--tune-bins exige une partie validation non vide")

    classification = _task(config) == "classification"
    best_bins, best_score = None, None
    for bins in TUNE_BINS_CANDIDATES:
        outcome = train_model(raw, config, constraints, bins, train_idx, val_idx, np.zeros(0, dtype=np.int64))
        score = outcome.accuracies["val_accuracy"]
        logger.info(f"📊 κ={bins}: validation {score}")
        if _better(score, best_score, classification):
            best_bins, best_score = bins, score

    logger.info(f"✅ κ retenu: {best_bins}")
    merged = np.sort(np.concatenate([train_idx, val_idx]))
    outcome = train_model(raw, config, constraints, best_bins, merged, np.zeros(0, dtype=np.int64), test_idx)
    outcome.accuracies["val_accuracy"] = best_score
    return outcome


# ============================================================================
# COMMANDES
# ============================================================================

def _fmt(value: Optional[float]) -> str:
    return "none" if value is None else f"{value:.6g}"


def cmd_train(config: RunConfig, data_path: str, model_path: Optional[str] = None) -> int:
    """Entraîne un arbre, écrit le modèle JSON et affiche le résumé de la génération de colonnes."""
    started = time.monotonic()
    try:
        config = config.validate()
        constraints = load_constraints(config.constraints)
        raw = load_raw(data_path, config)
        outcome = tune_and_train(raw, config, constraints)
    except OmtError as e:
        logger.error(f"❌ Entraînement impossible: {e}")
        return EXIT_ERROR

    wall_time = time.monotonic() - started
    report = outcome.report
    if model_path:
        save_text(model_path, to_json(outcome.tree, outcome.schema))
        logger.info(f"✅ Modèle écrit dans {model_path}")
    if config.dump_lp:
        os.makedirs(config.dump_lp, exist_ok=True)
        lp_path = os.path.join(config.dump_lp, "final_rmp.lp")
        save_text(lp_path, format_lp(build_rmp(outcome.master)))
        logger.info(f"RMP final écrit dans {lp_path}")

    print(f"nu_lp={report.nu_lp:.6g}")
    print(f"nu_ip={report.nu_ip:.6g}")
    print(f"gap={report.gap:.6g}")
    print(f"iterations={report.iterations_run}")
    print(f"converged_by={report.converged_by}")
    print(f"leaves={outcome.tree.n_rules}")
    print(f"bins={outcome.bins}")
    print(f"cumulative={int(config.cumulative)}")
    print(f"wall_time_s={wall_time:.3f}")
    for name, value in outcome.accuracies.items():
        print(f"{name}={_fmt(value)}")
    if outcome.train.is_classification:
        baseline = greedy_baseline(outcome.train, config.depth, config.min_support)
        print(f"baseline_train_accuracy={_fmt(_accuracy(baseline, outcome.train))}")
        print(f"baseline_test_accuracy={_fmt(_accuracy(baseline, outcome.test))}")

    if config.record:
        get_db(config.db).add_run(
            dataset=Path(data_path).stem,
            depth=config.depth,
            leaves=config.leaf_budget,
            bins=outcome.bins,
            cumulative=int(config.cumulative),
            metric=config.metric,
            seed=config.seed,
            nu_lp=report.nu_lp,
            nu_ip=report.nu_ip,
            gap=report.gap,
            iterations=report.iterations_run,
            converged_by=report.converged_by,
            wall_time_s=wall_time,
            **outcome.accuracies,
        )
    return EXIT_OK


def _load_model_and_data(model_path: str, data_path: str) -> Tuple[MultiwayTree, EncodingSchema, Optional[BinnedDataset]]:
    with open(model_path, "r", encoding="utf-8") as f:
        tree, schema = load_tree(f.read())
    if os.path.getsize(data_path) == 0:
        return tree, schema, None
    with open(data_path, "r", encoding="utf-8") as f:
        header = f.readline().strip().split(",")
    label = schema.label_name if schema.label_name in header else None
    raw = load_csv(data_path, label)
    dataset = encode(raw, {}, schema=schema)
    if dataset.n_unseen:
        logger.warning(f"⚠️ {dataset.n_unseen} valeurs inconnues: routage par SKIP ou repli")
    return tree, schema, dataset


def cmd_predict(model_path: str, data_path: str) -> int:
    """Une prédiction par ligne, dans l'ordre du fichier."""
    try:
        tree, schema, dataset = _load_model_and_data(model_path, data_path)
    except OmtError as e:
        logger.error(f"❌ Prédiction impossible: {e}")
        return EXIT_ERROR
    if dataset is None or dataset.n_samples == 0:
        return EXIT_OK
    predictions, _ = predict_all(tree, dataset.codes)
    for value in predictions:
        print(schema.classes[int(value)] if tree.is_classification else f"{value:.6g}")
    return EXIT_OK


def cmd_eval(model_path: str, data_path: str, positive_class: Optional[str] = None) -> int:
    """Rapport d'évaluation en JSON."""
    try:
        tree, schema, dataset = _load_model_and_data(model_path, data_path)
        if dataset is None or dataset.labels is None:
            raise ConfigError(f"Colonne cible {schema.label_name} absente de {data_path}")
        positive = _positive_index(dataset, positive_class, False) if tree.is_classification else None
    except OmtError as e:
        logger.error(f"❌ Évaluation impossible: {e}")
        return EXIT_ERROR
    report = evaluate(tree, dataset, positive)
    print(json.dumps(report.as_dict(), indent=2))
    return EXIT_OK


def _dfs_path_count(graph: FeatureGraph, max_rule_length: Optional[int]) -> int:
    count = 0
    stack = [(0, 0)]
    while stack:
        t, length = stack.pop()
        if t == len(graph.layers):
            count += 1
            continue
        for node in graph.layer_nodes(t):
            used = length + (0 if node.is_skip else 1)
            if max_rule_length is None or used <= max_rule_length:
                stack.append((t + 1, used))
    return count


def _check(name: str, passed: bool, detail: str) -> bool:
    print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
    return passed


def cmd_oracle(config: RunConfig, data_path: str) -> int:
    """
    Compare la génération de colonnes aux oracles exhaustifs: dénombrement des
    chemins, certificat de faisabilité duale et Master-MIP sur le pool complet.
    """
    try:
        config = replace(config.validate(), no_split=True)
        constraints = load_constraints(config.constraints)
        raw = load_raw(data_path, config)
        train, _ = encode_splits(
            raw, config, config.bins, np.arange(raw.n_samples), (), config.group_feature or constraints.group_feature
        )
        graph, settings, side, cg_config, _ = build_problem(train, config, constraints)

        count = count_paths(graph, config.depth)
        print(f"paths={count}")
        if count > ORACLE_PATH_CAP:
            raise OracleCapExceeded(count, ORACLE_PATH_CAP)
        results = [_check("path_count", count == _dfs_path_count(graph, config.depth), f"{count} chemins")]

        penalties = default_penalties(train, settings.metric)
        master, report = run_cg(graph, train, cg_config, settings, side, penalties)
        full_pool = enumerate_paths(graph, train, settings, ORACLE_PATH_CAP)
        print(f"feasible_paths={len(full_pool)} converged_by={report.converged_by}")

        if report.converged_by != "dual_feasible":
            print(f"SKIP dual_certificate, full_mip: CG arrêtée par {report.converged_by}")
            return EXIT_OK

        min_rc = min((reduced_cost(rule, report.final_duals, side) for rule in full_pool), default=0.0)
        results.append(
            _check("dual_certificate", min_rc >= -(DUAL_TOLERANCE + 1e-9), f"min rc exhaustif = {min_rc:.3e}")
        )

        full = MasterProblem(train.n_samples, penalties, config.leaf_budget, side, max(1, len(full_pool)))
        full.add_rules(full_pool)
        exhaustive = solve_master_mip(full, time_limit=config.time_limit_s)
        results.append(
            _check(
                "full_mip",
                abs(exhaustive.objective - report.nu_ip) <= 1e-6,
                f"ν_IP CG = {report.nu_ip:.6g}, ν_IP exhaustif = {exhaustive.objective:.6g}",
            )
        )
    except OracleCapExceeded as e:
        logger.error(f"❌ Oracle refusé: {e}")
        return EXIT_REFUSED
    except OmtError as e:
        logger.error(f"❌ Oracle impossible: {e}")
        return EXIT_ERROR
    return EXIT_OK if all(results) else EXIT_ERROR


def cmd_inspect_graph(config: RunConfig, data_path: str) -> int:
    """Affiche les couches du graphe de features et le nombre de chemins."""
    try:
        config = replace(config.validate(), no_split=True)
        constraints = load_constraints(config.constraints)
        raw = load_raw(data_path, config)
        train, _ = encode_splits(
            raw, config, config.bins, np.arange(raw.n_samples), (), config.group_feature or constraints.group_feature
        )
        graph, _, _, _, _ = build_problem(train, config, constraints)
    except OmtError as e:
        logger.error(f"❌ Inspection impossible: {e}")
        return EXIT_ERROR

    print(f"nodes={graph.n_nodes} layers={len(graph.layers)}")
    for t, layer in enumerate(graph.layers):
        labels = [node.label for node in graph.layer_nodes(t)]
        print(f"layer {t} ({train.schema.feature_names[layer.feature_index]}, {layer.size} nœuds): {' | '.join(labels)}")
    print(f"paths={count_paths(graph)}")
    print(f"paths_max_length_{config.depth}={count_paths(graph, config.depth)}")
    return EXIT_OK


def cmd_report(db_file: Optional[str] = None) -> int:
    """Exactitude test moyenne ± écart-type par (jeu de données, profondeur)."""
    rows = get_db(db_file).summarize()
    if not rows:
        print("Aucune exécution enregistrée")
        return EXIT_OK
    print("dataset\tdepth\truns\ttest_accuracy\tgap")
    for row in rows:
        accuracy = (
            "n/a" if row["test_accuracy_mean"] is None
            else f"{row['test_accuracy_mean']:.3f}±{row['test_accuracy_std']:.3f}"
        )
        print(f"{row['dataset']}\t{row['depth']}\t{row['runs']}\t{accuracy}\t{row['gap_mean']:.4f}±{row['gap_std']:.4f}")
    return EXIT_OK


def cmd_export(model_path: str, fmt: str = "dot") -> int:
    """Réexporte un modèle JSON (DOT pour le rendu)."""
    try:
        with open(model_path, "r", encoding="utf-8") as f:
            tree, schema = load_tree(f.read())
        print(export(tree, schema, fmt), end="")
    except OmtError as e:
        logger.error(f"❌ Export impossible: {e}")
        return EXIT_ERROR
    return EXIT_OK


__all__ = [
    'RunConfig',
    'TrainOutcome',
    'build_problem',
    'cmd_eval',
    'cmd_export',
    'cmd_inspect_graph',
    'cmd_oracle',
    'cmd_predict',
    'cmd_report',
    'cmd_train',
    'encode_splits',
    'load_raw',
    'train_model',
    'tune_and_train',
]
