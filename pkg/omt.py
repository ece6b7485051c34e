"""
OMT: arbres de décision multi-branches optimaux par génération de colonnes.

Usage:
    python omt.py train data.csv -o tree.json --depth 3 --seed 1
    python omt.py predict tree.json new.csv
    python omt.py eval tree.json test.csv
    python omt.py oracle toy.csv --depth 2
    python omt.py inspect-graph data.csv
    python omt.py export tree.json
    python omt.py report
"""
import argparse
import logging
import sys
from typing import List, Optional

from commands import (
    RunConfig,
    cmd_eval,
    cmd_export,
    cmd_inspect_graph,
    cmd_oracle,
    cmd_predict,
    cmd_report,
    cmd_train,
)
from config import (
    DEFAULT_BINS,
    DEFAULT_DEPTH,
    DEFAULT_K,
    DEFAULT_MAX_COLUMNS,
    DEFAULT_MAX_ITERATIONS,
    DEFAULT_MIN_SUPPORT,
    DEFAULT_TIME_LIMIT_S,
    LOG_LEVEL,
)
from utils.constants import METRIC_ALIASES
from utils.errors import ConfigError
from utils.helpers import parse_split

LOG_LEVELS = {"quiet": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}

# Configuration du logging (sur stderr, stdout reste réservé aux résultats)
logging.basicConfig(
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    level=LOG_LEVELS.get(LOG_LEVEL, logging.INFO),
    stream=sys.stderr,
)
logger = logging.getLogger(__name__)


def _add_run_options(parser: argparse.ArgumentParser) -> None:
    """Drapeaux partagés par train, oracle et inspect-graph."""
    parser.add_argument("data", help="Fichier CSV (en-tête obligatoire)")
    parser.add_argument("--depth", type=int, default=DEFAULT_DEPTH, help="Longueur maximale d'une règle")
    parser.add_argument("--leaves", type=int, default=None, help="Nombre maximal de feuilles (défaut 2^depth)")
    parser.add_argument("--bins", type=int, default=DEFAULT_BINS, help="Nombre d'intervalles de quantiles κ")
    parser.add_argument(
        "--no-cumulative", action="store_true", help="Intervalles de base seulement (pas d'unions contiguës)"
    )
    parser.add_argument("--metric", choices=sorted(METRIC_ALIASES), default="misclass")
    parser.add_argument("--K", dest="k", type=int, default=DEFAULT_K, help="Chemins conservés par nœud (KSP)")
    parser.add_argument("--max-iterations", type=int, default=DEFAULT_MAX_ITERATIONS)
    parser.add_argument("--max-columns", type=int, default=DEFAULT_MAX_COLUMNS)
    parser.add_argument("--min-support", type=float, default=DEFAULT_MIN_SUPPORT)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--time-limit", type=float, default=DEFAULT_TIME_LIMIT_S, help="Budget en secondes")
    parser.add_argument("--constraints", default=None, help="Fichier JSON de contraintes")
    parser.add_argument("--schema", default=None, help="Fichier JSON d'indications de schéma")
    parser.add_argument("--order", choices=["natural", "gain"], default="natural")
    parser.add_argument("--label", default=None, help="Colonne cible (défaut: dernière colonne)")
    parser.add_argument("--group-feature", default=None)
    parser.add_argument("--positive-class", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="omt", description="Arbres multi-branches optimaux")
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="Entraîner un arbre")
    _add_run_options(train)
    train.add_argument("-o", "--output", default=None, help="Modèle JSON de sortie")
    train.add_argument("--split", default="50,25,25", help="Fractions train,val,test")
    train.add_argument("--no-split", action="store_true", help="Entraîner sur toutes les données")
    train.add_argument("--tune-bins", action="store_true", help="Choisir κ sur la validation")
    train.add_argument("--dump-lp", default=None, metavar="DIR", help="Écrire le RMP final")
    train.add_argument("--db", default=None, help="Base SQLite des exécutions")
    train.add_argument("--no-record", action="store_true", help="Ne pas enregistrer l'exécution")

    predict = sub.add_parser("predict", help="Prédire avec un modèle")
    predict.add_argument("model")
    predict.add_argument("data")

    evaluate = sub.add_parser("eval", help="Évaluer un modèle")
    evaluate.add_argument("model")
    evaluate.add_argument("data")
    evaluate.add_argument("--positive-class", default=None)

    oracle = sub.add_parser("oracle", help="Comparer la génération de colonnes aux oracles exhaustifs")
    _add_run_options(oracle)

    inspect = sub.add_parser("inspect-graph", help="Décrire le graphe de features")
    _add_run_options(inspect)

    export = sub.add_parser("export", help="Réexporter un modèle")
    export.add_argument("model")
    export.add_argument("--format", choices=["json", "dot"], default="dot")

    report = sub.add_parser("report", help="Résumé des exécutions enregistrées")
    report.add_argument("--db", default=None)
    return parser


def run_config_from_args(args: argparse.Namespace) -> RunConfig:
    values = dict(
        depth=args.depth,
        leaves=args.leaves,
        bins=args.bins,
        metric=args.metric,
        k=args.k,
        max_iterations=args.max_iterations,
        max_columns=args.max_columns,
        min_support=args.min_support,
        seed=args.seed,
        time_limit_s=args.time_limit,
        cumulative=not args.no_cumulative,
        order=args.order,
        constraints=args.constraints,
        schema=args.schema,
        label=args.label,
        group_feature=args.group_feature,
        positive_class=args.positive_class,
    )
    if args.command == "train":
        values.update(
            split=parse_split(args.split),
            no_split=args.no_split,
            tune_bins=args.tune_bins,
            dump_lp=args.dump_lp,
            db=args.db,
            record=not args.no_record,
        )
    return RunConfig(**values)


def main(argv: Optional[List[str]] = None) -> int:
    """Fonction principale; retourne le code de sortie."""
    args = build_parser().parse_args(argv)

    if args.command == "predict":
        return cmd_predict(args.model, args.data)
    if args.command == "eval":
        return cmd_eval(args.model, args.data, args.positive_class)
    if args.command == "export":
        return cmd_export(args.model, args.format)
    if args.command == "report":
        return cmd_report(args.db)

    try:
        config = run_config_from_args(args)
    except ConfigError as e:
        logger.error(f"❌ {e}")
        return 1
    if args.command == "train":
        return cmd_train(config, args.data, args.output)
    if args.command == "oracle":
        return cmd_oracle(config, args.data)
    return cmd_inspect_graph(config, args.data)


if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        logger.info("🛑 Interruption clavier détectée")
        sys.exit(130)
    except Exception as e:
        logger.error(f"❌ Erreur fatale: {e}", exc_info=True)
        sys.exit(1)
