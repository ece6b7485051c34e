"""
Configuration du moteur OMT.

Les valeurs par défaut peuvent être surchargées par des variables d'environnement
préfixées par OMT_ (ou via un fichier .env).
"""
import os

from dotenv import load_dotenv

load_dotenv()


def _env_int(name: str, default: int) -> int:
    return int(os.getenv(f"OMT_{name}", default))


def _env_float(name: str, default: float) -> float:
    return float(os.getenv(f"OMT_{name}", default))


# Journalisation: quiet | info | debug
LOG_LEVEL = os.getenv("OMT_LOG", "info").lower()

# Base de données des exécutions
DB_FILE = os.getenv("OMT_DB", "omt_runs.db")

# Génération de colonnes
DEFAULT_K = _env_int("K", 1000)
DEFAULT_MAX_ITERATIONS = _env_int("MAX_ITERATIONS", 40)
DEFAULT_MAX_COLUMNS = _env_int("MAX_COLUMNS", 10000)
DEFAULT_MIN_SUPPORT = _env_float("MIN_SUPPORT", 0.01)
DUAL_TOLERANCE = _env_float("DUAL_TOLERANCE", 1e-6)
STALL_WINDOW = _env_int("STALL_WINDOW", 3)
STALL_TOLERANCE = _env_float("STALL_TOLERANCE", 1e-6)

# Arbre
DEFAULT_DEPTH = _env_int("DEPTH", 3)
DEFAULT_BINS = _env_int("BINS", 4)
TUNE_BINS_CANDIDATES = (3, 4, 5, 8)
DEFAULT_SPLIT = (0.5, 0.25, 0.25)
DEFAULT_TIME_LIMIT_S = _env_float("TIME_LIMIT_S", 600.0)
# Budget garanti au Master-MIP, même si la génération de colonnes a tout consommé
MIN_MIP_TIME_S = _env_float("MIN_MIP_TIME_S", 30.0)

# Simplexe
TOL_FEAS = _env_float("TOL_FEAS", 1e-7)
TOL_OPT = _env_float("TOL_OPT", 1e-6)
TOL_GAP = _env_float("TOL_GAP", 1e-6)
REFACTOR_EVERY = _env_int("REFACTOR_EVERY", 50)
BLAND_AFTER = _env_int("BLAND_AFTER", 100)
LP_ITER_LIMIT = _env_int("LP_ITER_LIMIT", 200000)

# Master-MIP
BB_NODE_LIMIT = _env_int("BB_NODE_LIMIT", 100000)
PENALTY_FACTOR = _env_float("PENALTY_FACTOR", 2.0)

# Contraintes
MAX_GROUPS = _env_int("MAX_GROUPS", 8)

# Oracle
ORACLE_PATH_CAP = _env_int("ORACLE_PATH_CAP", 10000)
