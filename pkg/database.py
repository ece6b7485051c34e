"""
Journal SQLite des entraînements: une ligne par exécution de `train`,
agrégée par `report` (moyenne ± écart-type par jeu de données et profondeur).
"""
import logging
import sqlite3
from datetime import datetime
from typing import Dict, List, Optional

import pandas as pd

from config import DB_FILE

logger = logging.getLogger(__name__)

RUN_FIELDS = (
    "dataset",
    "depth",
    "leaves",
    "bins",
    "cumulative",
    "metric",
    "seed",
    "nu_lp",
    "nu_ip",
    "gap",
    "iterations",
    "converged_by",
    "train_accuracy",
    "val_accuracy",
    "test_accuracy",
    "wall_time_s",
)


class Database:
    """Gestionnaire de la base SQLite des exécutions."""

    def __init__(self, db_file: str = DB_FILE):
        """Initialise la base (création des tables si besoin)."""
        self.db_file = db_file
        self.init_database()

    def get_connection(self) -> sqlite3.Connection:
        conn = sqlite3.connect(self.db_file)
        conn.row_factory = sqlite3.Row
        return conn

    def init_database(self):
        conn = self.get_connection()
        cursor = conn.cursor()

        # Table des exécutions
        cursor.execute("""
            CREATE TABLE IF NOT EXISTS runs (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                dataset TEXT NOT NULL,
                depth INTEGER NOT NULL,
                leaves INTEGER NOT NULL,
                bins INTEGER,
                cumulative INTEGER,
                metric TEXT NOT NULL,
                seed INTEGER,
                nu_lp REAL,
                nu_ip REAL,
                gap REAL,
                iterations INTEGER,
                converged_by TEXT,
                train_accuracy REAL,
                val_accuracy REAL,
                test_accuracy REAL,
                wall_time_s REAL,
                created_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP
            )
        """)
        # Bases créées avant l'option de binning cumulatif (migration)
        try:
            cursor.execute("ALTER TABLE runs ADD COLUMN cumulative INTEGER")
        except sqlite3.OperationalError:
            pass  # Colonne existe déjà
        cursor.execute("CREATE INDEX IF NOT EXISTS idx_runs_dataset ON runs(dataset, depth)")

        conn.commit()
        conn.close()
        logger.debug(f"Base {self.db_file} initialisée")

    # ========================================================================
    # MÉTHODES POUR LES EXÉCUTIONS
    # ========================================================================

    def add_run(self, **values) -> int:
        """Enregistre une exécution; retourne son identifiant."""
        unknown = set(values) - set(RUN_FIELDS)
        if unknown:
            raise ValueError(f"Champs inconnus: {sorted(unknown)}")
        columns = [name for name in RUN_FIELDS if name in values]
        conn = self.get_connection()
        cursor = conn.cursor()
        cursor.execute(
            f"INSERT INTO runs ({', '.join(columns)}, created_at) VALUES ({', '.join('?' * len(columns))}, ?)",
            [values[name] for name in columns] + [datetime.now().isoformat(timespec="seconds")],
        )
        run_id = cursor.lastrowid
        conn.commit()
        conn.close()
        logger.info(f"📊 Exécution #{run_id} enregistrée ({values.get('dataset')}, d={values.get('depth')})")
        return run_id

    def get_runs(self, dataset: Optional[str] = None) -> List[Dict]:
        conn = self.get_connection()
        cursor = conn.cursor()
        if dataset is None:
            cursor.execute("SELECT * FROM runs ORDER BY id")
        else:
            cursor.execute("SELECT * FROM runs WHERE dataset = ? ORDER BY id", (dataset,))
        rows = cursor.fetchall()
        conn.close()
        return [dict(row) for row in rows]

    # ========================================================================
    # MÉTHODES DE STATISTIQUES
    # ========================================================================

    def summarize(self) -> List[Dict]:
        """Par (dataset, depth): nombre d'exécutions, moyenne et écart-type de l'exactitude test et de Δ."""
        conn = self.get_connection()
        frame = pd.read_sql_query("SELECT dataset, depth, test_accuracy, gap FROM runs", conn)
        conn.close()
        if frame.empty:
            return []
        grouped = frame.groupby(["dataset", "depth"], sort=True)
        summary = grouped.agg(
            runs=("gap", "size"),
            test_accuracy_mean=("test_accuracy", "mean"),
            test_accuracy_std=("test_accuracy", "std"),
            gap_mean=("gap", "mean"),
            gap_std=("gap", "std"),
        ).reset_index()
        # Une seule exécution: écart-type nul plutôt que NaN
        summary[["test_accuracy_std", "gap_std"]] = summary[["test_accuracy_std", "gap_std"]].fillna(0.0)
        records = summary.to_dict(orient="records")
        for record in records:
            for key, value in record.items():
                if isinstance(value, float) and value != value:
                    record[key] = None
        return records


_db: Optional[Database] = None


def get_db(db_file: Optional[str] = None) -> Database:
    """Instance partagée (ou dédiée si un autre fichier est demandé)."""
    global _db
    if db_file is not None and (_db is None or _db.db_file != db_file):
        return Database(db_file)
    if _db is None:
        _db = Database()
    return _db
