"""Exceptions du moteur OMT."""
from typing import Optional


class OmtError(Exception):
    """Erreur de base, attrapée par les commandes."""


class DatasetParseError(OmtError):
    """Fichier CSV illisible ou mal formé."""

    def __init__(self, message: str, row: Optional[int] = None):
        self.row = row
        if row is not None:
            message = f"ligne {row}: {message}"
        super().__init__(message)


class ConfigError(OmtError):
    """Paramètre ou fichier de contraintes invalide."""


class SolverError(OmtError):
    """Le solveur LP/MIP n'a pas pu terminer."""


class OracleCapExceeded(OmtError):
    """Instance trop grande pour une énumération exhaustive."""

    def __init__(self, count: int, cap: int):
        self.count = count
        self.cap = cap
        super().__init__(f"{count} chemins > limite {cap}, énumération refusée")
