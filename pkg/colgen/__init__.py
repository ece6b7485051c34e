"""Génération de colonnes: pricing KSP et boucle principale."""
from .loop import CgReport, IterationLog, run_cg
from .pricing import CgConfig, ksp

__all__ = [
    'CgConfig',
    'CgReport',
    'IterationLog',
    'ksp',
    'run_cg',
]
