"""Chargement et encodage des données."""
from .dataset import (
    BinnedDataset,
    BinSpec,
    EncodingSchema,
    RawDataset,
    apply_cumulative_binning,
    build_bin_specs,
    encode,
    information_gain_order,
    load_csv,
    make_bin_spec,
    quantile_thresholds,
    split_indices,
    subset,
    subset_raw,
)

__all__ = [
    'BinnedDataset',
    'BinSpec',
    'EncodingSchema',
    'RawDataset',
    'apply_cumulative_binning',
    'build_bin_specs',
    'encode',
    'information_gain_order',
    'load_csv',
    'make_bin_spec',
    'quantile_thresholds',
    'split_indices',
    'subset',
    'subset_raw',
]
