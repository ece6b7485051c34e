import numpy as np
import pytest

from preprocessing.dataset import (
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
from utils.constants import UNSEEN_CODE
from utils.errors import ConfigError, DatasetParseError


CAR_LIKE = """buying,doors,safety,class
low,2,high,acc
med,4,low,unacc
high,2,med,unacc
vhigh,4,high,acc
low,4,med,acc
"""


def test_load_csv_infers_column_kinds(write_csv):
    raw = load_csv(write_csv("car.csv", CAR_LIKE), "class")
    kinds = [kind for kind, _ in raw.columns]
    assert kinds == ["categorical", "numerical", "categorical", "categorical"]
    assert raw.n_samples == 5
    assert raw.feature_names == ["buying", "doors", "safety"]


def test_load_csv_rejects_text_in_declared_numeric_column(write_csv):
    path = write_csv("bad.csv", "a,y\n1,x\nabc,y\n")
    with pytest.raises(DatasetParseError) as excinfo:
        load_csv(path, "y", {"a": "numerical"})
    assert excinfo.value.row == 3


def test_load_csv_unknown_label(write_csv):
    with pytest.raises(ConfigError):
        load_csv(write_csv("car.csv", CAR_LIKE), "missing")


def test_quantile_thresholds_merge_duplicates():
    assert quantile_thresholds([1, 1, 1, 1], 4) == []
    cuts = quantile_thresholds(np.arange(1, 9), 4)
    assert cuts == sorted(set(cuts))
    assert len(cuts) == 3


def test_quantile_thresholds_rejects_single_bin():
    with pytest.raises(ConfigError):
        quantile_thresholds([1.0, 2.0], 1)


def test_cumulative_binning_three_bases_gives_five_intervals():
    spec = apply_cumulative_binning(make_bin_spec(0, [1.0, 2.0]))
    assert spec.spans == ((0, 0), (1, 1), (2, 2), (0, 1), (1, 2))
    assert spec.intervals[0] == (-np.inf, 1.0)
    assert spec.intervals[-1] == (1.0, np.inf)


def test_cumulative_binning_count_for_four_bases():
    spec = apply_cumulative_binning(make_bin_spec(0, [1.0, 2.0, 3.0]))
    # κ(κ+1)/2 − 1 unions
    assert len(spec.spans) == 9


@pytest.mark.parametrize("kappa", range(2, 11))
def test_cumulative_binning_covers_every_contiguous_union(kappa):
    spec = apply_cumulative_binning(make_bin_spec(3, [float(t) for t in range(1, kappa)]))
    assert len(spec.spans) == kappa * (kappa + 1) // 2 - 1
    assert len(set(spec.spans)) == len(spec.spans)
    assert (0, kappa - 1) not in spec.spans
    assert all(0 <= a <= b < kappa for a, b in spec.spans)
    for (a, b), interval in zip(spec.spans, spec.intervals):
        assert interval == (spec.base_interval(a)[0], spec.base_interval(b)[1])


@pytest.mark.parametrize("kappa", [2, 3, 5, 8])
def test_encoded_values_fall_in_their_intervals(write_csv, kappa):
    rng = np.random.default_rng(kappa)
    values = rng.normal(size=60).round(3)
    path = write_csv("x.csv", "x,y\n" + "\n".join(f"{v},{i % 2}" for i, v in enumerate(values)) + "\n")
    raw = load_csv(path, "y")
    dataset = encode(raw, build_bin_specs(raw, kappa))
    spec = dataset.schema.bin_specs[0]
    for value, code in zip(values, dataset.codes[0]):
        lo, hi = spec.base_interval(int(code))
        assert lo <= value < hi
        for (a, b), (left, right) in zip(spec.spans, spec.intervals):
            assert (a <= code <= b) == (left <= value < right)


def test_make_bin_spec_rejects_unsorted_thresholds():
    with pytest.raises(ConfigError):
        make_bin_spec(0, [2.0, 1.0])


def test_encode_numeric_codes_follow_thresholds(write_csv):
    path = write_csv("num.csv", "x,y\n" + "\n".join(f"{v},{v % 2}" for v in range(1, 9)) + "\n")
    raw = load_csv(path, "y")
    specs = build_bin_specs(raw, 4, cumulative=False)
    dataset = encode(raw, specs)
    assert dataset.cardinalities == (4,)
    assert dataset.codes[0].tolist() == sorted(dataset.codes[0].tolist())
    assert np.bincount(dataset.codes[0]).tolist() == [2, 2, 2, 2]


def test_encode_low_cardinality_numeric_uses_one_value_per_bin(write_csv):
    path = write_csv("doors.csv", "doors,y\n2,a\n4,b\n2,a\n4,b\n")
    raw = load_csv(path, "y")
    dataset = encode(raw, build_bin_specs(raw, 4))
    assert dataset.codes[0].tolist() == [0, 1, 0, 1]


def test_encode_with_schema_marks_unseen_levels(write_csv):
    raw = load_csv(write_csv("car.csv", CAR_LIKE), "class")
    train = encode(raw, build_bin_specs(raw, 4))
    new = load_csv(write_csv("new.csv", "buying,doors,safety\nfree,2,high\nlow,4,low\n"), None)
    encoded = encode(new, {}, schema=train.schema)
    assert encoded.codes[0, 0] == UNSEEN_CODE
    assert encoded.n_unseen == 1
    assert encoded.labels is None


def test_encode_with_schema_names_missing_columns(write_csv):
    raw = load_csv(write_csv("car.csv", CAR_LIKE), "class")
    train = encode(raw, build_bin_specs(raw, 4))
    new = load_csv(write_csv("new.csv", "buying,class\nlow,acc\n"), "class")
    with pytest.raises(ConfigError, match="doors"):
        encode(new, {}, schema=train.schema)


def test_ordinal_hint_orders_levels(write_csv):
    raw = load_csv(write_csv("car.csv", CAR_LIKE), "class", {"buying": ["low", "med", "high", "vhigh"]})
    dataset = encode(raw, build_bin_specs(raw, 4))
    assert dataset.codes[0].tolist() == [0, 1, 2, 3, 0]
    assert dataset.schema.bin_specs[0].kind == "cumulative"


def test_classes_are_sorted_numerically(write_csv):
    raw = load_csv(write_csv("n.csv", "x,y\na,10\nb,9\nc,10\n"), "y")
    dataset = encode(raw, {})
    assert dataset.schema.classes == ["9", "10"]
    assert dataset.labels.tolist() == [1, 0, 1]


def test_split_indices_is_deterministic_and_disjoint():
    train, val, test = split_indices(100, (0.5, 0.25, 0.25), seed=3)
    again = split_indices(100, (0.5, 0.25, 0.25), seed=3)
    assert all(np.array_equal(a, b) for a, b in zip((train, val, test), again))
    assert (len(train), len(val), len(test)) == (50, 25, 25)
    assert len(set(train) | set(val) | set(test)) == 100


def test_split_indices_rejects_bad_fractions():
    with pytest.raises(ConfigError):
        split_indices(10, (0.5, 0.5, 0.5), seed=0)


def test_subset_and_subset_raw(write_csv, toy_dataset):
    part = subset(toy_dataset, [0, 2])
    assert part.n_samples == 2
    assert part.schema is toy_dataset.schema
    raw = load_csv(write_csv("car.csv", CAR_LIKE), "class")
    assert subset_raw(raw, [1, 3]).columns[0][1] == ["med", "vhigh"]


def test_information_gain_order_puts_separating_feature_first(toy_dataset):
    assert information_gain_order(toy_dataset)[0] == 0
