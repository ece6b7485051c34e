import json
from dataclasses import replace

import numpy as np
import pytest

from graph import RuleSettings, rule_from_conditions
from preprocessing.dataset import make_bin_spec
from solvers import MasterProblem, MipSolution
from tree import (
    TreeRule,
    assemble_tree,
    build_trie,
    condition_text,
    evaluate,
    export,
    greedy_baseline,
    load_tree,
    predict,
    to_dot,
    to_json,
)
from tree.multiway_tree import make_tree
from utils.errors import ConfigError, SolverError

from conftest import make_dataset


def x0_tree():
    rules = [
        TreeRule(conditions=((0, frozenset({c})),), label=float(c == 1), pool_index=c, support=2)
        for c in range(3)
    ]
    return make_tree(rules, fallback_label=0.0, feature_order=(0, 1))


def selected_master(dataset, conditions):
    mp = MasterProblem(dataset.n_samples, np.full(dataset.n_samples, 2.0), len(conditions))
    mp.add_rules([rule_from_conditions(dataset, [c], RuleSettings()) for c in conditions])
    return mp


def test_assemble_tree_partitions_training_set(toy_dataset):
    mp = selected_master(toy_dataset, [(0, {0}), (0, {1}), (0, {2})])
    mip = MipSolution(selected=[0, 1, 2], slack_samples=[], objective=0.0, bound=0.0, gap=0.0)
    tree = assemble_tree(mip, mp, toy_dataset, depth=1)
    assert tree.n_rules == 3
    assert [rule.label for rule in tree.rules] == [0.0, 1.0, 0.0]
    assert tree.leaves == 3
    assert evaluate(tree, toy_dataset).accuracy == 1.0


def test_assemble_tree_rejects_overlapping_rules(toy_dataset):
    mp = selected_master(toy_dataset, [(0, {0}), (1, {0})])
    mip = MipSolution(selected=[0, 1], slack_samples=[], objective=0.0, bound=0.0, gap=0.0)
    with pytest.raises(SolverError):
        assemble_tree(mip, mp, toy_dataset)


def test_slack_samples_are_allowed_to_stay_uncovered(toy_dataset):
    mp = selected_master(toy_dataset, [(0, {1})])
    mip = MipSolution(selected=[0], slack_samples=[0, 1, 4, 5, 6], objective=10.0, bound=10.0, gap=0.0)
    tree = assemble_tree(mip, mp, toy_dataset)
    assert predict(tree, [2, 0]) == tree.fallback_label == 0.0


def test_more_specific_rule_wins():
    rules = [
        TreeRule(conditions=((0, frozenset({0})),), label=0.0, pool_index=0),
        TreeRule(conditions=((0, frozenset({0})), (1, frozenset({1}))), label=1.0, pool_index=1),
    ]
    tree = make_tree(rules, fallback_label=2.0, feature_order=(0, 1))
    assert tree.rules[0].pool_index == 1
    assert predict(tree, [0, 1]) == 1.0
    assert predict(tree, [0, 0]) == 0.0
    assert predict(tree, [1, 1]) == 2.0


def test_evaluate_classification_metrics(toy_dataset):
    report = evaluate(x0_tree(), toy_dataset)
    assert report.accuracy == 1.0
    assert report.f1 == 1.0
    assert sum(map(sum, report.confusion)) == toy_dataset.n_samples
    assert report.coverage == 1.0
    assert report.mean_rule_length == 1.0


def test_evaluate_fallback_only_tree(toy_dataset):
    tree = make_tree([], fallback_label=0.0, feature_order=(0, 1))
    report = evaluate(tree, toy_dataset)
    assert report.accuracy == pytest.approx(5 / 8)
    assert report.f1 == 0.0
    assert report.coverage == 0.0
    assert report.confusion == [[5, 0], [3, 0]]


def test_evaluate_regression_errors():
    dataset = make_dataset([[0, 0]], [1.0, 3.0], task="regression")
    tree = make_tree([], fallback_label=2.0, feature_order=(0,), task="regression")
    report = evaluate(tree, dataset)
    assert report.accuracy is None
    assert report.rmse == pytest.approx(1.0)
    assert report.mae == pytest.approx(1.0)


def test_json_export_reloads_identically(toy_dataset):
    tree = x0_tree()
    text = to_json(tree, toy_dataset.schema)
    document = json.loads(text)
    assert document["rules"][1]["conditions"][0]["text"] == "x0=v1"
    assert document["fallback_name"] == "0"

    loaded, schema = load_tree(text)
    assert loaded == tree
    assert schema == toy_dataset.schema
    for sample in ([0, 0], [1, 1], [2, 0]):
        assert predict(loaded, sample) == predict(tree, sample)
    assert to_json(loaded, schema) == text


def test_load_tree_rejects_bad_documents():
    with pytest.raises(ConfigError):
        load_tree("{not json")
    with pytest.raises(ConfigError):
        load_tree(json.dumps({"version": "autre"}))


def test_dot_export_uses_any_for_skipped_features(toy_dataset):
    rules = [
        TreeRule(conditions=((0, frozenset({0})), (1, frozenset({1}))), label=1.0, pool_index=0),
        TreeRule(conditions=((1, frozenset({0})),), label=0.0, pool_index=1),
    ]
    tree = make_tree(rules, fallback_label=0.0, feature_order=(0, 1))
    dot = to_dot(tree, toy_dataset.schema)
    assert dot.startswith("digraph omt {")
    assert '[label="any"]' in dot
    assert '[label="x0=v0"]' in dot
    assert export(tree, toy_dataset.schema, "dot") == dot
    with pytest.raises(ConfigError):
        export(tree, toy_dataset.schema, "svg")


def test_trie_of_empty_tree_is_fallback_leaf():
    root = build_trie(make_tree([], fallback_label=1.0, feature_order=(0,)))
    assert root.children == {}
    assert root.label == 1.0


def test_condition_text_merges_contiguous_intervals(toy_dataset):
    schema = replace(
        toy_dataset.schema,
        feature_kinds=["numerical", "categorical"],
        levels=[None, ["v0", "v1"]],
        bin_specs=[make_bin_spec(0, [0.5, 1.5]), None],
    )
    assert condition_text(schema, 0, [0, 1]) == "x0 in [-inf, 1.5)"
    assert condition_text(schema, 0, [2]) == "x0 in [1.5, +inf)"
    assert condition_text(schema, 1, [0, 1]) == "x1 in {v0, v1}"


def test_greedy_baseline_on_separable_data(toy_dataset):
    tree = greedy_baseline(toy_dataset, depth=2)
    assert tree.n_rules == 3
    assert all(rule.length == 1 for rule in tree.rules)
    assert evaluate(tree, toy_dataset).accuracy == 1.0


def test_greedy_baseline_pure_labels_has_no_rules():
    dataset = make_dataset([[0, 1, 2]], [1, 1, 1], classes=["0", "1"])
    tree = greedy_baseline(dataset, depth=3)
    assert tree.n_rules == 0
    assert tree.fallback_label == 1.0


def test_greedy_baseline_respects_depth(monks_dataset):
    tree = greedy_baseline(monks_dataset, depth=1)
    assert max(rule.length for rule in tree.rules) == 1


def test_greedy_baseline_requires_classification():
    dataset = make_dataset([[0, 1]], [1.0, 2.0], task="regression")
    with pytest.raises(ConfigError):
        greedy_baseline(dataset, depth=1)
