from itertools import combinations

import numpy as np
import pytest

from graph.rules import Rule
from solvers import (
    DualVector,
    MasterProblem,
    SideConstraint,
    build_rmp,
    default_penalties,
    fairness_budget_constraint,
    linearize_f1_constraint,
    linearize_precision_constraint,
    reduced_cost,
    solve_lp,
    solve_master_mip,
)
from utils.errors import ConfigError

from conftest import make_dataset


def make_rule(cover, loss, tag, tp=0, fp=0, fn=0, disparity=0.0):
    """Colonne minimale; `tag` rend la signature unique."""
    return Rule(
        node_ids=(),
        conditions=((0, frozenset({tag})),),
        cover=np.asarray(cover, dtype=np.int64),
        layer=0,
        length=1,
        loss=float(loss),
        prediction=0.0,
        tp=tp,
        fp=fp,
        fn=fn,
        disparity=disparity,
    )


def master(n, rules, leaf_budget, penalty=2.0, side=()):
    mp = MasterProblem(n, np.full(n, penalty), leaf_budget, side)
    mp.add_rules(rules)
    return mp


def brute_force(mp):
    best = None
    for size in range(mp.leaf_budget + 1):
        for chosen in combinations(range(len(mp.pool)), size):
            counts = np.zeros(mp.n_samples, dtype=int)
            for j in chosen:
                counts[mp.pool[j].cover] += 1
            if counts.max(initial=0) > 1:
                continue
            if any(not c.satisfied_by(sum(c.coefficient(mp.pool[j]) for j in chosen)) for c in mp.side_constraints):
                continue
            value, _ = mp.objective_of(chosen)
            best = value if best is None else min(best, value)
    return best


def test_empty_pool_rmp_is_slack_basis():
    mp = master(3, [], leaf_budget=2)
    lp = build_rmp(mp)
    assert lp.n_vars == 3
    assert lp.n_rows == 4
    solution = solve_lp(lp)
    assert solution.objective_value == pytest.approx(6.0)
    duals = DualVector.from_duals(solution.duals, 3)
    assert duals.lam == pytest.approx([2.0, 2.0, 2.0])
    assert duals.mu == pytest.approx(0.0)


def test_single_rule_covering_everything_is_selected():
    mp = master(3, [make_rule([0, 1, 2], 1.0, 0)], leaf_budget=1)
    solution = solve_lp(build_rmp(mp))
    assert solution.objective_value == pytest.approx(1.0)
    assert solution.primal[0] == pytest.approx(1.0)


def test_uncovered_sample_is_left_in_slack():
    mp = master(2, [make_rule([0], 0.0, 0)], leaf_budget=1)
    solution = solve_lp(build_rmp(mp))
    assert solution.primal[1:] == pytest.approx([0.0, 1.0])
    assert solution.objective_value == pytest.approx(2.0)


def test_rmp_rows_and_names():
    mp = master(2, [make_rule([0, 1], 1.0, 0)], leaf_budget=1, side=[fairness_budget_constraint(0.5)])
    lp = build_rmp(mp)
    assert lp.senses == ["=", "=", "<=", "<="]
    assert lp.row_names == ["cover0", "cover1", "cardinality", "fairness_budget"]
    assert lp.var_names == ["z0", "s0", "s1"]


def test_reduced_cost_examples():
    rule = make_rule([1, 2], 1.0, 0)
    duals = DualVector(lam=np.array([0.0, 0.5, 0.5]), mu=-0.2, tau=np.array([0.3]))
    assert reduced_cost(rule, duals) == pytest.approx(0.2)
    side = [SideConstraint("extra", lambda r: 2.0, ">=", 0.0)]
    assert reduced_cost(rule, duals, side) == pytest.approx(-0.4)
    assert reduced_cost(make_rule([], 0.0, 1), DualVector(lam=np.zeros(3), mu=0.0)) == 0.0


def test_f1_linearization_coefficients():
    row = linearize_f1_constraint(0.8)
    assert row.coefficient(make_rule([0], 0, 0, tp=10, fp=2, fn=3)) == pytest.approx(0.0)
    assert linearize_f1_constraint(0.5).coefficient(make_rule([0], 0, 1, fp=5)) == pytest.approx(-1.25)
    assert row.sense == ">=" and row.rhs == 0.0


def test_f1_aggregate_matches_definition():
    tp, fp, fn = 20, 4, 6
    assert 2 * tp / (2 * tp + fp + fn) == pytest.approx(0.8)
    coefficient = linearize_f1_constraint(0.8).coefficient(make_rule([0], 0, 0, tp=tp, fp=fp, fn=fn))
    assert coefficient == pytest.approx(0.0)


@pytest.mark.parametrize("delta", [0.0, 1.0, 1.5])
def test_f1_delta_out_of_range(delta):
    with pytest.raises(ConfigError):
        linearize_f1_constraint(delta)


def test_precision_linearization():
    row = linearize_precision_constraint(0.8)
    assert row.coefficient(make_rule([0], 0, 0, tp=8, fp=2)) == pytest.approx(0.0)
    with pytest.raises(ConfigError):
        linearize_precision_constraint(1.2)


def test_fairness_budget_uses_rule_disparity():
    row = fairness_budget_constraint(0.4)
    assert row.coefficient(make_rule([0], 0, 0, disparity=0.25)) == 0.25
    assert row.satisfied_by(0.4) and not row.satisfied_by(0.5)
    with pytest.raises(ConfigError):
        fairness_budget_constraint(-1.0)


def test_add_rules_deduplicates_and_caps():
    mp = MasterProblem(2, np.full(2, 2.0), 1, max_columns=2)
    assert mp.add_rules([make_rule([0], 0, 0), make_rule([1], 0, 0), make_rule([1], 0, 1)]) == 2
    assert mp.is_full
    assert mp.add_rules([make_rule([0], 0, 5)]) == 0


def test_master_problem_validates_inputs():
    with pytest.raises(ConfigError):
        MasterProblem(2, np.array([2.0, 0.0]), 1)
    with pytest.raises(ConfigError):
        MasterProblem(2, np.full(2, 2.0), 0)


def test_default_penalties():
    classes = make_dataset([[0, 0]], [0, 1])
    assert default_penalties(classes, "misclassification").tolist() == [2.0, 2.0]
    values = make_dataset([[0, 0, 0]], [1.0, 4.0, 2.0], task="regression")
    assert default_penalties(values, "squared_error") == pytest.approx([18.0] * 3)
    assert default_penalties(values, "absolute_error") == pytest.approx([6.0] * 3)
    constant = make_dataset([[0, 0]], [3.0, 3.0], task="regression")
    assert default_penalties(constant, "squared_error") == pytest.approx([2.0, 2.0])


def test_mip_selects_disjoint_zero_loss_rules():
    rules = [make_rule([0, 1], 0, 0), make_rule([2], 0, 1), make_rule([3, 4], 0, 2)]
    mip = solve_master_mip(master(5, rules, leaf_budget=3))
    assert mip.selected == [0, 1, 2]
    assert mip.objective == 0.0
    assert mip.gap == 0.0
    assert mip.slack_samples == []


def test_mip_prefers_full_cover_over_slack():
    rules = [make_rule([0, 1, 2, 3], 1.0, 0), make_rule([0, 1], 0.0, 1)]
    mip = solve_master_mip(master(4, rules, leaf_budget=1))
    assert mip.selected == [0]
    assert mip.objective == pytest.approx(1.0)
    assert mip.bound <= mip.objective + 1e-9


def test_mip_honors_f1_row_through_branching():
    rules = [
        make_rule([0, 1, 2, 3], 1.0, 0, tp=0, fp=0, fn=3),
        make_rule([0, 1, 2, 3], 2.0, 1, tp=3, fp=1, fn=0),
    ]
    mp = master(4, rules, leaf_budget=1, side=[linearize_f1_constraint(0.5)])
    root = solve_lp(build_rmp(mp))
    assert root.objective_value == pytest.approx(1.375)
    mip = solve_master_mip(mp)
    assert mip.selected == [1]
    assert mip.objective == pytest.approx(2.0)
    assert mip.bound == pytest.approx(1.375)


def test_mip_matches_subset_enumeration_on_random_pools():
    rng = np.random.default_rng(7)
    for _ in range(30):
        n = int(rng.integers(3, 7))
        rules = []
        for j in range(int(rng.integers(1, 9))):
            cover = np.flatnonzero(rng.random(n) < 0.5)
            rules.append(make_rule(cover, float(rng.integers(0, 3)), j))
        mp = master(n, rules, leaf_budget=int(rng.integers(1, 4)))
        mip = solve_master_mip(mp)
        assert mip.objective == pytest.approx(brute_force(mp), abs=1e-6)
        assert mip.bound <= mip.objective + 1e-9
        counts = np.zeros(n, dtype=int)
        for j in mip.selected:
            counts[mp.pool[j].cover] += 1
        counts[mip.slack_samples] += 1
        assert counts.tolist() == [1] * n


def test_mip_node_limit_returns_incumbent():
    rules = [
        make_rule([0, 1, 2, 3], 1.0, 0, tp=0, fp=0, fn=3),
        make_rule([0, 1, 2, 3], 2.0, 1, tp=3, fp=1, fn=0),
    ]
    mp = master(4, rules, leaf_budget=1, side=[linearize_f1_constraint(0.5)])
    mip = solve_master_mip(mp, node_limit=0)
    assert mip.status == "node_limit"
    assert mip.selected == [1]


def test_mip_with_zero_time_still_expands_root():
    # Le glouton prend la règle sans perte (ξ/|couverture| = 0) et laisse 2 échantillons en slack
    rules = [make_rule([0, 1, 2, 3], 1.0, 0), make_rule([0, 1], 0.0, 1)]
    mp = master(4, rules, leaf_budget=1)
    mip = solve_master_mip(mp, time_limit=0.0)
    assert mip.selected == [0]
    assert mip.objective == pytest.approx(1.0)
    assert mip.nodes == 1


def test_mip_with_zero_time_and_nodes_keeps_greedy_incumbent():
    rules = [make_rule([0, 1], 0, 0), make_rule([2, 3], 0, 1)]
    mip = solve_master_mip(master(4, rules, leaf_budget=2), time_limit=0.0, node_limit=0)
    assert mip.selected == [0, 1]
    assert mip.status == "optimal"
