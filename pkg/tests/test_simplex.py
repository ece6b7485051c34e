from itertools import combinations

import numpy as np
import pytest

from solvers import LinearProgram, LpBasis, format_lp, shift_basis, solve_lp


def vertex_oracle(lp):
    """Minimum exact d'un LP borné par énumération des sommets."""
    a = lp.matrix.toarray()
    n = lp.n_vars
    equalities = [(a[i], lp.rhs[i]) for i in range(lp.n_rows) if lp.senses[i] == "="]
    candidates = []
    for i in range(lp.n_rows):
        if lp.senses[i] != "=":
            candidates.append((a[i], lp.rhs[i]))
    for j in range(n):
        unit = np.eye(n)[j]
        candidates.append((unit, lp.lower[j]))
        candidates.append((unit, lp.upper[j]))

    def feasible(x):
        lhs = a @ x
        for i, sense in enumerate(lp.senses):
            if sense == "=" and abs(lhs[i] - lp.rhs[i]) > 1e-7:
                return False
            if sense == "<=" and lhs[i] > lp.rhs[i] + 1e-7:
                return False
            if sense == ">=" and lhs[i] < lp.rhs[i] - 1e-7:
                return False
        return np.all(x >= lp.lower - 1e-7) and np.all(x <= lp.upper + 1e-7)

    best = None
    for chosen in combinations(candidates, n - len(equalities)):
        rows = equalities + list(chosen)
        matrix = np.array([r for r, _ in rows])
        rhs = np.array([b for _, b in rows])
        if abs(np.linalg.det(matrix)) < 1e-9:
            continue
        x = np.linalg.solve(matrix, rhs)
        if feasible(x):
            value = float(lp.objective @ x)
            best = value if best is None else min(best, value)
    return best


def random_feasible_lp(rng):
    n = int(rng.integers(2, 5))
    m = int(rng.integers(1, 5))
    upper = rng.integers(1, 6, n).astype(float)
    point = rng.random(n) * upper
    a = rng.integers(-3, 4, (m, n)).astype(float)
    a[~a.any(axis=1), 0] = 1.0
    senses = [str(s) for s in rng.choice(["<=", ">=", "="], m, p=[0.45, 0.45, 0.1])]
    # Au plus une égalité: l'oracle a besoin de n lignes actives indépendantes
    while senses.count("=") > 1:
        senses[senses.index("=")] = "<="
    lhs = a @ point
    rhs = np.array([
        lhs[i] if senses[i] == "=" else lhs[i] + (1.0 if senses[i] == "<=" else -1.0) * rng.random()
        for i in range(m)
    ])
    rows = [({j: a[i, j] for j in range(n) if a[i, j] != 0}, senses[i], rhs[i]) for i in range(m)]
    objective = rng.integers(-5, 6, n).astype(float)
    return LinearProgram.from_rows(objective, rows, [(0.0, u) for u in upper])


def dual_objective(lp, solution):
    y = solution.duals
    reduced = lp.objective - lp.matrix.T @ y
    return float(y @ lp.rhs + lp.lower @ np.maximum(reduced, 0.0) + lp.upper @ np.minimum(reduced, 0.0))


def test_small_lp_optimum_and_duals():
    # min -x0 - 2 x1  s.c.  x0 + x1 <= 4,  x1 <= 3
    lp = LinearProgram.from_rows([-1.0, -2.0], [({0: 1, 1: 1}, "<=", 4.0), ({1: 1}, "<=", 3.0)])
    solution = solve_lp(lp)
    assert solution.status == "optimal"
    assert solution.primal == pytest.approx([1.0, 3.0])
    assert solution.objective_value == pytest.approx(-7.0)
    assert solution.duals == pytest.approx([-1.0, -1.0])


def test_equality_and_greater_rows():
    # min x0 + x1  s.c.  x0 + 2 x1 = 4,  x0 >= 1
    lp = LinearProgram.from_rows([1.0, 1.0], [({0: 1, 1: 2}, "=", 4.0), ({0: 1}, ">=", 1.0)])
    solution = solve_lp(lp)
    assert solution.status == "optimal"
    assert solution.objective_value == pytest.approx(2.5)
    assert solution.primal == pytest.approx([1.0, 1.5])


def test_upper_bounds_flip_without_pivot():
    lp = LinearProgram.from_rows([-1.0, -1.0], [({0: 1, 1: 1}, "<=", 10.0)], [(0.0, 2.0), (0.0, 3.0)])
    solution = solve_lp(lp)
    assert solution.objective_value == pytest.approx(-5.0)
    assert solution.primal == pytest.approx([2.0, 3.0])


def test_infeasible_lp():
    lp = LinearProgram.from_rows([1.0, 1.0], [({0: 1, 1: 1}, ">=", 5.0)], [(0.0, 1.0), (0.0, 1.0)])
    assert solve_lp(lp).status == "infeasible"


def test_unbounded_lp():
    lp = LinearProgram.from_rows([-1.0, 0.0], [({0: 1, 1: -1}, "<=", 1.0)])
    assert solve_lp(lp).status == "unbounded"


def test_iteration_limit_is_reported():
    lp = LinearProgram.from_rows([-1.0, -2.0], [({0: 1, 1: 1}, "<=", 4.0), ({1: 1}, "<=", 3.0)])
    assert solve_lp(lp, iter_limit=0).status == "iteration_limit"


def test_warm_start_reuses_optimal_basis():
    lp = LinearProgram.from_rows([-1.0, -2.0], [({0: 1, 1: 1}, "<=", 4.0), ({1: 1}, "<=", 3.0)])
    first = solve_lp(lp)
    again = solve_lp(lp, warm_start=first.basis)
    assert again.iterations == 0
    assert again.objective_value == pytest.approx(first.objective_value)


def test_invalid_warm_start_falls_back_to_cold_start():
    lp = LinearProgram.from_rows([-1.0, -2.0], [({0: 1, 1: 1}, "<=", 4.0), ({1: 1}, "<=", 3.0)])
    solution = solve_lp(lp, warm_start=LpBasis(basic=(0, 0)))
    assert solution.status == "optimal"
    assert solution.objective_value == pytest.approx(-7.0)


def test_shift_basis_renumbers_inserted_columns():
    basis = LpBasis(basic=(0, 3, 5), at_upper=frozenset({4}))
    shifted = shift_basis(basis, insert_at=2, count=2)
    assert shifted.basic == (0, 5, 7)
    assert shifted.at_upper == frozenset({6})


def test_invalid_bounds_are_rejected():
    with pytest.raises(ValueError):
        LinearProgram.from_rows([1.0], [({0: 1}, "<=", 1.0)], [(2.0, 1.0)])
    with pytest.raises(ValueError):
        LinearProgram.from_rows([1.0], [({0: 1}, "<>", 1.0)])


def test_format_lp_sections():
    lp = LinearProgram.from_rows([1.0, -2.0], [({0: 1, 1: 1}, "<=", 4.0)], [(0.0, 1.0), (0.0, np.inf)])
    text = format_lp(lp)
    assert text.startswith("minimize\n obj: + 1 x0 - 2 x1\nsubject to\n r0: + 1 x0 + 1 x1 <= 4\n")
    assert " 0 <= x1 <= inf" in text
    assert text.endswith("end\n")


def test_random_lps_match_vertex_oracle_with_strong_duality():
    rng = np.random.default_rng(2024)
    for _ in range(50):
        lp = random_feasible_lp(rng)
        expected = vertex_oracle(lp)
        solution = solve_lp(lp)
        assert solution.status == "optimal"
        assert solution.objective_value == pytest.approx(expected, abs=1e-7)
        assert dual_objective(lp, solution) == pytest.approx(solution.objective_value, abs=1e-7)


def test_redundant_equalities_leave_no_artificial_in_basis():
    # min x0 + 2 x1  s.c.  x0 + x1 = 2 (trois fois, dont une doublée),  x0 - x1 >= -1
    rows = [
        ({0: 1, 1: 1}, "=", 2.0),
        ({0: 2, 1: 2}, "=", 4.0),
        ({0: 1, 1: 1}, "=", 2.0),
        ({0: 1, 1: -1}, ">=", -1.0),
    ]
    lp = LinearProgram.from_rows([1.0, 2.0], rows, [(0.0, 5.0), (0.0, 5.0)])
    solution = solve_lp(lp)
    assert solution.status == "optimal"
    assert solution.primal == pytest.approx([2.0, 0.0])
    assert solution.objective_value == pytest.approx(2.0)
    assert dual_objective(lp, solution) == pytest.approx(2.0, abs=1e-7)
    assert all(j < lp.n_vars + lp.n_rows for j in solution.basis.basic)


def test_random_lps_with_duplicated_equality_keep_their_optimum():
    rng = np.random.default_rng(11)
    for _ in range(30):
        n = int(rng.integers(2, 5))
        upper = rng.integers(1, 6, n).astype(float)
        point = rng.random(n) * upper
        a = rng.integers(-3, 4, (2, n)).astype(float)
        a[~a.any(axis=1), 0] = 1.0
        equality = ({j: a[0, j] for j in range(n) if a[0, j]}, "=", float(a[0] @ point))
        inequality = ({j: a[1, j] for j in range(n) if a[1, j]}, "<=", float(a[1] @ point) + 0.5)
        scaled = ({j: 3.0 * v for j, v in equality[0].items()}, "=", 3.0 * equality[2])
        objective = rng.integers(-5, 6, n).astype(float)
        bounds = [(0.0, u) for u in upper]

        plain = solve_lp(LinearProgram.from_rows(objective, [equality, inequality], bounds))
        redundant_lp = LinearProgram.from_rows(objective, [equality, scaled, inequality, equality], bounds)
        redundant = solve_lp(redundant_lp)
        assert redundant.status == "optimal"
        assert redundant.objective_value == pytest.approx(plain.objective_value, abs=1e-7)
        assert dual_objective(redundant_lp, redundant) == pytest.approx(redundant.objective_value, abs=1e-7)
