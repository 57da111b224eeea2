import sys
import os
from fractions import Fraction

import pytest

# Add the parent directory to sys.path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from scripts.certificate import verify
from scripts.core_entropy import (Constraint, LinearExpression, VariableUniverse, coordinate, elemental_inequalities,
                                  entropy_term, mutual_info_expr)
from scripts import lp
from scripts.guessing import catalog_graph, complete_graph, cycle_graph, guessing_model, make_guess_problem
from scripts.lp import (PivotBudgetExceeded, assemble, dual_to_certificate, export_lp, format_number, save_lp,
                        solve)
from scripts.perm_sym import Permutation


@pytest.fixture
def c5_problem():
    return make_guess_problem(cycle_graph(5), name='C5')


@pytest.fixture
def c5_symmetric():
    generators = [Permutation.parse('(12345)', 5), Permutation.parse('(25)(34)', 5)]
    return make_guess_problem(cycle_graph(5), generators, name='C5')


def test_c5_model_shape(c5_problem):
    model = guessing_model(c5_problem)
    assert len(model.columns) == 31
    assert len(model.rows) == 5 + 5 + 85
    assert [row.tag for row in model.rows[:10]] == ['bound'] * 5 + ['problem'] * 5


def test_assemble_drops_duplicates():
    rows = elemental_inequalities(0b11)
    model = assemble(None, [rows, rows], entropy_term(0b11), 'maximize')
    assert len(model.rows) == 3


def test_assemble_rejects_unknown_sense():
    with pytest.raises(ValueError):
        assemble(None, [], entropy_term(1), 'optimize')


def test_c5_shannon_value(c5_problem):
    solution = solve(guessing_model(c5_problem))
    assert solution.status == 'optimal'
    assert solution.value == Fraction(5, 2)
    assert all(row.is_satisfied(solution.primal) for row in guessing_model(c5_problem).rows)


def test_symmetry_does_not_change_value(c5_problem, c5_symmetric):
    plain = solve(guessing_model(c5_problem, use_symmetry=False))
    reduced = solve(guessing_model(c5_symmetric))
    assert plain.value == reduced.value == Fraction(5, 2)


def test_k2_certificate_by_hand():
    problem = make_guess_problem(complete_graph(2))
    model = guessing_model(problem)
    solution = solve(model)
    assert solution.value == 1
    certificate = dual_to_certificate(model, solution)
    assert verify(certificate.rows, problem) == 1


@pytest.mark.parametrize("fixture_name", ["c5_problem", "c5_symmetric"])
def test_dual_round_trip(fixture_name, request):
    problem = request.getfixturevalue(fixture_name)
    model = guessing_model(problem)
    solution = solve(model)
    certificate = dual_to_certificate(model, solution)
    assert verify(certificate.rows, problem) == solution.value
    assert verify(certificate.rows, model.certificate_context()) == solution.value
    assert sum(row.multiplier * row.rhs for row in certificate.rows) == Fraction(5, 2)


def test_infeasible_inequalities_report_families():
    rows = [Constraint(entropy_term(1), '>=', 2, 'problem'), Constraint(entropy_term(1), '<=', 1, 'bound')]
    solution = solve(assemble(None, [rows], entropy_term(1), 'maximize'))
    assert solution.status == 'infeasible'
    assert set(solution.conflict) <= {'problem', 'bound'}
    assert solution.conflict


def test_inconsistent_equalities_are_infeasible():
    rows = [Constraint(entropy_term(1), '=', 1, 'problem'), Constraint(entropy_term(1), '=', 2, 'symmetry')]
    solution = solve(assemble(None, [rows], entropy_term(1), 'maximize'))
    assert solution.status == 'infeasible'
    assert solution.conflict == ('problem', 'symmetry')


def test_unbounded_without_caps():
    solution = solve(assemble(None, [elemental_inequalities(0b111)], entropy_term(0b111), 'maximize'))
    assert solution.status == 'unbounded'


def test_pivot_budget_guard(c5_problem):
    with pytest.raises(PivotBudgetExceeded):
        solve(guessing_model(c5_problem), pivot_budget=1)


def test_minimize_with_equalities():
    # min h_12 with h_1 = h_2 = 1 and Shannon over two variables
    rows = [Constraint(entropy_term(0b01), '=', 1), Constraint(entropy_term(0b10), '=', 1)]
    model = assemble(None, [rows, elemental_inequalities(0b11)], entropy_term(0b11), 'minimize')
    solution = solve(model)
    assert solution.value == 1
    assert verify(dual_to_certificate(model, solution).rows, model.certificate_context()) == 1


def test_format_number():
    assert format_number(Fraction(3)) == '3'
    assert format_number(Fraction(-5, 4)) == '-1.25'
    assert format_number(Fraction(1, 3)) == '1/3'


def test_export_single_row():
    universe = VariableUniverse(('X1', 'X2'))
    rows = [Constraint(mutual_info_expr(0b01, 0b10), '>=', 0, 'elemental')]
    text = export_lp(assemble(universe, [rows], entropy_term(0b11), 'maximize', 'tiny'))
    assert 'c1: + 1 h_1 + 1 h_2 - 1 h_1_2 >= 0' in text.splitlines()
    assert text.splitlines()[2] == 'Maximize'
    assert text.rstrip().endswith('End')
    assert 'h_1_2 free' in text


def test_export_scales_non_decimal_rows():
    universe = VariableUniverse(('X1', 'X2'))
    rows = [Constraint(LinearExpression({coordinate(1): Fraction(1, 69), coordinate(2): -1}), '>=', 0)]
    lines = export_lp(assemble(universe, [rows], entropy_term(3), 'maximize')).splitlines()
    position = lines.index('c1: + 1 h_1 - 69 h_2 >= 0')
    assert lines[position - 1].startswith('\\ c1 scaled by 69; original: + 1/69 h_1 - 1 h_2 >= 0')


def test_export_names_copy_columns():
    problem = make_guess_problem(cycle_graph(4), recipes=[["X2' be a X3-copy of X2"]])
    text = export_lp(guessing_model(problem))
    assert 'h_2p0 free' in text
    assert 'h_1_2_2p0' in text


def test_export_is_deterministic(c5_symmetric, tmp_path):
    first = export_lp(guessing_model(c5_symmetric))
    second = export_lp(guessing_model(c5_symmetric))
    assert first == second
    path = tmp_path / 'c5.lp'
    save_lp(guessing_model(c5_symmetric), str(path))
    assert path.read_text() == first


@pytest.mark.slow
def test_copy_model_export_is_deterministic(tmp_path):
    model = guessing_model(catalog_graph('Rminus'))
    assert len(model.columns) == 16383
    assert len(model.rows) == 327684
    first, second = tmp_path / 'first.lp', tmp_path / 'second.lp'
    save_lp(model, str(first))
    save_lp(guessing_model(catalog_graph('Rminus')), str(second))
    assert first.read_bytes() == second.read_bytes()
    assert 'h_2p0 free' in first.read_text()


def test_dual_bound_must_match_the_optimum(c5_problem, monkeypatch):
    recover = lp._recover_duals

    def off_by_one(*args):
        return recover(*args[:-1], args[-1] + 1)

    monkeypatch.setattr(lp, '_recover_duals', off_by_one)
    with pytest.raises(RuntimeError, match='Dual bound'):
        solve(guessing_model(c5_problem))
