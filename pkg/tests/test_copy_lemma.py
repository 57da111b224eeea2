import sys
import os

import pytest

# Add the parent directory to sys.path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from scripts.copy_lemma import (CopyRecipeError, apply_copy, expand_recipes, normalize_primes, parse_copy_recipe,
                                scope_sizes)
from scripts.core_entropy import Constraint, VariableUniverse, elemental_inequalities, entropy_term, mutual_info_expr
from scripts.guessing import cycle_graph, guessing_upper_bound, make_guess_problem
from scripts.lp import assemble, solve
from scripts.problem_file import catalog_path, load_problem


@pytest.fixture
def ten():
    return VariableUniverse(tuple(f"X{v}" for v in range(1, 11)))


def test_parse_w_copy_without_over(ten):
    step = parse_copy_recipe("X2' be a X3-copy of X2", ten)
    assert step.z_vars == ('X2',)
    assert step.new_names == ("X2'",)
    assert step.x_vars == ('X1', 'X4', 'X5', 'X6', 'X7', 'X8', 'X9', 'X10')


def test_parse_over_list_and_tuple_names(ten):
    step = parse_copy_recipe("(X4'',X5'') be a X10-copy of (X4,X5) over X1,X2,X3,X6,X7,X8,X9", ten, step=1)
    assert step.z_vars == ('X4', 'X5')
    assert step.x_vars == ('X1', 'X2', 'X3', 'X6', 'X7', 'X8', 'X9')
    assert step.step == 1


def test_unicode_primes_are_normalised(ten):
    assert normalize_primes('X2′ X4″') == "X2' X4''"
    step = parse_copy_recipe('X2′ be a X3-copy of X2', ten)
    assert step.new_names == ("X2'",)


def test_recipe_errors(ten):
    with pytest.raises(CopyRecipeError):
        parse_copy_recipe("X2' is a copy of X2", ten)
    with pytest.raises(CopyRecipeError):
        parse_copy_recipe("X2' be a copy of X11", ten)
    with pytest.raises(CopyRecipeError):
        parse_copy_recipe("X2' be a copy of X2 over X1,X2", ten)
    with pytest.raises(CopyRecipeError):
        parse_copy_recipe("(A',B') be a copy of X2", ten)


def test_apply_copy_rows(ten):
    step = parse_copy_recipe("X2' be a X3-copy of X2", ten)
    extended, rows = apply_copy(ten, step)
    assert extended.total_count == 11
    match = [row for row in rows if row.tag == 'copy-match']
    indep = [row for row in rows if row.tag == 'copy-indep']
    # every subset of X ∪ Z that meets Z
    assert len(match) == 2 ** 9 - 2 ** 8
    assert len(indep) == 1
    x_mask = extended.mask_of(step.x_vars)
    copy = extended.mask_of(["X2'"])
    expected = mutual_info_expr(copy, extended.mask_of(['X2', 'X3']), x_mask)
    assert indep[0].expr == expected
    single = entropy_term(copy) - entropy_term(extended.mask_of(['X2']))
    assert any(row.expr == single for row in match)


def test_copy_name_collision(ten):
    step = parse_copy_recipe("X2' be a copy of X2", ten)
    extended, _ = apply_copy(ten, step)
    with pytest.raises(CopyRecipeError):
        apply_copy(extended, step)


def test_steps_numbered_globally_and_blocks_restart():
    problem = load_problem(catalog_path('RL'))
    steps = [step for block in problem.blocks for step in block.steps]
    assert [step.step for step in steps] == list(range(5))
    assert [step.block_id for step in steps] == [0, 0, 0, 1, 1]
    second_block = problem.blocks[1].steps[0]
    assert not any(name in second_block.x_vars for name in ("X4'", "X5'", "X5''", "X1'''"))


def test_copy_of_copy_keeps_base_origin(ten):
    expansion = expand_recipes(ten, [["X2' be a copy of X2 over X1", "X2'' be a copy of X2' over X1"]])
    universe = expansion.universe
    assert universe.copy_variable(universe.index_of("X2''")).origin == 'X2'
    assert universe.copy_variable(universe.index_of("X2''")).step == 1


def test_rminus_scope_sizes():
    problem = load_problem(catalog_path('Rminus'))
    assert scope_sizes(problem.scopes) == [11, 13, 13]
    assert len(problem.footprints) == 5


def test_rl_scope_sizes():
    problem = load_problem(catalog_path('RL'))
    assert scope_sizes(problem.scopes) == [14, 13]


def test_copies_never_loosen_the_bound():
    problem = make_guess_problem(cycle_graph(4), recipes=[["X1' be a X2-copy of X1"]])
    plain = guessing_upper_bound(problem, use_copies=False)
    copied = guessing_upper_bound(problem)
    assert plain == 2
    assert copied <= plain


def _ingleton_gap_model(recipes):
    universe = VariableUniverse(('A', 'B', 'C', 'D'))
    expansion = expand_recipes(universe, recipes)
    a, b, c, d = (universe.mask_of([name]) for name in 'ABCD')
    objective = (mutual_info_expr(a, b) + mutual_info_expr(a, c | d) + mutual_info_expr(c, d, a) * 3
                 + mutual_info_expr(c, d, b) - mutual_info_expr(c, d) * 2)
    cap = [Constraint(entropy_term(universe.base_mask), '<=', 1, 'bound')]
    sets = [cap, expansion.constraints] + [elemental_inequalities(scope) for scope in expansion.scopes]
    return assemble(expansion.universe, sets, objective, 'minimize', 'four-variable non-Shannon check')


def test_copy_step_recovers_four_variable_non_shannon_inequality():
    shannon = solve(_ingleton_gap_model([]))
    copied = solve(_ingleton_gap_model([["(A',B') be a copy of (A,B) over C,D"]]))
    assert shannon.status == 'optimal' and copied.status == 'optimal'
    assert shannon.value < 0
    assert copied.value > shannon.value
    assert copied.value == 0
