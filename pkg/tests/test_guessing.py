import sys
import os
from fractions import Fraction

import pytest

# Add the parent directory to sys.path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from scripts.guessing import (SightGraphError, StrategyGuardExceeded, blow_up, brute_force_guessing_number,
                              catalog_graph, clique_cover_number, combinatorial_bounds, complete_graph, cycle_graph,
                              directed_cycle, directed_path, exact_log, fractional_clique_cover_number, gn_at_most,
                              guessing_upper_bound, independence_number, make_graph, make_guess_problem)
from scripts.perm_sym import Permutation

SMALL_GRAPHS = {
    'K3': complete_graph(3),
    'C4': cycle_graph(4),
    'C5': cycle_graph(5),
    'path4': make_graph(4, [(1, 2), (2, 3), (3, 4)]),
    'star4': make_graph(4, [(1, 2), (1, 3), (1, 4)]),
}


def test_graph_validation():
    with pytest.raises(SightGraphError):
        make_graph(3, [(1, 4)])
    with pytest.raises(SightGraphError):
        make_graph(3, [(2, 2)])
    with pytest.raises(SightGraphError):
        make_graph(3, [(1, 2)], [(2, 1)])


def test_in_neighbors_follow_edge_direction():
    graph = make_graph(3, [(1, 2)], [(2, 3)])
    assert graph.in_neighbors(3) == {2}
    assert graph.in_neighbors(2) == {1}
    assert graph.in_neighbors(1) == {2}


def test_c5_suite():
    c5 = cycle_graph(5)
    assert clique_cover_number(c5) == 3
    assert fractional_clique_cover_number(c5) == Fraction(5, 2)
    assert independence_number(c5) == 2
    bounds = combinatorial_bounds(c5)
    assert bounds.lower == Fraction(5, 2)
    assert bounds.upper_alpha == 3
    assert not bounds.acyclic_zero
    assert guessing_upper_bound(make_guess_problem(c5)) == bounds.lower


def test_blow_up_of_c5():
    blown = blow_up(cycle_graph(5), 2)
    assert blown.n == 10
    assert len(blown.undirected_edges) == 20
    assert clique_cover_number(blown) == 5 == 2 * fractional_clique_cover_number(cycle_graph(5))
    assert blow_up(cycle_graph(5), 1) == cycle_graph(5)


def test_acyclic_graphs():
    assert combinatorial_bounds(directed_path(4)).acyclic_zero
    assert not combinatorial_bounds(directed_cycle(3)).acyclic_zero
    with pytest.raises(SightGraphError):
        fractional_clique_cover_number(directed_path(3))


@pytest.mark.parametrize("name", sorted(SMALL_GRAPHS))
def test_shannon_bound_matches_fractional_clique_cover(name):
    graph = SMALL_GRAPHS[name]
    lower = graph.n - fractional_clique_cover_number(graph)
    assert fractional_clique_cover_number(graph) <= clique_cover_number(graph)
    assert guessing_upper_bound(make_guess_problem(graph)) == lower


def test_directed_cycle_bound():
    assert guessing_upper_bound(make_guess_problem(directed_cycle(3))) == 1


@pytest.mark.parametrize("name, relabelling", [('C5', '(12)'), ('path4', '(1324)')])
def test_relabelled_graph_keeps_its_bound(name, relabelling):
    graph = SMALL_GRAPHS[name]
    permutation = Permutation.parse(relabelling, graph.n)
    relabelled = graph.relabel(permutation)
    assert relabelled != graph
    assert guessing_upper_bound(make_guess_problem(relabelled)) == guessing_upper_bound(make_guess_problem(graph))


def test_generator_must_be_automorphism():
    with pytest.raises(SightGraphError):
        make_guess_problem(cycle_graph(5), [Permutation.parse('(12)', 5)])


@pytest.mark.parametrize("graph, colours, winning, gn", [
    (complete_graph(2), 2, 2, 1),
    (complete_graph(3), 2, 4, 2),
    (directed_path(2), 2, 1, 0),
    (directed_path(3), 2, 1, 0),
    (directed_cycle(3), 2, 2, 1),
])
def test_brute_force(graph, colours, winning, gn):
    result = brute_force_guessing_number(graph, colours)
    assert result.max_winning_configs == winning
    assert result.gn == gn


@pytest.mark.parametrize("graph, colours", [
    (complete_graph(2), 2),
    (complete_graph(3), 2),
    (directed_cycle(3), 2),
    (directed_cycle(3), 3),
    (make_graph(3, [(1, 2), (2, 3)]), 2),
    (cycle_graph(4), 2),
])
def test_brute_force_respects_lp_bound(graph, colours):
    result = brute_force_guessing_number(graph, colours)
    bound = guessing_upper_bound(make_guess_problem(graph))
    assert gn_at_most(result.max_winning_configs, colours, bound)


def test_brute_force_guard():
    with pytest.raises(StrategyGuardExceeded):
        brute_force_guessing_number(cycle_graph(5), 3, guard=1000)


def test_exact_log():
    assert exact_log(8, 2) == 3
    assert exact_log(8, 4) == Fraction(3, 2)
    assert exact_log(1, 5) == 0
    assert exact_log(6, 2) is None
    assert gn_at_most(6, 2, Fraction(27, 10))
    assert not gn_at_most(9, 2, 3)


def test_catalog_graphs_are_symmetric():
    for name in ('K2', 'K3', 'C5', 'Rminus', 'R', 'RS', 'RL'):
        problem = catalog_graph(name)
        assert all(problem.graph.relabel(g) == problem.graph for g in problem.group.generators)


def test_rminus_shape():
    problem = catalog_graph('R-')
    assert problem.graph.n == 10
    assert len(problem.graph.undirected_edges) == 26
    assert problem.group.order == 8
    assert problem.references['upper'] == Fraction(1847, 276)
    assert [problem.graph.degree(v) for v in problem.graph.vertices] == [6, 5, 5, 5, 5, 5, 5, 6, 5, 5]
    assert problem.graph.in_neighbors(2) == {1, 3, 7, 9, 10}


@pytest.mark.slow
def test_r_shannon_bound():
    assert guessing_upper_bound(catalog_graph('R'), use_copies=False) == Fraction(27, 4)
