import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import networkx as nx
import numpy as np

from scripts.certificate import guess_context
from scripts.copy_lemma import expand_recipes
from scripts.core_entropy import AuxVariable, Constraint, LinearExpression, VariableUniverse, elemental_inequalities, entropy_term
from scripts.lp import InfeasibleProblemError, UnboundedProblemError, assemble, solve
from scripts.perm_sym import check_invariance, closure, symmetry_equalities

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')

DEFAULT_STRATEGY_GUARD = 10 ** 8
CLIQUE_DP_LIMIT = 20


class SightGraphError(ValueError):
    """Raised for malformed sight graphs or graph operations outside their domain."""


class StrategyGuardExceeded(RuntimeError):
    """Raised when brute-force strategy enumeration would exceed its guard."""


@dataclass(frozen=True)
class SightGraph:
    """Vertices 1..n; a directed edge (u, v) means v sees u."""
    n: int
    undirected_edges: frozenset = frozenset()
    directed_edges: frozenset = frozenset()

    def __post_init__(self):
        undirected = frozenset(tuple(sorted(edge)) for edge in self.undirected_edges)
        directed = frozenset(tuple(edge) for edge in self.directed_edges)
        for u, v in undirected | directed:
            if not (1 <= u <= self.n and 1 <= v <= self.n):
                raise SightGraphError(f"Edge ({u}, {v}) outside vertices 1..{self.n}")
            if u == v:
                raise SightGraphError(f"Loop at vertex {u}")
        overlap = [edge for edge in directed if tuple(sorted(edge)) in undirected]
        if overlap:
            raise SightGraphError(f"Edges both directed and undirected: {sorted(overlap)}")
        object.__setattr__(self, 'undirected_edges', undirected)
        object.__setattr__(self, 'directed_edges', directed)

    @property
    def vertices(self):
        return range(1, self.n + 1)

    @property
    def is_undirected(self):
        return not self.directed_edges

    def in_neighbors(self, v):
        seen = {u for u, w in self.undirected_edges if w == v} | {w for u, w in self.undirected_edges if u == v}
        return frozenset(seen | {u for u, w in self.directed_edges if w == v})

    def degree(self, v):
        return sum(1 for edge in self.undirected_edges if v in edge)

    def relabel(self, permutation):
        """Image under a permutation of point indices, where vertex v is point v - 1."""
        if permutation.degree > self.n:
            raise SightGraphError(f"Permutation of degree {permutation.degree} on a graph with {self.n} vertices")

        def image(v):
            return permutation(v - 1) + 1

        return SightGraph(self.n,
                          frozenset((image(u), image(v)) for u, v in self.undirected_edges),
                          frozenset((image(u), image(v)) for u, v in self.directed_edges))

    def undirected_part(self):
        graph = nx.Graph()
        graph.add_nodes_from(self.vertices)
        graph.add_edges_from(self.undirected_edges)
        return graph

    def to_digraph(self):
        """Information flow u -> v; undirected edges count both ways."""
        graph = nx.DiGraph()
        graph.add_nodes_from(self.vertices)
        graph.add_edges_from(self.directed_edges)
        graph.add_edges_from(self.undirected_edges)
        graph.add_edges_from((v, u) for u, v in self.undirected_edges)
        return graph


def make_graph(n, undirected=(), directed=()):
    return SightGraph(n, frozenset(undirected), frozenset(directed))


def cycle_graph(n):
    return make_graph(n, [(v, v % n + 1) for v in range(1, n + 1)])


def complete_graph(n):
    return make_graph(n, itertools.combinations(range(1, n + 1), 2))


def directed_path(n):
    return make_graph(n, directed=[(v, v + 1) for v in range(1, n)])


def directed_cycle(n):
    return make_graph(n, directed=[(v, v % n + 1) for v in range(1, n + 1)])


@dataclass
class GuessProblem:
    graph: SightGraph
    group: object
    universe: VariableUniverse
    blocks: list = field(default_factory=list)
    copy_constraints: list = field(default_factory=list)
    footprints: list = field(default_factory=list)
    scopes: list = field(default_factory=list)
    name: str = ''
    references: dict = field(default_factory=dict)

    def certificate_context(self, use_copies=True):
        return guess_context(self, use_copies)


def make_guess_problem(graph, generators=(), recipes=(), scopes=None, name='', references=None, validate=True,
                       names=None):
    """Variables X1..Xn, the closed symmetry group and the expanded copy blocks."""
    group = closure(generators, degree=graph.n)
    if validate:
        for generator in generators:
            if not check_invariance(graph, generator):
                message = f"Generator {generator.to_cycle_string()} is not an automorphism of graph {name or graph.n}"
                logging.error(message)
                raise SightGraphError(message)
    universe = VariableUniverse(tuple(names or (f"X{v}" for v in graph.vertices)))
    if len(universe.base_vars) != graph.n:
        raise SightGraphError(f"{len(universe.base_vars)} variable names for {graph.n} vertices")
    expansion = expand_recipes(universe, recipes, scopes)
    return GuessProblem(graph, group, expansion.universe, expansion.blocks, expansion.constraints,
                        expansion.footprints, expansion.scopes, name, dict(references or {}))


def guessing_constraints(graph):
    """h_v <= 1 and h_{N(v)∪v} − h_{N(v)} = 0 for every vertex, with X_v at index v − 1."""
    rows = []
    for v in graph.vertices:
        own = 1 << (v - 1)
        rows.append(Constraint(entropy_term(own), '<=', 1, 'bound'))
    for v in graph.vertices:
        own = 1 << (v - 1)
        seen = 0
        for u in graph.in_neighbors(v):
            seen |= 1 << (u - 1)
        rows.append(Constraint(entropy_term(seen | own) - entropy_term(seen), '=', 0, 'problem'))
    return rows


def guessing_model(problem, use_symmetry=True, use_copies=True):
    universe = problem.universe
    sets = [guessing_constraints(problem.graph)]
    if use_symmetry:
        sets.append(symmetry_equalities(problem.group, universe))
    if use_copies and problem.blocks:
        sets.append(problem.copy_constraints)
        scopes = problem.scopes
    else:
        scopes = [universe.base_mask]
    for scope in scopes:
        sets.append(elemental_inequalities(scope))
    return assemble(universe, sets, entropy_term(universe.base_mask), 'maximize', problem.name or 'guessing')


def guessing_upper_bound(problem, use_symmetry=True, use_copies=True, **solve_options):
    """Exact LP upper bound on the guessing number."""
    model = guessing_model(problem, use_symmetry, use_copies)
    solution = solve(model, **solve_options)
    if solution.status == 'infeasible':
        raise InfeasibleProblemError(f"Guessing LP for {problem.name or 'graph'} is infeasible; "
                                     f"families involved: {', '.join(solution.conflict)}", solution.conflict)
    if solution.status == 'unbounded':
        raise UnboundedProblemError(f"Guessing LP for {problem.name or 'graph'} is unbounded")
    return solution.value


def _require_undirected(graph, what):
    if not graph.is_undirected:
        raise SightGraphError(f"{what} is defined for undirected graphs only")


def fractional_clique_cover_number(graph):
    """Minimum total clique weight covering every vertex exactly once."""
    _require_undirected(graph, "Fractional clique cover number")
    if graph.n == 0:
        return Fraction(0)
    cliques = sorted(tuple(sorted(c)) for c in nx.enumerate_all_cliques(graph.undirected_part()))
    width = len(str(len(cliques)))
    weights = [AuxVariable(f"w{index:0{width}d}") for index in range(len(cliques))]
    rows = [Constraint(LinearExpression({w: 1}), '>=', 0, 'bound') for w in weights]
    for v in graph.vertices:
        cover = {w: 1 for w, clique in zip(weights, cliques) if v in clique}
        rows.append(Constraint(LinearExpression(cover), '=', 1, 'problem'))
    model = assemble(None, [rows], LinearExpression({w: 1 for w in weights}), 'minimize', 'fractional clique cover')
    solution = solve(model)
    if solution.status != 'optimal':
        raise RuntimeError(f"Clique cover LP ended with status {solution.status}")
    return solution.value


def clique_cover_number(graph):
    """Minimum number of cliques partitioning the vertices, by memoised subset recursion."""
    _require_undirected(graph, "Clique cover number")
    if graph.n > CLIQUE_DP_LIMIT:
        raise SightGraphError(f"Clique cover by subset recursion supports at most {CLIQUE_DP_LIMIT} vertices")
    clique_masks = [sum(1 << (v - 1) for v in clique) for clique in nx.enumerate_all_cliques(graph.undirected_part())]

    @lru_cache(maxsize=None)
    def best(mask):
        if mask == 0:
            return 0
        lowest = mask & -mask
        return 1 + min(best(mask & ~clique) for clique in clique_masks
                       if clique & lowest and clique & ~mask == 0)

    return best((1 << graph.n) - 1)


def independence_number(graph):
    """Largest independent set of the undirected part."""
    if graph.n == 0:
        return 0
    complement = nx.complement(graph.undirected_part())
    return max(len(clique) for clique in nx.find_cliques(complement))


@dataclass(frozen=True)
class GuessBounds:
    lower: Fraction
    upper_alpha: int
    acyclic_zero: bool


def combinatorial_bounds(graph):
    """n − cp_f and n − α over the undirected part, and acyclicity of the full relation."""
    undirected = make_graph(graph.n, graph.undirected_edges)
    lower = graph.n - fractional_clique_cover_number(undirected)
    upper = graph.n - independence_number(undirected)
    acyclic = nx.is_directed_acyclic_graph(graph.to_digraph())
    return GuessBounds(lower, upper, acyclic)


def blow_up(graph, t):
    """Vertex (v, i) becomes label (v − 1)·t + i; copies of one vertex stay non-adjacent."""
    if t < 1:
        raise SightGraphError(f"Blow-up factor must be at least 1, got {t}")

    def label(v, i):
        return (v - 1) * t + i

    copies = range(1, t + 1)
    undirected = [(label(u, i), label(v, j)) for u, v in graph.undirected_edges for i in copies for j in copies]
    directed = [(label(u, i), label(v, j)) for u, v in graph.directed_edges for i in copies for j in copies]
    return make_graph(graph.n * t, undirected, directed)


def exact_log(count, s):
    """log_s(count) as a Fraction when it is rational, otherwise None."""
    if count < 1 or s < 2:
        raise ValueError(f"exact_log needs count >= 1 and s >= 2, got {count}, {s}")
    if count == 1:
        return Fraction(0)
    for exponent in range(s.bit_length(), 0, -1):
        root = round(s ** (1 / exponent))
        for base in (root - 1, root, root + 1):
            if base < 2 or base ** exponent != s:
                continue
            power, value = 0, 1
            while value < count:
                value *= base
                power += 1
            if value == count:
                return Fraction(power, exponent)
    return None


def gn_at_most(count, s, bound):
    """Exact test of log_s(count) <= bound."""
    bound = Fraction(bound)
    if bound < 0:
        return False
    return count ** bound.denominator <= s ** bound.numerator


@dataclass(frozen=True)
class BruteForceResult:
    max_winning_configs: int
    colours: int
    gn: Fraction = None


def brute_force_guessing_number(graph, s, guard=DEFAULT_STRATEGY_GUARD):
    """Best deterministic strategy by exhaustive search, pruned by the best count so far."""
    if s < 2:
        raise ValueError(f"Need at least 2 colours, got {s}")
    neighbors = [sorted(graph.in_neighbors(v)) for v in graph.vertices]
    strategies = 1
    for seen in neighbors:
        strategies *= s ** (s ** len(seen))
        if strategies > guard:
            message = f"Strategy space exceeds the guard of {guard}"
            logging.error(message)
            raise StrategyGuardExceeded(message)

    colourings = np.array(list(itertools.product(range(s), repeat=graph.n)), dtype=np.int64)
    correct = []
    for v, seen in enumerate(neighbors):
        view = np.zeros(len(colourings), dtype=np.int64)
        for u in seen:
            view = view * s + colourings[:, u - 1]
        functions = np.array(list(itertools.product(range(s), repeat=s ** len(seen))), dtype=np.int64)
        correct.append(functions[:, view] == colourings[:, v])

    best = 0

    def search(vertex, alive):
        nonlocal best
        count = int(alive.sum())
        if count <= best:
            return
        if vertex == graph.n:
            best = count
            return
        for outcome in correct[vertex]:
            search(vertex + 1, alive & outcome)

    search(0, np.ones(len(colourings), dtype=bool))
    logging.info(f"Brute force over {strategies} strategies with {s} colours: {best} winning configurations")
    return BruteForceResult(best, s, exact_log(best, s))


def catalog_graph(name):
    """Load a catalog guessing problem from data/catalog."""
    from scripts.problem_file import catalog_path, load_problem

    problem = load_problem(catalog_path(name))
    if not isinstance(problem, GuessProblem):
        raise SightGraphError(f"Catalog entry {name} is not a guessing problem")
    return problem
