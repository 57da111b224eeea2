import itertools
import logging
from dataclasses import dataclass, field

from scripts.copy_lemma import expand_recipes
from scripts.core_entropy import AuxVariable, Constraint, LinearExpression, VariableUniverse, elemental_inequalities, entropy_term
from scripts.lp import InfeasibleProblemError, UnboundedProblemError, assemble, solve
from scripts.perm_sym import check_invariance, closure, symmetry_equalities

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')

EPIGRAPH = AuxVariable('x')


class AccessStructureError(ValueError):
    """Raised for malformed access structures."""


@dataclass(frozen=True)
class AccessStructure:
    """Participants 1..n; a coalition is authorized iff it contains a minimal set."""
    n: int
    minimal_sets: tuple

    def is_authorized(self, coalition):
        coalition = frozenset(coalition)
        return any(minimal <= coalition for minimal in self.minimal_sets)

    def coalitions(self):
        """Every nonempty coalition of participants, smallest first."""
        for size in range(1, self.n + 1):
            for members in itertools.combinations(range(1, self.n + 1), size):
                yield frozenset(members)

    def relabel(self, permutation):
        """Image under a permutation of point indices, where participant k is point k and S0 is point 0."""
        if permutation.degree > self.n + 1:
            raise AccessStructureError(f"Permutation of degree {permutation.degree} on {self.n} participants")
        if permutation(0) != 0:
            raise AccessStructureError("Permutations must fix the secret S0")
        return make_access_structure(self.n, [{permutation(k) for k in minimal} for minimal in self.minimal_sets])


def _canonical(sets):
    return tuple(sorted((frozenset(s) for s in sets), key=lambda s: (len(s), sorted(s))))


def make_access_structure(n, minimal_sets, allow_empty=False):
    """Validate an antichain of nonempty subsets of 1..n and store it canonically."""
    sets = _canonical(set(frozenset(s) for s in minimal_sets))
    if not sets and not allow_empty:
        raise AccessStructureError("Empty family of minimal sets needs allow_empty=True")
    for minimal in sets:
        if not minimal:
            raise AccessStructureError("Minimal sets must be nonempty")
        if not all(1 <= k <= n for k in minimal):
            raise AccessStructureError(f"Minimal set {sorted(minimal)} outside participants 1..{n}")
    for a, b in itertools.permutations(sets, 2):
        if a < b:
            raise AccessStructureError(f"Minimal sets are not an antichain: {sorted(a)} is inside {sorted(b)}")
    return AccessStructure(n, sets)


def threshold_structure(n, t):
    return make_access_structure(n, itertools.combinations(range(1, n + 1), t))


def path_structure(n):
    """Minimal sets {k, k+1} along a path of n participants."""
    return make_access_structure(n, [(k, k + 1) for k in range(1, n)])


def ss_constraints(structure):
    """Secret-recovery equalities for every nonempty coalition, plus h_{S0} = 1."""
    secret = entropy_term(1)
    rows = []
    for coalition in structure.coalitions():
        mask = sum(1 << k for k in coalition)
        expr = entropy_term(mask | 1) - entropy_term(mask)
        if not structure.is_authorized(coalition):
            expr = expr - secret
        rows.append(Constraint(expr, '=', 0, 'problem'))
    rows.append(Constraint(secret, '=', 1, 'problem'))
    return rows


@dataclass
class RatioProblem:
    structure: AccessStructure
    group: object
    universe: VariableUniverse
    blocks: list = field(default_factory=list)
    copy_constraints: list = field(default_factory=list)
    footprints: list = field(default_factory=list)
    scopes: list = field(default_factory=list)
    name: str = ''
    references: dict = field(default_factory=dict)


def make_ratio_problem(structure, generators=(), recipes=(), scopes=None, name='', references=None, validate=True,
                       names=None):
    """Variables S0..Sn, the closed group on participants and the expanded copy blocks."""
    group = closure(generators, degree=structure.n + 1)
    if validate:
        for generator in generators:
            if not check_invariance(structure, generator):
                message = f"Generator {generator.to_cycle_string(base=0)} does not preserve structure {name or ''}"
                logging.error(message)
                raise AccessStructureError(message)
    universe = VariableUniverse(tuple(names or (f"S{k}" for k in range(structure.n + 1))))
    if len(universe.base_vars) != structure.n + 1:
        raise AccessStructureError(f"{len(universe.base_vars)} variable names for a secret and {structure.n} participants")
    expansion = expand_recipes(universe, recipes, scopes)
    return RatioProblem(structure, group, expansion.universe, expansion.blocks, expansion.constraints,
                        expansion.footprints, expansion.scopes, name, dict(references or {}))


def ratio_model(problem, use_symmetry=True, use_copies=True):
    """Minimise x subject to x >= h_{S_i} and the secret-sharing entropy constraints."""
    universe = problem.universe
    epigraph = [Constraint(LinearExpression({EPIGRAPH: 1}) - entropy_term(1 << k), '>=', 0, 'bound')
                for k in range(1, problem.structure.n + 1)]
    sets = [epigraph, ss_constraints(problem.structure)]
    if use_symmetry:
        sets.append(symmetry_equalities(problem.group, universe))
    if use_copies and problem.blocks:
        sets.append(problem.copy_constraints)
        scopes = problem.scopes
    else:
        scopes = [universe.base_mask]
    for scope in scopes:
        sets.append(elemental_inequalities(scope))
    return assemble(universe, sets, LinearExpression({EPIGRAPH: 1}), 'minimize', problem.name or 'information ratio')


def ratio_lower_bound(problem, use_symmetry=True, use_copies=True, **solve_options):
    """Exact LP lower bound on the information ratio."""
    model = ratio_model(problem, use_symmetry, use_copies)
    solution = solve(model, **solve_options)
    if solution.status == 'infeasible':
        message = (f"Information-ratio LP for {problem.name or 'structure'} is infeasible; "
                   f"families involved: {', '.join(solution.conflict)}")
        logging.error(message)
        raise InfeasibleProblemError(message, solution.conflict)
    if solution.status == 'unbounded':
        raise UnboundedProblemError(f"Information-ratio LP for {problem.name or 'structure'} is unbounded")
    return solution.value


def catalog_structure(name):
    """Load a catalog secret-sharing problem from data/catalog."""
    from scripts.problem_file import catalog_path, load_problem

    problem = load_problem(catalog_path(name))
    if not isinstance(problem, RatioProblem):
        raise AccessStructureError(f"Catalog entry {name} is not a secret-sharing problem")
    return problem
