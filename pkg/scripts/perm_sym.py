import logging
import re
from dataclasses import dataclass, field

from sympy.combinatorics import Permutation as SympyPermutation
from sympy.combinatorics import PermutationGroup as SympyPermutationGroup

from scripts.core_entropy import Constraint, entropy_term

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')

CYCLE_PATTERN = re.compile(r'\(([^()]*)\)')
CYCLE_STRING_PATTERN = re.compile(r'^\s*(\([^()]*\)\s*)*$')


class PermutationError(ValueError):
    """Raised for non-bijective mappings, bad cycle text or index mismatches."""


def parse_cycle_labels(text):
    """Split cycle notation into label cycles.

    Inside a cycle, labels separated by whitespace are read whole; a cycle
    without whitespace is read one digit per label, so "(3746)" and
    "(2 10 5 9)" both parse.
    """
    if not CYCLE_STRING_PATTERN.match(text):
        raise PermutationError(f"Malformed cycle notation: {text!r}")
    cycles = []
    for body in CYCLE_PATTERN.findall(text):
        body = body.strip()
        if not body:
            continue
        tokens = body.split() if re.search(r'\s', body) else list(body)
        if not all(token.isdigit() for token in tokens):
            raise PermutationError(f"Non-numeric label in cycle ({body})")
        cycles.append([int(token) for token in tokens])
    return cycles


@dataclass(frozen=True)
class Permutation:
    """A bijection on point indices 0..degree-1.

    The mapping tuple gives hashing and fast point lookup; composition,
    inversion and cycle decomposition go through sympy.
    """
    mapping: tuple

    def __post_init__(self):
        object.__setattr__(self, 'mapping', tuple(self.mapping))
        if sorted(self.mapping) != list(range(len(self.mapping))):
            raise PermutationError(f"Mapping is not a bijection: {self.mapping}")

    @classmethod
    def identity(cls, degree):
        return cls(tuple(range(degree)))

    @classmethod
    def from_cycles(cls, cycles, degree):
        mapping = list(range(degree))
        seen = set()
        for cycle in cycles:
            for point in cycle:
                if not 0 <= point < degree:
                    raise PermutationError(f"Point {point} outside 0..{degree - 1}")
                if point in seen:
                    raise PermutationError(f"Point {point} appears twice in {cycles}")
                seen.add(point)
            for a, b in zip(cycle, cycle[1:] + cycle[:1]):
                mapping[a] = b
        return cls(tuple(mapping))

    @classmethod
    def from_sympy(cls, permutation):
        return cls(tuple(permutation.array_form))

    @classmethod
    def parse(cls, text, degree, base=1):
        """Parse cycle notation whose label k denotes point k - base."""
        cycles = [[label - base for label in cycle] for cycle in parse_cycle_labels(text)]
        return cls.from_cycles(cycles, degree)

    @property
    def degree(self):
        return len(self.mapping)

    def as_sympy(self):
        return SympyPermutation(list(self.mapping))

    def __call__(self, point):
        return self.mapping[point] if point < self.degree else point

    def then(self, other):
        """Apply self first, then other."""
        if other.degree != self.degree:
            raise PermutationError(f"Degree mismatch: {self.degree} vs {other.degree}")
        if not self.degree:
            return self
        # sympy multiplies left to right: (p*q)(i) == q(p(i))
        return Permutation.from_sympy(self.as_sympy() * other.as_sympy())

    def inverse(self):
        if not self.degree:
            return self
        return Permutation.from_sympy(~self.as_sympy())

    def is_identity(self):
        return all(point == image for point, image in enumerate(self.mapping))

    def apply_mask(self, mask):
        """Image of a subset bitmask; bits at or above the degree stay fixed."""
        low = mask & ((1 << self.degree) - 1)
        image = mask ^ low
        point = 0
        while low:
            if low & 1:
                image |= 1 << self.mapping[point]
            low >>= 1
            point += 1
        return image

    def cycles(self):
        """Nontrivial cycles, each led by its smallest point, in order of that point."""
        if not self.degree:
            return []
        return [tuple(cycle) for cycle in self.as_sympy().cyclic_form]

    def to_cycle_string(self, base=1):
        parts = []
        for cycle in self.cycles():
            labels = [str(point + base) for point in cycle]
            joined = ' '.join(labels) if any(len(label) > 1 for label in labels) else ''.join(labels)
            parts.append(f"({joined})")
        return ''.join(parts) or '()'


@dataclass(frozen=True)
class PermutationGroup:
    generators: tuple
    degree: int
    order: int
    elements: tuple = field(repr=False)

    def __contains__(self, permutation):
        return permutation in self.elements


def closure(generators, degree=None):
    """Close a generating set into its permutation group."""
    generators = tuple(generators)
    degrees = {g.degree for g in generators}
    if len(degrees) > 1:
        raise PermutationError(f"Generators act on different index sets: {sorted(degrees)}")
    if degrees:
        found = degrees.pop()
        if degree is not None and degree != found:
            raise PermutationError(f"Generators have degree {found}, expected {degree}")
        degree = found
    degree = degree or 0

    if not generators or not degree:
        return PermutationGroup(generators, degree, 1, (Permutation.identity(degree),))
    group = SympyPermutationGroup([g.as_sympy() for g in generators])
    elements = tuple(Permutation.from_sympy(element) for element in group.generate())
    order = int(group.order())
    if order != len(elements):
        raise PermutationError(f"Enumerated {len(elements)} elements for a group of order {order}")
    logging.debug(f"Closed {len(generators)} generators into a group of order {order}")
    return PermutationGroup(generators, degree, order, elements)


@dataclass(frozen=True)
class Orbit:
    representative: int
    members: tuple


def subset_orbits(group, base_count):
    """Partition the nonempty subsets of base_count points into group orbits.

    Subsets are scanned in increasing bitmask order, so the first unassigned
    subset of an orbit is its minimal member and becomes the representative.
    """
    if group.degree > base_count:
        raise PermutationError(f"Group of degree {group.degree} exceeds {base_count} base variables")
    assigned = set()
    orbits = []
    for mask in range(1, 1 << base_count):
        if mask in assigned:
            continue
        members = sorted({element.apply_mask(mask) for element in group.elements})
        assigned.update(members)
        orbits.append(Orbit(mask, tuple(members)))
    return orbits


def orbit_index(group, base_count):
    """Map every nonempty base subset to its orbit representative."""
    return {member: orbit.representative for orbit in subset_orbits(group, base_count) for member in orbit.members}


def symmetry_equalities(group, universe):
    """Equalities h_I − h_rep = 0 for every non-representative base subset."""
    base_count = len(universe.base_vars)
    if group.degree > base_count:
        raise PermutationError(f"Group acts on {group.degree} points but universe has {base_count} base variables")
    rows = []
    for orbit in subset_orbits(group, base_count):
        for member in orbit.members:
            if member != orbit.representative:
                rows.append(Constraint(entropy_term(member) - entropy_term(orbit.representative), '=', 0, 'symmetry'))
    logging.info(f"Generated {len(rows)} symmetry equalities from a group of order {group.order}")
    return rows


def check_invariance(obj, permutation):
    """True iff the permutation maps the structure or graph onto itself.

    The object supplies relabel(permutation) and value equality; both
    AccessStructure and SightGraph do.
    """
    return obj.relabel(permutation) == obj
