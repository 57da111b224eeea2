import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from types import MappingProxyType

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')

MAX_VARIABLES = 30
WARN_VARIABLES = 20

RELATIONS = ('>=', '<=', '=')
TAGS = ('elemental', 'copy-match', 'copy-indep', 'symmetry', 'problem', 'bound')


class VariableUniverseError(ValueError):
    """Raised when a variable universe or an expression over it is malformed."""


@dataclass(frozen=True)
class CopyVariable:
    """A copy of an existing variable introduced at a given copy step."""
    name: str
    step: int
    origin: str
    block: int = 0


@dataclass(frozen=True)
class VariableUniverse:
    """Ordered base variables followed by copy variables in creation order."""
    base_vars: tuple
    copy_vars: tuple = ()
    _index: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, 'base_vars', tuple(self.base_vars))
        object.__setattr__(self, 'copy_vars', tuple(self.copy_vars))
        names = self.names
        if len(set(names)) != len(names):
            duplicates = sorted({name for name in names if names.count(name) > 1})
            raise VariableUniverseError(f"Duplicate variable names: {duplicates}")
        if len(names) > MAX_VARIABLES:
            raise VariableUniverseError(f"{len(names)} variables exceed the limit of {MAX_VARIABLES}")
        if len(names) > WARN_VARIABLES:
            logging.warning(f"Universe has {len(names)} variables; subset enumeration over it is expensive")
        for copy in self.copy_vars:
            if copy.origin not in self.base_vars:
                raise VariableUniverseError(f"Copy {copy.name} has unknown origin {copy.origin}")
        object.__setattr__(self, '_index', {name: i for i, name in enumerate(names)})

    @property
    def names(self):
        return self.base_vars + tuple(copy.name for copy in self.copy_vars)

    @property
    def total_count(self):
        return len(self.base_vars) + len(self.copy_vars)

    @property
    def base_mask(self):
        return (1 << len(self.base_vars)) - 1

    @property
    def full_mask(self):
        return (1 << self.total_count) - 1

    def index_of(self, name):
        try:
            return self._index[name]
        except KeyError:
            raise VariableUniverseError(f"Unknown variable: {name}") from None

    def mask_of(self, names):
        mask = 0
        for name in names:
            mask |= 1 << self.index_of(name)
        return mask

    def names_of(self, mask):
        return tuple(self.names[i] for i in bits_of(mask))

    def copy_variable(self, index):
        """Return the CopyVariable at a universe index, or None for base variables."""
        offset = index - len(self.base_vars)
        return self.copy_vars[offset] if offset >= 0 else None

    def block_mask(self, block):
        """Base variables plus the copies created in one block."""
        mask = self.base_mask
        for offset, copy in enumerate(self.copy_vars):
            if copy.block == block:
                mask |= 1 << (len(self.base_vars) + offset)
        return mask

    def extend(self, copies):
        return VariableUniverse(self.base_vars, self.copy_vars + tuple(copies))

    def token(self, index):
        """LP token: digits of a base name, or origin token + 'p' + step for copies."""
        copy = self.copy_variable(index)
        if copy is None:
            name = self.base_vars[index]
            digits = re.sub(r'\D', '', name)
            return digits or name
        return f"{self.token(self.base_vars.index(copy.origin))}p{copy.step}"


def bits_of(mask):
    """Indices of the set bits of a mask, ascending."""
    indices = []
    i = 0
    while mask:
        if mask & 1:
            indices.append(i)
        mask >>= 1
        i += 1
    return indices


def submasks(mask):
    """All submasks of mask in ascending numeric order, including 0 and mask."""
    sub = 0
    while True:
        yield sub
        if sub == mask:
            return
        sub = (sub - mask) & mask


def as_mask(varset):
    """Accept a bitmask or an iterable of variable indices."""
    if isinstance(varset, int):
        if varset < 0:
            raise VariableUniverseError(f"Negative mask: {varset}")
        return varset
    mask = 0
    for index in varset:
        mask |= 1 << index
    return mask


@dataclass(frozen=True, order=True)
class EntropyCoordinate:
    """The joint entropy of a nonempty variable subset, keyed by bitmask."""
    mask: int

    def __post_init__(self):
        if self.mask <= 0:
            raise VariableUniverseError("Entropy coordinates need a nonempty subset")

    def render(self, universe=None):
        if universe is None:
            return f"h[{self.mask:b}]"
        return 'h_' + '_'.join(universe.token(i) for i in bits_of(self.mask))


@dataclass(frozen=True, order=True)
class AuxVariable:
    """An auxiliary LP column that is not an entropy coordinate."""
    name: str

    def render(self, universe=None):
        return self.name


@lru_cache(maxsize=None)
def coordinate(mask):
    return EntropyCoordinate(mask)


def column_key(column):
    """Coordinates first by mask, then auxiliary columns by name."""
    if isinstance(column, EntropyCoordinate):
        return (0, column.mask, '')
    return (1, 0, column.name)


class LinearExpression:
    """Immutable sparse linear form over LP columns with exact coefficients."""
    __slots__ = ('_terms', '_key')

    def __init__(self, terms=None):
        cleaned = {}
        for column, coefficient in (terms or {}).items():
            coefficient = Fraction(coefficient)
            if coefficient:
                cleaned[column] = coefficient
        self._terms = cleaned
        self._key = None

    @classmethod
    def _wrap(cls, cleaned):
        expr = cls.__new__(cls)
        expr._terms = cleaned
        expr._key = None
        return expr

    @classmethod
    def from_pairs(cls, pairs):
        """Sum (column, coefficient) pairs, merging repeated columns."""
        acc = {}
        for column, coefficient in pairs:
            acc[column] = acc.get(column, 0) + Fraction(coefficient)
        return cls._wrap({c: v for c, v in acc.items() if v})

    @property
    def terms(self):
        return MappingProxyType(self._terms)

    def items(self):
        return sorted(self._terms.items(), key=lambda item: column_key(item[0]))

    def columns(self):
        return [column for column, _ in self.items()]

    def coefficient(self, column):
        return self._terms.get(column, Fraction(0))

    def is_zero(self):
        return not self._terms

    def __len__(self):
        return len(self._terms)

    def __add__(self, other):
        acc = dict(self._terms)
        for column, coefficient in other._terms.items():
            value = acc.get(column, 0) + coefficient
            if value:
                acc[column] = value
            else:
                acc.pop(column, None)
        return LinearExpression._wrap(acc)

    def __neg__(self):
        return LinearExpression._wrap({c: -v for c, v in self._terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, scalar):
        scalar = Fraction(scalar)
        if not scalar:
            return LinearExpression()
        return LinearExpression._wrap({c: v * scalar for c, v in self._terms.items()})

    __rmul__ = __mul__

    def key(self):
        if self._key is None:
            self._key = tuple(self.items())
        return self._key

    def __eq__(self, other):
        if not isinstance(other, LinearExpression):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(self.key())

    def evaluate(self, values):
        return sum((coefficient * Fraction(values.get(column, 0)) for column, coefficient in self._terms.items()),
                   Fraction(0))

    def map_columns(self, mapping):
        return LinearExpression.from_pairs((mapping(column), coefficient) for column, coefficient in self._terms.items())

    def render(self, universe=None):
        if not self._terms:
            return '0'
        parts = []
        for column, coefficient in self.items():
            sign = '-' if coefficient < 0 else '+'
            parts.append(f"{sign} {abs(coefficient)} {column.render(universe)}")
        return ' '.join(parts)

    def __repr__(self):
        return f"LinearExpression({self.render()})"


def entropy_term(mask, coefficient=1):
    """h_mask as an expression; the empty set contributes nothing."""
    mask = as_mask(mask)
    if mask == 0:
        return LinearExpression()
    return LinearExpression._wrap({coordinate(mask): Fraction(coefficient)})


@dataclass(frozen=True)
class Constraint:
    """One LP row: expr relation rhs, with provenance."""
    expr: LinearExpression
    relation: str
    rhs: Fraction = Fraction(0)
    tag: str = 'problem'
    scope: int = None
    step: int = None

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise VariableUniverseError(f"Unknown relation: {self.relation}")
        if self.tag not in TAGS:
            raise VariableUniverseError(f"Unknown constraint tag: {self.tag}")
        object.__setattr__(self, 'rhs', Fraction(self.rhs))

    def row_key(self):
        return (self.expr.key(), self.relation, self.rhs)

    def is_satisfied(self, values):
        lhs = self.expr.evaluate(values)
        if self.relation == '>=':
            return lhs >= self.rhs
        if self.relation == '<=':
            return lhs <= self.rhs
        return lhs == self.rhs

    def render(self, universe=None):
        return f"{self.expr.render(universe)} {self.relation} {self.rhs}"


def coordinate_of(universe, names):
    """Map a set of variable names to its entropy coordinate."""
    if not names:
        raise VariableUniverseError("Entropy coordinates need a nonempty subset")
    return coordinate(universe.mask_of(names))


def cond_entropy_expr(a, b=0):
    """H(A|B) = h_{A∪B} − h_B."""
    a, b = as_mask(a), as_mask(b)
    if not a:
        raise VariableUniverseError("Conditional entropy needs a nonempty first argument")
    return entropy_term(a | b) - entropy_term(b)


def mutual_info_expr(i, j, k=0):
    """I(I;J|K) = h_{IK} + h_{JK} − h_{IJK} − h_K."""
    i, j, k = as_mask(i), as_mask(j), as_mask(k)
    if not i or not j:
        raise VariableUniverseError("Mutual information needs nonempty arguments")
    return LinearExpression.from_pairs(
        (coordinate(mask), coefficient)
        for mask, coefficient in ((i | k, 1), (j | k, 1), (i | j | k, -1), (k, -1))
        if mask
    )


def elemental_inequalities(scope):
    """Elemental Shannon inequalities over the variables of a scope mask.

    For every pair i<j of the scope and every K ⊆ scope∖{i,j}: I(i;j|K) ≥ 0,
    then for every i: H(i | scope∖{i}) ≥ 0. The count for m variables is
    C(m,2)·2^(m−2) + m.
    """
    scope = as_mask(scope)
    if not scope:
        raise VariableUniverseError("Elemental inequalities need a nonempty scope")
    members = bits_of(scope)
    rows = []
    for a, i in enumerate(members):
        for j in members[a + 1:]:
            pair = (1 << i) | (1 << j)
            rest = scope & ~pair
            for k in submasks(rest):
                rows.append(Constraint(mutual_info_expr(1 << i, 1 << j, k), '>=', 0, 'elemental', scope=scope))
    for i in members:
        rows.append(Constraint(cond_entropy_expr(1 << i, scope & ~(1 << i)), '>=', 0, 'elemental', scope=scope))
    logging.debug(f"Generated {len(rows)} elemental inequalities over {len(members)} variables")
    return rows
