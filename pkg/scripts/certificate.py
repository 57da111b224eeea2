import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction

from scripts.core_entropy import EntropyCoordinate, LinearExpression, bits_of, coordinate, entropy_term
from scripts.perm_sym import orbit_index

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')

ROW_PATTERN = re.compile(r'^(?P<lhs>.*?)\s*(?P<relation>>=|<=|=)\s*(?P<rhs>[^\s<>=]+)\s*$')
TERM_PATTERN = re.compile(r'\s*(?P<sign>[+-])?\s*(?:(?P<coefficient>\d+(?:/\d+)?)\s*\*?\s*)?H\{(?P<body>[^{}]*)\}')
COEFFICIENT_PATTERN = re.compile(r'^with\s+coefficient\s+(?P<value>\S+)\s*$')
LETTERS = 'abcdefghijklmnopqrstuvwxyz'


class CertificateError(ValueError):
    """Base class for every reason a certificate is rejected."""


class CertificateParseError(CertificateError):
    pass


class RowClassificationError(CertificateError):
    pass


class AggregateMismatchError(CertificateError):
    pass


class SignViolationError(CertificateError):
    pass


@dataclass(frozen=True)
class RowKind:
    kind: str
    detail: int = None

    def __str__(self):
        return self.kind if self.detail is None else f"{self.kind}({self.detail})"


@dataclass(frozen=True)
class CertRow:
    expr: LinearExpression
    relation: str
    rhs: Fraction
    multiplier: Fraction
    label: str = ''
    line: int = 0


@dataclass(frozen=True)
class CertificateContext:
    """What a certificate must prove and how its rows are whitelisted."""
    objective: LinearExpression
    sense: str
    classify: object
    universe: object = None


@dataclass
class TokenMap:
    """Certificate tokens: a, b, ... for base variables by position, "b'0" for the step-0 copy of b."""
    universe: object
    tokens: dict = field(default_factory=dict)

    @classmethod
    def from_universe(cls, universe):
        if len(universe.base_vars) > len(LETTERS):
            raise CertificateError(f"Token letters cover at most {len(LETTERS)} base variables")
        tokens = {LETTERS[i]: i for i in range(len(universe.base_vars))}
        for offset, copy in enumerate(universe.copy_vars):
            token = f"{LETTERS[universe.base_vars.index(copy.origin)]}'{copy.step}"
            if token in tokens:
                raise CertificateError(f"Copy token {token} is ambiguous")
            tokens[token] = len(universe.base_vars) + offset
        return cls(universe, tokens)

    def resolve(self, token):
        try:
            return self.tokens[token]
        except KeyError:
            raise CertificateParseError(f"Unknown certificate token: {token!r}") from None

    def token_of(self, index):
        for token, position in self.tokens.items():
            if position == index:
                return token
        raise CertificateError(f"No token for variable index {index}")

    def render_mask(self, mask):
        return 'H{' + '.'.join(sorted(self.token_of(i) for i in bits_of(mask))) + '}'


@dataclass
class Certificate:
    rows: list
    sense: str = 'maximize'

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def render(self, token_map):
        """Text in the same grammar parse_certificate reads."""
        blocks = []
        for row in self.rows:
            parts = []
            for column, value in row.expr.items():
                if not isinstance(column, EntropyCoordinate):
                    raise CertificateError(f"Column {column.name} has no certificate token")
                magnitude = abs(value)
                term = token_map.render_mask(column.mask)
                if magnitude != 1:
                    term = f"{magnitude} {term}"
                if parts:
                    parts.append(f"{'-' if value < 0 else '+'} {term}")
                else:
                    parts.append(f"-{term}" if value < 0 else term)
            blocks.append(f"{' '.join(parts)} {row.relation} {row.rhs}\nwith coefficient {row.multiplier}")
        return '\n\n'.join(blocks) + '\n'


def _parse_row(line, number, token_map):
    match = ROW_PATTERN.match(line)
    if not match:
        raise CertificateParseError(f"Line {number}: no relation found in {line!r}")
    lhs = match.group('lhs')
    try:
        rhs = Fraction(match.group('rhs'))
    except (ValueError, ZeroDivisionError):
        raise CertificateParseError(f"Line {number}: malformed right-hand side {match.group('rhs')!r}") from None

    pairs = []
    position = 0
    while position < len(lhs.rstrip()):
        term = TERM_PATTERN.match(lhs, position)
        if not term:
            raise CertificateParseError(f"Line {number}: cannot read a term at {lhs[position:]!r}")
        if pairs and not term.group('sign'):
            raise CertificateParseError(f"Line {number}: missing sign before {term.group(0).strip()!r}")
        body = term.group('body').strip()
        if not body:
            raise CertificateParseError(f"Line {number}: empty term H{{}}")
        mask = 0
        for token in body.split('.'):
            mask |= 1 << token_map.resolve(token.strip())
        value = Fraction(term.group('coefficient') or 1)
        pairs.append((coordinate(mask), -value if term.group('sign') == '-' else value))
        position = term.end()
    if not pairs:
        raise CertificateParseError(f"Line {number}: row has no terms")
    return LinearExpression.from_pairs(pairs), match.group('relation'), rhs


def parse_certificate(text, token_map):
    """Read row / "with coefficient" line pairs; blank lines are ignored."""
    lines = [(number, line.strip()) for number, line in enumerate(text.splitlines(), start=1) if line.strip()]
    rows = []
    i = 0
    while i < len(lines):
        number, line = lines[i]
        if COEFFICIENT_PATTERN.match(line):
            raise CertificateParseError(f"Line {number}: coefficient line without a row")
        expr, relation, rhs = _parse_row(line, number, token_map)
        if i + 1 >= len(lines):
            raise CertificateParseError(f"Line {number}: missing coefficient line")
        coefficient = COEFFICIENT_PATTERN.match(lines[i + 1][1])
        if not coefficient:
            raise CertificateParseError(f"Line {lines[i + 1][0]}: expected 'with coefficient', got {lines[i + 1][1]!r}")
        try:
            multiplier = Fraction(coefficient.group('value'))
        except (ValueError, ZeroDivisionError):
            raise CertificateParseError(f"Line {lines[i + 1][0]}: malformed coefficient "
                                        f"{coefficient.group('value')!r}") from None
        rows.append(CertRow(expr, relation, rhs, multiplier, line=number))
        i += 2
    logging.info(f"Parsed {len(rows)} certificate rows")
    return rows


def load_certificate(path, token_map):
    with open(path, 'r') as f:
        return parse_certificate(f.read(), token_map)


class FamilyClassifier:
    """Recognises the constraint families a guessing-problem certificate may use."""

    def __init__(self, problem, use_copies=True):
        universe = problem.universe
        self.base_mask = universe.base_mask
        copied = use_copies and bool(problem.blocks)
        self.scopes = list(problem.scopes) if copied else [universe.base_mask]
        self.neighbors = {}
        for v in problem.graph.vertices:
            mask = 0
            for u in problem.graph.in_neighbors(v):
                mask |= 1 << (u - 1)
            self.neighbors[v - 1] = mask
        self.orbits = orbit_index(problem.group, len(universe.base_vars))
        self.footprints = list(problem.footprints) if copied else []
        self.independence = {fp.step: fp.independence_expr() for fp in self.footprints}

    def _scope_containing(self, mask):
        for index, scope in enumerate(self.scopes):
            if mask & ~scope == 0:
                return index
        return None

    def _dependence(self, smaller, larger):
        added = larger & ~smaller
        if smaller & ~larger or bin(added).count('1') != 1 or not added & self.base_mask:
            return False
        v = added.bit_length() - 1
        return self.neighbors[v] & ~smaller == 0

    def _copy_match(self, first, second):
        for fp in self.footprints:
            for original, copied in ((first, second), (second, first)):
                if original & ~(fp.x_mask | fp.z_mask) == 0 and original & fp.z_mask:
                    if fp.substitute(original) == copied:
                        return fp.step
        return None

    def classify(self, row):
        terms = {}
        for column, value in row.expr.terms.items():
            if not isinstance(column, EntropyCoordinate):
                raise RowClassificationError(f"Row mentions auxiliary column {column.name}")
            terms[column.mask] = value
        if any(abs(value) != 1 for value in terms.values()):
            raise RowClassificationError(f"Row has non-unit coefficients: {row.expr.render()}")
        positive = sorted(mask for mask, value in terms.items() if value > 0)
        negative = sorted(mask for mask, value in terms.items() if value < 0)

        if row.relation == '<=':
            if len(terms) == 1 and positive and row.rhs == 1 and bin(positive[0]).count('1') == 1 \
                    and positive[0] & self.base_mask:
                return RowKind('vertex-bound')
            raise RowClassificationError(f"Only single-vertex bounds h_v <= 1 are admissible, got "
                                         f"{row.expr.render()} <= {row.rhs}")
        if row.rhs != 0:
            raise RowClassificationError(f"Row with relation {row.relation} must have rhs 0, got {row.rhs}")

        if row.relation == '>=':
            return self._classify_inequality(row, positive, negative)
        return self._classify_equality(row, positive, negative)

    def _classify_inequality(self, row, positive, negative):
        if len(positive) == 1 and len(negative) == 1:
            p, n = positive[0], negative[0]
            if n & ~p == 0 and bin(p & ~n).count('1') == 1:
                for index, scope in enumerate(self.scopes):
                    if scope == p:
                        return RowKind('elemental', index)
                raise RowClassificationError(f"Conditional entropy row is not over a declared scope: "
                                             f"{row.expr.render()}")
            if self._dependence(p, n):
                return RowKind('dependence')
            raise RowClassificationError(f"Two-term row is neither H(i|scope) nor a dependence row: "
                                         f"{row.expr.render()}")
        if len(positive) == 2 and len(negative) in (1, 2):
            a, b = positive
            union = max(negative, key=lambda mask: bin(mask).count('1'))
            given = min(negative, key=lambda mask: bin(mask).count('1')) if len(negative) == 2 else 0
            if a | b == union and a & b == given and bin(a & ~given).count('1') == 1 \
                    and bin(b & ~given).count('1') == 1:
                index = self._scope_containing(union)
                if index is not None:
                    return RowKind('elemental', index)
                raise RowClassificationError(f"Mutual-information row spans no declared scope: {row.expr.render()}")
        raise RowClassificationError(f"Inequality is not an elemental or dependence row: {row.expr.render()}")

    def _classify_equality(self, row, positive, negative):
        if len(positive) + len(negative) == 1:
            # h_v = 0 for a vertex that sees nobody
            if self._dependence(0, (positive or negative)[0]):
                return RowKind('dependence')
            raise RowClassificationError(f"Single-term equality is not a dependence row: {row.expr.render()}")
        if len(positive) == 1 and len(negative) == 1:
            p, n = positive[0], negative[0]
            if p & ~self.base_mask == 0 and n & ~self.base_mask == 0 and self.orbits.get(p) == self.orbits.get(n):
                return RowKind('symmetry')
            step = self._copy_match(p, n)
            if step is not None:
                return RowKind('copy-match', step)
            if self._dependence(p, n) or self._dependence(n, p):
                return RowKind('dependence')
            raise RowClassificationError(f"Two-term equality is not a symmetry, copy or dependence row: "
                                         f"{row.expr.render()}")
        if len(positive) == 2 and len(negative) == 2:
            for step, expr in self.independence.items():
                if row.expr == expr or row.expr == -expr:
                    return RowKind('copy-indep', step)
            raise RowClassificationError(f"Four-term equality matches no copy independence: {row.expr.render()}")
        raise RowClassificationError(f"Equality is not a recognised family: {row.expr.render()}")


def guess_context(problem, use_copies=True):
    """Family whitelist context for a guessing problem: maximise h of all base variables."""
    objective = entropy_term(problem.universe.base_mask)
    classifier = FamilyClassifier(problem, use_copies)
    return CertificateContext(objective, 'maximize', classifier.classify, problem.universe)


def classify_row(row, problem):
    return FamilyClassifier(problem).classify(row)


def _context(problem, use_copies):
    if isinstance(problem, CertificateContext):
        return problem
    if use_copies:
        return problem.certificate_context()
    return problem.certificate_context(use_copies=False)


def _admissible(relation, multiplier, sense):
    if relation == '=':
        return True
    upper = relation == '<='
    if sense == 'minimize':
        upper = not upper
    return multiplier >= 0 if upper else multiplier <= 0


def verify(rows, problem, use_copies=True):
    """Check every row, the multiplier signs and the aggregate; return the proven bound.

    With use_copies=False a guessing problem is checked against its base
    scope alone, matching a model built without copy blocks.
    """
    context = _context(problem, use_copies)
    aggregate = {}
    kinds = {}
    for row in rows:
        try:
            kind = context.classify(row)
        except CertificateError as e:
            logging.error(f"Certificate row at line {row.line} rejected: {e}")
            raise
        if not _admissible(row.relation, row.multiplier, context.sense):
            message = f"Row at line {row.line} ({kind}) has inadmissible multiplier {row.multiplier} for {row.relation}"
            logging.error(message)
            raise SignViolationError(message)
        kinds[kind.kind] = kinds.get(kind.kind, 0) + 1
        for column, value in row.expr.terms.items():
            updated = aggregate.get(column, 0) + row.multiplier * value
            if updated:
                aggregate[column] = updated
            else:
                aggregate.pop(column, None)

    residual = LinearExpression(aggregate) - context.objective
    if not residual.is_zero():
        shown = ', '.join(f"{column.render(context.universe)}: {value}" for column, value in residual.items()[:5])
        message = f"Aggregate differs from the objective on {len(residual)} columns ({shown})"
        logging.error(message)
        raise AggregateMismatchError(message)
    bound = sum((row.multiplier * row.rhs for row in rows), Fraction(0))
    logging.info(f"Certificate verified: {len(rows)} rows ({', '.join(f'{k} {v}' for k, v in sorted(kinds.items()))}), "
                 f"bound {bound}")
    return bound
