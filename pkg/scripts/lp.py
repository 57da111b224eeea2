import logging
import os
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction
from math import lcm

from scripts.certificate import CertRow, Certificate, CertificateContext, RowClassificationError, RowKind
from scripts.core_entropy import EntropyCoordinate, LinearExpression, VariableUniverseError, column_key

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')

DEFAULT_PIVOT_BUDGET = 200000
DEGENERATE_STREAK_LIMIT = 50
SENSES = ('maximize', 'minimize')


class PivotBudgetExceeded(RuntimeError):
    """Raised when the simplex exceeds its pivot budget."""


class InfeasibleProblemError(ValueError):
    """Raised by bound pipelines when the assembled LP has no feasible point."""

    def __init__(self, message, conflict=()):
        super().__init__(message)
        self.conflict = tuple(conflict)


class UnboundedProblemError(ValueError):
    """Raised by bound pipelines when the assembled LP is unbounded."""


@dataclass(frozen=True)
class LPModel:
    columns: tuple
    rows: tuple
    objective: LinearExpression
    sense: str
    universe: object = None
    name: str = ''

    @property
    def sign(self):
        return 1 if self.sense == 'maximize' else -1

    def column_name(self, column):
        return column.render(self.universe)

    def certificate_context(self):
        """Whitelist context: a certificate row must be one of the model's rows."""
        tags = {}
        for row in self.rows:
            tags.setdefault(row.row_key(), row.tag)

        def classify(row):
            tag = tags.get((row.expr.key(), row.relation, row.rhs))
            if tag is None:
                raise RowClassificationError(f"Row is not a constraint of model {self.name!r}: "
                                             f"{row.expr.render(self.universe)} {row.relation} {row.rhs}")
            return RowKind(tag)

        return CertificateContext(self.objective, self.sense, classify, self.universe)


@dataclass
class LPSolution:
    status: str
    value: Fraction = None
    primal: dict = field(default_factory=dict)
    duals: dict = field(default_factory=dict)
    conflict: tuple = ()
    pivots: int = 0


def _check_columns(expr, universe, what):
    if universe is None:
        return
    for column in expr.terms:
        if isinstance(column, EntropyCoordinate) and column.mask & ~universe.full_mask:
            raise VariableUniverseError(f"{what} uses coordinate {column.mask:b} outside the universe")


def assemble(universe, constraint_sets, objective, sense, name=''):
    """Concatenate constraint sets, drop exact duplicates and fix column order."""
    if sense not in SENSES:
        raise ValueError(f"Unknown sense: {sense}")
    _check_columns(objective, universe, "Objective")
    rows = []
    seen = set()
    duplicates = 0
    for constraints in constraint_sets:
        for row in constraints:
            key = row.row_key()
            if key in seen:
                duplicates += 1
                continue
            seen.add(key)
            _check_columns(row.expr, universe, f"A {row.tag} row")
            rows.append(row)
    columns = set(objective.terms)
    for row in rows:
        columns.update(row.expr.terms)
    model = LPModel(tuple(sorted(columns, key=column_key)), tuple(rows), objective, sense, universe, name)
    logging.info(f"Assembled LP {name or '(unnamed)'}: {len(model.columns)} columns, {len(rows)} rows"
                 + (f", {duplicates} duplicates dropped" if duplicates else ""))
    return model


def _axpy(target, factor, source):
    """target += factor * source on sparse dicts, dropping zeros."""
    for key, value in source.items():
        updated = target.get(key, 0) + factor * value
        if updated:
            target[key] = updated
        else:
            target.pop(key, None)


class _Echelon:
    """Exact Gaussian elimination of equality rows, tracking row combinations.

    Each pivot row is stored normalised (pivot coefficient 1) together with the
    combination of original rows it came from. The pivot of a new row is its
    largest column, so high-mask coordinates are expressed through low ones.
    """

    def __init__(self):
        self.rows = {}
        self.position = {}
        self.order = []

    def add(self, index, expr, rhs):
        coeffs = dict(expr.terms)
        rhs = Fraction(rhs)
        combo = {index: Fraction(1)}
        while True:
            present = [self.position[c] for c in coeffs if c in self.position]
            if not present:
                break
            pivot = self.order[min(present)]
            factor = coeffs[pivot]
            pivot_coeffs, pivot_rhs, pivot_combo = self.rows[pivot]
            _axpy(coeffs, -factor, pivot_coeffs)
            rhs -= factor * pivot_rhs
            _axpy(combo, -factor, pivot_combo)
        if not coeffs:
            return combo if rhs else None
        pivot = max(coeffs, key=column_key)
        scale = coeffs[pivot]
        self.rows[pivot] = ({c: v / scale for c, v in coeffs.items()}, rhs / scale,
                            {k: v / scale for k, v in combo.items()})
        self.position[pivot] = len(self.order)
        self.order.append(pivot)
        return None

    def back_substitute(self):
        for i in range(len(self.order) - 1, -1, -1):
            pivot = self.order[i]
            coeffs, rhs, combo = self.rows[pivot]
            later = [c for c in coeffs if c != pivot and c in self.position]
            for column in later:
                factor = coeffs.get(column)
                if not factor:
                    continue
                other_coeffs, other_rhs, other_combo = self.rows[column]
                _axpy(coeffs, -factor, other_coeffs)
                rhs -= factor * other_rhs
                _axpy(combo, -factor, other_combo)
            self.rows[pivot] = (coeffs, rhs, combo)

    def substitute(self, coeffs, rhs):
        """Rewrite a linear form (and its constant) over the non-pivot columns."""
        result = {}
        used = []
        for column, value in coeffs.items():
            if column in self.rows:
                pivot_coeffs, pivot_rhs, _ = self.rows[column]
                rhs -= value * pivot_rhs
                for other, weight in pivot_coeffs.items():
                    if other != column:
                        result[other] = result.get(other, 0) - value * weight
                used.append(column)
            else:
                result[column] = result.get(column, 0) + value
        return {c: v for c, v in result.items() if v}, rhs, used


class SimplexTableau:
    """Sparse exact tableau: rows hold B⁻¹A, the cost row holds reduced costs."""

    def __init__(self, rows, rhs, basis, pivot_budget=DEFAULT_PIVOT_BUDGET):
        self.rows = rows
        self.rhs = rhs
        self.basis = basis
        self.cost = {}
        self.cost_rhs = Fraction(0)
        self.pivots = 0
        self.pivot_budget = pivot_budget
        self.bland = False
        self.degenerate_streak = 0

    def set_objective(self, costs):
        self.cost = {j: Fraction(c) for j, c in costs.items() if c}
        self.cost_rhs = Fraction(0)
        for i, basic in enumerate(self.basis):
            weight = self.cost.get(basic)
            if weight:
                _axpy(self.cost, -weight, self.rows[i])
                self.cost_rhs -= weight * self.rhs[i]

    @property
    def objective_value(self):
        return -self.cost_rhs

    def pivot(self, r, q):
        self.pivots += 1
        if self.pivots > self.pivot_budget:
            raise PivotBudgetExceeded(f"Simplex exceeded the pivot budget of {self.pivot_budget}")
        row = self.rows[r]
        a = row[q]
        if a != 1:
            row = {j: v / a for j, v in row.items()}
            self.rows[r] = row
            self.rhs[r] /= a
        for i, other in enumerate(self.rows):
            if i == r:
                continue
            factor = other.get(q)
            if factor:
                _axpy(other, -factor, row)
                self.rhs[i] -= factor * self.rhs[r]
        factor = self.cost.get(q)
        if factor:
            _axpy(self.cost, -factor, row)
            self.cost_rhs -= factor * self.rhs[r]
        self.basis[r] = q

    def entering(self, allowed):
        candidates = [(d, j) for j, d in self.cost.items() if d < 0 and j < allowed]
        if not candidates:
            return None
        if self.bland:
            return min(j for _, j in candidates)
        return min(candidates)[1]

    def leaving(self, q):
        best = None
        for i, row in enumerate(self.rows):
            a = row.get(q)
            if a is not None and a > 0:
                key = (self.rhs[i] / a, self.basis[i])
                if best is None or key < best[0]:
                    best = (key, i)
        return None if best is None else best[1]

    def run(self, allowed):
        """Pivot until optimal or unbounded; Dantzig pricing, Bland after a degenerate streak."""
        while True:
            q = self.entering(allowed)
            if q is None:
                return 'optimal'
            r = self.leaving(q)
            if r is None:
                return 'unbounded'
            degenerate = self.rhs[r] == 0
            self.pivot(r, q)
            if not degenerate:
                self.degenerate_streak = 0
                continue
            self.degenerate_streak += 1
            if not self.bland and self.degenerate_streak >= DEGENERATE_STREAK_LIMIT:
                logging.warning(f"{self.degenerate_streak} degenerate pivots in a row; switching to Bland's rule")
                self.bland = True


@dataclass
class _ReducedRow:
    coeffs: dict
    rhs: Fraction
    source: int
    scale: Fraction


def _tags(model, indices):
    return tuple(sorted({model.rows[k].tag for k in indices}))


def solve(model, pivot_budget=DEFAULT_PIVOT_BUDGET):
    """Exact two-phase simplex after eliminating every equality row."""
    sign = model.sign
    echelon = _Echelon()
    inequalities = []
    for k, row in enumerate(model.rows):
        if row.relation != '=':
            inequalities.append(k)
            continue
        conflict = echelon.add(k, row.expr, row.rhs)
        if conflict is not None:
            tags = _tags(model, conflict)
            logging.warning(f"Equality rows are inconsistent; families involved: {', '.join(tags)}")
            return LPSolution('infeasible', conflict=tags)
    echelon.back_substitute()
    logging.info(f"Presolve eliminated {len(echelon.order)} columns with "
                 f"{sum(1 for r in model.rows if r.relation == '=')} equality rows")

    reduced = {}
    for k in inequalities:
        row = model.rows[k]
        flip = -1 if row.relation == '>=' else 1
        coeffs, rhs, used = echelon.substitute({c: flip * v for c, v in row.expr.terms.items()}, flip * row.rhs)
        if not coeffs:
            if rhs < 0:
                indices = {k} | {e for column in used for e in echelon.rows[column][2]}
                tags = _tags(model, indices)
                logging.warning(f"Row {k + 1} reduces to 0 <= {rhs}; families involved: {', '.join(tags)}")
                return LPSolution('infeasible', conflict=tags)
            continue
        first = min(coeffs, key=column_key)
        scale = abs(coeffs[first])
        normalized = tuple(sorted(((c, v / scale) for c, v in coeffs.items()), key=lambda item: column_key(item[0])))
        candidate = _ReducedRow(dict(normalized), rhs / scale, k, scale)
        existing = reduced.get(normalized)
        if existing is None or candidate.rhs < existing.rhs:
            reduced[normalized] = candidate
    reduced_rows = list(reduced.values())

    objective, constant, _ = echelon.substitute({c: -sign * v for c, v in model.objective.terms.items()}, 0)
    constant = -constant

    free = set(objective)
    for row in reduced_rows:
        free.update(row.coeffs)
    free = sorted(free, key=column_key)
    position = {column: j for j, column in enumerate(free)}
    n = len(free)
    m = len(reduced_rows)
    artificial_start = 2 * n + m
    logging.info(f"Reduced LP: {n} free columns, {m} inequality rows")

    rows, rhs, basis = [], [], []
    artificials = 0
    for i, row in enumerate(reduced_rows):
        tableau_row = {}
        for column, value in row.coeffs.items():
            j = position[column]
            tableau_row[j] = value
            tableau_row[n + j] = -value
        tableau_row[2 * n + i] = Fraction(1)
        if row.rhs < 0:
            tableau_row = {j: -v for j, v in tableau_row.items()}
            tableau_row[artificial_start + artificials] = Fraction(1)
            basis.append(artificial_start + artificials)
            artificials += 1
            rhs.append(-row.rhs)
        else:
            basis.append(2 * n + i)
            rhs.append(row.rhs)
        rows.append(tableau_row)

    tableau = SimplexTableau(rows, rhs, basis, pivot_budget)
    if artificials:
        tableau.set_objective({artificial_start + a: 1 for a in range(artificials)})
        tableau.run(artificial_start + artificials)
        if tableau.objective_value > 0:
            involved = [reduced_rows[i].source for i in range(m) if tableau.cost.get(2 * n + i)]
            if not involved:
                involved = [reduced_rows[i].source for i in range(m) if reduced_rows[i].rhs < 0]
            tags = _tags(model, involved)
            logging.warning(f"Phase 1 ended with infeasibility {tableau.objective_value}; "
                            f"families involved: {', '.join(tags)}")
            return LPSolution('infeasible', conflict=tags, pivots=tableau.pivots)
        for i, basic in enumerate(tableau.basis):
            if basic < artificial_start:
                continue
            replacement = min((j for j in tableau.rows[i] if j < artificial_start), default=None)
            if replacement is not None:
                tableau.pivot(i, replacement)

    costs = {}
    for column, value in objective.items():
        costs[position[column]] = value
        costs[n + position[column]] = -value
    tableau.set_objective(costs)
    status = tableau.run(artificial_start)
    if status == 'unbounded':
        logging.info(f"LP {model.name or '(unnamed)'} is unbounded after {tableau.pivots} pivots")
        return LPSolution('unbounded', pivots=tableau.pivots)

    values = {column: Fraction(0) for column in free}
    for i, basic in enumerate(tableau.basis):
        if basic < n:
            values[free[basic]] += tableau.rhs[i]
        elif basic < 2 * n:
            values[free[basic - n]] -= tableau.rhs[i]
    primal = {column: values.get(column, Fraction(0)) for column in model.columns}
    for pivot in echelon.order:
        coeffs, pivot_rhs, _ = echelon.rows[pivot]
        primal[pivot] = pivot_rhs - sum((v * primal.get(c, 0) for c, v in coeffs.items() if c != pivot), Fraction(0))

    value = model.objective.evaluate(primal)
    if value != -sign * (tableau.objective_value + constant):
        raise RuntimeError(f"Objective mismatch after simplex: {value} vs {-sign * (tableau.objective_value + constant)}")
    for k, row in enumerate(model.rows):
        if not row.is_satisfied(primal):
            raise RuntimeError(f"Primal solution violates row {k + 1} ({row.tag})")

    duals = _recover_duals(model, echelon, reduced_rows, tableau, n, value)
    logging.info(f"LP {model.name or '(unnamed)'}: optimal value {value} after {tableau.pivots} pivots")
    return LPSolution('optimal', value, primal, duals, pivots=tableau.pivots)


def _recover_duals(model, echelon, reduced_rows, tableau, n, value):
    """Certificate multipliers for every model row, in the maximize/minimize sign convention."""
    sign = model.sign
    duals = {}
    for i, row in enumerate(reduced_rows):
        weight = tableau.cost.get(2 * n + i)
        if not weight:
            continue
        if weight < 0:
            raise RuntimeError(f"Negative row multiplier {weight} at optimum")
        relation = model.rows[row.source].relation
        duals[row.source] = (1 if relation == '<=' else -1) * sign * weight / row.scale

    residual = dict(model.objective.terms)
    for k, multiplier in duals.items():
        _axpy(residual, -multiplier, model.rows[k].expr.terms)
    equality = {}
    for pivot in echelon.order:
        factor = residual.get(pivot)
        if not factor:
            continue
        coeffs, _, combo = echelon.rows[pivot]
        _axpy(residual, -factor, coeffs)
        _axpy(equality, factor, combo)
    if residual:
        raise RuntimeError(f"Dual recovery left a residual on {len(residual)} columns")
    duals.update(equality)

    bound = sum((multiplier * model.rows[k].rhs for k, multiplier in duals.items()), Fraction(0))
    if bound != value:
        raise RuntimeError(f"Dual bound {bound} differs from the primal optimum {value}")
    logging.debug(f"Recovered {len(duals)} nonzero multipliers proving {bound}")
    return dict(sorted(duals.items()))


def dual_to_certificate(model, solution):
    """One certificate row per nonzero multiplier, in model row order."""
    if solution.status != 'optimal' or solution.duals is None:
        raise ValueError(f"No duals available for a solution with status {solution.status}")
    rows = []
    for k, multiplier in solution.duals.items():
        if multiplier:
            row = model.rows[k]
            rows.append(CertRow(row.expr, row.relation, row.rhs, multiplier, label=row.tag))
    return Certificate(rows, model.sense)


def _is_decimal_exact(value):
    denominator = value.denominator
    for prime in (2, 5):
        while denominator % prime == 0:
            denominator //= prime
    return denominator == 1


def format_number(value):
    """Integers as-is, terminating fractions as decimals, anything else as p/q."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    if _is_decimal_exact(value):
        with localcontext() as context:
            context.prec = 200
            return format(Decimal(value.numerator) / Decimal(value.denominator), 'f')
    return f"{value.numerator}/{value.denominator}"


def _render_terms(items, name_of):
    parts = [f"{'-' if c < 0 else '+'} {format_number(abs(c))} {name_of(column)}" for column, c in items]
    return ' '.join(parts) if parts else '0'


def _scaled_line(label, items, suffix, name_of):
    """Render a row, scaling by the denominator LCM when decimals would be inexact."""
    numbers = [c for _, c in items] + ([suffix[1]] if suffix else [])
    lines = []
    if any(not _is_decimal_exact(Fraction(c)) for c in numbers):
        factor = lcm(*(Fraction(c).denominator for c in numbers))
        original = _render_terms(items, name_of)
        original_tail = f" {suffix[0]} {format_number(suffix[1])}" if suffix else ''
        lines.append(f"\\ {label} scaled by {factor}; original: {original}{original_tail}")
        items = [(column, c * factor) for column, c in items]
        if suffix:
            suffix = (suffix[0], Fraction(suffix[1]) * factor)
    tail = f" {suffix[0]} {format_number(suffix[1])}" if suffix else ''
    lines.append(f"{label}: {_render_terms(items, name_of)}{tail}")
    return lines


def export_lp(model):
    """Deterministic LP-format text of the model; every column is free."""
    name_of = model.column_name
    lines = [f"\\ {model.name or 'entropy LP'}",
             f"\\ {len(model.columns)} columns, {len(model.rows)} rows",
             'Maximize' if model.sense == 'maximize' else 'Minimize']
    lines.extend(_scaled_line('obj', model.objective.items(), None, name_of))
    lines.append('Subject To')
    for k, row in enumerate(model.rows, start=1):
        lines.extend(_scaled_line(f"c{k}", row.expr.items(), (row.relation, row.rhs), name_of))
    lines.append('Bounds')
    for column in model.columns:
        lines.append(f"{name_of(column)} free")
    lines.append('End')
    return '\n'.join(lines) + '\n'


def save_lp(model, path):
    """Write export_lp output to a file."""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'w') as f:
        f.write(export_lp(model))
    logging.info(f"LP {model.name or '(unnamed)'} saved to {path}")
