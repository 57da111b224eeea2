import sys
import os
import dataclasses
import random
from fractions import Fraction

import pytest

# Add the parent directory to sys.path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from scripts.certificate import (AggregateMismatchError, CertRow, Certificate, CertificateError, CertificateParseError,
                                 RowClassificationError, SignViolationError, TokenMap, classify_row,
                                 load_certificate, parse_certificate, verify)
from scripts.core_entropy import LinearExpression, entropy_term
from scripts.guessing import catalog_graph, complete_graph, cycle_graph, guessing_model, make_guess_problem
from scripts.lp import dual_to_certificate, solve

CERTIFICATE_PATH = os.path.join(os.path.dirname(__file__), '..', 'data', 'certificates', 'rminus_1847_276.cert')


@pytest.fixture(scope="module")
def rminus():
    return catalog_graph('Rminus')


@pytest.fixture(scope="module")
def rminus_rows(rminus):
    return load_certificate(CERTIFICATE_PATH, TokenMap.from_universe(rminus.universe))


@pytest.fixture
def k2():
    return make_guess_problem(complete_graph(2))


def k2_rows(k2):
    token_map = TokenMap.from_universe(k2.universe)
    text = "H{a} - H{a.b} >= 0\nwith coefficient -1\n\nH{a} <= 1\nwith coefficient 1\n"
    return parse_certificate(text, token_map)


def test_first_appendix_row(rminus, rminus_rows):
    first = rminus_rows[0]
    assert first.relation == '>='
    assert first.multiplier == Fraction(-1, 69)
    assert len(first.expr) == 4
    universe = rminus.universe
    b0 = universe.index_of("X2'")
    positive = {column.mask for column, value in first.expr.terms.items() if value > 0}
    assert universe.mask_of(['X3', 'X6', 'X8', 'X10']) | (1 << b0) in positive


def test_appendix_certificate_verifies(rminus, rminus_rows):
    assert len(rminus_rows) == 1920
    assert verify(rminus_rows, rminus) == Fraction(1847, 276)
    upper = [row.multiplier for row in rminus_rows if row.relation == '<=']
    assert upper == [Fraction(191, 138), Fraction(743, 276), Fraction(361, 138)]
    assert sum(upper) == Fraction(1847, 276)


def test_every_appendix_row_classifies(rminus, rminus_rows):
    kinds = {classify_row(row, rminus).kind for row in rminus_rows}
    assert {'vertex-bound', 'elemental', 'copy-match', 'copy-indep'} <= kinds
    assert kinds <= {'vertex-bound', 'elemental', 'dependence', 'symmetry', 'copy-match', 'copy-indep'}


def test_row_order_does_not_matter(rminus, rminus_rows):
    shuffled = list(rminus_rows)
    random.Random(3).shuffle(shuffled)
    assert verify(shuffled, rminus) == Fraction(1847, 276)


def _tamper(row, rng):
    choice = rng.randrange(3)
    if choice == 0:
        return dataclasses.replace(row, multiplier=row.multiplier + 1)
    if choice == 1:
        return dataclasses.replace(row, multiplier=row.multiplier * 3)
    column, value = rng.choice(row.expr.items())
    terms = dict(row.expr.terms)
    terms[column] = -value
    return dataclasses.replace(row, expr=LinearExpression(terms))


def test_tampered_certificates_are_rejected(rminus, rminus_rows):
    rng = random.Random(11)
    for _ in range(120):
        rows = list(rminus_rows)
        position = rng.randrange(len(rows))
        rows[position] = _tamper(rows[position], rng)
        with pytest.raises(CertificateError):
            verify(rows, rminus)


def test_dropping_a_row_breaks_the_aggregate(rminus, rminus_rows):
    with pytest.raises(AggregateMismatchError):
        verify(rminus_rows[1:], rminus)


def test_k2_hand_certificate(k2):
    assert verify(k2_rows(k2), k2) == 1


def test_sign_violation(k2):
    rows = k2_rows(k2)
    rows[0] = dataclasses.replace(rows[0], multiplier=Fraction(1))
    with pytest.raises(SignViolationError):
        verify(rows, k2)


def test_unknown_family_is_rejected(k2):
    bogus = CertRow(entropy_term(0b11) - entropy_term(0b01) * 2, '>=', Fraction(0), Fraction(-1))
    with pytest.raises(RowClassificationError):
        verify(k2_rows(k2) + [bogus], k2)
    wide_bound = CertRow(entropy_term(0b11), '<=', Fraction(2), Fraction(1))
    with pytest.raises(RowClassificationError):
        classify_row(wide_bound, k2)


def test_parse_errors(k2):
    token_map = TokenMap.from_universe(k2.universe)
    with pytest.raises(CertificateParseError):
        parse_certificate("H{a} <= 1\n", token_map)
    with pytest.raises(CertificateParseError):
        parse_certificate("H{z} <= 1\nwith coefficient 1\n", token_map)
    with pytest.raises(CertificateParseError):
        parse_certificate("H{a} H{b} <= 1\nwith coefficient 1\n", token_map)
    with pytest.raises(CertificateParseError):
        parse_certificate("with coefficient 1\n", token_map)


def test_render_parses_back(k2):
    rows = k2_rows(k2)
    token_map = TokenMap.from_universe(k2.universe)
    text = Certificate(rows).render(token_map)
    again = parse_certificate(text, token_map)
    assert [(row.expr, row.relation, row.rhs, row.multiplier) for row in again] == \
        [(row.expr, row.relation, row.rhs, row.multiplier) for row in rows]


def test_token_map_names_copies(rminus):
    token_map = TokenMap.from_universe(rminus.universe)
    assert token_map.resolve('a') == 0
    assert token_map.resolve("b'0") == 10
    assert token_map.resolve("h'4") == rminus.universe.total_count - 1


def test_certificate_of_model_without_copies():
    problem = make_guess_problem(cycle_graph(4), recipes=[["X2' be a X3-copy of X2"]])
    model = guessing_model(problem, use_copies=False)
    certificate = dual_to_certificate(model, solve(model))
    assert verify(certificate.rows, problem, use_copies=False) == 2
    assert verify(certificate.rows, model.certificate_context()) == 2
