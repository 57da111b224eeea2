import argparse
import logging
import os
import sys
from decimal import ROUND_HALF_EVEN, Decimal, localcontext
from fractions import Fraction

import pandas as pd

from scripts.certificate import CertificateError, TokenMap, load_certificate, verify
from scripts.copy_lemma import scope_sizes
from scripts.guessing import (DEFAULT_STRATEGY_GUARD, GuessProblem, StrategyGuardExceeded, brute_force_guessing_number, clique_cover_number,
                              combinatorial_bounds, fractional_clique_cover_number, guessing_model,
                              independence_number)
from scripts.lp import DEFAULT_PIVOT_BUDGET, PivotBudgetExceeded, dual_to_certificate, save_lp, solve
from scripts.problem_file import CATALOG_DIR, OUTPUT_DIR, catalog_names, load_problem, resolve_problem_path
from scripts.secret_sharing import RatioProblem, ratio_model

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')


def approx(value):
    """Nine-decimal rendering with trailing zeros removed."""
    value = Fraction(value)
    with localcontext() as context:
        context.prec = 60
        decimal = (Decimal(value.numerator) / Decimal(value.denominator)).quantize(Decimal('1e-9'), ROUND_HALF_EVEN)
    text = format(decimal, 'f')
    if '.' in text:
        text = text.rstrip('0').rstrip('.')
    return '0' if text == '-0' else text


def exact(value):
    return f"{Fraction(value)} ({approx(value)})"


def _load(reference, kind=None):
    problem = load_problem(resolve_problem_path(reference))
    if kind is not None and not isinstance(problem, kind):
        expected = 'guessing' if kind is GuessProblem else 'secret-sharing'
        raise ValueError(f"{reference} is not a {expected} problem")
    return problem


def _describe(problem):
    steps = sum(len(block.steps) for block in problem.blocks)
    if isinstance(problem, GuessProblem):
        size = f"guessing, {problem.graph.n} vertices"
    else:
        size = f"secret-sharing, {problem.structure.n} participants, {len(problem.structure.minimal_sets)} minimal sets"
    return f"problem {problem.name or '(unnamed)'} ({size}, group order {problem.group.order}, {steps} copy steps)"


def _model(problem, args):
    builder = guessing_model if isinstance(problem, GuessProblem) else ratio_model
    return builder(problem, use_symmetry=not args.no_symmetry, use_copies=not args.no_copies)


def _flags(args):
    return f"symmetry {'off' if args.no_symmetry else 'on'}, copies {'off' if args.no_copies else 'on'}"


def _solve_report(problem, args):
    model = _model(problem, args)
    lines = [_describe(problem), _flags(args), f"model {len(model.columns)} columns, {len(model.rows)} rows"]
    solution = solve(model, pivot_budget=args.pivot_budget)
    if solution.status == 'infeasible':
        lines.append(f"INFEASIBLE: constraint families involved: {', '.join(solution.conflict)}")
        return 1, lines, model, solution
    if solution.status == 'unbounded':
        lines.append("UNBOUNDED")
        return 1, lines, model, solution
    lines.append(f"optimum {exact(solution.value)}")
    for key, value in problem.references.items():
        lines.append(f"reference {key} {exact(value)}")
    return 0, lines, model, solution


def command_ratio(args):
    problem = _load(args.problem, RatioProblem)
    code, lines, _, _ = _solve_report(problem, args)
    return code, lines


def command_guess_bound(args):
    problem = _load(args.problem, GuessProblem)
    code, lines, model, solution = _solve_report(problem, args)
    if code == 0 and args.certificate:
        certificate = dual_to_certificate(model, solution)
        token_map = TokenMap.from_universe(problem.universe)
        directory = os.path.dirname(args.certificate)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(args.certificate, 'w') as f:
            f.write(certificate.render(token_map))
        logging.info(f"Certificate with {len(certificate)} rows saved to {args.certificate}")
        lines.append(f"certificate {len(certificate)} rows written to {args.certificate}")
    return code, lines


def command_verify_cert(args):
    problem = _load(args.problem, GuessProblem)
    rows = load_certificate(args.certfile, TokenMap.from_universe(problem.universe))
    bound = verify(rows, problem, use_copies=not args.no_copies)
    return 0, [f"VERIFIED bound {bound} (≈{approx(bound)}), {len(rows)} rows"]


def command_export_lp(args):
    problem = _load(args.problem)
    model = _model(problem, args)
    save_lp(model, args.out)
    return 0, [f"exported {len(model.columns)} columns, {len(model.rows)} rows to {args.out}"]


def command_brute_gn(args):
    problem = _load(args.problem, GuessProblem)
    result = brute_force_guessing_number(problem.graph, args.colors, guard=args.guard)
    gn = f"{result.gn}" if result.gn is not None else f"log_{args.colors}({result.max_winning_configs})"
    return 0, [f"colours {args.colors}", f"max winning configurations {result.max_winning_configs}", f"gn {gn}"]


def command_cpf(args):
    graph = _load(args.problem, GuessProblem).graph
    return 0, [f"cp_f {exact(fractional_clique_cover_number(graph))}"]


def command_cp(args):
    graph = _load(args.problem, GuessProblem).graph
    return 0, [f"cp {clique_cover_number(graph)}"]


def command_alpha(args):
    graph = _load(args.problem, GuessProblem).graph
    return 0, [f"alpha {independence_number(graph)}"]


def command_bounds(args):
    graph = _load(args.problem, GuessProblem).graph
    bounds = combinatorial_bounds(graph)
    return 0, [f"lower n - cp_f = {exact(bounds.lower)}",
               f"upper n - alpha = {bounds.upper_alpha}",
               f"acyclic {'yes' if bounds.acyclic_zero else 'no'}"]


def catalog_table():
    """One row per catalog entry."""
    records = []
    for name in catalog_names():
        problem = load_problem(os.path.join(CATALOG_DIR, f"{name}.prob"))
        is_graph = isinstance(problem, GuessProblem)
        records.append({
            'name': problem.name or name,
            'kind': 'guessing' if is_graph else 'secret-sharing',
            'variables': len(problem.universe.base_vars),
            'group_order': problem.group.order,
            'copy_steps': sum(len(block.steps) for block in problem.blocks),
            'scope_sizes': '/'.join(str(size) for size in scope_sizes(problem.scopes)),
            'references': ', '.join(f"{key} {value}" for key, value in problem.references.items()),
        })
    return pd.DataFrame(records)


def command_catalog(args):
    table = catalog_table()
    lines = table.to_string(index=False).splitlines()
    if args.csv:
        directory = os.path.dirname(args.csv)
        if directory:
            os.makedirs(directory, exist_ok=True)
        table.to_csv(args.csv, index=False)
        logging.info(f"Catalog table saved to {args.csv}")
    return 0, lines


def _add_model_flags(parser):
    parser.add_argument('--no-symmetry', action='store_true', help='omit symmetry equalities')
    parser.add_argument('--no-copies', action='store_true', help='omit copy blocks')


def build_parser():
    parser = argparse.ArgumentParser(prog='entropy-lp', description='Entropy-cone LP bounds and certificates')
    commands = parser.add_subparsers(dest='command', required=True)

    for name, handler, help_text in (('ratio', command_ratio, 'information-ratio lower bound'),
                                     ('guess-bound', command_guess_bound, 'guessing-number upper bound')):
        sub = commands.add_parser(name, help=help_text)
        sub.add_argument('problem', help='problem file or catalog:NAME')
        _add_model_flags(sub)
        sub.add_argument('--pivot-budget', type=int, default=DEFAULT_PIVOT_BUDGET)
        sub.set_defaults(handler=handler)
    commands.choices['guess-bound'].add_argument('--certificate', help='write the dual certificate here')

    sub = commands.add_parser('verify-cert', help='verify a certificate against a guessing problem')
    sub.add_argument('problem')
    sub.add_argument('certfile')
    sub.add_argument('--no-copies', action='store_true', help='check a certificate of a --no-copies model')
    sub.set_defaults(handler=command_verify_cert)

    sub = commands.add_parser('export-lp', help='write the LP in LP-file format')
    sub.add_argument('problem')
    sub.add_argument('out', nargs='?', default=None)
    _add_model_flags(sub)
    sub.set_defaults(handler=command_export_lp)

    sub = commands.add_parser('brute-gn', help='exhaustive guessing-strategy search')
    sub.add_argument('problem')
    sub.add_argument('--colors', type=int, required=True)
    sub.add_argument('--guard', type=int, default=DEFAULT_STRATEGY_GUARD)
    sub.set_defaults(handler=command_brute_gn)

    for name, handler in (('cpf', command_cpf), ('cp', command_cp), ('alpha', command_alpha),
                          ('bounds', command_bounds)):
        sub = commands.add_parser(name)
        sub.add_argument('problem')
        sub.set_defaults(handler=handler)

    sub = commands.add_parser('catalog', help='list catalog entries')
    sub.add_argument('action', choices=['list'])
    sub.add_argument('--csv', help='also save the table as CSV')
    sub.set_defaults(handler=command_catalog)
    return parser


def run(argv):
    """Execute one command; returns (exit code, report lines)."""
    args = build_parser().parse_args(argv)
    if getattr(args, 'out', '') is None:
        args.out = os.path.join(OUTPUT_DIR, f"{os.path.basename(args.problem).replace(':', '_')}.lp")
    try:
        return args.handler(args)
    except (PivotBudgetExceeded, StrategyGuardExceeded) as e:
        logging.error(f"Resource guard: {e}")
        return 2, [f"ABORTED: {e}"]
    except CertificateError as e:
        return 1, [f"REJECTED: {e}"]
    except (ValueError, FileNotFoundError) as e:
        logging.error(f"Command {args.command} failed: {e}")
        return 1, [f"ERROR: {e}"]


def main(argv=None):
    code, lines = run(sys.argv[1:] if argv is None else argv)
    for line in lines:
        print(line)
    return code


if __name__ == "__main__":
    sys.exit(main())
