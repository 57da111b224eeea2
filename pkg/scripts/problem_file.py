import logging
import os
import re
from dataclasses import dataclass
from fractions import Fraction

from scripts.guessing import make_graph, make_guess_problem
from scripts.perm_sym import Permutation
from scripts.secret_sharing import make_access_structure, make_ratio_problem

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')

script_dir = os.path.dirname(os.path.abspath(__file__))
CATALOG_DIR = os.path.join(script_dir, '..', 'data', 'catalog')
OUTPUT_DIR = os.path.join(script_dir, '..', 'output')

KINDS = ('secret-sharing', 'guessing')
SECTIONS = ('name', 'kind', 'vars', 'minsets', 'edges', 'symmetry', 'copies', 'scopes', 'reference')
SINGLE_LINE = ('name', 'kind')
HEADER_PATTERN = re.compile(r'^(?P<key>[a-z]+):\s*(?P<value>.*)$')
EDGE_PATTERN = re.compile(r'^(?P<u>\d+)\s*(?P<arrow>--|->|<-)\s*(?P<v>\d+)$')
CATALOG_ALIASES = {'A*': 'Astar', 'F*': 'Fstar', 'Q*': 'Qstar', 'F^': 'Fhat', 'R-': 'Rminus'}


class ProblemFileError(ValueError):
    """Raised for unreadable or inconsistent problem files."""


@dataclass(frozen=True)
class ProblemFile:
    kind: str
    variables: tuple
    minsets: tuple = ()
    undirected: tuple = ()
    directed: tuple = ()
    symmetry: tuple = ()
    copies: tuple = ()
    scopes: tuple = ()
    name: str = ''
    references: tuple = ()


def _parse_labels(item, where):
    item = item.strip()
    tokens = item.split() if ' ' in item else list(item)
    if not tokens or not all(token.isdigit() for token in tokens):
        raise ProblemFileError(f"{where}: cannot read labels from {item!r}")
    return tuple(sorted(int(token) for token in tokens))


def _split_sections(text, source):
    values = {key: [] for key in SECTIONS}
    seen = set()
    current = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].rstrip()
        if not line.strip():
            continue
        header = HEADER_PATTERN.match(line)
        if header and not raw[:1].isspace():
            current = header.group('key')
            if current not in SECTIONS:
                raise ProblemFileError(f"{source}:{number}: unknown section {current!r}")
            if current in seen:
                raise ProblemFileError(f"{source}:{number}: section {current!r} appears twice")
            seen.add(current)
            if header.group('value'):
                values[current].append((number, header.group('value').strip()))
            continue
        if current is None:
            raise ProblemFileError(f"{source}:{number}: content before any section header")
        if current in SINGLE_LINE:
            raise ProblemFileError(f"{source}:{number}: section {current!r} takes a single value")
        values[current].append((number, line.strip()))
    return values


def parse_problem_text(text, source='<text>'):
    """Read the line-oriented problem format into a ProblemFile."""
    values = _split_sections(text, source)
    if not values['kind']:
        raise ProblemFileError(f"{source}: missing kind")
    kind = values['kind'][0][1]
    if kind not in KINDS:
        raise ProblemFileError(f"{source}: unknown kind {kind!r}")
    variables = tuple(name for _, line in values['vars'] for name in re.split(r'[\s,]+', line) if name)
    if not variables:
        raise ProblemFileError(f"{source}: missing vars")

    minsets = []
    for number, line in values['minsets']:
        minsets.extend(_parse_labels(item, f"{source}:{number}") for item in line.split(',') if item.strip())

    undirected, directed = [], []
    for number, line in values['edges']:
        for item in line.split(','):
            match = EDGE_PATTERN.match(item.strip())
            if not match:
                raise ProblemFileError(f"{source}:{number}: cannot read edge {item.strip()!r}")
            u, v = int(match.group('u')), int(match.group('v'))
            if match.group('arrow') == '--':
                undirected.append(tuple(sorted((u, v))))
            elif match.group('arrow') == '->':
                directed.append((u, v))
            else:
                directed.append((v, u))

    blocks = []
    for _, line in values['copies']:
        if line == 'block':
            blocks.append([])
        else:
            if not blocks:
                blocks.append([])
            blocks[-1].append(line)

    references = []
    for number, line in values['reference']:
        parts = line.split()
        if len(parts) != 2:
            raise ProblemFileError(f"{source}:{number}: reference lines are '<key> <rational>'")
        try:
            references.append((parts[0], Fraction(parts[1])))
        except (ValueError, ZeroDivisionError):
            raise ProblemFileError(f"{source}:{number}: malformed rational {parts[1]!r}") from None

    return ProblemFile(
        kind=kind,
        variables=variables,
        minsets=tuple(sorted(set(minsets), key=lambda s: (len(s), s))),
        undirected=tuple(sorted(set(undirected))),
        directed=tuple(sorted(set(directed))),
        symmetry=tuple(line for _, line in values['symmetry']),
        copies=tuple(tuple(block) for block in blocks),
        scopes=tuple(tuple(re.split(r'[\s,]+', line)) for _, line in values['scopes']),
        name=values['name'][0][1] if values['name'] else '',
        references=tuple(references),
    )


def _format_labels(labels):
    if all(label < 10 for label in labels):
        return ''.join(str(label) for label in labels)
    return ' '.join(str(label) for label in labels)


def format_problem(problem_file):
    """Write a ProblemFile in the format parse_problem_text reads."""
    lines = []
    if problem_file.name:
        lines.append(f"name: {problem_file.name}")
    lines.append(f"kind: {problem_file.kind}")
    lines.append(f"vars: {' '.join(problem_file.variables)}")
    if problem_file.minsets:
        lines.append('minsets:')
        lines.extend(f"  {_format_labels(labels)}" for labels in problem_file.minsets)
    if problem_file.undirected or problem_file.directed:
        lines.append('edges:')
        lines.extend(f"  {u} -- {v}" for u, v in problem_file.undirected)
        lines.extend(f"  {u} -> {v}" for u, v in problem_file.directed)
    if problem_file.symmetry:
        lines.append('symmetry:')
        lines.extend(f"  {generator}" for generator in problem_file.symmetry)
    if problem_file.copies:
        lines.append('copies:')
        for block in problem_file.copies:
            lines.append('  block')
            lines.extend(f"    {recipe}" for recipe in block)
    if problem_file.scopes:
        lines.append('scopes:')
        lines.extend(f"  {' '.join(scope)}" for scope in problem_file.scopes)
    if problem_file.references:
        lines.append('reference:')
        lines.extend(f"  {key} {value}" for key, value in problem_file.references)
    return '\n'.join(lines) + '\n'


def to_problem(problem_file):
    """Build the RatioProblem or GuessProblem a ProblemFile describes."""
    variables = problem_file.variables
    scopes = [list(scope) for scope in problem_file.scopes] or None
    recipes = [list(block) for block in problem_file.copies]
    references = dict(problem_file.references)
    try:
        if problem_file.kind == 'guessing':
            n = len(variables)
            generators = [Permutation.parse(text, n, base=1) for text in problem_file.symmetry]
            graph = make_graph(n, problem_file.undirected, problem_file.directed)
            return make_guess_problem(graph, generators, recipes, scopes, problem_file.name, references,
                                      names=variables)
        n = len(variables) - 1
        generators = [Permutation.parse(text, n + 1, base=0) for text in problem_file.symmetry]
        structure = make_access_structure(n, problem_file.minsets)
        return make_ratio_problem(structure, generators, recipes, scopes, problem_file.name, references,
                                  names=variables)
    except ValueError as e:
        logging.error(f"Problem {problem_file.name or '(unnamed)'} is invalid: {e}")
        raise


def load_problem_file(path):
    if not os.path.exists(path):
        logging.error(f"Problem file not found: {path}")
        raise FileNotFoundError(f"Problem file not found: {path}")
    with open(path, 'r') as f:
        return parse_problem_text(f.read(), source=os.path.basename(path))


def load_problem(path):
    problem = to_problem(load_problem_file(path))
    logging.info(f"Loaded problem {problem.name or path} from {path}")
    return problem


def save_problem(problem_file, path):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'w') as f:
        f.write(format_problem(problem_file))
    logging.info(f"Problem {problem_file.name or '(unnamed)'} saved to {path}")


def catalog_names():
    return sorted(entry[:-len('.prob')] for entry in os.listdir(CATALOG_DIR) if entry.endswith('.prob'))


def catalog_path(name):
    name = CATALOG_ALIASES.get(name, name)
    path = os.path.join(CATALOG_DIR, f"{name}.prob")
    if not os.path.exists(path):
        raise ProblemFileError(f"Unknown catalog entry {name!r}; available: {', '.join(catalog_names())}")
    return path


def resolve_problem_path(reference):
    """A 'catalog:NAME' reference or a plain path."""
    if reference.startswith('catalog:'):
        return catalog_path(reference[len('catalog:'):])
    return reference
