import logging
import re
from dataclasses import dataclass, field

from scripts.core_entropy import (Constraint, CopyVariable, VariableUniverseError, bits_of, entropy_term,
                                  mutual_info_expr, submasks)

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')

RECIPE_PATTERN = re.compile(
    r'^\s*(?P<new>.+?)\s+(?:be|as)\s+an?\s+(?:(?P<w>\S.*?)-)?copy\s+of\s+(?P<z>.+?)'
    r'(?:\s+over\s+(?P<v>.+?))?\s*[.;]?\s*$'
)
PRIMES = {'′': "'", '″': "''", '‴': "'''", '⁗': "''''"}


class CopyRecipeError(ValueError):
    """Raised when a copy recipe does not fit the current universe."""


@dataclass(frozen=True)
class CopyStep:
    """Canonical copy parameters: Z is resampled as Z′ keeping its joint law with X."""
    z_vars: tuple
    x_vars: tuple
    new_names: tuple
    block_id: int = 0
    step: int = 0
    recipe: str = ''


@dataclass
class CopyBlock:
    steps: list = field(default_factory=list)
    scope: tuple = None


@dataclass(frozen=True)
class CopyFootprint:
    """Bitmask view of one applied step, used to emit and to recognise its rows."""
    step: int
    block_id: int
    x_mask: int
    z_mask: int
    copy_mask: int
    pairs: tuple
    universe_mask: int

    def substitute(self, mask):
        """Replace each original of Z in mask by its copy."""
        for original, copy in self.pairs:
            if mask >> original & 1:
                mask = (mask & ~(1 << original)) | (1 << copy)
        return mask

    def independence_expr(self):
        return mutual_info_expr(self.copy_mask, self.universe_mask & ~self.x_mask & ~self.copy_mask, self.x_mask)


def normalize_primes(text):
    for symbol, ascii_primes in PRIMES.items():
        text = text.replace(symbol, ascii_primes)
    return text


def split_names(text):
    """Read "(A,B)", "A,B", "A B" or a single name into a tuple of names."""
    text = text.strip()
    if text.startswith('(') and text.endswith(')'):
        text = text[1:-1]
    names = tuple(name for name in re.split(r'[\s,]+', text) if name)
    if not names:
        raise CopyRecipeError(f"Empty variable list in {text!r}")
    return names


def _require_in(names, allowed, what, recipe):
    missing = [name for name in names if name not in allowed]
    if missing:
        raise CopyRecipeError(f"{what} {missing} not available in this copy block: {recipe!r}")


def parse_copy_recipe(text, universe, block_id=0, step=0):
    """Parse "<new> be a [<W>-]copy of <Z> [over <V>]" into a CopyStep.

    X is the "over" list when present, otherwise everything in the block's
    current universe outside W and Z.
    """
    recipe = normalize_primes(text).strip()
    match = RECIPE_PATTERN.match(recipe)
    if not match:
        raise CopyRecipeError(f"Unrecognised copy recipe: {recipe!r}")
    new_names = split_names(match.group('new'))
    z_vars = split_names(match.group('z'))
    w_vars = split_names(match.group('w')) if match.group('w') else ()

    block_vars = universe.names_of(universe.block_mask(block_id))
    _require_in(z_vars, block_vars, "Copied variables", recipe)
    _require_in(w_vars, block_vars, "Variables", recipe)
    if match.group('v'):
        x_vars = split_names(match.group('v'))
        _require_in(x_vars, block_vars, "Shared variables", recipe)
        if set(x_vars) & set(z_vars):
            raise CopyRecipeError(f"Shared and copied variables overlap in {recipe!r}")
    else:
        excluded = set(w_vars) | set(z_vars)
        x_vars = tuple(name for name in block_vars if name not in excluded)
    if len(new_names) != len(z_vars):
        raise CopyRecipeError(f"{len(new_names)} new names for {len(z_vars)} copied variables in {recipe!r}")
    return CopyStep(z_vars, x_vars, new_names, block_id, step, recipe)


def copy_footprint(universe, step):
    """Masks of a step against a universe that already contains its copies."""
    x_mask = universe.mask_of(step.x_vars)
    z_mask = universe.mask_of(step.z_vars)
    copy_mask = universe.mask_of(step.new_names)
    pairs = tuple((universe.index_of(z), universe.index_of(new)) for z, new in zip(step.z_vars, step.new_names))
    return CopyFootprint(step.step, step.block_id, x_mask, z_mask, copy_mask, pairs,
                         universe.block_mask(step.block_id))


def apply_copy(universe, step):
    """Extend the universe by Z′ and emit the copy-match and independence equalities."""
    if set(step.x_vars) & set(step.z_vars):
        raise CopyRecipeError(f"X and Z overlap in step {step.step}")
    if len(step.new_names) != len(step.z_vars):
        raise CopyRecipeError(f"Step {step.step} needs one new name per copied variable")
    clashes = [name for name in step.new_names if name in universe.names]
    if clashes or len(set(step.new_names)) != len(step.new_names):
        raise CopyRecipeError(f"Copy names {clashes or step.new_names} collide with existing variables")
    block_vars = universe.names_of(universe.block_mask(step.block_id))
    _require_in(step.z_vars + step.x_vars, block_vars, "Variables", step.recipe)

    copies = []
    for z, new in zip(step.z_vars, step.new_names):
        origin = z
        existing = universe.copy_variable(universe.index_of(z))
        if existing is not None:
            origin = existing.origin
        copies.append(CopyVariable(new, step.step, origin, step.block_id))
    try:
        extended = universe.extend(copies)
    except VariableUniverseError as e:
        logging.error(f"Cannot apply copy step {step.step}: {e}")
        raise

    footprint = copy_footprint(extended, step)
    rows = []
    for subset in submasks(footprint.x_mask | footprint.z_mask):
        if subset & footprint.z_mask:
            expr = entropy_term(footprint.substitute(subset)) - entropy_term(subset)
            rows.append(Constraint(expr, '=', 0, 'copy-match', step=step.step))
    rows.append(Constraint(footprint.independence_expr(), '=', 0, 'copy-indep', step=step.step))
    logging.info(f"Copy step {step.step} (block {step.block_id}): {len(rows) - 1} matching equalities "
                 f"+ 1 independence equality")
    return extended, rows


def block_scopes(blocks, universe):
    """Per block, the base variables plus that block's copies (or the block's explicit scope)."""
    if not blocks:
        return [universe.base_mask]
    scopes = []
    for block_id, block in enumerate(blocks):
        if block.scope:
            scopes.append(universe.mask_of(block.scope))
        else:
            scopes.append(universe.block_mask(block_id))
    return scopes


@dataclass
class CopyExpansion:
    universe: object
    blocks: list
    constraints: list
    footprints: list
    scopes: list


def expand_recipes(universe, recipe_blocks, scopes=None):
    """Parse and apply recipe blocks in order; steps are numbered globally from 0."""
    blocks = []
    rows = []
    footprints = []
    step = 0
    for block_id, recipes in enumerate(recipe_blocks):
        block = CopyBlock()
        for text in recipes:
            parsed = parse_copy_recipe(text, universe, block_id, step)
            universe, emitted = apply_copy(universe, parsed)
            rows.extend(emitted)
            footprints.append(copy_footprint(universe, parsed))
            block.steps.append(parsed)
            step += 1
        blocks.append(block)
    if scopes:
        if len(scopes) != len(blocks or [None]):
            raise CopyRecipeError(f"{len(scopes)} scopes declared for {len(blocks)} copy blocks")
        for block, scope in zip(blocks, scopes):
            block.scope = tuple(scope)
        if not blocks:
            return CopyExpansion(universe, blocks, rows, footprints, [universe.mask_of(scopes[0])])
    return CopyExpansion(universe, blocks, rows, footprints, block_scopes(blocks, universe))


def scope_sizes(scopes):
    return [len(bits_of(scope)) for scope in scopes]
