"""Text rendering of expressions and whole system files.

Output re-parses to the identical DAG: parentheses are emitted exactly where
the grammar's precedence/associativity would otherwise regroup operands,
and non-integer constants are always parenthesised.
"""
from collections import Counter

from .nodes import ADD, CONST, DIV, MUL, NEG, POW, SUB, VAR, walk

_LEVEL = {ADD: 1, SUB: 1, MUL: 2, DIV: 2, NEG: 3, POW: 4, CONST: 5, VAR: 5}


def _level(node, bound):
    if bound and id(node) in bound:
        return 5
    if node.op == CONST and not _plain_const(node.value):
        return 5
    return _LEVEL[node.op]


def _plain_const(v):
    return v.denominator == 1 and v >= 0


def format_const(v):
    if _plain_const(v):
        return str(v.numerator)
    if v.denominator == 1:
        return f"({v.numerator})"
    return f"({v.numerator}/{v.denominator})"


def to_text(e, names=None, bound=None):
    """Render ``e``; ``bound`` maps ``id(node)`` to a let-name used instead."""
    if names is None:
        names = {}
    memo = {}

    def name_of(i):
        if isinstance(names, dict):
            return names.get(i, f"x{i + 1}")
        return names[i] if i < len(names) else f"x{i + 1}"

    def wrap(child, min_level):
        s = memo[id(child)]
        return s if _level(child, bound) >= min_level else f"({s})"

    for node in walk(e):
        if bound and id(node) in bound and node is not e:
            memo[id(node)] = bound[id(node)]
            continue
        op = node.op
        if op == CONST:
            s = format_const(node.value)
        elif op == VAR:
            s = name_of(node.value)
        elif op in (ADD, SUB):
            sym = "+" if op == ADD else "-"
            s = f"{wrap(node.args[0], 1)} {sym} {wrap(node.args[1], 2)}"
        elif op in (MUL, DIV):
            sym = "*" if op == MUL else "/"
            s = f"{wrap(node.args[0], 2)}{sym}{wrap(node.args[1], 3)}"
        elif op == NEG:
            s = f"-{wrap(node.args[0], 4)}"
        else:
            s = f"{wrap(node.args[0], 5)}^{node.value}"
        memo[id(node)] = s
    return memo[id(e)]


def _shared_nodes(roots, min_size):
    """Non-leaf nodes referenced more than once, large enough to bind."""
    refs = Counter()
    for node in walk(*roots):
        for child in node.args:
            refs[id(child)] += 1
    for r in roots:
        refs[id(r)] += 1
    return [n for n in walk(*roots)
            if n.args and refs[id(n)] > 1 and n.tree_size >= min_size]


def format_source(spec, min_shared_size=8):
    """Serialize a SourceSpec back to the DSL, factoring shared subtrees into lets."""
    names = list(spec.var_names)
    roots = list(spec.fluxes)
    if spec.densities is not None:
        roots += list(spec.densities)
    for law in spec.laws:
        roots += [law.density, law.flux]
    if spec.hamiltonian is not None:
        roots.append(spec.hamiltonian.h)

    bound = {}
    lines = [f"system {spec.name}"]
    if spec.origin:
        lines.append(f"origin {spec.origin};")
    lines.append("vars " + ", ".join(names) + ";")
    root_ids = {id(r) for r in roots}
    for k, node in enumerate(_shared_nodes(roots, min_shared_size), start=1):
        if id(node) in root_ids and node.tree_size < 4 * min_shared_size:
            continue
        let_name = f"_t{k}"
        lines.append(f"let {let_name} = {to_text(node, names, bound)};")
        bound[id(node)] = let_name

    def show(e):
        if id(e) in bound:
            return bound[id(e)]
        return to_text(e, names, bound)

    if spec.densities is not None:
        for v, e in zip(names, spec.densities):
            lines.append(f"density {v}: {show(e)};")
    for v, e in zip(names, spec.fluxes):
        lines.append(f"flux {v}: {show(e)};")
    for law in spec.laws:
        lines.append(f"law {law.name}: {show(law.density)} | {show(law.flux)};")
    if spec.hamiltonian is not None:
        rows = "; ".join(", ".join(_num(x) for x in row) for row in spec.hamiltonian.eta)
        lines.append(f"hamiltonian: {show(spec.hamiltonian.h)} eta [{rows}];")
    if spec.domain is not None:
        lo, hi = spec.domain
        lines.append(f"domain [{_num(lo)}, {_num(hi)}];")
    return "\n".join(lines) + "\n"


def _num(x):
    from fractions import Fraction
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    text = repr(float(x))
    if Fraction(text) == x:
        return text
    return f"{x.numerator}/{x.denominator}"
