"""Immutable, hash-consed expression DAGs over indexed variables.

Every node is interned: two structurally equal trees are the same Python
object, so ``a is b`` is structural equality and shared subexpressions are
stored (and evaluated) once.
"""
from fractions import Fraction
from numbers import Rational
import threading

CONST = "const"
VAR = "var"
ADD = "add"
SUB = "sub"
MUL = "mul"
DIV = "div"
NEG = "neg"
POW = "pow"

BINARY = (ADD, SUB, MUL, DIV)

_TABLE = {}
_LOCK = threading.Lock()


class Expr:
    """A node of an expression DAG. Build nodes with the module functions."""

    __slots__ = ("op", "args", "value", "_size", "_dcache", "__weakref__")

    def __init__(self, op, args, value):
        self.op = op
        self.args = args
        self.value = value
        self._size = 1 + sum(a._size for a in args)
        self._dcache = {}

    def __setattr__(self, name, val):
        if hasattr(self, "_dcache") and name != "_dcache":
            raise AttributeError("Expr nodes are immutable")
        object.__setattr__(self, name, val)

    def __repr__(self):
        from .printer import to_text
        return f"Expr({to_text(self)!r})"

    def __reduce__(self):
        return (_rebuild, (self.op, self.args, self.value))

    @property
    def tree_size(self):
        """Node count of the expanded tree (shared nodes counted per use)."""
        return self._size

    @property
    def is_const(self):
        return self.op == CONST

    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, k):
        return power(self, k)


def _rebuild(op, args, value):
    return _intern(op, args, value)


def _intern(op, args, value):
    key = (op, args, value)
    node = _TABLE.get(key)
    if node is None:
        with _LOCK:
            node = _TABLE.get(key)
            if node is None:
                node = Expr(op, args, value)
                _TABLE[key] = node
    return node


# raw constructors: exactly the requested node, no rewriting

def const(value):
    if isinstance(value, float):
        value = Fraction(value)
    if not isinstance(value, Rational):
        raise TypeError(f"constants must be rational, got {value!r}")
    value = Fraction(value)
    return _intern(CONST, (), value)


def var(index):
    if index < 0:
        raise ValueError("variable index must be non-negative")
    return _intern(VAR, (), int(index))


def raw(op, *args, exponent=None):
    if op == POW:
        if exponent is None or exponent < 0:
            raise ValueError("integer power exponents must be >= 0")
        return _intern(POW, args, int(exponent))
    return _intern(op, tuple(args), None)


def as_expr(x):
    return x if isinstance(x, Expr) else const(x)


ZERO = const(0)
ONE = const(1)


# folding constructors, used by derivative and every derived construction

def add(a, b):
    if a.op == CONST and b.op == CONST:
        return const(a.value + b.value)
    if a is ZERO:
        return b
    if b is ZERO:
        return a
    if b.op == NEG:
        return sub(a, b.args[0])
    return _intern(ADD, (a, b), None)


def sub(a, b):
    if a.op == CONST and b.op == CONST:
        return const(a.value - b.value)
    if b is ZERO:
        return a
    if a is ZERO:
        return neg(b)
    if a is b:
        return ZERO
    if b.op == NEG:
        return add(a, b.args[0])
    return _intern(SUB, (a, b), None)


def mul(a, b):
    if a.op == CONST and b.op == CONST:
        return const(a.value * b.value)
    if a is ZERO or b is ZERO:
        return ZERO
    if a is ONE:
        return b
    if b is ONE:
        return a
    if a.op == CONST and a.value == -1:
        return neg(b)
    if b.op == CONST and b.value == -1:
        return neg(a)
    return _intern(MUL, (a, b), None)


def div(a, b):
    if b is ZERO:
        raise ZeroDivisionError("symbolic division by the constant 0")
    if a.op == CONST and b.op == CONST:
        return const(a.value / b.value)
    if a is ZERO:
        return ZERO
    if b is ONE:
        return a
    return _intern(DIV, (a, b), None)


def neg(a):
    if a.op == CONST:
        return const(-a.value)
    if a.op == NEG:
        return a.args[0]
    return _intern(NEG, (a,), None)


def power(a, k):
    k = int(k)
    if k < 0:
        raise ValueError("negative powers must be written as quotients")
    if k == 0:
        return ONE
    if k == 1:
        return a
    if a.op == CONST:
        return const(a.value ** k)
    return _intern(POW, (a,), k)


def total(terms):
    out = ZERO
    for t in terms:
        out = add(out, t)
    return out


def dot(coeffs, exprs):
    """Sum of coeff*expr; coefficients may be numbers or expressions."""
    return total(mul(as_expr(c), e) for c, e in zip(coeffs, exprs))


def max_var_index(e):
    """Largest variable index used in ``e`` (-1 for constants)."""
    best = -1
    for node in walk(e):
        if node.op == VAR and node.value > best:
            best = node.value
    return best


def walk(*roots):
    """Unique nodes of the DAG(s) in post-order (children first)."""
    seen = set()
    order = []
    stack = [(r, False) for r in reversed(roots)]
    while stack:
        node, expanded = stack.pop()
        if id(node) in seen:
            continue
        if expanded:
            seen.add(id(node))
            order.append(node)
            continue
        stack.append((node, True))
        for child in reversed(node.args):
            if id(child) not in seen:
                stack.append((child, False))
    return order


def substitute(e, mapping):
    """Replace variable nodes: ``mapping[index] -> Expr`` (folding rebuild)."""
    memo = {}
    for node in walk(e):
        if node.op == VAR:
            memo[id(node)] = mapping.get(node.value, node)
        elif node.op == CONST:
            memo[id(node)] = node
        else:
            kids = [memo[id(c)] for c in node.args]
            memo[id(node)] = _rebuild_folded(node, kids)
    return memo[id(e)]


def _rebuild_folded(node, kids):
    op = node.op
    if op == ADD:
        return add(*kids)
    if op == SUB:
        return sub(*kids)
    if op == MUL:
        return mul(*kids)
    if op == DIV:
        return div(*kids)
    if op == NEG:
        return neg(kids[0])
    return power(kids[0], node.value)
