"""Exact symbolic partial derivatives, gradients and Jacobians."""
from .nodes import (ADD, CONST, DIV, MUL, NEG, ONE, POW, SUB, VAR, ZERO, add, const, div,
                    mul, neg, power, sub, walk)


def differentiate(e, k):
    """Partial derivative of ``e`` with respect to variable ``k``.

    Results are memoised per node, so differentiating many expressions that
    share subtrees costs one pass over the shared DAG.
    """
    if k < 0:
        raise ValueError(f"invalid variable index {k}")
    if k in e._dcache:
        return e._dcache[k]
    for node in walk(e):
        if k in node._dcache:
            continue
        node._dcache[k] = _local_derivative(node, k)
    return e._dcache[k]


def _local_derivative(node, k):
    op = node.op
    if op == CONST:
        return ZERO
    if op == VAR:
        return ONE if node.value == k else ZERO
    args = node.args
    if op == NEG:
        return neg(args[0]._dcache[k])
    if op == POW:
        base = args[0]
        db = base._dcache[k]
        n = node.value
        if db is ZERO or n == 0:
            return ZERO
        return mul(mul(const(n), power(base, n - 1)), db)
    a, b = args
    da, db = a._dcache[k], b._dcache[k]
    if op == ADD:
        return add(da, db)
    if op == SUB:
        return sub(da, db)
    if op == MUL:
        return add(mul(da, b), mul(a, db))
    if op == DIV:
        if db is ZERO:
            return div(da, b)
        return div(sub(mul(da, b), mul(a, db)), power(b, 2))
    raise ValueError(f"unknown op {op}")


def gradient(e, nvars):
    return tuple(differentiate(e, k) for k in range(nvars))


def jacobian(exprs, nvars):
    """Row i, column j: d exprs[i] / d u_j."""
    return tuple(gradient(e, nvars) for e in exprs)
