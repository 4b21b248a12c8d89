"""Flatten expression DAGs into register programs and evaluate them."""
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .. import _kernels as K
from ..errors import EvaluationSingularError
from .nodes import ADD, CONST, DIV, MUL, NEG, POW, SUB, VAR, walk
from .printer import to_text

_OPCODE = {CONST: K.OP_CONST, VAR: K.OP_VAR, ADD: K.OP_ADD, SUB: K.OP_SUB,
           MUL: K.OP_MUL, DIV: K.OP_DIV, NEG: K.OP_NEG, POW: K.OP_POW}


class Program:
    """A straight-line program computing several expressions at once."""

    def __init__(self, exprs):
        self.exprs = tuple(exprs)
        order = walk(*self.exprs)
        slot = {id(node): i for i, node in enumerate(order)}
        code = np.zeros((len(order), 4), dtype=np.int64)
        consts = np.zeros(len(order))
        consts_lo = np.zeros(len(order))
        for i, node in enumerate(order):
            code[i, 0] = _OPCODE[node.op]
            if node.op == CONST:
                consts[i] = float(node.value)
                consts_lo[i] = float(node.value - Fraction(consts[i]))
            elif node.op == VAR:
                code[i, 1] = node.value
            else:
                code[i, 1] = slot[id(node.args[0])]
                if len(node.args) > 1:
                    code[i, 2] = slot[id(node.args[1])]
                if node.op == POW:
                    code[i, 3] = node.value
        self.nodes = order
        self.code = code
        self.consts = consts
        self.consts_lo = consts_lo
        self.outputs = np.array([slot[id(e)] for e in self.exprs], dtype=np.int64)
        self.nvars = 1 + max((n.value for n in order if n.op == VAR), default=-1)

    def __len__(self):
        return len(self.exprs)

    def __call__(self, points, strict=True, compensated=True):
        """Values at each point, shape ``(m, len(exprs))``.

        ``points`` is ``(m, n)`` or a single ``(n,)`` vector.  With ``strict``
        a vanishing denominator raises; otherwise the entries become NaN.
        ``compensated`` evaluates in double-double arithmetic and rounds the
        result, which keeps large derived expressions accurate to a few ulp.
        """
        pts = np.asarray(points, dtype=np.float64)
        single = pts.ndim == 1
        if single:
            pts = pts[None, :]
        if pts.shape[1] < self.nvars:
            raise ValueError(f"point has {pts.shape[1]} coordinates, expressions use {self.nvars}")
        if compensated:
            values, bad = K.run_program_dd(self.code, self.consts, self.consts_lo, pts, self.outputs)
        else:
            values, bad = K.run_program(self.code, self.consts, pts, self.outputs)
        if strict and bad.any():
            k = int(np.flatnonzero(bad)[0])
            node = self.nodes[bad[k] - 1]
            culprit = node.args[1] if node.op == DIV else node
            raise EvaluationSingularError(to_text(culprit), pts[k])
        return values[0] if single else values


@lru_cache(maxsize=512)
def compile_program(exprs):
    """Cached :class:`Program` for a tuple of expressions."""
    return Program(exprs)


def evaluate(e, point):
    """Value of ``e`` at ``point`` as a float."""
    return float(compile_program((e,))(np.asarray(point, dtype=float))[0])


def evaluate_many(exprs, points, strict=True):
    return compile_program(tuple(exprs))(points, strict=strict)
