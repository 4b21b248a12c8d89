"""Expression DAGs, the ``.claw`` parser/printer, derivatives and evaluation."""
from .calculus import differentiate, gradient, jacobian
from .nodes import Expr, ONE, ZERO, add, const, div, dot, mul, neg, power, sub, total, var, walk
from .parser import HamiltonianDecl, LawDecl, SourceSpec, parse_expr, parse_source
from .printer import format_source, to_text
from .program import Program, compile_program, evaluate, evaluate_many

__all__ = [
    "Expr", "ONE", "ZERO", "add", "const", "div", "dot", "mul", "neg", "power", "sub", "total",
    "var", "walk", "differentiate", "gradient", "jacobian", "HamiltonianDecl", "LawDecl",
    "SourceSpec", "parse_expr", "parse_source", "format_source", "to_text", "Program",
    "compile_program", "evaluate", "evaluate_many",
]
