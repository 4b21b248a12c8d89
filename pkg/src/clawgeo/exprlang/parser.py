"""Recursive-descent parser for ``.claw`` system files.

Grammar (whitespace-insensitive, ``#`` starts a line comment)::

    file      := "system" IDENT "vars" IDENT ("," IDENT)* ";" stmt*
    stmt      := fluxdecl | lawdecl | hamdecl | domdecl
               | letdecl | densdecl | origindecl
    fluxdecl  := "flux" IDENT ":" expr ";"
    lawdecl   := "law" IDENT ":" expr "|" expr ";"       # density | flux
    hamdecl   := "hamiltonian" ":" expr "eta" "[" rows "]" ";"
    domdecl   := "domain" "[" NUM "," NUM "]" ";"
    letdecl   := "let" IDENT "=" expr ";"                 # shared subexpression
    densdecl  := "density" IDENT ":" expr ";"             # parametric systems
    origindecl:= "origin" IDENT ";"
    expr      := term (("+"|"-") term)*
    term      := factor (("*"|"/") factor)*
    factor    := ("-")? atom ("^" INT)?
    atom      := REAL | IDENT | "(" expr ")"

``^`` binds tighter than unary minus.  Subexpressions built only from
literals are folded to a single rational constant.
"""
from dataclasses import dataclass
from fractions import Fraction
import re

from ..errors import DuplicateNameError, InvalidEtaError, ParseError, UnknownVariableError
from . import nodes
from .nodes import CONST, const, var
from .rational import rational_inverse

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[;,:|\[\]()+\-*/^=])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


@dataclass(frozen=True)
class LawDecl:
    name: str
    density: nodes.Expr
    flux: nodes.Expr


@dataclass(frozen=True)
class HamiltonianDecl:
    h: nodes.Expr
    eta: tuple  # rows of Fractions


@dataclass(frozen=True)
class SourceSpec:
    name: str
    var_names: tuple
    fluxes: tuple
    laws: tuple = ()
    hamiltonian: HamiltonianDecl = None
    domain: tuple = None
    densities: tuple = None
    origin: str = None

    @property
    def n(self):
        return len(self.var_names)


def tokenize(text):
    tokens = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        chunk = m.group()
        if kind == "nl":
            line, col = line + 1, 1
        else:
            if kind not in ("ws", "comment"):
                tokens.append(Token(kind, chunk, line, col))
            col += len(chunk)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = tokenize(text)
        self.i = 0
        self.names = {}
        self.lets = {}

    # token helpers

    @property
    def tok(self):
        return self.tokens[self.i]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        return ParseError(msg, tok.line, tok.col)

    def accept(self, text):
        if self.tok.text == text and self.tok.kind in ("punct", "ident"):
            self.i += 1
            return True
        return False

    def expect(self, text):
        if not self.accept(text):
            shown = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {shown!r}")

    def ident(self):
        tok = self.tok
        if tok.kind != "ident":
            raise self.error(f"expected identifier, found {tok.text or 'end of input'!r}")
        self.i += 1
        return tok

    # expressions

    def expr(self):
        left = self.term()
        while self.tok.text in ("+", "-") and self.tok.kind == "punct":
            op = nodes.ADD if self.tok.text == "+" else nodes.SUB
            self.i += 1
            left = self._binary(op, left, self.term())
        return left

    def term(self):
        left = self.factor()
        while self.tok.text in ("*", "/") and self.tok.kind == "punct":
            op = nodes.MUL if self.tok.text == "*" else nodes.DIV
            tok = self.tok
            self.i += 1
            right = self.factor()
            if op == nodes.DIV and right is nodes.ZERO:
                raise self.error("division by the literal 0", tok)
            left = self._binary(op, left, right)
        return left

    def factor(self):
        negate = self.accept("-")
        base = self.atom()
        if self.accept("^"):
            tok = self.tok
            if tok.kind != "num" or not tok.text.isdigit():
                raise self.error("exponent must be a non-negative integer literal")
            self.i += 1
            k = int(tok.text)
            base = const(base.value ** k) if base.op == CONST else nodes.raw(nodes.POW, base, exponent=k)
        if negate:
            base = const(-base.value) if base.op == CONST else nodes.raw(nodes.NEG, base)
        return base

    def atom(self):
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return const(Fraction(tok.text))
        if tok.kind == "ident":
            self.i += 1
            if tok.text in self.lets:
                return self.lets[tok.text]
            if tok.text in self.names:
                return var(self.names[tok.text])
            raise UnknownVariableError(tok.text, tok.line, tok.col)
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        raise self.error(f"expected a number, variable or '(', found {tok.text or 'end of input'!r}")

    @staticmethod
    def _binary(op, a, b):
        if a.op == CONST and b.op == CONST:
            x, y = a.value, b.value
            return const({nodes.ADD: x + y, nodes.SUB: x - y,
                          nodes.MUL: x * y}.get(op) if op != nodes.DIV else x / y)
        return nodes.raw(op, a, b)

    def number(self):
        negate = self.accept("-")
        tok = self.tok
        if tok.kind != "num":
            raise self.error("expected a number")
        self.i += 1
        value = Fraction(tok.text)
        if self.accept("/"):
            den = self.tok
            if den.kind != "num":
                raise self.error("expected a number")
            self.i += 1
            if Fraction(den.text) == 0:
                raise self.error("division by the literal 0", den)
            value /= Fraction(den.text)
        return -value if negate else value

    # statements

    def parse(self):
        self.expect("system")
        name = self.ident().text
        origin = None
        if self.accept("origin"):
            origin = self.ident().text
            self.expect(";")
        self.expect("vars")
        var_names = []
        while True:
            tok = self.ident()
            if tok.text in self.names:
                raise DuplicateNameError(f"duplicate variable {tok.text!r}", tok.line, tok.col)
            self.names[tok.text] = len(var_names)
            var_names.append(tok.text)
            if not self.accept(","):
                break
        self.expect(";")

        fluxes, densities, laws = {}, {}, {}
        hamiltonian = domain = None
        while self.tok.kind != "eof":
            kw = self.ident()
            if kw.text == "flux":
                self._slot_decl(fluxes, "flux")
            elif kw.text == "density":
                self._slot_decl(densities, "density")
            elif kw.text == "law":
                tok = self.ident()
                if tok.text in laws:
                    raise DuplicateNameError(f"duplicate law name {tok.text!r}", tok.line, tok.col)
                self.expect(":")
                d = self.expr()
                self.expect("|")
                f = self.expr()
                self.expect(";")
                laws[tok.text] = LawDecl(tok.text, d, f)
            elif kw.text == "let":
                tok = self.ident()
                if tok.text in self.lets or tok.text in self.names:
                    raise DuplicateNameError(f"duplicate name {tok.text!r}", tok.line, tok.col)
                self.expect("=")
                self.lets[tok.text] = self.expr()
                self.expect(";")
            elif kw.text == "hamiltonian":
                if hamiltonian is not None:
                    raise self.error("second hamiltonian block", kw)
                self.expect(":")
                h = self.expr()
                self.expect("eta")
                eta = self._matrix(kw, len(var_names))
                self.expect(";")
                hamiltonian = HamiltonianDecl(h, eta)
            elif kw.text == "domain":
                self.expect("[")
                lo = self.number()
                self.expect(",")
                hi = self.number()
                self.expect("]")
                self.expect(";")
                if not lo < hi:
                    raise self.error("domain needs lo < hi", kw)
                domain = (lo, hi)
            else:
                raise self.error(f"unknown declaration {kw.text!r}", kw)

        missing = [v for v in var_names if v not in fluxes]
        if missing:
            raise self.error(f"missing flux for {', '.join(missing)}")
        if densities and len(densities) != len(var_names):
            absent = [v for v in var_names if v not in densities]
            raise self.error(f"missing density for {', '.join(absent)}")
        return SourceSpec(
            name=name,
            var_names=tuple(var_names),
            fluxes=tuple(fluxes[v] for v in var_names),
            laws=tuple(laws.values()),
            hamiltonian=hamiltonian,
            domain=domain,
            densities=tuple(densities[v] for v in var_names) if densities else None,
            origin=origin,
        )

    def _slot_decl(self, table, what):
        tok = self.ident()
        if tok.text not in self.names:
            raise UnknownVariableError(tok.text, tok.line, tok.col)
        if tok.text in table:
            raise DuplicateNameError(f"second {what} for {tok.text!r}", tok.line, tok.col)
        self.expect(":")
        table[tok.text] = self.expr()
        self.expect(";")

    def _matrix(self, kw, n):
        self.expect("[")
        rows = [[self.number()]]
        while True:
            if self.accept(","):
                rows[-1].append(self.number())
            elif self.accept(";"):
                rows.append([self.number()])
            else:
                break
        self.expect("]")
        if len(rows) != n or any(len(r) != n for r in rows):
            raise InvalidEtaError(f"eta must be {n}x{n}", kw.line, kw.col)
        if any(rows[i][j] != rows[j][i] for i in range(n) for j in range(n)):
            raise InvalidEtaError("eta is not symmetric", kw.line, kw.col)
        if rational_inverse(rows) is None:
            raise InvalidEtaError("eta is singular", kw.line, kw.col)
        return tuple(tuple(r) for r in rows)


def parse_source(text):
    """Parse a ``.claw`` file into a :class:`SourceSpec`."""
    return _Parser(text).parse()


def parse_expr(text, var_names):
    """Parse a single expression over the given variable names."""
    p = _Parser(text)
    p.names = {v: i for i, v in enumerate(var_names)}
    e = p.expr()
    if p.tok.kind != "eof":
        raise p.error(f"trailing input {p.tok.text!r}")
    return e
