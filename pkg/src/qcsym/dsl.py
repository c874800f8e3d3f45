"""Expression DSL: recursive-descent parser and printer.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := ('-' | '+')* unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := base ('^' unary)?
    base   := number | ident | ident '(' args ')' | '(' expr ')'

``T_yz`` is the mixed derivative of a declared function ``T``; ``u_yz`` is a
jet symbol.  Declarations look like ``declare K(y,z,u);``.

A term is built as one n-ary product (leading sign included), so numeric
coefficients are not distributed over sums the way a binary product would.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Sequence

import sympy as sp
from sympy.core.function import AppliedUndef

from .expr import (
    COORDINATES,
    DEFAULT_DECLARATIONS,
    Expr,
    coordinate,
    jet_index,
    jet_symbol,
)

ALIASES = {"ω": "w", "omega": "w", "φ": "phi", "σ": "sigma", "λ": "lam"}
DERIV_LETTERS = set("yzuwtx")
ELEMENTARY = {"exp": sp.exp, "log": sp.log}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][-+]?\d+)?)
  | (?P<ident>[^\W\d]\w*)
  | (?P<op>\*\*|[-+*/^(),;=]|−|·)
    """,
    re.VERBOSE | re.UNICODE,
)


class DSLSyntaxError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class ArityError(DSLSyntaxError):
    pass


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    offset: int  # byte offset into the utf-8 source


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise DSLSyntaxError(f"unexpected character {text[pos]!r}", _byte(text, pos))
        kind = m.lastgroup
        if kind != "ws":
            tok = m.group()
            if kind == "op":
                tok = {"**": "^", "−": "-", "·": "*"}.get(tok, tok)
            tokens.append(Token(kind, tok, _byte(text, pos)))
        pos = m.end()
    tokens.append(Token("end", "", _byte(text, pos)))
    return tokens


def _byte(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


class Parser:
    def __init__(self, text: str, decls: Mapping[str, Sequence[str]] | None = None):
        self.tokens = tokenize(text)
        self.i = 0
        self.decls = {k: tuple(v) for k, v in (decls or DEFAULT_DECLARATIONS).items()}

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if self.tok.text != text:
            found = self.tok.text or "end of input"
            raise DSLSyntaxError(f"expected {text!r}, found {found!r}", self.tok.offset)
        return self.advance()

    def parse(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "end":
            raise DSLSyntaxError(f"unexpected {self.tok.text!r}", self.tok.offset)
        return e

    def expr(self) -> Expr:
        out = self.term()
        while self.tok.text in ("+", "-"):
            op = self.advance().text
            rhs = self.term()
            out = out + rhs if op == "+" else out - rhs
        return out

    def term(self) -> Expr:
        factors = []
        while self.tok.text in ("+", "-"):
            if self.advance().text == "-":
                factors.append(sp.S.NegativeOne)
        factors.append(self.unary())
        while self.tok.text in ("*", "/"):
            op = self.advance()
            rhs = self.unary()
            if op.text == "*":
                factors.append(rhs)
            else:
                if rhs == 0:
                    raise DSLSyntaxError("division by zero", op.offset)
                factors.append(sp.Pow(rhs, -1))
        return sp.Mul(*factors) if len(factors) > 1 else factors[0]

    def unary(self) -> Expr:
        if self.tok.text == "-":
            self.advance()
            return -self.unary()
        if self.tok.text == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.base()
        if self.tok.text != "^":
            return base
        at = self.advance().offset
        ex = self.unary()
        if not _constant(ex):
            raise DSLSyntaxError("exponent must be a constant", at)
        return base**ex

    def base(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return sp.Rational(t.text)
        if t.text == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "ident":
            self.advance()
            return self.identifier(t)
        raise DSLSyntaxError(f"unexpected {t.text or 'end of input'!r}", t.offset)

    def identifier(self, t: Token) -> Expr:
        name = ALIASES.get(t.text, t.text)
        if self.tok.text == "(":
            return self.call(name, t)
        base, _, suffix = name.rpartition("_")
        base = ALIASES.get(base, base)
        if base and suffix and set(suffix) <= DERIV_LETTERS | {"ω"}:
            suffix = suffix.replace("ω", "w")
            if base == "u":
                if not set(suffix) <= {"y", "z"}:
                    raise DSLSyntaxError(f"jet symbol {name!r} must use y/z indices", t.offset)
                return jet_symbol(suffix.count("y"), suffix.count("z"))
            if base in self.decls:
                app = _apply(base, self.decls[base])
                counts = [(coordinate(c), suffix.count(c)) for c in dict.fromkeys(suffix)]
                return sp.diff(app, *counts)
        if name in self.decls:
            return _apply(name, self.decls[name])
        return coordinate(name)

    def call(self, name: str, t: Token) -> Expr:
        self.expect("(")
        args = [self.expr()]
        while self.tok.text == ",":
            self.advance()
            args.append(self.expr())
        self.expect(")")
        if name in ELEMENTARY:
            if len(args) != 1:
                raise ArityError(f"{name} takes one argument", t.offset)
            return ELEMENTARY[name](args[0])
        if not all(isinstance(a, sp.Symbol) for a in args) or len(set(args)) != len(args):
            raise ArityError(
                f"arguments of {name} must be distinct variables", t.offset
            )
        deps = tuple(a.name for a in args)
        declared = self.decls.get(name)
        if declared is not None and declared != deps:
            raise ArityError(
                f"{name} declared with dependencies {declared}, called with {deps}",
                t.offset,
            )
        return _apply(name, deps)


def _constant(e: Expr) -> bool:
    """Numbers and parameters (symbols that are neither coordinates nor jets)."""
    if e.atoms(AppliedUndef, sp.Derivative):
        return False
    return not any(s.name in COORDINATES or jet_index(s) is not None for s in e.free_symbols)


def _apply(name: str, deps: Sequence[str]) -> Expr:
    return sp.Function(name)(*(coordinate(d) for d in deps))


def parse(text: str, decls: Mapping[str, Sequence[str]] | None = None) -> Expr:
    """Parse DSL text into a canonical expression."""
    return Parser(text, decls).parse()


_DECL_RE = re.compile(r"^\s*declare\s+([^\W\d]\w*)\s*\(([^)]*)\)\s*;?\s*$", re.UNICODE)


def parse_declaration(line: str) -> tuple[str, tuple[str, ...]]:
    """``declare K(y,z,u);`` -> ("K", ("y", "z", "u"))."""
    m = _DECL_RE.match(line)
    if m is None:
        raise DSLSyntaxError(f"malformed declaration {line.strip()!r}", 0)
    name = ALIASES.get(m.group(1), m.group(1))
    deps = tuple(ALIASES.get(d.strip(), d.strip()) for d in m.group(2).split(",") if d.strip())
    if len(set(deps)) != len(deps):
        raise DSLSyntaxError(f"repeated dependency in {line.strip()!r}", 0)
    return name, deps


# ---------------------------------------------------------------------------
# printer

_ADD, _MUL, _POW, _ATOM = 1, 2, 3, 4


def to_text(e, decls: Mapping[str, Sequence[str]] | None = None) -> str:
    """Render ``e`` in the DSL; ``parse(to_text(e)) == e`` for DSL-expressible trees."""
    decls = {k: tuple(v) for k, v in (decls or DEFAULT_DECLARATIONS).items()}
    return _Printer(decls).show(sp.sympify(e))[0]


class _Printer:
    def __init__(self, decls):
        self.decls = decls

    def wrap(self, e, prec):
        s, p = self.show(e)
        return f"({s})" if p < prec else s

    def show(self, e) -> tuple[str, int]:
        if e.is_Integer:
            return str(e), _ATOM if e >= 0 else _ADD
        if e.is_Rational:
            return f"{e.p}/{e.q}", _MUL if e > 0 else _ADD
        if e.is_Float:
            raise ValueError(f"floating constant {e} has no exact DSL form")
        if e is sp.E:
            return "exp(1)", _ATOM
        if e.is_Symbol:
            return e.name, _ATOM
        if isinstance(e, AppliedUndef):
            return self.application(e), _ATOM
        if isinstance(e, sp.Derivative):
            return self.derivative(e), _ATOM
        if isinstance(e, (sp.exp, sp.log)):
            return f"{type(e).__name__}({self.show(e.args[0])[0]})", _ATOM
        if e.is_Add:
            return self.add(e), _ADD
        if e.is_Mul:
            return self.mul(e)
        if e.is_Pow:
            return self.pow(e)
        raise ValueError(f"no DSL form for {e!r}")

    def application(self, e) -> str:
        name = e.func.__name__
        deps = tuple(str(a) for a in e.args)
        if all(isinstance(a, sp.Symbol) for a in e.args) and self.decls.get(name) == deps:
            return name
        return f"{name}({', '.join(self.show(a)[0] for a in e.args)})"

    def derivative(self, e) -> str:
        app = e.expr
        if not isinstance(app, AppliedUndef) or not all(
            isinstance(a, sp.Symbol) and a.name in DERIV_LETTERS for a in app.args
        ):
            raise ValueError(f"no DSL form for {e!r}")
        counts = {str(v): int(n) for v, n in e.variable_count}
        suffix = "".join(str(a) * counts.get(str(a), 0) for a in app.args)
        return f"{app.func.__name__}_{suffix}"

    def add(self, e) -> str:
        terms = e.as_ordered_terms()
        out = self.show(terms[0])[0]
        for t in terms[1:]:
            if t.could_extract_minus_sign():
                out += " - " + self.wrap(-t, _MUL)
            else:
                out += " + " + self.wrap(t, _ADD + 1)
        return out

    def mul(self, e) -> tuple[str, int]:
        coeff, factors = e.as_coeff_mul()
        sign = ""
        if coeff < 0:
            sign, coeff = "-", -coeff
        num, den = [], []
        # the rational coefficient leads as p or p/q so it re-parses as one factor
        if coeff != 1 or not factors:
            num.append(str(coeff.p) if coeff.q == 1 else f"{coeff.p}/{coeff.q}")
        for f in factors:
            if f.is_Pow and f.exp.is_Integer and f.exp < 0:
                den.append(self.wrap(f.base ** (-f.exp), _POW))
            else:
                num.append(self.wrap(f, _MUL + 1 if f.is_Mul else _MUL))
        text = "*".join(num) if num else "1"
        for d in den:
            text += "/" + d
        return sign + text, (_ADD if sign else _MUL)

    def pow(self, e) -> tuple[str, int]:
        b, x = e.base, e.exp
        if x.is_Integer and x < 0:
            return "1/" + self.wrap(b ** (-x), _POW), _MUL
        base = self.wrap(b, _ATOM)
        if x.is_Integer:
            return f"{base}^{x}", _POW
        if x.is_Rational:
            return f"{base}^({x.p}/{x.q})", _POW
        return f"{base}^{self.wrap(x, _ATOM)}", _POW
