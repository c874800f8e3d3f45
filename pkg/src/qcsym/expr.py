"""Symbolic kernel.

Expressions are immutable sympy trees over the coordinates ``y, z, u`` (plus
``t, x`` for the laboratory frame and ``w`` for the reduced variable omega),
jet symbols ``u_y, u_z, u_yz, ...`` and opaque function applications such as
``K(y, z, u)``.  A derivative of an opaque function is a sympy ``Derivative``
node; its multi-index is read off the derivative's variable counts.

Canonical form is multivariate rational normalization (one expanded numerator
over one expanded denominator) with exponentials split into atomic generators
during normalization and contracted again for display.
"""
from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import mpmath
import numpy as np
import sympy as sp
from sympy.core.function import AppliedUndef

Expr = sp.Expr

Y, Z, U, T, X, W = sp.symbols("y z u t x w")
COORDINATES = {s.name: s for s in (Y, Z, U, T, X, W)}

DEFAULT_DECLARATIONS: dict[str, tuple[str, ...]] = {
    "K": ("y", "z", "u"),
    "L": ("y", "z", "u"),
    "f": ("y", "z", "u"),
    "T": ("y", "z"),
    "s": ("y", "z"),
    "d": ("y", "z"),
    "phi": ("w",),
}

_JET_RE = re.compile(r"^u_(y*)(z*)$")


class DependencyError(ValueError):
    """A function binding disagrees with the function's dependency list."""


class PoleError(ArithmeticError):
    """Numeric evaluation hit a (near) zero denominator or a log singularity."""


class SingularDomainError(RuntimeError):
    """Probabilistic testing could not find enough non-singular points."""


# ---------------------------------------------------------------------------
# function symbols and jet symbols


@dataclass(frozen=True)
class FunctionSymbol:
    """An opaque function with its dependency list and a derivative multi-index."""

    name: str
    deps: tuple[str, ...]
    index: tuple[int, ...] = ()

    def __post_init__(self):
        if not self.index:
            object.__setattr__(self, "index", (0,) * len(self.deps))
        if len(self.index) != len(self.deps):
            raise ValueError(
                f"multi-index {self.index} does not match dependencies {self.deps}"
            )
        if any(i < 0 for i in self.index):
            raise ValueError("derivative orders must be non-negative")

    @property
    def application(self) -> Expr:
        return sp.Function(self.name)(*(coordinate(d) for d in self.deps))

    def to_expr(self) -> Expr:
        counts = [(coordinate(d), n) for d, n in zip(self.deps, self.index) if n]
        if not counts:
            return self.application
        return sp.diff(self.application, *counts)

    def differentiate(self, var: str) -> "FunctionSymbol | None":
        """Raise the index along ``var``; ``None`` means the derivative vanishes."""
        if var not in self.deps:
            return None
        idx = list(self.index)
        idx[self.deps.index(var)] += 1
        return FunctionSymbol(self.name, self.deps, tuple(idx))

    @classmethod
    def from_expr(cls, node: Expr) -> "FunctionSymbol":
        if isinstance(node, AppliedUndef):
            return cls(node.func.__name__, tuple(str(a) for a in node.args))
        if isinstance(node, sp.Derivative) and isinstance(node.expr, AppliedUndef):
            app = node.expr
            deps = tuple(str(a) for a in app.args)
            counts = dict((str(v), int(n)) for v, n in node.variable_count)
            return cls(app.func.__name__, deps, tuple(counts.get(d, 0) for d in deps))
        raise TypeError(f"{node!r} is not a function symbol")


def coordinate(name: str) -> sp.Symbol:
    return COORDINATES.get(name) or sp.Symbol(name)


def jet_symbol(ny: int, nz: int) -> sp.Symbol:
    """``u`` differentiated ``ny`` times in y and ``nz`` times in z."""
    if ny == 0 and nz == 0:
        return U
    return sp.Symbol("u_" + "y" * ny + "z" * nz)


def jet_index(sym) -> tuple[int, int] | None:
    if sym == U:
        return (0, 0)
    if not isinstance(sym, sp.Symbol):
        return None
    m = _JET_RE.match(sym.name)
    if m is None:
        return None
    return len(m.group(1)), len(m.group(2))


def jet_symbols(e: Expr) -> set[sp.Symbol]:
    """Jet symbols of order >= 1 occurring in ``e``."""
    return {s for s in e.free_symbols if s != U and jet_index(s) is not None}


def jet_order(e: Expr) -> int:
    return max((sum(jet_index(s)) for s in jet_symbols(e)), default=0)


def function_names(e: Expr) -> set[str]:
    return {a.func.__name__ for a in e.atoms(AppliedUndef)}


def is_opaque(e: Expr) -> bool:
    return bool(e.atoms(AppliedUndef))


# ---------------------------------------------------------------------------
# construction helpers


def as_expr(value, decls: Mapping[str, Sequence[str]] | None = None) -> Expr:
    """Coerce DSL text, numbers or sympy objects to an expression."""
    if isinstance(value, sp.Basic):
        return value
    if isinstance(value, str):
        from .dsl import parse

        return parse(value, decls)
    if isinstance(value, FunctionSymbol):
        return value.to_expr()
    return sp.sympify(value)


def fn(name: str, deps: Sequence[str] | None = None) -> Expr:
    """Application of a declared (or explicitly described) function."""
    deps = tuple(deps) if deps is not None else DEFAULT_DECLARATIONS[name]
    return FunctionSymbol(name, deps).application


# ---------------------------------------------------------------------------
# differentiation and substitution


def diff(e, v) -> Expr:
    """Partial derivative; y, z, u and jet symbols are independent coordinates."""
    return sp.diff(as_expr(e), coordinate(v) if isinstance(v, str) else v)


def _binding_key(key, e: Expr, decls):
    """Return ('fn', name, deps-or-None) or ('var', symbol)."""
    if isinstance(key, FunctionSymbol):
        return "fn", key.name, key.deps
    if isinstance(key, AppliedUndef):
        return "fn", key.func.__name__, tuple(str(a) for a in key.args)
    if isinstance(key, sp.Symbol):
        return "var", key
    if isinstance(key, str):
        if key in function_names(e) or (decls and key in decls):
            deps = tuple(decls[key]) if decls and key in decls else None
            return "fn", key, deps
        return "var", coordinate(key)
    raise TypeError(f"unsupported binding key {key!r}")


def substitute(e, bindings: Mapping, decls: Mapping[str, Sequence[str]] | None = None) -> Expr:
    """Replace functions (with all their derivatives) and variables simultaneously.

    A derivative ``F_J`` of a bound function is replaced by the corresponding
    derivative of the replacement.
    """
    e = as_expr(e, decls)
    fn_bind: dict[str, tuple[tuple[str, ...] | None, Expr]] = {}
    var_bind: dict[sp.Symbol, Expr] = {}
    for key, value in bindings.items():
        kind, *rest = _binding_key(key, e, decls)
        value = as_expr(value, decls)
        if kind == "fn":
            fn_bind[rest[0]] = (rest[1], value)
        else:
            var_bind[rest[0]] = value

    mapping = {}
    for node in e.atoms(sp.Derivative) | e.atoms(AppliedUndef):
        app = node.expr if isinstance(node, sp.Derivative) else node
        if not isinstance(app, AppliedUndef) or app.func.__name__ not in fn_bind:
            continue
        deps, value = fn_bind[app.func.__name__]
        args = tuple(str(a) for a in app.args)
        if deps is not None and deps != args:
            raise DependencyError(
                f"{app.func.__name__} occurs as {app}, binding declares {deps}"
            )
        stray = {
            s.name
            for s in value.free_symbols
            if (s.name in COORDINATES or jet_index(s) is not None) and s.name not in args
        }
        if stray:
            raise DependencyError(
                f"replacement for {app.func.__name__}{args} depends on {sorted(stray)}"
            )
        if isinstance(node, sp.Derivative):
            mapping[node] = sp.diff(value, *node.variable_count)
        else:
            mapping[node] = value
    out = e.xreplace(mapping) if mapping else e
    if var_bind:
        out = out.xreplace(var_bind)
    return out


def drop_derivatives(e: Expr, name: str, var: str) -> Expr:
    """Set every derivative of ``name`` involving ``var`` to zero (e.g. K_u -> 0)."""
    v = coordinate(var)
    mapping = {
        d: sp.S.Zero
        for d in e.atoms(sp.Derivative)
        if isinstance(d.expr, AppliedUndef)
        and d.expr.func.__name__ == name
        and any(s == v for s, _ in d.variable_count)
    }
    return e.xreplace(mapping)


def swap_yz(e: Expr) -> Expr:
    """Mirror y <-> z: coordinates, jet symbols and derivative indices.

    Function applications keep their argument order, i.e. ``L(y,z,u)`` is
    read as the relabelled function ``L(z,y,u)``.
    """

    def sw(s):
        return {Y: Z, Z: Y}.get(s, s)

    def rec(node):
        if isinstance(node, sp.Symbol):
            idx = jet_index(node)
            if idx is not None and node != U:
                return jet_symbol(idx[1], idx[0])
            return sw(node)
        if isinstance(node, AppliedUndef):
            return node
        if isinstance(node, sp.Derivative) and isinstance(node.expr, AppliedUndef):
            return sp.diff(node.expr, *[(sw(v), n) for v, n in node.variable_count])
        if not node.args:
            return node
        return node.func(*[rec(a) for a in node.args])

    return rec(as_expr(e))


# ---------------------------------------------------------------------------
# normalization and zero testing


def _split_exp(e: Expr) -> Expr:
    return sp.expand_power_exp(e)


def simplify(e) -> Expr:
    """Rational normal form with exp contraction; idempotent."""
    e = as_expr(e)
    e = _split_exp(e)
    e = sp.cancel(sp.together(e))
    num, den = sp.fraction(e)
    num = sp.powsimp(sp.expand(num), combine="exp")
    den = sp.powsimp(sp.expand(den), combine="exp")
    return num / den


def numerator(e) -> Expr:
    """Expanded numerator of the rational normal form."""
    e = sp.cancel(sp.together(_split_exp(as_expr(e))))
    return sp.expand(sp.fraction(e)[0])


class ZeroVerdict(enum.Enum):
    ZERO = "Zero"
    NONZERO = "NonZero"
    ZERO_PROBABILISTIC = "ZeroProbabilistic"

    @property
    def vanishes(self) -> bool:
        return self is not ZeroVerdict.NONZERO


DEFAULT_BOX = (1.0, 2.0)


def is_zero(
    e,
    mode: str = "auto",
    fn_bindings: Mapping | None = None,
    box: Mapping[str, tuple[float, float]] | tuple[float, float] = DEFAULT_BOX,
    n_points: int = 20,
    seed: int = 0,
    tol: float = 1e-9,
) -> ZeroVerdict:
    """Decide whether ``e`` vanishes identically.

    ``mode="symbolic"`` trusts the normal form only, ``"probabilistic"``
    samples random points, ``"auto"`` runs the symbolic test and falls back
    to sampling when the normal form is nonzero but the expression is
    numerically evaluable.  A sampled zero is reported as ZERO_PROBABILISTIC.
    """
    e = as_expr(e)
    if fn_bindings:
        e = substitute(e, fn_bindings)
    if mode not in ("auto", "symbolic", "probabilistic"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode in ("auto", "symbolic"):
        if numerator(e) == 0:
            return ZeroVerdict.ZERO
        if mode == "symbolic" or is_opaque(e) or jet_symbols(e):
            return ZeroVerdict.NONZERO
    if is_opaque(e):
        raise ValueError("probabilistic zero test needs numeric bindings for all functions")
    return _probabilistic_zero(e, box, n_points, seed, tol)


def _probabilistic_zero(e, box, n_points, seed, tol) -> ZeroVerdict:
    symbols = sorted(e.free_symbols, key=lambda s: s.name)
    terms = sp.Add.make_args(e)
    rng = np.random.default_rng(seed)
    accepted = resamples = 0
    while accepted < n_points:
        point = {s: rng.uniform(*_box_for(box, s.name)) for s in symbols}
        try:
            values = [_evaluate(t, point) for t in terms]
        except PoleError:
            resamples += 1
            if resamples > 100:
                raise SingularDomainError("singular test domain")
            continue
        accepted += 1
        scale = max(1.0, sum(abs(v) for v in values))
        if abs(math.fsum(values)) >= tol * scale:
            return ZeroVerdict.NONZERO
    return ZeroVerdict.ZERO_PROBABILISTIC


def _box_for(box, name):
    if isinstance(box, Mapping):
        return box.get(name, DEFAULT_BOX)
    return box


# ---------------------------------------------------------------------------
# numeric evaluation

_POLE = 1e-300
EVAL_DPS = 50  # working precision of eval_at


class _Float:
    exp, log, fsum = math.exp, math.log, math.fsum

    @staticmethod
    def number(n):
        return float(n)

    @staticmethod
    def value(v):
        return float(v)


class _Mp:
    exp, log, fsum = mpmath.exp, mpmath.log, mpmath.fsum

    @staticmethod
    def number(n):
        if n.is_Rational:
            return mpmath.mpf(int(n.p)) / int(n.q)
        return mpmath.mpf(str(n))

    @staticmethod
    def value(v):
        return mpmath.mpf(v)


def _evaluate(node: Expr, env: Mapping, num=_Float):
    if node.is_Number:
        return num.number(node)
    if node.is_Symbol:
        try:
            return num.value(env[node])
        except KeyError:
            raise ValueError(f"no value for {node}") from None
    if node is sp.E:
        return num.exp(1)
    if node is sp.pi:
        return num.number(sp.pi.evalf(40))
    if node.is_Add:
        return num.fsum(_evaluate(a, env, num) for a in node.args)
    if node.is_Mul:
        out = num.number(sp.S.One)
        for a in node.args:
            out *= _evaluate(a, env, num)
        return out
    if node.is_Pow:
        base = _evaluate(node.base, env, num)
        ex = node.exp
        if ex.is_Integer:
            if ex < 0 and abs(base) < _POLE:
                raise PoleError(f"pole of {node}")
            return base ** int(ex)
        exv = _evaluate(ex, env, num)
        if base == 0 and exv < 0:
            raise PoleError(f"pole of {node}")
        if base < 0 and not float(exv).is_integer():
            raise PoleError(f"{node} is not real here")
        return base**exv
    if isinstance(node, sp.exp):
        return num.exp(_evaluate(node.args[0], env, num))
    if isinstance(node, sp.log):
        arg = _evaluate(node.args[0], env, num)
        if arg <= _POLE:
            raise PoleError(f"log singularity of {node}")
        return num.log(arg)
    if isinstance(node, (AppliedUndef, sp.Derivative)):
        raise ValueError(f"unbound function symbol {node}")
    # remaining elementary functions
    args = [sp.Float(_evaluate(a, env, num), EVAL_DPS) for a in node.args]
    return num.number(node.func(*args).evalf(EVAL_DPS))


def eval_at(e, point: Mapping, fn_bindings: Mapping | None = None) -> float:
    """Float value of ``e`` at ``point`` after binding opaque functions.

    Arithmetic runs at EVAL_DPS digits, so expanded and factored forms of
    the same expression agree to double precision even near cancellations.
    """
    e = as_expr(e)
    if fn_bindings:
        e = substitute(e, fn_bindings)
    env = {coordinate(k) if isinstance(k, str) else k: v for k, v in point.items()}
    with mpmath.workdps(EVAL_DPS):
        return float(_evaluate(e, env, _Mp))


def lambdify(e: Expr, variables: Sequence[str | sp.Symbol]) -> Callable:
    """Vectorized numpy evaluator of a concrete expression."""
    syms = [coordinate(v) if isinstance(v, str) else v for v in variables]
    e = as_expr(e)
    if is_opaque(e):
        raise ValueError(f"cannot lambdify opaque expression {e}")
    f = sp.lambdify(syms, e, modules="numpy")
    if e.free_symbols:
        return f
    const = float(e)

    def constant(*args):
        return np.full(np.broadcast_shapes(*(np.shape(a) for a in args)), const)

    return constant


def free_coordinates(e: Expr) -> set[str]:
    return {s.name for s in as_expr(e).free_symbols if s.name in COORDINATES}


def polynomial_coefficients(e: Expr, gens: Iterable[sp.Symbol]) -> dict[tuple[int, ...], Expr]:
    """Coefficients of a rational expression's numerator as a polynomial in ``gens``.

    Coefficients are returned divided by the common denominator.
    """
    gens = list(gens)
    e = sp.together(as_expr(e))
    num, den = sp.fraction(e)
    poly = sp.Poly(sp.expand(num), *gens)
    return {m: c / den for m, c in zip(poly.monoms(), poly.coeffs())}
