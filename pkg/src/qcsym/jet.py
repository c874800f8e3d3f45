"""Second-order jet machinery: total derivatives, prolongation, constraint elimination."""
from __future__ import annotations

from dataclasses import dataclass

import sympy as sp

from .expr import (
    U,
    Y,
    Z,
    Expr,
    as_expr,
    fn,
    jet_index,
    jet_order,
    jet_symbol,
    jet_symbols,
    simplify,
)

GENERAL, A_NE_0, A_EQ_0 = "general", "a_ne_0", "a_eq_0"
FORMS = (GENERAL, A_NE_0, A_EQ_0)

# order of the equation u_yz = f; consequences of Qu = 0 are used up to order 1
EQUATION_ORDER = 2


class ProlongationInconsistency(RuntimeError):
    pass


class UndeterminedJet(ValueError):
    """The constraint manifold does not fix the requested jet variable."""


def total_derivative(e, wrt) -> Expr:
    """D_y or D_z: partial derivative plus the chain rule through every jet symbol."""
    e = as_expr(e)
    var = {"y": Y, "z": Z}.get(wrt, wrt)
    if var not in (Y, Z):
        raise ValueError(f"total derivative only along y or z, not {wrt}")
    out = sp.diff(e, var)
    for s in jet_symbols(e) | ({U} if e.has(U) else set()):
        ny, nz = jet_index(s)
        nxt = jet_symbol(ny + 1, nz) if var == Y else jet_symbol(ny, nz + 1)
        out += sp.diff(e, s) * nxt
    return out


def total_derivative_multi(e, ny: int, nz: int) -> Expr:
    for _ in range(ny):
        e = total_derivative(e, Y)
    for _ in range(nz):
        e = total_derivative(e, Z)
    return e


@dataclass(frozen=True)
class ConditionalOperator:
    """Q = a d_y + b d_z + c d_u with invariant-surface condition a u_y + b u_z = c."""

    a: Expr
    b: Expr
    c: Expr
    form: str = GENERAL

    def __post_init__(self):
        for name in "abc":
            object.__setattr__(self, name, as_expr(getattr(self, name)))
        if self.form not in FORMS:
            raise ValueError(f"unknown form {self.form!r}")
        if self.form == A_NE_0 and self.a != 1:
            raise ValueError("canonical a != 0 form requires a = 1")
        if self.form == A_EQ_0 and (self.a != 0 or self.b != 1):
            raise ValueError("canonical a = 0 form requires a = 0, b = 1")

    @classmethod
    def a_ne_0(cls, K=None, L=None) -> "ConditionalOperator":
        """Q = d_y + K d_z + L d_u (opaque K, L by default)."""
        K = fn("K") if K is None else K
        L = fn("L") if L is None else L
        return cls(1, K, L, A_NE_0)

    @classmethod
    def a_eq_0(cls, L=None) -> "ConditionalOperator":
        """Q = d_z + L d_u."""
        return cls(0, 1, fn("L") if L is None else L, A_EQ_0)

    @property
    def K(self) -> Expr:
        return self.b

    @property
    def L(self) -> Expr:
        return self.c

    @property
    def characteristic(self) -> Expr:
        return self.c - self.a * jet_symbol(1, 0) - self.b * jet_symbol(0, 1)

    @property
    def condition(self) -> Expr:
        """Qu as an expression that must vanish."""
        return self.a * jet_symbol(1, 0) + self.b * jet_symbol(0, 1) - self.c

    def __add__(self, other: "ConditionalOperator") -> "ConditionalOperator":
        return ConditionalOperator(self.a + other.a, self.b + other.b, self.c + other.c)

    def apply(self, e) -> Expr:
        """Q acting on a function of (y, z, u)."""
        e = as_expr(e)
        return self.a * sp.diff(e, Y) + self.b * sp.diff(e, Z) + self.c * sp.diff(e, U)


PROLONGATION_KEYS = {"": (0, 0), "y": (1, 0), "z": (0, 1), "yy": (2, 0), "yz": (1, 1), "zz": (0, 2)}


def prolong(Q: ConditionalOperator, order: int = 2) -> dict[str, Expr]:
    """Coefficients eta^J = D_J W + a u_{J,y} + b u_{J,z} for |J| <= order.

    W is the characteristic c - a u_y - b u_z; the key "" holds eta = c.
    """
    W = Q.characteristic
    out = {}
    for key, (ny, nz) in PROLONGATION_KEYS.items():
        if ny + nz > order:
            continue
        if ny + nz == 0:
            out[key] = Q.c
            continue
        eta = total_derivative_multi(W, ny, nz)
        eta += Q.a * jet_symbol(ny + 1, nz) + Q.b * jet_symbol(ny, nz + 1)
        out[key] = sp.expand(eta)
    return out


def eliminate(e, Q: ConditionalOperator) -> Expr:
    """Rewrite ``e`` on the manifold of Qu = 0 and its first-order consequences.

    For the a != 0 form every jet containing a y-derivative is replaced via
    u_y = L - K u_z, leaving u, u_z, u_zz.  For the a = 0 form every jet
    containing a z-derivative is replaced via u_z = L, leaving u, u_y, u_yy.
    """
    e = as_expr(e)
    if Q.form == GENERAL:
        raise ValueError("eliminate needs a canonical operator")
    rule = _elimination_rule(Q)
    for _ in range(2 * EQUATION_ORDER + 2):
        targets = {s: rule(s) for s in jet_symbols(e) if _determined(s, Q)}
        if not targets:
            return e
        e = e.xreplace(targets)
    raise RuntimeError("elimination did not terminate")


def eliminate_variable(sym, Q: ConditionalOperator) -> Expr:
    """Value of one jet variable on the constraint manifold."""
    sym = as_expr(sym)
    if jet_index(sym) is None or not _determined(sym, Q):
        raise UndeterminedJet(f"{sym} is not determined by the constraints of this operator")
    return eliminate(sym, Q)


def _determined(sym, Q) -> bool:
    ny, nz = jet_index(sym)
    if ny + nz == 0 or ny + nz > EQUATION_ORDER:
        return False
    return ny > 0 if Q.form == A_NE_0 else nz > 0


def _elimination_rule(Q):
    if Q.form == A_NE_0:
        solved = Q.L - Q.K * jet_symbol(0, 1)  # u_y

        def rule(s):
            ny, nz = jet_index(s)
            return total_derivative_multi(solved, ny - 1, nz)

    else:
        solved = Q.L  # u_z

        def rule(s):
            ny, nz = jet_index(s)
            return total_derivative_multi(solved, ny, nz - 1)

    return rule


def invariance_condition(Q: ConditionalOperator, f=None) -> Expr:
    """pr(2)Q applied to u_yz - f, before restriction to any manifold.

    Third-order jets must cancel; if they do not the prolongation is wrong.
    """
    f = fn("f") if f is None else as_expr(f)
    eta_yz = prolong(Q, 2)["yz"]
    cond = sp.expand(eta_yz - Q.apply(f))
    if jet_order(cond) > EQUATION_ORDER:
        raise ProlongationInconsistency(
            "third-order jets survive in the prolonged equation: "
            + ", ".join(sorted(s.name for s in jet_symbols(cond) if sum(jet_index(s)) > 2))
        )
    return cond


def u_zz_on_equation(Q: ConditionalOperator, f=None) -> Expr:
    """u_zz from equating the eliminated u_yz with f (a != 0 form, K != 0).

    The relation is linear in u_zz with coefficient -K.
    """
    f = fn("f") if f is None else as_expr(f)
    uzz = jet_symbol(0, 2)
    rel = sp.expand(eliminate(jet_symbol(1, 1), Q) - f)
    coeff = rel.coeff(uzz)
    if simplify(coeff + Q.K) != 0:
        raise ProlongationInconsistency(f"u_zz coefficient {coeff} is not -K")
    return -(rel - coeff * uzz) / coeff
