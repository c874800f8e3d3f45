"""Determining equations for Q-conditional invariance of u_yz = f(y, z, u).

Generation is done from scratch (prolongation + elimination) and compared
against the reference forms in ``TRANSCRIBED``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
import sympy as sp
from sympy.core.function import AppliedUndef

from .dsl import parse, to_text
from .expr import (
    DEFAULT_BOX,
    T as T_SYM,
    U,
    X,
    Y,
    Z,
    Expr,
    ZeroVerdict,
    as_expr,
    drop_derivatives,
    fn,
    free_coordinates,
    is_opaque,
    is_zero,
    jet_symbol,
    jet_symbols,
    lambdify,
    numerator,
    polynomial_coefficients,
    simplify,
    substitute,
    swap_yz,
)
from .jet import (
    A_EQ_0,
    A_NE_0,
    ConditionalOperator,
    eliminate,
    invariance_condition,
    jet_index,
    u_zz_on_equation,
)

K_FN, L_FN, F_FN = fn("K"), fn("L"), fn("f")

TRANSCRIBED = {
    A_NE_0: [
        "-K_u^2 + K_uu*K",
        "-K*L_uu + K_u*K_y/K + K_u^2*L/K + K_u*(L_u - K_z) - K_uy - L*K_uu + K*K_zu",
        "L_uy - L_uz*K + L_uu*L - L_u*K_y/K + K_y*K_z/K - K_yz"
        " - 3*K_u*f - K_u*L/K*(L_u - K_z) + K_u*L_z - K_zu*L",
        "-f_y - K*f_z - L*f_u + L_yz + L_uz*L + L_u*f - K_y/K*(L_z - f) - K_z*f"
        " - K_u*L/K*(L_z - f)",
    ],
    "case1": [
        "-K*L_uu",
        "L_uy - L_uz*K + L_uu*L - L_u*K_y/K + K_y*K_z/K - K_yz",
        "-f_y - K*f_z - L*f_u + L_yz + L_uz*L + L_u*f - K_y/K*(L_z - f) - K_z*f",
    ],
    A_EQ_0: [
        "L_uy + L_uu*L",
        "-f_y - L*f_u + L_yz + L_uz*L + L_u*f",
    ],
}

CASE3_CONSTRAINTS = (
    "2*s_yz - s*d_z + 2*s_y*s - d_zz",
    "-s_yy + 2*d_yz + s_y*d - 2*d_z*d",
)


class CaseTag(enum.Enum):
    CASE1 = "Case1"
    CASE2 = "Case2"
    CASE3 = "Case3"
    UNDECIDED = "Undecided"


# ---------------------------------------------------------------------------
# the determining system


@dataclass(frozen=True)
class DeterminingEquation:
    expr: Expr  # cleared of K-denominators
    raw: Expr  # coefficient as collected
    monomial: str  # jet monomial whose coefficient this is
    k_power: int  # power of K multiplied in while clearing

    @property
    def text(self) -> str:
        return to_text(self.expr)


@dataclass(frozen=True)
class DeterminingSystem:
    form: str
    members: tuple[DeterminingEquation, ...]
    specialization: str | None = None

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __getitem__(self, i):
        return self.members[i]

    @property
    def exprs(self) -> list[Expr]:
        return [m.expr for m in self.members]


def _k_power(term: Expr) -> int:
    return int(term.as_powers_dict().get(K_FN, 0))


def clear_k(e: Expr) -> tuple[Expr, int]:
    """Multiply by the minimal power of K that clears denominators."""
    num, den = sp.fraction(sp.cancel(sp.together(e)))
    p = _k_power(den)
    rest = sp.cancel(den / K_FN**p)
    if rest.has(K_FN) or free_coordinates(rest) or is_opaque(rest):
        raise ValueError(f"denominator {den} is not a power of K")
    return sp.expand(num / rest), p


def k_primitive(e: Expr) -> Expr:
    """Numerator with every common factor of K removed: comparison modulo powers of K."""
    num = numerator(e)
    if num == 0:
        return num
    low = min(_k_power(t) for t in sp.Add.make_args(num))
    return sp.expand(num / K_FN**low)


@lru_cache(maxsize=None)
def generate_determining_system(form: str = A_NE_0) -> DeterminingSystem:
    """Prolong, restrict to u_yz = f and Qu = 0 (+ consequences), split by jet monomials.

    a != 0: Q = d_y + K d_z + L d_u; members are the coefficients of u_z^3 .. u_z^0.
    a = 0: Q = d_z + L d_u; the result is mirrored y <-> z into the condition
    u_y = L, members are the coefficients of u_z^1, u_z^0.
    """
    form = normalize_form(form)
    if form == A_NE_0:
        Q = ConditionalOperator.a_ne_0()
    else:
        Q = ConditionalOperator.a_eq_0()
    cond = invariance_condition(Q, F_FN).xreplace({jet_symbol(1, 1): F_FN})
    cond = eliminate(cond, Q)
    if form == A_NE_0:
        free = jet_symbol(0, 1)
        cond = cond.xreplace({jet_symbol(0, 2): u_zz_on_equation(Q, F_FN)})
    else:
        free = jet_symbol(1, 0)
    leftover = jet_symbols(cond) - {free}
    if leftover:
        raise RuntimeError(f"jets {leftover} survived elimination")
    coeffs = polynomial_coefficients(cond, [free])
    members = []
    for (k,), raw in sorted(coeffs.items(), reverse=True):
        raw = sp.cancel(raw)
        if raw == 0:
            continue
        if form == A_EQ_0:
            raw = swap_yz(raw)
            label = f"u_z^{k}"
        else:
            label = f"{free.name}^{k}"
        expr, p = clear_k(raw)
        members.append(DeterminingEquation(expr, raw, label, p))
    return DeterminingSystem(form, tuple(members))


def case1_system() -> DeterminingSystem:
    """The a != 0 system with every K_u-type derivative set to zero."""
    members = []
    for m in generate_determining_system(A_NE_0):
        raw = sp.cancel(drop_derivatives(m.raw, "K", "u"))
        if raw == 0:
            continue
        expr, p = clear_k(raw)
        members.append(DeterminingEquation(expr, raw, m.monomial, p))
    return DeterminingSystem(A_NE_0, tuple(members), specialization="K_u=0")


def normalize_form(form: str) -> str:
    aliases = {"a-ne-0": A_NE_0, "a_ne_0": A_NE_0, "a!=0": A_NE_0,
               "a-eq-0": A_EQ_0, "a_eq_0": A_EQ_0, "a=0": A_EQ_0}
    try:
        return aliases[form]
    except KeyError:
        raise ValueError(f"unknown canonical form {form!r}") from None


@dataclass(frozen=True)
class RegressionRow:
    index: int
    monomial: str
    generated: Expr
    transcribed: Expr
    exact: bool  # identical after the same K-clearing
    up_to_k_power: bool

    @property
    def match(self) -> bool:
        return self.exact or self.up_to_k_power


def regression(which: str = A_NE_0) -> list[RegressionRow]:
    """Generated members against the reference forms."""
    if which == "case1":
        system = case1_system()
        key = "case1"
    else:
        key = normalize_form(which)
        system = generate_determining_system(key)
    written = [parse(t) for t in TRANSCRIBED[key]]
    if len(written) != len(system):
        raise AssertionError(f"{len(system)} generated members, {len(written)} transcribed")
    rows = []
    for i, (m, w) in enumerate(zip(system, written)):
        w_clear, _ = clear_k(w)
        exact = sp.expand(m.expr - w_clear) == 0
        prim = sp.expand(k_primitive(m.expr) - k_primitive(w_clear)) == 0
        rows.append(RegressionRow(i + 1, m.monomial, m.expr, w_clear, exact, prim))
    return rows


# ---------------------------------------------------------------------------
# verification


@dataclass(frozen=True)
class EquationVerdict:
    index: int
    origin: str
    verdict: ZeroVerdict
    residual: Expr
    max_abs: float | None = None  # numeric residual over sample points
    constrains_f: bool = False

    @property
    def passed(self) -> bool:
        return self.verdict.vanishes

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "origin": self.origin,
            "verdict": self.verdict.value,
            "residual": _text(self.residual),
            "max_abs_residual": self.max_abs,
            "constrains_f": self.constrains_f,
        }


@dataclass(frozen=True)
class VerificationReport:
    equations: tuple[EquationVerdict, ...]
    n_points: int = 0
    seed: int = 0
    notes: tuple[str, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.equations)

    @property
    def probabilistic(self) -> bool:
        return any(e.verdict is ZeroVerdict.ZERO_PROBABILISTIC for e in self.equations)

    @property
    def max_abs(self) -> float | None:
        vals = [e.max_abs for e in self.equations if e.max_abs is not None]
        return max(vals) if vals else None

    def __getitem__(self, i) -> EquationVerdict:
        return self.equations[i]

    def __len__(self):
        return len(self.equations)

    def to_dict(self) -> dict:
        return {
            "pass": self.passed,
            "probabilistic": self.probabilistic,
            "numeric_points": self.n_points,
            "seed": self.seed,
            "max_abs_residual": self.max_abs,
            "equations": [e.to_dict() for e in self.equations],
            "notes": list(self.notes),
        }


def _text(e: Expr) -> str:
    try:
        return to_text(e)
    except ValueError:
        return str(e)


def numeric_max(e: Expr, n_points: int = 20, seed: int = 0, box=DEFAULT_BOX) -> float | None:
    """max |e| over random points of box^3 in (y, z, u); None for opaque input."""
    e = as_expr(e)
    if is_opaque(e) or jet_symbols(e):
        return None
    syms = sorted(e.free_symbols, key=lambda s: s.name)
    if not syms:
        return abs(float(e))
    rng = np.random.default_rng(seed)
    pts = rng.uniform(box[0], box[1], size=(len(syms), n_points))
    with np.errstate(all="ignore"):
        vals = np.asarray(lambdify(e, syms)(*pts), dtype=float)
    return float(np.max(np.abs(vals)))


def check_residuals(
    residuals: Sequence[tuple[str, Expr]],
    n_points: int = 20,
    seed: int = 0,
    notes: Sequence[str] = (),
    tol: float = 1e-9,
) -> VerificationReport:
    out = []
    for i, (origin, r) in enumerate(residuals):
        r = as_expr(r)
        verdict = is_zero(r, seed=seed, tol=tol)
        residual = sp.S.Zero if verdict is ZeroVerdict.ZERO else simplify(r)
        out.append(
            EquationVerdict(
                i + 1,
                origin,
                verdict,
                residual,
                numeric_max(r, n_points, seed),
                constrains_f=verdict is ZeroVerdict.NONZERO and "f" in _fnames(residual),
            )
        )
    return VerificationReport(tuple(out), n_points, seed, tuple(notes))


def _fnames(e):
    return {a.func.__name__ for a in e.atoms(AppliedUndef)}


def verify_conditional_operator(
    f, K=None, L=None, form: str = A_NE_0, n_points: int = 20, seed: int = 0, tol: float = 1e-9
) -> VerificationReport:
    """Substitute (f, K, L) into the determining system and zero-test each member.

    For the a = 0 form the condition is u_y = L (mirrored Case-2 convention)
    and K is ignored.
    """
    form = normalize_form(form)
    f, L = as_expr(f), as_expr(L)
    _check_yzu(f, L)
    bindings = {F_FN: f, L_FN: L}
    if form == A_NE_0:
        K = as_expr(K)
        _check_yzu(K)
        if simplify(K) == 0:
            raise ZeroDivisionError("K vanishes identically; use the a = 0 form")
        bindings[K_FN] = K
    system = generate_determining_system(form)
    residuals = [(m.monomial, substitute(m.expr, bindings)) for m in system]
    return check_residuals(residuals, n_points, seed, tol=tol)


def _check_yzu(*exprs):
    for e in exprs:
        extra = free_coordinates(e) - {"y", "z", "u"}
        if extra or jet_symbols(e):
            raise ValueError(f"{e} must depend on y, z, u only")


# ---------------------------------------------------------------------------
# classification and closed-form families


def classify_case(K, seed: int = 0) -> CaseTag:
    """Case1: K_u = 0, K != 0; Case2: K = 0; Case3: K_u != 0."""
    K = as_expr(K)
    _check_yzu(K)
    if numerator(K) == 0:
        return CaseTag.CASE2
    Ku = sp.diff(K, U)
    verdict = is_zero(Ku, seed=seed)
    if verdict is ZeroVerdict.ZERO:
        return CaseTag.CASE1
    if verdict is ZeroVerdict.ZERO_PROBABILISTIC:
        return CaseTag.UNDECIDED
    return CaseTag.CASE3


def is_exponential_in_u(K) -> bool:
    """K K_uu - K_u^2 = 0, i.e. K = k(y,z) exp(l(y,z) u)."""
    K = as_expr(K)
    return is_zero(K * sp.diff(K, U, 2) - sp.diff(K, U) ** 2).vanishes


@dataclass(frozen=True)
class Case1Operator:
    T: Expr
    K: Expr
    s: Expr
    L: Expr

    @property
    def operator(self) -> ConditionalOperator:
        return ConditionalOperator.a_ne_0(self.K, self.L)


def case1_structural_residuals(K, L) -> list[tuple[str, Expr]]:
    """The first two Case-1 members (those free of f) after substitution."""
    system = case1_system()
    return [
        (m.monomial, substitute(m.expr, {K_FN: as_expr(K), L_FN: as_expr(L)}))
        for m in system.members[:2]
    ]


def case1_from_T(T) -> Case1Operator:
    """K = T_y/T_z, s = T_yz/T_z, L = s u (normalization d = 0)."""
    T = as_expr(T)
    extra = free_coordinates(T) - {"y", "z"}
    if extra:
        raise ValueError(f"T must depend on y, z only, found {sorted(extra)}")
    Tz = sp.diff(T, Z)
    if numerator(Tz) == 0:
        raise ValueError("T_z vanishes identically: this operator belongs to the a = 0 branch")
    K = simplify(sp.diff(T, Y) / Tz)
    s = simplify(sp.diff(T, Y, Z) / Tz)
    L = s * U
    for origin, r in case1_structural_residuals(K, L):
        if not is_zero(r).vanishes:
            raise AssertionError(f"Case-1 member {origin} does not vanish for T = {T}")
    return Case1Operator(T, K, s, sp.expand(L))


def case1_f_condition(K, L) -> Expr:
    """Linear first-order PDE on f (third Case-1 member), denominators cleared."""
    K, L = as_expr(K), as_expr(L)
    if numerator(K) == 0:
        raise ZeroDivisionError("K vanishes identically")
    if not is_zero(sp.diff(K, U)).vanishes:
        raise ValueError("case1_f_condition needs K independent of u")
    eq = case1_system().members[2].expr
    return numerator(substitute(eq, {K_FN: K, L_FN: L}))


@dataclass(frozen=True)
class FirstOrderPair:
    u_y: Expr
    u_z: Expr
    compatibility: Expr

    @property
    def compatible(self) -> ZeroVerdict:
        return is_zero(self.compatibility)


def case2_first_order_system(L, f) -> FirstOrderPair:
    """u_y = L, u_z = (f - L_z)/L_u and the cross-derivative compatibility residual."""
    L, f = as_expr(L), as_expr(f)
    _check_yzu(L, f)
    Lu = sp.diff(L, U)
    if numerator(Lu) == 0:
        raise ValueError(
            "first-order reduction unavailable; condition is u_y=L with f constraint only"
        )
    R = simplify((f - sp.diff(L, Z)) / Lu)
    on_system = {jet_symbol(1, 0): L, jet_symbol(0, 1): R}
    from .jet import total_derivative

    lhs = total_derivative(L, Z).xreplace(on_system)
    rhs = total_derivative(R, Y).xreplace(on_system)
    return FirstOrderPair(L, R, simplify(lhs - rhs))


@dataclass(frozen=True)
class Case3Result:
    K: Expr
    L: Expr
    f: Expr
    constraints: VerificationReport
    system: VerificationReport

    @property
    def passed(self) -> bool:
        return self.constraints.passed and self.system.passed


def case3_construct(s, d, seed: int = 0, tol: float = 1e-9) -> Case3Result:
    """K = exp(u), L = s exp(u) + d, f = (s_y + d_z)/3 with both (s, d) constraints."""
    s, d = as_expr(s), as_expr(d)
    for name, e in (("s", s), ("d", d)):
        extra = free_coordinates(e) - {"y", "z"}
        if extra:
            raise ValueError(f"{name} must depend on y, z only, found {sorted(extra)}")
    K = sp.exp(U)
    L = s * sp.exp(U) + d
    f = simplify((sp.diff(s, Y) + sp.diff(d, Z)) / 3)
    bind = {"s": s, "d": d}
    constraints = check_residuals(
        [(f"(s,d) constraint {i + 1}", substitute(parse(c), bind)) for i, c in enumerate(CASE3_CONSTRAINTS)],
        seed=seed,
        tol=tol,
    )
    system = verify_conditional_operator(f, K, L, A_NE_0, seed=seed, tol=tol)
    return Case3Result(K, L, f, constraints, system)


def case3_solve_f() -> Expr:
    """Solve the u_z^1 member for f on the family K = exp(u), L = s exp(u) + d."""
    s, d = fn("s"), fn("d")
    member = generate_determining_system(A_NE_0).members[2].expr
    member = substitute(member, {K_FN: sp.exp(U), L_FN: s * sp.exp(U) + d})
    F = sp.Dummy("F")
    lin = sp.expand(member.xreplace({F_FN: F}))
    if lin.has(F_FN):
        raise AssertionError("member contains derivatives of f")
    a = sp.diff(lin, F)
    if sp.diff(a, F) != 0:
        raise AssertionError("member is not linear in f")
    return simplify(-(lin - a * F).subs(F, 0) / a)


# ---------------------------------------------------------------------------
# classical symmetries and the light-cone change of variables


def lie_invariance_check(Q: ConditionalOperator, f, seed: int = 0, tol: float = 1e-9) -> VerificationReport:
    """Unconditional invariance of u_yz = f: pr(2)Q (u_yz - f) on u_yz = f only."""
    f = as_expr(f)
    cond = invariance_condition(Q, f).xreplace({jet_symbol(1, 1): f})
    jets = sorted(jet_symbols(cond), key=lambda s: (sum(jet_index(s)), s.name))
    if not jets:
        return check_residuals([("1", cond)], seed=seed, tol=tol)
    coeffs = polynomial_coefficients(cond, jets)
    residuals = []
    for mono, c in sorted(coeffs.items(), reverse=True):
        label = "*".join(
            f"{j.name}^{p}" if p > 1 else j.name for j, p in zip(jets, mono) if p
        ) or "1"
        residuals.append((label, c))
    if not residuals:
        residuals = [("1", sp.S.Zero)]
    return check_residuals(residuals, seed=seed, tol=tol)


CONVENTION = "y = t + x, z = t - x, so u_tt - u_xx = 4 u_yz"


def lightcone_transform(F, direction: str = "forward") -> Expr:
    """forward: f(y,z,u) = F((y+z)/2, (y-z)/2, u)/4; inverse: F(t,x,u) = 4 f(t+x, t-x, u)."""
    F = as_expr(F)
    if direction == "forward":
        return sp.expand(F.xreplace({T_SYM: (Y + Z) / 2, X: (Y - Z) / 2}) / 4)
    if direction == "inverse":
        return sp.expand(4 * F.xreplace({Y: T_SYM + X, Z: T_SYM - X}))
    raise ValueError(f"direction must be forward or inverse, not {direction!r}")
