"""Case-1 reduction: ansatz u = sigma(y,z) phi(omega(y,z)) and the reduced ODE."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

import numpy as np
import sympy as sp
from scipy.optimize import brentq

from .detsys import VerificationReport, case1_from_T, check_residuals
from .dsl import to_text
from .expr import (
    DEFAULT_BOX,
    U,
    W,
    Y,
    Z,
    Expr,
    as_expr,
    fn,
    free_coordinates,
    lambdify,
    numerator,
    simplify,
)

PHI = fn("phi")
DPHI = sp.diff(PHI, W)
D2PHI = sp.diff(PHI, W, 2)
_PHI_VALUE = sp.Symbol("Phi")  # value of phi while rewriting in terms of omega


@dataclass(frozen=True)
class CatalogEntry:
    T: str
    omega: str
    sigma: str


# sigma gauge: sigma = 1 on the transversal z = 1
CATALOG = (
    CatalogEntry("y + z", "y - z", "1"),
    CatalogEntry("y*z", "y/z", "z"),
    CatalogEntry("y^2*z", "y^2/z", "z"),
    CatalogEntry("y + z^2", "z^2 - y", "1"),
    CatalogEntry("exp(y)*z", "z*exp(-y)", "z"),
    CatalogEntry("y/z", "y*z", "1/z"),
)


def check_characteristics(T, omega, sigma, seed: int = 0, tol: float = 1e-9) -> VerificationReport:
    """T_y omega_z + T_z omega_y = 0 and T_y sigma_z + T_z sigma_y = sigma T_yz."""
    T, omega, sigma = as_expr(T), as_expr(omega), as_expr(sigma)
    Ty, Tz, Tyz = sp.diff(T, Y), sp.diff(T, Z), sp.diff(T, Y, Z)
    r_omega = Ty * sp.diff(omega, Z) + Tz * sp.diff(omega, Y)
    r_sigma = Ty * sp.diff(sigma, Z) + Tz * sp.diff(sigma, Y) - sigma * Tyz
    residuals = [("omega characteristic", r_omega), ("sigma characteristic", r_sigma)]
    notes = ()
    if numerator(sp.diff(omega, Y)) == 0 and numerator(sp.diff(omega, Z)) == 0:
        residuals.append(("omega non-constant", sp.S.One))
        notes = ("omega is constant",)
    return check_residuals(residuals, seed=seed, notes=notes, tol=tol)


def solve_characteristics(T, z0=1) -> tuple[Expr, Expr] | None:
    """Symbolic (omega, sigma) for separable or homogeneous dz/dy = T_y/T_z.

    sigma is gauge-fixed to 1 on the transversal z = z0.  Returns None when
    the ODE or any of the inversions is out of reach.
    """
    T = as_expr(T)
    K = simplify(sp.diff(T, Y) / sp.diff(T, Z))
    s = simplify(sp.diff(T, Y, Z) / sp.diff(T, Z))
    zf = sp.Function("zeta")
    ode = sp.Eq(zf(Y).diff(Y), K.subs(Z, zf(Y)))
    C1 = sp.Symbol("C1")
    try:
        omega = None
        if numerator(sp.diff(K, Y)) == 0 and numerator(sp.diff(K, Z)) == 0:
            omega = sp.expand(Z - K * Y)
        else:
            for hint in ("separable", "1st_homogeneous_coeff_best", "1st_linear"):
                try:
                    sols = sp.dsolve(ode, hint=hint)
                except (ValueError, NotImplementedError):
                    continue
                for sol in sols if isinstance(sols, list) else [sols]:
                    eq = sol.lhs - sol.rhs
                    cands = sp.solve(eq.subs(zf(Y), Z), C1)
                    if cands:
                        omega = simplify(cands[0])
                        break
                if omega is not None:
                    break
        if omega is None:
            return None
        # sigma along characteristics: d(log sigma)/dy = s(y, Z(y, w))
        wz = sp.solve(sp.Eq(omega, W), Z)
        wy = sp.solve(sp.Eq(omega.subs(Z, z0), W), Y)
        if not wz or not wy:
            return None
        z_of = wz[0]
        P = sp.integrate(simplify(s.subs(Z, z_of)), Y)
        if P.has(sp.Integral):
            return None
        log_sigma = P - P.subs(Y, wy[0])
        sigma = sp.simplify(sp.exp(log_sigma).subs(W, omega))
        sigma = simplify(sp.powsimp(sp.expand_power_exp(sigma)))
    except (NotImplementedError, ValueError, TypeError):
        return None
    if not check_characteristics(T, omega, sigma).passed:
        return None
    return omega, sigma


# ---------------------------------------------------------------------------
# reduced equation


def ansatz_coefficients(sigma, omega) -> tuple[Expr, Expr, Expr]:
    """(A0, A1, A2) with u_yz = A0 phi + A1 phi' + A2 phi'' for u = sigma phi(omega)."""
    sigma, omega = as_expr(sigma), as_expr(omega)
    wy, wz = sp.diff(omega, Y), sp.diff(omega, Z)
    sy, sz = sp.diff(sigma, Y), sp.diff(sigma, Z)
    A0 = sp.diff(sigma, Y, Z)
    A1 = wy * sz + wz * sy + sigma * sp.diff(omega, Y, Z)
    A2 = sigma * wy * wz
    return simplify(A0), simplify(A1), simplify(A2)


def rederive_ansatz(sigma, omega) -> tuple[Expr, Expr, Expr]:
    """Expand u_yz of sigma*phi(omega) with the chain rule on an opaque phi."""
    sigma, omega = as_expr(sigma), as_expr(omega)
    p = sp.Function("p")
    P0, P1, P2 = sp.symbols("P0 P1 P2")
    uyz = sp.diff(sigma * p(omega), Y, Z).doit()

    def subs_rule(node):
        der = node.expr
        order = sum(int(n) for _, n in der.variable_count)
        return {1: P1, 2: P2}[order]

    uyz = uyz.replace(lambda n: isinstance(n, sp.Subs), subs_rule)
    uyz = uyz.replace(
        lambda n: isinstance(n, sp.Derivative) and n.expr.func == p,
        lambda n: {1: P1, 2: P2}[sum(int(c) for _, c in n.variable_count)],
    )
    uyz = sp.expand(uyz.xreplace({p(omega): P0}))
    return tuple(simplify(uyz.coeff(P)) for P in (P0, P1, P2))


def as_function_of_omega(e, omega) -> Expr | None:
    """Rewrite ``e`` (in y, z and possibly Phi) through w = omega(y, z), if possible."""
    e, omega = as_expr(e), as_expr(omega)
    e = simplify(e)
    if not (free_coordinates(e) & {"y", "z"}):
        return e
    for var in (Y, Z):
        try:
            sols = sp.solve(sp.Eq(omega, W), var)
        except NotImplementedError:
            continue
        for sol in sols:
            cand = simplify(sp.powsimp(sp.expand_power_exp(e.subs(var, sol))))
            if not (free_coordinates(cand) & {"y", "z"}):
                return cand
    return None


@dataclass(frozen=True)
class ReductionPackage:
    sigma: Expr
    omega: Expr
    f: Expr
    A0: Expr
    A1: Expr
    A2: Expr
    c1: Expr  # A1/A2 in (y, z)
    c0: Expr  # A0/A2
    rhs: Expr  # f(y, z, sigma*Phi)/A2
    c1_w: Expr | None  # the same, rewritten in w
    c0_w: Expr | None
    rhs_w: Expr | None
    T: Expr | None = None
    K: Expr | None = None
    s: Expr | None = None

    @property
    def symbolic(self) -> bool:
        return None not in (self.c1_w, self.c0_w, self.rhs_w)

    @property
    def ode(self) -> Expr | None:
        """phi'' + c1 phi' + c0 phi - rhs, an expression that must vanish."""
        if not self.symbolic:
            return None
        return sp.expand(D2PHI + self.c1_w * DPHI + self.c0_w * PHI - self.rhs_w)

    @property
    def ode_text(self) -> str | None:
        if not self.symbolic:
            return None
        lhs = sp.expand(D2PHI + self.c1_w * DPHI + self.c0_w * PHI)
        return f"{to_text(lhs)} = {to_text(self.rhs_w)}"

    def g(self) -> Callable:
        """phi'' = g(w, phi, phi') for the numeric integrator."""
        if not self.symbolic:
            raise ValueError("no symbolic reduced equation available")
        expr = self.rhs_w - self.c1_w * DPHI - self.c0_w * PHI
        Phi, dPhi = sp.symbols("Phi dPhi")
        expr = expr.xreplace({DPHI: dPhi}).xreplace({PHI: Phi})
        return lambdify(expr, [W, Phi, dPhi])

    def to_dict(self) -> dict:
        def t(e):
            return None if e is None else to_text(e)

        return {
            "T": t(self.T),
            "K": t(self.K),
            "s": t(self.s),
            "omega": t(self.omega),
            "sigma": t(self.sigma),
            "f": t(self.f),
            "A0": t(self.A0),
            "A1": t(self.A1),
            "A2": t(self.A2),
            "normalized_ode": self.ode_text,
        }


def reduced_equation(sigma, omega, f, T=None) -> ReductionPackage:
    """Assemble A0 phi + A1 phi' + A2 phi'' = f and normalize by A2."""
    sigma, omega, f = as_expr(sigma), as_expr(omega), as_expr(f)
    if numerator(sp.diff(omega, Y)) == 0 and numerator(sp.diff(omega, Z)) == 0:
        raise ValueError("omega is constant")
    A0, A1, A2 = ansatz_coefficients(sigma, omega)
    if numerator(A2) == 0:
        raise ValueError("A2 = sigma*omega_y*omega_z vanishes: degenerate ansatz")
    c1 = simplify(A1 / A2)
    c0 = simplify(A0 / A2)
    rhs = simplify(f.xreplace({U: sigma * _PHI_VALUE}) / A2)
    c1_w, c0_w, rhs_w = (as_function_of_omega(e, omega) for e in (c1, c0, rhs))
    if rhs_w is not None:
        rhs_w = rhs_w.xreplace({_PHI_VALUE: PHI})
    extra = {}
    if T is not None:
        op = case1_from_T(T)
        extra = {"T": op.T, "K": op.K, "s": op.s}
    return ReductionPackage(sigma, omega, f, A0, A1, A2, c1, c0, rhs, c1_w, c0_w, rhs_w, **extra)


class Reducibility(enum.Enum):
    SYMBOLIC = "ReducibleSymbolic"
    NUMERIC = "ReducibleNumeric"
    NOT = "NotReducible"


def level_set_pairs(omega, n_pairs=20, box=DEFAULT_BOX * 2, seed=0, max_tries=5000):
    """Pairs of distinct points of ``box`` = (y0, y1, z0, z1) with equal omega."""
    om = lambdify(as_expr(omega), [Y, Z])
    y0, y1, z0, z1 = box
    rng = np.random.default_rng(seed)
    pairs = []
    for _ in range(max_tries):
        ya, za = rng.uniform(y0, y1), rng.uniform(z0, z1)
        target = float(om(ya, za))
        yb = rng.uniform(y0, y1)
        g = lambda z: float(om(yb, z)) - target  # noqa: E731
        ga, gb = g(z0), g(z1)
        if not (np.isfinite(ga) and np.isfinite(gb)) or ga * gb > 0:
            continue
        zb = brentq(g, z0, z1, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        if np.hypot(ya - yb, za - zb) < 1e-3:
            continue
        pairs.append(((ya, za), (yb, zb)))
        if len(pairs) == n_pairs:
            return pairs
    raise RuntimeError(f"found only {len(pairs)} level-set pairs in the sampling box")


def reducibility_test(
    pkg: ReductionPackage,
    symbolic: bool = True,
    n_pairs: int = 20,
    box=DEFAULT_BOX * 2,
    seed: int = 0,
    tol: float = 1e-9,
) -> Reducibility:
    """ReducibleSymbolic if the rewrite in w succeeded, else a numeric level-set test."""
    if symbolic and pkg.symbolic:
        return Reducibility.SYMBOLIC
    Phi = _PHI_VALUE
    funcs = [lambdify(e, [Y, Z, Phi]) for e in (pkg.c1, pkg.c0, pkg.rhs)]
    probes = (0.5, 1.3) if pkg.rhs.has(Phi) else (0.0,)
    for p, q in level_set_pairs(pkg.omega, n_pairs, box, seed):
        for fnc in funcs:
            for v in probes:
                a, b = float(fnc(*p, v)), float(fnc(*q, v))
                if abs(a - b) > tol * max(1.0, abs(a), abs(b)):
                    return Reducibility.NOT
    return Reducibility.NUMERIC


@dataclass
class AssembledSolution:
    """u(y, z) = sigma(y, z) phi(omega(y, z))."""

    pkg: ReductionPackage
    phi: Callable
    dphi: Callable | None = None
    d2phi: Callable | None = None
    span: tuple[float, float] | None = None

    def __post_init__(self):
        self._sigma = lambdify(self.pkg.sigma, [Y, Z])
        self._omega = lambdify(self.pkg.omega, [Y, Z])
        if self.span is None:
            self.span = getattr(self.phi, "span", None)

    def omega(self, y, z):
        w = np.asarray(self._omega(y, z), dtype=float)
        if self.span is not None:
            lo, hi = self.span
            if np.any(w < lo - 1e-12) or np.any(w > hi + 1e-12):
                raise ValueError(
                    f"omega range [{w.min():.6g}, {w.max():.6g}] leaves the profile domain {self.span}"
                )
        return w

    def __call__(self, y, z):
        w = self.omega(y, z)
        return np.asarray(self._sigma(y, z), dtype=float) * self.phi(w)

    def residual_exact(self, y, z):
        """A0 phi + A1 phi' + A2 phi'' - f evaluated through the chain rule."""
        if self.dphi is None or self.d2phi is None:
            raise ValueError("derivatives of phi are required")
        w = self.omega(y, z)
        A = [lambdify(a, [Y, Z]) for a in (self.pkg.A0, self.pkg.A1, self.pkg.A2)]
        u = self(y, z)
        f = lambdify(self.pkg.f, [Y, Z, U])(y, z, u)
        return A[0](y, z) * self.phi(w) + A[1](y, z) * self.dphi(w) + A[2](y, z) * self.d2phi(w) - f


def assemble_solution(pkg: ReductionPackage, phi, dphi=None, d2phi=None, span=None) -> AssembledSolution:
    """Glue a profile phi(w) (closed form or dense numeric solution) into u(y, z)."""
    if dphi is None and hasattr(phi, "derivative"):
        dphi = phi.derivative
    if d2phi is None and hasattr(phi, "second_derivative"):
        d2phi = phi.second_derivative
    return AssembledSolution(pkg, phi, dphi, d2phi, span)
