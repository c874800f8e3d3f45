"""Fixed-step numerics: cross-stencil residuals, RK4 for reduced ODEs and characteristics."""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import sympy as sp
from scipy.interpolate import CubicHermiteSpline

from .expr import U, W, Y, Z, Expr, as_expr, lambdify
from .reduction import DPHI, PHI, ReductionPackage, assemble_solution

DEFAULT_BOX = (1.0, 2.0, 1.0, 2.0)
DEFAULT_H = 1e-3


class SingularityError(ValueError):
    pass


# ---------------------------------------------------------------------------
# singularity policy


def denominator_factors(e) -> list[Expr]:
    e = sp.together(as_expr(e))
    den = sp.fraction(e)[1]
    factors = []
    for fac in sp.Mul.make_args(sp.factor(den)):
        base = fac.base if fac.is_Pow else fac
        if base.free_symbols:
            factors.append(base)
    # log arguments must stay positive
    factors += [lg.args[0] for lg in as_expr(e).atoms(sp.log)]
    return factors


def check_span(e, span, var=W):
    """Raise if a denominator of ``e`` has a real root in the closed interval."""
    lo, hi = sorted(span)
    for fac in denominator_factors(e):
        if fac.free_symbols - {var}:
            continue
        try:
            roots = sp.Poly(fac, var).real_roots()
        except sp.PolynomialError:
            grid = np.linspace(lo, hi, 2001)
            vals = lambdify(fac, [var])(grid)
            if np.any(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0):
                raise SingularityError(f"{fac} vanishes on [{lo}, {hi}]")
            continue
        for r in roots:
            if lo <= float(r) <= hi:
                raise SingularityError(f"{fac} vanishes at {var} = {float(r):.6g} inside [{lo}, {hi}]")


def check_box(e, box=DEFAULT_BOX, n=101):
    """Raise if a denominator of ``e`` vanishes or changes sign on the (y, z) box."""
    y0, y1, z0, z1 = box
    yy, zz = np.meshgrid(np.linspace(y0, y1, n), np.linspace(z0, z1, n), indexing="ij")
    for fac in denominator_factors(e):
        if fac.free_symbols - {Y, Z}:
            continue
        vals = np.asarray(lambdify(fac, [Y, Z])(yy, zz), dtype=float) * np.ones_like(yy)
        if np.any(vals == 0) or vals.min() * vals.max() < 0:
            raise SingularityError(f"{fac} vanishes on the box {box}")


# ---------------------------------------------------------------------------
# grids and finite differences


@dataclass
class Grid2D:
    y0: float
    z0: float
    h: float
    values: np.ndarray  # shape (ny, nz), row index along y

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or min(self.values.shape) < 5:
            raise ValueError("a grid needs at least 5 nodes per direction")
        if not self.h > 0:
            raise ValueError("grid step must be positive")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid values must be finite")

    @property
    def shape(self):
        return self.values.shape

    def axes(self):
        ny, nz = self.shape
        return self.y0 + self.h * np.arange(ny), self.z0 + self.h * np.arange(nz)

    @classmethod
    def from_callable(cls, u: Callable, box=DEFAULT_BOX, h=DEFAULT_H) -> "Grid2D":
        ys, zs = _nodes(box, h)
        yy, zz = np.meshgrid(ys, zs, indexing="ij")
        return cls(ys[0], zs[0], h, np.broadcast_to(u(yy, zz), yy.shape))

    def dumps(self) -> str:
        ny, nz = self.shape
        buf = io.StringIO()
        buf.write(f"{ny} {nz} {float(self.y0)!r} {float(self.z0)!r} {float(self.h)!r}\n")
        np.savetxt(buf, self.values, fmt="%.17g")
        return buf.getvalue()

    @classmethod
    def loads(cls, text: str) -> "Grid2D":
        header, _, body = text.partition("\n")
        ny, nz, y0, z0, h = header.split()
        values = np.loadtxt(io.StringIO(body), ndmin=2)
        if values.shape != (int(ny), int(nz)):
            raise ValueError(f"header says {ny}x{nz}, body has {values.shape}")
        return cls(float(y0), float(z0), float(h), values)


def _nodes(box, h):
    y0, y1, z0, z1 = box
    ny = int(round((y1 - y0) / h)) + 1
    nz = int(round((z1 - z0) / h)) + 1
    return y0 + h * np.arange(ny), z0 + h * np.arange(nz)


@dataclass
class ResidualStats:
    max_abs: float
    mean_abs: float
    n_nodes: int
    h: float
    slope: float | None = None
    ratio: float | None = None  # residual(h) / residual(h/2)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("max_abs", "mean_abs", "n_nodes", "h", "slope", "ratio")}


def cross_stencil(u: Callable, y, z, h):
    return (u(y + h, z + h) - u(y + h, z - h) - u(y - h, z + h) + u(y - h, z - h)) / (4 * h * h)


def fd_mixed_residual(u, f=0, h: float = DEFAULT_H, box=DEFAULT_BOX) -> ResidualStats:
    """Cross-stencil u_yz minus f(y, z, u) over the box nodes.

    ``u`` is a Grid2D (interior nodes only) or a callable evaluated with a
    ghost margin h around the box.
    """
    f = as_expr(f)
    fv = lambdify(f, [Y, Z, U])
    if isinstance(u, Grid2D):
        g, h = u.values, u.h
        stencil = (g[2:, 2:] - g[2:, :-2] - g[:-2, 2:] + g[:-2, :-2]) / (4 * h * h)
        ys, zs = u.axes()
        yy, zz = np.meshgrid(ys[1:-1], zs[1:-1], indexing="ij")
        res = stencil - fv(yy, zz, g[1:-1, 1:-1])
    else:
        check_box(f, box)
        ys, zs = _nodes(box, h)
        yy, zz = np.meshgrid(ys, zs, indexing="ij")
        res = cross_stencil(u, yy, zz, h) - fv(yy, zz, u(yy, zz))
    res = np.asarray(res, dtype=float)
    if not np.all(np.isfinite(res)):
        raise FloatingPointError("NaN/Inf in the residual")
    return ResidualStats(float(np.max(np.abs(res))), float(np.mean(np.abs(res))), res.size, h)


def convergence(u, f=0, h: float = DEFAULT_H, box=DEFAULT_BOX) -> ResidualStats:
    """Residual at h and h/2; slope = log2(r(h)/r(h/2))."""
    coarse = fd_mixed_residual(u, f, h, box)
    fine = fd_mixed_residual(u, f, h / 2, box)
    ratio = coarse.max_abs / fine.max_abs if fine.max_abs > 0 else float("inf")
    coarse.ratio = ratio
    coarse.slope = float(np.log2(ratio)) if np.isfinite(ratio) and ratio > 0 else float("nan")
    return coarse


# ---------------------------------------------------------------------------
# RK4


def rk4_step(rhs, x, state, dx):
    k1 = rhs(x, state)
    k2 = rhs(x + dx / 2, state + dx / 2 * k1)
    k3 = rhs(x + dx / 2, state + dx / 2 * k2)
    k4 = rhs(x + dx, state + dx * k3)
    return state + dx / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


@dataclass
class DenseODESolution:
    """phi on a span with cubic Hermite interpolation of (phi, phi')."""

    w: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    d2phi: np.ndarray
    g: Callable = field(repr=False)

    def __post_init__(self):
        order = np.argsort(self.w)
        self.w, self.phi, self.dphi, self.d2phi = (a[order] for a in (self.w, self.phi, self.dphi, self.d2phi))
        self._phi = CubicHermiteSpline(self.w, self.phi, self.dphi)
        self._dphi = CubicHermiteSpline(self.w, self.dphi, self.d2phi)

    @property
    def span(self) -> tuple[float, float]:
        return float(self.w[0]), float(self.w[-1])

    def _check(self, w):
        w = np.asarray(w, dtype=float)
        lo, hi = self.span
        if np.any(w < lo - 1e-12) or np.any(w > hi + 1e-12):
            raise ValueError(f"w outside the integrated span {self.span}")
        return w

    def __call__(self, w):
        return self._phi(self._check(w))

    def derivative(self, w):
        return self._dphi(self._check(w))

    def second_derivative(self, w):
        w = self._check(w)
        return self.g(w, self._phi(w), self._dphi(w))


def _ode_rhs(g) -> tuple[Callable, Expr | None]:
    if callable(g) and not isinstance(g, (sp.Basic, str)):
        return g, None
    expr = as_expr(g)
    Phi, dPhi = sp.symbols("Phi dPhi")
    flat = expr.xreplace({DPHI: dPhi}).xreplace({PHI: Phi})
    return lambdify(flat, [W, Phi, dPhi]), flat


def integrate_reduced_ode(
    g,
    span: tuple[float, float],
    initial: tuple[float, float],
    step: float = 1e-3,
    singular_points: Sequence[float] = (),
) -> DenseODESolution:
    """Classical RK4 for phi'' = g(w, phi, phi') from span[0] to span[1].

    ``g`` is a callable or an expression in w, phi, phi_w.  The step is shrunk
    so that it divides the span exactly.
    """
    a, b = map(float, span)
    g, expr = _ode_rhs(g)
    lo, hi = min(a, b), max(a, b)
    for p in singular_points:
        if lo <= p <= hi:
            raise SingularityError(f"span {span} crosses the singular point {p}")
    if expr is not None:
        check_span(expr, (lo, hi))
    n = max(1, int(np.ceil(abs(b - a) / step - 1e-9)))
    dw = (b - a) / n

    def rhs(w, state):
        return np.array([state[1], g(w, state[0], state[1])], dtype=float)

    ws = a + dw * np.arange(n + 1)
    states = np.empty((n + 1, 2))
    states[0] = initial
    for i in range(n):
        states[i + 1] = rk4_step(rhs, ws[i], states[i], dw)
    d2 = np.array([g(w, p, q) for w, (p, q) in zip(ws, states)], dtype=float)
    return DenseODESolution(ws, states[:, 0], states[:, 1], d2, g)


def integrate_two_sided(g, w0, span, initial, step=1e-3, singular_points=()) -> DenseODESolution:
    """Integrate from an interior initial point w0 to both ends of ``span``."""
    lo, hi = span
    parts = []
    if w0 > lo:
        parts.append(integrate_reduced_ode(g, (w0, lo), initial, step, singular_points))
    if w0 < hi:
        parts.append(integrate_reduced_ode(g, (w0, hi), initial, step, singular_points))
    if len(parts) == 1:
        return parts[0]
    left, right = parts
    cat = [np.concatenate([getattr(left, k)[:-1], getattr(right, k)]) for k in ("w", "phi", "dphi", "d2phi")]
    return DenseODESolution(*cat, g=right.g)


# ---------------------------------------------------------------------------
# characteristics dz/dy = K(y, z)


@dataclass
class Curve:
    seed: tuple[float, float]
    y: np.ndarray
    z: np.ndarray
    truncated: bool = False


def integrate_characteristics(
    K, seeds: Sequence[tuple[float, float]], span: tuple[float, float], step: float = 1e-3, bound: float = 1e6
) -> list[Curve]:
    """One RK4 curve per seed, from the seed's y to each end of ``span``."""
    Kf = lambdify(as_expr(K), [Y, Z])

    def rhs(y, z):
        return np.asarray(Kf(y, z), dtype=float)

    curves = []
    for y0, z0 in seeds:
        pieces, truncated = [], False
        for end in (span[0], span[1]):
            if end == y0:
                continue
            n = max(1, int(np.ceil(abs(end - y0) / step - 1e-9)))
            dy = (end - y0) / n
            ys, zs = [y0], [z0]
            for i in range(n):
                z_next = float(rk4_step(rhs, ys[-1], np.array(zs[-1]), dy))
                if not np.isfinite(z_next) or abs(z_next) > bound:
                    truncated = True
                    break
                ys.append(y0 + dy * (i + 1))
                zs.append(z_next)
            pieces.append((np.array(ys), np.array(zs)))
        ys = np.concatenate([p[0][::-1] if p[0][-1] < y0 else p[0] for p in pieces] or [np.array([y0])])
        zs = np.concatenate([p[1][::-1] if p[0][-1] < y0 else p[1] for p in pieces] or [np.array([z0])])
        order = np.argsort(ys, kind="stable")
        ys, idx = np.unique(ys[order], return_index=True)
        curves.append(Curve((y0, z0), ys, zs[order][idx], truncated))
    return curves


def invariant_variation(curve: Curve, omega) -> float:
    """Relative spread of a symbolic invariant along a numerically integrated curve."""
    vals = np.asarray(lambdify(as_expr(omega), [Y, Z])(curve.y, curve.z), dtype=float)
    scale = max(1.0, float(np.max(np.abs(vals))))
    return float((vals.max() - vals.min()) / scale)


def numeric_invariant(K, y_ref: float, steps: int = 200) -> Callable:
    """omega(y, z) = z-intercept at y = y_ref of the characteristic through (y, z)."""
    Kf = lambdify(as_expr(K), [Y, Z])

    def omega(y, z):
        y = np.asarray(y, dtype=float)
        z = np.array(z, dtype=float) * np.ones_like(y)
        dy = (y_ref - y) / steps
        yc = y.copy()
        for _ in range(steps):
            z = rk4_step(lambda yy, zz: np.asarray(Kf(yy, zz), dtype=float) * np.ones_like(zz), yc, z, dy)
            yc = yc + dy
        return z

    return omega


# ---------------------------------------------------------------------------
# reduce, integrate, assemble, measure


def omega_range(omega, box=DEFAULT_BOX, margin: float = 0.0, n: int = 201) -> tuple[float, float]:
    """Range of omega over the box grown by ``margin`` (sampled, plus a 1e-6 pad)."""
    y0, y1, z0, z1 = box
    ys = np.linspace(y0 - margin, y1 + margin, n)
    zs = np.linspace(z0 - margin, z1 + margin, n)
    yy, zz = np.meshgrid(ys, zs, indexing="ij")
    vals = np.asarray(lambdify(as_expr(omega), [Y, Z])(yy, zz), dtype=float) * np.ones_like(yy)
    lo, hi = float(vals.min()), float(vals.max())
    pad = 1e-6 * max(1.0, hi - lo)
    return lo - pad, hi + pad


@dataclass
class EndToEnd:
    solution: DenseODESolution
    stats: ResidualStats
    span: tuple[float, float]

    def to_dict(self) -> dict:
        return {"omega_span": list(self.span), "ode_steps": len(self.solution.w) - 1, **self.stats.to_dict()}


def end_to_end(
    pkg: ReductionPackage,
    w0: float,
    initial: tuple[float, float],
    box=DEFAULT_BOX,
    h: float = DEFAULT_H,
    step: float = 1e-3,
    halve: bool = True,
) -> EndToEnd:
    """Integrate the reduced ODE across omega(box), assemble u and take the FD residual.

    With ``halve`` the residual is also measured at h/2 and the ratio recorded.
    """
    if not pkg.symbolic:
        raise ValueError("numeric reduction needs a symbolic reduced equation")
    lo, hi = omega_range(pkg.omega, box, margin=h)
    lo, hi = min(lo, w0), max(hi, w0)
    g = pkg.rhs_w - pkg.c1_w * DPHI - pkg.c0_w * PHI
    sol = integrate_two_sided(g, w0, (lo, hi), initial, step)
    u = assemble_solution(pkg, sol)
    stats = convergence(u, pkg.f, h, box) if halve else fd_mixed_residual(u, pkg.f, h, box)
    return EndToEnd(sol, stats, (lo, hi))
