"""Seeded random expressions for property suites.

Concrete expressions are pole-free on the positive box [1, 2]^3: every
denominator and log argument is built from strictly positive pieces.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import sympy as sp

from .expr import U, Y, Z, Expr, fn

VARS = (Y, Z, U)
OPAQUE = ("K", "L", "f")


@dataclass(frozen=True)
class CorpusConfig:
    depth: int = 3
    opaque: bool = False  # allow K, L, f applications and their derivatives
    exp_log: bool = True
    max_power: int = 3


class ExprGenerator:
    def __init__(self, seed: int = 0, config: CorpusConfig | None = None):
        self.rng = np.random.default_rng(seed)
        self.cfg = config or CorpusConfig()

    def _pick(self, seq):
        return seq[int(self.rng.integers(len(seq)))]

    def constant(self) -> Expr:
        p = int(self.rng.integers(1, 6))
        q = int(self.rng.integers(1, 4))
        return sp.Rational(p, q)

    def leaf(self) -> Expr:
        r = self.rng.random()
        if self.cfg.opaque and r < 0.25:
            app = fn(self._pick(OPAQUE))
            if self.rng.random() < 0.5:
                app = sp.diff(app, self._pick(VARS))
            return app
        if r < 0.75:
            return self._pick(VARS)
        sign = -1 if self.rng.random() < 0.3 else 1
        return sign * self.constant()

    def positive(self, depth: int) -> Expr:
        """Strictly positive (and bounded away from 0) on [1, 2]^3."""
        if depth <= 0:
            return self._pick(VARS) if self.rng.random() < 0.7 else self.constant()
        kind = self._pick(("sum", "prod", "square", "exp") if self.cfg.exp_log else ("sum", "prod", "square"))
        if kind == "sum":
            return self.positive(depth - 1) + self.positive(depth - 1)
        if kind == "prod":
            return self.positive(depth - 1) * self.positive(depth - 1)
        if kind == "square":
            return self.constant() + self.expr(depth - 1, opaque=False) ** 2
        return sp.exp(self.bounded())

    def bounded(self) -> Expr:
        """Small exponents keep exp moderate on the box."""
        a = self._pick(VARS)
        b = self._pick(VARS)
        return (a - b) / self.constant() if self.rng.random() < 0.5 else a / (b + self.constant())

    def expr(self, depth: int | None = None, opaque: bool | None = None) -> Expr:
        depth = self.cfg.depth if depth is None else depth
        saved = self.cfg
        if opaque is not None and opaque != saved.opaque:
            self.cfg = CorpusConfig(saved.depth, opaque, saved.exp_log, saved.max_power)
        try:
            return self._expr(depth)
        finally:
            self.cfg = saved

    def _expr(self, depth: int) -> Expr:
        if depth <= 0 or self.rng.random() < 0.2:
            return self.leaf()
        kinds = ["add", "sub", "mul", "div", "pow"]
        if self.cfg.exp_log:
            kinds += ["exp", "log"]
        kind = self._pick(kinds)
        if kind == "add":
            return self._expr(depth - 1) + self._expr(depth - 1)
        if kind == "sub":
            return self._expr(depth - 1) - self._expr(depth - 1)
        if kind == "mul":
            return self._expr(depth - 1) * self._expr(depth - 1)
        if kind == "div":
            return self._expr(depth - 1) / self.positive(depth - 1)
        if kind == "pow":
            return self._expr(depth - 1) ** int(self.rng.integers(2, self.cfg.max_power + 1))
        if kind == "exp":
            return sp.exp(self.bounded())
        return sp.log(self.positive(depth - 1))

    def point(self, box=(1.0, 2.0)) -> dict:
        lo, hi = box
        return {s.name: float(v) for s, v in zip(VARS, self.rng.uniform(lo, hi, size=3))}


def corpus(n: int, seed: int = 0, config: CorpusConfig | None = None) -> list[Expr]:
    gen = ExprGenerator(seed, config)
    return [gen.expr() for _ in range(n)]
