"""Randomized kernel property suites.

Each suite draws ``n`` expressions from a seeded corpus and returns a
:class:`SuiteResult`; a case fails when its identity does not hold.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

from .corpus import CorpusConfig, ExprGenerator
from .dsl import parse, to_text
from .expr import U, Y, Z, ZeroVerdict, diff, eval_at, is_zero, simplify


@dataclass
class SuiteResult:
    name: str
    n: int
    failures: list[str] = field(default_factory=list)
    worst: float = 0.0  # largest relative discrepancy, numeric suites only
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return not self.failures

    def summary(self) -> str:
        return f"{self.name}: {self.n - len(self.failures)}/{self.n} ok, worst {self.worst:.2e}, {self.seconds:.1f}s"


def _rel(a: float, b: float, floor: float = 0.0) -> float:
    if a == b:
        return 0.0
    return abs(a - b) / max(abs(a), abs(b), floor, 1e-300)


def commute_suite(n: int = 1000, seed: int = 1) -> SuiteResult:
    """D_y D_z e == D_z D_y e with a symbolic ZERO verdict, opaque functions allowed."""
    res, t0 = SuiteResult("derivative commutation", n), time.perf_counter()
    gen = ExprGenerator(seed, CorpusConfig(opaque=True))
    for _ in range(n):
        e = gen.expr()
        d = diff(diff(e, Y), Z) - diff(diff(e, Z), Y)
        if is_zero(d, mode="symbolic") is not ZeroVerdict.ZERO:
            res.failures.append(to_text(e))
    res.seconds = time.perf_counter() - t0
    return res


def roundtrip_suite(n: int = 1000, seed: int = 2) -> SuiteResult:
    """parse(to_text(e)) is structurally identical to e."""
    res, t0 = SuiteResult("parser round-trip", n), time.perf_counter()
    gen = ExprGenerator(seed, CorpusConfig(opaque=True))
    for _ in range(n):
        e = gen.expr()
        try:
            ok = parse(to_text(e)) == e
        except Exception as exc:  # any parser error is a failed case
            ok = False
            e = f"{e}  ({type(exc).__name__})"
        if not ok:
            res.failures.append(str(e))
    res.seconds = time.perf_counter() - t0
    return res


def simplify_suite(n: int = 1000, seed: int = 3, points: int = 20, rtol: float = 1e-9) -> SuiteResult:
    """simplify(e) agrees with e at random points of [1, 2]^3."""
    res, t0 = SuiteResult("simplifier value preservation", n), time.perf_counter()
    gen = ExprGenerator(seed)
    for _ in range(n):
        e = gen.expr()
        s = simplify(e)
        for _ in range(points):
            p = gen.point()
            r = _rel(eval_at(e, p), eval_at(s, p))
            res.worst = max(res.worst, r)
            if r > rtol:
                res.failures.append(f"{to_text(e)} at {p}")
                break
    res.seconds = time.perf_counter() - t0
    return res


def diff_fd_suite(n: int = 1000, seed: int = 4, h: float = 1e-5, rtol: float = 1e-6) -> SuiteResult:
    """diff(e, v) against a central difference; relative error floored at unit scale."""
    res, t0 = SuiteResult("diff vs finite difference", n), time.perf_counter()
    gen = ExprGenerator(seed)
    for i in range(n):
        e = gen.expr()
        v = (Y, Z, U)[i % 3]
        p = gen.point()
        exact = eval_at(diff(e, v), p)
        hi, lo = dict(p), dict(p)
        hi[v.name] += h
        lo[v.name] -= h
        fd = (eval_at(e, hi) - eval_at(e, lo)) / (2 * h)
        r = abs(exact - fd) / max(1.0, abs(exact))
        res.worst = max(res.worst, r)
        if r > rtol:
            res.failures.append(f"d/d{v} {to_text(e)} at {p}")
    res.seconds = time.perf_counter() - t0
    return res


SUITES = (commute_suite, simplify_suite, roundtrip_suite, diff_fd_suite)


def run_all(n: int = 1000) -> list[SuiteResult]:
    return [suite(n) for suite in SUITES]
