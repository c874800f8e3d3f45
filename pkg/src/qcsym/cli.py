"""Command-line front end.

    qcsym [--json] [--seed N] [--tol X] VERB [options]
    qcsym --session FILE

Exit status: 0 when every verdict passes, 1 when a verification fails,
2 on usage or parse errors.
"""
from __future__ import annotations

import argparse
import shlex
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import sympy as sp

from . import detsys, numeric, reduction
from .dsl import DSLSyntaxError, parse, parse_declaration, to_text
from .expr import (
    DEFAULT_DECLARATIONS,
    Y,
    Z,
    DependencyError,
    SingularDomainError,
    is_zero,
    lambdify,
    simplify,
    substitute,
)
from .jet import A_EQ_0, A_NE_0
from .report import Report, dumps

DEFAULT_SEED = 20240611
DEFAULT_TOL = 1e-9
INPUT_ERRORS = (
    DSLSyntaxError,
    DependencyError,
    SingularDomainError,
    numeric.SingularityError,
    ValueError,
    ZeroDivisionError,
)


@dataclass
class Context:
    """Declarations and ``let`` definitions visible to expression arguments."""

    decls: dict[str, tuple[str, ...]] = field(default_factory=lambda: dict(DEFAULT_DECLARATIONS))
    defs: dict[str, sp.Expr] = field(default_factory=dict)

    def expr(self, text: str) -> sp.Expr:
        e = parse(text, self.decls)
        if self.defs:
            e = e.xreplace({sp.Symbol(k): v for k, v in self.defs.items()})
        return e


def _text(e) -> str:
    try:
        return to_text(e)
    except ValueError:
        return str(e)


def _floats(text: str, n: int) -> tuple[float, ...]:
    vals = tuple(float(v) for v in text.split(","))
    if len(vals) != n:
        raise argparse.ArgumentTypeError(f"expected {n} comma-separated numbers, got {text!r}")
    return vals


def _box(text: str):
    return _floats(text, 4)


def _init(text: str):
    return _floats(text, 3)


# ---------------------------------------------------------------------------
# commands


def cmd_detsys(args, ctx: Context, rep: Report) -> None:
    form = detsys.normalize_form(args.form)
    if args.ku_zero and form != A_NE_0:
        raise ValueError("--ku-zero applies to the a-ne-0 form only")
    which = "case1" if args.ku_zero else form
    rows = detsys.regression(which)
    rep.result.update(
        form=args.form,
        specialization="K_u=0" if args.ku_zero else None,
        n_equations=len(rows),
        equations=[
            {
                "index": r.index,
                "monomial": r.monomial,
                "generated": _text(r.generated),
                "transcribed": _text(r.transcribed),
                "exact": r.exact,
                "match_up_to_k_power": r.up_to_k_power,
            }
            for r in rows
        ],
    )
    rep.result["match"] = rep.verdict("generated system equals transcription", all(r.exact for r in rows))


def cmd_verify(args, ctx: Context, rep: Report) -> None:
    form = detsys.normalize_form(args.form)
    f, L = ctx.expr(args.f), ctx.expr(args.L)
    K = ctx.expr(args.K) if form == A_NE_0 else None
    if form == A_NE_0 and args.K is None:
        raise ValueError("--K is required for the a-ne-0 form")
    rep.result.update(form=args.form, f=_text(f), K=None if K is None else _text(K), L=_text(L))
    rep.add_verification(
        "determining system",
        detsys.verify_conditional_operator(f, K, L, form, n_points=args.points, seed=rep.seed, tol=rep.tol),
    )


def cmd_classify(args, ctx: Context, rep: Report) -> None:
    K = ctx.expr(args.K)
    tag = detsys.classify_case(K, seed=rep.seed)
    rep.result.update(K=_text(K), case=tag.value)
    if tag is detsys.CaseTag.CASE3:
        rep.result["exponential_in_u"] = detsys.is_exponential_in_u(K)
    if tag is detsys.CaseTag.UNDECIDED:
        rep.warnings.append("K_u vanishes only probabilistically; case not decided")
    rep.verdict("case decided", tag is not detsys.CaseTag.UNDECIDED)


def cmd_case1(args, ctx: Context, rep: Report) -> None:
    op = detsys.case1_from_T(ctx.expr(args.T))
    rep.result.update(T=_text(op.T), K=_text(op.K), s=_text(op.s), L=_text(op.L))
    structural = detsys.check_residuals(detsys.case1_structural_residuals(op.K, op.L), seed=rep.seed, tol=rep.tol)
    rep.add_verification("structural members", structural)
    cond = detsys.case1_f_condition(op.K, op.L)
    rep.result["f_condition"] = _text(sp.factor_terms(cond)) + " = 0"
    if args.f is not None:
        f = ctx.expr(args.f)
        rep.result["f"] = _text(f)
        r = substitute(cond, {detsys.F_FN: f})
        verdict = is_zero(r, seed=rep.seed, tol=rep.tol)
        rep.result["f_condition_residual"] = _text(simplify(r))
        rep.result["f_condition_verdict"] = verdict.value
        rep.verdict("f-condition", verdict.vanishes)
        rep.add_verification(
            "determining system",
            detsys.verify_conditional_operator(f, op.K, op.L, A_NE_0, seed=rep.seed, tol=rep.tol),
        )


def cmd_case2(args, ctx: Context, rep: Report) -> None:
    L, f = ctx.expr(args.L), ctx.expr(args.f)
    rep.result.update(L=_text(L), f=_text(f), condition="u_y = L")
    rep.add_verification(
        "determining system",
        detsys.verify_conditional_operator(f, None, L, A_EQ_0, seed=rep.seed, tol=rep.tol),
    )
    try:
        pair = detsys.case2_first_order_system(L, f)
    except ValueError as exc:
        rep.result["first_order_system"] = None
        rep.warnings.append(str(exc))
        return
    verdict = pair.compatible
    rep.result["first_order_system"] = {
        "u_y": _text(pair.u_y),
        "u_z": _text(pair.u_z),
        "compatibility": _text(pair.compatibility),
        "compatibility_verdict": verdict.value,
    }


def cmd_case3(args, ctx: Context, rep: Report) -> None:
    res = detsys.case3_construct(ctx.expr(args.s), ctx.expr(args.d), seed=rep.seed, tol=rep.tol)
    rep.result.update(K=_text(res.K), L=_text(res.L), f=_text(res.f))
    rep.add_verification("(s,d) constraints", res.constraints)
    rep.add_verification("determining system", res.system)


def cmd_reduce(args, ctx: Context, rep: Report) -> None:
    T = ctx.expr(args.T) if args.T is not None else None
    omega = ctx.expr(args.omega) if args.omega is not None else None
    sigma = ctx.expr(args.sigma) if args.sigma is not None else None
    f = ctx.expr(args.f)
    if omega is None or sigma is None:
        if T is None:
            raise ValueError("--omega and --sigma are required without --T")
        solved = reduction.solve_characteristics(T)
        if solved is None:
            raise ValueError(f"no closed-form characteristics for T = {_text(T)}; pass --omega/--sigma")
        omega = omega if omega is not None else solved[0]
        sigma = sigma if sigma is not None else solved[1]
        rep.result["characteristics_solved"] = True
    if T is not None:
        chk = reduction.check_characteristics(T, omega, sigma, seed=rep.seed, tol=rep.tol)
        rep.add_verification("characteristics", chk)
        if not chk.passed:
            return
    else:
        rep.warnings.append("no T given: characteristic check skipped")
    pkg = reduction.reduced_equation(sigma, omega, f, T)
    rep.result.update(pkg.to_dict())
    verdict = reduction.reducibility_test(pkg, seed=rep.seed, tol=rep.tol)
    rep.result["reducibility"] = verdict.value
    rep.verdict("reducible", verdict is not reduction.Reducibility.NOT)
    if verdict is reduction.Reducibility.NUMERIC:
        rep.warnings.append("reducibility established numerically on level-set pairs only")
    if args.numeric and verdict is not reduction.Reducibility.NOT:
        if not pkg.symbolic:
            raise ValueError("--numeric needs a reduced equation written in omega")
        w0, phi0, dphi0 = args.init
        run = numeric.end_to_end(pkg, w0, (phi0, dphi0), args.box, args.h, args.step)
        rep.result["numeric"] = {
            "box": list(args.box),
            "initial": {"w0": w0, "phi": phi0, "dphi": dphi0},
            "ode_step": args.step,
            "residual_tol": args.residual_tol,
            **run.to_dict(),
        }
        rep.verdict("FD residual below residual_tol", run.stats.max_abs < args.residual_tol)


def cmd_transform(args, ctx: Context, rep: Report) -> None:
    F = ctx.expr(args.F)
    out = detsys.lightcone_transform(F, args.direction)
    rep.result.update(direction=args.direction, input=_text(F), output=_text(out))
    if args.round_trip:
        back = detsys.lightcone_transform(out, "inverse" if args.direction == "forward" else "forward")
        rep.result["round_trip"] = _text(back)
        rep.verdict("round trip is the identity", simplify(back - F) == 0)


def cmd_check_numeric(args, ctx: Context, rep: Report) -> None:
    f = ctx.expr(args.f)
    rep.result.update(f=_text(f), residual_tol=args.residual_tol)
    if args.grid is not None:
        grid = numeric.Grid2D.loads(Path(args.grid).read_text())
        stats = numeric.fd_mixed_residual(grid, f)
        rep.result.update(grid=args.grid, shape=list(grid.shape))
    else:
        if args.u is None:
            raise ValueError("one of --u or --grid is required")
        u = ctx.expr(args.u)
        if u.free_symbols - {Y, Z}:
            raise ValueError("--u must be an explicit function of y and z")
        numeric.check_box(u, args.box)
        stats = numeric.convergence(lambdify(u, [Y, Z]), f, args.h, args.box)
        rep.result.update(u=_text(u), box=list(args.box))
    rep.result["residual"] = stats.to_dict()
    rep.verdict("FD residual below residual_tol", stats.max_abs < args.residual_tol)


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qcsym", description=__doc__.splitlines()[0], allow_abbrev=False)
    p.add_argument("--session", help="run the statements of a session file")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="seed for probabilistic zero tests")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL, help="relative tolerance of sampled zero tests")
    sub = p.add_subparsers(dest="verb")

    ds = sub.add_parser("detsys", help="determining systems")
    ds_sub = ds.add_subparsers(dest="action", required=True)
    gen = ds_sub.add_parser("generate", help="generate and compare with the transcription")
    gen.add_argument("--form", default="a-ne-0", choices=["a-ne-0", "a-eq-0"])
    gen.add_argument("--ku-zero", action="store_true", help="specialize to K_u = 0")
    gen.set_defaults(run=cmd_detsys)

    v = sub.add_parser("verify", help="substitute (f, K, L) into the determining system")
    v.add_argument("--f", required=True)
    v.add_argument("--K")
    v.add_argument("--L", required=True)
    v.add_argument("--form", default="a-ne-0", choices=["a-ne-0", "a-eq-0"])
    v.add_argument("--points", type=int, default=20, help="numeric sample points")
    v.set_defaults(run=cmd_verify)

    c = sub.add_parser("classify", help="Case1/Case2/Case3 from K")
    c.add_argument("--K", required=True)
    c.set_defaults(run=cmd_classify)

    c1 = sub.add_parser("case1", help="operator family built from T(y,z)")
    c1.add_argument("--T", required=True)
    c1.add_argument("--f")
    c1.set_defaults(run=cmd_case1)

    c2 = sub.add_parser("case2", help="a = 0 operators, condition u_y = L")
    c2.add_argument("--L", required=True)
    c2.add_argument("--f", required=True)
    c2.set_defaults(run=cmd_case2)

    c3 = sub.add_parser("case3", help="K = exp(u), L = s exp(u) + d")
    c3.add_argument("--s", required=True)
    c3.add_argument("--d", required=True)
    c3.set_defaults(run=cmd_case3)

    r = sub.add_parser("reduce", help="ansatz u = sigma phi(omega) and the reduced ODE")
    r.add_argument("--T")
    r.add_argument("--omega")
    r.add_argument("--sigma")
    r.add_argument("--f", default="0")
    r.add_argument("--numeric", action="store_true", help="integrate and check the assembled u")
    r.add_argument("--box", type=_box, default=numeric.DEFAULT_BOX, help="y0,y1,z0,z1")
    r.add_argument("--h", type=float, default=numeric.DEFAULT_H)
    r.add_argument("--step", type=float, default=1e-3, help="RK4 step in omega")
    r.add_argument("--init", type=_init, default=(1.0, 2.0, -1.0), help="w0,phi(w0),phi'(w0)")
    r.add_argument("--residual-tol", type=float, default=1e-5)
    r.set_defaults(run=cmd_reduce)

    t = sub.add_parser("transform", help="light-cone change of variables")
    t.add_argument("--F", required=True)
    t.add_argument("--direction", default="forward", choices=["forward", "inverse"])
    t.add_argument("--round-trip", action="store_true")
    t.set_defaults(run=cmd_transform)

    n = sub.add_parser("check-numeric", help="cross-stencil residual of u_yz - f")
    n.add_argument("--u")
    n.add_argument("--grid", help="grid file with header 'ny nz y0 z0 h'")
    n.add_argument("--f", default="0")
    n.add_argument("--box", type=_box, default=numeric.DEFAULT_BOX)
    n.add_argument("--h", type=float, default=numeric.DEFAULT_H)
    n.add_argument("--residual-tol", type=float, default=1e-5)
    n.set_defaults(run=cmd_check_numeric)
    return p


def run_command(args, ctx: Context, argv: Sequence[str]) -> Report:
    rep = Report(list(argv), args.seed, args.tol)
    try:
        args.run(args, ctx, rep)
    except INPUT_ERRORS as exc:
        rep.error = f"{type(exc).__name__}: {exc}"
    return rep


# ---------------------------------------------------------------------------
# sessions


def session_argv(line: str) -> list[str]:
    """``verify f="u^2" K=1 L=u`` -> ["verify", "--f", "u^2", "--K", "1", "--L", "u"]."""
    out = []
    for tok in shlex.split(line):
        key, eq, value = tok.partition("=")
        if eq and not tok.startswith("-") and key.isidentifier():
            out += ["--" + key.replace("_", "-"), value]
        else:
            out.append(tok)
    return out


def run_session(path: str, parser: argparse.ArgumentParser, base) -> list[Report]:
    ctx = Context()
    reports = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head = line.split(None, 1)[0]
        try:
            if head == "declare":
                name, deps = parse_declaration(line)
                ctx.decls[name] = deps
                continue
            if head == "let":
                name, eq, body = line[3:].partition("=")
                if not eq or not name.strip().isidentifier():
                    raise DSLSyntaxError(f"malformed definition on line {lineno}", 0)
                ctx.defs[name.strip()] = ctx.expr(body.strip().rstrip(";"))
                continue
            argv = session_argv(line.rstrip(";"))
        except DSLSyntaxError as exc:
            rep = Report([line], base.seed, base.tol, error=f"line {lineno}: {exc}")
            reports.append(rep)
            continue
        try:
            args = parser.parse_args(["--seed", str(base.seed), "--tol", str(base.tol), *argv])
        except SystemExit:
            reports.append(Report(argv, base.seed, base.tol, error=f"line {lineno}: usage error"))
            continue
        if args.verb is None:
            reports.append(Report(argv, base.seed, base.tol, error=f"line {lineno}: no command"))
            continue
        reports.append(run_command(args, ctx, argv))
    return reports


def main(argv: Sequence[str] | None = None, out: Callable[[str], None] = print) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.session:
        reports = run_session(args.session, parser, args)
        codes = [r.exit_code for r in reports] or [0]
        code = 2 if 2 in codes else max(codes)
        if args.json:
            out(dumps({"session": args.session, "reports": [r.to_dict() for r in reports], "exit_code": code}))
        else:
            out("\n\n".join(r.to_text() for r in reports))
        return code
    if args.verb is None:
        parser.print_usage(sys.stderr)
        return 2
    rep = run_command(args, Context(), argv)
    out(rep.to_json() if args.json else rep.to_text())
    return rep.exit_code


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
