import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from qcsym.detsys import (
    CASE3_CONSTRAINTS,
    CaseTag,
    F_FN,
    K_FN,
    L_FN,
    TRANSCRIBED,
    case1_f_condition,
    case1_from_T,
    case1_system,
    case2_first_order_system,
    case3_construct,
    case3_solve_f,
    classify_case,
    clear_k,
    generate_determining_system,
    is_exponential_in_u,
    lie_invariance_check,
    lightcone_transform,
    regression,
    verify_conditional_operator,
)
from qcsym.dsl import parse
from qcsym.expr import T, U, X, Y, Z, ZeroVerdict, fn, is_zero, jet_symbols, simplify, substitute
from qcsym.jet import A_EQ_0, A_NE_0, ConditionalOperator, eliminate, invariance_condition, u_zz_on_equation
from qcsym.reduction import CATALOG

g_u = fn("g", ("u",))  # an opaque nonlinearity depending on u only


# --- generation ----------------------------------------------------------------------


def test_member_counts():
    assert len(generate_determining_system(A_NE_0)) == 4
    assert len(generate_determining_system(A_EQ_0)) == 2
    assert len(case1_system()) == 3


def test_members_are_jet_free():
    for form in (A_NE_0, A_EQ_0):
        for m in generate_determining_system(form):
            assert not jet_symbols(m.expr)


def test_leading_members():
    first = generate_determining_system(A_NE_0)[0].expr
    assert simplify(first - parse("K_uu*K - K_u^2")) == 0
    assert simplify(generate_determining_system(A_EQ_0)[0].expr - parse("L_yu + L_uu*L")) == 0
    assert simplify(case1_system()[0].expr + parse("K*L_uu")) == 0


@pytest.mark.parametrize("which, n", [(A_NE_0, 4), ("case1", 3), (A_EQ_0, 2)])
def test_regression_against_transcription(which, n):
    rows = regression(which)
    assert len(rows) == n
    assert all(r.exact for r in rows)


def test_transcribed_members_clear_to_the_generated_k_power():
    for m, text in zip(generate_determining_system(A_NE_0), TRANSCRIBED[A_NE_0]):
        _, p = clear_k(parse(text))
        assert p == m.k_power


def test_generation_commutes_with_substitution():
    """Generate with concrete (K, L, f) directly and compare with substituting afterwards."""
    K, L, f = Z / Y, U / Y + Y, U**2 / (Y + Z)
    Q = ConditionalOperator.a_ne_0(K, L)
    uz, uzz = parse("u_z"), parse("u_zz")
    cond = invariance_condition(Q, f).xreplace({parse("u_yz"): f})
    cond = eliminate(cond, Q).xreplace({uzz: u_zz_on_equation(Q, f)})
    direct = sp.Poly(sp.numer(sp.together(cond)), uz)
    report = verify_conditional_operator(f, K, L)
    # member k vanishes iff the direct u_z^k coefficient does
    coeffs = dict(zip((m[0] for m in direct.monoms()), direct.coeffs()))
    for i, verdict in enumerate(report.equations):
        k = 3 - i
        assert verdict.passed == (simplify(coeffs.get(k, 0)) == 0)


# --- verification -------------------------------------------------------------------


def test_translation_verifies():
    assert verify_conditional_operator(0, 1, 0).passed


def test_worked_case1_instance_verifies_symbolically():
    report = verify_conditional_operator("1/(y+z)", "z/y", "u/y")
    assert report.passed
    assert all(e.verdict is ZeroVerdict.ZERO for e in report.equations)


def test_u_squared_fails_on_the_last_member():
    report = verify_conditional_operator("u^2", 1, "u")
    assert not report.passed
    assert [e.passed for e in report.equations] == [True, True, True, False]
    assert simplify(report[3].residual + U**2) == 0


def test_opaque_f_is_reported_as_a_constraint():
    report = verify_conditional_operator(F_FN, 1, 0)
    last = report[3]
    assert not last.passed and last.constrains_f
    assert simplify(last.residual + parse("f_y + f_z")) == 0
    assert all(e.passed for e in report.equations[:3])


def test_identically_zero_K_is_refused():
    with pytest.raises(ZeroDivisionError):
        verify_conditional_operator(0, "y - y", 0)


def test_a_eq_0_form_ignores_K():
    assert verify_conditional_operator(0, None, "u", form="a-eq-0").passed
    assert not verify_conditional_operator(0, None, "u^2", form="a-eq-0").passed


def test_lie_symmetry_is_conditional():
    # d_y + d_z leaves u_yz = g(u) invariant, so it is also conditionally invariant
    assert lie_invariance_check(ConditionalOperator(1, 1, 0), g_u).passed
    assert verify_conditional_operator(g_u, 1, 0).passed


# --- classification -----------------------------------------------------------------------


@pytest.mark.parametrize(
    "K, tag", [("z/y", CaseTag.CASE1), ("0", CaseTag.CASE2), ("exp(u)", CaseTag.CASE3), ("y - y", CaseTag.CASE2)]
)
def test_classify(K, tag):
    assert classify_case(K) is tag


@given(st.sampled_from(["z/y", "exp(u)", "u*y", "1", "y + z^2", "exp(y*u)"]),
       st.sampled_from(["y", "1 + z^2", "exp(y - z)", "y/z"]))
def test_classification_ignores_yz_factors(K, factor):
    assert classify_case(parse(K) * parse(factor)) is classify_case(K)


def test_undecided_classification():
    # K_u = log(y*z) - log(y) - log(z) vanishes, but not in the rational normal form
    K = U * (sp.log(Y * Z) - sp.log(Y) - sp.log(Z))
    assert classify_case(K) is CaseTag.UNDECIDED


def test_exponential_structure():
    assert is_exponential_in_u("y*exp(z*u)")
    assert not is_exponential_in_u("u^2")


# --- Case 1 -------------------------------------------------------------------------------


@pytest.mark.parametrize(
    "T, K, s",
    [("y+z", "1", "0"), ("y*z", "z/y", "1/y"), ("y^2*z", "2*z/y", "2/y")],
)
def test_case1_from_T(T, K, s):
    op = case1_from_T(T)
    assert simplify(op.K - parse(K)) == 0
    assert simplify(op.s - parse(s)) == 0
    assert simplify(op.L - parse(s) * U) == 0


@pytest.mark.parametrize("entry", CATALOG, ids=lambda e: e.T)
def test_case1_catalog_structural_members(entry):
    op = case1_from_T(entry.T)
    report = verify_conditional_operator(F_FN, op.K, op.L)
    assert all(e.passed for e in report.equations[:3])


def test_case1_requires_z_dependence():
    with pytest.raises(ValueError, match="a = 0"):
        case1_from_T("y^2")


def test_case1_f_condition_examples():
    cond = case1_f_condition(1, 0)
    assert simplify(cond + parse("f_y + f_z")) == 0
    cond = case1_f_condition("z/y", "u/y")
    ratio = simplify(cond / parse("y*f_y + z*f_z + u*f_u + f"))
    assert not ratio.free_symbols - {Y, Z, U} and not ratio.has(F_FN)
    assert is_zero(substitute(cond, {"f": "1/(y+z)"})).vanishes


def test_case1_f_condition_needs_K_independent_of_u():
    with pytest.raises(ValueError):
        case1_f_condition("exp(u)", 0)
    with pytest.raises(ZeroDivisionError):
        case1_f_condition(0, 0)


# --- Case 2 ----------------------------------------------------------------------------------


def test_case2_first_order_pairs():
    pair = case2_first_order_system("u", "u")
    assert (pair.u_y, pair.u_z) == (U, U)
    assert pair.compatible is ZeroVerdict.ZERO
    pair = case2_first_order_system("u", "0")
    assert pair.u_z == 0 and pair.compatible is ZeroVerdict.ZERO
    assert verify_conditional_operator(0, None, "u", form=A_EQ_0).passed


def test_case2_without_u_dependence():
    with pytest.raises(ValueError, match="first-order reduction unavailable"):
        case2_first_order_system("y", "0")


def test_case2_pair_solves_the_equation():
    # u = c exp(y + z) satisfies u_y = u, u_z = u and u_yz = u
    c = sp.Symbol("c")
    u = c * sp.exp(Y + Z)
    assert simplify(sp.diff(u, Y, Z) - u) == 0


# --- Case 3 ----------------------------------------------------------------------------------


def test_case3_f_from_the_system():
    s, d = fn("s"), fn("d")
    assert simplify(case3_solve_f() - (sp.diff(s, Y) + sp.diff(d, Z)) / 3) == 0


@pytest.mark.parametrize("s, d", [("1", "1"), ("0", "y"), ("c1", "c2"), ("0", "1/y")])
def test_case3_families_that_verify(s, d):
    res = case3_construct(s, d)
    assert res.f == 0
    assert res.constraints.passed and res.system.passed


def test_case3_constraint_failure_is_reported():
    res = case3_construct("y", "0")
    assert res.f == sp.Rational(1, 3)
    assert res.constraints[0].residual == 2 * Y
    assert res.constraints[1].passed
    assert not res.passed


def test_case3_constraints_follow_from_the_system():
    # a family satisfying both constraints must pass the full system, and vice versa for this sample
    s, d = parse("1/(y+z)"), parse("0")
    bind = {"s": s, "d": d}
    constraints_ok = all(is_zero(substitute(parse(c), bind)).vanishes for c in CASE3_CONSTRAINTS)
    assert constraints_ok == case3_construct(s, d).system.passed


# --- classical symmetries -------------------------------------------------------------------


@pytest.mark.parametrize(
    "Q",
    [ConditionalOperator(1, 0, 0), ConditionalOperator(0, 1, 0), ConditionalOperator(Y, -Z, 0)],
    ids=["d_y", "d_z", "boost"],
)
def test_poincare_generators(Q):
    assert lie_invariance_check(Q, g_u).passed


def test_dilation_for_cubic():
    assert lie_invariance_check(ConditionalOperator(Y, Z, -U), U**3).passed
    assert not lie_invariance_check(ConditionalOperator(Y, Z, -U), U**2).passed


def test_translation_breaks_on_explicit_y():
    assert not lie_invariance_check(ConditionalOperator(1, 0, 0), Y * U).passed


# --- light-cone variables ---------------------------------------------------------------------


def test_lightcone_examples():
    lam, k = sp.symbols("lam k")
    assert lightcone_transform(0) == 0
    assert simplify(lightcone_transform(lam * U**k) - lam * U**k / 4) == 0
    assert lightcone_transform(lightcone_transform(T * U), "inverse") == T * U


def test_lightcone_convention_on_a_concrete_solution():
    w = sp.sin(T) * sp.exp(X) + T**3 * X
    wave = sp.diff(w, T, 2) - sp.diff(w, X, 2)
    in_yz = w.subs({T: (Y + Z) / 2, X: (Y - Z) / 2})
    assert sp.simplify(4 * sp.diff(in_yz, Y, Z) - wave.subs({T: (Y + Z) / 2, X: (Y - Z) / 2})) == 0


def test_lightcone_direction_checked():
    with pytest.raises(ValueError):
        lightcone_transform(U, "sideways")


def test_module_level_function_symbols():
    assert {K_FN.func.__name__, L_FN.func.__name__, F_FN.func.__name__} == {"K", "L", "f"}
