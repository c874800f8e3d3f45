import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from qcsym.corpus import CorpusConfig, ExprGenerator
from qcsym.dsl import ArityError, DSLSyntaxError, parse, parse_declaration, to_text, tokenize
from qcsym.expr import U, FunctionSymbol, fn, jet_symbol


def test_derivative_suffixes():
    e = parse("T_y/T_z")
    num, den = sp.fraction(e)
    assert FunctionSymbol.from_expr(num).index == (1, 0)
    assert FunctionSymbol.from_expr(den).index == (0, 1)


def test_sum_of_product_and_function():
    e = parse("exp(u)*s(y,z) + d(y,z)")
    assert e == sp.exp(U) * fn("s") + fn("d")


def test_jet_power():
    e = parse("u_z^2 * K_u")
    assert e == jet_symbol(0, 1) ** 2 * sp.diff(fn("K"), U)


def test_aliases_and_operators():
    assert parse("ω**2 − 1") == parse("w^2 - 1")
    assert parse("φ_ω") == sp.diff(fn("phi"), sp.Symbol("w"))
    assert parse("2·y") == 2 * sp.Symbol("y")


def test_rationals_are_exact():
    assert parse("1/3") == sp.Rational(1, 3)
    assert parse("0.25") == sp.Rational(1, 4)


@pytest.mark.parametrize(
    "text, offset",
    [("y + * z", 4), ("(y + z", 6), ("y $ z", 2), ("y^z", 1)],
)
def test_syntax_errors_carry_byte_offsets(text, offset):
    with pytest.raises(DSLSyntaxError) as info:
        parse(text)
    assert info.value.offset == offset


def test_offsets_count_bytes_not_characters():
    toks = tokenize("ω + y")
    assert [t.offset for t in toks[:3]] == [0, 3, 5]


def test_arity_mismatch():
    with pytest.raises(ArityError):
        parse("K(y,z)")
    with pytest.raises(ArityError):
        parse("exp(y, z)")


def test_division_by_literal_zero():
    with pytest.raises(DSLSyntaxError):
        parse("y/0")


def test_declarations():
    assert parse_declaration("declare g(u);") == ("g", ("u",))
    assert parse_declaration("declare φ(ω)") == ("phi", ("w",))
    with pytest.raises(DSLSyntaxError):
        parse_declaration("declare g(u, u);")
    decls = {"g": ("u",)}
    assert parse("g_uu", decls) == sp.diff(sp.Function("g")(U), U, 2)


def test_jets_only_take_y_and_z():
    with pytest.raises(DSLSyntaxError):
        parse("u_u")


@pytest.mark.parametrize(
    "text",
    [
        "-(y - 4)*K + 1",
        "2*(u + f_y)/(3*u)",
        "-4/(3*(1/3 + log(3)^2))",
        "K_uu*K - K_u^2",
        "1/y^2 - y/z/u",
        "u^k",
        "exp(-y)*z",
    ],
)
def test_round_trip_samples(text):
    e = parse(text)
    assert parse(to_text(e)) == e


@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_round_trip_corpus(seed):
    e = ExprGenerator(seed, CorpusConfig(opaque=True)).expr()
    assert parse(to_text(e)) == e


def test_floats_are_refused_by_the_printer():
    with pytest.raises(ValueError):
        to_text(sp.Float(0.5) * sp.Symbol("y"))
