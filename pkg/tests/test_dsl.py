import numpy as np
import pytest

from innerorbit import (
    BlaschkeFactor,
    Composed,
    Constant,
    Coordinate,
    Power,
    Product,
    parse_function_dsl,
    serialize_function,
)
from innerorbit.errors import ParseError, ValidityError

from util import random_blaschke_tree, random_interior_points


def test_parse_constant():
    f = parse_function_dsl("const 0.5+0i", 1)
    assert f == Constant(0.5, 1)


def test_parse_negative_and_scientific():
    f = parse_function_dsl("const -0.3-4e-1i", 2)
    assert f == Constant(complex(-0.3, -0.4), 2)


def test_parse_product_with_blaschke():
    f = parse_function_dsl("blaschke(0.5+0i, 0.0)[1] * z[2]", 2)
    assert isinstance(f, Product)
    assert isinstance(f.children[0], BlaschkeFactor)
    assert f.children[0].factor.alpha == 0.5
    assert f.children[1] == Coordinate(2, 2)


def test_parse_power_and_parens():
    f = parse_function_dsl("(z[1] * z[1])^3", 1)
    assert isinstance(f, Power)
    assert f.exponent == 3


def test_parse_compose_swaps_coordinates():
    text = (
        "compose(z[1], auto{p=[2,1], a=[0+0i,0+0i], "
        "t=[3.141592653589793,3.141592653589793]})"
    )
    f = parse_function_dsl(text, 2)
    assert isinstance(f, Composed)
    rng = np.random.default_rng(101)
    pts = random_interior_points(rng, 20, 2)
    expected = pts[:, 1]
    got = f.eval_grid(pts)
    assert np.max(np.abs(got - expected)) < 1e-15


def test_parse_error_carries_position():
    with pytest.raises(ParseError) as err:
        parse_function_dsl("const 0.5+0i * bogus", 1)
    assert err.value.line == 1
    assert err.value.column == 16


def test_parse_rejects_invalid_alpha():
    with pytest.raises(ValidityError):
        parse_function_dsl("blaschke(1.5+0i, 0.0)[1]", 1)


def test_parse_rejects_large_constant():
    with pytest.raises(ValidityError):
        parse_function_dsl("const 1.5+0i", 1)


def test_parse_rejects_out_of_range_coordinate():
    with pytest.raises(ValidityError):
        parse_function_dsl("z[3]", 2)


def test_parse_rejects_trailing_input():
    with pytest.raises(ParseError):
        parse_function_dsl("z[1] z[1]", 1)


def test_round_trip_identity_on_random_trees():
    rng = np.random.default_rng(103)
    for _ in range(25):
        n = int(rng.integers(1, 3))
        f = random_blaschke_tree(rng, n, with_constant=True)
        text = serialize_function(f)
        again = parse_function_dsl(text, n)
        assert again == f
        assert serialize_function(again) == text


def test_round_trip_nested_structures():
    inner = Product((Coordinate(1, 2), Coordinate(2, 2)))
    f = Product((Power(inner, 2), Constant(0.5j, 2)))
    text = serialize_function(f)
    assert parse_function_dsl(text, 2) == f


def test_serialization_uses_17_digits():
    f = Constant(1.0 / 3.0, 1)
    text = serialize_function(f)
    assert "0.33333333333333331" in text


def test_whitespace_insensitive():
    a = parse_function_dsl("const 0.5 + 0 i * z[1]".replace(" ", ""), 1)
    b = parse_function_dsl("const 0.5 + 0 i  *  z[ 1 ]", 1)
    assert a == b
