import numpy as np
import pytest
from hypothesis import given, strategies as st

from memosim.errors import InvalidCoding, Overflow, ParseError
from memosim.sdarith import (
    NPPair, SDNumber, Trit, decode_np, digits_value, encode_trit, from_integer, negate, negative_part,
    oracle_add, positive_part, random_digit_matrix, random_pairs, random_sd, value, value_bin,
)

from oracles import sd_value

trits = st.lists(st.sampled_from((-1, 0, 1)), min_size=1, max_size=40)


@pytest.mark.parametrize("t,code", [(-1, (1, 0)), (0, (0, 0)), (1, (0, 1))])
def test_coding_table(t, code):
    assert tuple(encode_trit(t)) == code
    assert decode_np(code) == t
    assert decode_np(NPPair(*code)) == t


def test_invalid_code_rejected():
    with pytest.raises(InvalidCoding):
        decode_np((1, 1))
    with pytest.raises(InvalidCoding):
        NPPair(1, 1)
    with pytest.raises(ValueError):
        encode_trit(2)


def test_value_examples():
    assert SDNumber.from_msb([1, 0, -1, 1]).value == 7
    assert SDNumber.from_msb([1, 0, 0, -1]).value == 7
    assert value(SDNumber.zero(8)) == 0


def test_literal_round_trip():
    x = SDNumber.parse("10T1")
    assert x.digits == (1, -1, 0, 1)
    assert str(x) == "10T1"
    with pytest.raises(ParseError):
        SDNumber.parse("10x1")
    with pytest.raises(ParseError):
        SDNumber.parse("")


def test_width_bounds():
    with pytest.raises(ValueError):
        SDNumber(())
    with pytest.raises(ValueError):
        SDNumber((0,) * 513)
    assert SDNumber((1,) * 512).width == 512


def test_negate_examples():
    x = SDNumber.from_msb([1, 0, -1, 1])
    assert str(negate(x)) == "T01T"
    assert (-x).value == -7
    assert negate(SDNumber.zero(3)) == SDNumber.zero(3)


def test_from_integer_examples():
    assert str(from_integer(7, 4)) == "0111"
    assert str(from_integer(-7, 4)) == "0TTT"
    assert str(from_integer(0, 4)) == "0000"
    with pytest.raises(Overflow):
        from_integer(16, 4)
    assert from_integer(-15, 4).value == -15


def test_parts_example():
    x = SDNumber.from_msb([1, -1, 0, 1])
    # lsb first
    assert positive_part(x) == (1, 0, 0, 1)
    assert negative_part(x) == (0, 0, 1, 0)
    ones = SDNumber((1,) * 5)
    assert positive_part(ones) == (1,) * 5 and negative_part(ones) == (0,) * 5


def test_oracle_add_examples():
    assert oracle_add(SDNumber.from_msb([1, -1, 1, 1]), SDNumber.from_msb([0, 1, 1, 0])) == 13
    assert oracle_add(SDNumber.from_msb([0, 0, -1, 0]), SDNumber.from_msb([0, 1, -1, 0])) == 0


def test_random_determinism_and_balance():
    assert random_sd(8, 5) == random_sd(8, 5)
    assert random_sd(1, 3).width == 1
    m = random_digit_matrix(8, 10000, 11)[:, 0, :]
    for t in (-1, 0, 1):
        freq = (m == t).mean(axis=0)
        assert np.all(np.abs(freq - 1 / 3) < 0.02)
    assert random_pairs(6, 3, 2) == random_pairs(6, 3, 2)


def test_negate_involution_random():
    for seed in range(100):
        x = random_sd(12, seed)
        assert negate(negate(x)) == x


def test_parts_value_identity_random():
    for seed in range(1000):
        x = random_sd(10, seed)
        assert x.value == value_bin(x.positive_part()) - value_bin(x.negative_part())


@given(trits)
def test_value_matches_independent_oracle(ds):
    x = SDNumber(tuple(ds))
    assert x.value == sd_value(reversed(ds))
    assert int(digits_value(np.array(ds))) == x.value


@given(trits)
def test_negation_properties(ds):
    x = SDNumber(tuple(ds))
    assert negate(x).value == -x.value
    assert oracle_add(x, negate(x)) == 0


@given(st.integers(1, 30).flatmap(lambda w: st.tuples(st.just(w), st.integers(-(2**w - 1), 2**w - 1))))
def test_from_integer_round_trip(wv):
    w, v = wv
    x = from_integer(v, w)
    assert x.width == w and x.value == v


@given(trits)
def test_text_round_trip(ds):
    x = SDNumber(tuple(ds))
    assert SDNumber.parse(str(x)) == x
    assert Trit(x.digits[0]) in tuple(Trit)
