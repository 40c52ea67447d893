"""Word arithmetic and canonically ordered balls.

Expected constants below were computed independently: ball sizes from the
closed form 1 + 2r·((2r-1)^L - 1)/(2r-2), orderings by hand from the
(length, letter-lex) rule with a < a⁻¹ < b < b⁻¹.
"""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chabauty_lab.errors import BudgetExceededError, MalformedInputError
from chabauty_lab.words import (
    IDENTITY,
    ball,
    ball_size,
    conjugate,
    format_word,
    free_group,
    graded_ball,
    graded_length,
    invert,
    iter_lattice_ball,
    lattice,
    multiply,
    parse_word,
    power,
    reduce_word,
    sorted_words,
    word_key,
)

F2 = free_group(2)

letters = st.sampled_from([1, -1, 2, -2])
raw_words = st.lists(letters, max_size=10).map(tuple)
reduced_words = raw_words.map(reduce_word)


# ── parsing and formatting ───────────────────────────────────────────────────


def test_parse_basic():
    assert parse_word("abA", F2) == (1, 2, -1)
    assert parse_word("", F2) == IDENTITY
    assert parse_word("aA", F2) == IDENTITY  # parsing reduces


def test_parse_rejects_out_of_range():
    with pytest.raises(MalformedInputError):
        parse_word("abc", F2)  # c needs rank 3
    with pytest.raises(MalformedInputError):
        parse_word("a!b", F2)


def test_format_inverse_case():
    assert format_word((1, -2, 1)) == "aBa"
    assert format_word(IDENTITY) == ""


@given(reduced_words)
def test_parse_format_roundtrip(w):
    assert parse_word(format_word(w), F2) == w


# ── group laws (the reduction is the normal form of F_2) ─────────────────────


@given(raw_words)
def test_reduce_idempotent(w):
    assert reduce_word(reduce_word(w)) == reduce_word(w)


@given(raw_words)
def test_no_adjacent_cancellation_after_reduce(w):
    r = reduce_word(w)
    assert all(r[i] != -r[i + 1] for i in range(len(r) - 1))


@given(reduced_words)
def test_inverse_law(w):
    assert multiply(w, invert(w)) == IDENTITY
    assert multiply(invert(w), w) == IDENTITY


@given(reduced_words, reduced_words, reduced_words)
@settings(max_examples=60)
def test_associativity(u, v, w):
    assert multiply(multiply(u, v), w) == multiply(u, multiply(v, w))


@given(reduced_words, st.integers(min_value=-4, max_value=4))
def test_power_matches_repeated_multiply(w, n):
    expected = IDENTITY
    for _ in range(abs(n)):
        expected = multiply(expected, w if n > 0 else invert(w))
    assert power(w, n) == expected


def test_conjugate():
    # the convention is g·w·g⁻¹
    assert conjugate((1,), (2,)) == (2, 1, -2)
    assert conjugate((1,), (1,)) == (1,)


# ── canonical ball enumeration ───────────────────────────────────────────────


def test_ball_radius_two_prefix_and_size():
    B = ball(F2, 2)
    assert B[:5] == [(), (1,), (-1,), (2,), (-2,)]
    assert len(B) == 17  # 1 + 4 + 12


def test_ball_is_canonically_sorted_and_reduced():
    B = ball(F2, 3)
    assert B == sorted_words(B)
    assert all(reduce_word(w) == w for w in B)
    assert len(set(B)) == len(B)


def test_ball_size_closed_form():
    # 1 + 2r((2r-1)^L - 1)/(2r-2) for r = 2: 1 + 2(3^L - 1)
    for L in range(6):
        assert ball_size(2, L) == 1 + 2 * (3**L - 1)
    assert len(ball(F2, 4)) == ball_size(2, 4)


def test_ball_respects_budget_cap():
    with pytest.raises(BudgetExceededError):
        ball(F2, 99)


def test_lattice_ball_is_l1_ball():
    pts = list(iter_lattice_ball(2, 1))
    assert len(pts) == 5  # origin plus the four unit vectors
    assert (0, 0) in pts and (1, 0) in pts and (0, -1) in pts
    assert (1, -1) not in pts  # L¹ norm 2
    # |{v : |v|_1 <= n}| = 2n² + 2n + 1 in Z²
    assert len(list(iter_lattice_ball(2, 2))) == 13


def test_word_key_orders_by_length_then_letters():
    ws = [(2,), (1, 1), (-1,), (1,)]
    assert sorted(ws, key=word_key) == [(1,), (-1,), (2,), (1, 1)]


# ── graded filtration (for the free variety) ─────────────────────────────────


def test_graded_length_weights_letters_by_generator_index():
    assert graded_length((1, 2)) == 3  # weight(a) + weight(b) = 1 + 2
    assert graded_length((5,)) == 5
    assert graded_length(IDENTITY) == 0


def test_graded_ball_small():
    B = graded_ball(2)
    assert IDENTITY in B and (1,) in B and (2,) in B and (1, 1) in B
    assert all(graded_length(w) <= 2 for w in B)
    assert (3,) not in B
