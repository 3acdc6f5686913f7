import pytest
from hypothesis import given, settings

from asc.contracts import (
    ONE, AffSum, ContractSyntaxError, DuplicateLabelError, FreeVariableError, InputSum,
    IntChoice, Rec, UnguardedRecursionError, Var, canonical, depth, equal_regular,
    parse, parse_many, parse_with_notes, pretty, quasi_dual, unfold,
)

from .strategies import contracts


def test_buyer_prints_canonically(buyer):
    assert pretty(buyer) == "!bag.?price.(!card (+) !cash) + !belt.?price.(!card (+) !cash)"


def test_seller_round_trip(seller, seller2):
    for c in (seller, seller2):
        assert parse(pretty(c)) == c


@pytest.mark.parametrize("text,cls", [
    ("?a + ?b", InputSum),
    ("!a + !b", AffSum),
    ("!a (+) !b", IntChoice),
    ("!a ⊕ !b", IntChoice),
    ("!a", IntChoice),
])
def test_sum_kinds(text, cls):
    assert isinstance(parse(text), cls)


def test_branches_are_sorted():
    assert parse("?b + ?a") == parse("?a + ?b")


def test_single_output_note():
    c, notes = parse_with_notes("?a.!b + ?c")
    assert isinstance(c.branches[0][1], IntChoice)
    assert len(notes) == 1 and "internal choice" in notes[0]


@pytest.mark.parametrize("text,err", [
    ("?a + ?a", DuplicateLabelError),
    ("rec x . x", UnguardedRecursionError),
    ("x", FreeVariableError),
    ("?a + !b", ContractSyntaxError),
    ("?a.", ContractSyntaxError),
    ("(?a", ContractSyntaxError),
])
def test_parse_errors(text, err):
    with pytest.raises(err):
        parse(text)


def test_error_carries_position():
    with pytest.raises(DuplicateLabelError) as exc:
        parse("?a + ?a")
    assert exc.value.pos is not None


def test_affsum_needs_two_branches():
    with pytest.raises(ValueError):
        AffSum((("a", ONE),))


def test_parse_many():
    cs = parse_many(["?a", "!b"])
    assert [pretty(c) for c in cs] == ["?a", "!b"]


def test_unfold_and_regular_equality():
    c = parse("rec x . ?a.x")
    assert equal_regular(c, parse("rec y . ?a.?a.y"))
    assert equal_regular(c, unfold(c))
    assert not equal_regular(c, parse("rec x . ?a.?b.x"))


def test_canonical_minimises():
    assert canonical(parse("rec y . ?a.?a.y")) == canonical(parse("rec x . ?a.x"))
    assert isinstance(canonical(parse("rec x . ?a")), InputSum)


def test_depth():
    assert depth(ONE) == 0
    assert depth(parse("?a.!b + ?c")) == 2


def test_quasi_dual_example(buyer):
    assert pretty(quasi_dual(buyer)) == \
        "?bag.!price.(?card + ?cash) + ?belt.!price.(?card + ?cash)"


def test_quasi_dual_recursive():
    c = parse("rec x . !a.x + !b")
    assert equal_regular(quasi_dual(c), parse("rec x . ?a.x + ?b"))


def test_var_and_rec_constructors():
    r = Rec("x", InputSum((("a", Var("x")),)))
    assert pretty(r) == "rec x . ?a.x"


@given(contracts)
@settings(max_examples=200, deadline=None)
def test_print_parse_round_trip(c):
    assert parse(pretty(c)) == c


@given(contracts)
@settings(max_examples=200, deadline=None)
def test_quasi_dual_is_involutive_up_to_affectibility(c):
    dd = quasi_dual(quasi_dual(c))
    assert depth(dd) == depth(c)
    assert equal_regular(quasi_dual(dd), quasi_dual(c))
