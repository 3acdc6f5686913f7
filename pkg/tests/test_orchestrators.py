import pytest
from hypothesis import given, settings

from asc.compliance import ac, check_derivation, prove
from asc.contracts import parse
from asc.orchestrators import (
    BUYER_SELLER_ORCH, IDLE, OrchError, OrchSyntaxError, check_orch_derivation,
    derivation_to_orch, o2d, orch_check, orch_check_k, orch_check_plain,
    orch_equal_regular, orch_from_json, orch_to_json, parse_orch, pretty_orch, synth,
)

from .strategies import contracts


def test_buyer_seller_synthesis(buyer, seller):
    fs = synth(buyer, seller)
    assert len(fs) == 1
    assert orch_equal_regular(fs[0], BUYER_SELLER_ORCH)


def test_printed_form():
    assert pretty_orch(BUYER_SELLER_ORCH) == \
        "<bag,!bag>+.<!price,price>.(<card,!card> \\/ <cash,!cash>)"


@pytest.mark.parametrize("text", [
    "1",
    "<a,!a>",
    "<!a,a>+",
    "<a,!a> \\/ <!b,b>",
    "rec x . <a,!a>+.x",
    "<a,!a>+.(<b,!b> \\/ <c,!c>)",
])
def test_grammar_round_trip(text):
    f = parse_orch(text)
    assert parse_orch(pretty_orch(f)) == f
    assert orch_from_json(orch_to_json(f)) == f


def test_unicode_disjunction():
    assert parse_orch("<a,!a> ∨ <b,!b>") == parse_orch("<a,!a> \\/ <b,!b>")


@pytest.mark.parametrize("text,err", [
    ("<a,!a>+ \\/ <b,!b>", OrchSyntaxError),
    ("<a,!b>", OrchSyntaxError),
    ("rec x . x", OrchError),
    ("<a,!a", OrchSyntaxError),
])
def test_bad_orchestrators(text, err):
    with pytest.raises(err):
        parse_orch(text)


def test_checks_on_example(buyer, seller):
    f = BUYER_SELLER_ORCH
    assert orch_check(f, buyer, seller)
    assert orch_check_plain(f, buyer, seller)
    assert orch_check_k(f, buyer, seller, 6)
    assert not orch_check(IDLE, buyer, seller)


def test_derivation_to_orchestrator(buyer, seller):
    f, od = derivation_to_orch(prove(buyer, seller))
    assert orch_equal_regular(f, BUYER_SELLER_ORCH)
    assert check_orch_derivation(od)


def test_o2d_rebuilds(buyer, seller):
    d = o2d(BUYER_SELLER_ORCH, buyer, seller)
    assert d is not None and check_derivation(d)
    assert o2d(IDLE, buyer, seller) is None


def test_recursive_synthesis():
    c, s = parse("rec x . !a.x + !b"), parse("rec x . ?a.x + ?b")
    texts = sorted(pretty_orch(f) for f in synth(c, s))
    assert texts == ["<b,!b>+", "rec x0 . <a,!a>+.x0"]
    assert all(orch_check(f, c, s) for f in synth(c, s))


def test_wrong_branch_rejected():
    # the client picks internally, so committing to one branch is not enough
    c, s = parse("!a (+) !b"), parse("?a")
    assert not orch_check(parse_orch("<a,!a>"), c, s)
    assert not orch_check_plain(parse_orch("<a,!a>"), c, s)


@given(contracts, contracts)
@settings(max_examples=200, deadline=None)
def test_synthesis_is_sound_and_complete(c, s):
    fs = synth(c, s)
    assert bool(fs) == ac(c, s)
    for f in fs[:4]:
        assert orch_check(f, c, s)
        assert orch_from_json(orch_to_json(f)) == f
        d = o2d(f, c, s)
        assert d is not None and check_derivation(d)


@given(contracts, contracts)
@settings(max_examples=200, deadline=None)
def test_turn_based_and_plain_checks_agree(c, s):
    cands = synth(c, s)[:2] + synth(s, c)[:1] + [IDLE]
    for f in cands:
        assert orch_check(f, c, s) == orch_check_plain(f, c, s)
