import pytest
from hypothesis import given, settings

from asc.compliance import (
    AX, HYP, OPLUS_PLUS, PLUS_OPLUS, PLUS_PLUS, Derivation, Judgment, ac, ac_k,
    check_derivation, derivation_from_json, derivation_to_json, prove, rbk_compliance,
    rbk_report, rbk_runs,
)
from asc.contracts import ONE, depth, parse

from .strategies import contracts


def test_buyer_seller_rules(buyer, seller):
    d = prove(buyer, seller)
    assert d.rules() == [PLUS_PLUS, PLUS_OPLUS, OPLUS_PLUS, AX, AX]
    assert d.branch == "bag"
    assert check_derivation(d)


def test_render_shows_branch(buyer, seller):
    first = prove(buyer, seller).render().splitlines()[0]
    assert first.startswith("+·+ [bag]")


@pytest.mark.parametrize("c,s,ok", [
    ("1", "?a", True),
    ("?a", "1", False),
    ("!a (+) !b", "?a", False),
    ("!a (+) !b", "?a + ?b", True),
    ("!a + !b", "?a", True),
    ("?a", "!a + !b", True),
    ("?a.?b", "!a.!b", True),
    ("?a.?b", "!a.!c", False),
    ("rec x . !a.x", "rec x . ?a.x", True),
    ("rec x . !a.x + !b", "rec x . ?a.x + ?b", True),
    ("rec x . ?a.x", "rec x . !a.!a.x", True),
])
def test_small_cases(c, s, ok):
    assert ac(parse(c), parse(s)) is ok


def test_hypothesis_leaf_on_recursion():
    d = prove(parse("rec x . !a.x"), parse("rec x . ?a.x"))
    assert HYP in d.rules()
    assert check_derivation(d)


def test_tampered_derivation_rejected(buyer, seller):
    d = prove(buyer, seller)
    bad = Derivation(d.rule, d.env, d.judgment, d.premises, "belt")
    assert not check_derivation(bad)
    assert not check_derivation(Derivation(AX, frozenset(), Judgment.of(buyer, seller)))


def test_derivation_json_round_trip(buyer, seller):
    d = prove(buyer, seller)
    assert derivation_from_json(derivation_to_json(d)) == d


def test_rollback_report(buyer, seller):
    r = rbk_report(buyer, seller)
    assert r.compliant and not r.failures
    assert len(r.states) == 20


def test_rollback_runs_succeed(buyer, seller):
    runs = rbk_runs(buyer, seller)
    assert runs
    assert all(path[-1][1].client.is_success() for path in runs)


def test_rollback_refuses_recursion():
    c, s = parse("rec x . !a.x"), parse("rec x . ?a.x")
    with pytest.raises(ValueError):
        rbk_report(c, s)
    assert rbk_compliance(c, s, "via-ac")


def test_ac_k_zero_is_trivial():
    assert ac_k(parse("?a"), ONE, 0)


@given(contracts, contracts)
@settings(max_examples=300, deadline=None)
def test_proofs_are_valid(c, s):
    d = prove(c, s)
    if d is not None:
        assert check_derivation(d)
        assert derivation_from_json(derivation_to_json(d)) == d


@given(contracts, contracts)
@settings(max_examples=300, deadline=None)
def test_matches_approximant(c, s):
    assert ac(c, s) == ac_k(c, s, max(depth(c), depth(s)) + 1)


@given(contracts, contracts)
@settings(max_examples=150, deadline=None)
def test_matches_rollback(c, s):
    assert ac(c, s) == rbk_compliance(c, s)
