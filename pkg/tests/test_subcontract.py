import pytest
from hypothesis import given, settings

from asc.compliance import ac
from asc.contracts import ONE, depth, parse, quasi_dual
from asc.orchestrators import (
    BUYER_SELLER_ORCH, IDLE, orch_check, orch_equal_regular, parse_orch, pretty_orch, synth,
)
from asc.subcontract import (
    OPLUS_OPLUS, OPLUS_PLUS, PLUS_PLUS_1, SAX, SHYP, Functor, SubDerivation, SubJudgment,
    apply_functor, check_sub_derivation, compile_functor, sub_derivation_from_json,
    sub_derivation_to_json, sub_k, sub_prove, subcontract,
)

from .strategies import contracts

DB_LOWER = "?d + ?b.(!b (+) !c)"
DB_UPPER = "?d.!a + ?b.(!a + !c + !e)"


def test_seller_derivation(seller, seller2):
    d = sub_prove(seller, seller2)
    assert d.rules() == [PLUS_PLUS_1, OPLUS_PLUS, PLUS_PLUS_1, SAX, SAX,
                         OPLUS_OPLUS, PLUS_PLUS_1, SAX]
    assert d.premises[0].branch == "price"
    assert check_sub_derivation(d)


def test_success_is_below_everything():
    assert sub_prove(ONE, parse("?a")).rules() == [SAX]


def test_affectible_not_below_singleton():
    assert not subcontract(parse("!a + !b"), parse("!a"))
    assert not sub_k(parse("!a + !b"), parse("!a"), 3)


def test_recursive_subcontract():
    d = sub_prove(parse("rec x . ?a.x + ?b"), parse("rec x . ?a.x + ?b + ?c"))
    assert SHYP in d.rules()


def test_json_round_trip(seller, seller2):
    d = sub_prove(seller, seller2)
    assert sub_derivation_from_json(sub_derivation_to_json(d)) == d


def test_functor_promotes_price(seller, seller2):
    g = apply_functor(compile_functor(sub_prove(seller, seller2)), BUYER_SELLER_ORCH)
    assert pretty_orch(g) == "<bag,!bag>+.<!price,price>+.(<card,!card> \\/ <cash,!cash>)"


def test_functor_selects_branch():
    d = sub_prove(parse(DB_LOWER), parse(DB_UPPER))
    f = parse_orch("<b,!b>+.(<!b,b> \\/ <!c,c>)")
    assert orch_equal_regular(apply_functor(compile_functor(d), f),
                              parse_orch("<b,!b>+.<!c,c>+"))


def test_axiom_functor_is_idle():
    F = compile_functor(sub_prove(ONE, parse("?a")))
    assert F(BUYER_SELLER_ORCH) == IDLE


def test_functor_on_recursive_orchestrator():
    lo, up = parse("rec x . ?a.x + ?b"), parse("rec x . ?a.x + ?b + ?c")
    c = parse("rec x . !a.x (+) !b")
    F = compile_functor(sub_prove(lo, up))
    for f in synth(c, lo):
        assert orch_check(F(f), c, up)


def test_functor_rejects_bad_derivations(seller, seller2):
    d = sub_prove(seller, seller2)
    with pytest.raises(ValueError):
        Functor(SubDerivation(SAX, frozenset(), d.judgment))
    with pytest.raises(ValueError):
        Functor(SubDerivation(d.rule, frozenset({d.judgment}), d.judgment, d.premises))


def test_judgment_text(seller):
    assert str(SubJudgment.of(ONE, seller)).startswith("1 << ")


@given(contracts)
@settings(max_examples=200, deadline=None)
def test_reflexive_with_identity_functor(s):
    d = sub_prove(s, s)
    assert d is not None and check_sub_derivation(d)
    F = compile_functor(d)
    c = quasi_dual(s)
    for f in synth(c, s)[:3]:
        assert orch_equal_regular(F(f), f)


@given(contracts, contracts)
@settings(max_examples=300, deadline=None)
def test_matches_approximant(s, t):
    assert subcontract(s, t) == sub_k(s, t, max(depth(s), depth(t)) + 1)


@given(contracts, contracts, contracts)
@settings(max_examples=300, deadline=None)
def test_functor_soundness(r, s, t):
    d = sub_prove(s, t)
    if d is None:
        return
    assert ac(quasi_dual(s), t)
    F = compile_functor(d)
    for f in synth(r, s)[:3]:
        assert orch_check(F(f), r, t)
