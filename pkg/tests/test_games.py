import pytest
from hypothesis import given, settings

from asc.compliance import ac
from asc.contracts import parse
from asc.games import (
    Play, PlayEvent, build_config_tree, exists_winning_strategy, find_xfree_tree,
    is_winning_strategy, orch_from_strategy, parse_label, play_of, replay,
    strategy_from_orch, strategy_from_tree, tree_is_xfree, winning,
)
from asc.orchestrators import BUYER_SELLER_ORCH, orch_check, orch_equal_regular, synth
from asc.semantics import ZERO

from .strategies import contracts

CARD_PLAY = ["C:bag", "B:!price", "A:price", "A:!card", "B:card", "C:✓"]


def test_labels():
    assert str(parse_label("B:!price")) == "B:!price"
    assert parse_label("C:tick") == parse_label("C:✓")
    with pytest.raises(ValueError):
        parse_label("D:a")


def test_play_timestamps_checked():
    with pytest.raises(ValueError):
        Play((PlayEvent(2, parse_label("C:bag")),))


def test_replay_reaches_end(buyer, seller):
    end = replay(play_of(CARD_PLAY), buyer, seller)
    assert end.client is ZERO
    assert replay(play_of(["C:belt", "A:price"]), buyer, seller) is None


def test_payoffs():
    assert winning(play_of(CARD_PLAY))
    assert not winning(play_of(CARD_PLAY), "A")
    assert not winning(play_of(CARD_PLAY[:3]))
    assert winning(play_of(["C:a"], cycle_start=0), "B")
    assert not winning(play_of([]))


def test_tree_choice_matters(buyer, seller):
    assert tree_is_xfree(build_config_tree(buyer, seller, "bag"))
    assert not tree_is_xfree(build_config_tree(buyer, seller, "belt"))


def test_orchestrator_strategy(buyer, seller):
    sigma = strategy_from_orch(BUYER_SELLER_ORCH, buyer, seller)
    assert sigma.is_univocal()
    assert is_winning_strategy(sigma, buyer, seller)
    assert [str(e) for e in sigma.suggest(play_of([]))] == ["(1, C:bag)"]
    assert [str(e) for e in sigma.suggest(play_of(CARD_PLAY[:5]))] == ["(6, C:✓)"]
    assert sigma.suggest(play_of(["C:belt"])) == frozenset()


def test_strategy_back_to_orchestrator(buyer, seller):
    sigma = strategy_from_orch(BUYER_SELLER_ORCH, buyer, seller)
    assert orch_equal_regular(orch_from_strategy(sigma), BUYER_SELLER_ORCH)


def test_losing_strategy_rejected(buyer, seller):
    sigma = strategy_from_tree(build_config_tree(buyer, seller, "belt"))
    assert not is_winning_strategy(sigma, buyer, seller)
    with pytest.raises(ValueError):
        orch_from_strategy(sigma)


def test_recursive_tree_has_back_edge():
    c, s = parse("rec x . !a.x + !b"), parse("rec x . ?a.x + ?b")
    t = find_xfree_tree(c, s)
    assert "(back)" in t.render()
    f = orch_from_strategy(strategy_from_tree(t))
    assert orch_check(f, c, s)


def test_no_strategy_for_internal_choice():
    assert not exists_winning_strategy(parse("!a (+) !b"), parse("?a"))


def test_tree_json_shape(buyer, seller):
    obj = build_config_tree(buyer, seller).to_json()
    assert obj["root"] == 0
    assert obj["nodes"][0]["edges"][0]["label"] == "(1, C:bag)"


@given(contracts, contracts)
@settings(max_examples=200, deadline=None)
def test_game_matches_compliance(c, s):
    assert exists_winning_strategy(c, s) == ac(c, s)


@given(contracts, contracts)
@settings(max_examples=150, deadline=None)
def test_orchestrators_give_winning_strategies(c, s):
    for f in synth(c, s)[:3]:
        sigma = strategy_from_orch(f, c, s)
        assert sigma.is_univocal() and is_winning_strategy(sigma, c, s)
        assert orch_check(orch_from_strategy(sigma), c, s)
