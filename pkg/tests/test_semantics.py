from hypothesis import given, settings

from asc.contracts import parse
from asc.orchestrators import BUYER_SELLER_ORCH, IDLE, parse_orch
from asc.semantics import (
    ZERO, Buffered, HContract, OrchSystem, RbkSystem, TBConfig, explore, orch_is_stuck,
    orch_steps, rbk_contract_steps, rbk_explore, rbk_system_labelled_steps, show_state,
    tb_steps, tb_stuck_failure,
)

from .strategies import contracts


def _labels(moves):
    return [str(lab) for lab, _ in moves]


def _first_run(c, s):
    cfg, out = TBConfig(parse(c), parse(s)), []
    while True:
        moves = tb_steps(cfg)
        if not moves:
            return out, cfg
        out.append(str(moves[0][0]))
        cfg = moves[0][1]


# ------------------------------------------------------------ turn-based LTS

def test_buyer_seller_opens_with_mediator(buyer, seller):
    assert _labels(tb_steps(TBConfig(buyer, seller))) == ["C:bag", "C:belt"]


def test_buffered_output_then_consumption():
    run, end = _first_run("!a", "?a")
    assert run == ["A:!a", "B:a", "C:✓"]
    assert end.client is ZERO


def test_server_output_buffers():
    run, _ = _first_run("?a.!b", "!a.?b")
    assert run == ["B:!a", "A:a", "A:!b", "B:b", "C:✓"]


def test_internal_choice_branches():
    cfg = TBConfig(parse("!a (+) !b"), parse("?a"))
    assert _labels(tb_steps(cfg)) == ["A:!a", "A:!b"]


def test_buffered_state_display():
    cfg = tb_steps(TBConfig(parse("!a"), parse("?a")))[0][1]
    assert isinstance(cfg.client, Buffered)
    assert show_state(cfg.client) == "[!a]1"


def test_stuck_failure():
    assert tb_stuck_failure(TBConfig(parse("?a"), parse("?a")))
    assert not tb_stuck_failure(TBConfig(ZERO, parse("?a")))


@given(contracts, contracts)
@settings(max_examples=150, deadline=None)
def test_move_partition(c, s):
    states, edges = explore(TBConfig(c, s), tb_steps)
    for row in edges.values():
        labs = [lab for lab, _ in row]
        outs = all(lab.kind == "out" and lab.player in "AB" for lab in labs)
        one_input = len(labs) == 1 and labs[0].kind == "in" and labs[0].player in "AB"
        mediator = all(lab.player == "C" and lab.kind == "in" for lab in labs)
        tick = [str(lab) for lab in labs] == ["C:✓"]
        assert outs or one_input or mediator or tick


# ----------------------------------------------------------------- rollback

def test_history_contract_pushes_remainder():
    h = HContract.fresh(parse("?a.!b + ?c"))
    [(lab, h2)] = [m for m in rbk_contract_steps(h) if m[0].name == "a"]
    assert lab.kind == "in"
    assert len(h2.stack) == 1


def test_rollback_state_space(buyer, seller):
    states, _ = rbk_explore(buyer, seller)
    assert len(states) == 20


def test_rollback_first_moves(buyer, seller):
    moves = rbk_system_labelled_steps(RbkSystem.start(buyer, seller))
    assert [str(lab) for lab, _ in moves] == ["comm(bag)", "comm(belt)"]


def _rbk_paths(c, s, limit=60):
    out, todo = [], [(RbkSystem.start(c, s), [])]
    while todo:
        st, path = todo.pop()
        moves = rbk_system_labelled_steps(st)
        if not moves or len(path) >= limit:
            out.append((path, st))
            continue
        for lab, nxt in moves:
            todo.append((nxt, path + [(lab, nxt)]))
    return out


def test_stacks_stay_balanced(buyer, seller):
    for path, _ in _rbk_paths(buyer, seller):
        for _, st in path:
            assert len(st.client.stack) == len(st.server.stack)


def test_rollback_runs_end_in_success(buyer, seller):
    for _, st in _rbk_paths(buyer, seller):
        assert st.client.is_success()


def test_rollback_beats_tau():
    # after a dead end the only moves are rollbacks
    st = RbkSystem.start(parse("!a.?b + !c"), parse("?a.?d + ?c"))
    path = [m for m in rbk_system_labelled_steps(st) if str(m[0]) == "comm(a)"]
    _, dead = path[0]
    rules = {lab.rule for lab, _ in rbk_system_labelled_steps(dead)}
    assert rules == {"rbk"}


# ------------------------------------------------------- orchestrated system

def test_orchestrated_first_step(buyer, seller):
    moves = orch_steps(OrchSystem(buyer, BUYER_SELLER_ORCH, seller))
    assert len(moves) == 1
    lab, nxt = moves[0]
    assert lab.kind == "plus" and lab.detail == "bag"


def test_internal_choice_taus():
    sys = OrchSystem(parse("!a (+) !b"), parse_orch("<a,!a>"), parse("?a + ?b"))
    assert sorted(lab.kind for lab, _ in orch_steps(sys)) == ["silent", "silent"]


def test_idle_blocks():
    assert orch_is_stuck(OrchSystem(parse("?a"), IDLE, parse("!a")))
