"""Plays, configuration trees and strategies for the three-player game.

Player A is the client, B the server and C the mediator that settles
affectible choices.  Configuration trees are stored as rooted graphs whose
edges may point back to earlier nodes, which is how regular infinite trees
are represented.  Strategies for C are univocal and kept as trees.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .contracts import AffSum, Contract, unfold_all
from .orchterms import IDLE, Disj, OrchAct, Orchestrator, ORec, OVar, Prefix
from .semantics import (
    TICK, TBConfig, TBLabel, TBOrchConfig, Zero, explore, tb_orch_steps, tb_steps,
)


# -------------------------------------------------------------------- plays

@dataclass(frozen=True)
class PlayEvent:
    timestamp: int
    label: TBLabel

    def __str__(self):
        return f"({self.timestamp}, {self.label})"


@dataclass(frozen=True)
class Play:
    """A finite play, or a lasso when cycle_start is set (events[cycle_start:] repeat)."""

    events: tuple
    cycle_start: int | None = None

    def __post_init__(self):
        for i, e in enumerate(self.events):
            if e.timestamp != i + 1:
                raise ValueError(f"event {e} out of sequence; expected timestamp {i + 1}")
        if self.cycle_start is not None and not 0 <= self.cycle_start < len(self.events):
            raise ValueError("lasso cycle must be a non-empty suffix")

    @property
    def infinite(self) -> bool:
        return self.cycle_start is not None

    def __str__(self):
        body = "".join(map(str, self.events)) or "<>"
        return body + ("..." if self.infinite else "")


def parse_label(text: str) -> TBLabel:
    player, _, act = text.strip().partition(":")
    if player not in ("A", "B", "C") or not act:
        raise ValueError(f"bad turn label {text!r}")
    if act in ("✓", "tick"):
        return TBLabel(player, "tick")
    if act.startswith("!"):
        return TBLabel(player, "out", act[1:])
    return TBLabel(player, "in", act)


def play_of(labels, cycle_start=None) -> Play:
    labs = [parse_label(x) if isinstance(x, str) else x for x in labels]
    return Play(tuple(PlayEvent(i + 1, lab) for i, lab in enumerate(labs)), cycle_start)


def replay(play: Play, client: Contract, server: Contract):
    """Final configuration of a play, or None when it is not a trace."""
    cfg = TBConfig(client, server)
    for e in play.events:
        nxt = [c for lab, c in tb_steps(cfg) if lab == e.label]
        if not nxt:
            return None
        cfg = nxt[0]
    return cfg


def winning(play: Play, player: str = "C") -> bool:
    """Infinite plays are won by everyone; a finite one only by whoever ticked last."""
    if play.infinite:
        return True
    if not play.events:
        return False
    last = play.events[-1].label
    return last.kind == "tick" and last.player == player


# -------------------------------------------------------- configuration trees

@dataclass
class TreeNode:
    id: int
    config: object
    kind: str  # "inner", "done" or "fail"
    children: list = field(default_factory=list)  # [(TBLabel, node id)]


@dataclass
class ConfigTree:
    nodes: list
    root: int = 0

    def reachable(self):
        seen = {self.root}
        queue = deque([self.root])
        while queue:
            n = queue.popleft()
            for _, m in self.nodes[n].children:
                if m not in seen:
                    seen.add(m)
                    queue.append(m)
        return seen

    def depths(self) -> dict:
        d = {self.root: 0}
        queue = deque([self.root])
        while queue:
            n = queue.popleft()
            for _, m in self.nodes[n].children:
                if m not in d:
                    d[m] = d[n] + 1
                    queue.append(m)
        return d

    def paths(self) -> dict:
        """A shortest root path (list of labels) to every reachable node."""
        p = {self.root: []}
        queue = deque([self.root])
        while queue:
            n = queue.popleft()
            for lab, m in self.nodes[n].children:
                if m not in p:
                    p[m] = p[n] + [lab]
                    queue.append(m)
        return p

    def to_json(self) -> dict:
        depth = self.depths()
        nodes = []
        for n in sorted(self.reachable()):
            node = self.nodes[n]
            nodes.append({
                "id": n, "config": str(node.config), "kind": node.kind,
                "edges": [{"label": f"({depth[n] + 1}, {lab})", "target": m,
                           "back": depth.get(m, 0) <= depth[n]}
                          for lab, m in node.children],
            })
        return {"root": self.root, "nodes": nodes}

    def render(self) -> str:
        depth = self.depths()
        lines = []
        for n in sorted(self.reachable()):
            node = self.nodes[n]
            tag = {"done": "  [done]", "fail": "  [✗]"}.get(node.kind, "")
            lines.append(f"#{n} {node.config}{tag}")
            for lab, m in node.children:
                back = "  (back)" if depth[m] <= depth[n] else ""
                lines.append(f"    ({depth[n] + 1}, {lab}) -> #{m}{back}")
        return "\n".join(lines)


def _make_chooser(chooser):
    if chooser is None:
        return lambda cfg, moves: moves[0][0]
    if callable(chooser):
        return chooser
    picks = deque([chooser] if isinstance(chooser, str) else chooser)

    def pick(cfg, moves):
        if picks:
            want = picks.popleft()
            for lab, _ in moves:
                if lab.name == want or str(lab) == want:
                    return lab
            raise ValueError(f"no C move {want!r} at {cfg}")
        return moves[0][0]
    return pick


def build_config_tree(client: Contract, server: Contract, chooser=None,
                      orch: Orchestrator | None = None) -> ConfigTree:
    """One member of the set of regular configuration trees.

    At C stages only the chooser's pick becomes a child; elsewhere every move
    does.  ``chooser`` is None (first move), a label name or list of names
    consumed in breadth-first order, or a callable (config, moves) -> label.
    With ``orch`` the tree follows the orchestrated turn-based LTS instead.
    """
    pick = _make_chooser(chooser)
    start = TBConfig(client, server) if orch is None else TBOrchConfig(client, orch, server)
    steps = tb_steps if orch is None else tb_orch_steps
    index = {start.key(): 0}
    nodes = [TreeNode(0, start, "inner")]
    queue = deque([0])
    while queue:
        n = queue.popleft()
        node = nodes[n]
        moves = steps(node.config)
        if not moves:
            node.kind = "done" if isinstance(node.config.client, Zero) else "fail"
            continue
        if moves[0][0].player == "C" and len(moves) > 1:
            lab = pick(node.config, moves)
            if isinstance(lab, str):
                lab = next(m for m, _ in moves if m.name == lab or str(m) == lab)
            moves = [m for m in moves if m[0] == lab]
        for lab, cfg in moves:
            k = cfg.key()
            m = index.get(k)
            if m is None:
                m = index[k] = len(nodes)
                nodes.append(TreeNode(m, cfg, "inner"))
                queue.append(m)
            node.children.append((lab, m))
    return ConfigTree(nodes)


def tree_is_xfree(t: ConfigTree) -> bool:
    return all(t.nodes[n].kind != "fail" for n in t.reachable())


def winning_region(client: Contract, server: Contract):
    """Greatest set of configurations from which C can avoid every ✗ leaf."""
    states, edges = explore(TBConfig(client, server), tb_steps)
    win = set(states)
    changed = True
    while changed:
        changed = False
        for k in list(win):
            row = edges[k]
            if not row:
                ok = isinstance(states[k].client, Zero)
            elif row[0][0].player == "C":
                ok = any(m in win for _, m in row)
            else:
                ok = all(m in win for _, m in row)
            if not ok:
                win.discard(k)
                changed = True
    return states, edges, win


def find_xfree_tree(client: Contract, server: Contract):
    """An ✗-free configuration tree if one exists, else None."""
    states, edges, win = winning_region(client, server)
    root = TBConfig(client, server).key()
    if root not in win:
        return None
    succ = {k: {lab: m for lab, m in row} for k, row in edges.items()}

    def choose(cfg, moves):
        row = succ[cfg.key()]
        for lab, _ in moves:
            if row[lab] in win:
                return lab
        raise AssertionError("winning node without a winning move")

    return build_config_tree(client, server, choose)


def exists_winning_strategy(client: Contract, server: Contract) -> bool:
    return find_xfree_tree(client, server) is not None


# ---------------------------------------------------------------- strategies

@dataclass
class Strategy:
    tree: ConfigTree

    def _walk(self, play: Play):
        n = self.tree.root
        for i, e in enumerate(play.events):
            if e.timestamp != i + 1:
                return None
            nxt = [m for lab, m in self.tree.nodes[n].children if lab == e.label]
            if not nxt:
                return None
            n = nxt[0]
        return n

    def suggest(self, play: Play) -> frozenset:
        if play.infinite:
            return frozenset()
        n = self._walk(play)
        if n is None:
            return frozenset()
        t = len(play.events) + 1
        return frozenset(PlayEvent(t, lab) for lab, _ in self.tree.nodes[n].children
                         if lab.player == "C")

    def is_univocal(self) -> bool:
        return all(sum(lab.player == "C" for lab, _ in self.tree.nodes[n].children) <= 1
                   for n in self.tree.reachable())

    def table(self) -> list:
        """(play, suggested event) for every tree path ending at a C move."""
        out = []
        for n, path in sorted(self.tree.paths().items()):
            for ev in self.suggest(play_of(path)):
                out.append((play_of(path), ev))
        return out

    def to_json(self) -> dict:
        return {"tree": self.tree.to_json(),
                "suggestions": [{"play": [str(e) for e in p.events], "event": str(ev)}
                                for p, ev in self.table()]}


def strategy_from_tree(tree: ConfigTree) -> Strategy:
    return Strategy(tree)


def strategy_from_orch(f: Orchestrator, client: Contract, server: Contract) -> Strategy:
    """Σ_f: suggest the C move that the orchestrator allows at each node."""
    return Strategy(build_config_tree(client, server, orch=f))


def is_winning_strategy(sigma: Strategy, client: Contract, server: Contract) -> bool:
    """Every maximal play conforming to sigma is won by C.

    Explores the product of the game with the strategy tree; plays that leave
    the tree get no further C suggestions, and cycles count as infinite plays.
    """
    tree = sigma.tree
    start = (TBConfig(client, server).key(), tree.root)
    configs = {start[0]: TBConfig(client, server)}
    seen = {start}
    queue = deque([start])
    while queue:
        ck, n = queue.popleft()
        moves = tb_steps(configs[ck])
        if not moves:
            if not isinstance(configs[ck].client, Zero):
                return False
            continue
        kids = {} if n is None else dict(tree.nodes[n].children)
        if moves[0][0].player == "C":
            moves = [(lab, c) for lab, c in moves if lab in kids]
            if not moves:
                return False
        for lab, cfg in moves:
            k = cfg.key()
            configs.setdefault(k, cfg)
            st = (k, kids.get(lab))
            if st not in seen:
                seen.add(st)
                queue.append(st)
    return True


def orch_from_strategy(sigma: Strategy, client: Contract | None = None,
                       server: Contract | None = None) -> Orchestrator:
    """The orchestrator read off a winning strategy's tree."""
    tree = sigma.tree
    if not tree_is_xfree(tree):
        raise ValueError("strategy is not winning: its tree has a ✗ leaf")
    used = set()
    stack = []

    def go(n):
        if n in stack:
            used.add(n)
            return OVar(f"x{n}")
        node = tree.nodes[n]
        if not node.children:
            return IDLE
        first = node.children[0][0]
        if first == TICK:
            return IDLE
        stack.append(n)
        if first.player == "C":
            lab, m = node.children[0]
            srv = unfold_all(node.config.server)
            res = Prefix(OrchAct(lab.name, isinstance(srv, AffSum), True), go(m))
        else:
            branches = []
            for _, m in node.children:
                buf = tree.nodes[m]
                if len(buf.children) != 1:
                    raise ValueError(f"buffered node #{m} has no unique consumption")
                lab2, g = buf.children[0]
                branches.append((OrchAct(lab2.name, lab2.player == "A"), go(g)))
            res = Disj(tuple(branches))
        stack.pop()
        if n in used:
            used.discard(n)
            res = ORec(f"x{n}", res)
        return res

    return go(tree.root)
