"""Executable operational semantics.

Three transition systems live here: turn-based configurations (players A,
B and C over single-buffered contracts), client/server systems with
rollback, and orchestrated systems in both the plain and turn-based form.
All step functions are pure and return deterministic, sorted lists.
"""

from __future__ import annotations

from dataclasses import dataclass

from .contracts import (
    ONE, AffSum, Contract, InputSum, IntChoice, Success, _Term, branch_map,
    canonical, pretty, remainder, unfold_all,
)
from .orchterms import Disj, Idle, Orchestrator, Prefix, orch_canonical, ounfold_all


# ------------------------------------------------------------ buffered states

@dataclass(frozen=True, eq=False)
class Zero(_Term):
    def __str__(self):
        return "0"

    def __repr__(self):
        return "ZERO"


ZERO = Zero()


@dataclass(frozen=True, eq=False)
class Buffered(_Term):
    """The state [!a]sigma: output a has been emitted and waits in the buffer."""

    name: str
    cont: Contract

    def __str__(self):
        return f"[!{self.name}]{_paren(self.cont)}"


def _paren(c):
    s = pretty(c)
    return s if len(s) == 1 or s.isidentifier() else f"({s})"


def show_state(x) -> str:
    return str(x) if isinstance(x, (Zero, Buffered)) else pretty(x)


def state_key(x):
    """Canonical key of a buffered contract, so regular-equal states coincide."""
    if isinstance(x, Buffered):
        return Buffered(x.name, canonical(x.cont))
    if isinstance(x, Zero):
        return x
    return canonical(x)


@dataclass(frozen=True, eq=False)
class TBLabel(_Term):
    player: str  # "A", "B" or "C"
    kind: str  # "in", "out" or "tick"
    name: str = ""

    def __post_init__(self):
        if self.kind == "tick" and self.player != "C":
            raise ValueError("tick is a C move")
        if self.kind == "out" and self.player == "C":
            raise ValueError("C never outputs")

    def sort_key(self):
        return (self.player, self.kind != "out", self.name)

    def __str__(self):
        if self.kind == "tick":
            return "C:✓"
        return f"{self.player}:{'!' if self.kind == 'out' else ''}{self.name}"


TICK = TBLabel("C", "tick")


@dataclass(frozen=True, eq=False)
class TBConfig(_Term):
    client: object
    server: object

    def key(self):
        return TBConfig(state_key(self.client), state_key(self.server))

    def __str__(self):
        return f"{show_state(self.client)} ||| {show_state(self.server)}"


@dataclass(frozen=True, eq=False)
class TBOrchConfig(_Term):
    client: object
    orch: Orchestrator
    server: object

    def key(self):
        return TBOrchConfig(state_key(self.client), orch_canonical(self.orch), state_key(self.server))

    def plain(self) -> TBConfig:
        return TBConfig(self.client, self.server)

    def __str__(self):
        return f"{show_state(self.client)} |<{self.orch}>| {show_state(self.server)}"


def _tb_moves(client, server, orch):
    """Shared engine for the plain (orch is None) and orchestrated turn-based LTS.

    Returns (label, client', orch', server') tuples.  Buffering moves only fire
    when the other side has an empty buffer, so at most one side is ever
    buffered, and B never buffers against a client that is already 1.
    """
    if isinstance(client, Zero):
        return []
    c = unfold_all(client) if isinstance(client, Contract) else client
    s = unfold_all(server) if isinstance(server, Contract) else server
    if isinstance(c, Success):
        return [(TICK, ZERO, orch, server)]
    f = None if orch is None else ounfold_all(orch)
    out = []
    c_plain = isinstance(c, Contract)
    s_plain = isinstance(s, Contract)
    if isinstance(c, IntChoice) and s_plain:
        for a, k in c.branches:
            out.append((TBLabel("A", "out", a), Buffered(a, k), orch, server))
    if isinstance(s, IntChoice) and c_plain:
        for a, k in s.branches:
            out.append((TBLabel("B", "out", a), client, orch, Buffered(a, k)))
    if isinstance(c, InputSum) and isinstance(s, Buffered):
        k = branch_map(c).get(s.name)
        if k is not None:
            nf = _consume(f, s.name, server_out=True)
            if nf is not False:
                out.append((TBLabel("A", "in", s.name), k, nf, s.cont))
    if isinstance(s, InputSum) and isinstance(c, Buffered):
        k = branch_map(s).get(c.name)
        if k is not None:
            nf = _consume(f, c.name, server_out=False)
            if nf is not False:
                out.append((TBLabel("B", "in", c.name), c.cont, nf, k))
    if (isinstance(c, InputSum) and isinstance(s, AffSum)) or (
            isinstance(c, AffSum) and isinstance(s, InputSum)):
        sm = branch_map(s)
        for a, ck in c.branches:
            if a not in sm:
                continue
            if f is None:
                nf = None
            elif (isinstance(f, Prefix) and f.act.name == a
                  and f.act.server_out == isinstance(s, AffSum)):
                nf = f.body
            else:
                continue
            out.append((TBLabel("C", "in", a), ck, nf, sm[a]))
    out.sort(key=lambda m: m[0].sort_key())
    return out


def _consume(f, name, server_out):
    """Orchestrator after a plain action, None when unorchestrated, False if blocked."""
    if f is None:
        return None
    if isinstance(f, Disj):
        body = f.lookup(name, server_out)
        return False if body is None else body
    return False


def tb_steps(cfg: TBConfig) -> list:
    return [(lab, TBConfig(c, s)) for lab, c, _, s in _tb_moves(cfg.client, cfg.server, None)]


def tb_orch_steps(cfg: TBOrchConfig) -> list:
    return [(lab, TBOrchConfig(c, f, s))
            for lab, c, f, s in _tb_moves(cfg.client, cfg.server, cfg.orch)]


def tb_stuck_failure(cfg) -> bool:
    """A stuck configuration whose client has not reached 0 is a failure (✗)."""
    return not isinstance(cfg.client, Zero)


# ------------------------------------------------------------------ rollback

@dataclass(frozen=True, eq=False)
class _Circ(_Term):
    def __str__(self):
        return "∘"

    def __repr__(self):
        return "CIRC"


CIRC = _Circ()


def _entry_key(e):
    return e if e is CIRC else canonical(e)


def _show_entry(e):
    return "∘" if e is CIRC else pretty(e)


@dataclass(frozen=True, eq=False)
class HContract(_Term):
    stack: tuple
    current: object

    @staticmethod
    def fresh(c: Contract) -> "HContract":
        return HContract((), c)

    def key(self):
        return HContract(tuple(_entry_key(e) for e in self.stack), _entry_key(self.current))

    def is_success(self) -> bool:
        return self.current is not CIRC and isinstance(unfold_all(self.current), Success)

    def __str__(self):
        inner = ":".join(_show_entry(e) for e in self.stack)
        return f"<{inner}>{_paren_entry(self.current)}"


def _paren_entry(e):
    return "∘" if e is CIRC else _paren(e)


@dataclass(frozen=True, eq=False)
class RbLabel(_Term):
    kind: str  # "in", "out", "tau" or "rb"
    name: str = ""

    def __str__(self):
        return {"in": self.name, "out": "!" + self.name,
                "tau": "τ", "rb": "rb"}[self.kind]


def rbk_contract_steps(hc: HContract) -> list:
    out = []
    cur = hc.current
    if cur is not CIRC:
        u = unfold_all(cur)
        if isinstance(u, (InputSum, AffSum)) and len(u.branches) >= 2:
            kind = "in" if isinstance(u, InputSum) else "out"
            for a, k in u.branches:
                out.append((RbLabel(kind, a), HContract(hc.stack + (remainder(u, a),), k)))
        elif isinstance(u, InputSum) or (isinstance(u, IntChoice) and len(u.branches) == 1):
            a, k = u.branches[0]
            kind = "in" if isinstance(u, InputSum) else "out"
            out.append((RbLabel(kind, a), HContract(hc.stack + (CIRC,), k)))
        elif isinstance(u, IntChoice):
            for a, k in u.branches:
                out.append((RbLabel("tau", a), HContract(hc.stack, IntChoice(((a, k),)))))
    if hc.stack:
        out.append((RbLabel("rb"), HContract(hc.stack[:-1], hc.stack[-1])))
    return out


@dataclass(frozen=True, eq=False)
class SysLabel(_Term):
    rule: str  # "comm", "tau" or "rbk"
    detail: str = ""

    def __str__(self):
        if self.rule == "rbk":
            return "rbk"
        return f"{'τ' if self.rule == 'tau' else 'comm'}({self.detail})"


@dataclass(frozen=True, eq=False)
class RbkSystem(_Term):
    client: HContract
    server: HContract

    @staticmethod
    def start(c: Contract, s: Contract) -> "RbkSystem":
        return RbkSystem(HContract.fresh(c), HContract.fresh(s))

    def key(self):
        return RbkSystem(self.client.key(), self.server.key())

    def __str__(self):
        return f"{self.client} || {self.server}"


def rbk_system_labelled_steps(sys: RbkSystem) -> list:
    cm = rbk_contract_steps(sys.client)
    sm = rbk_contract_steps(sys.server)
    out = []
    for lc, c2 in cm:
        if lc.kind in ("in", "out"):
            for ls, s2 in sm:
                if ls.name == lc.name and {lc.kind, ls.kind} == {"in", "out"}:
                    out.append((SysLabel("comm", lc.name), RbkSystem(c2, s2)))
        elif lc.kind == "tau":
            out.append((SysLabel("tau", "client:" + lc.name), RbkSystem(c2, sys.server)))
    for ls, s2 in sm:
        if ls.kind == "tau":
            out.append((SysLabel("tau", "server:" + ls.name), RbkSystem(sys.client, s2)))
    if out:
        return out
    if not sys.client.is_success():
        crb = [h for lab, h in cm if lab.kind == "rb"]
        srb = [h for lab, h in sm if lab.kind == "rb"]
        if crb and srb:
            return [(SysLabel("rbk"), RbkSystem(crb[0], srb[0]))]
    return []


def rbk_system_steps(sys: RbkSystem) -> list:
    return [s for _, s in rbk_system_labelled_steps(sys)]


def explore(start, steps, key=lambda x: x.key(), limit=None):
    """Breadth-first reachability over a quotient graph.

    Returns (states, edges) where states maps key -> representative and edges
    maps key -> [(label, successor key)].  ``limit`` bounds the number of
    states and raises RuntimeError when exceeded.
    """
    k0 = key(start)
    states = {k0: start}
    edges = {}
    queue = [k0]
    i = 0
    while i < len(queue):
        k = queue[i]
        i += 1
        row = []
        for lab, nxt in steps(states[k]):
            nk = key(nxt)
            if nk not in states:
                if limit is not None and len(states) >= limit:
                    raise RuntimeError(f"state space exceeds {limit} states")
                states[nk] = nxt
                queue.append(nk)
            row.append((lab, nk))
        edges[k] = row
    return states, edges


def rbk_explore(c: Contract, s: Contract, limit=None):
    return explore(RbkSystem.start(c, s), rbk_system_labelled_steps, limit=limit)


# ---------------------------------------------------- plain orchestrated LTS

@dataclass(frozen=True, eq=False)
class OrchLabel(_Term):
    kind: str  # "silent", "tau" or "plus"
    detail: str = ""

    def __str__(self):
        sym = {"silent": "~", "tau": "τ", "plus": "+"}[self.kind]
        return f"{sym}({self.detail})"


@dataclass(frozen=True, eq=False)
class OrchSystem(_Term):
    client: Contract
    orch: Orchestrator
    server: Contract

    def key(self):
        return OrchSystem(canonical(self.client), orch_canonical(self.orch), canonical(self.server))

    def __str__(self):
        return f"{pretty(self.client)} <{self.orch}> {pretty(self.server)}"


def contract_moves(c: Contract) -> list:
    """The contract LTS with affectible outputs labelled !a+ and internal choice silent."""
    u = unfold_all(c)
    if isinstance(u, InputSum):
        return [(("in", a), k) for a, k in u.branches]
    if isinstance(u, AffSum):
        return [(("out+", a), k) for a, k in u.branches]
    if isinstance(u, IntChoice):
        if len(u.branches) == 1:
            a, k = u.branches[0]
            return [(("out", a), k)]
        return [(("silent", a), IntChoice(((a, k),))) for a, k in u.branches]
    return []


def orch_steps(sys: OrchSystem) -> list:
    """One-step transitions.  Plain synchronizations advance the orchestrator
    to the continuation of the matching disjunct (see the decisions ledger)."""
    cm = contract_moves(sys.client)
    sm = contract_moves(sys.server)
    f = ounfold_all(sys.orch)
    out = []
    for (k, a), c2 in cm:
        if k == "silent":
            out.append((OrchLabel("silent", "client:" + a), OrchSystem(c2, sys.orch, sys.server)))
    for (k, a), s2 in sm:
        if k == "silent":
            out.append((OrchLabel("silent", "server:" + a), OrchSystem(sys.client, sys.orch, s2)))
    for (kc, a), c2 in cm:
        for (ks, b), s2 in sm:
            if a != b:
                continue
            if (kc, ks) in (("in", "out"), ("out", "in")) and isinstance(f, Disj):
                body = f.lookup(a, server_out=(ks == "out"))
                if body is not None:
                    out.append((OrchLabel("tau", a), OrchSystem(c2, body, s2)))
            elif (kc, ks) in (("in", "out+"), ("out+", "in")) and isinstance(f, Prefix):
                if f.act.name == a and f.act.server_out == (ks == "out+"):
                    out.append((OrchLabel("plus", a), OrchSystem(c2, f.body, s2)))
    return out


def silent_closure(sys: OrchSystem) -> list:
    seen = {sys.key(): sys}
    work = [sys]
    while work:
        x = work.pop()
        for lab, y in orch_steps(x):
            if lab.kind == "silent" and y.key() not in seen:
                seen[y.key()] = y
                work.append(y)
    return list(seen.values())


def orch_big_steps(sys: OrchSystem) -> list:
    """The derived relation silent* followed by one tau or plus step."""
    out = {}
    for x in silent_closure(sys):
        for lab, y in orch_steps(x):
            if lab.kind != "silent":
                out.setdefault((lab, y.key()), (lab, y))
    return list(out.values())


def orch_is_stuck(sys: OrchSystem) -> bool:
    return not orch_steps(sys)


def is_success_contract(c) -> bool:
    return isinstance(c, Contract) and isinstance(unfold_all(c), Success)


