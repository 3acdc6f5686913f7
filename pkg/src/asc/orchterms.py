"""Orchestrator terms, their surface syntax, and regular-tree equality.

An orchestration action is written from the server's point of view first:
``<!a,a>`` lets the server send ``a`` to the client, ``<a,!a>`` lets the
client send ``a`` to the server.  A trailing ``+`` marks an action that
selects an affectible branch.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache

from .contracts import ContractError, _Term, emit_term, minimize_graph


class OrchError(ContractError):
    pass


class OrchSyntaxError(OrchError):
    pass


class Orchestrator(_Term):
    def __str__(self):
        return pretty_orch(self)


@dataclass(frozen=True, eq=False)
class OrchAct(_Term):
    name: str
    server_out: bool
    plus: bool = False

    def sort_key(self):
        return (self.name, not self.server_out)

    def plain(self) -> "OrchAct":
        return OrchAct(self.name, self.server_out, False) if self.plus else self

    def promoted(self) -> "OrchAct":
        return self if self.plus else OrchAct(self.name, self.server_out, True)

    def __str__(self):
        a = self.name
        pair = f"<!{a},{a}>" if self.server_out else f"<{a},!{a}>"
        return pair + ("+" if self.plus else "")


@dataclass(frozen=True, eq=False)
class Idle(Orchestrator):
    def __repr__(self):
        return "IDLE"


IDLE = Idle()


@dataclass(frozen=True, eq=False)
class Prefix(Orchestrator):
    act: OrchAct
    body: Orchestrator

    def __post_init__(self):
        if not self.act.plus:
            raise OrchError("a single prefix must be an affectible action; use a disjunction")


@dataclass(frozen=True, eq=False)
class Disj(Orchestrator):
    branches: tuple

    def __post_init__(self):
        items = self.branches.items() if isinstance(self.branches, dict) else self.branches
        items = tuple(sorted(items, key=lambda p: p[0].sort_key()))
        if not items:
            raise OrchError("empty disjunction")
        for i, (act, body) in enumerate(items):
            if act.plus:
                raise OrchError(f"affectible action {act} inside a disjunction")
            if not isinstance(body, Orchestrator):
                raise OrchError(f"bad disjunct {act}")
            if i and items[i - 1][0] == act:
                raise OrchError(f"duplicate action {act} in a disjunction")
        object.__setattr__(self, "branches", items)

    def lookup(self, name: str, server_out: bool):
        for act, body in self.branches:
            if act.name == name and act.server_out == server_out:
                return body
        return None

    def acts(self):
        return [act for act, _ in self.branches]


@dataclass(frozen=True, eq=False)
class OVar(Orchestrator):
    name: str


@dataclass(frozen=True, eq=False)
class ORec(Orchestrator):
    var: str
    body: Orchestrator

    def __post_init__(self):
        b = self.body
        while isinstance(b, ORec):
            b = b.body
        if isinstance(b, OVar):
            raise OrchError(f"rec {self.var} has an unguarded body")


def ofree_vars(f: Orchestrator, bound: frozenset = frozenset()) -> set:
    if isinstance(f, OVar):
        return set() if f.name in bound else {f.name}
    if isinstance(f, ORec):
        return ofree_vars(f.body, bound | {f.var})
    if isinstance(f, Prefix):
        return ofree_vars(f.body, bound)
    if isinstance(f, Disj):
        out = set()
        for _, b in f.branches:
            out |= ofree_vars(b, bound)
        return out
    return set()


def osubstitute(f: Orchestrator, name: str, repl: Orchestrator) -> Orchestrator:
    if isinstance(f, OVar):
        return repl if f.name == name else f
    if isinstance(f, ORec):
        return f if f.var == name else ORec(f.var, osubstitute(f.body, name, repl))
    if isinstance(f, Prefix):
        return Prefix(f.act, osubstitute(f.body, name, repl))
    if isinstance(f, Disj):
        return Disj(tuple((a, osubstitute(b, name, repl)) for a, b in f.branches))
    return f


def ounfold_all(f: Orchestrator) -> Orchestrator:
    while isinstance(f, ORec):
        f = osubstitute(f.body, f.var, f)
    return f


def ochildren(f: Orchestrator) -> list:
    u = ounfold_all(f)
    if isinstance(u, Prefix):
        return [ounfold_all(u.body)]
    if isinstance(u, Disj):
        return [ounfold_all(b) for _, b in u.branches]
    return []


def _oshape(u: Orchestrator):
    if isinstance(u, Idle):
        return ("1",)
    if isinstance(u, Prefix):
        return ("+", u.act.name, u.act.server_out)
    if isinstance(u, Disj):
        return ("v", tuple((a.name, a.server_out) for a in u.acts()))
    raise OrchError(f"open orchestrator in regular-tree operation: {u!r}")


def orch_equal_regular(f: Orchestrator, g: Orchestrator) -> bool:
    seen = set()
    work = [(ounfold_all(f), ounfold_all(g))]
    while work:
        p = work.pop()
        if p in seen:
            continue
        seen.add(p)
        u, v = p
        if _oshape(u) != _oshape(v):
            return False
        work.extend(zip(ochildren(u), ochildren(v)))
    return True


def _build(shape, kids):
    if shape[0] == "1":
        return IDLE
    if shape[0] == "+":
        return Prefix(OrchAct(shape[1], shape[2], True), kids[0])
    return Disj(tuple((OrchAct(n, o), k) for (n, o), k in zip(shape[1], kids)))


@lru_cache(maxsize=None)
def orch_canonical(f: Orchestrator) -> Orchestrator:
    root, graph = minimize_graph(ounfold_all(f), _oshape, ochildren)
    return emit_term(graph, root, _build, OVar, ORec)


def orch_size(f: Orchestrator) -> int:
    if isinstance(f, Prefix):
        return 1 + orch_size(f.body)
    if isinstance(f, Disj):
        return 1 + sum(orch_size(b) for _, b in f.branches)
    if isinstance(f, ORec):
        return 1 + orch_size(f.body)
    return 1


# -------------------------------------------------------------- printing

def _ocont(f: Orchestrator) -> str:
    f = _strip_vacuous(f)
    if isinstance(f, Idle):
        return ""
    s = pretty_orch(f)
    if isinstance(f, ORec) or (isinstance(f, Disj) and len(f.branches) > 1):
        s = f"({s})"
    return "." + s


def _strip_vacuous(f):
    while isinstance(f, ORec) and f.var not in ofree_vars(f.body):
        f = f.body
    return f


def pretty_orch(f: Orchestrator) -> str:
    """Print with vacuous rec binders elided."""
    f = _strip_vacuous(f)
    if isinstance(f, Idle):
        return "1"
    if isinstance(f, OVar):
        return f.name
    if isinstance(f, ORec):
        return f"rec {f.var} . {pretty_orch(f.body)}"
    if isinstance(f, Prefix):
        return f"{f.act}{_ocont(f.body)}"
    return r" \/ ".join(f"{a}{_ocont(b)}" for a, b in f.branches)


# --------------------------------------------------------------- parsing

_OTOKEN = re.compile(
    r"\s*(?:(?P<or>\\/|∨)|(?P<sym>[<>,!+.()])|(?P<one>1(?![A-Za-z0-9_]))"
    r"|(?P<id>[A-Za-z_][A-Za-z0-9_']*))"
)


class _OParser:
    def __init__(self, text):
        self.toks = []
        pos = 0
        text = text.rstrip()
        while pos < len(text):
            m = _OTOKEN.match(text, pos)
            if not m or m.end() == pos:
                col = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
                raise OrchSyntaxError(f"unexpected character {text[col]!r}", col)
            kind = m.lastgroup
            val = m.group(kind)
            if kind in ("sym", "one"):
                kind = val
            elif kind == "or":
                kind = val = "\\/"
            elif val == "rec":
                kind = "rec"
            self.toks.append((kind, val, m.start(m.lastgroup)))
            pos = m.end()
        self.toks.append(("eof", "", len(text)))
        self.i = 0

    def peek(self):
        return self.toks[self.i][0]

    def take(self, kind=None):
        tok = self.toks[self.i]
        if kind is not None and tok[0] != kind:
            got = "end of input" if tok[0] == "eof" else repr(tok[1])
            raise OrchSyntaxError(f"expected {kind!r}, found {got}", tok[2])
        self.i += 1
        return tok

    def parse(self):
        f = self.orch()
        if self.peek() != "eof":
            tok = self.toks[self.i]
            raise OrchSyntaxError(f"unexpected {tok[1]!r}", tok[2])
        return f

    def orch(self):
        if self.peek() == "rec":
            self.take()
            x = self.take("id")[1]
            self.take(".")
            return ORec(x, self.orch())
        at = self.toks[self.i][2]
        items = [self.item()]
        while self.peek() == "\\/":
            self.take()
            items.append(self.item())
        if len(items) == 1:
            return self.single(items[0])
        branches = []
        for kind, payload in items:
            if kind == "act":
                act, body = payload
                if act.plus:
                    raise OrchSyntaxError(f"affectible action {act} inside a disjunction", at)
                branches.append((act, body))
            elif kind == "term" and isinstance(payload, Disj):
                branches.extend(payload.branches)
            else:
                raise OrchSyntaxError("disjuncts must be prefixed by plain actions", at)
        try:
            return Disj(tuple(branches))
        except OrchError as e:
            raise OrchSyntaxError(str(e), at) from None

    @staticmethod
    def single(item):
        kind, payload = item
        if kind == "act":
            act, body = payload
            return Prefix(act, body) if act.plus else Disj(((act, body),))
        return payload

    def side(self):
        bang = self.peek() == "!"
        if bang:
            self.take()
        return bang, self.take("id")[1]

    def item(self):
        k = self.peek()
        if k == "<":
            at = self.take()[2]
            out1, n1 = self.side()
            self.take(",")
            out2, n2 = self.side()
            self.take(">")
            if n1 != n2 or out1 == out2:
                raise OrchSyntaxError("an orchestration action pairs a name with its co-name", at)
            plus = False
            if self.peek() == "+":
                self.take()
                plus = True
            body = IDLE
            if self.peek() == ".":
                self.take()
                body = self.cont()
            return ("act", (OrchAct(n1, out1, plus), body))
        if k == "(":
            self.take()
            f = self.orch()
            self.take(")")
            return ("term", f)
        if k == "1":
            self.take()
            return ("term", IDLE)
        if k == "id":
            return ("term", OVar(self.take()[1]))
        tok = self.toks[self.i]
        got = "end of input" if tok[0] == "eof" else repr(tok[1])
        raise OrchSyntaxError(f"expected an orchestrator, found {got}", tok[2])

    def cont(self):
        if self.peek() == "rec":
            return self.orch()
        return self.single(self.item())


def parse_orch(text: str) -> Orchestrator:
    f = _OParser(text).parse()
    fv = ofree_vars(f)
    if fv:
        raise OrchError(f"free orchestrator variable(s): {', '.join(sorted(fv))}")
    return f


BUYER_SELLER_ORCH = parse_orch("<bag,!bag>+.<!price,price>.(<card,!card> \\/ <cash,!cash>)")
