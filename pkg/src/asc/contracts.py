"""Affectible session contracts: terms, surface syntax, and regular-tree operations.

A contract is one of

    1                      success
    ?a.C + ?b.D            input sum (may have a single branch)
    !a.C + !b.D            affectible output sum (two or more branches)
    !a.C (+) !b.D          internal output choice (a lone ``!a.C`` is one)
    x, rec x . C           recursion, read equi-recursively

Branches are kept sorted by label, so choices are compared modulo
commutativity.  Terms are immutable and hash by structure; the hash is cached.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, fields
from functools import lru_cache
from typing import Iterable


class ContractError(ValueError):
    """Base class for malformed contract input."""

    def __init__(self, message: str, pos: int | None = None):
        self.pos = pos
        if pos is not None:
            message = f"{message} (at column {pos + 1})"
        super().__init__(message)


class ContractSyntaxError(ContractError):
    pass


class DuplicateLabelError(ContractError):
    pass


class UnguardedRecursionError(ContractError):
    pass


class FreeVariableError(ContractError):
    pass


class _Term:
    """Structural equality with a cached hash, shared by contracts and orchestrators."""

    def _key(self):
        return tuple(getattr(self, f.name) for f in fields(self))

    def __hash__(self):
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash((type(self).__name__,) + self._key())
            object.__setattr__(self, "_hash", h)
        return h

    def __eq__(self, other):
        if self is other:
            return True
        if type(self) is not type(other) or hash(self) != hash(other):
            return False
        return self._key() == other._key()

    def __ne__(self, other):
        return not self == other


class Contract(_Term):
    def __str__(self):
        return pretty(self)


def _normalize_branches(branches, kind: str, min_size: int):
    if isinstance(branches, dict):
        branches = branches.items()
    items = tuple(sorted(((str(a), c) for a, c in branches), key=lambda p: p[0]))
    if len(items) < min_size:
        raise ContractError(f"{kind} needs at least {min_size} branch(es)")
    for i in range(1, len(items)):
        if items[i][0] == items[i - 1][0]:
            raise DuplicateLabelError(f"duplicate label {items[i][0]!r} in {kind}")
    for a, c in items:
        if not a or not isinstance(c, Contract):
            raise ContractError(f"bad branch {a!r} in {kind}")
    return items


@dataclass(frozen=True, eq=False)
class Success(Contract):
    def __repr__(self):
        return "ONE"


ONE = Success()


@dataclass(frozen=True, eq=False)
class InputSum(Contract):
    branches: tuple

    def __post_init__(self):
        object.__setattr__(self, "branches", _normalize_branches(self.branches, "input sum", 1))


@dataclass(frozen=True, eq=False)
class AffSum(Contract):
    """External choice of outputs; the partner or a mediator picks the branch."""

    branches: tuple

    def __post_init__(self):
        object.__setattr__(
            self, "branches", _normalize_branches(self.branches, "affectible output sum", 2)
        )


@dataclass(frozen=True, eq=False)
class IntChoice(Contract):
    branches: tuple

    def __post_init__(self):
        object.__setattr__(
            self, "branches", _normalize_branches(self.branches, "internal choice", 1)
        )


@dataclass(frozen=True, eq=False)
class Var(Contract):
    name: str


@dataclass(frozen=True, eq=False)
class Rec(Contract):
    var: str
    body: Contract

    def __post_init__(self):
        b = self.body
        while isinstance(b, Rec):
            b = b.body
        if isinstance(b, Var):
            raise UnguardedRecursionError(f"rec {self.var} has an unguarded body")


Sum = (InputSum, AffSum, IntChoice)


# ---------------------------------------------------------------- helpers

def is_sum(c) -> bool:
    return isinstance(c, Sum)


def labels(c: Contract) -> tuple:
    return tuple(a for a, _ in c.branches)


def branch_map(c: Contract) -> dict:
    return dict(c.branches)


def is_output(c: Contract) -> bool:
    return isinstance(c, (AffSum, IntChoice))


def remainder(c: Contract, label: str):
    """The sum left after removing one branch, or None when nothing is left.

    A single leftover output is an internal choice, never a one-branch
    affectible sum.
    """
    rest = tuple(p for p in c.branches if p[0] != label)
    if not rest:
        return None
    if isinstance(c, InputSum):
        return InputSum(rest)
    if isinstance(c, AffSum):
        return AffSum(rest) if len(rest) >= 2 else IntChoice(rest)
    return IntChoice(rest)


def free_vars(c: Contract, bound: frozenset = frozenset()) -> set:
    if isinstance(c, Var):
        return set() if c.name in bound else {c.name}
    if isinstance(c, Rec):
        return free_vars(c.body, bound | {c.var})
    if is_sum(c):
        out = set()
        for _, k in c.branches:
            out |= free_vars(k, bound)
        return out
    return set()


def is_closed(c: Contract) -> bool:
    return not free_vars(c)


def has_rec(c: Contract) -> bool:
    cached = c.__dict__.get("_has_rec")
    if cached is None:
        if isinstance(c, (Rec, Var)):
            cached = True
        elif is_sum(c):
            cached = any(has_rec(k) for _, k in c.branches)
        else:
            cached = False
        object.__setattr__(c, "_has_rec", cached)
    return cached


def depth(c: Contract) -> int:
    """Syntactic depth of a recursion-free contract (1 has depth 0)."""
    if has_rec(c):
        raise ValueError("depth is only defined for recursion-free contracts")
    if not is_sum(c):
        return 0
    return 1 + max(depth(k) for _, k in c.branches)


def size(c: Contract) -> int:
    if is_sum(c):
        return 1 + sum(size(k) for _, k in c.branches)
    if isinstance(c, Rec):
        return 1 + size(c.body)
    return 1


def substitute(c: Contract, name: str, repl: Contract) -> Contract:
    # repl is closed at every call site, so capture cannot happen
    if isinstance(c, Var):
        return repl if c.name == name else c
    if isinstance(c, Rec):
        if c.var == name:
            return c
        return Rec(c.var, substitute(c.body, name, repl))
    if is_sum(c):
        if not has_rec(c):
            return c
        return type(c)(tuple((a, substitute(k, name, repl)) for a, k in c.branches))
    return c


def unfold(c: Contract) -> Contract:
    if isinstance(c, Rec):
        return substitute(c.body, c.var, c)
    return c


def unfold_all(c: Contract) -> Contract:
    while isinstance(c, Rec):
        c = unfold(c)
    return c


def children(c: Contract) -> list:
    u = unfold_all(c)
    return [unfold_all(k) for _, k in u.branches] if is_sum(u) else []


def subterm_closure(c: Contract) -> frozenset:
    start = unfold_all(c)
    seen = {start}
    work = [start]
    while work:
        t = work.pop()
        for k in children(t):
            if k not in seen:
                seen.add(k)
                work.append(k)
    return frozenset(seen)


def _shape(t: Contract):
    if is_sum(t):
        return (type(t).__name__, labels(t))
    if isinstance(t, Success):
        return ("1",)
    raise ContractError(f"open term in regular-tree operation: {t!r}")


def equal_regular(c1: Contract, c2: Contract) -> bool:
    """Bisimulation over pairs of closure elements."""
    seen = set()
    work = [(unfold_all(c1), unfold_all(c2))]
    while work:
        p = work.pop()
        if p in seen:
            continue
        seen.add(p)
        t1, t2 = p
        if _shape(t1) != _shape(t2):
            return False
        if is_sum(t1):
            for (_, k1), (_, k2) in zip(t1.branches, t2.branches):
                work.append((unfold_all(k1), unfold_all(k2)))
    return True


# ------------------------------------------------------- canonical forms

def minimize_graph(root, shape, succ):
    """Minimal automaton of a regular tree given by ``shape`` and ordered ``succ``.

    Returns (root block, {block: (shape, [child blocks])}), blocks numbered in
    breadth-first order from the root so the result is canonical.
    """
    index = {root: 0}
    nodes = [root]
    edges = []
    i = 0
    while i < len(nodes):
        n = nodes[i]
        row = []
        for k in succ(n):
            j = index.get(k)
            if j is None:
                j = index[k] = len(nodes)
                nodes.append(k)
            row.append(j)
        edges.append(row)
        i += 1
    shapes = [shape(n) for n in nodes]
    ids = {}
    block = [ids.setdefault(s, len(ids)) for s in shapes]
    while True:
        sigs = {}
        new = [sigs.setdefault((block[i], tuple(block[j] for j in edges[i])), len(sigs))
               for i in range(len(nodes))]
        if len(sigs) == len(set(block)):
            block = new
            break
        block = new
    order = {}
    graph = {}
    queue = [block[0]]
    order[block[0]] = 0
    rep = {}
    for i, b in enumerate(block):
        rep.setdefault(b, i)
    while queue:
        b = queue.pop(0)
        i = rep[b]
        kids = []
        for j in edges[i]:
            cb = block[j]
            if cb not in order:
                order[cb] = len(order)
                queue.append(cb)
            kids.append(order[cb])
        graph[order[b]] = (shapes[i], kids)
    return 0, graph


def emit_term(graph, root, build, make_var, make_rec):
    """Turn a minimized graph back into a closed term with rec binders on cycles."""
    names = {}
    used = set()
    stack = []

    def go(n):
        if n in stack:
            used.add(n)
            return make_var(names[n])
        names.setdefault(n, f"x{n}")
        stack.append(n)
        shape_, kids = graph[n]
        body = build(shape_, [go(k) for k in kids])
        stack.pop()
        if n in used:
            used.discard(n)
            return make_rec(names[n], body)
        return body

    return go(root)


def _build_contract(shape_, kids):
    if shape_[0] == "1":
        return ONE
    cls = {"InputSum": InputSum, "AffSum": AffSum, "IntChoice": IntChoice}[shape_[0]]
    return cls(tuple(zip(shape_[1], kids)))


@lru_cache(maxsize=None)
def canonical(c: Contract) -> Contract:
    """A representative that depends only on the denoted regular tree.

    Recursion-free terms are their own representative.  Two closed contracts
    are equal_regular exactly when their canonical forms are equal.
    """
    if not has_rec(c):
        return c
    root, graph = minimize_graph(unfold_all(c), _shape, children)
    return emit_term(graph, root, _build_contract, Var, Rec)


# ----------------------------------------------------------- quasi-dual

def quasi_dual(c: Contract) -> Contract:
    if isinstance(c, Success) or isinstance(c, Var):
        return c
    if isinstance(c, Rec):
        return Rec(c.var, quasi_dual(c.body))
    qd = tuple((a, quasi_dual(k)) for a, k in c.branches)
    if isinstance(c, InputSum):
        return IntChoice(qd)
    return InputSum(qd)


# -------------------------------------------------------------- printing

def _cont(c: Contract) -> str:
    if isinstance(c, Success):
        return ""
    s = pretty(c)
    if isinstance(c, Rec) or (is_sum(c) and len(c.branches) > 1):
        s = f"({s})"
    return "." + s


def pretty(c: Contract) -> str:
    if isinstance(c, Success):
        return "1"
    if isinstance(c, Var):
        return c.name
    if isinstance(c, Rec):
        return f"rec {c.var} . {pretty(c.body)}"
    mark = "?" if isinstance(c, InputSum) else "!"
    parts = [f"{mark}{a}{_cont(k)}" for a, k in c.branches]
    return (" (+) " if isinstance(c, IntChoice) else " + ").join(parts)


# --------------------------------------------------------------- parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<oplus>\(\s*\+\s*\)|⊕)|(?P<sym>[?!.+()])|(?P<one>1(?![A-Za-z0-9_]))"
    r"|(?P<id>[A-Za-z_][A-Za-z0-9_']*))"
)


def tokenize(text: str, error=ContractSyntaxError):
    toks = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            col = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise error(f"unexpected character {text[col]!r}", col)
        start = m.start(m.lastgroup)
        kind = m.lastgroup
        val = m.group(kind)
        if kind == "oplus":
            kind = val = "(+)"
        elif kind == "sym" or kind == "one":
            kind = val
        elif kind == "id" and val == "rec":
            kind = "rec"
        toks.append((kind, val, start))
        pos = m.end()
    toks.append(("eof", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text):
        self.toks = tokenize(text)
        self.i = 0
        self.notes = []

    def peek(self):
        return self.toks[self.i][0]

    def pos(self):
        return self.toks[self.i][2]

    def take(self, kind=None):
        tok = self.toks[self.i]
        if kind is not None and tok[0] != kind:
            want = "identifier" if kind == "id" else repr(kind)
            got = "end of input" if tok[0] == "eof" else repr(tok[1])
            raise ContractSyntaxError(f"expected {want}, found {got}", tok[2])
        self.i += 1
        return tok

    def parse(self):
        c = self.expr()
        if self.peek() != "eof":
            raise ContractSyntaxError(f"unexpected {self.toks[self.i][1]!r}", self.pos())
        return c

    def expr(self):
        if self.peek() == "rec":
            self.take()
            x = self.take("id")[1]
            self.take(".")
            at = self.pos()
            body = self.expr()
            try:
                return Rec(x, body)
            except UnguardedRecursionError as e:
                raise UnguardedRecursionError(str(e), at) from None
        start = self.pos()
        operands = [self.operand()]
        op = None
        while self.peek() in ("+", "(+)"):
            tok = self.take()
            if op is not None and tok[0] != op:
                raise ContractSyntaxError("mixed '+' and '(+)' at one level", tok[2])
            op = tok[0]
            operands.append(self.operand())
        if op is None:
            kind, payload = operands[0]
            if kind == "branches":
                return self.build(None, payload, start)
            return payload
        branches = []
        for kind, payload in operands:
            if kind == "branches":
                branches.extend(payload)
            elif kind == "paren" and self.fits(payload, op):
                pol = "?" if isinstance(payload, InputSum) else "!"
                branches.extend((pol, a, k) for a, k in payload.branches)
            else:
                raise ContractSyntaxError("choice operands must be prefixed actions", start)
        return self.build(op, branches, start)

    def build(self, op, branches, at):
        pols = {p for p, _, _ in branches}
        if len(pols) > 1:
            raise ContractSyntaxError("inputs and outputs mixed in one choice", at)
        pol = pols.pop()
        pairs = [(a, k) for _, a, k in branches]
        try:
            if op == "(+)":
                if pol == "?":
                    raise ContractSyntaxError("internal choice needs outputs", at)
                return IntChoice(pairs)
            if pol == "?":
                return InputSum(pairs)
            if len(pairs) == 1:
                self.notes.append(
                    f"single output !{pairs[0][0]} read as an internal choice (column {at + 1})"
                )
                return IntChoice(pairs)
            return AffSum(pairs)
        except DuplicateLabelError as e:
            raise DuplicateLabelError(str(e), at) from None

    def operand(self):
        k = self.peek()
        if k in ("?", "!"):
            pol = self.take()[0]
            name = self.take("id")[1]
            cont = ONE
            if self.peek() == ".":
                self.take()
                cont = self.continuation()
            return ("branches", [(pol, name, cont)])
        if k == "(":
            self.take()
            inner = self.expr()
            self.take(")")
            return ("paren", inner)
        return ("term", self.atom())

    @staticmethod
    def fits(c, op):
        # a parenthesised sum can be flattened into a sum built with the same operator
        if op == "(+)":
            return isinstance(c, IntChoice)
        return isinstance(c, (InputSum, AffSum)) or (
            isinstance(c, IntChoice) and len(c.branches) == 1)

    def continuation(self):
        k = self.peek()
        if k == "rec":
            return self.expr()
        if k in ("?", "!"):
            at = self.pos()
            _, payload = self.operand()
            return self.build(None, payload, at)
        if k == "(":
            self.take()
            inner = self.expr()
            self.take(")")
            return inner
        return self.atom()

    def atom(self):
        k = self.peek()
        if k == "1":
            self.take()
            return ONE
        if k == "id":
            return Var(self.take()[1])
        got = "end of input" if k == "eof" else repr(self.toks[self.i][1])
        raise ContractSyntaxError(f"expected a contract, found {got}", self.pos())


def parse_with_notes(text: str):
    p = _Parser(text)
    c = p.parse()
    fv = free_vars(c)
    if fv:
        raise FreeVariableError(f"free variable(s): {', '.join(sorted(fv))}")
    return c, p.notes


def parse(text: str) -> Contract:
    return parse_with_notes(text)[0]


def parse_many(texts: Iterable[str]) -> list:
    return [parse(t) for t in texts]


BUYER = parse("!bag.?price.(!card (+) !cash) + !belt.?price.(!card (+) !cash)")
SELLER = parse("?bag.!price.(?card + ?cash) + ?belt.!price.?cash")
SELLER_II = parse("?belt.!price.?cash + ?bag.(!price.(?card + ?cash + ?cheque) + !scratchcard)")
