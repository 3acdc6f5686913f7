"""Server substitutability: the proof system for ≪, its approximants, and
derivations read as orchestrator functors."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .contracts import (
    AffSum, Contract, InputSum, IntChoice, Success, branch_map, canonical,
    parse, pretty, unfold_all,
)
from .orchterms import (
    IDLE, Disj, OrchAct, Orchestrator, ORec, OVar, Prefix, orch_canonical, ounfold_all,
)

SAX, SHYP = "Ax-≪", "Hyp-≪"
OPLUS_PLUS, PLUS_PLUS_1, PLUS_PLUS_2, OPLUS_OPLUS = "⊕·+-≪", "+·+-≪-1", "+·+-≪-2", "⊕·⊕-≪"
SUB_RULES = (SAX, SHYP, OPLUS_PLUS, PLUS_PLUS_1, PLUS_PLUS_2, OPLUS_OPLUS)


@dataclass(frozen=True)
class SubJudgment:
    lower: Contract
    upper: Contract

    @staticmethod
    def of(lower, upper) -> "SubJudgment":
        return SubJudgment(canonical(lower), canonical(upper))

    def __str__(self):
        return f"{pretty(self.lower)} << {pretty(self.upper)}"


@dataclass(frozen=True)
class SubDerivation:
    rule: str
    env: frozenset
    judgment: SubJudgment
    premises: tuple = ()
    branch: str | None = None

    def rules(self) -> list:
        out = [self.rule]
        for p in self.premises:
            out.extend(p.rules())
        return out

    def render(self, indent: int = 0) -> str:
        tag = f"{self.rule} [{self.branch}]" if self.branch else self.rule
        lines = ["  " * indent + f"{tag}  {self.judgment}"]
        lines.extend(p.render(indent + 1) for p in self.premises)
        return "\n".join(lines)

    def __str__(self):
        return self.render()


def _premise_pairs(rule, lo, up, branch=None):
    """Expected (lower, upper) premises of a rule instance, or None if it does not apply."""
    if rule == OPLUS_PLUS:
        if not (isinstance(lo, IntChoice) and isinstance(up, AffSum)):
            return None
        lm, um = branch_map(lo), branch_map(up)
        if branch not in lm or branch not in um:
            return None
        return [(lm[branch], um[branch])]
    if rule in (PLUS_PLUS_1, PLUS_PLUS_2):
        kind = InputSum if rule == PLUS_PLUS_1 else AffSum
        if not (isinstance(lo, kind) and isinstance(up, kind)):
            return None
        um = branch_map(up)
        if not all(a in um for a, _ in lo.branches):
            return None
        return [(k, um[a]) for a, k in lo.branches]
    if rule == OPLUS_OPLUS:
        if not (isinstance(lo, IntChoice) and isinstance(up, IntChoice)):
            return None
        lm = branch_map(lo)
        if not all(a in lm for a, _ in up.branches):
            return None
        return [(lm[a], k) for a, k in up.branches]
    return None


def sub_prove(lower: Contract, upper: Contract, env: frozenset = frozenset()):
    return _sub(frozenset(env), lower, upper)


def _sub(env, lo, up):
    j = SubJudgment.of(lo, up)
    lu, uu = unfold_all(j.lower), unfold_all(j.upper)
    if isinstance(lu, Success):
        return SubDerivation(SAX, env, j)
    if j in env:
        return SubDerivation(SHYP, env, j)
    env2 = env | {j}
    if isinstance(lu, IntChoice) and isinstance(uu, AffSum):
        um = branch_map(uu)
        for a, k in lu.branches:
            if a in um:
                d = _sub(env2, k, um[a])
                if d is not None:
                    return SubDerivation(OPLUS_PLUS, env, j, (d,), a)
        return None
    for rule in (PLUS_PLUS_1, PLUS_PLUS_2, OPLUS_OPLUS):
        pairs = _premise_pairs(rule, lu, uu)
        if pairs is None:
            continue
        prem = []
        for a, b in pairs:
            d = _sub(env2, a, b)
            if d is None:
                return None
            prem.append(d)
        return SubDerivation(rule, env, j, tuple(prem))
    return None


def subcontract(lower: Contract, upper: Contract) -> bool:
    return sub_prove(lower, upper) is not None


def check_sub_derivation(d: SubDerivation, env=None) -> bool:
    env = d.env if env is None else env
    if d.env != env:
        return False
    j = d.judgment
    lu, uu = unfold_all(j.lower), unfold_all(j.upper)
    if d.rule == SAX:
        return isinstance(lu, Success) and not d.premises
    if d.rule == SHYP:
        return j in env and not d.premises
    pairs = _premise_pairs(d.rule, lu, uu, d.branch)
    if pairs is None or len(pairs) != len(d.premises):
        return False
    env2 = env | {j}
    return all(p.judgment == SubJudgment.of(a, b) and check_sub_derivation(p, env2)
               for p, (a, b) in zip(d.premises, pairs))


# --------------------------------------------------------------- approximants

def sub_k(lower: Contract, upper: Contract, k: int) -> bool:
    return _sub_k(canonical(lower), canonical(upper), k, {})


def _sub_k(lo, up, k, memo):
    if k == 0:
        return True
    key = (lo, up, k)
    if key in memo:
        return memo[key]
    lu, uu = unfold_all(lo), unfold_all(up)

    def rec(a, b):
        return _sub_k(canonical(a), canonical(b), k - 1, memo)

    if isinstance(lu, Success):
        res = True
    elif isinstance(lu, IntChoice) and isinstance(uu, AffSum):
        um = branch_map(uu)
        res = any(a in um and rec(c, um[a]) for a, c in lu.branches)
    elif type(lu) is type(uu) and isinstance(lu, (InputSum, AffSum)):
        um = branch_map(uu)
        res = all(a in um and rec(c, um[a]) for a, c in lu.branches)
    elif isinstance(lu, IntChoice) and isinstance(uu, IntChoice):
        lm = branch_map(lu)
        res = all(a in lm and rec(lm[a], c) for a, c in uu.branches)
    else:
        res = False
    memo[key] = res
    return res


# ------------------------------------------------------------------- functors

class FunctorError(RuntimeError):
    pass


@dataclass
class Functor:
    """An orchestrator transformer interpreted over a ≪ derivation."""

    derivation: SubDerivation

    def __post_init__(self):
        if self.derivation.env:
            raise ValueError("functors are compiled from closed-environment derivations")
        if not check_sub_derivation(self.derivation):
            raise ValueError("invalid subcontract derivation")

    def __call__(self, f: Orchestrator) -> Orchestrator:
        return apply_functor(self, f)


def compile_functor(d: SubDerivation) -> Functor:
    return Functor(d)


def apply_functor(F: Functor, f: Orchestrator) -> Orchestrator:
    """Evaluate F on f.  Calls are memoized on (node, canonical f); a call met
    again while still being evaluated becomes a recursion variable, so
    recursive inputs yield regular outputs."""
    counter = itertools.count()
    active = {}
    used = set()

    def ev(node, ancestors, g):
        if node.rule == SAX:
            return IDLE
        if node.rule == SHYP:
            for i in range(len(ancestors) - 1, -1, -1):
                if ancestors[i].judgment == node.judgment:
                    return ev(ancestors[i], ancestors[:i], g)
            raise FunctorError(f"Hyp-≪ leaf with no bound functor variable: {node.judgment}")
        key = (id(node), orch_canonical(g))
        if key in active:
            used.add(key)
            return OVar(active[key])
        var = f"x{next(counter)}"
        active[key] = var
        res = step(node, ancestors + [node], ounfold_all(g))
        del active[key]
        if key in used:
            used.discard(key)
            res = ORec(var, res)
        return res

    def step(node, anc, g):
        prem = node.premises
        lu, uu = unfold_all(node.judgment.lower), unfold_all(node.judgment.upper)
        if node.rule == OPLUS_PLUS:
            if isinstance(g, Disj) and all(g.lookup(a, True) is not None for a, _ in lu.branches):
                k = node.branch
                return Prefix(OrchAct(k, True, True), ev(prem[0], anc, g.lookup(k, True)))
            return IDLE
        if node.rule == PLUS_PLUS_1:
            sub = {a: p for (a, _), p in zip(lu.branches, prem)}
            if isinstance(g, Disj):
                kept = [(act, ev(sub[act.name], anc, body)) for act, body in g.branches
                        if not act.server_out and act.name in sub]
                return Disj(tuple(kept)) if kept else IDLE
            if isinstance(g, Prefix) and not g.act.server_out and g.act.name in sub:
                return Prefix(g.act, ev(sub[g.act.name], anc, g.body))
            return IDLE
        if node.rule == PLUS_PLUS_2:
            sub = {a: p for (a, _), p in zip(lu.branches, prem)}
            if len(lu.branches) == 1 and isinstance(g, Disj):
                a = lu.branches[0][0]
                body = g.lookup(a, True)
                if body is not None:
                    return Prefix(OrchAct(a, True, True), ev(sub[a], anc, body))
            if isinstance(g, Prefix) and g.act.server_out and g.act.name in sub:
                return Prefix(g.act, ev(sub[g.act.name], anc, g.body))
            return IDLE
        if node.rule == OPLUS_OPLUS:
            if isinstance(g, Disj):
                kept = []
                for (a, _), p in zip(uu.branches, prem):
                    body = g.lookup(a, True)
                    if body is None:
                        return IDLE
                    kept.append((OrchAct(a, True), ev(p, anc, body)))
                return Disj(tuple(kept))
            return IDLE
        raise FunctorError(f"unknown rule {node.rule!r}")

    return ev(F.derivation, [], f)


# ------------------------------------------------------------- serialization

def sub_derivation_to_json(d: SubDerivation, root: bool = True) -> dict:
    obj = {
        "rule": d.rule,
        "judgment": {"lower": pretty(d.judgment.lower), "upper": pretty(d.judgment.upper)},
        "premises": [sub_derivation_to_json(p, False) for p in d.premises],
        "branch": d.branch,
    }
    if root:
        obj["env"] = [{"lower": pretty(j.lower), "upper": pretty(j.upper)}
                      for j in sorted(d.env, key=str)]
    return obj


def sub_derivation_from_json(obj: dict, env=None) -> SubDerivation:
    if env is None:
        env = frozenset(SubJudgment.of(parse(e["lower"]), parse(e["upper"]))
                        for e in obj.get("env", []))
    rule = obj["rule"]
    if rule not in SUB_RULES:
        raise ValueError(f"unknown rule {rule!r}")
    j = SubJudgment.of(parse(obj["judgment"]["lower"]), parse(obj["judgment"]["upper"]))
    env2 = env if rule in (SAX, SHYP) else env | {j}
    prem = tuple(sub_derivation_from_json(p, env2) for p in obj.get("premises", []))
    return SubDerivation(rule, env, j, prem, obj.get("branch"))
