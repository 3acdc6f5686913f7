"""Orchestrator synthesis, orchestrated-compliance checking, and the
translations between derivations and orchestrators."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .compliance import (
    AX, HYP, OPLUS_PLUS, PLUS_OPLUS, PLUS_PLUS, Derivation, Judgment,
    complementary_sums,
)
from .contracts import AffSum, Contract, InputSum, IntChoice, Success, branch_map, unfold_all
from .orchterms import (  # noqa: F401  (re-exported)
    BUYER_SELLER_ORCH, IDLE, Disj, Idle, OrchAct, OrchError, Orchestrator,
    OrchSyntaxError, ORec, OVar, Prefix, ofree_vars, orch_canonical,
    orch_equal_regular, orch_size, ounfold_all, parse_orch, pretty_orch,
)
from .semantics import (
    OrchSystem, TBOrchConfig, Zero, explore, orch_steps, silent_closure, tb_orch_steps,
)


def validate_orch(f: Orchestrator) -> None:
    """Raise OrchError on free variables or unguarded recursion; disjunctions must be univocal."""
    if ofree_vars(f):
        raise OrchError(f"free orchestrator variable(s): {', '.join(sorted(ofree_vars(f)))}")
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, Disj):
            for act, body in g.branches:
                if act.plus:
                    raise OrchError(f"affectible action {act} inside a disjunction")
                stack.append(body)
        elif isinstance(g, Prefix):
            if not g.act.plus:
                raise OrchError("single prefix must be affectible")
            stack.append(g.body)
        elif isinstance(g, ORec):
            stack.append(g.body)


# ---------------------------------------------------------------- synthesis

def synth(client: Contract, server: Contract, env=()) -> list:
    """All orchestrators produced by the synthesis clauses, deduplicated up to
    regular-tree equality.  An empty list means no orchestrator exists."""
    counter = itertools.count()
    res = _synth(tuple(env), client, server, counter)
    return list(res.values())


def _dedupe(fs):
    out = {}
    for f in fs:
        out.setdefault(orch_canonical(f), f)
    return out


def _synth(env, c, s, counter):
    j = Judgment.of(c, s)
    for x, jj in env:
        if jj == j:
            return {OVar(x): OVar(x)}
    cu, su = unfold_all(j.client), unfold_all(j.server)
    if isinstance(cu, Success):
        return {IDLE: IDLE}
    x = f"x{next(counter)}"
    env2 = env + ((x, j),)
    if isinstance(cu, IntChoice) and isinstance(su, InputSum):
        sm = branch_map(su)
        if not all(a in sm for a, _ in cu.branches):
            return {}
        acts = [OrchAct(a, False) for a, _ in cu.branches]
        options = [list(_synth(env2, k, sm[a], counter).values()) for a, k in cu.branches]
    elif isinstance(cu, InputSum) and isinstance(su, IntChoice):
        cm = branch_map(cu)
        if not all(a in cm for a, _ in su.branches):
            return {}
        acts = [OrchAct(a, True) for a, _ in su.branches]
        options = [list(_synth(env2, cm[a], k, counter).values()) for a, k in su.branches]
    elif complementary_sums(cu, su):
        sm = branch_map(su)
        out = []
        for a, k in cu.branches:
            if a in sm:
                act = OrchAct(a, isinstance(su, AffSum), True)
                for g in _synth(env2, k, sm[a], counter).values():
                    out.append(ORec(x, Prefix(act, g)))
        return _dedupe_open(out)
    else:
        return {}
    if any(not o for o in options):
        return {}
    return _dedupe_open(ORec(x, Disj(tuple(zip(acts, combo))))
                        for combo in itertools.product(*options))


def _dedupe_open(fs):
    # open terms (free Hyp variables) cannot be canonicalized; dedupe syntactically
    out = {}
    for f in fs:
        key = orch_canonical(f) if not ofree_vars(f) else f
        out.setdefault(key, f)
    return out


# --------------------------------------------------- orchestrated compliance

def orch_check(f: Orchestrator, client: Contract, server: Contract, limit=None) -> bool:
    """Every stuck state of the turn-based orchestrated system has client 0 (after ✓)."""
    states, edges = explore(TBOrchConfig(client, f, server), tb_orch_steps, limit=limit)
    return all(row or isinstance(states[k].client, Zero) for k, row in edges.items())


def orch_check_plain(f: Orchestrator, client: Contract, server: Contract, limit=None) -> bool:
    """The same verdict computed on the plain orchestrated LTS."""
    states, edges = explore(OrchSystem(client, f, server), orch_steps, limit=limit)
    return all(row or isinstance(unfold_all(states[k].client), Success)
               for k, row in edges.items())


def orch_check_k(f: Orchestrator, client: Contract, server: Contract, k: int) -> bool:
    return _occ(OrchSystem(client, f, server), k, {})


def _occ(sys, k, memo):
    if k == 0:
        return True
    key = (sys.key(), k)
    if key in memo:
        return memo[key]
    memo[key] = True
    if isinstance(unfold_all(sys.client), Success):
        res = True
    else:
        res = True
        for t in silent_closure(sys):
            steps = orch_steps(t)
            if not steps:
                res = False
                break
            if not all(_occ(t2, k - 1, memo) for lab, t2 in steps if lab.kind != "silent"):
                res = False
                break
    memo[key] = res
    return res


# ------------------------------------------------- derivations → orchestrators

@dataclass(frozen=True)
class OrchDerivation:
    rule: str
    env: tuple  # ((var, Judgment), ...)
    orch: Orchestrator
    judgment: Judgment
    premises: tuple = ()

    def render(self, indent: int = 0) -> str:
        lines = ["  " * indent + f"{self.rule}  {pretty_orch(self.orch)} : {self.judgment}"]
        lines.extend(p.render(indent + 1) for p in self.premises)
        return "\n".join(lines)


def derivation_to_orch(d: Derivation):
    """Return (f(D), orchestrated derivation).  Raises ValueError on malformed input."""
    counter = itertools.count()
    od = _dto(d, (), counter)
    return od.orch, od


def _dto(d, genv, counter):
    j = Judgment.of(d.judgment.client, d.judgment.server)
    if d.rule == AX:
        return OrchDerivation(AX, genv, IDLE, j)
    if d.rule == HYP:
        for x, jj in genv:
            if jj == j:
                return OrchDerivation(HYP, genv, OVar(x), j)
        raise ValueError(f"Hyp leaf without a bound variable: {j}")
    x = f"x{next(counter)}"
    genv2 = genv + ((x, j),)
    prem = tuple(_dto(p, genv2, counter) for p in d.premises)
    cu, su = unfold_all(j.client), unfold_all(j.server)
    if d.rule == PLUS_PLUS:
        if len(prem) != 1 or not complementary_sums(cu, su):
            raise ValueError("malformed +·+ node")
        body = Prefix(OrchAct(d.branch, isinstance(su, AffSum), True), prem[0].orch)
    elif d.rule == OPLUS_PLUS:
        if not isinstance(cu, IntChoice) or len(prem) != len(cu.branches):
            raise ValueError("malformed ⊕·+ node")
        body = Disj(tuple((OrchAct(a, False), p.orch) for (a, _), p in zip(cu.branches, prem)))
    elif d.rule == PLUS_OPLUS:
        if not isinstance(su, IntChoice) or len(prem) != len(su.branches):
            raise ValueError("malformed +·⊕ node")
        body = Disj(tuple((OrchAct(a, True), p.orch) for (a, _), p in zip(su.branches, prem)))
    else:
        raise ValueError(f"unknown rule {d.rule!r}")
    return OrchDerivation(d.rule, genv, ORec(x, body), j, prem)


def check_orch_derivation(od: OrchDerivation, genv=None) -> bool:
    """Validate an orchestrated derivation rule by rule."""
    genv = od.env if genv is None else genv
    if tuple(od.env) != tuple(genv):
        return False
    j = od.judgment
    cu, su = unfold_all(j.client), unfold_all(j.server)
    f = od.orch
    if od.rule == AX:
        return isinstance(cu, Success) and isinstance(f, Idle) and not od.premises
    if od.rule == HYP:
        return isinstance(f, OVar) and (f.name, j) in genv and not od.premises
    if not isinstance(f, ORec) or any(f.var == x for x, _ in genv):
        return False
    genv2 = genv + ((f.var, j),)
    body = f.body
    if od.rule == PLUS_PLUS:
        if not (complementary_sums(cu, su) and isinstance(body, Prefix) and len(od.premises) == 1):
            return False
        a = body.act.name
        cm, sm = branch_map(cu), branch_map(su)
        if a not in cm or a not in sm or body.act.server_out != isinstance(su, AffSum):
            return False
        p = od.premises[0]
        return (p.judgment == Judgment.of(cm[a], sm[a]) and p.orch == body.body
                and check_orch_derivation(p, genv2))
    if od.rule in (OPLUS_PLUS, PLUS_OPLUS):
        if not isinstance(body, Disj):
            return False
        if od.rule == OPLUS_PLUS:
            if not (isinstance(cu, IntChoice) and isinstance(su, InputSum)):
                return False
            outs, other, server_out = cu, branch_map(su), False
        else:
            if not (isinstance(cu, InputSum) and isinstance(su, IntChoice)):
                return False
            outs, other, server_out = su, branch_map(cu), True
        if len(body.branches) != len(outs.branches) or len(od.premises) != len(outs.branches):
            return False
        for (a, k), p in zip(outs.branches, od.premises):
            g = body.lookup(a, server_out)
            if g is None or a not in other or p.orch != g:
                return False
            want = Judgment.of(k, other[a]) if server_out is False else Judgment.of(other[a], k)
            if p.judgment != want or not check_orch_derivation(p, genv2):
                return False
        return True
    return False


# --------------------------------------------------- orchestrators → derivations

def o2d(f: Orchestrator, client: Contract, server: Contract):
    """Rebuild a ⊳ derivation guided by f; None when f does not witness compliance."""
    return _o2d(frozenset(), f, client, server)


def _o2d(env, f, c, s):
    j = Judgment.of(c, s)
    cu, su = unfold_all(j.client), unfold_all(j.server)
    if isinstance(cu, Success):
        return Derivation(AX, env, j)
    if j in env:
        return Derivation(HYP, env, j)
    env2 = env | {j}
    g = ounfold_all(f)
    if isinstance(g, Prefix):
        a = g.act.name
        if not complementary_sums(cu, su) or g.act.server_out != isinstance(su, AffSum):
            return None
        cm, sm = branch_map(cu), branch_map(su)
        if a not in cm or a not in sm:
            return None
        p = _o2d(env2, g.body, cm[a], sm[a])
        return None if p is None else Derivation(PLUS_PLUS, env, j, (p,), a)
    if isinstance(g, Disj):
        if isinstance(cu, IntChoice) and isinstance(su, InputSum):
            rule, outs, other, server_out = OPLUS_PLUS, cu, branch_map(su), False
        elif isinstance(cu, InputSum) and isinstance(su, IntChoice):
            rule, outs, other, server_out = PLUS_OPLUS, su, branch_map(cu), True
        else:
            return None
        prem = []
        for a, k in outs.branches:
            h = g.lookup(a, server_out)
            if h is None or a not in other:
                return None
            pair = (k, other[a]) if not server_out else (other[a], k)
            p = _o2d(env2, h, *pair)
            if p is None:
                return None
            prem.append(p)
        return Derivation(rule, env, j, tuple(prem))
    return None


# ------------------------------------------------------------ serialization

def orch_to_json(f: Orchestrator):
    if isinstance(f, Idle):
        return {"kind": "idle"}
    if isinstance(f, OVar):
        return {"kind": "var", "name": f.name}
    if isinstance(f, ORec):
        return {"kind": "rec", "var": f.var, "body": orch_to_json(f.body)}
    if isinstance(f, Prefix):
        return {"kind": "prefix", "act": _act_json(f.act), "body": orch_to_json(f.body)}
    return {"kind": "or", "branches": [{"act": _act_json(a), "body": orch_to_json(b)}
                                       for a, b in f.branches]}


def _act_json(a: OrchAct):
    bang = "!" + a.name
    return {"server": bang if a.server_out else a.name,
            "client": a.name if a.server_out else bang, "plus": a.plus}


def _act_from(obj):
    srv = obj["server"]
    out = srv.startswith("!")
    return OrchAct(srv.lstrip("!"), out, bool(obj.get("plus", False)))


def orch_from_json(obj) -> Orchestrator:
    k = obj["kind"]
    if k == "idle":
        return IDLE
    if k == "var":
        return OVar(obj["name"])
    if k == "rec":
        return ORec(obj["var"], orch_from_json(obj["body"]))
    if k == "prefix":
        return Prefix(_act_from(obj["act"]), orch_from_json(obj["body"]))
    if k == "or":
        return Disj(tuple((_act_from(b["act"]), orch_from_json(b["body"])) for b in obj["branches"]))
    raise OrchError(f"unknown orchestrator kind {k!r}")
