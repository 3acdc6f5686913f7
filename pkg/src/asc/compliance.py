"""Affectible compliance: the proof system, its search procedure, the
stratified approximants, and compliance under rollback."""

from __future__ import annotations

from dataclasses import dataclass, field

from .contracts import (
    AffSum, Contract, InputSum, IntChoice, Success, branch_map, canonical,
    has_rec, parse, pretty, unfold_all,
)
from .semantics import RbkSystem, rbk_explore

AX, HYP, PLUS_PLUS, OPLUS_PLUS, PLUS_OPLUS = "Ax", "Hyp", "+·+", "⊕·+", "+·⊕"
RULES = (AX, HYP, PLUS_PLUS, OPLUS_PLUS, PLUS_OPLUS)


@dataclass(frozen=True)
class Judgment:
    client: Contract
    server: Contract

    @staticmethod
    def of(client, server) -> "Judgment":
        return Judgment(canonical(client), canonical(server))

    def __str__(self):
        return f"{pretty(self.client)} ~| {pretty(self.server)}"


@dataclass(frozen=True)
class Derivation:
    rule: str
    env: frozenset
    judgment: Judgment
    premises: tuple = ()
    branch: str | None = None

    def rules(self) -> list:
        """Rule names in pre-order."""
        out = [self.rule]
        for p in self.premises:
            out.extend(p.rules())
        return out

    def size(self) -> int:
        return 1 + sum(p.size() for p in self.premises)

    def render(self, indent: int = 0) -> str:
        tag = f"{self.rule} [{self.branch}]" if self.branch else self.rule
        lines = ["  " * indent + f"{tag}  {self.judgment}"]
        lines.extend(p.render(indent + 1) for p in self.premises)
        return "\n".join(lines)

    def __str__(self):
        return self.render()


def complementary_sums(c, s) -> bool:
    return (isinstance(c, InputSum) and isinstance(s, AffSum)) or (
        isinstance(c, AffSum) and isinstance(s, InputSum))


def prove(client: Contract, server: Contract, env: frozenset = frozenset()):
    """Search for a derivation of env ⊳ client ~| server; None on failure."""
    return _prove(frozenset(env), client, server)


def _prove(env, c, s):
    j = Judgment.of(c, s)
    cu, su = unfold_all(j.client), unfold_all(j.server)
    if isinstance(cu, Success):
        return Derivation(AX, env, j)
    if j in env:
        return Derivation(HYP, env, j)
    env2 = env | {j}
    if isinstance(cu, IntChoice) and isinstance(su, InputSum):
        sm = branch_map(su)
        if not all(a in sm for a, _ in cu.branches):
            return None
        prem = []
        for a, k in cu.branches:
            d = _prove(env2, k, sm[a])
            if d is None:
                return None
            prem.append(d)
        return Derivation(OPLUS_PLUS, env, j, tuple(prem))
    if isinstance(cu, InputSum) and isinstance(su, IntChoice):
        cm = branch_map(cu)
        if not all(a in cm for a, _ in su.branches):
            return None
        prem = []
        for a, k in su.branches:
            d = _prove(env2, cm[a], k)
            if d is None:
                return None
            prem.append(d)
        return Derivation(PLUS_OPLUS, env, j, tuple(prem))
    if complementary_sums(cu, su):
        sm = branch_map(su)
        for a, k in cu.branches:
            if a in sm:
                d = _prove(env2, k, sm[a])
                if d is not None:
                    return Derivation(PLUS_PLUS, env, j, (d,), a)
    return None


def ac(client: Contract, server: Contract) -> bool:
    return prove(client, server) is not None


def check_derivation(d: Derivation, env=None) -> bool:
    """Validate every node as a rule instance, threading environments as Prove does."""
    env = d.env if env is None else env
    if canonical_env(d.env) != canonical_env(env):
        return False
    j = Judgment.of(d.judgment.client, d.judgment.server)
    cu, su = unfold_all(j.client), unfold_all(j.server)
    if d.rule == AX:
        return not d.premises and isinstance(cu, Success)
    if d.rule == HYP:
        return not d.premises and j in canonical_env(env)
    env2 = canonical_env(env) | {j}
    if d.rule == OPLUS_PLUS:
        if not (isinstance(cu, IntChoice) and isinstance(su, InputSum)):
            return False
        sm = branch_map(su)
        if not all(a in sm for a, _ in cu.branches):
            return False
        expected = [(k, sm[a]) for a, k in cu.branches]
    elif d.rule == PLUS_OPLUS:
        if not (isinstance(cu, InputSum) and isinstance(su, IntChoice)):
            return False
        cm = branch_map(cu)
        if not all(a in cm for a, _ in su.branches):
            return False
        expected = [(cm[a], k) for a, k in su.branches]
    elif d.rule == PLUS_PLUS:
        if not complementary_sums(cu, su):
            return False
        cm, sm = branch_map(cu), branch_map(su)
        if d.branch not in cm or d.branch not in sm:
            return False
        expected = [(cm[d.branch], sm[d.branch])]
    else:
        return False
    if len(d.premises) != len(expected):
        return False
    for p, (c, s) in zip(d.premises, expected):
        if Judgment.of(p.judgment.client, p.judgment.server) != Judgment.of(c, s):
            return False
        if not check_derivation(p, env2):
            return False
    return True


def canonical_env(env) -> frozenset:
    return frozenset(Judgment.of(j.client, j.server) for j in env)


# -------------------------------------------------------------- approximants

def ac_k(client: Contract, server: Contract, k: int, _memo=None) -> bool:
    """The k-th stratified approximant, computed clause by clause."""
    memo = {} if _memo is None else _memo
    return _ac_k(canonical(client), canonical(server), k, memo)


def _ac_k(c, s, k, memo):
    if k == 0:
        return True
    key = (c, s, k)
    hit = memo.get(key)
    if hit is not None:
        return hit
    cu, su = unfold_all(c), unfold_all(s)
    if isinstance(cu, Success):
        res = True
    elif isinstance(cu, IntChoice) and isinstance(su, InputSum):
        sm = branch_map(su)
        res = all(a in sm and _ac_k(canonical(ck), canonical(sm[a]), k - 1, memo)
                  for a, ck in cu.branches)
    elif isinstance(cu, InputSum) and isinstance(su, IntChoice):
        cm = branch_map(cu)
        res = all(a in cm and _ac_k(canonical(cm[a]), canonical(sk), k - 1, memo)
                  for a, sk in su.branches)
    elif complementary_sums(cu, su):
        sm = branch_map(su)
        res = any(a in sm and _ac_k(canonical(ck), canonical(sm[a]), k - 1, memo)
                  for a, ck in cu.branches)
    else:
        res = False
    memo[key] = res
    return res


# ----------------------------------------------------------------- rollback

@dataclass
class RollbackReport:
    states: dict
    edges: dict
    stuck: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    @property
    def compliant(self) -> bool:
        return not self.failures


def rbk_report(client: Contract, server: Contract, limit: int | None = 200_000) -> RollbackReport:
    if has_rec(client) or has_rec(server):
        raise ValueError("infinite rollback state space; use via-ac")
    states, edges = rbk_explore(client, server, limit=limit)
    rep = RollbackReport(states, edges)
    for k, row in edges.items():
        if not row:
            rep.stuck.append(k)
            if not states[k].client.is_success():
                rep.failures.append(k)
    return rep


def rbk_compliance(client: Contract, server: Contract, mode: str = "exhaustive") -> bool:
    if mode == "via-ac":
        return ac(client, server)
    if mode != "exhaustive":
        raise ValueError(f"unknown mode {mode!r}")
    return rbk_report(client, server).compliant


def rbk_runs(client: Contract, server: Contract, max_runs: int = 10_000):
    """Enumerate maximal runs from empty stacks as lists of (label, state).

    Only meaningful on recursion-free inputs, whose rollback graph is acyclic.
    """
    rep = rbk_report(client, server)
    start = RbkSystem.start(client, server).key()
    out = []
    stack = [(start, [])]
    while stack and len(out) < max_runs:
        k, path = stack.pop()
        row = rep.edges[k]
        if not row:
            out.append(path)
            continue
        for lab, nk in reversed(row):
            stack.append((nk, path + [(lab, rep.states[nk])]))
    return out


# ------------------------------------------------------------- serialization

def derivation_to_json(d: Derivation, root: bool = True) -> dict:
    obj = {
        "rule": d.rule,
        "judgment": {"client": pretty(d.judgment.client), "server": pretty(d.judgment.server)},
        "premises": [derivation_to_json(p, False) for p in d.premises],
        "branch": d.branch,
    }
    if root:
        obj["env"] = [{"client": pretty(j.client), "server": pretty(j.server)}
                      for j in sorted(d.env, key=str)]
    return obj


def derivation_from_json(obj: dict, env=None) -> Derivation:
    """Rebuild a derivation; premise environments are re-threaded from the root."""
    if env is None:
        env = frozenset(Judgment.of(parse(e["client"]), parse(e["server"]))
                        for e in obj.get("env", []))
    rule = obj["rule"]
    if rule not in RULES:
        raise ValueError(f"unknown rule {rule!r}")
    j = Judgment.of(parse(obj["judgment"]["client"]), parse(obj["judgment"]["server"]))
    env2 = env if rule in (AX, HYP) else env | {j}
    prem = tuple(derivation_from_json(p, env2) for p in obj.get("premises", []))
    return Derivation(rule, env, j, prem, obj.get("branch"))
