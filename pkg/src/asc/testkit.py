"""Enumerators, random samplers and the cross-checking harness."""

from __future__ import annotations

import itertools
import random
import time
from dataclasses import dataclass, field

from .compliance import ac_k, check_derivation, prove, rbk_compliance
from .contracts import (
    ONE, AffSum, Contract, InputSum, IntChoice, Rec, Success, Var, depth,
    has_rec, is_sum, pretty, quasi_dual,
)
from .games import (
    exists_winning_strategy, is_winning_strategy, orch_from_strategy, strategy_from_orch,
)
from .orchestrators import (
    derivation_to_orch, o2d, orch_check, orch_equal_regular, synth,
)

NAMES = "abc"


@dataclass(frozen=True)
class EnumSpec:
    alphabet: int = 2
    depth: int = 2
    branching: int | None = None  # defaults to the alphabet size
    recursion: bool = False
    samples: int = 0
    seed: int = 0
    cap: int = 250_000

    def __post_init__(self):
        if not 1 <= self.alphabet <= 3:
            raise ValueError("alphabet size must be 1..3")
        if not 0 <= self.depth <= 4:
            raise ValueError("depth must be 0..4")
        if self.branching is not None and not 1 <= self.branching <= 3:
            raise ValueError("branching must be 1..3")

    @property
    def names(self) -> str:
        return NAMES[: self.alphabet]

    @property
    def max_branch(self) -> int:
        return min(self.alphabet, self.branching or self.alphabet)


def _label_sets(names, lo, hi):
    for n in range(lo, hi + 1):
        yield from itertools.combinations(names, n)


def count_contracts(spec: EnumSpec) -> int:
    """Size of the exhaustive space for depth <= spec.depth (no recursion)."""
    n = 1
    for _ in range(spec.depth):
        total = 1
        for lo in (1, 2, 1):  # input sums, affectible sums, internal choices
            for s in _label_sets(spec.names, lo, spec.max_branch):
                total += n ** len(s)
        n = total
    return n


def enumerate_contracts(spec: EnumSpec):
    """Deterministic stream of all recursion-free contracts of depth <= spec.depth."""
    if count_contracts(spec) > spec.cap:
        raise ValueError(f"{count_contracts(spec)} contracts exceed the cap of {spec.cap}")
    level = [ONE]
    for _ in range(spec.depth):
        nxt = [ONE]
        for cls, lo in ((InputSum, 1), (AffSum, 2), (IntChoice, 1)):
            for labs in _label_sets(spec.names, lo, spec.max_branch):
                for conts in itertools.product(level, repeat=len(labs)):
                    nxt.append(cls(tuple(zip(labs, conts))))
        level = nxt
    yield from level


# ---------------------------------------------------------------- samplers

def random_contract(rng: random.Random, names: str, max_depth: int, stop: float = 0.25) -> Contract:
    if max_depth == 0 or rng.random() < stop:
        return ONE
    kinds = [InputSum, IntChoice] + ([AffSum] if len(names) >= 2 else [])
    cls = rng.choice(kinds)
    lo = 2 if cls is AffSum else 1
    k = rng.randint(lo, len(names))
    labs = sorted(rng.sample(names, k))
    return cls(tuple((a, random_contract(rng, names, max_depth - 1, stop)) for a in labs))


def _leaves(c, path=()):
    if isinstance(c, Success):
        yield path
    elif is_sum(c):
        for i, (_, k) in enumerate(c.branches):
            yield from _leaves(k, path + (i,))


def _replace(c, path, repl):
    if not path:
        return repl
    i = path[0]
    br = list(c.branches)
    a, k = br[i]
    br[i] = (a, _replace(k, path[1:], repl))
    return type(c)(tuple(br))


def random_recursive(rng: random.Random, names: str, max_depth: int = 3) -> Contract:
    """A tail-guarded loop: rec x . body with x replacing some success leaves."""
    while True:
        body = random_contract(rng, names, max_depth, stop=0.15)
        leaves = [p for p in _leaves(body) if p]
        if leaves:
            break
    picks = rng.sample(leaves, rng.randint(1, len(leaves)))
    if len(picks) == len(leaves) and rng.random() < 0.5 and len(leaves) > 1:
        picks = picks[:-1]  # keep an exit most of the time
    for p in picks:
        body = _replace(body, p, Var("x"))
    return Rec("x", body)


def mutate(rng: random.Random, c: Contract, names: str, max_depth: int) -> Contract:
    """Replace one random subterm by a fresh random contract of bounded depth."""
    positions = []

    def walk(t, path, d):
        positions.append((path, d))
        if is_sum(t):
            for i, (_, k) in enumerate(t.branches):
                walk(k, path + (i,), d + 1)

    body = c.body if isinstance(c, Rec) else c
    walk(body, (), 0)
    path, d = rng.choice(positions)
    new = _replace(body, path, random_contract(rng, names, max(0, max_depth - d)))
    if isinstance(c, Rec):
        try:
            return Rec(c.var, new)
        except ValueError:
            return c
    return new


def sample_pairs(rng: random.Random, pool: list, names: str, n: int, max_depth: int) -> list:
    """Pairs biased towards near-compliance: half the clients are perturbed quasi-duals."""
    out = []
    for _ in range(n):
        s = rng.choice(pool)
        r = rng.random()
        if r < 0.35:
            c = quasi_dual(s)
        elif r < 0.7:
            c = mutate(rng, quasi_dual(s), names, max_depth)
        else:
            c = rng.choice(pool)
        out.append((c, s))
    return out


def recursive_pairs(rng: random.Random, names: str, n: int, max_depth: int = 3) -> list:
    out = []
    for _ in range(n):
        s = random_recursive(rng, names, max_depth)
        r = rng.random()
        if r < 0.4:
            c = quasi_dual(s)
        elif r < 0.7:
            c = mutate(rng, quasi_dual(s), names, max_depth)
        else:
            c = random_recursive(rng, names, max_depth) if rng.random() < 0.5 \
                else random_contract(rng, names, max_depth)
        out.append((c, s))
    return out


# ---------------------------------------------------------------- oracles

def verdicts(c: Contract, s: Contract):
    """The four independent compliance verdicts: proof, rollback, game, orchestrator."""
    d = prove(c, s)
    mode = "via-ac" if has_rec(c) or has_rec(s) else "exhaustive"
    return {
        "prove": d is not None,
        "rollback": rbk_compliance(c, s, mode),
        "strategy": exists_winning_strategy(c, s),
        "synth": bool(synth(c, s)),
    }, d


def round_trips(c: Contract, s: Contract, d) -> list:
    """Failures among the derivation/orchestrator/strategy round trips (empty when all hold)."""
    bad = []
    f, od = derivation_to_orch(d)
    if not orch_check(f, c, s):
        bad.append("f(D) fails orch_check")
    sigma = strategy_from_orch(f, c, s)
    if not sigma.is_univocal():
        bad.append("Σ_f not univocal")
    if not is_winning_strategy(sigma, c, s):
        bad.append("Σ_f not winning")
    else:
        g = orch_from_strategy(sigma, c, s)
        if not orch_equal_regular(f, g):
            bad.append(f"orch(Σ_f) = {g} differs from f = {f}")
    d2 = o2d(f, c, s)
    if d2 is None or not check_derivation(d2):
        bad.append("o2d(f) is not a valid derivation")
    return bad


@dataclass
class CrossCheckReport:
    pairs: int = 0
    compliant: int = 0
    agree: int = 0
    round_trips_ok: int = 0
    synth_checked: int = 0
    stratified_ok: int = 0
    disagreements: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    counts: dict = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.disagreements and not self.failures

    def summary(self) -> str:
        lines = [
            f"pairs checked      {self.pairs}",
            f"compliant pairs    {self.compliant}",
            f"verdicts agree     {self.agree}/{self.pairs}",
            f"round trips ok     {self.round_trips_ok}/{self.compliant}",
            f"synth outputs ok   {self.synth_checked}",
            f"ac == ac_(d+1)     {self.stratified_ok}",
            f"seconds            {self.seconds:.1f}",
        ]
        for name, n in sorted(self.counts.items()):
            lines.append(f"  {name:<16} positive on {n}")
        for row in self.disagreements[:20]:
            lines.append("DISAGREE " + row)
        for row in self.failures[:20]:
            lines.append("FAIL " + row)
        return "\n".join(lines)


def check_pair(c, s, report: CrossCheckReport, deep: bool = True) -> None:
    v, d = verdicts(c, s)
    report.pairs += 1
    for k, val in v.items():
        report.counts[k] = report.counts.get(k, 0) + int(val)
    if len(set(v.values())) == 1:
        report.agree += 1
    else:
        report.disagreements.append(f"{pretty(c)} ~| {pretty(s)}: {v}")
    if not has_rec(c) and not has_rec(s):
        k = max(depth(c), depth(s)) + 1
        if ac_k(c, s, k) == v["prove"]:
            report.stratified_ok += 1
        else:
            report.failures.append(f"ac_{k} disagrees on {pretty(c)} ~| {pretty(s)}")
    if d is None or not deep:
        return
    report.compliant += 1
    bad = round_trips(c, s, d)
    if bad:
        report.failures.append(f"{pretty(c)} ~| {pretty(s)}: " + "; ".join(bad))
    else:
        report.round_trips_ok += 1
    for f in synth(c, s)[:8]:
        report.synth_checked += 1
        if not orch_check(f, c, s):
            report.failures.append(f"synth output {f} fails on {pretty(c)} ~| {pretty(s)}")


def cross_check(spec: EnumSpec, deep: bool = True, progress=None) -> CrossCheckReport:
    """Exhaustive pairs at spec.depth, plus spec.samples sampled pairs one level deeper
    (or recursive pairs when spec.recursion is set)."""
    t0 = time.perf_counter()
    rep = CrossCheckReport()
    pool = list(enumerate_contracts(spec))
    for i, (c, s) in enumerate(itertools.product(pool, repeat=2)):
        check_pair(c, s, rep, deep)
        if progress and i % 5000 == 0:
            progress(rep)
    if spec.samples:
        rng = random.Random(spec.seed)
        if spec.recursion:
            extra = recursive_pairs(rng, spec.names, spec.samples, max(spec.depth, 2))
        else:
            deeper = EnumSpec(spec.alphabet, min(spec.depth + 1, 4), spec.branching, cap=10**9)
            pool2 = [random_contract(rng, spec.names, deeper.depth, stop=0.1)
                     for _ in range(max(2000, spec.samples // 4))]
            extra = sample_pairs(rng, pool2, spec.names, spec.samples, deeper.depth)
        for c, s in extra:
            check_pair(c, s, rep, deep)
    rep.seconds = time.perf_counter() - t0
    return rep
