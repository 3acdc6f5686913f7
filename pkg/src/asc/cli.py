"""Command-line interface.  Exit codes: 0 positive verdict, 1 negative, 2 error."""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .compliance import derivation_to_json, prove
from .contracts import ContractError, parse_with_notes, pretty
from .games import (
    find_xfree_tree, is_winning_strategy, strategy_from_orch, strategy_from_tree,
)
from .orchestrators import (
    o2d, orch_to_json, parse_orch, pretty_orch, synth,
)
from .semantics import (
    OrchSystem, RbkSystem, TBConfig, TBOrchConfig, Zero, orch_steps,
    rbk_system_labelled_steps, show_state, tb_orch_steps, tb_steps,
)
from .subcontract import (
    apply_functor, compile_functor, sub_derivation_from_json, sub_derivation_to_json, sub_prove,
)
from .testkit import EnumSpec, cross_check


class UsageError(Exception):
    pass


def _text(arg: str) -> str:
    if os.path.isfile(arg):
        with open(arg, encoding="utf-8") as fh:
            return fh.read().strip()
    return arg


def _contract(arg: str):
    return parse_with_notes(_text(arg))[0]


def _orch(arg: str):
    return parse_orch(_text(arg))


def _emit(args, obj, text):
    print(json.dumps(obj, ensure_ascii=False, indent=2) if args.json else text)


# ------------------------------------------------------------------ commands

def cmd_check(args):
    c, s = _contract(args.client), _contract(args.server)
    d = prove(c, s)
    if d is None:
        _emit(args, {"compliant": False}, "NOT COMPLIANT")
        return 1
    _emit(args, {"compliant": True, "derivation": derivation_to_json(d)}, d.render())
    return 0


def cmd_synth(args):
    c, s = _contract(args.client), _contract(args.server)
    fs = synth(c, s)
    _emit(args, [orch_to_json(f) for f in fs], "\n".join(pretty_orch(f) for f in fs)
          or "NO ORCHESTRATOR")
    return 0 if fs else 1


def _picker(spec):
    picks = [int(x) for x in spec.split(",")] if spec else []

    def pick(i, n):
        k = picks[i] if i < len(picks) else 0
        if not 0 <= k < n:
            raise UsageError(f"--pick index {k} out of range at step {i + 1} ({n} moves)")
        return k
    return pick


def cmd_simulate(args):
    c, s = _contract(args.client), _contract(args.server)
    f = _orch(args.orch) if args.orch else None
    pick = _picker(args.pick)
    if args.mode == "rollback":
        state, steps = RbkSystem.start(c, s), rbk_system_labelled_steps

        def cols(x):
            return str(x.client), str(x.server), None

        def success(x):
            return x.client.is_success()
    elif args.mode == "orch":
        if f is None:
            raise UsageError("--mode orch needs --orch")
        state, steps = OrchSystem(c, f, s), orch_steps

        def cols(x):
            return pretty(x.client), pretty(x.server), pretty_orch(x.orch)

        def success(x):
            return pretty(x.client) == "1"
    else:
        if f is None:
            state, steps = TBConfig(c, s), tb_steps
        else:
            state, steps = TBOrchConfig(c, f, s), tb_orch_steps

        def cols(x):
            return (show_state(x.client), show_state(x.server),
                    pretty_orch(x.orch) if f is not None else None)

        def success(x):
            return isinstance(x.client, Zero)

    rows = []
    cl, sv, orc = cols(state)
    rows.append({"step": 0, "rule": "start", "label": "", "client": cl, "server": sv, "orch": orc})
    outcome = "max-steps"
    for i in range(args.max_steps):
        moves = steps(state)
        if not moves:
            outcome = "success" if success(state) else "stuck"
            break
        lab, state = moves[pick(i, len(moves))]
        rule = getattr(lab, "rule", None) or getattr(lab, "kind", None) or ""
        if args.mode == "tb":
            rule = lab.player
        cl, sv, orc = cols(state)
        rows.append({"step": i + 1, "rule": rule, "label": str(lab),
                     "client": cl, "server": sv, "orch": orc})
    else:
        if not steps(state):
            outcome = "success" if success(state) else "stuck"
    if args.json:
        print(json.dumps({"trace": rows, "outcome": outcome}, ensure_ascii=False, indent=2))
    else:
        for r in rows:
            line = f"{r['step']:>3}  {r['rule']:<6} {r['label']:<16} {r['client']}  ||  {r['server']}"
            if r["orch"] is not None:
                line += f"  [{r['orch']}]"
            print(line)
        print(f"outcome: {outcome}")
    return 0 if outcome == "success" else 1


def cmd_strategy(args):
    c, s = _contract(args.client), _contract(args.server)
    if args.orch:
        sigma = strategy_from_orch(_orch(args.orch), c, s)
    else:
        tree = find_xfree_tree(c, s)
        if tree is None:
            _emit(args, {"winning": False}, "NO WINNING STRATEGY")
            return 1
        sigma = strategy_from_tree(tree)
    win = is_winning_strategy(sigma, c, s)
    if args.json:
        obj = sigma.to_json()
        obj["winning"] = win
        obj["univocal"] = sigma.is_univocal()
        print(json.dumps(obj, ensure_ascii=False, indent=2))
    else:
        for play, ev in sigma.table():
            print(f"Σ({play}) = {{{ev}}}")
        print("Σ is empty on every other play")
        print(sigma.tree.render())
        print(f"winning: {'yes' if win else 'no'}")
    return 0 if win else 1


def cmd_o2d(args):
    c, s = _contract(args.client), _contract(args.server)
    d = o2d(_orch(args.orch), c, s)
    if d is None:
        _emit(args, {"derivation": None}, "ORCHESTRATOR DOES NOT WITNESS COMPLIANCE")
        return 1
    _emit(args, {"derivation": derivation_to_json(d)}, d.render())
    return 0


def cmd_sub(args):
    lo, up = _contract(args.lower), _contract(args.upper)
    d = sub_prove(lo, up)
    if d is None:
        _emit(args, {"subcontract": False}, "NOT A SUBCONTRACT")
        return 1
    _emit(args, {"subcontract": True, "derivation": sub_derivation_to_json(d)}, d.render())
    return 0


def cmd_functor(args):
    if args.derivation:
        with open(args.derivation, encoding="utf-8") as fh:
            obj = json.load(fh)
        d = sub_derivation_from_json(obj.get("derivation", obj))
    else:
        if not (args.lower and args.upper):
            raise UsageError("functor needs --derivation FILE or LOWER UPPER")
        d = sub_prove(_contract(args.lower), _contract(args.upper))
        if d is None:
            _emit(args, {"orchestrator": None}, "NOT A SUBCONTRACT")
            return 1
    g = apply_functor(compile_functor(d), _orch(args.orch))
    _emit(args, {"orchestrator": orch_to_json(g), "text": pretty_orch(g)}, pretty_orch(g))
    return 0


def cmd_crosscheck(args):
    spec = EnumSpec(args.alphabet, args.depth, samples=args.samples, seed=args.seed,
                    recursion=args.recursive)
    rep = cross_check(spec)
    if args.json:
        print(json.dumps({
            "pairs": rep.pairs, "agree": rep.agree, "compliant": rep.compliant,
            "round_trips_ok": rep.round_trips_ok, "counts": rep.counts,
            "disagreements": rep.disagreements, "failures": rep.failures,
            "seconds": round(rep.seconds, 2),
        }, ensure_ascii=False, indent=2))
    else:
        print(rep.summary())
    if args.plot:
        plot_report(rep, args.plot)
    return 0 if rep.ok else 1


def plot_report(rep, path):
    """Bar chart of positive verdicts per checker next to the pair count."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    names = ["prove", "rollback", "strategy", "synth"]
    vals = [rep.counts.get(n, 0) for n in names]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    bars = ax.bar(names, vals, color=["#4c72b0", "#55a868", "#c44e52", "#8172b2"])
    ax.bar_label(bars)
    ax.axhline(rep.pairs, color="grey", linestyle="--", linewidth=1, label=f"pairs = {rep.pairs}")
    ax.set_ylabel("pairs judged compliant")
    ax.set_title(f"verdict agreement {rep.agree}/{rep.pairs}, "
                 f"{len(rep.disagreements)} disagreements")
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def cmd_parse(args):
    text = _text(args.term)
    if args.orchestrator:
        f = parse_orch(text)
        _emit(args, orch_to_json(f), pretty_orch(f))
        return 0
    c, notes = parse_with_notes(text)
    for n in notes:
        print(f"note: {n}", file=sys.stderr)
    _emit(args, {"contract": pretty(c), "notes": notes}, pretty(c))
    return 0


# -------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="asc", description="Affectible session contracts toolkit.")
    p.add_argument("--version", action="version", version=f"asc {__version__}")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS,
                        help="machine-readable output")
    sub = p.add_subparsers(dest="command", required=True)

    def pair(name, fn, help_, a="client", b="server"):
        q = sub.add_parser(name, help=help_, parents=[common])
        q.add_argument(a, help="contract text or file")
        q.add_argument(b, help="contract text or file")
        q.set_defaults(fn=fn)
        return q

    pair("check", cmd_check, "prove compliance and print the derivation")
    pair("synth", cmd_synth, "synthesize all orchestrators")
    q = pair("simulate", cmd_simulate, "print one execution trace")
    q.add_argument("--mode", choices=["rollback", "orch", "tb"], default="rollback")
    q.add_argument("--max-steps", type=int, default=100)
    q.add_argument("--orch", help="orchestrator text or file")
    q.add_argument("--pick", help="comma-separated move indices, default 0 at each step")
    q = pair("strategy", cmd_strategy, "print the strategy of an orchestrator (or find one)")
    q.add_argument("--orch", help="orchestrator text or file")
    q = pair("o2d", cmd_o2d, "rebuild a derivation from an orchestrator")
    q.add_argument("--orch", required=True)
    pair("sub", cmd_sub, "prove LOWER is a subcontract of UPPER", "lower", "upper")
    q = sub.add_parser("functor", help="apply the functor of a subcontract derivation",
                       parents=[common])
    q.add_argument("lower", nargs="?")
    q.add_argument("upper", nargs="?")
    q.add_argument("--derivation", help="JSON file produced by `asc --json sub`")
    q.add_argument("--orch", required=True)
    q.set_defaults(fn=cmd_functor)
    q = sub.add_parser("crosscheck", help="compare all checkers on enumerated pairs",
                       parents=[common])
    q.add_argument("--alphabet", type=int, default=2)
    q.add_argument("--depth", type=int, default=2)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--samples", type=int, default=0)
    q.add_argument("--recursive", action="store_true", help="sample recursive pairs")
    q.add_argument("--plot", help="write a verdict bar chart (PNG/PDF/SVG)")
    q.set_defaults(fn=cmd_crosscheck)
    q = sub.add_parser("parse", help="parse and pretty-print a term", parents=[common])
    q.add_argument("term")
    q.add_argument("--orchestrator", action="store_true")
    q.set_defaults(fn=cmd_parse)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ContractError, UsageError, ValueError, OSError, json.JSONDecodeError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
