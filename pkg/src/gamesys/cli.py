"""``gamesys`` command line.

Exit codes: 0 on success, 1 when the answer is negative (incomplete,
illegal, not equivalent) or a domain error occurs, 2 on usage errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import analysis, corpus
from .equivalence import agency_equivalent, equivalent_up_to_relabeling
from .errors import DescriptionError, GameSystemError
from .ludemes import CATALOG
from .play import Interactive, Scripted, play, validate_trajectory
from .parser import parse_system
from .reductions import measure, reduce_fixpoint
from .trees import build_automaton, build_tree, export_dot, export_json

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _load(path: str):
    p = Path(path)
    if p.is_file():
        text = p.read_text()
    elif Path(path).stem in corpus.NAMES:
        text = corpus.corpus_text(Path(path).stem)
    else:
        raise UsageError(f"no such file: {path}")
    return parse_system(text)


def _global_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--depth", type=int, default=0, help="decision plies, 0 = unlimited")
    common.add_argument("--node-cap", type=int, default=None)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--output", "-o", default=None)
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    parser = argparse.ArgumentParser(prog="gamesys", description="Game system toolkit.")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("validate", parents=[common], help="completeness report")
    p.add_argument("file")

    p = sub.add_parser("play", parents=[common], help="run the gameplay algorithm")
    p.add_argument("file")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--interactive", action="store_true")
    mode.add_argument("--script", metavar="JSON", help='{"P1": [...], "P2": [...]}')
    mode.add_argument("--random", action="store_true", help="uniform random play (default)")
    p.add_argument("--steps", type=int, default=10_000, help="step cap")

    p = sub.add_parser("tree", parents=[common], help="build and export the game tree")
    p.add_argument("file")
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--dot", action="store_true")
    fmt.add_argument("--json", action="store_true")

    p = sub.add_parser("automaton", parents=[common], help="export the game automaton")
    p.add_argument("file")
    p.add_argument("--dot", action="store_true")

    p = sub.add_parser("reduce", parents=[common], help="reduce the game tree to a fixpoint")
    p.add_argument("file")
    p.add_argument("--log", action="store_true", help="print every reduction applied")

    p = sub.add_parser("compare", parents=[common], help="compare two game systems")
    p.add_argument("file")
    p.add_argument("other")
    p.add_argument("--level", choices=("relabeling", "agency"), default="relabeling")

    p = sub.add_parser("ludemes", parents=[common], help="ludemic function catalog")
    p.add_argument("action", choices=("list",))

    p = sub.add_parser("stats", parents=[common], help="tree and state-space statistics")
    p.add_argument("file")
    return parser


def _header(args) -> str:
    return f"# gamesys {args.verb} seed={args.seed}"


def _tree_of(system, args):
    return build_tree(system, depth_cap=args.depth, node_cap=args.node_cap)


def cmd_validate(args, out):
    system = _load(args.file)
    comp = analysis.check_complete(system)
    over = analysis.check_overcomplete(system)
    if args.format == "json":
        out(json.dumps({
            "seed": args.seed,
            "complete": comp.complete,
            "overcomplete": over.overcomplete,
            "gaps": [str(g) for g in comp.gaps],
            "overcomplete_gaps": [str(g) for g in over.gaps],
            "notes": comp.notes,
            "reachable_states": comp.reachable_states,
        }, indent=2))
    else:
        out(_header(args))
        out(analysis.validation_summary(comp, over))
        for g in comp.gaps:
            out(f"gap: {g}")
        for n in comp.notes:
            out(f"note: {n}")
        out(f"reachable states: {comp.reachable_states}")
    return EXIT_OK if comp.complete else EXIT_FAIL


def cmd_play(args, out):
    system = _load(args.file)
    if args.script:
        deciders = Scripted.from_json(Path(args.script).read_text())
    elif args.interactive:
        deciders = [Interactive() for _ in system.players]
    else:
        deciders = None
    traj = play(system, deciders=deciders, seed=args.seed, step_cap=args.steps)
    verdict = validate_trajectory(system, traj)
    if args.format == "json":
        data = traj.to_dict(system)
        data["validation"] = str(verdict)
        out(json.dumps(data, indent=2))
    else:
        out(_header(args))
        names = system.track_names
        out("start: " + " ".join(f"{n}={v}" for n, v in zip(names, traj.initial)))
        for k, step in enumerate(traj.steps, start=1):
            picks = ", ".join(f"{p}={d}" for p, d in zip(system.player_names, step.decisions)
                              if d is not None)
            state = " ".join(f"{n}={v}" for n, v in zip(names, step.state))
            out(f"step {k}: {picks} -> {state}")
        if traj.status == "terminal":
            out(f"outcome: {traj.outcome}")
        else:
            out(f"stopped after {len(traj.steps)} steps")
        out(f"trajectory: {verdict}")
    return EXIT_OK if verdict else EXIT_FAIL


def cmd_tree(args, out):
    system = _load(args.file)
    tree = _tree_of(system, args)
    if args.dot:
        out(f"// seed={args.seed}")
        out(export_dot(tree).rstrip("\n"))
    elif args.json or args.format == "json":
        out(export_json(tree))
    else:
        out(_header(args))
        for k, v in tree.stats().items():
            out(f"{k}: {v}")
    return EXIT_OK


def cmd_automaton(args, out):
    system = _load(args.file)
    auto = build_automaton(system, args.node_cap)
    if args.dot:
        out(f"// seed={args.seed}")
        out(export_dot(auto).rstrip("\n"))
    else:
        out(export_json(auto, indent=2 if args.format == "text" else None))
    return EXIT_OK


def cmd_reduce(args, out):
    system = _load(args.file)
    tree = _tree_of(system, args)
    before = measure(tree)
    rt = reduce_fixpoint(tree)
    if args.format == "json":
        data = rt.to_dict()
        data["seed"] = args.seed
        data["measure_before"] = list(before)
        out(json.dumps(data, indent=2, default=str))
        return EXIT_OK
    out(_header(args))
    out(f"before: {before[0]} nodes, matrix domain {before[1]}")
    after = measure(rt)
    out(f"after: {after[0]} nodes, matrix domain {after[1]}")
    for name, count in rt.summary().items():
        out(f"{name}: {count} applications")
    if args.log:
        for item in rt.log:
            out(json.dumps(item, default=str))
    for k, v in rt.tree.stats().items():
        out(f"{k}: {v}")
    return EXIT_OK


def cmd_compare(args, out):
    g1, g2 = _load(args.file), _load(args.other)
    if args.level == "agency":
        verdict = agency_equivalent(g1, g2, depth_cap=args.depth, node_cap=args.node_cap)
    else:
        ev1, ev2 = g1.evaluator, g2.evaluator
        if len(ev1.initial_states) != 1 or len(ev2.initial_states) != 1:
            raise UsageError("relabeling comparison needs one initial state per system; "
                             "use --level agency")
        verdict = equivalent_up_to_relabeling(_tree_of(g1, args), _tree_of(g2, args))
    if args.format == "json":
        data = verdict.to_dict()
        data["seed"] = args.seed
        out(json.dumps(data, indent=2, default=str))
    else:
        out(_header(args))
        out(str(verdict))
    return EXIT_OK if verdict.equivalent else EXIT_FAIL


def cmd_ludemes(args, out):
    if args.format == "json":
        out(json.dumps([
            {"name": n, "signature": list(CATALOG.lookup(n).signature),
             "returns": CATALOG.lookup(n).returns, "doc": CATALOG.lookup(n).doc}
            for n in CATALOG.names()
        ], indent=2))
        return EXIT_OK
    for name in CATALOG.names():
        fn = CATALOG.lookup(name)
        out(f"{name}({', '.join(fn.signature)}) -> {fn.returns}")
        if fn.doc:
            out(f"    {fn.doc}")
    return EXIT_OK


def cmd_stats(args, out):
    system = _load(args.file)
    tree = _tree_of(system, args)
    stats = tree.stats()
    stats["state_space_size"] = system.state_space_size
    stats["players"] = len(system.players)
    stats["tracks"] = len(system.tracks)
    if args.format == "json":
        stats["seed"] = args.seed
        out(json.dumps(stats, indent=2, default=str))
        return EXIT_OK
    out(_header(args))
    for k, v in stats.items():
        out(f"{k}: {v}")
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "play": cmd_play,
    "tree": cmd_tree,
    "automaton": cmd_automaton,
    "reduce": cmd_reduce,
    "compare": cmd_compare,
    "ludemes": cmd_ludemes,
    "stats": cmd_stats,
}


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    chunks: list[str] = []
    sink = stdout if args.output is None else None

    def out(text: str):
        if sink is not None:
            print(text, file=sink)
        else:
            chunks.append(text)

    try:
        code = COMMANDS[args.verb](args, out)
    except UsageError as exc:
        print(f"gamesys: error: {exc}", file=stderr)
        return EXIT_USAGE
    except DescriptionError as exc:
        for d in exc.diagnostics:
            print(f"{args.file}:{d}", file=stderr)
        return EXIT_FAIL
    except GameSystemError as exc:
        print(f"gamesys: {exc}", file=stderr)
        return EXIT_FAIL
    except OSError as exc:
        print(f"gamesys: {exc}", file=stderr)
        return EXIT_FAIL
    if args.output is not None:
        Path(args.output).write_text("\n".join(chunks) + "\n")
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
