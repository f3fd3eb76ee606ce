"""Command-line interface: ``jitune {tune,coarsen,eval,compare}``.

Exit status 0 on success, 1 on invalid input (one JSON line on stderr),
2 when every embedder trial failed.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .coarsen import build_chain, extend_synopsis, kl_divergence, save_synopsis
from .embed import get_embedder, load_embedding
from .evaluation import TASKS, evaluate, prepare_task
from .graph import GraphFormatError, attach_attributes, attach_labels, load_edge_list
from .space import HyperparameterSpace, load_space
from .tune import BudgetError, tune_gp, tune_jitune, tune_random

logger = logging.getLogger("jitune")


class UsageError(Exception):
    pass


class AllTrialsFailed(Exception):
    pass


def _parse_value(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def _existing(path: str | None, what: str) -> str | None:
    if path is not None and not os.path.exists(path):
        raise UsageError(f"{what} file not found: {path}")
    return path


def load_graph(args):
    _existing(args.edges, "edge")
    graph = load_edge_list(args.edges, directed=getattr(args, "directed", False))
    if getattr(args, "labels", None):
        graph = attach_labels(graph, _existing(args.labels, "label"))
    if getattr(args, "attrs", None):
        graph = attach_attributes(graph, _existing(args.attrs, "attribute"))
    return graph


def _embedder(args):
    space = load_space(_existing(args.space, "space")) if args.space else None
    emb = get_embedder(args.embedder, plugin_cmd=args.plugin_cmd, timeout=args.plugin_timeout,
                       space=space)
    fixed = {}
    for item in args.fixed or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--fixed expects key=value, got {item!r}")
        fixed[key] = _parse_value(value)
    emb.defaults = {**emb.defaults, **fixed}
    free = [d for d in emb.descriptor.space if d.name not in fixed]
    if len(free) < len(emb.descriptor.space.dims):
        # a fixed value takes the parameter out of the search
        emb.descriptor = replace(emb.descriptor, space=HyperparameterSpace(free))
    return emb, fixed


def _budget(args) -> dict:
    if (args.budget_seconds is None) == (args.budget_rounds is None):
        raise UsageError("give exactly one of --budget-seconds and --budget-rounds")
    if args.budget_rounds is not None:
        return {"budget_rounds": args.budget_rounds}
    return {"budget_seconds": args.budget_seconds}


def _dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def write_tune_artifacts(result, out: Path, extra: dict) -> None:
    out.mkdir(parents=True, exist_ok=True)
    _dump_json({"config": result.config, "performance": result.performance, **extra},
               out / "theta_opt.json")
    (out / "trials.jsonl").write_text(result.log.to_jsonl(), encoding="utf-8")
    with open(out / "trials.csv", "w", encoding="utf-8", newline="") as fh:
        result.log.write_csv(fh)
    with open(out / "curve.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["elapsed", "trial", "phase", "graph", "performance", "incumbent"])
        for row in result.log.curve():
            writer.writerow([repr(row["clock"]), row["index"], row["phase"], row["graph_tag"],
                             "" if row["performance"] is None else repr(row["performance"]),
                             "" if row["incumbent"] is None else repr(row["incumbent"])])
    summary = {k: v for k, v in result.info.items()}
    if result.budget is not None:
        summary["budget_holds"] = result.budget.holds()
    _dump_json(summary, out / "summary.json")


def cmd_tune(args) -> int:
    graph = load_graph(args)
    emb, fixed = _embedder(args)
    data = prepare_task(args.task, graph, seed=args.seed, holdout_fraction=args.holdout,
                        train_fraction=args.train_fraction, metric=args.metric)
    try:
        result = tune_jitune(data, emb, tau=args.tau, seed=args.seed, workers=args.workers,
                             **_budget(args))
    except BudgetError as exc:
        raise UsageError(str(exc)) from None
    if result.config is None:
        raise AllTrialsFailed("no embedder trial succeeded")
    out = Path(args.out)
    write_tune_artifacts(result, out, {"embedder": emb.name, "task": args.task,
                                       "seed": args.seed, "fixed": fixed})
    print(json.dumps({"config": result.config, "performance": result.performance,
                      "out": str(out)}, sort_keys=True))
    return 0


def cmd_coarsen(args) -> int:
    graph = load_graph(args)
    if graph.node_count < 2:
        raise UsageError("graph needs at least two nodes to coarsen")
    try:
        chain = build_chain(graph, args.tau, attributed=args.attributed, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for syn in chain.levels:
        save_synopsis(syn, out / f"level{syn.level}.edges", out / f"level{syn.level}.proj")
        kl = kl_divergence(graph, extend_synopsis(syn, graph))
        rows.append([syn.level, syn.node_count, syn.graph.edge_count, repr(syn.alpha),
                     repr(syn.delta_w), repr(kl)])
    with open(out / "summary.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["level", "nodes", "edges", "alpha", "delta_w", "kl"])
        writer.writerows(rows)
    print(f"{'level':>5} {'|V|':>8} {'|E|':>9} {'alpha':>7} {'dW':>10} {'KL':>9}")
    for r in rows:
        print(f"{r[0]:>5} {r[1]:>8} {r[2]:>9} {float(r[3]):7.4f} {float(r[4]):10.4g} "
              f"{float(r[5]):9.4g}")
    print(f"selected level {chain.selected_synopsis.level} (tau={args.tau})")
    return 0


def cmd_eval(args) -> int:
    graph = load_graph(args)
    _existing(args.embedding, "embedding")
    try:
        emb = load_embedding(args.embedding)
    except GraphFormatError as exc:
        raise UsageError(f"bad embedding file: {exc}") from None
    if emb.shape[0] != graph.node_count:
        raise UsageError(f"embedding has {emb.shape[0]} rows, graph has {graph.node_count} nodes")
    data = prepare_task(args.task, graph, seed=args.seed, holdout_fraction=args.holdout,
                        train_fraction=args.train_fraction, metric=args.metric)
    result = evaluate(args.task, data, emb, seed=args.seed)
    result.seed = args.seed
    print(result.to_json())
    return 0


def cmd_compare(args) -> int:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    unknown = set(methods) - {"jitune", "random", "gp"}
    if unknown:
        raise UsageError(f"unknown method(s): {sorted(unknown)}")
    if len(set(methods)) < 2:
        raise UsageError("compare needs at least two methods")
    if args.budget_rounds is None:
        raise UsageError("compare needs --budget-rounds")
    graph = load_graph(args)
    emb, _ = _embedder(args)
    rows = []
    for seed in range(args.seed, args.seed + args.seeds):
        data = prepare_task(args.task, graph, seed=seed, holdout_fraction=args.holdout,
                            train_fraction=args.train_fraction, metric=args.metric)
        for method in methods:
            t0 = time.perf_counter()
            if method == "jitune":
                res = tune_jitune(data, emb, budget_rounds=args.budget_rounds, tau=args.tau,
                                  seed=seed, workers=args.workers)
                used = float(res.budget.accounted())
            elif method == "random":
                res = tune_random(data, emb, args.budget_rounds, seed=seed, workers=args.workers)
                used = float(args.budget_rounds)
            else:
                res = tune_gp(data, emb, args.budget_rounds, init=args.gp_init, seed=seed)
                used = float(args.budget_rounds)
            wall = time.perf_counter() - t0
            metric = next((t.metric for t in res.log if t.metric), "")
            rows.append([method, seed, metric,
                         "" if res.performance is None else repr(res.performance),
                         f"{wall:.3f}", repr(used)])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "compare.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["method", "seed", "metric", "value", "time_s", "rounds_used"])
        writer.writerows(rows)
    for method in methods:
        vals = [float(r[3]) for r in rows if r[0] == method and r[3]]
        if vals:
            print(f"{method:>8}  median {np.median(vals):.4f}  mean {np.mean(vals):.4f}")
    return 0


def _graph_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--edges", required=True, help="edge list file")
    p.add_argument("--labels", help="node label file")
    p.add_argument("--attrs", help="node attribute file")
    p.add_argument("--directed", action="store_true", help="input arcs are directed (symmetrized)")


def _task_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--task", choices=TASKS, default="link_prediction")
    p.add_argument("--holdout", type=float, default=0.2, help="edge fraction held out for LP")
    p.add_argument("--train-fraction", type=float, default=0.2,
                   help="labeled-node fraction used to train the classifier")
    p.add_argument("--metric", choices=("MicroF1", "Accuracy"), default=None)
    p.add_argument("--seed", type=int, default=0)


def _tuner_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--embedder", default="arope", help="deepwalk, arope, or a plugin name")
    p.add_argument("--plugin-cmd", help="external embedder command")
    p.add_argument("--plugin-timeout", type=float, default=None)
    p.add_argument("--space", help="search space file overriding the embedder's default")
    p.add_argument("--fixed", action="append", metavar="KEY=VALUE",
                   help="fixed embedder parameter (repeatable), e.g. dim=16")
    p.add_argument("--budget-seconds", type=float)
    p.add_argument("--budget-rounds", type=int)
    p.add_argument("--tau", type=float, default=0.5, help="synopsis similarity threshold")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jitune", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tune", help="tune an embedder within a budget")
    _graph_args(p)
    _task_args(p)
    _tuner_args(p)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("coarsen", help="build and save the synopsis chain")
    _graph_args(p)
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--attributed", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_coarsen)

    p = sub.add_parser("eval", help="score a saved embedding")
    _graph_args(p)
    _task_args(p)
    p.add_argument("--embedding", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="run several tuners under the same round budget")
    _graph_args(p)
    _task_args(p)
    _tuner_args(p)
    p.add_argument("--methods", default="jitune,random", help="comma list of jitune,random,gp")
    p.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds")
    p.add_argument("--gp-init", type=int, default=5)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except AllTrialsFailed as exc:
        print(json.dumps({"error": str(exc), "type": "AllTrialsFailed"}), file=sys.stderr)
        return 2
    except (UsageError, GraphFormatError, ValueError, OSError) as exc:
        print(json.dumps({"error": str(exc), "type": type(exc).__name__}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
