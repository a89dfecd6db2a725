"""Command-line interface.

Exit codes: 0 success, 2 validation error, 3 budget exhausted (partial result written).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

EXIT_OK, EXIT_INVALID, EXIT_BUDGET = 0, 2, 3

log = logging.getLogger("zonegraph")


class _JsonFormatter(logging.Formatter):
    def format(self, record):
        return json.dumps({
            "t": round(record.created, 3), "level": record.levelname,
            "logger": record.name, "msg": record.getMessage(),
        })


def _setup(args) -> None:
    if args.threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMBA_NUM_THREADS"):
            os.environ[var] = str(args.threads)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(_JsonFormatter() if args.json_logs else logging.Formatter("%(levelname)s %(message)s"))
    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel(logging.INFO)


def _read_json(path):
    return json.loads(Path(path).read_text())


def _write(path, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _load_graph(args):
    from .brep import parse_brep
    from .zones import load_zone_graph, zone_graph_from_brep

    if getattr(args, "zg", None):
        return load_zone_graph(_read_json(args.zg))
    return zone_graph_from_brep(parse_brep(_read_json(args.model)), simplify=getattr(args, "simplify", False))


def _parse_canvas(text):
    from .proposals import Canvas

    if not text:
        return Canvas()
    return Canvas(frozenset(int(t) for t in text.split(",") if t.strip()))


def _load_ops(path) -> list:
    from .proposals import Extrusion

    doc = _read_json(path)
    ops = doc.get("sequence", doc.get("zone_ops")) if isinstance(doc, dict) else doc
    return [Extrusion.from_json(o) for o in ops]


def _make_scorer(args):
    from .guidance.scorers import HeuristicScorer, NetScorer, RandomScorer

    if args.scorer == "random":
        return RandomScorer(args.seed)
    if args.scorer == "heur":
        return HeuristicScorer()
    if not args.weights:
        raise SystemExit("--weights is required for --scorer net")
    from .guidance.weights_io import load_weights

    model = load_weights(args.weights)
    return NetScorer(model, int(model.hyper.get("n_points", 64)), 0, model.hyper.get("features", "pointcloud"))


def _records(args):
    from .dataset import iter_records

    return iter_records(args.data, args.start, args.stop)


# ---------------------------------------------------------------- verbs


def cmd_build_zone_graph(args) -> int:
    from .zones import dump_zone_graph

    zg = _load_graph(args)
    _write(args.out, json.dumps(dump_zone_graph(zg), sort_keys=True) + "\n")
    log.info("%d zones, %d edges, %d interior", len(zg.zones), len(zg.edges), len(zg.interior_ids))
    return EXIT_OK


def cmd_propose(args) -> int:
    from .proposals import generate_proposals

    zg = _load_graph(args)
    history = _load_ops(args.history) if args.history else []
    props = generate_proposals(zg, _parse_canvas(args.canvas), args.level, history)
    doc = {"proposals": [dict(e.to_json(), key=e.canonical_key) for e in props]}
    _write(args.out, json.dumps(doc, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_search(args) -> int:
    from .metrics import fmt12
    from .search import SearchConfig, Status, search

    zg = _load_graph(args)
    cfg = SearchConfig(args.k, args.k_decay, args.k_floor, args.budget, args.level, args.seed, args.max_nodes)
    res = search(zg, _make_scorer(args), cfg)
    doc = {
        "status": res.status.value,
        "iou": fmt12(res.best_iou),
        "sequence": [e.to_json() for e in res.sequence],
        "nodes_expanded": res.stats.nodes_expanded,
        "wall_s": round(res.stats.wall_time, 6),
    }
    _write(args.out, json.dumps(doc, sort_keys=True, indent=1) + "\n")
    if args.stats:
        from .evaluation import to_csv

        rows = [{"elapsed_s": f"{t:.6f}", "best_iou": fmt12(iou)} for t, iou in res.stats.trace]
        _write(args.stats, to_csv(["elapsed_s", "best_iou"], rows))
    return EXIT_OK if res.status is Status.SUCCESS else EXIT_BUDGET


def cmd_gen_dataset(args) -> int:
    from .dataset import generate_dataset
    from .synth import SynthConfig

    cfg = SynthConfig(args.min_ops, args.max_ops, args.grid)
    names = generate_dataset(args.out, args.count, args.seed, cfg)
    log.info("wrote %d models to %s", len(names), args.out)
    if args.coverage:
        from .dataset import iter_records
        from .evaluation import coverage_report

        rep = coverage_report(iter_records(args.out))
        Path(args.out, "coverage.json").write_text(json.dumps(rep, indent=2) + "\n")
        log.info("GT coverage at level 1: %d/%d (%.1f%%)", rep["covered"], rep["sequences"], 100 * rep["fraction"])
    return EXIT_OK


def cmd_train(args) -> int:
    from .guidance.labeling import build_training_set
    from .guidance.training import HyperParams, train_scorer
    from .guidance.weights_io import save_weights

    t0 = time.perf_counter()
    examples = build_training_set(_records(args), args.seed, args.points, args.features)
    log.info("labelled %d examples in %.1fs", len(examples), time.perf_counter() - t0)
    hp = HyperParams(gamma=args.gamma, lr=args.lr, steps=args.steps, batch_size=args.batch_size,
                     rounds=args.rounds, edge_weighting=args.edge_weighting, lr_schedule=args.lr_schedule)
    model = train_scorer(examples, hp, args.seed)
    model.hyper.update({"n_points": args.points, "features": args.features})
    save_weights(model, args.out)
    log.info("saved %s", args.out)
    return EXIT_OK


def cmd_eval_rank(args) -> int:
    from .evaluation import RANK_COLUMNS, RANK_NOTE, eval_rank, to_csv

    rows, mean = eval_rank(_records(args), _make_scorer(args), args.level, max(1, args.threads))
    _write(args.out, to_csv(RANK_COLUMNS, rows, RANK_NOTE))
    log.info("mean relative rank %s over %d steps", None if mean is None else float(mean), len(rows))
    return EXIT_OK


def cmd_eval_recon(args) -> int:
    from .evaluation import CURVE_COLUMNS, RECON_COLUMNS, default_times, eval_recon, to_csv
    from .search import SearchConfig

    scorer = _make_scorer(args)
    cfg = SearchConfig(args.k, args.k_decay, args.k_floor, args.budget, args.level, args.seed, args.max_nodes)
    rep = eval_recon(_records(args), scorer, cfg, simplify=args.simplify, workers=max(1, args.threads))
    _write(args.out, to_csv(RECON_COLUMNS, rep.rows))
    if args.curve:
        _write(args.curve, to_csv(CURVE_COLUMNS, rep.curve(scorer.name, default_times(args.budget))))
    if args.timing:
        rows = [{"model_id": r["model_id"], "wall_s": f"{w:.6f}"} for r, w in zip(rep.rows, rep.wall)]
        _write(args.timing, to_csv(["model_id", "wall_s"], rows))
    log.info("%d/%d reconstructed", rep.success_count(), len(rep.rows))
    return EXIT_OK if rep.success_count() == len(rep.rows) else EXIT_BUDGET


def cmd_replay(args) -> int:
    from .metrics import compute_iou, fmt12
    from .proposals import replay

    zg = _load_graph(args)
    canvas = replay(_load_ops(args.sequence))
    doc = {
        "iou": fmt12(compute_iou(canvas, zg.interior_ids, zg)),
        "complete": canvas.filled == zg.interior_ids,
        "canvas": sorted(canvas.filled),
    }
    _write(args.out, json.dumps(doc, sort_keys=True) + "\n")
    return EXIT_OK if doc["complete"] else EXIT_BUDGET


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    def global_flags(parser, suppress):
        # verbs repeat the global flags; SUPPRESS keeps a value given before the verb
        d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
        parser.add_argument("--seed", type=int, default=d(0))
        parser.add_argument("--threads", type=int, default=d(0), help="worker processes for dataset evaluation; also caps BLAS/numba threads (0 = defaults)")
        parser.add_argument("--json-logs", action="store_true", default=d(False))

    common = argparse.ArgumentParser(add_help=False)
    global_flags(common, True)
    p = argparse.ArgumentParser(prog="zonegraph", description=__doc__)
    global_flags(p, False)
    sub = p.add_subparsers(dest="verb", required=True)

    def graph_source(sp, out_default="-"):
        g = sp.add_mutually_exclusive_group(required=True)
        g.add_argument("--model", "--in", dest="model", help="B-rep JSON")
        g.add_argument("--zg", help="zone graph JSON")
        sp.add_argument("--simplify", action="store_true")
        sp.add_argument("--out", default=out_default)

    def search_flags(sp):
        sp.add_argument("--scorer", choices=["random", "heur", "net"], default="heur")
        sp.add_argument("--weights")
        sp.add_argument("--k", type=float, default=5)
        sp.add_argument("--k-decay", type=float, default=0.0)
        sp.add_argument("--k-floor", type=float, default=1)
        sp.add_argument("--budget", type=float, default=30.0)
        sp.add_argument("--level", type=int, default=1)
        sp.add_argument("--max-nodes", type=int)

    def data_flags(sp):
        sp.add_argument("--data", required=True)
        sp.add_argument("--start", type=int, default=0)
        sp.add_argument("--stop", type=int)

    sp = sub.add_parser("build-zone-graph", parents=[common])
    graph_source(sp)
    sp.set_defaults(func=cmd_build_zone_graph)

    sp = sub.add_parser("propose", parents=[common])
    graph_source(sp)
    sp.add_argument("--canvas", default="", help="comma-separated zone ids")
    sp.add_argument("--history", help="JSON list of applied ops")
    sp.add_argument("--level", type=int, default=1)
    sp.set_defaults(func=cmd_propose)

    sp = sub.add_parser("search", parents=[common])
    graph_source(sp)
    search_flags(sp)
    sp.add_argument("--stats", help="CSV of (elapsed_s, best_iou) at every improvement")
    sp.set_defaults(func=cmd_search)

    sp = sub.add_parser("gen-dataset", parents=[common])
    sp.add_argument("--count", type=int, default=500)
    sp.add_argument("--min-ops", type=int, default=2)
    sp.add_argument("--max-ops", type=int, default=4)
    sp.add_argument("--grid", type=int, default=4)
    sp.add_argument("--out", required=True)
    sp.add_argument("--coverage", action="store_true", help="also write coverage.json (GT ops replayed against level-1 proposals)")
    sp.set_defaults(func=cmd_gen_dataset)

    sp = sub.add_parser("train", parents=[common])
    data_flags(sp)
    sp.add_argument("--out", required=True)
    sp.add_argument("--gamma", type=float, default=2.0)
    sp.add_argument("--lr", type=float, default=1e-3)
    sp.add_argument("--steps", type=int, default=2000)
    sp.add_argument("--lr-schedule", choices=["constant", "cosine"], default="constant")
    sp.add_argument("--batch-size", type=int, default=32)
    sp.add_argument("--rounds", type=int, default=3)
    sp.add_argument("--points", type=int, default=64)
    sp.add_argument("--features", choices=["pointcloud", "basic"], default="pointcloud")
    sp.add_argument("--edge-weighting", action="store_true")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval-rank", parents=[common])
    data_flags(sp)
    sp.add_argument("--scorer", choices=["random", "heur", "net"], default="heur")
    sp.add_argument("--weights")
    sp.add_argument("--level", type=int, default=1)
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_eval_rank)

    sp = sub.add_parser("eval-recon", parents=[common])
    data_flags(sp)
    search_flags(sp)
    sp.add_argument("--simplify", action="store_true")
    sp.add_argument("--out", default="-")
    sp.add_argument("--curve", help="accuracy-vs-time CSV (scorer,time_s,mean_iou)")
    sp.add_argument("--timing", help="per-model wall-clock CSV")
    sp.set_defaults(func=cmd_eval_recon)

    sp = sub.add_parser("replay", parents=[common])
    graph_source(sp)
    sp.add_argument("--sequence", required=True, help="JSON with a 'sequence' or 'zone_ops' list")
    sp.set_defaults(func=cmd_replay)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _setup(args)
    from .errors import InvalidApplication, ValidationError

    try:
        return args.func(args)
    except (ValidationError, InvalidApplication, json.JSONDecodeError, FileNotFoundError, KeyError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
