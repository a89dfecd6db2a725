"""Dataset-level evaluation: GT ranking, reconstruction, GT coverage."""
from __future__ import annotations

import csv
import io
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .exact import Q
from .metrics import compute_iou, fmt12, rank_order, relative_rank
from .proposals import Canvas, apply_extrusion, generate_proposals
from .search import SearchConfig, search

RANK_COLUMNS = ["model_id", "step", "candidate_count", "gt_rank", "relative_rank"]
RECON_COLUMNS = ["model_id", "scorer", "status", "iou", "sequence_len", "nodes_expanded"]
CURVE_COLUMNS = ["scorer", "time_s", "mean_iou"]
RANK_NOTE = "# rank ties broken by canonical_key ascending"


def to_csv(columns: Sequence[str], rows: Iterable[dict], note: Optional[str] = None) -> str:
    buf = io.StringIO()
    if note:
        buf.write(note + "\n")
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def _map(fn, items: Iterable, workers: int):
    """Ordered map, across worker processes when ``workers`` > 1."""
    if workers <= 1:
        yield from map(fn, items)
        return
    with ProcessPoolExecutor(workers) as pool:
        yield from pool.map(fn, items, chunksize=1)


# ---------------------------------------------------------------- ranking


def rank_rows(record, scorer, level: int = 1) -> list:
    """One row per GT step whose op is among the proposals."""
    zg = record.zg
    target = zg.interior_ids
    canvas, hist, rows = Canvas(), [], []
    for step, gt in enumerate(record.gt_ops):
        props = generate_proposals(zg, canvas, level, hist, target)
        keys = [e.canonical_key for e in props]
        if gt.canonical_key in keys:
            gi = keys.index(gt.canonical_key)
            scores = scorer.score(zg, canvas, target, props)
            rr = relative_rank(scores, gi, keys)
            rows.append({
                "model_id": record.model_id, "step": step, "candidate_count": len(props),
                "gt_rank": rank_order(scores, keys).index(gi) + 1, "relative_rank": fmt12(rr),
                "_rr": rr,
            })
        canvas = apply_extrusion(canvas, gt)
        hist.append(gt)
    return rows


def eval_rank(records: Iterable, scorer, level: int = 1, workers: int = 1):
    """Rows for every covered GT step and the mean relative rank (exact)."""
    rows = []
    for part in _map(partial(rank_rows, scorer=scorer, level=level), records, workers):
        rows += part
    mean = sum((r["_rr"] for r in rows), Q(0)) / len(rows) if rows else None
    return rows, mean


# ---------------------------------------------------------------- reconstruction


@dataclass
class ReconReport:
    rows: list
    wall: list  # seconds per model, same order as rows
    traces: list  # (elapsed, best_iou) improvement lists

    def success_count(self) -> int:
        return sum(r["status"] == "success" for r in self.rows)

    def curve(self, scorer_name: str, times: Sequence[float]) -> list:
        """Mean best-so-far IoU over models at each time point."""
        out = []
        for t in times:
            vals = []
            for tr in self.traces:
                best = Q(0)
                for el, iou in tr:
                    if el <= t:
                        best = iou
                vals.append(best)
            mean = sum(vals, Q(0)) / len(vals) if vals else Q(0)
            out.append({"scorer": scorer_name, "time_s": f"{t:g}", "mean_iou": fmt12(mean)})
        return out


def _recon_one(rec, scorer, cfg: SearchConfig, simplify: bool):
    return rec.model_id, search(rec.zone_graph(simplify), scorer, cfg)


def eval_recon(records: Iterable, scorer, cfg: SearchConfig = SearchConfig(), simplify: bool = False,
               on_result=None, workers: int = 1) -> ReconReport:
    """Search every record; ``on_result(model_id, result)`` sees each outcome in input order.

    Worker processes share the CPU, so wall-clock budgets are only
    comparable between runs with the same worker count.
    """
    rows, wall, traces = [], [], []
    for model_id, res in _map(partial(_recon_one, scorer=scorer, cfg=cfg, simplify=simplify), records, workers):
        rows.append({
            "model_id": model_id, "scorer": scorer.name, "status": res.status.value,
            "iou": fmt12(res.best_iou), "sequence_len": len(res.sequence),
            "nodes_expanded": res.stats.nodes_expanded,
        })
        wall.append(res.stats.wall_time)
        traces.append(res.stats.trace)
        if on_result is not None:
            on_result(model_id, res)
    return ReconReport(rows, wall, traces)


def default_times(budget: float) -> list:
    pts = [0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1, 2, 5, 10, 20, 30, 60, 120, 300]
    return [t for t in pts if t < budget] + [budget]


# ---------------------------------------------------------------- coverage

# part_of_component: a same-type proposal strictly contains the GT zones, i.e. the
# GT sketch is only part of a connected facet component on its start plane
CAUSES = ("inverse_filtered", "needs_higher_level", "part_of_component", "outside_grouping")


def coverage_of(record, level: int = 1, max_level: int = 3):
    """(fully covered?, cause of the first miss or None)."""
    zg = record.zg
    canvas, hist = Canvas(), []
    for gt in record.gt_ops:
        props, dropped = generate_proposals(zg, canvas, level, hist, return_unfiltered=True)
        if gt.canonical_key not in {e.canonical_key for e in props}:
            if gt.canonical_key in {e.canonical_key for e in dropped}:
                return False, "inverse_filtered"
            for lv in range(level + 1, max_level + 1):
                if gt.canonical_key in {e.canonical_key for e in generate_proposals(zg, canvas, lv, hist)}:
                    return False, "needs_higher_level"
            if any(e.bool_type is gt.bool_type and e.zones > gt.zones for e in props):
                return False, "part_of_component"
            return False, "outside_grouping"
        canvas = apply_extrusion(canvas, gt)
        hist.append(gt)
    return True, None


def coverage_report(records: Iterable, level: int = 1) -> dict:
    total, covered = 0, 0
    causes = Counter()
    for rec in records:
        ok, cause = coverage_of(rec, level)
        total += 1
        covered += ok
        if cause:
            causes[cause] += 1
    return {
        "sequences": total,
        "covered": covered,
        "fraction": covered / total if total else 0.0,
        "failures": {c: causes.get(c, 0) for c in CAUSES},
    }
