"""Budgeted best-first search with backtracking over extrusion proposals."""
from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field
from typing import Optional

from .exact import Q
from .metrics import compute_iou, rank_order
from .proposals import Canvas, Extrusion, apply_extrusion, generate_proposals
from .zones import ZoneGraph


class Status(str, enum.Enum):
    SUCCESS = "success"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class SearchConfig:
    width_k: float = 5
    k_decay: float = 0.0
    k_floor: float = 1
    budget: float = 30.0
    proposal_level: int = 1
    seed: int = 0
    max_nodes: Optional[int] = None  # deterministic budget on node expansions

    def __post_init__(self):
        if self.width_k < 1:
            raise ValueError("width_k must be >= 1")
        if self.budget <= 0:
            raise ValueError("budget must be positive")

    def width_at(self, depth: int) -> int:
        return math.ceil(max(self.k_floor, self.width_k - depth * self.k_decay))


@dataclass
class SearchStats:
    nodes_expanded: int = 0
    proposals_scored: int = 0
    wall_time: float = 0.0
    snapshots: list = field(default_factory=list)
    trace: list = field(default_factory=list)  # (elapsed_s, best_iou) at every improvement


@dataclass
class SearchResult:
    status: Status
    sequence: list
    final_canvas: Canvas
    best_iou: object
    stats: SearchStats


def is_complete(canvas: Canvas, zg: ZoneGraph) -> bool:
    return canvas.filled == zg.interior_ids


class _Frame:
    __slots__ = ("canvas", "seq", "children", "pos")

    def __init__(self, canvas, seq, children):
        self.canvas = canvas
        self.seq = seq
        self.children = children
        self.pos = 0


def _better(cand: tuple, best: tuple) -> bool:
    iou, seq = cand
    biou, bseq = best
    if iou != biou:
        return iou > biou
    if len(seq) != len(bseq):
        return len(seq) < len(bseq)
    return [e.canonical_key for e in seq] < [e.canonical_key for e in bseq]


def search(zg: ZoneGraph, scorer, cfg: SearchConfig = SearchConfig()) -> SearchResult:
    """Depth-first descent into the best unexplored child, backtracking on dead ends.

    Every canvas is entered at most once; the budget is checked between node
    expansions only, so any returned sequence replays exactly.
    """
    t0 = time.perf_counter()
    target = zg.interior_ids
    stats = SearchStats()
    empty = Canvas()
    best = (compute_iou(empty, target, zg) if target else Q(1), [])
    stats.trace.append((0.0, best[0]))
    visited = {empty.filled}

    def finish(status, canvas, seq, iou):
        stats.wall_time = time.perf_counter() - t0
        c = Canvas()
        snaps = [c.filled]
        for e in seq:
            c = apply_extrusion(c, e)
            snaps.append(c.filled)
        stats.snapshots = snaps
        return SearchResult(status, list(seq), canvas, iou, stats)

    if is_complete(empty, zg):
        return finish(Status.SUCCESS, empty, [], Q(1))

    def out_of_budget() -> bool:
        if cfg.max_nodes is not None and stats.nodes_expanded >= cfg.max_nodes:
            return True
        return time.perf_counter() - t0 >= cfg.budget

    def expand(canvas: Canvas, seq: list) -> _Frame:
        stats.nodes_expanded += 1
        props = generate_proposals(zg, canvas, cfg.proposal_level, seq, target)
        props = [e for e in props if apply_extrusion(canvas, e, check=False).filled not in visited]
        if not props:
            return _Frame(canvas, seq, [])
        scores = scorer.score(zg, canvas, target, props)
        stats.proposals_scored += len(props)
        order = rank_order(scores, [e.canonical_key for e in props])
        keep = cfg.width_at(len(seq))
        return _Frame(canvas, seq, [props[i] for i in order[:keep]])

    stack = [expand(empty, [])]
    while stack:
        frame = stack[-1]
        if frame.pos >= len(frame.children):
            stack.pop()
            continue
        e: Extrusion = frame.children[frame.pos]
        frame.pos += 1
        canvas = apply_extrusion(frame.canvas, e)
        if canvas.filled in visited:
            continue
        visited.add(canvas.filled)
        seq = frame.seq + [e]
        iou = compute_iou(canvas, target, zg)
        if _better((iou, seq), best):
            if iou > best[0]:
                stats.trace.append((time.perf_counter() - t0, iou))
            best = (iou, seq)
        if is_complete(canvas, zg):
            return finish(Status.SUCCESS, canvas, seq, Q(1))
        if out_of_budget():
            break
        stack.append(expand(canvas, seq))
    # budget exhausted or search space exhausted without success
    return finish(Status.TIMEOUT, _replay_canvas(best[1]), best[1], best[0])


def _replay_canvas(seq) -> Canvas:
    c = Canvas()
    for e in seq:
        c = apply_extrusion(c, e)
    return c
