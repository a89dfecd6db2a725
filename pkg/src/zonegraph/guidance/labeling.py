"""Ternary labels for proposals from random completions."""
from __future__ import annotations

import enum
import zlib
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..proposals import Canvas, Extrusion, apply_extrusion, generate_proposals
from ..zones import ZoneGraph
from .features import ZoneGeometry, featurize, zone_flags, zone_geometry


class Label(enum.IntEnum):
    NEGATIVE = 0
    POSITIVE = 1
    NEUTRAL = 2


@dataclass
class TrainingExample:
    """One (canvas, proposal) pair; geometry is shared by all examples of a model."""

    geometry: ZoneGeometry
    flags: np.ndarray  # (Z, 4)
    label: Label
    p: float  # completion success fraction (1.0 for the GT proposal)
    key: str  # canonical key of the proposal
    sequence_id: str = ""
    step: int = 0

    @property
    def features(self) -> np.ndarray:
        return featurize(self.geometry, self.flags)


def rollout_success(zg: ZoneGraph, canvas: Canvas, history: Sequence[Extrusion], depth: int, rng) -> bool:
    """One uniform-random completion of at most ``depth`` level-1 steps."""
    target = zg.interior_ids
    hist = list(history)
    for _ in range(depth):
        if canvas.filled == target:
            return True
        props = generate_proposals(zg, canvas, 1, hist, target)
        if not props:
            return False
        e = props[int(rng.integers(len(props)))]
        canvas = apply_extrusion(canvas, e, check=False)
        hist.append(e)
    return canvas.filled == target


def completion_fraction(zg, canvas, history, n_rollouts: int, depth: int, seed: int) -> float:
    if canvas.filled == zg.interior_ids:
        return 1.0
    rng = np.random.default_rng(seed)
    hits = sum(rollout_success(zg, canvas, history, depth, rng) for _ in range(n_rollouts))
    return hits / n_rollouts


def assign_labels(ps: Sequence[float], keys: Sequence[str], gt_index: Optional[int]) -> list:
    """GT is Positive; p == 0 is Negative; if none is 0 the minimum-p one is Negative."""
    labels = [Label.NEUTRAL] * len(ps)
    others = [i for i in range(len(ps)) if i != gt_index]
    if gt_index is not None:
        labels[gt_index] = Label.POSITIVE
    zero = [i for i in others if ps[i] == 0]
    if zero:
        for i in zero:
            labels[i] = Label.NEGATIVE
    elif others:
        worst = min(others, key=lambda i: (ps[i], keys[i]))
        labels[worst] = Label.NEGATIVE
    return labels


def label_examples(
    zg: ZoneGraph,
    gt_sequence: Sequence[Extrusion],
    step_index: int,
    proposals: Sequence[Extrusion],
    rng,
    geometry: Optional[ZoneGeometry] = None,
    sequence_id: str = "",
) -> list:
    """Label every proposal at one GT step.

    Each non-GT proposal gets N uniform-random completions of depth at most N,
    where N counts the GT steps still to go including this one. The GT op is
    added to the list if the proposal generator missed it.
    """
    geometry = geometry if geometry is not None else zone_geometry(zg)
    canvas = Canvas()
    for e in gt_sequence[:step_index]:
        canvas = apply_extrusion(canvas, e)
    history = list(gt_sequence[:step_index])
    gt = gt_sequence[step_index]
    props = list(proposals)
    keys = [e.canonical_key for e in props]
    if gt.canonical_key in keys:
        gt_index = keys.index(gt.canonical_key)
    else:
        props.append(gt)
        keys.append(gt.canonical_key)
        gt_index = len(props) - 1
    n = len(gt_sequence) - step_index
    seeds = rng.integers(0, 2**63 - 1, size=len(props))
    ps = []
    for i, e in enumerate(props):
        if i == gt_index:
            ps.append(1.0)
            continue
        after = apply_extrusion(canvas, e, check=False)
        ps.append(completion_fraction(zg, after, history + [e], n, n, int(seeds[i])))
    labels = assign_labels(ps, keys, gt_index)
    target = zg.interior_ids
    return [
        TrainingExample(geometry, zone_flags(zg, canvas, target, e), lab, p, k, sequence_id, step_index)
        for e, lab, p, k in zip(props, labels, ps, keys)
    ]


def build_training_set(records, seed: int = 0, n_points: int = 64, features: str = "pointcloud") -> list:
    """Label every GT step of every record; rollouts are seeded per (seed, model)."""
    out = []
    for rec in records:
        zg = rec.zg
        geom = zone_geometry(zg, n_points if features == "pointcloud" else 1, 0, features)
        rng = np.random.default_rng([seed, zlib.crc32(rec.model_id.encode())])
        canvas, hist = Canvas(), []
        for step, gt in enumerate(rec.gt_ops):
            props = generate_proposals(zg, canvas, 1, hist)
            out += label_examples(zg, rec.gt_ops, step, props, rng, geom, rec.model_id)
            canvas = apply_extrusion(canvas, gt)
            hist.append(gt)
    return out
