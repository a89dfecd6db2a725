"""Reconstruction and ranking metrics."""
from __future__ import annotations

from typing import Sequence

from .exact import Q, ZERO
from .zones import ZoneGraph


def _filled(c) -> frozenset:
    return c.filled if hasattr(c, "filled") else frozenset(c)


def compute_iou(a, b, zg: ZoneGraph):
    """Volumetric IoU of two zone sets (exact); 1 when both are empty."""
    sa, sb = _filled(a), _filled(b)
    vols = zg.volumes()
    union = sa | sb
    if not union:
        return Q(1)
    inter = sum((vols[z] for z in sa & sb), ZERO)
    return inter / sum((vols[z] for z in union), ZERO)


def relative_rank(scores: Sequence, gt_index: int, keys: Sequence[str]):
    """1-based rank of the ground truth under descending score / candidate count.

    ``scores`` entries may be tuples (primary, tie-break); remaining ties
    fall back to ascending canonical key.
    """
    if not scores:
        raise ValueError("no candidates")
    order = rank_order(scores, keys)
    pos = order.index(gt_index)
    return Q(pos + 1, len(scores))


def _neg(s):
    if isinstance(s, tuple):
        return tuple(-x for x in s)
    return (-s,)


def rank_order(scores: Sequence, keys: Sequence[str]) -> list:
    """Indices sorted best-first: higher score, then lower canonical key."""
    return sorted(range(len(scores)), key=lambda i: (_neg(scores[i]), keys[i]))


def fmt12(x) -> str:
    """Decimal rendering with 12 significant digits."""
    return f"{float(x):.12g}"
