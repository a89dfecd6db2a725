"""Proposal scorers: uniform random, the zone-count heuristic, and the learned model."""
from __future__ import annotations

import hashlib
from typing import Sequence

import numpy as np

from ..exact import Q
from ..metrics import compute_iou
from ..proposals import Canvas, Extrusion, apply_extrusion
from ..zones import ZoneGraph
from .features import zone_flags, zone_geometry
from .network import neighbour_lists


def heuristic_score(zg: ZoneGraph, canvas: Canvas, e: Extrusion, target=None) -> tuple:
    """(|Z| - |T xor C'|) / |Z| for the post-step canvas, plus its IoU tie-break."""
    target = zg.interior_ids if target is None else target
    after = apply_extrusion(canvas, e, check=False).filled
    nz = len(zg.zones)
    sym = len(target | after) - len(target & after)
    return Q(nz - sym, nz), compute_iou(after, target, zg)


class RandomScorer:
    """Uniform scores that depend only on (seed, canvas, proposal).

    Hashing instead of drawing from a stream keeps scores independent of the
    order in which search happens to visit nodes.
    """

    name = "random"

    def __init__(self, seed: int = 0):
        self.seed = int(seed)

    def _u(self, canvas: Canvas, e: Extrusion) -> float:
        text = f"{self.seed}|{','.join(map(str, canvas.fingerprint))}|{e.canonical_key}"
        h = hashlib.blake2b(text.encode(), digest_size=8).digest()
        return int.from_bytes(h, "little") / 2.0**64

    def score(self, zg: ZoneGraph, canvas: Canvas, target, proposals: Sequence[Extrusion]) -> list:
        return [(self._u(canvas, e),) for e in proposals]


class HeuristicScorer:
    name = "heur"

    def score(self, zg: ZoneGraph, canvas: Canvas, target, proposals: Sequence[Extrusion]) -> list:
        return [heuristic_score(zg, canvas, e, target) for e in proposals]


class NetScorer:
    """Learned scorer; zone encodings are cached per (zone, flags)."""

    name = "net"

    def __init__(self, model, n_points: int = 64, seed: int = 0, features: str = "pointcloud"):
        self.model = model
        self.n_points = n_points if features == "pointcloud" else 1
        self.seed = seed
        self.features = features

    def _context(self, zg: ZoneGraph):
        key = ("net", self.model.token, self.n_points, self.seed, self.features)
        ctx = zg.cache.get(key)
        if ctx is None:
            geom = zone_geometry(zg, self.n_points, self.seed, self.features)
            nbrs, wts = neighbour_lists(geom, len(zg.zones))
            ctx = {"geom": geom, "nbrs": nbrs, "wts": wts, "enc": {}}
            zg.cache[key] = ctx
        return ctx

    def prob(self, zg: ZoneGraph, canvas: Canvas, target, e: Extrusion) -> float:
        ctx = self._context(zg)
        flags = zone_flags(zg, canvas, target, e)
        enc = ctx["enc"]
        pts = ctx["geom"].points
        rows = []
        for z in range(len(zg.zones)):
            fk = (z,) + tuple(flags[z])
            v = enc.get(fk)
            if v is None:
                f = np.concatenate([pts[z], np.broadcast_to(flags[z], (pts.shape[1], 4))], axis=1)
                v = enc[fk] = self.model.encode_zone(f)
            rows.append(v)
        return self.model.graph_prob(np.stack(rows), ctx["nbrs"], ctx["wts"])

    def score(self, zg: ZoneGraph, canvas: Canvas, target, proposals: Sequence[Extrusion]) -> list:
        return [(self.prob(zg, canvas, target, e),) for e in proposals]


def neural_score(model, zg: ZoneGraph, canvas: Canvas, target, e: Extrusion, n_points: int = 64, seed: int = 0) -> float:
    """Probability that ``e`` is a good next operation."""
    model.validate()
    return NetScorer(model, n_points, seed).prob(zg, canvas, target, e)
