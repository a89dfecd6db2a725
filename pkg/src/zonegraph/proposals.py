"""Candidate sketch + extrude + Boolean operations on a zone graph."""
from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Optional, Sequence

import numpy as np

from . import _kernels
from .errors import InvalidApplication
from .exact import (
    Q,
    ZERO,
    area2,
    bbox2,
    convex_hull2,
    dominant_axis,
    drop_axis,
    format_q,
    overlap_area2,
    segments_overlap,
)
from .zones import ZoneGraph


class BoolType(str, enum.Enum):
    UNION = "union"
    DIFFERENCE = "difference"

    @property
    def opposite(self) -> "BoolType":
        return BoolType.DIFFERENCE if self is BoolType.UNION else BoolType.UNION


@dataclass(frozen=True)
class Canvas:
    filled: frozenset = frozenset()

    @property
    def fingerprint(self) -> tuple:
        return tuple(sorted(self.filled))


@dataclass(frozen=True)
class Extrusion:
    start_plane: int
    end_plane: int
    direction: tuple
    sketch_facets: tuple
    zones: frozenset
    bool_type: BoolType

    @property
    def canonical_key(self) -> str:
        tag = "U" if self.bool_type is BoolType.UNION else "D"
        return tag + ":" + ".".join(str(z) for z in sorted(self.zones))

    def to_json(self) -> dict:
        return {
            "start_plane": self.start_plane,
            "end_plane": self.end_plane,
            "direction": [format_q(c) for c in self.direction],
            "sketch_facets": list(self.sketch_facets),
            "zones": sorted(self.zones),
            "bool_type": self.bool_type.value,
        }

    @classmethod
    def from_json(cls, d: dict) -> "Extrusion":
        from .exact import to_q

        if "start_plane" not in d:
            return zone_op(d["zones"], BoolType(d["bool_type"]))
        return cls(
            d["start_plane"],
            d["end_plane"],
            tuple(to_q(c) for c in d["direction"]),
            tuple(d["sketch_facets"]),
            frozenset(d["zones"]),
            BoolType(d["bool_type"]),
        )


def zone_op(zones: Iterable[int], bool_type: BoolType) -> Extrusion:
    """A zone-level operation with no sketch geometry attached."""
    return Extrusion(-1, -1, (ZERO, ZERO, ZERO), (), frozenset(zones), bool_type)


def apply_extrusion(canvas: Canvas, e: Extrusion, check: bool = True) -> Canvas:
    if check:
        if not e.zones:
            raise InvalidApplication("extrusion covers no zones")
        if e.bool_type is BoolType.UNION and e.zones & canvas.filled:
            raise InvalidApplication("union overlaps the canvas")
        if e.bool_type is BoolType.DIFFERENCE and not e.zones <= canvas.filled:
            raise InvalidApplication("difference removes zones not in the canvas")
    if e.bool_type is BoolType.UNION:
        return Canvas(canvas.filled | e.zones)
    return Canvas(canvas.filled - e.zones)


def replay(ops: Sequence[Extrusion], check: bool = True) -> Canvas:
    c = Canvas()
    for e in ops:
        c = apply_extrusion(c, e, check)
    return c


# ---------------------------------------------------------------- plane pairs


def enumerate_plane_pairs(zg: ZoneGraph) -> list:
    """Ordered pairs of distinct parallel splitting planes with direction start->end."""
    got = zg.cache.get("plane_pairs")
    if got is not None:
        return got
    classes = defaultdict(list)
    for pid in range(zg.n_split_planes):
        classes[zg.planes[pid][:3]].append(pid)
    out = []
    for normal in sorted(classes):
        members = classes[normal]
        nn = sum(c * c for c in normal)
        for sp in members:
            for ep in members:
                if sp == ep:
                    continue
                gap = Q(zg.planes[ep][3] - zg.planes[sp][3], nn)
                out.append((sp, ep, tuple(gap * c for c in normal)))
    zg.cache["plane_pairs"] = out
    return out


class SketchPlane:
    """Static data for sketches on one plane, sweeping toward one side.

    ``sign`` is +1 when the sweep goes along the canonical normal.  Sketch
    units are zone facets on the plane whose zone lies on the sweep side.
    """

    def __init__(self, zg: ZoneGraph, plane_id: int, sign: int):
        self.plane_id = plane_id
        self.sign = sign
        plane = zg.planes[plane_id]
        normal = plane[:3]
        axis = dominant_axis(normal)
        axis_aligned = sum(1 for c in normal if c != 0) == 1
        nn = sum(c * c for c in normal)
        facets = [f for f in zg.facets if f.plane_id == plane_id and f.side == -sign]
        self.facet_ids = np.array([f.id for f in facets], dtype=np.int64)
        self.facet_zone = np.array([f.zone for f in facets], dtype=np.int64)
        nf = len(facets)

        # edge-sharing adjacency between sketch facets
        boxes = [bbox2([drop_axis(p, axis) for p in f.polygon]) for f in facets]
        nbrs = [[] for _ in range(nf)]
        for i in range(nf):
            for j in range(i + 1, nf):
                bi, bj = boxes[i], boxes[j]
                if bi[0] > bj[2] or bj[0] > bi[2] or bi[1] > bj[3] or bj[1] > bi[3]:
                    continue
                if _share_edge(facets[i].polygon, facets[j].polygon):
                    nbrs[i].append(j)
                    nbrs[j].append(i)
        self.indptr = np.zeros(nf + 1, dtype=np.int64)
        self.indptr[1:] = np.cumsum([len(x) for x in nbrs])
        self.indices = np.array([j for x in nbrs for j in x], dtype=np.int64)

        # per-zone coverage requirements on the +d side of the plane
        d0 = plane[3]
        f2 = []
        for f in facets:
            poly = [drop_axis(p, axis) for p in f.polygon]
            if area2(poly) < 0:
                poly.reverse()
            f2.append((poly, bbox2(poly)))
        cand, req_rows, lo_list, hi_list = [], [], [], []
        for z in zg.zones:
            vals = [normal[0] * v[0] + normal[1] * v[1] + normal[2] * v[2] for v in z.polytope.vertices]
            lo, hi = min(vals), max(vals)
            if sign > 0 and lo < d0:
                continue
            if sign < 0 and hi > d0:
                continue
            if axis_aligned:
                proj = [drop_axis(v, axis) for v in z.polytope.vertices]
            else:
                proj = []
                for v, s in zip(z.polytope.vertices, vals):
                    t = (s - d0) / Q(nn)
                    proj.append(drop_axis(tuple(v[k] - t * normal[k] for k in range(3)), axis))
            hull = convex_hull2(proj)
            if len(hull) < 3:
                continue
            hb = bbox2(hull)
            total = area2(hull)
            row = np.zeros(nf, dtype=bool)
            acc = ZERO
            for k, (poly, pb) in enumerate(f2):
                a = overlap_area2(hull, poly, hb, pb)
                if a > 0:
                    row[k] = True
                    acc += a
            if acc != total:
                continue  # part of the projection has no facet above it
            cand.append(z.id)
            req_rows.append(row)
            lo_list.append(lo)
            hi_list.append(hi)
        self.cand_zones = np.array(cand, dtype=np.int64)
        self.req = np.array(req_rows, dtype=bool).reshape(len(cand), nf)
        self._lo = lo_list
        self._hi = hi_list
        self._eligible: dict = {}

    def eligible(self, end_offset) -> np.ndarray:
        """Candidate zones lying between this plane and the end plane."""
        got = self._eligible.get(end_offset)
        if got is None:
            if self.sign > 0:
                got = np.array([hi <= end_offset for hi in self._hi], dtype=bool)
            else:
                got = np.array([lo >= end_offset for lo in self._lo], dtype=bool)
            self._eligible[end_offset] = got
        return got


def _share_edge(pa: Sequence, pb: Sequence) -> bool:
    na, nb = len(pa), len(pb)
    for i in range(na):
        a0, a1 = pa[i], pa[(i + 1) % na]
        for j in range(nb):
            if segments_overlap(a0, a1, pb[j], pb[(j + 1) % nb]):
                return True
    return False


def sketch_plane(zg: ZoneGraph, plane_id: int, sign: int) -> SketchPlane:
    planes = zg.cache.setdefault("sketch_planes", {})
    key = (plane_id, sign)
    got = planes.get(key)
    if got is None:
        got = SketchPlane(zg, plane_id, sign)
        planes[key] = got
    return got


def _subset_sizes(n: int, level: int) -> list:
    sizes = set(range(1, min(level, n) + 1))
    sizes |= set(range(max(1, n - level + 1), n + 1))
    return sorted(sizes)


def _sketches(sp: SketchPlane, eligible: np.ndarray, group: np.ndarray, level: int) -> list:
    """(sketch facet ids, covered zone ids) for every candidate sketch of a group."""
    labels = _kernels.label_components(sp.indptr, sp.indices, group)
    ncomp = int(labels.max()) + 1 if labels.size else 0
    if ncomp == 0:
        return []
    comp_masks = np.zeros((ncomp, labels.shape[0]), dtype=bool)
    for c in range(ncomp):
        comp_masks[c] = labels == c
    subsets = []
    for size in _subset_sizes(ncomp, level):
        subsets.extend(combinations(range(ncomp), size))
    sketches = np.zeros((len(subsets), labels.shape[0]), dtype=bool)
    for i, sub in enumerate(subsets):
        sketches[i] = comp_masks[list(sub)].any(axis=0)
    covered = _kernels.sweep_cover(sp.req, eligible, sketches)
    out = []
    for i in range(len(subsets)):
        zones = frozenset(int(z) for z in sp.cand_zones[covered[i]])
        if zones:
            out.append((tuple(int(f) for f in sp.facet_ids[sketches[i]]), zones))
    return out


def _inverts_history(e: Extrusion, history: Sequence[Extrusion]) -> bool:
    for h in reversed(history):
        if h.zones & e.zones:
            return h.zones == e.zones and h.bool_type is e.bool_type.opposite
    return False


def generate_proposals(
    zg: ZoneGraph,
    canvas: Canvas,
    level: int = 1,
    history: Sequence[Extrusion] = (),
    target: Optional[frozenset] = None,
    return_unfiltered: bool = False,
):
    """All typed, deduplicated extrusions for the current canvas.

    Mixed sweeps (partly inside the canvas) yield a union of the part
    outside and a difference of the part inside; both have the same effect
    as the full-sweep Boolean and satisfy the typing invariants.
    """
    if level < 1:
        raise ValueError("proposal level must be >= 1")
    target = zg.interior_ids if target is None else target
    nz = len(zg.zones)
    in_c = np.zeros(nz, dtype=bool)
    in_c[list(canvas.filled)] = True
    in_t = np.zeros(nz, dtype=bool)
    in_t[list(target)] = True
    memo = zg.cache.setdefault("proposal_memo", {})
    filled = canvas.filled

    seen = set()
    out = []
    dropped = []
    for sp_id, ep_id, direction in enumerate_plane_pairs(zg):
        sign = 1 if zg.planes[ep_id][3] > zg.planes[sp_id][3] else -1
        sp = sketch_plane(zg, sp_id, sign)
        if sp.facet_ids.size == 0 or sp.cand_zones.size == 0:
            continue
        fz_c = in_c[sp.facet_zone]
        fz_t = in_t[sp.facet_zone]
        groups = (fz_c & ~fz_t, fz_t & ~fz_c, ~fz_c)
        done_masks = set()
        for gmask in groups:
            if not gmask.any():
                continue
            mkey = gmask.tobytes()
            if mkey in done_masks:
                continue
            done_masks.add(mkey)
            key = (sp_id, ep_id, level, mkey)
            sk = memo.get(key)
            if sk is None:
                sk = _sketches(sp, sp.eligible(zg.planes[ep_id][3]), gmask, level)
                memo[key] = sk
            for facets, zones in sk:
                inside = zones & filled
                if not inside:
                    typed = ((zones, BoolType.UNION),)
                elif inside == zones:
                    typed = ((zones, BoolType.DIFFERENCE),)
                else:
                    typed = ((zones - filled, BoolType.UNION), (inside, BoolType.DIFFERENCE))
                for zs, bt in typed:
                    e = Extrusion(sp_id, ep_id, direction, facets, zs, bt)
                    ck = e.canonical_key
                    if ck in seen:
                        continue
                    seen.add(ck)
                    if _inverts_history(e, history):
                        dropped.append(e)
                        continue
                    out.append(e)
    if return_unfiltered:
        return out, dropped
    return out
