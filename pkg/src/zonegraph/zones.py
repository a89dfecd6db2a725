"""Zone graph: the arrangement of extended B-rep planes inside the bounding box."""
from __future__ import annotations

import dataclasses
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional, Sequence

import gmpy2

from .brep import BRep, FaceLoop, find_face_loops
from .errors import TooManyZones, ValidationError
from .exact import (
    Q,
    ZERO,
    area2,
    bbox2,
    canonical_plane,
    clip_convex,
    dominant_axis,
    drop_axis,
    format_q,
    lift_point,
    overlap_area2,
    to_q,
)
from .polytope import Facet, Polytope, _split_polygon, polygon_area_sq

DEFAULT_MAX_ZONES = 20000


@dataclass(frozen=True)
class ZoneFacet:
    id: int
    zone: int
    plane_id: int
    side: int
    polygon: tuple


@dataclass(frozen=True, eq=False)
class Zone:
    id: int
    sign_vector: str  # one of '+', '-', '0' (skipped) per splitting plane
    polytope: Polytope
    facet_ids: tuple

    @property
    def volume(self):
        return self.polytope.volume

    @property
    def representative_point(self) -> tuple:
        return self.polytope.centroid


def zone_volume(z: Zone):
    return z.polytope.volume


@dataclass(frozen=True)
class AdjacencyEdge:
    zone_a: int
    zone_b: int
    plane_id: int
    facet_area_sq: object  # exact
    facet_polygon: tuple

    @property
    def facet_area(self):
        """Exact area when it is rational, otherwise the nearest float."""
        num, den = self.facet_area_sq.numerator, self.facet_area_sq.denominator
        if gmpy2.is_square(num) and gmpy2.is_square(den):
            return Q(gmpy2.isqrt(num), gmpy2.isqrt(den))
        return float(self.facet_area_sq) ** 0.5


@dataclass(eq=False)
class ZoneGraph:
    planes: tuple  # splitting planes first, then any bounding-box walls not among them
    n_split_planes: int
    zones: tuple
    facets: tuple
    edges: tuple
    aabb: tuple
    simplified: bool
    interior_ids: frozenset = frozenset()
    cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def zone_ids(self) -> range:
        return range(len(self.zones))

    @property
    def target(self) -> frozenset:
        return self.interior_ids

    @property
    def box_volume(self):
        lo, hi = self.aabb
        return (hi[0] - lo[0]) * (hi[1] - lo[1]) * (hi[2] - lo[2])

    def neighbors(self) -> dict:
        got = self.cache.get("neighbors")
        if got is None:
            nb = defaultdict(set)
            for e in self.edges:
                nb[e.zone_a].add(e.zone_b)
                nb[e.zone_b].add(e.zone_a)
            got = {z: tuple(sorted(nb[z])) for z in self.zone_ids}
            self.cache["neighbors"] = got
        return got

    def volumes(self) -> tuple:
        got = self.cache.get("volumes")
        if got is None:
            got = tuple(z.volume for z in self.zones)
            self.cache["volumes"] = got
        return got

    def locate(self, p: Sequence) -> list:
        """Zones containing ``p`` (closed); exactly one for interior points."""
        return [z.id for z in self.zones if z.polytope.contains(p)]

    def with_interior(self, interior: frozenset) -> "ZoneGraph":
        return dataclasses.replace(self, interior_ids=frozenset(interior), cache={})


def _wall_planes(planes: list, aabb) -> list:
    index = {p: i for i, p in enumerate(planes)}
    lo, hi = aabb
    ids = []
    for axis in range(3):
        for val in (lo[axis], hi[axis]):
            n = [0, 0, 0]
            n[axis] = 1
            pl, _ = canonical_plane(n, val)
            if pl not in index:
                index[pl] = len(planes)
                planes.append(pl)
            ids.append(index[pl])
    return ids


def _extension_regions(b: BRep, loops: Sequence[FaceLoop]) -> dict:
    """plane id -> list of boxes where the plane is allowed to split cells.

    Only planes whose every face lies in some face loop are restricted.
    Each face contributes its AABB stretched to the walls along every loop
    direction it belongs to.
    """
    dirs = defaultdict(list)
    for lp in loops:
        for f in lp.face_ids:
            dirs[f].append(lp.extrusion_direction)
    faces_by_plane = defaultdict(list)
    for fi, f in enumerate(b.faces):
        faces_by_plane[f.plane_id].append(fi)
    lo_box, hi_box = b.aabb
    regions = {}
    for pid, fids in faces_by_plane.items():
        if not all(dirs.get(fi) for fi in fids):
            continue
        boxes = []
        unrestricted = False
        for fi in fids:
            pts = b.face_points(fi)
            flo = [min(p[i] for p in pts) for i in range(3)]
            fhi = [max(p[i] for p in pts) for i in range(3)]
            for u in dirs[fi]:
                nz = [i for i in range(3) if u[i] != 0]
                if len(nz) != 1:
                    unrestricted = True
                    break
                k = nz[0]
                rlo, rhi = list(flo), list(fhi)
                rlo[k], rhi[k] = lo_box[k], hi_box[k]
                boxes.append((tuple(rlo), tuple(rhi)))
            if unrestricted:
                break
        if not unrestricted:
            regions[pid] = boxes
    return regions


def _clip_to_box(poly: Sequence, lo, hi) -> list:
    out = list(poly)
    for axis in range(3):
        for val, keep_below in ((lo[axis], False), (hi[axis], True)):
            if len(out) < 3:
                return []
            n = [0, 0, 0]
            n[axis] = 1
            plane = (n[0], n[1], n[2], val)
            sval = {p: p[axis] - val for p in out}
            below, above = _split_polygon(tuple(out), sval, plane, set())
            out = below if keep_below else above
    return out


def _meets_region(cap: Sequence, boxes: Sequence) -> bool:
    for lo, hi in boxes:
        piece = _clip_to_box(cap, lo, hi)
        if len(piece) >= 3 and polygon_area_sq(piece) > 0:
            return True
    return False


def _plane_straddles_box(plane, lo, hi) -> bool:
    a, b, c, d = plane
    mn = mx = 0
    for coef, l, h in ((a, lo[0], hi[0]), (b, lo[1], hi[1]), (c, lo[2], hi[2])):
        if coef >= 0:
            mn += coef * l
            mx += coef * h
        else:
            mn += coef * h
            mx += coef * l
    return mn < d < mx


def build_zone_graph(
    b: BRep,
    loops: Optional[Sequence[FaceLoop]] = None,
    simplify: bool = False,
    max_zones: int = DEFAULT_MAX_ZONES,
    plane_order: Optional[Sequence[int]] = None,
) -> ZoneGraph:
    """Recursively split the bounding box by every B-rep plane.

    With ``simplify`` set, planes made only of face-loop faces split a cell
    only where their cross-section meets the faces' extension regions.
    ``plane_order`` overrides the canonical order (used to check order
    independence).
    """
    planes = list(b.planes)
    n_split = len(planes)
    wall_ids = _wall_planes(planes, b.aabb)
    planes = tuple(planes)
    lo, hi = b.aabb
    if any(lo[i] >= hi[i] for i in range(3)):
        raise ValidationError("degenerate bounding box")
    cells = [Polytope.box(lo, hi, planes, wall_ids)]
    regions = {}
    if simplify:
        if loops is None:
            loops = find_face_loops(b)
        regions = _extension_regions(b, loops)
    order = range(n_split) if plane_order is None else plane_order
    for pid in order:
        plane = planes[pid]
        nxt = []
        for cell in cells:
            clo, chi = cell.aabb
            if not _plane_straddles_box(plane, clo, chi):
                nxt.append(cell)
                continue
            res = cell.split(pid)
            if res is None:
                nxt.append(cell)
                continue
            below, above, cap = res
            if pid in regions and not _meets_region(cap, regions[pid]):
                nxt.append(cell)
                continue
            nxt.append(below)
            nxt.append(above)
        if len(nxt) > max_zones:
            raise TooManyZones(f"{len(nxt)} zones exceeds the cap of {max_zones}")
        cells = nxt
    return _assemble(planes, n_split, cells, b.aabb, simplify)


def _sign_vector(poly: Polytope, planes, n_split: int) -> str:
    out = []
    for pid in range(n_split):
        neg, pos = poly.side_of(planes[pid])
        out.append("0" if (neg and pos) else ("+" if pos else "-"))
    return "".join(out)


def _assemble(planes, n_split, cells, aabb, simplified, interior=frozenset()) -> ZoneGraph:
    zones = []
    facets = []
    for zid, cell in enumerate(cells):
        fids = []
        for f in cell.facets:
            fids.append(len(facets))
            facets.append(ZoneFacet(len(facets), zid, f.plane_id, f.side, f.verts))
        zones.append(Zone(zid, _sign_vector(cell, planes, n_split), cell, tuple(fids)))
    edges = _adjacency(planes, facets)
    return ZoneGraph(planes, n_split, tuple(zones), tuple(facets), edges, aabb, simplified, frozenset(interior))


def _project(poly, axis):
    p2 = [drop_axis(p, axis) for p in poly]
    if area2(p2) < 0:
        p2.reverse()
    return p2


def _adjacency(planes, facets) -> tuple:
    by_plane = defaultdict(lambda: ([], []))
    for f in facets:
        by_plane[f.plane_id][0 if f.side > 0 else 1].append(f)
    edges = []
    for pid, (lower, upper) in by_plane.items():
        if not lower or not upper:
            continue
        plane = planes[pid]
        normal = plane[:3]
        axis = dominant_axis(normal)
        nn = normal[0] ** 2 + normal[1] ** 2 + normal[2] ** 2
        scale_sq = Q(nn, normal[axis] ** 2)
        up = []
        for g in upper:
            p2 = _project(g.polygon, axis)
            up.append((g, p2, bbox2(p2)))
        up.sort(key=lambda t: t[2][0])
        for f in lower:
            pf = _project(f.polygon, axis)
            bf = bbox2(pf)
            for g, pg, bg in up:
                if bg[0] >= bf[2]:
                    break
                if bg[2] <= bf[0] or bg[1] >= bf[3] or bg[3] <= bf[1]:
                    continue
                a2 = overlap_area2(pf, pg, bf, bg)
                if a2 <= 0:
                    continue
                inter = clip_convex(pf, pg)
                poly3 = tuple(lift_point(q, axis, plane) for q in inter)
                za, zb = sorted((f.zone, g.zone))
                edges.append(AdjacencyEdge(za, zb, pid, (a2 / 2) ** 2 * scale_sq, poly3))
    edges.sort(key=lambda e: (e.zone_a, e.zone_b, e.plane_id))
    return tuple(edges)


def classify_zones(zg: ZoneGraph, b: BRep) -> ZoneGraph:
    """Label zones whose representative point lies inside the solid."""
    inside = frozenset(z.id for z in zg.zones if b.contains(z.representative_point))
    return zg.with_interior(inside)


def zone_graph_from_brep(b: BRep, simplify: bool = False, max_zones: int = DEFAULT_MAX_ZONES) -> ZoneGraph:
    loops = find_face_loops(b) if simplify else None
    return classify_zones(build_zone_graph(b, loops, simplify, max_zones), b)


# ------------------------------------------------------------------ JSON


def _pt(p):
    return [format_q(c) for c in p]


def dump_zone_graph(zg: ZoneGraph) -> dict:
    return {
        "format": "zonegraph/1",
        "aabb": [_pt(zg.aabb[0]), _pt(zg.aabb[1])],
        "planes": [list(p) for p in zg.planes],
        "n_split_planes": zg.n_split_planes,
        "simplified": zg.simplified,
        "zones": [
            {
                "id": z.id,
                "sign_vector": z.sign_vector,
                "volume": str(format_q(z.volume)),
                "representative_point": _pt(z.representative_point),
                "facets": [
                    {"plane": f.plane_id, "side": f.side, "polygon": [_pt(p) for p in f.verts]}
                    for f in z.polytope.facets
                ],
            }
            for z in zg.zones
        ],
        "edges": [
            {
                "zones": [e.zone_a, e.zone_b],
                "plane": e.plane_id,
                "area_sq": str(format_q(e.facet_area_sq)),
                "polygon": [_pt(p) for p in e.facet_polygon],
            }
            for e in zg.edges
        ],
        "interior_ids": sorted(zg.interior_ids),
    }


def load_zone_graph(doc: dict) -> ZoneGraph:
    if doc.get("format") != "zonegraph/1":
        raise ValidationError("not a zonegraph/1 document")
    planes = tuple(tuple(int(c) for c in p) for p in doc["planes"])
    aabb = tuple(tuple(to_q(c) for c in p) for p in doc["aabb"])
    cells = []
    for zd in doc["zones"]:
        facets = [
            Facet(fd["plane"], fd["side"], tuple(tuple(to_q(c) for c in p) for p in fd["polygon"]))
            for fd in zd["facets"]
        ]
        cells.append(Polytope(facets, planes))
    zg = _assemble(planes, doc["n_split_planes"], cells, aabb, doc["simplified"], frozenset(doc["interior_ids"]))
    for z, zd in zip(zg.zones, doc["zones"]):
        if z.sign_vector != zd["sign_vector"] or z.volume != to_q(zd["volume"]):
            raise ValidationError(f"zone {z.id} does not match its recorded sign vector/volume")
    return zg
