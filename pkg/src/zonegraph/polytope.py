"""Exact convex polytopes stored as oriented facet polygons."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

from .exact import (
    ZERO,
    Q,
    centroid,
    convex_hull2,
    cross,
    dominant_axis,
    dot,
    drop_axis,
    lift_point,
    newell,
    sub,
)


@dataclass(frozen=True)
class Facet:
    plane_id: int
    side: int  # outward normal = side * canonical normal
    verts: tuple  # CCW seen from outside


class Polytope:
    """Convex polytope with facets referencing a shared plane table."""

    __slots__ = ("facets", "planes", "__dict__")

    def __init__(self, facets: Sequence[Facet], planes: Sequence):
        self.facets = tuple(facets)
        self.planes = planes

    @classmethod
    def box(cls, lo, hi, planes: Sequence, wall_ids: Sequence[int]) -> "Polytope":
        """Axis-aligned box; ``wall_ids`` are plane ids of x=lo, x=hi, y=lo, ..."""
        x0, y0, z0 = lo
        x1, y1, z1 = hi
        corners = {
            (i, j, k): (x1 if i else x0, y1 if j else y0, z1 if k else z0)
            for i in (0, 1) for j in (0, 1) for k in (0, 1)
        }
        c = corners
        # every wall plane is canonical (+axis normal); side says which way is out
        facets = [
            Facet(wall_ids[0], -1, (c[0, 0, 0], c[0, 0, 1], c[0, 1, 1], c[0, 1, 0])),
            Facet(wall_ids[1], 1, (c[1, 0, 0], c[1, 1, 0], c[1, 1, 1], c[1, 0, 1])),
            Facet(wall_ids[2], -1, (c[0, 0, 0], c[1, 0, 0], c[1, 0, 1], c[0, 0, 1])),
            Facet(wall_ids[3], 1, (c[0, 1, 0], c[0, 1, 1], c[1, 1, 1], c[1, 1, 0])),
            Facet(wall_ids[4], -1, (c[0, 0, 0], c[0, 1, 0], c[1, 1, 0], c[1, 0, 0])),
            Facet(wall_ids[5], 1, (c[0, 0, 1], c[1, 0, 1], c[1, 1, 1], c[0, 1, 1])),
        ]
        return cls(facets, planes)

    @cached_property
    def vertices(self) -> tuple:
        seen = {}
        for f in self.facets:
            for v in f.verts:
                seen.setdefault(v, None)
        return tuple(seen)

    @cached_property
    def aabb(self) -> tuple:
        vs = self.vertices
        return (
            tuple(min(v[i] for v in vs) for i in range(3)),
            tuple(max(v[i] for v in vs) for i in range(3)),
        )

    @cached_property
    def centroid(self) -> tuple:
        return centroid(self.vertices)

    @cached_property
    def volume(self):
        """Exact volume by a fan of tetrahedra from the vertex centroid."""
        c = self.centroid
        total = ZERO
        for f in self.facets:
            a = sub(f.verts[0], c)
            for i in range(1, len(f.verts) - 1):
                b = sub(f.verts[i], c)
                d = sub(f.verts[i + 1], c)
                total += abs(dot(a, cross(b, d)))
        return total / 6

    def side_of(self, plane) -> tuple:
        """(#vertices strictly below, #strictly above) for ``a.x < d`` vs ``> d``."""
        a, b, c, d = plane
        neg = pos = 0
        for v in self.vertices:
            s = a * v[0] + b * v[1] + c * v[2] - d
            if s < 0:
                neg += 1
            elif s > 0:
                pos += 1
        return neg, pos

    def contains(self, p: Sequence, strict: bool = False) -> bool:
        for f in self.facets:
            a, b, c, d = self.planes[f.plane_id]
            s = f.side * (a * p[0] + b * p[1] + c * p[2] - d)
            if s > 0 or (strict and s == 0):
                return False
        return True

    def split(self, plane_id: int) -> Optional[tuple]:
        """Split by a plane; returns ``(below, above, cap_polygon)`` or ``None``.

        ``below`` is the part with ``a.x <= d``.  ``cap_polygon`` is the cross
        section, CCW seen from the ``+normal`` side.
        """
        plane = self.planes[plane_id]
        a, b, c, d = plane
        sval = {v: a * v[0] + b * v[1] + c * v[2] - d for v in self.vertices}
        if not any(s < 0 for s in sval.values()) or not any(s > 0 for s in sval.values()):
            return None
        below, above = [], []
        cut_points = set()
        for f in self.facets:
            lo_poly, hi_poly = _split_polygon(f.verts, sval, plane, cut_points)
            if len(lo_poly) >= 3:
                below.append(Facet(f.plane_id, f.side, tuple(lo_poly)))
            if len(hi_poly) >= 3:
                above.append(Facet(f.plane_id, f.side, tuple(hi_poly)))
        normal = (Q(a), Q(b), Q(c))
        axis = dominant_axis(normal)
        hull = convex_hull2([drop_axis(p, axis) for p in cut_points])
        cap = [lift_point(q, axis, plane) for q in hull]
        if dot(newell(cap), normal) < 0:
            cap.reverse()
        cap = tuple(cap)
        below.append(Facet(plane_id, 1, cap))
        above.append(Facet(plane_id, -1, tuple(reversed(cap))))
        return Polytope(below, self.planes), Polytope(above, self.planes), cap


def _split_polygon(verts, sval, plane, cut_points):
    a, b, c, d = plane
    lo, hi = [], []
    n = len(verts)
    for i in range(n):
        p = verts[i]
        q = verts[(i + 1) % n]
        sp = sval.get(p)
        if sp is None:
            sp = a * p[0] + b * p[1] + c * p[2] - d
        sq = sval.get(q)
        if sq is None:
            sq = a * q[0] + b * q[1] + c * q[2] - d
        if sp <= 0:
            lo.append(p)
        if sp >= 0:
            hi.append(p)
        if sp == 0:
            cut_points.add(p)
        if (sp < 0 < sq) or (sq < 0 < sp):
            t = sp / (sp - sq)
            x = tuple(p[k] + (q[k] - p[k]) * t for k in range(3))
            lo.append(x)
            hi.append(x)
            cut_points.add(x)
    return _dedupe(lo), _dedupe(hi)


def _dedupe(poly):
    out = []
    for p in poly:
        if not out or out[-1] != p:
            out.append(p)
    if len(out) > 1 and out[0] == out[-1]:
        out.pop()
    if len(out) >= 3 and not any(newell(out)):
        return []
    return out


def polygon_area_sq(poly: Sequence) -> object:
    """Exact squared area of a planar 3D polygon."""
    n = newell(poly)
    return dot(n, n) / 4
