"""Planar-faced B-rep model: parsing, validation, serialization, face loops."""
from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Sequence

from .errors import (
    BadOrientation,
    DegenerateFace,
    NonPlanarFace,
    NotWatertight,
    ValidationError,
)
from .exact import (
    ZERO,
    Q,
    canonical_plane,
    cross,
    dominant_axis,
    dot,
    drop_axis,
    format_q,
    newell,
    orient2,
    point_in_polygon2,
    primitive_direction,
    sub,
    to_q,
)

Plane = tuple  # canonical integers (a, b, c, d) meaning a*x + b*y + c*z = d


@dataclass(frozen=True)
class Face:
    loop: tuple
    plane_id: int
    side: int  # +1 when the outward normal agrees with the canonical plane normal

    @property
    def edges(self) -> tuple:
        n = len(self.loop)
        return tuple((self.loop[i], self.loop[(i + 1) % n]) for i in range(n))


@dataclass(frozen=True)
class FaceLoop:
    face_ids: tuple
    extrusion_direction: tuple  # primitive integer direction, first nonzero > 0


@dataclass(frozen=True)
class BRep:
    vertices: tuple
    faces: tuple
    planes: tuple
    aabb: tuple  # ((xmin, ymin, zmin), (xmax, ymax, zmax))

    def face_points(self, fid: int) -> list:
        return [self.vertices[i] for i in self.faces[fid].loop]

    @cached_property
    def volume(self):
        return signed_volume(self.vertices, [f.loop for f in self.faces])

    def contains(self, p: Sequence) -> bool:
        """Exact inside test for a point known not to lie on the surface."""
        return point_in_solid(self, p)


def signed_volume(vertices: Sequence, loops: Sequence[Sequence[int]]):
    total = ZERO
    for loop in loops:
        a = vertices[loop[0]]
        for i in range(1, len(loop) - 1):
            b = vertices[loop[i]]
            c = vertices[loop[i + 1]]
            total += dot(a, cross(b, c))
    return total / 6


def _segments_cross(a, b, c, d) -> bool:
    o1 = orient2(a, b, c)
    o2 = orient2(a, b, d)
    o3 = orient2(c, d, a)
    o4 = orient2(c, d, b)
    if ((o1 > 0 and o2 < 0) or (o1 < 0 and o2 > 0)) and ((o3 > 0 and o4 < 0) or (o3 < 0 and o4 > 0)):
        return True

    def on_seg(p, q, r):
        return min(p[0], q[0]) <= r[0] <= max(p[0], q[0]) and min(p[1], q[1]) <= r[1] <= max(p[1], q[1])

    return (
        (o1 == 0 and on_seg(a, b, c))
        or (o2 == 0 and on_seg(a, b, d))
        or (o3 == 0 and on_seg(c, d, a))
        or (o4 == 0 and on_seg(c, d, b))
    )


def _is_simple(poly2: Sequence) -> bool:
    n = len(poly2)
    for i in range(n):
        a, b = poly2[i], poly2[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or j == (i + 1) % n:
                continue
            if _segments_cross(a, b, poly2[j], poly2[(j + 1) % n]):
                return False
    return True


def _fix_orientation(loops: list[list[int]]) -> list[list[int]]:
    """Make every shell consistently and outwardly oriented, or raise."""
    edge_faces: dict = defaultdict(list)
    for fi, loop in enumerate(loops):
        n = len(loop)
        for k in range(n):
            i, j = loop[k], loop[(k + 1) % n]
            edge_faces[frozenset((i, j))].append(fi)

    def directed(fi):
        loop = loops[fi]
        n = len(loop)
        return {(loop[k], loop[(k + 1) % n]) for k in range(n)}

    flipped = [False] * len(loops)
    seen = [False] * len(loops)
    shells = []
    for start in range(len(loops)):
        if seen[start]:
            continue
        seen[start] = True
        shell = [start]
        queue = deque([start])
        while queue:
            fi = queue.popleft()
            dfi = directed(fi)
            for (i, j) in dfi:
                for g in edge_faces[frozenset((i, j))]:
                    if g == fi:
                        continue
                    same = (i, j) in directed(g)
                    if seen[g]:
                        if same:
                            raise BadOrientation("shell is not consistently orientable")
                        continue
                    if same:
                        loops[g] = loops[g][::-1]
                        flipped[g] = not flipped[g]
                    seen[g] = True
                    shell.append(g)
                    queue.append(g)
        shells.append(shell)
    return shells


def parse_brep(document: Any) -> BRep:
    """Validate a B-rep JSON document and build an immutable :class:`BRep`."""
    if not isinstance(document, dict) or "vertices" not in document or "faces" not in document:
        raise ValidationError("document needs 'vertices' and 'faces'")
    try:
        vertices = tuple(tuple(to_q(c) for c in v) for v in document["vertices"])
    except (TypeError, ValueError) as exc:
        raise ValidationError(str(exc)) from exc
    if any(len(v) != 3 for v in vertices):
        raise ValidationError("vertices must have 3 coordinates")
    loops: list[list[int]] = []
    for face in document["faces"]:
        if not isinstance(face, dict) or "loop" not in face:
            raise ValidationError("each face needs a 'loop'")
        loop = face["loop"]
        if not all(isinstance(i, int) and not isinstance(i, bool) for i in loop):
            raise ValidationError("loop entries must be integers")
        if any(i < 0 or i >= len(vertices) for i in loop):
            raise ValidationError("loop index out of range")
        if len(loop) < 3 or len(set(loop)) != len(loop):
            raise DegenerateFace(f"face loop {loop} needs >= 3 distinct vertices")
        loops.append(list(loop))

    for loop in loops:
        pts = [vertices[i] for i in loop]
        normal = newell(pts)
        if not any(normal):
            raise DegenerateFace(f"face {loop} has zero area")
        off = dot(normal, pts[0])
        for p in pts:
            if dot(normal, p) != off:
                raise NonPlanarFace(f"vertex {p} is off the plane of face {loop}")
        if not _is_simple([drop_axis(p, dominant_axis(normal)) for p in pts]):
            raise DegenerateFace(f"face {loop} is self-intersecting")

    counts: dict = defaultdict(int)
    for loop in loops:
        n = len(loop)
        for k in range(n):
            counts[frozenset((loop[k], loop[(k + 1) % n]))] += 1
    bad = [tuple(sorted(e)) for e, c in counts.items() if c != 2]
    if bad:
        raise NotWatertight(f"edges not shared by exactly two faces: {sorted(bad)[:5]}")

    shells = _fix_orientation(loops)
    for shell in shells:
        vol = signed_volume(vertices, [loops[f] for f in shell])
        if vol < 0:
            for f in shell:
                loops[f] = loops[f][::-1]
        elif vol == 0:
            raise BadOrientation("shell encloses zero volume")
    if signed_volume(vertices, loops) <= 0:
        raise BadOrientation("shell signed volume is not positive")

    raw = []
    for loop in loops:
        pts = [vertices[i] for i in loop]
        normal = newell(pts)
        plane, sign = canonical_plane(normal, dot(normal, pts[0]))
        raw.append((tuple(loop), plane, sign))
    planes = tuple(sorted({p for _, p, _ in raw}))
    index = {p: i for i, p in enumerate(planes)}
    faces = tuple(Face(loop, index[p], s) for loop, p, s in raw)
    lo = tuple(min(v[i] for v in vertices) for i in range(3))
    hi = tuple(max(v[i] for v in vertices) for i in range(3))
    used = {i for loop in loops for i in loop}
    if len(used) != len(vertices):
        raise ValidationError("unreferenced vertices")
    return BRep(vertices, faces, planes, (lo, hi))


def serialize_brep(b: BRep) -> dict:
    return {
        "vertices": [[format_q(c) for c in v] for v in b.vertices],
        "faces": [{"loop": list(f.loop)} for f in b.faces],
    }


def plane_normal(plane: Plane) -> tuple:
    return (Q(plane[0]), Q(plane[1]), Q(plane[2]))


def face_loop_directions(b: BRep) -> dict:
    """Map face id -> list of loop extrusion directions it belongs to."""
    out: dict = defaultdict(list)
    for loop in find_face_loops(b):
        for f in loop.face_ids:
            out[f].append(loop.extrusion_direction)
    return out


def find_face_loops(b: BRep) -> list[FaceLoop]:
    """All maximal cycles of 4-edge faces joined by edges parallel to one direction."""
    quads = [fi for fi, f in enumerate(b.faces) if len(f.loop) == 4]
    quad_set = set(quads)
    edge_faces: dict = defaultdict(list)
    for fi, f in enumerate(b.faces):
        for e in f.edges:
            edge_faces[frozenset(e)].append(fi)

    edge_dir: dict = {}
    by_dir: dict = defaultdict(lambda: defaultdict(list))
    for fi in quads:
        for e in b.faces[fi].edges:
            key = frozenset(e)
            if key not in edge_dir:
                edge_dir[key] = primitive_direction(sub(b.vertices[e[1]], b.vertices[e[0]]))
            by_dir[edge_dir[key]][fi].append(key)

    loops = []
    for direction in sorted(by_dir):
        members = {fi: es for fi, es in by_dir[direction].items() if len(es) == 2}
        nbrs: dict = {}
        for fi, es in members.items():
            out = []
            for e in es:
                other = [g for g in edge_faces[e] if g != fi]
                if len(other) == 1 and other[0] in members and other[0] in quad_set:
                    out.append(other[0])
            nbrs[fi] = out
        visited: set = set()
        for fi in sorted(members):
            if fi in visited:
                continue
            # collect the connected component
            comp = []
            stack = [fi]
            visited.add(fi)
            while stack:
                g = stack.pop()
                comp.append(g)
                for h in nbrs[g]:
                    if h not in visited:
                        visited.add(h)
                        stack.append(h)
            if len(comp) < 3:
                continue
            if any(len(nbrs[g]) != 2 or nbrs[g][0] == nbrs[g][1] for g in comp):
                continue
            start = min(comp)
            order = [start]
            prev, cur = start, min(nbrs[start])
            while cur != start:
                order.append(cur)
                a, c = nbrs[cur]
                prev, cur = cur, (c if a == prev else a)
            if len(order) != len(comp):
                continue
            loops.append(FaceLoop(tuple(order), direction))
    loops.sort(key=lambda lp: (min(lp.face_ids), lp.extrusion_direction))
    return loops


# Directions with no special relation to axis-aligned or small-integer geometry.
RAY_DIRECTIONS = (
    (7, 3, 11), (-5, 13, 2), (3, -8, 17), (19, 7, -6), (-11, -4, 9),
    (2, 23, -13), (29, -3, 5), (-7, 17, 19), (13, 11, -29), (31, 37, 41),
)


def _ray_parity(b: BRep, p: Sequence, r: Sequence):
    """Crossing parity, or ``None`` if the ray hits an edge/vertex or lies in a face plane."""
    hits = 0
    for f in b.faces:
        a_, b_, c_, d_ = b.planes[f.plane_id]
        n = (a_, b_, c_)
        denom = dot(n, r)
        s = dot(n, p) - d_
        pts = [b.vertices[i] for i in f.loop]
        axis = dominant_axis(n)
        if denom == 0:
            if s == 0:
                return None
            continue
        t = -s / Q(denom)
        if t < 0:
            continue
        q = tuple(p[i] + t * r[i] for i in range(3))
        where = point_in_polygon2(drop_axis(q, axis), [drop_axis(v, axis) for v in pts])
        if where == -1:
            if t == 0:
                raise ValueError(f"point {p} lies on the surface")
            return None
        if where == 1:
            if t == 0:
                raise ValueError(f"point {p} lies on the surface")
            hits += 1
    return hits % 2


def point_in_solid(b: BRep, p: Sequence) -> bool:
    """Parity ray cast with exact predicates; degenerate rays are retried."""
    p = tuple(Q(x) for x in p)
    for r in RAY_DIRECTIONS:
        parity = _ray_parity(b, p, r)
        if parity is not None:
            return parity == 1
    raise RuntimeError("every candidate ray direction was degenerate")
