"""Boundary extraction from integer-grid cell sets.

Faces are maximal connected coplanar unit-square regions, cut along grid
lines when a region would have a hole or a pinch vertex.  Corners of every
face are inserted into collinear edges of neighbouring faces so each
vertex-pair edge is shared by exactly two faces.
"""
from __future__ import annotations

from collections import defaultdict
from itertools import product

import numpy as np

from .brep import BRep, parse_brep
from .errors import UnsupportedResult


def _components(cells: set) -> list[set]:
    """4-connected components of 2D integer cells, deterministic order."""
    seen = set()
    comps = []
    for c in sorted(cells):
        if c in seen:
            continue
        comp = set()
        stack = [c]
        seen.add(c)
        while stack:
            u, v = stack.pop()
            comp.add((u, v))
            for nb in ((u + 1, v), (u - 1, v), (u, v + 1), (u, v - 1)):
                if nb in cells and nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        comps.append(comp)
    return comps


def _boundary_edges(cells: set) -> dict:
    """Directed CCW boundary edges: start vertex -> list of end vertices."""
    edges = set()
    for u, v in cells:
        for e in (((u, v), (u + 1, v)), ((u + 1, v), (u + 1, v + 1)),
                  ((u + 1, v + 1), (u, v + 1)), ((u, v + 1), (u, v))):
            rev = (e[1], e[0])
            if rev in edges:
                edges.discard(rev)
            else:
                edges.add(e)
    out = defaultdict(list)
    for a, b in edges:
        out[a].append(b)
    return out


def _trace(cells: set):
    """Boundary loops of a region, or a cut line ``(axis, value)`` if not a disk."""
    out = _boundary_edges(cells)
    for vtx in sorted(out):
        if len(out[vtx]) > 1:
            return None, (0, vtx[0])
    loops = []
    remaining = {a: bs[0] for a, bs in out.items()}
    while remaining:
        start = min(remaining)
        loop = [start]
        cur = remaining.pop(start)
        while cur != start:
            loop.append(cur)
            cur = remaining.pop(cur)
        loops.append(loop)
    if len(loops) == 1:
        return loops[0], None
    holes = [lp for lp in loops if _signed_area(lp) < 0]
    u0 = min(min(p[0] for p in lp) for lp in holes)
    return None, (0, u0)


def _signed_area(loop):
    s = 0
    n = len(loop)
    for i in range(n):
        x0, y0 = loop[i]
        x1, y1 = loop[(i + 1) % n]
        s += x0 * y1 - x1 * y0
    return s


def _disk_pieces(cells: set) -> list:
    pieces = []
    work = _components(cells)
    while work:
        comp = work.pop(0)
        loop, cut = _trace(comp)
        if loop is not None:
            pieces.append(loop)
            continue
        _, u0 = cut
        left = {c for c in comp if c[0] < u0}
        right = comp - left
        if not left or not right:
            raise UnsupportedResult("could not cut face region into disks")
        work = _components(left) + _components(right) + work
    return pieces


def _corners(loop):
    n = len(loop)
    out = []
    for i in range(n):
        a, b, c = loop[i - 1], loop[i], loop[(i + 1) % n]
        if (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]) != 0:
            out.append(b)
    return out


def is_manifold(occ: np.ndarray) -> bool:
    """Every grid vertex neighbourhood has face-connected filled and empty parts."""
    g = np.pad(occ.astype(bool), 1)
    nx, ny, nz = g.shape
    offs = list(product((0, 1), repeat=3))
    adj = {o: [p for p in offs if sum(abs(a - b) for a, b in zip(o, p)) == 1] for o in offs}

    def connected(members):
        if not members:
            return True
        seen = {members[0]}
        stack = [members[0]]
        ms = set(members)
        while stack:
            o = stack.pop()
            for p in adj[o]:
                if p in ms and p not in seen:
                    seen.add(p)
                    stack.append(p)
        return len(seen) == len(ms)

    for i in range(nx - 1):
        for j in range(ny - 1):
            for k in range(nz - 1):
                block = g[i:i + 2, j:j + 2, k:k + 2]
                s = int(block.sum())
                if s in (0, 8, 1, 7):
                    continue
                filled = [o for o in offs if block[o]]
                empty = [o for o in offs if not block[o]]
                if not connected(filled) or not connected(empty):
                    return False
    return True


def is_connected(occ: np.ndarray) -> bool:
    cells = set(zip(*np.nonzero(occ)))
    if not cells:
        return False
    start = next(iter(cells))
    seen = {start}
    stack = [start]
    while stack:
        c = stack.pop()
        for d in ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)):
            nb = (c[0] + d[0], c[1] + d[1], c[2] + d[2])
            if nb in cells and nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return len(seen) == len(cells)


def voxels_to_document(occ: np.ndarray) -> dict:
    """B-rep JSON document for the union of filled unit cells."""
    occ = np.asarray(occ, dtype=bool)
    if not occ.any():
        raise UnsupportedResult("empty solid")
    if not is_manifold(occ):
        raise UnsupportedResult("non-manifold cell configuration")
    g = np.pad(occ, 1)
    faces3 = []  # lists of 3D integer corner points, CCW from outside
    for a in range(3):
        b, c = (a + 1) % 3, (a + 2) % 3
        for sgn in (1, -1):
            shifted = np.roll(g, -sgn, axis=a)
            mask = g & ~shifted
            groups = defaultdict(set)
            for idx in zip(*np.nonzero(mask)):
                idx = [int(t) - 1 for t in idx]
                level = idx[a] + (1 if sgn > 0 else 0)
                groups[level].add((idx[b], idx[c]))
            for level in sorted(groups):
                for loop in _disk_pieces(groups[level]):
                    pts2 = _corners(loop)
                    if sgn < 0:
                        pts2 = pts2[::-1]
                    pts3 = []
                    for u, v in pts2:
                        p = [0, 0, 0]
                        p[a], p[b], p[c] = level, u, v
                        pts3.append(tuple(p))
                    faces3.append(pts3)
    corner_set = sorted({p for f in faces3 for p in f})
    # points on each axis-parallel line, for T-junction insertion
    lines = defaultdict(list)
    for p in corner_set:
        for ax in range(3):
            key = (ax,) + tuple(p[i] for i in range(3) if i != ax)
            lines[key].append(p[ax])
    for key in lines:
        lines[key].sort()
    index = {p: i for i, p in enumerate(corner_set)}
    faces = []
    for pts in faces3:
        loop = []
        n = len(pts)
        for i in range(n):
            p, q = pts[i], pts[(i + 1) % n]
            loop.append(index[p])
            ax = next(k for k in range(3) if p[k] != q[k])
            key = (ax,) + tuple(p[k] for k in range(3) if k != ax)
            lo, hi = sorted((p[ax], q[ax]))
            between = [t for t in lines[key] if lo < t < hi]
            if p[ax] > q[ax]:
                between.reverse()
            for t in between:
                r = list(p)
                r[ax] = t
                loop.append(index[tuple(r)])
        faces.append({"loop": loop})
    return {"vertices": [list(p) for p in corner_set], "faces": faces}


def voxels_to_brep(occ: np.ndarray) -> BRep:
    return parse_brep(voxels_to_document(occ))
