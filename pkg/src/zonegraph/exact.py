"""Exact rational arithmetic helpers and small geometric predicates.

All geometry in the package is carried in ``mpq`` rationals.  Points are
plain tuples so they hash and compare structurally.
"""
from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Iterable, Sequence

from gmpy2 import mpq

Q = mpq
ZERO = mpq(0)
ONE = mpq(1)

Point3 = tuple  # (mpq, mpq, mpq)
Point2 = tuple  # (mpq, mpq)


def to_q(value) -> mpq:
    """Convert an int, ``"p/q"`` string, Fraction or mpq into ``mpq``.

    Floats are rejected: they would silently carry binary rounding into
    geometry that is supposed to be exact.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not coordinates")
    if isinstance(value, (int, Fraction)):
        return mpq(value)
    if type(value) is type(ZERO):
        return value
    if isinstance(value, str):
        text = value.strip()
        if not text or any(c in text for c in ".eE"):
            raise ValueError(f"not an exact rational: {value!r}")
        q = mpq(text)
        return q
    raise TypeError(f"not an exact rational: {value!r}")


def format_q(q: mpq):
    """Integers stay ints, everything else becomes a reduced ``"p/q"``."""
    if q.denominator == 1:
        return int(q.numerator)
    return f"{int(q.numerator)}/{int(q.denominator)}"


def sub(a: Sequence, b: Sequence) -> tuple:
    return tuple(x - y for x, y in zip(a, b))


def add(a: Sequence, b: Sequence) -> tuple:
    return tuple(x + y for x, y in zip(a, b))


def scale(a: Sequence, s) -> tuple:
    return tuple(x * s for x in a)


def dot(a: Sequence, b: Sequence):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def cross(a: Sequence, b: Sequence) -> tuple:
    return (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


def newell(points: Sequence[Point3]) -> tuple:
    """Newell normal of a closed polygon (twice the vector area)."""
    nx = ny = nz = ZERO
    n = len(points)
    for i in range(n):
        x0, y0, z0 = points[i]
        x1, y1, z1 = points[(i + 1) % n]
        nx += (y0 - y1) * (z0 + z1)
        ny += (z0 - z1) * (x0 + x1)
        nz += (x0 - x1) * (y0 + y1)
    return (nx, ny, nz)


def centroid(points: Iterable[Point3]) -> tuple:
    pts = list(points)
    k = mpq(len(pts))
    return tuple(sum((p[i] for p in pts), ZERO) / k for i in range(3))


def _lcm(a: int, b: int) -> int:
    return a * b // gcd(a, b)


def primitive_direction(v: Sequence) -> tuple:
    """Scale a nonzero rational vector to coprime integers, first nonzero > 0."""
    den = 1
    for x in v:
        den = _lcm(den, int(mpq(x).denominator))
    ints = [int(mpq(x) * den) for x in v]
    g = 0
    for x in ints:
        g = gcd(g, abs(x))
    if g == 0:
        raise ValueError("zero vector has no direction")
    ints = [x // g for x in ints]
    for x in ints:
        if x != 0:
            if x < 0:
                ints = [-y for y in ints]
            break
    return tuple(ints)


def canonical_plane(normal: Sequence, offset) -> tuple[tuple, int]:
    """Canonical integer plane ``(a, b, c, d)`` for ``normal . x = offset``.

    Returns the plane and the sign (+1/-1) that maps the given normal onto
    the canonical one, so callers can keep track of orientation.
    """
    coeffs = [mpq(x) for x in normal] + [mpq(offset)]
    den = 1
    for x in coeffs:
        den = _lcm(den, int(x.denominator))
    ints = [int(x * den) for x in coeffs]
    g = 0
    for x in ints:
        g = gcd(g, abs(x))
    if all(x == 0 for x in ints[:3]):
        raise ValueError("degenerate plane normal")
    ints = [x // g for x in ints]
    sign = 1
    for x in ints[:3]:
        if x != 0:
            sign = 1 if x > 0 else -1
            break
    if sign < 0:
        ints = [-x for x in ints]
    return tuple(ints), sign


def dominant_axis(n: Sequence) -> int:
    """Axis with the largest absolute normal component (projection axis)."""
    best = 0
    for i in (1, 2):
        if abs(n[i]) > abs(n[best]):
            best = i
    return best


def drop_axis(p: Sequence, axis: int) -> tuple:
    if axis == 0:
        return (p[1], p[2])
    if axis == 1:
        return (p[2], p[0])
    return (p[0], p[1])


def lift_point(q2: Sequence, axis: int, plane: Sequence) -> tuple:
    """Inverse of :func:`drop_axis` for a point known to lie on ``plane``."""
    a, b, c, d = plane
    if axis == 0:
        y, z = q2
        return ((mpq(d) - b * y - c * z) / a, y, z)
    if axis == 1:
        z, x = q2
        return (x, (mpq(d) - a * x - c * z) / b, z)
    x, y = q2
    return (x, y, (mpq(d) - a * x - b * y) / c)


# ---------------------------------------------------------------- 2D helpers


def area2(poly: Sequence[Point2]):
    """Twice the signed area (CCW positive)."""
    s = ZERO
    n = len(poly)
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        s += x0 * y1 - x1 * y0
    return s


def orient2(a: Point2, b: Point2, c: Point2):
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def convex_hull2(points: Iterable[Point2]) -> list:
    """Andrew's monotone chain, CCW, collinear points dropped."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts
    lower: list = []
    for p in pts:
        while len(lower) >= 2 and orient2(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and orient2(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def bbox2(poly: Sequence[Point2]) -> tuple:
    xs = [p[0] for p in poly]
    ys = [p[1] for p in poly]
    return (min(xs), min(ys), max(xs), max(ys))


def _is_axis_rect(poly: Sequence[Point2], box: tuple) -> bool:
    if len(poly) != 4:
        return False
    x0, y0, x1, y1 = box
    return all((p[0] == x0 or p[0] == x1) and (p[1] == y0 or p[1] == y1) for p in poly)


def clip_convex(subject: Sequence[Point2], clip: Sequence[Point2]) -> list:
    """Intersection of two CCW convex polygons (Sutherland-Hodgman)."""
    out = list(subject)
    m = len(clip)
    for i in range(m):
        if not out:
            break
        a = clip[i]
        b = clip[(i + 1) % m]
        inp = out
        out = []
        k = len(inp)
        for j in range(k):
            p = inp[j]
            q = inp[(j + 1) % k]
            sp = orient2(a, b, p)
            sq = orient2(a, b, q)
            if sp >= 0:
                out.append(p)
            if (sp > 0 and sq < 0) or (sp < 0 and sq > 0):
                t = sp / (sp - sq)
                out.append((p[0] + (q[0] - p[0]) * t, p[1] + (q[1] - p[1]) * t))
    # drop consecutive duplicates
    clean = []
    for p in out:
        if not clean or clean[-1] != p:
            clean.append(p)
    if len(clean) > 1 and clean[0] == clean[-1]:
        clean.pop()
    return clean


def overlap_area2(a: Sequence[Point2], b: Sequence[Point2], box_a=None, box_b=None):
    """Twice the area of the intersection of two CCW convex polygons.

    Axis-aligned rectangles short-circuit to a box intersection, which is
    the common case for rectilinear models.
    """
    ba = box_a if box_a is not None else bbox2(a)
    bb = box_b if box_b is not None else bbox2(b)
    w = min(ba[2], bb[2]) - max(ba[0], bb[0])
    h = min(ba[3], bb[3]) - max(ba[1], bb[1])
    if w <= 0 or h <= 0:
        return ZERO
    if _is_axis_rect(a, ba) and _is_axis_rect(b, bb):
        return 2 * w * h
    inter = clip_convex(a, b)
    if len(inter) < 3:
        return ZERO
    return area2(inter)


def point_in_polygon2(p: Point2, poly: Sequence[Point2]) -> int:
    """Exact point-in-simple-polygon test.

    Returns 1 inside, 0 outside, -1 when ``p`` lies on the boundary.
    """
    x, y = p
    inside = False
    n = len(poly)
    for i in range(n):
        a = poly[i]
        b = poly[(i + 1) % n]
        if orient2(a, b, p) == 0 and min(a[0], b[0]) <= x <= max(a[0], b[0]) and min(a[1], b[1]) <= y <= max(a[1], b[1]):
            return -1
        if (a[1] > y) != (b[1] > y):
            xi = a[0] + (y - a[1]) * (b[0] - a[0]) / (b[1] - a[1])
            if xi > x:
                inside = not inside
    return 1 if inside else 0


def segments_overlap(p0: Point3, p1: Point3, q0: Point3, q1: Point3) -> bool:
    """True when two 3D segments are collinear and share positive length."""
    d = sub(p1, p0)
    if any(cross(d, sub(q0, p0))) or any(cross(d, sub(q1, p0))):
        return False
    dd = dot(d, d)
    t0 = dot(sub(q0, p0), d) / dd
    t1 = dot(sub(q1, p0), d) / dd
    lo, hi = (t0, t1) if t0 <= t1 else (t1, t0)
    return min(hi, ONE) - max(lo, ZERO) > 0
