"""Independent reference implementations used only by the tests.

None of these share code with the package: they use floats or
``fractions.Fraction`` and textbook formulas.
"""
from fractions import Fraction
from itertools import product

import numpy as np


def _f(x):
    return float(Fraction(str(x)))


def winding_number(doc, p):
    """Generalised winding number of a closed polygonal surface around p (float)."""
    verts = np.array([[_f(c) for c in v] for v in doc["vertices"]])
    p = np.asarray(p, dtype=float)
    total = 0.0
    for face in doc["faces"]:
        loop = face["loop"]
        a = verts[loop[0]] - p
        for k in range(1, len(loop) - 1):
            b = verts[loop[k]] - p
            c = verts[loop[k + 1]] - p
            la, lb, lc = np.linalg.norm(a), np.linalg.norm(b), np.linalg.norm(c)
            num = np.dot(a, np.cross(b, c))
            den = la * lb * lc + np.dot(a, b) * lc + np.dot(a, c) * lb + np.dot(b, c) * la
            total += 2.0 * np.arctan2(num, den)
    return total / (4.0 * np.pi)


def winding_numbers(doc, pts):
    """Vectorised :func:`winding_number` for an (n, 3) array of points."""
    verts = np.array([[_f(c) for c in v] for v in doc["vertices"]])
    tris = np.array([(f["loop"][0], f["loop"][k], f["loop"][k + 1])
                     for f in doc["faces"] for k in range(1, len(f["loop"]) - 1)])
    pts = np.asarray(pts, dtype=float)
    a, b, c = (verts[tris[:, i]][None, :, :] - pts[:, None, :] for i in range(3))
    la, lb, lc = (np.linalg.norm(v, axis=2) for v in (a, b, c))
    num = np.einsum("ptk,ptk->pt", a, np.cross(b, c))
    dot = lambda u, v: np.einsum("ptk,ptk->pt", u, v)  # noqa: E731
    den = la * lb * lc + dot(a, b) * lc + dot(a, c) * lb + dot(b, c) * la
    return (2.0 * np.arctan2(num, den)).sum(axis=1) / (4.0 * np.pi)


def inside_by_winding(doc, p):
    """(inside?, reliable?) -- unreliable when p is (nearly) on the surface."""
    w = winding_number(doc, p)
    return round(w) == 1, abs(w - round(w)) < 0.05


def fan_volume(polytope):
    """Exact volume by signed tetrahedra from the origin over fan-triangulated facets."""
    vol = Fraction(0)
    for f in polytope.facets:
        vs = [tuple(Fraction(str(c)) for c in v) for v in f.verts]
        a = vs[0]
        for k in range(1, len(vs) - 1):
            b, c = vs[k], vs[k + 1]
            det = (a[0] * (b[1] * c[2] - b[2] * c[1])
                   - a[1] * (b[0] * c[2] - b[2] * c[0])
                   + a[2] * (b[0] * c[1] - b[1] * c[0]))
            vol += det
    return vol / 6


def grid_arrangement(cuts):
    """Zones and adjacencies of an arrangement of axis-aligned planes in their box.

    ``cuts`` lists the sorted plane coordinates per axis. Enumerates every sign
    vector (one interval choice per axis); all are nonempty for a box.
    """
    intervals = [list(zip(c[:-1], c[1:])) for c in cuts]
    cells = list(product(*[range(len(iv)) for iv in intervals]))
    edges = 0
    for cell in cells:
        for ax in range(3):
            if cell[ax] + 1 < len(intervals[ax]):
                edges += 1
    return len(cells), edges


def dyadic_points(rng, lo, hi, n, bits=10):
    """Random points with dyadic coordinates (exact in binary floating point)."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    k = rng.integers(0, 2**bits + 1, size=(n, 3))
    return lo + (hi - lo) * (k / 2.0**bits)


def point_in_polygon_float(q, poly):
    """Even-odd test in 2D (float)."""
    inside = False
    n = len(poly)
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        if (y0 > q[1]) != (y1 > q[1]):
            x = x0 + (q[1] - y0) * (x1 - x0) / (y1 - y0)
            if x > q[0]:
                inside = not inside
    return inside


def sweep_contains(zg, e, p, tol=1e-9):
    """Is point p inside the prism obtained by sweeping e's sketch facets along e.direction?"""
    sp = np.array([float(c) for c in zg.planes[e.start_plane]])
    ep = np.array([float(c) for c in zg.planes[e.end_plane]])
    n, d0, d1 = sp[:3], sp[3], ep[3]
    s = float(np.dot(n, p))
    if not (min(d0, d1) - tol <= s <= max(d0, d1) + tol):
        return False
    d = np.array([float(c) for c in e.direction])
    t = (d0 - s) / float(np.dot(n, d))
    q = p + t * d
    axis = int(np.argmax(np.abs(n)))
    keep = [i for i in range(3) if i != axis]
    for fid in e.sketch_facets:
        poly = [(float(v[keep[0]]), float(v[keep[1]])) for v in zg.facets[fid].polygon]
        if point_in_polygon_float((q[keep[0]], q[keep[1]]), poly):
            return True
    return False


def interior_samples(polytope, rng, n):
    """Random strictly interior points (Dirichlet-weighted vertex combinations)."""
    vs = np.array([[float(c) for c in v] for v in polytope.vertices])
    w = rng.dirichlet(np.ones(len(vs)), size=n)
    return w @ vs
