"""Per-zone point clouds and the 10-wide feature rows fed to the scorer."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..proposals import BoolType, Canvas, Extrusion
from ..zones import Zone, ZoneGraph

FEATURE_WIDTH = 10
N_POINTS = 64


def _zone_seed(z: Zone, seed: int) -> int:
    # keyed on geometry rather than zone id so relabelled graphs sample identically
    verts = sorted(z.polytope.vertices)
    text = f"{seed}|" + ";".join(",".join(str(c) for c in v) for v in verts)
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "little")


def _unit_normal(plane, side: int) -> np.ndarray:
    n = np.array([float(plane[0]), float(plane[1]), float(plane[2])]) * side
    return n / np.linalg.norm(n)


def sample_zone_pointcloud(z: Zone, n: int = N_POINTS, seed: int = 0):
    """Area-weighted samples on the zone boundary.

    Returns
    -------
    points : (n, 3) float array, model coordinates
    normals : (n, 3) float array, unit normals pointing out of the zone
    """
    if n <= 0:
        raise ValueError("n must be positive")
    tris, normals, areas = [], [], []
    for f in z.polytope.facets:
        vs = np.array([[float(c) for c in v] for v in f.verts])
        nrm = _unit_normal(z.polytope.planes[f.plane_id], f.side)
        for k in range(1, len(vs) - 1):
            a = 0.5 * np.linalg.norm(np.cross(vs[k] - vs[0], vs[k + 1] - vs[0]))
            if a > 0:
                tris.append((vs[0], vs[k], vs[k + 1]))
                normals.append(nrm)
                areas.append(a)
    areas = np.array(areas)
    rng = np.random.default_rng(_zone_seed(z, seed))
    pick = rng.choice(len(tris), size=n, p=areas / areas.sum())
    r = rng.random((n, 2))
    flip = r.sum(axis=1) > 1
    r[flip] = 1 - r[flip]
    v0 = np.array([tris[i][0] for i in pick])
    e1 = np.array([tris[i][1] for i in pick]) - v0
    e2 = np.array([tris[i][2] for i in pick]) - v0
    pts = v0 + r[:, :1] * e1 + r[:, 1:] * e2
    return pts, np.array([normals[i] for i in pick])


def normalize_points(pts: np.ndarray, aabb) -> np.ndarray:
    """Map into the unit cube of the model AABB with one uniform scale."""
    lo = np.array([float(c) for c in aabb[0]])
    hi = np.array([float(c) for c in aabb[1]])
    return (pts - lo) / float((hi - lo).max())


@dataclass
class ZoneGeometry:
    """Flag-independent part of a graph input: clouds and edges."""

    points: np.ndarray  # (Z, n, 6) normalized positions + normals
    edges: np.ndarray  # (E, 2) int, undirected, a < b
    edge_w: np.ndarray  # (E,) facet areas (float)


def zone_geometry(zg: ZoneGraph, n: int = N_POINTS, seed: int = 0, features: str = "pointcloud") -> ZoneGeometry:
    key = ("geometry", n, seed, features)
    got = zg.cache.get(key)
    if got is not None:
        return got
    rows = []
    if features == "pointcloud":
        for z in zg.zones:
            pts, nrm = sample_zone_pointcloud(z, n, seed)
            rows.append(np.hstack([normalize_points(pts, zg.aabb), nrm]))
    elif features == "basic":
        box = float(zg.box_volume)
        for z in zg.zones:
            c = np.array([[float(t) for t in z.polytope.centroid]])
            rows.append(np.hstack([normalize_points(c, zg.aabb), [[float(z.volume) / box, 0.0, 0.0]]]))
    else:
        raise ValueError(f"unknown feature set {features!r}")
    edges = np.array([(e.zone_a, e.zone_b) for e in zg.edges], dtype=np.int64).reshape(-1, 2)
    edge_w = np.array([float(e.facet_area) for e in zg.edges])
    got = ZoneGeometry(np.stack(rows), edges, edge_w)
    zg.cache[key] = got
    return got


def zone_flags(zg: ZoneGraph, canvas: Canvas, target, e: Extrusion) -> np.ndarray:
    """(Z, 4) flags per zone: in target, in canvas, in proposal, op is union."""
    target = zg.interior_ids if target is None else target
    nz = len(zg.zones)
    f = np.zeros((nz, 4))
    for i in target:
        f[i, 0] = 1.0
    for i in canvas.filled:
        f[i, 1] = 1.0
    for i in e.zones:
        f[i, 2] = 1.0
    f[:, 3] = 1.0 if e.bool_type is BoolType.UNION else 0.0
    return f


def featurize(geom: ZoneGeometry, flags: np.ndarray) -> np.ndarray:
    """(Z, n, 10) feature tensor."""
    nz, n, _ = geom.points.shape
    return np.concatenate([geom.points, np.broadcast_to(flags[:, None, :], (nz, n, 4))], axis=2)
