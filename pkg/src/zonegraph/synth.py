"""Synthetic sketch + extrude + Boolean programs on an integer grid."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .brep import BRep
from .errors import GenerationExhausted, UnsupportedResult
from .exact import Q, point_in_polygon2
from .proposals import BoolType, Canvas, Extrusion, apply_extrusion, zone_op
from .voxels import is_connected, is_manifold, voxels_to_brep
from .zones import ZoneGraph, zone_graph_from_brep


@dataclass(frozen=True)
class SynthOp:
    axis: int  # normal axis of the sketch plane
    offset: int  # sketch plane coordinate along ``axis``
    sketch: tuple  # CCW rectilinear polygon in the (axis+1, axis+2) coordinates
    direction: int  # +1 / -1 along ``axis``
    extent: int
    bool_type: BoolType

    def to_json(self) -> dict:
        return {
            "axis": self.axis,
            "offset": self.offset,
            "sketch": [list(p) for p in self.sketch],
            "direction": self.direction,
            "extent": self.extent,
            "bool_type": self.bool_type.value,
        }

    @classmethod
    def from_json(cls, d: dict) -> "SynthOp":
        return cls(d["axis"], d["offset"], tuple(tuple(p) for p in d["sketch"]),
                   d["direction"], d["extent"], BoolType(d["bool_type"]))


@dataclass(frozen=True)
class SynthProgram:
    ops: tuple
    grid: int = 4

    def to_json(self) -> dict:
        return {"grid": self.grid, "ops": [op.to_json() for op in self.ops]}

    @classmethod
    def from_json(cls, d: dict) -> "SynthProgram":
        return cls(tuple(SynthOp.from_json(o) for o in d["ops"]), d["grid"])


@dataclass(frozen=True)
class SynthConfig:
    min_ops: int = 2
    max_ops: int = 4
    grid: int = 4
    max_attempts: int = 500


def op_cells(op: SynthOp, grid: int) -> np.ndarray:
    """Boolean cell mask of the op's prism."""
    mask = np.zeros((grid, grid, grid), dtype=bool)
    a, b, c = op.axis, (op.axis + 1) % 3, (op.axis + 2) % 3
    if op.direction > 0:
        lo, hi = op.offset, op.offset + op.extent
    else:
        lo, hi = op.offset - op.extent, op.offset
    lo, hi = max(lo, 0), min(hi, grid)
    poly = [(Q(u), Q(v)) for u, v in op.sketch]
    for u in range(grid):
        for v in range(grid):
            if point_in_polygon2((Q(2 * u + 1, 2), Q(2 * v + 1, 2)), poly) != 1:
                continue
            idx = [0, 0, 0]
            idx[b], idx[c] = u, v
            for t in range(lo, hi):
                idx[a] = t
                mask[tuple(idx)] = True
    return mask


def run_cells(program: SynthProgram) -> list:
    """Cell masks after each op."""
    g = program.grid
    occ = np.zeros((g, g, g), dtype=bool)
    states = []
    for op in program.ops:
        cells = op_cells(op, g)
        occ = occ | cells if op.bool_type is BoolType.UNION else occ & ~cells
        states.append(occ.copy())
    return states


# ------------------------------------------------------------------ generation


def _rect(u0, v0, u1, v1) -> tuple:
    return ((u0, v0), (u1, v0), (u1, v1), (u0, v1))


def _boundary_squares(occ: np.ndarray) -> list:
    """(axis, level, outward sign, u, v) for every exposed unit square."""
    g = np.pad(occ, 1)
    out = []
    for a in range(3):
        b, c = (a + 1) % 3, (a + 2) % 3
        for sgn in (1, -1):
            mask = g & ~np.roll(g, -sgn, axis=a)
            for idx in zip(*np.nonzero(mask)):
                idx = [int(t) - 1 for t in idx]
                level = idx[a] + (1 if sgn > 0 else 0)
                out.append((a, level, sgn, idx[b], idx[c]))
    out.sort()
    return out


def _sketch_on(rng, face_squares: set, u: int, v: int, grid: int) -> tuple:
    """Random rectangle (sometimes an L) inside the face region, containing (u, v)."""
    for _ in range(8):
        w = int(rng.integers(1, grid + 1))
        h = int(rng.integers(1, grid + 1))
        u0 = int(rng.integers(max(0, u - w + 1), u + 1))
        v0 = int(rng.integers(max(0, v - h + 1), v + 1))
        u1, v1 = min(u0 + w, grid), min(v0 + h, grid)
        cells = {(x, y) for x in range(u0, u1) for y in range(v0, v1)}
        if cells <= face_squares:
            break
    else:
        u0, v0, u1, v1 = u, v, u + 1, v + 1
    if u1 - u0 >= 2 and v1 - v0 >= 2 and rng.random() < 0.25:
        # notch one corner that does not hold (u, v)
        cu = int(rng.integers(u0 + 1, u1))
        cv = int(rng.integers(v0 + 1, v1))
        corner = int(rng.integers(4))
        polys = {
            0: ((cu, v0), (u1, v0), (u1, v1), (u0, v1), (u0, cv), (cu, cv)),  # drop lower-left
            1: ((u0, v0), (cu, v0), (cu, cv), (u1, cv), (u1, v1), (u0, v1)),  # drop lower-right
            2: ((u0, v0), (u1, v0), (u1, cv), (cu, cv), (cu, v1), (u0, v1)),  # drop upper-right
            3: ((u0, v0), (u1, v0), (u1, v1), (cu, v1), (cu, cv), (u0, cv)),  # drop upper-left
        }
        dropped = {
            0: (u < cu and v < cv), 1: (u >= cu and v < cv),
            2: (u >= cu and v >= cv), 3: (u < cu and v >= cv),
        }
        if not dropped[corner]:
            return polys[corner]
    return _rect(u0, v0, u1, v1)


def _face_region(squares: list, a: int, level: int, sgn: int) -> set:
    return {(s[3], s[4]) for s in squares if s[0] == a and s[1] == level and s[2] == sgn}


def _random_op(rng, occ: np.ndarray, first: bool, grid: int) -> SynthOp:
    if first:
        a = int(rng.integers(3))
        w = int(rng.integers(2, grid + 1))
        h = int(rng.integers(2, grid + 1))
        u0 = int(rng.integers(0, grid - w + 1))
        v0 = int(rng.integers(0, grid - h + 1))
        offset = int(rng.integers(0, grid))
        extent = int(rng.integers(1, grid - offset + 1))
        region = {(x, y) for x in range(u0, u0 + w) for y in range(v0, v0 + h)}
        sketch = _sketch_on(rng, region, u0, v0, grid)
        return SynthOp(a, offset, sketch, 1, extent, BoolType.UNION)
    squares = _boundary_squares(occ)
    a, level, sgn, u, v = squares[int(rng.integers(len(squares)))]
    region = _face_region(squares, a, level, sgn)
    sketch = _sketch_on(rng, region, u, v, grid)
    if rng.random() < 0.5:
        room = grid - level if sgn > 0 else level
        if room <= 0:
            raise _Reject
        extent = int(rng.integers(1, room + 1))
        return SynthOp(a, level, sketch, sgn, extent, BoolType.UNION)
    depth = level if sgn > 0 else grid - level
    extent = int(rng.integers(1, depth + 1))
    return SynthOp(a, level, sketch, -sgn, extent, BoolType.DIFFERENCE)


class _Reject(Exception):
    pass


def _valid_cells(program: SynthProgram) -> bool:
    prev = np.zeros((program.grid,) * 3, dtype=bool)
    for occ in run_cells(program):
        if np.array_equal(occ, prev) or not is_connected(occ):
            return False
        prev = occ
    return is_manifold(prev)


def generate_program(seed: int, cfg: SynthConfig = SynthConfig()) -> SynthProgram:
    """Rejection-sample a valid program; deterministic per seed."""
    if not 1 <= cfg.min_ops <= cfg.max_ops:
        raise ValueError("need 1 <= min_ops <= max_ops")
    if cfg.grid < 2:
        raise ValueError("grid must be at least 2")
    rng = np.random.default_rng(seed)
    n_ops = int(rng.integers(cfg.min_ops, cfg.max_ops + 1))
    for _ in range(cfg.max_attempts):
        ops = []
        occ = np.zeros((cfg.grid,) * 3, dtype=bool)
        try:
            for i in range(n_ops):
                op = _random_op(rng, occ, i == 0, cfg.grid)
                cells = op_cells(op, cfg.grid)
                new = occ | cells if op.bool_type is BoolType.UNION else occ & ~cells
                if np.array_equal(new, occ) or not new.any() or not is_connected(new):
                    raise _Reject
                ops.append(op)
                occ = new
        except _Reject:
            continue
        program = SynthProgram(tuple(ops), cfg.grid)
        try:
            build_example(program)
        except UnsupportedResult:
            continue
        return program
    raise GenerationExhausted(f"no valid program after {cfg.max_attempts} attempts (seed {seed})")


# ------------------------------------------------------------------ execution


def zone_cells(zg: ZoneGraph, grid: int) -> list:
    """Cell mask of every zone; zones of grid models are integer boxes."""
    out = []
    for z in zg.zones:
        lo, hi = z.polytope.aabb
        if z.volume != (hi[0] - lo[0]) * (hi[1] - lo[1]) * (hi[2] - lo[2]):
            raise UnsupportedResult("zone is not an axis-aligned box")
        m = np.zeros((grid,) * 3, dtype=bool)
        m[int(lo[0]):int(hi[0]), int(lo[1]):int(hi[1]), int(lo[2]):int(hi[2])] = True
        out.append(m)
    return out


def _offset_masks(zg: ZoneGraph, grid: int) -> list:
    """Zone cells in full-grid coordinates (the model may not start at 0)."""
    got = zg.cache.get(("zone_cells", grid))
    if got is None:
        got = zone_cells(zg, grid)
        zg.cache[("zone_cells", grid)] = got
    return got


def gt_zone_ops(program: SynthProgram, zg: ZoneGraph) -> list:
    """Re-express each op as its effect on the zone canvas.

    Raises :class:`UnsupportedResult` when an op's prism is not a union of zones.
    """
    masks = _offset_masks(zg, program.grid)
    canvas = Canvas()
    ops = []
    for op in program.ops:
        prism = op_cells(op, program.grid)
        inside = [i for i, m in enumerate(masks) if not (m & ~prism).any()]
        covered = np.zeros_like(prism)
        for i in inside:
            covered |= masks[i]
        if not np.array_equal(covered, prism):
            raise UnsupportedResult("op is not representable by the zone graph")
        x = frozenset(inside)
        if op.bool_type is BoolType.UNION:
            e = zone_op(x - canvas.filled, BoolType.UNION)
        else:
            e = zone_op(x & canvas.filled, BoolType.DIFFERENCE)
        if not e.zones:
            raise UnsupportedResult("op leaves no trace at zone level")
        canvas = apply_extrusion(canvas, e)
        ops.append(e)
    if canvas.filled != zg.interior_ids:
        raise UnsupportedResult("replayed program does not reach the target")
    return ops


def execute_program(program: SynthProgram):
    """Evaluate on the cell grid; return ``(brep, gt_zone_ops)``."""
    brep, _, ops = build_example(program)
    return brep, ops


def build_example(program: SynthProgram, simplify: bool = False):
    """Like :func:`execute_program` but also hands back the zone graph."""
    states = run_cells(program)
    occ = states[-1]
    if not occ.any():
        raise UnsupportedResult("empty result")
    for s in states:
        if not is_connected(s):
            raise UnsupportedResult("disconnected intermediate solid")
    brep = voxels_to_brep(occ)
    zg = zone_graph_from_brep(brep, simplify=simplify)
    return brep, zg, gt_zone_ops(program, zg)
