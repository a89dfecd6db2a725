import copy
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import cube_doc, lprism_doc, plate_doc, tetra_doc, wedge_doc
from oracles import inside_by_winding
from zonegraph.brep import find_face_loops, parse_brep, point_in_solid, serialize_brep
from zonegraph.errors import BadOrientation, DegenerateFace, NonPlanarFace, NotWatertight, ValidationError
from zonegraph.exact import Q, canonical_plane, to_q
from zonegraph.voxels import voxels_to_document


# ---- exact helpers


def test_to_q_accepts_ints_and_fraction_strings():
    assert to_q(3) == 3
    assert to_q("6/4") == Q(3, 2)
    assert to_q(Fraction(1, 3)) == Q(1, 3)


@pytest.mark.parametrize("bad", [0.5, True, "x"])
def test_to_q_rejects_inexact(bad):
    with pytest.raises((TypeError, ValueError)):
        to_q(bad)


def test_canonical_plane_normalises_scale_and_sign():
    p1, s1 = canonical_plane((0, 0, -2), -4)
    p2, s2 = canonical_plane((0, 0, Q(1, 3)), Q(2, 3))
    assert p1 == p2 == (0, 0, 1, 2)
    assert s1 == -1 and s2 == 1


# ---- parse_brep


def test_cube_parses(cube):
    assert len(cube.faces) == 6
    assert len(cube.planes) == 6
    assert cube.aabb == ((0, 0, 0), (1, 1, 1))
    assert cube.volume == 1


def test_missing_face_is_not_watertight():
    doc = cube_doc()
    doc["faces"].pop()
    with pytest.raises(NotWatertight):
        parse_brep(doc)


def test_lifted_vertex_is_nonplanar():
    doc = cube_doc()
    doc["vertices"][6] = [1, 1, "3/2"]
    with pytest.raises(NonPlanarFace):
        parse_brep(doc)


def test_degenerate_face():
    doc = cube_doc()
    doc["faces"][0] = {"loop": [0, 3]}
    with pytest.raises(DegenerateFace):
        parse_brep(doc)


def test_inverted_shell_is_fixed():
    doc = cube_doc()
    for f in doc["faces"]:
        f["loop"] = list(reversed(f["loop"]))
    b = parse_brep(doc)
    assert b.volume == 1


def test_mixed_orientation_is_fixed():
    doc = cube_doc()
    doc["faces"][2]["loop"] = list(reversed(doc["faces"][2]["loop"]))
    assert parse_brep(doc).volume == 1


def test_schema_errors_are_validation_errors():
    for bad in [{}, {"vertices": [[0, 0, 0]]}, {"vertices": [[0, 0]], "faces": []}, []]:
        with pytest.raises(ValidationError):
            parse_brep(bad)


def test_fraction_coordinates_round_trip():
    doc = cube_doc()
    doc["vertices"] = [[f"{c}/3" for c in v] for v in doc["vertices"]]
    b = parse_brep(doc)
    assert b.volume == Q(1, 27)
    assert parse_brep(serialize_brep(b)) == b


@pytest.mark.parametrize("make", [cube_doc, lprism_doc, tetra_doc, wedge_doc, plate_doc])
def test_serialize_round_trip(make):
    b = parse_brep(make())
    assert parse_brep(serialize_brep(b)) == b


@pytest.mark.parametrize("make", [cube_doc, lprism_doc, tetra_doc, wedge_doc, plate_doc])
def test_planes_are_unique_and_canonical(make):
    b = parse_brep(make())
    assert len(set(b.planes)) == len(b.planes)
    for p in b.planes:
        first = next(c for c in p[:3] if c != 0)
        assert first > 0


@pytest.mark.parametrize("make", [cube_doc, lprism_doc, tetra_doc, wedge_doc, plate_doc])
def test_faces_lie_on_their_planes(make):
    b = parse_brep(make())
    for f in b.faces:
        a, bb, c, d = b.planes[f.plane_id]
        for i in f.loop:
            x, y, z = b.vertices[i]
            assert a * x + bb * y + c * z == d


# ---- face loops


def test_cube_has_three_loops(cube):
    loops = find_face_loops(cube)
    assert sorted(l.extrusion_direction for l in loops) == [(0, 0, 1), (0, 1, 0), (1, 0, 0)]
    assert all(len(l.face_ids) == 4 for l in loops)


def test_lprism_has_one_vertical_loop(lprism):
    loops = find_face_loops(lprism)
    assert len(loops) == 1
    assert loops[0].extrusion_direction == (0, 0, 1)
    assert len(loops[0].face_ids) == 6


def test_tetrahedron_has_no_loops():
    assert find_face_loops(parse_brep(tetra_doc())) == []


@pytest.mark.parametrize("make", [cube_doc, lprism_doc, wedge_doc, plate_doc])
def test_loop_conditions_recheck(make):
    b = parse_brep(make())
    for loop in find_face_loops(b):
        ids = loop.face_ids
        d = loop.extrusion_direction
        for k, fid in enumerate(ids):
            f = b.faces[fid]
            assert len(f.loop) == 4
            nxt = b.faces[ids[(k + 1) % len(ids)]]
            shared = {frozenset(e) for e in f.edges} & {frozenset(e) for e in nxt.edges}
            assert shared
            for e in shared:
                i, j = tuple(e)
                v = [b.vertices[j][t] - b.vertices[i][t] for t in range(3)]
                cr = (v[1] * d[2] - v[2] * d[1], v[2] * d[0] - v[0] * d[2], v[0] * d[1] - v[1] * d[0])
                assert cr == (0, 0, 0)


def test_loop_order_is_deterministic(lprism):
    assert find_face_loops(lprism) == find_face_loops(parse_brep(lprism_doc()))


# ---- point in solid vs winding-number oracle


@pytest.mark.parametrize("make", [lprism_doc, wedge_doc, plate_doc, tetra_doc])
def test_point_in_solid_matches_winding(make):
    doc = make()
    b = parse_brep(doc)
    rng = np.random.default_rng(5)
    lo = [float(c) for c in b.aabb[0]]
    hi = [float(c) for c in b.aabb[1]]
    checked = 0
    while checked < 100:
        p = [Q(int(rng.integers(0, 1 << 12)), 1 << 12) * (Q(hi[i]) - Q(lo[i])) + Q(lo[i]) for i in range(3)]
        ref, ok = inside_by_winding(doc, [float(c) for c in p])
        if not ok:
            continue
        try:
            got = point_in_solid(b, p)
        except ValueError:
            continue
        assert got == ref, p
        checked += 1


def test_point_on_surface_is_reported(cube):
    with pytest.raises(ValueError):
        point_in_solid(cube, (Q(1, 2), Q(1, 2), 0))


@settings(max_examples=25, deadline=None)
@given(st.lists(st.booleans(), min_size=27, max_size=27))
def test_voxel_documents_parse(bits):
    from zonegraph.voxels import is_connected, is_manifold

    occ = np.array(bits).reshape(3, 3, 3)
    if not occ.any() or not is_connected(occ) or not is_manifold(occ):
        return
    b = parse_brep(voxels_to_document(occ))
    assert b.volume == int(occ.sum())
