import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from zonegraph.brep import parse_brep  # noqa: E402
from zonegraph.voxels import voxels_to_document  # noqa: E402


def cube_doc(size=1):
    s = size
    v = [[0, 0, 0], [s, 0, 0], [s, s, 0], [0, s, 0], [0, 0, s], [s, 0, s], [s, s, s], [0, s, s]]
    faces = [[0, 3, 2, 1], [4, 5, 6, 7], [0, 1, 5, 4], [1, 2, 6, 5], [2, 3, 7, 6], [3, 0, 4, 7]]
    return {"vertices": v, "faces": [{"loop": f} for f in faces]}


def lprism_doc():
    """2x2x1 block minus the 1x1x1 corner at (1..2, 1..2)."""
    foot = [(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)]
    v = [[x, y, 0] for x, y in foot] + [[x, y, 1] for x, y in foot]
    faces = [[5, 4, 3, 2, 1, 0], [6, 7, 8, 9, 10, 11]]
    for i in range(6):
        j = (i + 1) % 6
        faces.append([i, j, j + 6, i + 6])
    return {"vertices": v, "faces": [{"loop": f} for f in faces]}


def tetra_doc():
    v = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]]
    faces = [[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]]
    return {"vertices": v, "faces": [{"loop": f} for f in faces]}


def wedge_doc():
    """Right triangle (0,0),(2,0),(0,2) extruded over z in [0,1]."""
    v = [[0, 0, 0], [2, 0, 0], [0, 2, 0], [0, 0, 1], [2, 0, 1], [0, 2, 1]]
    faces = [[0, 2, 1], [3, 4, 5], [0, 1, 4, 3], [1, 2, 5, 4], [2, 0, 3, 5]]
    return {"vertices": v, "faces": [{"loop": f} for f in faces]}


def plate_doc():
    occ = np.ones((3, 3, 1), dtype=bool)
    occ[1, 1, 0] = False
    return voxels_to_document(occ)


def boss_doc():
    occ = np.zeros((4, 4, 4), dtype=bool)
    occ[:, :, :2] = True
    occ[1:3, 1:3, 2:4] = True
    occ[0, 0, 0] = False
    return voxels_to_document(occ)


@pytest.fixture
def cube():
    return parse_brep(cube_doc())


@pytest.fixture
def lprism():
    return parse_brep(lprism_doc())


@pytest.fixture
def plate():
    return parse_brep(plate_doc())


@pytest.fixture
def wedge():
    return parse_brep(wedge_doc())


@pytest.fixture
def boss():
    return parse_brep(boss_doc())
