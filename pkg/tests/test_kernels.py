import os
import subprocess
import sys

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from zonegraph import _kernels as K


def _graph(rng, n, p):
    a = sp.random(n, n, density=p, random_state=rng, format="csr")
    a = ((a + a.T) > 0).astype(np.int8).tocsr()
    a.setdiag(0)
    a.eliminate_zeros()
    return a.indptr.astype(np.int64), a.indices.astype(np.int64)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 40), st.floats(0.0, 0.3), st.integers(0, 2**31 - 1))
def test_label_components_backends_agree(n, p, seed):
    rng = np.random.default_rng(seed)
    indptr, indices = _graph(rng, n, p)
    mask = rng.random(n) < 0.7
    ref = K.label_components_numpy(indptr, indices, mask)
    assert np.array_equal(K.label_components(indptr, indices, mask), ref)
    assert np.all((ref >= 0) == mask)
    # labels agree with scipy's components restricted to the mask
    sub = sp.csr_matrix((np.ones(len(indices)), indices, indptr), shape=(n, n))[mask][:, mask]
    if mask.any():
        _, lab = sp.csgraph.connected_components(sub, directed=False)
        ours = ref[mask]
        pairs = {(a, b) for a, b in zip(ours.tolist(), lab.tolist())}
        assert len(pairs) == len(set(ours.tolist())) == len(set(lab.tolist()))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 12), st.integers(0, 15), st.integers(0, 10), st.integers(0, 2**31 - 1))
def test_sweep_cover_backends_agree(nz, nf, ns, seed):
    rng = np.random.default_rng(seed)
    req = rng.random((nz, nf)) < 0.3
    eligible = rng.random(nz) < 0.8
    sketches = rng.random((ns, nf)) < 0.6
    ref = K.sweep_cover_numpy(req, eligible, sketches)
    assert ref.shape == (ns, nz)
    assert np.array_equal(K.sweep_cover(req, eligible, sketches), ref)


def test_component_numbering_by_smallest_node():
    # path 0-1, isolated 2, path 3-4
    indptr = np.array([0, 1, 2, 2, 3, 4])
    indices = np.array([1, 0, 4, 3])
    mask = np.ones(5, dtype=bool)
    assert K.label_components(indptr, indices, mask).tolist() == [0, 0, 1, 2, 2]


@pytest.mark.parametrize("flag, want", [("1", "numpy"), ("0", None)])
def test_env_flag_selects_backend(flag, want):
    env = dict(os.environ, ZONEGRAPH_DISABLE_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", "from zonegraph import _kernels as k; print(k.backend())"],
                         env=env, capture_output=True, text=True, check=True).stdout.strip()
    assert out == (want or K.backend())


_PROPOSALS = """
import json
from zonegraph.proposals import Canvas, generate_proposals
from zonegraph.synth import build_example, generate_program
out = []
for s in range(8):
    zg = build_example(generate_program(s))[1]
    out.append([e.canonical_key for e in generate_proposals(zg, Canvas(), 2)])
print(json.dumps(out))
"""


def test_proposals_identical_across_backends():
    runs = []
    for flag in ("0", "1"):
        env = dict(os.environ, ZONEGRAPH_DISABLE_NUMBA=flag)
        runs.append(subprocess.run([sys.executable, "-c", _PROPOSALS], env=env,
                                   capture_output=True, text=True, check=True).stdout)
    assert runs[0] == runs[1] and len(runs[0]) > 20
