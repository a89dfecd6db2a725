"""Hot inner loops of proposal generation.

Each kernel has a numba version and a pure-numpy twin with the same
signature.  Set ``ZONEGRAPH_DISABLE_NUMBA=1`` (or run without numba
installed) to use the numpy path.
"""
from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("ZONEGRAPH_DISABLE_NUMBA", "").strip() not in ("", "0", "false", "False")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via the env flag
    HAVE_NUMBA = False


def label_components_numpy(indptr: np.ndarray, indices: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Connected components of the masked subgraph; -1 for unmasked nodes.

    Components are numbered in order of their smallest node index.
    """
    n = mask.shape[0]
    labels = np.full(n, -1, dtype=np.int64)
    nxt = 0
    for start in range(n):
        if not mask[start] or labels[start] >= 0:
            continue
        labels[start] = nxt
        frontier = np.array([start])
        while frontier.size:
            nbrs = np.concatenate([indices[indptr[u]:indptr[u + 1]] for u in frontier])
            nbrs = nbrs[mask[nbrs] & (labels[nbrs] < 0)]
            nbrs = np.unique(nbrs)
            labels[nbrs] = nxt
            frontier = nbrs
        nxt += 1
    return labels


def sweep_cover_numpy(req: np.ndarray, eligible: np.ndarray, sketches: np.ndarray) -> np.ndarray:
    """covered[s, z] = eligible[z] and every facet zone z needs is in sketch s."""
    if req.shape[0] == 0 or sketches.shape[0] == 0:
        return np.zeros((sketches.shape[0], req.shape[0]), dtype=bool)
    missing = req[None, :, :] & ~sketches[:, None, :]
    return eligible[None, :] & ~missing.any(axis=2)


if HAVE_NUMBA:

    @njit(cache=True)
    def label_components_numba(indptr, indices, mask):
        n = mask.shape[0]
        labels = np.full(n, -1, dtype=np.int64)
        stack = np.empty(n, dtype=np.int64)
        nxt = 0
        for start in range(n):
            if not mask[start] or labels[start] >= 0:
                continue
            top = 0
            stack[top] = start
            top += 1
            labels[start] = nxt
            while top > 0:
                top -= 1
                u = stack[top]
                for k in range(indptr[u], indptr[u + 1]):
                    v = indices[k]
                    if mask[v] and labels[v] < 0:
                        labels[v] = nxt
                        stack[top] = v
                        top += 1
            nxt += 1
        return labels

    @njit(cache=True)
    def sweep_cover_numba(req, eligible, sketches):
        ns = sketches.shape[0]
        nz, nf = req.shape
        out = np.zeros((ns, nz), dtype=np.bool_)
        for s in range(ns):
            for z in range(nz):
                if not eligible[z]:
                    continue
                ok = True
                for f in range(nf):
                    if req[z, f] and not sketches[s, f]:
                        ok = False
                        break
                out[s, z] = ok
        return out

    label_components = label_components_numba
    sweep_cover = sweep_cover_numba
else:
    label_components = label_components_numpy
    sweep_cover = sweep_cover_numpy


def backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"
