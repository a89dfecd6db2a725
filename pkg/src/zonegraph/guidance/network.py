"""Point-cloud encoder + message passing + MLP head, in plain numpy.

Training runs batched over several graphs with hand-written backprop.
Inference scores one graph at a time through row-canonicalized matmuls, which
makes the output independent of point order and zone numbering down to the
last bit (BLAS results can depend on a row's position in the operand).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from ..errors import ShapeMismatch
from . import _nn_kernels as K
from .features import FEATURE_WIDTH, ZoneGeometry

LEAK = 0.01
BN_EPS = 1e-5
BN_MOMENTUM = 0.9
WIDTH = 128

_ENC_PT = [("fc", FEATURE_WIDTH, 64), ("bn", 64), ("act",), ("fc", 64, 128), ("bn", 128), ("act",), ("fc", 128, 128)]
_ENC_ZONE = [("fc", 128, 128), ("bn", 128), ("act",), ("fc", 128, 128)]
_MSG = [("fc", 128, 128), ("bn", 128), ("act",), ("fc", 128, 128), ("bn", 128), ("act",), ("fc", 128, 128)]
_HEAD = [("fc", 128, 128), ("bn", 128), ("act",), ("fc", 128, 128), ("bn", 128), ("act",), ("fc", 128, 2)]


def architecture(rounds: int = 3) -> list:
    """Ordered (block name, layer specs)."""
    blocks = [("enc_pt", _ENC_PT), ("enc_zone", _ENC_ZONE)]
    blocks += [(f"msg{r}", _MSG) for r in range(rounds)]
    blocks.append(("head", _HEAD))
    return blocks


def expected_shapes(rounds: int = 3) -> dict:
    shapes = {}
    for block, specs in architecture(rounds):
        for i, s in enumerate(specs):
            key = f"{block}.{i}"
            if s[0] == "fc":
                shapes[key + ".W"] = (s[1], s[2])
                shapes[key + ".b"] = (s[2],)
            elif s[0] == "bn":
                for name in ("gamma", "beta", "mean", "var"):
                    shapes[f"{key}.{name}"] = (s[1],)
    return shapes


def _canon_mm(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    u, inv = np.unique(x, axis=0, return_inverse=True)
    return (u @ w)[inv.reshape(-1)]


@dataclass
class GraphInput:
    features: np.ndarray  # (Z, n, 10)
    edges: np.ndarray  # (E, 2)
    edge_w: Optional[np.ndarray] = None


_token_counter = itertools.count()


class ScorerModel:
    """All weights and batch-norm statistics as named float64 arrays.

    Parameters
    ----------
    arrays : dict
        Name to array. Missing names are not filled in; use :meth:`init`.
    rounds : int
        Number of message-passing blocks.
    edge_weighting : bool
        Weight neighbour means by shared facet area.
    """

    def __init__(self, arrays: dict, rounds: int = 3, edge_weighting: bool = False, hyper: Optional[dict] = None):
        self.rounds = int(rounds)
        self.edge_weighting = bool(edge_weighting)
        self.arrays = {k: np.asarray(v, dtype=np.float64) for k, v in arrays.items()}
        self.hyper = dict(hyper or {})
        self.token = next(_token_counter)
        self.validate()

    # ---- construction

    @classmethod
    def init(cls, seed: int = 0, rounds: int = 3, edge_weighting: bool = False, hyper=None) -> "ScorerModel":
        rng = np.random.default_rng(seed)
        arrays = {}
        for name, shape in expected_shapes(rounds).items():
            kind = name.rsplit(".", 1)[1]
            if kind == "W":
                arrays[name] = rng.normal(0.0, np.sqrt(2.0 / shape[0]), size=shape)
            elif kind in ("gamma", "var"):
                arrays[name] = np.ones(shape)
            else:
                arrays[name] = np.zeros(shape)
        return cls(arrays, rounds, edge_weighting, hyper)

    def validate(self) -> None:
        want = expected_shapes(self.rounds)
        missing = sorted(set(want) - set(self.arrays))
        extra = sorted(set(self.arrays) - set(want))
        if missing or extra:
            raise ShapeMismatch(f"missing {missing[:3]} extra {extra[:3]}")
        for k, shape in want.items():
            if self.arrays[k].shape != shape:
                raise ShapeMismatch(f"{k}: expected {shape}, got {self.arrays[k].shape}")

    def copy(self) -> "ScorerModel":
        return ScorerModel({k: v.copy() for k, v in self.arrays.items()}, self.rounds, self.edge_weighting, self.hyper)

    @property
    def param_names(self) -> list:
        return [k for k in expected_shapes(self.rounds) if k.rsplit(".", 1)[1] in ("W", "b", "gamma", "beta")]

    # ---- sequential blocks

    def _seq(self, block: str, x: np.ndarray, mode: str, tape: Optional[list], update_stats: bool):
        """mode: 'train' (batch stats), 'eval' (running stats), 'canon' (eval + canonical matmul)."""
        a = self.arrays
        specs = dict(architecture(self.rounds))[block]
        i = 0
        while i < len(specs):
            s, key = specs[i], f"{block}.{i}"
            i += 1
            if s[0] == "fc":
                if tape is not None:
                    tape.append(("fc", key, x))
                w = a[key + ".W"]
                x = (_canon_mm(x, w) if mode == "canon" else x @ w) + a[key + ".b"]
            elif s[0] == "bn" and mode == "train":
                # batch statistics, fused with a following activation
                act = i < len(specs) and specs[i][0] == "act"
                i += act
                x, xh, inv, mu, var, mask = K.bn_act_forward(x, a[key + ".gamma"], a[key + ".beta"], BN_EPS, LEAK, act)
                if update_stats:
                    a[key + ".mean"] = BN_MOMENTUM * a[key + ".mean"] + (1 - BN_MOMENTUM) * mu
                    a[key + ".var"] = BN_MOMENTUM * a[key + ".var"] + (1 - BN_MOMENTUM) * var
                if tape is not None:
                    tape.append(("bn", key, xh, inv, mask))
            elif s[0] == "bn":
                xh = (x - a[key + ".mean"]) / np.sqrt(a[key + ".var"] + BN_EPS)
                x = a[key + ".gamma"] * xh + a[key + ".beta"]
            else:
                if tape is not None:
                    tape.append(("act", key, x > 0))
                x = np.where(x > 0, x, LEAK * x)
        return x

    def _seq_back(self, tape: list, dy: np.ndarray, grads: dict, need_input_grad: bool = True) -> np.ndarray:
        a = self.arrays
        for k, rec in enumerate(reversed(tape)):
            kind, key = rec[0], rec[1]
            if kind == "fc":
                x = rec[2]
                grads[key + ".W"] += x.T @ dy
                grads[key + ".b"] += dy.sum(axis=0)
                if need_input_grad or k < len(tape) - 1:
                    dy = dy @ a[key + ".W"].T
            elif kind == "act":
                dy = dy * np.where(rec[2], 1.0, LEAK)
            else:
                xh, inv, mask = rec[2], rec[3], rec[4]
                dy, dgamma, dbeta = K.bn_act_backward(dy, xh, inv, a[key + ".gamma"], mask, LEAK)
                grads[key + ".gamma"] += dgamma
                grads[key + ".beta"] += dbeta
        return dy

    # ---- batched forward / backward (training and reference eval)

    def _adjacency(self, graphs: Sequence[GraphInput], offsets: np.ndarray, total: int):
        rows, cols, vals = [], [], []
        for g, off in zip(graphs, offsets):
            if len(g.edges) == 0:
                continue
            w = g.edge_w if (self.edge_weighting and g.edge_w is not None) else np.ones(len(g.edges))
            e = g.edges + off
            rows += [e[:, 0], e[:, 1]]
            cols += [e[:, 1], e[:, 0]]
            vals += [w, w]
        if not rows:
            return None, np.zeros(0, dtype=np.int64)
        r, c, v = np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
        adj = sp.csr_matrix((v, (r, c)), shape=(total, total))
        deg = np.asarray(adj.sum(axis=1)).ravel()
        active = np.nonzero(deg > 0)[0]
        norm = sp.diags(1.0 / deg[active]) @ adj[active]
        return sp.csr_matrix(norm), active

    def forward_batch(self, graphs: Sequence[GraphInput], train: bool = False, update_stats: bool = False, keep_tape: bool = False):
        """Probabilities (B, 2) for a batch of graphs; optionally the tape for backprop."""
        mode = "train" if train else "eval"
        n = graphs[0].features.shape[1]
        sizes = np.array([g.features.shape[0] for g in graphs])
        offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]])
        total = int(sizes.sum())
        tape = {} if keep_tape else None

        def t(name):
            if tape is None:
                return None
            tape[name] = []
            return tape[name]

        x = np.concatenate([g.features for g in graphs]).reshape(total * n, FEATURE_WIDTH)
        y = self._seq("enc_pt", x, mode, t("enc_pt"), update_stats)
        h, arg = K.point_maxpool(y, n)
        h = self._seq("enc_zone", h, mode, t("enc_zone"), update_stats)
        norm, active = self._adjacency(graphs, offsets, total)
        for r in range(self.rounds):
            if norm is None:
                break
            m = norm @ h
            u = self._seq(f"msg{r}", m, mode, t(f"msg{r}"), update_stats)
            h = h.copy()
            h[active] += u
        gidx = np.empty((len(graphs), WIDTH), dtype=np.int64)
        pooled = np.empty((len(graphs), WIDTH))
        for b, (off, sz) in enumerate(zip(offsets, sizes)):
            seg = h[off:off + sz]
            k = seg.argmax(axis=0)
            gidx[b] = off + k
            pooled[b] = seg[k, np.arange(WIDTH)]
        logits = self._seq("head", pooled, mode, t("head"), update_stats)
        probs = _softmax(logits)
        if keep_tape:
            tape["_meta"] = (n, total, arg, norm, active, gidx)
        return probs, tape

    def backward_batch(self, tape: dict, dlogits: np.ndarray) -> dict:
        grads = {k: np.zeros_like(self.arrays[k]) for k in self.param_names}
        n, total, arg, norm, active, gidx = tape["_meta"]
        dpooled = self._seq_back(tape["head"], dlogits, grads)
        dh = np.zeros((total, WIDTH))
        cols = np.arange(WIDTH)
        for b in range(dpooled.shape[0]):
            np.add.at(dh, (gidx[b], cols), dpooled[b])
        if norm is not None:
            for r in reversed(range(self.rounds)):
                du = dh[active]
                dm = self._seq_back(tape[f"msg{r}"], du, grads)
                dh = dh + norm.T @ dm
        dz = self._seq_back(tape["enc_zone"], dh, grads)
        self._seq_back(tape["enc_pt"], K.point_unpool(dz, arg, n), grads, need_input_grad=False)
        return grads

    # ---- canonical single-graph inference

    def encode_zone(self, feats: np.ndarray) -> np.ndarray:
        """(n, 10) point features of one zone to its (128,) vector."""
        y = self._seq("enc_pt", feats, "canon", None, False)
        return self._seq("enc_zone", y.max(axis=0, keepdims=True), "canon", None, False)[0]

    def graph_prob(self, h: np.ndarray, nbrs: Sequence, nbr_w: Optional[Sequence] = None) -> float:
        """Probability of the "good" class from encoded zones (Z, 128).

        ``nbrs[i]`` lists the neighbours of zone i. Neighbour sums are taken
        over per-column sorted values so they do not depend on zone order.
        """
        active = [i for i, nb in enumerate(nbrs) if len(nb)]
        if active:
            maxdeg = max(len(nbrs[i]) for i in active)
            idx = np.zeros((len(active), maxdeg), dtype=np.int64)
            wts = np.zeros((len(active), maxdeg))
            for r, i in enumerate(active):
                idx[r, :len(nbrs[i])] = nbrs[i]
                wts[r, :len(nbrs[i])] = nbr_w[i] if (self.edge_weighting and nbr_w is not None) else 1.0
            denom = wts.sum(axis=1, keepdims=True)
            pad = (wts == 0)[:, :, None]
        for r in range(self.rounds):
            if not active:
                break
            vals = np.sort(np.where(pad, 0.0, h[idx] * wts[:, :, None]), axis=1)
            m = vals.sum(axis=1) / denom
            u = self._seq(f"msg{r}", m, "canon", None, False)
            h = h.copy()
            h[active] += u
        pooled = h.max(axis=0, keepdims=True)
        logits = self._seq("head", pooled, "canon", None, False)
        return float(_softmax(logits)[0, 1])


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def neighbour_lists(geom: ZoneGeometry, nz: int):
    nbrs = [[] for _ in range(nz)]
    wts = [[] for _ in range(nz)]
    for (a, b), w in zip(geom.edges.tolist(), geom.edge_w.tolist()):
        nbrs[a].append(b)
        wts[a].append(w)
        nbrs[b].append(a)
        wts[b].append(w)
    return nbrs, wts
