"""Compare the numba and numpy kernels, plus end-to-end proposal generation and training steps.

Usage::

    python benchmarks/bench_kernels.py [--repeat 200]

The end-to-end parts run in two subprocesses, one with
ZONEGRAPH_DISABLE_NUMBA=1, so each sees a single backend.
"""
import argparse
import os
import subprocess
import sys
import time

import numpy as np

from zonegraph import _kernels as K
from zonegraph.guidance import _nn_kernels as NK


def _random_graph(rng, n, deg=4):
    nbrs = [set() for _ in range(n)]
    for u in range(n):
        for v in rng.integers(0, n, size=deg // 2):
            if u != v:
                nbrs[u].add(int(v))
                nbrs[int(v)].add(u)
    indptr = np.zeros(n + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(s) for s in nbrs])
    indices = np.array([v for s in nbrs for v in sorted(s)], dtype=np.int64)
    return indptr, indices


def _time(fn, args, repeat):
    fn(*args)  # warm-up (compiles the numba variant)
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - t0) / repeat


def kernel_table(repeat):
    rng = np.random.default_rng(0)
    rows = []
    for n in (64, 512, 4096):
        indptr, indices = _random_graph(rng, n)
        mask = rng.random(n) < 0.6
        cases = [("label_components", (indptr, indices, mask), K.label_components_numpy,
                  getattr(K, "label_components_numba", None))]
        nz, nf, ns = n // 4, n // 2, 32
        req = rng.random((nz, nf)) < 0.05
        elig = rng.random(nz) < 0.8
        sk = rng.random((ns, nf)) < 0.7
        cases.append(("sweep_cover", (req, elig, sk), K.sweep_cover_numpy, getattr(K, "sweep_cover_numba", None)))
        for name, args, f_np, f_nb in cases:
            t_np = _time(f_np, args, repeat)
            t_nb = _time(f_nb, args, repeat) if f_nb is not None else float("nan")
            if f_nb is not None:
                assert np.array_equal(f_np(*args), f_nb(*args)), name
            rows.append((name, n, t_np, t_nb))
    x = rng.normal(size=(32 * 18 * 64, 128))
    g, b = rng.random(128) + 0.5, rng.normal(size=128)
    y, xh, inv, _, _, mask = NK.bn_act_forward_numpy(x, g, b, 1e-5, 0.01, True)
    dy = rng.normal(size=x.shape)
    nn_cases = [
        ("bn_act_forward", (x, g, b, 1e-5, 0.01, True), NK.bn_act_forward_numpy,
         getattr(NK, "bn_act_forward_numba", None)),
        ("bn_act_backward", (dy, xh, inv, g, mask, 0.01), NK.bn_act_backward_numpy,
         getattr(NK, "bn_act_backward_numba", None)),
        ("point_maxpool", (x, 64), NK.point_maxpool_numpy, getattr(NK, "point_maxpool_numba", None)),
    ]
    reps = max(1, repeat // 20)
    for name, args, f_np, f_nb in nn_cases:
        t_np = _time(f_np, args, reps)
        t_nb = _time(f_nb, args, reps) if f_nb is not None else float("nan")
        rows.append((name, x.shape[0], t_np, t_nb))
    return rows


_E2E = r"""
import time
from zonegraph import _kernels
from zonegraph.synth import generate_program, build_example
from zonegraph.proposals import generate_proposals, Canvas
graphs = [build_example(generate_program(s))[1] for s in range(20)]
for zg in graphs[:2]:
    generate_proposals(zg, Canvas())
t0 = time.perf_counter()
for zg in graphs:
    zg.cache.clear()
    generate_proposals(zg, Canvas(), 2)
print(_kernels.backend(), time.perf_counter() - t0)
"""


_TRAIN = r"""
import time
import numpy as np
from zonegraph import _kernels
from zonegraph.guidance.network import GraphInput, ScorerModel
from zonegraph.guidance.loss import focal_loss_batch
rng = np.random.default_rng(0)
edges = np.array([[i, i + 1] for i in range(17)])
graphs = [GraphInput(rng.random((18, 64, 10)), edges) for _ in range(32)]
labels = np.arange(32) % 2
m = ScorerModel.init(0)
def step():
    p, tape = m.forward_batch(graphs, train=True, update_stats=True, keep_tape=True)
    m.backward_batch(tape, focal_loss_batch(p, labels)[1])
step()
t0 = time.perf_counter()
for _ in range(5):
    step()
print(_kernels.backend(), (time.perf_counter() - t0) / 5)
"""


def end_to_end(script):
    out = []
    for flag in ("0", "1"):
        env = dict(os.environ, ZONEGRAPH_DISABLE_NUMBA=flag)
        res = subprocess.run([sys.executable, "-c", script], env=env, capture_output=True, text=True, check=True)
        backend, secs = res.stdout.split()
        out.append((backend, float(secs)))
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args()
    print(f"{'kernel':<18}{'rows':>6}{'numpy us':>12}{'numba us':>12}{'speedup':>9}")
    for name, n, t_np, t_nb in kernel_table(args.repeat):
        print(f"{name:<18}{n:>6}{t_np * 1e6:>12.1f}{t_nb * 1e6:>12.1f}{t_np / t_nb:>9.1f}")
    print()
    for backend, secs in end_to_end(_E2E):
        print(f"generate_proposals (20 models, level 2, cold cache) [{backend}]: {secs:.3f} s")
    for backend, secs in end_to_end(_TRAIN):
        print(f"training step (32 graphs x 18 zones x 64 points) [{backend}]: {secs:.3f} s")


if __name__ == "__main__":
    main()
