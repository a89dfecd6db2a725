"""Central-difference gradient check for the scorer network."""
import numpy as np

from zonegraph.guidance.loss import focal_loss_batch
from zonegraph.guidance.network import GraphInput, ScorerModel


def toy_batch(rng, n_graphs=3, n_zones=3, n_points=6):
    """Random graphs on a path of zones; labels alternate."""
    edges = np.array([[i, i + 1] for i in range(n_zones - 1)])
    graphs = [
        GraphInput(rng.random((n_zones, n_points, 10)), edges, rng.random(len(edges)) + 0.5)
        for _ in range(n_graphs)
    ]
    labels = np.arange(n_graphs) % 2
    return graphs, labels


def rel_err(a, b, floor=1e-7):
    big = max(abs(a), abs(b))
    if big < floor:
        # both vanish (e.g. biases feeding batch norm); the absolute gap is float noise
        return abs(a - b)
    return abs(a - b) / big


def _pattern(tape):
    """Every discrete choice made by the forward pass: activation signs and max-pool winners."""
    parts = []
    for k, recs in tape.items():
        if k == "_meta":
            continue
        for rec in recs:
            if rec[0] == "act":
                parts.append(rec[2].ravel())
            elif rec[0] == "bn" and rec[4] is not None:
                parts.append(rec[4].ravel())
    _, _, arg, _, _, gidx = tape["_meta"]
    return np.concatenate(parts + [arg.ravel(), gidx.ravel()]).astype(np.int64)


def check(model: ScorerModel, graphs, labels, gamma=2.0, per_tensor=6, h=1e-5, seed=0):
    """Worst relative error per parameter tensor (sampled entries and one random direction).

    A probe whose +h and -h evaluations make different discrete choices
    straddles a kink of the piecewise-smooth loss, where central differences
    are meaningless; such probes are counted, not compared.

    Returns
    -------
    worst : dict name -> worst relative error
    kinks : number of skipped probes
    """
    rng = np.random.default_rng(seed)

    def probe():
        p, tape = model.forward_batch(graphs, train=True, keep_tape=True)
        return focal_loss_batch(p, labels, gamma)[0], _pattern(tape)

    p, tape = model.forward_batch(graphs, train=True, keep_tape=True)
    _, dl = focal_loss_batch(p, labels, gamma)
    grads = model.backward_batch(tape, dl)
    ref = _pattern(tape)
    worst, kinks = {}, 0

    def compare(lp, pp, lm, pm, analytic):
        nonlocal kinks
        if not (np.array_equal(pp, ref) and np.array_equal(pm, ref)):
            kinks += 1
            return 0.0
        return rel_err((lp - lm) / (2 * h), analytic)

    for name in model.param_names:
        flat = model.arrays[name].reshape(-1)
        g = grads[name].reshape(-1)
        w = 0.0
        for i in rng.choice(flat.size, size=min(per_tensor, flat.size), replace=False):
            old = flat[i]
            flat[i] = old + h
            lp, pp = probe()
            flat[i] = old - h
            lm, pm = probe()
            flat[i] = old
            w = max(w, compare(lp, pp, lm, pm, g[i]))
        d = rng.normal(size=flat.size)
        d /= np.linalg.norm(d)
        base = flat.copy()
        flat[:] = base + h * d
        lp, pp = probe()
        flat[:] = base - h * d
        lm, pm = probe()
        flat[:] = base
        worst[name] = max(w, compare(lp, pp, lm, pm, float(g @ d)))
    return worst, kinks
