"""Deterministic single-threaded training of the scorer."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..errors import EmptyEffectiveDataset
from .labeling import Label, TrainingExample
from .loss import focal_loss_batch
from .network import GraphInput, ScorerModel

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class HyperParams:
    gamma: float = 2.0
    lr: float = 1e-3
    steps: int = 2000
    batch_size: int = 32
    val_fraction: float = 0.1
    eval_every: int = 100
    rounds: int = 3
    edge_weighting: bool = False
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    lr_schedule: str = "constant"  # or "cosine": decays to zero at the last step


class Adam:
    def __init__(self, params: dict, names: Sequence[str], lr: float, b1: float, b2: float, eps: float):
        self.params, self.names = params, list(names)
        self.lr, self.b1, self.b2, self.eps = lr, b1, b2, eps
        self.m = {k: np.zeros_like(params[k]) for k in self.names}
        self.v = {k: np.zeros_like(params[k]) for k in self.names}
        self.t = 0

    def step(self, grads: dict) -> None:
        self.t += 1
        c1 = 1 - self.b1**self.t
        c2 = 1 - self.b2**self.t
        for k in self.names:
            g = grads[k]
            self.m[k] = self.b1 * self.m[k] + (1 - self.b1) * g
            self.v[k] = self.b2 * self.v[k] + (1 - self.b2) * g * g
            self.params[k] = self.params[k] - self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


def _graph(ex: TrainingExample) -> GraphInput:
    return GraphInput(ex.features, ex.geometry.edges, ex.geometry.edge_w)


def batch_loss(model: ScorerModel, examples: Sequence[TrainingExample], gamma: float, train: bool = True, update_stats: bool = False):
    """Mean focal loss, gradients (train mode only)."""
    labels = np.array([int(e.label) for e in examples])
    probs, tape = model.forward_batch([_graph(e) for e in examples], train=train, update_stats=update_stats, keep_tape=train)
    loss, dlogits = focal_loss_batch(probs, labels, gamma)
    grads = model.backward_batch(tape, dlogits) if train else None
    return loss, grads


def eval_loss(model: ScorerModel, examples: Sequence[TrainingExample], gamma: float, chunk: int = 64) -> float:
    total = 0.0
    for i in range(0, len(examples), chunk):
        part = examples[i:i + chunk]
        total += batch_loss(model, part, gamma, train=False)[0] * len(part)
    return total / len(examples)


def split_by_sequence(examples: Sequence[TrainingExample], fraction: float, rng):
    ids = sorted({e.sequence_id for e in examples})
    n_val = int(round(fraction * len(ids))) if len(ids) > 1 else 0
    n_val = min(n_val, len(ids) - 1)
    val_ids = set(rng.permutation(ids)[:n_val].tolist()) if n_val else set()
    train = [e for e in examples if e.sequence_id not in val_ids]
    val = [e for e in examples if e.sequence_id in val_ids]
    return train, val


def train_scorer(dataset: Sequence[TrainingExample], hp: HyperParams = HyperParams(), seed: int = 0, history: Optional[list] = None) -> ScorerModel:
    """Fit on Positive/Negative examples; return the weights with the best validation loss.

    ``history`` (if given) receives one ``(step, train_loss, val_loss or None)`` per step.
    """
    effective = [e for e in dataset if e.label != Label.NEUTRAL]
    if not any(e.label == Label.POSITIVE for e in effective) or not any(e.label == Label.NEGATIVE for e in effective):
        raise EmptyEffectiveDataset("need at least one Positive and one Negative example")
    rng = np.random.default_rng(seed)
    model = ScorerModel.init(int(rng.integers(2**31)), hp.rounds, hp.edge_weighting,
                             hyper={"gamma": hp.gamma, "lr": hp.lr})
    train, val = split_by_sequence(effective, hp.val_fraction, rng)
    if hp.lr_schedule not in ("constant", "cosine"):
        raise ValueError(f"unknown lr_schedule {hp.lr_schedule!r}")
    if len(train) < 2:
        train, val = effective, []
    opt = Adam(model.arrays, model.param_names, hp.lr, hp.beta1, hp.beta2, hp.eps)
    bs = max(2, min(hp.batch_size, len(train)))
    best, best_val = None, math.inf
    order, pos = rng.permutation(len(train)), 0
    for step in range(1, hp.steps + 1):
        if pos + bs > len(order):
            order, pos = rng.permutation(len(train)), 0
        batch = [train[i] for i in order[pos:pos + bs]]
        pos += bs
        loss, grads = batch_loss(model, batch, hp.gamma, train=True, update_stats=True)
        if hp.lr_schedule == "cosine":
            opt.lr = 0.5 * hp.lr * (1 + math.cos(math.pi * (step - 1) / hp.steps))
        opt.step(grads)
        vloss = None
        if val and (step % hp.eval_every == 0 or step == hp.steps):
            vloss = eval_loss(model, val, hp.gamma)
            if vloss < best_val:
                best_val, best = vloss, model.copy()
            log.info("step %d train %.5f val %.5f", step, loss, vloss)
        if history is not None:
            history.append((step, loss, vloss))
    out = best if best is not None else model
    out.hyper.update({"gamma": hp.gamma, "lr": hp.lr, "val_loss": None if best is None else best_val})
    return out
