"""SGD-with-momentum training of the edge model on sampled subgraphs."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .core import SampleSpec
from .errors import DivergedLoss, LengthMismatch, ShapeMismatch
from .gcn import loss_and_grads
from .knn import KnnConfig
from .sampler import build_cluster_index, edge_label_batch, make_subgraph, sample_subgraph

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 1000
    lr: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 1e-5
    # "sgd" (momentum) or "adam"; adam reuses ``momentum`` as beta1
    optimizer: str = "sgd"
    # ("step", factor, every) or None; every=None means halfway
    lr_schedule: tuple | None = ("step", 0.1, None)
    seed: int = 0
    # None trains on the whole graph every step
    sample_spec: SampleSpec | None = field(default_factory=SampleSpec)
    knn_cfg: KnnConfig = field(default_factory=KnnConfig)

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.lr < 0:
            raise ValueError("lr must be >= 0")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be >= 0")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError("optimizer must be 'sgd' or 'adam'")


def learning_rate(cfg, step):
    if cfg.lr_schedule is None:
        return cfg.lr
    kind, factor, every = cfg.lr_schedule
    if kind != "step":
        raise ValueError(f"unknown schedule {kind!r}")
    every = every or max(cfg.iterations // 2, 1)
    return cfg.lr * factor ** (step // every)


def step_seed(cfg, step):
    """Independent sampling seed for one step, fixed by (cfg.seed, step)."""
    base = cfg.sample_spec.seed if cfg.sample_spec is not None else 0
    ss = np.random.SeedSequence([cfg.seed, base, step])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


class _Optimizer:
    """In-place parameter updates; weight decay is added to the gradient."""

    BETA2 = 0.999
    EPS = 1e-8

    def __init__(self, cfg, params):
        self.cfg = cfg
        self.params = params
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params] if cfg.optimizer == "adam" else None
        self.t = 0

    def step(self, grads, lr):
        cfg = self.cfg
        self.t += 1
        for i, (p, g) in enumerate(zip(self.params, grads)):
            g = g + cfg.weight_decay * p
            m = self.m[i]
            if self.v is None:
                m *= cfg.momentum
                m += g
                p -= lr * m
                continue
            b1 = cfg.momentum
            m *= b1
            m += (1.0 - b1) * g
            v = self.v[i]
            v *= self.BETA2
            v += (1.0 - self.BETA2) * g * g
            m_hat = m / (1.0 - b1**self.t)
            v_hat = v / (1.0 - self.BETA2**self.t)
            p -= lr * m_hat / (np.sqrt(v_hat) + self.EPS)


def train(fs, gt, model, cfg, on_step=None):
    """Run ``cfg.iterations`` updates; returns ``(model, losses)``.

    The input model is not modified. Raises :class:`DivergedLoss` carrying
    the last finite-loss model if the loss stops being finite.
    """
    if fs.d != model.in_dim:
        raise ShapeMismatch(f"model expects width {model.in_dim}, features have {fs.d}")
    if len(gt.labels) != fs.n:
        raise LengthMismatch(f"{fs.n} features but {len(gt.labels)} labels")
    model = model.copy()
    params = model.params()
    opt = _Optimizer(cfg, params)
    idx = build_cluster_index(fs, gt)
    whole = None
    if cfg.sample_spec is None:
        whole = make_subgraph(np.arange(fs.n), idx, fs, cfg.knn_cfg, gt)
        whole_batch = edge_label_batch(whole)
    losses = []
    last_good = model.copy()
    for step in range(cfg.iterations):
        if whole is None:
            spec = replace(cfg.sample_spec, seed=step_seed(cfg, step))
            sub = sample_subgraph(idx, fs, spec, cfg.knn_cfg, gt)
            batch = edge_label_batch(sub)
        else:
            sub, batch = whole, whole_batch
        loss, grads = loss_and_grads(model, sub.graph, sub.features, batch)
        if not np.isfinite(loss) or not all(np.isfinite(g).all() for g in grads):
            raise DivergedLoss(step, last_good)
        last_good = model.copy()
        opt.step(grads, learning_rate(cfg, step))
        losses.append(loss)
        if on_step is not None:
            on_step(step, loss, sub)
        log.debug("step %d nodes %d edges %d loss %.6f", step, sub.n, len(batch), loss)
    if not all(np.isfinite(p).all() for p in params):
        raise DivergedLoss(cfg.iterations, last_good)
    return model, losses

