"""Losses, optimizers and the alternating adversarial training loop."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from mgal.errors import ConfigError, DimensionError, NumericError
from mgal.graphcore import DataSplit, MultiGraphDataset, NormalizedGraph, average_graphs, renormalize
from mgal.model import (
    ModelConfig,
    discriminator_forward,
    generator_forward,
    generator_keys,
    head_forward,
    init_discriminator,
    init_generator,
    init_glorot,
    init_head,
)
from mgal.ndcore import Tape, Var, log, make_rng, mul, row_select, scale, sub, sum_all

MODES = ("mgal", "mgl", "multi")


@dataclass
class TrainConfig:
    epochs: int = 500
    gen_lr: float = 0.005
    disc_lr: float = 0.01
    patience: int = 50
    lam: float = 1.0
    disc_steps: int = 1
    non_saturating: bool = False
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.gen_lr <= 0:
            raise ConfigError("generator learning rate must be > 0")
        if self.disc_lr < 0:
            # 0 is allowed: it freezes the discriminator for ablation runs
            raise ConfigError("discriminator learning rate must be >= 0")
        if self.patience < 1:
            raise ConfigError("patience must be >= 1")
        if self.lam < 0:
            raise ConfigError("adversarial weight must be >= 0")
        if self.disc_steps < 0:
            raise ConfigError("discriminator steps must be >= 0")


# --- losses -------------------------------------------------------------------

def adversarial_loss(disc_outputs: Sequence[Var]) -> Var:
    """Cross-view discrimination objective (always <= 0).

    ``disc_outputs[v]`` holds D(Z^(v)), one probability row per node. The
    expectation over nodes is the mean over all n rows.
    """
    m = len(disc_outputs)
    if m < 2:
        raise ConfigError("adversarial loss needs at least two views")
    total = None
    for v, D in enumerate(disc_outputs):
        n, width = D.shape
        if width != m:
            raise DimensionError(f"view {v}: discriminator has {width} outputs for {m} views")
        own = np.zeros((1, m))
        own[0, v] = 1.0
        term = scale(sum_all(mul(log(D), own)), 1.0 / n)
        term = term + scale(sum_all(mul(log(sub(1.0, D)), 1.0 - own)), 1.0 / (n * (m - 1)))
        total = term if total is None else total + term
    return scale(total, 1.0 / m)


def non_saturating_loss(disc_outputs: Sequence[Var]) -> Var:
    """Generator-side alternative: minus the mean log-probability the
    discriminator assigns to the wrong views."""
    m = len(disc_outputs)
    if m < 2:
        raise ConfigError("adversarial loss needs at least two views")
    total = None
    for v, D in enumerate(disc_outputs):
        other = np.ones((1, m))
        other[0, v] = 0.0
        term = scale(sum_all(mul(log(D), other)), -1.0 / (D.shape[0] * (m - 1)))
        total = term if total is None else total + term
    return scale(total, 1.0 / m)


def one_hot(labels, c: int) -> np.ndarray:
    return np.eye(c)[np.asarray(labels, dtype=np.int64)]


def semi_loss(U: Var, labels, indices, c: int | None = None) -> Var:
    """-sum_{i in L} sum_j Y_ij log U_ij over the labeled rows."""
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size == 0:
        raise ConfigError("semi-supervised loss needs at least one labeled node")
    c = U.shape[1] if c is None else c
    Y = one_hot(np.asarray(labels)[idx], c)
    return scale(sum_all(mul(row_select(log(U), idx), Y)), -1.0)


def evaluate_accuracy(U, labels, indices) -> float:
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size == 0:
        raise ConfigError("accuracy over an empty index set")
    U = U.value if isinstance(U, Var) else np.asarray(U)
    # np.argmax returns the first maximum, i.e. ties go to the lowest class
    return float(np.mean(np.argmax(U[idx], axis=1) == np.asarray(labels)[idx]))


# --- optimizers ---------------------------------------------------------------

class SGD:
    def __init__(self, lr: float):
        self.lr = lr

    def step(self, params: dict[str, np.ndarray], grads: Mapping[str, np.ndarray]):
        for k, g in grads.items():
            params[k] = params[k] - self.lr * g


class Adam:
    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: Mapping[str, np.ndarray]):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for k, g in grads.items():
            m = self.m.get(k, np.zeros_like(g))
            v = self.v.get(k, np.zeros_like(g))
            m = b1 * m + (1 - b1) * g
            v = b2 * v + (1 - b2) * g * g
            self.m[k], self.v[k] = m, v
            m_hat = m / (1 - b1 ** self.t)
            v_hat = v / (1 - b2 ** self.t)
            params[k] = params[k] - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


# --- early stopping -----------------------------------------------------------

class EarlyStopping:
    """Stop once the monitored loss has not strictly decreased for
    ``patience`` consecutive epochs; keeps a snapshot of the best state."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best = math.inf
        self.best_epoch = 0
        self.wait = 0
        self.snapshot = None

    def update(self, epoch: int, loss: float, state=None) -> bool:
        if loss < self.best:
            self.best, self.best_epoch, self.wait = loss, epoch, 0
            if state is not None:
                self.snapshot = {k: v.copy() for k, v in state.items()}
        else:
            self.wait += 1
        return self.wait >= self.patience


# --- training -----------------------------------------------------------------

@dataclass
class TrainReport:
    gen_loss: list[float] = field(default_factory=list)
    semi_loss: list[float] = field(default_factory=list)
    disc_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    disc_accuracy: list[float] = field(default_factory=list)
    test_accuracy: float = float("nan")
    stopped_epoch: int = 0
    best_epoch: int = 0
    selected_view: int | None = None
    embeddings: list[np.ndarray] = field(default_factory=list, repr=False)

    def log_lines(self) -> list[str]:
        """One JSON object per epoch; missing values (no discriminator) are null."""
        num = lambda x: None if math.isnan(x) else x
        out = []
        for e in range(self.stopped_epoch):
            out.append(json.dumps({
                "epoch": e + 1,
                "gen_loss": self.gen_loss[e],
                "semi_loss": self.semi_loss[e],
                "disc_loss": num(self.disc_loss[e]),
                "val_loss": self.val_loss[e],
                "disc_accuracy": num(self.disc_accuracy[e]),
            }, allow_nan=False))
        return out


class Trainer:
    """Holds the fixed inputs of one run and performs the individual steps.

    ``mode``: ``mgal`` trains generator + head against the discriminator,
    ``mgl`` drops the discriminator entirely, ``multi`` uses a separate
    head per view on shared generator weights (the Multi-GCN baseline).
    """

    def __init__(self, dataset: MultiGraphDataset, split: DataSplit, model_cfg: ModelConfig,
                 train_cfg: TrainConfig, mode: str = "mgal", params: dict[str, np.ndarray] | None = None):
        if mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
        if mode == "mgal" and dataset.m < 2:
            raise ConfigError("adversarial training needs at least two views")
        self.ds, self.split, self.mcfg, self.tcfg, self.mode = dataset, split, model_cfg, train_cfg, mode
        self.graphs: list[NormalizedGraph] = [renormalize(a) for a in dataset.views]
        self.avg_graph = renormalize(average_graphs(dataset.views)) if model_cfg.head == "gconv" else None
        self.params = params if params is not None else self.init_params()
        self.gen_keys = generator_keys(self.params)
        self.disc_keys = sorted(k for k in self.params if k.startswith("disc."))
        self.head_keys = sorted(k for k in self.params if k.startswith("head."))
        self.gen_opt = Adam(train_cfg.gen_lr)
        self.disc_opt = SGD(train_cfg.disc_lr)
        self.dropout_rng = make_rng(train_cfg.seed, "dropout")
        self._Z_cache: list[np.ndarray] | None = None

    def init_params(self) -> dict[str, np.ndarray]:
        ds, cfg, seed = self.ds, self.mcfg, self.tcfg.seed
        params = init_generator(cfg, ds.d, seed)
        if self.mode == "multi":
            rng = make_rng(seed, "init-head")
            for v in range(ds.m):
                params[f"head.W.{v}"] = init_glorot((cfg.rep_dim, ds.c), rng)
        else:
            params.update(init_head(cfg, ds.m, ds.c, seed))
        if self.mode == "mgal":
            params.update(init_discriminator(cfg, ds.m, seed))
        return params

    # forward helpers

    def _representations(self, tape: Tape, gen: Sequence[Var], dropout: bool) -> list[Var]:
        x = tape.const(self.ds.X)
        rate = self.mcfg.dropout if dropout else 0.0
        return [generator_forward(x, g, gen, final_activation=self.mcfg.final_activation,
                                  dropout=rate, rng=self.dropout_rng if rate > 0 else None)
                for g in self.graphs]

    def _predictions(self, Z_list: Sequence[Var], pv: Mapping[str, Var]) -> list[Var]:
        if self.mode == "multi":
            return [head_forward(self.mcfg, [Z], pv[f"head.W.{v}"], self.avg_graph) for v, Z in enumerate(Z_list)]
        return [head_forward(self.mcfg, Z_list, pv["head.W"], self.avg_graph)]

    def _semi(self, preds: Sequence[Var], idx) -> Var:
        total = None
        for U in preds:
            l = semi_loss(U, self.ds.labels, idx, self.ds.c)
            total = l if total is None else total + l
        return total

    def representations(self) -> list[np.ndarray]:
        tape = Tape()
        gen = [tape.const(self.params[k]) for k in self.gen_keys]
        return [z.value for z in self._representations(tape, gen, dropout=False)]

    def predictions(self) -> list[np.ndarray]:
        tape = Tape()
        gen = [tape.const(self.params[k]) for k in self.gen_keys]
        pv = {k: tape.const(self.params[k]) for k in self.head_keys}
        return [u.value for u in self._predictions(self._representations(tape, gen, False), pv)]

    # steps

    def discriminator_step(self) -> tuple[float, float]:
        """One ascent step on the adversarial objective; returns (objective, accuracy)."""
        tape = Tape()
        Zs = self._Z_cache if self._Z_cache is not None else self.representations()
        dv = {k: tape.var(self.params[k]) for k in self.disc_keys}
        outs = [discriminator_forward(tape.const(z), dv) for z in Zs]
        L = adversarial_loss(outs)
        tape.backward(scale(L, -1.0))
        self.disc_opt.step(self.params, {k: v.grad for k, v in dv.items()})
        acc = float(np.mean([np.mean(np.argmax(D.value, axis=1) == v) for v, D in enumerate(outs)]))
        return float(L.value[0, 0]), acc

    def generator_step(self) -> tuple[float, float]:
        """One Adam step on generator + head; returns (total objective, semi loss)."""
        tape = Tape()
        gen = [tape.var(self.params[k]) for k in self.gen_keys]
        pv = {k: tape.var(self.params[k]) for k in self.head_keys}
        Z_list = self._representations(tape, gen, dropout=True)
        semi = self._semi(self._predictions(Z_list, pv), self.split.labeled)
        total = semi
        lam = self.tcfg.lam
        if self.mode == "mgal" and lam > 0:
            dc = {k: tape.const(self.params[k]) for k in self.disc_keys}
            outs = [discriminator_forward(Z, dc) for Z in Z_list]
            adv = non_saturating_loss(outs) if self.tcfg.non_saturating else adversarial_loss(outs)
            total = total + scale(adv, lam)
        if self.mcfg.weight_decay > 0:
            for w in gen:
                total = total + scale(sum_all(mul(w, w)), self.mcfg.weight_decay)
        tape.backward(total)
        grads = {k: v.grad for k, v in zip(self.gen_keys, gen)}
        grads.update({k: v.grad for k, v in pv.items()})
        self.gen_opt.step(self.params, grads)
        self._Z_cache = None
        return float(total.value[0, 0]), float(semi.value[0, 0])

    def validation_loss(self) -> float:
        tape = Tape()
        gen = [tape.const(self.params[k]) for k in self.gen_keys]
        pv = {k: tape.const(self.params[k]) for k in self.head_keys}
        Z_list = self._representations(tape, gen, dropout=False)
        self._Z_cache = [z.value for z in Z_list]
        idx = self.split.validation if self.split.validation.size else self.split.labeled
        return float(self._semi(self._predictions(Z_list, pv), idx).value[0, 0])

    def per_view_training_loss(self) -> list[float]:
        tape = Tape()
        gen = [tape.const(self.params[k]) for k in self.gen_keys]
        pv = {k: tape.const(self.params[k]) for k in self.head_keys}
        preds = self._predictions(self._representations(tape, gen, False), pv)
        return [float(semi_loss(U, self.ds.labels, self.split.labeled, self.ds.c).value[0, 0]) for U in preds]

    def fit(self, log=None) -> TrainReport:
        report = TrainReport()
        stopper = EarlyStopping(self.tcfg.patience)
        for epoch in range(1, self.tcfg.epochs + 1):
            try:
                d_loss, d_acc = float("nan"), float("nan")
                if self.mode == "mgal":
                    for _ in range(self.tcfg.disc_steps):
                        d_loss, d_acc = self.discriminator_step()
                g_loss, s_loss = self.generator_step()
                val = self.validation_loss()
            except NumericError as exc:
                raise NumericError(f"epoch {epoch}: {exc}") from exc
            report.gen_loss.append(g_loss)
            report.semi_loss.append(s_loss)
            report.disc_loss.append(d_loss)
            report.val_loss.append(val)
            report.disc_accuracy.append(d_acc)
            report.stopped_epoch = epoch
            if log is not None:
                log(report.log_lines()[-1])
            if stopper.update(epoch, val, self.params):
                break
        if stopper.snapshot is not None:
            self.params = stopper.snapshot
        report.best_epoch = stopper.best_epoch
        preds = self.predictions()
        if self.mode == "multi":
            losses = self.per_view_training_loss()
            report.selected_view = int(np.argmin(losses))
            U = preds[report.selected_view]
        else:
            U = preds[0]
        report.test_accuracy = evaluate_accuracy(U, self.ds.labels, self.split.test)
        report.embeddings = self.representations()
        return report


def train(dataset: MultiGraphDataset, split: DataSplit, model_cfg: ModelConfig, train_cfg: TrainConfig,
          mode: str = "mgal", log=None) -> tuple[TrainReport, dict[str, np.ndarray]]:
    trainer = Trainer(dataset, split, model_cfg, train_cfg, mode)
    report = trainer.fit(log=log)
    return report, trainer.params
