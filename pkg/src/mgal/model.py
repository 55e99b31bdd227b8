"""Shared-weight GCN generator, view discriminator and label heads.

Parameters live in a flat ``dict[str, np.ndarray]``:

* ``gen.{l}``   generator layer weights (one set for every view)
* ``disc.W{i}`` / ``disc.b{i}``  discriminator MLP
* ``head.W``    label head over the concatenated representation
* ``head.W.{v}``  per-view heads (only for the Multi-GCN baseline)
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from mgal.errors import ConfigError, DimensionError, ValidationError
from mgal.graphcore import NormalizedGraph
from mgal.ndcore import (
    Tape,
    Var,
    add,
    concat_cols,
    make_rng,
    matmul,
    mul,
    relu,
    softmax_rows,
    spmm,
)

HEADS = ("fc", "gconv")


@dataclass
class ModelConfig:
    gen_hidden: tuple[int, ...] = (64, 16)
    disc_hidden: tuple[int, ...] = (64, 16)
    head: str = "fc"
    final_activation: bool = False
    dropout: float = 0.0
    weight_decay: float = 0.0

    def __post_init__(self):
        self.gen_hidden = tuple(int(h) for h in self.gen_hidden)
        self.disc_hidden = tuple(int(h) for h in self.disc_hidden)
        self.validate()

    def validate(self):
        if not self.gen_hidden or min(self.gen_hidden) < 1:
            raise ConfigError(f"generator sizes must be >= 1, got {self.gen_hidden}")
        if self.disc_hidden and min(self.disc_hidden) < 1:
            raise ConfigError(f"discriminator sizes must be >= 1, got {self.disc_hidden}")
        if self.head not in HEADS:
            raise ConfigError(f"head must be one of {HEADS}, got {self.head!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.weight_decay < 0:
            raise ConfigError("weight decay must be >= 0")

    @property
    def rep_dim(self) -> int:
        return self.gen_hidden[-1]


def init_glorot(shape: tuple[int, int], rng: np.random.Generator) -> np.ndarray:
    fan_in, fan_out = shape
    if fan_in < 1 or fan_out < 1:
        raise ValidationError(f"glorot init needs positive dimensions, got {shape}")
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


def init_generator(cfg: ModelConfig, d: int, seed: int) -> dict[str, np.ndarray]:
    rng = make_rng(seed, "init-generator")
    dims = (d, *cfg.gen_hidden)
    return {f"gen.{l}": init_glorot((dims[l], dims[l + 1]), rng) for l in range(len(dims) - 1)}


def init_discriminator(cfg: ModelConfig, m: int, seed: int) -> dict[str, np.ndarray]:
    rng = make_rng(seed, "init-discriminator")
    dims = (cfg.rep_dim, *cfg.disc_hidden, m)
    out = {}
    for i in range(len(dims) - 1):
        out[f"disc.W{i}"] = init_glorot((dims[i], dims[i + 1]), rng)
        out[f"disc.b{i}"] = np.zeros((1, dims[i + 1]))
    return out


def init_head(cfg: ModelConfig, m: int, c: int, seed: int) -> dict[str, np.ndarray]:
    return {"head.W": init_glorot((m * cfg.rep_dim, c), make_rng(seed, "init-head"))}


def init_params(cfg: ModelConfig, d: int, m: int, c: int, seed: int) -> dict[str, np.ndarray]:
    """All MGAL parameters. Each block draws from its own stream, so e.g.
    the generator init does not depend on ``m``."""
    return {**init_generator(cfg, d, seed), **init_discriminator(cfg, m, seed), **init_head(cfg, m, c, seed)}


def generator_keys(params: Mapping) -> list[str]:
    return sorted((k for k in params if k.startswith("gen.")), key=lambda k: int(k.split(".")[1]))


def disc_depth(params: Mapping) -> int:
    return sum(1 for k in params if k.startswith("disc.W"))


def _dropout(h: Var, rate: float, rng: np.random.Generator | None) -> Var:
    if rate <= 0 or rng is None:
        return h
    mask = (rng.random(h.shape) >= rate) / (1.0 - rate)
    return mul(h, h.tape.const(mask))


def generator_forward(X: Var, graph: NormalizedGraph, weights: Sequence[Var], *,
                      final_activation: bool = False, dropout: float = 0.0,
                      rng: np.random.Generator | None = None) -> Var:
    """H_{l+1} = act(S H_l Theta_l); relu on hidden layers, last layer linear
    unless ``final_activation``."""
    if X.shape[0] != graph.n:
        raise DimensionError(f"features have {X.shape[0]} rows but graph has {graph.n} nodes")
    h = X
    for l, w in enumerate(weights):
        if h.shape[1] != w.shape[0]:
            raise DimensionError(f"layer {l}: input width {h.shape[1]} vs weight {w.shape}")
        h = _dropout(h, dropout, rng)
        # multiply on the narrower side first
        if w.shape[0] <= w.shape[1]:
            h = matmul(spmm(graph.S, h), w)
        else:
            h = spmm(graph.S, matmul(h, w))
        if l < len(weights) - 1 or final_activation:
            h = relu(h)
    return h


def discriminator_forward(Z: Var, params: Mapping[str, Var]) -> Var:
    """Per-node view-origin probabilities (rows sum to one)."""
    depth = disc_depth(params)
    h = Z
    if h.shape[1] != params["disc.W0"].shape[0]:
        raise DimensionError(f"discriminator expects width {params['disc.W0'].shape[0]}, got {h.shape[1]}")
    for i in range(depth):
        h = add(matmul(h, params[f"disc.W{i}"]), params[f"disc.b{i}"])
        if i < depth - 1:
            h = relu(h)
    return softmax_rows(h)


def head_forward_fc(Z_list: Sequence[Var], W: Var) -> Var:
    Z = concat_cols(list(Z_list))
    if Z.shape[1] != W.shape[0]:
        raise DimensionError(f"head weight {W.shape} does not match representation width {Z.shape[1]}")
    return softmax_rows(matmul(Z, W))


def head_forward_gconv(Z_list: Sequence[Var], W: Var, graph: NormalizedGraph) -> Var:
    """softmax(S_bar Z W) with S_bar the renormalized averaged graph."""
    Z = concat_cols(list(Z_list))
    if Z.shape[1] != W.shape[0]:
        raise DimensionError(f"head weight {W.shape} does not match representation width {Z.shape[1]}")
    return softmax_rows(spmm(graph.S, matmul(Z, W)))


def head_forward(cfg: ModelConfig, Z_list: Sequence[Var], W: Var, avg_graph: NormalizedGraph | None) -> Var:
    if cfg.head == "fc":
        return head_forward_fc(Z_list, W)
    if avg_graph is None:
        raise ConfigError("graph-conv head needs the averaged graph")
    return head_forward_gconv(Z_list, W, avg_graph)


def embed(params: Mapping[str, np.ndarray], X: np.ndarray, graphs: Sequence[NormalizedGraph],
          cfg: ModelConfig | None = None) -> list[np.ndarray]:
    """Per-view representations Z^(v) as plain arrays (no dropout)."""
    final_activation = cfg.final_activation if cfg is not None else False
    tape = Tape()
    x = tape.const(X)
    ws = [tape.const(params[k]) for k in generator_keys(params)]
    return [generator_forward(x, g, ws, final_activation=final_activation).value for g in graphs]


# --- checkpoints ----------------------------------------------------------------

def save_params(path, params: Mapping[str, np.ndarray], meta: Mapping[str, str] | None = None):
    """Write parameters as ``.npz``: name -> row-major float64 array."""
    arrays = {k: np.ascontiguousarray(v, dtype=np.float64) for k, v in params.items()}
    for k, v in (meta or {}).items():
        arrays[f"meta.{k}"] = np.array(str(v))
    path = Path(path)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_params(path) -> tuple[dict[str, np.ndarray], dict[str, str]]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    with np.load(path, allow_pickle=False) as z:
        params = {k: z[k] for k in z.files if not k.startswith("meta.")}
        meta = {k[5:]: str(z[k]) for k in z.files if k.startswith("meta.")}
    return params, meta
