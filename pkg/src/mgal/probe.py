"""View-origin probe: how well can a fresh MLP tell which graph an
embedding row came from?"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from mgal.errors import ConfigError
from mgal.model import ModelConfig, discriminator_forward, init_discriminator
from mgal.ndcore import Tape, make_rng, row_select
from mgal.training import Adam, semi_loss


def probe_alignment(embeddings: Sequence[np.ndarray], rng: np.random.Generator, *,
                    hidden: tuple[int, ...] = (64, 16), epochs: int = 200, lr: float = 0.01,
                    train_fraction: float = 0.5, standardize: bool = True) -> float:
    """Held-out accuracy of a view classifier trained on the embeddings.

    Nodes (not rows) are split into train/held-out so that no node's
    representation is seen in training under any view. Columns are
    standardized over the pooled rows first. Chance is ``1/m``.
    """
    m = len(embeddings)
    if m < 2:
        raise ConfigError("probe needs at least two views")
    n, k = embeddings[0].shape
    pooled = np.concatenate(embeddings, axis=0)
    mu, sd = pooled.mean(axis=0), pooled.std(axis=0)
    if standardize:
        pooled = (pooled - mu) / np.where(sd > 0, sd, 1.0)
    view_of_row = np.repeat(np.arange(m), n)

    perm = rng.permutation(n)
    n_train = max(1, min(n - 1, int(round(train_fraction * n))))
    rows = lambda nodes: (np.arange(m)[:, None] * n + nodes[None, :]).reshape(-1)
    train_rows, test_rows = rows(np.sort(perm[:n_train])), rows(np.sort(perm[n_train:]))

    seed = int(rng.integers(2**63))
    params = init_discriminator(ModelConfig(gen_hidden=(k,), disc_hidden=hidden), m, seed)
    opt = Adam(lr)
    for _ in range(epochs):
        tape = Tape()
        pv = {name: tape.var(p) for name, p in params.items()}
        out = discriminator_forward(row_select(tape.const(pooled), train_rows), pv)
        loss = semi_loss(out, view_of_row[train_rows], np.arange(train_rows.size), m)
        tape.backward(loss * (1.0 / train_rows.size))
        opt.step(params, {name: v.grad for name, v in pv.items()})
    tape = Tape()
    pv = {name: tape.const(p) for name, p in params.items()}
    pred = discriminator_forward(tape.const(pooled[test_rows]), pv).value
    return float(np.mean(np.argmax(pred, axis=1) == view_of_row[test_rows]))
