"""Reverse-mode autodiff over dense float64 matrices.

Only the operations the GCN / discriminator / head stack needs are
provided. Every value on the tape is a 2-D ``np.ndarray``; scalars are
1x1 matrices. Sparse matrices enter as constants through :func:`spmm`.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from mgal.errors import DimensionError, NumericError
from mgal.ndcore.sparse import SparseMatrix, csr_matmul

LOG_FLOOR = 1e-12


class Var:
    """Handle to a value recorded on a :class:`Tape`."""

    __slots__ = ("tape", "id")

    def __init__(self, tape: "Tape", id: int):
        self.tape = tape
        self.id = id

    @property
    def value(self) -> np.ndarray:
        return self.tape.values[self.id]

    @property
    def shape(self) -> tuple[int, int]:
        return self.value.shape

    @property
    def grad(self) -> np.ndarray:
        return self.tape.grad(self)

    def __repr__(self):
        return f"Var(id={self.id}, shape={self.shape})"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        if np.isscalar(other):
            return scale(self, float(other))
        return mul(self, other)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        if isinstance(other, SparseMatrix):
            raise TypeError("use spmm(sparse, dense) for sparse products")
        return matmul(self, other)


class Tape:
    """Topologically ordered record of forward computations.

    Leaves are created with :meth:`var` (trainable, gradient wanted) or
    :meth:`const` (no gradient). Nodes are appended in execution order,
    so the node list is a valid topological order by construction.
    """

    def __init__(self):
        self.values: list[np.ndarray] = []
        self.needs_grad: list[bool] = []
        self.nodes: list[tuple[str, tuple[int, ...], Callable | None]] = []
        self.kinks: list[np.ndarray] = []
        self._grads: dict[int, np.ndarray] | None = None

    def _push(self, value: np.ndarray, op: str, inputs: tuple[int, ...], backward_fn, needs_grad: bool) -> Var:
        if not np.all(np.isfinite(value)):
            raise NumericError(f"non-finite value produced by {op}")
        self.values.append(value)
        self.needs_grad.append(needs_grad)
        self.nodes.append((op, inputs, backward_fn if needs_grad else None))
        return Var(self, len(self.values) - 1)

    def var(self, value) -> Var:
        return self._push(_as_matrix(value).copy(), "leaf", (), None, True)

    def const(self, value) -> Var:
        return self._push(_as_matrix(value), "const", (), None, False)

    def lift(self, x) -> Var:
        if isinstance(x, Var):
            if x.tape is not self:
                raise ValueError("variable belongs to a different tape")
            return x
        return self.const(x)

    def record(self, value, op: str, inputs: Sequence[Var], backward_fn) -> Var:
        """Append a node. ``backward_fn(g)`` returns one gradient (or None) per input."""
        ids = tuple(v.id for v in inputs)
        needs = any(self.needs_grad[i] for i in ids)
        return self._push(value, op, ids, backward_fn, needs)

    def backward(self, loss: Var) -> dict[int, np.ndarray]:
        """Gradients of a 1x1 ``loss`` for every reachable trainable value.

        Accumulators are rebuilt on every call, so repeated calls give
        identical results.
        """
        if loss.tape is not self:
            raise ValueError("loss belongs to a different tape")
        if loss.shape != (1, 1):
            raise DimensionError(f"loss must be 1x1, got {loss.shape}")
        grads: dict[int, np.ndarray] = {loss.id: np.ones((1, 1))}
        for i in range(loss.id, -1, -1):
            g = grads.get(i)
            op, inputs, fn = self.nodes[i]
            if g is None or fn is None:
                continue
            for j, gj in zip(inputs, fn(g)):
                if gj is None or not self.needs_grad[j]:
                    continue
                if j in grads:
                    grads[j] = grads[j] + gj
                else:
                    grads[j] = gj
        for i, v in enumerate(self.values[: loss.id + 1]):
            if self.needs_grad[i] and self.nodes[i][0] == "leaf" and i not in grads:
                grads[i] = np.zeros_like(v)
        self._grads = grads
        return grads

    def grad(self, v: Var) -> np.ndarray:
        if self._grads is None:
            raise RuntimeError("backward has not been run on this tape")
        g = self._grads.get(v.id)
        return np.zeros_like(v.value) if g is None else g


def _as_matrix(x) -> np.ndarray:
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        a = a.reshape(1, -1)
    elif a.ndim != 2:
        raise DimensionError(f"expected at most 2 dimensions, got shape {a.shape}")
    return a


def _tape_of(*xs) -> Tape:
    for x in xs:
        if isinstance(x, Var):
            return x.tape
    raise TypeError("at least one operand must be a Var")


def _unbroadcast(g: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    for axis in (0, 1):
        if shape[axis] == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _check_broadcast(op: str, a: np.ndarray, b: np.ndarray):
    for x, y in zip(a.shape, b.shape):
        if x != y and x != 1 and y != 1:
            raise DimensionError(f"{op}: incompatible shapes {a.shape} and {b.shape}")


def matmul(a: Var, b: Var) -> Var:
    tape = _tape_of(a, b)
    a, b = tape.lift(a), tape.lift(b)
    av, bv = a.value, b.value
    if av.shape[1] != bv.shape[0]:
        raise DimensionError(f"matmul: cannot multiply {av.shape} by {bv.shape}")
    return tape.record(av @ bv, "matmul", (a, b), lambda g: (g @ bv.T, av.T @ g))


def spmm(s: SparseMatrix, b: Var) -> Var:
    """Sparse constant times dense variable; no gradient flows into ``s``."""
    tape = b.tape
    if s.cols != b.shape[0]:
        raise DimensionError(f"spmm: cannot multiply sparse {s.shape} by {b.shape}")
    st = None

    def back(g):
        nonlocal st
        if st is None:
            st = s.transpose()
        return (csr_matmul(st, g),)

    return tape.record(csr_matmul(s, b.value), "spmm", (b,), back)


def relu(a: Var) -> Var:
    x = a.value
    mask = x > 0
    a.tape.kinks.append(mask)
    return a.tape.record(np.where(mask, x, 0.0), "relu", (a,), lambda g: (g * mask,))


def softmax_rows(a: Var) -> Var:
    x = a.value
    e = np.exp(x - x.max(axis=1, keepdims=True))
    p = e / e.sum(axis=1, keepdims=True)

    def back(g):
        return (p * (g - (g * p).sum(axis=1, keepdims=True)),)

    return a.tape.record(p, "softmax_rows", (a,), back)


def concat_cols(parts: Sequence[Var]) -> Var:
    if not parts:
        raise DimensionError("concat_cols needs at least one part")
    tape = parts[0].tape
    rows = {p.shape[0] for p in parts}
    if len(rows) != 1:
        raise DimensionError(f"concat_cols: row counts differ {[p.shape for p in parts]}")
    bounds = np.cumsum([0] + [p.shape[1] for p in parts])

    def back(g):
        return tuple(g[:, bounds[i]:bounds[i + 1]] for i in range(len(parts)))

    return tape.record(np.concatenate([p.value for p in parts], axis=1), "concat_cols", tuple(parts), back)


def row_select(a: Var, indices) -> Var:
    idx = np.asarray(indices, dtype=np.int64).reshape(-1)
    n = a.shape[0]
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise IndexError(f"row_select: index out of range for {n} rows")

    def back(g):
        out = np.zeros_like(a.value)
        np.add.at(out, idx, g)
        return (out,)

    return a.tape.record(a.value[idx], "row_select", (a,), back)


def scale(a: Var, c: float) -> Var:
    return a.tape.record(a.value * c, "scale", (a,), lambda g: (g * c,))


def add(a, b) -> Var:
    tape = _tape_of(a, b)
    a, b = tape.lift(a), tape.lift(b)
    _check_broadcast("add", a.value, b.value)
    sa, sb = a.shape, b.shape
    return tape.record(a.value + b.value, "add", (a, b),
                       lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))


def sub(a, b) -> Var:
    tape = _tape_of(a, b)
    a, b = tape.lift(a), tape.lift(b)
    _check_broadcast("sub", a.value, b.value)
    sa, sb = a.shape, b.shape
    return tape.record(a.value - b.value, "sub", (a, b),
                       lambda g: (_unbroadcast(g, sa), _unbroadcast(-g, sb)))


def mul(a, b) -> Var:
    tape = _tape_of(a, b)
    a, b = tape.lift(a), tape.lift(b)
    av, bv = a.value, b.value
    _check_broadcast("mul", av, bv)
    return tape.record(av * bv, "mul", (a, b),
                       lambda g: (_unbroadcast(g * bv, av.shape), _unbroadcast(g * av, bv.shape)))


def log(a: Var, floor: float = LOG_FLOOR) -> Var:
    """Natural log with the input clamped to ``>= floor``; zero gradient where clamped."""
    x = a.value
    live = x >= floor
    a.tape.kinks.append(live)
    xc = np.maximum(x, floor)
    return a.tape.record(np.log(xc), "log", (a,), lambda g: (np.where(live, g / xc, 0.0),))


def sum_all(a: Var) -> Var:
    shape = a.shape
    return a.tape.record(np.array([[a.value.sum()]]), "sum", (a,),
                         lambda g: (np.full(shape, g[0, 0]),))


def mean_all(a: Var) -> Var:
    shape = a.shape
    size = a.value.size
    return a.tape.record(np.array([[a.value.mean()]]), "mean", (a,),
                         lambda g: (np.full(shape, g[0, 0] / size),))
