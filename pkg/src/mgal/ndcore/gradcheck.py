"""Central finite-difference check of tape gradients."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from mgal.errors import NumericError
from mgal.ndcore.tape import Tape, Var

LossFn = Callable[[Tape, Mapping[str, Var]], Var]


@dataclass
class GradCheckReport:
    max_rel_error: float
    checked: int
    skipped: list[tuple[str, tuple[int, int]]] = field(default_factory=list)
    worst: tuple[str, tuple[int, int]] | None = None
    tolerance: float = 1e-5

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance


def _evaluate(f: LossFn, params: Mapping[str, np.ndarray]):
    tape = Tape()
    vars_ = {k: tape.var(v) for k, v in params.items()}
    loss = f(tape, vars_)
    return tape, vars_, loss


def _kink_signature(tape: Tape) -> list[np.ndarray]:
    return [k.copy() for k in tape.kinks]


def _same_kinks(a, b) -> bool:
    return len(a) == len(b) and all(np.array_equal(x, y) for x, y in zip(a, b))


def finite_diff_check(f: LossFn, params: Mapping[str, np.ndarray], step: float = 1e-6,
                      tolerance: float = 1e-5, floor: float = 1e-4) -> GradCheckReport:
    """Compare autodiff gradients of ``f`` with central differences.

    The relative error of an entry is ``|a - n| / max(|a|, |n|, floor)``.
    Entries whose +/- probes flip any relu or log-clamp mask relative to
    the unperturbed evaluation sit on a kink and are reported in
    ``skipped`` instead of being compared.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    params = {k: np.array(v, dtype=np.float64) for k, v in params.items()}
    tape, vars_, loss = _evaluate(f, params)
    tape.backward(loss)
    analytic = {k: tape.grad(v) for k, v in vars_.items()}
    base_kinks = _kink_signature(tape)

    worst_err, worst, checked, skipped = 0.0, None, 0, []
    for name, value in params.items():
        for idx in np.ndindex(*value.shape):
            probes = []
            kinked = False
            for sign in (1.0, -1.0):
                shifted = dict(params)
                p = value.copy()
                p[idx] += sign * step
                shifted[name] = p
                t, _, l = _evaluate(f, shifted)
                val = float(l.value[0, 0])
                if not np.isfinite(val):
                    raise NumericError(f"non-finite loss probing {name}{idx}")
                probes.append(val)
                kinked |= not _same_kinks(base_kinks, _kink_signature(t))
            if kinked:
                skipped.append((name, idx))
                continue
            numeric = (probes[0] - probes[1]) / (2 * step)
            a = analytic[name][idx]
            err = abs(a - numeric) / max(abs(a), abs(numeric), floor)
            checked += 1
            if err > worst_err or worst is None:
                worst_err, worst = err, (name, idx)
    return GradCheckReport(worst_err, checked, skipped, worst, tolerance)
