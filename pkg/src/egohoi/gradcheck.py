"""Finite-difference verification of analytic gradients."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import Tensor


def grad_check(
    f: Callable[[], Tensor],
    params: Sequence[Tensor],
    eps: float = 1e-6,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    `f` must be a deterministic closure over `params` returning a scalar.
    The relative error per entry is |ga - gn| / max(1e-8, |ga| + |gn|).
    """
    for p in params:
        p.zero_grad()
    out = f()
    out.backward()
    analytic = [p.grad.copy() for p in params]

    worst = 0.0
    for p, ga in zip(params, analytic):
        flat = p.data.reshape(-1)
        for idx in range(flat.size):
            original = flat[idx]
            flat[idx] = original + eps
            f_plus = f().item()
            flat[idx] = original - eps
            f_minus = f().item()
            flat[idx] = original
            gn = (f_plus - f_minus) / (2.0 * eps)
            ga_i = ga.reshape(-1)[idx]
            err = abs(ga_i - gn) / max(1e-8, abs(ga_i) + abs(gn))
            if err > worst:
                worst = err
    return worst


def grad_check_report(
    cases: Sequence[tuple[str, Callable[[], Tensor], Sequence[Tensor]]],
    eps: float = 1e-6,
) -> list[tuple[str, float]]:
    """Run grad_check over named cases; returns (name, max relative error)."""
    return [(name, grad_check(fn, params, eps=eps)) for name, fn, params in cases]
