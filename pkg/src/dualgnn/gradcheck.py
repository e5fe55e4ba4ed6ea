"""Central finite-difference verification of analytic gradients."""

from __future__ import annotations

from typing import Callable, Iterable

import numpy as np

from .autodiff import Tensor

__all__ = ["gradient_check"]


def gradient_check(fn: Callable[[], Tensor], tensors: Iterable[Tensor], h: float = 1e-6) -> float:
    """Max relative error between analytic and numeric gradients.

    ``fn`` must rebuild the scalar loss from ``tensors`` on every call and be
    a pure function of them (fix any internal randomness). Relative error is
    ``|a - n| / max(|a|, |n|, 1e-8)`` per entry; run in 64-bit.
    """
    tensors = list(tensors)
    for t in tensors:
        t.requires_grad = True
        t.zero_grad()
    loss = fn()
    loss.backward()
    analytic = [np.zeros_like(t.value) if t.grad is None else t.grad.copy() for t in tensors]

    worst = 0.0
    for t, a in zip(tensors, analytic):
        flat = t.value.reshape(-1)
        a_flat = a.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = float(fn().value)
            flat[i] = orig - h
            down = float(fn().value)
            flat[i] = orig
            numeric = (up - down) / (2.0 * h)
            denom = max(abs(a_flat[i]), abs(numeric), 1e-8)
            worst = max(worst, abs(a_flat[i] - numeric) / denom)
    return worst
