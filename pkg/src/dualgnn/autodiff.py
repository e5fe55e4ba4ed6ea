"""Reverse-mode differentiation over dense numpy arrays.

A :class:`Tensor` wraps an ndarray and records the closure that routes its
output gradient back to its parents; ``backward()`` walks the recorded graph
in reverse topological order. The op set is exactly what the models need:
arithmetic, matmul, row softmax, sigmoid, relu, dropout, row gather,
edge-weighted sparse aggregation, and masked cross-entropy.

Gradients accumulate in edge-list order (``np.add.at``), so single-worker
runs are bit-reproducible.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Tensor",
    "ParamStore",
    "constant",
    "gather_rows",
    "row_sum",
    "row_softmax",
    "sigmoid",
    "relu",
    "dropout",
    "hstack",
    "column",
    "spmm",
    "masked_cross_entropy",
    "glorot_init",
]


def _as_float_array(value, dtype=None) -> np.ndarray:
    arr = np.asarray(value)
    if dtype is not None:
        return arr.astype(dtype, copy=False)
    if arr.dtype == np.float32:
        return arr
    return arr.astype(np.float64, copy=False)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` (inverse of numpy broadcasting)."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    """Array node in the differentiation graph."""

    def __init__(self, value, requires_grad: bool = False, dtype=None,
                 _parents: tuple = (), _backward=None):
        self.value = _as_float_array(value, dtype)
        self.requires_grad = bool(requires_grad) or any(p.requires_grad for p in _parents)
        self.grad: np.ndarray | None = None
        self._parents = _parents
        self._backward = _backward

    # -- basic protocol ----------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    @property
    def dtype(self):
        return self.value.dtype

    def __repr__(self) -> str:
        return f"Tensor(shape={self.value.shape}, requires_grad={self.requires_grad})"

    def numpy(self) -> np.ndarray:
        return self.value

    def item(self) -> float:
        return float(self.value)

    def detach(self) -> "Tensor":
        return Tensor(self.value.copy(), requires_grad=False)

    def zero_grad(self) -> None:
        self.grad = None

    def _accumulate(self, grad: np.ndarray) -> None:
        if not self.requires_grad:
            return
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        self.grad += _unbroadcast(grad, self.value.shape)

    def backward(self) -> None:
        """Backpropagate from a scalar output."""
        if self.value.size != 1:
            raise ValueError("backward() requires a scalar output")
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in seen:
                    stack.append((parent, False))
        self.grad = np.ones_like(self.value)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # -- arithmetic --------------------------------------------------------

    def _coerce(self, other) -> "Tensor":
        if isinstance(other, Tensor):
            return other
        return Tensor(np.asarray(other, dtype=self.dtype))

    def __add__(self, other):
        other = self._coerce(other)
        out = Tensor(self.value + other.value, _parents=(self, other))

        def backward(g):
            self._accumulate(g)
            other._accumulate(g)

        out._backward = backward
        return out

    __radd__ = __add__

    def __neg__(self):
        out = Tensor(-self.value, _parents=(self,))
        out._backward = lambda g: self._accumulate(-g)
        return out

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        out = Tensor(self.value * other.value, _parents=(self, other))

        def backward(g):
            self._accumulate(g * other.value)
            other._accumulate(g * self.value)

        out._backward = backward
        return out

    __rmul__ = __mul__

    def __matmul__(self, other):
        other = self._coerce(other)
        out = Tensor(self.value @ other.value, _parents=(self, other))

        def backward(g):
            self._accumulate(g @ other.value.T)
            other._accumulate(self.value.T @ g)

        out._backward = backward
        return out

    def sum(self) -> "Tensor":
        out = Tensor(np.asarray(self.value.sum()), _parents=(self,))
        out._backward = lambda g: self._accumulate(np.broadcast_to(g, self.value.shape))
        return out


def constant(value, dtype=None) -> Tensor:
    """Non-trainable tensor wrapper."""
    return Tensor(value, requires_grad=False, dtype=dtype)


# -- structural ops ---------------------------------------------------------


def gather_rows(x: Tensor, idx: np.ndarray) -> Tensor:
    """Select rows of ``x`` by an index list; backward scatter-adds."""
    idx = np.asarray(idx, dtype=np.int64)
    out = Tensor(x.value[idx], _parents=(x,))

    def backward(g):
        if not x.requires_grad:
            return
        if x.grad is None:
            x.grad = np.zeros_like(x.value)
        np.add.at(x.grad, idx, g)

    out._backward = backward
    return out


def row_sum(x: Tensor) -> Tensor:
    """Sum each row of a 2-D tensor, producing a 1-D tensor."""
    out = Tensor(x.value.sum(axis=1), _parents=(x,))
    out._backward = lambda g: x._accumulate(np.repeat(g[:, None], x.value.shape[1], axis=1))
    return out


def hstack(a: Tensor, b: Tensor) -> Tensor:
    """Concatenate two (n, 1) tensors into an (n, 2) tensor."""
    out = Tensor(np.concatenate([a.value, b.value], axis=1), _parents=(a, b))
    ca = a.value.shape[1]

    def backward(g):
        a._accumulate(g[:, :ca])
        b._accumulate(g[:, ca:])

    out._backward = backward
    return out


def column(x: Tensor, j: int) -> Tensor:
    """Extract column ``j`` as an (n, 1) tensor."""
    out = Tensor(x.value[:, j : j + 1], _parents=(x,))

    def backward(g):
        if not x.requires_grad:
            return
        if x.grad is None:
            x.grad = np.zeros_like(x.value)
        x.grad[:, j : j + 1] += g

    out._backward = backward
    return out


# -- nonlinearities ----------------------------------------------------------


def relu(x: Tensor) -> Tensor:
    mask = x.value > 0
    out = Tensor(np.where(mask, x.value, 0.0), _parents=(x,))
    out._backward = lambda g: x._accumulate(g * mask)
    return out


def sigmoid(x: Tensor) -> Tensor:
    v = x.value
    s = np.where(v >= 0, 1.0 / (1.0 + np.exp(-np.abs(v))), np.exp(-np.abs(v)) / (1.0 + np.exp(-np.abs(v))))
    out = Tensor(s, _parents=(x,))
    out._backward = lambda g: x._accumulate(g * s * (1.0 - s))
    return out


def row_softmax(x: Tensor) -> Tensor:
    """Softmax across each row, stabilized by row-max subtraction."""
    shifted = x.value - x.value.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=1, keepdims=True)
    out = Tensor(y, _parents=(x,))

    def backward(g):
        inner = (g * y).sum(axis=1, keepdims=True)
        x._accumulate(y * (g - inner))

    out._backward = backward
    return out


def dropout(x: Tensor, p: float, rng: np.random.Generator, training: bool) -> Tensor:
    """Inverted dropout: train-time scaling by 1/(1-p), eval-time identity."""
    if not training or p == 0.0:
        return x
    if not 0.0 <= p < 1.0:
        raise ValueError("dropout probability must lie in [0, 1)")
    mask = (rng.random(x.value.shape) >= p) / (1.0 - p)
    mask = mask.astype(x.dtype)
    out = Tensor(x.value * mask, _parents=(x,))
    out._backward = lambda g: x._accumulate(g * mask)
    return out


# -- graph ops ----------------------------------------------------------------


def spmm(weights: Tensor, h: Tensor, src: np.ndarray, dst: np.ndarray, num_rows: int) -> Tensor:
    """Edge-weighted neighbor aggregation: out[i] = sum over edges (i,j) of w_e * h[j].

    ``weights`` is the per-edge value vector aligned to ``src``/``dst``; both
    it and ``h`` may carry gradients.
    """
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    if weights.value.shape != src.shape:
        raise ValueError("edge weights must align with the edge list")
    if h.value.ndim != 2:
        raise ValueError("spmm expects a 2-D dense operand")
    out_val = np.zeros((num_rows, h.value.shape[1]), dtype=h.dtype)
    if src.size:
        np.add.at(out_val, src, weights.value[:, None] * h.value[dst])
    out = Tensor(out_val, _parents=(weights, h))

    def backward(g):
        if src.size == 0:
            return
        if h.requires_grad:
            if h.grad is None:
                h.grad = np.zeros_like(h.value)
            np.add.at(h.grad, dst, weights.value[:, None] * g[src])
        if weights.requires_grad:
            weights._accumulate((g[src] * h.value[dst]).sum(axis=1))

    out._backward = backward
    return out


def masked_cross_entropy(logits: Tensor, labels: np.ndarray, mask: np.ndarray) -> Tensor:
    """Mean negative log-likelihood over the masked rows.

    The gradient is zero outside the mask.
    """
    mask = np.asarray(mask, dtype=np.int64)
    if mask.size == 0:
        raise ValueError("cross entropy over an empty mask")
    labels = np.asarray(labels, dtype=np.int64)
    rows = logits.value[mask]
    shifted = rows - rows.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1))
    picked = shifted[np.arange(mask.size), labels[mask]]
    loss = float(np.mean(lse - picked))
    out = Tensor(np.asarray(loss, dtype=logits.dtype), _parents=(logits,))

    def backward(g):
        if not logits.requires_grad:
            return
        probs = np.exp(shifted - lse[:, None])
        probs[np.arange(mask.size), labels[mask]] -= 1.0
        probs *= float(g) / mask.size
        if logits.grad is None:
            logits.grad = np.zeros_like(logits.value)
        np.add.at(logits.grad, mask, probs)

    out._backward = backward
    return out


# -- parameters ----------------------------------------------------------------


def glorot_init(rows: int, cols: int, rng, dtype=np.float64) -> np.ndarray:
    """Uniform init in +-sqrt(6 / (rows + cols)); deterministic per seed."""
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(int(rng))
    bound = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-bound, bound, size=(rows, cols)).astype(dtype)


class ParamStore:
    """Named trainable tensors with their gradient buffers."""

    def __init__(self):
        self._params: dict[str, Tensor] = {}

    def add(self, name: str, value, dtype=None) -> Tensor:
        if name in self._params:
            raise ValueError(f"duplicate parameter name: {name}")
        t = value if isinstance(value, Tensor) else Tensor(value, requires_grad=True, dtype=dtype)
        t.requires_grad = True
        self._params[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def items(self):
        return self._params.items()

    def zero_grad(self) -> None:
        for t in self._params.values():
            t.zero_grad()

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: t.value.copy() for name, t in self._params.items()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        for name, t in self._params.items():
            if name not in state:
                raise KeyError(f"missing parameter in state: {name}")
            if state[name].shape != t.value.shape:
                raise ValueError(f"shape mismatch for {name}")
            t.value = state[name].astype(t.dtype).copy()
