"""Parameter store and the small set of layers the models are built from."""

from __future__ import annotations

import struct
from typing import Iterable, Optional

import numpy as np

from . import tensor as T
from .errors import ParseError, ShapeError
from .tensor import Tensor

CHECKPOINT_MAGIC = b"EHCK"
CHECKPOINT_VERSION = 1


class ParamStore:
    """Named trainable tensors with deterministic initialization.

    Creation order is preserved; checkpoints and SGD walk parameters in that
    order so runs are reproducible bit for bit.
    """

    def __init__(self, seed: int = 0):
        self._params: dict[str, Tensor] = {}
        self._rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))

    def weight(self, name: str, fan_in: int, fan_out: int) -> Tensor:
        """Xavier-scaled dense weight, created on first use."""
        if name not in self._params:
            scale = np.sqrt(2.0 / (fan_in + fan_out))
            data = self._rng.normal(0.0, scale, size=(fan_in, fan_out))
            self._params[name] = Tensor(data, requires_grad=True)
        return self._params[name]

    def vector(self, name: str, size: int, fill: float = 0.0) -> Tensor:
        if name not in self._params:
            self._params[name] = Tensor(np.full(size, fill), requires_grad=True)
        return self._params[name]

    def embedding(self, name: str, rows: int, cols: int, std: float = 0.1) -> Tensor:
        if name not in self._params:
            data = self._rng.normal(0.0, std, size=(rows, cols))
            self._params[name] = Tensor(data, requires_grad=True)
        return self._params[name]

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def names(self) -> list[str]:
        return list(self._params)

    def tensors(self) -> list[Tensor]:
        return list(self._params.values())

    def num_values(self) -> int:
        return sum(p.size for p in self._params.values())

    def zero_grad(self) -> None:
        for p in self._params.values():
            p.zero_grad()

    def sgd_step(self, lr: float, clip_norm: Optional[float] = 1.0) -> float:
        """Plain gradient step with optional global-norm clipping.

        Returns the pre-clip gradient norm.
        """
        grads = [p.grad if p.grad is not None else np.zeros_like(p.data) for p in self._params.values()]
        norm = T.l2_norm(grads)
        scale = lr
        if clip_norm is not None and norm > clip_norm:
            scale = lr * clip_norm / norm
        for p, g in zip(self._params.values(), grads):
            p.data -= scale * g
        return norm

    # -- checkpoint file: magic, version, count, then per parameter --------
    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(CHECKPOINT_MAGIC)
            fh.write(struct.pack("<II", CHECKPOINT_VERSION, len(self._params)))
            for name, p in self._params.items():
                encoded = name.encode("utf-8")
                fh.write(struct.pack("<I", len(encoded)))
                fh.write(encoded)
                fh.write(struct.pack("<I", p.data.ndim))
                fh.write(struct.pack(f"<{p.data.ndim}I", *p.data.shape))
                fh.write(p.data.astype("<f8").tobytes())

    def load(self, path) -> None:
        with open(path, "rb") as fh:
            if fh.read(4) != CHECKPOINT_MAGIC:
                raise ParseError(f"{path}: not a checkpoint file")
            version, count = struct.unpack("<II", fh.read(8))
            if version != CHECKPOINT_VERSION:
                raise ParseError(f"{path}: unsupported checkpoint version {version}")
            for _ in range(count):
                (name_len,) = struct.unpack("<I", fh.read(4))
                name = fh.read(name_len).decode("utf-8")
                (rank,) = struct.unpack("<I", fh.read(4))
                dims = struct.unpack(f"<{rank}I", fh.read(4 * rank))
                n = int(np.prod(dims)) if rank else 1
                data = np.frombuffer(fh.read(8 * n), dtype="<f8").reshape(dims)
                if name in self._params:
                    if self._params[name].shape != tuple(dims):
                        raise ParseError(
                            f"{path}: parameter {name!r} has shape {tuple(dims)}, "
                            f"expected {self._params[name].shape}"
                        )
                    self._params[name].data = data.astype(np.float64).copy()
                else:
                    self._params[name] = Tensor(data.copy(), requires_grad=True)


# -- layers -----------------------------------------------------------------


def linear(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """x @ w + b with shape checking."""
    if x.shape[-1] != w.shape[0] or w.shape[1] != b.shape[0]:
        raise ShapeError(f"linear shapes incompatible: x{x.shape} w{w.shape} b{b.shape}")
    return T.add(T.matmul(x, w), b)


def dense(store: ParamStore, prefix: str, x: Tensor, d_out: int) -> Tensor:
    d_in = x.shape[-1]
    return linear(x, store.weight(f"{prefix}.w", d_in, d_out), store.vector(f"{prefix}.b", d_out))


def mlp2(store: ParamStore, prefix: str, x: Tensor, d_hidden: int, d_out: int) -> Tensor:
    """Two-layer perceptron with ReLU, applied row-wise."""
    return dense(store, f"{prefix}.out", T.relu(dense(store, f"{prefix}.hidden", x, d_hidden)), d_out)


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize over the last axis to zero mean and unit variance."""
    mu = T.tmean(x, axis=-1, keepdims=True)
    centered = T.sub(x, mu)
    var = T.tmean(T.mul(centered, centered), axis=-1, keepdims=True)
    normed = T.div(centered, T.sqrt(T.add(var, T.as_tensor(eps))))
    return T.add(T.mul(normed, gain), bias)


def layer_norm_p(store: ParamStore, prefix: str, x: Tensor) -> Tensor:
    d = x.shape[-1]
    gain = store.vector(f"{prefix}.gain", d, fill=1.0)
    bias = store.vector(f"{prefix}.bias", d, fill=0.0)
    return layer_norm(x, gain, bias)


def ffn(store: ParamStore, prefix: str, x: Tensor, d_hidden: Optional[int] = None) -> Tensor:
    """linear -> ReLU -> linear, back to the input width."""
    d = x.shape[-1]
    return mlp2(store, prefix, x, d_hidden if d_hidden is not None else 2 * d, d)


def multi_head_attention(
    store: ParamStore,
    prefix: str,
    q: Tensor,
    k: Tensor,
    v: Tensor,
    heads: int,
) -> Tensor:
    """Scaled dot-product attention with per-head projections.

    Queries of shape (n, d) attend to (m, d) keys/values; per head the
    weights are softmax(q k^T / sqrt(d/heads)); head outputs are
    concatenated and projected back to d.
    """
    d = q.shape[-1]
    if d % heads != 0:
        raise ShapeError(f"model width {d} not divisible by {heads} heads")
    if k.shape != v.shape or k.shape[-1] != d:
        raise ShapeError(f"attention shapes incompatible: q{q.shape} k{k.shape} v{v.shape}")
    dh = d // heads
    qp = dense(store, f"{prefix}.q", q, d)
    kp = dense(store, f"{prefix}.k", k, d)
    vp = dense(store, f"{prefix}.v", v, d)
    outs = []
    for h in range(heads):
        qh = T.narrow(qp, 1, h * dh, (h + 1) * dh)
        kh = T.narrow(kp, 1, h * dh, (h + 1) * dh)
        vh = T.narrow(vp, 1, h * dh, (h + 1) * dh)
        scores = T.mul(T.matmul(qh, T.transpose(kh)), T.as_tensor(1.0 / np.sqrt(dh)))
        outs.append(T.matmul(T.softmax(scores, axis=-1), vh))
    merged = outs[0] if heads == 1 else T.concat(outs, axis=1)
    return dense(store, f"{prefix}.out", merged, d)


def encoder_layer(store: ParamStore, prefix: str, x: Tensor, heads: int) -> Tensor:
    """Post-norm self-attention + FFN block with residual connections."""
    attended = layer_norm_p(store, f"{prefix}.norm1", T.add(x, multi_head_attention(store, f"{prefix}.attn", x, x, x, heads)))
    return layer_norm_p(store, f"{prefix}.norm2", T.add(attended, ffn(store, f"{prefix}.ffn", attended)))
