"""Feed-forward classifiers over the autodiff tensors.

An :class:`MLP` holds the weight/bias parameters, exposes raw logits,
argmax predictions (ties broken toward the lowest class index, so radius
estimates are deterministic), and gradients of the cross-entropy loss with
respect to the input.  Checkpoint I/O is a versioned plain-text format,
documented in the README, whose float fields round-trip bitwise.
"""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np

from . import tensor as T
from .exceptions import DimensionError, FormatError, ParameterError
from .instrument import PassCounter
from .seeding import rng_for

CHECKPOINT_MAGIC = "misdkit-checkpoint"
CHECKPOINT_VERSION = 1


class MLP:
    """Fully connected net: affine layers with ReLU between, logits out.

    ``layer_dims`` runs input width through hidden widths to the class count,
    e.g. ``[784, 128, 10]``.  ``[d, K]`` is a linear (0-hidden-layer) probe.
    ``input_scale`` is a fixed normalization gain multiplied onto the input
    before the first layer (the usual baked-in data normalization); it is part
    of the model, saved in checkpoints, and keeps SGD well conditioned when
    the raw feature scale is far from 1.  Radii and perturbations are always
    expressed in raw input units.  Read-only during inference and safe to
    share; training mutates parameters and needs exclusive access.
    """

    def __init__(self, layer_dims, seed: int = 0, input_scale: float = 1.0, _init: bool = True):
        layer_dims = [int(d) for d in layer_dims]
        if len(layer_dims) < 2:
            raise ParameterError("layer_dims needs at least input and output widths")
        if any(d < 1 for d in layer_dims):
            raise ParameterError(f"layer widths must be positive, got {layer_dims}")
        if layer_dims[-1] < 2:
            raise ParameterError("the final width is the class count and must be >= 2")
        if input_scale <= 0:
            raise ParameterError(f"input_scale must be positive, got {input_scale}")
        self.layer_dims = layer_dims
        self.input_scale = float(input_scale)
        self.weights: list[T.Tensor] = []
        self.biases: list[T.Tensor] = []
        self._counters: list[PassCounter] = []
        if _init:
            rng = rng_for(seed, "model.init")
            for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
                w = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out))
                self.weights.append(T.Tensor(w, requires_grad=True))
                self.biases.append(T.Tensor(np.zeros(fan_out), requires_grad=True))

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def num_classes(self) -> int:
        return self.layer_dims[-1]

    def parameters(self) -> list[T.Tensor]:
        return [t for pair in zip(self.weights, self.biases) for t in pair]

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None

    # -- pass counting ---------------------------------------------------

    @contextmanager
    def counting(self):
        """Attach a fresh PassCounter for the block; nested scopes all tick."""
        counter = PassCounter()
        self._counters.append(counter)
        try:
            yield counter
        finally:
            self._counters.remove(counter)

    def _tick_forward(self, n: int) -> None:
        for c in self._counters:
            c.add_forward(n)

    def note_backward(self, n: int) -> None:
        """Record n per-example backward passes (called by gradient consumers)."""
        for c in self._counters:
            c.add_backward(n)

    # -- forward paths ---------------------------------------------------

    def forward_tensor(self, x: T.Tensor) -> T.Tensor:
        """Graph-building forward pass; x is (n, d), result is (n, K)."""
        self._check_width(x.data)
        self._tick_forward(x.data.shape[0])
        h = T.mul(x, self.input_scale) if self.input_scale != 1.0 else x
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            h = T.relu(T.matmul(h, w) + b)
        return T.matmul(h, self.weights[-1]) + self.biases[-1]

    def logits_batch(self, X) -> np.ndarray:
        """Plain-array forward pass for inference; no graph is built."""
        X = np.asarray(X, dtype=np.float64)
        self._check_width(X)
        self._tick_forward(X.shape[0])
        h = X * self.input_scale if self.input_scale != 1.0 else X
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            h = np.maximum(h @ w.data + b.data, 0.0)
        return h @ self.weights[-1].data + self.biases[-1].data

    def logits(self, x) -> np.ndarray:
        """Logit vector for one input."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1:
            raise DimensionError(f"logits expects a single input vector, got shape {x.shape}")
        return self.logits_batch(x[None, :])[0]

    def predict(self, x) -> int:
        """Most likely class; ties resolve to the lowest index."""
        return int(np.argmax(self.logits(x)))

    def predict_batch(self, X) -> np.ndarray:
        return np.argmax(self.logits_batch(X), axis=1)

    def ce_input_grad(self, X, labels=None, temperature: float = 1.0):
        """Logits plus d(CE)/dx in one tracked forward and one backward.

        When ``labels`` is None the gradient is taken at the predicted class
        of each row.  Returns ``(logits (n,K), labels (n,), grad (n,d))``.
        Parameter grads picked up along the way are cleared afterwards so the
        call is side-effect free for training.
        """
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        xt = T.Tensor(X, requires_grad=True)
        z = self.forward_tensor(xt)
        if labels is None:
            labels = np.argmax(z.data, axis=1)
        else:
            labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
        loss = T.cross_entropy(z, labels, temperature)
        if loss.data.ndim:
            loss = T.tsum(loss)
        T.backward(loss)
        self.note_backward(X.shape[0])
        grad = xt.grad
        self.zero_grad()
        return z.data, labels, grad

    def input_gradient(self, x, y: int, temperature: float = 1.0) -> np.ndarray:
        """Gradient of CE(x, y) at temperature T with respect to the input."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1:
            raise DimensionError(f"input_gradient expects a vector, got shape {x.shape}")
        _, _, grad = self.ce_input_grad(x[None, :], [int(y)], temperature)
        return grad[0]

    def _check_width(self, X: np.ndarray) -> None:
        if X.ndim != 2 or X.shape[1] != self.input_dim:
            raise DimensionError(
                f"input width {X.shape} does not match model input dim {self.input_dim}"
            )

    # -- persistence -------------------------------------------------------

    def checksum(self) -> str:
        """Hex digest over the raw parameter bytes; stable across runs."""
        import hashlib

        h = hashlib.sha256()
        h.update(np.float64(self.input_scale).tobytes())
        for p in self.parameters():
            h.update(np.ascontiguousarray(p.data).tobytes())
        return h.hexdigest()

    def save(self, path) -> None:
        """Write the documented versioned text checkpoint."""
        lines = [f"{CHECKPOINT_MAGIC} v{CHECKPOINT_VERSION}"]
        lines.append("dims " + " ".join(str(d) for d in self.layer_dims))
        lines.append(f"scale {repr(float(self.input_scale))}")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            lines.append(f"W{i} {w.data.shape[0]} {w.data.shape[1]}")
            for row in w.data:
                lines.append(" ".join(repr(float(v)) for v in row))
            lines.append(f"b{i} {b.data.shape[0]}")
            lines.append(" ".join(repr(float(v)) for v in b.data))
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path) -> "MLP":
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
        if not lines or not lines[0].startswith(CHECKPOINT_MAGIC):
            raise FormatError(f"{path}: not a {CHECKPOINT_MAGIC} file")
        version = lines[0].split("v")[-1]
        if version != str(CHECKPOINT_VERSION):
            raise FormatError(f"{path}: unsupported checkpoint version {version!r}")
        if len(lines) < 3 or not lines[1].startswith("dims "):
            raise FormatError(f"{path}: missing dims header")
        dims = [int(v) for v in lines[1].split()[1:]]
        if not lines[2].startswith("scale "):
            raise FormatError(f"{path}: missing scale header")
        model = cls(dims, input_scale=float(lines[2].split()[1]), _init=False)
        pos = 3
        try:
            for i, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
                head = lines[pos].split()
                if head[0] != f"W{i}" or (int(head[1]), int(head[2])) != (fan_in, fan_out):
                    raise FormatError(f"{path}: bad weight header at line {pos + 1}")
                pos += 1
                w = np.array(
                    [[float(v) for v in lines[pos + r].split()] for r in range(fan_in)]
                )
                pos += fan_in
                if w.shape != (fan_in, fan_out):
                    raise FormatError(f"{path}: weight block {i} has wrong shape")
                head = lines[pos].split()
                if head[0] != f"b{i}" or int(head[1]) != fan_out:
                    raise FormatError(f"{path}: bad bias header at line {pos + 1}")
                pos += 1
                b = np.array([float(v) for v in lines[pos].split()])
                pos += 1
                if b.shape != (fan_out,):
                    raise FormatError(f"{path}: bias block {i} has wrong shape")
                model.weights.append(T.Tensor(w, requires_grad=True))
                model.biases.append(T.Tensor(b, requires_grad=True))
        except (IndexError, ValueError) as exc:
            raise FormatError(f"{path}: truncated or corrupt checkpoint near line {pos + 1}") from exc
        return model
