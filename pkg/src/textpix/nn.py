"""Differentiable building blocks: attention, the gated scan unit, valid 1-D
convolution blocks, Adam, and a finite-difference gradient checker.

All layers operate on batched [B, L, D] tensors and take an optional boolean
mask marking the real (non-padding) positions of each sequence. Padding is
always a contiguous suffix, so masked attention keys plus the left-to-right
scan guarantee padded positions never influence real ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import (Parameter, Tensor, activation, as_tensor, check_finite,
                       concat, conv1d, dropout, sigmoid, softmax, tanh)


def init_weight(rng: np.random.Generator, shape, scale: float | None = None
                ) -> np.ndarray:
    """Gaussian init with 1/sqrt(fan_in) scale unless overridden."""
    if scale is None:
        scale = 1.0 / np.sqrt(shape[0])
    return rng.normal(0.0, scale, size=shape)


@dataclass
class AttentionConfig:
    """Shape contract for multi-head attention."""

    width: int
    heads: int
    length: int

    def __post_init__(self):
        if self.width <= 0 or self.heads <= 0 or self.length <= 0:
            raise ValueError("attention dimensions must be positive")
        if self.width % self.heads != 0:
            raise ValueError(
                f"width {self.width} not divisible by heads {self.heads}")

    @property
    def head_width(self) -> int:
        return self.width // self.heads


def additive_key_mask(mask: np.ndarray) -> np.ndarray:
    """[B, L] boolean mask -> [B, 1, L] additive logits (0 real, -inf padding)."""
    mask = np.asarray(mask, dtype=bool)
    add = np.where(mask, 0.0, -np.inf)
    return add[:, None, :]


def self_attention(z, w_query, w_key, w_value, mask=None) -> Tensor:
    """Single-head scaled dot-product attention over one sequence batch.

    z: [B, L, D]; the three projections map D -> D/H. Scores are scaled by
    sqrt(D) and padded key positions receive -inf logits before the softmax,
    so each attention row sums to 1 over real positions only.
    """
    z = check_finite(as_tensor(z), "attention input")
    width = z.shape[-1]
    q = z @ w_query
    k = z @ w_key
    v = z @ w_value
    scores = (q @ k.swapaxes(-1, -2)) * (1.0 / np.sqrt(width))
    if mask is not None:
        scores = scores + Tensor(additive_key_mask(mask))
    return softmax(scores, axis=-1) @ v


class MultiHeadAttention:
    """H independent attention heads, concatenated and projected by W_o."""

    def __init__(self, config: AttentionConfig, rng: np.random.Generator,
                 name: str):
        self.config = config
        d, hw = config.width, config.head_width
        self.heads = []
        for i in range(config.heads):
            self.heads.append((
                Parameter(init_weight(rng, (d, hw)), f"{name}.h{i}.wq"),
                Parameter(init_weight(rng, (d, hw)), f"{name}.h{i}.wk"),
                Parameter(init_weight(rng, (d, hw)), f"{name}.h{i}.wv"),
            ))
        self.w_out = Parameter(init_weight(rng, (d, d)), f"{name}.wo")

    def __call__(self, z, mask=None) -> Tensor:
        outputs = [self_attention(z, wq, wk, wv, mask)
                   for wq, wk, wv in self.heads]
        return concat(outputs, axis=-1) @ self.w_out

    def parameters(self) -> list[Parameter]:
        params = [p for head in self.heads for p in head]
        params.append(self.w_out)
        return params


class GatedScan:
    """Recurrent gated unit scanned left-to-right over sequence positions.

    Per step: s = sigmoid(x W_s + h U_s); t = tanh(x W_t + h U_t);
    h' = s + s * t, starting from h = 0. With `share_tanh_weights` the tanh
    branch applies W_t to both the input and the hidden state.
    """

    def __init__(self, width: int, rng: np.random.Generator, name: str,
                 share_tanh_weights: bool = False):
        self.width = width
        self.share_tanh_weights = share_tanh_weights
        self.w_sig = Parameter(init_weight(rng, (width, width)), f"{name}.ws")
        self.u_sig = Parameter(init_weight(rng, (width, width)), f"{name}.us")
        self.w_tanh = Parameter(init_weight(rng, (width, width)), f"{name}.wt")
        if share_tanh_weights:
            self.u_tanh = self.w_tanh
        else:
            self.u_tanh = Parameter(init_weight(rng, (width, width)),
                                    f"{name}.ut")

    def step(self, x_i, h_prev) -> Tensor:
        s = sigmoid(x_i @ self.w_sig + h_prev @ self.u_sig)
        t = tanh(x_i @ self.w_tanh + h_prev @ self.u_tanh)
        return s + s * t

    def __call__(self, x) -> Tensor:
        """x: [B, L, D] -> hidden states stacked over positions, [B, L, D]."""
        x = as_tensor(x)
        batch, length, _ = x.shape
        h = Tensor(np.zeros((batch, self.width)))
        states = []
        for i in range(length):
            h = self.step(x[:, i, :], h)
            states.append(h.reshape(batch, 1, self.width))
        return concat(states, axis=1)

    def parameters(self) -> list[Parameter]:
        params = [self.w_sig, self.u_sig, self.w_tanh]
        if not self.share_tanh_weights:
            params.append(self.u_tanh)
        return params


class GatedTransformerBlock:
    """Multi-head attention feeding the gated scan, with a residual from the
    block input."""

    def __init__(self, config: AttentionConfig, rng: np.random.Generator,
                 name: str, share_tanh_weights: bool = False):
        self.attention = MultiHeadAttention(config, rng, f"{name}.mha")
        self.scan = GatedScan(config.width, rng, f"{name}.scan",
                              share_tanh_weights)

    def __call__(self, z, mask=None) -> Tensor:
        z = as_tensor(z)
        return z + self.scan(self.attention(z, mask))

    def parameters(self) -> list[Parameter]:
        return self.attention.parameters() + self.scan.parameters()


class ConvBlock:
    """Valid 1-D convolution (no bias) with as many filters as features,
    followed by an activation and dropout. Shrinks length by window - 1
    unless `pad_to_length` keeps it constant by zero-padding the suffix."""

    def __init__(self, width: int, window: int, rng: np.random.Generator,
                 name: str, act: str = "gelu", dropout_rate: float = 0.0,
                 pad_to_length: bool = False):
        scale = 1.0 / np.sqrt(window * width)
        self.filters = Parameter(
            rng.normal(0.0, scale, size=(width, window, width)),
            f"{name}.filters")
        self.window = window
        self.act = act
        self.dropout_rate = dropout_rate
        self.pad_to_length = pad_to_length

    def __call__(self, x, rng: np.random.Generator | None = None,
                 training: bool = False) -> Tensor:
        from .autodiff import pad_axis
        x = as_tensor(x)
        if self.pad_to_length:
            x = pad_axis(x, 1, 0, self.window - 1)
        out = activation(conv1d(x, self.filters), self.act)
        if training and self.dropout_rate > 0.0:
            out = dropout(out, self.dropout_rate, rng, training=True)
        return out

    def parameters(self) -> list[Parameter]:
        return [self.filters]


class Affine:
    """Dense layer y = x W + b."""

    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator,
                 name: str, scale: float | None = None):
        self.weight = Parameter(init_weight(rng, (n_in, n_out), scale),
                                f"{name}.w")
        self.bias = Parameter(np.zeros(n_out), f"{name}.b")

    def __call__(self, x) -> Tensor:
        return as_tensor(x) @ self.weight + self.bias

    def parameters(self) -> list[Parameter]:
        return [self.weight, self.bias]


def masked_mean_pool(x, mask: np.ndarray) -> Tensor:
    """Mean over real positions. x: [B, L, D]; mask: [B, L] boolean."""
    mask = np.asarray(mask, dtype=bool)
    counts = mask.sum(axis=1)
    if (counts == 0).any():
        raise ValueError("cannot pool a fully masked sequence")
    weights = mask.astype(np.float64)[:, :, None]
    return (as_tensor(x) * Tensor(weights)).sum(axis=1) / Tensor(
        counts[:, None].astype(np.float64))


class Adam:
    """Adam with bias correction; update order follows the parameter list."""

    def __init__(self, params: list[Parameter], lr: float = 0.01,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.value) for p in self.params]
        self.v = [np.zeros_like(p.value) for p in self.params]

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def step(self):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for i, p in enumerate(self.params):
            g = p.grad
            if g is None:
                continue
            self.m[i] = b1 * self.m[i] + (1 - b1) * g
            self.v[i] = b2 * self.v[i] + (1 - b2) * g * g
            m_hat = self.m[i] / (1 - b1**self.t)
            v_hat = self.v[i] / (1 - b2**self.t)
            p.value -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


class EarlyStopping:
    """Stop after `patience` consecutive epochs without validation improvement."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best = np.inf
        self.stale = 0

    def update(self, loss: float) -> bool:
        """Record one validation loss; return True when training should stop."""
        if loss < self.best:
            self.best = loss
            self.stale = 0
            return False
        self.stale += 1
        return self.stale >= self.patience

    @property
    def improved(self) -> bool:
        return self.stale == 0


@dataclass
class GradCheckEntry:
    name: str
    max_relative_error: float
    checked: int


@dataclass
class GradCheckReport:
    entries: list[GradCheckEntry] = field(default_factory=list)
    tolerance: float = 1e-4

    @property
    def max_relative_error(self) -> float:
        return max((e.max_relative_error for e in self.entries), default=0.0)

    @property
    def failures(self) -> list[GradCheckEntry]:
        return [e for e in self.entries
                if e.max_relative_error > self.tolerance]

    @property
    def passed(self) -> bool:
        return not self.failures

    def assert_ok(self):
        if not self.passed:
            detail = ", ".join(f"{e.name}: {e.max_relative_error:.3e}"
                               for e in self.failures)
            raise AssertionError(
                f"gradient check failed (tolerance {self.tolerance}): {detail}")


def gradient_check(loss_fn, params: list[Parameter], tolerance: float = 1e-4,
                   step: float = 1e-5,
                   max_elements_per_param: int | None = None,
                   seed: int = 0) -> GradCheckReport:
    """Compare reverse-mode gradients against central finite differences.

    `loss_fn` must be a deterministic closure evaluating the scalar loss from
    the current parameter values. Every parameter tensor is checked; within a
    tensor all elements are checked unless `max_elements_per_param` limits
    them to a seeded random subset.
    """
    for p in params:
        p.grad = None
    loss = loss_fn()
    loss.backward()
    analytic = [np.zeros_like(p.value) if p.grad is None else p.grad.copy()
                for p in params]

    rng = np.random.default_rng(seed)
    report = GradCheckReport(tolerance=tolerance)
    for p, grad in zip(params, analytic):
        n = p.value.size
        if max_elements_per_param is not None and n > max_elements_per_param:
            idx = rng.choice(n, size=max_elements_per_param, replace=False)
            idx.sort()
        else:
            idx = np.arange(n)
        flat = p.value.reshape(-1)
        worst = 0.0
        for i in idx:
            original = flat[i]
            flat[i] = original + step
            up = loss_fn().item()
            flat[i] = original - step
            down = loss_fn().item()
            flat[i] = original
            numeric = (up - down) / (2.0 * step)
            a = grad.reshape(-1)[i]
            denom = max(abs(a), abs(numeric))
            err = abs(a - numeric) if denom < 1e-8 else abs(a - numeric) / denom
            worst = max(worst, err)
        report.entries.append(GradCheckEntry(p.name, worst, len(idx)))
    return report
