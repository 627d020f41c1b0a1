"""Shared numeric kernels: gated recurrent layers with hand-written backprop,
softmax helpers, and an adaptive-moment (Adam) optimizer.

Everything runs in float64 and is deterministic given a seed. Parameters
live in plain dicts of numpy arrays so they can be flattened for
finite-difference checks and serialized as flat lists.
"""

from __future__ import annotations

import numpy as np

Params = dict[str, np.ndarray]

UNK = "<unk>"
BOS = "<bos>"
EOS = "<eos>"


def make_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.PCG64(seed))


def glorot(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    fan_in, fan_out = shape[-1], shape[0]
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    expx = np.exp(x[~pos])
    out[~pos] = expx / (1.0 + expx)
    return out


def softmax(x: np.ndarray) -> np.ndarray:
    shifted = x - np.max(x, axis=-1, keepdims=True)
    exps = np.exp(shifted)
    return exps / np.sum(exps, axis=-1, keepdims=True)


def log_softmax(x: np.ndarray) -> np.ndarray:
    shifted = x - np.max(x, axis=-1, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))


def logsumexp(x: np.ndarray, axis=None) -> np.ndarray:
    m = np.max(x, axis=axis, keepdims=True)
    out = m + np.log(np.sum(np.exp(x - m), axis=axis, keepdims=True))
    return np.squeeze(out, axis=axis) if axis is not None else out.reshape(())


def build_vocab(token_seqs, specials: tuple[str, ...] = (UNK,)) -> dict[str, int]:
    """Token -> index map; specials come first, the rest in first-seen order."""
    vocab: dict[str, int] = {}
    for special in specials:
        vocab[special] = len(vocab)
    for seq in token_seqs:
        for token in seq:
            if token not in vocab:
                vocab[token] = len(vocab)
    return vocab


def lookup(vocab: dict[str, int], tokens) -> np.ndarray:
    unk = vocab[UNK]
    return np.array([vocab.get(t, unk) for t in tokens], dtype=np.intp)


# ---------------------------------------------------------------------------
# GRU layer (Cho formulation): z/r gates, candidate uses U_c @ (r * h)
# ---------------------------------------------------------------------------


def gru_init(rng: np.random.Generator, d: int, h: int, prefix: str) -> Params:
    return {
        f"{prefix}W": glorot(rng, (3 * h, d)),
        f"{prefix}U": glorot(rng, (3 * h, h)),
        f"{prefix}b": np.zeros(3 * h),
    }


def gru_forward(params: Params, prefix: str, xs: np.ndarray):
    """Run one direction over xs (T, d). Returns hidden states (T, h) and a
    cache for the backward pass."""
    W, U, b = params[f"{prefix}W"], params[f"{prefix}U"], params[f"{prefix}b"]
    h = U.shape[1]
    T = xs.shape[0]
    hs = np.zeros((T, h))
    cache = []
    h_prev = np.zeros(h)
    pre = xs @ W.T + b  # (T, 3h), input contributions for every step
    for t in range(T):
        a = pre[t]
        u_zr = U[: 2 * h] @ h_prev
        z = sigmoid(a[:h] + u_zr[:h])
        r = sigmoid(a[h : 2 * h] + u_zr[h:])
        rh = r * h_prev
        c = np.tanh(a[2 * h :] + U[2 * h :] @ rh)
        h_new = (1.0 - z) * h_prev + z * c
        cache.append((h_prev, z, r, rh, c))
        hs[t] = h_new
        h_prev = h_new
    return hs, (xs, cache)


def gru_backward(params: Params, prefix: str, fwd_cache, dhs: np.ndarray):
    """Backprop through one direction. dhs is dLoss/d hidden state at every
    step. Returns (param grads, dxs)."""
    W, U = params[f"{prefix}W"], params[f"{prefix}U"]
    xs, cache = fwd_cache
    h = U.shape[1]
    T = xs.shape[0]
    dW = np.zeros_like(W)
    dU = np.zeros_like(U)
    db = np.zeros(3 * h)
    dxs = np.zeros_like(xs)
    dh = np.zeros(h)
    for t in range(T - 1, -1, -1):
        h_prev, z, r, rh, c = cache[t]
        dh = dh + dhs[t]
        dz = dh * (c - h_prev)
        dc = dh * z
        dh_prev = dh * (1.0 - z)
        dc_pre = dc * (1.0 - c * c)
        dU[2 * h :] += np.outer(dc_pre, rh)
        drh = U[2 * h :].T @ dc_pre
        dr = drh * h_prev
        dh_prev += drh * r
        dz_pre = dz * z * (1.0 - z)
        dr_pre = dr * r * (1.0 - r)
        dpre = np.concatenate([dz_pre, dr_pre, dc_pre])
        dW += np.outer(dpre, xs[t])
        db += dpre
        dU[:h] += np.outer(dz_pre, h_prev)
        dU[h : 2 * h] += np.outer(dr_pre, h_prev)
        dh_prev += U[:h].T @ dz_pre + U[h : 2 * h].T @ dr_pre
        dxs[t] = W.T @ dpre
        dh = dh_prev
    grads = {f"{prefix}W": dW, f"{prefix}U": dU, f"{prefix}b": db}
    return grads, dxs


def bigru_init(rng: np.random.Generator, d: int, h: int, prefix: str = "") -> Params:
    params = gru_init(rng, d, h, f"{prefix}fwd_")
    params.update(gru_init(rng, d, h, f"{prefix}bwd_"))
    return params


def bigru_forward(params: Params, xs: np.ndarray, prefix: str = ""):
    """Bidirectional pass. Returns (T, 2h) states [forward; backward]."""
    hs_f, cache_f = gru_forward(params, f"{prefix}fwd_", xs)
    hs_b_rev, cache_b = gru_forward(params, f"{prefix}bwd_", xs[::-1])
    hs = np.concatenate([hs_f, hs_b_rev[::-1]], axis=1)
    return hs, (cache_f, cache_b)


def bigru_backward(params: Params, fwd_cache, dhs: np.ndarray, prefix: str = ""):
    cache_f, cache_b = fwd_cache
    h = dhs.shape[1] // 2
    grads_f, dxs_f = gru_backward(params, f"{prefix}fwd_", cache_f, dhs[:, :h])
    grads_b, dxs_b_rev = gru_backward(
        params, f"{prefix}bwd_", cache_b, dhs[::-1, h:]
    )
    grads = {**grads_f, **grads_b}
    return grads, dxs_f + dxs_b_rev[::-1]


# ---------------------------------------------------------------------------
# Optimizer and parameter plumbing
# ---------------------------------------------------------------------------


class Adam:
    """Adaptive-moment optimizer over a params dict. Updates in place."""

    def __init__(self, params: Params, lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: Params, grads: Params) -> None:
        self.t += 1
        bias1 = 1.0 - self.beta1**self.t
        bias2 = 1.0 - self.beta2**self.t
        for key, grad in grads.items():
            m = self.m[key]
            v = self.v[key]
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            params[key] -= self.lr * (m / bias1) / (np.sqrt(v / bias2) + self.eps)


def zeros_like_params(params: Params) -> Params:
    return {k: np.zeros_like(v) for k, v in params.items()}


def add_params(total: Params, grads: Params) -> None:
    for key, grad in grads.items():
        total[key] += grad


def scale_params(params: Params, factor: float) -> None:
    for value in params.values():
        value *= factor


def clip_grads(grads: Params, max_norm: float = 5.0) -> None:
    total = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if total > max_norm:
        scale_params(grads, max_norm / total)


def copy_params(params: Params) -> Params:
    return {k: v.copy() for k, v in params.items()}


def flatten_params(params: Params) -> tuple[np.ndarray, list[tuple[str, tuple]]]:
    """Deterministic (sorted-key) flattening, for finite-difference checks
    and serialization."""
    spec = [(k, params[k].shape) for k in sorted(params)]
    vec = np.concatenate([params[k].ravel() for k in sorted(params)])
    return vec, spec


def unflatten_params(vec: np.ndarray, spec: list[tuple[str, tuple]]) -> Params:
    params: Params = {}
    offset = 0
    for key, shape in spec:
        size = int(np.prod(shape, dtype=np.intp)) if shape else 1
        params[key] = vec[offset : offset + size].reshape(shape).copy()
        offset += size
    return params
