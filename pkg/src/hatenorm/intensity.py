"""Hate-intensity regressor: embeddings, a bidirectional gated recurrent
encoder, self-attention pooling and a linear head.

Trained on mean squared error against gold scores in [1, 10]; the raw head
output is unclamped during training and clamped to [1, 10] at inference.
The same trained model doubles as the discriminator for the rewrite stage.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import nnet
from .corpus import Corpus
from .nnet import Params

CLAMP_LO, CLAMP_HI = 1.0, 10.0


class TrainingError(RuntimeError):
    """Empty training data or a diverged (non-finite) loss."""


@dataclass
class HipTrainConfig:
    epochs: int = 10
    batch_size: int = 32
    learning_rate: float = 1e-3
    hidden: int = 32
    embed_dim: int = 32
    attn_dim: int = 32
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("epochs", "batch_size", "hidden", "embed_dim", "attn_dim"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


@dataclass(frozen=True)
class RegressionMetrics:
    rmse: float
    pearson: float
    cosine: float


class IntensityModel:
    """Immutable after training; prediction is a pure function of tokens."""

    def __init__(self, vocab: dict[str, int], params: Params,
                 hidden: int, attn_dim: int):
        self.vocab = vocab
        self.params = params
        self.hidden = hidden
        self.attn_dim = attn_dim

    @classmethod
    def init(cls, vocab: dict[str, int], cfg: HipTrainConfig) -> "IntensityModel":
        rng = nnet.make_rng(cfg.seed)
        params: Params = {
            "emb": rng.normal(0.0, 0.1, size=(len(vocab), cfg.embed_dim))
        }
        params.update(nnet.bigru_init(rng, cfg.embed_dim, cfg.hidden))
        params["attn_W"] = nnet.glorot(rng, (cfg.attn_dim, 2 * cfg.hidden))
        params["attn_v"] = rng.normal(0.0, 0.1, size=cfg.attn_dim)
        params["head_w"] = rng.normal(0.0, 0.1, size=2 * cfg.hidden)
        params["head_b"] = np.array([5.5])  # start at the scale midpoint
        return cls(vocab, params, cfg.hidden, cfg.attn_dim)

    def forward(self, tokens: Sequence[str]):
        """Unclamped prediction plus the cache needed for backprop."""
        if len(tokens) == 0:
            raise ValueError("cannot score an empty token list")
        ids = nnet.lookup(self.vocab, tokens)
        xs = self.params["emb"][ids]
        hs, gru_cache = nnet.bigru_forward(self.params, xs)
        pre = hs @ self.params["attn_W"].T  # (T, a)
        tanh_pre = np.tanh(pre)
        scores = tanh_pre @ self.params["attn_v"]
        alpha = nnet.softmax(scores)
        pooled = alpha @ hs
        phi = float(self.params["head_w"] @ pooled + self.params["head_b"][0])
        cache = (ids, xs, hs, gru_cache, tanh_pre, alpha, pooled)
        return phi, cache

    def backward(self, cache, dphi: float) -> Params:
        """Gradient of dphi * phi w.r.t. every parameter group."""
        ids, xs, hs, gru_cache, tanh_pre, alpha, pooled = cache
        p = self.params
        grads: Params = {}
        grads["head_w"] = dphi * pooled
        grads["head_b"] = np.array([dphi])
        dpooled = dphi * p["head_w"]
        dalpha = hs @ dpooled
        dhs = np.outer(alpha, dpooled)
        dscores = alpha * (dalpha - float(alpha @ dalpha))
        dtanh = np.outer(dscores, p["attn_v"])
        grads["attn_v"] = tanh_pre.T @ dscores
        dpre = dtanh * (1.0 - tanh_pre * tanh_pre)
        grads["attn_W"] = dpre.T @ hs
        dhs += dpre @ p["attn_W"]
        gru_grads, dxs = nnet.bigru_backward(p, gru_cache, dhs)
        grads.update(gru_grads)
        demb = np.zeros_like(p["emb"])
        np.add.at(demb, ids, dxs)
        grads["emb"] = demb
        return grads


def hip_predict(model: IntensityModel, tokens: Sequence[str]) -> float:
    """Forward pass clamped to [1, 10]."""
    phi, _ = model.forward(tokens)
    return float(min(max(phi, CLAMP_LO), CLAMP_HI))


def attention_weights(model: IntensityModel, tokens: Sequence[str]) -> np.ndarray:
    _, cache = model.forward(tokens)
    return cache[5]


def _scored_pairs(corpus: Corpus) -> list[tuple[tuple[str, ...], float]]:
    """Every (tokens, gold intensity) pair a corpus provides. Normalized
    counterparts carry their own gold score, so both sides train the
    regressor; that keeps the discriminator calibrated on rewritten text."""
    pairs: list[tuple[tuple[str, ...], float]] = []
    for sample in corpus:
        pairs.append((sample.tokens, sample.intensity))
        if sample.normalized_text is not None and sample.normalized_intensity is not None:
            pairs.append(
                (tuple(sample.normalized_text.split()), sample.normalized_intensity)
            )
    return pairs


def _mse(model: IntensityModel, pairs) -> float:
    errors = [model.forward(tokens)[0] - gold for tokens, gold in pairs]
    return float(np.mean(np.square(errors)))


def hip_train(train: Corpus, val: Corpus, cfg: HipTrainConfig) -> IntensityModel:
    """Minimize MSE with Adam; return the snapshot with lowest validation MSE."""
    if len(train) == 0 or len(val) == 0:
        raise TrainingError("training and validation corpora must be non-empty")
    train_pairs = _scored_pairs(train)
    val_pairs = _scored_pairs(val)
    vocab = nnet.build_vocab((tokens for tokens, _ in train_pairs))
    model = IntensityModel.init(vocab, cfg)
    optimizer = nnet.Adam(model.params, lr=cfg.learning_rate)
    rng = nnet.make_rng(cfg.seed + 1)

    best_params = nnet.copy_params(model.params)
    best_val = _mse(model, val_pairs)
    for _ in range(cfg.epochs):
        order = rng.permutation(len(train_pairs))
        for start in range(0, len(order), cfg.batch_size):
            batch = [train_pairs[i] for i in order[start : start + cfg.batch_size]]
            grads = nnet.zeros_like_params(model.params)
            loss = 0.0
            for tokens, gold in batch:
                phi, cache = model.forward(tokens)
                err = phi - gold
                loss += err * err
                nnet.add_params(grads, model.backward(cache, 2.0 * err / len(batch)))
            loss /= len(batch)
            if not np.isfinite(loss):
                raise TrainingError(f"training diverged: loss={loss}")
            nnet.clip_grads(grads)
            optimizer.step(model.params, grads)
        val_mse = _mse(model, val_pairs)
        if val_mse < best_val:
            best_val = val_mse
            best_params = nnet.copy_params(model.params)
    model.params = best_params
    return model


def hip_metrics(pred: Sequence[float], gold: Sequence[float]) -> RegressionMetrics:
    """RMSE, sample Pearson correlation, and cosine similarity."""
    if len(pred) != len(gold) or len(pred) == 0:
        raise ValueError("pred and gold must be equal-length and non-empty")
    p = np.asarray(pred, dtype=float)
    g = np.asarray(gold, dtype=float)
    rmse = float(np.sqrt(np.mean((p - g) ** 2)))
    np_, ng = np.sqrt(p @ p), np.sqrt(g @ g)
    if np_ == 0.0 or ng == 0.0:
        raise ValueError("cosine undefined for a zero-norm vector")
    cosine = float(p @ g / (np_ * ng))
    dp, dg = p - p.mean(), g - g.mean()
    sp, sg = np.sqrt(np.sum(dp * dp)), np.sqrt(np.sum(dg * dg))
    if sp == 0.0 or sg == 0.0:
        raise ValueError("Pearson undefined for a zero-variance vector")
    pearson = float(dp @ dg / (sp * sg))
    return RegressionMetrics(rmse=rmse, pearson=pearson, cosine=cosine)
