"""Linear-chain CRF over B/I/O tags: exact log-partition by the forward
algorithm, NLL gradients from forward-backward marginals, and Viterbi
decoding.

Two emission providers share the same chain: a "feature" mode whose score
is linear in per-(token, tag) weights, and the default "neural" mode
(embeddings + bidirectional gated recurrent layer + per-token dense layer).
Ties in Viterbi break toward the lowest tag index, with tags ordered
B < I < O.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import nnet
from .corpus import Corpus, Span, TAG_TO_ID, ID_TO_TAG, decode_bio, check_spans
from .intensity import TrainingError
from .nnet import Params

N_TAGS = 3


@dataclass
class HsiTrainConfig:
    epochs: int = 5
    batch_size: int = 32
    learning_rate: float = 3e-3
    hidden: int = 32
    embed_dim: int = 32
    mode: str = "neural"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.mode not in ("neural", "feature"):
            raise ValueError(f"unknown emission mode {self.mode!r}")
        for name in ("epochs", "batch_size", "hidden", "embed_dim"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


@dataclass(frozen=True)
class SpanMetrics:
    precision: float
    recall: float
    f1: float
    exact_span_rate: float


class CrfModel:
    """Chain parameters (transitions/start/stop) plus an emission provider."""

    def __init__(self, mode: str, vocab: dict[str, int], params: Params,
                 hidden: int = 0):
        self.mode = mode
        self.vocab = vocab
        self.params = params
        self.hidden = hidden

    @classmethod
    def init(cls, vocab: dict[str, int], cfg: HsiTrainConfig) -> "CrfModel":
        params: Params = {
            "trans": np.zeros((N_TAGS, N_TAGS)),
            "start": np.zeros(N_TAGS),
            "stop": np.zeros(N_TAGS),
        }
        if cfg.mode == "feature":
            params["feat_w"] = np.zeros((len(vocab), N_TAGS))
            params["feat_b"] = np.zeros(N_TAGS)
            return cls("feature", vocab, params)
        rng = nnet.make_rng(cfg.seed)
        params["emb"] = rng.normal(0.0, 0.1, size=(len(vocab), cfg.embed_dim))
        params.update(nnet.bigru_init(rng, cfg.embed_dim, cfg.hidden))
        params["dense_W"] = nnet.glorot(rng, (N_TAGS, 2 * cfg.hidden))
        params["dense_b"] = np.zeros(N_TAGS)
        return cls("neural", vocab, params, hidden=cfg.hidden)

    def emissions(self, tokens: Sequence[str]):
        """Per-token scores (T, 3) plus a cache for emission backprop."""
        if len(tokens) == 0:
            raise ValueError("cannot tag an empty token list")
        ids = nnet.lookup(self.vocab, tokens)
        if self.mode == "feature":
            E = self.params["feat_w"][ids] + self.params["feat_b"]
            return E, ids
        xs = self.params["emb"][ids]
        hs, gru_cache = nnet.bigru_forward(self.params, xs)
        E = hs @ self.params["dense_W"].T + self.params["dense_b"]
        return E, (ids, hs, gru_cache)

    def emissions_backward(self, cache, dE: np.ndarray) -> Params:
        if self.mode == "feature":
            ids = cache
            dw = np.zeros_like(self.params["feat_w"])
            np.add.at(dw, ids, dE)
            return {"feat_w": dw, "feat_b": dE.sum(axis=0)}
        ids, hs, gru_cache = cache
        grads: Params = {
            "dense_W": dE.T @ hs,
            "dense_b": dE.sum(axis=0),
        }
        dhs = dE @ self.params["dense_W"]
        gru_grads, dxs = nnet.bigru_backward(self.params, gru_cache, dhs)
        grads.update(gru_grads)
        demb = np.zeros_like(self.params["emb"])
        np.add.at(demb, ids, dxs)
        grads["emb"] = demb
        return grads


def _tag_ids(tags: Sequence[str]) -> np.ndarray:
    return np.array([TAG_TO_ID[t] for t in tags], dtype=np.intp)


def crf_score(model: CrfModel, tokens: Sequence[str], tags: Sequence[str]) -> float:
    """Unnormalized sequence score: start + emissions + transitions + stop."""
    if len(tags) != len(tokens):
        raise ValueError(
            f"got {len(tags)} tags for {len(tokens)} tokens"
        )
    E, _ = model.emissions(tokens)
    return _score_from_emissions(model.params, E, _tag_ids(tags))


def _score_from_emissions(params: Params, E: np.ndarray, ids: np.ndarray) -> float:
    score = params["start"][ids[0]] + E[np.arange(len(ids)), ids].sum()
    score += params["trans"][ids[:-1], ids[1:]].sum()
    score += params["stop"][ids[-1]]
    return float(score)


def _forward_alphas(params: Params, E: np.ndarray) -> np.ndarray:
    T = E.shape[0]
    alphas = np.empty((T, N_TAGS))
    alphas[0] = params["start"] + E[0]
    for i in range(1, T):
        alphas[i] = E[i] + nnet.logsumexp(
            alphas[i - 1][:, None] + params["trans"], axis=0
        )
    return alphas


def _backward_betas(params: Params, E: np.ndarray) -> np.ndarray:
    T = E.shape[0]
    betas = np.empty((T, N_TAGS))
    betas[T - 1] = params["stop"]
    for i in range(T - 2, -1, -1):
        betas[i] = nnet.logsumexp(
            params["trans"] + E[i + 1] + betas[i + 1], axis=1
        )
    return betas


def crf_log_partition(model: CrfModel, tokens: Sequence[str]) -> float:
    """log sum over all 3^m tag sequences of exp(score), via the forward
    recursion in log space."""
    E, _ = model.emissions(tokens)
    alphas = _forward_alphas(model.params, E)
    return float(nnet.logsumexp(alphas[-1] + model.params["stop"]))


def crf_nll_and_grad(
    model: CrfModel, batch: Sequence[tuple[Sequence[str], Sequence[str]]]
):
    """Summed negative log-likelihood over the batch and its gradient
    (expected minus empirical counts, from forward-backward marginals;
    emission gradients flow into the provider)."""
    params = model.params
    loss = 0.0
    grads = nnet.zeros_like_params(params)
    for tokens, tags in batch:
        if len(tags) != len(tokens):
            raise ValueError("gold tag length mismatch")
        ids = _tag_ids(tags)
        E, cache = model.emissions(tokens)
        T = E.shape[0]
        alphas = _forward_alphas(params, E)
        betas = _backward_betas(params, E)
        log_z = float(nnet.logsumexp(alphas[-1] + params["stop"]))
        loss += log_z - _score_from_emissions(params, E, ids)

        marginals = np.exp(alphas + betas - log_z)  # (T, 3)
        dE = marginals.copy()
        dE[np.arange(T), ids] -= 1.0
        grads["start"] += marginals[0]
        grads["start"][ids[0]] -= 1.0
        grads["stop"] += marginals[-1]
        grads["stop"][ids[-1]] -= 1.0
        for i in range(1, T):
            pair = np.exp(
                alphas[i - 1][:, None]
                + params["trans"]
                + E[i]
                + betas[i]
                - log_z
            )
            grads["trans"] += pair
            grads["trans"][ids[i - 1], ids[i]] -= 1.0
        nnet.add_params(grads, model.emissions_backward(cache, dE))
    return loss, grads


def viterbi(model: CrfModel, tokens: Sequence[str]) -> list[str]:
    """Exact argmax tag sequence; ties break toward the lowest tag index."""
    E, _ = model.emissions(tokens)
    params = model.params
    T = E.shape[0]
    delta = params["start"] + E[0]
    backptr = np.empty((T, N_TAGS), dtype=np.intp)
    for i in range(1, T):
        cand = delta[:, None] + params["trans"]  # (prev, cur)
        backptr[i] = np.argmax(cand, axis=0)
        delta = cand[backptr[i], np.arange(N_TAGS)] + E[i]
    best = int(np.argmax(delta + params["stop"]))
    path = [best]
    for i in range(T - 1, 0, -1):
        best = int(backptr[i][best])
        path.append(best)
    path.reverse()
    return [ID_TO_TAG[t] for t in path]


def hsi_predict_spans(model: CrfModel, tokens: Sequence[str]) -> list[Span]:
    return decode_bio(viterbi(model, tokens))


def hsi_train(train: Corpus, val: Corpus, cfg: HsiTrainConfig) -> CrfModel:
    """Minimize NLL with Adam; return the best-validation-F1 snapshot."""
    if len(train) == 0 or len(val) == 0:
        raise TrainingError("training and validation corpora must be non-empty")
    vocab = nnet.build_vocab((s.tokens for s in train))
    model = CrfModel.init(vocab, cfg)
    optimizer = nnet.Adam(model.params, lr=cfg.learning_rate)
    rng = nnet.make_rng(cfg.seed + 1)

    def val_f1() -> float:
        instances = [
            (hsi_predict_spans(model, s.tokens), list(s.spans), len(s.tokens))
            for s in val
        ]
        return span_metrics_micro(instances).f1

    best_params = nnet.copy_params(model.params)
    best_f1 = val_f1()
    pairs = [(s.tokens, s.bio_tags()) for s in train]
    for _ in range(cfg.epochs):
        order = rng.permutation(len(pairs))
        for start in range(0, len(order), cfg.batch_size):
            batch = [pairs[i] for i in order[start : start + cfg.batch_size]]
            loss, grads = crf_nll_and_grad(model, batch)
            if not np.isfinite(loss):
                raise TrainingError(f"training diverged: loss={loss}")
            nnet.scale_params(grads, 1.0 / len(batch))
            nnet.clip_grads(grads)
            optimizer.step(model.params, grads)
        f1 = val_f1()
        if f1 > best_f1:
            best_f1 = f1
            best_params = nnet.copy_params(model.params)
    model.params = best_params
    return model


def span_metrics(
    pred: Sequence[Span], gold: Sequence[Span], n_tokens: int
) -> SpanMetrics:
    """Token-level P/R/F1 over the positive class for one instance, plus the
    exact-span match rate."""
    return span_metrics_micro([(pred, gold, n_tokens)])


def span_metrics_micro(
    instances: Sequence[tuple[Sequence[Span], Sequence[Span], int]]
) -> SpanMetrics:
    """Micro-average over (pred, gold, n_tokens) instances."""
    tp = pred_total = gold_total = 0
    exact = exact_total = 0
    for pred, gold, n_tokens in instances:
        check_spans(n_tokens, sorted(pred))
        check_spans(n_tokens, sorted(gold))
        pred_pos = {i for s, e in pred for i in range(s, e + 1)}
        gold_pos = {i for s, e in gold for i in range(s, e + 1)}
        tp += len(pred_pos & gold_pos)
        pred_total += len(pred_pos)
        gold_total += len(gold_pos)
        exact += len(set(pred) & set(gold))
        exact_total += len(gold)
    # empty-vs-empty counts as perfect agreement
    precision = tp / pred_total if pred_total else (1.0 if gold_total == 0 else 0.0)
    recall = tp / gold_total if gold_total else (1.0 if pred_total == 0 else 0.0)
    f1 = (
        2 * precision * recall / (precision + recall)
        if precision + recall > 0
        else 0.0
    )
    exact_rate = exact / exact_total if exact_total else (1.0 if not pred_total else 0.0)
    return SpanMetrics(
        precision=precision, recall=recall, f1=f1, exact_span_rate=exact_rate
    )
