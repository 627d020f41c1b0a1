"""Generation metrics and the extrinsic confidence-drop evaluation.

BLEU is corpus-level BLEU-4 with add-one smoothing on the modified
precisions for n >= 2. Perplexity comes from an in-repo interpolated
n-gram model with an add-k unigram floor. The confidence drop delta_c is
the mean fall in a detector's hate-class probability from original to
normalized text, over pairs where both sides are still classified as hate
(probability >= 0.5).
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import nnet
from .corpus import Corpus

GAMMA_THRESHOLD = 0.5


@dataclass(frozen=True)
class EvalReport:
    """Core generation/extrinsic numbers; perplexity and delta_c are None
    when there is nothing to score them on (no pairs survived)."""

    bleu: float
    perplexity: Optional[float]
    delta_c: Optional[float]
    m_count: int


def bleu(hypotheses: Sequence[Sequence[str]],
         references: Sequence[Sequence[str]]) -> float:
    """Corpus BLEU-4 in [0, 100]: pooled modified n-gram precisions with
    add-one smoothing for n >= 2, geometric mean, brevity penalty."""
    if len(hypotheses) != len(references) or not hypotheses:
        raise ValueError("need equally many hypotheses and references, >= 1")
    clipped = [0] * 4
    totals = [0] * 4
    hyp_len = ref_len = 0
    for hyp, ref in zip(hypotheses, references):
        hyp_len += len(hyp)
        ref_len += len(ref)
        for n in range(1, 5):
            hyp_ngrams = Counter(
                tuple(hyp[i : i + n]) for i in range(len(hyp) - n + 1)
            )
            ref_ngrams = Counter(
                tuple(ref[i : i + n]) for i in range(len(ref) - n + 1)
            )
            clipped[n - 1] += sum(
                min(count, ref_ngrams[gram]) for gram, count in hyp_ngrams.items()
            )
            totals[n - 1] += max(0, len(hyp) - n + 1)
    if hyp_len == 0 or totals[0] == 0 or clipped[0] == 0:
        return 0.0
    log_sum = math.log(clipped[0] / totals[0])
    for n in range(2, 5):
        log_sum += math.log((clipped[n - 1] + 1) / (totals[n - 1] + 1))
    brevity = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)
    return 100.0 * brevity * math.exp(log_sum / 4.0)


# ---------------------------------------------------------------------------
# Interpolated n-gram language model
# ---------------------------------------------------------------------------


class NgramLm:
    """Interpolated n-gram model over whitespace tokens. Unseen contexts fold
    their interpolation weight into the next lower order, so every
    conditional distribution sums to 1 over the predicted vocabulary
    (training tokens plus UNK and EOS, never BOS)."""

    def __init__(self, order: int, lambdas: Sequence[float], add_k: float):
        if order < 1:
            raise ValueError("order must be >= 1")
        if len(lambdas) != order or abs(sum(lambdas) - 1.0) > 1e-9:
            raise ValueError("need one weight per order, summing to 1")
        if any(l < 0 for l in lambdas):
            raise ValueError("interpolation weights must be non-negative")
        self.order = order
        self.lambdas = tuple(float(l) for l in lambdas)
        self.add_k = float(add_k)
        self.ngram_counts: list[Counter] = [Counter() for _ in range(order)]
        self.context_totals: list[Counter] = [Counter() for _ in range(order)]
        self.vocab: set[str] = {nnet.UNK, nnet.EOS}
        self.unigram_total = 0
        self._uniform_size: Optional[int] = None

    @classmethod
    def uniform(cls, symbols: Sequence[str]) -> "NgramLm":
        """Degenerate model assigning 1/|symbols| to every prediction."""
        lm = cls(order=1, lambdas=(1.0,), add_k=1.0)
        lm.vocab = set(symbols)
        lm._uniform_size = len(set(symbols))
        return lm

    @property
    def vocab_size(self) -> int:
        return self._uniform_size or len(self.vocab)

    def fit(self, texts: Sequence[Sequence[str]]) -> "NgramLm":
        for tokens in texts:
            padded = [nnet.BOS] * (self.order - 1) + list(tokens) + [nnet.EOS]
            self.vocab.update(tokens)
            for i in range(self.order - 1, len(padded)):
                for n in range(1, self.order + 1):
                    context = tuple(padded[i - n + 1 : i])
                    self.ngram_counts[n - 1][context + (padded[i],)] += 1
                    self.context_totals[n - 1][context] += 1
        self.unigram_total = self.context_totals[0][()]
        return self

    def _map(self, token: str) -> str:
        return token if token in self.vocab else nnet.UNK

    def prob(self, context: Sequence[str], token: str) -> float:
        """p(token | context); context is the preceding tokens (any length)."""
        if self._uniform_size is not None:
            return 1.0 / self._uniform_size
        token = self._map(token)
        padded = [nnet.BOS] * (self.order - 1) + [self._map(t) for t in context]
        carry = 0.0
        p = 0.0
        for n in range(self.order, 1, -1):
            lam = self.lambdas[n - 1] + carry
            ctx = tuple(padded[len(padded) - n + 1 :])
            total = self.context_totals[n - 1][ctx]
            if total > 0:
                p += lam * self.ngram_counts[n - 1][ctx + (token,)] / total
                carry = 0.0
            else:
                carry = lam
        v = self.vocab_size
        p += (self.lambdas[0] + carry) * (
            (self.ngram_counts[0][(token,)] + self.add_k)
            / (self.unigram_total + self.add_k * v)
        )
        return p


def lm_train(texts: Sequence[Sequence[str]], order: int = 3,
             lambdas: Optional[Sequence[float]] = None,
             add_k: float = 1.0) -> NgramLm:
    if not texts:
        raise ValueError("cannot train a language model on no text")
    if lambdas is None:
        lambdas = {1: (1.0,), 2: (0.3, 0.7), 3: (0.2, 0.3, 0.5)}.get(
            order, tuple([1.0 / order] * order)
        )
    return NgramLm(order, lambdas, add_k).fit(texts)


def perplexity(lm: NgramLm, texts: Sequence[Sequence[str]]) -> float:
    """exp of the mean negative log-probability per token, EOS included."""
    if not texts:
        raise ValueError("cannot score an empty text list")
    total_logp = 0.0
    total_tokens = 0
    for tokens in texts:
        stream = list(tokens) + [nnet.EOS]
        for i, token in enumerate(stream):
            total_logp += math.log(lm.prob(stream[:i], token))
            total_tokens += 1
    return math.exp(-total_logp / total_tokens)


# ---------------------------------------------------------------------------
# Built-in hate detector and confidence drop
# ---------------------------------------------------------------------------


class HateDetector:
    """Bag-of-tokens logistic model emitting the hate-class probability."""

    def __init__(self, vocab: dict[str, int], weights: np.ndarray, bias: float):
        self.vocab = vocab
        self.weights = weights
        self.bias = bias

    def score(self, tokens: Sequence[str]) -> float:
        z = self.bias
        for token in tokens:
            idx = self.vocab.get(token)
            if idx is not None:
                z += self.weights[idx]
        z = min(max(z, -30.0), 30.0)  # keeps gamma strictly inside (0, 1)
        return float(1.0 / (1.0 + math.exp(-z)))


def detector_train(
    labeled: Sequence[tuple[Sequence[str], int]],
    l2: float = 1e-2,
    learning_rate: float = 0.5,
    epochs: int = 200,
    seed: int = 0,
) -> HateDetector:
    """L2-regularized logistic regression on token counts (full-batch Adam)."""
    labels = {label for _, label in labeled}
    if labels != {0, 1}:
        raise ValueError("need both hate (1) and non-hate (0) examples")
    vocab: dict[str, int] = {}
    for tokens, _ in labeled:
        for token in tokens:
            if token not in vocab:
                vocab[token] = len(vocab)
    X = np.zeros((len(labeled), len(vocab)))
    y = np.empty(len(labeled))
    for row, (tokens, label) in enumerate(labeled):
        for token in tokens:
            X[row, vocab[token]] += 1.0
        y[row] = label
    params = {"w": np.zeros(len(vocab)), "b": np.zeros(1)}
    optimizer = nnet.Adam(params, lr=learning_rate)
    n = len(labeled)
    for _ in range(epochs):
        p = nnet.sigmoid(X @ params["w"] + params["b"][0])
        err = p - y
        grads = {
            "w": X.T @ err / n + l2 * params["w"],
            "b": np.array([err.mean()]),
        }
        optimizer.step(params, grads)
    return HateDetector(vocab, params["w"], float(params["b"][0]))


def labeled_from_corpus(corpus: Corpus) -> list[tuple[tuple[str, ...], int]]:
    """Hateful originals (any span) against benign templates (no spans)."""
    return [(s.tokens, 1 if s.spans else 0) for s in corpus]


def delta_confidence(
    detector: HateDetector,
    pairs: Sequence[tuple[Sequence[str], Sequence[str]]],
) -> tuple[float, int]:
    """Mean drop in hate confidence over pairs where both sides stay
    classified as hate. Raises when the retained set is empty."""
    if not pairs:
        raise ValueError("need at least one (original, normalized) pair")
    drops = []
    for original, normalized in pairs:
        g_orig = detector.score(original)
        g_norm = detector.score(normalized)
        if g_orig >= GAMMA_THRESHOLD and g_norm >= GAMMA_THRESHOLD:
            drops.append(g_orig - g_norm)
    if not drops:
        raise ValueError(
            "every pair was filtered out: delta_c is undefined on an empty set"
        )
    return float(np.mean(drops)), len(drops)
