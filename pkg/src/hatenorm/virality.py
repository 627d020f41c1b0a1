"""Engagement-reduction hypothesis testing.

Text features (rarity, LIX/RIX readability, tf-idf mass, lexicon polarity)
feed a ridge regressor of log comment counts. The paired experiment samples
pairs of (original, normalized) posts, tracks per-iteration median
differences in predicted engagement, and tests the full prediction sets
with Welch's t-test. The Student-t CDF is computed in-repo through the
regularized incomplete beta function (modified Lentz continued fraction).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .corpus import Corpus, Sample


# ---------------------------------------------------------------------------
# Student-t machinery
# ---------------------------------------------------------------------------

_CF_TOL = 1e-10
_CF_MAX_ITER = 500


def _beta_cf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        coef = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + coef * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + coef / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        coef = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + coef * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + coef / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_TOL:
            return h
    raise RuntimeError(f"incomplete beta did not converge for a={a} b={b} x={x}")


def reg_inc_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        a * math.log(x)
        + b * math.log1p(-x)
        - (math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b))
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def student_t_cdf(t: float, dof: float) -> float:
    """P(T <= t) for Student's t with dof degrees of freedom."""
    if t == 0.0:
        return 0.5
    tail = reg_inc_beta(dof / 2.0, 0.5, dof / (dof + t * t)) / 2.0
    return 1.0 - tail if t > 0 else tail


def student_t_two_sided_p(t: float, dof: float) -> float:
    """P(|T| >= |t|); exactly 1 at t = 0."""
    if t == 0.0:
        return 1.0
    return reg_inc_beta(dof / 2.0, 0.5, dof / (dof + t * t))


@dataclass(frozen=True)
class WelchResult:
    t: float
    dof: float
    p: float
    effect_size: float  # Cohen's d, pooled-SD form


def welch_t_test(a: Sequence[float], b: Sequence[float]) -> WelchResult:
    """Two-sided Welch's t-test with Welch-Satterthwaite degrees of freedom."""
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    if len(x) < 2 or len(y) < 2:
        raise ValueError("both samples need at least two observations")
    na, nb = len(x), len(y)
    va = float(np.var(x, ddof=1))
    vb = float(np.var(y, ddof=1))
    if va == 0.0 and vb == 0.0:
        raise ValueError("both samples have zero variance: test is degenerate")
    sa, sb = va / na, vb / nb
    t = float((x.mean() - y.mean()) / math.sqrt(sa + sb))
    dof = (sa + sb) ** 2 / (sa * sa / (na - 1) + sb * sb / (nb - 1))
    p = student_t_two_sided_p(t, dof)
    pooled = math.sqrt(((na - 1) * va + (nb - 1) * vb) / (na + nb - 2))
    d = float((x.mean() - y.mean()) / pooled)
    return WelchResult(t=t, dof=float(dof), p=p, effect_size=d)


# ---------------------------------------------------------------------------
# Text features
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EngagementFeatures:
    complexity: float
    lix: float
    rix: float
    informativeness: float
    polarity: float

    def as_vector(self) -> np.ndarray:
        return np.array(
            [self.complexity, self.lix, self.rix, self.informativeness,
             self.polarity]
        )


FEATURE_NAMES = ("complexity", "lix", "rix", "informativeness", "polarity")

_SENTENCE_CHARS = set(".!?")


def load_sentiment_lexicon(path: Optional[str | Path] = None) -> dict[str, float]:
    """token<TAB>score lines, scores in [-1, 1]. Defaults to the bundled file."""
    if path is None:
        text = (
            resources.files("hatenorm.data")
            .joinpath("sentiment_lexicon.txt")
            .read_text(encoding="utf-8")
        )
    else:
        text = Path(path).read_text(encoding="utf-8")
    lexicon: dict[str, float] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            token, raw_score = line.split("\t")
            score = float(raw_score)
        except ValueError as exc:
            raise ValueError(f"lexicon line {lineno}: {line!r}") from exc
        if not -1.0 <= score <= 1.0:
            raise ValueError(f"lexicon line {lineno}: score {score} outside [-1,1]")
        lexicon[token] = score
    return lexicon


def extract_features(
    tokens: Sequence[str],
    corpus_stats: Corpus,
    sentiment_lexicon: dict[str, float],
) -> EngagementFeatures:
    """Rarity, LIX/RIX readability, tf-idf mass and mean lexicon polarity."""
    if not tokens:
        raise ValueError("cannot featurize an empty token list")
    words = [t for t in tokens if t.isalpha()]
    sentences = max(
        1, sum(1 for t in tokens if t and all(ch in _SENTENCE_CHARS for ch in t))
    )
    long_words = [w for w in words if len(w) > 6]
    if not words:
        return EngagementFeatures(0.0, 0.0, 0.0, 0.0, 0.0)

    w, lw, s = len(words), len(long_words), sentences
    lix = w / s + 100.0 * lw / w
    rix = lw / s

    tf = corpus_stats.term_frequency
    total = corpus_stats.total_tokens()
    min_tf = min(tf.values()) if tf else 1
    complexity = float(
        np.mean([-math.log(tf.get(word, min_tf) / total) for word in words])
    )

    n_docs = len(corpus_stats)
    df = corpus_stats.document_frequency
    counts: dict[str, int] = {}
    for word in words:
        counts[word] = counts.get(word, 0) + 1
    informativeness = sum(
        count * (math.log((n_docs + 1) / (df.get(word, 0) + 1)) + 1.0)
        for word, count in counts.items()
    )

    covered = [sentiment_lexicon[w] for w in words if w in sentiment_lexicon]
    polarity = float(np.mean(covered)) if covered else 0.0

    return EngagementFeatures(
        complexity=complexity,
        lix=lix,
        rix=rix,
        informativeness=float(informativeness),
        polarity=polarity,
    )


# ---------------------------------------------------------------------------
# Engagement regressor (ridge on log counts)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EngagementModel:
    means: np.ndarray
    stds: np.ndarray
    weights: np.ndarray
    bias: float
    alpha: float


def engagement_train(
    features: Sequence[EngagementFeatures],
    counts: Sequence[int],
    alpha: float = 1e-2,
) -> EngagementModel:
    """Ridge fit of ln(1 + count) on standardized features."""
    if len(features) != len(counts) or len(features) < 2:
        raise ValueError("need >= 2 (features, count) pairs of equal length")
    if any(c < 0 for c in counts):
        raise ValueError("comment counts must be non-negative")
    X = np.stack([f.as_vector() for f in features])
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    constant = np.where(stds == 0.0)[0]
    if constant.size:
        names = [FEATURE_NAMES[i] for i in constant]
        raise ValueError(f"constant features cannot be standardized: {names}")
    Z = (X - means) / stds
    y = np.log1p(np.asarray(counts, dtype=float))
    bias = float(y.mean())
    gram = Z.T @ Z + alpha * np.eye(Z.shape[1])
    weights = np.linalg.solve(gram, Z.T @ (y - bias))
    return EngagementModel(means=means, stds=stds, weights=weights,
                           bias=bias, alpha=alpha)


def engagement_predict(model: EngagementModel, features: EngagementFeatures) -> float:
    z = (features.as_vector() - model.means) / model.stds
    value = math.exp(float(model.weights @ z) + model.bias) - 1.0
    return max(value, 0.0)


# ---------------------------------------------------------------------------
# Paired sampling experiment
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ViralityReport:
    iterations: tuple[float, ...]  # per-iteration median differences
    welch: WelchResult
    k: int
    n_iterations: int
    sampled_with_replacement: bool

    def to_json(self) -> dict:
        return {
            "iterations": list(self.iterations),
            "t": self.welch.t,
            "dof": self.welch.dof,
            "p": self.welch.p,
            "effect_size": self.welch.effect_size,
            "k": self.k,
            "n_iterations": self.n_iterations,
            "sampled_with_replacement": self.sampled_with_replacement,
        }


def virality_experiment(
    model: EngagementModel,
    pairs: Sequence[tuple[Sample, Sample]],
    corpus_stats: Corpus,
    sentiment_lexicon: dict[str, float],
    k: int = 300,
    n_iterations: int = 10,
    seed: int = 0,
) -> ViralityReport:
    """Repeated paired sampling of predicted engagement, plus a final Welch
    test on the two full prediction sets."""
    if not pairs:
        raise ValueError("need at least one (original, normalized) pair")

    def predict(sample: Sample) -> float:
        feats = extract_features(sample.tokens, corpus_stats, sentiment_lexicon)
        return engagement_predict(model, feats)

    pred_orig = np.array([predict(orig) for orig, _ in pairs])
    pred_norm = np.array([predict(norm) for _, norm in pairs])

    with_replacement = len(pairs) < k
    rng = np.random.default_rng(np.random.PCG64(seed))
    medians = []
    for _ in range(n_iterations):
        idx = rng.choice(len(pairs), size=k, replace=with_replacement)
        medians.append(
            float(np.median(pred_orig[idx]) - np.median(pred_norm[idx]))
        )

    try:
        welch = welch_t_test(pred_orig, pred_norm)
    except ValueError:
        if np.array_equal(pred_orig, pred_norm):
            # identical constant sets: report the null outcome directly
            welch = WelchResult(
                t=0.0, dof=float(max(len(pairs) * 2 - 2, 1)), p=1.0,
                effect_size=0.0,
            )
        else:
            raise
    return ViralityReport(
        iterations=tuple(medians),
        welch=welch,
        k=k,
        n_iterations=n_iterations,
        sampled_with_replacement=with_replacement,
    )
