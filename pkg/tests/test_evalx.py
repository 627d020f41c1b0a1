"""Generation metrics, the n-gram LM, the built-in detector and delta_c.

Expected values come from independent computations: BLEU from a hand-worked
modified-precision table, perplexity from a test-local probability table
built with plain counters.
"""

import math
from collections import Counter

import numpy as np
import pytest

from hatenorm import nnet
from hatenorm.evalx import (
    HateDetector,
    NgramLm,
    bleu,
    delta_confidence,
    detector_train,
    labeled_from_corpus,
    lm_train,
    perplexity,
)
from hatenorm.synthetic import SyntheticConfig, generate_synthetic
from hatenorm.corpus import SplitSpec, split_corpus


class TestBleu:
    def test_identity_is_100(self):
        refs = [["a", "b", "c"], ["just", "one"], ["x"]]
        assert bleu(refs, refs) == pytest.approx(100.0, abs=1e-9)

    def test_all_empty_hypotheses(self):
        assert bleu([[], []], [["a"], ["b", "c"]]) == 0.0

    def test_hand_worked_example(self):
        # hyp "the cat sat", ref "the cat sat down":
        # p1 = 3/3; p2 = (2+1)/(2+1); p3 = (1+1)/(1+1); p4 = (0+1)/(0+1)
        # geometric mean 1, brevity penalty exp(1 - 4/3)
        expected = 100.0 * math.exp(1.0 - 4.0 / 3.0)
        got = bleu([["the", "cat", "sat"]], [["the", "cat", "sat", "down"]])
        assert got == pytest.approx(expected, abs=1e-6)

    def test_range_and_monotone_sanity(self):
        rng = np.random.default_rng(0)
        words = ["a", "b", "c", "d"]
        for _ in range(200):
            hyp = [words[i] for i in rng.integers(0, 4, size=rng.integers(1, 8))]
            ref = [words[i] for i in rng.integers(0, 4, size=rng.integers(1, 8))]
            value = bleu([hyp], [ref])
            assert 0.0 <= value <= 100.0

    def test_errors(self):
        with pytest.raises(ValueError):
            bleu([], [])
        with pytest.raises(ValueError):
            bleu([["a"]], [["a"], ["b"]])


def _toy_perplexity_oracle(train_texts, eval_texts, lambdas, add_k):
    """Independent trigram-interpolation calculator built on raw Counters."""
    tri, bi, uni = Counter(), Counter(), Counter()
    tri_ctx, bi_ctx = Counter(), Counter()
    vocab = {nnet.UNK, nnet.EOS}
    total = 0
    for text in train_texts:
        vocab.update(text)
        stream = [nnet.BOS, nnet.BOS] + list(text) + [nnet.EOS]
        for i in range(2, len(stream)):
            tri[(stream[i - 2], stream[i - 1], stream[i])] += 1
            tri_ctx[(stream[i - 2], stream[i - 1])] += 1
            bi[(stream[i - 1], stream[i])] += 1
            bi_ctx[(stream[i - 1],)] += 1
            uni[stream[i]] += 1
            total += 1
    l1, l2, l3 = lambdas
    v = len(vocab)

    def prob(w1, w2, w):
        carry = 0.0
        p = 0.0
        if tri_ctx[(w1, w2)] > 0:
            p += l3 * tri[(w1, w2, w)] / tri_ctx[(w1, w2)]
        else:
            carry += l3
        if bi_ctx[(w2,)] > 0:
            p += (l2 + carry) * bi[(w2, w)] / bi_ctx[(w2,)]
            carry = 0.0
        else:
            carry += l2
        p += (l1 + carry) * (uni[w] + add_k) / (total + add_k * v)
        return p

    logp, count = 0.0, 0
    for text in eval_texts:
        stream = [nnet.BOS, nnet.BOS] + [
            t if t in vocab else nnet.UNK for t in text
        ] + [nnet.EOS]
        for i in range(2, len(stream)):
            logp += math.log(prob(stream[i - 2], stream[i - 1], stream[i]))
            count += 1
    return math.exp(-logp / count)


class TestNgramLm:
    def test_uniform_model_perplexity_equals_vocab_size(self):
        symbols = [f"s{i}" for i in range(50)]
        lm = NgramLm.uniform(symbols)
        assert lm.vocab_size == 50
        text = [symbols[3], symbols[7], symbols[7], symbols[0]]
        assert perplexity(lm, [text]) == pytest.approx(50.0, abs=1e-9)

    def test_repeated_token_stream_approaches_one(self):
        # the one EOS event per text keeps perplexity strictly above 1, so
        # the stream must be long for the limit to show
        train = [["loop"] * 400 for _ in range(20)]
        lm = lm_train(train, add_k=1e-6)
        assert perplexity(lm, [["loop"] * 400]) == pytest.approx(1.0, abs=0.05)

    def test_three_sentence_toy_matches_oracle(self):
        train = [
            ["the", "cat", "sat"],
            ["the", "dog", "sat", "down"],
            ["a", "cat", "ran"],
        ]
        eval_texts = [["the", "cat", "ran"], ["a", "dog", "sat"]]
        lambdas, add_k = (0.2, 0.3, 0.5), 1.0
        lm = lm_train(train, order=3, lambdas=lambdas, add_k=add_k)
        expected = _toy_perplexity_oracle(train, eval_texts, lambdas, add_k)
        assert perplexity(lm, eval_texts) == pytest.approx(expected, abs=1e-12)

    def test_conditional_distributions_sum_to_one(self):
        train = [["a", "b", "a", "c"], ["b", "b", "c"]]
        lm = lm_train(train)
        predicted = sorted(lm.vocab - {nnet.BOS})
        contexts = [[], ["a"], ["a", "b"], ["zzz"], ["c", "zzz"], ["b", "b"]]
        for ctx in contexts:
            mass = sum(lm.prob(ctx, w) for w in predicted)
            assert mass == pytest.approx(1.0, abs=1e-9), ctx

    def test_perplexity_at_least_one(self):
        train = [["x", "y"], ["y", "x", "x"]]
        lm = lm_train(train)
        assert perplexity(lm, [["x", "y", "x"]]) >= 1.0

    def test_errors(self):
        with pytest.raises(ValueError):
            lm_train([])
        with pytest.raises(ValueError):
            perplexity(lm_train([["a"]]), [])
        with pytest.raises(ValueError):
            NgramLm(order=2, lambdas=(0.2, 0.3), add_k=1.0)


class TestDetector:
    def test_separable_data_fits_perfectly(self):
        pos = [(["bad", "post", f"f{i}"], 1) for i in range(20)]
        neg = [(["nice", "post", f"f{i}"], 0) for i in range(20)]
        detector = detector_train(pos + neg)
        accuracy = np.mean(
            [(detector.score(t) >= 0.5) == bool(y) for t, y in pos + neg]
        )
        assert accuracy == 1.0

    def test_random_labels_are_chance(self):
        rng = np.random.default_rng(4)
        labeled = []
        for i in range(400):
            tokens = [f"w{rng.integers(0, 30)}" for _ in range(8)]
            labeled.append((tokens, int(rng.integers(0, 2))))
        detector = detector_train(labeled)
        held = []
        for i in range(400):
            tokens = [f"w{rng.integers(0, 30)}" for _ in range(8)]
            held.append((tokens, int(rng.integers(0, 2))))
        accuracy = np.mean([(detector.score(t) >= 0.5) == bool(y) for t, y in held])
        assert 0.4 <= accuracy <= 0.6

    def test_single_class_rejected(self):
        with pytest.raises(ValueError):
            detector_train([(["a"], 1), (["b"], 1)])

    def test_output_strictly_inside_unit_interval(self):
        detector = HateDetector(
            {"w": 0}, weights=np.array([1e9]), bias=-1e9
        )
        for tokens in ([], ["w"], ["w"] * 100):
            gamma = detector.score(tokens)
            assert 0.0 < gamma < 1.0

    def test_synthetic_corpus_held_out_accuracy(self):
        corpus = generate_synthetic(SyntheticConfig(n_samples=700), seed=8)
        train, _, test = split_corpus(corpus, SplitSpec(seed=0))
        detector = detector_train(labeled_from_corpus(train))
        held = labeled_from_corpus(test)
        accuracy = np.mean([(detector.score(t) >= 0.5) == bool(y) for t, y in held])
        assert accuracy >= 0.9


class _FixedScores:
    """Detector stub returning a fixed gamma per first token."""

    def __init__(self, table):
        self.table = table

    def score(self, tokens):
        return self.table[tokens[0]]


def _pairs_from_gammas(gammas):
    table = {}
    pairs = []
    for i, (g_orig, g_norm) in enumerate(gammas):
        a, b = f"o{i}", f"n{i}"
        table[a], table[b] = g_orig, g_norm
        pairs.append(([a], [b]))
    return _FixedScores(table), pairs


class TestDeltaConfidence:
    def test_hand_example(self):
        detector, pairs = _pairs_from_gammas([(0.9, 0.6), (0.8, 0.7)])
        delta, m = delta_confidence(detector, pairs)
        assert m == 2
        assert delta == pytest.approx(0.2, abs=1e-12)

    def test_filtered_pair_changes_nothing(self):
        detector, pairs = _pairs_from_gammas([(0.9, 0.6), (0.8, 0.7), (0.9, 0.4)])
        delta, m = delta_confidence(detector, pairs)
        assert m == 2
        assert delta == pytest.approx(0.2, abs=1e-12)

    def test_all_filtered_is_error(self):
        detector, pairs = _pairs_from_gammas([(0.4, 0.3), (0.9, 0.2)])
        with pytest.raises(ValueError, match="filtered"):
            delta_confidence(detector, pairs)

    def test_swap_negates(self):
        rng = np.random.default_rng(9)
        gammas = [(float(a), float(b)) for a, b in rng.uniform(0.5, 1.0, size=(50, 2))]
        detector, pairs = _pairs_from_gammas(gammas)
        forward, m1 = delta_confidence(detector, pairs)
        swapped, m2 = delta_confidence(detector, [(b, a) for a, b in pairs])
        assert m1 == m2
        assert swapped == pytest.approx(-forward, abs=1e-12)

    def test_empty_pairs_rejected(self):
        detector, _ = _pairs_from_gammas([(0.9, 0.8)])
        with pytest.raises(ValueError):
            delta_confidence(detector, [])
