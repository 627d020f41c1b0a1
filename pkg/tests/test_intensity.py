"""Intensity regressor: gradients, attention, clamping, metrics, training."""

import math

import numpy as np
import pytest

from hatenorm import nnet
from hatenorm.corpus import Corpus, Sample
from hatenorm.intensity import (
    HipTrainConfig,
    IntensityModel,
    TrainingError,
    attention_weights,
    hip_metrics,
    hip_predict,
    hip_train,
)
from hatenorm.synthetic import SyntheticConfig, generate_synthetic


def _tiny_model(seed=4):
    cfg = HipTrainConfig(hidden=3, embed_dim=3, attn_dim=3, seed=seed)
    vocab = nnet.build_vocab([["a", "b", "c"], ["d", "e"]])
    return IntensityModel.init(vocab, cfg)


def _batch_loss(model, samples):
    total = 0.0
    for tokens, gold in samples:
        phi, _ = model.forward(tokens)
        total += (phi - gold) ** 2
    return total / len(samples)


class TestGradients:
    def test_full_model_matches_central_differences(self):
        model = _tiny_model()
        samples = [(["a", "b", "c", "d"], 7.0), (["e", "b"], 2.0)]
        grads = nnet.zeros_like_params(model.params)
        for tokens, gold in samples:
            phi, cache = model.forward(tokens)
            nnet.add_params(
                grads, model.backward(cache, 2.0 * (phi - gold) / len(samples))
            )
        vec, spec = nnet.flatten_params(model.params)
        gvec, _ = nnet.flatten_params(grads)
        eps = 1e-5
        num = np.zeros_like(vec)
        for i in range(len(vec)):
            up, down = vec.copy(), vec.copy()
            up[i] += eps
            down[i] -= eps
            model.params = nnet.unflatten_params(up, spec)
            lp = _batch_loss(model, samples)
            model.params = nnet.unflatten_params(down, spec)
            lm = _batch_loss(model, samples)
            num[i] = (lp - lm) / (2 * eps)
        model.params = nnet.unflatten_params(vec, spec)
        rel = np.abs(gvec - num) / np.maximum(np.abs(gvec) + np.abs(num), 1e-6)
        assert rel.max() < 1e-3


class TestForward:
    def test_attention_sums_to_one(self):
        model = _tiny_model()
        for tokens in (["a"], ["a", "b"], ["c", "d", "e", "a", "b"]):
            alpha = attention_weights(model, tokens)
            assert abs(alpha.sum() - 1.0) < 1e-9

    def test_equal_scores_give_uniform_attention(self):
        model = _tiny_model()
        model.params["attn_v"] = np.zeros_like(model.params["attn_v"])
        alpha = attention_weights(model, ["a", "b", "c", "d"])
        assert np.allclose(alpha, 0.25, atol=1e-12)

    def test_clamp_bounds(self):
        rng = nnet.make_rng(8)
        model = _tiny_model()
        for scale in (0.1, 10.0, 1000.0):
            for key in model.params:
                model.params[key] = rng.normal(scale=scale,
                                               size=model.params[key].shape)
            phi = hip_predict(model, ["a", "b", "z_unk"])
            assert 1.0 <= phi <= 10.0

    def test_predict_is_pure_and_bit_stable(self):
        model = _tiny_model()
        values = {hip_predict(model, ["a", "c", "b"]) for _ in range(25)}
        assert len(values) == 1

    def test_empty_tokens_rejected(self):
        with pytest.raises(ValueError):
            hip_predict(_tiny_model(), [])


class TestMetrics:
    def test_identity(self):
        m = hip_metrics([1, 5, 10], [1, 5, 10])
        assert m.rmse == 0.0
        assert m.pearson == pytest.approx(1.0, abs=1e-12)
        assert m.cosine == pytest.approx(1.0, abs=1e-12)

    def test_constant_offset(self):
        m = hip_metrics([2, 6, 11], [1, 5, 10])
        assert m.rmse == pytest.approx(1.0, abs=1e-12)

    def test_against_hand_computation(self):
        # pred=[2,4,6], gold=[1,5,9]: rmse = sqrt((1+1+9)/3); the vectors are
        # collinear after centering (gold = 2*pred - 3) so pearson is 1;
        # cosine = 76 / sqrt(56 * 107)
        m = hip_metrics([2, 4, 6], [1, 5, 9])
        assert m.rmse == pytest.approx(math.sqrt(11.0 / 3.0), abs=1e-12)
        assert m.pearson == pytest.approx(1.0, abs=1e-12)
        assert m.cosine == pytest.approx(76.0 / math.sqrt(56.0 * 107.0), abs=1e-12)

    def test_errors(self):
        with pytest.raises(ValueError):
            hip_metrics([], [])
        with pytest.raises(ValueError):
            hip_metrics([1, 2], [1, 2, 3])
        with pytest.raises(ValueError, match="Pearson"):
            hip_metrics([1, 2, 3], [4, 4, 4])
        with pytest.raises(ValueError, match="cosine"):
            hip_metrics([0, 0, 0], [0, 1, 2])

    def test_metrics_of_self_on_noise(self):
        rng = np.random.default_rng(5)
        x = rng.normal(5, 2, size=40)
        m = hip_metrics(x, x)
        assert m.rmse == 0.0
        assert m.pearson == pytest.approx(1.0, abs=1e-12)
        assert m.cosine == pytest.approx(1.0, abs=1e-12)


def _constant_corpus(n, phi):
    words = ["alpha", "beta", "gamma", "delta", "epsilon"]
    samples = [
        Sample.make(
            id=f"c{i}", text=" ".join(words[i % 3 : i % 3 + 3]), intensity=phi
        )
        for i in range(n)
    ]
    return Corpus.from_samples(samples)


class TestTraining:
    def test_constant_target_converges(self):
        corpus = _constant_corpus(120, 5.0)
        cfg = HipTrainConfig(epochs=40, seed=0)
        model = hip_train(corpus, corpus, cfg)
        preds = [model.forward(s.tokens)[0] for s in corpus]
        mse = float(np.mean([(p - 5.0) ** 2 for p in preds]))
        assert mse < 0.01

    def test_loss_decreases(self):
        corpus = generate_synthetic(SyntheticConfig(n_samples=150), seed=3)
        cfg = HipTrainConfig(epochs=2, seed=0)
        vocab = nnet.build_vocab((s.tokens for s in corpus))
        before = IntensityModel.init(vocab, cfg)
        loss_before = _batch_loss(before, [(s.tokens, s.intensity) for s in corpus])
        model = hip_train(corpus, corpus, cfg)
        loss_after = _batch_loss(model, [(s.tokens, s.intensity) for s in corpus])
        assert loss_after < loss_before

    def test_empty_corpus_rejected(self):
        corpus = _constant_corpus(5, 5.0)
        with pytest.raises(TrainingError):
            hip_train(Corpus.from_samples([]), corpus, HipTrainConfig())

    def test_training_is_deterministic(self):
        corpus = generate_synthetic(SyntheticConfig(n_samples=80), seed=3)
        cfg = HipTrainConfig(epochs=1, seed=9)
        a = hip_train(corpus, corpus, cfg)
        b = hip_train(corpus, corpus, cfg)
        for key in a.params:
            assert np.array_equal(a.params[key], b.params[key]), key

    def test_config_validation(self):
        with pytest.raises(ValueError):
            HipTrainConfig(epochs=0)
        with pytest.raises(ValueError):
            HipTrainConfig(learning_rate=-1)
