"""Shared fixtures.

The desk-scale corpus and trained models are session-scoped and timed so the
acceptance tests can assert both quality and runtime without retraining per
test. The tiny bundle is a fast, lower-quality stack for contract tests.
"""

from __future__ import annotations

import time
from typing import NamedTuple

import pytest

from hatenorm.corpus import SplitSpec, split_corpus
from hatenorm.evalx import detector_train, labeled_from_corpus
from hatenorm.intensity import HipTrainConfig, hip_train
from hatenorm.pipeline import PipelineConfig, TrainedBundle
from hatenorm.rewriter import HirTrainConfig, dict_build, gen_train
from hatenorm.spanner import HsiTrainConfig, hsi_train
from hatenorm.synthetic import SyntheticConfig, generate_synthetic


class Timed(NamedTuple):
    value: object
    seconds: float


def _timed(fn) -> Timed:
    started = time.perf_counter()
    value = fn()
    return Timed(value, time.perf_counter() - started)


@pytest.fixture(scope="session")
def desk_corpus():
    return generate_synthetic(SyntheticConfig(n_samples=2800), seed=7)


@pytest.fixture(scope="session")
def desk_splits(desk_corpus):
    # 5:1:1 of 2800 gives exactly 2000/400/400
    return split_corpus(desk_corpus, SplitSpec(ratios=(5 / 7, 1 / 7, 1 / 7), seed=0))


@pytest.fixture(scope="session")
def desk_hip(desk_splits) -> Timed:
    train, val, _ = desk_splits
    return _timed(lambda: hip_train(train, val, HipTrainConfig(seed=0)))


@pytest.fixture(scope="session")
def desk_hsi(desk_splits) -> Timed:
    train, val, _ = desk_splits
    return _timed(lambda: hsi_train(train, val, HsiTrainConfig(seed=0)))


@pytest.fixture(scope="session")
def desk_gen(desk_splits, desk_hip) -> Timed:
    train, val, _ = desk_splits
    return _timed(lambda: gen_train(train, val, desk_hip.value, HirTrainConfig(seed=0)))


@pytest.fixture(scope="session")
def desk_dict(desk_splits) -> Timed:
    train, _, _ = desk_splits
    return _timed(lambda: dict_build(train))


@pytest.fixture(scope="session")
def desk_detector(desk_splits) -> Timed:
    train, _, _ = desk_splits
    return _timed(lambda: detector_train(labeled_from_corpus(train)))


@pytest.fixture(scope="session")
def desk_bundle(desk_hip, desk_hsi, desk_gen, desk_detector, tmp_path_factory):
    """Neural-engine bundle, saved and reloaded so persistence is exercised."""
    bundle = TrainedBundle(
        hip=desk_hip.value,
        hsi=desk_hsi.value,
        hir=desk_gen.value,
        detector=desk_detector.value,
        manifest={"components": "session-fixture"},
    )
    directory = tmp_path_factory.mktemp("desk-bundle")
    bundle.save(directory)
    return TrainedBundle.load(directory)


@pytest.fixture(scope="session")
def tiny_corpus():
    return generate_synthetic(SyntheticConfig(n_samples=600), seed=13)


@pytest.fixture(scope="session")
def tiny_splits(tiny_corpus):
    return split_corpus(tiny_corpus, SplitSpec(seed=1))


@pytest.fixture(scope="session")
def tiny_bundle(tiny_splits):
    """Fast dict-engine bundle for contract and flag-path tests."""
    train, val, _ = tiny_splits
    hip = hip_train(train, val, HipTrainConfig(epochs=8, seed=2))
    hsi = hsi_train(train, val, HsiTrainConfig(epochs=3, seed=2))
    return TrainedBundle(
        hip=hip,
        hsi=hsi,
        hir=dict_build(train),
        detector=detector_train(labeled_from_corpus(train)),
        manifest={"bundle_version": "tiny"},
    )


@pytest.fixture(scope="session")
def dict_pipeline_config():
    return PipelineConfig(engine="dict")
