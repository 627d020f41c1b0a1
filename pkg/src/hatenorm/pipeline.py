"""End-to-end orchestration: staged training, the gated inference path
(intensity gate, span tagging, rewrite, verify), and band assignment.

Inference only rewrites when the predicted intensity exceeds the threshold
tau; hateful-scoring inputs with no identified spans pass through flagged
as implicit hate, and rewrites that stay above tau keep their best
suggestion but carry an explicit flag.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Optional

from .corpus import Corpus, tokenize
from .evalx import HateDetector, detector_train, labeled_from_corpus
from .intensity import (
    HipTrainConfig,
    IntensityModel,
    TrainingError,
    hip_predict,
    hip_train,
)
from .rewriter import HirTrainConfig, dict_build, gen_train, rewrite_sample
from .spanner import CrfModel, HsiTrainConfig, hsi_predict_spans, hsi_train
from . import persist

BANDS = ("no_hate", "low", "mild", "extreme")

FLAG_NONE = "none"
FLAG_IMPLICIT = "implicit_hate_no_spans"
FLAG_UNREDUCED = "unreduced_above_threshold"


@dataclass(frozen=True)
class PipelineConfig:
    tau: float = 5.0
    band_no_hate: float = 2.0  # phi below this is no_hate
    band_low: float = 5.0      # phi up to (and including) this is low
    band_mild: float = 7.0     # phi up to (and including) this is mild
    engine: str = "neural"
    retry_k: int = 3
    max_tokens: int = 512
    host: str = "127.0.0.1"
    port: int = 8078

    def __post_init__(self) -> None:
        if not self.band_no_hate < self.band_low < self.band_mild:
            raise ValueError("band thresholds must be strictly increasing")
        if self.engine not in ("dict", "neural"):
            raise ValueError(f"unknown rewrite engine {self.engine!r}")
        if self.retry_k < 1:
            raise ValueError("retry_k must be >= 1")


def band_of(phi: float, cfg: PipelineConfig = PipelineConfig()) -> str:
    """Monotone step mapping of intensity to one of the four bands."""
    if not 1.0 <= phi <= 10.0:
        raise ValueError(f"intensity {phi} outside [1,10]")
    if phi < cfg.band_no_hate:
        return "no_hate"
    if phi <= cfg.band_low:
        return "low"
    if phi <= cfg.band_mild:
        return "mild"
    return "extreme"


@dataclass(frozen=True)
class Suggestion:
    normalized_text: str
    intensity: float
    reward: float


@dataclass(frozen=True)
class NormalizationOutcome:
    intensity: float
    band: str
    spans: tuple[tuple[int, int, str], ...]
    suggestion: Optional[Suggestion]
    flag: str

    def __post_init__(self) -> None:
        if self.suggestion is not None and not self.spans:
            raise ValueError("a suggestion requires non-empty spans")


@dataclass
class TrainedBundle:
    hip: IntensityModel
    hsi: CrfModel
    hir: object  # DictionaryRewriter or GeneratorModel
    detector: Optional[HateDetector]
    manifest: dict = field(default_factory=dict)

    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        persist.save_hip(self.hip, directory / "hip.json")
        persist.save_hsi(self.hsi, directory / "hsi.json")
        persist.save_hir(self.hir, directory / "hir.json")
        if self.detector is not None:
            persist.save_detector(self.detector, directory / "detector.json")
        digest = hashlib.sha256()
        for name in ("hip.json", "hsi.json", "hir.json"):
            digest.update((directory / name).read_bytes())
        self.manifest["bundle_version"] = digest.hexdigest()[:16]
        (directory / "manifest.json").write_text(
            json.dumps(self.manifest, indent=2), encoding="utf-8"
        )

    @classmethod
    def load(cls, directory) -> "TrainedBundle":
        directory = Path(directory)
        detector_path = directory / "detector.json"
        manifest_path = directory / "manifest.json"
        return cls(
            hip=persist.load_hip(directory / "hip.json"),
            hsi=persist.load_hsi(directory / "hsi.json"),
            hir=persist.load_hir(directory / "hir.json"),
            detector=(
                persist.load_detector(detector_path)
                if detector_path.exists()
                else None
            ),
            manifest=(
                json.loads(manifest_path.read_text(encoding="utf-8"))
                if manifest_path.exists()
                else {}
            ),
        )


def train_all(
    train: Corpus,
    val: Corpus,
    cfg: PipelineConfig = PipelineConfig(),
    hip_cfg: Optional[HipTrainConfig] = None,
    hsi_cfg: Optional[HsiTrainConfig] = None,
    hir_cfg: Optional[HirTrainConfig] = None,
    with_detector: bool = True,
) -> TrainedBundle:
    """Train stages in order (intensity, spans, rewriter-with-discriminator),
    recording every component's config in the manifest."""
    hip_cfg = hip_cfg or HipTrainConfig()
    hsi_cfg = hsi_cfg or HsiTrainConfig()
    hir_cfg = hir_cfg or HirTrainConfig(tau=cfg.tau, beam_k=cfg.retry_k)

    def stage(name, fn):
        try:
            return fn()
        except Exception as exc:
            raise TrainingError(f"[{name}] {exc}") from exc

    hip = stage("hip", lambda: hip_train(train, val, hip_cfg))
    hsi = stage("hsi", lambda: hsi_train(train, val, hsi_cfg))
    if cfg.engine == "dict":
        hir = stage("hir", lambda: dict_build(train))
    else:
        hir = stage("hir", lambda: gen_train(train, val, hip, hir_cfg))
    detector = None
    if with_detector:
        detector = stage(
            "detector", lambda: detector_train(labeled_from_corpus(train))
        )
    manifest = {
        "format_version": persist.FORMAT_VERSION,
        "pipeline": asdict(cfg),
        "components": {
            "hip": asdict(hip_cfg),
            "hsi": asdict(hsi_cfg),
            "hir": asdict(hir_cfg),
            "detector": {"trained": with_detector},
        },
        "train_samples": len(train),
        "val_samples": len(val),
    }
    return TrainedBundle(hip=hip, hsi=hsi, hir=hir, detector=detector,
                         manifest=manifest)


def analyze(
    bundle: TrainedBundle,
    text: str,
    cfg: PipelineConfig = PipelineConfig(),
) -> NormalizationOutcome:
    """Gate on intensity, tag spans, rewrite and verify. Pure given bundle."""
    tokens = tokenize(text)
    if not tokens:
        raise ValueError("cannot analyze empty text")
    phi = hip_predict(bundle.hip, tokens)
    band = band_of(phi, cfg)
    if phi <= cfg.tau:
        return NormalizationOutcome(
            intensity=phi, band=band, spans=(), suggestion=None, flag=FLAG_NONE
        )
    spans = hsi_predict_spans(bundle.hsi, tokens)
    span_view = tuple(
        (s, e, " ".join(tokens[s : e + 1])) for s, e in spans
    )
    if not spans:
        return NormalizationOutcome(
            intensity=phi, band=band, spans=(), suggestion=None,
            flag=FLAG_IMPLICIT,
        )
    rewrite_cfg = HirTrainConfig(tau=cfg.tau, beam_k=cfg.retry_k)
    result = rewrite_sample(bundle.hir, bundle.hip, tokens, spans, rewrite_cfg)
    suggestion = Suggestion(
        normalized_text=result.normalized_text,
        intensity=result.discriminator_intensity,
        reward=result.reward,
    )
    flag = (
        FLAG_UNREDUCED if result.discriminator_intensity > cfg.tau else FLAG_NONE
    )
    return NormalizationOutcome(
        intensity=phi, band=band, spans=span_view, suggestion=suggestion,
        flag=flag,
    )
