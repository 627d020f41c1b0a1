"""Versioned JSON persistence for trained models.

Every artifact is a single JSON document with format_version, kind, the
vocabulary, parameter shapes and flat parameter arrays; loading validates
the shapes before reshaping.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .evalx import HateDetector
from .intensity import IntensityModel
from .nnet import Params
from .rewriter import DictionaryRewriter, GeneratorModel
from .spanner import CrfModel
from .virality import EngagementModel

FORMAT_VERSION = 1


class PersistError(ValueError):
    """Unreadable, unversioned, or shape-mismatched model file."""


def _encode_params(params: Params) -> dict:
    return {
        "shapes": {key: list(params[key].shape) for key in sorted(params)},
        "params": {key: params[key].ravel().tolist() for key in sorted(params)},
    }


def _decode_params(doc: dict) -> Params:
    params: Params = {}
    for key, shape in doc["shapes"].items():
        flat = np.asarray(doc["params"][key], dtype=float)
        expected = int(np.prod(shape)) if shape else 1
        if flat.size != expected:
            raise PersistError(
                f"parameter {key!r}: expected {expected} values for shape "
                f"{shape}, got {flat.size}"
            )
        params[key] = flat.reshape(shape)
    return params


def _check_envelope(doc: dict, kind: str, path) -> None:
    if doc.get("format_version") != FORMAT_VERSION:
        raise PersistError(
            f"{path}: unsupported format_version {doc.get('format_version')!r}"
        )
    if doc.get("kind") != kind:
        raise PersistError(f"{path}: expected kind {kind!r}, got {doc.get('kind')!r}")


def _write(doc: dict, path) -> None:
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def _read(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise PersistError(f"{path}: not valid JSON: {exc}") from exc


def save_hip(model: IntensityModel, path) -> None:
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": "hip",
        "vocab": model.vocab,
        "hidden": model.hidden,
        "attn_dim": model.attn_dim,
        **_encode_params(model.params),
    }
    _write(doc, path)


def load_hip(path) -> IntensityModel:
    doc = _read(path)
    _check_envelope(doc, "hip", path)
    return IntensityModel(
        vocab=doc["vocab"],
        params=_decode_params(doc),
        hidden=doc["hidden"],
        attn_dim=doc["attn_dim"],
    )


def save_hsi(model: CrfModel, path) -> None:
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": "hsi",
        "mode": model.mode,
        "vocab": model.vocab,
        "hidden": model.hidden,
        **_encode_params(model.params),
    }
    _write(doc, path)


def load_hsi(path) -> CrfModel:
    doc = _read(path)
    _check_envelope(doc, "hsi", path)
    return CrfModel(
        mode=doc["mode"],
        vocab=doc["vocab"],
        params=_decode_params(doc),
        hidden=doc["hidden"],
    )


def save_hir(engine, path) -> None:
    if isinstance(engine, DictionaryRewriter):
        doc = {
            "format_version": FORMAT_VERSION,
            "kind": "hir",
            "engine": "dict",
            "entries": [[list(h), list(n)] for h, n in engine.entries],
            "idf": engine.idf,
            "n_documents": engine.n_documents,
        }
    elif isinstance(engine, GeneratorModel):
        doc = {
            "format_version": FORMAT_VERSION,
            "kind": "hir",
            "engine": "neural",
            "vocab": engine.vocab,
            "hidden": engine.hidden,
            "reward_mode": engine.reward_mode,
            "max_decode_len": engine.max_decode_len,
            **_encode_params(engine.params),
        }
    else:
        raise PersistError(f"unknown rewrite engine type {type(engine).__name__}")
    _write(doc, path)


def load_hir(path):
    doc = _read(path)
    _check_envelope(doc, "hir", path)
    if doc["engine"] == "dict":
        return DictionaryRewriter(
            entries=[(tuple(h), tuple(n)) for h, n in doc["entries"]],
            idf=doc["idf"],
            n_documents=doc["n_documents"],
        )
    if doc["engine"] == "neural":
        return GeneratorModel(
            vocab=doc["vocab"],
            params=_decode_params(doc),
            hidden=doc["hidden"],
            reward_mode=doc["reward_mode"],
            max_decode_len=doc["max_decode_len"],
        )
    raise PersistError(f"{path}: unknown engine {doc['engine']!r}")


def save_detector(detector: HateDetector, path) -> None:
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": "detector",
        "vocab": detector.vocab,
        "weights": detector.weights.tolist(),
        "bias": detector.bias,
    }
    _write(doc, path)


def load_detector(path) -> HateDetector:
    doc = _read(path)
    _check_envelope(doc, "detector", path)
    weights = np.asarray(doc["weights"], dtype=float)
    if weights.size != len(doc["vocab"]):
        raise PersistError(f"{path}: weight count does not match vocabulary")
    return HateDetector(vocab=doc["vocab"], weights=weights, bias=doc["bias"])


def save_engagement(model: EngagementModel, path) -> None:
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": "engagement",
        "means": model.means.tolist(),
        "stds": model.stds.tolist(),
        "weights": model.weights.tolist(),
        "bias": model.bias,
        "alpha": model.alpha,
    }
    _write(doc, path)


def load_engagement(path) -> EngagementModel:
    doc = _read(path)
    _check_envelope(doc, "engagement", path)
    return EngagementModel(
        means=np.asarray(doc["means"], dtype=float),
        stds=np.asarray(doc["stds"], dtype=float),
        weights=np.asarray(doc["weights"], dtype=float),
        bias=doc["bias"],
        alpha=doc["alpha"],
    )
