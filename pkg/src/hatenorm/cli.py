"""Command-line interface.

Subcommands: gen-corpus, train [hip|hsi|hir|detector|virality|all], eval,
normalize, experiment virality, serve. Every flag can also live in a JSON
config file passed with --config; explicit flags win over config keys.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .corpus import Corpus, Sample, SplitSpec, load_corpus, save_corpus, split_corpus
from .evalx import (
    EvalReport,
    delta_confidence,
    detector_train,
    labeled_from_corpus,
    lm_train,
    perplexity,
)
from .evalx import bleu as bleu_score
from .intensity import HipTrainConfig, hip_metrics, hip_predict, hip_train
from .pipeline import PipelineConfig, TrainedBundle, analyze, train_all
from .rewriter import HirTrainConfig, dict_build, gen_train
from .spanner import HsiTrainConfig, hsi_predict_spans, hsi_train, span_metrics_micro
from .synthetic import SyntheticConfig, generate_synthetic
from .virality import (
    engagement_train,
    extract_features,
    load_sentiment_lexicon,
    virality_experiment,
)
from . import persist
from .service import outcome_to_json


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    return json.loads(Path(path).read_text(encoding="utf-8"))


class Options:
    """Flag > config key > default resolution."""

    def __init__(self, args: argparse.Namespace, config: dict):
        self.args = vars(args)
        self.config = config

    def get(self, key: str, default=None):
        value = self.args.get(key)
        if value is not None:
            return value
        return self.config.get(key, default)

    def require(self, key: str):
        value = self.get(key)
        if value is None:
            raise SystemExit(f"error: missing required option --{key.replace('_','-')}")
        return value


def _pipeline_config(opts: Options) -> PipelineConfig:
    return PipelineConfig(
        tau=float(opts.get("tau", 5.0)),
        engine=opts.get("engine", "neural"),
        retry_k=int(opts.get("retry_k", 3)),
    )


def _split(corpus: Corpus, opts: Options) -> tuple[Corpus, Corpus, Corpus]:
    ratios = opts.get("split", [0.70, 0.15, 0.15])
    if isinstance(ratios, str):
        ratios = [float(r) for r in ratios.split(",")]
    seed = int(opts.get("seed", 0))
    return split_corpus(corpus, SplitSpec(ratios=tuple(ratios), seed=seed))


def cmd_gen_corpus(opts: Options) -> None:
    seed = int(opts.get("seed", 0))
    cfg = SyntheticConfig(n_samples=int(opts.get("n", 3000)))
    corpus = generate_synthetic(cfg, seed)
    out = opts.require("out")
    save_corpus(corpus, out)
    print(f"wrote {len(corpus)} samples to {out}")


def _stage_configs(opts: Options):
    seed = int(opts.get("seed", 0))
    hip_kwargs = dict(opts.config.get("hip", {}))
    hip_kwargs.setdefault("seed", seed)
    hsi_kwargs = dict(opts.config.get("hsi", {}))
    hsi_kwargs.setdefault("seed", seed)
    hir_kwargs = dict(opts.config.get("hir", {}))
    hir_kwargs.setdefault("seed", seed)
    hir_kwargs.setdefault("tau", float(opts.get("tau", 5.0)))
    hip_cfg = HipTrainConfig(**hip_kwargs)
    hsi_cfg = HsiTrainConfig(**hsi_kwargs)
    hir_cfg = HirTrainConfig(**hir_kwargs)
    epochs = opts.get("epochs")
    if epochs is not None:
        hip_cfg.epochs = hsi_cfg.epochs = hir_cfg.epochs = int(epochs)
    return hip_cfg, hsi_cfg, hir_cfg


def cmd_train(opts: Options) -> None:
    stage = opts.args["stage"]
    corpus = load_corpus(opts.require("corpus"))
    model_dir = Path(opts.require("model_dir"))
    model_dir.mkdir(parents=True, exist_ok=True)
    train, val, _ = _split(corpus, opts)
    cfg = _pipeline_config(opts)
    hip_cfg, hsi_cfg, hir_cfg = _stage_configs(opts)

    if stage == "all":
        bundle = train_all(train, val, cfg, hip_cfg, hsi_cfg, hir_cfg)
        bundle.save(model_dir)
        _train_virality(train, model_dir, opts)
        print(f"saved bundle to {model_dir}")
        return
    if stage == "hip":
        persist.save_hip(hip_train(train, val, hip_cfg), model_dir / "hip.json")
    elif stage == "hsi":
        persist.save_hsi(hsi_train(train, val, hsi_cfg), model_dir / "hsi.json")
    elif stage == "hir":
        hip = persist.load_hip(model_dir / "hip.json")
        if cfg.engine == "dict":
            engine = dict_build(train)
        else:
            engine = gen_train(train, val, hip, hir_cfg)
        persist.save_hir(engine, model_dir / "hir.json")
    elif stage == "detector":
        detector = detector_train(labeled_from_corpus(train))
        persist.save_detector(detector, model_dir / "detector.json")
    elif stage == "virality":
        _train_virality(train, model_dir, opts)
    print(f"trained {stage} -> {model_dir}")


def _train_virality(train: Corpus, model_dir: Path, opts: Options) -> None:
    lexicon = load_sentiment_lexicon(opts.get("lexicon"))
    rows = [s for s in train if s.engagement is not None]
    if not rows:
        print("no engagement counts in corpus; skipping virality model")
        return
    features = [extract_features(s.tokens, train, lexicon) for s in rows]
    model = engagement_train(features, [s.engagement for s in rows])
    persist.save_engagement(model, model_dir / "engagement.json")


def cmd_eval(opts: Options) -> None:
    corpus = load_corpus(opts.require("corpus"))
    model_dir = Path(opts.require("model_dir"))
    bundle = TrainedBundle.load(model_dir)
    cfg = _pipeline_config(opts)
    train, _, test = _split(corpus, opts)

    preds = [hip_predict(bundle.hip, s.tokens) for s in test]
    hip = hip_metrics(preds, [s.intensity for s in test])
    hsi = span_metrics_micro(
        [
            (hsi_predict_spans(bundle.hsi, s.tokens), list(s.spans), len(s.tokens))
            for s in test
        ]
    )

    hyps, refs, pairs = [], [], []
    for sample in test:
        outcome = analyze(bundle, sample.text, cfg)
        if outcome.suggestion is None:
            continue
        suggestion_tokens = outcome.suggestion.normalized_text.split()
        pairs.append((sample.tokens, suggestion_tokens))
        if sample.normalized_text is not None:
            hyps.append(suggestion_tokens)
            refs.append(sample.normalized_text.split())

    references = [
        s.normalized_text.split() for s in train if s.normalized_text is not None
    ]
    lm = lm_train(references) if references else None
    core = EvalReport(
        bleu=bleu_score(hyps, refs) if hyps else 0.0,
        perplexity=perplexity(lm, hyps) if lm and hyps else None,
        delta_c=None,
        m_count=0,
    )
    if bundle.detector is not None and pairs:
        try:
            delta_c, m_count = delta_confidence(bundle.detector, pairs)
            core = EvalReport(core.bleu, core.perplexity, delta_c, m_count)
        except ValueError:
            pass  # every pair filtered: delta_c stays null
    report = {
        "bleu": core.bleu,
        "perplexity": core.perplexity,
        "delta_c": core.delta_c,
        "m_count": core.m_count,
        "hip": {"rmse": hip.rmse, "pearson": hip.pearson, "cosine": hip.cosine},
        "hsi": {
            "p": hsi.precision,
            "r": hsi.recall,
            "f1": hsi.f1,
            "exact_span_rate": hsi.exact_span_rate,
        },
    }
    payload = json.dumps(report, indent=2)
    out = opts.get("out")
    if out:
        Path(out).write_text(payload + "\n", encoding="utf-8")
    print(payload)


def cmd_normalize(opts: Options) -> None:
    model_dir = opts.require("model_dir")
    bundle = TrainedBundle.load(model_dir)
    cfg = _pipeline_config(opts)
    text = opts.get("text")
    file_path = opts.get("file")
    if (text is None) == (file_path is None):
        raise SystemExit("error: pass exactly one of --text or --file")
    lines = [text] if text is not None else [
        line
        for line in Path(file_path).read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    for line in lines:
        outcome = analyze(bundle, line, cfg)
        print(json.dumps(outcome_to_json(outcome, 0.0)))


def cmd_experiment(opts: Options) -> None:
    if opts.args["kind"] != "virality":
        raise SystemExit(f"unknown experiment {opts.args['kind']!r}")
    corpus = load_corpus(opts.require("corpus"))
    lexicon = load_sentiment_lexicon(opts.get("lexicon"))
    seed = int(opts.get("seed", 0))
    train, _, test = _split(corpus, opts)
    rows = [s for s in train if s.engagement is not None]
    if len(rows) < 2:
        raise SystemExit("error: corpus has no engagement counts to fit on")
    features = [extract_features(s.tokens, train, lexicon) for s in rows]
    model = engagement_train(features, [s.engagement for s in rows])
    pairs = []
    for sample in test:
        if sample.normalized_text is None:
            continue
        norm = Sample.make(
            id=f"{sample.id}-norm",
            text=sample.normalized_text,
            intensity=sample.normalized_intensity or 1.0,
        )
        pairs.append((sample, norm))
    if not pairs:
        raise SystemExit("error: no (original, normalized) pairs in test split")
    report = virality_experiment(
        model,
        pairs,
        train,
        lexicon,
        k=int(opts.get("k", 300)),
        n_iterations=int(opts.get("iterations", 10)),
        seed=seed,
    )
    payload = json.dumps(report.to_json(), indent=2)
    out = opts.get("out")
    if out:
        Path(out).write_text(payload + "\n", encoding="utf-8")
    print(payload)


def cmd_serve(opts: Options) -> None:
    from .service import serve

    cfg = PipelineConfig(
        tau=float(opts.get("tau", 5.0)),
        engine=opts.get("engine", "neural"),
        retry_k=int(opts.get("retry_k", 3)),
        host=opts.get("host", "127.0.0.1"),
        port=int(opts.get("port", 8078)),
    )
    serve(opts.require("model_dir"), cfg, static_dir=opts.get("static_dir"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hatenorm",
        description="Hate-speech normalization: predict intensity, tag spans, "
        "suggest a weaker rewrite.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file; flags override keys")
        p.add_argument("--seed", type=int)

    p = sub.add_parser("gen-corpus", help="generate the synthetic corpus")
    common(p)
    p.add_argument("--out")
    p.add_argument("--n", type=int)
    p.set_defaults(fn=cmd_gen_corpus)

    p = sub.add_parser("train", help="train one stage or everything")
    common(p)
    p.add_argument("stage", choices=["hip", "hsi", "hir", "detector", "virality", "all"])
    p.add_argument("--corpus")
    p.add_argument("--model-dir", dest="model_dir")
    p.add_argument("--engine", choices=["dict", "neural"])
    p.add_argument("--tau", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--split")
    p.add_argument("--lexicon")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="evaluate a trained bundle on the test split")
    common(p)
    p.add_argument("--corpus")
    p.add_argument("--model-dir", dest="model_dir")
    p.add_argument("--tau", type=float)
    p.add_argument("--split")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("normalize", help="analyze text from a flag or a file")
    common(p)
    p.add_argument("--text")
    p.add_argument("--file")
    p.add_argument("--model-dir", dest="model_dir")
    p.add_argument("--tau", type=float)
    p.set_defaults(fn=cmd_normalize)

    p = sub.add_parser("experiment", help="run the engagement experiment")
    common(p)
    p.add_argument("kind", choices=["virality"])
    p.add_argument("--corpus")
    p.add_argument("--k", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--split")
    p.add_argument("--lexicon")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_experiment)

    p = sub.add_parser("serve", help="run the HTTP service")
    common(p)
    p.add_argument("--model-dir", dest="model_dir")
    p.add_argument("--tau", type=float)
    p.add_argument("--engine", choices=["dict", "neural"])
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.add_argument("--static-dir", dest="static_dir")
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    opts = Options(args, _load_config(args.config))
    args.fn(opts)
    return 0


if __name__ == "__main__":
    sys.exit(main())
