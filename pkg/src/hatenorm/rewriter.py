"""Span rewriting with two interchangeable engines.

The dictionary engine looks up the nearest training span by tf-idf cosine
and emits its normalized side. The neural engine is a desk-scale
encoder-decoder with attention: the encoder reads the full token sequence
with the active span marked, the decoder emits only the replacement.
Training folds the discriminator's intensity score into the loss as a
reward: R = tau - phi', either recorded additively ("literal",
L = loss + (1 - R)) or as a gradient multiplier ("weighted",
L = loss * (1 + softplus(-R)), the default).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import nnet
from .corpus import Corpus, Sample, Span, check_spans
from .evalx import bleu
from .intensity import IntensityModel, TrainingError, hip_predict
from .nnet import BOS, EOS, Params


def reward(tau: float, phi_prime: float) -> float:
    """Reward for a rewrite scored at phi_prime: positive at or below tau."""
    if not 1.0 <= phi_prime <= 10.0:
        raise ValueError(f"phi_prime {phi_prime} outside [1,10]")
    return tau - phi_prime


def softplus(x: float) -> float:
    return float(np.logaddexp(0.0, x))


@dataclass
class HirTrainConfig:
    tau: float = 5.0
    epochs: int = 8
    batch_size: int = 32
    learning_rate: float = 2e-3
    max_decode_len: int = 8
    beam_k: int = 3
    reward_mode: str = "weighted"
    hidden: int = 32
    embed_dim: int = 32
    attn_dim: int = 32
    seed: int = 0

    def __post_init__(self) -> None:
        if not 1.0 < self.tau < 10.0:
            raise ValueError("tau must lie strictly inside (1, 10)")
        if self.beam_k < 1:
            raise ValueError("beam_k must be >= 1")
        if self.reward_mode not in ("weighted", "literal"):
            raise ValueError(f"unknown reward mode {self.reward_mode!r}")


@dataclass(frozen=True)
class RewriteResult:
    normalized_tokens: tuple[str, ...]
    normalized_text: str
    replacements: tuple[tuple[Span, tuple[str, ...]], ...]
    discriminator_intensity: float
    reward: float
    engine: str


def splice(
    tokens: Sequence[str],
    spans: Sequence[Span],
    replacements: Sequence[Sequence[str]],
) -> list[str]:
    """Replace each span left to right; replacements may grow, shrink or
    delete. Non-span tokens keep their relative order."""
    if len(spans) != len(replacements):
        raise ValueError(
            f"{len(spans)} spans but {len(replacements)} replacements"
        )
    check_spans(len(tokens), spans)
    out: list[str] = []
    cursor = 0
    for (start, end), replacement in zip(spans, replacements):
        out.extend(tokens[cursor:start])
        out.extend(replacement)
        cursor = end + 1
    out.extend(tokens[cursor:])
    return out


def align_replacements(sample: Sample) -> Optional[list[tuple[str, ...]]]:
    """Recover per-span replacement tokens by positional diffing of the
    original and normalized token sequences. Returns None when the context
    blocks around the spans cannot be matched unambiguously."""
    if not sample.spans or sample.normalized_text is None:
        return None
    tokens = list(sample.tokens)
    norm = sample.normalized_text.split()
    spans = sample.spans
    head = tokens[: spans[0][0]]
    if norm[: len(head)] != head:
        return None
    pos = len(head)
    replacements: list[tuple[str, ...]] = []
    for k, (start, end) in enumerate(spans):
        if k + 1 < len(spans):
            context = tokens[end + 1 : spans[k + 1][0]]
            if not context:
                return None  # adjacent spans: the split point is ambiguous
            idx = _find_subsequence(norm, context, pos)
            if idx < 0:
                return None
            replacements.append(tuple(norm[pos:idx]))
            pos = idx + len(context)
        else:
            tail = tokens[end + 1 :]
            cut = len(norm) - len(tail)
            if cut < pos or norm[cut:] != tail:
                return None
            replacements.append(tuple(norm[pos:cut]))
            pos = len(norm)
    return replacements


def _find_subsequence(haystack: list[str], needle: list[str], start: int) -> int:
    for i in range(start, len(haystack) - len(needle) + 1):
        if haystack[i : i + len(needle)] == needle:
            return i
    return -1


# ---------------------------------------------------------------------------
# Dictionary engine
# ---------------------------------------------------------------------------


class DictionaryRewriter:
    """tf-idf cosine lookup from hate spans to normalized spans."""

    kind = "dict"

    def __init__(self, entries: list[tuple[tuple[str, ...], tuple[str, ...]]],
                 idf: dict[str, float], n_documents: int):
        if not entries:
            raise ValueError("dictionary rewriter has no entries")
        self.entries = entries
        self.idf = idf
        self.n_documents = n_documents
        self._vectors = [self._vector(hate) for hate, _ in entries]
        self._norms = [math.sqrt(sum(v * v for v in vec.values())) for vec in self._vectors]

    def _idf(self, token: str) -> float:
        if token in self.idf:
            return self.idf[token]
        return math.log((self.n_documents + 1) / 1.0) + 1.0

    def _vector(self, span_tokens: Sequence[str]) -> dict[str, float]:
        vec: dict[str, float] = {}
        for token in span_tokens:
            vec[token] = vec.get(token, 0.0) + 1.0
        return {token: count * self._idf(token) for token, count in vec.items()}

    def ranked(self, span_tokens: Sequence[str], k: int) -> list[tuple[str, ...]]:
        """Up to k normalized sides ordered by descending cosine; an
        all-zero-cosine query maps to a single deletion candidate."""
        if not span_tokens:
            raise ValueError("cannot rewrite an empty span")
        query = self._vector(span_tokens)
        qnorm = math.sqrt(sum(v * v for v in query.values()))
        sims = []
        for i, (vec, norm) in enumerate(zip(self._vectors, self._norms)):
            dot = sum(query.get(token, 0.0) * weight for token, weight in vec.items())
            sims.append((dot / (qnorm * norm) if dot else 0.0, i))
        sims.sort(key=lambda pair: (-pair[0], pair[1]))
        if sims[0][0] == 0.0:
            return [()]
        ranked = [self.entries[i][1] for sim, i in sims[:k] if sim > 0.0]
        return ranked if ranked else [()]


def dict_build(train: Corpus) -> DictionaryRewriter:
    """One entry per aligned (hate span, normalized span) pair, with add-one
    smoothed idf from the training corpus."""
    n = len(train)
    idf = {
        token: math.log((n + 1) / (df + 1)) + 1.0
        for token, df in train.document_frequency.items()
    }
    entries: list[tuple[tuple[str, ...], tuple[str, ...]]] = []
    for sample in train:
        replacements = align_replacements(sample)
        if replacements is None:
            continue
        for (start, end), replacement in zip(sample.spans, replacements):
            entries.append((tuple(sample.tokens[start : end + 1]), replacement))
    if not entries:
        raise ValueError("no alignable span pairs in the training corpus")
    return DictionaryRewriter(entries, idf, n)


def dict_rewrite(rewriter: DictionaryRewriter, span_tokens: Sequence[str]) -> list[str]:
    """Top-1 lookup; returns [] (deletion) when nothing overlaps the query."""
    return list(rewriter.ranked(span_tokens, 1)[0])


# ---------------------------------------------------------------------------
# Neural engine
# ---------------------------------------------------------------------------


class GeneratorModel:
    """Encoder-decoder with attention; decodes one span replacement at a time,
    conditioned on the full sequence with the active span marked."""

    kind = "neural"

    def __init__(self, vocab: dict[str, int], params: Params,
                 hidden: int, reward_mode: str, max_decode_len: int):
        self.vocab = vocab
        self.inv_vocab = {i: t for t, i in vocab.items()}
        self.params = params
        self.hidden = hidden
        self.reward_mode = reward_mode
        self.max_decode_len = max_decode_len

    @classmethod
    def init(cls, vocab: dict[str, int], cfg: HirTrainConfig) -> "GeneratorModel":
        rng = nnet.make_rng(cfg.seed)
        d, h, a = cfg.embed_dim, cfg.hidden, cfg.attn_dim
        V = len(vocab)
        params: Params = {"emb": rng.normal(0.0, 0.1, size=(V, d))}
        params["marker"] = rng.normal(0.0, 0.1, size=d)
        params.update(nnet.bigru_init(rng, d, h))
        params["init_W"] = nnet.glorot(rng, (h, 2 * h))
        params["init_b"] = np.zeros(h)
        params.update(nnet.gru_init(rng, d + 2 * h, h, "dec_"))
        params["att_W"] = nnet.glorot(rng, (a, h))
        params["att_U"] = nnet.glorot(rng, (a, 2 * h))
        params["att_v"] = rng.normal(0.0, 0.1, size=a)
        params["out_W"] = nnet.glorot(rng, (V, 3 * h))
        params["out_b"] = np.zeros(V)
        return cls(vocab, params, h, cfg.reward_mode, cfg.max_decode_len)

    # -- encoder ------------------------------------------------------------

    def encode(self, tokens: Sequence[str], span: Span):
        ids = nnet.lookup(self.vocab, tokens)
        xs = self.params["emb"][ids].copy()
        start, end = span
        xs[start : end + 1] += self.params["marker"]
        hs, gru_cache = nnet.bigru_forward(self.params, xs)
        span_mean = hs[start : end + 1].mean(axis=0)
        pre0 = self.params["init_W"] @ span_mean + self.params["init_b"]
        s0 = np.tanh(pre0)
        return hs, s0, (ids, span, gru_cache, span_mean, s0)

    def encode_backward(self, cache, dhs: np.ndarray, ds0: np.ndarray) -> Params:
        ids, (start, end), gru_cache, span_mean, s0 = cache
        p = self.params
        grads: Params = {}
        dpre0 = ds0 * (1.0 - s0 * s0)
        grads["init_W"] = np.outer(dpre0, span_mean)
        grads["init_b"] = dpre0
        dspan_mean = p["init_W"].T @ dpre0
        dhs = dhs.copy()
        dhs[start : end + 1] += dspan_mean / (end - start + 1)
        gru_grads, dxs = nnet.bigru_backward(p, gru_cache, dhs)
        grads.update(gru_grads)
        demb = np.zeros_like(p["emb"])
        np.add.at(demb, ids, dxs)
        grads["emb"] = demb
        grads["marker"] = dxs[start : end + 1].sum(axis=0)
        return grads

    # -- decoder ------------------------------------------------------------

    def _dec_step(self, y_prev_id: int, s_prev: np.ndarray, hs: np.ndarray,
                  att_U_hs: np.ndarray):
        p = self.params
        h = self.hidden
        u = np.tanh(p["att_W"] @ s_prev + att_U_hs)  # (T, a)
        scores = u @ p["att_v"]
        alpha = nnet.softmax(scores)
        ctx = alpha @ hs
        x = np.concatenate([p["emb"][y_prev_id], ctx])
        a_gate = p["dec_W"] @ x + p["dec_b"]
        u_zr = p["dec_U"][: 2 * h] @ s_prev
        z = nnet.sigmoid(a_gate[:h] + u_zr[:h])
        r = nnet.sigmoid(a_gate[h : 2 * h] + u_zr[h:])
        rh = r * s_prev
        c = np.tanh(a_gate[2 * h :] + p["dec_U"][2 * h :] @ rh)
        s = (1.0 - z) * s_prev + z * c
        o_in = np.concatenate([s, ctx])
        logits = p["out_W"] @ o_in + p["out_b"]
        cache = (y_prev_id, s_prev, u, alpha, ctx, x, z, r, rh, c, s, o_in)
        return logits, s, cache

    def teacher_forced(self, hs: np.ndarray, s0: np.ndarray,
                       target_ids: Sequence[int]):
        """Cross-entropy of the target ids (which should end in EOS).
        Returns (total CE, per-step caches, att_U_hs)."""
        att_U_hs = hs @ self.params["att_U"].T
        s = s0
        y_prev = self.vocab[BOS]
        caches = []
        total = 0.0
        for target in target_ids:
            logits, s_next, cache = self._dec_step(y_prev, s, hs, att_U_hs)
            logp = nnet.log_softmax(logits)
            total -= float(logp[target])
            caches.append((cache, np.exp(logp), target))
            s = s_next
            y_prev = target
        return total, caches, att_U_hs

    def teacher_forced_backward(self, hs: np.ndarray, caches, att_U_hs,
                                weight: float):
        """Backprop weight * CE through the decoder. Returns (grads, dhs, ds0)."""
        p = self.params
        h = self.hidden
        grads = {
            key: np.zeros_like(p[key])
            for key in ("att_W", "att_U", "att_v", "out_W", "out_b",
                        "dec_W", "dec_U", "dec_b", "emb")
        }
        dhs = np.zeros_like(hs)
        ds_next = np.zeros(h)
        for cache, probs, target in reversed(caches):
            (y_prev_id, s_prev, u, alpha, ctx, x, z, r, rh, c, s, o_in) = cache
            dlogits = probs.copy()
            dlogits[target] -= 1.0
            dlogits *= weight
            grads["out_W"] += np.outer(dlogits, o_in)
            grads["out_b"] += dlogits
            do_in = p["out_W"].T @ dlogits
            ds = ds_next + do_in[:h]
            dctx = do_in[h:].copy()
            # GRU step backward
            dz = ds * (c - s_prev)
            dc = ds * z
            ds_prev = ds * (1.0 - z)
            dc_pre = dc * (1.0 - c * c)
            grads["dec_U"][2 * h :] += np.outer(dc_pre, rh)
            drh = p["dec_U"][2 * h :].T @ dc_pre
            dr = drh * s_prev
            ds_prev += drh * r
            dz_pre = dz * z * (1.0 - z)
            dr_pre = dr * r * (1.0 - r)
            dgate = np.concatenate([dz_pre, dr_pre, dc_pre])
            grads["dec_W"] += np.outer(dgate, x)
            grads["dec_b"] += dgate
            grads["dec_U"][:h] += np.outer(dz_pre, s_prev)
            grads["dec_U"][h : 2 * h] += np.outer(dr_pre, s_prev)
            ds_prev += p["dec_U"][:h].T @ dz_pre + p["dec_U"][h : 2 * h].T @ dr_pre
            dx = p["dec_W"].T @ dgate
            grads["emb"][y_prev_id] += dx[: p["emb"].shape[1]]
            dctx += dx[p["emb"].shape[1] :]
            # attention backward
            dalpha = hs @ dctx
            dhs += np.outer(alpha, dctx)
            dscores = alpha * (dalpha - float(alpha @ dalpha))
            grads["att_v"] += u.T @ dscores
            du = np.outer(dscores, p["att_v"])
            dpre = du * (1.0 - u * u)
            dpre_sum = dpre.sum(axis=0)
            grads["att_W"] += np.outer(dpre_sum, s_prev)
            ds_prev += p["att_W"].T @ dpre_sum
            grads["att_U"] += dpre.T @ hs
            dhs += dpre @ p["att_U"]
            ds_next = ds_prev
        return grads, dhs, ds_next

    def greedy_decode(self, tokens: Sequence[str], span: Span) -> tuple[str, ...]:
        return self.beam_decode(tokens, span, 1)[0]

    def beam_decode(self, tokens: Sequence[str], span: Span, k: int
                    ) -> list[tuple[str, ...]]:
        """Up to k replacement hypotheses, best (highest log-prob) first."""
        hs, s0, _ = self.encode(tokens, span)
        att_U_hs = hs @ self.params["att_U"].T
        eos = self.vocab[EOS]
        beams = [(0.0, [self.vocab[BOS]], s0, False)]
        for _ in range(self.max_decode_len):
            if all(done for _, _, _, done in beams):
                break
            expanded = []
            for score, seq, s, done in beams:
                if done:
                    expanded.append((score, seq, s, done))
                    continue
                logits, s_next, _ = self._dec_step(seq[-1], s, hs, att_U_hs)
                logp = nnet.log_softmax(logits)
                top = np.argsort(-logp, kind="stable")[: max(k, 2)]
                for token_id in top:
                    token_id = int(token_id)
                    expanded.append((
                        score + float(logp[token_id]),
                        seq + [token_id],
                        s_next,
                        token_id == eos,
                    ))
            expanded.sort(key=lambda item: (-item[0], len(item[1])))
            beams = expanded[:k]
        hypotheses = []
        for score, seq, _, done in sorted(beams, key=lambda item: -item[0]):
            body = seq[1:]
            if body and body[-1] == eos:
                body = body[:-1]
            hypotheses.append(tuple(self.inv_vocab[i] for i in body))
        return hypotheses


def gen_train(
    train: Corpus,
    val: Corpus,
    hip: IntensityModel,
    cfg: HirTrainConfig,
) -> GeneratorModel:
    """Reward-shaped teacher forcing over aligned span pairs; snapshots the
    parameters with the best validation BLEU."""
    pairs = []
    for sample in train:
        if sample.spans and sample.normalized_text is None:
            raise TrainingError(
                f"sample {sample.id} has spans but no normalized_text"
            )
        replacements = align_replacements(sample)
        if replacements is not None:
            pairs.append((sample, replacements))
    if not pairs:
        raise TrainingError("no trainable span pairs with normalized text")

    vocab = nnet.build_vocab(
        (
            list(sample.tokens) + list(sample.normalized_text.split())
            for sample, _ in pairs
        ),
        specials=(nnet.UNK, BOS, EOS),
    )
    model = GeneratorModel.init(vocab, cfg)
    optimizer = nnet.Adam(model.params, lr=cfg.learning_rate)
    rng = nnet.make_rng(cfg.seed + 1)

    def val_bleu() -> float:
        hyps, refs = [], []
        for sample in val:
            if not sample.spans or sample.normalized_text is None:
                continue
            decoded = [
                list(model.greedy_decode(sample.tokens, span))
                for span in sample.spans
            ]
            hyps.append(splice(sample.tokens, sample.spans, decoded))
            refs.append(sample.normalized_text.split())
        return bleu(hyps, refs) if hyps else 0.0

    best_params = nnet.copy_params(model.params)
    best_bleu = val_bleu()
    for _ in range(cfg.epochs):
        order = rng.permutation(len(pairs))
        for start in range(0, len(order), cfg.batch_size):
            batch = [pairs[i] for i in order[start : start + cfg.batch_size]]
            grads = nnet.zeros_like_params(model.params)
            batch_loss = 0.0
            for sample, replacements in batch:
                loss = _sample_loss_and_grads(model, hip, cfg, sample,
                                              replacements, grads,
                                              1.0 / len(batch))
                batch_loss += loss / len(batch)
            if not np.isfinite(batch_loss):
                raise TrainingError(f"training diverged: loss={batch_loss}")
            nnet.clip_grads(grads)
            optimizer.step(model.params, grads)
        score = val_bleu()
        if score > best_bleu:
            best_bleu = score
            best_params = nnet.copy_params(model.params)
    model.params = best_params
    return model


def _sample_loss_and_grads(model, hip, cfg, sample, replacements, grads,
                           scale: float) -> float:
    """Consolidated loss for one sample; accumulates scaled gradients."""
    eos = model.vocab[EOS]
    total_ce = 0.0
    n_targets = 0
    span_passes = []
    for span, replacement in zip(sample.spans, replacements):
        hs, s0, enc_cache = model.encode(sample.tokens, span)
        target_ids = list(nnet.lookup(model.vocab, replacement)) + [eos]
        ce, caches, att_U_hs = model.teacher_forced(hs, s0, target_ids)
        total_ce += ce
        n_targets += len(target_ids)
        span_passes.append((hs, s0, enc_cache, caches, att_U_hs))
    ell = total_ce / n_targets

    decoded = [
        list(model.greedy_decode(sample.tokens, span)) for span in sample.spans
    ]
    t_prime = splice(sample.tokens, sample.spans, decoded)
    phi_prime = hip_predict(hip, t_prime) if t_prime else 10.0
    r = reward(cfg.tau, phi_prime)
    if cfg.reward_mode == "literal":
        consolidated = ell + (1.0 - r)
        multiplier = 1.0
    else:
        multiplier = 1.0 + softplus(-r)
        consolidated = ell * multiplier

    weight = scale * multiplier / n_targets
    for hs, s0, enc_cache, caches, att_U_hs in span_passes:
        dec_grads, dhs, ds0 = model.teacher_forced_backward(
            hs, caches, att_U_hs, weight
        )
        nnet.add_params(grads, dec_grads)
        nnet.add_params(grads, model.encode_backward(enc_cache, dhs, ds0))
    return consolidated


def consolidated_loss(ell: float, r: float, mode: str) -> float:
    """The recorded loss for a given generator loss and reward."""
    if mode == "literal":
        return ell + (1.0 - r)
    if mode == "weighted":
        return ell * (1.0 + softplus(-r))
    raise ValueError(f"unknown reward mode {mode!r}")


def rewrite_sample(
    engine,
    hip: IntensityModel,
    tokens: Sequence[str],
    spans: Sequence[Span],
    cfg: HirTrainConfig,
) -> RewriteResult:
    """Rewrite every span, score with the discriminator, and if the result
    stays above tau retry with up to beam_k - 1 alternates, keeping the
    candidate with the lowest intensity."""
    if not spans:
        raise ValueError("rewrite_sample needs at least one span")
    check_spans(len(tokens), spans)
    if engine.kind == "dict":
        per_span = [engine.ranked(tokens[s : e + 1], cfg.beam_k) for s, e in spans]
    else:
        per_span = [engine.beam_decode(tokens, span, cfg.beam_k) for span in spans]

    best: Optional[tuple[float, list, list[str]]] = None
    for rank in range(cfg.beam_k):
        replacements = [
            candidates[min(rank, len(candidates) - 1)] for candidates in per_span
        ]
        normalized = splice(tokens, spans, replacements)
        phi_prime = hip_predict(hip, normalized) if normalized else 10.0
        if best is None or phi_prime < best[0]:
            best = (phi_prime, replacements, normalized)
        if phi_prime <= cfg.tau:
            break
        if all(len(c) <= rank + 1 for c in per_span):
            break

    phi_prime, replacements, normalized = best
    return RewriteResult(
        normalized_tokens=tuple(normalized),
        normalized_text=" ".join(normalized),
        replacements=tuple(
            (span, tuple(replacement))
            for span, replacement in zip(spans, replacements)
        ),
        discriminator_intensity=phi_prime,
        reward=cfg.tau - phi_prime,
        engine=engine.kind,
    )
