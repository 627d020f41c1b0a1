"""Synthetic parallel-corpus generator with a planted, additive hate lexicon.

Stands in for real annotated data: every sample is built from a neutral
template whose slots may be filled with mild terms (+2), severe terms (+4)
or violence phrases (+7). Intensity is 1 plus the planted weights, clamped
to [1, 10]; spans cover maximal runs of planted tokens; the normalized
counterpart replaces each span with the neutral phrase mapped to its terms.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .corpus import Corpus, Sample, Span

MILD_WEIGHT = 2.0
SEVERE_WEIGHT = 4.0
VIOLENCE_WEIGHT = 7.0

INSULT_SLOT = "{ins}"
ACTION_SLOT = "{act}"
NAME_SLOT = "{name}"
TOPIC_SLOT = "{topic}"

_DEFAULT_TEMPLATES = tuple(
    template.split()
    for template in [
        "{name} just saw your post about {topic} and wow these {ins} replies"
        " from people like you {act} , totally ruined my morning .",
        "honestly the {topic} crowd on this app are {ins} {ins} and everyone"
        " with a brain already muted them months ago lol",
        "{name} stop defending them , those {ins} fans of {topic} {act}"
        " before they wreck another thread for the rest of us .",
        "my feed is full of {ins} takes about {topic} again and i swear those"
        " accounts {act} if the mods keep ignoring every report .",
        "imagine being proud of {topic} in this economy , you {ins} {act} and"
        " nobody on here would even notice or care lmaooo",
        "the {topic} thread got brigaded by {ins} accounts again so i guess"
        " those regulars {act} , nice job everyone .",
        "{name} called me out for defending {topic} but everyone already"
        " knows those {ins} gatekeepers {act} sooner or later .",
        "not watching {topic} anymore , the whole fanbase turned into {ins}"
        " {ins} overnight and the discourse never recovered from it tbh .",
        "some of you {act} for what you said about {topic} yesterday and"
        " honestly the {ins} apologists in the replies are worse .",
        "petition to rename {topic} day after every {ins} in this city ,"
        " because apparently their defenders {act} while we just watch .",
        "{name} thanks for the thoughtful thread about {topic} , genuinely"
        " learned something new today and saved it to read again later .",
        "had a long week but the {topic} meetup was lovely , met {name}"
        " there and we talked for hours about nothing in particular .",
        "reminder that the {topic} library event moved to saturday afternoon"
        " , bring your own coffee and maybe an umbrella just in case .",
    ]
)

_DEFAULT_NAMES = (
    "@sam_j",
    "@riverfan",
    "@pdx_mike",
    "@kt_writes",
    "@oldgreg",
    "@zona99",
    "@marlo_b",
    "@jayhawk7",
    "@ellie_m",
    "@quietbird",
)

_DEFAULT_TOPICS = (
    "politics",
    "traffic",
    "parking",
    "taxes",
    "football",
    "crypto",
    "vegans",
    "landlords",
    "tourists",
    "influencers",
)

_DEFAULT_MILD = ("clowns", "losers", "muppets", "cowards", "grifters", "trolls")

_DEFAULT_SEVERE = (
    "vermin",
    "parasites",
    "scum",
    "degenerates",
    "leeches",
    "#GetThemOut",
)

_DEFAULT_VIOLENCE = tuple(
    phrase.split()
    for phrase in [
        "should be wiped out",
        "deserve to get hurt",
        "need a good beating",
        "should be run out of town",
        "must be locked away for good",
    ]
)

_DEFAULT_REPLACEMENTS = {
    "clowns": ("people",),
    "losers": ("folks",),
    "muppets": ("users",),
    "cowards": ("critics",),
    "grifters": ("promoters",),
    "trolls": ("accounts",),
    "vermin": ("people",),
    "parasites": ("residents",),
    "scum": ("folks",),
    "degenerates": ("strangers",),
    "leeches": ("visitors",),
    "#GetThemOut": ("#MoveAlong",),
    "should be wiped out": ("should", "be", "ignored"),
    "deserve to get hurt": ("deserve", "criticism"),
    "need a good beating": ("need", "a", "timeout"),
    "should be run out of town": ("should", "be", "voted", "out"),
    "must be locked away for good": ("must", "be", "moderated"),
}


class LexiconError(ValueError):
    """The planted lexicon is empty or internally inconsistent."""


@dataclass(frozen=True)
class SyntheticConfig:
    """Planted lexicon plus generation knobs."""

    templates: tuple = _DEFAULT_TEMPLATES
    names: tuple = _DEFAULT_NAMES
    topics: tuple = _DEFAULT_TOPICS
    mild_terms: tuple = _DEFAULT_MILD
    severe_terms: tuple = _DEFAULT_SEVERE
    violence_phrases: tuple = _DEFAULT_VIOLENCE
    replacements: dict = field(default_factory=lambda: dict(_DEFAULT_REPLACEMENTS))
    n_samples: int = 3000
    # per-slot fill probabilities: insult slots draw mild/severe, action
    # slots draw a violence phrase
    insult_fill: tuple[float, float] = (0.40, 0.40)
    action_fill: float = 0.55
    plant_engagement: bool = True

    def __post_init__(self) -> None:
        if not (self.mild_terms or self.severe_terms or self.violence_phrases):
            raise LexiconError("lexicon has no mild, severe or violence entries")
        if not self.templates:
            raise LexiconError("no templates configured")
        for term in (*self.mild_terms, *self.severe_terms):
            if term not in self.replacements:
                raise LexiconError(f"no replacement for term {term!r}")
        for phrase in self.violence_phrases:
            if " ".join(phrase) not in self.replacements:
                raise LexiconError(f"no replacement for phrase {' '.join(phrase)!r}")
        hate_tokens = set(self.mild_terms) | set(self.severe_terms)
        for template in self.templates:
            clash = hate_tokens.intersection(template)
            if clash:
                raise LexiconError(f"template contains lexicon tokens: {sorted(clash)}")
        for replacement in self.replacements.values():
            clash = hate_tokens.intersection(replacement)
            if clash:
                raise LexiconError(
                    f"replacement contains lexicon tokens: {sorted(clash)}"
                )

    def term_weight(self, unit: str) -> float:
        if unit in self.mild_terms:
            return MILD_WEIGHT
        if unit in self.severe_terms:
            return SEVERE_WEIGHT
        return VIOLENCE_WEIGHT


def lexicon_intensity(tokens: Sequence[str], config: SyntheticConfig) -> float:
    """Additive clamped score: 1 plus the weight of every lexicon hit."""
    total = 1.0
    i = 0
    n = len(tokens)
    phrases = sorted(config.violence_phrases, key=len, reverse=True)
    while i < n:
        matched = False
        for phrase in phrases:
            k = len(phrase)
            if tuple(tokens[i : i + k]) == tuple(phrase):
                total += VIOLENCE_WEIGHT
                i += k
                matched = True
                break
        if matched:
            continue
        if tokens[i] in config.severe_terms:
            total += SEVERE_WEIGHT
        elif tokens[i] in config.mild_terms:
            total += MILD_WEIGHT
        i += 1
    return min(max(total, 1.0), 10.0)


def _fill_slot(slot: str, config: SyntheticConfig, rng: random.Random):
    """Return (tokens, weight, unit_key) for one slot, or None if left empty."""
    if slot == INSULT_SLOT:
        p_mild, p_severe = config.insult_fill
        draw = rng.random()
        if draw < p_mild and config.mild_terms:
            term = config.mild_terms[rng.randrange(len(config.mild_terms))]
            return [term], MILD_WEIGHT, term
        if draw < p_mild + p_severe and config.severe_terms:
            term = config.severe_terms[rng.randrange(len(config.severe_terms))]
            return [term], SEVERE_WEIGHT, term
        return None
    if rng.random() < config.action_fill and config.violence_phrases:
        phrase = config.violence_phrases[rng.randrange(len(config.violence_phrases))]
        return list(phrase), VIOLENCE_WEIGHT, " ".join(phrase)
    return None


def _planted_spans(flags: Sequence[bool]) -> list[Span]:
    """Maximal runs of planted positions."""
    spans: list[Span] = []
    start: Optional[int] = None
    for i, planted in enumerate(flags):
        if planted and start is None:
            start = i
        elif not planted and start is not None:
            spans.append((start, i - 1))
            start = None
    if start is not None:
        spans.append((start, len(flags) - 1))
    return spans


def generate_synthetic(config: SyntheticConfig, seed: int) -> Corpus:
    """Build a deterministic parallel corpus from the planted lexicon."""
    rng = random.Random(seed)
    samples = []
    for index in range(config.n_samples):
        template = config.templates[rng.randrange(len(config.templates))]
        tokens: list[str] = []
        planted: list[bool] = []
        units: list[tuple[int, str]] = []  # (token position, lexicon key)
        for slot in template:
            if slot == NAME_SLOT:
                tokens.append(config.names[rng.randrange(len(config.names))])
                planted.append(False)
            elif slot == TOPIC_SLOT:
                tokens.append(config.topics[rng.randrange(len(config.topics))])
                planted.append(False)
            elif slot in (INSULT_SLOT, ACTION_SLOT):
                fill = _fill_slot(slot, config, rng)
                if fill is None:
                    continue
                fill_tokens, _, unit = fill
                units.append((len(tokens), unit))
                tokens.extend(fill_tokens)
                planted.extend([True] * len(fill_tokens))
            else:
                tokens.append(slot)
                planted.append(False)

        spans = _planted_spans(planted)
        intensity = min(
            1.0 + sum(config.term_weight(unit) for _, unit in units), 10.0
        )

        normalized_text = None
        normalized_intensity = None
        if spans:
            norm_tokens: list[str] = []
            cursor = 0
            for start, end in spans:
                norm_tokens.extend(tokens[cursor:start])
                for position, unit in units:
                    if start <= position <= end:
                        norm_tokens.extend(config.replacements[unit])
                cursor = end + 1
            norm_tokens.extend(tokens[cursor:])
            normalized_text = " ".join(norm_tokens)
            normalized_intensity = lexicon_intensity(norm_tokens, config)

        engagement = None
        if config.plant_engagement:
            noise = rng.gauss(0.0, 0.25)
            engagement = max(0, int(math.exp(0.4 + 0.30 * intensity + noise)))

        samples.append(
            Sample.make(
                id=f"syn-{index:05d}",
                text=" ".join(tokens),
                intensity=intensity,
                spans=spans,
                normalized_text=normalized_text,
                normalized_intensity=normalized_intensity,
                engagement=engagement,
            )
        )
    return Corpus.from_samples(samples)
