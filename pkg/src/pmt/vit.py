"""Eight-level visual imagery curriculum.

Each level pairs a stimulus with an expected response under fixed
presentation modes; support for visualization shrinks as the level
rises. Recall is tested as recognition: the correct response is shown
among foils drawn from the same bank, which keeps the engine
self-scoring.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

NOUN = "noun"
EVENT = "event"
ACTION = "action"

IMAGE_PLUS_WORD = "image_plus_word"
WORD_ONLY = "word_only"
IMAGE_PLUS_SENTENCE = "image_plus_sentence"
SENTENCE_ONLY = "sentence_only"
SENTENCE = "sentence"

# (stimulus content, stimulus mode, response content, response mode) per level
LEVEL_MODES: dict[int, tuple[str, str, str, str]] = {
    1: (NOUN, IMAGE_PLUS_WORD, NOUN, IMAGE_PLUS_WORD),
    2: (NOUN, IMAGE_PLUS_WORD, NOUN, IMAGE_PLUS_WORD),
    3: (NOUN, IMAGE_PLUS_WORD, NOUN, WORD_ONLY),
    4: (NOUN, WORD_ONLY, NOUN, WORD_ONLY),
    5: (NOUN, IMAGE_PLUS_WORD, ACTION, SENTENCE),
    6: (NOUN, WORD_ONLY, ACTION, SENTENCE),
    7: (EVENT, IMAGE_PLUS_SENTENCE, ACTION, SENTENCE),
    8: (EVENT, SENTENCE_ONLY, ACTION, SENTENCE),
}

# bank pair kind required by each level
LEVEL_PAIR_KIND = {
    1: "noun_noun", 2: "noun_noun", 3: "noun_noun", 4: "noun_noun",
    5: "noun_action", 6: "noun_action", 7: "event_action", 8: "event_action",
}

# Levels 1 and 2 share presentation modes; they differ by pair difficulty.
LEVEL_TIER = {1: "easy", 2: "hard"}

SESSION_VIT_LEVELS = {1: (1, 2, 3), 2: (4, 5, 6), 3: (7, 8)}

DEFAULT_ITEMS_PER_LEVEL = 10
DEFAULT_FOILS = 3


class VitError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class WordPair:
    kind: str
    tier: str
    stimulus: str
    response: str
    image: str | None = None


@dataclass(frozen=True, slots=True)
class VitItem:
    level: int
    stimulus_content: str
    stimulus_mode: str
    response_content: str
    response_mode: str
    stimulus_text: str
    correct_response: str
    foils: tuple[str, ...]
    image: str | None = None

    def __post_init__(self) -> None:
        if len(self.foils) < 2:
            raise VitError("an item needs at least 2 foils")
        if self.correct_response in self.foils:
            raise VitError("correct response duplicated among foils")

    def options(self, rng: random.Random) -> list[str]:
        opts = [self.correct_response, *self.foils]
        rng.shuffle(opts)
        return opts


@dataclass(frozen=True, slots=True)
class VitLevelResult:
    level: int
    items_presented: int
    items_correct: int

    def __post_init__(self) -> None:
        if not 0 <= self.items_correct <= self.items_presented:
            raise VitError(
                f"level {self.level}: {self.items_correct} correct out of "
                f"{self.items_presented}"
            )


@dataclass(frozen=True, slots=True)
class WordBank:
    pairs: tuple[WordPair, ...]

    def pool(self, kind: str, tier: str | None = None) -> list[WordPair]:
        return [
            p for p in self.pairs
            if p.kind == kind and (tier is None or p.tier == tier)
        ]

    @classmethod
    def from_dict(cls, doc: dict) -> "WordBank":
        return cls(
            tuple(
                WordPair(
                    kind=e["kind"],
                    tier=e.get("tier", "easy"),
                    stimulus=e["stimulus"],
                    response=e["response"],
                    image=e.get("image"),
                )
                for e in doc["pairs"]
            )
        )

    @classmethod
    def load(cls, path: str | Path) -> "WordBank":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def build_level(
    level: int,
    bank: WordBank,
    rng: random.Random,
    items: int = DEFAULT_ITEMS_PER_LEVEL,
    foil_count: int = DEFAULT_FOILS,
) -> list[VitItem]:
    """Draw a deterministic item sequence for one level."""
    if level not in LEVEL_MODES:
        raise VitError(f"level {level} outside 1..8")
    stim_content, stim_mode, resp_content, resp_mode = LEVEL_MODES[level]
    pool = bank.pool(LEVEL_PAIR_KIND[level], LEVEL_TIER.get(level))
    if len(pool) < items:
        raise VitError(
            f"word bank holds {len(pool)} pairs for level {level}, "
            f"need {items}"
        )
    chosen = rng.sample(pool, items)
    built = []
    for pair in chosen:
        foil_pool = [
            p.response for p in bank.pool(LEVEL_PAIR_KIND[level])
            if p.response != pair.response
        ]
        distinct = sorted(set(foil_pool))
        if len(distinct) < foil_count:
            raise VitError(
                f"word bank cannot supply {foil_count} foils for "
                f"{pair.stimulus!r}"
            )
        foils = tuple(rng.sample(distinct, foil_count))
        image = pair.image
        if stim_mode in (WORD_ONLY, SENTENCE_ONLY):
            image = None
        built.append(
            VitItem(
                level=level,
                stimulus_content=stim_content,
                stimulus_mode=stim_mode,
                response_content=resp_content,
                response_mode=resp_mode,
                stimulus_text=pair.stimulus,
                correct_response=pair.response,
                foils=foils,
                image=image,
            )
        )
    return built


def score_response(item: VitItem, chosen: str) -> bool:
    if chosen != item.correct_response and chosen not in item.foils:
        raise VitError(f"choice {chosen!r} was not among the presented options")
    return chosen == item.correct_response


def imagery_score(results: list[VitLevelResult] | tuple[VitLevelResult, ...]) -> float:
    """Total correct over total presented, pooled across levels."""
    if not results:
        raise VitError("no level results to score")
    presented = sum(r.items_presented for r in results)
    correct = sum(r.items_correct for r in results)
    if presented == 0:
        raise VitError("no items were presented")
    return correct / presented


def default_wordbank_path() -> Path:
    return Path(__file__).parent / "content" / "default.wordbank.json"


def load_default_wordbank() -> WordBank:
    return WordBank.load(default_wordbank_path())
