"""Game worlds: contexts, objects with hidden attributes, and human play.

The answer oracle is a deterministic truth table drawn once from the
config seed. "Human" dialogues come from a scripted questioner that always
asks the question splitting the remaining candidate objects most evenly,
which yields an informative, reproducible goal distribution without any
human data.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..dist import OutcomeSpace
from ..testfns import Dialogue

YES, NO = "yes", "no"
ANSWER_TOKENS = (NO, YES)

DEFAULT_QUESTIONS = (
    "is it red",
    "is it blue",
    "is it on the left",
    "is it near the top",
    "is it big",
    "is it shiny",
    "is it round",
    "is it soft",
)


def seeded_rng(*keys) -> np.random.Generator:
    """Deterministic generator from a mixed int/str key path."""
    entropy = [k if isinstance(k, int) else zlib.crc32(str(k).encode()) for k in keys]
    return np.random.default_rng(np.random.SeedSequence(entropy))


@dataclass(frozen=True)
class GameConfig:
    n_contexts: int
    n_objects_per_context: int
    question_vocab: OutcomeSpace
    m: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.n_contexts < 1 or self.n_objects_per_context < 1:
            raise ValueError("counts must be >= 1")
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if len(self.question_vocab) < 1:
            raise ValueError("question vocabulary is empty")

    @classmethod
    def default(cls, **overrides) -> "GameConfig":
        fields = {
            "n_contexts": 4,
            "n_objects_per_context": 12,
            "question_vocab": OutcomeSpace.from_labels(DEFAULT_QUESTIONS),
            "m": 7,
            "seed": 7,
        }
        fields.update(overrides)
        return cls(**fields)


@dataclass(frozen=True, eq=False)
class AnswerOracle:
    """Deterministic answer rule plus the world metadata the players share."""

    cfg: GameConfig
    bits: np.ndarray  # (contexts, objects, questions) of {0, 1}

    # attributes are sparse: most answers are "no", so single questions split
    # candidate sets unevenly and informative play needs several turns
    ATTRIBUTE_RATE = 0.4

    @classmethod
    def build(cls, cfg: GameConfig) -> "AnswerOracle":
        rng = seeded_rng(cfg.seed, "world-bits")
        bits = (
            rng.random(size=(cfg.n_contexts, cfg.n_objects_per_context, len(cfg.question_vocab)))
            < cls.ATTRIBUTE_RATE
        ).astype(np.uint8)
        return cls(cfg=cfg, bits=bits)

    @property
    def questions(self) -> tuple:
        return self.cfg.question_vocab.labels

    @property
    def n_objects(self) -> int:
        return self.cfg.n_objects_per_context

    def answer_index(self, ci: int, oi: int, qi: int) -> str:
        return YES if self.bits[ci, oi, qi] else NO

    def answer(self, ci: int, oi: int, question: str) -> str:
        return self.answer_index(ci, oi, self.cfg.question_vocab.index_of(question))


def scripted_dialogue(oracle: AnswerOracle, ci: int, oi: int) -> Dialogue:
    """Greedy information-seeking play: ask the most even split, stop when
    the goal is isolated, no informative question remains, or m is hit."""
    bits = oracle.bits[ci]
    candidates = list(range(oracle.n_objects))
    turns = []
    while len(turns) < oracle.cfg.m:
        best_qi, best_score = 0, -1
        for qi in range(bits.shape[1]):
            ones = int(sum(bits[o, qi] for o in candidates))
            score = min(ones, len(candidates) - ones)
            if score > best_score:
                best_qi, best_score = qi, score
        if turns and (len(candidates) == 1 or best_score == 0):
            break
        ans = oracle.answer_index(ci, oi, best_qi)
        turns.append((oracle.questions[best_qi], ans))
        want = 1 if ans == YES else 0
        candidates = [o for o in candidates if bits[o, best_qi] == want]
        if len(candidates) == 1:
            break
    return Dialogue.from_pairs(turns)


@dataclass(frozen=True)
class GoalItem:
    ci: int
    oi: int
    dialogue: Dialogue

    @property
    def context_id(self) -> str:
        return f"c{self.ci}:o{self.oi}"

    @property
    def answers(self) -> tuple:
        return tuple(a for _, a in self.dialogue.turns)


@dataclass(frozen=True)
class GoalCorpus:
    items: tuple

    def __len__(self) -> int:
        return len(self.items)


def sample_goal_corpus(cfg: GameConfig, n: int, seed: Optional[int] = None) -> GoalCorpus:
    """n i.i.d. draws of (context, goal) with their scripted human dialogues."""
    if n < 1:
        raise ValueError("n must be >= 1")
    oracle = AnswerOracle.build(cfg)
    rng = seeded_rng(cfg.seed if seed is None else seed, "goal-corpus")
    cis = rng.integers(0, cfg.n_contexts, size=n)
    ois = rng.integers(0, cfg.n_objects_per_context, size=n)
    cache = {}
    items = []
    for ci, oi in zip(cis, ois):
        key = (int(ci), int(oi))
        if key not in cache:
            cache[key] = scripted_dialogue(oracle, *key)
        items.append(GoalItem(key[0], key[1], cache[key]))
    return GoalCorpus(tuple(items))
