"""Test functions: maps from (dialogue, noise) to a score in [0, 1].

A dialogue is an ordered list of (question tokens, answer token) turns.
Built-ins cover the usual automated checks (strategy proportions, lexical
diversity, verbatim question repetition, reference overlap); externally
collected scores (e.g. human annotation) load as table-backed test
functions keyed by dialogue id and noise label.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional, Sequence

from .errors import EmptyDialogueError, MissingReferenceError


def tokenize(text: str) -> tuple:
    """Whitespace split, lowercased. Deterministic and dataset-agnostic."""
    return tuple(text.lower().split())


@dataclass(frozen=True)
class Dialogue:
    """Turns of (question tokens, answer token), at least one turn."""

    turns: tuple  # ((q_token, ...), answer_token) per turn
    uid: Optional[str] = None  # stable id, needed only by table-backed tests

    def __post_init__(self):
        if len(self.turns) < 1:
            raise ValueError("a dialogue has at least one turn")
        for q, a in self.turns:
            if len(q) < 1 or not a:
                raise ValueError("questions and answers must be nonempty")

    @classmethod
    def from_pairs(cls, pairs: Iterable, uid: Optional[str] = None) -> "Dialogue":
        turns = tuple((tokenize(q), a.lower().strip()) for q, a in pairs)
        return cls(turns, uid)

    @property
    def length(self) -> int:
        return len(self.turns)

    def questions(self) -> tuple:
        return tuple(q for q, _ in self.turns)

    def question_tokens(self) -> tuple:
        return tuple(tok for q, _ in self.turns for tok in q)

    def key(self) -> str:
        """Canonical serialization; equal dialogues share a key."""
        return " / ".join(" ".join(q) + " -> " + a for q, a in self.turns)


@dataclass(frozen=True)
class TestFunction:
    name: str
    fn: Callable  # (Dialogue, u) -> float in [0, 1]

    def __call__(self, dialogue: Dialogue, u=None) -> float:
        return self.fn(dialogue, u)


@dataclass(frozen=True)
class StrategyClassifier:
    """Binary predicate over a single question's tokens."""

    name: str
    predicate: Callable  # (question tokens,) -> bool

    def __call__(self, question: Sequence) -> bool:
        return bool(self.predicate(tuple(question)))

    @classmethod
    def keyword(cls, name: str, keywords: Iterable) -> "StrategyClassifier":
        kws = frozenset(k.lower() for k in keywords)
        return cls(name, lambda q: bool(kws.intersection(q)))


def strategy_proportion(s: StrategyClassifier) -> TestFunction:
    """Fraction of a dialogue's questions the classifier flags."""

    def fn(d: Dialogue, u=None) -> float:
        return sum(1.0 for q in d.questions() if s(q)) / d.length

    return TestFunction(f"strategy:{s.name}", fn)


def lexical_diversity() -> TestFunction:
    """Type/token ratio over the dialogue's question tokens."""

    def fn(d: Dialogue, u=None) -> float:
        toks = d.question_tokens()
        if not toks:
            raise EmptyDialogueError("dialogue has no question tokens")
        return len(set(toks)) / len(toks)

    return TestFunction("lexical_diversity", fn)


def repetition_indicator() -> TestFunction:
    """1 when any question token sequence appears verbatim twice."""

    def fn(d: Dialogue, u=None) -> float:
        qs = d.questions()
        return 1.0 if len(set(qs)) < len(qs) else 0.0

    return TestFunction("repetition", fn)


def reference_overlap() -> TestFunction:
    """Clipped unigram precision against a reference dialogue carried in u.

    The reference scores 1 against itself; the divergence built on top of
    this behaves like one minus the usual n-gram overlap metric.
    """

    def fn(d: Dialogue, u=None) -> float:
        if not isinstance(u, Dialogue):
            raise MissingReferenceError("u must carry the reference dialogue")
        cand = Counter(d.question_tokens())
        ref = Counter(u.question_tokens())
        total = sum(cand.values())
        if total == 0:
            raise EmptyDialogueError("dialogue has no question tokens")
        matched = sum(min(n, ref[tok]) for tok, n in cand.items())
        return min(1.0, max(0.0, matched / total))

    return TestFunction("reference_overlap", fn)


def score_table(name: str, scores: Mapping) -> TestFunction:
    """External scores (e.g. human annotation) as a test function.

    ``scores`` maps (dialogue uid, u label) to a value in [0, 1]. Lookups
    for unknown pairs raise, which the divergence layer reports as skips.
    """
    table = {k: float(v) for k, v in scores.items()}
    for key, v in table.items():
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"score {v!r} for {key!r} outside [0, 1]")

    def fn(d: Dialogue, u=None) -> float:
        if d.uid is None:
            raise KeyError("dialogue has no uid; table-backed tests need one")
        return table[(d.uid, u)]

    return TestFunction(name, fn)


BUILTIN_FACTORIES = {
    "lexical_diversity": lexical_diversity,
    "repetition": repetition_indicator,
    "reference_overlap": reference_overlap,
}


def build_tests(spec: Sequence) -> list:
    """Instantiate test functions from a declarative spec list.

    Each entry is either a builtin name, {"strategy": name, "keywords": [...]},
    or {"table": name, "scores": {"uid|u": value, ...}} with u omitted after a
    trailing pipe for noise-free tables.
    """
    tests = []
    for entry in spec:
        if isinstance(entry, str):
            if entry not in BUILTIN_FACTORIES:
                raise ValueError(f"unknown builtin test {entry!r}")
            tests.append(BUILTIN_FACTORIES[entry]())
        elif "strategy" in entry:
            clf = StrategyClassifier.keyword(entry["strategy"], entry["keywords"])
            tests.append(strategy_proportion(clf))
        elif "table" in entry:
            scores = {}
            for key, v in entry["scores"].items():
                uid, _, ulab = key.partition("|")
                scores[(uid, ulab or None)] = v
            tests.append(score_table(entry["table"], scores))
        else:
            raise ValueError(f"unrecognized test spec entry {entry!r}")
    return tests
