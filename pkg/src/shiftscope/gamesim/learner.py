"""Tabular players and the two learning phases they alternate through.

The encoder summarizes a dialogue prefix as the suffix of its most recent
answers, refined per context by a binary trie of split nodes. Policy rows
are keyed by (encoder state, step); the guesser by final encoder state.
Unknown states fall back to uniform rows: a changed encoder feeding a
fixed generator produces uncontrolled output, which is exactly the
environment-shift mechanism under study.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..errors import StateHoleError
from ..testfns import Dialogue
from .world import ANSWER_TOKENS, AnswerOracle, GoalCorpus, seeded_rng


@dataclass(frozen=True)
class EncoderMap:
    """Per-context refinement trie over recent-answer suffixes.

    A suffix (most recent answer first) is walked while it names a split
    node and answers remain; the stopping suffix is the state. Splits and
    merges (unsplits) are the only structural perturbations.
    """

    n_contexts: int
    splits: tuple  # per context: frozenset of split suffixes

    @classmethod
    def initial(cls, n_contexts: int, refinement: int = 0) -> "EncoderMap":
        split = frozenset(
            suffix
            for depth in range(refinement)
            for suffix in _all_suffixes(depth)
        )
        return cls(n_contexts=n_contexts, splits=tuple(split for _ in range(n_contexts)))

    def encode(self, ci: int, answers: Sequence) -> str:
        if not 0 <= ci < self.n_contexts:
            raise StateHoleError(f"context index {ci} outside the encoder's range")
        splits = self.splits[ci]
        t = len(answers)
        suffix = ()
        while suffix in splits and len(suffix) < t:
            suffix = suffix + (answers[t - 1 - len(suffix)],)
        return f"c{ci}|{','.join(suffix)}"

    def nodes(self, ci: int, max_depth: int) -> list:
        """All trie suffixes reachable for prefixes up to max_depth long."""
        out, frontier = [], [()]
        while frontier:
            suffix = frontier.pop()
            if len(suffix) > max_depth:
                continue
            out.append(suffix)
            if suffix in self.splits[ci]:
                frontier.extend(suffix + (a,) for a in ANSWER_TOKENS)
        return sorted(out, key=lambda s: (len(s), s))

    def state_count(self, max_depth: int) -> int:
        return sum(len(self.nodes(ci, max_depth)) for ci in range(self.n_contexts))

    def with_split(self, ci: int, suffix: tuple) -> "EncoderMap":
        splits = list(self.splits)
        splits[ci] = splits[ci] | {suffix}
        return EncoderMap(self.n_contexts, tuple(splits))

    def with_merge(self, ci: int, suffix: tuple) -> "EncoderMap":
        splits = list(self.splits)
        splits[ci] = splits[ci] - {suffix}
        return EncoderMap(self.n_contexts, tuple(splits))

    def perturbation_candidates(self, max_depth: int) -> list:
        """Splittable leaves and unsplittable internal nodes, canonical order."""
        cands = []
        for ci in range(self.n_contexts):
            splits = self.splits[ci]
            for suffix in self.nodes(ci, max_depth):
                if suffix not in splits and len(suffix) < max_depth:
                    cands.append(("split", ci, suffix))
                elif suffix in splits and not any(
                    suffix + (a,) in splits for a in ANSWER_TOKENS
                ):
                    cands.append(("merge", ci, suffix))
        return cands

    def apply(self, op) -> "EncoderMap":
        kind, ci, suffix = op
        if kind == "split":
            return self.with_split(ci, suffix)
        if kind == "merge":
            return self.with_merge(ci, suffix)
        raise ValueError(f"unknown perturbation {kind!r}")


def _all_suffixes(depth: int) -> list:
    out = [()]
    for _ in range(depth):
        out = [s + (a,) for s in out for a in ANSWER_TOKENS]
    return out


@dataclass(frozen=True, eq=False)
class TabularPolicy:
    """Categorical question weights per (encoder state, step)."""

    questions: tuple  # vocabulary labels in canonical order
    rows: dict = field(default_factory=dict)  # (state, step) -> np.ndarray

    @classmethod
    def uniform(cls, questions: tuple) -> "TabularPolicy":
        return cls(questions=tuple(questions))

    @property
    def n_questions(self) -> int:
        return len(self.questions)

    def question_index(self, q_tokens: tuple) -> int:
        index = self.__dict__.get("_qindex")
        if index is None:
            index = {tuple(q.split()): i for i, q in enumerate(self.questions)}
            object.__setattr__(self, "_qindex", index)
        return index[tuple(q_tokens)]

    def question_dist(self, state: str, step: int) -> np.ndarray:
        row = self.rows.get((state, step))
        if row is None:
            return np.full(self.n_questions, 1.0 / self.n_questions)
        return row

    def with_rows(self, updates: dict) -> "TabularPolicy":
        rows = dict(self.rows)
        rows.update(updates)
        return TabularPolicy(self.questions, rows)


@dataclass(frozen=True, eq=False)
class GuesserTable:
    """Goal-object posterior per final encoder state."""

    n_objects: int
    rows: dict = field(default_factory=dict)  # state -> np.ndarray

    @classmethod
    def uniform(cls, n_objects: int) -> "GuesserTable":
        return cls(n_objects=n_objects)

    def row(self, state: str) -> np.ndarray:
        row = self.rows.get(state)
        if row is None:
            return np.full(self.n_objects, 1.0 / self.n_objects)
        return row

    def guess(self, state: str) -> int:
        return int(np.argmax(self.row(state)))  # ties to the lowest index


@dataclass(frozen=True)
class RolloutResult:
    dialogue: Dialogue
    goal: int
    guess: int
    final_state: str
    ci: int

    @property
    def answers(self) -> tuple:
        return tuple(a for _, a in self.dialogue.turns)


def rollout(
    policy: TabularPolicy,
    enc: EncoderMap,
    guesser: GuesserTable,
    ans: AnswerOracle,
    context: tuple,
    seed,
) -> RolloutResult:
    """Generate m question-answer turns, then guess from the final state."""
    ci, oi = context
    rng = seeded_rng(int(seed))
    questions = ans.questions
    answers: list = []
    turns = []
    for step in range(ans.cfg.m):
        state = enc.encode(ci, answers)
        dist = policy.question_dist(state, step)
        cdf = np.cumsum(dist)
        qi = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
        qi = min(qi, len(questions) - 1)
        a = ans.answer_index(ci, oi, qi)
        turns.append((questions[qi], a))
        answers.append(a)
    final_state = enc.encode(ci, answers)
    return RolloutResult(
        dialogue=Dialogue.from_pairs(turns),
        goal=oi,
        guess=guesser.guess(final_state),
        final_state=final_state,
        ci=ci,
    )


def task_error(rollouts: Sequence) -> float:
    """Fraction of rollouts whose guess misses the goal."""
    if not rollouts:
        raise ValueError("no rollouts")
    return sum(1.0 for r in rollouts if r.guess != r.goal) / len(rollouts)


def phase_language(
    policy: TabularPolicy, enc: EncoderMap, corpus: GoalCorpus
) -> tuple[TabularPolicy, EncoderMap]:
    """Maximum-likelihood count update of policy rows along human prefixes.

    Rows the corpus never visits are left alone; reapplying on the same
    corpus is idempotent. The encoder passes through untouched.
    """
    counts: dict = {}
    for item in corpus.items:
        answers: list = []
        for step, (q_tokens, a) in enumerate(item.dialogue.turns):
            state = enc.encode(item.ci, answers)
            key = (state, step)
            row = counts.get(key)
            if row is None:
                row = counts[key] = np.zeros(policy.n_questions)
            row[policy.question_index(q_tokens)] += 1.0
            answers.append(a)
    updates = {key: row / row.sum() for key, row in counts.items()}
    return policy.with_rows(updates), enc


@dataclass(frozen=True)
class TaskPhaseResult:
    guesser: GuesserTable
    enc: EncoderMap
    applied: tuple  # perturbations actually taken, in order
    budget: int
    n_states_before: int
    rollouts: tuple
    objective_before: float
    objective_after: float


def _fit_rows(finals: Sequence, n_objects: int, weights: Optional[Sequence] = None) -> dict:
    counts: dict = {}
    if weights is None:
        weights = [1.0] * len(finals)
    for (state, goal), w in zip(finals, weights):
        row = counts.get(state)
        if row is None:
            row = counts[state] = np.zeros(n_objects)
        row[goal] += w
    return {s: row / row.sum() for s, row in counts.items()}


def _guess_error(finals: Sequence, rows: dict) -> float:
    bad = 0
    for state, goal in finals:
        row = rows.get(state)
        guess = 0 if row is None else int(np.argmax(row))
        if guess != goal:
            bad += 1
    return bad / len(finals)


def phase_task(
    policy: TabularPolicy,
    enc: EncoderMap,
    guesser: GuesserTable,
    ans: AnswerOracle,
    corpus: Optional[GoalCorpus],
    regularize: bool,
    step: float,
    *,
    seed: int,
    n_rollouts: int = 500,
) -> TaskPhaseResult:
    """One task-oriented epoch: refit guesser rows, perturb the encoder.

    The guesser epoch first refits rows from this phase's generated
    rollouts under the entering encoder (pooled with the human corpus when
    ``regularize`` is set, at equal term weight). Encoder perturbations
    (splits/merges of at most ceil(step * #states) state labels) are then
    scored greedily: the generated-error term uses rows refit under each
    trial encoder, since the task objective gets to re-adapt the guesser to
    its own data, while the regularizer's human-dialogue term is evaluated
    at the current iterate: the epoch's guesser applied to human finals
    under the trial encoder. Relabeling a state the human dialogues rely
    on therefore shows up as immediate damage, and such perturbations are
    rejected unless the generated-error gain outweighs them.
    """
    if regularize and corpus is None:
        raise ValueError("regularized task phase needs the human corpus")
    if step < 0:
        raise ValueError("step must be >= 0")
    cfg = ans.cfg
    rng = seeded_rng(seed, "task-phase")
    goals = [
        (int(rng.integers(cfg.n_contexts)), int(rng.integers(cfg.n_objects_per_context)))
        for _ in range(n_rollouts)
    ]
    rollouts = tuple(
        rollout(policy, enc, guesser, ans, ctx, int(rng.integers(2**62))) for ctx in goals
    )
    gen_items = [(r.ci, r.answers, r.goal) for r in rollouts]
    hum_items = (
        [(item.ci, item.answers, item.oi) for item in corpus.items] if corpus is not None else []
    )

    def fit_epoch_rows(enc_t: EncoderMap) -> dict:
        gen_finals = [(enc_t.encode(ci, a), goal) for ci, a, goal in gen_items]
        if not regularize:
            return _fit_rows(gen_finals, cfg.n_objects_per_context)
        hum_finals = [(enc_t.encode(ci, a), goal) for ci, a, goal in hum_items]
        finals = gen_finals + hum_finals
        weights = [1.0 / len(gen_finals)] * len(gen_finals) + [1.0 / len(hum_finals)] * len(
            hum_finals
        )
        return _fit_rows(finals, cfg.n_objects_per_context, weights)

    incumbent_rows = fit_epoch_rows(enc)

    def objective(enc_trial: EncoderMap) -> float:
        gen_finals = [(enc_trial.encode(ci, a), goal) for ci, a, goal in gen_items]
        rows = _fit_rows(gen_finals, cfg.n_objects_per_context)
        value = _guess_error(gen_finals, rows)
        if regularize:
            hum_finals = [(enc_trial.encode(ci, a), goal) for ci, a, goal in hum_items]
            value += _guess_error(hum_finals, incumbent_rows)
        return value

    n_states = enc.state_count(cfg.m)
    budget = math.ceil(step * n_states)
    current = objective(enc)
    objective_before = current
    applied = []
    if budget > 0:
        candidates = enc.perturbation_candidates(cfg.m)
        order = rng.permutation(len(candidates))
        for idx in order:
            if len(applied) >= budget:
                break
            op = candidates[int(idx)]
            trial = enc.apply(op)
            value = objective(trial)
            if value <= current + 1e-12:
                enc, current = trial, value
                applied.append(op)

    new_guesser = GuesserTable(cfg.n_objects_per_context, fit_epoch_rows(enc))
    return TaskPhaseResult(
        guesser=new_guesser,
        enc=enc,
        applied=tuple(applied),
        budget=budget,
        n_states_before=n_states,
        rollouts=rollouts,
        objective_before=objective_before,
        objective_after=current,
    )
