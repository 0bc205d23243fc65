"""Sweep and comparison experiments over the cooperative-learning game.

``shift_sweep`` varies the task-phase perturbation magnitude and records,
per (magnitude, seed) cell, the coarsened energy between the generated
distributions before and after the task phase together with the change in
test divergence. ``compare_cl_leather`` runs the plain and the
human-regularized task phase side by side on shared seeds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from ..coarsening import EmbeddingTable, fit_kmeans
from ..dist import SampleSet
from ..energy import energy_coarsened
from ..testdiv import PairedCorpus, PairedItem, TDReport, td_change, test_divergence
from ..testfns import Dialogue, build_tests
from .learner import (
    EncoderMap,
    GuesserTable,
    TabularPolicy,
    phase_language,
    phase_task,
    rollout,
    task_error,
)
from .world import AnswerOracle, GameConfig, GoalCorpus, sample_goal_corpus, seeded_rng

DEFAULT_TESTS = (
    {"strategy": "color", "keywords": ["red", "blue"]},
    {"strategy": "spatial", "keywords": ["left", "top"]},
    "lexical_diversity",
    "repetition",
)


@dataclass(frozen=True)
class Scenario:
    """A game config plus the knobs the experiments need pinned."""

    cfg: GameConfig
    corpus_size: int = 600
    n_rollouts: int = 500  # task-phase fitting and scoring rollouts
    k_coarse: int = 12
    encoder_refinement: int = 2
    tests_spec: tuple = DEFAULT_TESTS
    compare_step: float = 0.15
    compare_epochs: int = 3

    @classmethod
    def default(cls, **overrides) -> "Scenario":
        cfg = overrides.pop("cfg", GameConfig.default())
        return cls(cfg=cfg, **overrides)

    def tests(self):
        return build_tests(list(self.tests_spec))


@dataclass(frozen=True)
class Snapshot:
    """One measurement of a (policy, enc, guesser) triple on the corpus."""

    td: TDReport
    sample: SampleSet
    dialogues: dict  # dialogue key -> Dialogue
    error: float


def embed_dialogue(d: Dialogue, questions: tuple) -> list:
    """Bag-of-questions plus answer/length/diversity summary features."""
    qidx = {tuple(q.split()): i for i, q in enumerate(questions)}
    vec = [0.0] * (len(questions) + 4)
    for q_tokens, a in d.turns:
        vec[qidx[q_tokens]] += 1.0
        if a == "yes":
            vec[len(questions)] += 1.0
        else:
            vec[len(questions) + 1] += 1.0
    vec[len(questions) + 2] = float(d.length)
    vec[len(questions) + 3] = float(len(set(d.questions())))
    return vec


def measure(
    policy: TabularPolicy,
    enc: EncoderMap,
    guesser: GuesserTable,
    ans: AnswerOracle,
    corpus: GoalCorpus,
    tests,
    seed: int,
) -> Snapshot:
    """Pair one generated rollout with each corpus item and score it."""
    rng = seeded_rng(seed, "measure")
    item_seeds = [int(s) for s in rng.integers(0, 2**62, size=len(corpus))]
    results = [
        rollout(policy, enc, guesser, ans, (item.ci, item.oi), s)
        for item, s in zip(corpus.items, item_seeds)
    ]
    pairs = PairedCorpus(
        tuple(
            PairedItem(item.context_id, item.dialogue, r.dialogue)
            for item, r in zip(corpus.items, results)
        )
    )
    td = test_divergence(pairs, tests)
    dialogues = {}
    for r in results:
        dialogues.setdefault(r.dialogue.key(), r.dialogue)
    sample = SampleSet.from_observations(r.dialogue.key() for r in results)
    return Snapshot(td=td, sample=sample, dialogues=dialogues, error=task_error(results))


def coarsened_energy_between(
    a: Snapshot, b: Snapshot, questions: tuple, k: int, seed: int
) -> float:
    """Energy between two generated samples under a freshly fitted coarsening."""
    union = dict(a.dialogues)
    union.update(b.dialogues)
    ids = tuple(sorted(union))
    vectors = np.array([embed_dialogue(union[i], questions) for i in ids])
    table = EmbeddingTable(ids=ids, vectors=vectors)
    c = fit_kmeans(table, min(k, len(ids)), seed)
    return energy_coarsened(a.sample, b.sample, c).value


@dataclass(frozen=True)
class SweepRow:
    magnitude: float
    seed: int
    epsilon: float
    dtd_per_test: dict
    dtd_total_abs: float
    applied_ops: int

    def as_dict(self) -> dict:
        out = {
            "magnitude": self.magnitude,
            "seed": self.seed,
            "epsilon": self.epsilon,
            "dtd_total_abs": self.dtd_total_abs,
            "applied_ops": self.applied_ops,
        }
        for name, v in self.dtd_per_test.items():
            out[f"dtd_{name}"] = v
        return out


@dataclass(frozen=True)
class SweepResult:
    rows: tuple
    pearson_r: float

    def as_dict(self) -> dict:
        return {"rows": [r.as_dict() for r in self.rows], "pearson_r": self.pearson_r}


def pearson(xs: Sequence, ys: Sequence) -> float:
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.std() == 0.0 or y.std() == 0.0:
        return 0.0
    return float(np.corrcoef(x, y)[0, 1])


def shift_sweep(scenario: Scenario, magnitudes: Sequence, seeds: Sequence) -> SweepResult:
    """Table of (magnitude, seed, epsilon_c, delta-TD) cells plus Pearson r.

    The sweep runs the unregularized task phase: the magnitude knob stands
    in for the implicit shift a longer training schedule produces.
    """
    if len(magnitudes) < 5:
        raise ValueError("need at least 5 magnitudes")
    if len(seeds) < 3:
        raise ValueError("need at least 3 seeds")
    cfg = scenario.cfg
    ans = AnswerOracle.build(cfg)
    tests = scenario.tests()
    rows = []
    for seed in seeds:
        corpus = sample_goal_corpus(cfg, scenario.corpus_size, seed=int(seed))
        policy0 = TabularPolicy.uniform(cfg.question_vocab.labels)
        enc0 = EncoderMap.initial(cfg.n_contexts, scenario.encoder_refinement)
        policy, enc = phase_language(policy0, enc0, corpus)
        meas_seed = int(seed) * 7919 + 13
        src = measure(policy, enc, GuesserTable.uniform(cfg.n_objects_per_context), ans, corpus, tests, meas_seed)
        for mag in magnitudes:
            res = phase_task(
                policy,
                enc,
                GuesserTable.uniform(cfg.n_objects_per_context),
                ans,
                corpus,
                regularize=False,
                step=float(mag),
                seed=int(seed) * 104729 + 29,
                n_rollouts=scenario.n_rollouts,
            )
            tgt = measure(policy, res.enc, res.guesser, ans, corpus, tests, meas_seed)
            eps = coarsened_energy_between(
                src, tgt, ans.questions, scenario.k_coarse, seed=int(seed) * 31 + 5
            )
            change = td_change(src.td, tgt.td)
            rows.append(
                SweepRow(
                    magnitude=float(mag),
                    seed=int(seed),
                    epsilon=eps,
                    dtd_per_test=change.per_test,
                    dtd_total_abs=math.fsum(abs(v) for v in change.per_test.values()),
                    applied_ops=len(res.applied),
                )
            )
    r = pearson([row.epsilon for row in rows], [row.dtd_total_abs for row in rows])
    return SweepResult(rows=tuple(rows), pearson_r=r)


@dataclass(frozen=True)
class ArmRecord:
    seed: int
    arm: str
    eps_per_transition: tuple
    mean_eps: float
    total_abs_dtd: float
    final_td: float
    final_error: float
    applied_per_transition: tuple

    def as_dict(self) -> dict:
        return {
            "seed": self.seed,
            "arm": self.arm,
            "eps_per_transition": list(self.eps_per_transition),
            "mean_eps": self.mean_eps,
            "total_abs_dtd": self.total_abs_dtd,
            "final_td": self.final_td,
            "final_error": self.final_error,
            "applied_per_transition": list(self.applied_per_transition),
        }


@dataclass(frozen=True)
class CompareResult:
    records: tuple
    frac_seeds_lower_eps: float
    frac_seeds_dtd_not_worse: float

    def as_dict(self) -> dict:
        return {
            "records": [r.as_dict() for r in self.records],
            "frac_seeds_lower_eps": self.frac_seeds_lower_eps,
            "frac_seeds_dtd_not_worse": self.frac_seeds_dtd_not_worse,
        }


def _run_arm(
    scenario: Scenario, ans: AnswerOracle, corpus: GoalCorpus, seed: int, regularize: bool
) -> ArmRecord:
    cfg = scenario.cfg
    tests = scenario.tests()
    policy = TabularPolicy.uniform(cfg.question_vocab.labels)
    enc = EncoderMap.initial(cfg.n_contexts, scenario.encoder_refinement)
    guesser = GuesserTable.uniform(cfg.n_objects_per_context)
    eps_list, dtd_list, applied_list = [], [], []
    last = None
    for epoch in range(scenario.compare_epochs):
        policy, enc = phase_language(policy, enc, corpus)
        meas_seed = seed * 6007 + epoch * 101 + 3
        src = measure(policy, enc, guesser, ans, corpus, tests, meas_seed)
        res = phase_task(
            policy,
            enc,
            guesser,
            ans,
            corpus,
            regularize=regularize,
            step=scenario.compare_step,
            seed=seed * 9001 + epoch * 211 + 17,
            n_rollouts=scenario.n_rollouts,
        )
        guesser, enc = res.guesser, res.enc
        tgt = measure(policy, enc, guesser, ans, corpus, tests, meas_seed)
        eps_list.append(
            coarsened_energy_between(
                src, tgt, ans.questions, scenario.k_coarse, seed=seed * 43 + epoch
            )
        )
        change = td_change(src.td, tgt.td)
        dtd_list.append(math.fsum(abs(v) for v in change.per_test.values()))
        applied_list.append(len(res.applied))
        last = tgt
    return ArmRecord(
        seed=seed,
        arm="leather" if regularize else "cl",
        eps_per_transition=tuple(eps_list),
        mean_eps=float(np.mean(eps_list)),
        total_abs_dtd=math.fsum(dtd_list),
        final_td=last.td.total,
        final_error=last.error,
        applied_per_transition=tuple(applied_list),
    )


def compare_cl_leather(scenario: Scenario, epochs: Optional[int], seeds: Sequence) -> CompareResult:
    """Both arms on shared seeds; the regularized arm should shift less."""
    if epochs is not None and epochs != scenario.compare_epochs:
        scenario = replace(scenario, compare_epochs=epochs)
    if scenario.compare_epochs < 2:
        raise ValueError("need at least 2 epochs")
    if not seeds:
        raise ValueError("need at least 1 seed")
    cfg = scenario.cfg
    ans = AnswerOracle.build(cfg)
    records = []
    lower_eps = 0
    dtd_not_worse = 0
    for seed in seeds:
        corpus = sample_goal_corpus(cfg, scenario.corpus_size, seed=int(seed))
        cl = _run_arm(scenario, ans, corpus, int(seed), regularize=False)
        lt = _run_arm(scenario, ans, corpus, int(seed), regularize=True)
        records.extend([cl, lt])
        if lt.mean_eps < cl.mean_eps:
            lower_eps += 1
        if lt.total_abs_dtd <= cl.total_abs_dtd:
            dtd_not_worse += 1
    return CompareResult(
        records=tuple(records),
        frac_seeds_lower_eps=lower_eps / len(seeds),
        frac_seeds_dtd_not_worse=dtd_not_worse / len(seeds),
    )
