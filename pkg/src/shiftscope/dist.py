"""Exact finite probability objects and sampling primitives.

Everything here is immutable after construction and deterministic given an
explicit seed. Labels are opaque identifiers (strings or ints); every object
stores them in a canonical sorted order so vector operations are stable
across runs and platforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import EmptySampleError, InvalidJointError

NORMALIZATION_TOL = 1e-12


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed))


@dataclass(frozen=True)
class OutcomeSpace:
    """An ordered finite set of distinct labels."""

    labels: tuple

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("labels must be unique")

    @classmethod
    def from_labels(cls, labels: Iterable) -> "OutcomeSpace":
        """Canonicalize: dedupe is rejected, order is the sorted order."""
        labels = tuple(sorted(labels))
        return cls(labels)

    def index_of(self, label) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise KeyError(f"label {label!r} not in space") from None

    @property
    def _index(self) -> dict:
        # cached lazily; object.__setattr__ because the dataclass is frozen
        idx = self.__dict__.get("_index_cache")
        if idx is None:
            idx = {lab: i for i, lab in enumerate(self.labels)}
            object.__setattr__(self, "_index_cache", idx)
        return idx

    def __len__(self) -> int:
        return len(self.labels)

    def __contains__(self, label) -> bool:
        return label in self._index


@dataclass(frozen=True)
class Pmf:
    """Probability mass function over an OutcomeSpace.

    All masses nonnegative and summing to one within NORMALIZATION_TOL.
    """

    space: OutcomeSpace
    mass: tuple

    def __post_init__(self):
        if len(self.mass) != len(self.space):
            raise ValueError("mass vector length must equal |space|")
        if any(m < 0.0 or not math.isfinite(m) for m in self.mass):
            raise ValueError("masses must be finite and nonnegative")
        total = math.fsum(self.mass)
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"masses sum to {total!r}, not 1 within {NORMALIZATION_TOL}")

    @classmethod
    def from_mapping(cls, mapping: Mapping) -> "Pmf":
        space = OutcomeSpace.from_labels(mapping.keys())
        return cls(space, tuple(float(mapping[lab]) for lab in space.labels))

    @classmethod
    def point_mass(cls, label) -> "Pmf":
        return cls(OutcomeSpace((label,)), (1.0,))

    def mass_of(self, label) -> float:
        return self.mass[self.space.index_of(label)]

    def as_dict(self) -> dict:
        return {lab: m for lab, m in zip(self.space.labels, self.mass)}

    def as_array(self) -> np.ndarray:
        return np.asarray(self.mass, dtype=float)


@dataclass(frozen=True)
class SampleSet:
    """Multiset of observed outcomes: integer counts per label."""

    space: OutcomeSpace
    counts: tuple

    def __post_init__(self):
        if len(self.counts) != len(self.space):
            raise ValueError("counts vector length must equal |space|")
        if any(c < 0 or c != int(c) for c in self.counts):
            raise ValueError("counts must be nonnegative integers")

    @classmethod
    def from_observations(cls, observations: Iterable) -> "SampleSet":
        tally: dict = {}
        for obs in observations:
            tally[obs] = tally.get(obs, 0) + 1
        return cls.from_counts(tally)

    @classmethod
    def from_counts(cls, mapping: Mapping) -> "SampleSet":
        space = OutcomeSpace.from_labels(mapping.keys())
        return cls(space, tuple(int(mapping[lab]) for lab in space.labels))

    @property
    def n(self) -> int:
        return sum(self.counts)

    def as_dict(self) -> dict:
        return {lab: c for lab, c in zip(self.space.labels, self.counts)}


def pmf_from_samples(s: SampleSet) -> Pmf:
    """Empirical pmf: mass(x) = counts(x) / n."""
    n = s.n
    if n < 1:
        raise EmptySampleError("cannot build a pmf from an empty sample set")
    return Pmf(s.space, tuple(c / n for c in s.counts))


def sample(p: Pmf, n: int, seed: int) -> SampleSet:
    """Draw n outcomes by inverse-CDF over the canonical label order."""
    if n < 1:
        raise ValueError("n must be >= 1")
    cdf = np.cumsum(p.as_array())
    cdf[-1] = 1.0  # guard against fp undershoot in the last bin
    u = _rng(seed).random(n)
    idx = np.searchsorted(cdf, u, side="right")
    counts = np.bincount(idx, minlength=len(p.space))
    return SampleSet(p.space, tuple(int(c) for c in counts))


def align(p: Pmf, q: Pmf) -> tuple[Pmf, Pmf]:
    """Re-express both pmfs over the union of their supports, zero-filled."""
    if p.space == q.space:
        return p, q
    union = OutcomeSpace.from_labels(set(p.space.labels) | set(q.space.labels))
    pd, qd = p.as_dict(), q.as_dict()
    pm = tuple(pd.get(lab, 0.0) for lab in union.labels)
    qm = tuple(qd.get(lab, 0.0) for lab in union.labels)
    return Pmf(union, pm), Pmf(union, qm)


def total_variation(p: Pmf, q: Pmf) -> float:
    p, q = align(p, q)
    return 0.5 * math.fsum(abs(a - b) for a, b in zip(p.mass, q.mass))


def _validate_rows(rows: Mapping, context_space: OutcomeSpace, what: str) -> None:
    for c in context_space.labels:
        if c not in rows:
            raise InvalidJointError(f"{what} has no row for context {c!r}")
        if not isinstance(rows[c], Pmf):
            raise InvalidJointError(f"{what} row for {c!r} is not a Pmf")


@dataclass(frozen=True)
class JointModel:
    """Exact joint distribution over (C, D, D~1, D~2, U).

    Structure: a weighted context space, one conditional dialogue pmf per
    context for the human and for each of the two generators, and a noise
    pmf drawn independently of everything else (product form).
    """

    context_space: OutcomeSpace
    context_weights: tuple
    human: Mapping  # context label -> Pmf over dialogues
    gen1: Mapping  # target-environment generator
    gen2: Mapping  # source-environment generator
    noise: Pmf
    dialogue_space: OutcomeSpace = field(init=False)

    def __post_init__(self):
        if len(self.context_weights) != len(self.context_space):
            raise InvalidJointError("context weight vector length mismatch")
        if any(w < 0 for w in self.context_weights):
            raise InvalidJointError("context weights must be nonnegative")
        if abs(math.fsum(self.context_weights) - 1.0) > NORMALIZATION_TOL:
            raise InvalidJointError("context weights must sum to 1")
        for what, rows in (("human", self.human), ("gen1", self.gen1), ("gen2", self.gen2)):
            _validate_rows(rows, self.context_space, what)
        labels: set = set()
        for rows in (self.human, self.gen1, self.gen2):
            for c in self.context_space.labels:
                labels.update(rows[c].space.labels)
        object.__setattr__(self, "dialogue_space", OutcomeSpace.from_labels(labels))

    def aligned_row(self, rows: Mapping, c) -> np.ndarray:
        """Conditional mass vector over the full dialogue_space."""
        row = rows[c].as_dict()
        return np.array([row.get(d, 0.0) for d in self.dialogue_space.labels])

    def marginal(self, which: str) -> Pmf:
        """Marginal dialogue pmf of one arm ('human', 'gen1' or 'gen2')."""
        rows = {"human": self.human, "gen1": self.gen1, "gen2": self.gen2}[which]
        acc = np.zeros(len(self.dialogue_space))
        for w, c in zip(self.context_weights, self.context_space.labels):
            acc += w * self.aligned_row(rows, c)
        # renormalize rounding residue; the exact sum is 1 by construction
        total = math.fsum(acc.tolist())
        return Pmf(self.dialogue_space, tuple(float(v) / total for v in acc))


def enumerate_joint(j: JointModel):
    """Yield (c, d, d1, d2, u, probability) for every support tuple.

    Probabilities multiply along the product structure
    w(c) * p(d|c) * p(d1|c) * p(d2|c) * p(u); zero-mass tuples are skipped.
    """
    out = []
    for w, c in zip(j.context_weights, j.context_space.labels):
        if w == 0.0:
            continue
        hrow, g1row, g2row = j.human[c], j.gen1[c], j.gen2[c]
        for d, pd in zip(hrow.space.labels, hrow.mass):
            if pd == 0.0:
                continue
            for d1, p1 in zip(g1row.space.labels, g1row.mass):
                if p1 == 0.0:
                    continue
                for d2, p2 in zip(g2row.space.labels, g2row.mass):
                    if p2 == 0.0:
                        continue
                    for u, pu in zip(j.noise.space.labels, j.noise.mass):
                        if pu == 0.0:
                            continue
                        out.append((c, d, d1, d2, u, w * pd * p1 * p2 * pu))
    return out
