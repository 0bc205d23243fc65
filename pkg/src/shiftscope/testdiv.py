"""Test divergence between paired human and generated dialogues.

Each pair shares a context; the divergence per test is the mean absolute
difference of the test's scores across pairs, and the total sums over
tests. Items a test cannot score are skipped and counted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import NoValidPairsError, TestMismatchError
from .testfns import Dialogue


@dataclass(frozen=True)
class PairedItem:
    context_id: str
    human: Dialogue
    generated: Dialogue
    u: object = None


@dataclass(frozen=True)
class PairedCorpus:
    items: tuple

    def __len__(self) -> int:
        return len(self.items)


@dataclass(frozen=True)
class TDReport:
    per_test: dict  # name -> mean |h(human) - h(generated)| in [0, 1]
    total: float
    n_pairs: int
    skipped: dict  # name -> items the test failed on

    def as_dict(self) -> dict:
        return {
            "per_test": dict(self.per_test),
            "total": self.total,
            "n_pairs": self.n_pairs,
            "skipped": dict(self.skipped),
        }


def test_divergence(corpus: PairedCorpus, tests: Sequence) -> TDReport:
    """Mean |h(human, u) - h(generated, u)| per test, summed into a total."""
    if len(corpus) == 0:
        raise NoValidPairsError("corpus is empty")
    per_test, skipped = {}, {}
    for t in tests:
        gaps = []
        n_skipped = 0
        for item in corpus.items:
            try:
                scores = (t(item.human, item.u), t(item.generated, item.u))
            except Exception:
                n_skipped += 1
                continue
            if any(not 0.0 <= s <= 1.0 for s in scores):
                n_skipped += 1  # out-of-range output is a test failure too
                continue
            gaps.append(abs(scores[0] - scores[1]))
        if not gaps:
            raise NoValidPairsError(f"test {t.name!r} scored no pair")
        per_test[t.name] = math.fsum(gaps) / len(gaps)
        skipped[t.name] = n_skipped
    total = math.fsum(per_test.values())
    return TDReport(per_test=per_test, total=total, n_pairs=len(corpus), skipped=skipped)


@dataclass(frozen=True)
class TDChange:
    per_test: dict  # target - source, per test
    total: float


def td_change(source: TDReport, target: TDReport) -> TDChange:
    """Per-test and total difference target - source."""
    if set(source.per_test) != set(target.per_test):
        raise TestMismatchError("reports cover different test sets")
    per_test = {name: target.per_test[name] - source.per_test[name] for name in source.per_test}
    return TDChange(per_test=per_test, total=target.total - source.total)
