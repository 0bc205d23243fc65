import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from shiftscope.dist import Pmf, SampleSet, align, sample
from shiftscope.energy import energy_coarsened, energy_estimate, energy_exact, pushforward
from shiftscope.errors import SpaceMismatchError, UnknownDialogueError

from conftest import random_pmf


def test_identical_distributions_give_exact_zero():
    p = Pmf.from_mapping({"a": 0.3, "b": 0.2, "c": 0.5})
    assert energy_exact(p, p).value == 0.0


def test_disjoint_point_masses_give_two():
    p, q = align(Pmf.point_mass("a"), Pmf.point_mass("b"))
    assert energy_exact(p, q).value == 2.0


def test_half_half_vs_point_mass():
    # direct evaluation: 2*(1 - 0.5) - (1 - 0.5) - (1 - 1) = 0.5
    p = Pmf.from_mapping({"a": 0.5, "b": 0.5})
    q = Pmf.from_mapping({"a": 1.0, "b": 0.0})
    assert energy_exact(p, q).value == 0.5


def test_space_mismatch_raises():
    with pytest.raises(SpaceMismatchError):
        energy_exact(Pmf.point_mass("a"), Pmf.point_mass("b"))


def test_estimate_examples():
    assert energy_estimate(SampleSet.from_counts({"x": 2}), SampleSet.from_counts({"x": 3})).value == 0.0
    assert energy_estimate(SampleSet.from_counts({"x": 1}), SampleSet.from_counts({"y": 1})).value == 2.0
    est = energy_estimate(SampleSet.from_counts({"x": 1, "y": 1}), SampleSet.from_counts({"x": 2}))
    assert est.value == 0.5
    assert est.mode == "plugin-sample"


def test_coarsened_constant_map_is_zero():
    p = Pmf.from_mapping({"a": 0.2, "b": 0.8})
    q = Pmf.from_mapping({"a": 0.9, "b": 0.1})
    assert energy_coarsened(p, q, {"a": "r", "b": "r"}).value == 0.0


def test_coarsened_identity_matches_exact():
    rng = np.random.default_rng(11)
    p = random_pmf(rng, 6)
    q = random_pmf(rng, 6)
    ident = {lab: lab for lab in p.space.labels}
    assert energy_coarsened(p, q, ident).value == energy_exact(p, q).value


def test_coarsened_pushforward_example():
    # c(x)=c(y)=r, c(z)=z maps (1/2,1/2,0) and (0,0,1) to disjoint points
    p = Pmf.from_mapping({"x": 0.5, "y": 0.5, "z": 0.0})
    q = Pmf.from_mapping({"x": 0.0, "y": 0.0, "z": 1.0})
    c = {"x": "r", "y": "r", "z": "z"}
    assert energy_coarsened(p, q, c).value == 2.0


def test_coarsened_unknown_label():
    p = Pmf.from_mapping({"a": 1.0})
    with pytest.raises(UnknownDialogueError):
        energy_coarsened(p, p, {"b": "r"})


def test_pushforward_counts_are_exact():
    s = SampleSet.from_counts({"a": 3, "b": 5, "c": 2})
    out = pushforward(s, {"a": "g1", "b": "g1", "c": "g2"})
    assert out.as_dict() == {"g1": 8, "g2": 2}


@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_symmetry_and_l2_identity(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 30))
    p, q = random_pmf(rng, n), random_pmf(rng, n)
    e_pq = energy_exact(p, q).value
    e_qp = energy_exact(q, p).value
    assert e_pq == e_qp
    l2 = math.fsum((a - b) ** 2 for a, b in zip(p.mass, q.mass))
    assert abs(e_pq - l2) <= 1e-12
    assert 0.0 <= e_pq <= 2.0


@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_identity_of_indiscernibles(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 12))
    p, q = random_pmf(rng, n), random_pmf(rng, n)
    if p.mass != q.mass:
        assert energy_exact(p, q).value > 0.0
    assert energy_exact(p, p).value == 0.0


@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_coarsened_energy_stays_in_range(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 15))
    p, q = random_pmf(rng, n), random_pmf(rng, n)
    targets = [f"g{rng.integers(0, max(1, n - 1))}" for _ in range(n)]
    c = dict(zip(p.space.labels, targets))
    assert 0.0 <= energy_coarsened(p, q, c).value <= 2.0


def test_coarsening_can_sharpen_the_energy_signal():
    # merging same-sign mass gaps *raises* the squared-L2 energy; that is the
    # whole reason to coarsen an insensitive signal, so no data-processing
    # contraction holds for energy (total variation does contract)
    p = Pmf.from_mapping({"a": 0.2, "b": 0.2, "c": 0.6})
    q = Pmf.from_mapping({"a": 0.0, "b": 0.0, "c": 1.0})
    merged = {"a": "ab", "b": "ab", "c": "c"}
    assert energy_exact(p, q).value == pytest.approx(0.24, abs=1e-15)
    assert energy_coarsened(p, q, merged).value == pytest.approx(0.32, abs=1e-15)


@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_pushforward_total_variation_contracts(seed):
    # the real data-processing inequality: TV never grows under merging
    from shiftscope.dist import total_variation

    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 15))
    p, q = random_pmf(rng, n), random_pmf(rng, n)
    targets = [f"g{rng.integers(0, max(1, n - 1))}" for _ in range(n)]
    c = dict(zip(p.space.labels, targets))
    cp, cq = pushforward(p, c), pushforward(q, c)
    assert total_variation(cp, cq) <= total_variation(p, q) + 1e-12


def test_estimator_consistency_small():
    rng = np.random.default_rng(5)
    p, q = random_pmf(rng, 12), random_pmf(rng, 12)
    exact = energy_exact(p, q).value
    a = sample(p, 100_000, seed=1)
    b = sample(q, 100_000, seed=2)
    assert abs(energy_estimate(a, b).value - exact) <= 0.01
