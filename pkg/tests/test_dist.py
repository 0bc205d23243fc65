import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from shiftscope.dist import (
    JointModel,
    OutcomeSpace,
    Pmf,
    SampleSet,
    align,
    enumerate_joint,
    pmf_from_samples,
    sample,
    total_variation,
)
from shiftscope.errors import EmptySampleError, InvalidJointError

from conftest import random_pmf


def test_space_canonical_order_and_uniqueness():
    s = OutcomeSpace.from_labels(["b", "a", "c"])
    assert s.labels == ("a", "b", "c")
    with pytest.raises(ValueError):
        OutcomeSpace(("a", "a"))


def test_pmf_validation():
    with pytest.raises(ValueError):
        Pmf(OutcomeSpace(("a", "b")), (0.6, 0.6))
    with pytest.raises(ValueError):
        Pmf(OutcomeSpace(("a", "b")), (-0.1, 1.1))
    with pytest.raises(ValueError):
        Pmf(OutcomeSpace(("a", "b")), (1.0,))


def test_pmf_from_samples_point_mass():
    p = pmf_from_samples(SampleSet.from_counts({"a": 2}))
    assert p.as_dict() == {"a": 1.0}


def test_pmf_from_samples_symmetry():
    p = pmf_from_samples(SampleSet.from_counts({"a": 1, "b": 1}))
    assert p.as_dict() == {"a": 0.5, "b": 0.5}


def test_pmf_from_samples_direct_division():
    # oracle: direct division 3/4, 1/4
    p = pmf_from_samples(SampleSet.from_counts({"a": 3, "b": 1}))
    assert p.as_dict() == {"a": 0.75, "b": 0.25}


def test_pmf_from_samples_empty():
    with pytest.raises(EmptySampleError):
        pmf_from_samples(SampleSet.from_counts({"a": 0}))


def test_sample_degenerate():
    s = sample(Pmf.point_mass("a"), 5, seed=1)
    assert s.as_dict() == {"a": 5}


def test_sample_concentration():
    p = Pmf.from_mapping({"a": 0.5, "b": 0.5})
    s = sample(p, 100_000, seed=123)
    for c in s.counts:
        assert abs(c / s.n - 0.5) < 0.02


def test_sample_determinism():
    p = Pmf.from_mapping({"a": 0.3, "b": 0.7})
    assert sample(p, 1000, seed=9) == sample(p, 1000, seed=9)
    assert sample(p, 1000, seed=9) != sample(p, 1000, seed=10)


def test_empirical_convergence_total_variation():
    # 10 seeds at n = 1e6 over |Omega| = 20: TV within 0.01
    rng = np.random.default_rng(2024)
    p = random_pmf(rng, 20)
    for seed in range(10):
        est = pmf_from_samples(sample(p, 1_000_000, seed=seed))
        assert total_variation(p, est) <= 0.01


def _point_joint():
    ctx = OutcomeSpace(("c0",))
    return JointModel(
        context_space=ctx,
        context_weights=(1.0,),
        human={"c0": Pmf.point_mass("d0")},
        gen1={"c0": Pmf.point_mass("d1")},
        gen2={"c0": Pmf.point_mass("d2")},
        noise=Pmf.point_mass("u0"),
    )


def test_enumerate_joint_point_masses():
    tuples = enumerate_joint(_point_joint())
    assert tuples == [("c0", "d0", "d1", "d2", "u0", 1.0)]


def test_enumerate_joint_two_contexts():
    ctx = OutcomeSpace(("c0", "c1"))
    j = JointModel(
        context_space=ctx,
        context_weights=(0.5, 0.5),
        human={c: Pmf.point_mass("d") for c in ctx.labels},
        gen1={c: Pmf.point_mass("d") for c in ctx.labels},
        gen2={c: Pmf.point_mass("d") for c in ctx.labels},
        noise=Pmf.point_mass("u"),
    )
    tuples = enumerate_joint(j)
    assert len(tuples) == 2
    assert all(t[-1] == 0.5 for t in tuples)


def test_enumerate_joint_mixed_32_tuples():
    # |C|=2, |D|=2, |U|=2 with full support: 2*2*2*2*2 = 32 tuples summing to 1
    ctx = OutcomeSpace(("c0", "c1"))
    d = {"d0": 0.25, "d1": 0.75}
    j = JointModel(
        context_space=ctx,
        context_weights=(0.4, 0.6),
        human={c: Pmf.from_mapping(d) for c in ctx.labels},
        gen1={c: Pmf.from_mapping({"d0": 0.5, "d1": 0.5}) for c in ctx.labels},
        gen2={c: Pmf.from_mapping({"d0": 0.9, "d1": 0.1}) for c in ctx.labels},
        noise=Pmf.from_mapping({"u0": 0.5, "u1": 0.5}),
    )
    tuples = enumerate_joint(j)
    assert len(tuples) == 32
    assert abs(math.fsum(t[-1] for t in tuples) - 1.0) <= 1e-12


def test_enumerate_joint_random_instances_are_probability_vectors():
    rng = np.random.default_rng(7)
    for _ in range(25):
        n_c, n_d, n_u = rng.integers(1, 4), rng.integers(1, 5), rng.integers(1, 4)
        ctx = OutcomeSpace.from_labels([f"c{i}" for i in range(n_c)])
        dlabels = [f"d{i}" for i in range(n_d)]
        j = JointModel(
            context_space=ctx,
            context_weights=tuple(random_pmf(rng, n_c).mass),
            human={c: random_pmf(rng, n_d, dlabels) for c in ctx.labels},
            gen1={c: random_pmf(rng, n_d, dlabels) for c in ctx.labels},
            gen2={c: random_pmf(rng, n_d, dlabels) for c in ctx.labels},
            noise=random_pmf(rng, n_u, [f"u{i}" for i in range(n_u)]),
        )
        probs = [t[-1] for t in enumerate_joint(j)]
        assert all(p > 0 for p in probs)
        assert abs(math.fsum(probs) - 1.0) <= 1e-12


def test_invalid_joint_rejected():
    ctx = OutcomeSpace(("c0",))
    with pytest.raises(InvalidJointError):
        JointModel(
            context_space=ctx,
            context_weights=(0.7,),
            human={"c0": Pmf.point_mass("d")},
            gen1={"c0": Pmf.point_mass("d")},
            gen2={"c0": Pmf.point_mass("d")},
            noise=Pmf.point_mass("u"),
        )
    with pytest.raises(InvalidJointError):
        JointModel(
            context_space=ctx,
            context_weights=(1.0,),
            human={},
            gen1={"c0": Pmf.point_mass("d")},
            gen2={"c0": Pmf.point_mass("d")},
            noise=Pmf.point_mass("u"),
        )


@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_align_preserves_mass(seed):
    rng = np.random.default_rng(seed)
    n_p, n_q = int(rng.integers(1, 8)), int(rng.integers(1, 8))
    p = random_pmf(rng, n_p, [f"a{i}" for i in range(n_p)])
    q = random_pmf(rng, n_q, [f"b{i}" for i in range(n_q)])
    pa, qa = align(p, q)
    assert pa.space == qa.space
    assert abs(math.fsum(pa.mass) - 1.0) <= 1e-12
    for lab, m in p.as_dict().items():
        assert pa.mass_of(lab) == m
