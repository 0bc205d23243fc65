"""Acceptance gate: every criterion at its stated tolerance, timed.

Run with `pytest tests/test_acceptance.py -v -s` to see one line per
criterion. Each test prints [PASS]/[FAIL] before asserting so the verdict
is visible either way.
"""

import json
import math
import time

import numpy as np
from click.testing import CliRunner

from shiftscope.bound import BoundInstance, TabularTest, evaluate_bound
from shiftscope.cli import main as cli_main
from shiftscope.coarsening import EmbeddingTable, fit_kmeans, label_energy_equivalence
from shiftscope.dist import JointModel, OutcomeSpace, SampleSet, sample
from shiftscope.energy import energy_estimate, energy_exact
from shiftscope.errors import BoundViolatedError
from shiftscope.gamesim import Scenario, compare_cl_leather, shift_sweep
from shiftscope.oracle import RealEmbeddedPmf, l2_identity_check, parseval_quadrature

from conftest import random_pmf


def report(name: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


def test_c1_energy_l2_identity():
    # 1e4 random pmf pairs, |Omega| <= 50, gap <= 1e-12, under 5 s
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(10_000):
        n = int(rng.integers(2, 51))
        labels = [f"x{i:02d}" for i in range(n)]
        p, q = random_pmf(rng, n, labels), random_pmf(rng, n, labels)
        worst = max(worst, l2_identity_check(p, q)[2])
    elapsed = time.perf_counter() - t0
    report(
        "C1 energy-L2 identity",
        worst <= 1e-12 and elapsed < 5.0,
        f"worst gap {worst:.2e} over 10^4 pairs in {elapsed:.2f}s",
    )


def test_c2_bijectivity_equivalence():
    # representative-label energy == cluster-index energy, exactly, 1e3 pairs, under 5 s
    rng = np.random.default_rng(202)
    t0 = time.perf_counter()
    ids = tuple(f"d{i}" for i in range(40))
    coarsenings = []
    for fit_seed in range(50):
        table = EmbeddingTable(ids=ids, vectors=rng.normal(size=(40, 3)))
        coarsenings.append(fit_kmeans(table, int(rng.integers(2, 9)), seed=fit_seed))
    unequal = 0
    for _ in range(1000):
        c = coarsenings[int(rng.integers(len(coarsenings)))]
        a = SampleSet.from_counts({ids[i]: int(k) for i, k in enumerate(rng.integers(0, 6, 40)) if k})
        b = SampleSet.from_counts({ids[i]: int(k) for i, k in enumerate(rng.integers(0, 6, 40)) if k})
        by_rep, by_idx = label_energy_equivalence(a, b, c)
        if by_rep.value != by_idx.value:
            unequal += 1
    elapsed = time.perf_counter() - t0
    report(
        "C2 bijective relabeling equivalence",
        unequal == 0 and elapsed < 5.0,
        f"{unequal} mismatches over 10^3 coarsened pairs in {elapsed:.2f}s",
    )


def test_c3_characteristic_function_quadrature():
    # 100 integer-support pairs, tau=1e4, |quadrature - sum of squared gaps| <= 1e-2, under 60 s
    rng = np.random.default_rng(303)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 6))
        support = tuple(float(v) for v in rng.choice(10, size=n, replace=False))
        raw1, raw2 = rng.random(n) + 1e-3, rng.random(n) + 1e-3
        p = RealEmbeddedPmf(support, tuple(raw1 / raw1.sum()))
        q = RealEmbeddedPmf(support, tuple(raw2 / raw2.sum()))
        exact = math.fsum((a - b) ** 2 for a, b in zip(p.probs, q.probs))
        approx = parseval_quadrature(p, q, tau=1e4, steps=1_000_000)
        worst = max(worst, abs(approx - exact))
    elapsed = time.perf_counter() - t0
    report(
        "C3 characteristic-function quadrature",
        worst <= 1e-2 and elapsed < 60.0,
        f"worst error {worst:.2e} over 100 pairs in {elapsed:.1f}s",
    )


def _fuzz_joint(rng):
    n_c = int(rng.integers(1, 4))
    n_d = int(rng.integers(2, 9))
    n_u = int(rng.integers(1, 4))
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
    size = int(rng.integers(1, min(4, n_d) + 1))
    image = [dlabels[i] for i in rng.choice(n_d, size=size, replace=False)]
    cmap = {d: image[int(rng.integers(size))] for d in dlabels}
    h = TabularTest(
        "t", {(d, u): float(rng.random()) for d in dlabels for u in j.noise.space.labels}
    )
    return j, h, cmap


def test_c4_adaptation_bound_validity():
    # 1e4 fuzzed enumerable instances, zero violations beyond 1e-9, under 120 s
    rng = np.random.default_rng(404)
    t0 = time.perf_counter()
    violations = 0
    worst_margin = -np.inf
    for _ in range(10_000):
        j, h, cmap = _fuzz_joint(rng)
        try:
            rep = evaluate_bound(j, h, cmap)
            worst_margin = max(worst_margin, rep.td_target - rep.rhs)
        except BoundViolatedError:
            violations += 1
    elapsed = time.perf_counter() - t0
    report(
        "C4 adaptation bound validity",
        violations == 0 and elapsed < 120.0,
        f"{violations} violations over 10^4 instances (worst margin {worst_margin:.2e}) in {elapsed:.1f}s",
    )


def test_c5_g_optimality_against_grid():
    # phi(solve_g) <= phi(best 0.01-grid g) + 1e-9 on 500 instances, under 60 s
    rng = np.random.default_rng(505)
    t0 = time.perf_counter()
    grid = np.round(np.arange(0, 101) / 100, 2)
    failures = 0
    for _ in range(500):
        j, h, cmap = _fuzz_joint(rng)
        inst = BoundInstance(j, h, cmap)
        g_med, _ = inst.solve_g()
        phi_med = inst.phi(g_med)
        g_best = g_med.copy()
        for x in range(g_med.shape[0]):
            for u in range(g_med.shape[1]):
                best_v, best_phi = None, None
                for v in grid:
                    trial = g_best.copy()
                    trial[x, u] = v
                    val = inst.phi(trial)
                    if best_phi is None or val < best_phi:
                        best_v, best_phi = v, val
                g_best[x, u] = best_v
        phi_grid = inst.phi(g_best)
        if phi_med > phi_grid + 1e-9:
            failures += 1
    elapsed = time.perf_counter() - t0
    report(
        "C5 g-optimality vs dense grid",
        failures == 0 and elapsed < 60.0,
        f"{failures} failures over 500 instances in {elapsed:.1f}s",
    )


def test_c6_estimator_consistency():
    # plug-in energy within 0.01 of exact at n = 1e5, |Omega| <= 20, 10 seeds
    rng = np.random.default_rng(606)
    t0 = time.perf_counter()
    worst = 0.0
    for seed in range(10):
        n = int(rng.integers(2, 21))
        labels = [f"x{i:02d}" for i in range(n)]
        p, q = random_pmf(rng, n, labels), random_pmf(rng, n, labels)
        exact = energy_exact(p, q).value
        est = energy_estimate(
            sample(p, 100_000, seed=2 * seed), sample(q, 100_000, seed=2 * seed + 1)
        ).value
        worst = max(worst, abs(est - exact))
    elapsed = time.perf_counter() - t0
    report(
        "C6 estimator consistency",
        worst <= 0.01,
        f"worst |plug-in - exact| {worst:.4f} at n=10^5 over 10 seeds in {elapsed:.1f}s",
    )


def test_c7_energy_predicts_td_change():
    # shipped default scenario, 20 cells, Pearson r >= 0.6, under 10 min
    t0 = time.perf_counter()
    out = shift_sweep(Scenario.default(), [0.0, 0.1, 0.2, 0.35, 0.5], [1, 2, 3, 4])
    elapsed = time.perf_counter() - t0
    n_cells = len(out.rows)
    report(
        "C7 energy predictiveness (sweep)",
        n_cells >= 20 and out.pearson_r >= 0.6 and elapsed < 600.0,
        f"pearson r = {out.pearson_r:.3f} over {n_cells} cells in {elapsed:.1f}s",
    )


def test_c8_regularized_arm_shifts_less():
    # 10 seeds: lower mean energy in >= 80%, total |dTD| not worse in majority, under 10 min
    t0 = time.perf_counter()
    out = compare_cl_leather(Scenario.default(), None, list(range(1, 11)))
    elapsed = time.perf_counter() - t0
    report(
        "C8 regularized-vs-plain direction",
        out.frac_seeds_lower_eps >= 0.8
        and out.frac_seeds_dtd_not_worse > 0.5
        and elapsed < 600.0,
        f"lower-energy in {out.frac_seeds_lower_eps:.0%} of seeds, "
        f"|dTD| not worse in {out.frac_seeds_dtd_not_worse:.0%}, in {elapsed:.1f}s",
    )


def _run_cli(args):
    runner = CliRunner()
    result = runner.invoke(cli_main, args)
    assert result.exit_code == 0, result.output
    return result


def _payload_bytes(path) -> str:
    doc = json.loads(open(path).read())
    return json.dumps(doc["payload"], sort_keys=True)


def test_c9_report_determinism(tmp_path):
    # identical seeds give byte-identical payloads across reruns
    a = tmp_path / "a.csv"
    a.write_text("label,count\nx,3\ny,1\nz,2\n")
    b = tmp_path / "b.csv"
    b.write_text("label,count\nx,1\ny,5\n")
    scenario = tmp_path / "scenario.json"
    scenario.write_text(json.dumps({"corpus_size": 80, "n_rollouts": 50, "k_coarse": 5}))
    pairs = []
    for run in ("first", "second"):
        d = tmp_path / run
        d.mkdir()
        _run_cli(["energy", str(a), str(b), "--out", str(d / "energy.json")])
        _run_cli(
            ["verify", "--seed", "11", "--trials", "60", "--l2-pairs", "60",
             "--quadrature-pairs", "1", "--quadrature-steps", "2000",
             "--out", str(d / "verify.json")]
        )
        _run_cli(
            ["simulate", "sweep", "--config", str(scenario),
             "--magnitudes", "0,0.1,0.2,0.3,0.4", "--seeds", "1,2,3",
             "--out", str(d / "sweep.json")]
        )
        pairs.append(
            tuple(_payload_bytes(d / name) for name in ("energy.json", "verify.json", "sweep.json"))
        )
    ok = pairs[0] == pairs[1]
    report("C9 report determinism", ok, "payloads byte-identical across reruns (timestamps excluded)")
