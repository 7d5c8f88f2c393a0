"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Every tolerance and protocol constant is pinned here; nothing is deferred
to later calibration.  Monte-Carlo criteria run under fixed seeds, so a
green run is reproducible.
"""

import resource
import time

import numpy as np

from polytree_lingam import (
    ErrorSpec,
    ExperimentConfig,
    PolytreeModel,
    PopulationCumulantProvider,
    Dataset,
    build_a_matrix,
    chow_liu,
    cumulant_from_moments,
    generate_case,
    k_statistic,
    learn_polytree,
    minor_vector,
    population_pair_cumulants,
    run_experiment,
    run_orientation,
    sample_correlation_matrix,
    structural_hamming,
)
from polytree_lingam.pipeline import ALGORITHMS

from oracles import moment_from_trek_cumulants, random_generic_model, trek_cumulant


def report(num, name, ok, detail=""):
    line = f"[acceptance {num}] {name}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f"  ({detail})"
    print(line)
    assert ok, line


class TestAcceptance:
    def test_criterion_1_population_exactness(self):
        # 200 random polytrees, p in 3..10, |lambda| in (0.3, 1); half run at
        # K=3 with nonzero third cumulants, half at K=4 with zero third and
        # nonzero fourth cumulants; all three algorithms must be exact, with
        # the rank-one zero test at relative tolerance 1e-9
        t0 = time.perf_counter()
        failures = []
        for trial in range(200):
            p = 3 + trial % 8
            if trial < 100:
                K, model = 3, random_generic_model(p, seed=11000 + trial, k_max=3)
            else:
                K, model = 4, random_generic_model(p, seed=11000 + trial, k_max=4, zero_k3=True)
            provider = PopulationCumulantProvider(model)
            skeleton = model.skeleton()
            for algorithm in ALGORITHMS:
                graph = run_orientation(algorithm, skeleton, provider, K, mode="population")
                if set(graph.directed_edges()) != set(model.edges):
                    failures.append((trial, algorithm))
        elapsed = time.perf_counter() - t0
        report(
            1,
            "population exactness",
            not failures and elapsed < 10.0,
            f"600 runs over 200 models, failures={len(failures)}, {elapsed:.1f}s (< 10s)",
        )

    def test_criterion_2_golden_two_node(self):
        model = PolytreeModel(
            2,
            ((0, 1),),
            {(0, 1): 0.5},
            {(0, 2): 1.0, (1, 2): 1.0, (0, 3): 2.0, (1, 3): 0.0},
            k_max=3,
        )
        table = population_pair_cumulants(model, 0, 1, 3)
        forward = minor_vector(build_a_matrix(table, 0, 1)).values
        reverse = minor_vector(build_a_matrix(table, 1, 0)).values
        ok = forward.tolist() == [0.0, 0.0] and reverse.tolist() == [1.0, 0.5]
        report(2, "golden two-node minors", ok, f"forward={forward.tolist()}, reverse={reverse.tolist()}")

    def test_criterion_3_kstatistic_unbiasedness(self):
        # 1e5 replicates of n=10, both distributions, each estimate within
        # four Monte-Carlo standard errors of the true cumulant
        t0 = time.perf_counter()
        R, n = 100_000, 10
        cases = [
            ("gamma(2,3)", lambda rng: rng.gamma(2.0, 3.0, size=(n, R)), (18.0, 108.0, 972.0)),
            ("uniform(-1,1)", lambda rng: rng.uniform(-1.0, 1.0, size=(n, R)), (1 / 3, 0.0, -2 / 15)),
        ]
        details = []
        ok = True
        for label, draw, truths in cases:
            data = Dataset(draw(np.random.default_rng(2024)))
            estimates = {2: np.empty(R), 3: np.empty(R), 4: np.empty(R)}
            for c in range(R):
                for k in (2, 3, 4):
                    estimates[k][c] = k_statistic(data, c, c, k, k)
            for k, truth in zip((2, 3, 4), truths):
                values = estimates[k]
                se = values.std(ddof=1) / np.sqrt(R)
                dev = abs(values.mean() - truth) / se
                details.append(f"{label} k{k}: {dev:.2f} se")
                ok = ok and dev <= 4.0
        elapsed = time.perf_counter() - t0
        ok = ok and elapsed < 60.0
        report(3, "k-statistic unbiasedness", ok, "; ".join(details) + f"; {elapsed:.0f}s (< 60s)")

    def test_criterion_4_skeleton_consistency(self):
        # p=50, n=5000, gamma errors: the spanning tree matches the true
        # skeleton in at least 95 of 100 replicates
        hits = 0
        for rep in range(100):
            model, _, data = generate_case(50, ErrorSpec("gamma"), 5000, seed=40000 + rep)
            tree = chow_liu(sample_correlation_matrix(data))
            hits += tree.edges == model.skeleton().edges
        report(4, "skeleton consistency", hits >= 95, f"{hits}/100 exact skeletons (>= 95)")

    def test_criterion_5_low_dim_trend(self):
        # p=100, 20 replicates: mean normalized SHD strictly decreases over
        # n/p in {1, 10, 100} and ends at or below 0.1; the symmetric-error
        # run (K=4) must do at least as well as the skewed one at n/p=100
        t0 = time.perf_counter()

        def sweep(family, K, seed):
            config = ExperimentConfig(
                p_values=(100,), ratios=(1.0, 10.0, 100.0), error=ErrorSpec(family),
                K=K, algorithms=("pairwise",), replicates=20, seed=seed,
            )
            rows = run_experiment(config, workers=4)
            return [
                float(np.mean([r.shd for r in rows if r.n == int(ratio * 100)]))
                for ratio in (1.0, 10.0, 100.0)
            ]

        gamma = sweep("gamma", 3, 101)
        uniform = sweep("uniform", 4, 102)
        elapsed = time.perf_counter() - t0
        ok = (
            gamma[0] > gamma[1] > gamma[2]
            and gamma[2] <= 0.1
            and uniform[0] > uniform[1] > uniform[2]
            and uniform[2] <= 0.1
            and uniform[2] <= gamma[2]
            and elapsed < 300.0
        )
        report(
            5,
            "low-dimensional trend",
            ok,
            f"gamma={np.round(gamma, 4).tolist()}, uniform={np.round(uniform, 4).tolist()}, {elapsed:.0f}s (< 5min)",
        )

    def test_criterion_6_algorithm_comparison(self):
        # at n/p=10 the edge-independent algorithm should match or beat the
        # sequential ones, each given its best grid threshold per cell
        config = ExperimentConfig(
            p_values=(100,), ratios=(10.0,), error=ErrorSpec("gamma"), K=3,
            algorithms=("pairwise", "pto", "tpo"), replicates=20, seed=103,
        )
        rows = run_experiment(config, workers=4)
        means = {
            algorithm: float(np.mean([r.shd for r in rows if r.algorithm == algorithm]))
            for algorithm in ("pairwise", "pto", "tpo")
        }
        ok = means["pairwise"] <= means["pto"] and means["pairwise"] <= means["tpo"]
        report(
            6,
            "algorithm comparison",
            ok,
            ", ".join(f"{a}={v:.5f}" for a, v in means.items()),
        )

    def test_criterion_7_partial_gaussian(self):
        # p=200, n=200, 25 replicates, standardized statistics (the scale
        # knob; raw statistics keep a variance-growth signal at full
        # Gaussianity): accuracy on shared skeleton edges sits in
        # [0.55, 0.85] at half-Gaussian, decreases monotonically, and lands
        # near the coin-flip level 0.5 when every error is Gaussian
        config = ExperimentConfig(
            p_values=(200,), ratios=(1.0,), error=ErrorSpec("gamma"), K=3,
            algorithms=("pairwise",), replicates=25, seed=104,
            gaussian_fractions=(0.0, 0.25, 0.5, 0.75, 1.0), standardize=True,
        )
        rows = run_experiment(config, workers=4)
        accuracy = {}
        for gf in (0.0, 0.25, 0.5, 0.75, 1.0):
            values = []
            for row in rows:
                if row.gauss_fraction == gf:
                    shared = (row.p - 1) - row.skeleton_errors // 2
                    values.append(1.0 - row.orientation_errors / shared)
            accuracy[gf] = float(np.mean(values))
        ordered = [accuracy[gf] for gf in (0.0, 0.25, 0.5, 0.75, 1.0)]
        ok = (
            0.55 <= accuracy[0.5] <= 0.85
            and all(ordered[i] > ordered[i + 1] for i in range(4))
            and 0.45 <= accuracy[1.0] <= 0.55
        )
        report(
            7,
            "partial-Gaussian sanity",
            ok,
            "accuracy " + ", ".join(f"{gf}: {accuracy[gf]:.3f}" for gf in accuracy),
        )

    def test_criterion_8_scale_smoke(self):
        # p=5000, n=500 end to end under ten minutes and eight gigabytes,
        # with the correlation+Kruskal phases dominating orientation
        t0 = time.perf_counter()
        model, _, data = generate_case(5000, ErrorSpec("gamma"), 500, seed=88)
        result = learn_polytree(data, "pairwise", K=3)
        shd = structural_hamming(model, result.graph).normalized
        elapsed = time.perf_counter() - t0
        peak_gb = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024**2
        timings = result.timings
        dominant = timings["correlation"] + timings["kruskal"] > timings["orientation"]
        ok = elapsed < 600.0 and peak_gb < 8.0 and dominant
        report(
            8,
            "scale smoke test",
            ok,
            f"{elapsed:.1f}s (< 600s), peak {peak_gb:.2f} GB (< 8), "
            f"corr {timings['correlation']:.2f}s + kruskal {timings['kruskal']:.2f}s "
            f"vs orientation {timings['orientation']:.2f}s, shd={shd:.4f}",
        )

    def test_criterion_9_cumulant_oracle_equivalence(self):
        # closed-form pair cumulants vs brute-force trek enumeration vs the
        # partition formula fed exact moments: all three within 1e-10
        worst = 0.0
        for trial in range(100):
            p = 2 + trial % 5
            model = random_generic_model(p, seed=12000 + trial)
            for i in range(p):
                for j in range(i + 1, p):
                    table = population_pair_cumulants(model, i, j, 4)
                    for k in range(2, 5):
                        for m in range(k + 1):
                            indices = (i,) * m + (j,) * (k - m)
                            closed = table.entry(m, k)
                            brute = trek_cumulant(model, indices)
                            partition = cumulant_from_moments(
                                lambda idx: moment_from_trek_cumulants(model, idx), indices
                            )
                            worst = max(worst, abs(closed - brute), abs(closed - partition))
        report(9, "cumulant oracle equivalence", worst <= 1e-10, f"max |difference| = {worst:.2e}")
