"""End-to-end acceptance gates for the estimator, simulator, and harness.

Each test exercises one acceptance criterion at its stated scale and
prints a single [PASS]/[FAIL] line with the measured quantities, visible
even under pytest's output capture.
"""

import time

import numpy as np
import pytest
from scipy.stats import spearmanr

from plexloc.experiments import ExperimentConfig, ExperimentPoint, run_experiment
from plexloc.experiments import run_point
from plexloc.graphs import GraphModel, ReplicaId
from plexloc.locator import rank_sources
from plexloc.metrics import css, outcome_from_ranking, precision_single
from plexloc.observers import ObserverSet, build_delay_vector
from plexloc.spreading import DelayMoments, SpreadParams, delay_moments, simulate

from conftest import make_multiplex
from oracle import flat_edges, oracle_scores
from test_locator import dv_for
from test_metrics import ranking_from_scores


def announce(capsys, ok, name, detail, elapsed, budget):
    status = "PASS" if ok and elapsed < budget else "FAIL"
    with capsys.disabled():
        print(f"[{status}] {name}: {detail} [{elapsed:.1f}s / budget {budget}s]")
    assert ok, f"{name}: {detail}"
    assert elapsed < budget, f"{name} exceeded {budget}s ({elapsed:.1f}s)"


def bootstrap_mean_ci(values, seed=0, n_boot=10_000, level=0.95):
    rng = np.random.default_rng(seed)
    vals = np.asarray(values, dtype=float)
    idx = rng.integers(0, vals.size, size=(n_boot, vals.size))
    means = vals[idx].mean(axis=1)
    tail = (1.0 - level) / 2
    return float(np.quantile(means, tail)), float(np.quantile(means, 1 - tail))


def test_oracle_equivalence(capsys, compiled_kernels):
    """>= 50 randomized multiplex graphs, n_tot <= 24, every candidate score
    matches the independent brute-force implementation within 1e-9 relative."""
    t0 = time.perf_counter()
    worst = 0.0
    checked = 0
    for seed in range(50):
        rng = np.random.default_rng(1000 + seed)
        L = int(rng.integers(1, 4))
        n_l = int(rng.integers(2, 24 // L + 1))
        layers_edges = [
            [(u, v) for u in range(n_l) for v in range(u + 1, n_l)
             if rng.random() < 0.45]
            for _ in range(L)
        ]
        g = make_multiplex(layers_edges, n_l)
        assert g.total_replicas <= 24
        beta = rng.uniform(0.1, 0.9, L + 1)
        mom = DelayMoments(mean=1.0 / beta, var=(1.0 - beta) / beta**2)
        n = g.total_replicas
        b = int(rng.integers(2, min(7, n) + 1))
        flats = np.sort(rng.choice(n, size=b, replace=False))
        delays = rng.integers(0, 8, size=b - 1).astype(float)
        dv = dv_for(g, list(flats), list(delays))
        ranking = rank_sources(g, mom, dv)
        ours = np.full(n, -np.inf)
        for e in ranking.entries:
            ours[g.flat_index(e.candidate)] = e.score
        ref = oracle_scores(n, flat_edges(layers_edges, n_l), mom.mean,
                            mom.var, list(flats), delays)
        for v in range(n):
            checked += 1
            if np.isfinite(ref[v]) != np.isfinite(ours[v]):
                announce(capsys, False, "oracle equivalence",
                         f"finiteness mismatch at graph {seed} candidate {v}",
                         time.perf_counter() - t0, 60)
            if np.isfinite(ref[v]):
                rel = abs(ours[v] - ref[v]) / max(abs(ref[v]), 1e-30)
                worst = max(worst, rel if abs(ref[v]) > 1e-12 else
                            abs(ours[v] - ref[v]))
    elapsed = time.perf_counter() - t0
    announce(capsys, worst <= 1e-9, "oracle equivalence",
             f"50 graphs, {checked} candidate scores, worst deviation {worst:.2e}",
             elapsed, 60)


def test_deterministic_spread_identification(capsys, compiled_kernels):
    """Near-deterministic spread (beta=0.99) on small path and star graphs
    with observers at all leaves: source ranked 1 in >= 90% of runs."""
    t0 = time.perf_counter()
    path9 = make_multiplex([[(i, i + 1) for i in range(8)]], 9)
    star9 = make_multiplex([[(0, i) for i in range(1, 9)]], 9)
    cases = {
        "path": (path9, [0, 8]),
        "star": (star9, list(range(1, 9))),
    }
    params = SpreadParams(intra=(0.99,), inter=0.99)
    mom = delay_moments(params, 1)
    rates = {}
    for name, (g, leaf_nodes) in cases.items():
        obs = ObserverSet(replicas=tuple(ReplicaId(u, 0) for u in leaf_nodes))
        rng = np.random.default_rng(42)
        hits = 0
        for _ in range(200):
            source = ReplicaId(int(rng.integers(9)), 0)
            rec = simulate(g, params, source, rng)
            dv = build_delay_vector(obs, rec, g)
            ranking = rank_sources(g, mom, dv)
            if ranking.rank_of(source) == 1:
                hits += 1
        rates[name] = hits / 200
    elapsed = time.perf_counter() - t0
    ok = all(r >= 0.9 for r in rates.values())
    announce(capsys, ok, "deterministic-spread identification",
             f"rank-1 rate path {rates['path']:.3f}, star {rates['star']:.3f}"
             " (threshold 0.90)", elapsed, 60)


def test_geometric_delay_moments(capsys):
    """Single-link transmission times are geometric: mean within 3 standard
    errors of 1/beta, variance within 10% of (1-beta)/beta^2."""
    t0 = time.perf_counter()
    g = make_multiplex([[(0, 1)]], 2)
    details = []
    ok = True
    for beta in (0.1, 0.5, 0.9):
        params = SpreadParams(intra=(beta,), inter=1.0)
        rng = np.random.default_rng(int(beta * 1000))
        samples = np.array([
            simulate(g, params, ReplicaId(0, 0), rng).times[1]
            for _ in range(10_000)
        ], dtype=float)
        true_mean = 1.0 / beta
        true_var = (1.0 - beta) / beta**2
        se = np.sqrt(true_var / samples.size)
        mean_err = abs(samples.mean() - true_mean)
        var_rel = abs(samples.var(ddof=1) - true_var) / true_var
        ok &= mean_err <= 3 * se and var_rel <= 0.10
        details.append(f"beta={beta}: mean off {mean_err / se:.2f} SE,"
                       f" var off {100 * var_rel:.1f}%")
    elapsed = time.perf_counter() - t0
    announce(capsys, ok, "geometric delay moments", "; ".join(details),
             elapsed, 60)


def _er_duplex_point(rho1, rho2, beta_inter):
    return ExperimentPoint(
        coords=(("rho1", rho1), ("rho2", rho2), ("beta_inter", beta_inter)),
        model=GraphModel.ER, layer_count=2, nodes_per_layer=200,
        mean_degree=8.0, beta_intra=(0.5, 0.5), beta_inter=beta_inter,
        rho=(rho1, rho2), source_layer=0)


def test_weak_coupling_impediment(capsys, compiled_kernels):
    """With weak coupling (beta_inter=0.1), adding observers in the
    non-source layer hurts: precision at (rho1=0.2, rho2=0.02) exceeds
    precision at (0.2, 0.2) with non-overlapping 95% bootstrap intervals."""
    t0 = time.perf_counter()
    cfg = ExperimentConfig(template="density_grid", realizations=500,
                           master_seed=101)
    _, out_sparse = run_point(cfg, _er_duplex_point(0.2, 0.02, 0.1), 0)
    _, out_dense = run_point(cfg, _er_duplex_point(0.2, 0.2, 0.1), 1)
    p_sparse = [precision_single(o) for o in out_sparse]
    p_dense = [precision_single(o) for o in out_dense]
    lo_s, hi_s = bootstrap_mean_ci(p_sparse)
    lo_d, hi_d = bootstrap_mean_ci(p_dense)
    ok = np.mean(p_sparse) > np.mean(p_dense) and lo_s > hi_d
    elapsed = time.perf_counter() - t0
    announce(capsys, ok, "weak-coupling impediment",
             f"precision rho2=0.02: {np.mean(p_sparse):.3f} CI ({lo_s:.3f},{hi_s:.3f})"
             f" vs rho2=0.2: {np.mean(p_dense):.3f} CI ({lo_d:.3f},{hi_d:.3f})",
             elapsed, 600)


def test_strong_coupling_monotonicity(capsys, compiled_kernels):
    """With strong coupling (beta_inter=0.9), precision is increasing in the
    source-layer observer density: Spearman rho > 0 over a 5-point axis."""
    t0 = time.perf_counter()
    cfg = ExperimentConfig(template="density_grid", realizations=500,
                           master_seed=101)
    rho1_axis = np.linspace(0.02, 0.2, 5)
    precisions = []
    for i, r1 in enumerate(rho1_axis):
        _, outs = run_point(cfg, _er_duplex_point(float(r1), 0.1, 0.9), 20 + i)
        precisions.append(float(np.mean([precision_single(o) for o in outs])))
    rho, _ = spearmanr(rho1_axis, precisions)
    elapsed = time.perf_counter() - t0
    announce(capsys, rho > 0, "strong-coupling monotonicity",
             f"precisions {[f'{p:.3f}' for p in precisions]} Spearman {rho:.3f}",
             elapsed, 600)


def test_layer_count_jump(capsys, compiled_kernels):
    """Going from one to two layers (fixed n_l) jumps performance: higher
    precision with non-overlapping bootstrap intervals and lower 0.95-CSS."""
    t0 = time.perf_counter()
    cfg = ExperimentConfig(template="layers_fixed_nl", realizations=500,
                           master_seed=101)
    stats = {}
    for i, L in enumerate((1, 2)):
        point = ExperimentPoint(
            coords=(("layers", L),), model=GraphModel.ER, layer_count=L,
            nodes_per_layer=200, mean_degree=8.0, beta_intra=(0.5,) * L,
            beta_inter=0.8, rho=(0.1,) * L, source_layer=0)
        row, outs = run_point(cfg, point, 10 + i)
        precs = [precision_single(o) for o in outs]
        stats[L] = (row.summary.avg_precision, row.summary.css[0.95],
                    bootstrap_mean_ci(precs))
    (p1, c1, (lo1, hi1)) = stats[1]
    (p2, c2, (lo2, hi2)) = stats[2]
    ok = p2 > p1 and lo2 > hi1 and c2 < c1
    elapsed = time.perf_counter() - t0
    announce(capsys, ok, "layer-count jump",
             f"precision L1 {p1:.3f} CI ({lo1:.3f},{hi1:.3f}) ->"
             f" L2 {p2:.3f} CI ({lo2:.3f},{hi2:.3f}); css95 L1 {c1} -> L2 {c2}",
             elapsed, 600)


def test_metric_properties(capsys):
    """Randomized score vectors: precision in [0,1], css monotone in alpha
    with css(1.0) = max rank, pessimistic competition ranks."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    ok = True
    for _ in range(300):
        n = int(rng.integers(1, 40))
        # draw from few distinct values so ties are common
        scores = rng.choice(rng.normal(size=max(1, n // 3)), size=n)
        ranking = ranking_from_scores(list(scores))
        ranks = []
        for i in range(n):
            cand = ReplicaId(i, 0)
            r = ranking.rank_of(cand)
            strictly_higher = int(np.sum(
                scores > scores[i] + 1e-9 * np.abs(scores[i]) + 1e-12))
            tie = len([s for s in scores
                       if abs(s - scores[i]) <= 1e-9 * abs(scores[i]) + 1e-12])
            ok &= r == strictly_higher + tie
            ranks.append(r)
        top = ranking.top_group()
        ok &= all(ranking.rank_of(c) == len(top) for c in top)
        o = outcome_from_ranking(ranking, ReplicaId(int(rng.integers(n)), 0))
        ok &= 0.0 <= precision_single(o) <= 1.0
        alphas = sorted(rng.uniform(0.05, 1.0, 3)) + [1.0]
        vals = [css(ranks, a) for a in alphas]
        ok &= vals == sorted(vals)
        ok &= css(ranks, 1.0) == max(ranks)
    elapsed = time.perf_counter() - t0
    announce(capsys, ok, "metric properties",
             "300 randomized score vectors: bounds, monotone css, "
             "pessimistic ranks", elapsed, 60)


def test_reproducibility_across_thread_counts(capsys, tmp_path, compiled_kernels):
    """Same config and master seed with different thread counts produce
    byte-identical result CSVs."""
    t0 = time.perf_counter()
    cfg = ExperimentConfig.from_dict({
        "template": "rate_grid", "nodes_per_layer": 40, "realizations": 30,
        "master_seed": 99, "rho": 0.15,
        "beta1_values": [0.3, 0.7], "beta2_values": [0.5],
        "beta_inter_values": [0.5],
    })
    paths = [tmp_path / f"res_t{t}.csv" for t in (1, 2, 4)]
    for threads, path in zip((1, 2, 4), paths):
        run_experiment(cfg, out_path=path, threads=threads)
    contents = [p.read_text() for p in paths]
    ok = contents[0] == contents[1] == contents[2]
    elapsed = time.perf_counter() - t0
    announce(capsys, ok, "reproducibility",
             f"2-point grid x 30 realizations, threads 1/2/4: "
             f"{'identical' if ok else 'DIFFERENT'} CSVs", elapsed, 300)
