"""End-to-end checks of the engine's quantitative contract.

Each test covers one contract item and prints a single PASS/FAIL line with
the measured quantity and its bound, so a verbose run reads as a checklist.
Chains use frozen seeds; every bound was fixed before the seeds were.
"""

import itertools
import json
import math
from pathlib import Path

import numpy as np
import pytest
from scipy import stats
from scipy.integrate import quad
from scipy.special import gammaln

from edgeclust.aggregation import aggregate
from edgeclust.cli import main as cli_main
from edgeclust.geometry import bounding_region
from edgeclust.gibbs import (
    SamplerConfig,
    init_state,
    lambda_conditional,
    location_conditional,
    membership_log_weights,
    run,
    sweep,
    tau_conditional,
)
from edgeclust.model import (
    FixedValue,
    GammaPrior,
    Hyperparams,
    Partition,
    eppf_logprob,
    expected_num_groups,
)
from edgeclust.posterior import (
    modal_partition,
    num_groups_posterior,
    num_groups_posterior_restricted,
    rand_index,
    restrict,
)
from edgeclust.synth import load_scenario, make_grid_network, simulate_events

from _helpers import UNIT_REGION, batch_means_se, make_dataset
from _oracles import GewekeTruth, set_partitions

REPO_ROOT = Path(__file__).resolve().parents[1]


def _report(label: str, passed: bool, detail: str) -> None:
    print(f"{label}: {'PASS' if passed else 'FAIL'} ({detail})", flush=True)
    assert passed, f"{label}: {detail}"


def test_expected_group_count_calibration():
    targets = {0.3669: 2.0, 4.8986: 7.0, 82.1121: 13.0}
    worst = max(
        abs(expected_num_groups(14, theta) - want) for theta, want in targets.items()
    )
    _report(
        "prior expected group count (n=14)",
        worst <= 0.1,
        f"max abs err {worst:.4f} <= 0.1 for theta in {sorted(targets)}",
    )


def test_partition_prior_normalizes():
    worst = 0.0
    for n in range(2, 9):
        partitions = [Partition.from_labels(lbl) for lbl in set_partitions(n)]
        for theta in (0.3669, 1.0, 4.8986):
            total = sum(math.exp(eppf_logprob(p, theta)) for p in partitions)
            worst = max(worst, abs(total - 1.0))
    _report(
        "partition prior normalization",
        worst <= 1e-10,
        f"max |sum - 1| {worst:.2e} <= 1e-10 for n=2..8, three theta values",
    )


def test_membership_chain_has_enumerated_stationary_distribution():
    # three items, a pinned pool of three (lambda, u) pairs, fixed theta and
    # tau: the 27-state label chain is small enough to study exactly
    y = (1, 4, 7)
    e = np.array([(0.25, 0.30), (0.65, 0.55), (0.50, 0.80)])
    pool_lam = np.array([1.0, 3.5, 7.0])
    pool_u = np.array([(0.2, 0.3), (0.7, 0.6), (0.45, 0.85)])
    theta, tau = 1.7, 2.2

    def log_a(i, v):
        d2 = float(np.sum((pool_u[v] - e[i]) ** 2))
        return -tau * d2 + (y[i] - 1) * math.log(pool_lam[v]) - pool_lam[v] - gammaln(y[i])

    states = list(itertools.product(range(3), repeat=3))
    index = {s: t for t, s in enumerate(states)}

    logq = np.empty(27)
    for t, s in enumerate(states):
        sizes = [s.count(v) for v in range(3) if s.count(v)]
        logq[t] = (
            len(sizes) * math.log(theta)
            + sum(gammaln(m) for m in sizes)
            + sum(log_a(i, s[i]) for i in range(3))
        )
    target = np.exp(logq - logq.max())
    target /= target.sum()

    def item_matrix(i):
        T = np.zeros((27, 27))
        for t, s in enumerate(states):
            others = [s[j] for j in range(3) if j != i]
            occupied = sorted(set(others))
            vacant = [v for v in range(3) if v not in occupied]
            sizes = np.array([others.count(v) for v in occupied], dtype=float)
            logs = {}
            for c in vacant:
                lw = membership_log_weights(
                    y[i], e[i], sizes, pool_lam[occupied], pool_u[occupied],
                    float(pool_lam[c]), pool_u[c], theta, tau,
                )
                for pos, v in enumerate(occupied):
                    logs[v] = lw[pos]
                logs[c] = lw[-1]
            lw_all = np.array([logs[v] for v in range(3)])
            p = np.exp(lw_all - lw_all.max())
            p /= p.sum()
            for v in range(3):
                s2 = list(s)
                s2[i] = v
                T[t, index[tuple(s2)]] += p[v]
        return T

    T = item_matrix(0) @ item_matrix(1) @ item_matrix(2)
    assert np.abs(target @ T - target).sum() <= 1e-12

    vals, vecs = np.linalg.eig(T.T)
    lead = vecs[:, np.argmax(vals.real)].real
    lead /= lead.sum()
    tv = 0.5 * float(np.abs(lead - target).sum())
    _report(
        "membership chain stationary distribution",
        tv <= 1e-8,
        f"total variation {tv:.2e} <= 1e-8 over 27 states",
    )


def test_sampler_joint_distribution_is_self_consistent():
    # two routes to the same augmented joint: exact enumeration/quadrature
    # versus a chain that alternates parameter sweeps with regenerating the
    # counts from the current state; agreement is judged per statistic at
    # three batch-means standard errors
    n = 10
    rng0 = np.random.default_rng(20240817)
    centroids = 0.12 + 0.76 * rng0.random((n, 2))
    hyper = Hyperparams(
        lambda_prior=GammaPrior(2.0, 1.0),
        theta_prior=GammaPrior(1.5, 0.75),
        tau_prior=GammaPrior(2.0, 0.5),
    )

    truth = GewekeTruth(centroids, UNIT_REGION, hyper.theta_prior, hyper.tau_prior)
    exact = truth.expected_values()
    targets = {
        "k": exact["k"],
        "mean lambda": hyper.lambda_prior.mean,
        "tau": exact["tau"],
        "mean y": 1.0 + hyper.lambda_prior.mean,
        "theta": exact["theta"],
    }

    total, burn = 130000, 5000
    kept = total - burn
    cents = [tuple(c) for c in centroids]
    state = init_state(
        make_dataset([1] * n, cents),
        SamplerConfig(iterations=10, burnin=0, seed=4257, hyper=hyper),
    )
    series = {name: np.empty(kept) for name in targets}
    labels = np.array(state.partition.d)
    for t in range(total):
        lam_edge = np.asarray(state.lambdas)[labels - 1]
        counts = 1 + state.rng.poisson(lam_edge)
        dataset = make_dataset(counts.tolist(), cents)
        state = sweep(state, dataset)
        labels = np.array(state.partition.d)
        if t >= burn:
            i = t - burn
            series["k"][i] = state.partition.k
            series["mean lambda"][i] = np.mean(state.lambdas)
            series["tau"][i] = state.tau
            series["mean y"][i] = counts.mean()
            series["theta"][i] = state.theta

    zs = {}
    for name, want in targets.items():
        se = batch_means_se(series[name])
        zs[name] = (series[name].mean() - want) / se
    shown = ", ".join(f"{name} z={z:+.2f}" for name, z in zs.items())
    _report(
        "sampler joint-distribution consistency",
        max(abs(z) for z in zs.values()) <= 3.0,
        f"{shown}; bound 3 MC standard errors over {kept} kept sweeps",
    )


def test_full_conditionals_match_quadrature():
    rng = np.random.default_rng(90125)
    worst = {"lambda": 0.0, "tau": 0.0, "u": 0.0}

    def quad_moments(logf, lo, hi, mode):
        shift = logf(mode)
        pts = [mode] if lo < mode < hi else None
        args = dict(points=pts, epsabs=0, epsrel=1e-11, limit=200)
        z0 = quad(lambda x: np.exp(logf(x) - shift), lo, hi, **args)[0]
        m1 = quad(lambda x: x * np.exp(logf(x) - shift), lo, hi, **args)[0] / z0
        m2 = quad(lambda x: x * x * np.exp(logf(x) - shift), lo, hi, **args)[0] / z0
        return m1, m2

    for _ in range(100):
        # one group's intensity: gamma prior times unit-shifted Poisson kernels
        size = int(rng.integers(1, 9))
        ys = rng.integers(1, 15, size=size)
        prior = GammaPrior(float(rng.uniform(0.5, 8.0)), float(rng.uniform(0.2, 4.0)))
        shape, rate = lambda_conditional(int(ys.sum()), size, prior)

        def log_lam(lam, ys=ys, prior=prior):
            pr = stats.gamma.logpdf(lam, prior.shape, scale=1.0 / prior.rate)
            return pr + sum(stats.poisson.logpmf(y - 1, lam) for y in ys)

        mode = max((shape - 1) / rate, 1e-6)
        hi = (shape + 40.0 * math.sqrt(shape) + 50.0) / rate
        m1, m2 = quad_moments(log_lam, 0.0, hi, mode)
        a1, a2 = shape / rate, shape * (shape + 1) / rate**2
        worst["lambda"] = max(worst["lambda"], abs(m1 / a1 - 1), abs(m2 / a2 - 1))

        # the penalty rate: gamma prior times exp(-tau * squared distances)
        d2 = rng.uniform(0.0, 0.5, size=int(rng.integers(3, 12)))
        tprior = GammaPrior(float(rng.uniform(0.6, 6.0)), float(rng.uniform(0.3, 3.0)))
        shape, rate = tau_conditional(float(d2.sum()), tprior)

        def log_tau(tau, d2=d2, tprior=tprior):
            pr = stats.gamma.logpdf(tau, tprior.shape, scale=1.0 / tprior.rate)
            return pr - tau * float(d2.sum())

        mode = max((shape - 1) / rate, 1e-6)
        hi = (shape + 40.0 * math.sqrt(shape) + 50.0) / rate
        m1, m2 = quad_moments(log_tau, 0.0, hi, mode)
        a1, a2 = shape / rate, shape * (shape + 1) / rate**2
        worst["tau"] = max(worst["tau"], abs(m1 / a1 - 1), abs(m2 / a2 - 1))

        # one group's location, per axis: product of penalties on [0, 1]
        size = int(rng.integers(1, 9))
        ex = rng.uniform(0.08, 0.92, size=size)
        tau = float(rng.uniform(0.2, 60.0))
        (mx, _), sd = location_conditional((float(ex.mean()), 0.5), size, tau)

        def log_u(x, ex=ex, tau=tau):
            return float(np.sum(-tau * (x - ex) ** 2))

        m1, m2 = quad_moments(log_u, 0.0, 1.0, float(ex.mean()))
        a, b = (0.0 - mx) / sd, (1.0 - mx) / sd
        a1 = stats.truncnorm.mean(a, b, loc=mx, scale=sd)
        a2 = stats.truncnorm.var(a, b, loc=mx, scale=sd) + a1**2
        worst["u"] = max(worst["u"], abs(m1 / a1 - 1), abs(m2 / a2 - 1))

    shown = ", ".join(f"{k} {v:.2e}" for k, v in worst.items())
    _report(
        "full conditionals vs quadrature",
        max(worst.values()) <= 1e-6,
        f"worst relative moment error {shown} <= 1e-6 on 100 random states",
    )


@pytest.fixture(scope="module")
def tier_fits():
    """Fits of one planted dataset at a weak and a strict penalty rate.

    The scenario plants three discs: the outer two share a low per-edge
    intensity, the middle one is high, so grouping by intensity and
    grouping by place genuinely disagree.
    """
    scenario = load_scenario(str(REPO_ROOT / "scenarios" / "three_cluster_tiers.json"))
    network = make_grid_network(scenario.rows, scenario.cols, scenario.spacing)
    pattern, planted = simulate_events(network, scenario.clusters, seed=1)
    dataset = aggregate(network, pattern, bounding_region(network, margin=0.05))

    spec_of = [planted[eid] for eid in dataset.edge_ids]
    assert set(spec_of) == {0, 1, 2}, "every planted disc must contribute edges"
    spatial = Partition.from_labels(spec_of)
    tiers = Partition.from_labels([scenario.clusters[s].intensity for s in spec_of])
    assert spatial != tiers

    traces = {}
    for tau in (100.0, 1e7):
        hyper = Hyperparams(
            lambda_prior=GammaPrior(1.1, 0.1),
            theta_prior=FixedValue(4.8986),
            tau_prior=FixedValue(tau),
        )
        config = SamplerConfig(iterations=4000, burnin=2000, seed=11, hyper=hyper)
        traces[tau] = run(dataset, config)
    return {"dataset": dataset, "spatial": spatial, "tiers": tiers, "traces": traces}


def test_penalty_strength_sets_spatial_resolution(tier_fits):
    r = {}
    for tau, trace in tier_fits["traces"].items():
        est = modal_partition(trace).partition
        r[tau] = (
            rand_index(est, tier_fits["tiers"]),
            rand_index(est, tier_fits["spatial"]),
        )
    weak_prefers_tiers = r[100.0][0] > r[100.0][1]
    strict_prefers_place = r[1e7][1] > r[1e7][0]
    _report(
        "penalty strength sets spatial resolution",
        weak_prefers_tiers and strict_prefers_place,
        f"tau=100 rand(tiers)={r[100.0][0]:.3f} > rand(place)={r[100.0][1]:.3f}; "
        f"tau=1e7 rand(place)={r[1e7][1]:.3f} > rand(tiers)={r[1e7][0]:.3f}",
    )


def test_hotspot_selection_contract(tier_fits):
    grid = [0.0, 0.5, 1.0, 2.0, 3.0, 5.0, 8.0, 13.0, 40.0]
    traces = list(tier_fits["traces"].values())
    hyper = Hyperparams(
        lambda_prior=GammaPrior(1.1, 0.1),
        theta_prior=GammaPrior(1.1, 0.1),
        tau_prior=GammaPrior(1e11, 1e4),
    )
    config = SamplerConfig(iterations=1500, burnin=500, seed=7, hyper=hyper)
    traces.append(run(tier_fits["dataset"], config))

    ok = True
    for trace in traces:
        est = modal_partition(trace)
        selections = [set(restrict(est, star).selected_groups) for star in grid]
        ok &= all(b <= a for a, b in zip(selections, selections[1:]))
        ok &= restrict(est, 0.0).selected_groups == tuple(range(1, est.partition.k + 1))
        ok &= num_groups_posterior_restricted(trace, 0.0).masses == num_groups_posterior(trace)
    _report(
        "hot-spot selection contract",
        ok,
        f"selections antitone over a {len(grid)}-point threshold grid and the "
        f"threshold-0 group-count law equals the unrestricted one exactly, "
        f"on {len(traces)} fitted traces",
    )


def test_documented_prior_grid_runs_through_cli(tmp_path):
    rc = cli_main([
        "simulate",
        "--scenario", str(REPO_ROOT / "scenarios" / "small_grid.json"),
        "--out", str(tmp_path),
        "--seed", "3",
    ])
    assert rc == 0

    # the eight documented gamma(a, b) intensity-prior choices
    cells = [
        (4, 0.1), (5, 0.05), (10, 0.01), (10, 0.05),
        (10, 0.10), (15, 0.03), (15, 0.05), (15, 0.10),
    ]
    for i, (a, b) in enumerate(cells):
        out = tmp_path / f"fit_{i}"
        rc = cli_main([
            "fit",
            "--edges", str(tmp_path / "edges.csv"),
            "--events", str(tmp_path / "events.csv"),
            "--out", str(out),
            "--iters", "60", "--burnin", "20",
            "--seed", str(100 + i),
            "--lambda-prior", f"{a},{b}",
        ])
        assert rc == 0
        doc = json.loads((out / "manifest.json").read_text())
        assert doc["lambda_prior"] == {"type": "gamma", "shape": float(a), "rate": float(b)}
        assert doc["theta_prior"] == {"type": "gamma", "shape": 1.1, "rate": 0.1}
        assert doc["tau_prior"] == {"type": "gamma", "shape": 1e11, "rate": 1e4}

    _report(
        "documented prior grid via CLI flags",
        True,
        "8 gamma intensity priors fit end to end with default theta and tau priors",
    )
    print(
        "figure-for-figure reproduction of the analyses this engine follows is "
        "not attempted here: their datasets and seeds were never published. "
        "Engine correctness is covered instead by the stationarity, "
        "joint-consistency, conditional-moment, resolution-ordering, and "
        "selection-contract checks above.",
        flush=True,
    )
