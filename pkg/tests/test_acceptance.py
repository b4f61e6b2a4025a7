"""Acceptance suite: one test per criterion, each printing a verdict line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the verdict
lines as they complete. The two sweep criteria regenerate the shipped
experiment configs at 10 seeds and take a few minutes each.
"""

import json
import math
import time
from pathlib import Path

import numpy as np

from collabscore import (ComparisonDataset, ExperimentConfig, Mehestan,
                         OvertrustParams, TrustState, UserModel,
                         WeightedInput, br_mean, estimate_uncertainties,
                         fit_raw_scores, gbt_loss, lipschitrust,
                         max_tolerated_overtrust, overtrust, qr_dev, qr_med,
                         qr_qtl, run_experiment, solve_min_voting_right,
                         squash)
from collabscore.pipeline import PipelineState
from collabscore import io as cio

from oracles import weighted_quantile
from test_trust import drop_user_vouches, make_matrix, random_graph

CONFIG_DIR = Path(__file__).parent.parent / "configs"
TOL = 1e-6


def report(number, description, failures, elapsed, budget):
    ok = not failures and elapsed < budget
    line = (f"[criterion {number:2d}] {'PASS' if ok else 'FAIL'} "
            f"({elapsed:6.2f}s / {budget:.0f}s) {description}")
    print(line)
    assert not failures, failures[:5]
    assert elapsed < budget, f"runtime {elapsed:.2f}s over budget {budget}s"


def trust_corpus(n_graphs=200, max_users=20, seed=42):
    rng = np.random.default_rng(seed)
    corpus = []
    for _ in range(n_graphs):
        n = int(rng.integers(2, max_users + 1))
        corpus.append(random_graph(rng, n))
    return corpus


def test_01_trust_security():
    start = time.perf_counter()
    beta, epsilon = 0.8, 1e-8
    failures = []
    for users, vouches, pretrust in trust_corpus():
        matrix = make_matrix(users, vouches)
        full = lipschitrust(pretrust, matrix, beta, epsilon).trust
        for user in users:
            reduced = make_matrix(users, drop_user_vouches(vouches, user))
            state = lipschitrust(pretrust, reduced, beta, epsilon)
            bound = beta / (1.0 - beta) * state.as_dict()[user] + 2e-8
            gap = float(np.abs(full - state.trust).sum())
            if gap > bound:
                failures.append((user, gap, bound))
    report(1, "vouch-removal influence bounded by b/(1-b) * trust",
           failures, time.perf_counter() - start, 10.0)


def test_02_trust_convergence_and_side_properties():
    start = time.perf_counter()
    beta, epsilon = 0.8, 1e-8
    failures = []
    for users, vouches, pretrust in trust_corpus():
        matrix = make_matrix(users, vouches)
        state = lipschitrust(pretrust, matrix, beta, epsilon)
        t_count = state.iterations_run
        doubled = _plain_iterate(matrix, pretrust, beta, 2 * t_count)
        contraction = float(np.abs(state.trust - doubled).sum())
        if contraction > len(users) * beta ** t_count + 2 * epsilon:
            failures.append(("contraction", contraction))
        reachable = _reachable_from(vouches, set(pretrust))
        for user, value in state.as_dict().items():
            if (value > 0.0) != (user in reachable):
                failures.append(("reachability", user, value))
        for user in users:
            reduced = make_matrix(users, drop_user_vouches(vouches, user))
            t_wo = lipschitrust(pretrust, reduced, beta, epsilon).trust
            if not np.all(state.trust >= t_wo - epsilon):
                failures.append(("monotonicity", user))
    report(2, "geometric convergence, vouch monotonicity, path positivity",
           failures, time.perf_counter() - start, 10.0)


def _plain_iterate(matrix, pretrust, beta, steps):
    index = {u: i for i, u in enumerate(matrix.users)}
    p = np.zeros(len(matrix.users))
    for user, value in pretrust.items():
        p[index[user]] = value
    src = np.array([index[u] for (u, _) in matrix.weights], dtype=int)
    dst = np.array([index[v] for (_, v) in matrix.weights], dtype=int)
    wgt = np.array(list(matrix.weights.values()))
    t = np.minimum(p.copy(), 1.0)
    for _ in range(steps):
        acc = p.copy()
        if src.size:
            np.add.at(acc, dst, beta * wgt * t[src])
        t = np.minimum(acc, 1.0)
    return t


def _reachable_from(vouches, seeds):
    adjacency = {}
    for a, b in vouches:
        adjacency.setdefault(a, set()).add(b)
    seen, frontier = set(seeds), set(seeds)
    while frontier:
        frontier = {v for u in frontier for v in adjacency.get(u, ())
                    if v not in seen}
        seen |= frontier
    return seen


def _random_weighted_inputs(rng, n, with_unc=True):
    return [WeightedInput(float(rng.uniform(0, 2)),
                          float(rng.uniform(-10, 10)),
                          float(rng.uniform(0, 2)) if with_unc else 0.0,
                          float(rng.uniform(0, 2)) if with_unc else 0.0)
            for _ in range(n)]


def test_03_primitive_resilience():
    start = time.perf_counter()
    rng = np.random.default_rng(100)
    failures = []
    estimators = (
        ("qr_med", 1.0, lambda L, x: qr_med(L, x, TOL)),
        ("qr_qtl", 1.0, lambda L, x: qr_qtl(0.2, L, x, TOL)),
        ("qr_dev", 2.0, lambda L, x: qr_dev(0.9, L, 1.0, x, TOL)),
        ("br_mean", 1.0, lambda L, x: br_mean(L, x, TOL)),
    )
    for name, factor, estimator in estimators:
        for _ in range(500):
            lipschitz = float(rng.uniform(0.1, 1.0))
            inputs = _random_weighted_inputs(rng, int(rng.integers(1, 7)))
            perturbed, l1 = [], 0.0
            for i in inputs:
                w = max(0.0, i.weight + float(rng.uniform(-0.4, 0.4)))
                l1 += abs(w - i.weight)
                perturbed.append(WeightedInput(w, i.value, i.unc_left,
                                               i.unc_right))
            moved = abs(estimator(lipschitz, perturbed)
                        - estimator(lipschitz, inputs))
            if moved > factor * lipschitz * l1 + 4 * TOL:
                failures.append((name, moved, factor * lipschitz * l1))
    for _ in range(100):
        inputs = _random_weighted_inputs(rng, int(rng.integers(1, 8)),
                                         with_unc=False)
        lipschitz = float(rng.uniform(0.1, 2.0))
        if abs(qr_qtl(0.5, lipschitz, inputs, TOL)
               - qr_med(lipschitz, inputs, TOL)) > 2e-6:
            failures.append(("median_equivalence",))
    for _ in range(50):
        values = rng.uniform(-1, 1, 100)
        inputs = [WeightedInput(1.0, float(v)) for v in values]
        if abs(br_mean(10.0, inputs, TOL) - values.mean()) > 2e-6:
            failures.append(("br_mean_exactness",))
    report(3, "L-bounded weight influence; median equivalence; exact mean",
           failures, time.perf_counter() - start, 30.0)


def test_04_quantile_consistency():
    start = time.perf_counter()
    rng = np.random.default_rng(101)
    failures = []
    for _ in range(100):
        n = int(rng.integers(3, 30))
        weights = rng.uniform(0.2, 2.0, n)
        values = rng.uniform(-10, 10, n)
        alpha = float(rng.uniform(0.15, 0.85))
        lipschitz = 1e4 / weights.sum() * float(rng.uniform(1.0, 3.0))
        inputs = [WeightedInput(float(w), float(x))
                  for w, x in zip(weights, values)]
        margin = float(np.abs(values).max()) / (2 * lipschitz * weights.sum())
        beta_lo, beta_hi = alpha - margin, alpha + margin
        q_lo = weighted_quantile(weights, values, beta_lo)
        q_hi = weighted_quantile(weights, values, beta_hi)
        result = qr_qtl(alpha, lipschitz, inputs, TOL)
        if not (q_lo - 2e-6 <= result <= q_hi + 2e-6):
            failures.append((result, q_lo, q_hi))
    report(4, "regularized quantile inside the weighted-quantile sandwich",
           failures, time.perf_counter() - start, 10.0)


def test_05_infinite_uncertainty_equivalence():
    start = time.perf_counter()
    rng = np.random.default_rng(102)
    failures = []
    for _ in range(100):
        inputs = _random_weighted_inputs(rng, int(rng.integers(2, 8)))
        k = int(rng.integers(0, len(inputs)))
        alpha = float(rng.uniform(0.1, 0.9))
        lipschitz = float(rng.uniform(0.1, 1.0))
        huge = list(inputs)
        huge[k] = WeightedInput(inputs[k].weight, inputs[k].value, 1e6, 1e6)
        silenced = list(inputs)
        silenced[k] = WeightedInput(0.0, inputs[k].value,
                                    inputs[k].unc_left, inputs[k].unc_right)
        gap = abs(qr_qtl(alpha, lipschitz, huge, TOL)
                  - qr_qtl(alpha, lipschitz, silenced, TOL))
        if gap > 1e-3:
            failures.append(gap)
    report(5, "huge uncertainty behaves like zero voting right",
           failures, time.perf_counter() - start, 5.0)


def _random_gbt_instance(rng, n_entities=5, n_comparisons=8):
    entities = [f"e{i}" for i in range(n_entities)]
    data = []
    for _ in range(n_comparisons):
        e, f = rng.choice(entities, 2, replace=False)
        data.append((str(e), str(f), float(rng.uniform(-10, 10))))
    return data


def test_06_gbt_correctness():
    start = time.perf_counter()
    rng = np.random.default_rng(103)
    failures = []
    r_max, prior, tol = 10.0, 1.0 / 49.0, 1e-5
    for _ in range(50):
        data = _random_gbt_instance(rng)
        entities = sorted({e for e, _, _ in data} | {f for _, f, _ in data})
        theta = {e: float(rng.uniform(-4, 4)) for e in entities}
        for e in entities:
            h = 1e-5
            up, down = dict(theta), dict(theta)
            up[e] += h
            down[e] -= h
            numeric = (gbt_loss(up, data, r_max, prior)
                       - gbt_loss(down, data, r_max, prior)) / (2 * h)
            analytic = _gbt_gradient(theta, data, e, r_max, prior)
            scale = max(1.0, abs(numeric))
            if abs(analytic - numeric) / scale > 1e-4:
                failures.append(("gradient", e, analytic, numeric))
    for _ in range(25):
        data = _random_gbt_instance(rng)
        base = fit_raw_scores(data, r_max, prior, tol)
        start_point = {e: float(rng.uniform(-5, 5)) for e in base}
        again = fit_raw_scores(data, r_max, prior, tol, start=start_point)
        for e in base:
            if abs(again[e] - base[e]) > 1e-4:
                failures.append(("refit", e))
    for _ in range(100):
        data = _random_gbt_instance(rng, n_entities=4, n_comparisons=6)
        k = int(rng.integers(0, len(data)))
        e, f, r = data[k]
        changed = list(data)
        changed[k] = (e, f, max(-r_max, r - float(rng.uniform(0.5, 4.0))))
        before = fit_raw_scores(data, r_max, prior, tol)
        after = fit_raw_scores(changed, r_max, prior, tol)
        if after[e] < before[e] - 5e-5:
            failures.append(("monotonicity", e))
    for _ in range(15):
        data = _random_gbt_instance(rng)
        scores = fit_raw_scores(data, r_max, prior, tol)
        left, right = estimate_uncertainties(scores, data, r_max)
        base_nll = _nll(scores, data, r_max)
        for e in scores:
            for unc, sign in ((left[e], -1.0), (right[e], +1.0)):
                if math.isinf(unc):
                    continue
                probe = dict(scores)
                probe[e] += sign * unc
                if abs(_nll(probe, data, r_max) - base_nll - 1.0) > 1e-4:
                    failures.append(("uncertainty_residual", e))
    report(6, "gradient, unique refit, monotonicity, uncertainty residual",
           failures, time.perf_counter() - start, 60.0)


def _gbt_gradient(theta, data, entity, r_max, prior):
    from collabscore import cgf_uniform_prime
    g = prior * theta[entity]
    for e, f, r in data:
        if e == entity:
            g += cgf_uniform_prime(theta[e] - theta[f]) + r / r_max
        elif f == entity:
            g -= cgf_uniform_prime(theta[e] - theta[f]) + r / r_max
    return g


def _nll(theta, data, r_max):
    from collabscore import cgf_uniform
    return sum(cgf_uniform(theta[e] - theta[f])
               + r * (theta[e] - theta[f]) / r_max
               for e, f, r in data)


def test_07_voting_rights_budget():
    start = time.perf_counter()
    rng = np.random.default_rng(104)
    params = OvertrustParams()
    failures = []
    for _ in range(100):
        n = int(rng.integers(1, 12))
        flags = {f"u{i}": {"e": "public" if rng.random() < 0.7 else "private"}
                 for i in range(n)}
        trusts = {f"u{i}": float(rng.uniform(0, 1)) for i in range(n)}
        w_min = solve_min_voting_right("e", flags, trusts, params, 1e-6)
        cap = max_tolerated_overtrust("e", flags, trusts, params)
        realized = overtrust("e", w_min, flags, trusts, params)
        if realized > cap + 1e-6:
            failures.append(("budget", realized, cap))
        if w_min < 1.0 and abs(realized - cap) > 1e-6:
            failures.append(("root", realized, cap))
    report(7, "overtrust within budget; dichotomy root at the cap",
           failures, time.perf_counter() - start, 5.0)


def test_08_affine_recovery():
    start = time.perf_counter()
    failures = []
    scores_u = {f"e{i:02d}": i - 4.5 for i in range(10)}
    scores_v = {e: 2.0 * s + 3.0 for e, s in scores_u.items()}
    models = {
        "u": UserModel(scores=scores_u,
                       unc_left={e: 0.0 for e in scores_u},
                       unc_right={e: 0.0 for e in scores_u}),
        "v": UserModel(scores=scores_v,
                       unc_left={e: 0.0 for e in scores_v},
                       unc_right={e: 0.0 for e in scores_v}),
    }
    state = PipelineState(dataset=ComparisonDataset())
    state.raw_models = models
    state.trust_state = TrustState(users=("u", "v"),
                                   pretrust=np.array([0.8, 0.0]), decay=0.8,
                                   trust=np.array([1.0, 0.0]),
                                   epsilon=1e-8, iterations_run=0)
    state = Mehestan(lipschitz=1e5, error=TOL)(state)
    if state.scaler_set.members() != ["u"]:
        failures.append(("scalers", state.scaler_set.members()))
    for e, expected in scores_u.items():
        got = state.scaled_models["v"].scores[e]
        if abs(got - expected) > 0.1:
            failures.append((e, got, expected))
    report(8, "two-user affine scale recovery within 0.1",
           failures, time.perf_counter() - start, 5.0)


def test_09_squash_properties():
    start = time.perf_counter()
    failures = []
    rng = np.random.default_rng(105)
    for x in rng.uniform(-100, 100, 1000):
        if squash(-x) != -squash(x):
            failures.append(("oddness", x))
    grid = np.linspace(-50, 50, 10001)
    values = np.array([squash(x) for x in grid])
    if not np.all(np.diff(values) > 0):
        failures.append(("monotonicity",))
    if np.any(np.abs(values) >= 100.0):
        failures.append(("bounds",))
    ceiling = squash(2 * 0.1 * 1.0)
    if abs(ceiling - round(ceiling, 4)) > 5e-5 or \
            abs(ceiling - 19.6116) > 5e-5:
        failures.append(("two-rater ceiling", ceiling))
    report(9, "squash odd, strictly increasing, 19.6116 two-rater ceiling",
           failures, time.perf_counter() - start, 1.0)


def _load_experiment(name, **overrides):
    mapping = json.loads((CONFIG_DIR / name).read_text())
    mapping.update(overrides)
    return ExperimentConfig.from_mapping(mapping)


def _pooled_std(a, b):
    return math.sqrt(0.5 * (a ** 2 + b ** 2))


def test_10_resilience_trend():
    start = time.perf_counter()
    config = _load_experiment("resilience.json", n_seeds=10, n_users=30,
                              n_entities=50)
    result = run_experiment(config)
    failures = []
    for z in config.zvalues:
        top = result.cell(1.0, float(z))
        if top.mean_correlation <= 0.0:
            failures.append(("top_cell", z, top.mean_correlation))
        cells = [result.cell(float(x), float(z)) for x in config.xvalues]
        means = [c.mean_correlation for c in cells]
        stds = [c.std_correlation for c in cells]
        inversions = [i for i in range(len(means) - 1)
                      if means[i + 1] < means[i]]
        if len(inversions) > 1:
            failures.append(("inversions", z, means))
        for i in inversions:
            if means[i] - means[i + 1] > _pooled_std(stds[i], stds[i + 1]):
                failures.append(("inversion_too_deep", z, i, means))
    report(10, "correlation rises with the trustworthy fraction",
           failures, time.perf_counter() - start, 900.0)


def test_11_engagement_bias_sweep():
    start = time.perf_counter()
    config = _load_experiment("engagement_bias.json", n_seeds=10,
                              xvalues=[10.0], zvalues=[1.0, 30.0])
    result = run_experiment(config)
    weak = result.cell(10.0, 1.0)
    strong = result.cell(10.0, 30.0)
    failures = []
    slack = _pooled_std(weak.std_correlation, strong.std_correlation)
    if not strong.mean_correlation > weak.mean_correlation - slack:
        failures.append((strong.mean_correlation, weak.mean_correlation,
                         slack))
    report(11, "strong scaling beats weak scaling under engagement bias",
           failures, time.perf_counter() - start, 900.0)


def test_12_end_to_end_determinism(tmp_path):
    start = time.perf_counter()
    mapping = json.loads((CONFIG_DIR / "resilience.json").read_text())
    mapping.update({"n_users": 12, "n_entities": 10, "n_seeds": 2,
                    "xvalues": [0.5, 1.0], "zvalues": [0.1, 1.0]})
    mapping["generative_model"]["user_model"][1]["poisson_compare"] = 8.0
    config = ExperimentConfig.from_mapping(mapping)
    paths = []
    for run in range(2):
        result = run_experiment(config)
        path = tmp_path / f"results_{run}.csv"
        cio.write_results_csv(path, result.cells)
        paths.append(path)
    failures = []
    if paths[0].read_bytes() != paths[1].read_bytes():
        failures.append("result CSVs differ")
    report(12, "identical seeds produce identical result CSVs",
           failures, time.perf_counter() - start, 120.0)
