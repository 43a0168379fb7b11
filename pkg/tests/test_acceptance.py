"""Top-level acceptance gate.

Nine numbered criteria cover the solver, the risk formulas, the optimizers,
the Monte Carlo agreement, the sampling statistics, and the subsample-size
selection procedure end to end.  Each test appends a single
``[criterion N] PASS/FAIL`` verdict line to the session log (replayed after
the run) and then asserts it.
"""
import math
import time

import numpy as np
import pytest

from bagrisk.cv import CvConfig, run_cv
from bagrisk.fixed_point import closed_form_v_isotropic, solve_v
from bagrisk.risk_theory import (SPLAG as TH_SPLAG, SUBAG as TH_SUBAG,
                                 optimal_ridge_risk_isotropic, optimize_phis,
                                 risk_splag, risk_subag)
from bagrisk.simulate import (SPLAG, SUBAG_WOR, SUBAG_WR, EnsembleSpec,
                              draw_indices, exact_conditional_risk,
                              fit_ensemble, gen_ar1)
from bagrisk.spectrum import make_ar1, make_isotropic_signal

GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0


def _verdict(log, num, ok, detail):
    line = f"[criterion {num}] {'PASS' if ok else 'FAIL'}: {detail}"
    log.append(line)
    print(line)
    assert ok, line


def test_c1_solver_agrees_with_closed_forms(acceptance_log, iso_H):
    t0 = time.perf_counter()
    worst = 0.0
    checked = 0
    for lam in (0.0, 0.01, 0.1, 1.0, 10.0):
        for phi in (0.1, 0.5, 0.9, 1.1, 2.0, 5.0, 10.0):
            if lam == 0.0 and phi <= 1.0:
                continue
            gap = abs(solve_v(lam, phi, iso_H)
                      - closed_form_v_isotropic(lam, phi))
            worst = max(worst, gap)
            checked += 1
    elapsed = time.perf_counter() - t0
    _verdict(acceptance_log, 1, worst < 1e-10 and elapsed < 1.0,
             f"max |bisection - closed form| = {worst:.2e} over {checked} "
             f"(lambda, phi) points in {elapsed:.2f}s (limits 1e-10, 1s)")


def test_c2_square_data_optimum_is_the_golden_ratio(acceptance_log,
                                                    iso_H, iso_G):
    phi_s_star, comps = optimize_phis(0.0, TH_SUBAG, 1.0, iso_G, iso_H,
                                      1.0, 1.0)
    gap_x = abs(phi_s_star - GOLDEN**2)
    gap_r = abs(comps.total - GOLDEN)
    _verdict(acceptance_log, 2, gap_x <= 1e-6 and gap_r <= 1e-8,
             f"phi_s* off by {gap_x:.2e} (tol 1e-6), risk off by "
             f"{gap_r:.2e} (tol 1e-8)")


def test_c3_infinite_bag_optimum_equals_tuned_ridge(acceptance_log, iso_H):
    t0 = time.perf_counter()
    worst = 0.0
    for phi in (0.1, 0.3, 1.0, 2.0, 5.0, 10.0):
        for snr in (0.5, 1.0, 4.0):
            G = make_isotropic_signal(1.0, rho_sq=snr, sigma_sq=1.0)
            _, comps = optimize_phis(0.0, TH_SUBAG, phi, G, iso_H, snr, 1.0)
            ridge = optimal_ridge_risk_isotropic(phi, snr, 1.0)
            worst = max(worst, abs(comps.total - ridge))
    elapsed = time.perf_counter() - t0
    _verdict(acceptance_log, 3, worst < 1e-8 and elapsed < 5.0,
             f"max |min-over-ratio risk - tuned ridge| = {worst:.2e} over 18 "
             f"(phi, snr) pairs in {elapsed:.2f}s (limits 1e-8, 5s)")


def test_c4_ensemble_risk_decomposes_into_pair_risks(acceptance_log):
    t0 = time.perf_counter()
    strategies = (SUBAG_WR, SUBAG_WOR, SPLAG)
    worst = 0.0
    for i in range(50):
        lam = (0.0, 0.1)[i % 2]
        bags = 1 + (i // 2) % 6
        strategy = strategies[(i // 12) % 3]
        data = gen_ar1(200, 30, 0.25, 1.0, seed=1000 + i)
        ens = fit_ensemble(data, EnsembleSpec(strategy, 50, bags, seed=i),
                           lam)
        B = ens.per_bag_betas
        m = B.shape[0]   # realized count (splag clamps)
        direct = exact_conditional_risk(data, B.mean(axis=0))
        singles = sum(exact_conditional_risk(data, B[j]) for j in range(m))
        pairs = 0.0
        for a in range(m):
            for b in range(a + 1, m):
                pairs += 2.0 * exact_conditional_risk(
                    data, 0.5 * (B[a] + B[b]))
        combo = ((2.0 - m) / m**2) * singles + (2.0 / m**2) * pairs
        worst = max(worst, abs(combo - direct) / direct)
    elapsed = time.perf_counter() - t0
    _verdict(acceptance_log, 4, worst < 1e-8 and elapsed < 30.0,
             f"max relative gap between direct ensemble risk and its "
             f"single/pair recombination = {worst:.2e} over 50 instances "
             f"in {elapsed:.1f}s (limits 1e-8, 30s)")


def test_c5_monte_carlo_tracks_theory_curves(acceptance_log):
    t0 = time.perf_counter()
    n, reps = 2500, 50
    bag_counts = (1, 2, 5, 10)
    worst = (0.0, None)
    cells = 0
    for p in (250, 2750):
        H, G = make_ar1(0.25, p)
        phi = p / n
        ks = [round(p / r) for r in (0.5, 1.5, 2.0, 4.0) if round(p / r) <= n]
        sums = {(k, M): 0.0 for k in ks for M in bag_counts}
        for rep in range(reps):
            data = gen_ar1(n, p, 0.25, 1.0, seed=rep)
            for cell, k in enumerate(ks):
                spec = EnsembleSpec(SUBAG_WR, k, max(bag_counts),
                                    seed=100_000 + rep * 10 + cell)
                B = fit_ensemble(data, spec, 0.0).per_bag_betas
                for M in bag_counts:
                    sums[(k, M)] += exact_conditional_risk(
                        data, B[:M].mean(axis=0))
        for k in ks:
            ratio = p / k
            for M in bag_counts:
                theory = risk_subag(0.0, M, phi, ratio, G, H, 0.2, 1.0).total
                rel = abs(sums[(k, M)] / reps - theory) / theory
                cells += 1
                if rel > worst[0]:
                    worst = (rel, (p, k, M))
        del data
    elapsed = time.perf_counter() - t0
    _verdict(acceptance_log, 5, worst[0] < 0.05,
             f"worst mean-vs-theory relative gap = {worst[0]:.3f} at "
             f"(p, k, M) = {worst[1]} over {cells} cells, {reps} reps each, "
             f"in {elapsed:.0f}s (tolerance 5%)")


def test_c6_theory_monotonicity_suite(acceptance_log, iso_H, iso_G):
    t0 = time.perf_counter()
    slack = 1e-12
    phis = np.geomspace(0.1, 10.0, 30)
    ratios = np.geomspace(0.12, 50.0, 30)
    bag_ladder = (1, 2, 4, 8, math.inf)
    violations = 0

    for lam in (0.0, 0.1):
        for phi in phis:
            for ratio in ratios:
                if ratio <= phi:
                    continue
                for fn in (risk_subag, risk_splag):
                    comps = [fn(lam, M, float(phi), float(ratio), iso_G,
                                iso_H, 1.0, 1.0) for M in bag_ladder]
                    for lo, hi in zip(comps[1:], comps[:-1]):
                        if lo.bias > hi.bias + slack:
                            violations += 1
                        if lo.variance > hi.variance + slack:
                            violations += 1

    for lam in (0.0, 0.1):
        sub_mins, spl_mins = [], []
        for phi in phis:
            sub_mins.append(optimize_phis(lam, TH_SUBAG, float(phi), iso_G,
                                          iso_H, 1.0, 1.0)[1].total)
            spl_mins.append(optimize_phis(lam, TH_SPLAG, float(phi), iso_G,
                                          iso_H, 1.0, 1.0)[1].total)
        for nxt, prev in zip(sub_mins[1:], sub_mins[:-1]):
            if nxt < prev - slack:
                violations += 1
        for sub, spl in zip(sub_mins, spl_mins):
            if sub > spl + slack:
                violations += 1

    elapsed = time.perf_counter() - t0
    _verdict(acceptance_log, 6, violations == 0,
             f"{violations} monotonicity violations beyond 1e-12 slack "
             f"(bag-count, aspect-ratio, strategy ordering) on a 30x30 grid "
             f"in {elapsed:.0f}s")


def test_c7_sampling_statistics(acceptance_log):
    n, k, draws = 1000, 100, 10_000
    overlaps = np.empty(draws)
    for s in range(draws):
        a, b = draw_indices(EnsembleSpec(SUBAG_WR, k, 2, seed=s), n)
        overlaps[s] = np.intersect1d(a, b).size
    mean = float(overlaps.mean())
    # hypergeometric pair-overlap moments at (n, k)
    expected = k * k / n
    var = k * (k / n) * (1 - k / n) * (n - k) / (n - 1)
    three_se = 3.0 * math.sqrt(var / draws)

    disjoint_ok = True
    for seed in range(200):
        sets = draw_indices(EnsembleSpec(SPLAG, 100, 7, seed=seed), n)
        flat = np.concatenate(sets)
        if flat.size != np.unique(flat).size:
            disjoint_ok = False

    ok = abs(mean - expected) <= three_se and disjoint_ok
    _verdict(acceptance_log, 7, ok,
             f"overlap mean {mean:.4f} vs {expected:.1f} "
             f"(3 SE = {three_se:.4f}); disjoint blocks: {disjoint_ok}")


@pytest.fixture(scope="module")
def cv_study():
    t0 = time.perf_counter()
    study = {}
    for p in (100, 500, 1100, 2000):
        rows = []
        for rep in range(20):
            data = gen_ar1(1000, p, 0.25, 1.0, seed=50_000 + 97 * p + rep)
            res = run_cv(data, CvConfig(M=10, lam=0.0, seed=rep))
            oracle = min(exact_conditional_risk(data, c.beta)
                         for c in res.candidates)
            chosen = exact_conditional_risk(data, res.final_beta)
            rows.append((res.k_hat, chosen - oracle))
        study[p] = rows
    study["elapsed"] = time.perf_counter() - t0
    return study


def test_c8_cv_tracks_the_grid_oracle(acceptance_log, cv_study):
    per_p = {p: sum(1 for _, excess in cv_study[p] if excess <= 0.1)
             for p in (100, 500, 1100, 2000)}
    pooled = sum(per_p.values())
    elapsed = cv_study["elapsed"]
    ok = pooled >= 72 and elapsed < 600.0
    _verdict(acceptance_log, 8, ok,
             f"excess risk <= 0.1 in {pooled}/80 replications "
             f"(per p: {per_p}; need >= 72) in {elapsed:.0f}s (limit 600s)")


def test_c9_small_aspect_ratio_selects_interpolators(acceptance_log,
                                                     cv_study):
    chosen = [k_hat for k_hat, _ in cv_study[100]]
    interp = sum(1 for k_hat in chosen if k_hat == 0 or k_hat < 100)
    _verdict(acceptance_log, 9, interp > 10,
             f"{interp}/20 replications at p=100 chose p/k > 1 "
             f"(selected k: {sorted(chosen)}); majority required")
