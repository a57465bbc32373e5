"""Acceptance criteria 1-11.  Each test records a one-line verdict that is
printed in the terminal summary (see conftest.py)."""
import itertools
import math
import time

import numpy as np

from tandem_iv import bounds, cli
from tandem_iv._sweep import sweep
from tandem_iv.converse import (binary_entropy_inverse, fano_error_floor, g_table, geometric_sum_cdf,
                                scan_offset, sum_distribution)
from tandem_iv.lpp import linear_regime_prediction, lpp_passage, queue_from_services
from tandem_iv.model import ErasureProfile, StateMatrix, message_bits
from tandem_iv.montecarlo import Experiment, ProfileSpec, Regime, binomial_se, run_experiment
from tandem_iv.schedule import Schedule, round_half_up
from tandem_iv.simnet import (check_departure_recursion, ftlr_arrivals, run_ftlr_single_bit,
                              run_gsi_batch, run_gsi_control)
from tandem_iv.wavefront import martingale_check

# pinned tolerances
DUAL_DP_TOL = 1e-12
SE_MULT = 3.0
MARTINGALE_TOL = 1e-12
IDENTITY_RTOL = 1e-12
ZETA_RTOL = 0.02
GSI_RTOL = 0.05


def test_criterion_01_dual_dp(report):
    t0 = time.time()
    rng = np.random.default_rng(1)
    profiles = [ErasureProfile.homogeneous(e, 30) for e in (0.0, 0.2, 0.5, 0.9)]
    profiles += [ErasureProfile.periodic((0.2, 0.4), 30), ErasureProfile.periodic((0.0, 0.7, 0.3), 30)]
    profiles += [ErasureProfile.explicit(rng.uniform(0, 0.9, 30).tolist()) for _ in range(3)]
    worst = 0.0
    for p in profiles:
        table = g_table(p, 30, 100)
        for i in range(1, 31):
            # P(sum < i + n) for n = 0..100 from one convolution pmf
            cdf = np.concatenate([[0.0], np.cumsum(sum_distribution(p, i, i + 100).pmf)])[i:i + 101]
            row = np.array([table(i, n) for n in range(101)])
            worst = max(worst, float(np.abs(cdf - row).max()))
        worst = max(worst, abs(geometric_sum_cdf(p, 7, 20) - table(7, 13)))
    dt = time.time() - t0
    ok = worst <= DUAL_DP_TOL and dt < 10
    report(1, ok, f"max |g - cdf| = {worst:.3g} over {len(profiles)} profiles, {dt:.1f} s")
    assert ok


def test_criterion_02_lpp_queue(report):
    t0 = time.time()
    rng = np.random.default_rng(2)
    small_bad = 0
    for _ in range(1000):
        k, m = rng.integers(1, 9, 2)
        w = rng.geometric(rng.uniform(0.1, 1.0), (k, m))
        small_bad += not np.array_equal(queue_from_services(w), lpp_passage(w))
    big = rng.geometric(0.5, (50, 200, 200))
    G = lpp_passage(big)
    big_bad = sum(not np.array_equal(queue_from_services(big[t]), G[t]) for t in range(50))
    rec_bad = 0
    n_gsi = 0
    for prof in (ErasureProfile.homogeneous(0.5, 40), ErasureProfile.homogeneous(0.1, 25),
                 ErasureProfile.periodic((0.2, 0.6), 30)):
        for t in range(20):
            states = StateMatrix.batch(prof, 50, 12, [t])
            rec = run_gsi_control(prof, 15, states)
            rec_bad += not (rec.complete and check_departure_recursion(rec.departure, states))
            n_gsi += 1
    dt = time.time() - t0
    ok = small_bad == 0 and big_bad == 0 and rec_bad == 0 and dt < 30
    report(2, ok, f"mismatches: small {small_bad}/1000, 200x200 {big_bad}/50, "
                  f"GSI recursion {rec_bad}/{n_gsi}; {dt:.1f} s")
    assert ok


def test_criterion_03_ftlr_exact_law(report):
    t0 = time.time()
    k, eps, trials = 400, 0.2, 10_000
    prof = ErasureProfile.homogeneous(eps, k)
    tau = math.ceil(500 + 400 ** 0.7)
    states = StateMatrix.batch(prof, tau, 3, trials)
    arrival = ftlr_arrivals(prof, states)
    # the batch run agrees with single runs on a few trials
    for t in range(5):
        dec, correct, arr = run_ftlr_single_bit(prof, 1, tau, states, trial=t)
        assert arr == arrival[t] and correct == (arrival[t] <= tau)
    emp = float((arrival > tau).mean())         # b0 = 1: error iff not delivered by tau
    exact = 1.0 - geometric_sum_cdf(prof, k, tau + 1)
    se = max(binomial_se(emp, trials), binomial_se(exact, trials))
    # same trials at a deadline near the mean, where the tail is not negligible
    emp_mid = float((arrival > 500).mean())
    exact_mid = 1.0 - geometric_sum_cdf(prof, k, 501)
    se_mid = max(binomial_se(emp_mid, trials), binomial_se(exact_mid, trials))
    dt = time.time() - t0
    ok = (abs(emp - exact) <= SE_MULT * se and abs(emp_mid - exact_mid) <= SE_MULT * se_mid
          and dt < 60)
    report(3, ok, f"tau={tau}: empirical {emp:.3g} vs exact tail {exact:.3g} (3 SE = {3 * se:.2g}); "
                  f"at 500: {emp_mid:.4f} vs {exact_mid:.4f}; {dt:.1f} s")
    assert ok


def test_criterion_04_bitsep_bound_dominance(report):
    t0 = time.time()
    exp = Experiment("bitsep", [ProfileSpec("homogeneous", epsilon=0.5)], [100_000],
                     [Regime("const", 4)], [1.0], [0.25], trials=1000, master_seed=4,
                     network_trials=100, message="random")
    row = run_experiment(exp)[0]
    bound = bounds.success_bound_hom(1e5, 4, 0.5, 1.0, 0.25).success_lower_bound
    dt = time.time() - t0
    ok = (row.estimate >= bound and abs(bound - 0.93877) < 1e-4 and row.soundness_violations == 0
          and row.network_trials == 100 and dt < 600)
    report(4, ok, f"success event {row.estimate:.4f} >= bound {bound:.5f}; network subsample "
                  f"{row.network_success:.3f} on {row.network_trials}, violations {row.soundness_violations}; {dt:.0f} s")
    assert ok


def test_criterion_05_soundness(report):
    profiles = [ErasureProfile.homogeneous(e, k) for e, k in ((0.1, 30), (0.5, 60), (0.8, 20))]
    profiles += [ErasureProfile.periodic(p, k) for p, k in (((0.2, 0.4), 50), ((0.0, 0.7, 0.3), 40))]
    params = [(2, 1.0, 0.25), (4, 0.5, 0.2), (6, 1.5, 0.1), (3, 0.3, 0.3)]
    total = held = violations = 0
    stream = 0
    for prof, (m, c, d) in itertools.product(profiles, params):
        s = Schedule.build(prof, m, c, d)
        for mode in ("random", "alternating"):
            states = StateMatrix.batch(prof, s.tau[-1], 2024, 2500, stream)
            stream += 1
            r = sweep(s, states, message_bits(states.keys, m, mode))
            A = r.A.all(axis=1)
            total += A.size
            held += int(A.sum())
            violations += int((A & ~r.correct.all(axis=1)).sum())
    ok = total >= 100_000 and violations == 0
    report(5, ok, f"{violations} violations in {total} trials ({held} with the success event)")
    assert ok


def test_criterion_06_martingale(report):
    rng = np.random.default_rng(6)
    worst_mean = 0.0
    bad_steps = 0
    for n in range(20):
        if n < 10:
            e = float(rng.uniform(0, 0.95))
            prof = ErasureProfile.homogeneous(e, int(rng.integers(5, 50)))
            out = martingale_check(prof, "homogeneous")
            bad_steps += out["step_limit"] > 1.0
        else:
            prof = ErasureProfile.explicit(rng.uniform(0, 0.95, int(rng.integers(5, 50))).tolist())
            out = martingale_check(prof, "heterogeneous")
            bad_steps += abs(out["step_limit"] - max(1 / prof.v_min - 1, 1)) > 1e-12
        worst_mean = max(worst_mean, out["max_abs_mean"])
        bad_steps += out["max_abs_step"] > out["step_limit"] + 1e-12
    ok = worst_mean <= MARTINGALE_TOL and bad_steps == 0
    report(6, ok, f"max |E[increment]| = {worst_mean:.2g}, step-bound violations {bad_steps} (20 profiles)")
    assert ok


def test_criterion_07_hom_identity(report):
    worst = 0.0
    grid = list(itertools.product((0.1, 0.3, 0.5, 0.7, 0.9), (1e3, 1e5), (0.5, 1.0),
                                  (0.1, 0.25), (1, 4, 16, 50, 100)))[:100]
    for eps, k, c, d, m in grid:
        rep = bounds.success_bound_hom(k, m, eps, c, d)
        log_e, _ = bounds.escape_bound_hom(k, eps, c, d)
        fail_prop = math.exp(rep.log_failure_bound)
        fail_lemma = m * math.exp(log_e)
        worst = max(worst, abs(fail_prop - fail_lemma) / fail_lemma)
        if not rep.vacuous:
            worst = max(worst, abs(rep.success_lower_bound - (1 - fail_lemma)) / (1 - fail_lemma))
    ok = len(grid) == 100 and worst <= IDENTITY_RTOL
    report(7, ok, f"max relative gap {worst:.2g} on {len(grid)} points")
    assert ok


def test_criterion_08_het_velocity(report):
    prof = ErasureProfile.periodic((0.2, 0.4), 1000)
    states = StateMatrix.batch(prof, 2000, 8, 2000)
    arrival = ftlr_arrivals(prof, states)
    ratio = float(arrival.mean()) / 1000
    zeta = prof.zeta
    ok = abs(zeta - 1.4583333333) < 1e-9 and abs(ratio - zeta) / zeta <= ZETA_RTOL
    report(8, ok, f"mean arrival/k = {ratio:.5f} vs zeta = {zeta:.5f}")
    assert ok


def test_criterion_09_converse_threshold(report):
    prof = ErasureProfile.homogeneous(0.5, 100)
    n_hi = scan_offset(0.625, 100)
    n_lo = scan_offset(0.4, 100)
    table = g_table(prof, 100, max(n_hi, n_lo))
    g_hi, g_lo = table(100, n_hi), table(100, n_lo)
    floor = fano_error_floor(prof, 100, 100 + n_hi - 1)
    # the convolution oracle gives the same values
    same = (abs(g_hi - geometric_sum_cdf(prof, 100, 100 + n_hi)) < 1e-12
            and abs(g_lo - geometric_sum_cdf(prof, 100, 100 + n_lo)) < 1e-12)
    ok = n_hi == 61 and g_hi < 0.01 and g_lo > 0.99 and floor > 0.41 and same
    report(9, ok, f"g(100,{n_hi}) = {g_hi:.3g}, g(100,{n_lo}) = {g_lo:.5f}, Fano floor {floor:.4f} "
                  f"(h2^-1(0.99) = {binary_entropy_inverse(0.99):.4f})")
    assert ok


def test_criterion_10_gsi_linear_delay(report):
    t0 = time.time()
    pred, _ = linear_regime_prediction(0.5, 0.5)
    devs = []
    means = []
    for n, k in enumerate((75, 150, 300)):
        prof = ErasureProfile.homogeneous(0.5, k)
        m = round_half_up(0.5 * k)
        states = StateMatrix.batch(prof, 10 * k, 10, 200, n)
        b = run_gsi_batch(m, states)
        assert b.complete.all()
        mean = float(b.completion.mean()) / k
        means.append(mean)
        devs.append(abs(mean - pred) / pred)
    dt = time.time() - t0
    ok = pred == 5.0 and devs[-1] <= GSI_RTOL and devs[0] > devs[1] > devs[2] and dt < 300
    report(10, ok, "mean completion/k " + ", ".join(f"{x:.4f}" for x in means)
           + f" for k = 75, 150, 300 vs 5.0; deviations " + ", ".join(f"{d:.3%}" for d in devs))
    assert ok


def test_criterion_11_determinism(report, tmp_path, monkeypatch):
    cfg = tmp_path / "det.toml"
    cfg.write_text(
        "master_seed = 11\n"
        "[[experiment]]\nscheme = 'bitsep'\n"
        "profile = { kind = 'periodic', pattern = [0.2, 0.4] }\n"
        "k = [60, 120]\nm = 3\nc = 1.0\ndelta_sep = 0.2\ntrials = 700\nnetwork_trials = 300\n"
        "[[experiment]]\nscheme = 'ftlr'\nprofile = { kind = 'homogeneous', epsilon = 0.3 }\n"
        "k = 80\ntrials = 900\n"
        "[[experiment]]\nscheme = 'gsi'\nprofile = { kind = 'homogeneous', epsilon = 0.5 }\n"
        "k = 30\nalpha = 0.5\ntrials = 600\n")
    outs = []
    for n, threads in enumerate((1, 4, 1)):
        out = tmp_path / f"run{n}"
        assert cli.main(["simulate", "--config", str(cfg), "--out", str(out), "--threads", str(threads)]) == 0
        outs.append((out / "results.csv").read_bytes())
    monkeypatch.setenv("TANDEM_IV_THREADS", "3")
    out = tmp_path / "env"
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    outs.append((out / "results.csv").read_bytes())
    ok = all(o == outs[0] for o in outs)
    report(11, ok, f"{len(outs)} runs (threads 1, 4, 1, env 3): results.csv byte-identical = {ok}")
    assert ok
