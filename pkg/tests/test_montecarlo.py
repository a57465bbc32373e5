import math

import pytest

from tandem_iv.montecarlo import (EstimateRow, Experiment, ProfileSpec, Regime, binomial_se,
                                  read_csv, regime_schedule, run_experiment, thread_count, write_rows)

HOM0 = ProfileSpec("homogeneous", epsilon=0.0)


def test_regime_schedule():
    assert regime_schedule(10 ** 4, Regime("poly", 0.25)) == (10, 0.125)
    assert regime_schedule(300, Regime("linear", 0.5), "gsi")[0] == 150
    assert regime_schedule(75, Regime("linear", 0.5), "gsi")[0] == 38
    for k in (10, 1000):
        assert regime_schedule(k, Regime("const", 4))[0] == 4
    with pytest.warns(UserWarning, match="outside"):
        regime_schedule(100, Regime("poly", 0.6))


def test_regime_validation():
    with pytest.raises(ValueError):
        Regime("const", 2.5)
    with pytest.raises(ValueError):
        Regime("poly", -1)
    assert Regime("poly", 0.25).label == "rho=0.25"


def test_noiseless_grid_succeeds():
    for scheme, regimes in (("ftlr", [Regime("const", 1)]), ("bitsep", [Regime("const", 3)]),
                            ("gsi", [Regime("linear", 0.5)])):
        rows = run_experiment(Experiment(scheme, [HOM0], [5, 40], regimes, trials=30), threads=1)
        for r in rows:
            if scheme == "ftlr":
                assert r.estimate == 0.0
            else:
                assert r.estimate == 1.0
            assert r.verdict != "fail"


def test_standard_error():
    assert binomial_se(0.3, 100) == pytest.approx(math.sqrt(0.21 / 100))
    rows = run_experiment(Experiment("bitsep", [ProfileSpec("homogeneous", epsilon=0.5)], [60],
                                     [Regime("const", 3)], [1.0], [0.25], trials=200), threads=1)
    r = rows[0]
    assert 0 < r.estimate < 1
    assert r.se == pytest.approx(math.sqrt(r.estimate * (1 - r.estimate) / 200))
    assert r.soundness_violations == 0


def test_incompatible_combinations_rejected():
    per = ProfileSpec("periodic", pattern=(0.2, 0.4))
    with pytest.raises(ValueError, match="heterogeneous"):
        run_experiment(Experiment("gsi", [per], [10], [Regime("linear", 0.5)]))
    with pytest.raises(ValueError, match="linear"):
        run_experiment(Experiment("bitsep", [HOM0], [10], [Regime("linear", 0.5)]))
    with pytest.raises(ValueError, match="single bit"):
        run_experiment(Experiment("ftlr", [HOM0], [10], [Regime("const", 2)]))
    with pytest.raises(ValueError, match="explicit"):
        run_experiment(Experiment("ftlr", [ProfileSpec("explicit", epsilons=(0.1, 0.2))], [3]))
    with pytest.raises(ValueError):
        run_experiment(Experiment("bitsep", [HOM0], [], [Regime("const", 2)]))


def test_thread_count_and_determinism(tmp_path, monkeypatch):
    monkeypatch.setenv("TANDEM_IV_THREADS", "3")
    assert thread_count() == 3
    assert thread_count(2) == 2
    exp = Experiment("bitsep", [ProfileSpec("periodic", pattern=(0.2, 0.5))], [30],
                     [Regime("const", 2)], [0.5], [0.2], trials=600, master_seed=4, network_trials=300)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_rows(a, run_experiment(exp, threads=1))
    write_rows(b, run_experiment(exp, threads=4))
    assert a.read_bytes() == b.read_bytes()
    row = read_csv(a)[0]
    assert row["scheme"] == "bitsep" and int(row["trials"]) == 600


def test_heterogeneous_bitsep_row():
    rows = run_experiment(Experiment("bitsep", [ProfileSpec("periodic", pattern=(0.2, 0.4))], [200],
                                     [Regime("poly", 0.25)], trials=100), threads=1)
    r = rows[0]
    assert r.m == 4 and r.delta_sep == 0.125
    assert r.error_criterion == "exp(-o(k^(1-2rho)))"
    assert isinstance(r, EstimateRow)
