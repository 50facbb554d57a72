import json

import numpy as np
import pytest

from qsynth.harness import (STUDIES, ExperimentSpec, TrialRecord, binned_fit, check_result,
                            mean_iterations, read_records, records_to_csv, run_experiment,
                            table1_csv, trial_rngs)

SMALL = {
    "lit_examples": {"targets": ["H1", "F4"], "methods": ["GDP", "NM"]},
    "example_count_sweep": {"n": 4, "ms": [2, 4, 8], "methods": ["GDP*"]},
    "sequential_vs_batch": {"sizes": [1, 2, 4]},
    "xy_distance": {"max_iters": 5000},
    "initial_guess": {"max_iters": 5000},
    "conditioning": {"unitary_controls": 3, "max_iters": 5000},
    "wall_clock": {"sizes": [4], "methods": ["GDP"], "alpha_min": 0.25},
    "pipeline": {"target": "F4"},
}


def record(status="converged", iterations=10):
    return TrialRecord("x", 0, 0, "GD", 2, 2, 0.1, 0.1, iterations, status, 0.0, 0.0, 1.0, 1.0, 1.0)


class TestSpec:
    def test_validation(self):
        with pytest.raises(ValueError):
            ExperimentSpec("fig9")
        with pytest.raises(ValueError):
            ExperimentSpec("xy_distance", trials=0)
        with pytest.raises(ValueError):
            ExperimentSpec("xy_distance", params={"bogus": 1})

    def test_trial_streams(self):
        a = [r.random() for r in trial_rngs(1, "xy_distance", 3)]
        b = [r.random() for r in trial_rngs(1, "xy_distance", 3)]
        c = [r.random() for r in trial_rngs(1, "xy_distance", 4)]
        d = [r.random() for r in trial_rngs(1, "conditioning", 3)]
        assert a == b and a != c and a != d and len(set(a)) == 3


class TestStatistics:
    def test_means_skip_unfinished(self):
        recs = [record(iterations=10), record("stalled", 1000), record("diverged", 5),
                record("max_iters", 7), record(iterations=20)]
        assert mean_iterations(recs) == 15
        assert np.isnan(mean_iterations([record("stalled")]))

    def test_binned_fit_line(self):
        x = np.repeat(np.arange(10) * 0.1 + 0.05, 7)
        y = 3.0 * x + 2.0
        fit = binned_fit(x, y)
        assert fit["slope"] == pytest.approx(3.0) and fit["intercept"] == pytest.approx(2.0)
        assert fit["r2"] == pytest.approx(1.0)
        assert fit["bins_used"] == 10 and all(b["count"] == 7 for b in fit["bins"])

    def test_binned_fit_caps_and_widths(self):
        rng = np.random.default_rng(0)
        x = rng.uniform(0, 1, 5000)
        fit = binned_fit(x, rng.standard_normal(5000), width=0.1, per_bin=100)
        assert all(b["count"] <= 100 for b in fit["bins"])
        assert all(b["hi"] - b["lo"] == pytest.approx(0.1) for b in fit["bins"])
        assert {"samples", "slope", "intercept", "r2"} <= set(fit)

    def test_first_samples_per_bin(self):
        x = np.full(150, 0.05)
        y = np.r_[np.zeros(100), np.ones(50)]
        assert binned_fit(x, y, min_count=1)["bins"][0]["mean"] == 0.0

    def test_csv_round_trip(self):
        recs = [record(), record("stalled", 3)]
        recs[1].wall_time = 0.25
        text = records_to_csv(recs)
        back = read_records(text)
        assert back[1].wall_time == 0.25 and np.isnan(back[0].wall_time)
        assert back[1].status == "stalled" and back[1].iterations == 3


@pytest.mark.parametrize("study", STUDIES)
def test_every_study_runs_and_reproduces(study, tmp_path):
    trials = 40 if study in ("xy_distance", "initial_guess", "conditioning") else 2
    spec = lambda out, workers: ExperimentSpec(study, trials=trials, seed=5, workers=workers,
                                               out_dir=out, params=SMALL[study])
    a = run_experiment(spec(tmp_path / "a", 1))
    b = run_experiment(spec(tmp_path / "b", 3))
    csv_a = (tmp_path / "a" / f"{study}.csv").read_bytes()
    csv_b = (tmp_path / "b" / f"{study}.csv").read_bytes()
    if study == "wall_clock":
        strip = lambda text: [r.iterations for r in read_records(text.decode())]
        assert strip(csv_a) == strip(csv_b)
    else:
        assert csv_a == csv_b
    summary = json.loads((tmp_path / "a" / f"{study}_summary.json").read_text())
    assert "summary" in summary
    assert all(r.status in ("converged", "stalled", "diverged", "max_iters") for r in a.records)
    assert isinstance(check_result(a), list)


def test_lit_examples_table(tmp_path):
    res = run_experiment(ExperimentSpec("lit_examples", trials=3, seed=0, out_dir=tmp_path,
                                        params={"targets": ["H1"], "methods": ["NM", "GDP*"]}))
    table = (tmp_path / "lit_examples_table.csv").read_text().splitlines()
    assert table[0] == "target,NM,GDP*"
    assert table[1].startswith('H1,"162, 0"')
    assert table1_csv(res.summary).splitlines() == table


def test_sequential_single_row_equals_batch():
    res = run_experiment(ExperimentSpec("sequential_vs_batch", trials=2, params={"sizes": [1]}))
    row = res.summary["sizes"][1]
    assert row["row_mean"] == row["batch_mean"] and row["worker_invariant"]


def test_initial_guess_zero_distance():
    res = run_experiment(ExperimentSpec("initial_guess", trials=3, params={"max_iters": 5000}))
    assert res.records[0].u_minus_u0 == 0 and res.records[0].iterations == 0


def test_example_count_consistent_data():
    res = run_experiment(ExperimentSpec("example_count_sweep", trials=2,
                                        params={"n": 4, "ms": [8], "methods": ["GDP*"]}))
    # overconstrained but consistent examples are solved exactly
    assert all(r.status == "converged" for r in res.records)


def test_check_bands_flag_failures():
    from qsynth.harness import ExperimentResult
    bad = ExperimentResult("xy_distance", [], {}, {"r2": 0.8, "slope": 1.0})
    assert check_result(bad) == [("xy R2 <= 0.5", False, "R2=0.800")]
