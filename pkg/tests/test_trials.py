from __future__ import annotations

from cobt.trials import run_trials


def test_trials_deterministic_under_seed(learned, task_fixtures):
    fx = task_fixtures["drawer"]
    record = learned["drawer"].record
    kw = dict(n=3, base_seed=7, groups=fx.groups or None, max_ticks=12000)
    a = run_trials(record, fx.scene, **kw)
    b = run_trials(record, fx.scene, **kw)
    assert [t.to_json() for t in a.trials] == [t.to_json() for t in b.trials]


def test_success_rate_exact(learned, task_fixtures):
    fx = task_fixtures["pnp"]
    report = run_trials(
        learned["pnp"].record, fx.scene, n=4, base_seed=0, max_ticks=12000
    )
    assert report.successes == sum(t.success for t in report.trials)
    assert report.success_rate == report.successes / 4


def test_csv_rows(learned, task_fixtures, tmp_path):
    fx = task_fixtures["pnp"]
    report = run_trials(
        learned["pnp"].record, fx.scene, n=2, base_seed=3, max_ticks=12000
    )
    path = tmp_path / "trials.csv"
    report.save_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "trial,seed,success,ticks,retried_actions"
    assert len(lines) == 3
    assert lines[1].startswith("0,3,")
