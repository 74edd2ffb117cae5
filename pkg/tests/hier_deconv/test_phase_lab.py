import io
import json
import math
import os

import numpy as np
import pytest

from hier_deconv import phase_lab
from hier_deconv.errors import ConfigurationError
from hier_deconv.models import ExperimentGrid
from hier_deconv.models import LogisticFit
from hier_deconv.models import PhaseRow
from hier_deconv.models import PhaseTable


@pytest.fixture
def table(phase_table_path):
    return phase_lab.read_phase_table(phase_table_path)


def tiny_grid(**kwargs):
    params = dict(n_values=[2], sigma_values=[1], s_values=[1],
                  mu_values=[64], trials_per_point=20)
    params.update(kwargs)
    return ExperimentGrid(**params)


def test_lambda_value_example():
    lam = phase_lab.lambda_value(100, 2, 5, 50, a=1, c_a=0)
    assert lam == pytest.approx(100 / (10 * math.log(50)))
    assert lam == pytest.approx(2.5565, abs=1e-3)


def test_lambda_value_ignores_exponent_for_single_blocks():
    for c_a in (0.0, 0.5, 7.0):
        assert phase_lab.lambda_value(80, 1, 5, 50, 1, c_a) == \
            phase_lab.lambda_value(80, 1, 5, 50, 2, c_a)


def test_lambda_value_doubles_with_mu():
    lam = phase_lab.lambda_value(60, 3, 4, 50, 2, 0.0)
    assert phase_lab.lambda_value(120, 3, 4, 50, 2, 0.0) == \
        pytest.approx(2 * lam)


@pytest.mark.parametrize('args', [
    (0, 1, 1, 50, 1, 1.0),
    (10, 1, 1, 50, 0, 1.0),
    (10, 1, 1, 50, 1, -1.0),
    (1, 1, 1, 1, 1, 1.0),
])
def test_lambda_value_rejects(args):
    with pytest.raises(ConfigurationError):
        phase_lab.lambda_value(*args)


def test_default_c_grid():
    grid = phase_lab.default_c_grid()
    assert len(grid) == 40
    assert grid[0] == pytest.approx(0.1) and grid[-1] == pytest.approx(100)
    assert np.allclose(np.diff(np.log(grid)), np.log(1000) / 39)


def test_trial_seed():
    seed = phase_lab.trial_seed(0, 50, 10, 1, 5, 3)
    assert seed == phase_lab.trial_seed(0, 50, 10, 1, 5, 3)
    assert seed != phase_lab.trial_seed(0, 50, 10, 1, 5, 4)
    assert seed != phase_lab.trial_seed(1, 50, 10, 1, 5, 3)


def test_run_trial():
    grid = tiny_grid()
    outcome = phase_lab.run_trial(grid, (2, 64, 1, 1), 0)
    assert outcome.point == (2, 64, 1, 1)
    assert outcome.trial == 0
    assert outcome.outer_iters >= 1
    assert outcome.wall_ms is None
    assert outcome.success == (outcome.rel_error < 1e-6)
    assert outcome == phase_lab.run_trial(grid, (2, 64, 1, 1), 0)


def test_generous_point_recovers():
    table = phase_lab.run_phase_diagram(tiny_grid())
    assert len(table) == 1
    row = table.rows[0]
    assert row.point == (2, 64, 1, 1)
    assert row.trials == 20
    assert row.prob >= 0.9
    assert row.mean_ms is None


def test_threads_do_not_change_results():
    grid = tiny_grid(mu_values=[16, 32], trials_per_point=6)
    single = phase_lab.run_phase_diagram(grid, threads=1)
    threaded = phase_lab.run_phase_diagram(grid, threads=3)
    assert single == threaded
    assert [r.mu for r in threaded] == [16, 32]


def test_timings():
    grid = tiny_grid(trials_per_point=2)
    table = phase_lab.run_phase_diagram(grid, timings=True)
    assert table.rows[0].mean_ms >= 0.0


def test_run_rejects_threads():
    with pytest.raises(ConfigurationError):
        phase_lab.run_phase_diagram(tiny_grid(), threads=0)


def test_read_fixture(table):
    assert len(table) == 8
    row = table.rows[1]
    assert row.point == (50, 20, 1, 5)
    assert row.successes == 9
    assert row.prob == pytest.approx(0.3)
    assert row.mean_iters == pytest.approx(12.4)
    assert row.mean_ms is None


def test_phase_table_round_trip(table, tmpdir):
    rows = list(table)
    rows[0] = PhaseRow(n=50, mu=10, s=1, sigma=5, trials=30, successes=0,
                       mean_iters=25.0, mean_ms=1.25)
    table = PhaseTable(rows)
    path = str(tmpdir.join('table.csv'))
    phase_lab.write_phase_table(table, path, meta={'tool': 'hier_deconv',
                                                   'base_seed': 0})

    with open(path, 'rb') as f:
        raw = f.read()
    assert b'\r' not in raw
    lines = raw.decode('utf-8').split('\n')
    assert lines[:2] == ['# base_seed=0', '# tool=hier_deconv']
    assert lines[2] == ','.join(phase_lab.CSV_HEADER)
    assert lines[3] == '50,10,1,5,30,0,0.0,25.0,1.25'
    assert lines[4].endswith(',')

    assert phase_lab.read_phase_table(path) == table


def test_write_phase_table_to_stream(table):
    out = io.StringIO()
    phase_lab.write_phase_table(table, out)
    assert out.getvalue().startswith('n,mu,s,sigma,trials,')
    assert len(out.getvalue().splitlines()) == 9


def test_read_malformed_table(tmpdir):
    path = tmpdir.join('bad.csv')
    path.write('n,mu,s,sigma,trials,successes\n50,x,1,5,30,3\n')
    with pytest.raises(ConfigurationError):
        phase_lab.read_phase_table(str(path))


def test_transition_mu(table):
    assert phase_lab.transition_mu(table, 50, 1, 5) == 30
    assert phase_lab.transition_mu(table, 50, 2, 5) == 40
    assert phase_lab.transition_mu(table, 50, 1, 5, level=0.25) == 20
    assert phase_lab.transition_mu(table, 50, 2, 5, level=0.99) is None
    assert phase_lab.transition_mu(table, 50, 3, 5) is None


def test_monotonicity(table):
    assert phase_lab.monotonicity_violations(table) == []

    rows = [PhaseRow(n=50, mu=mu, s=1, sigma=5, trials=30, successes=k)
            for mu, k in ((10, 29), (20, 3), (30, 30))]
    violations = phase_lab.monotonicity_violations(PhaseTable(rows))
    assert [row.mu for row, _ in violations] == [10, 20]
    assert all(p == pytest.approx(32 / 60) for _, p in violations)

    noisy = [PhaseRow(n=50, mu=mu, s=1, sigma=5, trials=30, successes=k)
             for mu, k in ((10, 15), (20, 13))]
    assert not phase_lab.monotonicity_violations(PhaseTable(noisy))


def test_monotonicity_catches_gradual_decline():
    # every single step is within three standard errors
    rows = [PhaseRow(n=50, mu=mu, s=1, sigma=5, trials=30, successes=k)
            for mu, k in zip(range(10, 61, 10), (30, 27, 24, 21, 18, 15))]
    violations = phase_lab.monotonicity_violations(PhaseTable(rows))
    assert [row.mu for row, _ in violations] == [10, 60]
    assert all(p == pytest.approx(0.75) for _, p in violations)


def logistic_table(intercept, slope, trials=1000):
    rows = []
    for mu in range(10, 151, 10):
        lam = phase_lab.lambda_value(mu, 1, 5, 50, 1, 1.0)
        p = 1.0 / (1.0 + math.exp(-(intercept + slope * lam)))
        rows.append(PhaseRow(n=50, mu=mu, s=1, sigma=5, trials=trials,
                             successes=int(round(trials * p))))
    return PhaseTable(rows)


def test_fit_recovers_logistic_parameters():
    fit = phase_lab.fit_lambda_scaling(logistic_table(-4.0, 2.0), a=1,
                                       c_a_grid=[1.0])
    assert not fit.separated
    assert fit.c_a == 1.0
    assert abs(fit.intercept + 4.0) <= 3 * fit.intercept_se
    assert abs(fit.slope - 2.0) <= 3 * fit.slope_se
    assert 0.0 < fit.loss < math.log(2)


def test_fit_stopped_early_is_not_separated(monkeypatch, caplog):
    monkeypatch.setattr(phase_lab, '_NEWTON_MAX_ITERS', 1)
    fit = phase_lab.fit_lambda_scaling(logistic_table(-4.0, 2.0), a=1,
                                       c_a_grid=[1.0])
    assert not fit.separated
    assert fit.intercept_se is None and fit.slope_se is None
    assert fit.loss < math.log(2)
    assert 'stopped before converging' in caplog.text


def test_fit_separable_outcomes():
    rows = [PhaseRow(n=50, mu=mu, s=1, sigma=5, trials=30,
                     successes=0 if mu < 50 else 30)
            for mu in range(10, 101, 10)]
    fit = phase_lab.fit_lambda_scaling(PhaseTable(rows), a=1)
    assert fit.separated
    assert fit.slope > 0
    assert fit.loss < 0.01
    assert np.all(fit.predict([phase_lab.lambda_value(
        90, 1, 5, 50, 1, fit.c_a)]) > 0.99)


def test_fit_all_successes():
    rows = [PhaseRow(n=50, mu=mu, s=1, sigma=5, trials=10, successes=10)
            for mu in (20, 40)]
    fit = phase_lab.fit_lambda_scaling(PhaseTable(rows), a=2,
                                       c_a_grid=[1.0])
    assert fit.separated
    assert fit.slope == 0.0 and fit.intercept > 0
    assert fit.loss < 1e-6


def test_fit_single_lambda():
    rows = [PhaseRow(n=50, mu=40, s=1, sigma=5, trials=30, successes=12)]
    fit = phase_lab.fit_lambda_scaling(PhaseTable(rows), a=1,
                                       c_a_grid=[1.0])
    assert not fit.separated
    assert fit.slope == 0.0
    assert fit.intercept == pytest.approx(math.log(12 / 18))
    assert fit.predict(0.0) == pytest.approx(0.4)


def test_fit_exponent_is_irrelevant_for_single_blocks(table):
    rows = table.select(s=1)
    one = phase_lab.fit_lambda_scaling(rows, a=1)
    two = phase_lab.fit_lambda_scaling(rows, a=2)
    assert one.loss == pytest.approx(two.loss, abs=1e-12)


def test_fit_fixture(table):
    for a in (1, 2):
        fit = phase_lab.fit_lambda_scaling(table, a=a)
        assert fit.a == a
        assert 0.0 < fit.loss < math.log(2)
        assert fit.slope > 0


def test_fit_rejects(table):
    with pytest.raises(ConfigurationError):
        phase_lab.fit_lambda_scaling(PhaseTable([]), a=1)
    with pytest.raises(ConfigurationError):
        phase_lab.fit_lambda_scaling(table, a=1, c_a_grid=[])
    with pytest.raises(ConfigurationError):
        phase_lab.fit_lambda_scaling(table, a=1, c_a_grid=[0.0, 1.0])


def test_fits_round_trip(tmpdir):
    fits = [LogisticFit(a=1.0, c_a=2.0, intercept=-3.0, slope=1.5, loss=0.2,
                        intercept_se=0.3, slope_se=0.1),
            LogisticFit(a=2.0, c_a=0.5, intercept=25.0, slope=0.0, loss=0.0,
                        separated=True)]
    path = str(tmpdir.join('fits.json'))
    phase_lab.write_fits(fits, path, meta={'tool': 'hier_deconv'})

    with open(path) as f:
        doc = json.load(f)
    assert doc['meta'] == {'tool': 'hier_deconv'}
    assert len(doc['result']) == 2
    assert phase_lab.read_fits(path) == fits


def test_read_malformed_fits(tmpdir):
    path = tmpdir.join('fits.json')
    path.write('{"meta": {}}')
    with pytest.raises(ConfigurationError):
        phase_lab.read_fits(str(path))


def test_lambda_outcomes(table):
    fit = LogisticFit(a=1, c_a=1.0, intercept=0.0, slope=1.0, loss=0.5)
    out = io.StringIO()
    phase_lab.write_lambda_outcomes(table, fit, out, meta={'k': 'v'})
    lines = out.getvalue().splitlines()
    assert lines[:2] == ['# k=v', 'lambda,outcome']

    outcomes = [int(line.split(',')[1]) for line in lines[2:]]
    assert len(outcomes) == 8 * 30
    assert sum(outcomes) == 108


def test_lambda_outcomes_cutoff(table, tmpdir):
    fit = LogisticFit(a=1, c_a=1.0, intercept=0.0, slope=1.0, loss=0.5)
    cutoff = phase_lab.lambda_value(25, 1, 5, 50, 1, 1.0)
    path = str(tmpdir.join('outcomes.csv'))
    phase_lab.write_lambda_outcomes(table, fit, path, max_lambda=cutoff)

    with open(path) as f:
        lines = f.read().splitlines()[1:]
    lams = {float(line.split(',')[0]) for line in lines}
    assert all(lam <= cutoff for lam in lams)
    # mu in {10, 20} for s = 1 and every mu up to 40 for s = 2
    assert len(lines) == 2 * 30 + 4 * 30
    assert os.path.getsize(path) > 0
