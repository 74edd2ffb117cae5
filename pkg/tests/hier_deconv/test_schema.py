import pytest

from hier_deconv import __version__
from hier_deconv import models
from hier_deconv import schema
from hier_deconv.errors import ConfigurationError


def instance(**kwargs):
    data = dict(mu=64, n=2, s=1, sigma=1)
    data.update(kwargs)
    return data


def test_deconvolve_defaults():
    config = schema.load_run_config('deconvolve', instance())
    params = config.params

    assert config.command == 'deconvolve'
    assert params['seed'] == 0
    assert params['m'] is None
    assert params['u_kind'] == 'gaussian'
    assert params['a_kind'] == 'identity'
    assert params['threads'] is None and params['out'] is None
    assert params['solver'] == models.SolverConfig()


def test_solver_overrides():
    config = schema.load_run_config('deconvolve', instance(
        solver={'max_outer_iters': 30, 'cg_tol': 1e-5}))
    solver = config.params['solver']
    assert solver.max_outer_iters == 30
    assert solver.cg_tol == 1e-5
    assert solver.cg_max_iters == 100


@pytest.mark.parametrize('data', [
    instance(colour='red'),
    instance(s=65),
    instance(sigma=3),
    instance(m=3),
    instance(mu=0),
    instance(mu=1.5),
    instance(seed=-1),
    instance(u_kind='cauchy'),
    instance(solver={'max_outer_iters': 0}),
    instance(solver={'restarts': 3}),
    dict(mu=64, n=2, s=1),
])
def test_deconvolve_rejects(data):
    with pytest.raises(ConfigurationError):
        schema.load_run_config('deconvolve', data)


def test_compressed_instance():
    config = schema.load_run_config('deconvolve', instance(
        n=5, m=3, a_kind='gaussian'))
    assert config.params['m'] == 3


def test_error_lists_keys():
    with pytest.raises(ConfigurationError) as exc:
        schema.load_run_config('deconvolve', instance(colour='red', mu='abc'))
    assert 'colour' in str(exc.value)
    assert 'mu' in str(exc.value)


def test_unknown_command():
    with pytest.raises(ConfigurationError):
        schema.load_run_config('transmogrify', {})


def test_demix():
    config = schema.load_run_config('demix', instance(N=8, S=2, M=12))
    assert (config.params['N'], config.params['S']) == (8, 2)

    with pytest.raises(ConfigurationError):
        schema.load_run_config('demix', instance(N=2, S=3, M=4))
    with pytest.raises(ConfigurationError):
        schema.load_run_config('demix', instance(N=2, S=1))


def test_ripcheck_defaults():
    params = schema.load_run_config('ripcheck', instance(mu=6, n=3)).params
    assert params['operator'] == 'C'
    assert params['trials'] == 1000
    assert params['exact'] is False

    with pytest.raises(ConfigurationError):
        schema.load_run_config('ripcheck', instance(operator='M'))


def test_phase_preset_fills_grid():
    params = schema.load_run_config('phase', {'preset': 'desk'}).params
    assert params['n_values'] == [50]
    assert params['s_values'] == [1, 2, 3, 4]
    assert params['trials_per_point'] == 30
    assert params['timings'] is False


def test_phase_explicit_keys_beat_preset():
    params = schema.load_run_config('phase', {
        'preset': 'desk', 's_values': [1, 2], 'trials_per_point': 5,
        'seed': 3}).params
    assert params['s_values'] == [1, 2]
    assert params['trials_per_point'] == 5

    grid = schema.grid_from_params(params)
    assert grid == models.ExperimentGrid.from_preset(
        'desk', s_values=[1, 2], trials_per_point=5, base_seed=3)


@pytest.mark.parametrize('data', [
    {'preset': 'huge'},
    {'n_values': [50], 'sigma_values': [5], 's_values': [1]},
    {'preset': 'desk', 'sigma_values': [60]},
    {'preset': 'desk', 'mu_values': []},
    {'preset': 'desk', 'trials_per_point': 0},
])
def test_phase_rejects(data):
    with pytest.raises(ConfigurationError):
        schema.load_run_config('phase', data)


def test_fit():
    params = schema.load_run_config('fit', {'table': 'table.csv'}).params
    assert params['a_values'] == [1.0, 2.0]
    assert params['c_grid'] is None

    with pytest.raises(ConfigurationError):
        schema.load_run_config('fit', {'table': 't.csv', 'a_values': []})
    with pytest.raises(ConfigurationError):
        schema.load_run_config('fit', {'table': 't.csv', 'c_grid': [0.0]})
    with pytest.raises(ConfigurationError):
        schema.load_run_config('fit', {})


def test_dump_and_load_agree():
    config = schema.load_run_config('phase', {'preset': 'desk', 'seed': 4})
    dumped = schema.dump_run_config(config)
    assert dumped['solver']['max_outer_iters'] == 25
    assert schema.load_run_config('phase', dumped) == config


def test_config_hash():
    base = schema.load_run_config('deconvolve', instance())
    same = schema.load_run_config('deconvolve', instance(threads=4,
                                                         out='x.json',
                                                         verbose=2))
    other = schema.load_run_config('deconvolve', instance(seed=1))

    digest = schema.config_hash(base)
    assert len(digest) == 64
    assert digest == schema.config_hash(same)
    assert digest != schema.config_hash(other)

    ripcheck = schema.load_run_config('ripcheck', instance())
    assert schema.config_hash(ripcheck) != digest


def test_provenance():
    config = schema.load_run_config('deconvolve', instance(seed=9))
    meta = schema.provenance(config)
    assert meta['tool'] == 'hier_deconv'
    assert meta['version'] == __version__
    assert meta['command'] == 'deconvolve'
    assert meta['base_seed'] == 9
    assert meta['config_hash'] == schema.config_hash(config)


def test_phase_row_from_strings():
    row = schema.PhaseRowSchema().load({
        'n': '50', 'mu': '20', 's': '1', 'sigma': '5', 'trials': '30',
        'successes': '9', 'prob': '0.3', 'mean_iters': '12.4',
        'mean_ms': ''})
    assert row == models.PhaseRow(n=50, mu=20, s=1, sigma=5, trials=30,
                                  successes=9, mean_iters=12.4)


def test_phase_row_dump():
    row = models.PhaseRow(n=50, mu=20, s=1, sigma=5, trials=30, successes=9)
    data = schema.PhaseRowSchema().dump(row)
    assert list(data) == ['n', 'mu', 's', 'sigma', 'trials', 'successes',
                          'prob', 'mean_iters', 'mean_ms']
    assert data['prob'] == pytest.approx(0.3)
    assert data['mean_ms'] is None


def test_logistic_fit_schema():
    fit = schema.LogisticFitSchema().load({
        'a': 1, 'c_a': 2.5, 'intercept': -3, 'slope': 1.5, 'loss': 0.2})
    assert isinstance(fit, models.LogisticFit)
    assert fit.separated is False
    assert fit.slope_se is None
    assert schema.LogisticFitSchema().dump(fit)['c_a'] == 2.5


def test_solve_result_schema():
    support = models.HierSupport([(0, 1), (2, 0)], (3, 2))
    estimate = models.HierSignal([[0, 1.5], [0, 0], [-2.0, 0]])
    result = models.SolveResult(estimate, support, outer_iters=3,
                                converged=True, residuals=[1.0, 0.1, 0.0])

    data = schema.SolveResultSchema().dump(result)
    assert data == {'support': [[0, 1], [2, 0]],
                    'values': [1.5, -2.0],
                    'outer_iters': 3,
                    'converged': True,
                    'residuals': [1.0, 0.1, 0.0]}


def test_rip_estimate_schema():
    estimate = models.RipEstimate(models.SparsityPattern(1, 2), trials=10,
                                  delta_lower=0.25, exact=0.5, seed=3)
    data = schema.RipEstimateSchema().dump(estimate)
    assert data['pattern'] == {'S': None, 's': 1, 'sigma': 2}
    assert data['exact'] == 0.5
