"""
Phase transition experiments and the logistic scaling fit.

Every trial of a grid point ``(n, mu, s, sigma)`` draws its dictionary and
ground truth from its own seed ``trial_seed(base_seed, n, mu, s, sigma, t)``,
so a trial can be reproduced in isolation and tables do not depend on the
order or the number of threads trials run on.

The scaling statistic ``lambda_a = mu / (s^a sigma ln(n) + C_a s ln(mu))``
is compared for a = 1 and a = 2 by fitting an unregularized logistic model
(intercept and slope) to the per-trial outcomes, with C_a chosen from a grid.
"""

import asyncio
import csv
import json
import logging
import math
import time
from collections import namedtuple
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from typing import Dict
from typing import List
from typing import Optional
from typing import Sequence
from typing import TextIO
from typing import Tuple
from typing import Union

import numpy as np
from marshmallow import ValidationError
from sklearn.isotonic import IsotonicRegression

from hier_deconv import schema
from hier_deconv.ensembles import DICTIONARY_STREAM
from hier_deconv.ensembles import TRUTH_STREAM
from hier_deconv.ensembles import derive_seed
from hier_deconv.ensembles import gen_dictionary
from hier_deconv.ensembles import gen_ground_truth
from hier_deconv.errors import ConfigurationError
from hier_deconv.errors import NonFiniteError
from hier_deconv.hihtp_solver import hihtp
from hier_deconv.hihtp_solver import is_success
from hier_deconv.lifted_ops import COperator
from hier_deconv.models import EnsembleConfig
from hier_deconv.models import ExperimentGrid
from hier_deconv.models import LogisticFit
from hier_deconv.models import PhaseRow
from hier_deconv.models import PhaseTable
from hier_deconv.models import SparsityPattern


__all__ = [
    'PRESETS',
    'TrialOutcome',
    'trial_seed',
    'run_trial',
    'run_phase_diagram',
    'lambda_value',
    'default_c_grid',
    'fit_lambda_scaling',
    'transition_mu',
    'monotonicity_violations',
    'write_phase_table',
    'read_phase_table',
    'write_fits',
    'read_fits',
    'write_lambda_outcomes',
]

logger = logging.getLogger(__name__)

CSV_HEADER = ['n', 'mu', 's', 'sigma', 'trials', 'successes', 'prob',
              'mean_iters', 'mean_ms']

# Newton iterations of the logistic fit
_NEWTON_TOL = 1e-10
_NEWTON_MAX_ITERS = 100
_PARAM_CAP = 1e6

# |intercept + slope * lambda| reached at every point of a separated fit
_SEPARATION_MARGIN = 25.0

TrialOutcome = namedtuple('TrialOutcome', ['point',
                                           'trial',
                                           'success',
                                           'rel_error',
                                           'outer_iters',
                                           'wall_ms'])


PRESETS = ExperimentGrid.PRESETS


def trial_seed(base_seed: int, n: int, mu: int, s: int, sigma: int,
               t: int) -> int:
    """
    The seed of trial ``t`` at grid point ``(n, mu, s, sigma)``
    """
    return derive_seed(base_seed, n, mu, s, sigma, t)


def run_trial(grid: ExperimentGrid,
              point: Tuple[int, int, int, int],
              t: int,
              timings: bool = False) -> TrialOutcome:
    """
    Draw, measure and recover one instance. Non-finite solver failures
    count as unsuccessful trials.
    """
    n, mu, s, sigma = point
    seed = trial_seed(grid.base_seed, n, mu, s, sigma, t)
    start = time.perf_counter() if timings else None

    cfg = EnsembleConfig(mu=mu, n=n, m=n, u_kind=grid.u_kind,
                         a_kind=grid.a_kind,
                         seed=derive_seed(seed, DICTIONARY_STREAM))
    op = COperator(gen_dictionary(cfg))
    truth = gen_ground_truth(mu, n, s, sigma,
                             derive_seed(seed, TRUTH_STREAM)).lifted

    try:
        result = hihtp(op, op.apply(truth), SparsityPattern(s, sigma),
                       grid.solver)
    except NonFiniteError as err:
        logger.warning('Trial {} at {} failed: {}'.format(t, point, err))
        return TrialOutcome(point, t, False, math.inf, 0, None)

    wall_ms = None
    if timings:
        wall_ms = (time.perf_counter() - start) * 1000.0

    return TrialOutcome(point=point,
                        trial=t,
                        success=is_success(result, truth),
                        rel_error=result.relative_error(truth),
                        outer_iters=result.outer_iters,
                        wall_ms=wall_ms)


def _aggregate(point, outcomes: Sequence[TrialOutcome]) -> PhaseRow:
    n, mu, s, sigma = point
    times = [o.wall_ms for o in outcomes if o.wall_ms is not None]
    return PhaseRow(n=n, mu=mu, s=s, sigma=sigma,
                    trials=len(outcomes),
                    successes=sum(1 for o in outcomes if o.success),
                    mean_iters=float(np.mean([o.outer_iters
                                              for o in outcomes])),
                    mean_ms=float(np.mean(times)) if times else None)


async def _run_points(grid: ExperimentGrid, threads: int,
                      timings: bool) -> List[PhaseRow]:
    loop = asyncio.get_running_loop()
    points = grid.points()
    rows = []

    with ThreadPoolExecutor(max_workers=threads) as pool:
        pending = [[loop.run_in_executor(pool, run_trial, grid, point, t,
                                         timings)
                    for t in range(grid.trials_per_point)]
                   for point in points]

        for i, (point, futures) in enumerate(zip(points, pending)):
            rows.append(_aggregate(point, await asyncio.gather(*futures)))
            logger.info('point {}/{} {} done'.format(i + 1, len(points),
                                                     point))
    return rows


def run_phase_diagram(grid: ExperimentGrid,
                      threads: int = 1,
                      timings: bool = False) -> PhaseTable:
    """
    Estimate the recovery probability at every point of ``grid``.

    :param grid: Experiment grid
    :param threads: Number of worker threads
    :param timings: Record mean wall time per trial. Timed tables are not
                    reproducible bit for bit.
    :return: One row per grid point, in canonical grid order
    """
    if threads < 1:
        raise ConfigurationError('threads must be >= 1')

    if threads == 1:
        rows = []
        points = grid.points()
        for i, point in enumerate(points):
            outcomes = [run_trial(grid, point, t, timings)
                        for t in range(grid.trials_per_point)]
            rows.append(_aggregate(point, outcomes))
            logger.info('point {}/{} {} done'.format(i + 1, len(points),
                                                     point))
        return PhaseTable(rows)

    return PhaseTable(asyncio.run(_run_points(grid, threads, timings)))


def lambda_value(mu: float, s: float, sigma: float, n: float, a: float,
                 c_a: float) -> float:
    """
    ``mu / (s^a sigma ln(n) + c_a s ln(mu))``

    :raises: :class:`~hier_deconv.errors.ConfigurationError` on
             non-positive arguments (``c_a`` may be zero)
    """
    if min(mu, s, sigma, n, a) <= 0 or c_a < 0:
        raise ConfigurationError('lambda_a needs positive arguments')
    denominator = s ** a * sigma * math.log(n) + c_a * s * math.log(mu)
    if denominator <= 0:
        raise ConfigurationError('lambda_a is undefined for n = mu = 1')
    return mu / denominator


def default_c_grid() -> np.ndarray:
    """
    40 logarithmically spaced values in [0.1, 100]
    """
    return np.geomspace(0.1, 100.0, 40)


def _loss(z: np.ndarray, successes: np.ndarray,
          failures: np.ndarray) -> float:
    nll = successes * np.logaddexp(0.0, -z) + failures * np.logaddexp(0.0, z)
    return float(nll.sum() / (successes.sum() + failures.sum()))


def _separated_params(x, successes, failures) -> Optional[Tuple[float,
                                                                float]]:
    if np.any((successes > 0) & (failures > 0)):
        return None

    x_s, x_f = x[successes > 0], x[failures > 0]
    if not x_f.size:
        return _SEPARATION_MARGIN, 0.0
    if not x_s.size:
        return -_SEPARATION_MARGIN, 0.0

    if x_f.max() < x_s.min():
        low, high, sign = x_f.max(), x_s.min(), 1.0
    elif x_s.max() < x_f.min():
        low, high, sign = x_s.max(), x_f.min(), -1.0
    else:
        return None

    slope = sign * 2.0 * _SEPARATION_MARGIN / (high - low)
    return -slope * (low + high) / 2.0, slope


def _fit_logistic(x: np.ndarray, successes: np.ndarray,
                  failures: np.ndarray, a: float, c_a: float) -> LogisticFit:
    """
    Maximum likelihood logistic fit by Newton's method with step halving.
    """
    capped = _separated_params(x, successes, failures)
    if capped is not None:
        intercept, slope = capped
        return LogisticFit(a=a, c_a=c_a, intercept=intercept, slope=slope,
                           loss=_loss(intercept + slope * x, successes,
                                      failures),
                           separated=True)

    if np.unique(x).size < 2:
        # a single lambda: only the intercept is identifiable
        intercept = float(np.log(successes.sum() / failures.sum()))
        return LogisticFit(a=a, c_a=c_a, intercept=intercept, slope=0.0,
                           loss=_loss(np.full(x.shape, intercept),
                                      successes, failures))

    X = np.column_stack([np.ones_like(x), x])
    total = successes + failures
    count = total.sum()
    theta = np.zeros(2)
    loss = _loss(X @ theta, successes, failures)
    converged = separated = False

    def hessian(theta):
        prob = np.exp(-np.logaddexp(0.0, -(X @ theta)))
        return prob, X.T @ (X * (total * prob * (1.0 - prob))[:, None])

    for _ in range(_NEWTON_MAX_ITERS):
        prob, hess = hessian(theta)
        grad = X.T @ (successes - total * prob)
        if np.linalg.norm(grad) / count < _NEWTON_TOL:
            converged = True
            break

        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            break

        t, improved = 1.0, False
        while t > 1e-8:
            candidate = theta + t * step
            new_loss = _loss(X @ candidate, successes, failures)
            if new_loss <= loss:
                improved = True
                break
            t /= 2.0
        if not improved:
            # no descent left at working precision
            converged = True
            break
        theta, loss = candidate, new_loss

        if np.abs(theta).max() > _PARAM_CAP:
            separated = True
            break

    intercept_se = slope_se = None
    if separated:
        logger.warning('Logistic fit for a={}, C_a={} diverged; outcomes '
                       'are (quasi-)separated'.format(a, c_a))
    elif not converged:
        logger.warning('Logistic fit for a={}, C_a={} stopped before '
                       'converging'.format(a, c_a))
    else:
        try:
            cov = np.linalg.inv(hessian(theta)[1])
            intercept_se, slope_se = (float(v)
                                      for v in np.sqrt(np.diag(cov)))
        except np.linalg.LinAlgError:
            logger.warning('Singular information matrix for a={}, '
                           'C_a={}'.format(a, c_a))

    return LogisticFit(a=a, c_a=c_a, intercept=float(theta[0]),
                       slope=float(theta[1]), loss=loss, separated=separated,
                       intercept_se=intercept_se, slope_se=slope_se)


def fit_lambda_scaling(table: PhaseTable, a: float,
                       c_a_grid: Sequence[float] = None) -> LogisticFit:
    """
    Fit ``P(success) = 1 / (1 + exp(-(alpha + beta * lambda_a)))`` to the
    per-trial outcomes of ``table`` for every C_a in ``c_a_grid`` and return
    the fit with the smallest mean logistic loss.

    :param table: Phase table (per-point counts stand for the trials)
    :param a: Exponent of s
    :param c_a_grid: Candidate C_a values (see :func:`default_c_grid`)
    """
    if not len(table):
        raise ConfigurationError('Cannot fit an empty table')
    c_a_grid = default_c_grid() if c_a_grid is None else c_a_grid
    if not len(c_a_grid) or min(c_a_grid) <= 0:
        raise ConfigurationError('C_a candidates must be positive')

    successes = np.array([r.successes for r in table], dtype=np.float64)
    failures = np.array([r.trials - r.successes for r in table],
                        dtype=np.float64)

    best = None
    for c_a in c_a_grid:
        x = np.array([lambda_value(r.mu, r.s, r.sigma, r.n, a, c_a)
                      for r in table])
        fit = _fit_logistic(x, successes, failures, a, float(c_a))
        if best is None or fit.loss < best.loss:
            best = fit

    logger.info('Best fit {}'.format(best))
    return best


def transition_mu(table: PhaseTable, n: int, s: int, sigma: int,
                  level: float = 0.5) -> Optional[int]:
    """
    The smallest mu at which the success probability reaches ``level``, or
    None when it never does
    """
    rows = sorted(table.select(n=n, s=s, sigma=sigma), key=lambda r: r.mu)
    return next((r.mu for r in rows if r.prob >= level), None)


def monotonicity_violations(table: PhaseTable,
                            z: float = 3.0) -> List[Tuple[PhaseRow, float]]:
    """
    Rows whose success probability sits more than ``z`` binomial standard
    errors away from the isotonic (non-decreasing in mu) fit of its
    ``(n, s, sigma)`` series.

    :return: ``(row, fitted probability)`` pairs, in series then mu order
    """
    series: Dict[tuple, List[PhaseRow]] = {}
    for row in table:
        series.setdefault((row.n, row.s, row.sigma), []).append(row)

    violations = []
    for key in sorted(series):
        rows = sorted(series[key], key=lambda r: r.mu)
        mus = [r.mu for r in rows]
        fitted = IsotonicRegression(increasing=True).fit(
            mus, [r.prob for r in rows],
            sample_weight=[r.trials for r in rows]).predict(mus)
        for row, p in zip(rows, fitted):
            se = math.sqrt(max(p * (1.0 - p), 0.0) / row.trials)
            if abs(row.prob - p) > z * se + 1e-12:
                violations.append((row, float(p)))
    return violations


def _meta_lines(meta: Optional[dict]) -> List[str]:
    return ['# {}={}\n'.format(k, meta[k]) for k in sorted(meta or {})]


@contextmanager
def _output(target: Union[str, TextIO]):
    if isinstance(target, str):
        with open(target, 'w', encoding='utf-8', newline='') as f:
            yield f
    else:
        yield target


def write_phase_table(table: PhaseTable, target: Union[str, TextIO],
                      meta: dict = None):
    """
    Write ``table`` as UTF-8 CSV with LF line endings, preceded by
    ``# key=value`` metadata lines.

    :param table: The table
    :param target: Output path or open text stream
    :param meta: Provenance metadata
    """
    rows = schema.PhaseRowSchema(many=True).dump(table.rows)
    with _output(target) as f:
        f.writelines(_meta_lines(meta))
        writer = csv.DictWriter(f, fieldnames=CSV_HEADER,
                                lineterminator='\n')
        writer.writeheader()
        for row in rows:
            writer.writerow({k: '' if v is None else v
                             for k, v in row.items()})


def read_phase_table(path: str) -> PhaseTable:
    """
    Read a table written by :func:`write_phase_table`

    :raises: :class:`~hier_deconv.errors.ConfigurationError` on malformed
             rows
    """
    with open(path, encoding='utf-8', newline='') as f:
        lines = [line for line in f if not line.startswith('#')]
    try:
        rows = schema.PhaseRowSchema(many=True).load(
            list(csv.DictReader(lines)))
    except ValidationError as e:
        raise ConfigurationError('Malformed phase table {}: {}'.format(
            path, e.messages))
    return PhaseTable(rows)


def write_fits(fits: Sequence[LogisticFit], target: Union[str, TextIO],
               meta: dict = None):
    """
    Write logistic fits as a JSON document ``{"meta": ..., "result": [...]}``
    """
    doc = {'meta': meta or {},
           'result': schema.LogisticFitSchema(many=True).dump(fits)}
    with _output(target) as f:
        f.write(json.dumps(doc, indent=2, sort_keys=True) + '\n')


def read_fits(path: str) -> List[LogisticFit]:
    with open(path, encoding='utf-8') as f:
        doc = json.load(f)
    try:
        return schema.LogisticFitSchema(many=True).load(doc['result'])
    except (KeyError, TypeError, ValidationError) as e:
        raise ConfigurationError('Malformed fit document {}: {}'.format(
            path, e))


def write_lambda_outcomes(table: PhaseTable, fit: LogisticFit,
                          target: Union[str, TextIO],
                          max_lambda: float = None, meta: dict = None):
    """
    Write the long-format ``lambda,outcome`` pairs of every trial for
    external plotting, using the exponent and C_a of ``fit``. Points with
    lambda above ``max_lambda`` are left out.
    """
    with _output(target) as f:
        f.writelines(_meta_lines(meta))
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(['lambda', 'outcome'])
        for row in table:
            lam = lambda_value(row.mu, row.s, row.sigma, row.n, fit.a,
                               fit.c_a)
            if max_lambda is not None and lam > max_lambda:
                continue
            writer.writerows([[lam, 1]] * row.successes)
            writer.writerows([[lam, 0]] * (row.trials - row.successes))
