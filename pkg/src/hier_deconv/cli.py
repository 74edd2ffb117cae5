"""
The ``hier-deconv`` command line tool.

Every subcommand reads an optional JSON configuration document
(``--config``), overlays the flags given on the command line, validates the
result and then runs. Outputs carry a provenance block (tool version, config
hash, base seed).

Exit codes: 0 ok, 1 usage or configuration error, 2 recovery failure
(``deconvolve`` and ``demix``), 3 numeric error or exceeded guard.
"""

import argparse
import json
import logging
import os
import sys
from typing import Sequence
from typing import TextIO

from hier_deconv import __version__
from hier_deconv import phase_lab
from hier_deconv import schema
from hier_deconv.ensembles import DICTIONARY_STREAM
from hier_deconv.ensembles import MIXING_STREAM
from hier_deconv.ensembles import TRUTH_STREAM
from hier_deconv.ensembles import derive_seed
from hier_deconv.ensembles import gen_demixing_truth
from hier_deconv.ensembles import gen_dictionary
from hier_deconv.ensembles import gen_ground_truth
from hier_deconv.ensembles import gen_mixing
from hier_deconv.errors import ConfigurationError
from hier_deconv.errors import GuardExceededError
from hier_deconv.errors import HierDeconvException
from hier_deconv.errors import NonFiniteError
from hier_deconv.hihtp_solver import hihtp
from hier_deconv.hihtp_solver import hihtp_three_level
from hier_deconv.hihtp_solver import is_success
from hier_deconv.lifted_ops import COperator
from hier_deconv.lifted_ops import DemixingOperator
from hier_deconv.lifted_ops import HOperator
from hier_deconv.models import EnsembleConfig
from hier_deconv.models import RunConfig
from hier_deconv.models import SparsityPattern
from hier_deconv.ripcheck import estimate_hirip_mc
from hier_deconv.ripcheck import exact_hirip_small


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RECOVERY_FAILED = 2
EXIT_NUMERIC = 3

SOLVER_FLAGS = ['max_outer_iters', 'outer_tol', 'cg_tol', 'cg_max_iters',
                'final_ls_tol', 'final_ls_max_iters']


class ArgumentParser(argparse.ArgumentParser):
    """
    Usage errors exit with status 1
    """
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, '{}: error: {}\n'.format(self.prog, message))


def _open_output(out: str = None) -> TextIO:
    if out is None:
        return sys.stdout
    return open(out, 'w', encoding='utf-8', newline='')


def _write_json(config: RunConfig, result: dict):
    doc = {'meta': schema.provenance(config), 'result': result}
    text = json.dumps(doc, indent=2, sort_keys=True) + '\n'
    out = config.params['out']
    if out is None:
        sys.stdout.write(text)
        return
    with open(out, 'w', encoding='utf-8') as f:
        f.write(text)


def _dictionary(params: dict):
    cfg = EnsembleConfig(mu=params['mu'], n=params['n'], m=params['m'],
                         u_kind=params['u_kind'], a_kind=params['a_kind'],
                         seed=derive_seed(params['seed'], DICTIONARY_STREAM))
    return gen_dictionary(cfg)


def cmd_deconvolve(config: RunConfig) -> int:
    """
    Draw a seeded instance, recover it and report the relative error
    """
    p = config.params
    op = COperator(_dictionary(p))
    truth = gen_ground_truth(p['mu'], p['n'], p['s'], p['sigma'],
                             derive_seed(p['seed'], TRUTH_STREAM))
    lifted = truth.lifted

    result = hihtp(op, op.apply(lifted), SparsityPattern(p['s'], p['sigma']),
                   p['solver'])
    success = is_success(result, lifted)

    doc = schema.SolveResultSchema().dump(result)
    doc.update(relative_error=result.relative_error(lifted),
               success=success,
               truth_support={'h': list(truth.h_support),
                              'b': list(truth.b_support)})
    _write_json(config, doc)

    logger.info('Relative error {:.3e}'.format(doc['relative_error']))
    return EXIT_OK if success else EXIT_RECOVERY_FAILED


def cmd_demix(config: RunConfig) -> int:
    """
    Draw a seeded demixing instance with N users of which S are active,
    recover it with three-level HiHTP and report the relative error
    """
    p = config.params
    dictionary = _dictionary(p)
    mixing = gen_mixing(p['M'], p['N'], derive_seed(p['seed'],
                                                    MIXING_STREAM))
    op = DemixingOperator(mixing, dictionary)
    truth = gen_demixing_truth(p['N'], p['S'], p['mu'], p['n'], p['s'],
                               p['sigma'], derive_seed(p['seed'],
                                                       TRUTH_STREAM))
    lifted = truth.lifted

    result = hihtp_three_level(op, op.apply(lifted),
                               SparsityPattern(p['s'], p['sigma'], S=p['S']),
                               p['solver'])
    success = is_success(result, lifted)

    doc = schema.SolveResultSchema().dump(result)
    doc.update(relative_error=result.relative_error(lifted),
               success=success,
               active_users=list(truth.active),
               recovered_users=result.support.users())
    _write_json(config, doc)
    return EXIT_OK if success else EXIT_RECOVERY_FAILED


def cmd_phase(config: RunConfig) -> int:
    p = config.params
    grid = schema.grid_from_params(p)
    threads = p['threads'] or os.cpu_count() or 1
    logger.info('Running {} on {} threads'.format(grid, threads))

    table = phase_lab.run_phase_diagram(grid, threads=threads,
                                        timings=p['timings'])
    out = _open_output(p['out'])
    try:
        phase_lab.write_phase_table(table, out,
                                    meta=schema.provenance(config))
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_fit(config: RunConfig) -> int:
    """
    Fit the logistic scaling model for every exponent and report the losses
    """
    p = config.params
    table = phase_lab.read_phase_table(p['table'])
    fits = [phase_lab.fit_lambda_scaling(table, a, p['c_grid'])
            for a in p['a_values']]
    for fit in fits:
        logger.info('a={:g}: C_a={:.4g} loss={:.6f}'.format(
            fit.a, fit.c_a, fit.loss))

    meta = schema.provenance(config)
    out = _open_output(p['out'])
    try:
        phase_lab.write_fits(fits, out, meta=meta)
    finally:
        if out is not sys.stdout:
            out.close()

    if p['outcomes'] is not None:
        best = min(fits, key=lambda f: f.loss)
        phase_lab.write_lambda_outcomes(table, best, p['outcomes'],
                                        max_lambda=p['max_lambda'],
                                        meta=meta)
    return EXIT_OK


def cmd_ripcheck(config: RunConfig) -> int:
    """
    Estimate the hierarchical restricted isometry constant of a seeded
    lifted operator, exactly as well when asked
    """
    p = config.params
    dictionary = _dictionary(p)
    op = HOperator(dictionary) if p['operator'] == 'H' else COperator(
        dictionary)
    pattern = SparsityPattern(p['s'], p['sigma'])

    # Monte Carlo signals come from the truth stream of the seed
    estimate = estimate_hirip_mc(op, pattern, p['trials'],
                                 seed=derive_seed(p['seed'], TRUTH_STREAM))
    if p['exact']:
        estimate.exact = exact_hirip_small(op, pattern)
        if estimate.exact + 1e-10 < estimate.delta_lower:
            logger.warning('Exact constant {} below the estimate {}'.format(
                estimate.exact, estimate.delta_lower))

    doc = schema.RipEstimateSchema().dump(estimate)
    doc['operator'] = p['operator']
    _write_json(config, doc)
    return EXIT_OK


COMMANDS = {
    'deconvolve': cmd_deconvolve,
    'demix': cmd_demix,
    'phase': cmd_phase,
    'fit': cmd_fit,
    'ripcheck': cmd_ripcheck,
}


def _add_shared(parser: argparse.ArgumentParser):
    parser.add_argument('--config', help='JSON configuration document')
    parser.add_argument('--dump-config', action='store_true',
                        help='Print the effective configuration and exit')
    parser.add_argument('--seed', type=int, help='Base seed')
    parser.add_argument('--threads', type=int,
                        help='Worker threads (default: all cores)')
    parser.add_argument('--out', help='Output file (default: stdout)')
    parser.add_argument('-v', '--verbose', action='count',
                        help='-v for progress, -vv for solver traces')


def _add_instance(parser: argparse.ArgumentParser):
    parser.add_argument('--mu', type=int, help='Filter length')
    parser.add_argument('--n', type=int, help='Message length')
    parser.add_argument('--m', type=int, help='Inner dimension of Q = U A')
    parser.add_argument('--s', type=int, help='Filter sparsity')
    parser.add_argument('--sigma', type=int, help='Message sparsity')
    parser.add_argument('--u-kind', dest='u_kind',
                        choices=EnsembleConfig.U_KINDS)
    parser.add_argument('--a-kind', dest='a_kind',
                        choices=EnsembleConfig.A_KINDS)


def _add_solver(parser: argparse.ArgumentParser):
    group = parser.add_argument_group('solver')
    group.add_argument('--max-outer-iters', type=int)
    group.add_argument('--outer-tol', type=float)
    group.add_argument('--cg-tol', type=float)
    group.add_argument('--cg-max-iters', type=int)
    group.add_argument('--final-ls-tol', type=float)
    group.add_argument('--final-ls-max-iters', type=int)


def get_parser() -> argparse.ArgumentParser:
    parser = ArgumentParser(
        prog='hier-deconv',
        description='Hierarchically sparse blind deconvolution and demixing',
        argument_default=argparse.SUPPRESS)
    parser.add_argument('--version', action='version',
                        version='%(prog)s ' + __version__)
    commands = parser.add_subparsers(dest='command', metavar='command')
    commands.required = True

    deconvolve = commands.add_parser(
        'deconvolve', help='Recover one seeded instance',
        argument_default=argparse.SUPPRESS)
    _add_instance(deconvolve)
    _add_solver(deconvolve)

    demix = commands.add_parser(
        'demix', help='Recover one seeded demixing instance',
        argument_default=argparse.SUPPRESS)
    _add_instance(demix)
    demix.add_argument('--N', type=int, help='Number of users')
    demix.add_argument('--S', type=int, help='Number of active users')
    demix.add_argument('--M', type=int, help='Number of mixing slots')
    _add_solver(demix)

    phase = commands.add_parser(
        'phase', help='Estimate recovery probabilities over a grid',
        argument_default=argparse.SUPPRESS)
    phase.add_argument('--preset',
                       choices=sorted(phase_lab.PRESETS),
                       help='Start from a predefined grid')
    phase.add_argument('--n-values', dest='n_values', type=int, nargs='+')
    phase.add_argument('--sigma-values', dest='sigma_values', type=int,
                       nargs='+')
    phase.add_argument('--s-values', dest='s_values', type=int, nargs='+')
    phase.add_argument('--mu-values', dest='mu_values', type=int, nargs='+')
    phase.add_argument('--trials', dest='trials_per_point', type=int,
                       help='Trials per grid point')
    phase.add_argument('--u-kind', dest='u_kind',
                       choices=EnsembleConfig.U_KINDS)
    phase.add_argument('--a-kind', dest='a_kind',
                       choices=EnsembleConfig.A_KINDS)
    phase.add_argument('--timings', action='store_true',
                       help='Record the mean wall time per trial')
    _add_solver(phase)

    fit = commands.add_parser(
        'fit', help='Fit the logistic scaling model to a phase table',
        argument_default=argparse.SUPPRESS)
    fit.add_argument('table', nargs='?', help='Phase table CSV')
    fit.add_argument('--a', dest='a_values', type=float, nargs='+',
                     help='Exponents of s to compare (default: 1 2)')
    fit.add_argument('--c-grid', dest='c_grid', type=float, nargs='+',
                     help='Candidate C_a values')
    fit.add_argument('--outcomes', help='Write lambda,outcome pairs here')
    fit.add_argument('--max-lambda', dest='max_lambda', type=float)

    ripcheck = commands.add_parser(
        'ripcheck', help='Estimate restricted isometry constants',
        argument_default=argparse.SUPPRESS)
    _add_instance(ripcheck)
    ripcheck.add_argument('--operator', choices=['H', 'C'])
    ripcheck.add_argument('--trials', type=int,
                          help='Monte Carlo draws')
    ripcheck.add_argument('--exact', action='store_true',
                          help='Also compute the exact constant')

    for sub in (deconvolve, demix, phase, fit, ripcheck):
        _add_shared(sub)
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    """
    Merge the ``--config`` document with the given flags and validate.

    :raises: :class:`~hier_deconv.errors.ConfigurationError`
    """
    flags = dict(vars(args))
    command = flags.pop('command')
    path = flags.pop('config', None)
    flags.pop('dump_config', None)

    data = {}
    if path is not None:
        try:
            with open(path, encoding='utf-8') as f:
                data = json.load(f)
        except (OSError, ValueError) as e:
            raise ConfigurationError(
                'Cannot read configuration {}: {}'.format(path, e))
        if not isinstance(data, dict):
            raise ConfigurationError(
                'Configuration must be a JSON object')

    solver = {k: flags.pop(k) for k in SOLVER_FLAGS if k in flags}
    if solver:
        merged = dict(data.get('solver') or {})
        merged.update(solver)
        data['solver'] = merged
    data.update(flags)
    return schema.load_run_config(command, data)


def _configure_logging(verbose: int):
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbose, logging.DEBUG)
    logging.getLogger().setLevel(level)


def main(argv: Sequence[str] = None) -> int:
    logging.basicConfig(level=logging.WARNING,
                        format='%(asctime)s %(message)s')
    args = get_parser().parse_args(argv)

    try:
        config = load_config(args)
    except HierDeconvException as e:
        logger.error(str(e))
        return EXIT_USAGE
    _configure_logging(config.params['verbose'])

    if getattr(args, 'dump_config', False):
        print(json.dumps(schema.dump_run_config(config), indent=2,
                         sort_keys=True))
        return EXIT_OK

    try:
        return COMMANDS[config.command](config)
    except (NonFiniteError, GuardExceededError) as e:
        logger.error('Numeric failure: {}'.format(e))
        return EXIT_NUMERIC
    except (HierDeconvException, OSError) as e:
        logger.error(str(e))
        return EXIT_USAGE


if __name__ == '__main__':  # pragma: no cover
    sys.exit(main())
