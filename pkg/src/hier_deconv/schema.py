"""
The schema module validates run configurations and converts models to and
from their JSON and CSV representations.
"""
import hashlib
import json
import logging

from marshmallow import RAISE
from marshmallow import Schema
from marshmallow import ValidationError
from marshmallow import fields
from marshmallow import post_load
from marshmallow import pre_load
from marshmallow import validate
from marshmallow import validates_schema

from hier_deconv import __version__
from hier_deconv import models
from hier_deconv.errors import ConfigurationError
from hier_deconv.errors import HierDeconvException


logger = logging.getLogger(__name__)

Positive = validate.Range(min=1)
Seed = validate.Range(min=0, max=2 ** 64 - 1)
PositiveFloat = validate.Range(min=0, min_inclusive=False)

# Keys that do not change results and stay out of the config hash
UNHASHED_KEYS = ('threads', 'out', 'verbose')


class BaseSchema(Schema):
    class Meta:
        unknown = RAISE
        ordered = True


class SolverConfigSchema(BaseSchema):
    """
    Stopping rules of the HiHTP solver
    """
    max_outer_iters = fields.Integer(strict=True, validate=Positive,
                                     load_default=25)
    outer_tol = fields.Float(validate=PositiveFloat, load_default=1e-6)
    cg_tol = fields.Float(validate=PositiveFloat, load_default=1e-4)
    cg_max_iters = fields.Integer(strict=True, validate=Positive,
                                  load_default=100)
    final_ls_tol = fields.Float(validate=PositiveFloat,
                                load_default=10 ** -6.5)
    final_ls_max_iters = fields.Integer(strict=True, validate=Positive,
                                        load_default=200)

    @post_load
    def create_model(self, data, **kwargs):
        return models.SolverConfig(**data)


class SparsityPatternSchema(BaseSchema):
    S = fields.Integer(strict=True, validate=Positive, allow_none=True,
                       load_default=None)
    s = fields.Integer(strict=True, validate=Positive, required=True)
    sigma = fields.Integer(strict=True, validate=Positive, required=True)

    @post_load
    def create_model(self, data, **kwargs):
        return models.SparsityPattern(**data)


class EnsembleConfigSchema(BaseSchema):
    """
    How a random dictionary Q = U A is drawn
    """
    mu = fields.Integer(strict=True, validate=Positive, required=True)
    n = fields.Integer(strict=True, validate=Positive, required=True)
    m = fields.Integer(strict=True, validate=Positive, allow_none=True,
                       load_default=None)
    u_kind = fields.String(validate=validate.OneOf(
        models.EnsembleConfig.U_KINDS), load_default='gaussian')
    a_kind = fields.String(validate=validate.OneOf(
        models.EnsembleConfig.A_KINDS), load_default='identity')
    seed = fields.Integer(strict=True, validate=Seed, load_default=0)

    @validates_schema
    def check_inner_dimension(self, data, **kwargs):
        _check_inner_dimension(data)

    @post_load
    def create_model(self, data, **kwargs):
        return models.EnsembleConfig(**data)


def _check_inner_dimension(data):
    m = data.get('m')
    if data.get('a_kind') == 'identity' and m is not None and m != data['n']:
        raise ValidationError('Identity A requires m == n', 'm')


def _check_budget(data, budget, dim):
    if data.get(budget) is not None and data[budget] > data[dim]:
        raise ValidationError('{} exceeds {}'.format(budget, dim), budget)


class RunSchema(BaseSchema):
    """
    Keys shared by every subcommand
    """
    seed = fields.Integer(strict=True, validate=Seed, load_default=0)
    threads = fields.Integer(strict=True, validate=Positive, allow_none=True,
                             load_default=None)
    out = fields.String(allow_none=True, load_default=None)
    verbose = fields.Integer(strict=True, validate=validate.Range(min=0),
                             load_default=0)


class InstanceSchema(RunSchema):
    """
    A single seeded (s, sigma)-sparse instance
    """
    mu = fields.Integer(strict=True, validate=Positive, required=True)
    n = fields.Integer(strict=True, validate=Positive, required=True)
    m = fields.Integer(strict=True, validate=Positive, allow_none=True,
                       load_default=None)
    s = fields.Integer(strict=True, validate=Positive, required=True)
    sigma = fields.Integer(strict=True, validate=Positive, required=True)
    u_kind = fields.String(validate=validate.OneOf(
        models.EnsembleConfig.U_KINDS), load_default='gaussian')
    a_kind = fields.String(validate=validate.OneOf(
        models.EnsembleConfig.A_KINDS), load_default='identity')

    @validates_schema
    def check_dimensions(self, data, **kwargs):
        _check_budget(data, 's', 'mu')
        _check_budget(data, 'sigma', 'n')
        _check_inner_dimension(data)


class DeconvolveSchema(InstanceSchema):
    solver = fields.Nested(SolverConfigSchema,
                           load_default=models.SolverConfig)


class DemixSchema(InstanceSchema):
    N = fields.Integer(strict=True, validate=Positive, required=True)
    S = fields.Integer(strict=True, validate=Positive, required=True)
    M = fields.Integer(strict=True, validate=Positive, required=True)
    solver = fields.Nested(SolverConfigSchema,
                           load_default=models.SolverConfig)

    @validates_schema
    def check_users(self, data, **kwargs):
        _check_budget(data, 'S', 'N')


class RipcheckSchema(InstanceSchema):
    operator = fields.String(validate=validate.OneOf(['H', 'C']),
                             load_default='C')
    trials = fields.Integer(strict=True, validate=Positive,
                            load_default=1000)
    exact = fields.Boolean(load_default=False)


class PhaseSchema(RunSchema):
    """
    A phase transition experiment. A ``preset`` supplies every grid key the
    document leaves out.
    """
    preset = fields.String(validate=validate.OneOf(
        sorted(models.ExperimentGrid.PRESETS)), allow_none=True,
        load_default=None)
    n_values = fields.List(fields.Integer(strict=True, validate=Positive),
                           required=True)
    sigma_values = fields.List(fields.Integer(strict=True, validate=Positive),
                               required=True)
    s_values = fields.List(fields.Integer(strict=True, validate=Positive),
                           required=True)
    mu_values = fields.List(fields.Integer(strict=True, validate=Positive),
                            required=True)
    trials_per_point = fields.Integer(strict=True, validate=Positive,
                                      load_default=100)
    u_kind = fields.String(validate=validate.OneOf(
        models.EnsembleConfig.U_KINDS), load_default='gaussian')
    a_kind = fields.String(validate=validate.OneOf(
        models.EnsembleConfig.A_KINDS), load_default='identity')
    solver = fields.Nested(SolverConfigSchema,
                           load_default=models.SolverConfig)
    timings = fields.Boolean(load_default=False)

    @pre_load
    def apply_preset(self, data, **kwargs):
        presets = models.ExperimentGrid.PRESETS
        name = data.get('preset')
        if not isinstance(name, str) or name not in presets:
            return data
        merged = dict(presets[name])
        merged.update(data)
        return merged

    @validates_schema
    def check_grid(self, data, **kwargs):
        try:
            grid_from_params(data)
        except ConfigurationError as e:
            raise ValidationError(str(e))


class FitSchema(RunSchema):
    table = fields.String(required=True)
    a_values = fields.List(fields.Float(validate=PositiveFloat),
                           load_default=lambda: [1.0, 2.0])
    c_grid = fields.List(fields.Float(validate=PositiveFloat),
                         allow_none=True, load_default=None)
    outcomes = fields.String(allow_none=True, load_default=None)
    max_lambda = fields.Float(allow_none=True, load_default=None)

    @validates_schema
    def check_lists(self, data, **kwargs):
        for key in ('a_values', 'c_grid'):
            if data.get(key) is not None and not data[key]:
                raise ValidationError('must not be empty', key)


RUN_SCHEMAS = {
    'deconvolve': DeconvolveSchema,
    'demix': DemixSchema,
    'phase': PhaseSchema,
    'fit': FitSchema,
    'ripcheck': RipcheckSchema,
}


def grid_from_params(params: dict) -> models.ExperimentGrid:
    """
    The :class:`~hier_deconv.models.ExperimentGrid` described by validated
    ``phase`` parameters
    """
    return models.ExperimentGrid(
        n_values=params['n_values'],
        sigma_values=params['sigma_values'],
        s_values=params['s_values'],
        mu_values=params['mu_values'],
        trials_per_point=params['trials_per_point'],
        base_seed=params['seed'],
        u_kind=params['u_kind'],
        a_kind=params['a_kind'],
        solver=params['solver'])


def load_run_config(command: str, data: dict) -> models.RunConfig:
    """
    Validate the configuration document of a subcommand.

    :raises: :class:`~hier_deconv.errors.ConfigurationError` listing every
             invalid or unknown key
    """
    if command not in RUN_SCHEMAS:
        raise ConfigurationError('Unknown command %r' % command)
    try:
        params = RUN_SCHEMAS[command]().load(data)
    except ValidationError as e:
        raise ConfigurationError('Invalid {} configuration: {}'.format(
            command, json.dumps(e.messages, sort_keys=True)))
    except HierDeconvException as e:
        raise ConfigurationError('Invalid {} configuration: {}'.format(
            command, e))
    return models.RunConfig(command=command, params=params)


def dump_run_config(config: models.RunConfig) -> dict:
    return dict(RUN_SCHEMAS[config.command]().dump(config.params))


def config_hash(config: models.RunConfig) -> str:
    """
    SHA-256 of the canonical JSON of the effective configuration, ignoring
    keys that do not affect results
    """
    doc = {k: v for k, v in dump_run_config(config).items()
           if k not in UNHASHED_KEYS}
    doc['command'] = config.command
    canonical = json.dumps(doc, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


def provenance(config: models.RunConfig) -> dict:
    """
    The metadata block written with every output file
    """
    return {
        'tool': 'hier_deconv',
        'version': __version__,
        'command': config.command,
        'config_hash': config_hash(config),
        'base_seed': config.params['seed'],
    }


class HierSupportField(fields.Field):
    """
    A support as a list of coordinate lists
    """
    def _serialize(self, value, attr, obj, **kwargs):
        return [list(e) for e in value]


class SolveResultSchema(BaseSchema):
    """
    A HiHTP solve: the estimate as its support and the values on it
    """
    support = HierSupportField()
    values = fields.Method('dump_values')
    outer_iters = fields.Integer()
    converged = fields.Boolean()
    residuals = fields.List(fields.Float())

    def dump_values(self, obj):
        return obj.estimate.data[obj.support.flat_indices].tolist()


class RipEstimateSchema(BaseSchema):
    pattern = fields.Nested(SparsityPatternSchema)
    trials = fields.Integer()
    delta_lower = fields.Float()
    exact = fields.Float(allow_none=True)
    seed = fields.Integer()


class LogisticFitSchema(BaseSchema):
    a = fields.Float(required=True)
    c_a = fields.Float(required=True)
    intercept = fields.Float(required=True)
    slope = fields.Float(required=True)
    loss = fields.Float(required=True)
    separated = fields.Boolean(load_default=False)
    intercept_se = fields.Float(allow_none=True, load_default=None)
    slope_se = fields.Float(allow_none=True, load_default=None)

    @post_load
    def create_model(self, data, **kwargs):
        return models.LogisticFit(**data)


class PhaseRowSchema(BaseSchema):
    """
    One row of a phase table. ``prob`` is written for convenience and
    recomputed from the counts on load.
    """
    n = fields.Integer(required=True)
    mu = fields.Integer(required=True)
    s = fields.Integer(required=True)
    sigma = fields.Integer(required=True)
    trials = fields.Integer(required=True)
    successes = fields.Integer(required=True)
    prob = fields.Float(dump_only=True)
    mean_iters = fields.Float(load_default=0.0)
    mean_ms = fields.Float(allow_none=True, load_default=None)

    @pre_load
    def pre_deserialize(self, data, **kwargs):
        data = {k: (None if v == '' else v) for k, v in data.items()
                if k != 'prob'}
        if data.get('mean_iters') is None:
            data.pop('mean_iters', None)
        return data

    @post_load
    def create_model(self, data, **kwargs):
        return models.PhaseRow(**data)
