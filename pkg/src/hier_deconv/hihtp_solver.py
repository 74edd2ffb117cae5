"""
Hierarchical hard thresholding pursuit (HiHTP).

Each iteration takes a gradient step ``g = w + op*(y - op w)``, keeps the
support of the best pattern-sparse approximation of ``g`` and solves the
least squares problem restricted to that support with conjugate gradients on
the normal equations (CGLS). The restricted operator is never formed: every
CG step costs one ``apply`` and one ``adjoint`` of the full operator.
"""

import logging
from collections import namedtuple

import numpy as np

from hier_deconv.errors import NonFiniteError
from hier_deconv.errors import ShapeMismatchError
from hier_deconv.hier_core import embed
from hier_deconv.hier_core import project_hier
from hier_deconv.hier_core import restrict
from hier_deconv.lifted_ops import DemixingOperator
from hier_deconv.lifted_ops import LiftedOperator
from hier_deconv.models import HierSignal
from hier_deconv.models import HierSupport
from hier_deconv.models import SolveResult
from hier_deconv.models import SolverConfig
from hier_deconv.models import SparsityPattern


__all__ = [
    'CGResult',
    'SUCCESS_THRESHOLD',
    'cg_restricted',
    'hihtp',
    'hihtp_three_level',
    'is_success',
]

logger = logging.getLogger(__name__)

# Recovery counts as exact below this relative Frobenius error
SUCCESS_THRESHOLD = 1e-6

# Normal-equation gradients below this (relative to op*_supp y) are zero
_STATIONARY = 1e-14

CGResult = namedtuple('CGResult', ['solution',
                                   'iterations',
                                   'residual_norm',
                                   'converged',
                                   'breakdown',
                                   'residuals'])
"""
Outcome of a restricted least squares solve. ``solution`` holds the values on
the support, ``residuals`` the residual norm ``||y - op z||`` after every
iteration (starting with the initial guess).
"""


def _finite(x: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(x)):
        raise NonFiniteError('Non-finite values in {}'.format(what))
    return x


def cg_restricted(op: LiftedOperator,
                  y,
                  support: HierSupport,
                  tol: float,
                  max_iters: int,
                  x0=None) -> CGResult:
    """
    Minimize ``||y - op z||`` over signals z supported on ``support``.

    Stops once ``||y - op z|| <= tol * ||y||`` (absolute when y is zero),
    when the normal-equation gradient vanishes, or after ``max_iters``
    iterations. A zero-curvature search direction ends the solve with
    ``breakdown`` set.

    :param op: Measurement operator
    :param y: Measurements
    :param support: Support the solution is restricted to (non-empty)
    :param tol: Relative residual tolerance
    :param max_iters: Iteration cap
    :param x0: Initial values on the support (zeros when None)
    :raises: :class:`~hier_deconv.errors.NonFiniteError`
    """
    y = op.check_measurement(y)
    if support.shape != op.domain_shape or not len(support):
        raise ShapeMismatchError('Support must be non-empty and match the '
                                 'operator domain {}'.format(op.domain_shape))

    shape = op.domain_shape

    def forward(v):
        return op.apply(embed(v, support, shape))

    def backward(r):
        return restrict(op.adjoint(r), support)

    x = np.zeros(len(support)) if x0 is None else np.array(x0, dtype=float)
    r = y - forward(x) if x.any() else y.copy()
    grad = backward(r)
    direction = grad.copy()
    gamma = float(grad @ grad)

    threshold = tol * float(np.linalg.norm(y)) or tol
    stationary = _STATIONARY * float(np.linalg.norm(backward(y))) or 0.0
    residual = float(np.linalg.norm(r))
    residuals = [residual]
    converged, breakdown = residual <= threshold, False

    iterations = 0
    while not converged and iterations < max_iters:
        if np.sqrt(gamma) <= stationary:
            converged = True
            break

        q = _finite(forward(direction), 'the restricted operator')
        curvature = float(q @ q)
        if curvature <= 0.0:
            logger.warning('CG breakdown after {} iterations'.format(
                iterations))
            breakdown = True
            break

        alpha = gamma / curvature
        x += alpha * direction
        r -= alpha * q
        grad = backward(r)
        gamma_new = float(grad @ grad)
        direction = grad + (gamma_new / gamma) * direction
        gamma = gamma_new
        iterations += 1

        residual = float(np.linalg.norm(r))
        residuals.append(residual)
        converged = residual <= threshold

    _finite(x, 'the least squares solution')
    return CGResult(solution=x,
                    iterations=iterations,
                    residual_norm=residual,
                    converged=converged,
                    breakdown=breakdown,
                    residuals=residuals)


def hihtp(op: LiftedOperator,
          y,
          p: SparsityPattern,
          cfg: SolverConfig = None) -> SolveResult:
    """
    Recover a pattern-sparse signal from ``y = op(w)``.

    Starting from zero, every iteration thresholds the gradient step onto
    pattern ``p`` and re-fits on the new support, warm-starting CG from the
    previous iterate. The loop halts once consecutive iterates differ by
    less than ``cfg.outer_tol`` or after ``cfg.max_outer_iters``
    iterations; the final support is then re-solved at
    ``cfg.final_ls_tol``.

    :param op: Measurement operator
    :param y: Measurements
    :param p: Sparsity pattern with as many levels as the operator domain
    :param cfg: Stopping rules (defaults when None)
    :raises: :class:`~hier_deconv.errors.ShapeMismatchError`,
             :class:`~hier_deconv.errors.NonFiniteError`
    """
    cfg = cfg if cfg is not None else SolverConfig()
    y = _finite(op.check_measurement(y), 'the measurements')
    shape = op.domain_shape
    p.check(shape)

    w = HierSignal.zeros(shape)
    support = None
    residuals = []
    converged = False
    iters = 0

    while iters < cfg.max_outer_iters:
        iters += 1
        step = op.adjoint(y - op.apply(w))
        g = HierSignal(_finite(w.values + step.values, 'the gradient step'))
        support, _ = project_hier(g, p)

        ls = cg_restricted(op, y, support, cfg.cg_tol, cfg.cg_max_iters,
                           x0=restrict(w, support))
        w_next = embed(ls.solution, support, shape)
        delta = (w_next - w).norm()
        w = w_next
        residuals.append(ls.residual_norm)

        logger.debug('HiHTP iteration {}: residual {:.3e}, step {:.3e}'.format(
            iters, ls.residual_norm, delta))

        if delta < cfg.outer_tol:
            converged = True
            break

    final = cg_restricted(op, y, support, cfg.final_ls_tol,
                          cfg.final_ls_max_iters, x0=restrict(w, support))
    residuals.append(final.residual_norm)

    return SolveResult(estimate=embed(final.solution, support, shape),
                       support=support,
                       outer_iters=iters,
                       converged=converged,
                       residuals=residuals)


def hihtp_three_level(op: DemixingOperator,
                      y,
                      p: SparsityPattern,
                      cfg: SolverConfig = None) -> SolveResult:
    """
    HiHTP for the demixing problem: recovers an (S, s, sigma)-sparse
    three-level signal. The thresholding step keeps the S users whose
    (s, sigma)-projections carry the most energy.
    """
    if len(op.domain_shape) != 3 or p.levels != 3:
        raise ShapeMismatchError('Three-level recovery needs a three-level '
                                 'operator and an (S, s, sigma) pattern')
    return hihtp(op, y, p, cfg)


def is_success(result: SolveResult, truth: HierSignal) -> bool:
    """
    True when the estimate is within :data:`SUCCESS_THRESHOLD` relative
    error of ``truth``
    """
    return result.relative_error(truth) < SUCCESS_THRESHOLD
