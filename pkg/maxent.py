"""
Maximum entropy PMF for a given mean psi and complementary normalized
variance rho.

Interior solutions have the exponential-family form p_k ~ exp(l1 k + l2 k^2).
The multipliers are found by a damped Newton iteration on the convex dual
log Z(mu) - mu . m, written in centered coordinates t = (k - c) / s so the
Hessian stays well conditioned. Boundary values of rho (and psi at 1 or K)
are answered in closed form.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from scipy.special import logsumexp

from config import Config
from errors import ConvergenceError, DomainError
from pmf_core import Pmf, categories, max_variance_pmf, min_variance_pmf, variance_bounds

logger = logging.getLogger(__name__)

BOUNDARY_RHO = 1e-12
_ARMIJO = 1e-4
_MIN_STEP = 1e-12


class BoundaryCase(Enum):
    INTERIOR = "interior"
    MIN_VARIANCE = "min-variance"
    MAX_VARIANCE = "max-variance"
    POINT_MASS = "point-mass"


@dataclass(frozen=True)
class MaxEntSolution:
    lambda1: float
    lambda2: float
    pmf: Pmf
    boundary_case: BoundaryCase
    iterations: int = 0
    residual: float = 0.0
    # dual coordinates, usable as a warm start for a nearby solve
    dual: Optional[Tuple[float, float]] = None


def _features(K: int) -> Tuple[np.ndarray, float, float]:
    center = (K + 1) / 2.0
    spread = (K - 1) / 2.0
    t = (categories(K) - center) / spread
    return np.column_stack((t, t * t)), center, spread


def _boundary_solution(pmf: Pmf, case: BoundaryCase) -> MaxEntSolution:
    if case is BoundaryCase.MIN_VARIANCE and np.count_nonzero(pmf.probs) == 1:
        case = BoundaryCase.POINT_MASS
    return MaxEntSolution(lambda1=float("nan"), lambda2=float("nan"), pmf=pmf, boundary_case=case)


def maxent_pmf(psi: float, rho: float, K: int = Config.NUM_CATEGORIES,
               tol: float = Config.MAXENT_TOL, max_iter: int = Config.MAXENT_MAX_ITER,
               init: Optional[Tuple[float, float]] = None) -> MaxEntSolution:
    """The unique entropy maximizer with mean psi and complementary normalized variance rho"""
    if not 0.0 <= rho <= 1.0:
        raise DomainError(f"rho must lie in [0, 1], got {rho}")
    v_min, v_max = variance_bounds(psi, K)

    if v_max - v_min <= BOUNDARY_RHO:
        return _boundary_solution(min_variance_pmf(psi, K), BoundaryCase.POINT_MASS)
    if rho >= 1.0 - BOUNDARY_RHO:
        return _boundary_solution(min_variance_pmf(psi, K), BoundaryCase.MIN_VARIANCE)
    if rho <= BOUNDARY_RHO:
        return _boundary_solution(max_variance_pmf(psi, K), BoundaryCase.MAX_VARIANCE)

    v = v_max - rho * (v_max - v_min)
    features, center, spread = _features(K)
    target = np.array([
        (psi - center) / spread,
        (v + (psi - center) ** 2) / spread ** 2,
    ])

    if init is not None:
        try:
            return _solve_dual(psi, rho, features, center, spread, target, tol, max_iter,
                               np.asarray(init, dtype=float))
        except ConvergenceError as e:
            logger.debug(f"maxent warm start {init} failed ({e}); retrying from zero multipliers")
    return _solve_dual(psi, rho, features, center, spread, target, tol, max_iter, np.zeros(2))


def _solve_dual(psi: float, rho: float, features: np.ndarray, center: float, spread: float,
                target: np.ndarray, tol: float, max_iter: int, mu: np.ndarray) -> MaxEntSolution:
    def evaluate(mu: np.ndarray):
        logits = features @ mu
        log_z = logsumexp(logits)
        probs = np.exp(logits - log_z)
        gradient = features.T @ probs - target
        return log_z - mu @ target, probs, gradient

    objective, probs, gradient = evaluate(mu)
    residual = float(np.max(np.abs(gradient)))
    iterations = 0

    while residual > tol:
        if iterations >= max_iter:
            raise ConvergenceError(f"maximum entropy Newton solve for psi={psi}, rho={rho} did not converge",
                                   residual=residual, iterations=iterations)
        iterations += 1

        mean_features = features.T @ probs
        hessian = (features * probs[:, None]).T @ features - np.outer(mean_features, mean_features)
        try:
            step = np.linalg.solve(hessian, gradient)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(hessian, gradient, rcond=None)[0]

        # step halving until the dual decreases or the constraint residual shrinks
        t = 1.0
        while True:
            candidate = mu - t * step
            new_objective, new_probs, new_gradient = evaluate(candidate)
            new_residual = float(np.max(np.abs(new_gradient)))
            if (new_objective <= objective - _ARMIJO * t * float(gradient @ step)
                    or new_residual < residual):
                break
            t *= 0.5
            if t < _MIN_STEP:
                raise ConvergenceError(f"maximum entropy line search stalled for psi={psi}, rho={rho}",
                                       residual=residual, iterations=iterations)

        mu, objective, probs, gradient, residual = candidate, new_objective, new_probs, new_gradient, new_residual

    lambda2 = mu[1] / spread ** 2
    lambda1 = mu[0] / spread - 2.0 * center * lambda2
    logger.debug(f"maxent psi={psi:.6f} rho={rho:.6f} converged in {iterations} iterations")
    return MaxEntSolution(
        lambda1=float(lambda1),
        lambda2=float(lambda2),
        pmf=Pmf(probs / probs.sum()),
        boundary_case=BoundaryCase.INTERIOR,
        iterations=iterations,
        residual=residual,
        dual=(float(mu[0]), float(mu[1])),
    )
