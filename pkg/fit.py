"""
Maximum likelihood fitting by cross-entropy minimization.

For counts O with empirical PMF p, the negative log-likelihood of a model PMF
q is n * H(p, q) (multinomial coefficient dropped). Each fit runs a bounded
Nelder-Mead search from a moment-based start plus scrambled Halton points in
the model's start box; the best converged run wins.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from config import Config
from errors import ConvergenceError, DomainError
from latent import LatentParams, beta_mean_precision
from maxent import BoundaryCase, MaxEntSolution, maxent_pmf
from models import ModelFactory, ModelKind, ModelParams, ParamSpec, RatingModel
from pmf_core import Pmf, RatingCounts, cross_entropy, moments, normalize

logger = logging.getLogger(__name__)

__all__ = [
    "BoundaryCase", "MaxEntSolution", "maxent_pmf",
    "FitOptions", "FitResult", "neg_log_likelihood", "mle_fit", "fit_empirical", "fit_dataset",
]

CROSS_ENTROPY_FLOOR = 1e-300
TIE_TOLERANCE = 1e-12
_SIMPLEX_STEP = 0.1


@dataclass(frozen=True)
class FitOptions:
    n_starts: int = Config.FIT_N_STARTS
    tol: float = Config.FIT_TOL
    max_iter: int = Config.FIT_MAX_ITER
    seed: int = 0

    def __post_init__(self):
        if self.n_starts < 1:
            raise DomainError(f"n_starts must be at least 1, got {self.n_starts}")
        if self.tol <= 0.0:
            raise DomainError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise DomainError(f"max_iter must be positive, got {self.max_iter}")
        if self.seed < 0:
            raise DomainError(f"seed must be non-negative, got {self.seed}")

    @classmethod
    def from_config(cls, seed: int = 0) -> "FitOptions":
        return cls(seed=seed, **Config.get_fit_config())


@dataclass(frozen=True)
class FitResult:
    """Fitted parameters and likelihood for one stimulus"""
    kind: ModelKind
    theta: ModelParams
    pmf: Pmf
    neg_log_likelihood: float
    converged: bool
    iterations: int
    total: int
    param_names: Tuple[str, ...] = field(default=())

    @property
    def n_params(self) -> int:
        return len(self.theta)

    @property
    def cross_entropy(self) -> float:
        return self.neg_log_likelihood / self.total

    def to_row(self) -> Dict[str, Any]:
        m = moments(self.pmf)
        row: Dict[str, Any] = {"model": self.kind.label}
        names = self.param_names or tuple(f"theta{i + 1}" for i in range(len(self.theta)))
        row.update({name: value for name, value in zip(names, self.theta)})
        if self.kind is ModelKind.QUANTIZED_BETA:
            row["mean"], row["precision"] = beta_mean_precision(LatentParams(*self.theta))
        row.update({
            "psi": m.psi,
            "rho": m.rho,
            "neg_log_likelihood": self.neg_log_likelihood,
            "converged": self.converged,
            "iterations": self.iterations,
        })
        return row


def neg_log_likelihood(data: RatingCounts, q: Pmf) -> float:
    """-sum_k O_k ln q_k, +inf if a rated category has zero model mass"""
    if data.K != q.K:
        raise DomainError(f"counts and PMF on different scales: K={data.K} vs K={q.K}")
    mask = data.counts > 0
    if np.any(q.probs[mask] <= 0.0):
        return float("inf")
    return float(-np.sum(data.counts[mask] * np.log(q.probs[mask])))


def fit_empirical(data: RatingCounts) -> FitResult:
    """The empirical model: relative frequencies, K-1 free parameters"""
    p = normalize(data)
    return FitResult(
        kind=ModelKind.EMPIRICAL,
        theta=tuple(float(x) for x in p.probs[:-1]),
        pmf=p,
        neg_log_likelihood=neg_log_likelihood(data, p),
        converged=True,
        iterations=0,
        total=data.total,
        param_names=tuple(f"p{k}" for k in range(1, data.K)),
    )


def _to_search(values: Sequence[float], specs: List[ParamSpec]) -> np.ndarray:
    return np.array([np.log(v) if s.log_scale else v for v, s in zip(values, specs)], dtype=float)


def _from_search(y: np.ndarray, specs: List[ParamSpec]) -> np.ndarray:
    theta = np.array([np.exp(v) if s.log_scale else v for v, s in zip(y, specs)], dtype=float)
    return np.clip(theta, [s.low for s in specs], [s.high for s in specs])


def _search_bounds(specs: List[ParamSpec], start_box: bool = False) -> List[Tuple[float, float]]:
    boxes = [s.start_box if start_box else (s.low, s.high) for s in specs]
    return [(np.log(lo), np.log(hi)) if s.log_scale else (lo, hi) for (lo, hi), s in zip(boxes, specs)]


def _starting_points(model: RatingModel, p: Pmf, options: FitOptions) -> List[np.ndarray]:
    specs = model.param_specs()
    starts = [_to_search(model.initial_guess(p), specs)]
    if options.n_starts > 1:
        box = np.array(_search_bounds(specs, start_box=True))
        sampler = qmc.Halton(d=len(specs), scramble=True, seed=options.seed)
        unit = sampler.random(options.n_starts - 1)
        starts.extend(qmc.scale(unit, box[:, 0], box[:, 1]))
    return starts


def _initial_simplex(start: np.ndarray, specs: List[ParamSpec]) -> np.ndarray:
    bounds = np.array(_search_bounds(specs))
    widths = np.array([hi - lo for lo, hi in _search_bounds(specs, start_box=True)])
    start = np.clip(start, bounds[:, 0], bounds[:, 1])
    simplex = [start]
    for i, width in enumerate(widths):
        vertex = start.copy()
        step = _SIMPLEX_STEP * width
        vertex[i] = start[i] + step if start[i] + step <= bounds[i, 1] else start[i] - step
        simplex.append(vertex)
    return np.array(simplex)


def mle_fit(kind: ModelKind, data: RatingCounts, options: Optional[FitOptions] = None) -> FitResult:
    """Parameters minimizing the cross-entropy between the data and the model"""
    if data.total < 1:
        raise DomainError("cannot fit a model to counts with no ratings")
    if kind is ModelKind.EMPIRICAL:
        return fit_empirical(data)
    options = options or FitOptions()

    model = ModelFactory.create(kind, data.K)
    specs = model.param_specs()
    p = normalize(data)
    bounds = _search_bounds(specs)

    def objective(y: np.ndarray) -> float:
        try:
            q = model.pmf(_from_search(y, specs))
        except ConvergenceError:
            return float("inf")
        return cross_entropy(p, q, floor=CROSS_ENTROPY_FLOOR)

    outcomes = []
    for start in _starting_points(model, p, options):
        result = minimize(
            objective,
            np.clip(start, [lo for lo, _ in bounds], [hi for _, hi in bounds]),
            method="Nelder-Mead",
            bounds=bounds,
            options={
                "xatol": options.tol,
                "fatol": options.tol,
                "maxiter": options.max_iter,
                "maxfev": 4 * options.max_iter,
                "initial_simplex": _initial_simplex(start, specs),
            },
        )
        if not np.isfinite(result.fun):
            logger.debug(f"{kind.value} start {start} found no finite objective: {result.message}")
            continue
        if not result.success:
            logger.debug(f"{kind.value} start {start} stopped without converging: {result.message}")
        theta = tuple(float(v) for v in _from_search(result.x, specs))
        outcomes.append((float(result.fun), theta, int(result.nit), bool(result.success)))

    if not outcomes:
        raise ConvergenceError(f"no start reached a finite likelihood for {kind.value}",
                               iterations=options.max_iter)

    # unconverged runs only count when every start failed to converge
    converged = any(o[3] for o in outcomes)
    candidates = [o for o in outcomes if o[3] == converged]
    best_value = min(o[0] for o in candidates)
    ties = [o for o in candidates if o[0] <= best_value + TIE_TOLERANCE * max(1.0, abs(best_value))]
    value, theta, iterations, _ = min(ties, key=lambda o: o[1])
    if not converged:
        logger.warning(f"{kind.value} fit did not converge in {options.n_starts} starts; keeping the best point")

    pmf = model.pmf(theta)
    logger.debug(f"{kind.value} fit theta={theta} cross-entropy={value:.12g} after {iterations} iterations")
    return FitResult(
        kind=kind,
        theta=theta,
        pmf=pmf,
        neg_log_likelihood=neg_log_likelihood(data, pmf),
        converged=converged,
        iterations=iterations,
        total=data.total,
        param_names=tuple(model.param_names()),
    )


def _fit_task(args: Tuple[ModelKind, RatingCounts, FitOptions]) -> FitResult:
    kind, counts, options = args
    return mle_fit(kind, counts, options)


def fit_dataset(kind: ModelKind, counts: Sequence[RatingCounts], options: Optional[FitOptions] = None,
                workers: int = 1) -> List[FitResult]:
    """Fit one model to every stimulus; results keep the input order"""
    options = options or FitOptions()
    tasks = [(kind, c, options) for c in counts]
    logger.info(f"Fitting {kind.value} to {len(tasks)} stimuli with {workers} worker(s)")
    if workers <= 1 or len(tasks) < 2:
        return [_fit_task(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(_fit_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
