"""
Out-of-sample prediction study.

Each trial picks a stimulus uniformly at random, draws n of its ratings
without replacement for training and keeps the rest as test data. Every
model is fitted on the training counts and compared, under each metric, with
the empirical PMF of the test ratings; the training sample's own empirical PMF
is compared the same way. Seeds for the trials are spawned from one
SeedSequence, so results do not depend on the number of workers.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import isotonic_regression

from config import Config
from dataset_loader import Dataset
from errors import DomainError
from fit import FitOptions, mle_fit
from models import ModelKind
from pmf_core import Metric, RatingCounts, distance, make_rng, normalize

logger = logging.getLogger(__name__)

ErrorKey = Tuple[ModelKind, Metric]


@dataclass(frozen=True)
class TrialConfig:
    sample_sizes: Tuple[int, ...] = tuple(range(Config.PREDICT_N_MIN, Config.PREDICT_N_MAX + 1))
    n_trials: int = Config.PREDICT_TRIALS
    kinds: Tuple[ModelKind, ...] = (ModelKind.QUANTIZED_LOGIT_LOGISTIC,)
    metrics: Tuple[Metric, ...] = (Metric.LINF,)
    seed: int = 0
    fit_options: Optional[FitOptions] = None
    keep_raw: bool = False

    def __post_init__(self):
        object.__setattr__(self, "sample_sizes", tuple(int(n) for n in self.sample_sizes))
        object.__setattr__(self, "kinds", tuple(self.kinds))
        object.__setattr__(self, "metrics", tuple(self.metrics))
        if not self.sample_sizes or min(self.sample_sizes) < 1:
            raise DomainError(f"sample sizes must be positive: {self.sample_sizes}")
        if self.n_trials < 1:
            raise DomainError(f"n_trials must be positive, got {self.n_trials}")
        if not self.kinds:
            raise DomainError("at least one model kind is needed")
        if ModelKind.EMPIRICAL in self.kinds:
            raise DomainError("the empirical model is always the baseline; do not list it as a kind")
        if not self.metrics:
            raise DomainError("at least one metric is needed")


@dataclass(frozen=True)
class TrialRecord:
    """Errors of one trial for one model and metric"""
    n: int
    trial: int
    stimulus_id: str
    kind: ModelKind
    metric: Metric
    model_error: float
    empirical_error: float

    REPORT_COLUMNS = ("n", "trial", "stimulus_id", "model", "metric", "model_error", "empirical_error")

    def to_row(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "trial": self.trial,
            "stimulus_id": self.stimulus_id,
            "model": self.kind.label,
            "metric": self.metric.value,
            "model_error": self.model_error,
            "empirical_error": self.empirical_error,
        }


@dataclass
class TrialResult:
    """Mean errors over all trials at one sample size"""
    n: int
    n_trials: int
    model_errors: Dict[ErrorKey, float]
    empirical_errors: Dict[Metric, float]
    model_std: Dict[ErrorKey, float]
    empirical_std: Dict[Metric, float]
    # paired differences: empirical error - model error
    diff_mean: Dict[ErrorKey, float]
    diff_std: Dict[ErrorKey, float]
    skipped_stimuli: int = 0
    raw: List[TrialRecord] = field(default_factory=list)

    def cohens_d(self, kind: ModelKind, metric: Metric, pooled: bool = False) -> float:
        if self.n_trials < 2:
            return float("nan")
        if pooled:
            return _pooled_d(self.empirical_errors[metric] - self.model_errors[(kind, metric)],
                             self.model_std[(kind, metric)], self.empirical_std[metric])
        return _standardized(self.diff_mean[(kind, metric)], self.diff_std[(kind, metric)])


@dataclass(frozen=True)
class EffectAndGain:
    n: int
    cohens_d: float
    gain_samples: float
    censored: bool = False


class GainEstimate(NamedTuple):
    samples: float
    censored: bool


def _standardized(mean_diff: float, std: float) -> float:
    if std == 0.0:
        return float("nan") if mean_diff == 0.0 else float(np.copysign(np.inf, mean_diff))
    return float(mean_diff / std)


def _pooled_d(mean_diff: float, std_a: float, std_b: float) -> float:
    return _standardized(mean_diff, float(np.sqrt(0.5 * (std_a ** 2 + std_b ** 2))))


def cohens_d(paired_diffs: Sequence[float]) -> float:
    """mean / sample standard deviation of paired per-trial differences"""
    diffs = np.asarray(paired_diffs, dtype=float)
    if diffs.size < 2:
        raise DomainError(f"Cohen's d needs at least 2 differences, got {diffs.size}")
    return _standardized(float(diffs.mean()), float(diffs.std(ddof=1)))


def cohens_d_pooled(model_errors: Sequence[float], empirical_errors: Sequence[float]) -> float:
    """Mean difference over the pooled standard deviation of the two error samples"""
    a = np.asarray(model_errors, dtype=float)
    b = np.asarray(empirical_errors, dtype=float)
    if a.size < 2 or b.size < 2:
        raise DomainError("Cohen's d needs at least 2 values per group")
    return _pooled_d(float(b.mean() - a.mean()), float(a.std(ddof=1)), float(b.std(ddof=1)))


def isotonic_nonincreasing(values: Sequence[float]) -> np.ndarray:
    """Least-squares nonincreasing fit (pool adjacent violators)"""
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return values.copy()
    return np.asarray(isotonic_regression(values, increasing=False).x)


def gain(model_curve: Sequence[Tuple[int, float]], empirical_curve: Sequence[Tuple[int, float]],
         n: int) -> GainEstimate:
    """
    Extra ratings the empirical model needs to match the model's error at n.

    The empirical curve is smoothed to be nonincreasing and interpolated
    linearly. If the model error is below the smallest empirical error the
    gain is right-censored at the end of the curve and flagged.
    """
    model_errors = dict(model_curve)
    if n not in model_errors:
        raise DomainError(f"sample size {n} is not on the model curve")
    target = model_errors[n]

    ns, errors = zip(*sorted(empirical_curve))
    ns = np.asarray(ns, dtype=float)
    smoothed = isotonic_nonincreasing(errors)

    if target >= smoothed[0]:
        return GainEstimate(float(ns[0] - n), bool(target > smoothed[0]))
    if target < smoothed[-1]:
        logger.warning(f"Gain at n={n} is censored: model error {target:.6g} is below every empirical error")
        return GainEstimate(float(ns[-1] - n), True)
    j = int(np.argmax(smoothed <= target))
    frac = (smoothed[j - 1] - target) / (smoothed[j - 1] - smoothed[j])
    crossing = ns[j - 1] + frac * (ns[j] - ns[j - 1])
    return GainEstimate(float(crossing - n), False)


def draw_split(counts: RatingCounts, n: int, rng: np.random.Generator) -> Tuple[RatingCounts, RatingCounts]:
    """n ratings without replacement for training, the rest for testing"""
    if not 1 <= n < counts.total:
        raise DomainError(f"cannot take {n} training ratings from {counts.total} and keep test data")
    train = rng.multivariate_hypergeometric(counts.counts, n)
    return RatingCounts(train), RatingCounts(counts.counts - train)


def _run_batch(args) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Trials for one sample size: stimulus indices, empirical errors, model errors"""
    counts, n, kinds, metrics, options, seeds = args
    stimuli = np.empty(len(seeds), dtype=np.int64)
    empirical = np.empty((len(seeds), len(metrics)))
    modeled = np.empty((len(seeds), len(kinds), len(metrics)))
    for t, seed in enumerate(seeds):
        rng = make_rng(seed)
        stimuli[t] = rng.integers(len(counts))
        train, test = draw_split(counts[stimuli[t]], n, rng)
        p_train = normalize(train)
        p_test = normalize(test)
        for m, metric in enumerate(metrics):
            empirical[t, m] = distance(p_train, p_test, metric)
        for k, kind in enumerate(kinds):
            q = mle_fit(kind, train, options).pmf
            for m, metric in enumerate(metrics):
                modeled[t, k, m] = distance(q, p_test, metric)
    return stimuli, empirical, modeled


def _std(values: np.ndarray) -> float:
    return float(values.std(ddof=1)) if values.size > 1 else float("nan")


def run_trials(dataset: Dataset, config: TrialConfig, workers: int = 1) -> List[TrialResult]:
    """Mean prediction errors per sample size, model and metric"""
    n_max = max(config.sample_sizes)
    eligible = [(sid, c) for sid, c in dataset.stimuli if c.total > n_max]
    skipped = len(dataset.stimuli) - len(eligible)
    if skipped:
        logger.warning(f"Skipping {skipped} stimuli with at most {n_max} ratings")
    if not eligible:
        raise DomainError(f"no stimulus in {dataset.name} has more than {n_max} ratings")

    ids = [sid for sid, _ in eligible]
    counts = [c for _, c in eligible]
    options = config.fit_options or FitOptions()
    per_size = np.random.SeedSequence(config.seed).spawn(len(config.sample_sizes))
    tasks = [
        (counts, n, config.kinds, config.metrics, options, seq.spawn(config.n_trials))
        for n, seq in zip(config.sample_sizes, per_size)
    ]
    logger.info(f"Running {config.n_trials} trials for {len(tasks)} sample sizes over {len(eligible)} stimuli")

    if workers <= 1 or len(tasks) < 2:
        outputs = [_run_batch(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            outputs = list(executor.map(_run_batch, tasks))

    results = []
    for n, (stimuli, empirical, modeled) in zip(config.sample_sizes, outputs):
        result = TrialResult(
            n=n,
            n_trials=config.n_trials,
            model_errors={},
            empirical_errors={},
            model_std={},
            empirical_std={},
            diff_mean={},
            diff_std={},
            skipped_stimuli=skipped,
        )
        for m, metric in enumerate(config.metrics):
            result.empirical_errors[metric] = float(empirical[:, m].mean())
            result.empirical_std[metric] = _std(empirical[:, m])
            for k, kind in enumerate(config.kinds):
                diffs = empirical[:, m] - modeled[:, k, m]
                result.model_errors[(kind, metric)] = float(modeled[:, k, m].mean())
                result.model_std[(kind, metric)] = _std(modeled[:, k, m])
                result.diff_mean[(kind, metric)] = float(diffs.mean())
                result.diff_std[(kind, metric)] = _std(diffs)
                if config.keep_raw:
                    result.raw.extend(
                        TrialRecord(n, t, ids[stimuli[t]], kind, metric,
                                    float(modeled[t, k, m]), float(empirical[t, m]))
                        for t in range(config.n_trials)
                    )
        results.append(result)
        logger.debug(f"n={n}: empirical errors {result.empirical_errors}")
    return results


def effect_and_gain(results: Sequence[TrialResult], kind: ModelKind, metric: Metric,
                    pooled: bool = False) -> List[EffectAndGain]:
    """Cohen's d and sample gain at every sample size of a study"""
    model_curve = [(r.n, r.model_errors[(kind, metric)]) for r in results]
    empirical_curve = [(r.n, r.empirical_errors[metric]) for r in results]
    rows = []
    for r in results:
        estimate = gain(model_curve, empirical_curve, r.n)
        rows.append(EffectAndGain(r.n, r.cohens_d(kind, metric, pooled), estimate.samples, estimate.censored))
    return rows


def prediction_table(results: Sequence[TrialResult], kind: ModelKind, metric: Metric,
                     pooled: bool = False) -> List[Dict[str, Any]]:
    """Rows of sample size, model and empirical error, effect size and gain"""
    effects = {e.n: e for e in effect_and_gain(results, kind, metric, pooled)}
    return [
        {
            "n": r.n,
            "model": kind.label,
            "metric": metric.value,
            "model_error": r.model_errors[(kind, metric)],
            "empirical_error": r.empirical_errors[metric],
            "diff_mean": r.diff_mean[(kind, metric)],
            "diff_std": r.diff_std[(kind, metric)],
            "cohens_d": effects[r.n].cohens_d,
            "gain": effects[r.n].gain_samples,
            "gain_censored": effects[r.n].censored,
            "n_trials": r.n_trials,
        }
        for r in results
    ]


PREDICTION_COLUMNS = ("n", "model", "metric", "model_error", "empirical_error", "diff_mean", "diff_std",
                      "cohens_d", "gain", "gain_censored", "n_trials")
