"""
The acr-models command set: fit, gof, predict, simulate, gcurve, pca and
quantiles. Each command validates its flags before doing any work and
returns 0 on success; failures propagate as exceptions that the startup
script turns into exit codes.
"""

import argparse
import logging
import time
from collections import deque
from datetime import datetime
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import psutil

from analysis import DEFAULT_ALPHAS, PcaReport, parse_alphas, pca_explained, quality_quantiles
from charts import g_cdf_chart, prediction_chart
from config import Config, ReportFormat
from dataset_loader import Dataset, DatasetLayout, load_dataset, write_counts_csv, write_report
from errors import DomainError, UsageError
from fit import FitOptions, fit_dataset
from gof import (GofRecord, GofSummary, degrees_of_freedom, evaluate_dataset, g_cdf_curve, rank_summaries,
                 summarize)
from models import PARAMETRIC_KINDS, ModelKind, n_params, parse_kind, parse_kinds, pmf_of
from pmf_core import normalize, parse_metric, sample
from predict import PREDICTION_COLUMNS, TrialConfig, TrialRecord, prediction_table, run_trials

logger = logging.getLogger(__name__)


class CommandStats:
    """Execution statistics of one command run"""

    def __init__(self, command: str):
        self.command = command
        self.started = datetime.now()
        self._t0 = time.perf_counter()
        self.outputs: List[str] = []
        self.errors = deque(maxlen=10)

    def record_output(self, path: Path):
        self.outputs.append(str(path))

    def record_error(self, error: str):
        self.errors.append({'time': datetime.now().strftime('%Y-%m-%d %H:%M:%S'), 'error': error})

    def get_stats(self) -> Dict[str, Any]:
        try:
            memory_mb = round(psutil.Process().memory_info().rss / 1024 / 1024, 1)
        except psutil.Error:
            memory_mb = None
        return {
            'command': self.command,
            'started': self.started.isoformat(timespec='seconds'),
            'elapsed_seconds': round(time.perf_counter() - self._t0, 3),
            'outputs': list(self.outputs),
            'error_count': len(self.errors),
            'recent_errors': list(self.errors),
            'memory_usage_mb': memory_mb,
        }

    def log_summary(self):
        stats = self.get_stats()
        logger.info(f"{self.command} finished in {stats['elapsed_seconds']}s, "
                    f"{stats['error_count']} error(s), {stats['memory_usage_mb']} MB resident, "
                    f"outputs: {', '.join(stats['outputs']) or 'none'}")


def resolve_seed(seed: Optional[int]) -> int:
    """Flag seed, else ACR_SEED, else fresh entropy (refused in CI mode)"""
    if seed is None:
        seed = Config.SEED
    if seed is None:
        if Config.CI_MODE:
            raise UsageError("randomized commands need --seed (or ACR_SEED) when ACR_CI is set")
        seed = int(np.random.SeedSequence().entropy % (2 ** 32))
        logger.info(f"No seed given; using {seed}")
    if seed < 0:
        raise UsageError(f"seed must be non-negative, got {seed}")
    return seed


def _check_paths(out: Path, *inputs: Optional[Path]):
    for path in inputs:
        if path is not None and Path(path).resolve() == Path(out).resolve():
            raise UsageError(f"output {out} would overwrite input {path}")


def _positive(name: str, value: int, minimum: int = 1):
    if value < minimum:
        raise UsageError(f"--{name} must be at least {minimum}, got {value}")


def _load(args: argparse.Namespace) -> Dataset:
    _check_paths(args.out, args.data)
    return load_dataset(args.data, DatasetLayout(args.layout), args.categories)


def _parametric(kinds: Sequence[ModelKind]) -> List[ModelKind]:
    if ModelKind.EMPIRICAL in kinds:
        raise UsageError("the empirical model has no degrees of freedom left for this command")
    return list(kinds)


def _report_format(args: argparse.Namespace) -> ReportFormat:
    return ReportFormat(args.format)


def cmd_fit(args: argparse.Namespace, stats: CommandStats) -> int:
    """Per-stimulus maximum likelihood fits of one model"""
    kind = parse_kind(args.model)
    seed = resolve_seed(args.seed)
    dataset = _load(args)
    fits = fit_dataset(kind, dataset.counts, FitOptions.from_config(seed), args.workers)
    rows = [{"stimulus_id": sid, **fit.to_row()} for sid, fit in zip(dataset.ids, fits)]
    for sid, fit in zip(dataset.ids, fits):
        if not fit.converged:
            stats.record_error(f"{sid}: {kind.value} fit did not converge")
    write_report(rows, args.out, _report_format(args))
    stats.record_output(args.out)
    return 0


def cmd_gof(args: argparse.Namespace, stats: CommandStats) -> int:
    """Goodness-of-fit table: one summary row per model, best mean G first"""
    kinds = _parametric(parse_kinds(args.models))
    _positive("boot", args.boot, 0)
    seed = resolve_seed(args.seed)
    dataset = _load(args)
    _check_paths(args.records or args.out, args.data)

    options = FitOptions.from_config(seed)
    summaries: List[GofSummary] = []
    all_records: List[GofRecord] = []
    for kind in kinds:
        records = evaluate_dataset(dataset, kind, options, args.workers)
        all_records.extend(records)
        summaries.append(summarize(records, n_boot=args.boot, seed=seed))
        logger.info(f"{kind.value}: mean G {summaries[-1].mean_g:.4f}, "
                    f"ratio p<{Config.SIGNIFICANCE_LEVEL} {summaries[-1].ratio_p_lt_05:.4f}")

    write_report(rank_summaries(summaries), args.out, _report_format(args), GofSummary.REPORT_COLUMNS)
    stats.record_output(args.out)
    if args.records:
        write_report(all_records, args.records, _report_format(args), GofRecord.REPORT_COLUMNS)
        stats.record_output(args.records)
    return 0


def cmd_predict(args: argparse.Namespace, stats: CommandStats) -> int:
    """Prediction study: error curves, Cohen's d and gain per model and metric"""
    kinds = _parametric(parse_kinds(args.models))
    try:
        metrics = [parse_metric(name) for name in args.metric.split(",") if name.strip()]
    except DomainError as e:
        raise UsageError(str(e)) from None
    if args.nmin > args.nmax:
        raise UsageError(f"--nmin {args.nmin} exceeds --nmax {args.nmax}")
    _positive("nmin", args.nmin)
    _positive("trials", args.trials)
    seed = resolve_seed(args.seed)
    for extra in (args.raw, args.svg):
        if extra is not None:
            _check_paths(extra, args.data)
    dataset = _load(args)
    if args.nmax >= dataset.min_total:
        raise UsageError(f"--nmax {args.nmax} must be below the smallest rating count in "
                         f"{dataset.name} ({dataset.min_total})")

    config = TrialConfig(
        sample_sizes=tuple(range(args.nmin, args.nmax + 1)),
        n_trials=args.trials,
        kinds=tuple(kinds),
        metrics=tuple(metrics),
        seed=seed,
        fit_options=FitOptions.from_config(seed),
        keep_raw=args.raw is not None,
    )
    results = run_trials(dataset, config, args.workers)

    rows = []
    for kind in kinds:
        for metric in metrics:
            rows.extend(prediction_table(results, kind, metric, pooled=args.pooled))
    write_report(rows, args.out, _report_format(args), PREDICTION_COLUMNS)
    stats.record_output(args.out)

    if args.raw:
        raw = [record for r in results for record in r.raw]
        write_report(raw, args.raw, ReportFormat.CSV, TrialRecord.REPORT_COLUMNS)
        stats.record_output(args.raw)
    if args.svg:
        prediction_chart(results, kinds, metrics[0], args.svg)
        stats.record_output(args.svg)
    return 0


def _parse_params(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise UsageError(f"--params must be comma-separated numbers, got '{text}'") from None


def cmd_simulate(args: argparse.Namespace, stats: CommandStats) -> int:
    """Synthetic dataset sampled from one model instance"""
    kind = parse_kind(args.model)
    params = _parse_params(args.params)
    _positive("n", args.n)
    _positive("stimuli", args.stimuli)
    seed = resolve_seed(args.seed)
    pmf = pmf_of(kind, params, args.categories or Config.NUM_CATEGORIES)

    width = max(5, len(str(args.stimuli)))
    children = np.random.SeedSequence(seed).spawn(args.stimuli)
    stimuli = tuple((f"sim-{i + 1:0{width}d}", sample(pmf, args.n, child)) for i, child in enumerate(children))
    dataset = Dataset(Path(args.out).stem, stimuli, pmf.K)
    write_counts_csv(dataset, args.out)
    stats.record_output(args.out)
    return 0


def _grid(args: argparse.Namespace) -> np.ndarray:
    if args.grid_step <= 0.0 or args.grid_max <= 0.0:
        raise UsageError("--grid-max and --grid-step must be positive")
    steps = int(round(args.grid_max / args.grid_step))
    return np.linspace(0.0, steps * args.grid_step, steps + 1)


def cmd_gcurve(args: argparse.Namespace, stats: CommandStats) -> int:
    """Plot-ready G-statistic CDF per model with the chi-squared reference"""
    kinds = _parametric(parse_kinds(args.models))
    grid = _grid(args)
    seed = resolve_seed(args.seed)
    if args.svg is not None:
        _check_paths(args.svg, args.data)
    dataset = _load(args)

    options = FitOptions.from_config(seed)
    rows = []
    curves = {}
    df = 2
    for kind in kinds:
        df = degrees_of_freedom(dataset.K, n_params(kind, dataset.K))
        points = g_cdf_curve(evaluate_dataset(dataset, kind, options, args.workers), grid, df)
        curves[kind.label] = points
        rows.extend({"model": kind.label, "g": p.g, "cumulative_fraction": p.cumulative_fraction,
                     "reference": p.reference} for p in points)
    write_report(rows, args.out, _report_format(args), ("model", "g", "cumulative_fraction", "reference"))
    stats.record_output(args.out)
    if args.svg:
        g_cdf_chart(curves, args.svg, df)
        stats.record_output(args.svg)
    return 0


def cmd_pca(args: argparse.Namespace, stats: CommandStats) -> int:
    """Explained variance of the principal components of the empirical PMFs"""
    dataset = _load(args)
    rated = [c for c in dataset.counts if c.total > 0]
    if len(rated) < len(dataset):
        logger.warning(f"Skipping {len(dataset) - len(rated)} stimuli without ratings")
        stats.record_error(f"{len(dataset) - len(rated)} stimuli without ratings")
    report = pca_explained([normalize(c) for c in rated], standardize=args.standardize)
    write_report(report.to_rows(), args.out, _report_format(args), PcaReport.REPORT_COLUMNS)
    stats.record_output(args.out)
    return 0


def cmd_quantiles(args: argparse.Namespace, stats: CommandStats) -> int:
    """Latent quality quantiles per stimulus from a fitted quantized model"""
    kind = parse_kind(args.model)
    if kind.latent_family is None:
        raise UsageError(f"quantiles need a quantized latent model; {kind.value} has no latent scale")
    try:
        alphas = parse_alphas(args.alphas) if args.alphas else list(DEFAULT_ALPHAS)
    except DomainError as e:
        raise UsageError(str(e)) from None
    seed = resolve_seed(args.seed)
    dataset = _load(args)

    fits = fit_dataset(kind, dataset.counts, FitOptions.from_config(seed), args.workers)
    rows = [
        {"stimulus_id": sid, "model": kind.label, **row.to_row()}
        for sid, fit in zip(dataset.ids, fits)
        for row in quality_quantiles(fit, alphas, dataset.K)
    ]
    write_report(rows, args.out, _report_format(args), ("stimulus_id", "model", "alpha", "latent", "rescaled"))
    stats.record_output(args.out)
    return 0


COMMANDS: Dict[str, Callable[[argparse.Namespace, CommandStats], int]] = {
    "fit": cmd_fit,
    "gof": cmd_gof,
    "predict": cmd_predict,
    "simulate": cmd_simulate,
    "gcurve": cmd_gcurve,
    "pca": cmd_pca,
    "quantiles": cmd_quantiles,
}


def _add_common(parser: argparse.ArgumentParser, data: bool = True, seed: bool = True):
    if data:
        parser.add_argument("--data", type=Path, required=True, help="dataset CSV")
        parser.add_argument("--layout", choices=[layout.value for layout in DatasetLayout], default="wide",
                            help="wide: stimulus_id,c1..cK; long: stimulus_id,rating")
    parser.add_argument("--out", type=Path, required=True, help="output file")
    parser.add_argument("--format", choices=[f.value for f in ReportFormat],
                        default=Config.get_report_format().value)
    parser.add_argument("--categories", type=int, default=None, help="number of rating categories K")
    if seed:
        parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--workers", type=int, default=Config.WORKERS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="acr-models", description="Rating distribution models for ACR data")
    parser.add_argument("--version", action="version", version=f"%(prog)s {Config.APP_VERSION}")
    parser.add_argument("--log-level", default=None, help="override LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)
    all_parametric = ",".join(k.value for k in PARAMETRIC_KINDS)

    p = sub.add_parser("fit", help="fit one model to every stimulus")
    _add_common(p)
    p.add_argument("--model", required=True)

    p = sub.add_parser("gof", help="goodness-of-fit table over models")
    _add_common(p)
    p.add_argument("--models", default=all_parametric)
    p.add_argument("--boot", type=int, default=Config.BOOTSTRAP_SAMPLES)
    p.add_argument("--records", type=Path, default=None, help="per-stimulus G-test records")

    p = sub.add_parser("predict", help="out-of-sample prediction study")
    _add_common(p)
    p.add_argument("--models", default=ModelKind.QUANTIZED_LOGIT_LOGISTIC.value)
    p.add_argument("--nmin", type=int, default=Config.PREDICT_N_MIN)
    p.add_argument("--nmax", type=int, default=Config.PREDICT_N_MAX)
    p.add_argument("--trials", type=int, default=Config.PREDICT_TRIALS)
    p.add_argument("--metric", default="linf", help="comma-separated metric names")
    p.add_argument("--pooled", action="store_true", help="pooled instead of paired Cohen's d")
    p.add_argument("--raw", type=Path, default=None, help="per-trial CSV")
    p.add_argument("--svg", type=Path, default=None, help="error-vs-n chart")

    p = sub.add_parser("simulate", help="sample a synthetic dataset from a model")
    _add_common(p, data=False)
    p.add_argument("--model", required=True)
    p.add_argument("--params", required=True, help="comma-separated parameters")
    p.add_argument("--n", type=int, required=True, help="ratings per stimulus")
    p.add_argument("--stimuli", type=int, default=1)

    p = sub.add_parser("gcurve", help="G-statistic CDFs")
    _add_common(p)
    p.add_argument("--models", default=all_parametric)
    p.add_argument("--grid-max", type=float, default=20.0)
    p.add_argument("--grid-step", type=float, default=0.1)
    p.add_argument("--svg", type=Path, default=None)

    p = sub.add_parser("pca", help="principal components of the empirical PMFs")
    _add_common(p, seed=False)
    p.add_argument("--standardize", action="store_true", help="correlation instead of covariance PCA")

    p = sub.add_parser("quantiles", help="latent quality quantiles from fitted models")
    _add_common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--alphas", default=None, help="comma-separated levels in (0, 1)")
    return parser


def run_command(args: argparse.Namespace) -> int:
    """Dispatch a parsed command line, logging a run summary"""
    if args.workers < 1:
        raise UsageError(f"--workers must be at least 1, got {args.workers}")
    if args.categories is not None and args.categories < 2:
        raise UsageError(f"--categories must be at least 2, got {args.categories}")
    stats = CommandStats(args.command)
    logger.info(f"Running {args.command}")
    try:
        return COMMANDS[args.command](args, stats)
    except Exception as e:
        stats.record_error(str(e))
        logger.error(f"{args.command} failed: {e}")
        raise
    finally:
        stats.log_summary()
