"""
SVG line charts for prediction curves and G-statistic CDFs.

Rendering goes through matplotlib's Agg backend with a fixed SVG hash salt
and no date metadata, so the same data gives a byte-identical file.
"""

import logging
from pathlib import Path
from typing import Dict, Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from errors import ReportWriteError  # noqa: E402
from gof import GCurvePoint  # noqa: E402
from models import ModelKind  # noqa: E402
from pmf_core import Metric  # noqa: E402
from predict import TrialResult  # noqa: E402

logger = logging.getLogger(__name__)

SVG_HASH_SALT = "acr-models"
FIGURE_SIZE = (6.4, 4.0)


def _save(fig, path: Union[str, Path]):
    try:
        with matplotlib.rc_context({"svg.hashsalt": SVG_HASH_SALT, "svg.fonttype": "none"}):
            fig.savefig(path, format="svg", metadata={"Date": None})
    except OSError as e:
        logger.error(f"Failed to write chart {path}: {e}")
        raise ReportWriteError(f"cannot write {path}: {e}") from e
    finally:
        plt.close(fig)
    logger.info(f"Wrote chart {path}")


def prediction_chart(results: Sequence[TrialResult], kinds: Sequence[ModelKind], metric: Metric,
                     path: Union[str, Path]):
    """Mean prediction error against training sample size, one line per model plus the empirical model"""
    ns = [r.n for r in results]
    fig, ax = plt.subplots(figsize=FIGURE_SIZE)
    for kind in kinds:
        ax.plot(ns, [r.model_errors[(kind, metric)] for r in results], label=kind.label)
    ax.plot(ns, [r.empirical_errors[metric] for r in results], label=ModelKind.EMPIRICAL.label, linestyle="--")
    ax.set_xlabel("training ratings n")
    ax.set_ylabel(f"mean {metric.value} error")
    ax.legend()
    ax.grid(True, alpha=0.3)
    _save(fig, path)


def g_cdf_chart(curves: Dict[str, Sequence[GCurvePoint]], path: Union[str, Path], df: int = 2):
    """Empirical CDFs of G statistics per model against the chi-squared reference"""
    fig, ax = plt.subplots(figsize=FIGURE_SIZE)
    reference = None
    for label, points in curves.items():
        if not points:
            continue
        ax.step([p.g for p in points], [p.cumulative_fraction for p in points], where="post", label=label)
        reference = points
    if reference is not None:
        ax.plot([p.g for p in reference], [p.reference for p in reference], color="black",
                linestyle=":", label=f"chi-squared, {df} df")
    ax.set_xlabel("G statistic")
    ax.set_ylabel("cumulative fraction")
    ax.set_ylim(0.0, 1.0)
    ax.legend()
    ax.grid(True, alpha=0.3)
    _save(fig, path)
