"""
Configuration Module for the ACR rating model toolkit
Settings come from environment variables (optionally a .env file) and are
exposed as class attributes of Config.
"""

import os
import logging
from dotenv import load_dotenv
from enum import Enum
from typing import List, Dict, Any, Optional
from pathlib import Path

# Load environment variables
load_dotenv()

logger = logging.getLogger(__name__)


def _env_flag(name: str, default: str = "0") -> bool:
    return os.getenv(name, default).strip().lower() in ("1", "true", "yes", "on")


def _env_seed(name: str) -> Optional[int]:
    value = os.getenv(name)
    if value is None or not value.strip():
        return None
    return int(value)


class ReportFormat(Enum):
    """Supported report formats"""
    CSV = "csv"
    JSON = "json"


class Config:
    """Configuration class for the ACR rating model toolkit"""

    APP_NAME = "ACR Rating Models"
    APP_VERSION = "1.0.0"

    # Rating scale
    NUM_CATEGORIES = int(os.getenv("ACR_NUM_CATEGORIES", "5"))

    # Reproducibility
    SEED = _env_seed("ACR_SEED")
    CI_MODE = _env_flag("ACR_CI")

    # Maximum likelihood fitting
    FIT_N_STARTS = int(os.getenv("FIT_N_STARTS", "8"))
    FIT_TOL = float(os.getenv("FIT_TOL", "1e-9"))
    FIT_MAX_ITER = int(os.getenv("FIT_MAX_ITER", "500"))

    # Maximum entropy Newton solver
    MAXENT_TOL = float(os.getenv("MAXENT_TOL", "1e-12"))
    MAXENT_MAX_ITER = int(os.getenv("MAXENT_MAX_ITER", "200"))

    # Goodness of fit
    BOOTSTRAP_SAMPLES = int(os.getenv("BOOTSTRAP_SAMPLES", "1000"))
    CONFIDENCE_LEVEL = float(os.getenv("CONFIDENCE_LEVEL", "0.95"))
    SIGNIFICANCE_LEVEL = float(os.getenv("SIGNIFICANCE_LEVEL", "0.05"))

    # Prediction study
    PREDICT_N_MIN = int(os.getenv("PREDICT_N_MIN", "10"))
    PREDICT_N_MAX = int(os.getenv("PREDICT_N_MAX", "40"))
    PREDICT_TRIALS = int(os.getenv("PREDICT_TRIALS", "10000"))

    # Parallelism
    WORKERS = int(os.getenv("ACR_WORKERS", "1"))

    # Logging Configuration
    LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO").upper()
    LOG_FILE = os.getenv("LOG_FILE", "acr_models.log")
    LOGS_DIR = Path(os.getenv("LOGS_DIR", "./logs"))
    LOG_MAX_SIZE = int(os.getenv("LOG_MAX_SIZE", "10485760"))  # 10MB
    LOG_BACKUP_COUNT = int(os.getenv("LOG_BACKUP_COUNT", "5"))

    # Reports
    CSV_FLOAT_FORMAT = os.getenv("CSV_FLOAT_FORMAT", "%.6g")
    REPORT_FORMAT = os.getenv("REPORT_FORMAT", "csv").lower()

    @classmethod
    def get_report_format(cls, name: Optional[str] = None) -> ReportFormat:
        """Get the report format, defaulting to CSV on unknown names"""
        value = (name or cls.REPORT_FORMAT).lower()
        try:
            return ReportFormat(value)
        except ValueError:
            logger.warning(f"Invalid report format: {value}. Defaulting to CSV.")
            return ReportFormat.CSV

    @classmethod
    def validate_config(cls) -> List[str]:
        """Validate the current configuration"""
        errors = []

        if cls.NUM_CATEGORIES < 2:
            errors.append("ACR_NUM_CATEGORIES must be at least 2")

        if not 0.0 < cls.CONFIDENCE_LEVEL < 1.0:
            errors.append("CONFIDENCE_LEVEL must be strictly between 0 and 1")
        if not 0.0 < cls.SIGNIFICANCE_LEVEL < 1.0:
            errors.append("SIGNIFICANCE_LEVEL must be strictly between 0 and 1")

        if cls.PREDICT_N_MIN > cls.PREDICT_N_MAX:
            errors.append("PREDICT_N_MIN must not exceed PREDICT_N_MAX")

        if cls.LOG_LEVEL not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            errors.append(f"LOG_LEVEL {cls.LOG_LEVEL} is not a logging level name")

        numeric_configs = [
            ("FIT_N_STARTS", cls.FIT_N_STARTS, 1, 1000),
            ("FIT_TOL", cls.FIT_TOL, 1e-15, 1e-2),
            ("FIT_MAX_ITER", cls.FIT_MAX_ITER, 10, 1000000),
            ("MAXENT_TOL", cls.MAXENT_TOL, 1e-15, 1e-6),
            ("MAXENT_MAX_ITER", cls.MAXENT_MAX_ITER, 5, 100000),
            ("BOOTSTRAP_SAMPLES", cls.BOOTSTRAP_SAMPLES, 0, 1000000),
            ("PREDICT_N_MIN", cls.PREDICT_N_MIN, 1, 1000000),
            ("PREDICT_TRIALS", cls.PREDICT_TRIALS, 1, 100000000),
            ("ACR_WORKERS", cls.WORKERS, 1, 512),
        ]

        for name, value, min_val, max_val in numeric_configs:
            if not min_val <= value <= max_val:
                errors.append(f"{name} must be between {min_val} and {max_val}")

        return errors

    @classmethod
    def get_fit_config(cls) -> Dict[str, Any]:
        """Get maximum likelihood fitting configuration"""
        return {
            'n_starts': cls.FIT_N_STARTS,
            'tol': cls.FIT_TOL,
            'max_iter': cls.FIT_MAX_ITER,
        }

    @classmethod
    def get_logging_config(cls) -> Dict[str, Any]:
        """Get logging configuration"""
        return {
            'level': cls.LOG_LEVEL,
            'file': cls.LOGS_DIR / cls.LOG_FILE,
            'max_size': cls.LOG_MAX_SIZE,
            'backup_count': cls.LOG_BACKUP_COUNT,
        }

    @classmethod
    def log_config_summary(cls):
        """Log a summary of the current configuration"""
        logger.info("Configuration Summary:")
        logger.info(f"  {cls.APP_NAME} v{cls.APP_VERSION}, K={cls.NUM_CATEGORIES}")
        logger.info(f"  Seed: {cls.SEED if cls.SEED is not None else 'fresh entropy'}, CI mode: {cls.CI_MODE}")
        logger.info(f"  Fit: {cls.FIT_N_STARTS} starts, tol={cls.FIT_TOL}, max_iter={cls.FIT_MAX_ITER}")
        logger.info(f"  Bootstrap: {cls.BOOTSTRAP_SAMPLES} samples at {cls.CONFIDENCE_LEVEL:.0%}")
        logger.info(f"  Prediction: n={cls.PREDICT_N_MIN}..{cls.PREDICT_N_MAX}, {cls.PREDICT_TRIALS} trials")
        logger.info(f"  Workers: {cls.WORKERS}")
