#!/usr/bin/env python3
"""
ACR Rating Models - Startup Script
Configures logging, validates the configuration and runs one command,
turning failures into exit codes:
  0 success, 1 I/O failure, 2 usage or validation error, 3 numerical failure.
"""

import logging
import sys
from enum import IntEnum
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import List, Optional

# Add the current directory to Python path
sys.path.insert(0, str(Path(__file__).parent))

from config import Config  # noqa: E402
from errors import (DatasetParseError, DomainError, ReportWriteError,  # noqa: E402
                    UnsupportedModelError, UsageError)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


class ExitCode(IntEnum):
    SUCCESS = 0
    IO_ERROR = 1
    USAGE_ERROR = 2
    NUMERICAL_ERROR = 3


def exit_code_for(error: BaseException) -> ExitCode:
    """Exit code for an exception escaping a command"""
    if isinstance(error, (UsageError, DomainError, UnsupportedModelError)):
        return ExitCode.USAGE_ERROR
    if isinstance(error, (OSError, DatasetParseError, ReportWriteError)):
        return ExitCode.IO_ERROR
    return ExitCode.NUMERICAL_ERROR


def setup_logging(level: Optional[str] = None):
    """Setup logging configuration"""
    settings = Config.get_logging_config()
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    try:
        Config.LOGS_DIR.mkdir(parents=True, exist_ok=True)
        handlers.append(RotatingFileHandler(
            settings['file'], maxBytes=settings['max_size'], backupCount=settings['backup_count'],
            encoding='utf-8',
        ))
    except OSError as e:
        print(f"Cannot open log file {settings['file']}: {e}", file=sys.stderr)

    logging.basicConfig(
        level=(level or settings['level']).upper(),
        format=LOG_FORMAT,
        handlers=handlers,
        force=True,
    )


def validate_configuration() -> bool:
    """Validate the environment configuration"""
    logger = logging.getLogger(__name__)
    Config.log_config_summary()
    errors = Config.validate_config()
    if errors:
        for error in errors:
            logger.error(f"Configuration error: {error}")
        return False
    return True


def main(argv: Optional[List[str]] = None) -> int:
    """Run one acr-models command and return its exit code"""
    from commands import build_parser, run_command

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return ExitCode.SUCCESS if e.code in (0, None) else ExitCode.USAGE_ERROR

    try:
        setup_logging(args.log_level)
    except ValueError as e:
        print(f"Invalid log level: {e}", file=sys.stderr)
        return ExitCode.USAGE_ERROR
    logger = logging.getLogger(__name__)

    if not validate_configuration():
        return ExitCode.USAGE_ERROR

    try:
        return ExitCode(run_command(args))
    except Exception as e:
        code = exit_code_for(e)
        print(f"acr-models {args.command}: {e}", file=sys.stderr)
        logger.debug(f"{type(e).__name__} mapped to exit code {int(code)}")
        return code


def cli():
    """Console script entry point"""
    # Check Python version
    if sys.version_info < (3, 9):
        print("Python 3.9 or higher is required", file=sys.stderr)
        sys.exit(ExitCode.IO_ERROR)

    sys.exit(int(main()))


if __name__ == "__main__":
    cli()
