"""
Configuration module for accproxcg.

This module handles loading and validating application settings from environment
variables and CLI arguments, and installs the logging handler used by the CLI.
"""

import logging
import os
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import click
from rich.logging import RichHandler


class LogLevel(str, Enum):
    """Log levels for the application."""
    DEBUG = "DEBUG"
    INFO = "INFO"
    WARNING = "WARNING"
    ERROR = "ERROR"


@dataclass
class AppConfig:
    """Application configuration for accproxcg.

    Experiment parameters live in the experiment spec; this object only carries
    settings that belong to the machine running the experiment.
    """

    output_dir: Optional[str] = None
    max_workers: int = 1
    log_level: LogLevel = LogLevel.INFO
    debug: bool = False

    @classmethod
    def from_env_and_args(
        cls,
        output_dir: Optional[str] = None,
        max_workers: Optional[int] = None,
        debug: bool = False,
    ) -> "AppConfig":
        """Create configuration from environment variables and CLI arguments.

        CLI arguments take precedence over environment variables.

        Args:
            output_dir: Directory that overrides the spec's output location
            max_workers: Maximum number of concurrent optimizer runs
            debug: Enable debug mode

        Returns:
            AppConfig: Application configuration
        """
        env_output_dir = os.getenv("ACCPROXCG_OUTPUT_DIR")
        env_max_workers = os.getenv("ACCPROXCG_MAX_WORKERS", "1")
        env_log_level = os.getenv("LOG_LEVEL", LogLevel.INFO.value)

        final_output_dir = output_dir or env_output_dir or None
        if max_workers is not None:
            final_max_workers = max_workers
        else:
            try:
                final_max_workers = int(env_max_workers)
            except ValueError:
                click.echo(f"⚠️ Ignoring non-integer ACCPROXCG_MAX_WORKERS={env_max_workers!r}")
                final_max_workers = 1

        try:
            log_level = LogLevel(env_log_level.upper())
        except ValueError:
            click.echo(f"⚠️ Unknown LOG_LEVEL {env_log_level!r}, using INFO")
            log_level = LogLevel.INFO

        return cls(
            output_dir=final_output_dir,
            max_workers=final_max_workers,
            log_level=log_level,
            debug=debug,
        )

    def validate(self) -> bool:
        """Validate the configuration.

        Returns:
            bool: True if configuration is valid, False otherwise
        """
        if self.max_workers < 1:
            click.echo(f"❌ max_workers must be at least 1, got {self.max_workers}")
            return False

        if self.output_dir and os.path.exists(self.output_dir) and not os.path.isdir(self.output_dir):
            click.echo(f"❌ Output directory is a file: {self.output_dir}")
            return False

        if self.debug and self.log_level != LogLevel.DEBUG:
            self.log_level = LogLevel.DEBUG
            click.echo("🔍 Debug mode enabled")

        return True

    def resolve_output_path(self, spec_output: str) -> str:
        """Apply the output directory override to a spec's output path.

        Args:
            spec_output: Output path written in the experiment spec

        Returns:
            str: Path the CSV is written to
        """
        if not self.output_dir:
            return spec_output
        return os.path.join(self.output_dir, os.path.basename(spec_output))


def setup_logging(level: LogLevel = LogLevel.INFO) -> None:
    """Route the ``accproxcg`` loggers through a rich handler.

    Args:
        level: Minimum level to emit
    """
    logger = logging.getLogger("accproxcg")
    logger.setLevel(level.value)
    if not any(isinstance(h, RichHandler) for h in logger.handlers):
        handler = RichHandler(show_path=False, rich_tracebacks=True)
        handler.setFormatter(logging.Formatter("%(name)s: %(message)s"))
        logger.addHandler(handler)
    logger.propagate = False
