"""Exceptions shared across the package."""

from __future__ import annotations

from typing import Optional


class NumericalFailure(RuntimeError):
    """A run produced non-finite values; carries the iteration it died at."""

    def __init__(self, message: str, iteration: Optional[int] = None):
        super().__init__(message if iteration is None else f"{message} (iteration {iteration})")
        self.iteration = iteration


class ConfigError(ValueError):
    """An experiment configuration is malformed or inconsistent."""
