"""Exception types shared across the package."""

from __future__ import annotations


class NumericFailure(RuntimeError):
    """A non-finite value was met where finite math was required."""

    def __init__(self, message: str, layer_index: int | None = None):
        if layer_index is not None:
            message = f"{message} (layer {layer_index})"
        super().__init__(message)
        self.layer_index = layer_index


class ConfigError(ValueError):
    """Invalid benchmark or optimizer configuration."""
