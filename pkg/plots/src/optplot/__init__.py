"""Figure rendering for benchmark CSV outputs; decoupled from the producer."""

from .figures import (
    EXPECTED_HEADERS,
    KINDS,
    FigureSpec,
    SchemaError,
    build_figure,
    data_layer,
    render,
)

__all__ = [
    "EXPECTED_HEADERS",
    "KINDS",
    "FigureSpec",
    "SchemaError",
    "build_figure",
    "data_layer",
    "render",
]

__version__ = "0.1.0"
