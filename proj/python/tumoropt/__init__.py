"""Optimal control of a Cahn-Hilliard / nutrient tumour growth model.

The heavy lifting happens in the compiled ``_tumoropt`` extension; arrays are
exchanged as numpy arrays shaped ``(levels, ny, nx)``.
"""

from ._tumoropt import (
    ConfigError,
    DivergenceError,
    UsageError,
    Grid,
    Problem,
    check_config,
    dot_product_test,
    neumann_laplacian,
    run_subcommand,
)

__all__ = [
    "ConfigError",
    "DivergenceError",
    "UsageError",
    "Grid",
    "Problem",
    "check_config",
    "dot_product_test",
    "neumann_laplacian",
    "run_subcommand",
]
