"""Long-term treatment effects under monotone missing outcomes."""

from ._core import (
    ConfigError,
    DataError,
    __version__,
    eps_ate,
    eps_cate,
    estimate,
    methods,
    paired_t_test,
    run,
    simulate,
)

__all__ = [
    "ConfigError",
    "DataError",
    "__version__",
    "eps_ate",
    "eps_cate",
    "estimate",
    "methods",
    "paired_t_test",
    "run",
    "simulate",
]
