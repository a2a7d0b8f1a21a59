"""Finite-volume solver for aggregation-diffusion equations with bounded kernels."""

from ._aggdiff import (  # noqa: F401
    ConfigError,
    NumericalError,
    __version__,
    analyze_kernel,
    detailed_balance,
    preset_text,
    presets,
    run,
    simulate,
)
