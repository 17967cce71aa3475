"""Benchmark construction and evaluation toolkit for modality-dense short video QA.

The pipeline runs corpus manifest -> density profiling -> category-balanced
sampling -> timeline alignment -> multi-agent QA annotation -> human review
-> judged evaluation, plus reward shaping for judged rollout groups.  Each
stage is importable on its own; the ``vidbench`` command exposes them as
subcommands.
"""

__version__ = "0.1.0"

from .errors import ConfigError, InputError, RuntimeFailure, ToolkitError, ValidationError

__all__ = [
    "ConfigError",
    "InputError",
    "RuntimeFailure",
    "ToolkitError",
    "ValidationError",
    "__version__",
]
