"""Inverse problems for semilinear wave equations."""

from ._core import (
    ConfigError,
    CriterionResult,
    NumericalError,
    PreconditionError,
    RunOutcome,
    __version__,
    criterion_title,
    converge,
    num_criteria,
    pipeline_keys,
    probe_delta,
    read_wfld,
    run,
    run_config,
    run_criterion,
    sha256,
    validate,
)

__all__ = [
    "ConfigError",
    "CriterionResult",
    "NumericalError",
    "PreconditionError",
    "RunOutcome",
    "__version__",
    "criterion_title",
    "converge",
    "num_criteria",
    "pipeline_keys",
    "probe_delta",
    "read_wfld",
    "run",
    "run_config",
    "run_criterion",
    "sha256",
    "validate",
]
