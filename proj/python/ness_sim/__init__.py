"""Python access to the ness simulator.

Configs are the same INI files the ``ness`` command-line runner reads;
``overrides`` maps dotted keys such as ``"evolve.dt"`` to string values.
"""

import json

from ._core import (
    ConfigError,
    ConvergenceError,
    DegenerateStateError,
    DomainError,
    Error,
    InsufficientDataError,
    IoError,
    NumericalError,
    SingularMappingError,
    code_version,
    damped_trap,
    read_snapshot,
    read_time_series,
    run,
    sigma_of_t,
    solve,
)
from ._core import run_to_directory as _run_to_directory


def run_to_directory(config, out_dir, overrides=None):
    """Run `config` into `out_dir` and return the parsed manifest."""
    return json.loads(_run_to_directory(config, out_dir, overrides or {}))


__all__ = [
    "ConfigError",
    "ConvergenceError",
    "DegenerateStateError",
    "DomainError",
    "Error",
    "InsufficientDataError",
    "IoError",
    "NumericalError",
    "SingularMappingError",
    "code_version",
    "damped_trap",
    "read_snapshot",
    "read_time_series",
    "run",
    "run_to_directory",
    "sigma_of_t",
    "solve",
]
