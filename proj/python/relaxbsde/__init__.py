"""Optimal control of backward SDEs with relaxed and strict controls."""

from ._relaxbsde import (
    ConfigError,
    SolverError,
    chatter,
    generate_paths,
    list_problems,
    optimize,
    run_cli,
    set_workers,
    solve,
    verify,
)

__all__ = [
    "ConfigError",
    "SolverError",
    "chatter",
    "generate_paths",
    "list_problems",
    "optimize",
    "run_cli",
    "set_workers",
    "solve",
    "verify",
]
