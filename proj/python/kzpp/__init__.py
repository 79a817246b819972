"""Randomized block Kaczmarz (K++) and coordinate descent (CD++) solvers."""

from ._kzpp import (
    ConfigError,
    ConvergenceError,
    DimensionError,
    Error,
    FormatError,
    NotPositiveDefinite,
    Problem,
    demmel_tail_condition,
    dpp_expected_size,
    effective_dimension,
    fht,
    generate,
    kernel_matrix,
    make_low_rank,
    model_cg_iteration,
    model_cholesky,
    model_gmres_total,
    solve,
    sym_fht,
    tail_average,
    verify,
)

__all__ = [
    "ConfigError",
    "ConvergenceError",
    "DimensionError",
    "Error",
    "FormatError",
    "NotPositiveDefinite",
    "Problem",
    "demmel_tail_condition",
    "dpp_expected_size",
    "effective_dimension",
    "fht",
    "generate",
    "kernel_matrix",
    "make_low_rank",
    "model_cg_iteration",
    "model_cholesky",
    "model_gmres_total",
    "solve",
    "sym_fht",
    "tail_average",
    "verify",
]
