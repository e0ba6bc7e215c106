"""Python bindings for the fmpols C++ library."""

from ._core import (
    BoundInputs,
    FmpolsError,
    certify_gain,
    design_gain,
    diff_coeffs,
    fm_pols,
    lag_coeffs,
    log_fit,
    oracle_complex_coeffs,
    preset_json,
    preset_names,
    regret_bound,
    residual_bound,
    run,
    run_to_dir,
    simulate,
    verify,
)

__all__ = [
    "BoundInputs",
    "FmpolsError",
    "certify_gain",
    "design_gain",
    "diff_coeffs",
    "fm_pols",
    "lag_coeffs",
    "log_fit",
    "oracle_complex_coeffs",
    "preset_json",
    "preset_names",
    "regret_bound",
    "residual_bound",
    "run",
    "run_to_dir",
    "simulate",
    "verify",
]
