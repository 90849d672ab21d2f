"""Estimate the watermarked proportion of mixed-source pivotal streams.

The package simulates three token-level watermark schemes (Gumbel-max,
inverse transform, green-red list), turns token/pseudorandomness pairs
into pivotal statistics with a uniform null law, and estimates what
fraction of a mixed sample is watermarked via three estimators of
increasing efficiency, with variance diagnostics, a keyed-hash
verification path for raw token streams, and a CLI over all of it.
"""

from .core import Ecdf, NtpDistribution, ecdf_build, ecdf_query
from .errors import (ConvergenceError, DegenerateDenominator, DomainError,
                     EmptyDataset, ParseError, WmpropError)
from .estimators import (DensityRatioHistogram, Diagnostics, EstimateReport,
                         EstimatorConfig, FixedPointSolution, estimate_ini,
                         estimate_opt, estimate_report, estimate_rfn,
                         fit_density_ratio, operator_T, variance_bounds)
from .mle_bias import (BinaryMixtureParams, LimitSolution, MleBiasRow,
                       MleSolution, limit_solution, regularized_mle,
                       run_mle_bias, sample_binary_mixture)
from .rng import derive_key, make_rng
from .simulate import (EditOutcome, EditSpec, MixtureSpec, NtpSimConfig,
                       TokenStream, apply_edits, build_mixture, gen_ntp,
                       sample_null_pivots, simulate_token_stream,
                       simulate_watermarked_pivots)
from .sweep import SweepConfig, SweepResult, run_sweep, write_sweep_csv
from .verifier import TokenRecord, VerifierKey, derive_xi, pivotal_sequence
from .watermarks import (GreenRedParams, PseudoRandomness, Scheme, SchemeKind,
                         alt_cdf, decode, green_red_mu, green_size, pit,
                         pivotal)

__version__ = "0.1.0"

__all__ = [
    "Ecdf", "NtpDistribution", "ecdf_build", "ecdf_query",
    "WmpropError", "DomainError", "EmptyDataset", "DegenerateDenominator",
    "ConvergenceError", "ParseError",
    "Scheme", "SchemeKind", "GreenRedParams", "PseudoRandomness",
    "decode", "pivotal", "pit", "alt_cdf", "green_size", "green_red_mu",
    "NtpSimConfig", "MixtureSpec", "TokenStream", "EditSpec", "EditOutcome",
    "gen_ntp", "simulate_watermarked_pivots", "sample_null_pivots",
    "build_mixture", "simulate_token_stream", "apply_edits",
    "EstimatorConfig", "DensityRatioHistogram", "Diagnostics",
    "EstimateReport", "FixedPointSolution", "estimate_ini", "estimate_rfn",
    "fit_density_ratio", "operator_T", "estimate_opt", "variance_bounds",
    "estimate_report",
    "BinaryMixtureParams", "MleSolution", "LimitSolution", "MleBiasRow",
    "sample_binary_mixture", "regularized_mle", "limit_solution",
    "run_mle_bias",
    "VerifierKey", "TokenRecord", "derive_xi", "pivotal_sequence",
    "SweepConfig", "SweepResult", "run_sweep", "write_sweep_csv",
    "derive_key", "make_rng",
    "__version__",
]
