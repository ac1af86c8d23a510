"""Numeric kernels: truncated SVD, collapsed Gibbs LDA, OLS/Wald/bootstrap
statistics and Spearman correlation. All kernels are deterministic given
their seed arguments."""

from .lda import LdaModel, gibbs_lda
from .stats import (
    BootstrapOptimism,
    OlsFit,
    WaldResult,
    bootstrap_optimism,
    ols_fit,
    spearman,
    wald_chunk,
)
from .svd import SvdFactors, truncated_svd

__all__ = [
    "BootstrapOptimism",
    "LdaModel",
    "OlsFit",
    "SvdFactors",
    "WaldResult",
    "bootstrap_optimism",
    "gibbs_lda",
    "ols_fit",
    "spearman",
    "truncated_svd",
    "wald_chunk",
]
