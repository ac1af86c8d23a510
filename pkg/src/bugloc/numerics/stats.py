"""OLS fitting, Wald chunk tests, bootstrap optimism and Spearman correlation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ..errors import DegenerateInput, SingularCovariance, SingularDesign

_RANK_RTOL = 1e-10


@dataclass
class OlsFit:
    beta: np.ndarray           # coefficients, intercept first
    covariance: np.ndarray     # sigma^2 (X'X)^-1
    residual_variance: float
    r_squared: float
    adjusted_r_squared: float
    n: int
    p: int                     # explanatory columns, intercept excluded


@dataclass
class WaldResult:
    statistic: float
    degrees_of_freedom: int
    parameter_name: str | None = None


@dataclass
class BootstrapOptimism:
    corrected_adj_r2: float
    original_adj_r2: float
    mean_optimism: float
    resamples_used: int
    resamples_skipped: int


def _check_full_rank(x: np.ndarray) -> None:
    _, r, pivots = scipy.linalg.qr(x, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    threshold = diag[0] * _RANK_RTOL if diag.size and diag[0] > 0 else 0.0
    rank = int(np.sum(diag > threshold))
    if rank < x.shape[1]:
        raise SingularDesign(sorted(int(c) for c in pivots[rank:]))


def _r2_pair(y: np.ndarray, predicted: np.ndarray, n: int, p: int) -> tuple[float, float]:
    ss_res = float(np.sum((y - predicted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 0.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    adj = 1.0 - (1.0 - r2) * (n - 1) / (n - p - 1)
    return r2, adj


def ols_fit(x, y) -> OlsFit:
    """Least-squares fit; column 0 of x must be the intercept."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n, cols = x.shape
    if n <= cols:
        raise ValueError(f"need n > number of columns, got n={n}, columns={cols}")
    if not np.allclose(x[:, 0], 1.0):
        raise ValueError("column 0 of the design matrix must be the intercept")
    _check_full_rank(x)
    beta, *_ = np.linalg.lstsq(x, y, rcond=None)
    predicted = x @ beta
    p = cols - 1
    r2, adj = _r2_pair(y, predicted, n, p)
    dof = n - cols
    sigma2 = float(np.sum((y - predicted) ** 2)) / dof
    covariance = sigma2 * np.linalg.inv(x.T @ x)
    return OlsFit(beta=beta, covariance=covariance, residual_variance=sigma2,
                  r_squared=r2, adjusted_r_squared=adj, n=n, p=p)


def wald_chunk(fit: OlsFit, group, parameter_name: str | None = None) -> WaldResult:
    """Wald chi-square chunk test for a group of coefficients.

    With all other model terms retained this is the Type II test for the
    parameter the group encodes.
    """
    group = sorted(int(g) for g in group)
    if not group:
        raise ValueError("empty coefficient group")
    if 0 in group:
        raise ValueError("group must not include the intercept")
    if group[-1] >= len(fit.beta) or len(set(group)) != len(group):
        raise ValueError(f"invalid coefficient group {group}")
    beta_g = fit.beta[group]
    cov_g = fit.covariance[np.ix_(group, group)]
    try:
        factor = scipy.linalg.cho_factor(cov_g)
        stat = float(beta_g @ scipy.linalg.cho_solve(factor, beta_g))
    except scipy.linalg.LinAlgError as exc:
        raise SingularCovariance(f"covariance sub-block for {group} is singular") from exc
    return WaldResult(statistic=max(stat, 0.0), degrees_of_freedom=len(group),
                      parameter_name=parameter_name)


def iteration_rngs(seed, count: int) -> list[np.random.Generator]:
    """Independent per-iteration generators derived from one seed (int or
    SeedSequence)."""
    sequence = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.default_rng(s) for s in sequence.spawn(count)]


def bootstrap_optimism(x, y, b: int, seed=0) -> BootstrapOptimism:
    """Optimism-corrected adjusted R-squared via b bootstrap resamples.

    Each resample refits the model; its optimism is the adjusted R-squared on
    the resample minus the adjusted R-squared of that fit applied back to the
    original data. Singular resamples are skipped and counted.
    """
    if b < 1:
        raise ValueError("resample count must be >= 1")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    original = ols_fit(x, y)
    n, p = original.n, original.p
    optimisms: list[float] = []
    skipped = 0
    for rng in iteration_rngs(seed, b):
        idx = rng.integers(0, n, size=n)
        try:
            resample_fit = ols_fit(x[idx], y[idx])
        except SingularDesign:
            skipped += 1
            continue
        _, adj_on_original = _r2_pair(y, x @ resample_fit.beta, n, p)
        optimisms.append(resample_fit.adjusted_r_squared - adj_on_original)
    if not optimisms:
        raise DegenerateInput(f"all {b} bootstrap resamples were singular")
    mean_optimism = float(np.mean(optimisms))
    return BootstrapOptimism(
        corrected_adj_r2=original.adjusted_r_squared - mean_optimism,
        original_adj_r2=original.adjusted_r_squared,
        mean_optimism=mean_optimism,
        resamples_used=len(optimisms),
        resamples_skipped=skipped,
    )


def _average_ranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    sorted_values = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_values[j + 1] == sorted_values[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(x, y) -> float:
    """Spearman rank correlation with average ranks for ties."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or len(x) == 0:
        raise ValueError("x and y must be equal-length nonempty vectors")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise DegenerateInput("rank correlation undefined for a constant vector")
    rx = _average_ranks(x)
    ry = _average_ranks(y)
    rx -= rx.mean()
    ry -= ry.mean()
    return float((rx @ ry) / np.sqrt((rx @ rx) * (ry @ ry)))
