"""Parameter sensitivity: treatment-coded regression of configuration
parameters on a response, optimism-corrected fit, and per-parameter Wald
chunk statistics with bootstrap percentile intervals.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .configs import parse_config_id
from .errors import DroppedParameterWarning, InsufficientVariation, SingularDesign
from .evaluation import EvalOutcome
from .numerics import bootstrap_optimism, ols_fit, wald_chunk
from .numerics.stats import iteration_rngs

_FAMILY_PARAMS = {
    "vsm": ("A", "B", "C", "D", "E"),
    "lsi": ("A", "B", "C", "F", "G"),
    "lda": ("A", "B", "C", "J"),
}


def _levels_of(config: str, family: str) -> dict[str, int]:
    cfg = parse_config_id(config)
    if family == "vsm":
        return {"A": cfg.a, "B": cfg.b, "C": cfg.c, "D": cfg.weight, "E": cfg.similarity}
    if family == "lsi":
        return {"A": cfg.a, "B": cfg.b, "C": cfg.c, "F": cfg.weight, "G": cfg.topics}
    return {"A": cfg.a, "B": cfg.b, "C": cfg.c, "J": cfg.topics}


@dataclass
class DesignMatrix:
    family: str
    response: str
    x: np.ndarray                      # n x (1 + sum(L-1)), intercept first
    y: np.ndarray
    column_names: list[str]
    groups: dict[str, list[int]]       # parameter -> column indices
    row_levels: dict[str, np.ndarray]  # parameter -> level per row
    configs: list[str]


def build_design_matrix(outcomes: list[EvalOutcome], response: str = "top_k",
                        log_response: bool = False) -> DesignMatrix:
    """Treatment-coded design for one family; the first level in code order is
    the reference. Constant parameters are dropped with a warning."""
    if not outcomes:
        raise ValueError("no outcomes")
    families = {o.family for o in outcomes}
    if len(families) != 1:
        raise ValueError(f"outcomes span several families: {sorted(families)}")
    family = families.pop()
    if family == "em":
        raise ValueError("the EM family has a single parameter and is not analyzed")
    if response not in ("top_k", "effort"):
        raise ValueError(f"unknown response {response!r}")

    ordered = sorted(outcomes, key=lambda o: o.config)
    rows = [_levels_of(o.config, family) for o in ordered]
    y = np.array([o.top_k if response == "top_k" else float(o.median_effort)
                  for o in ordered])
    if log_response:
        if np.any(y <= 0):
            raise ValueError("log response requires strictly positive values")
        y = np.log(y)

    params = _FAMILY_PARAMS[family]
    columns = ["intercept"]
    blocks = [np.ones((len(ordered), 1))]
    groups: dict[str, list[int]] = {}
    row_levels: dict[str, np.ndarray] = {}
    for param in params:
        values = np.array([r[param] for r in rows])
        levels = sorted(set(values.tolist()))
        if len(levels) < 2:
            warnings.warn(f"parameter {param} is constant across outcomes, dropped",
                          DroppedParameterWarning)
            continue
        row_levels[param] = values
        indices = []
        for level in levels[1:]:
            indices.append(len(columns))
            columns.append(f"{param}{level}")
            blocks.append((values == level).astype(float)[:, None])
        groups[param] = indices
    if not groups:
        raise InsufficientVariation("every configuration parameter is constant")
    x = np.hstack(blocks)
    return DesignMatrix(family=family, response=response, x=x, y=y,
                        column_names=columns, groups=groups, row_levels=row_levels,
                        configs=[o.config for o in ordered])


@dataclass
class ParameterSensitivity:
    parameter: str
    df: int
    observed_chi2: float
    median_chi2: float
    ci_low: float
    ci_high: float


@dataclass
class SensitivityReport:
    family: str
    response: str
    parameters: list[ParameterSensitivity]
    corrected_adj_r2: float
    original_adj_r2: float
    resamples: int
    skipped_resamples: int
    seed: int
    optimism_skipped: int = 0
    n_rows: int = 0
    columns: list[str] = field(default_factory=list)


def sensitivity_analysis(dm: DesignMatrix, b: int = 1000, seed: int = 0) -> SensitivityReport:
    """Wald chunk tests with bootstrap percentile CIs plus the
    optimism-corrected adjusted R-squared of the fit.

    Resamples that lose a parameter level entirely are skipped and counted;
    a resample that is singular despite keeping all levels propagates
    SingularDesign annotated with its index.
    """
    fit = ols_fit(dm.x, dm.y)
    observed = {p: wald_chunk(fit, idx, parameter_name=p).statistic
                for p, idx in dm.groups.items()}

    root = np.random.SeedSequence(seed)
    wald_seq, optimism_seq = root.spawn(2)
    level_counts = {p: len(set(v.tolist())) for p, v in dm.row_levels.items()}
    n = len(dm.y)
    samples: dict[str, list[float]] = {p: [] for p in dm.groups}
    skipped = 0
    for i, rng in enumerate(iteration_rngs(wald_seq, b)):
        idx = rng.integers(0, n, size=n)
        if any(len(set(dm.row_levels[p][idx].tolist())) != level_counts[p]
               for p in dm.groups):
            skipped += 1
            continue
        try:
            refit = ols_fit(dm.x[idx], dm.y[idx])
        except SingularDesign as exc:
            raise SingularDesign(exc.columns) from ValueError(
                f"bootstrap resample {i} is singular")
        for p, cols in dm.groups.items():
            samples[p].append(wald_chunk(refit, cols, parameter_name=p).statistic)

    optimism = bootstrap_optimism(dm.x, dm.y, b, seed=optimism_seq)
    parameters = []
    for p in dm.groups:
        values = np.array(samples[p]) if samples[p] else np.array([observed[p]])
        parameters.append(ParameterSensitivity(
            parameter=p,
            df=len(dm.groups[p]),
            observed_chi2=observed[p],
            median_chi2=float(np.median(values)),
            ci_low=float(np.percentile(values, 2.5)),
            ci_high=float(np.percentile(values, 97.5)),
        ))
    return SensitivityReport(
        family=dm.family, response=dm.response, parameters=parameters,
        corrected_adj_r2=optimism.corrected_adj_r2,
        original_adj_r2=optimism.original_adj_r2,
        resamples=b, skipped_resamples=skipped, seed=seed,
        optimism_skipped=optimism.resamples_skipped,
        n_rows=n, columns=dm.column_names,
    )
