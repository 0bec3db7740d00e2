"""Cumulative-outcome local projections for climate shocks.

For each horizon h the outcome log(P[t+h]) - log(P[t-1]) is regressed on
the shock at t plus lagged one-quarter log changes of P, with region and
time fixed effects; the shock coefficient traced over h = 0..H is the
impulse response. Horizons are estimated by separate regressions, each with
Driscoll-Kraay standard errors whose default bandwidth grows with h to
cover the moving-average overlap the cumulative outcome induces.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import PanelDataset, checked_log
from .errors import ClimPanelError
from .regress import (
    Design,
    HACSpec,
    confidence_band,
    default_bandwidth,
    design_from_matrices,
    ols,
    significance_stars,
    with_driscoll_kraay,
)

DEFAULT_HORIZONS = tuple(range(9))


@dataclass(frozen=True)
class LPSpec:
    """Local-projection settings for one (outcome, shock) pair."""

    outcome: str
    shock: str
    horizons: tuple[int, ...] = DEFAULT_HORIZONS
    lags: int = 8
    fixed_effects: tuple[str, ...] = ("region", "time")
    hac: HACSpec | None = None   # None: Bartlett, bandwidth max(rule, h)
    level: float = 0.90
    sample: tuple | None = None

    def __post_init__(self):
        if any(h < 0 for h in self.horizons):
            raise ValueError("horizons must be nonnegative")
        if self.lags < 0:
            raise ValueError("lags must be >= 0")
        if not 0.0 < self.level < 1.0:
            raise ValueError("level must be in (0, 1)")


@dataclass(frozen=True)
class ImpulseResponse:
    horizon: int
    estimate: float
    se: float
    band: tuple[float, float]
    nobs: int


@dataclass(frozen=True)
class HorizonFailure:
    horizon: int
    message: str


@dataclass(frozen=True)
class LPResult:
    """Per-horizon impulse responses for one (shock, outcome) pair."""

    shock: str
    outcome: str
    level: float
    responses: tuple[ImpulseResponse, ...]
    failures: tuple[HorizonFailure, ...] = field(default=())


def build_lp_design(ds: PanelDataset, spec: LPSpec, horizon: int) -> Design:
    """Design for one horizon.

    Outcome: log(P[t+h]) - log(P[t-1]). Regressors: shock at t and lags
    1..spec.lags of the one-quarter log change of P. Rows needing leads or
    lags outside the panel are dropped listwise.
    """
    log_p = checked_log(ds, spec.outcome)
    R, T = log_p.shape
    h = horizon
    y = np.full((R, T), np.nan)
    if T - 1 - h >= 1:
        y[:, 1:T - h] = log_p[:, 1 + h:] - log_p[:, :T - 1 - h]
    dlog = np.full((R, T), np.nan)
    dlog[:, 1:] = log_p[:, 1:] - log_p[:, :-1]
    x_named = [(spec.shock, ds.values(spec.shock))]
    for n in range(1, spec.lags + 1):
        lagged = np.full((R, T), np.nan)
        lagged[:, n:] = dlog[:, :T - n]
        x_named.append((f"dlog_{spec.outcome}_lag{n}", lagged))
    return design_from_matrices(
        y, x_named, ds.regions, ds.time,
        fixed_effects=spec.fixed_effects, window=spec.sample,
    )


def _horizon_hac(spec: LPSpec, design: Design, horizon: int) -> HACSpec:
    if spec.hac is not None:
        return spec.hac
    n_periods = len(np.unique(design.time_codes))
    return HACSpec(bandwidth=max(default_bandwidth(n_periods), horizon))


def estimate_irf(ds: PanelDataset, spec: LPSpec) -> LPResult:
    """Estimate the impulse response at every requested horizon.

    Horizons are independent regressions; a failing horizon is recorded in
    LPResult.failures while the others are still returned. Only when every
    horizon fails is the first error re-raised.
    """
    responses = []
    failures = []
    errors = []
    for h in spec.horizons:
        try:
            design = build_lp_design(ds, spec, h)
            fit = ols(design)
            fit = with_driscoll_kraay(fit, _horizon_hac(spec, design, h))
            lo, hi = confidence_band(fit, spec.level)
            i = fit.names.index(spec.shock)
            responses.append(ImpulseResponse(
                horizon=h,
                estimate=float(fit.coef[i]),
                se=float(fit.se[i]),
                band=(float(lo[i]), float(hi[i])),
                nobs=fit.nobs,
            ))
        except ClimPanelError as exc:
            failures.append(HorizonFailure(h, f"{type(exc).__name__}: {exc}"))
            errors.append(exc)
    if not responses and errors:
        raise errors[0]
    return LPResult(
        shock=spec.shock, outcome=spec.outcome, level=spec.level,
        responses=tuple(responses), failures=tuple(failures),
    )


@dataclass(frozen=True)
class IRFRow:
    shock: str
    outcome: str
    horizon: int
    estimate: float
    se: float
    stars: str


def irf_table(results) -> tuple[IRFRow, ...]:
    """Flatten LP results into rows keyed (shock, outcome, horizon).

    Stars follow the two-sided normal 1/5/10 percent convention.
    """
    if isinstance(results, LPResult):
        results = [results]
    rows = []
    for res in results:
        for r in res.responses:
            rows.append(IRFRow(
                shock=res.shock, outcome=res.outcome, horizon=r.horizon,
                estimate=r.estimate, se=r.se,
                stars=significance_stars(r.estimate, r.se),
            ))
    rows.sort(key=lambda r: (r.shock, r.outcome, r.horizon))
    return tuple(rows)
