"""Fixed-effects least squares with classical and Driscoll-Kraay covariance.

The estimation path is: assemble a listwise-deleted design from panel
series, absorb region/time fixed effects by demeaning (two-way by
alternating projections), solve by rank-revealing pivoted QR, then attach
either the classical covariance sigma^2 (X'X)^-1 or the Driscoll-Kraay HAC
covariance built from Bartlett-weighted autocovariances of the
cross-sectionally summed moment vectors h_t = sum_i x_it e_it.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy import linalg, stats

from .dataset import PanelDataset, QuarterIndex
from .errors import (
    BandwidthError,
    DegreesOfFreedomError,
    RankDeficiencyError,
    SampleError,
)

FIXED_EFFECT_DIMS = ("region", "time")

# Two-sided normal critical values for 1% / 5% / 10% significance stars.
_STAR_CUTOFFS = (
    (float(stats.norm.ppf(0.995)), "***"),
    (float(stats.norm.ppf(0.975)), "**"),
    (float(stats.norm.ppf(0.95)), "*"),
)

_RANK_TOL = 1e-10


@dataclass(frozen=True)
class HACSpec:
    """Bartlett-kernel HAC settings: lag truncation L and the small-sample
    scaling T/(T-k) applied to the moment covariance when flagged."""

    bandwidth: int
    small_sample: bool = True
    kernel: str = "bartlett"

    def __post_init__(self):
        if self.bandwidth < 0:
            raise ValueError("bandwidth must be >= 0")
        if self.kernel != "bartlett":
            raise ValueError(f"only the bartlett kernel is supported, "
                             f"got {self.kernel!r}")


def bartlett_weights(bandwidth: int) -> np.ndarray:
    """Triangular lag weights w_l = 1 - l/(L+1), l = 0..L."""
    return 1.0 - np.arange(bandwidth + 1) / (bandwidth + 1.0)


def default_bandwidth(n_periods: int) -> int:
    """Newey-West rule of thumb floor(4 (T/100)^(2/9))."""
    return int(math.floor(4.0 * (n_periods / 100.0) ** (2.0 / 9.0)))


@dataclass(frozen=True)
class RegressionSpec:
    """One fixed-effects regression: outcome, regressors, FE dims, window."""

    outcome: str
    regressors: tuple[str, ...]
    fixed_effects: tuple[str, ...] = ()
    sample: tuple[QuarterIndex | str, QuarterIndex | str] | None = None
    add_constant: bool | None = None

    def __post_init__(self):
        if not self.regressors:
            raise ValueError("at least one regressor is required")
        if len(set(self.regressors)) != len(self.regressors):
            raise ValueError("regressor names must be unique")
        bad = [d for d in self.fixed_effects if d not in FIXED_EFFECT_DIMS]
        if bad:
            raise ValueError(f"unknown fixed-effect dims {bad}; "
                             f"allowed: {FIXED_EFFECT_DIMS}")


@dataclass(frozen=True)
class Design:
    """Stacked regression sample (region-major, time within region)."""

    y: np.ndarray
    X: np.ndarray
    names: tuple[str, ...]
    region_codes: np.ndarray   # row index into regions
    time_codes: np.ndarray     # absolute quarter number (year*4 + quarter-1)
    regions: tuple[str, ...]
    time: tuple[QuarterIndex, ...]
    fixed_effects: tuple[str, ...] = ()
    demeaned: bool = False
    absorbed: int = 0
    orig_y: np.ndarray | None = None
    orig_X: np.ndarray | None = None

    @property
    def nobs(self) -> int:
        return self.y.shape[0]


def _quarter_code(q: QuarterIndex) -> int:
    return q.year * 4 + (q.quarter - 1)


def design_from_matrices(
    y_mat: np.ndarray,
    x_named,
    regions,
    time,
    fixed_effects=(),
    window=None,
    add_constant: bool | None = None,
) -> Design:
    """Stack region-by-quarter matrices into a listwise-deleted design.

    x_named is an ordered list of (name, matrix) pairs; rows with any NaN in
    the outcome or a regressor are dropped. When no fixed effects are
    declared a constant column is appended (override with add_constant).
    """
    regions = tuple(regions)
    time = tuple(time)
    if window is not None:
        lo = QuarterIndex.parse(window[0])
        hi = QuarterIndex.parse(window[1])
        a = max(lo - time[0], 0)
        b = min(hi - time[0], len(time) - 1)
        if b < a:
            raise SampleError(f"sample window {lo}..{hi} is empty")
        sl = slice(a, b + 1)
        time = time[sl]
        y_mat = y_mat[:, sl]
        x_named = [(name, mat[:, sl]) for name, mat in x_named]
    R, T = len(regions), len(time)
    y = np.asarray(y_mat, dtype=float).reshape(R * T)
    cols = [np.asarray(mat, dtype=float).reshape(R * T) for _, mat in x_named]
    names = [name for name, _ in x_named]
    keep = np.isfinite(y)
    for col in cols:
        keep &= np.isfinite(col)
    n = int(keep.sum())
    if n == 0:
        raise SampleError(
            f"no usable observations: all {R * T} rows dropped listwise"
        )
    region_codes = np.repeat(np.arange(R), T)[keep]
    tc = np.array([_quarter_code(q) for q in time])
    time_codes = np.tile(tc, R)[keep]
    X = np.column_stack([c[keep] for c in cols])
    if add_constant is None:
        add_constant = not fixed_effects
    if add_constant:
        X = np.column_stack([X, np.ones(n)])
        names = names + ["const"]
    return Design(
        y=y[keep], X=X, names=tuple(names),
        region_codes=region_codes, time_codes=time_codes,
        regions=regions, time=time, fixed_effects=tuple(fixed_effects),
    )


def build_design(ds: PanelDataset, spec: RegressionSpec) -> Design:
    """Design for a RegressionSpec over named panel series."""
    y_mat = ds.values(spec.outcome)
    x_named = [(name, ds.values(name)) for name in spec.regressors]
    return design_from_matrices(
        y_mat, x_named, ds.regions, ds.time,
        fixed_effects=spec.fixed_effects, window=spec.sample,
        add_constant=spec.add_constant,
    )


def _subtract_group_means(Z: np.ndarray, codes: np.ndarray, n_groups: int) -> float:
    sums = np.zeros((n_groups, Z.shape[1]))
    np.add.at(sums, codes, Z)
    counts = np.bincount(codes, minlength=n_groups).astype(float)
    means = sums / counts[:, None]
    Z -= means[codes]
    return float(np.abs(means).max())


def within_transform(
    design: Design,
    drop_singletons: bool = True,
    tol: float = 1e-12,
    max_iter: int = 1000,
) -> Design:
    """Absorb declared fixed effects by demeaning.

    Two-way absorption alternates region and time demeaning until the
    largest subtracted group mean falls below tol (scaled up for data far
    from unit magnitude). Groups with a single observation carry no within
    information and are dropped with a warning.
    """
    if design.demeaned:
        return design
    dims = design.fixed_effects
    if not dims:
        return replace(design, demeaned=True, absorbed=0,
                       orig_y=design.y, orig_X=design.X)

    code_arrays = {"region": design.region_codes, "time": design.time_codes}
    keep = np.ones(design.nobs, dtype=bool)
    dropped = 0
    if drop_singletons:
        changed = True
        while changed:
            changed = False
            for dim in dims:
                codes = code_arrays[dim][keep]
                vals, counts = np.unique(codes, return_counts=True)
                singles = vals[counts == 1]
                if singles.size:
                    hit = keep & np.isin(code_arrays[dim], singles)
                    keep &= ~hit
                    dropped += int(hit.sum())
                    changed = True
        if dropped:
            warnings.warn(
                f"dropped {dropped} observation(s) in singleton "
                f"fixed-effect group(s); they have no within variation",
                stacklevel=2,
            )
    if not keep.any():
        raise SampleError("no observations remain after dropping singleton "
                          "fixed-effect groups")

    y = design.y[keep].copy()
    X = design.X[keep].copy()
    region_codes = design.region_codes[keep]
    time_codes = design.time_codes[keep]

    recoded = {}
    group_counts = {}
    for dim in dims:
        raw = region_codes if dim == "region" else time_codes
        vals, codes = np.unique(raw, return_inverse=True)
        recoded[dim] = codes
        group_counts[dim] = len(vals)

    Z = np.column_stack([y, X])
    scale = max(1.0, float(np.abs(Z).max())) if Z.size else 1.0
    tol_eff = tol * scale
    if len(dims) == 1:
        _subtract_group_means(Z, recoded[dims[0]], group_counts[dims[0]])
        absorbed = group_counts[dims[0]]
    else:
        for _ in range(max_iter):
            dev = 0.0
            for dim in dims:
                dev = max(dev, _subtract_group_means(
                    Z, recoded[dim], group_counts[dim]))
            if dev < tol_eff:
                break
        absorbed = sum(group_counts.values()) - 1

    return Design(
        y=Z[:, 0], X=Z[:, 1:], names=design.names,
        region_codes=region_codes, time_codes=time_codes,
        regions=design.regions, time=design.time,
        fixed_effects=dims, demeaned=True, absorbed=absorbed,
        orig_y=y, orig_X=X,
    )


@dataclass(frozen=True)
class FitResult:
    """One estimated fixed-effects regression.

    residuals is a (regions, quarters) matrix on the design grid, NaN
    outside the estimation sample. within_x / resid_vec / xtx_inv retain the
    demeaned internals needed by the covariance estimators.
    """

    names: tuple[str, ...]
    coef: np.ndarray
    vcov: np.ndarray
    se: np.ndarray
    nobs: int
    dof: int
    rank: int
    absorbed: int
    residuals: np.ndarray
    fe_estimates: dict | None
    vcov_kind: str
    within_x: np.ndarray
    resid_vec: np.ndarray
    region_codes: np.ndarray
    time_codes: np.ndarray
    regions: tuple[str, ...]
    time: tuple[QuarterIndex, ...]
    xtx_inv: np.ndarray

    def coef_for(self, name: str) -> float:
        return float(self.coef[self.names.index(name)])

    def se_for(self, name: str) -> float:
        return float(self.se[self.names.index(name)])


def _describe_rank_deficiency(R, piv, rank, names, col_norms):
    offenders = []
    lines = []
    norm_scale = col_norms.max() if col_norms.size else 0.0
    for pos in range(rank, len(piv)):
        name = names[piv[pos]]
        offenders.append(name)
        if col_norms[piv[pos]] <= _RANK_TOL * max(norm_scale, 1.0):
            lines.append(f"{name!r} has no variation after FE absorption")
            continue
        partners = []
        if rank > 0:
            c = linalg.solve_triangular(R[:rank, :rank], R[:rank, pos])
            big = np.abs(c) > 1e-8 * max(1.0, float(np.abs(c).max()))
            partners = [names[piv[i]] for i in np.nonzero(big)[0]]
        offenders.extend(p for p in partners if p not in offenders)
        lines.append(f"{name!r} is collinear with {partners}")
    return offenders, lines


def ols(design: Design, recover_fe: bool = False) -> FitResult:
    """Least squares on the (within-transformed) design via pivoted QR.

    Raises RankDeficiencyError naming the collinear or degenerate columns
    instead of silently dropping them; dof = nobs - rank - absorbed FE count.
    """
    d = design if design.demeaned else within_transform(design)
    n, k = d.X.shape
    if n == 0:
        raise SampleError("empty design")
    Q, R, piv = linalg.qr(d.X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    dmax = diag[0] if diag.size else 0.0
    rank = int((diag > _RANK_TOL * dmax).sum()) if dmax > 0 else 0
    if rank < k:
        col_norms = np.linalg.norm(d.X, axis=0)
        offenders, lines = _describe_rank_deficiency(
            R, piv, rank, d.names, col_norms)
        raise RankDeficiencyError(
            "design matrix is rank deficient: " + "; ".join(lines),
            columns=offenders,
        )
    z = linalg.solve_triangular(R, Q.T @ d.y)
    coef = np.empty(k)
    coef[piv] = z
    resid = d.y - d.X @ coef

    rinv = linalg.solve_triangular(R, np.eye(k))
    m = rinv @ rinv.T
    xtx_inv = np.empty((k, k))
    xtx_inv[np.ix_(piv, piv)] = m

    dof = n - rank - d.absorbed
    if dof <= 0:
        raise DegreesOfFreedomError(
            f"non-positive residual dof: nobs={n}, rank={rank}, "
            f"absorbed={d.absorbed}"
        )
    sigma2 = float(resid @ resid) / dof
    vcov = sigma2 * xtx_inv
    se = np.sqrt(np.diag(vcov))

    t0 = _quarter_code(d.time[0])
    resid_mat = np.full((len(d.regions), len(d.time)), np.nan)
    resid_mat[d.region_codes, d.time_codes - t0] = resid

    fe = _recover_fixed_effects(d, coef) if recover_fe else None

    return FitResult(
        names=d.names, coef=coef, vcov=vcov, se=se,
        nobs=n, dof=dof, rank=rank, absorbed=d.absorbed,
        residuals=resid_mat, fe_estimates=fe, vcov_kind="classical",
        within_x=d.X, resid_vec=resid,
        region_codes=d.region_codes, time_codes=d.time_codes,
        regions=d.regions, time=d.time, xtx_inv=xtx_inv,
    )


def _recover_fixed_effects(d: Design, coef: np.ndarray) -> dict:
    """Least-squares FE intercepts from the pre-demeaning data.

    Time effects are normalized to zero in the first sample period when both
    dimensions are present.
    """
    if not d.fixed_effects:
        return {}
    e0 = d.orig_y - d.orig_X @ coef
    out: dict[str, dict] = {}
    if d.fixed_effects == ("time",) or d.fixed_effects == ("region",):
        dim = d.fixed_effects[0]
        raw = d.region_codes if dim == "region" else d.time_codes
        vals = np.unique(raw)
        labels = _fe_labels(d, dim, vals)
        means = [float(e0[raw == v].mean()) for v in vals]
        out[dim] = dict(zip(labels, means))
        return out
    rvals, rcodes = np.unique(d.region_codes, return_inverse=True)
    tvals, tcodes = np.unique(d.time_codes, return_inverse=True)
    G, T = len(rvals), len(tvals)
    D = np.zeros((d.orig_y.shape[0], G + T - 1))
    D[np.arange(len(rcodes)), rcodes] = 1.0
    nz = tcodes > 0
    D[np.nonzero(nz)[0], G + tcodes[nz] - 1] = 1.0
    sol, *_ = np.linalg.lstsq(D, e0, rcond=None)
    out["region"] = dict(zip(_fe_labels(d, "region", rvals), sol[:G]))
    tvals_fx = np.concatenate([[0.0], sol[G:]])
    out["time"] = dict(zip(_fe_labels(d, "time", tvals), tvals_fx))
    return out


def _fe_labels(d: Design, dim: str, vals) -> list:
    if dim == "region":
        return [d.regions[v] for v in vals]
    return [str(QuarterIndex(v // 4, v % 4 + 1)) for v in vals]


def vcov_classical(fit: FitResult) -> np.ndarray:
    """sigma^2 (X'X)^-1 with sigma^2 = RSS / dof."""
    if fit.dof <= 0:
        raise DegreesOfFreedomError(f"dof={fit.dof}")
    sigma2 = float(fit.resid_vec @ fit.resid_vec) / fit.dof
    return sigma2 * fit.xtx_inv


def vcov_driscoll_kraay(fit: FitResult, hac: HACSpec) -> np.ndarray:
    """HAC covariance over cross-sectionally summed score vectors.

    h_t = sum_i x_it e_it; Gamma_l = (1/T) sum_t h_t h_{t-l}'; the meat is
    S = sum_l w_l (Gamma_l + Gamma_l') with Bartlett weights, scaled by
    nobs/(nobs - k - absorbed) when hac.small_sample (T/(T-k) for a single
    unit without fixed effects); vcov = (X'X)^-1 (T S) (X'X)^-1.
    """
    tvals = np.unique(fit.time_codes)
    T = len(tvals)
    L = hac.bandwidth
    if L >= T:
        raise BandwidthError(f"bandwidth {L} must be < {T} time periods")
    k = fit.within_x.shape[1]
    xu = fit.within_x * fit.resid_vec[:, None]
    H = np.zeros((T, k))
    rows = np.searchsorted(tvals, fit.time_codes)
    np.add.at(H, rows, xu)

    w = bartlett_weights(L)
    S = w[0] * (H.T @ H) / T
    pos_row = {int(p): j for j, p in enumerate(tvals)}
    for lag in range(1, L + 1):
        cur, lagged = [], []
        for j, p in enumerate(tvals):
            j2 = pos_row.get(int(p) - lag)
            if j2 is not None:
                cur.append(j)
                lagged.append(j2)
        if not cur:
            continue
        gamma = (H[cur].T @ H[lagged]) / T
        S += w[lag] * (gamma + gamma.T)

    if hac.small_sample:
        # dof-aware factor: within residuals are shrunk by the absorbed FE
        # dummies as well as the k slopes, so scale by nobs/(nobs-k-absorbed);
        # with one unit and no FE this is exactly T/(T-k)
        if fit.dof <= 0:
            raise DegreesOfFreedomError(
                f"small-sample factor needs nobs > k + absorbed: "
                f"nobs={fit.nobs}, k={fit.rank}, absorbed={fit.absorbed}"
            )
        S *= fit.nobs / fit.dof
    V = fit.xtx_inv @ (T * S) @ fit.xtx_inv
    return (V + V.T) / 2.0


def with_driscoll_kraay(fit: FitResult, hac: HACSpec) -> FitResult:
    """Return the fit with Driscoll-Kraay vcov and standard errors."""
    V = vcov_driscoll_kraay(fit, hac)
    return replace(fit, vcov=V, se=np.sqrt(np.diag(V)),
                   vcov_kind="driscoll-kraay")


def confidence_band(
    fit: FitResult, level: float, use_t: bool = False
) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric per-coefficient bands coef +/- q * se.

    Normal quantiles by default (use_t switches to Student t with the fit's
    dof). level = 0 degenerates to [coef, coef].
    """
    if not 0.0 <= level < 1.0:
        raise ValueError(f"level must be in [0, 1), got {level}")
    p = (1.0 + level) / 2.0
    q = float(stats.t.ppf(p, fit.dof)) if use_t else float(stats.norm.ppf(p))
    return fit.coef - q * fit.se, fit.coef + q * fit.se


def significance_stars(estimate: float, se: float) -> str:
    """Two-sided normal stars: *** 1%, ** 5%, * 10% (boundaries inclusive)."""
    if se == 0.0:
        z = math.inf if estimate != 0.0 else math.nan
    else:
        z = abs(estimate / se)
    for cutoff, mark in _STAR_CUTOFFS:
        if z >= cutoff:
            return mark
    return ""
