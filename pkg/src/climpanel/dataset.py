"""Balanced regional quarterly panels: ingestion, validation, transforms.

A panel is a set of named region-by-quarter matrices sharing one region list
and one contiguous quarterly index. Missing cells are NaN; estimators drop
incomplete rows listwise and never reindex.
"""
from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyPanelError,
    EmptySummaryError,
    GapError,
    PanelIntegrityError,
    SchemaError,
    TransformDomainError,
    VariableLookupError,
)

_QUARTER_RE = re.compile(r"^(\d{4})Q([1-4])$")


@dataclass(frozen=True, order=True)
class QuarterIndex:
    """A calendar quarter, ordered lexicographically on (year, quarter)."""

    year: int
    quarter: int

    def __post_init__(self):
        if self.quarter not in (1, 2, 3, 4):
            raise ValueError(f"quarter must be in 1..4, got {self.quarter!r}")

    def __str__(self) -> str:
        return f"{self.year}Q{self.quarter}"

    @classmethod
    def parse(cls, text: str | QuarterIndex) -> QuarterIndex:
        """Parse '2002Q1' style labels; QuarterIndex passes through."""
        if isinstance(text, QuarterIndex):
            return text
        m = _QUARTER_RE.match(str(text).strip().upper())
        if m is None:
            raise ValueError(f"cannot parse quarter label {text!r} (want e.g. 2002Q1)")
        return cls(int(m.group(1)), int(m.group(2)))

    def offset(self, n: int) -> QuarterIndex:
        """The quarter n steps ahead (negative n steps back)."""
        pos = self.year * 4 + (self.quarter - 1) + n
        return QuarterIndex(pos // 4, pos % 4 + 1)

    def next(self) -> QuarterIndex:
        return self.offset(1)

    def __sub__(self, other: QuarterIndex) -> int:
        """Signed distance in quarters."""
        return (self.year - other.year) * 4 + (self.quarter - other.quarter)


def quarter_range(start: QuarterIndex, end: QuarterIndex) -> tuple[QuarterIndex, ...]:
    """Inclusive contiguous range of quarters."""
    n = end - start
    if n < 0:
        raise ValueError(f"empty quarter range {start}..{end}")
    return tuple(start.offset(i) for i in range(n + 1))


@dataclass(frozen=True)
class PanelSchema:
    """Column mapping for panel CSV files.

    ``values`` restricts which value columns are read (None = every column
    that is not region/year/quarter). ``missing`` is the sentinel token that
    marks an explicitly missing cell; the default is an empty cell.
    """

    region: str = "region"
    year: str = "year"
    quarter: str = "quarter"
    values: tuple[str, ...] | None = None
    missing: str = ""
    units: dict[str, str] = field(default_factory=dict)


class PanelDataset:
    """Immutable balanced panel of named region-by-quarter series.

    Every series is a (n_regions, n_quarters) float matrix with NaN for
    missing cells. The time index is contiguous and strictly increasing.
    All operations return new datasets; matrices are frozen read-only.
    """

    __slots__ = ("regions", "time", "series", "units")

    def __init__(self, regions, time, series, units=None):
        regions = tuple(str(r) for r in regions)
        time = tuple(time)
        if not regions:
            raise EmptyPanelError("panel has no regions")
        if not time:
            raise EmptyPanelError("panel has no quarters")
        if len(set(regions)) != len(regions):
            raise PanelIntegrityError("region names must be unique")
        for prev, cur in zip(time, time[1:]):
            if cur - prev != 1:
                raise GapError([("<all>", str(prev.next()))])
        frozen = {}
        for name, mat in series.items():
            arr = np.array(mat, dtype=float)
            if arr.shape != (len(regions), len(time)):
                raise PanelIntegrityError(
                    f"series {name!r} has shape {arr.shape}, "
                    f"expected {(len(regions), len(time))}"
                )
            arr.flags.writeable = False
            frozen[str(name)] = arr
        object.__setattr__(self, "regions", regions)
        object.__setattr__(self, "time", time)
        object.__setattr__(self, "series", frozen)
        object.__setattr__(self, "units", dict(units or {}))

    def __setattr__(self, name, value):
        raise AttributeError("PanelDataset is immutable")

    @property
    def n_regions(self) -> int:
        return len(self.regions)

    @property
    def n_quarters(self) -> int:
        return len(self.time)

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(self.series)

    def values(self, name: str) -> np.ndarray:
        try:
            return self.series[name]
        except KeyError:
            raise VariableLookupError(
                f"unknown variable {name!r}; have {sorted(self.series)}"
            ) from None

    def unit(self, name: str) -> str:
        return self.units.get(name, "")

    def region_index(self, region: str) -> int:
        try:
            return self.regions.index(region)
        except ValueError:
            raise VariableLookupError(f"unknown region {region!r}") from None

    def time_position(self, q: QuarterIndex | str) -> int:
        q = QuarterIndex.parse(q)
        pos = q - self.time[0]
        if pos < 0 or pos >= len(self.time):
            raise VariableLookupError(f"quarter {q} outside panel range "
                                      f"{self.time[0]}..{self.time[-1]}")
        return pos

    def with_series(self, name: str, matrix, unit: str = "") -> PanelDataset:
        """Return a new dataset with one series appended (or replaced)."""
        series = dict(self.series)
        series[name] = matrix
        units = dict(self.units)
        if unit:
            units[name] = unit
        return PanelDataset(self.regions, self.time, series, units)

    def equals(self, other: PanelDataset) -> bool:
        """Structural equality, bitwise on values (NaN == NaN)."""
        if self.regions != other.regions or self.time != other.time:
            return False
        if set(self.series) != set(other.series) or self.units != other.units:
            return False
        return all(
            np.array_equal(self.series[k], other.series[k], equal_nan=True)
            for k in self.series
        )

    def __repr__(self) -> str:
        return (f"PanelDataset({self.n_regions} regions x {self.n_quarters} "
                f"quarters, {len(self.series)} series, "
                f"{self.time[0]}..{self.time[-1]})")


@dataclass(frozen=True)
class TransformSpec:
    """One derived-series definition.

    kind is one of 'log', 'diff', 'log-diff', 'cumulative-log-growth';
    the last one takes a lead ``horizon`` h and produces
    log(x[t+h]) - log(x[t-1]).
    """

    kind: str
    source: str
    horizon: int = 0
    name: str | None = None

    _KINDS = ("log", "diff", "log-diff", "cumulative-log-growth")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown transform kind {self.kind!r}")
        if self.horizon < 0:
            raise ValueError("horizon must be >= 0")

    def output_name(self) -> str:
        if self.name:
            return self.name
        if self.kind == "log":
            return f"log_{self.source}"
        if self.kind == "diff":
            return f"d_{self.source}"
        if self.kind == "log-diff":
            return f"dlog_{self.source}"
        return f"cg{self.horizon}_{self.source}"


def checked_log(ds: PanelDataset, name: str) -> np.ndarray:
    """Elementwise log of a series, rejecting non-positive cells."""
    mat = ds.values(name)
    bad = (mat <= 0) & np.isfinite(mat)
    if bad.any():
        i, t = np.argwhere(bad)[0]
        raise TransformDomainError(
            f"log requires strictly positive values: {name!r} at "
            f"({ds.regions[i]}, {ds.time[t]}) is {mat[i, t]!r}"
        )
    with np.errstate(invalid="ignore"):
        return np.log(mat)


def transform(ds: PanelDataset, spec: TransformSpec) -> PanelDataset:
    """Append the derived series described by ``spec``.

    log-diff at t is log(x[t]) - log(x[t-1]); cumulative-log-growth(h) at t
    is log(x[t+h]) - log(x[t-1]). Cells without the needed leads/lags are NaN.
    """
    T = ds.n_quarters
    out = np.full((ds.n_regions, T), np.nan)
    if spec.kind == "log":
        out = checked_log(ds, spec.source)
    elif spec.kind == "diff":
        mat = ds.values(spec.source)
        out[:, 1:] = mat[:, 1:] - mat[:, :-1]
    elif spec.kind == "log-diff":
        lg = checked_log(ds, spec.source)
        out[:, 1:] = lg[:, 1:] - lg[:, :-1]
    else:  # cumulative-log-growth
        lg = checked_log(ds, spec.source)
        h = spec.horizon
        if T - 1 - h >= 1:
            out[:, 1:T - h] = lg[:, 1 + h:] - lg[:, :T - 1 - h]
    unit = ds.unit(spec.source)
    derived_unit = {
        "log": f"log({unit})" if unit else "log",
        "diff": unit,
        "log-diff": "log change",
        "cumulative-log-growth": "cumulative log change",
    }[spec.kind]
    return ds.with_series(spec.output_name(), out, derived_unit)


def subset(
    ds: PanelDataset,
    variables=None,
    start: QuarterIndex | str | None = None,
    end: QuarterIndex | str | None = None,
) -> PanelDataset:
    """Restrict to named variables and an inclusive quarter window."""
    names = tuple(variables) if variables is not None else ds.variables
    for name in names:
        ds.values(name)  # raises VariableLookupError
    lo = QuarterIndex.parse(start) if start is not None else ds.time[0]
    hi = QuarterIndex.parse(end) if end is not None else ds.time[-1]
    lo = max(lo, ds.time[0])
    hi = min(hi, ds.time[-1])
    if hi - lo < 0:
        raise EmptyPanelError(f"window {lo}..{hi} contains no quarters")
    a = lo - ds.time[0]
    b = hi - ds.time[0] + 1
    series = {name: ds.series[name][:, a:b] for name in names}
    units = {k: v for k, v in ds.units.items() if k in series}
    return PanelDataset(ds.regions, ds.time[a:b], series, units)


@dataclass(frozen=True)
class RegionSummary:
    region: str
    min: float
    q1: float
    median: float
    q3: float
    max: float
    mean: float
    sd: float


def summary_stats(ds: PanelDataset, var: str) -> tuple[RegionSummary, ...]:
    """Per-region five-number summary plus mean and sample sd.

    Quantiles use type-7 linear interpolation so emitted summary files are
    reproducible bit for bit.
    """
    mat = ds.values(var)
    rows = []
    for i, region in enumerate(ds.regions):
        v = mat[i][np.isfinite(mat[i])]
        if v.size == 0:
            raise EmptySummaryError(f"{var!r} has no observations for region "
                                    f"{region!r}")
        q1, med, q3 = np.quantile(v, [0.25, 0.5, 0.75], method="linear")
        sd = float(np.std(v, ddof=1)) if v.size > 1 else math.nan
        rows.append(RegionSummary(
            region=region,
            min=float(v.min()), q1=float(q1), median=float(med),
            q3=float(q3), max=float(v.max()), mean=float(v.mean()), sd=sd,
        ))
    return tuple(rows)


# ---------------------------------------------------------------------------
# CSV ingestion and emission
# ---------------------------------------------------------------------------

_UNIT_COMMENT_RE = re.compile(r"^#\s*unit\s+(\S+)\s*=\s*(.*)$")


def load_panel(path, schema: PanelSchema | None = None) -> PanelDataset:
    """Load a balanced panel from CSV.

    Expects a header row with region, year and quarter columns plus one or
    more value columns; '#'-prefixed lines are comments ('# unit var = u'
    comments populate units). Identical duplicate rows are dropped;
    conflicting duplicates raise PanelIntegrityError; a missing
    (region, quarter) row raises GapError naming the holes.
    """
    schema = schema or PanelSchema()
    units: dict[str, str] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        data_lines = []
        for line in fh:
            if line.startswith("#"):
                m = _UNIT_COMMENT_RE.match(line.strip())
                if m:
                    units[m.group(1)] = m.group(2).strip()
                continue
            if line.strip():
                data_lines.append(line)
    if not data_lines:
        raise SchemaError(f"{path}: no data rows")
    reader = csv.reader(data_lines)
    header = next(reader)
    for col in (schema.region, schema.year, schema.quarter):
        if col not in header:
            raise SchemaError(f"{path}: missing required column {col!r}")
    if schema.values is not None:
        for col in schema.values:
            if col not in header:
                raise SchemaError(f"{path}: missing value column {col!r}")
        value_cols = list(schema.values)
    else:
        keys = {schema.region, schema.year, schema.quarter}
        value_cols = [c for c in header if c not in keys]
    if not value_cols:
        raise SchemaError(f"{path}: no value columns")
    pos = {c: header.index(c) for c in header}

    cells: dict[tuple[str, QuarterIndex], list[float]] = {}
    regions: list[str] = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        region = row[pos[schema.region]].strip()
        try:
            q = QuarterIndex(int(row[pos[schema.year]]),
                             int(row[pos[schema.quarter]]))
        except ValueError as exc:
            raise SchemaError(f"{path}:{lineno}: bad year/quarter: {exc}") from None
        vals = []
        for col in value_cols:
            text = row[pos[col]].strip()
            if text == schema.missing:
                vals.append(math.nan)
            else:
                try:
                    vals.append(float(text))
                except ValueError:
                    raise SchemaError(
                        f"{path}:{lineno}: cannot parse {col}={text!r}"
                    ) from None
        key = (region, q)
        if key in cells:
            old = cells[key]
            for col, a, b in zip(value_cols, old, vals):
                same = (a == b) or (math.isnan(a) and math.isnan(b))
                if not same:
                    raise PanelIntegrityError(
                        f"{path}: conflicting duplicate for ({region}, {q}, "
                        f"{col}): {a!r} vs {b!r}"
                    )
        else:
            cells[key] = vals
            if region not in regions:
                regions.append(region)

    quarters = sorted({q for _, q in cells})
    time = quarter_range(quarters[0], quarters[-1])
    gaps = [(r, str(q)) for r in regions for q in time if (r, q) not in cells]
    if gaps:
        raise GapError(gaps)

    series = {
        col: np.array(
            [[cells[(r, q)][j] for q in time] for r in regions], dtype=float
        )
        for j, col in enumerate(value_cols)
    }
    units.update(schema.units)
    units = {k: v for k, v in units.items() if k in series}
    return PanelDataset(regions, time, series, units)


def _format_value(x: float, missing: str) -> str:
    if math.isnan(x):
        return missing
    return repr(x)


def write_panel(
    ds: PanelDataset,
    path,
    schema: PanelSchema | None = None,
    header_comments=(),
) -> None:
    """Write a panel as CSV, rows ordered by region then time.

    Floats are written with shortest round-trip repr so load_panel(write(ds))
    reproduces values bitwise. Units are carried in '# unit' comments.
    """
    schema = schema or PanelSchema()
    names = ds.variables
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for comment in header_comments:
            fh.write(f"# {comment}\n")
        for name in names:
            if ds.unit(name):
                fh.write(f"# unit {name} = {ds.unit(name)}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([schema.region, schema.year, schema.quarter, *names])
        for i, region in enumerate(ds.regions):
            for t, q in enumerate(ds.time):
                writer.writerow(
                    [region, q.year, q.quarter]
                    + [_format_value(float(ds.series[n][i, t]), schema.missing)
                       for n in names]
                )


def merge_panels(a: PanelDataset, b: PanelDataset) -> PanelDataset:
    """Combine two panels on the same regions over their common window."""
    if a.regions != b.regions:
        raise PanelIntegrityError(
            f"region lists differ: {a.regions} vs {b.regions}"
        )
    lo = max(a.time[0], b.time[0])
    hi = min(a.time[-1], b.time[-1])
    if hi - lo < 0:
        raise EmptyPanelError("panels share no quarters")
    clash = set(a.variables) & set(b.variables)
    if clash:
        raise PanelIntegrityError(f"series defined in both panels: {sorted(clash)}")
    a = subset(a, start=lo, end=hi)
    b = subset(b, start=lo, end=hi)
    series = dict(a.series)
    series.update(b.series)
    units = dict(a.units)
    units.update(b.units)
    return PanelDataset(a.regions, a.time, series, units)
