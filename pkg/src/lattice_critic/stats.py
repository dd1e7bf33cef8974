"""Aggregate statistics over islands and zero catalogs.

Island counts and lengths are taken per island piece: an island split by an
enclave contributes each side separately, so the covered length of a range
is the sum of the lengths of the pieces it contains.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import fastline as fl
from .regions import Island, RegionClass
from .zeros import FunctionId, ZeroRecord

__all__ = [
    "StatsRow",
    "HistogramQuantity",
    "HistogramSpec",
    "ClusterSide",
    "ClusterReport",
    "island_stats",
    "zero_region_fractions",
    "cluster_stats",
    "histogram_values",
    "histogram",
    "write_stats_csv",
    "write_histogram_csv",
    "write_summary_json",
]


@dataclass(frozen=True)
class StatsRow:
    """Counts for one t-range.

    For island statistics ``count`` is the number of island pieces and
    ``fraction`` the share of the range covered by them.  For zero
    statistics ``count`` is the number of zeros, ``inner`` the number in
    inner islands and ``fraction`` is 1 - inner/count.
    """

    range: tuple[float, float]
    count: int
    fraction: float
    mean_len: float = math.nan
    sd_len: float = math.nan
    inner: int | None = None


def _pieces(islands: Iterable[Island]) -> list[tuple[float, float]]:
    return sorted(p for isl in islands for p in isl.pieces())


def island_stats(islands: Sequence[Island], ranges: Sequence[tuple[float, float]],
                 *, ddof: int = 1) -> list[StatsRow]:
    """Count, covered fraction, mean and standard deviation of piece lengths.

    A piece is counted (and its length used for the mean) in the range that
    holds its midpoint; the covered fraction clips pieces to the range, so it
    is additive over adjacent ranges.  ``ddof=1`` gives the sample standard
    deviation, ``ddof=0`` the population one.
    """
    pieces = _pieces(islands)
    rows = []
    for lo, hi in ranges:
        lengths = np.array([b - a for a, b in pieces if lo <= (a + b) / 2 < hi], dtype=float)
        covered = sum(max(0.0, min(b, hi) - max(a, lo)) for a, b in pieces)
        n = int(lengths.size)
        mean = float(lengths.mean()) if n else math.nan
        sd = float(lengths.std(ddof=ddof)) if n > ddof else 0.0 if n else math.nan
        frac = covered / (hi - lo) if hi > lo else 0.0
        rows.append(StatsRow((lo, hi), n, min(1.0, frac), mean, sd))
    return rows


def zero_region_fractions(catalog: Sequence[ZeroRecord],
                          ranges: Sequence[tuple[float, float]]) -> list[StatsRow]:
    """Inner-island zero counts per range; records must already carry a region.

    Ranges are half-open (lo, hi]: a zero at t is in the range when lo < t <= hi.
    """
    rows = []
    for lo, hi in ranges:
        sel = [r for r in catalog if lo < r.t <= hi]
        unclassified = [r for r in sel if r.region not in {c.value for c in RegionClass}]
        if unclassified:
            raise ValueError(f"{len(unclassified)} records in ({lo}, {hi}] have no region class")
        inner = sum(r.region == RegionClass.InnerIsland.value for r in sel)
        frac = 1.0 - inner / len(sel) if sel else 0.0
        rows.append(StatsRow((lo, hi), len(sel), frac, inner=inner))
    return rows


# --------------------------------------------------------------------------
# sequences of S_0 zeros


@dataclass(frozen=True)
class ClusterSide:
    runs: int
    zeros: int
    zeta: int
    l4: int

    @property
    def mean_per_run(self) -> float:
        return self.zeros / self.runs if self.runs else math.nan

    @property
    def mean_zeta(self) -> float:
        return self.zeta / self.runs if self.runs else math.nan

    @property
    def mean_l4(self) -> float:
        return self.l4 / self.runs if self.runs else math.nan

    @property
    def ratio(self) -> float:
        """Mean zeta zeros per run over mean L_{-4} zeros per run."""
        return self.zeta / self.l4 if self.l4 else math.nan


@dataclass(frozen=True)
class ClusterReport:
    island: ClusterSide
    extended: ClusterSide

    @property
    def total(self) -> int:
        return self.island.zeros + self.extended.zeros

    @property
    def island_fraction(self) -> float:
        return self.island.zeros / self.total if self.total else math.nan

    def as_dict(self) -> dict:
        out = {"total": self.total, "island_fraction": self.island_fraction}
        for name, side in (("island", self.island), ("extended", self.extended)):
            out[name] = {**asdict(side), "mean_per_run": side.mean_per_run,
                         "mean_zeta": side.mean_zeta, "mean_l4": side.mean_l4, "ratio": side.ratio}
        return out


def _in_pieces(ts: np.ndarray, pieces: list[tuple[float, float]]) -> np.ndarray:
    if not pieces:
        return np.zeros(ts.shape, dtype=bool)
    starts = np.array([a for a, _ in pieces])
    ends = np.array([b for _, b in pieces])
    k = np.searchsorted(starts, ts, side="right") - 1
    ok = k >= 0
    res = np.zeros(ts.shape, dtype=bool)
    res[ok] = ts[ok] < ends[k[ok]]
    return res


def cluster_stats(zeta_cat: Sequence[ZeroRecord], l4_cat: Sequence[ZeroRecord],
                  islands: Sequence[Island] | None = None) -> ClusterReport:
    """Split the merged zeros of S_0 into maximal runs on the same side of the island criterion.

    A zero counts as in-island when it lies inside an island piece; without
    ``islands`` the region labels of the records decide.
    """
    merged = sorted([(r.t, 0, r) for r in zeta_cat] + [(r.t, 1, r) for r in l4_cat],
                    key=lambda x: (x[0], x[1]))
    ts = np.array([t for t, _, _ in merged], dtype=float)
    if islands is not None:
        flags = _in_pieces(ts, _pieces(islands))
    else:
        flags = np.array([RegionClass(r.region).in_island for _, _, r in merged], dtype=bool)
    tallies = {True: [0, 0, 0, 0], False: [0, 0, 0, 0]}
    prev = None
    for flag, (_, which, _) in zip(flags.tolist(), merged):
        side = tallies[flag]
        if flag is not prev:
            side[0] += 1
            prev = flag
        side[1] += 1
        side[2 + which] += 1
    return ClusterReport(ClusterSide(*tallies[True]), ClusterSide(*tallies[False]))


# --------------------------------------------------------------------------
# histograms


class HistogramQuantity(str, Enum):
    IslandLength = "IslandLength"
    ArgStart = "ArgStart"
    ArgEnd = "ArgEnd"
    ArgUatZero = "ArgUatZero"


@dataclass(frozen=True)
class HistogramSpec:
    bin_width: float
    domain: tuple[float, float]
    quantity: HistogramQuantity

    @classmethod
    def default(cls, quantity, max_length: float = 10.0) -> "HistogramSpec":
        q = HistogramQuantity(quantity)
        if q is HistogramQuantity.IslandLength:
            return cls(0.25, (0.0, max_length), q)
        return cls(math.pi / 10, (-math.pi, math.pi), q)

    def edges(self) -> np.ndarray:
        lo, hi = self.domain
        if not hi > lo or not self.bin_width > 0:
            raise ValueError("histogram needs hi > lo and a positive bin width")
        n = max(1, int(math.ceil((hi - lo) / self.bin_width - 1e-9)))
        e = lo + self.bin_width * np.arange(n + 1)
        e[-1] = hi
        return e


@dataclass
class Histogram:
    spec: HistogramSpec
    edges: np.ndarray
    counts: np.ndarray
    outside: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def mass_between(self, a: float, b: float) -> float:
        """Share of the counted values falling in bins fully inside [a, b]."""
        sel = (self.edges[:-1] >= a - 1e-12) & (self.edges[1:] <= b + 1e-12)
        return float(self.counts[sel].sum() / self.total) if self.total else math.nan


def _principal(x: np.ndarray) -> np.ndarray:
    """Reduce angles to (-pi, pi]."""
    y = np.angle(np.exp(1j * x))
    return np.where(y <= -math.pi, math.pi, y)


def histogram_values(quantity, islands: Sequence[Island] = (),
                     zeros: Sequence[ZeroRecord] = ()) -> np.ndarray:
    """Raw values for a histogram quantity.

    IslandLength uses piece lengths; ArgStart and ArgEnd are arg U_K at the
    ends of each piece; ArgUatZero is arg U at the given zeros that lie in an
    island piece.
    """
    q = HistogramQuantity(quantity)
    pieces = _pieces(islands)
    if q is HistogramQuantity.IslandLength:
        return np.array([b - a for a, b in pieces], dtype=float)
    if q in (HistogramQuantity.ArgStart, HistogramQuantity.ArgEnd):
        ts = np.array([a if q is HistogramQuantity.ArgStart else b for a, b in pieces], dtype=float)
        if not ts.size:
            return ts
        return _principal(np.angle(fl.LineParts(0.5 + 1j * ts).uk))
    ts = np.array(sorted(r.t for r in zeros), dtype=float)
    if islands:
        ts = ts[_in_pieces(ts, pieces)]
    if not ts.size:
        return ts
    return _principal(np.angle(fl.LineParts(0.5 + 1j * ts).u))


def histogram(values: Iterable[float], spec: HistogramSpec) -> Histogram:
    """Bin counts; the last bin is closed on the right, values outside the domain are tallied separately."""
    v = np.asarray(list(values), dtype=float)
    edges = spec.edges()
    lo, hi = spec.domain
    inside = (v >= lo) & (v <= hi)
    counts, _ = np.histogram(v[inside], bins=edges)
    return Histogram(spec, edges, counts.astype(int), int((~inside).sum()))


# --------------------------------------------------------------------------
# output


def _g(x) -> str:
    if x is None:
        return ""
    return f"{float(x):.15g}" if isinstance(x, float) else str(x)


def write_stats_csv(path, rows: Sequence[StatsRow]) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t_lo", "t_hi", "count", "inner", "fraction", "mean_len", "sd_len"])
        for r in rows:
            w.writerow([_g(float(r.range[0])), _g(float(r.range[1])), r.count, _g(r.inner),
                        _g(r.fraction), _g(r.mean_len), _g(r.sd_len)])


def write_histogram_csv(path, hist: Histogram) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bin_lo", "bin_hi", "count"])
        for a, b, c in zip(hist.edges[:-1], hist.edges[1:], hist.counts):
            w.writerow([_g(float(a)), _g(float(b)), int(c)])


def _jsonable(x):
    if isinstance(x, StatsRow):
        d = asdict(x)
        d["range"] = list(x.range)
        return {k: _jsonable(v) for k, v in d.items()}
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def write_summary_json(path, tables: dict) -> None:
    """One object per table, keys sorted, non-finite numbers written as null."""
    Path(path).write_text(json.dumps(_jsonable(tables), sort_keys=True, indent=2) + "\n")


def default_ranges(t_max: float, width: float) -> list[tuple[float, float]]:
    edges = list(np.arange(0.0, t_max, width)) + [t_max]
    return [(float(a), float(b)) for a, b in zip(edges[:-1], edges[1:])]


ZERO_FUNCS = (FunctionId.Zeta, FunctionId.L4)
