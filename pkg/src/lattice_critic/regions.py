"""Extended, island and inner-island regions of the critical line.

With d1 = d/dt arg U_K(1/2+it) and d2 = d/dt arg F(1/2+it):

* d1 > 0                -> Extended
* d1 < 0 and d2 > 0     -> OuterIsland
* d1 < 0 and d2 < 0     -> InnerIsland

Both U_K and F are unimodular on the line, so only the argument derivatives
carry information there.  Scans and endpoint refinement run on the
vectorised double-precision engine; single points and the mu endpoint
arguments use the scalar engine at the context precision.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import brentq

from . import fastline as fl
from .contour import rectangle_winding
from .core import DEFAULT_CTX, EvalContext, arg_derivative_t, mpctx, unwrap_phase
from .errors import DegenerateDerivative, PoleOrZeroTooClose
from .lattice import _k11_pair, _ratio_pair, _regular, _u_raw
from .zeros import FunctionId, ZeroRecord, scan_zeros

__all__ = [
    "RegionClass",
    "Island",
    "InnerIsland",
    "AuditRow",
    "SpacingRow",
    "Theorem4Report",
    "classify_point",
    "classify_many",
    "classify_records",
    "find_islands",
    "find_inner_islands",
    "line_arg_change",
    "enclave_contents",
    "theorem1_check",
    "theorem4_audit",
    "write_islands_csv",
    "write_inner_islands_csv",
]

DEGENERATE = 1e-9
ENDPOINT_TOL = 1e-6
# enclave candidates: short gaps between island pieces
MAX_ENCLAVE_GAP = 1.0


class RegionClass(str, Enum):
    Extended = "Extended"
    OuterIsland = "OuterIsland"
    InnerIsland = "InnerIsland"

    def __str__(self) -> str:
        return self.value

    @property
    def in_island(self) -> bool:
        return self is not RegionClass.Extended


@dataclass(frozen=True)
class InnerIsland:
    m: int
    t_l: float
    t_u: float
    mu_l: float
    mu_u: float
    island_index: int = 0
    # continuous arg[-F] at the endpoints, measured from the interior point where
    # arg[-F] is a multiple of 2 pi (nan unless there is exactly one such point)
    mu_l_cont: float = math.nan
    mu_u_cont: float = math.nan

    @property
    def passes(self) -> bool:
        """Sign pattern mu_u < 0 < mu_l on the principal branch."""
        return self.mu_u < 0 < self.mu_l

    @property
    def passes_continuous(self) -> bool:
        return self.mu_u_cont < 0 < self.mu_l_cont


@dataclass
class Island:
    """A maximal critical-line interval where d1 < 0.

    ``enclaves`` lists interior gaps where d1 > 0 that are enclosed by the
    island (they contain a pole of U_K and are cut off from the extended
    region); the island criterion holds on ``pieces()``.
    """

    index: int
    t_l: float
    t_u: float
    inner: list[InnerIsland] = field(default_factory=list)
    enclaves: list[tuple[float, float]] = field(default_factory=list)

    def pieces(self) -> list[tuple[float, float]]:
        out, lo = [], self.t_l
        for a, b in sorted(self.enclaves):
            out.append((lo, a))
            lo = b
        out.append((lo, self.t_u))
        return out

    @property
    def length(self) -> float:
        return sum(b - a for a, b in self.pieces())

    @property
    def midpoint(self) -> float:
        return (self.t_l + self.t_u) / 2


# --------------------------------------------------------------------------
# point classification


def _uk_mp(M):
    def uk(z):
        k11, k11r = _k11_pair(z, M)
        return _ratio_pair(k11, k11r, M)[0]

    return uk


def _f_mp(M):
    uk = _uk_mp(M)

    def f(z):
        return uk(z) / _regular(lambda w: _u_raw(w, M), z, (0.5,), M)

    return f


def _derivatives_mp(t: float, ctx: EvalContext) -> tuple[float, float]:
    M = mpctx(ctx.precision_bits)
    d1 = arg_derivative_t(_uk_mp(M), t, ctx, scale=1.0)
    if d1 > 0:
        return d1, math.nan
    d2 = arg_derivative_t(_f_mp(M), t, ctx, scale=1.0)
    return d1, d2


def _class_of(d1: float, d2: float) -> RegionClass:
    if d1 > 0:
        return RegionClass.Extended
    return RegionClass.InnerIsland if d2 < 0 else RegionClass.OuterIsland


def classify_point(t: float, ctx: EvalContext = DEFAULT_CTX) -> RegionClass:
    """Region of 1/2 + it from the signs of the two argument derivatives.

    If the stencil touches a pole or zero, the classification of the nearest
    side (t shifted up by 10 * diff_step) is used.
    """
    try:
        d1, d2 = _derivatives_mp(t, ctx)
    except PoleOrZeroTooClose:
        d1, d2 = _derivatives_mp(t + 10 * ctx.diff_step, ctx)
    if abs(d1) < DEGENERATE or (d1 < 0 and abs(d2) < DEGENERATE):
        raise DegenerateDerivative(f"argument derivative too small to classify t={t}")
    return _class_of(d1, d2)


def derivatives_fast(ts) -> tuple[np.ndarray, np.ndarray]:
    """(d1, d2) on an array of ordinates (double-precision engine)."""
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    out = fl.arg_derivative_vec(ts, names=("uk", "f"))
    return out["uk"], out["f"]


def classify_many(ts) -> list[RegionClass]:
    d1, d2 = derivatives_fast(ts)
    return [_class_of(a, b) for a, b in zip(d1, d2)]


def classify_records(records: Sequence[ZeroRecord]) -> list[ZeroRecord]:
    """Attach region labels to critical-line zero records."""
    if not records:
        return []
    classes = classify_many([r.t for r in records])
    return [replace(r, region=c.value) for r, c in zip(records, classes)]


# --------------------------------------------------------------------------
# islands


def _d1_scalar(t: float) -> float:
    return float(fl.arg_derivative_vec(np.array([t]), names=("uk",))["uk"][0])


def _d2_scalar(t: float) -> float:
    return float(fl.arg_derivative_vec(np.array([t]), names=("f",))["f"][0])


def _root(fn, a: float, b: float) -> float:
    return float(brentq(fn, a, b, xtol=1e-10, rtol=1e-14, maxiter=200))


def _negative_runs(ts: np.ndarray, vals: np.ndarray, fn) -> list[tuple[float, float, bool, bool]]:
    """Maximal runs where ``vals`` < 0, endpoints refined; flags mark runs cut by the grid ends."""
    neg = vals < 0
    runs = []
    i, n = 0, ts.size
    while i < n:
        if not neg[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and neg[j + 1]:
            j += 1
        open_lo, open_hi = i == 0, j == n - 1
        lo = ts[0] if open_lo else _root(fn, ts[i - 1], ts[i])
        hi = ts[-1] if open_hi else _root(fn, ts[j], ts[j + 1])
        runs.append((float(lo), float(hi), open_lo, open_hi))
        i = j + 1
    return runs


def _scan_d1(lo: float, hi: float, step: float) -> tuple[np.ndarray, np.ndarray]:
    k0, k1 = math.ceil(lo / step), math.floor(hi / step)
    ts = np.arange(k0, k1 + 1, dtype=float) * step
    return ts, fl.arg_derivative_vec(ts, names=("uk",))["uk"]


def _island_pieces(t_min: float, t_max: float, step: float) -> list[tuple[float, float]]:
    """Pieces with d1 < 0 meeting [t_min, t_max], extended past the range so none is cut."""
    lo = max(2.0, t_min - 5.0)
    hi = t_max + 5.0
    for _ in range(20):
        ts, d1 = _scan_d1(lo, hi, step)
        runs = _negative_runs(ts, d1, _d1_scalar)
        grow_lo = runs and runs[0][2] and lo > 2.0
        grow_hi = runs and runs[-1][3]
        if not grow_lo and not grow_hi:
            break
        if grow_lo:
            lo = max(2.0, lo - 5.0)
        if grow_hi:
            hi += 5.0
    return [(a, b) for a, b, _, _ in runs]


def _uk_pole_count(t0: float, t1: float, width: float = 1.0) -> int:
    f = lambda s: fl.LineParts(s).k11_reflected  # noqa: E731 - poles of U_K are zeros of K(1,1;1-s)
    step = min(0.02, (t1 - t0) / 10)
    return rectangle_winding(f, (0.5, 0.5 + width), (t0, t1), step=step).count


def _enclosed(t_mid: float, sigma_max: float = 4.0) -> bool:
    """True if |U_K| < 1 somewhere on the ray sigma > 1/2 at height t_mid."""
    sig = np.linspace(0.505, sigma_max, 700)
    mod = np.abs(fl.LineParts(sig + 1j * t_mid).uk)
    return bool(np.min(mod) < 1)


def _is_enclave(a: float, b: float) -> bool:
    if b - a > MAX_ENCLAVE_GAP:
        return False
    return _enclosed((a + b) / 2) and _uk_pole_count(a, b) >= 1


def find_islands(
    t_min: float,
    t_max: float,
    ctx: EvalContext = DEFAULT_CTX,
    *,
    step: float = 0.01,
    merge_enclaves: bool = True,
    with_inner: bool = False,
) -> list[Island]:
    """Islands whose midpoint lies in [t_min, t_max), sorted and indexed from 1.

    Endpoints are roots of d1 refined well below 1e-6.  Gaps that contain a
    pole of U_K and are enclosed by the island (|U_K| < 1 further out on the
    horizontal ray) are kept as enclaves of a single merged island.
    """
    if t_max <= t_min:
        return []
    pieces = _island_pieces(max(t_min, 2.0), t_max, step)
    groups: list[list[tuple[float, float]]] = []
    for piece in pieces:
        if merge_enclaves and groups and _is_enclave(groups[-1][-1][1], piece[0]):
            groups[-1].append(piece)
        else:
            groups.append([piece])
    islands = []
    for grp in groups:
        isl = Island(0, grp[0][0], grp[-1][1],
                     enclaves=[(grp[k][1], grp[k + 1][0]) for k in range(len(grp) - 1)])
        if t_min <= isl.midpoint < t_max:
            islands.append(isl)
    for k, isl in enumerate(islands, start=1):
        isl.index = k
    if with_inner:
        for isl in islands:
            isl.inner = find_inner_islands(isl, ctx, step=step)
    return islands


def _mu(t: float, ctx: EvalContext) -> float:
    """Principal arg[-F(1/2 + it)]."""
    M = mpctx(ctx.precision_bits)
    val = _f_mp(M)(M.mpc(M.mpf(1) / 2, M.mpf(t)))
    return float(M.arg(-val))


def find_inner_islands(island: Island, ctx: EvalContext = DEFAULT_CTX, *, step: float = 0.01) -> list[InnerIsland]:
    """Maximal sub-intervals of the island pieces where d2 < 0, with mu at both ends."""
    out: list[InnerIsland] = []
    for a, b in island.pieces():
        k0, k1 = math.ceil(a / step), math.floor(b / step)
        ts = np.concatenate(([a + 1e-9], np.arange(k0, k1 + 1, dtype=float) * step, [b - 1e-9]))
        ts = np.unique(ts[(ts > a) & (ts < b)])
        if ts.size < 2:
            continue
        d2 = fl.arg_derivative_vec(ts, names=("f",))["f"]
        for lo, hi, _, _ in _negative_runs(ts, d2, _d2_scalar):
            c_lo, c_hi = _anchored_mu(lo, hi)
            out.append(InnerIsland(0, lo, hi, _mu(lo, ctx), _mu(hi, ctx), island.index, c_lo, c_hi))
    return [replace(x, m=k) for k, x in enumerate(out, start=1)]


def _anchored_mu(lo: float, hi: float, spacing: float = 1e-4) -> tuple[float, float]:
    """Endpoint values of the continuous arg[-F], shifted so its single 2 pi k crossing is 0."""
    n = max(50, int(math.ceil((hi - lo) / spacing)) + 1)
    ts = np.linspace(lo, hi, n)
    cont = np.unwrap(np.angle(-fl.LineParts(0.5 + 1j * ts).f))
    turns = np.floor(cont / (2 * math.pi))
    crossings = np.nonzero(np.diff(turns) != 0)[0]
    if crossings.size != 1:
        return math.nan, math.nan
    k = max(turns[crossings[0]], turns[crossings[0] + 1])
    shift = 2 * math.pi * k
    return float(cont[0] - shift), float(cont[-1] - shift)


def line_arg_change(island: Island, ctx: EvalContext = DEFAULT_CTX, samples_per_unit: int = 2000) -> tuple[float, float]:
    """Argument bookkeeping for U_K along the island's critical-line segment.

    Returns (principal difference arg U_K(t_u) - arg U_K(t_l) with both
    values in (-pi, pi], continuous change obtained by unwrapping dense samples).
    """
    n = max(200, int((island.t_u - island.t_l) * samples_per_unit))
    ts = np.linspace(island.t_l, island.t_u, n)
    raw = np.angle(fl.LineParts(0.5 + 1j * ts).uk)
    cont = unwrap_phase(raw.tolist())
    M = mpctx(ctx.precision_bits)
    uk = _uk_mp(M)
    a_l = float(M.arg(uk(M.mpc(0.5, island.t_l))))
    a_u = float(M.arg(uk(M.mpc(0.5, island.t_u))))
    return a_u - a_l, cont[-1] - cont[0]


ENCLAVE_FUNCS = ("K00", "Tminus", "K00lambda", "ScriptL", "Zeta", "L4")


def enclave_contents(island: Island, ctx: EvalContext = DEFAULT_CTX,
                     funcs: Iterable[str] = ENCLAVE_FUNCS) -> list[dict[str, int]]:
    """Number of critical-line zeros of each function inside each enclave."""
    out = []
    for a, b in island.enclaves:
        out.append({f: len(scan_zeros(f, a, b, step=0.002, ctx=ctx, check_count=False)) for f in funcs})
    return out


# --------------------------------------------------------------------------
# theorem audits


def theorem1_check(rec: ZeroRecord, ctx: EvalContext = DEFAULT_CTX) -> float:
    """|F(s0) + 1| at a zero of S_0 (zeta or L_{-4}) or of the script-L function."""
    M = mpctx(ctx.precision_bits)
    z = M.mpc(M.mpf(rec.sigma), M.mpf(rec.t))
    return float(abs(_f_mp(M)(z) + 1))


@dataclass(frozen=True)
class AuditRow:
    island_index: int
    m: int
    t_l: float
    t_u: float
    mu_l: float
    mu_u: float
    passed: bool
    mu_l_cont: float = math.nan
    mu_u_cont: float = math.nan

    @property
    def passed_continuous(self) -> bool:
        return self.mu_u_cont < 0 < self.mu_l_cont


@dataclass(frozen=True)
class SpacingRow:
    t_from: float
    t_to: float
    zeros_between: int

    @property
    def passed(self) -> bool:
        return self.zeros_between >= 1


@dataclass
class Theorem4Report:
    rows: list[AuditRow]
    spacing: list[SpacingRow]

    @property
    def passed(self) -> bool:
        """Principal-branch mu signs for every row and the spacing corollary."""
        return all(r.passed for r in self.rows) and all(s.passed for s in self.spacing)

    @property
    def passed_continuous(self) -> bool:
        return all(r.passed_continuous for r in self.rows) and all(s.passed for s in self.spacing)


def theorem4_audit(
    t_min: float,
    t_max: float,
    ctx: EvalContext = DEFAULT_CTX,
    *,
    islands: list[Island] | None = None,
    catalogs: dict[str, list[ZeroRecord]] | None = None,
) -> Theorem4Report:
    """mu sign pattern for every inner island, plus the spacing corollary.

    The spacing check requires a cataloged zero of zeta, L_{-4} or the
    script-L function strictly between consecutive inner islands.
    """
    if islands is None:
        islands = find_islands(t_min, t_max, ctx, with_inner=True)
    inner = sorted((x for isl in islands for x in (isl.inner or find_inner_islands(isl, ctx))),
                   key=lambda x: x.t_l)
    rows = [AuditRow(x.island_index, x.m, x.t_l, x.t_u, x.mu_l, x.mu_u, x.passes, x.mu_l_cont, x.mu_u_cont)
            for x in inner]
    spacing: list[SpacingRow] = []
    if len(inner) >= 2:
        lo, hi = inner[0].t_u, inner[-1].t_l
        if catalogs is None:
            catalogs = {f: scan_zeros(f, lo, hi, ctx=ctx, check_count=False)
                        for f in (FunctionId.Zeta.value, FunctionId.L4.value, FunctionId.ScriptL.value)}
        ts = np.sort(np.array([r.t for recs in catalogs.values() for r in recs], dtype=float))
        for a, b in zip(inner[:-1], inner[1:]):
            n = int(np.searchsorted(ts, b.t_l, side="left") - np.searchsorted(ts, a.t_u, side="right"))
            spacing.append(SpacingRow(a.t_u, b.t_l, n))
    return Theorem4Report(rows, spacing)


# --------------------------------------------------------------------------
# CSV output


def _g(x: float) -> str:
    return f"{float(x):.15g}"


def write_islands_csv(path, islands: Sequence[Island]) -> None:
    """Columns index,t_l,t_u,n_inner,mu_flags; mu_flags has one P/F per inner island."""
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "t_l", "t_u", "n_inner", "mu_flags"])
        for isl in islands:
            flags = "".join("P" if x.passes else "F" for x in isl.inner)
            w.writerow([isl.index, _g(isl.t_l), _g(isl.t_u), len(isl.inner), flags])


def write_inner_islands_csv(path, islands: Sequence[Island]) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["island_index", "m", "t_l", "t_u", "mu_l", "mu_u"])
        for isl in islands:
            for x in isl.inner:
                w.writerow([isl.index, x.m, _g(x.t_l), _g(x.t_u), _g(x.mu_l), _g(x.mu_u)])
