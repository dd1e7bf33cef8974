"""Critical-line and off-axis zeros, and persistent zero catalogs.

Sign changes are bracketed on a grid with the vectorised double-precision
engine, refined with Brent's method and, for contexts above double
precision, polished by bracketing secant steps in the working precision.
Each scan is cross-checked against an argument-principle count on a thin
rectangle around the critical line.
"""

from __future__ import annotations

import csv
import json
import math
import os
import threading
import warnings
from dataclasses import asdict, dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable

import numpy as np
from scipy.optimize import brentq

from . import fastline as fl
from .contour import rectangle_winding
from .core import DEFAULT_CTX, EvalContext, mpctx
from .errors import LostBracket, MissedZeroWarning, NoConvergence, UnsupportedFunction, WindingNotOne
from .lattice import _a_tilde, _k11_pair, _script_l_raw, _xi_pair, _zeta
from .specfun import _l4, _loggamma

__all__ = [
    "FunctionId",
    "ZeroRecord",
    "phase_real",
    "line_count",
    "box_count",
    "off_line_count",
    "scan_zeros",
    "refine_zero",
    "find_offaxis_zero",
    "ZeroCatalog",
    "write_catalog_csv",
    "read_catalog_csv",
]


class FunctionId(str, Enum):
    Zeta = "Zeta"
    L4 = "L4"
    Tplus = "Tplus"
    Tminus = "Tminus"
    ScriptL = "ScriptL"
    K00 = "K00"
    K00lambda = "K00lambda"
    K11 = "K11"
    S0 = "S0"
    UK = "UK"
    F = "F"

    def __str__(self) -> str:
        return self.value


REAL_ON_LINE = frozenset(fl.REAL_ON_LINE)
UNCLASSIFIED = "Unclassified"


@dataclass(frozen=True)
class ZeroRecord:
    """A located zero.

    ``residual`` is the Newton correction |f/f'| at the reported point, i.e.
    an estimate of the distance to the true zero in the s-plane.
    """

    func: str
    sigma: float
    t: float
    residual: float
    region: str = UNCLASSIFIED

    @property
    def s(self) -> complex:
        return complex(self.sigma, self.t)


def _fid(func) -> FunctionId:
    try:
        return FunctionId(str(func))
    except ValueError:
        raise UnsupportedFunction(f"unknown function id {func!r}") from None


# --------------------------------------------------------------------------
# real rotations on the critical line


def _line_value(func: FunctionId, t, M):
    """(real rotation, normalising scale) of ``func`` at 1/2 + it in context M."""
    t = M.mpf(t)
    z = M.mpc(M.mpf(1) / 2, t)
    if func in (FunctionId.Zeta, FunctionId.L4, FunctionId.S0):
        rot = M.mpf(0)
        val = M.mpc(1)
        if func in (FunctionId.Zeta, FunctionId.S0):
            rot += M.im(_loggamma(M.mpc(M.mpf(1) / 4, t / 2), M)) - t / 2 * M.log(M.pi)
            val *= _zeta(z, M)
        if func in (FunctionId.L4, FunctionId.S0):
            rot += M.im(_loggamma(M.mpc(M.mpf(3) / 4, t / 2), M)) + t / 2 * M.log(4 / M.pi)
            val *= _l4(z, M)[0]
        if func == FunctionId.S0:
            val *= 4
        return M.re(M.expj(rot) * val), M.mpf(1)
    scale = M.exp(M.re(_loggamma(z, M)) - M.log(M.pi) / 2)
    if func in (FunctionId.Tplus, FunctionId.Tminus):
        x2, x1 = _xi_pair(z, M)
        if func == FunctionId.Tplus:
            return M.re((x2 + x1) / 4), scale
        return M.im((x2 - x1) / 4), scale
    if func == FunctionId.ScriptL:
        return M.re(_script_l_raw(z, M)), scale
    if func == FunctionId.K00:
        x2, x1 = _xi_pair(z, M)
        return M.re(_a_tilde(z, M) - (x2 + x1) / 4), scale
    if func == FunctionId.K00lambda:
        k11, k11r = _k11_pair(z, M)
        return M.re(-(k11 + k11r)), scale
    raise UnsupportedFunction(f"{func} has no real rotation on the critical line")


def phase_real(func, t: float, ctx: EvalContext = DEFAULT_CTX) -> float:
    """Real-valued rotation of ``func`` on the critical line.

    Zeta and L4 use the phases of their completed functions (Hardy-type Z
    functions); S0 is their product times 4.  T_+, T_-/i, the script-L
    function, K(0,0) and K_lambda(0,0) are real on the line as they stand.
    The sign changes exactly at the critical-line zeros.
    """
    fid = _fid(func)
    if fid.value not in REAL_ON_LINE:
        raise UnsupportedFunction(f"{fid} has no real rotation on the critical line")
    M = mpctx(ctx.precision_bits)
    value, _ = _line_value(fid, t, M)
    return float(value) if value != 0 else 0.0


def _normalised_mp(fid: FunctionId, ctx: EvalContext) -> Callable:
    M = mpctx(ctx.precision_bits)

    def q(t):
        v, scale = _line_value(fid, t, M)
        return v / scale

    return q


def _fast_scalar(fid: FunctionId) -> Callable[[float], float]:
    def p(t: float) -> float:
        return float(fl.phase_real_vec(fid.value, np.array([t]))[0])

    return p


# --------------------------------------------------------------------------
# argument-principle counts


def _contour_function(fid: FunctionId) -> Callable[[np.ndarray], np.ndarray]:
    if fid == FunctionId.Zeta:
        return fl.zeta_vec
    if fid == FunctionId.L4:
        return fl.l4_vec
    if fid == FunctionId.S0:
        return lambda s: fl.zeta_vec(s) * fl.l4_vec(s)
    attr = {
        FunctionId.Tplus: "tplus",
        FunctionId.Tminus: "tminus",
        FunctionId.ScriptL: "script_l",
        FunctionId.K00: "k00",
        FunctionId.K00lambda: "k00_lambda",
        FunctionId.K11: "k11",
    }[fid]
    return lambda s: getattr(fl.LineParts(s), attr)


# lattice functions carry Gamma(s - 1/2) and zeta(2s): keep contours off s = 1/2
_T_FLOOR = {FunctionId.Zeta: 0.0, FunctionId.L4: 0.0, FunctionId.S0: 0.0}


def _floor(fid: FunctionId) -> float:
    return _T_FLOOR.get(fid, 0.5)


def line_count(func, t_min: float, t_max: float, width: float = 0.25, step: float = 0.05) -> int:
    """Zeros of ``func`` in the rectangle |sigma - 1/2| <= width, t_min <= t <= t_max."""
    fid = _fid(func)
    lo = max(t_min, _floor(fid))
    if t_max <= lo:
        return 0
    res = rectangle_winding(_contour_function(fid), (0.5 - width, 0.5 + width), (lo, t_max), step)
    return res.count


def box_count(func, sigma_range: tuple[float, float], t_range: tuple[float, float], step: float = 0.05) -> int:
    """Zeros of ``func`` inside an arbitrary rectangle, by the argument principle.

    Raises PoleOrZeroTooClose when a zero or pole lies on the boundary.
    """
    fid = _fid(func)
    return rectangle_winding(_contour_function(fid), sigma_range, t_range, step).count


_SYMMETRIC = (FunctionId.Zeta, FunctionId.L4, FunctionId.S0)


def off_line_count(func, t_min: float, t_max: float, line_zeros: int, sigma_max: float = 3.0) -> int:
    """Zeros with 1/2 < sigma <= sigma_max and t_min < t < t_max.

    Zeros of zeta, L_{-4} and S_0 are symmetric about the critical line, so
    the count is half of (rectangle count over [1 - sigma_max, sigma_max]
    minus the ``line_zeros`` found by sign changes).  Keeping the contour away
    from the line avoids the phase aliasing that closely spaced on-line zeros
    cause on an edge hugging the line.
    """
    fid = _fid(func)
    if fid not in _SYMMETRIC:
        raise UnsupportedFunction(f"{fid} has no reflection symmetry about the critical line")
    total = box_count(fid, (1 - sigma_max, sigma_max), (t_min, t_max))
    diff = total - int(line_zeros)
    if diff < 0 or diff % 2:
        raise ValueError(f"rectangle count {total} is inconsistent with {line_zeros} line zeros")
    return diff // 2


# --------------------------------------------------------------------------
# refinement


def _illinois(q: Callable, a, b, qa, qb, tol: float, max_iter: int = 200):
    """Bracketing secant (Illinois variant) on [a, b]; returns (lo, hi, q_lo, q_hi)."""
    side = 0
    for _ in range(max_iter):
        if abs(b - a) < tol:
            break
        c = b - qb * (b - a) / (qb - qa)
        if not (min(a, b) < c < max(a, b)):
            c = (a + b) / 2
        qc = q(c)
        if qc == 0:
            return c, c, qc, qc
        if (qc > 0) == (qb > 0):
            b, qb = c, qc
            if side == -1:
                qa = qa / 2
            side = -1
        else:
            a, qa = c, qc
            if side == 1:
                qb = qb / 2
            side = 1
    return a, b, qa, qb


_CELL = 2.0 ** -20


def refine_zero(func, bracket: tuple[float, float], ctx: EvalContext = DEFAULT_CTX) -> ZeroRecord:
    """Refine a sign change of ``phase_real`` inside ``bracket`` to |interval| < 1e-8 or better."""
    fid = _fid(func)
    if fid.value not in REAL_ON_LINE:
        raise UnsupportedFunction(f"{fid} has no real rotation on the critical line")
    a, b = float(min(bracket)), float(max(bracket))
    p = _fast_scalar(fid)
    pa, pb = p(a), p(b)
    if pa == 0:
        return ZeroRecord(fid.value, 0.5, a, 0.0)
    if pb == 0:
        return ZeroRecord(fid.value, 0.5, b, 0.0)
    if (pa > 0) == (pb > 0):
        raise LostBracket(f"{fid} has equal signs at {a} and {b}")
    t_star = brentq(p, a, b, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=200)
    # re-solve on a fixed dyadic cell so the result does not depend on the scan grid
    c0 = math.floor(t_star / _CELL) * _CELL
    c1 = c0 + _CELL
    if a <= c0 and c1 <= b:
        p0, p1 = p(c0), p(c1)
        if p0 == 0 or p1 == 0:
            t_star = c0 if p0 == 0 else c1
        elif (p0 > 0) != (p1 > 0):
            t_star = brentq(p, c0, c1, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=200)
    if ctx.is_double:
        h = 1e-7
        slope = (p(t_star + h) - p(t_star - h)) / (2 * h)
        res = abs(p(t_star) / slope) if slope else 0.0
        return ZeroRecord(fid.value, 0.5, float(t_star), float(res))
    M = mpctx(ctx.precision_bits)
    q = _normalised_mp(fid, ctx)
    width = 1e-9
    while True:
        lo, hi = M.mpf(t_star) - width, M.mpf(t_star) + width
        q_lo, q_hi = q(lo), q(hi)
        if (q_lo > 0) != (q_hi > 0):
            break
        width *= 10
        if width > 1e-5 or lo < a or hi > b:
            raise LostBracket(f"{fid}: working-precision signs disagree near t={t_star}")
    lo, hi, q_lo, q_hi = _illinois(q, lo, hi, q_lo, q_hi, tol=1e-14 * max(1.0, abs(t_star)))
    t_new = lo - q_lo * (hi - lo) / (q_hi - q_lo) if q_hi != q_lo else lo
    h = M.mpf(1e-8)
    slope = (q(t_new + h) - q(t_new - h)) / (2 * h)
    res = abs(q(t_new) / slope) if slope != 0 else M.mpf(0)
    return ZeroRecord(fid.value, 0.5, float(t_new), float(res))


# --------------------------------------------------------------------------
# scanning


def _grid(lo: float, hi: float, step: float) -> np.ndarray:
    """Grid points at integer multiples of ``step`` plus both endpoints."""
    k0 = math.ceil(lo / step)
    k1 = math.floor(hi / step)
    inner = np.arange(k0, k1 + 1, dtype=float) * step
    pts = np.concatenate(([lo], inner, [hi]))
    return np.unique(pts[(pts >= lo) & (pts <= hi)])


def _brackets(fid: FunctionId, lo: float, hi: float, step: float) -> list[tuple[float, float]]:
    ts = _grid(lo, hi, step)
    if ts.size < 2:
        return []
    vals = fl.phase_real_vec(fid.value, ts)
    sgn = np.sign(vals)
    out = []
    for i in np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]:
        out.append((float(ts[i]), float(ts[i + 1])))
    for i in np.nonzero(sgn == 0)[0]:
        j0, j1 = max(i - 1, 0), min(i + 1, ts.size - 1)
        out.append((float(ts[j0]), float(ts[j1])))
    return sorted(set(out))


def _scan_once(fid, lo, hi, step, ctx) -> list[ZeroRecord]:
    recs = [refine_zero(fid, br, ctx) for br in _brackets(fid, lo, hi, step)]
    uniq: dict[float, ZeroRecord] = {}
    for r in recs:
        # store-format rounding, so a catalog hit returns exactly what a cold scan does
        r = ZeroRecord(r.func, r.sigma, float(_fmt(r.t)), float(_fmt(r.residual)), r.region)
        uniq.setdefault(round(r.t, 9), r)
    return sorted(uniq.values(), key=lambda r: r.t)


def scan_zeros(
    func,
    t_min: float,
    t_max: float,
    step: float = 0.01,
    ctx: EvalContext = DEFAULT_CTX,
    *,
    check_count: bool = True,
    catalog: "ZeroCatalog | None" = None,
) -> list[ZeroRecord]:
    """All critical-line zeros of ``func`` with t_min <= t <= t_max.

    The count is compared with an argument-principle count on a thin
    rectangle around the line; on disagreement the range is re-scanned once
    at step/4 and a :class:`MissedZeroWarning` is issued if they still differ.
    With a ``catalog``, previously covered t-ranges are reused and only the
    remainder is scanned.
    """
    fid = _fid(func)
    if fid.value not in REAL_ON_LINE:
        raise UnsupportedFunction(f"{fid} has no real rotation on the critical line")
    if not 0 < step <= 0.05:
        raise ValueError("step must lie in (0, 0.05]")
    if t_max > 1e4:
        raise ValueError("scans are supported up to t = 1e4")
    lo = max(float(t_min), _floor(fid))
    hi = float(t_max)
    if hi <= lo:
        return []
    if catalog is not None:
        return catalog.scan(fid, lo, hi, step, ctx, check_count=check_count)
    recs = _scan_once(fid, lo, hi, step, ctx)
    if check_count:
        expected = line_count(fid, lo, hi)
        if expected != len(recs):
            recs = _scan_once(fid, lo, hi, step / 4, ctx)
            if expected != len(recs):
                warnings.warn(
                    f"{fid} on [{lo}, {hi}]: {len(recs)} sign changes, "
                    f"argument principle gives {expected}",
                    MissedZeroWarning,
                    stacklevel=2,
                )
    return recs


# --------------------------------------------------------------------------
# off-axis zeros


def _offaxis_mp(fid: FunctionId, ctx: EvalContext):
    M = mpctx(ctx.precision_bits)
    if fid == FunctionId.K11:
        return lambda z: _k11_pair(z, M)[0]
    if fid == FunctionId.K00:
        def k00(z):
            x2, x1 = _xi_pair(z, M)
            return _a_tilde(z, M) - (x2 + x1) / 4
        return k00
    raise UnsupportedFunction("off-axis search supports K00 and K11 only")


def _box_winding(fid: FunctionId, box) -> int:
    s0, s1, t0, t1 = box
    step = max(min(s1 - s0, t1 - t0) / 40, 1e-4)
    res = rectangle_winding(_contour_function(fid), (s0, s1), (t0, t1), step=min(step, 0.02))
    return res.count


def _subdivide(fid: FunctionId, box, depth: int = 0):
    s0, s1, t0, t1 = box
    sm, tm = (s0 + s1) / 2, (t0 + t1) / 2
    for sub in ((s0, sm, t0, tm), (sm, s1, t0, tm), (s0, sm, tm, t1), (sm, s1, tm, t1)):
        try:
            if _box_winding(fid, sub) == 1:
                return sub
        except Exception:  # zero on a sub-box edge: try the next quadrant
            continue
    return None


def _newton(f, z0, box, M, max_iter: int = 60):
    s0, s1, t0, t1 = box
    h = M.mpf(2) ** (-M.prec // 3)
    z = z0
    for _ in range(max_iter):
        fz = f(z)
        d = (f(z + h) - f(z - h)) / (2 * h)
        if d == 0:
            return None, None
        step = fz / d
        z = z - step
        if not (s0 <= float(M.re(z)) <= s1 and t0 <= float(M.im(z)) <= t1):
            return None, None
        if abs(step) < M.mpf(10) ** (-12) * max(1, abs(z)):
            fz = f(z)
            d = (f(z + h) - f(z - h)) / (2 * h)
            return z, abs(fz / d)
    return None, None


def find_offaxis_zero(func, seed_box, ctx: EvalContext = DEFAULT_CTX) -> ZeroRecord:
    """Locate the single zero of K00 or K11 inside ``seed_box`` = (sigma0, sigma1, t0, t1)."""
    fid = _fid(func)
    f = _offaxis_mp(fid, ctx)
    box = tuple(float(x) for x in seed_box)
    if box[0] >= box[1] or box[2] >= box[3]:
        raise ValueError("seed box must be (sigma0, sigma1, t0, t1) with positive extent")
    w = _box_winding(fid, box)
    if w != 1:
        raise WindingNotOne(w)
    M = mpctx(ctx.precision_bits)
    for _ in range(12):
        centre = M.mpc((box[0] + box[1]) / 2, (box[2] + box[3]) / 2)
        z, res = _newton(f, centre, box, M)
        if z is not None:
            return ZeroRecord(fid.value, float(M.re(z)), float(M.im(z)), float(res))
        sub = _subdivide(fid, box)
        if sub is None:
            break
        box = sub
    raise NoConvergence(f"Newton iteration for {fid} did not converge in the seed box")


# --------------------------------------------------------------------------
# catalogs


CATALOG_FIELDS = ("func", "sigma", "t", "residual", "region")


def _fmt(x: float) -> str:
    return f"{float(x):.15g}"


def write_catalog_csv(path, records: Iterable[ZeroRecord]) -> None:
    """Write records sorted by t, atomically (readers never see partial rows)."""
    path = Path(path)
    rows = sorted(records, key=lambda r: (r.t, r.sigma, r.func))
    tmp = path.with_name(path.name + f".tmp{os.getpid()}.{threading.get_ident()}")
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CATALOG_FIELDS)
        for r in rows:
            w.writerow([r.func, _fmt(r.sigma), _fmt(r.t), _fmt(r.residual), r.region])
    os.replace(tmp, path)


def read_catalog_csv(path) -> list[ZeroRecord]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CATALOG_FIELDS:
            raise ValueError(f"{path}: unexpected catalog header {reader.fieldnames}")
        return [
            ZeroRecord(row["func"], float(row["sigma"]), float(row["t"]), float(row["residual"]), row["region"])
            for row in reader
        ]


_WRITE_LOCKS: dict[str, threading.Lock] = {}
_LOCKS_GUARD = threading.Lock()


def _lock_for(path: Path) -> threading.Lock:
    with _LOCKS_GUARD:
        return _WRITE_LOCKS.setdefault(str(path.resolve()), threading.Lock())


class ZeroCatalog:
    """CSV zero catalogs keyed by (function, context hash) inside one directory.

    A sidecar JSON file records the covered t-range so that later scans only
    compute the part not covered yet.  Scan grids are aligned to multiples of
    the step, so resumed scans bracket exactly as a cold scan would.
    """

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def path(self, func, ctx: EvalContext) -> Path:
        return self.directory / f"{_fid(func).value}_{ctx.key()}.csv"

    def _meta_path(self, func, ctx) -> Path:
        p = self.path(func, ctx)
        return p.with_name(p.stem + ".meta.json")

    def load(self, func, ctx: EvalContext) -> tuple[list[ZeroRecord], tuple[float, float] | None]:
        p, mp_ = self.path(func, ctx), self._meta_path(func, ctx)
        if not p.exists() or not mp_.exists():
            return [], None
        meta = json.loads(mp_.read_text())
        return read_catalog_csv(p), (float(meta["t_lo"]), float(meta["t_hi"]))

    def store(self, func, ctx: EvalContext, records: list[ZeroRecord], covered: tuple[float, float],
              step: float) -> None:
        p, mp_ = self.path(func, ctx), self._meta_path(func, ctx)
        with _lock_for(p):
            write_catalog_csv(p, records)
            tmp = mp_.with_name(mp_.name + ".tmp")
            tmp.write_text(json.dumps({"func": _fid(func).value, "ctx": asdict(ctx),
                                       "t_lo": covered[0], "t_hi": covered[1], "step": step},
                                      sort_keys=True) + "\n")
            os.replace(tmp, mp_)

    def scan(self, fid: FunctionId, lo: float, hi: float, step: float, ctx: EvalContext,
             check_count: bool = True, scanner: Callable | None = None) -> list[ZeroRecord]:
        """Zeros of ``fid`` on [lo, hi], computing only what the cached catalog lacks.

        ``scanner`` replaces :func:`scan_zeros` (same signature), e.g. by a
        version that splits the range over worker processes.
        """
        scan_zeros_ = scanner or scan_zeros
        old, cov = self.load(fid, ctx)
        if cov is not None and cov[0] <= lo and hi <= cov[1]:
            return [r for r in old if lo <= r.t <= hi]
        if cov is not None and cov[0] <= lo <= cov[1]:
            # resume from the last covered t (a grid point of the earlier scan)
            start = cov[1]
            new = scan_zeros_(fid, start, hi, step, ctx, check_count=check_count)
            new = [r for r in new if r.t > start]
            merged = old + new
            covered = (cov[0], hi)
        else:
            merged = scan_zeros_(fid, lo, hi, step, ctx, check_count=check_count)
            covered = (lo, hi)
        self.store(fid, ctx, merged, covered, step)
        return [r for r in merged if lo <= r.t <= hi]

    def update_regions(self, fid, ctx: EvalContext, records: list[ZeroRecord]) -> None:
        """Rewrite the catalog with region labels taken from ``records`` (matched by t)."""
        old, cov = self.load(fid, ctx)
        if cov is None:
            return
        labels = {round(r.t, 9): r.region for r in records}
        new = [replace(r, region=labels.get(round(r.t, 9), r.region)) for r in old]
        meta = json.loads(self._meta_path(fid, ctx).read_text())
        self.store(fid, ctx, new, cov, meta.get("step", 0.01))
