"""Command-line front end.

Subcommands::

    eval      evaluate one function at one point
    zeros     critical-line zero catalog (cached per function and context)
    classify  islands and inner islands on a t-range
    stats     island, zero-region and cluster tables plus histograms
    grid      (sigma, t) grids for external contouring
    verify    identity and region-theory checks (exit 1 on any failure)

Settings come from, in increasing priority: built-in defaults, a key=value
config file (``--config``), the LATTICE_CRITIC_CACHE environment variable
(cache directory only) and command-line flags.
"""

from __future__ import annotations

import argparse
import contextlib
import fcntl
import logging
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import lattice as lt
from .core import EvalContext, mpctx, to_mpc
from .errors import DomainError, LatticeCriticError, MissedZeroWarning
from .grid import GRID_FUNCS, export_grid
from .identities import run_identity_suite
from .regions import (
    RegionClass,
    classify_records,
    derivatives_fast,
    find_inner_islands,
    find_islands,
    theorem1_check,
    theorem4_audit,
    write_inner_islands_csv,
    write_islands_csv,
)
from .specfun import gamma_c, l_minus4, loggamma_c, xi1, zeta_c
from .stats import (
    HistogramQuantity,
    HistogramSpec,
    cluster_stats,
    histogram,
    histogram_values,
    island_stats,
    write_histogram_csv,
    write_stats_csv,
    write_summary_json,
    zero_region_fractions,
)
from .zeros import FunctionId, REAL_ON_LINE, ZeroCatalog, scan_zeros, write_catalog_csv

log = logging.getLogger("lattice_critic")

CACHE_ENV = "LATTICE_CRITIC_CACHE"
LOCK_NAME = "lattice-critic.lock"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    """Bad flags or configuration; reported with exit code 2."""


@dataclass(frozen=True)
class RunConfig:
    ctx: EvalContext
    cache_dir: Path
    workers: int = 1
    output: Path = Path(".")

    def __post_init__(self):
        if self.workers < 1:
            raise UsageError("workers must be >= 1")


_CTX_KEYS = {f.name: f.type for f in fields(EvalContext)}
_CONFIG_KEYS = set(_CTX_KEYS) | {"cache_dir", "workers", "output"}


def read_config(path) -> dict[str, str]:
    """Parse ``key = value`` lines; blank lines and ``#`` comments are ignored."""
    out: dict[str, str] = {}
    for n, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key = value")
        key, value = (x.strip() for x in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise UsageError(f"{path}:{n}: unknown key {key!r}")
        out[key] = value
    return out


def _default_cache() -> Path:
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "lattice-critic"


def build_config(args: argparse.Namespace) -> RunConfig:
    settings: dict[str, str] = read_config(args.config) if args.config else {}
    if os.environ.get(CACHE_ENV):
        settings["cache_dir"] = os.environ[CACHE_ENV]
    for key in _CONFIG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            settings[key] = str(val)
    ctx_kwargs = {}
    try:
        for key in _CTX_KEYS:
            if key in settings:
                conv = float if key in ("rel_tol", "diff_step") else lambda x: int(float(x))
                ctx_kwargs[key] = conv(settings[key])
        ctx = EvalContext(**ctx_kwargs)
        workers = int(settings.get("workers", 1))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return RunConfig(ctx, Path(settings.get("cache_dir", _default_cache())), workers,
                     Path(settings.get("output", ".")))


@contextlib.contextmanager
def cache_lock(cache_dir: Path):
    """Exclusive advisory lock on the cache directory for the life of the block."""
    cache_dir.mkdir(parents=True, exist_ok=True)
    with open(cache_dir / LOCK_NAME, "a+") as fh:
        fcntl.flock(fh.fileno(), fcntl.LOCK_EX)
        try:
            yield
        finally:
            fcntl.flock(fh.fileno(), fcntl.LOCK_UN)


def _out_path(cfg: RunConfig, name) -> Path:
    p = Path(name)
    return p if p.is_absolute() else cfg.output / p


# --------------------------------------------------------------------------
# eval


def _first(pair_fn: Callable, index: int) -> Callable:
    return lambda s, lam, ctx: pair_fn(s, lam, ctx)[index]


def _lam_free(fn: Callable, index: int | None = None) -> Callable:
    def call(s, lam, ctx):
        if lam != 1.0:
            raise DomainError("this function is defined for lambda = 1 only")
        val = fn(s, ctx)
        return val if index is None else val[index]
    return call


EVAL_FUNCS: dict[str, Callable] = {
    "Zeta": _lam_free(zeta_c),
    "L4": _lam_free(l_minus4),
    "Gamma": _lam_free(gamma_c),
    "LogGamma": _lam_free(loggamma_c),
    "Xi1": _lam_free(xi1),
    "S0": lambda s, lam, ctx: lt.s0(s, lam, ctx),
    "S0direct": lambda s, lam, ctx: lt.s0_direct(s, lam, ctx),
    "S0tilde": _lam_free(lt.s0_tilde),
    "S0reconstruct": _lam_free(lt.s0_reconstruct),
    "Tplus": _first(lt.t_plus_minus, 0),
    "Tminus": _first(lt.t_plus_minus, 1),
    "ScriptL": _lam_free(lt.script_L),
    "K00": _lam_free(lt.k00_closed),
    "K00lambda": _lam_free(lt.k00_lambda_closed),
    "K11": _lam_free(lt.k11_closed, 0),
    "K11reflected": _lam_free(lt.k11_closed, 1),
    "UK11": _first(lt.uk_vk, 0),
    "VK11": _first(lt.uk_vk, 1),
    "VK11fromK00": lambda s, lam, ctx: lt.vk_from_k00(s, lam, ctx),
    "U": _lam_free(lt.u_v, 0),
    "V": _lam_free(lt.u_v, 1),
    "F": _lam_free(lt.f_g, 0),
    "G": _lam_free(lt.f_g, 1),
    "K": None,  # MacDonald sum, needs --n and --m
}


def cmd_eval(args, cfg: RunConfig) -> int:
    ctx = cfg.ctx
    M = mpctx(ctx.precision_bits)
    s = to_mpc(args.s, M)
    if args.func == "K":
        val = lt.macdonald_K(args.n, args.m, s, args.lam, ctx)
    else:
        val = EVAL_FUNCS[args.func](s, args.lam, ctx)
    v = M.mpc(val.value)
    digits = args.digits
    print(f"func\t{args.func}")
    print(f"s\t{args.s}")
    if args.lam != 1.0:
        print(f"lambda\t{args.lam:.17g}")
    print(f"value\t{M.nstr(M.re(v), digits)}{'-' if M.im(v) < 0 else '+'}{M.nstr(abs(M.im(v)), digits)}i")
    print(f"abs\t{M.nstr(abs(v), digits)}")
    print(f"arg\t{M.nstr(M.arg(v), digits)}")
    print(f"err_estimate\t{val.err_estimate:.3g}")
    return EXIT_OK


# --------------------------------------------------------------------------
# zeros


def _slices(lo: float, hi: float, step: float, n: int) -> list[tuple[float, float]]:
    """Split [lo, hi] at multiples of ``step`` into at most n pieces."""
    if n <= 1:
        return [(lo, hi)]
    cuts = [lo] + [round((lo + (hi - lo) * k / n) / step) * step for k in range(1, n)] + [hi]
    cuts = sorted(set(c for c in cuts if lo <= c <= hi))
    return [(a, b) for a, b in zip(cuts[:-1], cuts[1:]) if b > a]


def _scan_slice(job):
    func, a, b, step, ctx, check = job
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", MissedZeroWarning)
        recs = scan_zeros(func, a, b, step, ctx, check_count=check)
    return recs, [str(w.message) for w in caught if issubclass(w.category, MissedZeroWarning)]


def parallel_scanner(workers: int) -> Callable:
    """A drop-in for scan_zeros that farms grid-aligned slices out to processes."""
    def scan(func, lo, hi, step, ctx, check_count=True):
        jobs = [(FunctionId(str(func)).value, a, b, step, ctx, check_count)
                for a, b in _slices(lo, hi, step, workers)]
        if len(jobs) == 1:
            results = [_scan_slice(jobs[0])]
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_scan_slice, jobs))
        merged = {}
        for recs, msgs in results:
            for msg in msgs:
                warnings.warn(msg, MissedZeroWarning, stacklevel=2)
            for r in recs:
                merged.setdefault(round(r.t, 9), r)
        return sorted(merged.values(), key=lambda r: r.t)
    return scan


def _catalog(cfg: RunConfig, func: str, lo: float, hi: float, step: float, check: bool = True):
    cat = ZeroCatalog(cfg.cache_dir)
    return cat.scan(FunctionId(func), lo, hi, step, cfg.ctx, check_count=check,
                    scanner=parallel_scanner(cfg.workers))


def cmd_zeros(args, cfg: RunConfig) -> int:
    lo, hi = args.t
    with cache_lock(cfg.cache_dir):
        recs = _catalog(cfg, args.func, lo, hi, args.step, not args.no_check)
    if args.classify:
        recs = classify_records(recs)
    if args.out:
        write_catalog_csv(_out_path(cfg, args.out), recs)
    print(f"{args.func}\t[{lo:g}, {hi:g}]\t{len(recs)} zeros")
    if args.classify:
        for cls in RegionClass:
            print(f"{cls.value}\t{sum(r.region == cls.value for r in recs)}")
    return EXIT_OK


# --------------------------------------------------------------------------
# classify


def _inner_job(job):
    isl, ctx = job
    return find_inner_islands(isl, ctx)


def _islands(cfg: RunConfig, lo: float, hi: float, with_inner: bool):
    islands = find_islands(lo, hi, cfg.ctx)
    if with_inner:
        jobs = [(isl, cfg.ctx) for isl in islands]
        if cfg.workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
                inner = list(pool.map(_inner_job, jobs))
        else:
            inner = [_inner_job(j) for j in jobs]
        for isl, found in zip(islands, inner):
            isl.inner = found
    return islands


def cmd_classify(args, cfg: RunConfig) -> int:
    lo, hi = args.t
    with_inner = args.with_inner or bool(args.inner_out)
    islands = _islands(cfg, lo, hi, with_inner)
    write_islands_csv(_out_path(cfg, args.out), islands)
    if args.inner_out:
        write_inner_islands_csv(_out_path(cfg, args.inner_out), islands)
    print(f"islands\t{len(islands)}")
    if with_inner:
        print(f"inner_islands\t{sum(len(i.inner) for i in islands)}")
    return EXIT_OK


# --------------------------------------------------------------------------
# stats


def cmd_stats(args, cfg: RunConfig) -> int:
    lo, hi = args.t
    ranges = [(float(a), float(min(a + args.width, hi))) for a in np.arange(lo, hi, args.width)]
    out_dir = _out_path(cfg, args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary: dict = {}
    islands = find_islands(lo, hi, cfg.ctx)
    rows = island_stats(islands, ranges + [(lo, hi)])
    write_stats_csv(out_dir / "islands.csv", rows)
    summary["islands"] = rows
    cats = {}
    if args.zeros:
        with cache_lock(cfg.cache_dir):
            for func in ("Zeta", "L4"):
                cats[func] = classify_records(_catalog(cfg, func, lo, hi, 0.01))
        for func, recs in cats.items():
            zrows = zero_region_fractions(recs, ranges + [(lo, hi)])
            write_stats_csv(out_dir / f"zeros_{func}.csv", zrows)
            summary[f"zeros_{func}"] = zrows
        summary["clusters"] = cluster_stats(cats["Zeta"], cats["L4"], islands).as_dict()
    for q in HistogramQuantity:
        if q is HistogramQuantity.ArgUatZero and not cats:
            continue
        vals = histogram_values(q, islands, cats.get("Zeta", []))
        spec = HistogramSpec.default(q, max_length=max(1.0, math.ceil(float(vals.max()) if vals.size else 1.0)))
        hist = histogram(vals, spec)
        write_histogram_csv(out_dir / f"hist_{q.value}.csv", hist)
        summary[f"hist_{q.value}"] = {"bin_width": spec.bin_width, "domain": list(spec.domain),
                                      "counts": hist.counts.tolist(), "outside": hist.outside}
    write_summary_json(out_dir / "summary.json", summary)
    for r in rows:
        print(f"[{r.range[0]:g}, {r.range[1]:g})\tislands={r.count}\tfraction={r.fraction:.4f}\t"
              f"mean={r.mean_len:.4f}\tsd={r.sd_len:.4f}")
    return EXIT_OK


# --------------------------------------------------------------------------
# grid


def cmd_grid(args, cfg: RunConfig) -> int:
    path = export_grid(_out_path(cfg, args.out), args.func, args.sigma, args.t, args.n_sigma, args.n_t)
    print(f"grid\t{args.func}\t{args.n_sigma}x{args.n_t}\t{path}")
    return EXIT_OK


# --------------------------------------------------------------------------
# verify


def _verify_identities(args, cfg: RunConfig) -> bool:
    ok = True
    for r in run_identity_suite(cfg.ctx):
        ok &= r.passed
        print(f"{'PASS' if r.passed else 'FAIL'}\t{r.name}\t{r.point}\tresidual={r.residual:.3e}\ttol={r.tol:g}")
    return ok


def _verify_theorem1(args, cfg: RunConfig) -> bool:
    lo, hi = args.t
    ok = True
    with cache_lock(cfg.cache_dir):
        cats = {f: _catalog(cfg, f, lo, hi, 0.01) for f in ("Zeta", "L4", "ScriptL")}
    for func, recs in cats.items():
        worst = max((theorem1_check(r, cfg.ctx) for r in recs), default=0.0)
        passed = worst < 1e-5
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}\tF=-1 at {func} zeros\tcount={len(recs)}\tmax|F+1|={worst:.3e}")
    return ok


def _verify_theorem4(args, cfg: RunConfig) -> bool:
    lo, hi = args.t
    islands = _islands(cfg, lo, hi, with_inner=True)
    with cache_lock(cfg.cache_dir):
        cats = {f: _catalog(cfg, f, lo, hi, 0.01) for f in ("Zeta", "L4", "ScriptL")}
    rep = theorem4_audit(lo, hi, cfg.ctx, islands=islands, catalogs=cats)
    for r in rep.rows:
        print(f"{'PASS' if r.passed else 'FAIL'}\tinner island {r.island_index}.{r.m}\t"
              f"[{r.t_l:.6f}, {r.t_u:.6f}]\tmu_l={r.mu_l:.4f}\tmu_u={r.mu_u:.4f}\t"
              f"continuous=({r.mu_l_cont:.4f}, {r.mu_u_cont:.4f})")
    bad = [s for s in rep.spacing if not s.passed]
    print(f"{'PASS' if not bad else 'FAIL'}\tspacing\t{len(rep.spacing) - len(bad)}/{len(rep.spacing)} gaps hold a zero")
    return rep.passed


def _verify_simplicity(args, cfg: RunConfig) -> bool:
    lo, hi = args.t
    with cache_lock(cfg.cache_dir):
        recs = [r for f in ("Zeta", "L4") for r in _catalog(cfg, f, lo, hi, 0.01)]
    ts = np.array(sorted(r.t for r in recs))
    d1, _ = derivatives_fast(ts)
    du = _arg_u_derivative(ts)
    ext = d1 > 0
    ok = bool(np.all(du[ext] < 0))
    print(f"{'PASS' if ok else 'FAIL'}\textended-region S0 zeros\tcount={int(ext.sum())}")
    return ok


def _arg_u_derivative(ts: np.ndarray) -> np.ndarray:
    from .fastline import arg_derivative_vec

    return arg_derivative_vec(ts, ("u",))["u"]


VERIFY_SUITES = {
    "identities": _verify_identities,
    "theorem1": _verify_theorem1,
    "theorem4": _verify_theorem4,
    "simplicity": _verify_simplicity,
}


def cmd_verify(args, cfg: RunConfig) -> int:
    ok = VERIFY_SUITES[args.suite](args, cfg)
    print(f"suite {args.suite}: {'passed' if ok else 'FAILED'}")
    return EXIT_OK if ok else EXIT_FAIL


# --------------------------------------------------------------------------
# parser


def _range(text_pair):
    lo, hi = (float(x) for x in text_pair)
    if not hi > lo:
        raise UsageError(f"empty range [{lo}, {hi}]")
    return lo, hi


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value settings file")
    common.add_argument("--precision-bits", dest="precision_bits", type=int)
    common.add_argument("--rel-tol", dest="rel_tol", type=float)
    common.add_argument("--diff-step", dest="diff_step", type=float)
    common.add_argument("--cache-dir", dest="cache_dir")
    common.add_argument("--workers", type=int)
    common.add_argument("--output", help="directory for relative output paths")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="lattice-critic", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("eval", parents=[common], help="evaluate a function at one point")
    e.add_argument("--func", required=True, choices=sorted(EVAL_FUNCS))
    e.add_argument("--s", required=True, help="complex point, a+bi")
    e.add_argument("--lam", type=float, default=1.0)
    e.add_argument("--n", type=int, default=0)
    e.add_argument("--m", type=int, default=0)
    e.add_argument("--digits", type=int, default=20)

    z = sub.add_parser("zeros", parents=[common], help="critical-line zeros")
    z.add_argument("--func", required=True, choices=sorted(REAL_ON_LINE))
    z.add_argument("--t", nargs=2, required=True, metavar=("LO", "HI"))
    z.add_argument("--step", type=float, default=0.01)
    z.add_argument("--out")
    z.add_argument("--classify", action="store_true", help="attach region classes")
    z.add_argument("--no-check", action="store_true", help="skip the argument-principle count")

    c = sub.add_parser("classify", parents=[common], help="islands on a t-range")
    c.add_argument("--t", nargs=2, required=True, metavar=("LO", "HI"))
    c.add_argument("--out", required=True)
    c.add_argument("--inner-out")
    c.add_argument("--with-inner", action="store_true")

    s = sub.add_parser("stats", parents=[common], help="statistics tables and histograms")
    s.add_argument("--t", nargs=2, required=True, metavar=("LO", "HI"))
    s.add_argument("--width", type=float, default=100.0)
    s.add_argument("--out-dir", default="stats")
    s.add_argument("--zeros", action="store_true", help="include zeta and L_{-4} zero tables")

    g = sub.add_parser("grid", parents=[common], help="(sigma, t) grid export")
    g.add_argument("--func", required=True, choices=GRID_FUNCS)
    g.add_argument("--sigma", nargs=2, type=float, required=True, metavar=("LO", "HI"))
    g.add_argument("--t", nargs=2, type=float, required=True, metavar=("LO", "HI"))
    g.add_argument("--n-sigma", type=int, default=100)
    g.add_argument("--n-t", type=int, default=100)
    g.add_argument("--out", required=True)

    v = sub.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("--suite", required=True, choices=sorted(VERIFY_SUITES))
    v.add_argument("--t", nargs=2, default=("0", "200"), metavar=("LO", "HI"))
    return p


COMMANDS = {"eval": cmd_eval, "zeros": cmd_zeros, "classify": cmd_classify,
            "stats": cmd_stats, "grid": cmd_grid, "verify": cmd_verify}


def run_cli(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv) if argv is not None else None)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if hasattr(args, "t") and args.command != "grid":
            args.t = _range(args.t)
        cfg = build_config(args)
        return COMMANDS[args.command](args, cfg)
    except (UsageError, DomainError, ValueError) as exc:
        print(f"lattice-critic: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LatticeCriticError as exc:
        print(f"lattice-critic: numerical failure: {exc}", file=sys.stderr)
        return EXIT_FAIL


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
