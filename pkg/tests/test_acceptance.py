"""Acceptance criteria, each checked at its stated tolerance.

Every test records one PASS/FAIL line (collected in the "acceptance criteria"
section of the pytest summary) and then asserts.  The medium suite is marked
``slow``.  The stretch report never gates: its cheap items always run, and
the long catalog items run when LATTICE_CRITIC_STRETCH=1.
"""

from __future__ import annotations

import math
import os
import warnings

import numpy as np
import pytest

from lattice_critic.core import EvalContext, arg_derivative_t
from lattice_critic.identities import run_identity_suite
from lattice_critic.lattice import k11_closed, macdonald_K, u_v, uk_vk
from lattice_critic.regions import (
    RegionClass,
    classify_records,
    enclave_contents,
    find_islands,
    line_arg_change,
    theorem1_check,
    theorem4_audit,
)
from lattice_critic.stats import (
    HistogramQuantity,
    HistogramSpec,
    cluster_stats,
    histogram,
    histogram_values,
    island_stats,
    zero_region_fractions,
)
from lattice_critic.zeros import ZeroCatalog, find_offaxis_zero, off_line_count, scan_zeros

CTX = EvalContext()
DCTX = EvalContext(precision_bits=53)


def _rel(a, b) -> float:
    return float(abs(a - b) / max(abs(a), abs(b)))


@pytest.fixture(scope="module")
def catalogs_200():
    return {f: scan_zeros(f, 0, 200, ctx=DCTX) for f in ("Zeta", "L4", "ScriptL")}


@pytest.fixture(scope="module")
def catalogs_1000():
    return {f: classify_records(scan_zeros(f, 0, 1000, ctx=DCTX)) for f in ("Zeta", "L4")}


# --------------------------------------------------------------------------
# fast suite


def test_criterion_01_identity_suite(acceptance_log):
    results = run_identity_suite(CTX)
    bad = [r for r in results if not r.passed]
    worst = max(results, key=lambda r: r.residual / r.tol)
    acceptance_log("1 identities", not bad,
                   f"{len(results) - len(bad)}/{len(results)} checks; worst {worst.name} "
                   f"{worst.residual:.2e} (tol {worst.tol:g})")
    assert not bad, [(r.name, r.point, r.residual) for r in bad]


def test_criterion_02_first_zeros(acceptance_log):
    expected = {"Tplus": 12.4226, "Tminus": 13.0625, "K00lambda": 13.0672, "ScriptL": 13.1108, "Zeta": 14.1347}
    errs = {}
    for f, t in expected.items():
        recs = scan_zeros(f, 10, 15, ctx=CTX)
        errs[f] = min(abs(r.t - t) for r in recs)
    k00 = find_offaxis_zero("K00", (1.85, 1.92, 13.02, 13.09), CTX).s
    k11 = find_offaxis_zero("K11", (1.22, 1.28, 13.05, 13.12), CTX).s
    errs["K00 off-axis"] = abs(k00 - (1.8847 + 13.0547j))
    errs["K11 off-axis"] = abs(k11 - (1.25182 + 13.0856j))
    arg_u = float(np.angle(complex(u_v(0.5 + 14.1347j, CTX)[0].value)))
    errs["arg U at zeta zero"] = abs(arg_u - (-1.00321))
    worst = max(errs, key=errs.get)
    ok = all(e < 1e-3 for e in errs.values())
    acceptance_log("2 first zeros", ok, f"{len(errs)} values; worst {worst} off by {errs[worst]:.1e}")
    # the L_{-4} row of the same table repeats 13.1108; compared, not asserted
    l4 = min((r.t for r in scan_zeros("L4", 10, 15, ctx=CTX)), key=lambda t: abs(t - 13.1108))
    acceptance_log("2 table L4 row (flag)", None, f"printed 13.1108, nearest L4 zero {l4:.4f}")
    assert ok, errs


def test_criterion_03_first_island(islands_0_100, acceptance_log):
    isl = islands_0_100[0]
    principal, continuous = line_arg_change(isl, CTX)
    ends_ok = abs(isl.t_l - 12.1731) < 5e-4 and abs(isl.t_u - 14.1520) < 5e-4
    change_ok = abs(principal - 4.4305) < 1e-3
    acceptance_log("3 first island", ends_ok and change_ok,
                   f"[{isl.t_l:.5f}, {isl.t_u:.5f}] ok={ends_ok}; line arg change {principal:.5f} "
                   f"(target 4.4305 +- 1e-3; continuous {continuous:.5f})")
    assert ends_ok
    assert change_ok, f"line argument change {principal:.6f}"


def test_criterion_04_first_hundred_stats(islands_0_100, acceptance_log):
    (row,) = island_stats(islands_0_100, [(0.0, 100.0)])
    checks = {
        "count": row.count == 22,
        "fraction": abs(row.fraction - 0.31) <= 0.01,
        "mean": abs(row.mean_len - 1.42) <= 0.01,
        "sd": abs(row.sd_len - 0.98) <= 0.02,
    }
    acceptance_log("4 islands on (0,100)", all(checks.values()),
                   f"count {row.count}, fraction {row.fraction:.4f}, mean {row.mean_len:.4f}, "
                   f"sd {row.sd_len:.4f}; failing: {[k for k, v in checks.items() if not v] or 'none'}")
    assert all(checks.values()), checks


def test_criterion_05_f_equals_minus_one(catalogs_200, acceptance_log):
    worst = {f: max(theorem1_check(r, CTX) for r in recs) for f, recs in catalogs_200.items()}
    ok = all(w < 1e-5 for w in worst.values())
    counts = {f: len(r) for f, r in catalogs_200.items()}
    acceptance_log("5 F = -1 at zeros", ok,
                   f"zeros {counts}; max |F+1| {max(worst.values()):.1e}")
    assert ok, worst


def test_criterion_06_inner_island_audit(islands_0_200_inner, catalogs_200, acceptance_log):
    rep = theorem4_audit(0, 200, CTX, islands=islands_0_200_inner, catalogs=catalogs_200)
    bad = [r for r in rep.rows if not r.passed]
    spacing_ok = all(s.passed for s in rep.spacing)
    cont_ok = all(r.passed_continuous for r in rep.rows)
    acceptance_log("6 inner-island mu audit", rep.passed,
                   f"principal mu: {len(rep.rows) - len(bad)}/{len(rep.rows)} rows; "
                   f"continuous mu: {'all' if cont_ok else 'not all'} rows; spacing ok={spacing_ok}")
    assert spacing_ok
    assert not bad, [(r.island_index, r.m, round(r.t_l, 4), round(r.mu_l, 3), round(r.mu_u, 3)) for r in bad]


def test_criterion_07_bessel_closed_form(acceptance_log):
    rng = np.random.default_rng(7)
    pts = [complex(rng.uniform(-0.5, 1.5), rng.uniform(-20, 20)) for _ in range(10)]
    res = [_rel(macdonald_K(1, 1, s, 1.0, CTX).value, k11_closed(s, CTX)[0].value) for s in pts]
    acceptance_log("7 K(1,1) closed form", max(res) < 1e-8, f"10 points, max rel diff {max(res):.1e}")
    assert max(res) < 1e-8


def test_criterion_08_simplicity(catalogs_200, acceptance_log):
    recs = classify_records(catalogs_200["Zeta"] + catalogs_200["L4"])
    ext = [r for r in recs if r.region == RegionClass.Extended.value]

    def uk(z):
        return uk_vk(z, 1.0, CTX)[0].value

    def u(z):
        return u_v(z, CTX)[0].value

    bad = [r.t for r in ext if not (arg_derivative_t(uk, r.t, CTX) > 0 > arg_derivative_t(u, r.t, CTX))]
    acceptance_log("8 extended zeros simple", not bad and bool(ext),
                   f"{len(ext) - len(bad)}/{len(ext)} extended S0 zeros with opposite derivative signs")
    assert ext and not bad


# --------------------------------------------------------------------------
# medium suite


@pytest.mark.slow
@pytest.mark.parametrize("func, total, inner, fraction", [("Zeta", 649, 173, 0.7344), ("L4", 868, 164, 0.8111)])
def test_criteria_09_10_zero_tables(catalogs_1000, acceptance_log, func, total, inner, fraction):
    (row,) = zero_region_fractions(catalogs_1000[func], [(0.0, 1000.0)])
    ok = row.count == total and abs(row.inner - inner) <= 2 and abs(row.fraction - fraction) <= 0.005
    label = "9 zeta zeros to 1000" if func == "Zeta" else "10 L4 zeros to 1000"
    acceptance_log(label, ok, f"{row.count} zeros, {row.inner} inner, fraction {row.fraction:.4f}")
    assert ok, row


TABLE2_LINE = {
    "K00": [355.8009, 356.1213, 356.8817, 357.9275],
    "Tplus": [355.8967, 356.3824, 357.0303, 357.9406, 358.6393],
    "Tminus": [355.6555, 356.1314, 356.6901, 357.4165, 358.2564],
    "K00lambda": [355.6551, 356.1316, 356.6902, 357.4167, 358.2565],
    "ScriptL": [355.6557, 356.1316, 356.6905, 357.41698, 358.25676],
    "Zeta": [356.0176, 357.1513, 357.9527],
    "L4": [355.7444, 356.6277, 358.2883],
}
TABLE2_OFF_AXIS = [("K00", 1.3164 + 357.6282j), ("K11", 0.64487 + 358.1618j), ("K11", 0.6662 + 357.4409j),
                   ("K11", 0.5957 + 356.7767j), ("K11", 0.5500 + 355.7773j), ("K11", 0.4951 + 356.1250j)]


@pytest.mark.slow
def test_criterion_11_enclave_island(acceptance_log):
    (isl,) = [i for i in find_islands(354, 360, CTX) if i.t_l < 357 < i.t_u]
    ends = max(abs(isl.t_l - 355.4347), abs(isl.t_u - 358.6201))
    (enc,) = isl.enclaves
    enc_err = max(abs(enc[0] - 356.0307), abs(enc[1] - 356.2656))
    (contents,) = enclave_contents(isl, CTX)
    contents_ok = contents == {"K00": 1, "Tminus": 1, "K00lambda": 1, "ScriptL": 1, "Zeta": 0, "L4": 0}
    errs = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for f, ts in TABLE2_LINE.items():
            found = [r.t for r in scan_zeros(f, 355.3, 358.7, ctx=CTX, check_count=False)]
            errs += [min(abs(x - t) for x in found) for t in ts]
    for f, z in TABLE2_OFF_AXIS:
        box = (z.real - 0.03, z.real + 0.03, z.imag - 0.03, z.imag + 0.03)
        errs.append(abs(find_offaxis_zero(f, box, CTX).s - z))
    ok = ends < 2e-3 and enc_err < 2e-3 and contents_ok and max(errs) < 1e-3
    acceptance_log("11 enclave island", ok,
                   f"endpoint err {ends:.1e}, enclave err {enc_err:.1e}, contents ok={contents_ok}, "
                   f"{len(errs)} table zeros, worst {max(errs):.1e}")
    assert ok


@pytest.mark.slow
def test_criterion_12_no_off_line_zeros(catalogs_1000, acceptance_log):
    line = len(catalogs_1000["Zeta"]) + len(catalogs_1000["L4"])
    n = off_line_count("S0", 0.5, 1000.0, line_zeros=line, sigma_max=3.0)
    acceptance_log("12 no off-line S0 zeros", n == 0, f"{n} zeros in 1/2 < sigma <= 3, 0.5 < t <= 1000 "
                   f"({line} on the line)")
    assert n == 0


# --------------------------------------------------------------------------
# stretch report (never gates)

TABLE3 = {(0, 100): (22, 0.31, 1.42, 0.98), (100, 200): (34, 0.38, 1.19, 0.77), (200, 300): (37, 0.52, 1.39, 1.90),
          (300, 400): (45, 0.41, 0.90, 0.71), (400, 500): (49, 0.46, 0.93, 0.91), (0, 500): (187, 0.41, 1.11, 1.13)}


def test_stretch_island_tables_and_histograms(acceptance_log):
    islands = find_islands(0, 500, CTX)
    rows = island_stats(islands, list(TABLE3))
    for row in rows:
        n, frac, mean, sd = TABLE3[tuple(int(x) for x in row.range)]
        acceptance_log(f"stretch table3 {int(row.range[0])}-{int(row.range[1])}", None,
                       f"count {row.count} ({n}), fraction {row.fraction:.3f} ({frac}), "
                       f"mean {row.mean_len:.3f} ({mean}), sd {row.sd_len:.3f} ({sd})")
    lengths = histogram_values(HistogramQuantity.IslandLength, islands)
    starts = histogram_values(HistogramQuantity.ArgStart, islands)
    ends = histogram_values(HistogramQuantity.ArgEnd, islands)
    short = float(np.mean(lengths < 1))
    start_share = float(np.mean((starts > -3) & (starts < -2)))
    end_share = float(np.mean((ends > 2) & (ends < 3)))
    acceptance_log("stretch histograms to 500", None,
                   f"lengths < 1: {short:.1%} (>=55%); start args in (-3,-2): {start_share:.1%} (>50%); "
                   f"end args in (2,3): {end_share:.1%}")
    assert lengths.size == rows[-1].count


def test_stretch_far_island(acceptance_log):
    (isl,) = [i for i in find_islands(8286, 8294, CTX) if i.t_l < 8290 < i.t_u]
    err = max(abs(isl.t_l - 8288.63233), abs(isl.t_u - 8291.79597))
    acceptance_log("stretch island near 8290", None,
                   f"[{isl.t_l:.5f}, {isl.t_u:.5f}], max endpoint error {err:.1e} (bound 5e-3)")
    assert err < 5e-3


@pytest.mark.slow
def test_stretch_flatness_to_1000(catalogs_1000, islands_0_100, acceptance_log):
    recs = [r for r in catalogs_1000["Zeta"] if RegionClass(r.region).in_island]
    vals = histogram_values(HistogramQuantity.ArgUatZero, zeros=recs)
    h = histogram(vals, HistogramSpec.default(HistogramQuantity.ArgUatZero))
    peak = h.counts.max() / (h.total / h.counts.size)
    acceptance_log("stretch arg U flatness 1000", None,
                   f"{h.total} island zeta zeros, largest bin {peak:.2f}x uniform (bound 2x)")


TABLE4 = {0: (173, 649), 1000: (224, 868), 2000: (245, 952), 3000: (284, 1005), 4000: (290, 1046),
          5000: (301, 1078), 6000: (298, 1105), 7000: (314, 1127), 8000: (334, 1148), 9000: (286, 1021)}
TABLE5 = {0: (164, 868), 1000: (260, 1090), 2000: (318, 1172), 3000: (305, 1226), 4000: (335, 1267),
          5000: (374, 1298), 6000: (385, 1326), 7000: (357, 1347), 8000: (103, 406)}
LAST = {"Zeta": 9877.78, "L4": 8297.64}


@pytest.mark.slow
@pytest.mark.skipif(os.environ.get("LATTICE_CRITIC_STRETCH") != "1", reason="set LATTICE_CRITIC_STRETCH=1")
def test_stretch_ten_thousand_zeros(tmp_path_factory, acceptance_log):
    cache = os.environ.get("LATTICE_CRITIC_CACHE") or tmp_path_factory.mktemp("stretch-cache")
    cat = ZeroCatalog(cache)
    recs = {}
    for func, table in (("Zeta", TABLE4), ("L4", TABLE5)):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            recs[func] = classify_records(cat.scan(func, 0.0, LAST[func], 0.01, DCTX))
        ranges = [(float(lo), min(lo + 1000.0, LAST[func])) for lo in table]
        for row in zero_region_fractions(recs[func], ranges):
            inner, total = table[int(row.range[0])]
            acceptance_log(f"stretch {func} {int(row.range[0])}-{row.range[1]:g}", None,
                           f"inner {row.inner} ({inner}), all {row.count} ({total}), "
                           f"within 3: {abs(row.inner - inner) <= 3 and abs(row.count - total) <= 3}")
    zeta = [r for r in recs["Zeta"] if r.t <= LAST["L4"]]
    rep = cluster_stats(zeta, recs["L4"])
    isl, ext = rep.island, rep.extended
    acceptance_log("stretch clusters", None,
                   f"{isl.zeros}/{rep.total} = {rep.island_fraction:.2%} (13014/18171) in {isl.runs} runs (2809); "
                   f"means {isl.mean_per_run:.3f}, {isl.mean_zeta:.3f}, {isl.mean_l4:.3f} (4.633, 2.167, 2.465); "
                   f"ratios {isl.ratio:.4f} (0.8791), {ext.ratio:.4f} (0.6773)")
    for func in ("Zeta", "L4"):
        inside = [r for r in recs[func] if RegionClass(r.region).in_island]
        h = histogram(histogram_values(HistogramQuantity.ArgUatZero, zeros=inside),
                      HistogramSpec.default(HistogramQuantity.ArgUatZero))
        peak = h.counts.max() / (h.total / h.counts.size)
        acceptance_log(f"stretch arg U flatness {func}", None,
                       f"{h.total} island zeros, largest bin {peak:.2f}x uniform")
    assert math.isfinite(rep.island_fraction)
