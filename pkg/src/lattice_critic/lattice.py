"""Rectangular lattice sum S_0(s; lambda) and the MacDonald double sums.

Conventions used throughout:

* ``S_0(s; lam) = sum' (p1^2 + lam^2 p2^2)^(-s)`` over integer pairs other than (0, 0).
* ``K(n, m; s; lam) = pi^n sum_{p1, p2 >= 1} p2^(s-1/2+n) p1^-(s-1/2-n) K_{s-1/2+m}(2 pi p1 p2 lam)``.
* ``A(s) = Gamma(s) S_0(s; 1) / (8 pi^s)``, so that at the square lattice

      K(1,1; s)   = s A / 2 - (s - 1/2) xi_1(2s-1) / 4
      K(1,1; 1-s) = (1-s) A / 2 + (s - 1/2) xi_1(2s) / 4
      K(0,0; s)   = A - T_+(s)

  which is what every classifier-facing quantity (U_K, V_K, F) uses at lambda = 1.

The Bessel double sums are only needed away from lambda = 1 and for
cross-checks; they are accurate while |Im(order)| stays moderate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import DEFAULT_CTX, EvalContext, SpecialValue, mpctx, to_mpc
from .errors import BranchError, DomainError, NoConvergence, PoleError, PoleSentinel
from .specfun import (
    BESSEL_MAX_IMAG_ORDER,
    _em_parts,
    _gamma,
    _is_nonpositive_integer,
    _l4,
    _xi1,
    bessel_k_batch,
)

__all__ = [
    "LatticeParams",
    "SumIndexCutoff",
    "s0_direct",
    "s0",
    "s0_tilde",
    "macdonald_K",
    "macdonald_lambda_derivative",
    "macdonald_raise",
    "t_plus_minus",
    "script_L",
    "u_v",
    "k11_closed",
    "k00_closed",
    "k00_lambda_closed",
    "uk_vk",
    "vk_from_k00",
    "f_g",
    "s0_reconstruct",
]


@dataclass(frozen=True)
class LatticeParams:
    """Period ratio of the rectangular lattice."""

    lam: float = 1.0

    def __post_init__(self):
        if not float(self.lam) > 0:
            raise DomainError("lambda must be positive")


@dataclass(frozen=True)
class SumIndexCutoff:
    """Truncation bookkeeping for a lattice or MacDonald sum."""

    max_p1p2: int
    tail_bound: float


def _lam(lam) -> float:
    if isinstance(lam, LatticeParams):
        return float(lam.lam)
    value = float(lam)
    if not value > 0:
        raise DomainError("lambda must be positive")
    return value


def _tiny(M):
    return M.mpf(2) ** (-M.prec + 12)


# --------------------------------------------------------------------------
# removable singularities: Cauchy integral on a small circle


_NEAR = 1e-6
_CIRCLE_RADIUS = 1e-2
_CIRCLE_NODES = 24


def _near(z, points, M):
    for p in points:
        if abs(z - p) < _NEAR:
            return p
    return None


def _cauchy(fn, z, centre, M):
    """f(z) from values on a circle around ``centre`` (trapezoid rule)."""
    r = M.mpf(_CIRCLE_RADIUS)
    acc = M.mpc(0)
    for k in range(_CIRCLE_NODES):
        w = centre + r * M.expjpi(M.mpf(2 * k) / _CIRCLE_NODES)
        acc += fn(w) * (w - centre) / (w - z)
    return acc / _CIRCLE_NODES


def _regular(fn, z, points, M):
    """Evaluate ``fn`` at z, bypassing removable singularities in ``points``."""
    p = _near(z, points, M)
    if p is None:
        return fn(z)
    return _cauchy(fn, z, M.mpc(p), M)


# --------------------------------------------------------------------------
# square-lattice building blocks


def _zeta(z, M):
    if z == 1:
        raise PoleError("zeta has a pole at s=1")
    finite, X, _ = _em_parts(z, 1, M)
    return finite + M.power(X, 1 - z) / (z - 1)


def _s0_square(z, M):
    """S_0(s; 1) = 4 zeta(s) L_{-4}(s)."""
    return 4 * _zeta(z, M) * _l4(z, M)[0]


def _rgamma(z, M):
    if _is_nonpositive_integer(z, M):
        return M.mpc(0)
    return 1 / _gamma(z, M)


def _a_tilde(z, M):
    """A(s) = Gamma(s) S_0(s;1) / (8 pi^s); finite at s = 0."""
    if _is_nonpositive_integer(z, M):
        # Gamma pole against the trivial zeros of S_0; S_0(0) = -1 gives A(0) limit via circle
        return _cauchy(lambda w: _a_tilde(w, M), z, z, M)
    return _gamma(z, M) * M.power(M.pi, -z) * _s0_square(z, M) / 8


def _xi_pair(z, M):
    return _xi1(2 * z, M), _xi1(2 * z - 1, M)


def _k11_pair_raw(z, M):
    a = _a_tilde(z, M)
    x2, x1 = _xi_pair(z, M)
    half = M.mpf(1) / 2
    k11 = z * a / 2 - (z - half) * x1 / 4
    k11r = (1 - z) * a / 2 + (z - half) * x2 / 4
    return k11, k11r


_K11_SINGULAR = (0, 0.5, 1)


def _k11_pair(z, M):
    p = _near(z, _K11_SINGULAR, M)
    if p is None:
        return _k11_pair_raw(z, M)
    c = M.mpc(p)
    return (_cauchy(lambda w: _k11_pair_raw(w, M)[0], z, c, M),
            _cauchy(lambda w: _k11_pair_raw(w, M)[1], z, c, M))


def _sv(value, ctx: EvalContext, cutoff=None) -> SpecialValue:
    return SpecialValue(value, ctx.rel_tol / 10, cutoff)


# --------------------------------------------------------------------------
# direct lattice sum (oracle)


def _erfc_weight(r, R, delta, M):
    return M.erfc((r - R) / delta) / 2


def s0_direct(s, lam=1.0, ctx: EvalContext = DEFAULT_CTX) -> SpecialValue:
    """Brute-force S_0(s; lam) for Re s > 1.05.

    The lattice is summed exactly inside the radius R/2 of the (p1, lam p2)
    metric and with a smooth erfc weight beyond it; the complementary smooth
    remainder is replaced by its radial integral.  Because the remainder is
    smooth on the scale of the reciprocal lattice, the integral replaces the
    sum with an error far below ``ctx.rel_tol``.
    """
    lam_f = _lam(lam)
    M = mpctx(ctx.precision_bits + 16)
    z = to_mpc(s, M)
    if M.re(z) <= 1.05:
        raise DomainError("direct lattice sum needs Re s > 1.05")
    lam_m = M.mpf(lam_f)
    k_min = min(1.0, 1.0 / lam_f)
    delta = 3.0 / k_min
    t = abs(float(M.im(z)))
    R = max(12 * delta, 5 * delta + 3 * t / (math.pi * k_min))
    r_max = R + 7 * delta
    R_m, delta_m, half_R = M.mpf(R), M.mpf(delta), M.mpf(R) / 2
    p1_max = int(math.floor(r_max))
    p2_max = int(math.floor(r_max / lam_f))
    total = M.mpc(0)
    count = 0
    for p1 in range(0, p1_max + 1):
        for p2 in range(0, p2_max + 1):
            if p1 == 0 and p2 == 0:
                continue
            r2 = M.mpf(p1) ** 2 + (lam_m * p2) ** 2
            r = M.sqrt(r2)
            if r > r_max:
                continue
            mult = (2 if p1 else 1) * (2 if p2 else 1)
            term = M.power(r2, -z)
            if r > half_R:
                term *= _erfc_weight(r, R_m, delta_m, M)
            total += mult * term
            count += mult
    # smooth remainder sum -> (1/lam) * integral over the plane, in polar form
    w_exp = 1 - 2 * z

    def integrand(r):
        return M.power(r, w_exp) * (1 - _erfc_weight(r, R_m, delta_m, M))

    r_cap = M.mpf(r_max)
    nodes = [half_R, R_m - 3 * delta_m, R_m, R_m + 3 * delta_m, r_cap]
    inner = M.quad(integrand, nodes)
    outer = M.power(r_cap, 2 - 2 * z) / (2 * z - 2)
    tail = 2 * M.pi / lam_m * (inner + outer)
    value = total + tail
    Mo = mpctx(ctx.precision_bits)
    # leading alias of the smoothed remainder: chirp frequency <= k_min/3 in the transition
    alias = math.exp(-(math.pi * delta * k_min * 2 / 3) ** 2)
    cutoff = SumIndexCutoff(max_p1p2=count, tail_bound=alias)
    return SpecialValue(Mo.mpc(value), ctx.rel_tol / 10, cutoff)


# --------------------------------------------------------------------------
# MacDonald double sums


def _check_mac(n, m, z, lam, M):
    if n not in (0, 1, 2) or m not in (-2, -1, 0, 1, 2):
        raise DomainError("MacDonald sums are supported for n in {0,1,2}, |m| <= 2")
    if lam < 0.5:
        raise DomainError("MacDonald sums are supported for lambda >= 0.5")
    if abs(float(M.im(z))) > BESSEL_MAX_IMAG_ORDER:
        raise DomainError(f"|Im(s - 1/2 + m)| exceeds {BESSEL_MAX_IMAG_ORDER:g}")


def _divisor_coefficients(n_max, a, b, M):
    """c(N) = sum_{p1 p2 = N} p2^a p1^(-b) for N = 1..n_max."""
    logs = [M.mpf(0)] + [M.log(k) for k in range(1, n_max + 1)]
    coef = [M.mpc(0)] * (n_max + 1)
    pairs = 0
    for p1 in range(1, n_max + 1):
        for p2 in range(1, n_max // p1 + 1):
            coef[p1 * p2] += M.exp(a * logs[p2] - b * logs[p1])
            pairs += 1
    return coef, pairs


def _initial_cutoff(z, lam, ctx):
    t = abs(float(z.imag))
    return int(math.ceil((math.log(1 / ctx.rel_tol) + math.pi * t / 2 + 10) / (2 * math.pi * lam))) + 2


def _mac_sum(n, m, z, lam, ctx: EvalContext, n_max=None):
    """Value and cutoff of K(n, m; s; lam) at working precision.

    Terms are grouped by N = p1 p2, so one Bessel value serves every divisor
    pair.  The cut-off grows by half until the last group is negligible.
    """
    M = mpctx(ctx.precision_bits)
    half = M.mpf(1) / 2
    nu = z - half + m
    a = z - half + n
    b = z - half - n
    lam_m = M.mpf(lam)
    fixed = n_max is not None
    if n_max is None:
        n_max = _initial_cutoff(z, lam, ctx)
    bessel: dict[int, object] = {}
    ratio = math.exp(-2 * math.pi * lam)
    pi_n = M.power(M.pi, n)
    while True:
        coef, pairs = _divisor_coefficients(n_max, a, b, M)
        if pairs > ctx.sum_term_cap:
            raise NoConvergence(f"MacDonald sum needs more than {ctx.sum_term_cap} terms")
        missing = [k for k in range(1, n_max + 1) if k not in bessel]
        if missing:
            xs = [2 * M.pi * k * lam_m for k in missing]
            for k, v in zip(missing, bessel_k_batch(nu, xs, ctx)):
                bessel[k] = v.value
        total = M.mpc(0)
        for k in range(1, n_max + 1):
            total += coef[k] * bessel[k]
        total *= pi_n
        last = abs(coef[n_max] * bessel[n_max]) * pi_n
        tail = float(last / abs(total)) * ratio / (1 - ratio) if total != 0 else math.inf
        if fixed or tail <= ctx.rel_tol / 100:
            return total, SumIndexCutoff(max_p1p2=n_max, tail_bound=tail)
        n_max = int(n_max * 1.5) + 1


def macdonald_K(n: int, m: int, s, lam=1.0, ctx: EvalContext = DEFAULT_CTX) -> SpecialValue:
    """MacDonald double sum K(n, m; s; lam) with its truncation metadata."""
    lam_f = _lam(lam)
    M = mpctx(ctx.precision_bits)
    z = to_mpc(s, M)
    _check_mac(n, m, z, lam_f, M)
    value, cutoff = _mac_sum(n, m, z, lam_f, ctx)
    return _sv(value, ctx, cutoff)


def _lambda_derivative(n, m, z, lam, ctx):
    M = mpctx(ctx.precision_bits)
    h = ctx.diff_step * lam
    n_max = _initial_cutoff(z, lam - h, ctx) + 4
    # a common cut-off on both sides keeps the difference smooth in lambda
    up, _ = _mac_sum(n, m, z, lam + h, ctx, n_max)
    dn, _ = _mac_sum(n, m, z, lam - h, ctx, n_max)
    return (up - dn) / (2 * M.mpf(h))


def macdonald_lambda_derivative(n: int, m: int, s, lam=1.0, ctx: EvalContext = DEFAULT_CTX) -> SpecialValue:
    """d/dlambda K(n, m; s; lam) by a central difference with step diff_step * lam."""
    lam_f = _lam(lam)
    M = mpctx(ctx.precision_bits)
    z = to_mpc(s, M)
    _check_mac(n, m, z, lam_f * (1 - ctx.diff_step), M)
    return _sv(_lambda_derivative(n, m, z, lam_f, ctx), ctx)


def macdonald_raise(n: int, m: int, s, lam=1.0, ctx: EvalContext = DEFAULT_CTX,
                    direction: str = "raise") -> SpecialValue:
    """K(n+1, m+1) (``raise``) or K(n+1, m-1) (``lower``) from K(n, m).

    Uses -1/2 [d/dlambda -/+ (m + s - 1/2)/lambda] K(n, m; s; lambda).
    """
    if direction not in ("raise", "lower"):
        raise ValueError("direction must be 'raise' or 'lower'")
    lam_f = _lam(lam)
    M = mpctx(ctx.precision_bits)
    z = to_mpc(s, M)
    _check_mac(n, m, z, lam_f * (1 - ctx.diff_step), M)
    base, _ = _mac_sum(n, m, z, lam_f, ctx)
    deriv = _lambda_derivative(n, m, z, lam_f, ctx)
    shift = (m + z - M.mpf(1) / 2) / M.mpf(lam_f)
    if direction == "raise":
        value = -(deriv - shift * base) / 2
    else:
        value = -(deriv + shift * base) / 2
    return _sv(value, ctx)


# --------------------------------------------------------------------------
# S_0 and its continuation


def _s0_kober_small(z, lam_m, ctx, M):
    """S_0(s; lam) for lam <= 1 from the MacDonald sum at 1/lam >= 1."""
    half = M.mpf(1) / 2
    k00, _ = _mac_sum(0, 0, z, float(1 / lam_m), ctx)

    def bracket(w):
        x2, x1 = _xi_pair(w, M)
        return x2 / (4 * M.power(lam_m, w - half)) + M.power(lam_m, w - half) * x1 / 4

    xi_part = _regular(bracket, z, (0.5,), M)
    pref = 8 * M.power(M.pi, z) * _rgamma(z, M) * M.power(lam_m, -z - half)
    return pref * (xi_part + k00)


def s0(s, lam=1.0, ctx: EvalContext = DEFAULT_CTX) -> SpecialValue:
    """Analytic continuation of S_0(s; lam).

    At lam = 1 this is 4 zeta(s) L_{-4}(s).  Otherwise the Kober
    representation is used with the MacDonald sum at the larger of lam and
    1/lam, together with S_0(s; lam) = lam^(-2s) S_0(s; 1/lam).
    """
    lam_f = _lam(lam)
    M = mpctx(ctx.precision_bits)
    z = to_mpc(s, M)
    if z == 1:
        raise PoleError("S_0 has a pole at s=1")
    if lam_f == 1.0:
        return _sv(_s0_square(z, M), ctx)
    if min(lam_f, 1 / lam_f) < 0.5:
        raise DomainError("S_0 continuation is supported for lambda in [0.5, 2]")
    if lam_f < 1:
        value = _s0_kober_small(z, M.mpf(lam_f), ctx, M)
    else:
        inv = 1 / M.mpf(lam_f)
        value = M.power(M.mpf(lam_f), -2 * z) * _s0_kober_small(z, inv, ctx, M)
    return _sv(value, ctx)


def s0_tilde(s, ctx: EvalContext = DEFAULT_CTX) -> SpecialValue:
    """A(s) = Gamma(s) S_0(s; 1) / (8 pi^s) by the direct (zeta L_{-4}) path."""
    M = mpctx(ctx.precision_bits)
    z = to_mpc(s, M)
    if z == 1:
        raise PoleError("S_0 has a pole at s=1")
    return _sv(_a_tilde(z, M), ctx)


# --------------------------------------------------------------------------
# xi_1 combinations


def t_plus_minus(s, lam=1.0, ctx: EvalContext = DEFAULT_CTX) -> tuple[SpecialValue, SpecialValue]:
    """(T_+, T_-) = 1/4 [xi_1(2s) lam^-s +/- xi_1(2s-1) lam^(s-1)]."""
    lam_f = _lam(lam)
    M = mpctx(ctx.precision_bits)
    z = to_mpc(s, M)
    lam_m = M.mpf(lam_f)
    x2, x1 = _xi_pair(z, M)
    a = x2 * M.power(lam_m, -z) / 4
    b = x1 * M.power(lam_m, z - 1) / 4
    return _sv(a + b, ctx), _sv(a - b, ctx)


def _script_l_raw(z, M):
    x2, x1 = _xi_pair(z, M)
    return z * x2 + (1 - z) * x1


def script_L(s, ctx: EvalContext = DEFAULT_CTX) -> SpecialValue:
    """s xi_1(2s) + (1-s) xi_1(2s-1), continuous through s = 0, 1/2, 1."""
    M = mpctx(ctx.precision_bits)
    z = to_mpc(s, M)
    return _sv(_regular(lambda w: _script_l_raw(w, M), z, (0, 0.5, 1), M), ctx)


def _u_raw(z, M):
    x2, x1 = _xi_pair(z, M)
    if x2 == 0 or abs(x2) <= _tiny(M) * abs(x1):
        raise PoleSentinel("xi_1(2s) vanishes: U has a pole")
    return x1 / x2


def u_v(s, ctx: EvalContext = DEFAULT_CTX) -> tuple[SpecialValue, SpecialValue]:
    """U = xi_1(2s-1)/xi_1(2s) and V = (1+U)/(1-U)."""
    M = mpctx(ctx.precision_bits)
    z = to_mpc(s, M)
    u = _regular(lambda w: _u_raw(w, M), z, (0.5,), M)
    if abs(1 - u) <= _tiny(M):
        raise PoleSentinel("U = 1: V has a pole")
    return _sv(u, ctx), _sv((1 + u) / (1 - u), ctx)


def k11_closed(s, ctx: EvalContext = DEFAULT_CTX) -> tuple[SpecialValue, SpecialValue]:
    """(K(1,1; s), K(1,1; 1-s)) at lambda = 1 from zeta, L_{-4}, Gamma and xi_1."""
    M = mpctx(ctx.precision_bits)
    z = to_mpc(s, M)
    k11, k11r = _k11_pair(z, M)
    return _sv(k11, ctx), _sv(k11r, ctx)


def k00_closed(s, ctx: EvalContext = DEFAULT_CTX) -> SpecialValue:
    """K(0,0; s; 1) = A(s) - T_+(s)."""
    M = mpctx(ctx.precision_bits)
    z = to_mpc(s, M)

    def raw(w):
        x2, x1 = _xi_pair(w, M)
        return _a_tilde(w, M) - (x2 + x1) / 4

    return _sv(_regular(raw, z, _K11_SINGULAR, M), ctx)


def k00_lambda_closed(s, ctx: EvalContext = DEFAULT_CTX) -> SpecialValue:
    """K_lambda(0,0; s; 1) = -[K(1,1; s) + K(1,1; 1-s)]."""
    M = mpctx(ctx.precision_bits)
    z = to_mpc(s, M)
    k11, k11r = _k11_pair(z, M)
    return _sv(-(k11 + k11r), ctx)


def _ratio_pair(k11, k11r, M):
    scale = abs(k11) + abs(k11r)
    if abs(k11r) <= _tiny(M) * scale:
        raise PoleSentinel("K(1,1; 1-s) vanishes: U_K has a pole")
    uk = k11 / k11r
    den = k11 + k11r
    if abs(den) <= _tiny(M) * scale:
        raise PoleSentinel("K(1,1; s) + K(1,1; 1-s) vanishes: V_K has a pole")
    return uk, (k11 - k11r) / den


def uk_vk(s, lam=1.0, ctx: EvalContext = DEFAULT_CTX) -> tuple[SpecialValue, SpecialValue]:
    """U_K = K(1,1;s)/K(1,1;1-s) and V_K = (K(1,1;s) - K(1,1;1-s))/(sum).

    The square lattice uses the closed form; other lambda use the MacDonald
    sums, with K(1,1; 1-s; lam) = K(1,-1; s; lam).
    """
    lam_f = _lam(lam)
    M = mpctx(ctx.precision_bits)
    z = to_mpc(s, M)
    if lam_f == 1.0:
        k11, k11r = _k11_pair(z, M)
    else:
        _check_mac(1, 1, z, lam_f, M)
        k11, _ = _mac_sum(1, 1, z, lam_f, ctx)
        k11r, _ = _mac_sum(1, -1, z, lam_f, ctx)
    uk, vk = _ratio_pair(k11, k11r, M)
    return _sv(uk, ctx), _sv(vk, ctx)


def vk_from_k00(s, lam=1.0, ctx: EvalContext = DEFAULT_CTX) -> SpecialValue:
    """V_K = -(s - 1/2) K(0,0) / (lam K_lambda(0,0)) from the MacDonald sums."""
    lam_f = _lam(lam)
    M = mpctx(ctx.precision_bits)
    z = to_mpc(s, M)
    _check_mac(0, 0, z, lam_f * (1 - ctx.diff_step), M)
    k00, _ = _mac_sum(0, 0, z, lam_f, ctx)
    k00l = _lambda_derivative(0, 0, z, lam_f, ctx)
    if abs(k00l) <= _tiny(M) * abs(k00):
        raise PoleSentinel("K_lambda(0,0) vanishes: V_K has a pole")
    return _sv(-(z - M.mpf(1) / 2) * k00 / (M.mpf(lam_f) * k00l), ctx)


def f_g(s, ctx: EvalContext = DEFAULT_CTX) -> tuple[SpecialValue, SpecialValue]:
    """F = U_K / U and G = (F - 1)/(F + 1) at lambda = 1."""
    M = mpctx(ctx.precision_bits)
    z = to_mpc(s, M)
    k11, k11r = _k11_pair(z, M)
    uk, _ = _ratio_pair(k11, k11r, M)
    u = _regular(lambda w: _u_raw(w, M), z, (0.5,), M)
    if abs(u) <= _tiny(M):
        raise PoleSentinel("U vanishes (zero of zeta(2s-1)): F has a pole")
    f = uk / u
    if abs(f + 1) <= _tiny(M):
        raise PoleSentinel("F = -1: G has a pole")
    return _sv(f, ctx), _sv((f - 1) / (f + 1), ctx)


def _reconstruct_parts(z, M):
    k11, k11r = _k11_pair(z, M)
    _, vk = _ratio_pair(k11, k11r, M)
    x2, x1 = _xi_pair(z, M)
    tp, tm = (x2 + x1) / 4, (x2 - x1) / 4
    return vk, tp, tm, _script_l_raw(z, M)


def s0_reconstruct(s, ctx: EvalContext = DEFAULT_CTX) -> SpecialValue:
    """A(s) = Gamma(s) S_0(s)/(8 pi^s) rebuilt from V_K, T_+, T_- and the script-L function.

    The default form is

        A = 2 (2s-1) T_-^2 (V_K + V) / (L - 2 T_- (V_K + V)),   V = T_+/T_-,

    which degenerates where T_- vanishes; there the form
    A = (V_K T_- + T_+) / (1 - V_K/(2s-1)) is used instead.
    """
    M = mpctx(ctx.precision_bits)
    z = to_mpc(s, M)
    vk, tp, tm, ell = _reconstruct_parts(z, M)
    two_s = 2 * z - 1
    scale = abs(tp) + abs(tm)
    tiny = M.mpf(10) ** (-8)
    if abs(tm) > tiny * scale:
        v_sum = vk + tp / tm
        den = ell - 2 * tm * v_sum
        if abs(den) > _tiny(M) * (abs(ell) + abs(2 * tm * v_sum)):
            return _sv(2 * two_s * tm * tm * v_sum / den, ctx)
    den17 = 1 - vk / two_s
    if abs(den17) <= _tiny(M) * (1 + abs(vk / two_s)):
        raise BranchError(f"both reconstruction denominators vanish at s={complex(z)}")
    return _sv((vk * tm + tp) / den17, ctx)
