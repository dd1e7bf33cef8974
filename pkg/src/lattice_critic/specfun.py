"""Scalar complex special functions at configurable precision.

Gamma uses reflection plus an upward-shifted Stirling series.  Riemann and
Hurwitz zeta share one Euler-Maclaurin engine, which also evaluates the odd
character sum L_{-4} through its two Hurwitz components with the pole terms
combined analytically, so L_{-4}(1) needs no special casing.
"""

from __future__ import annotations

import math
from functools import lru_cache

from .core import DEFAULT_CTX, EvalContext, SpecialValue, _exp_sinh_sum, mpctx, to_mpc
from .errors import DomainError, PoleError

__all__ = [
    "gamma_c",
    "loggamma_c",
    "zeta_c",
    "hurwitz_zeta",
    "l_minus4",
    "xi1",
    "bessel_k_complex_order",
    "BESSEL_MAX_IMAG_ORDER",
]

BESSEL_MAX_IMAG_ORDER = 40.0


@lru_cache(maxsize=None)
def _bernoulli_table(bits: int, count: int):
    """B_{2j}/(2j)! for j = 1..count."""
    M = mpctx(bits)
    return tuple(M.bernoulli(2 * j) / M.factorial(2 * j) for j in range(1, count + 1))


@lru_cache(maxsize=None)
def _stirling_table(bits: int, count: int):
    """B_{2k}/(2k(2k-1)) for k = 1..count."""
    M = mpctx(bits)
    return tuple(M.bernoulli(2 * k) / (2 * k * (2 * k - 1)) for k in range(1, count + 1))


def _is_nonpositive_integer(z, M) -> bool:
    return M.im(z) == 0 and M.re(z) <= 0 and M.re(z) == M.floor(M.re(z))


def _loggamma(z, M):
    """Principal log Gamma(z) for z not a non-positive integer."""
    prec = M.prec
    radius = prec * math.log(2) / (2 * math.pi) + 4
    shift = M.mpc(0)
    w = z
    while abs(w) < radius or M.re(w) < 0.5:
        shift += M.log(w)
        w = w + 1
    terms = _stirling_table(prec, max(8, prec // 2))
    eps = M.mpf(2) ** (-prec - 4)
    acc = (w - M.mpf(0.5)) * M.log(w) - w + M.log(2 * M.pi) / 2
    winv = 1 / w
    winv2 = winv * winv
    p = winv
    last = None
    for c in terms:
        term = c * p
        if last is not None and abs(term) > abs(last):
            break
        acc += term
        if abs(term) < eps * abs(acc):
            break
        last = term
        p *= winv2
    return acc - shift


def loggamma_c(s, ctx: EvalContext = DEFAULT_CTX) -> SpecialValue:
    M = mpctx(ctx.precision_bits)
    z = to_mpc(s, M)
    if _is_nonpositive_integer(z, M):
        raise PoleError(f"Gamma has a pole at {z}")
    return SpecialValue(_loggamma(z, M), 2.0 ** (-ctx.precision_bits + 8))


def _gamma(z, M):
    if M.re(z) < 0.5:
        return M.pi / (M.sin(M.pi * z) * M.exp(_loggamma(1 - z, M)))
    return M.exp(_loggamma(z, M))


def gamma_c(s, ctx: EvalContext = DEFAULT_CTX) -> SpecialValue:
    """Gamma(s) by reflection into Re s >= 1/2 and a shifted Stirling series."""
    M = mpctx(ctx.precision_bits)
    z = to_mpc(s, M)
    if _is_nonpositive_integer(z, M):
        raise PoleError(f"Gamma has a pole at {z}")
    return SpecialValue(_gamma(z, M), 2.0 ** (-ctx.precision_bits + 8))


def _em_parameters(s, M, a):
    """Cut-off N and correction count for the Euler-Maclaurin tail."""
    bits = M.prec
    n_corr = max(4, bits // 2 + 2)
    # correction ratio |s + 2j| / (2 pi (N + a)) kept below 1/2
    size = abs(s) + 2 * n_corr + 2
    n = max(10, int(math.ceil(size / math.pi - float(a))) + 1)
    return n, n_corr


def _em_parts(s, a, M, n=None, n_corr=None):
    """Euler-Maclaurin pieces of zeta(s, a).

    Returns (finite, X, tail_err) with finite = head sum + endpoint + Bernoulli
    corrections and X = N + a; the pole term X^(1-s)/(s-1) is left to the caller.
    """
    if n is None:
        n, n_corr = _em_parameters(s, M, a)
    a = M.mpf(a)
    head = M.mpc(0)
    for k in range(n):
        head += M.power(k + a, -s)
    X = n + a
    Xs = M.power(X, -s)
    acc = head + Xs / 2
    bern = _bernoulli_table(M.prec, n_corr)
    poch = s  # rising factorial (s)_{2j-1}
    xpow = Xs / X  # X^(-s-2j+1)
    inv_x2 = 1 / (X * X)
    term = M.mpc(0)
    for j, b in enumerate(bern, start=1):
        term = b * poch * xpow
        acc += term
        poch *= (s + 2 * j - 1) * (s + 2 * j)
        xpow *= inv_x2
    return acc, X, abs(term)


def _check_pole_one(z, M, name):
    if z == 1:
        raise PoleError(f"{name} has a pole at s=1")


def hurwitz_zeta(s, a, ctx: EvalContext = DEFAULT_CTX) -> SpecialValue:
    """zeta(s, a) for a in (0, 1] by Euler-Maclaurin, valid for every s != 1."""
    M = mpctx(ctx.precision_bits)
    z = to_mpc(s, M)
    _check_pole_one(z, M, "Hurwitz zeta")
    a = M.mpf(a)
    if not 0 < a <= 1:
        raise DomainError("Hurwitz parameter a must lie in (0, 1]")
    finite, X, tail = _em_parts(z, a, M)
    val = finite + M.power(X, 1 - z) / (z - 1)
    return SpecialValue(val, _rel(tail, val, M))


def zeta_c(s, ctx: EvalContext = DEFAULT_CTX) -> SpecialValue:
    """Riemann zeta(s) (Hurwitz engine at a = 1)."""
    return hurwitz_zeta(s, 1, ctx)


def _rel(err, val, M) -> float:
    mag = abs(val)
    if mag == 0:
        return 0.0 if err == 0 else math.inf
    return float(err / mag)


def _l4(z, M):
    quarter, three = M.mpf(1) / 4, M.mpf(3) / 4
    n, n_corr = _em_parameters(z, M, quarter)
    f1, X1, e1 = _em_parts(z, quarter, M, n, n_corr)
    f3, X3, e3 = _em_parts(z, three, M, n, n_corr)
    # [X1^w - X3^w] / (-w), w = 1 - s, evaluated without the removable pole
    w = 1 - z
    d = M.log(X1 / X3)
    if w == 0:
        pole = -d
    else:
        pole = -M.power(X3, w) * M.expm1(w * d) / w
    val = M.power(4, -z) * (f1 - f3 + pole)
    return val, abs(M.power(4, -z)) * (e1 + e3)


def l_minus4(s, ctx: EvalContext = DEFAULT_CTX) -> SpecialValue:
    """Dirichlet L-function of the character mod 4: 4^-s (zeta(s,1/4) - zeta(s,3/4))."""
    M = mpctx(ctx.precision_bits)
    z = to_mpc(s, M)
    val, err = _l4(z, M)
    return SpecialValue(val, _rel(err, val, M))


def _xi1(z, M):
    if z == 0 or z == 1:
        raise PoleError("xi_1 has poles at 0 and 1")
    finite, X, tail = _em_parts(z, 1, M)
    zeta = finite + M.power(X, 1 - z) / (z - 1)
    half = z / 2
    if _is_nonpositive_integer(half, M):
        # Gamma pole meets a trivial zero of zeta; use the reflected value
        return _xi1(1 - z, M)
    return M.power(M.pi, -half) * _gamma(half, M) * zeta


def xi1(z, ctx: EvalContext = DEFAULT_CTX) -> SpecialValue:
    """Symmetrised zeta pi^(-z/2) Gamma(z/2) zeta(z)."""
    M = mpctx(ctx.precision_bits)
    w = to_mpc(z, M)
    return SpecialValue(_xi1(w, M), ctx.rel_tol / 10)


def _bessel_bits(nu, ctx: EvalContext) -> int:
    # cosh(nu u) oscillates at |Im nu|; the integral is smaller than the
    # integrand by about exp(-pi |Im nu| / 2)
    lost = math.pi * abs(float(nu.imag)) / 2 / math.log(2)
    return ctx.precision_bits + int(math.ceil(lost)) + 16


def _check_bessel(nu, xs):
    if abs(complex(nu).imag) > BESSEL_MAX_IMAG_ORDER:
        raise DomainError(f"|Im nu| = {abs(complex(nu).imag):g} exceeds {BESSEL_MAX_IMAG_ORDER:g}")
    if any(float(x) <= 0 for x in xs):
        raise DomainError("Bessel K argument must be positive")


def bessel_k_batch(nu, xs, ctx: EvalContext = DEFAULT_CTX):
    """K_nu(x) for several x sharing one set of quadrature nodes.

    Returns a list of SpecialValue in the caller's precision context.
    """
    nu = complex(nu) if not hasattr(nu, "imag") else nu
    _check_bessel(nu, xs)
    inner = ctx.with_extra_bits(_bessel_bits(nu, ctx) - ctx.precision_bits)
    W = mpctx(inner.precision_bits)
    wnu = to_mpc(nu, W)
    wx = [W.mpf(x) for x in xs]

    def g(u):
        c = W.cosh(u)
        ch = W.cosh(wnu * u)
        return [W.exp(-x * c) * ch for x in wx]

    vals, errs, _ = _exp_sinh_sum(g, len(wx), inner)
    M = mpctx(ctx.precision_bits)
    return [SpecialValue(M.mpc(v), e) for v, e in zip(vals, errs)]


def bessel_k_complex_order(nu, x, ctx: EvalContext = DEFAULT_CTX) -> SpecialValue:
    """Modified Bessel K_nu(x) = int_0^inf exp(-x cosh u) cosh(nu u) du."""
    M = mpctx(ctx.precision_bits)
    z = to_mpc(nu, M)
    return bessel_k_batch(z, [M.mpf(x)], ctx)[0]
