"""Vectorised double-precision evaluation for scans and grids.

The square-lattice functions share the factor g(s) = Gamma(s) pi^-s:

    Gamma(s) S_0(s) / (8 pi^s) = g * S0/8
    xi_1(2s)                   = g * zeta(2s)
    xi_1(2s - 1)               = g * sqrt(pi) Gamma(s-1/2)/Gamma(s) * zeta(2s-1)

Working with the cofactors keeps every quantity O(1) at large heights, where
g itself underflows double precision.  Ratios (U, U_K, F) are unaffected and
functions that are real on the critical line are recovered by rotating with
the phase of g.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import loggamma

__all__ = [
    "hurwitz_vec",
    "zeta_vec",
    "l4_vec",
    "LineParts",
    "phase_real_vec",
    "arg_derivative_vec",
    "REAL_ON_LINE",
    "FAST_DIFF_STEP",
]

LOG_PI = math.log(math.pi)
SQRT_PI = math.sqrt(math.pi)
# step for the double-precision five-point stencil: small enough to resolve
# poles ~5e-3 from the line, large enough that roundoff stays below 1e-9
FAST_DIFF_STEP = 2e-4

_N_CORR = 26
_CHUNK_ELEMS = 1 << 21


def _bernoulli_ratios(count: int) -> np.ndarray:
    from mpmath import bernoulli, factorial

    return np.array([float(bernoulli(2 * j) / factorial(2 * j)) for j in range(1, count + 1)])


_BERN = _bernoulli_ratios(_N_CORR)


def _em_block(s: np.ndarray, a: float, n: int):
    """Head sum, endpoint and Bernoulli terms of zeta(s, a) with cut-off N = n."""
    logk = np.log(np.arange(n, dtype=float) + a)
    head = np.zeros(s.shape, dtype=complex)
    rows = max(1, _CHUNK_ELEMS // max(n, 1))
    for i in range(0, s.size, rows):
        blk = s[i:i + rows]
        head[i:i + rows] = np.exp(-np.outer(blk, logk)).sum(axis=1)
    X = n + a
    logX = math.log(X)
    Xs = np.exp(-s * logX)
    acc = head + Xs / 2
    poch = s.copy()
    xpow = Xs / X
    for j in range(1, _N_CORR + 1):
        acc += _BERN[j - 1] * poch * xpow
        poch = poch * (s + 2 * j - 1) * (s + 2 * j)
        xpow = xpow / (X * X)
    return acc, X, logX


def _cutoff(s: np.ndarray, a: float) -> int:
    size = float(np.max(np.abs(s))) + 2 * _N_CORR + 2 if s.size else 0.0
    return max(10, int(math.ceil(size / math.pi - a)) + 1)


def _by_height(s: np.ndarray, fn) -> np.ndarray:
    """Apply ``fn`` on groups of similar |s| so the cut-off tracks the height."""
    out = np.empty(s.shape, dtype=complex)
    mag = np.abs(s)
    order = np.argsort(mag, kind="stable")
    bucket = 256
    for i in range(0, s.size, bucket):
        idx = order[i:i + bucket]
        out[idx] = fn(s[idx])
    return out


def hurwitz_vec(s, a: float) -> np.ndarray:
    """zeta(s, a) elementwise, double precision."""
    s = np.atleast_1d(np.asarray(s, dtype=complex))

    def fn(blk):
        n = _cutoff(blk, a)
        acc, X, logX = _em_block(blk, a, n)
        return acc + np.exp((1 - blk) * logX) / (blk - 1)

    return _by_height(s.ravel(), fn).reshape(s.shape)


def zeta_vec(s) -> np.ndarray:
    return hurwitz_vec(s, 1.0)


def _expm1_over(w: np.ndarray, d: float) -> np.ndarray:
    """(exp(w d) - 1) / w, stable as w -> 0."""
    z = w * d
    small = np.abs(z) < 1e-4
    safe_w = np.where(small, 1.0, w)
    big = (np.exp(np.where(small, 0.0, z)) - 1) / safe_w
    ser = d * (1 + z / 2 + z * z / 6)
    return np.where(small, ser, big)


def l4_vec(s) -> np.ndarray:
    """L_{-4}(s) elementwise, double precision."""
    s = np.atleast_1d(np.asarray(s, dtype=complex))

    def fn(blk):
        n = _cutoff(blk, 0.25)
        f1, X1, _ = _em_block(blk, 0.25, n)
        f3, X3, logX3 = _em_block(blk, 0.75, n)
        w = 1 - blk
        pole = -np.exp(w * logX3) * _expm1_over(w, math.log(X1 / X3))
        return np.exp(-blk * math.log(4.0)) * (f1 - f3 + pole)

    return _by_height(s.ravel(), fn).reshape(s.shape)


class LineParts:
    """Cofactors of g(s) for an array of points s.

    Attributes ``sh`` (S_0/8), ``x2`` (xi_1(2s)/g), ``x2m1`` (xi_1(2s-1)/g)
    and ``phase`` (arg g) are computed once; everything else derives from them.
    """

    def __init__(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=complex))
        self.s = s
        self.zeta = zeta_vec(s)
        self.l4 = l4_vec(s)
        self.sh = self.zeta * self.l4 / 2
        self.x2 = zeta_vec(2 * s)
        ratio = np.exp(loggamma(s - 0.5) - loggamma(s))
        self.x2m1 = SQRT_PI * ratio * zeta_vec(2 * s - 1)
        self.phase = np.imag(loggamma(s)) - s.imag * LOG_PI

    # Combinations at lambda = 1, all divided by g(s)
    @property
    def k11(self):
        s = self.s
        return s * self.sh / 2 - (s - 0.5) * self.x2m1 / 4

    @property
    def k11_reflected(self):
        s = self.s
        return (1 - s) * self.sh / 2 + (s - 0.5) * self.x2 / 4

    @property
    def tplus(self):
        return (self.x2 + self.x2m1) / 4

    @property
    def tminus(self):
        return (self.x2 - self.x2m1) / 4

    @property
    def script_l(self):
        s = self.s
        return s * self.x2 + (1 - s) * self.x2m1

    @property
    def k00(self):
        return self.sh - self.tplus

    @property
    def k00_lambda(self):
        return -(self.k11 + self.k11_reflected)

    @property
    def u(self):
        return self.x2m1 / self.x2

    @property
    def uk(self):
        return self.k11 / self.k11_reflected

    @property
    def f(self):
        return self.uk / self.u

    def rotated(self, values):
        return np.exp(1j * self.phase) * values


def _theta_zeta(t):
    return np.imag(loggamma(0.25 + 0.5j * t)) - 0.5 * t * LOG_PI


def _theta_l4(t):
    return np.imag(loggamma(0.75 + 0.5j * t)) + 0.5 * t * math.log(4 / math.pi)


REAL_ON_LINE = ("Zeta", "L4", "S0", "Tplus", "Tminus", "ScriptL", "K00", "K00lambda")


def phase_real_vec(func: str, t) -> np.ndarray:
    """Real rotation of ``func`` on the critical line, elementwise in t."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    s = 0.5 + 1j * t
    if func == "Zeta":
        return np.real(np.exp(1j * _theta_zeta(t)) * zeta_vec(s))
    if func == "L4":
        return np.real(np.exp(1j * _theta_l4(t)) * l4_vec(s))
    if func == "S0":
        rot = _theta_zeta(t) + _theta_l4(t)
        return np.real(4 * np.exp(1j * rot) * zeta_vec(s) * l4_vec(s))
    if func not in REAL_ON_LINE:
        raise ValueError(f"{func} has no real rotation on the critical line")
    p = LineParts(s) if func in ("K00", "K00lambda") else _XiOnly(s)
    if func == "Tplus":
        return np.real(p.rotated(p.tplus))
    if func == "Tminus":
        return np.imag(p.rotated(p.tminus))
    if func == "ScriptL":
        return np.real(p.rotated(p.script_l))
    if func == "K00":
        return np.real(p.rotated(p.k00))
    return np.real(p.rotated(p.k00_lambda))


class _XiOnly(LineParts):
    """LineParts without the S_0 factor, for functions built from xi_1 alone."""

    def __init__(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=complex))
        self.s = s
        self.x2 = zeta_vec(2 * s)
        ratio = np.exp(loggamma(s - 0.5) - loggamma(s))
        self.x2m1 = SQRT_PI * ratio * zeta_vec(2 * s - 1)
        self.phase = np.imag(loggamma(s)) - s.imag * LOG_PI


def arg_derivative_vec(t, names=("uk", "u"), h: float = FAST_DIFF_STEP) -> dict:
    """d/dt arg of LineParts attributes on the critical line (five-point stencil).

    Returns a dict name -> array.  The argument increments come from the
    principal log of ratios of neighbouring stencil values.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    offs = np.array([-2.0, -1.0, 1.0, 2.0]) * h / 2
    pts = (0.5 + 1j * (t[:, None] + offs[None, :])).ravel()
    parts = LineParts(pts)
    out = {}
    for name in names:
        v = getattr(parts, name).reshape(t.size, 4)
        d_h = np.angle(v[:, 3] / v[:, 0]) / (2 * h)
        d_h2 = np.angle(v[:, 2] / v[:, 1]) / h
        out[name] = (4 * d_h2 - d_h) / 3
    return out
