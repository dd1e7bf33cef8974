"""Precision contexts, argument derivatives, phase unwrapping and DE quadrature.

Every evaluator in the package takes an :class:`EvalContext`.  Scalar work is
carried out in an mpmath context private to the calling thread and sized to
``ctx.precision_bits``, so concurrent callers never share mutable precision
state.
"""

from __future__ import annotations

import hashlib
import math
import re
import threading
from dataclasses import asdict, dataclass
from typing import Any, Callable, Sequence

import numpy as np
from mpmath.ctx_mp import MPContext

from .errors import NoConvergence, PoleOrZeroTooClose

__all__ = [
    "EvalContext",
    "SpecialValue",
    "mpctx",
    "to_mpc",
    "parse_complex",
    "format_complex",
    "arg_derivative_t",
    "unwrap_phase",
    "de_quadrature",
]


@dataclass(frozen=True)
class EvalContext:
    precision_bits: int = 128
    rel_tol: float = 1e-12
    diff_step: float = 1e-5
    quad_levels: int = 10
    sum_term_cap: int = 10**6

    def __post_init__(self):
        if int(self.precision_bits) < 53:
            raise ValueError("precision_bits must be >= 53")
        if not 0.0 < self.rel_tol < 1.0:
            raise ValueError("rel_tol must lie in (0, 1)")
        if not 0.0 < self.diff_step < 1.0:
            raise ValueError("diff_step must lie in (0, 1)")
        if self.quad_levels < 1 or self.sum_term_cap < 1:
            raise ValueError("quad_levels and sum_term_cap must be positive")

    @property
    def is_double(self) -> bool:
        return self.precision_bits == 53

    def with_extra_bits(self, bits: int) -> "EvalContext":
        return EvalContext(self.precision_bits + int(bits), self.rel_tol,
                           self.diff_step, self.quad_levels, self.sum_term_cap)

    def key(self) -> str:
        """Short stable hash used to key caches and catalogs."""
        text = ",".join(f"{k}={v!r}" for k, v in sorted(asdict(self).items()))
        return hashlib.sha256(text.encode()).hexdigest()[:12]


DEFAULT_CTX = EvalContext()


@dataclass(frozen=True)
class SpecialValue:
    """A function value together with its estimated relative error."""

    value: Any
    err_estimate: float = 0.0
    cutoff: Any = None  # truncation metadata for lattice and MacDonald sums

    @property
    def complex(self) -> complex:
        return complex(self.value)

    def __abs__(self):
        return abs(self.value)


_local = threading.local()


def mpctx(bits: int) -> MPContext:
    """Thread-local mpmath context at the given working precision."""
    cache = getattr(_local, "contexts", None)
    if cache is None:
        cache = _local.contexts = {}
    M = cache.get(bits)
    if M is None:
        M = MPContext()
        M.prec = int(bits)
        cache[bits] = M
    return M


_COMPLEX_RE = re.compile(
    r"^\s*(?P<re>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?"
    r"\s*(?:(?P<sign>[+-])\s*(?P<im>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?\s*[ij])?\s*$"
)


def parse_complex(text: str) -> tuple[str, str]:
    """Split an ``a+bi`` literal into decimal strings for the real and imaginary parts."""
    text = text.strip().replace(" ", "")
    if not text:
        raise ValueError("empty complex literal")
    # pure imaginary forms: "3i", "-2.5j", "i"
    m = re.fullmatch(r"([+-]?)((?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?[ij]", text)
    if m:
        return "0", (m.group(1) or "") + (m.group(2) or "1")
    m = _COMPLEX_RE.match(text)
    if not m or (m.group("re") is None and m.group("sign") is None):
        raise ValueError(f"cannot parse complex literal {text!r}")
    re_part = m.group("re") or "0"
    if m.group("sign") is None:
        return re_part, "0"
    return re_part, m.group("sign") + (m.group("im") or "1")


def to_mpc(s, M: MPContext):
    """Convert ``s`` (number, mp number or ``a+bi`` string) into ``M.mpc``."""
    if isinstance(s, str):
        a, b = parse_complex(s)
        return M.mpc(M.mpf(a), M.mpf(b))
    if hasattr(s, "real") and hasattr(s, "imag"):
        return M.mpc(M.mpf(s.real), M.mpf(s.imag))
    return M.mpc(s)


def format_complex(z, digits: int = 15) -> str:
    z = complex(z)
    sign = "+" if z.imag >= 0 or math.isnan(z.imag) else "-"
    return f"{z.real:.{digits}g}{sign}{abs(z.imag):.{digits}g}i"


def arg_derivative_t(f: Callable, t, ctx: EvalContext = DEFAULT_CTX, scale: float | None = None) -> float:
    """d/dt arg f(1/2 + it) by central differences with one Richardson step.

    The increment of the argument between stencil points is taken from the
    principal logarithm of the ratio ``f(t+h)/f(t-h)``, so no global phase
    bookkeeping is needed as long as the stencil is small.
    """
    M = mpctx(ctx.precision_bits)
    h = M.mpf(ctx.diff_step)
    t = M.mpf(t)
    half = M.mpf(1) / 2
    vals = {}
    for k in (-2, -1, 1, 2):
        vals[k] = f(M.mpc(half, t + k * h / 2))
    mags = [abs(v) for v in vals.values()]
    ref = max(mags) if scale is None else scale
    if ref == 0 or min(mags) < 10 * ctx.rel_tol * ref:
        raise PoleOrZeroTooClose(f"|f| nearly vanishes near t={float(t)!r}")
    if max(mags) == M.inf:
        raise PoleOrZeroTooClose(f"f is infinite near t={float(t)!r}")

    def ratio(a, b):
        return M.im(M.log(to_mpc(a, M) / to_mpc(b, M)))

    d_h = ratio(vals[2], vals[-2]) / (2 * h)
    d_h2 = ratio(vals[1], vals[-1]) / h
    return float((4 * d_h2 - d_h) / 3)


def unwrap_phase(samples: Sequence[float]) -> list[float]:
    """Continuous angle sequence from principal-branch samples."""
    if len(samples) == 0:
        return []
    return [float(x) for x in np.unwrap(np.asarray(samples, dtype=float))]


def _tau_limit(M: MPContext) -> float:
    # left tail of the exp-sinh map: weight exp(-pi/2 sinh|tau|) (pi/2) cosh|tau| below 2^-prec
    target = (M.prec + 20) * math.log(2)
    tau = 1.0
    while math.pi / 2 * math.sinh(tau) - math.log(math.pi / 2 * math.cosh(tau)) < target:
        tau += 0.125
    return tau


def _exp_sinh_sum(g_vec: Callable, n_out: int, ctx: EvalContext):
    """Level-doubling exp-sinh trapezoid for integrals over (0, inf).

    ``g_vec(u)`` returns a sequence of ``n_out`` integrand values sharing the
    node ``u``.  Returns (values, relative error estimates, level used).
    """
    M = mpctx(ctx.precision_bits)
    eps = M.mpf(2) ** (-M.prec)
    pi2 = M.pi / 2
    tau_left = _tau_limit(M)

    def terms_at(tau):
        tau = M.mpf(tau)
        u = M.exp(pi2 * M.sinh(tau))
        w = pi2 * M.cosh(tau) * u
        try:
            vals = g_vec(u)
        except OverflowError:
            return [M.mpc(0)] * n_out
        return [M.mpc(v) * w for v in vals]

    # right extent: step outwards at unit spacing until all outputs are negligible
    sums = [M.mpc(0)] * n_out
    peak = [M.mpf(0)] * n_out
    j = 0
    tau_right = 0.0
    quiet = 0
    while True:
        vals = terms_at(j)
        for i, v in enumerate(vals):
            sums[i] += v
            peak[i] = max(peak[i], abs(v))
        small = all(abs(v) <= eps * (peak[i] or 1) for i, v in enumerate(vals)) and j > 0
        quiet = quiet + 1 if small else 0
        tau_right = float(j)
        if quiet >= 2 or j >= 8:
            break
        j += 1
    j = -1
    while j >= -math.ceil(tau_left):
        for i, v in enumerate(terms_at(j)):
            sums[i] += v
            peak[i] = max(peak[i], abs(v))
        j -= 1
    lo, hi = -math.ceil(tau_left), tau_right

    estimates = [s for s in sums]
    errs = [M.inf] * n_out
    h = M.mpf(1)
    for level in range(1, ctx.quad_levels + 1):
        h = h / 2
        k_lo = math.ceil(lo / float(h))
        k_hi = math.floor(hi / float(h))
        start = k_lo if k_lo % 2 else k_lo + 1
        for k in range(start, k_hi + 1, 2):
            for i, v in enumerate(terms_at(k * h)):
                sums[i] += v
        new = [s * h for s in sums]
        done = True
        for i in range(n_out):
            diff = abs(new[i] - estimates[i])
            scale = abs(new[i])
            errs[i] = float(diff / scale) if scale else (0.0 if diff == 0 else math.inf)
            if level < 3 or errs[i] > ctx.rel_tol:
                done = False
        estimates = new
        if done:
            return estimates, errs, level
    raise NoConvergence(
        f"exp-sinh quadrature did not converge in {ctx.quad_levels} levels "
        f"(last relative change {max(errs):.3g})"
    )


def de_quadrature(g: Callable, ctx: EvalContext = DEFAULT_CTX) -> SpecialValue:
    """Integral of ``g`` over (0, inf) by the exp-sinh double-exponential rule.

    ``g`` receives mpmath numbers at ``ctx.precision_bits``.  Nodes are doubled
    level by level up to ``ctx.quad_levels``; the result is accepted once two
    successive levels agree to ``ctx.rel_tol``.
    """
    vals, errs, _ = _exp_sinh_sum(lambda u: (g(u),), 1, ctx)
    return SpecialValue(vals[0], errs[0])
