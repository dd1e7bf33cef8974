"""Numerical identity checks across independent evaluation routes.

Each check evaluates both sides of an identity by different code paths and
reports the relative residual |lhs - rhs| / max(|lhs|, |rhs|).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import DEFAULT_CTX, EvalContext, format_complex, mpctx, to_mpc
from .lattice import (
    k00_closed,
    k11_closed,
    macdonald_K,
    macdonald_lambda_derivative,
    s0,
    s0_direct,
    s0_reconstruct,
    s0_tilde,
    script_L,
    u_v,
    uk_vk,
)
from .specfun import gamma_c, l_minus4, xi1, zeta_c

__all__ = ["IdentityResult", "IDENTITY_CHECKS", "run_identity_suite"]


@dataclass(frozen=True)
class IdentityResult:
    name: str
    point: str
    residual: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.residual < self.tol


def _rel(a, b) -> float:
    """Relative difference computed in the precision of the inputs."""
    den = max(abs(a), abs(b))
    return float(abs(a - b) / den) if den else 0.0


def _label(s, lam=None) -> str:
    text = f"s={format_complex(complex(s), 8)}"
    return text if lam is None else f"{text} lam={lam:g}"


def check_square_product(ctx: EvalContext) -> list[IdentityResult]:
    """Direct lattice sum against 4 zeta(s) L_{-4}(s)."""
    out = []
    for s in (2, 1.5 + 3j, 3 - 2j, 2.5 + 10j):
        lhs = s0_direct(s, 1.0, ctx).value
        rhs = 4 * zeta_c(s, ctx).value * l_minus4(s, ctx).value
        out.append(IdentityResult("square_product", _label(s), _rel(lhs, rhs), 1e-8))
    return out


def check_index_reflection(ctx: EvalContext) -> list[IdentityResult]:
    """K(n, -m; s) = K(n, m; 1 - s)."""
    out = []
    for (n, m), s, lam in (((1, 1), 0.3 + 2j, 1.0), ((0, 1), 0.7 + 5j, 1.4),
                           ((1, 2), 0.2 - 3j, 1.0), ((2, 1), 0.6 + 8j, 0.8)):
        lhs = macdonald_K(n, -m, s, lam, ctx).value
        rhs = macdonald_K(n, m, 1 - s, lam, ctx).value
        out.append(IdentityResult("index_reflection", f"n={n} m={m} " + _label(s, lam), _rel(lhs, rhs), 1e-8))
    return out


def check_kober_vs_direct(ctx: EvalContext) -> list[IdentityResult]:
    """Kober form of S_0(s; lam) against the direct sum for Re s >= 1.5."""
    M = mpctx(ctx.precision_bits)
    out = []
    for s, lam in ((1.5 + 1j, 1.2), (2 + 4j, 0.8), (1.8 - 3j, 1.7)):
        z = to_mpc(s, M)
        L = M.mpf(lam)
        gam = gamma_c(s, ctx).value
        rhs = (2 * zeta_c(2 * z, ctx).value / L ** (2 * z)
               + 2 * M.sqrt(M.pi) * gamma_c(z - M.mpf(1) / 2, ctx).value * zeta_c(2 * z - 1, ctx).value / (gam * L)
               + 8 * M.pi ** z / (gam * L ** (z + M.mpf(1) / 2)) * macdonald_K(0, 0, s, 1 / lam, ctx).value)
        lhs = s0_direct(s, lam, ctx).value
        out.append(IdentityResult("kober_vs_direct", _label(s, lam), _rel(lhs, rhs), 1e-8))
    return out


def check_fourfold_symmetry(ctx: EvalContext) -> list[IdentityResult]:
    """The four equal forms of lam^s Gamma(s) S_0(s; lam) / (8 pi^s)."""
    M = mpctx(ctx.precision_bits)
    out = []
    for s, lam in ((0.3 + 4j, 1.3), (0.8 - 2j, 0.7), (2 + 7j, 1.6)):
        z = to_mpc(s, M)
        L = M.mpf(lam)

        def q(w, lam_pow, lam_arg):
            return lam_pow * gamma_c(w, ctx).value * s0(w, lam_arg, ctx).value / (8 * M.pi ** w)

        vals = [q(z, L ** z, lam), q(z, L ** -z, 1 / lam),
                q(1 - z, L ** (1 - z), lam), q(1 - z, L ** (z - 1), 1 / lam)]
        res = max(_rel(vals[0], v) for v in vals[1:])
        out.append(IdentityResult("fourfold_symmetry", _label(s, lam), res, 1e-8))
    return out


def check_lambda_inversion(ctx: EvalContext, n_points: int = 20, seed: int = 4) -> list[IdentityResult]:
    """xi_1 combination against sqrt(lam) K(0,0;s;lam) - K(0,0;s;1/lam)/sqrt(lam) at random points."""
    M = mpctx(ctx.precision_bits)
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_points):
        s = complex(rng.uniform(-1.0, 2.0), rng.uniform(-20.0, 20.0))
        lam = float(rng.uniform(0.6, 1.6))
        z = to_mpc(s, M)
        L = M.mpf(lam)
        x2, x1 = xi1(2 * z, ctx).value, xi1(2 * z - 1, ctx).value
        lhs = (x2 * (L ** -z - L ** z) + x1 * (L ** (z - 1) - L ** (1 - z))) / 4
        rhs = (M.sqrt(L) * macdonald_K(0, 0, s, lam, ctx).value
               - macdonald_K(0, 0, s, 1 / lam, ctx).value / M.sqrt(L))
        out.append(IdentityResult("lambda_inversion", _label(s, lam), _rel(lhs, rhs), 1e-8))
    return out


def check_script_l_lambda_derivative(ctx: EvalContext) -> list[IdentityResult]:
    """script-L = -2 K(0,0;s;1) - 4 dK(0,0;s;lam)/dlam at lam = 1, derivative by differencing."""
    out = []
    for s in (0.5 + 13j, 0.8 + 3j, 0.3 - 7j):
        lhs = script_L(s, ctx).value
        rhs = -2 * macdonald_K(0, 0, s, 1.0, ctx).value - 4 * macdonald_lambda_derivative(0, 0, s, 1.0, ctx).value
        out.append(IdentityResult("script_l_lambda_derivative", _label(s), _rel(lhs, rhs), 1e-6))
    return out


def check_s0_lambda_derivative(ctx: EvalContext, h: float = 1e-5) -> list[IdentityResult]:
    """dS_0(s; lam)/dlam at lam = 1 equals -s S_0(s; 1)."""
    out = []
    for s in (0.5 + 10j, 2 + 1j, 0.2 - 4j):
        deriv = (s0(s, 1 + h, ctx).value - s0(s, 1 - h, ctx).value) / (2 * h)
        rhs = -s * s0(s, 1.0, ctx).value
        out.append(IdentityResult("s0_lambda_derivative", _label(s), _rel(deriv, rhs), 1e-6))
    return out


def check_v_sum_relation(ctx: EvalContext) -> list[IdentityResult]:
    """V_K + V = 2 (U_K + U) / ((U_K + 1)(1 - U)), from V_K = (U_K - 1)/(U_K + 1) and V = (1 + U)/(1 - U)."""
    out = []
    for s in (0.6 + 8j, 0.7 + 20j, 0.5 + 25j, 1.3 + 9j, 0.2 - 15j):
        uk, vk = uk_vk(s, 1.0, ctx)
        u, v = u_v(s, ctx)
        lhs = vk.value + v.value
        rhs = 2 * (uk.value + u.value) / ((uk.value + 1) * (1 - u.value))
        out.append(IdentityResult("v_sum_relation", _label(s), _rel(lhs, rhs), 1e-8))
    return out


def check_reconstruction(ctx: EvalContext) -> list[IdentityResult]:
    """S_0 rebuilt from V_K, T_+-, script-L against the zeta L_{-4} route."""
    out = []
    for s in (0.7 + 20j, 0.5 + 13.062527j, 2 + 3j, 0.1 + 40j):
        out.append(IdentityResult("reconstruction", _label(s),
                                  _rel(s0_reconstruct(s, ctx).value, s0_tilde(s, ctx).value), 1e-6))
    return out


def check_bessel_closed_form(ctx: EvalContext) -> list[IdentityResult]:
    """MacDonald double sum K(1,1;s;1) against its closed form, and K(0,0) likewise."""
    out = []
    pts = (0.5 + 1j, 0.5 + 14j, 0.2 + 5j, 0.9 - 7j, 1.5 + 3j, 0.6 + 20j, -0.3 + 11j, 0.5 - 19j, 2.0 + 16j, 0.75 + 8j)
    for s in pts:
        out.append(IdentityResult("k11_closed", _label(s),
                                  _rel(macdonald_K(1, 1, s, 1.0, ctx).value, k11_closed(s, ctx)[0].value), 1e-8))
    for s in pts[:3]:
        out.append(IdentityResult("k00_closed", _label(s),
                                  _rel(macdonald_K(0, 0, s, 1.0, ctx).value, k00_closed(s, ctx).value), 1e-8))
    return out


IDENTITY_CHECKS: dict[str, Callable[[EvalContext], list[IdentityResult]]] = {
    "square_product": check_square_product,
    "index_reflection": check_index_reflection,
    "kober_vs_direct": check_kober_vs_direct,
    "fourfold_symmetry": check_fourfold_symmetry,
    "lambda_inversion": check_lambda_inversion,
    "script_l_lambda_derivative": check_script_l_lambda_derivative,
    "s0_lambda_derivative": check_s0_lambda_derivative,
    "v_sum_relation": check_v_sum_relation,
    "reconstruction": check_reconstruction,
    "bessel_closed_form": check_bessel_closed_form,
}


def run_identity_suite(ctx: EvalContext = DEFAULT_CTX, names=None) -> list[IdentityResult]:
    names = list(IDENTITY_CHECKS) if names is None else list(names)
    out: list[IdentityResult] = []
    for name in names:
        out.extend(IDENTITY_CHECKS[name](ctx))
    return out
