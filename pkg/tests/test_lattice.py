"""Lattice sums, MacDonald double sums and the xi_1 combinations."""

from __future__ import annotations

import cmath

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lattice_critic import lattice as lt
from lattice_critic.core import EvalContext, mpctx
from lattice_critic.errors import DomainError, PoleError, PoleSentinel
from oracles import brute_macdonald

CTX = EvalContext()


def brute_s0(s: complex, lam: float, radius: int = 400) -> complex:
    """Plain double sum over 0 < p1^2 + (lam p2)^2 <= radius^2 plus the continuum tail."""
    p1 = np.arange(-radius, radius + 1, dtype=float)
    p2 = np.arange(-int(radius / lam), int(radius / lam) + 1, dtype=float)
    r2 = p1[:, None] ** 2 + (lam * p2[None, :]) ** 2
    mask = (r2 > 0) & (r2 <= radius**2)
    total = np.exp(-s * np.log(r2[mask])).sum()
    tail = 2 * np.pi / lam * radius ** (2 - 2 * s) / (2 * s - 2)
    return complex(total + tail)


def rel(a, b) -> float:
    with mpmath.workprec(200):
        a, b = mpmath.mpmathify(a), mpmath.mpmathify(b)
        return float(abs(a - b) / max(abs(a), abs(b)))


# --------------------------------------------------------------------------
# S_0


def test_s0_direct_at_three_matches_beta_closed_form():
    # S_0(3) = 4 zeta(3) beta(3) with beta(3) = pi^3 / 32
    with mpmath.workprec(160):
        exact = 4 * mpmath.zeta(3) * mpmath.pi**3 / 32
    got = lt.s0_direct(3, 1.0, CTX)
    assert abs(got.value - exact) < 1e-20
    assert got.cutoff.max_p1p2 > 0 and got.cutoff.tail_bound < 1e-12


@pytest.mark.parametrize("s, lam", [(2.0, 1.0), (2.5 + 3j, 1.3), (3 - 1j, 0.7), (1.6 + 0.5j, 1.0)])
def test_s0_direct_matches_brute_force(s, lam):
    assert rel(lt.s0_direct(s, lam, CTX).value, brute_s0(s, lam)) < 1e-6


@pytest.mark.parametrize("s, lam", [(2 + 4j, 1.2), (1.5 - 2j, 0.6), (3.0, 2.0)])
def test_kober_continuation_matches_direct_sum(s, lam):
    assert rel(lt.s0(s, lam, CTX).value, lt.s0_direct(s, lam, CTX).value) < 1e-15


def test_s0_square_lattice_is_four_zeta_l():
    s = mpmath.mpc(0.5, 21)
    with mpmath.workprec(160):
        oracle = 4 * mpmath.zeta(s) * mpmath.dirichlet(s, [0, 1, 0, -1])
    assert abs(lt.s0(s, 1.0, CTX).value - oracle) < 1e-25


@settings(max_examples=10, deadline=None)
@given(st.floats(0.6, 1.7), st.floats(-0.5, 2.0), st.floats(-15, 15))
def test_s0_lambda_inversion(lam, x, y):
    s = complex(x, y)
    if min(abs(s - 1), abs(s), abs(s - 0.5)) < 0.05:
        return
    M = mpctx(128)
    z = M.mpc(x, y)
    lhs = lt.s0(z, lam, CTX).value
    # lambda is a double-precision parameter, so 1/lam carries a 1e-16 rounding
    rhs = M.power(M.mpf(lam), -2 * z) * lt.s0(z, 1 / lam, CTX).value
    assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), 1e-30)


def test_s0_direct_domain_and_pole():
    with pytest.raises(DomainError):
        lt.s0_direct(1.05, 1.0, CTX)
    with pytest.raises(PoleError):
        lt.s0(1, 1.0, CTX)
    with pytest.raises(DomainError):
        lt.s0(2, 3.0, CTX)


# --------------------------------------------------------------------------
# MacDonald sums


@pytest.mark.parametrize("n, m, s, lam", [(0, 0, 0.5 + 3j, 1.0), (1, 1, 0.3 + 2j, 1.0), (1, -1, 0.7 - 4j, 1.5),
                                          (2, 2, 1.2 + 1j, 0.9), (0, 1, 0.5 + 14j, 1.0)])
def test_macdonald_matches_direct_besselk_series(n, m, s, lam):
    got = lt.macdonald_K(n, m, s, lam, CTX)
    assert rel(got.value, brute_macdonald(n, m, s, lam)) < 1e-20
    assert got.cutoff.tail_bound <= CTX.rel_tol


@pytest.mark.parametrize("s", [0.5 + 1j, 0.5 + 14j, 0.2 + 5j, 0.9 - 7j, 1.5 + 3j,
                               0.6 + 20j, -0.3 + 11j, 0.5 - 19j, 2.0 + 16j, 0.75 + 8j])
def test_k11_closed_form_matches_bessel_sum(s):
    k11, k11r = lt.k11_closed(s, CTX)
    assert rel(lt.macdonald_K(1, 1, s, 1.0, CTX).value, k11.value) < 1e-8
    assert rel(lt.macdonald_K(1, -1, s, 1.0, CTX).value, k11r.value) < 1e-8


def test_k00_closed_forms_match_sums():
    s = 0.6 + 9j
    assert rel(lt.k00_closed(s, CTX).value, lt.macdonald_K(0, 0, s, 1.0, CTX).value) < 1e-20
    assert rel(lt.k00_lambda_closed(s, CTX).value,
               lt.macdonald_lambda_derivative(0, 0, s, 1.0, CTX).value) < 1e-8


@pytest.mark.parametrize("direction, target_m", [("raise", 1), ("lower", -1)])
def test_index_raising_and_lowering(direction, target_m):
    s = 0.4 + 6j
    got = lt.macdonald_raise(0, 0, s, 1.2, CTX, direction=direction).value
    assert rel(got, lt.macdonald_K(1, target_m, s, 1.2, CTX).value) < 1e-8


def test_index_recurrence_in_m():
    # (m + s - 1/2)/lam K(n, m) = K(n+1, m+1) - K(n+1, m-1)
    lam, m = 1.1, 1
    M = mpctx(128)
    z = M.mpc(0.3, 4)
    lhs = (m + z - M.mpf(1) / 2) / M.mpf(lam) * lt.macdonald_K(0, m, z, lam, CTX).value
    rhs = lt.macdonald_K(1, m + 1, z, lam, CTX).value - lt.macdonald_K(1, m - 1, z, lam, CTX).value
    assert rel(lhs, rhs) < 1e-20


@pytest.mark.parametrize("n, m, s, lam", [(3, 0, 0.5, 1.0), (0, 3, 0.5, 1.0), (0, 0, 0.5 + 45j, 1.0), (0, 0, 0.5, 0.4)])
def test_macdonald_domain_errors(n, m, s, lam):
    with pytest.raises(DomainError):
        lt.macdonald_K(n, m, s, lam, CTX)


# --------------------------------------------------------------------------
# ratios on and off the line


@settings(max_examples=20, deadline=None)
@given(st.floats(1.0, 60.0))
def test_unimodular_ratios_on_critical_line(t):
    s = mpmath.mpc(0.5, t)
    uk, vk = lt.uk_vk(s, 1.0, CTX)
    u, v = lt.u_v(s, CTX)
    f, g = lt.f_g(s, CTX)
    assert abs(abs(uk.value) - 1) < 1e-9
    assert abs(abs(u.value) - 1) < 1e-9
    assert abs(abs(f.value) - 1) < 1e-9
    assert abs(v.value.real) < 1e-9 * max(1, abs(v.value))
    assert abs(vk.value.real) < 1e-9 * max(1, abs(vk.value))


@settings(max_examples=15, deadline=None)
@given(st.floats(-1.0, 2.0), st.floats(1.0, 40.0))
def test_uk_reflection(x, y):
    M = mpctx(128)
    z = M.mpc(x, y)
    if abs(x - 0.5) < 1e-3:
        return
    a = lt.uk_vk(z, 1.0, CTX)[0].value
    b = lt.uk_vk(1 - z, 1.0, CTX)[0].value
    assert abs(a * b - 1) < 1e-20


def test_t_plus_minus_and_script_l_relations():
    s = mpmath.mpc(0.7, 11)
    tp, tm = lt.t_plus_minus(s, 1.0, CTX)
    with mpmath.workprec(160):
        x2 = mpmath.pi ** (-s) * mpmath.gamma(s) * mpmath.zeta(2 * s)
        x1 = mpmath.pi ** (-(s - 0.5)) * mpmath.gamma(s - 0.5) * mpmath.zeta(2 * s - 1)
        tp_ref, tm_ref, ell_ref = (x2 + x1) / 4, (x2 - x1) / 4, s * x2 + (1 - s) * x1
    assert rel(tp.value, tp_ref) < 1e-25
    assert rel(tm.value, tm_ref) < 1e-25
    assert rel(lt.script_L(s, CTX).value, ell_ref) < 1e-25


def test_k00_lambda_is_minus_k11_sum_and_script_l_identity():
    s = 0.5 + 13j
    k11, k11r = lt.k11_closed(s, CTX)
    k00l = lt.k00_lambda_closed(s, CTX).value
    assert rel(k00l, -(k11.value + k11r.value)) < 1e-30
    ell = lt.script_L(s, CTX).value
    assert rel(ell, -2 * lt.k00_closed(s, CTX).value - 4 * k00l) < 1e-25


def test_vk_from_k00_matches_k11_ratio_off_square():
    s = 0.7 + 5j
    assert rel(lt.vk_from_k00(s, 1.3, CTX).value, lt.uk_vk(s, 1.3, CTX)[1].value) < 1e-8


@pytest.mark.parametrize("s", [0.5, 0.0, 1.0])
def test_removable_points_are_continuous(s):
    near = lt.k11_closed(s + 1e-7j, CTX)[0].value
    at = lt.k11_closed(s, CTX)[0].value
    assert abs(at - near) < 1e-5 * max(1, abs(at))
    assert abs(lt.script_L(s, CTX).value - lt.script_L(s + 1e-7j, CTX).value) < 1e-5


def test_u_pole_at_zero_of_zeta_2s():
    with mpmath.workprec(200):
        z = mpmath.mpc(0.25, mpmath.zetazero(1).imag / 2)
        with pytest.raises(PoleSentinel):
            lt.u_v(z, CTX)


@pytest.mark.parametrize("s", [0.7 + 20j, 2 + 3j, 0.1 + 40j, 0.5 + 13.06252723j])
def test_reconstruction_matches_direct(s):
    assert rel(lt.s0_reconstruct(s, CTX).value, lt.s0_tilde(s, CTX).value) < 1e-6


def test_reconstruction_at_t_minus_zero_uses_fallback():
    # T_- vanishes at 1/2 + 13.0625...i on the line; the default form degenerates there
    M = mpctx(200)
    t0 = mpmath.findroot(lambda t: lt.t_plus_minus(M.mpc(0.5, t), 1.0, EvalContext(precision_bits=200))[1].value.imag,
                         13.0625)
    s = M.mpc(0.5, t0)
    assert abs(lt.t_plus_minus(s, 1.0, CTX)[1].value) < 1e-30
    assert rel(lt.s0_reconstruct(s, CTX).value, lt.s0_tilde(s, CTX).value) < 1e-6


def test_s0_tilde_is_gamma_weighted_s0():
    s = 0.5 + 30j
    M = mpctx(128)
    z = M.mpc(0.5, 30)
    expected = M.gamma(z) * lt.s0(s, 1.0, CTX).value / (8 * M.power(M.pi, z))
    assert rel(lt.s0_tilde(s, CTX).value, expected) < 1e-25
    assert cmath.isfinite(complex(lt.s0_tilde(s, CTX).value))


@pytest.mark.parametrize("t", [7.3, 13.0547, 48.2, 356.1])
def test_real_after_rotation_on_critical_line(t):
    s = 0.5 + 1j * t
    tp, tm = lt.t_plus_minus(s, 1.0, CTX)
    k11, _ = lt.k11_closed(s, CTX)
    for val in (tp.value, lt.script_L(s, CTX).value, lt.k00_closed(s, CTX).value,
                -2 * k11.value.real + 0j, lt.k00_lambda_closed(s, CTX).value):
        assert abs(val.imag) <= 1e-9 * abs(val)
    # T_- is purely imaginary there
    assert abs(tm.value.real) <= 1e-9 * abs(tm.value)
    assert rel(lt.k00_lambda_closed(s, CTX).value, -2 * k11.value.real) < 1e-20


OFF_AXIS_K11 = [(1.22, 1.28, 13.05, 13.12), (0.61, 0.67, 358.13, 358.19), (0.52, 0.58, 355.75, 355.81)]


@pytest.mark.parametrize("box", OFF_AXIS_K11)
def test_k11_and_reflection_never_vanish_together(box):
    from lattice_critic.specfun import gamma_c
    from lattice_critic.zeros import find_offaxis_zero

    # the locator is double precision; polish at working precision before comparing
    start = find_offaxis_zero("K11", box, CTX).s
    with mpmath.workprec(CTX.precision_bits):
        s = mpmath.findroot(lambda z: lt.k11_closed(z, CTX)[0].value, mpmath.mpc(start))
    assert abs(complex(s) - start) < 1e-9
    assert s.real > 0.5
    k11, k11r = lt.k11_closed(s, CTX)
    scale = abs(gamma_c(s, CTX).value) * mpmath.pi ** (-s.real)
    assert abs(k11.value) / scale < 1e-12
    assert abs(k11r.value) / scale > 1e-6


def uk_oracle(s):
    """U_K from zeta, L_{-4} and Gamma in mpmath (square-lattice closed form)."""
    with mpmath.workprec(160):
        s = mpmath.mpmathify(s)
        s0 = 4 * mpmath.zeta(s) * mpmath.dirichlet(s, [0, 1, 0, -1])
        num = s * s0 - 4 * (s - 0.5) * mpmath.sqrt(mpmath.pi) * mpmath.gamma(s - 0.5) / mpmath.gamma(s) \
            * mpmath.zeta(2 * s - 1)
        den = (1 - s) * s0 + 4 * (s - 0.5) * mpmath.zeta(2 * s)
        return num / den


@pytest.mark.parametrize("s", [3 + 50j, 3 + 100j, 3 + 200j, 0.8 + 30j, 5 + 100j])
def test_uk_matches_mpmath_closed_form(s):
    assert rel(lt.uk_vk(s, 1.0, CTX)[0].value, uk_oracle(s)) < 1e-25


def test_uk_modulus_grows_along_sigma_three():
    # stated trend: |U_K(3 + it)| increasing over t = 50, 100, 200
    mods = [abs(lt.uk_vk(3 + 1j * t, 1.0, CTX)[0].value) for t in (50, 100, 200)]
    assert mods[0] < mods[1] < mods[2], mods


def test_uk_modulus_grows_with_sigma():
    mods = [abs(lt.uk_vk(sig + 100j, 1.0, CTX)[0].value) for sig in (3, 5, 8, 12)]
    assert all(a < b for a, b in zip(mods, mods[1:]))
