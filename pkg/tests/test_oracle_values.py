"""Recompute the frozen reference values with mpmath."""

import mpmath as mp
import pytest

import oracle_values as ov

mp.mp.dps = 40


def frak(n, eps, c):
    return (mp.mpf(c) - eps * n * (n - 1)) / (n * (n - 1))


def close(a, b, tol=1e-15):
    return abs(float(a) - b) <= tol * max(1.0, abs(b))


@pytest.mark.parametrize("key", sorted(ov.SEED_CASES))
def test_seed_cases(key):
    eps, c = key
    C = frak(3, eps, c)
    x = 1 / mp.sqrt(C)
    if eps == 1:
        delta = mp.atan(x)
    else:
        delta = mp.atanh(x) if x < 1 else mp.inf
    case = ov.SEED_CASES[key]
    assert float(delta) == case["delta"] or close(delta, case["delta"])
    tan = mp.tan if eps == 1 else mp.tanh
    for s, rho in case["samples"]:
        assert close(mp.sqrt(C) * tan(mp.mpf(s)), rho)


@pytest.mark.parametrize("key", sorted(ov.PHI_DELTA))
def test_phi_delta(key):
    eps, c = key
    C = frak(3, eps, c)
    tan = mp.tan if eps == 1 else mp.tanh
    delta = mp.atan(1 / mp.sqrt(C)) if eps == 1 else mp.atanh(1 / mp.sqrt(C))
    phi = mp.quad(lambda s: mp.sqrt(C) * tan(s) / mp.sqrt(1 - C * tan(s) ** 2), [0, delta])
    assert close(mp.re(phi), ov.PHI_DELTA[key], 1e-14)


def test_sphere_height_is_asinh():
    assert close(mp.asinh(1) / mp.sqrt(2), ov.PHI_DELTA[(1, 12)])


def _tau_rot(s, lam=mp.mpf("0.2"), n=3, c=12):
    E = lambda u: mp.sin(u) ** (n - 2) * mp.cos(u) ** 2
    B = mp.mpf(c) / (n - 1) - n
    return (E(lam) + mp.quad(lambda u: B * mp.tan(u) * E(u), [lam, s])) / E(s)


def _tau_rot_exact(s, lam=mp.mpf("0.2")):
    # n = 3: the inner integrand tan(u) sin(u) cos(u)^2 integrates to sin^3 / 3
    E = lambda u: mp.sin(u) * mp.cos(u) ** 2
    return (E(lam) + 3 * (mp.sin(s) ** 3 - mp.sin(lam) ** 3) / 3) / E(s)


def test_annulus_values():
    for s, tau in ov.ANNULUS_TAU:
        assert close(_tau_rot(mp.mpf(s)), tau, 1e-14)
        assert close(_tau_rot_exact(mp.mpf(s)), tau, 1e-14)
    lam_bar = mp.findroot(lambda s: _tau_rot_exact(s) - 1, mp.mpf("0.6267"))
    assert close(lam_bar, ov.ANNULUS_LAM_BAR, 1e-14)
    f = lambda s: mp.sqrt(_tau_rot_exact(s) / (1 - _tau_rot_exact(s)))
    per = 2 * mp.quad(f, [mp.mpf("0.2"), lam_bar])
    assert close(per, ov.ANNULUS_PERIOD, 1e-12)


def test_hyperbolic_annulus_values():
    n, c, lam = 3, mp.mpf(-3), mp.mpf(1)
    E = lambda u: mp.sinh(u) ** 2 * mp.cosh(u) ** (n - 2)
    B = c / (n - 1) + n
    for s, tau in ov.ANNULUS_H_TAU:
        s = mp.mpf(s)
        val = (E(lam) + mp.quad(lambda u: B * mp.tanh(u) * E(u), [lam, s])) / E(s)
        assert close(val, tau, 1e-14)


def test_hyperbolic_family_values():
    n, C = 3, frak(3, -1, -3)
    lam0 = mp.atanh(1 / mp.sqrt(2))
    assert close(lam0, ov.LAMBDA_0)
    E = lambda u: mp.sinh(u) ** 2 * mp.cosh(u) ** (n - 2)
    for (dl, ds), rho in ov.HYPERBOLIC_RHO.items():
        lam = lam0 + mp.mpf(dl)
        s = lam + mp.mpf(ds)
        tau = (E(lam) + mp.quad(lambda u: n * C / mp.tanh(u) * E(u), [lam, s])) / E(s)
        assert close(mp.sqrt(tau), rho, 1e-14)
    assert close(mp.atanh(mp.sqrt(mp.mpf(5) / 6)), ov.HYPERBOLIC_DELTA_4_M2)


def test_parabolic_values():
    f = lambda s: mp.e ** (1.5 * s) / mp.sqrt(1 - mp.e ** (3 * s))
    for s, phi in ov.PARABOLIC_PHI_M6:
        assert close(-mp.quad(f, [mp.mpf(s), 0]), phi, 1e-14)
    for s, rho in ov.PARABOLIC_RHO_M3:
        assert close(mp.sqrt(mp.e ** (3 * mp.mpf(s)) / 2 + mp.mpf(1) / 2), rho)
    slab = mp.mpf(2) / 3 * (mp.asin(mp.e ** -15) - mp.pi / 2)
    assert close(slab, ov.SLAB_AT_SPAN_10)


def test_misc_values():
    assert close(mp.atanh(mp.mpf(1) / 2), ov.CYLINDER_H1_C4)
    assert close(mp.atan(mp.sqrt(mp.mpf(1) / 5)), ov.ANNULI_THRESHOLD_3_1_12)
