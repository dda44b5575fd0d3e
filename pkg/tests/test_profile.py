import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracle_values as ov
from weingarten_graphs.ambient import FamilyKind
from weingarten_graphs.constructions import (build_parabolic, build_rotational_csc)
from weingarten_graphs.errors import TangencyMismatch
from weingarten_graphs.profile import (Convexity, Topology, assemble, build_profile,
                                       classify_convexity, fields_along, height_extent,
                                       integrate_phi)
from weingarten_graphs.rho_solver import (ClosedFormRho, CscMode, CscParameters, Interior, Origin, Terminal,
                                          TerminalKind, closed_form_solution, csc_closed_form,
                                          integrate_rho, ws_pair)


def _parabolic_graph(c=-6.0, span=10.0):
    pair = ws_pair(3, -1, c, FamilyKind.HOROSPHERES)
    cf, _ = csc_closed_form(CscMode.PARABOLIC_GRAPH, CscParameters(3, -1, c))
    term = Terminal(TerminalKind.TRUNCATED, -span, None, "s_max")
    return closed_form_solution(cf, pair, -span, 0.0, 0.0, term)


def test_phi_parabolic_closed_form():
    sol = _parabolic_graph()
    prof = fields_along(sol)
    expected = (2 / 3) * (np.arcsin(np.exp(1.5 * prof.s)) - math.pi / 2)
    assert np.max(np.abs(prof.phi - expected)) <= 1e-10
    phi, _ = integrate_phi(sol, np.array([-2.0, -0.5, 0.0]))
    for value, (s, expected) in zip(phi, sorted(ov.PARABOLIC_PHI_M6)):
        assert value == pytest.approx(expected, abs=1e-10)


def test_phi_hyperplane_is_zero():
    sol = integrate_rho(ws_pair(3, -1, -6), Origin())
    phi, info = integrate_phi(sol)
    assert np.all(phi == 0) and not info["divergent"]


@pytest.mark.parametrize("key", sorted(ov.PHI_DELTA))
def test_phi_delta_against_oracle(key):
    eps, c = key
    for method in ("closed", "numeric"):
        m = build_rotational_csc(3, eps, c, method)
        prof = m.pieces[0].profile
        assert prof.phi[-1] == pytest.approx(ov.PHI_DELTA[key], abs=1e-9)
        assert prof.flags["tail_bound_ok"]


def test_fields_constant_sectional_sphere():
    prof = build_rotational_csc(3, 1, 12, "closed").pieces[0].profile
    assert np.max(np.abs(prof.K_tan[(0, 0)] - 2)) <= 1e-9
    assert np.max(np.abs(prof.K_mix - 2)) <= 1e-9
    np.testing.assert_allclose(prof.theta ** 2 + prof.rho ** 2, 1.0, atol=1e-12)
    np.testing.assert_allclose(prof.k_n, prof.rho_prime)


def test_fields_horosphere_constant_graph():
    m = build_parabolic(3, -3, "EntireConstant")
    prof = m.pieces[0].profile
    np.testing.assert_allclose(prof.rho, 1 / math.sqrt(2), rtol=1e-15)
    np.testing.assert_allclose(prof.K_tan[(0, 0)], -0.5, atol=1e-15)
    np.testing.assert_allclose(prof.K_mix, -0.5, atol=1e-15)
    assert prof.convexity is Convexity.WEAK


def test_scalar_curvature_matches_sectional_sum():
    for m in (build_rotational_csc(3, 1, 12, "numeric"), build_rotational_csc(4, -1, 3, "numeric"),
              build_parabolic(3, -3)):
        for prof in m.profiles:
            assert np.max(np.abs(prof.S - prof.sectional_sum())) <= 1e-9
            assert np.max(np.abs(prof.S - prof.S_formula())) <= 1e-12


def test_phi_monotone_and_anchored():
    prof = build_rotational_csc(3, -1, 0, "numeric").pieces[0].profile
    assert prof.phi[0] == 0 and np.all(np.diff(prof.phi) >= 0)


def test_convexity_classes():
    one = np.ones((1, 3))
    assert classify_convexity(one, np.ones(3)) is Convexity.STRICT
    assert classify_convexity(one, np.zeros(3)) is Convexity.WEAK
    assert classify_convexity(-one, np.ones(3)) is Convexity.NONE


def test_assembly_sphere_and_periodic():
    m = build_rotational_csc(3, 1, 12, "closed")
    assert m.topology is Topology.SPHERE
    top = m.symmetry_planes[0]
    assert top == pytest.approx(ov.PHI_DELTA[(1, 12)], abs=1e-12)
    a, b = m.pieces
    assert np.all(a.height + b.height == 2 * top)
    ext = height_extent(m)
    assert ext.t_max - ext.t_min == pytest.approx(2 * ov.PHI_DELTA[(1, 12)], abs=1e-9)
    assert ext.height_bound_ok


def test_tangency_mismatch():
    sol = integrate_rho(ws_pair(3, -1, 0), Origin(), s_max=2.0)
    with pytest.raises(TangencyMismatch):
        assemble(build_profile(sol), "sphere")


def test_entire_unbounded_and_slab():
    ext = height_extent(build_rotational_csc(3, -1, 0, "closed"))
    assert ext.unbounded_above and not ext.unbounded_below
    ext = height_extent(build_parabolic(3, -6))
    assert abs(ext.t_max - math.pi / 3) <= 1e-3 and abs(ext.t_min + math.pi / 3) <= 1e-3
    assert not (ext.unbounded_above or ext.unbounded_below)
    ext = height_extent(build_parabolic(3, -3))
    assert ext.unbounded_above and ext.unbounded_below


def test_cusp_flags_divergence():
    # rho = 1 - (1 - s)^2 reaches the vertical with zero slope: phi diverges logarithmically
    cf = ClosedFormRho("cusp", lambda s: 1 - (1 - s) ** 2, lambda s: 2 * (1 - s),
                       lambda s: (1 - s) ** 2, (0.3, 1.0), {})
    term = Terminal(TerminalKind.REACHES_ONE, 1.0, 0.0, "rho_one")
    sol = closed_form_solution(cf, None, 0.3, 1.0, 0.3, term)
    phi, info = integrate_phi(sol)
    assert info["divergent"] and np.all(np.isfinite(phi))


def test_annulus_return_is_regular():
    sol = integrate_rho(ws_pair(3, 1, 12), Interior(0.2, 1.0, 1))
    prof = build_profile(sol)
    assert not prof.flags["divergent"] and prof.flags["tail_bound_ok"]


@settings(max_examples=10, deadline=None)
@given(st.floats(6.5, 30.0))
def test_sphere_height_property(c):
    m = build_rotational_csc(3, 1, c, "closed")
    fc = (c - 6) / 6
    # phi(delta) <= 1 / inf k0 with inf k0 = sqrt(frak_C) on horizontal branches
    assert m.pieces[0].profile.phi[-1] <= 1 / math.sqrt(fc) + 1e-6
    assert height_extent(m).height_bound_ok
