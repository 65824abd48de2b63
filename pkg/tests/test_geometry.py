"""Connection/curvature/scalar machinery tests.

Oracles: flat space (everything vanishes), conformally-flat n=1 metrics with
hand-computed Ricci, Kähler potentials (all torsion-type quantities collapse),
and cross-checks between independent computation paths for the same tensor.
"""

import numpy as np
import pytest

from conftest import metric_from_fn, random_poly_metric_fn, random_small_point
from lcflat import geometry as geo
from lcflat.wjet import conj, exp, jet_const

RNG = np.random.default_rng


def flat_metric(n, pt):
    return metric_from_fn(
        n,
        lambda z, zb: [
            [jet_const(1.0 if i == j else 0.0, n) for j in range(n)] for i in range(n)
        ],
        pt,
    )


def kahler_potential_metric(n, pt):
    """h_{ij̄} = (1 + |z|²) δ_ij + z̄^i z^j, from the potential |z|² + ½|z|⁴."""

    def fn(z, zb):
        S = sum((z[k] * zb[k] for k in range(n)), jet_const(0.0, n))
        return [
            [
                (1.0 + S if i == j else jet_const(0.0, n)) + zb[i] * z[j]
                for j in range(n)
            ]
            for i in range(n)
        ]

    return metric_from_fn(n, fn, pt)


# -- flat space ------------------------------------------------------------


def test_flat_metric_all_curvature_vanishes():
    m = flat_metric(2, (0.3 + 0.2j, -0.1 + 0.5j))
    assert np.max(np.abs(geo.chern_curvature(m).R)) == 0.0
    assert np.max(np.abs(geo.chern_ricci(m).A)) == 0.0
    assert np.max(np.abs(geo.lc_ricci(m).A)) == 0.0
    assert np.max(np.abs(geo.lc_curvature(m).lowered)) == 0.0
    sc = geo.scalars(m)
    assert sc.s_C == sc.s_LC == sc.s == 0.0
    assert sc.torsion_sq == sc.delstar_sq == 0.0


def test_flat_metric_connection_symbols_vanish():
    m = flat_metric(2, (0.1 - 0.7j, 0.4 + 0.9j))
    ch = geo.christoffels(m)
    assert np.max(np.abs(ch.chern_values())) == 0.0
    assert np.max(np.abs(ch.lc_hol_values())) == 0.0
    assert np.max(np.abs(ch.lc_anti_values())) == 0.0


# -- one-variable hand oracles ----------------------------------------------


@pytest.mark.parametrize(
    "sign,expected",
    [(+1.0, -1.0), (-1.0, +1.0)],
    ids=["growing", "decaying"],
)
def test_conformal_exp_metric_chern_ricci_is_constant(sign, expected):
    """h = e^{±|z|²} has R_{11̄} = −∂²(±|z|²)/∂z∂z̄ = ∓1 at every point."""
    pt = (0.3 - 0.45j,)
    m = metric_from_fn(1, lambda z, zb: [[exp(sign * z[0] * zb[0])]], pt)
    A = geo.chern_ricci(m).A
    assert abs(A[0, 0] - expected) < 1e-13
    # scalar: s_C = h^{-1} R
    zz = abs(pt[0]) ** 2
    assert abs(geo.chern_scalar(m) - expected * np.exp(-sign * zz)) < 1e-12


def test_one_variable_metrics_have_no_torsion():
    rng = RNG(11)
    fn = random_poly_metric_fn(1, rng)
    m = fn(random_small_point(1, rng))
    T, tsq = geo.torsion(m)
    assert np.max(np.abs(T)) == 0.0
    assert tsq == 0.0
    a01, a10 = geo.del_star(m)
    assert np.max(np.abs(a01.values)) == 0.0
    assert np.max(np.abs(a10.values)) == 0.0
    # with no adjoint defect the two Ricci paths coincide componentwise
    assert np.allclose(geo.lc_ricci(m).A, geo.chern_ricci(m).A, atol=1e-12)


# -- independent paths to the same tensor -------------------------------------


def test_chern_ricci_trace_path_matches_log_det_path():
    rng = RNG(23)
    for _ in range(10):
        m = random_poly_metric_fn(2, rng)(random_small_point(2, rng))
        A1 = geo.chern_ricci(m).A
        A2 = geo.chern_ricci_trace_path(m).A
        scale = 1 + max(np.max(np.abs(A1)), np.max(np.abs(A2)))
        assert np.max(np.abs(A1 - A2)) / scale < 1e-10


def test_lc_ricci_two_paths_agree_on_random_metrics():
    """Curvature-trace path vs Chern-Ricci-minus-adjoint-defect path."""
    rng = RNG(5)
    for _ in range(20):
        m = random_poly_metric_fn(2, rng)(random_small_point(2, rng))
        r1 = geo.lc_ricci(m).A
        r2 = geo.lc_ricci_via_relation(m).A
        scale = 1 + max(np.max(np.abs(r1)), np.max(np.abs(r2)))
        assert np.max(np.abs(r1 - r2)) / scale < 1e-12


def test_curvature_and_ricci_are_hermitian():
    rng = RNG(31)
    m = random_poly_metric_fn(2, rng)(random_small_point(2, rng))
    assert geo.chern_ricci(m).hermitian_residual() < 1e-12
    assert geo.lc_ricci(m).hermitian_residual() < 1e-12
    assert geo.d_del_star(m).hermitian_residual() < 1e-14
    R = geo.chern_curvature(m).R
    # R_{ij̄kℓ̄} = conj(R_{jīℓk̄})
    assert np.max(np.abs(R - R.transpose(1, 0, 3, 2).conj())) < 1e-12
    low = geo.lc_curvature(m).lowered
    assert np.max(np.abs(low - low.transpose(1, 0, 3, 2).conj())) < 1e-12


# -- Kähler collapse -----------------------------------------------------------


def test_kahler_metric_collapses_all_torsion_quantities():
    pt = (0.25 - 0.4j, 0.5 + 0.15j)
    m = kahler_potential_metric(2, pt)
    assert geo.kahler_defect(m) < 1e-14

    T, tsq = geo.torsion(m)
    assert np.max(np.abs(T)) < 1e-13
    assert abs(tsq) < 1e-13

    ch = geo.christoffels(m)
    assert np.max(np.abs(ch.lc_anti_values())) < 1e-13
    assert np.max(np.abs(ch.chern_values() - ch.lc_hol_values())) < 1e-13

    a01, _ = geo.del_star(m)
    assert np.max(np.abs(a01.values)) < 1e-13
    assert geo.d_del_star(m).max_abs() < 1e-12

    assert np.max(np.abs(geo.lc_ricci(m).A - geo.chern_ricci(m).A)) < 1e-12


def test_kahler_scalar_relations():
    """On a Kähler metric: s = 2 s_C and s_LC = s_C."""
    m = kahler_potential_metric(2, (0.3 + 0.1j, -0.2 + 0.35j))
    sc = geo.scalars(m)
    assert abs(sc.s - 2 * sc.s_C) < 1e-10 * (1 + abs(sc.s))
    assert abs(sc.s_LC - sc.s_C) < 1e-10 * (1 + abs(sc.s_LC))
    assert abs(sc.torsion_sq) < 1e-13
    assert abs(sc.ddstar_pairing) < 1e-12


# -- torsion ---------------------------------------------------------------------


def test_torsion_antisymmetric_and_nonzero_off_kahler():
    rng = RNG(17)
    m = random_poly_metric_fn(2, rng)(random_small_point(2, rng))
    T, tsq = geo.torsion(m)
    assert np.max(np.abs(T + T.transpose(0, 2, 1))) < 1e-14
    assert tsq > 0
    assert geo.kahler_defect(m) > 1e-3


# -- scalar identities -------------------------------------------------------------


def test_scalar_identity_riemannian_decomposition():
    """s = 2 s_C + (⟨∂∂*ω + ∂̄∂̄*ω, ω⟩ − 2|∂*ω|²) − ½|T|² on generic metrics."""
    rng = RNG(41)
    for _ in range(10):
        m = random_poly_metric_fn(2, rng)(random_small_point(2, rng))
        sc = geo.scalars(m)
        rhs = 2 * sc.s_C + (sc.ddstar_pairing - 2 * sc.delstar_sq) - 0.5 * sc.torsion_sq
        assert abs(sc.s - rhs) / (1 + abs(sc.s)) < 1e-12


def test_scalar_identity_lc_vs_chern():
    """s_LC = s_C − ½⟨∂∂*ω + ∂̄∂̄*ω, ω⟩ = s_C − ⟨∂∂*ω, ω⟩ (real part pairing)."""
    rng = RNG(43)
    for _ in range(10):
        m = random_poly_metric_fn(2, rng)(random_small_point(2, rng))
        sc = geo.scalars(m)
        assert abs(sc.s_LC - (sc.s_C - 0.5 * sc.ddstar_pairing)) < 1e-12 * (1 + abs(sc.s_LC))
        # the half-sum pairing is twice the real part of the holomorphic half
        assert abs(sc.ddstar_pairing - 2 * sc.ddstar_hol_pairing.real) < 1e-12


def test_scalars_are_real():
    rng = RNG(47)
    m = random_poly_metric_fn(2, rng)(random_small_point(2, rng))
    sc = geo.scalars(m)
    for v in (sc.s_C, sc.s_LC, sc.s, sc.torsion_sq, sc.delstar_sq, sc.ddstar_pairing):
        assert isinstance(v, float)
    assert sc.delstar_sq >= 0
    assert sc.torsion_sq >= 0


# -- adjoint forms -----------------------------------------------------------------


def test_del_star_pair_is_mutually_conjugate():
    rng = RNG(53)
    m = random_poly_metric_fn(2, rng)(random_small_point(2, rng))
    a01, a10 = geo.del_star(m)
    assert np.max(np.abs(a10.values - a01.values.conj())) < 1e-14


def test_d_del_star_matches_finite_differences_across_points():
    """∂_i of the connection trace, recomputed by re-jetting at shifted points."""
    rng = RNG(59)
    metric_at = random_poly_metric_fn(2, rng)
    pt = random_small_point(2, rng)
    n = 2

    def traces_at(p):
        a01, _ = geo.del_star(metric_at(p))
        return a01.values / (-2j)  # Γ^k_{j̄k} values

    h = 1e-5
    A1_fd = np.empty((n, n), dtype=complex)
    for i in range(n):
        ex = np.zeros(n, dtype=complex)
        ex[i] = h
        ey = np.zeros(n, dtype=complex)
        ey[i] = 1j * h
        dx = (traces_at(tuple(np.array(pt) + ex)) - traces_at(tuple(np.array(pt) - ex))) / (2 * h)
        dy = (traces_at(tuple(np.array(pt) + ey)) - traces_at(tuple(np.array(pt) - ey))) / (2 * h)
        A1_fd[i, :] = -2.0 * 0.5 * (dx - 1j * dy)  # −2 ∂_{z^i} Γ^k_{j̄k}

    A1, A2 = geo.d_del_star_parts(metric_at(pt))
    scale = 1 + np.max(np.abs(A1.A))
    assert np.max(np.abs(A1.A - A1_fd)) / scale < 1e-8
    assert np.max(np.abs(A2.A - A1.A.conj().T)) < 1e-14


# -- validation and debug hooks ------------------------------------------------------


def test_non_hermitian_metric_rejected():
    def fn(z, zb):
        return [
            [jet_const(1.0, 2), jet_const(0.5j, 2)],
            [jet_const(0.5j, 2), jet_const(1.0, 2)],  # should be −0.5j
        ]

    m = metric_from_fn(2, fn, (0.1, 0.2))
    with pytest.raises(ValueError, match="Hermitian"):
        geo.chern_ricci(m)


def test_non_positive_definite_metric_rejected():
    def fn(z, zb):
        return [
            [jet_const(1.0, 2), jet_const(2.0, 2)],
            [jet_const(2.0, 2), jet_const(1.0, 2)],
        ]

    m = metric_from_fn(2, fn, (0.0, 0.0))
    with pytest.raises(ValueError, match="positive definite"):
        geo.christoffels(m)


def test_hermitian_jet_residual_detects_jet_level_mismatch():
    def fn(z, zb):
        h = [[jet_const(1.0 if i == j else 0.0, 2) for j in range(2)] for i in range(2)]
        h[0][1] = 0.1 * z[0]
        h[1][0] = 0.1 * zb[0] + 0.05 * z[1]  # not conj(h[0][1])
        return h

    m = metric_from_fn(2, fn, (0.2, 0.3))
    assert m.hermitian_jet_residual() > 0.04

    def fn_good(z, zb):
        h = [[jet_const(1.0 if i == j else 0.0, 2) for j in range(2)] for i in range(2)]
        h[0][1] = 0.1 * z[0]
        h[1][0] = conj(h[0][1])
        return h

    assert metric_from_fn(2, fn_good, (0.2, 0.3)).hermitian_jet_residual() == 0.0


def test_debug_corruption_breaks_two_path_agreement_and_restores():
    rng = RNG(61)
    m = random_poly_metric_fn(2, rng)(random_small_point(2, rng))
    with geo.debug_corruption():
        bad = np.max(np.abs(geo.lc_ricci(m).A - geo.lc_ricci_via_relation(m).A))
    good = np.max(np.abs(geo.lc_ricci(m).A - geo.lc_ricci_via_relation(m).A))
    assert bad > 1e-3
    assert good < 1e-12
