import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vstates.closed_forms import QuadratureRule
from vstates.functional import (
    ChordDegeneracyError,
    DegenerateParametrizationError,
    PatchConfig,
    Problem,
    RadiusPositivityError,
    curvature_min,
    default_rule,
    disk_kernel_omega,
    eval_F_disk,
    eval_F_ellipse,
    gateaux_fd,
    integrand_parts,
)
from vstates.linearized import apply_DF, bifurcation_ratio, tri_coeffs
from vstates.series import CosineSeries, project_symmetry
from vstates.special import gamma


def test_patch_config_calpha():
    for a in (0.3, 1.0, 1.7):
        want = gamma(a / 2) / (2 * math.pi * 2 ** (1 - a) * gamma((2 - a) / 2))
        assert PatchConfig("disk", alpha=a).Calpha == pytest.approx(want, rel=1e-13)
    with pytest.raises(ValueError):
        PatchConfig("ellipse", alpha=0.5)
    with pytest.raises(ValueError):
        PatchConfig("annulus")


@pytest.mark.parametrize("r", [0.2, 1 / 3, 0.5, 0.8])
def test_kirchhoff_ellipse_is_a_zero(r):
    res = eval_F_ellipse(r, CosineSeries.zeros(16))
    assert res.sup_norm < 1e-10


def test_residual_sup_norm_consistent():
    # padding to 24 modes leaves room for the frequencies F generates
    res = eval_F_ellipse(0.4, CosineSeries([0.0, 0.01, 0.002]).resize(24))
    assert res.sup_norm == pytest.approx(np.abs(res.samples).max())
    assert np.abs(res.sine_coeffs(res.x) - res.samples).max() < 1e-10 * max(1.0, res.sup_norm)
    d = res.to_dict()
    assert d["type"] == "sin" and d["family"] == "ellipse" and d["collocation_n"] == 72


def test_small_perturbation_follows_linearization():
    eps = 1e-6
    r = 1 / 3
    h = CosineSeries.mode(3, 12)
    res = eval_F_ellipse(r, eps * h).sine_coeffs.coeffs
    assert np.allclose(res, eps * apply_DF(r, h).coeffs, atol=1e-11)


def test_second_mode_diagonal_entry():
    eps = 1e-6
    res = eval_F_ellipse(0.5, eps * CosineSeries.mode(2, 8)).sine_coeffs.coeffs
    assert res[1] == pytest.approx(eps * tri_coeffs(0.5, 8).y[1], abs=1e-11)


@pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0, 1.5])
def test_disk_is_stationary(alpha):
    for omega in (0.0, 0.3, 2.0):
        assert eval_F_disk(omega, CosineSeries.zeros(8), alpha).sup_norm < 1e-10


@pytest.mark.parametrize("m", [2, 3, 4, 5])
def test_disk_threshold_euler(m):
    assert disk_kernel_omega(m, 0.0) == pytest.approx((m - 1) / (2 * m), abs=1e-6)


def test_disk_threshold_sqg():
    assert disk_kernel_omega(2, 1.0) == pytest.approx(2 / (3 * math.pi), abs=1e-6)


def test_disk_threshold_small_perturbation_vanishes():
    eps = 1e-6
    for m in (2, 3):
        res = eval_F_disk((m - 1) / (2 * m), eps * CosineSeries.mode(m, 2 * m)).sine_coeffs.coeffs
        assert abs(res[m - 1]) < 1e-11


@pytest.mark.parametrize("r", [0.3, 0.6])
def test_gateaux_matches_tridiagonal_columns(r):
    P = Problem.ellipse(r)
    zero = CosineSeries.zeros(16)
    for k in (1, 2, 3, 7, 12):
        h = CosineSeries.mode(k, 16)
        assert np.allclose(gateaux_fd(P, zero, h).coeffs, apply_DF(r, h).coeffs, atol=1e-6)


def test_gateaux_linear_in_direction():
    P = Problem.ellipse(0.4)
    R = CosineSeries([0.0, 0.01, 0.003, 0.0, 0.0, 0.0, 0.0, 0.0])
    h1 = CosineSeries.mode(2, 8)
    h2 = CosineSeries.mode(5, 8)
    lhs = gateaux_fd(P, R, 2 * h1 + 3 * h2, 1e-5).coeffs
    rhs = 2 * gateaux_fd(P, R, h1, 1e-5).coeffs + 3 * gateaux_fd(P, R, h2, 1e-5).coeffs
    assert np.allclose(lhs, rhs, atol=1e-8)


def test_gateaux_second_order_in_step():
    r = 0.4
    P = Problem.ellipse(r)
    h = CosineSeries.mode(2, 10)
    exact = apply_DF(r, h).coeffs
    errs = [np.abs(gateaux_fd(P, CosineSeries.zeros(10), h, s).coeffs - exact).max() for s in (8e-3, 4e-3)]
    assert 3.0 < errs[0] / errs[1] < 5.0


def test_gateaux_step_validation():
    with pytest.raises(ValueError):
        gateaux_fd(Problem.ellipse(0.4), CosineSeries.zeros(4), CosineSeries.mode(1, 4), 0.0)


even_shapes = st.lists(st.floats(-0.02, 0.02, allow_nan=False), min_size=6, max_size=6)


@given(even_shapes, st.floats(0.2, 0.8))
def test_symmetry_transport_even_shapes(vals, r):
    # R(x) = R(pi - x) holds for even frequencies; F is then odd about pi/2
    a = np.zeros(12)
    a[1::2] = vals
    res = eval_F_ellipse(r, CosineSeries(a))
    n = res.x.size
    i = np.arange(n)
    mirror = (n // 2 - i) % n
    assert np.allclose(res.samples, -res.samples[mirror], atol=1e-12)
    assert np.abs(res.sine_coeffs.coeffs[0::2]).max() < 1e-12


@given(st.lists(st.floats(-0.05, 0.05, allow_nan=False), min_size=4, max_size=4), st.sampled_from([2, 3, 4]))
def test_disk_m_fold_preserved(vals, m):
    a = np.zeros(4 * m)
    a[m - 1 :: m] = vals
    b = eval_F_disk(0.3, CosineSeries(a)).sine_coeffs.coeffs
    j = np.arange(1, b.size + 1)
    assert np.abs(b[j % m != 0]).max() < 1e-12


@pytest.mark.parametrize(
    "problem",
    [Problem.ellipse(0.4), Problem.disk(0.3, 0.0), Problem.disk(0.3, 0.5), Problem.disk(0.3, 1.5)],
)
def test_quadrature_refinement(problem):
    R = CosineSeries([0.0, 0.03, 0.02, -0.01, 0.005, 0.0, 0.001, 0.0])
    alpha = problem.alpha
    coarse = Problem(problem.family, problem.param, alpha, rule=default_rule(alpha, 1024)).residual(R)
    fine = Problem(problem.family, problem.param, alpha, rule=default_rule(alpha, 2048)).residual(R)
    assert np.abs(coarse.samples - fine.samples).max() < 1e-9


@given(st.lists(st.floats(-1, 1, allow_nan=False), min_size=5, max_size=5), st.floats(0.2, 0.9))
def test_chord_positive_inside_admissibility_radius(vals, r):
    a = np.array(vals)
    j = np.arange(1, 6)
    c1 = np.sum(np.abs(a) * (1 + j))
    if c1 == 0:
        return
    a = a * (min(r, 1.0) / 4) / c1
    x = np.linspace(0, 2 * np.pi, 40, endpoint=False)
    s = np.linspace(-np.pi, np.pi, 41)
    parts = integrand_parts(CosineSeries(a), r, x, s)
    assert parts.A.min() > 0


def test_integrand_parts_relations():
    R = CosineSeries([0.0, 0.05, 0.01])
    x = np.linspace(0, 6, 9)
    s = np.linspace(-3, 3, 13)
    p = integrand_parts(R, 0.5, x, s)
    assert np.allclose(p.A, (p.B**2 + p.C**2) / 4)
    assert np.allclose(p.D, p.D1 + p.D2)


def test_chord_degeneracy():
    r = 0.4
    with pytest.raises(ChordDegeneracyError):
        eval_F_ellipse(r, CosineSeries([-r]))


def test_radius_positivity():
    with pytest.raises(RadiusPositivityError):
        eval_F_disk(0.3, CosineSeries([0.0, -1.5]))


def test_ellipse_domain():
    with pytest.raises(ValueError):
        eval_F_ellipse(1.2, CosineSeries.zeros(4))


def test_curvature_examples():
    assert curvature_min(CosineSeries.zeros(4), 1.0) == pytest.approx(1.0, abs=1e-12)
    assert curvature_min(CosineSeries.zeros(4), 0.5) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(DegenerateParametrizationError):
        curvature_min(CosineSeries([-0.4]), 0.4)


def test_curvature_of_small_kernel_shape_positive():
    from vstates.solver import kernel_direction

    h = kernel_direction("ellipse", 3, 32)
    assert curvature_min(0.01 * h, bifurcation_ratio(3)) > 0
