import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vstates.linearized import (
    K,
    NotARootError,
    RangeConstraintError,
    apply_DF,
    bifurcation_ratio,
    bracket,
    bracket_dr,
    disk_threshold,
    k_growth_limit,
    k_growth_ratio,
    kernel_generator,
    kernel_truncation,
    omega_m,
    preimage,
    transversality_index,
    tri_coeffs,
)
from vstates.series import CosineSeries, SineSeries

# 40-digit bisection with mpmath
R_M = {
    3: 0.33333333333333333333,
    4: 0.21684533543747511672,
    5: 0.16135931629096176517,
    6: 0.12863202076986151613,
    7: 0.10699065541489116698,
    8: 0.091602501546440423408,
    9: 0.080093595935378543395,
    10: 0.071158736603897716372,
    11: 0.064020024686006174044,
    12: 0.058184690519164157879,
}


def test_bracket_values():
    assert bracket(3, 1 / 3) == pytest.approx(0.0, abs=1e-15)
    assert bracket(2, 0.5) == pytest.approx(-0.5, abs=1e-15)
    assert bracket(10, 0.5) == pytest.approx(7.7499618960524310319, rel=1e-14)
    with pytest.raises(ValueError):
        bracket(3, 1.0)


@given(st.floats(0.01, 0.99))
def test_m2_bracket_is_negative(r):
    assert bracket(2, r) == pytest.approx(-2 * (1 - r) ** 2, abs=1e-14)
    assert bracket(2, r) < 0


@given(st.integers(3, 20), st.floats(0.05, 0.95))
def test_bracket_derivative(m, r):
    h = 1e-6
    fd = (bracket(m, r + h) - bracket(m, r - h)) / (2 * h)
    assert bracket_dr(m, r) == pytest.approx(fd, rel=1e-6, abs=1e-6)


@pytest.mark.parametrize("m", sorted(R_M))
def test_bifurcation_ratio_matches_oracle(m):
    assert bifurcation_ratio(m) == pytest.approx(R_M[m], abs=1e-14)


def test_roots_decrease():
    rs = [bifurcation_ratio(m) for m in range(3, 13)]
    assert all(0 < b < a < 1 for a, b in zip(rs, rs[1:]))
    for m, r in zip(range(3, 13), rs):
        assert bracket(m, r - 1e-9) < 0 < bracket(m, r + 1e-9)


def test_bifurcation_ratio_domain():
    with pytest.raises(ValueError):
        bifurcation_ratio(2)


def test_tri_coeffs_structure():
    t = tri_coeffs(1 / 3, 12)
    assert t.y[0] == pytest.approx(-9 / 32, abs=1e-15)
    assert t.K[2] == pytest.approx(0.0, abs=1e-15)
    assert t.x[2] == t.zc[2] == t.K[2]
    ratio = t.y[1:] / t.K[1:]
    mask = np.abs(t.K[1:]) > 1e-12
    assert np.allclose(ratio[mask], -2 * (1 + 1 / 3) / (1 - 1 / 3))


def test_apply_df_first_mode():
    out = apply_DF(1 / 3, CosineSeries.mode(1, 4))
    assert out.coeffs[0] == pytest.approx(-9 / 32)
    assert out.coeffs[2] == pytest.approx(K(3, 1 / 3), abs=1e-16)


vec = st.lists(st.floats(-1, 1, allow_nan=False), min_size=6, max_size=6)


@given(vec, vec, st.floats(-3, 3), st.floats(-3, 3), st.floats(0.05, 0.95))
def test_apply_df_linear(a, b, s, t, r):
    h1, h2 = CosineSeries(a), CosineSeries(b)
    lhs = apply_DF(r, s * h1 + t * h2).coeffs
    rhs = s * apply_DF(r, h1).coeffs + t * apply_DF(r, h2).coeffs
    assert np.allclose(lhs, rhs, atol=1e-12)


@given(vec, st.floats(0.05, 0.95), st.sampled_from([0, 1]))
def test_apply_df_parity_decoupling(a, r, parity):
    c = np.array(a + a)
    j = np.arange(1, c.size + 1)
    c[j % 2 != parity] = 0.0
    out = apply_DF(r, CosineSeries(c)).coeffs
    assert np.all(out[j % 2 != parity] == 0.0)


@pytest.mark.parametrize("m", [3, 4, 5, 6, 10])
def test_kernel_annihilated(m):
    r = bifurcation_ratio(m)
    N = kernel_truncation(m, r)
    h = kernel_generator(m, r, N).as_series(N)
    assert apply_DF(r, h).l2() <= 1e-10 * h.l2()


def test_kernel_truncation_exceeds_four_m_when_needed():
    # the tail lambda_-^(N/2 - k) is what matters; 4m alone is too short for m = 6
    r = bifurcation_ratio(6)
    assert kernel_truncation(6, r) > 24
    h = kernel_generator(6, r, 24).as_series(24)
    assert apply_DF(r, h).l2() > 1e-10 * h.l2()


@pytest.mark.parametrize("m", [3, 4, 5, 6, 7, 8])
def test_kernel_invariants(m):
    r = bifurcation_ratio(m)
    g = kernel_generator(m, r, kernel_truncation(m, r))
    assert g.lambda_plus * g.lambda_minus == pytest.approx(1.0, abs=1e-14)
    assert g.lambda_plus > 1 > g.lambda_minus > 0
    assert g.tail_ratio == pytest.approx(g.lambda_minus, rel=1e-8)
    assert g.mode_class == ("even-frequencies" if m % 2 == 0 else "odd-frequencies")
    assert g.row_defect() != 0


@pytest.mark.parametrize("m", [4, 6, 8])
def test_even_kernel_recurrence(m):
    r = bifurcation_ratio(m)
    g = kernel_generator(m, r, 40)
    c = np.concatenate([[0.0], g.cp, [0.0]])
    z = g.zparam
    k = m // 2
    rows = c[:-2] - 2 * z * c[1:-1] + c[2:]
    for p in range(1, c.size - 2):
        if p != k:
            assert abs(rows[p - 1]) <= 1e-12 * abs(c[p])
    assert g.row_defect() == pytest.approx(g.lambda_plus**k * (g.lambda_minus - g.lambda_plus), rel=1e-12)


def test_kernel_generator_rejects_non_root():
    with pytest.raises(NotARootError):
        kernel_generator(3, 0.3, 40)
    with pytest.raises(ValueError):
        kernel_generator(5, bifurcation_ratio(5), 8)


def test_lambda_example_z_two():
    lp, lm = 2 + math.sqrt(3), 2 - math.sqrt(3)
    assert lp - lm == pytest.approx(2 * math.sqrt(3))
    assert lp**2 - lm**2 == pytest.approx(8 * math.sqrt(3))


@pytest.mark.parametrize("m", [3, 4, 5, 6])
@pytest.mark.parametrize("j", [1, 2, 5, 9])
def test_preimage_roundtrip_unit_modes(m, j):
    r = bifurcation_ratio(m)
    N = 64
    if j == m:
        return
    target = apply_DF(r, CosineSeries.mode(j, N))
    if abs(target.coeffs[m - 1]) > 0:
        # project out the bifurcating row so the target is in the range
        target = SineSeries(np.where(np.arange(1, N + 1) == m, 0.0, target.coeffs))
    h = preimage(r, target, N)
    back = apply_DF(r, h).resize(N - 2).coeffs
    assert np.allclose(back, target.resize(N - 2).coeffs, atol=1e-10)
    assert h.coeffs[m - 1] == 0.0


@given(st.lists(st.floats(-1, 1, allow_nan=False), min_size=10, max_size=10), st.sampled_from([3, 4, 5]))
def test_preimage_roundtrip_random(vals, m):
    r = bifurcation_ratio(m)
    N = 80
    b = np.zeros(N)
    freqs = np.arange(2, 22, 2) if m % 2 == 0 else np.arange(1, 21, 2)
    b[freqs - 1] = vals
    b[m - 1] = 0.0
    h = preimage(r, SineSeries(b), N)
    assert np.allclose(apply_DF(r, h).resize(40).coeffs, b[:40], atol=1e-9)


def test_preimage_zero_and_constraint():
    r = bifurcation_ratio(3)
    assert preimage(r, SineSeries.zeros(16)).l2() == 0.0
    with pytest.raises(RangeConstraintError):
        preimage(r, SineSeries.mode(3, 16))
    with pytest.raises(ValueError):
        preimage(r, SineSeries([1.0, 1.0, 0.0, 0.0]))


def test_omega_m_closed_forms():
    assert omega_m(2, 0.0) == 0.25
    assert omega_m(3, 0.0) == pytest.approx(1 / 3)
    assert omega_m(2, 1.0) == pytest.approx(2 / (3 * math.pi), rel=1e-15)
    assert omega_m(5, 1.0) == pytest.approx(0.50121175729257198, rel=1e-14)
    with pytest.raises(ValueError):
        omega_m(2, 2.0)


# mpmath evaluation of the general Gamma expression
GENERAL = {
    0.25: (-0.24245526034692655, -0.33732905787398477, -0.42270762835325635, -0.49702525667734173),
    0.5: (-0.23517996859695959, -0.34207995432285032, -0.450105203056382, -0.55923888056836131),
    1.5: (-0.1546827007578282, -0.2749914680139168, -0.46661448192406697, -0.81951049196520339),
    1.9: (-0.044892933545404094, -0.087595967893471403, -0.16918201206383275, -0.3609772123009681),
}


@pytest.mark.parametrize("alpha", sorted(GENERAL))
def test_omega_m_general_alpha(alpha):
    for m, want in zip((2, 3, 5, 10), GENERAL[alpha]):
        assert omega_m(m, alpha) == pytest.approx(want, rel=1e-13)
        assert disk_threshold(m, alpha) == pytest.approx(abs(want), rel=1e-13)


def test_general_formula_continuous_in_magnitude_at_sqg():
    for m in (2, 3, 6):
        lo, hi = disk_threshold(m, 1 - 1e-7), disk_threshold(m, 1 + 1e-7)
        assert lo == pytest.approx(omega_m(m, 1.0), rel=1e-6)
        assert hi == pytest.approx(omega_m(m, 1.0), rel=1e-6)


def test_general_formula_sign_at_euler_limit():
    # the Gamma expression tends to -(m-1)/(2m) as alpha -> 0
    assert omega_m(3, 1e-8) == pytest.approx(-1 / 3, rel=1e-6)


@pytest.mark.parametrize("m", [3, 4, 5, 6, 7])
def test_transversality_nonzero_and_stable(m):
    r = bifurcation_ratio(m)
    a = transversality_index(m, r)
    b = transversality_index(m, r, step=5e-7)
    assert abs(a) > 1e-6
    assert a == pytest.approx(b, rel=1e-6)


def test_transversality_frozen():
    assert transversality_index(3, 1 / 3) == pytest.approx(7.4504, rel=1e-4)
    assert transversality_index(4, bifurcation_ratio(4)) == pytest.approx(8.6146, rel=1e-4)


def test_k_growth():
    assert k_growth_limit(1 / 3) == pytest.approx(1 / 32)
    assert k_growth_ratio(3, 1 / 3, 1000) == pytest.approx(0.031166666666666666667, rel=1e-12)
    assert abs(k_growth_ratio(3, 1 / 3, 1000) / k_growth_limit(1 / 3) - 1) < 0.01
    assert math.isfinite(k_growth_ratio(3, 1 / 3, 1))
