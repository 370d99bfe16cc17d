import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import roughfrac as rf

TWO_PI = 2.0 * math.pi


def brute_force_modulus(k, q, t, n_dirs=128, n_mags=12, n_sphere=2048):
    """Independent dense-grid oracle for the continuity modulus."""
    theta = (np.arange(n_sphere) + 0.5) * (TWO_PI / n_sphere)
    base = rf.eval_kernel_angle(k, theta)
    best = 0.0
    for phi in np.arange(n_dirs) * (TWO_PI / n_dirs):
        for m in t * (np.arange(1, n_mags + 1) / n_mags):
            px = np.cos(theta) + m * math.cos(phi)
            py = np.sin(theta) + m * math.sin(phi)
            vals = rf.eval_kernel_angle(k, np.arctan2(py, px))
            best = max(best, float(np.mean(np.abs(vals - base) ** q)) * TWO_PI)
    return best ** (1.0 / q)


class TestEval:
    def test_sign_kernel(self):
        assert rf.eval_kernel(rf.pair_kernel(-1, 1), 3.7) == 1.0

    def test_cos_on_axis(self):
        assert rf.eval_kernel(rf.cos_kernel(0, 1, 1), (0.0, 5.0)) == pytest.approx(0.0, abs=1e-15)

    def test_cos_diagonal(self):
        val = rf.eval_kernel(rf.cos_kernel(0, 1, 1), (1.0, 1.0))
        assert val == pytest.approx(math.cos(math.pi / 4), abs=1e-12)

    def test_zero_vector_rejected(self):
        with pytest.raises(rf.DomainError):
            rf.eval_kernel(rf.pair_kernel(1, 1), 0.0)
        with pytest.raises(rf.DomainError):
            rf.eval_kernel(rf.const_kernel(1.0), (0.0, 0.0))

    def test_homogeneity_dyadic_exact(self):
        rng = np.random.default_rng(11)
        kernels = [rf.pair_kernel(-2, 3), rf.const_kernel(1.5),
                   rf.cos_kernel(2, 1, 3), rf.sign_cos_kernel(),
                   rf.table_kernel(rng.normal(size=64))]
        for k in kernels:
            for _ in range(100):
                if k.dim == 1:
                    x = rng.normal() or 1.0
                else:
                    x = rng.normal(size=2)
                    if np.hypot(*x) == 0:
                        continue
                for c in (0.5, 2.0):
                    assert rf.eval_kernel(k, c * np.asarray(x)) == rf.eval_kernel(k, x)

    def test_homogeneity_non_dyadic(self):
        # scaling by 10 rounds the coordinates before evaluation, so the
        # locally constant kinds stay bitwise equal and the smooth kinds
        # agree to a few ulp
        rng = np.random.default_rng(12)
        for _ in range(100):
            x = rng.normal(size=2)
            assert rf.eval_kernel(rf.sign_cos_kernel(), 10.0 * x) == \
                rf.eval_kernel(rf.sign_cos_kernel(), x)
            a = rf.eval_kernel(rf.cos_kernel(2, 1, 1), 10.0 * x)
            b = rf.eval_kernel(rf.cos_kernel(2, 1, 1), x)
            assert a == pytest.approx(b, rel=1e-14)


class TestSphereNorm:
    def test_two_point(self):
        assert rf.sphere_norm(rf.pair_kernel(1, -1), 2) == pytest.approx(math.sqrt(2), rel=1e-14)

    def test_const_circle(self):
        assert rf.sphere_norm(rf.const_kernel(1.0), 2) == pytest.approx(
            math.sqrt(TWO_PI), rel=1e-12)

    def test_cos_circle(self):
        assert rf.sphere_norm(rf.cos_kernel(0, 1, 1), 2) == pytest.approx(
            math.sqrt(math.pi), rel=1e-10)

    def test_fractional_exponent_matches_quadrature(self):
        k = rf.cos_kernel(2, 1, 1)
        q = 4.0 / 3.0
        theta = (np.arange(200000) + 0.5) * (TWO_PI / 200000)
        riemann = (np.mean(np.abs(2 + np.cos(theta)) ** q) * TWO_PI) ** (1 / q)
        assert rf.sphere_norm(k, q) == pytest.approx(riemann, rel=1e-7)

    def test_table_norm(self):
        theta = np.arange(512) * (TWO_PI / 512)
        k = rf.table_kernel(np.cos(theta))
        # ~1e-5 against the smooth function (interpolation bias), and to
        # quadrature accuracy against the interpolant itself
        assert rf.sphere_norm(k, 2) == pytest.approx(math.sqrt(math.pi), rel=1e-4)
        dense = (np.arange(2 ** 21) + 0.5) * (TWO_PI / 2 ** 21)
        riemann = math.sqrt(np.mean(rf.eval_kernel_angle(k, dense) ** 2) * TWO_PI)
        assert rf.sphere_norm(k, 2) == pytest.approx(riemann, rel=1e-8)

    def test_bad_exponent(self):
        with pytest.raises(rf.ParameterError):
            rf.sphere_norm(rf.const_kernel(1.0), 0.5)


class TestTruncate:
    def test_pair_cutoff(self):
        k = rf.truncate_kernel(rf.pair_kernel(3, 1), 2.0)
        assert tuple(k.coeffs) == (0.0, 1.0)

    def test_noop_returns_same_kernel(self):
        k = rf.cos_kernel(0, 2, 1)
        assert rf.truncate_kernel(k, 5.0) is k

    def test_two_cos_level_one(self):
        k = rf.truncate_kernel(rf.cos_kernel(0, 2, 1), 1.0)
        expected = 8.0 * (1.0 - math.sin(math.pi / 3))
        assert rf.sphere_norm(k, 1) == pytest.approx(expected, rel=1e-2)

    def test_norm_monotone_in_level(self):
        k = rf.cos_kernel(0, 2, 1)
        full = rf.sphere_norm(k, 2)
        prev = 0.0
        for level in (0.25, 0.5, 1.0, 1.5, 1.9, 2.0):
            val = rf.sphere_norm(rf.truncate_kernel(k, level), 2)
            assert val >= prev - 1e-9
            prev = val
        assert prev == pytest.approx(full, rel=1e-12)

    def test_bad_level(self):
        with pytest.raises(rf.ParameterError):
            rf.truncate_kernel(rf.const_kernel(1.0), 0.0)


class TestMollify:
    def test_const_unchanged_values(self):
        k = rf.mollify_kernel(rf.const_kernel(3.0), 0.2)
        theta = np.linspace(0, TWO_PI, 50)
        assert np.allclose(rf.eval_kernel_angle(k, theta), 3.0, atol=1e-12)

    def test_cos_shrink_factor(self):
        k = rf.mollify_kernel(rf.cos_kernel(0, 1, 1), 0.1)
        factor = math.sin(0.1) / 0.1
        theta = np.linspace(0, TWO_PI, 37)
        assert np.allclose(rf.eval_kernel_angle(k, theta),
                           factor * np.cos(theta), atol=1e-9)

    def test_sign_cos_distance_decreasing(self):
        k = rf.sign_cos_kernel()
        dists = []
        for eps in (0.4, 0.2, 0.1, 0.05):
            resid = rf.kernel_difference(k, rf.mollify_kernel(k, eps))
            d = rf.sphere_norm(resid, 1)
            # two boundary ramps of width 2*eps: exact distance 2*eps
            assert d == pytest.approx(2.0 * eps, rel=2e-2)
            dists.append(d)
        assert all(a > b for a, b in zip(dists, dists[1:]))

    def test_lipschitz_bound(self):
        for eps in (0.1, 0.3):
            k = rf.mollify_kernel(rf.sign_cos_kernel(), eps)
            lip = rf.lipschitz_estimate(k)
            assert math.isfinite(lip)
            assert lip <= 2.0 * 1.0 / eps * (1 + 1e-6)

    def test_one_dimensional_identity(self):
        k = rf.pair_kernel(2, -1)
        assert rf.mollify_kernel(k, 0.2) is k

    def test_bad_eps(self):
        with pytest.raises(rf.ParameterError):
            rf.mollify_kernel(rf.const_kernel(1.0), 0.0)
        with pytest.raises(rf.ParameterError):
            rf.mollify_kernel(rf.const_kernel(1.0), 1.0)


class TestLipschitz:
    def test_const(self):
        assert rf.lipschitz_estimate(rf.const_kernel(4.0)) == 0.0

    def test_cos(self):
        assert rf.lipschitz_estimate(rf.cos_kernel(0, 1, 1)) == pytest.approx(1.0, rel=0.05)

    def test_jump_flagged_unbounded(self):
        assert rf.lipschitz_estimate(rf.sign_cos_kernel()) == math.inf

    def test_pair_always_finite(self):
        assert rf.lipschitz_estimate(rf.pair_kernel(-3, 5)) == 4.0


class TestDiniModulus:
    def test_const_zero(self):
        assert rf.dini_modulus(rf.const_kernel(2.0), 1, 0.3) == 0.0

    def test_monotone(self):
        k = rf.cos_kernel(0, 1, 1)
        assert rf.dini_modulus(k, 1, 0.05) <= rf.dini_modulus(k, 1, 0.1)

    def test_against_brute_force(self):
        k = rf.cos_kernel(0, 1, 1)
        val = rf.dini_modulus(k, 1, 0.01)
        oracle = brute_force_modulus(k, 1, 0.01)
        assert 0.03 <= val <= 0.09
        assert val == pytest.approx(oracle, rel=0.15)
        # tangential offsets rotate the kernel by about phi = atan(t),
        # for which the circle integral is 8*sin(phi/2)
        rotation_only = 8.0 * math.sin(math.atan(0.01) / 2.0)
        assert val <= rotation_only * 1.05

    def test_one_dimensional_always_zero(self):
        assert rf.dini_modulus(rf.pair_kernel(-7, 3), 2, 0.9) == 0.0

    def test_parameter_errors(self):
        k = rf.const_kernel(1.0)
        with pytest.raises(rf.ParameterError):
            rf.dini_modulus(k, 1, 0.0)
        with pytest.raises(rf.ParameterError):
            rf.dini_modulus(k, 1, 1.0)
        with pytest.raises(rf.ParameterError):
            rf.dini_modulus(k, 0.5, 0.1)

    def test_lipschitz_upper_bound(self):
        # omega_q(t) <= L * t * (1+t) * sigma(S^1)^(1/q) for Lipschitz kernels
        for k in (rf.cos_kernel(0, 1, 1), rf.cos_kernel(2, 1, 2)):
            lip = rf.lipschitz_estimate(k)
            for q in (1.0, 2.0):
                for t in (0.01, 0.1, 0.3):
                    bound = lip * t * (1 + t) * TWO_PI ** (1.0 / q)
                    assert rf.dini_modulus(k, q, t) <= bound * 1.01


class TestDiniIntegral:
    def test_const_satisfies(self):
        rep = rf.dini_integral(rf.const_kernel(1.0), 1, 0.5)
        assert rep.integral_estimate == 0.0
        assert rep.verdict == "satisfies"
        assert all(v == 0.0 for v in rep.omega)

    def test_linear_modulus_s_zero(self):
        rep = rf.dini_integral(rf.const_kernel(1.0), 1, 0.0, omega_fn=lambda t: t)
        assert rep.integral_estimate == pytest.approx(1.0, abs=1e-3)
        assert rep.verdict == "satisfies"

    def test_linear_modulus_s_half(self):
        rep = rf.dini_integral(rf.const_kernel(1.0), 1, 0.5, omega_fn=lambda t: t)
        assert rep.integral_estimate == pytest.approx(2.0, abs=1e-2)

    def test_divergent_flagged(self):
        rep = rf.dini_integral(rf.const_kernel(1.0), 1, 0.5,
                               omega_fn=lambda t: math.sqrt(t))
        assert rep.diverges
        assert rep.verdict == "fails"

    def test_bad_order(self):
        with pytest.raises(rf.ParameterError):
            rf.dini_integral(rf.const_kernel(1.0), 1, 2.5)
        with pytest.raises(rf.ParameterError):
            rf.dini_integral(rf.pair_kernel(1, 1), 1, 1.5)


class TestGrammar:
    def test_forms(self):
        assert rf.parse_kernel("const:2.5", 2).kind == "const"
        assert rf.parse_kernel("cos:2,1,1", 2).kind == "cos"
        assert rf.parse_kernel("sign-cos", 2).kind == "steps"
        assert tuple(rf.parse_kernel("pair:-1,1", 1).coeffs) == (-1.0, 1.0)

    def test_table_file(self, tmp_path):
        path = tmp_path / "k.txt"
        path.write_text("\n".join(str(v) for v in np.cos(
            np.arange(16) * TWO_PI / 16)))
        k = rf.parse_kernel(f"table:{path}", 2)
        assert k.kind == "table" and len(k.coeffs) == 16

    def test_rejects(self):
        with pytest.raises(rf.ParameterError):
            rf.parse_kernel("nope:1", 2)
        with pytest.raises(rf.ParameterError):
            rf.parse_kernel("pair:1,1", 2)
        with pytest.raises(rf.ParameterError):
            rf.table_kernel([1.0, 2.0])


@settings(max_examples=30, deadline=None)
@given(st.floats(min_value=-3, max_value=3, allow_nan=False),
       st.floats(min_value=-3, max_value=3, allow_nan=False),
       st.integers(min_value=1, max_value=4))
def test_arc_integral_matches_quadrature(a, b, freq):
    k = rf.cos_kernel(a, b, freq)
    lo, hi = 0.7, 2.9
    theta = np.linspace(lo, hi, 40001)
    vals = rf.eval_kernel_angle(k, theta)
    assert rf.arc_integral(k, lo, hi) == pytest.approx(
        np.trapezoid(vals, theta), abs=1e-6)
    assert rf.arc_integral(k, lo, hi, absolute=True) == pytest.approx(
        np.trapezoid(np.abs(vals), theta), abs=1e-6)
