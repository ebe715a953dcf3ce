import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spde2d import (
    ConfigurationError,
    NoiseSpec,
    SpdeParams,
    eigenfunction_at,
    eigenvalue,
    initial_coefficient,
    inner_product,
    mu_value,
    noise_damping,
    polynomial_initial_field,
    single_mode_initial_field,
    theta0_from_lambda,
)
from spde2d.model import InitialField, initial_coefficient_table, validate_initial_field

PI2 = math.pi**2


class TestSpdeParams:
    def test_rejects_nonpositive_theta2(self):
        with pytest.raises(ConfigurationError):
            SpdeParams(0.0, 0.0, 0.0, -1.0)
        with pytest.raises(ConfigurationError):
            SpdeParams(0.0, 0.0, 0.0, 0.0)

    def test_rejects_nonpositive_lambda11(self):
        # lambda11 = -theta0 + 2 pi^2 theta2; theta0 too large kills positivity
        with pytest.raises(ConfigurationError):
            SpdeParams(2.0 * PI2 + 1.0, 0.0, 0.0, 1.0)


class TestEigenvalue:
    def test_paper_value_near_zero(self):
        lam = eigenvalue(SpdeParams(2, 0.1, 0.1, 0.1), (1, 1))
        assert 0.0 <= lam <= 0.05
        assert lam == pytest.approx(0.0239208, abs=1e-6)

    def test_paper_value_2_07(self):
        lam = eigenvalue(SpdeParams(4, 0.3, 0.3, 0.3), (1, 1))
        assert lam == pytest.approx(2.07, abs=0.005)

    def test_pure_laplacian(self):
        p = SpdeParams(0, 0, 0, 1)
        for k, l in ((1, 1), (2, 3), (4, 1)):
            assert eigenvalue(p, (k, l)) == pytest.approx(PI2 * (k * k + l * l), rel=1e-14)

    def test_monotone_along_k2_plus_l2(self):
        p = SpdeParams(1.0, 0.5, -0.3, 0.7)
        idx = [(k, l) for k in range(1, 6) for l in range(1, 6)]
        idx.sort(key=lambda kl: kl[0] ** 2 + kl[1] ** 2)
        vals = [eigenvalue(p, kl) for kl in idx]
        r2 = [kl[0] ** 2 + kl[1] ** 2 for kl in idx]
        for (v0, r0), (v1, r1) in zip(zip(vals, r2), zip(vals[1:], r2[1:])):
            if r1 > r0:
                assert v1 > v0

    def test_bad_index(self):
        with pytest.raises(ConfigurationError):
            eigenvalue(SpdeParams(0, 0, 0, 1), (0, 1))


class TestEigenfunction:
    def test_boundary_zero(self):
        p = SpdeParams(1, 0.4, 0.2, 0.5)
        assert eigenfunction_at(p, (2, 3), 0.0, 0.3) == 0.0
        assert eigenfunction_at(p, (2, 3), 0.7, 0.0) == pytest.approx(0.0, abs=1e-12)

    def test_unit_params_center(self):
        assert eigenfunction_at(SpdeParams(0, 0, 0, 1), (1, 1), 0.5, 0.5) == pytest.approx(2.0)

    def test_tilted_center(self):
        # 2 e^{-1/2}; cross-checked against a 30-digit mpmath evaluation
        val = eigenfunction_at(SpdeParams(4, 0.3, 0.3, 0.3), (1, 1), 0.5, 0.5)
        assert val == pytest.approx(1.2130613194252668, rel=1e-13)

    def test_finite_difference_eigen_relation(self):
        # -[theta2 (dyy+dzz) + theta1 dy + eta1 dz + theta0] e = lambda e, O(h^2)
        p = SpdeParams(1.0, 0.4, -0.2, 0.6)
        pts = [(0.31, 0.47), (0.52, 0.64), (0.73, 0.29)]
        for idx in ((1, 1), (2, 3), (3, 2)):
            lam = eigenvalue(p, idx)
            errs = []
            for h in (1e-3, 5e-4):
                worst = 0.0
                for y, z in pts:
                    e = lambda yy, zz: eigenfunction_at(p, idx, yy, zz)
                    dyy = (e(y + h, z) - 2 * e(y, z) + e(y - h, z)) / h**2
                    dzz = (e(y, z + h) - 2 * e(y, z) + e(y, z - h)) / h**2
                    dy = (e(y + h, z) - e(y - h, z)) / (2 * h)
                    dz = (e(y, z + h) - e(y, z - h)) / (2 * h)
                    ae = -(p.theta2 * (dyy + dzz) + p.theta1 * dy + p.eta1 * dz + p.theta0 * e(y, z))
                    worst = max(worst, abs(ae - lam * e(y, z)) / max(abs(lam * e(y, z)), 1e-12))
                errs.append(worst)
            assert errs[0] < 1e-4
            # halving h shrinks the defect at second order (allow slack)
            assert errs[1] < errs[0] / 2.5


class TestNoise:
    def test_mu_values(self):
        assert mu_value(NoiseSpec("Q2", 0.5, 0.0), (1, 1)) == pytest.approx(2 * PI2, rel=1e-14)
        assert mu_value(NoiseSpec("Q2", 0.5, 1.0), (2, 1)) == pytest.approx(5 * PI2 + 1, rel=1e-14)
        val = mu_value(NoiseSpec("Q2", 0.5, -19.0), (1, 1))
        assert val == pytest.approx(2 * PI2 - 19.0, rel=1e-12)
        assert val > 0

    def test_mu_on_q1_is_error(self):
        with pytest.raises(ConfigurationError):
            mu_value(NoiseSpec("Q1", 0.5), (1, 1))

    def test_mu0_lower_bound(self):
        with pytest.raises(ConfigurationError):
            NoiseSpec("Q2", 0.5, -2 * PI2)

    def test_alpha_open_interval(self):
        for bad in (0.0, 1.0, -0.1, 1.5):
            with pytest.raises(ConfigurationError):
                NoiseSpec("Q1", bad)

    def test_damping_small_alpha_limit(self):
        p = SpdeParams(0, 0, 0, 1)
        assert noise_damping(NoiseSpec("Q1", 1e-9), p, (3, 2)) == pytest.approx(1.0, abs=1e-7)

    def test_damping_q1_power(self):
        # theta2 chosen so lambda_{1,1} = 4 exactly
        p = SpdeParams(0, 0, 0, 2.0 / PI2)
        assert eigenvalue(p, (1, 1)) == pytest.approx(4.0, rel=1e-14)
        assert noise_damping(NoiseSpec("Q1", 0.5), p, (1, 1)) == pytest.approx(4 ** -0.25, rel=1e-12)

    def test_damping_q2_power(self):
        p = SpdeParams(0, 0, 0, 1)
        val = noise_damping(NoiseSpec("Q2", 0.5, 0.0), p, (1, 1))
        assert val == pytest.approx((2 * PI2) ** -0.25, rel=1e-12)
        assert val == pytest.approx(0.4744, abs=5e-5)


class TestInnerProduct:
    def test_orthonormality_over_parameter_grid(self):
        params = [SpdeParams(0, 0, 0, 1), SpdeParams(1, 0.5, 0.2, 0.4),
                  SpdeParams(-1, -0.6, 0.8, 1.3)]
        idx = [(k, l) for k in range(1, 5) for l in range(1, 5)]
        for p in params:
            for a in idx:
                for b in idx:
                    ip = inner_product(p, lambda y, z: eigenfunction_at(p, a, y, z),
                                       lambda y, z: eigenfunction_at(p, b, y, z))
                    target = 1.0 if a == b else 0.0
                    assert abs(ip - target) < 1e-8, (p, a, b, ip)

    def test_poly_against_adaptive_quadrature_oracle(self):
        # 960/pi^6 for <30 y(1-y) z(1-z), e_{1,1}> at unit parameters
        p = SpdeParams(0, 0, 0, 1)
        xi = polynomial_initial_field()
        val = inner_product(p, xi.evaluator, lambda y, z: eigenfunction_at(p, (1, 1), y, z))
        assert val == pytest.approx(960 / math.pi**6, rel=1e-12)

    def test_nonfinite_integrand(self):
        p = SpdeParams(0, 0, 0, 1)
        with pytest.raises(ArithmeticError):
            inner_product(p, lambda y, z: 1.0 / (y - y), lambda y, z: np.ones_like(y))


class TestInitialCoefficients:
    def test_zero_field(self):
        p = SpdeParams(0, 0, 0, 1)
        xi = InitialField(lambda y, z: np.zeros_like(np.asarray(y)), "zero")
        for idx in ((1, 1), (2, 2)):
            assert initial_coefficient(p, xi, idx) == pytest.approx(0.0, abs=1e-14)

    def test_single_mode_orthonormality(self):
        p = SpdeParams(1.0, 0.3, -0.2, 0.5)
        xi = single_mode_initial_field(p, 1.0)
        assert initial_coefficient(p, xi, (1, 1)) == pytest.approx(1.0, rel=1e-10)
        for idx in ((1, 2), (2, 1), (3, 3)):
            assert abs(initial_coefficient(p, xi, idx)) < 1e-10

    def test_poly_coefficient(self):
        p = SpdeParams(0, 0, 0, 1)
        coef = initial_coefficient(p, polynomial_initial_field(), (1, 1))
        assert coef == pytest.approx(0.99855, abs=1e-5)

    def test_table_matches_scalar_op(self):
        p = SpdeParams(2.0, 0.4, 0.1, 0.3)
        xi = polynomial_initial_field()
        table = initial_coefficient_table(p, xi, 4)
        for k in range(1, 5):
            for l in range(1, 5):
                assert table[k - 1, l - 1] == pytest.approx(
                    initial_coefficient(p, xi, (k, l), order=96), rel=1e-9, abs=1e-12)

    def test_validation_boundary(self):
        p = SpdeParams(0, 0, 0, 1)
        bad = InitialField(lambda y, z: np.ones_like(np.asarray(y, dtype=float)), "ones")
        with pytest.raises(ConfigurationError):
            validate_initial_field(p, bad)

    def test_validation_a1_coefficient(self):
        # e_{2,1} is orthogonal to e_{1,1}: violates the nonzero-projection assumption
        p = SpdeParams(0, 0, 0, 1)
        bad = InitialField(lambda y, z: eigenfunction_at(p, (2, 1), y, z), "e21")
        with pytest.raises(ConfigurationError):
            validate_initial_field(p, bad)


class TestTheta0Recovery:
    def test_inverse_identity(self):
        p = SpdeParams(4, 0.3, 0.3, 0.3)
        lam = eigenvalue(p, (1, 1))
        assert theta0_from_lambda(lam, 0.3, 0.3, 0.3) == pytest.approx(4.0, rel=1e-14)

    def test_trivial_zero(self):
        assert theta0_from_lambda(2 * PI2, 0.0, 0.0, 1.0) == pytest.approx(0.0, abs=1e-12)

    def test_arithmetic_oracle(self):
        val = theta0_from_lambda(1.0, 0.2, 0.2, 0.5)
        assert val == pytest.approx(-1.0 + 0.08 / 2.0 + 2 * PI2 * 0.5, rel=1e-14)
        assert val == pytest.approx(8.9096, abs=5e-5)

    def test_round_trip_1000_random(self):
        rng = np.random.default_rng(20240811)
        n = 0
        while n < 1000:
            theta0 = rng.uniform(-5, 5)
            theta1 = rng.uniform(-2, 2)
            eta1 = rng.uniform(-2, 2)
            theta2 = rng.uniform(0.05, 3.0)
            try:
                p = SpdeParams(theta0, theta1, eta1, theta2)
            except ConfigurationError:
                continue
            lam = eigenvalue(p, (1, 1))
            back = theta0_from_lambda(lam, theta1, eta1, theta2)
            assert back == pytest.approx(theta0, rel=1e-12, abs=1e-12)
            n += 1

    @given(theta1=st.floats(-2, 2), eta1=st.floats(-2, 2),
           theta2=st.floats(0.05, 3.0), lam=st.floats(0.01, 50.0))
    @settings(max_examples=200, deadline=None)
    def test_forward_backward_property(self, theta1, eta1, theta2, lam):
        theta0 = theta0_from_lambda(lam, theta1, eta1, theta2)
        recomputed = -theta0 + (theta1**2 + eta1**2) / (4 * theta2) + 2 * PI2 * theta2
        assert recomputed == pytest.approx(lam, rel=1e-10, abs=1e-10)
