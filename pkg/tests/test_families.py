from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from threebody_fe.elliptic import WeierstrassParams
from threebody_fe.families import (
    DegenerateParams,
    EllipticTriadParams,
    EntireFamilyParams,
    PolynomialFamilyParams,
    SymmetryParams,
    make_degenerate_solution,
    make_elliptic_solution,
    make_entire_solution,
    make_identical_solution,
    make_polynomial_solution,
    polynomial_shifts,
    symmetry_transform,
)

from conftest import disc_point

small = st.floats(-1.0, 1.0, allow_nan=False)


def random_pairs(rng, n=200, half=2.0):
    x = rng.uniform(-half, half, n) + 1j * rng.uniform(-half, half, n)
    y = rng.uniform(-half, half, n) + 1j * rng.uniform(-half, half, n)
    return x, y


def max_fe(s, x, y):
    return float(np.nanmax(s.fe_residual(x, y)))


def random_elliptic(rng, beta=None):
    return EllipticTriadParams(
        alpha=disc_point(rng, 1.5), beta=disc_point(rng) if beta is None else beta,
        gamma1=disc_point(rng), gamma2=disc_point(rng), gamma3=disc_point(rng),
        a1=disc_point(rng, 0.5), a2=disc_point(rng, 0.5),
        weier=WeierstrassParams(disc_point(rng), disc_point(rng)),
    )


class TestElliptic:
    def test_rational_point(self):
        s = make_elliptic_solution(EllipticTriadParams(alpha=1, weier=WeierstrassParams(0, 0)))
        assert s.fe_residual(0.3, 0.4) < 1e-12
        assert s.f(0.5) == pytest.approx(2.0)

    def test_beta_drops_out(self):
        base = dict(alpha=1, weier=WeierstrassParams(0, 0))
        for beta in (0.0, 2.5, -1 + 3j):
            s = make_elliptic_solution(EllipticTriadParams(beta=beta, **base))
            assert s.fe_residual(0.3, 0.4) < 1e-12

    def test_shift_constraint(self):
        p = EllipticTriadParams(a1=0.3 + 0.1j, a2=-0.7)
        assert p.a1 + p.a2 + p.a3 == 0

    def test_random_parameters(self, rng):
        x, y = random_pairs(rng)
        for _ in range(10):
            assert max_fe(make_elliptic_solution(random_elliptic(rng)), x, y) <= 1e-8

    def test_beta_independence_of_defect(self, rng):
        p = random_elliptic(rng, beta=0.0)
        q = EllipticTriadParams(**{**{k: getattr(p, k) for k in
                                      ("alpha", "gamma1", "gamma2", "gamma3", "a1", "a2", "weier")}, "beta": 1.7 - 0.4j})
        x, y = random_pairs(rng, 50, 1.0)
        d1 = [s.fe_terms(x, y) for s in (make_elliptic_solution(p), make_elliptic_solution(q))]
        defect = [t[1] - t[0] for t in d1]
        assert np.nanmax(np.abs(defect[0] - defect[1]) / (1 + d1[0][2])) <= 1e-12

    def test_derivatives_match_finite_differences(self, rng):
        s = make_elliptic_solution(random_elliptic(rng))
        h = 1e-5
        x = np.array([0.7 + 0.2j, -0.4 + 0.9j, 1.1 - 0.3j])
        for fn, d1, d2 in zip(s.small, s.first, s.second):
            fd1 = (fn(x + h) - fn(x - h)) / (2 * h)
            fd2 = (d1(x + h) - d1(x - h)) / (2 * h)
            assert np.max(np.abs(fd1 - d1(x)) / (1 + np.abs(d1(x)))) <= 1e-5
            assert np.max(np.abs(fd2 - d2(x)) / (1 + np.abs(d2(x)))) <= 1e-5

    def test_antiderivative(self, rng):
        s = make_elliptic_solution(random_elliptic(rng))
        h = 1e-5
        x = np.array([0.6 + 0.3j, -0.8 + 0.5j])
        for P, fn in zip(s.antiderivatives, s.small):
            fd = (P(x + h) - P(x - h)) / (2 * h)
            assert np.max(np.abs(fd - fn(x)) / (1 + np.abs(fn(x)))) <= 1e-6


class TestEntire:
    def test_gamma_zero_forms_coincide(self):
        p = EntireFamilyParams(1.0, 0.5, -0.3, 0.8, 0.2)
        a, b = make_entire_solution(p), make_entire_solution(p, literal=True)
        x = np.linspace(-1, 1, 7)
        assert np.allclose(a.F(x), b.F(x), atol=1e-14)
        assert a.fe_residual(0.3, -0.2) < 1e-12

    def test_corrected_form_solves(self, rng):
        p = EntireFamilyParams(disc_point(rng), disc_point(rng), disc_point(rng), 0.7 + 0.2j, 0.3,
                               0.4, -0.2j, 0.5)
        x, y = random_pairs(rng, 200, 1.0)
        assert max_fe(make_entire_solution(p), x, y) <= 1e-12

    def test_literal_mismatch_term(self):
        p = EntireFamilyParams(1, 1, 1, 1, 0, 1, 0, 0)
        s = make_entire_solution(p, literal=True)
        x = y = 0.1
        lhs, rhs, _ = s.fe_terms(x, y)
        e = sum(math.exp(v) for v in (x, y, -x - y))
        expected = 2 * (1 - 1 / math.sqrt(3)) * e
        assert abs(lhs - rhs) == pytest.approx(expected, rel=1e-12)
        assert abs(lhs - rhs) > 0.5

    def test_lambda_zero_rejected(self):
        with pytest.raises(ValueError):
            EntireFamilyParams(lam=0)


class TestPolynomial:
    def test_pure_quadratic(self, rng):
        s = make_polynomial_solution(PolynomialFamilyParams(alpha=0.7))
        x, y = random_pairs(rng, 100, 2.0)
        assert max_fe(s, x, y) < 1e-12

    def test_equal_betas_force_zero_shifts(self):
        a1, a2, a3, _ = polynomial_shifts(PolynomialFamilyParams(alpha=2, beta1=0.3, beta2=0.3, beta3=0.3))
        assert a1 == a2 == a3 == 0

    def test_corrected_shift_formula(self, rng):
        p = PolynomialFamilyParams(alpha=0.8 - 0.1j, beta1=0.3, beta2=-0.5j, beta3=0.9,
                                   gamma1=0.2, gamma2=0.1j, gamma3=-0.4)
        x, y = random_pairs(rng, 200, 1.5)
        assert max_fe(make_polynomial_solution(p), x, y) <= 1e-10
        assert max_fe(make_polynomial_solution(p, literal=True), x, y) > 1e-3

    def test_alpha_zero_rejected(self):
        with pytest.raises(ValueError):
            PolynomialFamilyParams(alpha=0)

    @given(small, small, small, small, small, small, st.floats(0.2, 2.0))
    def test_property_random(self, b1, b2, b3, g1, g2, g3, al):
        s = make_polynomial_solution(PolynomialFamilyParams(al, b1, b2, b3, g1, g2, g3))
        x = np.array([0.3, -1.2 + 0.4j, 0.9j])
        y = np.array([-0.7, 0.5, 1.1 - 0.2j])
        assert max_fe(s, x, y) <= 1e-10


class TestDegenerate:
    def test_case1_equal_slopes(self, rng):
        s = make_degenerate_solution(DegenerateParams(1, f0=0.3, f1=0.5, g0=-0.1, g1=0.5, h0=0.2, h1=0.5, b=0.4))
        x, y = random_pairs(rng)
        assert max_fe(s, x, y) < 1e-13

    def test_case1_general(self, rng):
        s = make_degenerate_solution(DegenerateParams(1, f0=0.3, f1=0.5j, g0=-0.1, g1=1.2, h0=0.2, h1=-0.7,
                                                      b=0.4, F0=0.3, G0=-0.2))
        x, y = random_pairs(rng)
        assert max_fe(s, x, y) <= 1e-10

    def test_case2_sin(self, rng):
        s = make_degenerate_solution(DegenerateParams(2, g0=0.3, h0=-0.1, a=0.6, b=0.2, G0=0.5, H0=0.1,
                                                      f=np.sin, df=np.cos, d2f=lambda x: -np.sin(x)))
        x, y = random_pairs(rng)
        assert max_fe(s, x, y) < 1e-11

    def test_case3(self, rng):
        s = make_degenerate_solution(DegenerateParams(3, a=0.3, b=0.2, c1=0.7, c2=-0.4j, lam=0.9,
                                                      f0=0.1, g0=0.2, h0=0.3, F0=0.5, G0=-0.2))
        x, y = random_pairs(rng)
        assert max_fe(s, x, y) <= 1e-10

    def test_case3_reduces_to_case1(self, rng):
        s = make_degenerate_solution(DegenerateParams(3, a=0.3, b=0.2, lam=0.9, f0=0.1, g0=0.2, h0=0.3))
        x, y = random_pairs(rng)
        assert max_fe(s, x, y) < 1e-13

    def test_constraints(self):
        with pytest.raises(ValueError):
            DegenerateParams(1, f0=1, g0=1, h0=1, c=2)
        with pytest.raises(ValueError):
            DegenerateParams(2)
        with pytest.raises(ValueError):
            DegenerateParams(4)
        p = DegenerateParams(3, f0=1, g0=1, h0=1, F0=2, G0=3, lam=1)
        assert p.F0 + p.G0 + p.H0 == pytest.approx(p.c**2)


class TestIdentical:
    def test_rational_oracle(self):
        sol = make_identical_solution(1, 0, WeierstrassParams(0, 0))
        assert sol.product_sum(1.0, 1.0) == pytest.approx(0.0, abs=1e-15)
        assert sol.residual(1.0, 1.0) < 1e-12
        # f = 1/x has F = 0 exactly
        assert abs(sol.F(0.7)) < 1e-14

    def test_odd(self, rng):
        sol = make_identical_solution(disc_point(rng), disc_point(rng), WeierstrassParams(0.4, -0.2j))
        x = np.array([0.3 + 0.2j, -1.1, 0.8j])
        assert np.max(np.abs(sol.f(x) + sol.f(-x))) <= 1e-13

    def test_random(self, rng):
        for _ in range(5):
            sol = make_identical_solution(disc_point(rng, 2), disc_point(rng),
                                          WeierstrassParams(disc_point(rng), disc_point(rng)))
            x, y = random_pairs(rng, 100, 1.0)
            r = sol.residual(x, y) / (1 + np.abs(sol.F(x)) + np.abs(sol.F(y)) + np.abs(sol.F(-x - y)))
            assert np.nanmax(r) <= 1e-8

    def test_adding_constant_breaks_oddness(self):
        sol = make_identical_solution(1, 0, WeierstrassParams(0, 0))
        f = lambda x: sol.f(x) + 0.5
        x, y = 0.4, 0.7
        z = -x - y
        lhs = f(x) * f(y) + f(y) * f(z) + f(z) * f(x)
        assert abs(lhs - (sol.F(x) + sol.F(y) + sol.F(z))) > 1e-3

    def test_as_triple(self):
        s = make_identical_solution(1.3, 0.2, WeierstrassParams(0.2, 0.1)).as_triple()
        assert s.fe_residual(0.3, 0.5) < 1e-12


class TestSymmetry:
    base = make_elliptic_solution(EllipticTriadParams(alpha=0.9, beta=0.2, gamma1=0.3, gamma2=-0.1, a1=0.2,
                                                      a2=-0.3j, weier=WeierstrassParams(0.5, 0.2j)))

    def test_identity(self):
        out = symmetry_transform(self.base, SymmetryParams())
        x = np.array([0.4, 0.3 + 0.6j])
        for a, b in zip(out.small + out.big, self.base.small + self.base.big):
            assert np.array_equal(a(x), b(x))

    def test_pure_shift(self, rng):
        x, y = random_pairs(rng, 200, 1.5)
        before = max_fe(self.base, x, y)
        after = max_fe(symmetry_transform(self.base, SymmetryParams(s1=0.3, s2=-0.3)), x, y)
        assert after < max(1.1 * before, 1e-13)

    def test_scaling(self, rng):
        x, y = random_pairs(rng, 200, 1.5)
        assert max_fe(symmetry_transform(self.base, SymmetryParams(a2=2)), x, y) < 1e-8

    def test_general_transform_is_solution(self, rng):
        q = SymmetryParams(a1=0.3, a2=1.5 - 0.2j, a3=0.8, a4=0.4, c=0.6, f0=0.1, g0=0.2, h0=0.3,
                           F0=0.1, G0=0.16, H0=0.1, s1=0.2, s2=0.1j, s3=-0.2 - 0.1j)
        x, y = random_pairs(rng, 200, 1.5)
        assert max_fe(symmetry_transform(self.base, q), x, y) < 1e-8

    def test_constraints(self):
        with pytest.raises(ValueError):
            SymmetryParams(a3=0)
        with pytest.raises(ValueError):
            SymmetryParams(c=1, f0=0.5)
        with pytest.raises(ValueError):
            SymmetryParams(s1=0.1)

    def test_composition(self):
        p1 = SymmetryParams(a1=0.3, a2=1.5, a3=0.8, a4=0.4, c=0.6, f0=0.1, g0=0.2, h0=0.3,
                            F0=0.1, G0=0.16, H0=0.1, s1=0.2, s2=0.1, s3=-0.3)
        p2 = SymmetryParams(a1=-0.2, a2=0.7j, a3=1.1, a4=0.2, c=0.5, f0=0.5, g0=0, h0=0,
                            F0=0.2, G0=0.05, H0=0, s1=-0.1, s2=0.05j, s3=0.1 - 0.05j)
        twice = symmetry_transform(symmetry_transform(self.base, p1), p2)
        once = symmetry_transform(self.base, p1.then(p2))
        x = np.array([0.45 + 0.1j, -0.7 + 0.4j, 0.9])
        for a, b in zip(twice.small + twice.big, once.small + once.big):
            assert np.max(np.abs(a(x) - b(x)) / (1 + np.abs(a(x)))) <= 1e-12
