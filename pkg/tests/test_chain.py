from __future__ import annotations

import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from threebody_fe.chain import (
    ChainError,
    PhiChain,
    Quadruple,
    StarForms,
    chain_double_star,
    chain_functions,
    compose_group_params,
    group_action_33,
    invariants_from_chain,
    ode40_residual,
    phi_star,
    random_chain,
    solve_alpha_point,
    tau_A_from_u,
    tau_closed_form,
    triad_from_chain,
    u_star,
    xi_eta_gamma_from_phi,
)
from threebody_fe.elliptic import EllipticEvaluator, WeierstrassParams
from threebody_fe.verify import SampleSpec, eq32_residual, eq34_residual

PTS = np.array([0.31 + 0.12j, -0.27 + 0.2j, 0.15 - 0.33j, 0.42, -0.05j])


def chains(n, seed=3):
    rng = np.random.Generator(np.random.Philox(key=[seed, 0]))
    return [random_chain(rng) for _ in range(n)]


@pytest.fixture(scope="module")
def chain_set():
    return [(p, chain_functions(p)) for p in chains(6)]


class TestInvariants:
    def test_rational_c_values_exact(self):
        w = invariants_from_chain(-4, 12, 3, 2)
        assert w.g2 == 0 and w.g3 == 0

    def test_displayed_identities(self):
        c0, c1, c2, c3 = 1.5, -0.5, 2.25, 4.0
        w = invariants_from_chain(c0, c1, c2, c3)
        assert abs(w.g2 - (3 * (2 * c2 / 3) ** 2 - c1 * c3 / 2)) <= 1e-14
        assert abs(w.g3 - (-(2 * c2 / 3) ** 3 + c1 * c2 * c3 / 6 - (c0 * c3 / 4) ** 2)) <= 1e-14

    def test_curve_membership(self):
        for p in chains(10):
            ev = p.evaluator()
            w, t = p.c2 / 3, p.c0 * p.c3 / 4
            assert abs(t * t - (4 * w**3 - ev.g2 * w - ev.g3)) <= 1e-10 * (1 + abs(w) ** 3)


class TestSolveAlpha:
    def test_rational_oracle(self):
        assert solve_alpha_point(-4, 12, 3, 2) == pytest.approx(1.0, abs=1e-12)

    def test_returned_point_satisfies_both(self):
        for p in chains(10):
            a = solve_alpha_point(p.c0, p.c1, p.c2, p.c3, p.weier)
            ev = p.evaluator()
            assert abs(ev.p(a) - p.c2 / 3) <= 1e-9
            assert abs(ev.p_prime(a) - p.c0 * p.c3 / 4) <= 1e-9

    def test_c0_zero(self):
        p = PhiChain(0.0, 1.3, 0.6, 0.9)
        r = p.alpha_residuals()
        assert max(r) <= 1e-9

    def test_errors(self):
        with pytest.raises(ChainError):
            solve_alpha_point(1, 1, 1, 0)
        with pytest.raises(ChainError):
            solve_alpha_point(1, 1, 3, 2, weier=WeierstrassParams(0, 0))
        with pytest.raises(ChainError):
            PhiChain(0, 0, 1, 1)


class TestU:
    def test_initial_conditions(self, chain_set):
        for p, cf in chain_set:
            assert abs(cf.u(0.0)) <= 1e-8 * (1 + abs(p.c2))
            assert abs(cf.du(0.0) - p.c0) <= 1e-8 * (1 + abs(p.c0))

    def test_two_forms_agree(self, chain_set):
        for _, cf in chain_set:
            a, b = cf.u(PTS), cf.u_alt(PTS)
            assert np.max(np.abs(a - b) / (1 + np.abs(a))) <= 1e-8

    def test_ode(self, chain_set):
        for p, cf in chain_set:
            r = ode40_residual(cf.u, cf.du, p.c0, p.c1, p.c2, p.c3, PTS)
            assert np.max(r) <= 1e-8
            assert ode40_residual(cf.u, cf.du, p.c0, p.c1, p.c2, p.c3, 0.0) <= 1e-8

    def test_perturbation_detected(self):
        p = PhiChain(0.5, 1.0, 0.75, 0.8)
        cf = chain_functions(p)
        r = ode40_residual(lambda x: cf.u(x) + 0.01 * x**2, lambda x: cf.du(x) + 0.02 * x,
                           p.c0, p.c1, p.c2, p.c3, 1.0)
        assert r > 1e-4

    def test_product_reading_fails(self, chain_set):
        p, _ = chain_set[0]
        ev = p.evaluator()
        a = p.alpha_point
        k = 4 / p.c3
        u = lambda x: k * ev.p(np.asarray(x) + a) * ev.p(a)  # noqa: E731
        du = lambda x: k * ev.p_prime(np.asarray(x) + a) * ev.p(a)  # noqa: E731
        assert abs(u(0.0)) > 1e-3
        assert np.max(ode40_residual(u, du, p.c0, p.c1, p.c2, p.c3, PTS)) > 1e-4


class TestStar:
    def test_examples(self):
        assert u_star(0, 1, 0.25)(0.0) == 0
        phi, tau, A = phi_star(0.3, 0.7, 1.0)
        assert tau(1.0) == pytest.approx(math.sinh(1.0), abs=1e-12)

    def test_small_c2(self):
        x = np.linspace(-1, 1, 9)
        u = u_star(0.4, 1.3, 1e-8)(x)
        assert np.max(np.abs(u - (1.3 * x**2 / 2 + 0.4 * x))) <= 1e-7

    def test_c2_zero_limits(self):
        x = np.linspace(-1, 1, 9)
        phi, tau, A = phi_star(0.4, 1.3, 0.0)
        assert np.allclose(tau(x), x, atol=1e-15)
        assert np.allclose(A(x), 1.3 * x / 2 + 0.4, atol=1e-15)
        assert np.allclose(phi(x), 1.3 * x**3 / 6 + 0.4 * x**2 / 2, atol=1e-15)

    def test_ode_with_c3_zero(self):
        x = np.linspace(-2, 2, 41) + 0.3j
        s = StarForms(0.5, -0.8 + 0.2j, 0.6 - 0.4j)
        assert np.max(ode40_residual(s.u, s.du, s.c0, s.c1, s.c2, 0, x)) <= 1e-10

    def test_eq34(self):
        phi, tau, A = phi_star(0.5, -0.8 + 0.2j, 0.6 - 0.4j)
        rep = eq34_residual(phi, tau, A, SampleSpec(seed=2, count=200), 1e-10)
        assert rep.passed, rep

    def test_branch_choice_irrelevant(self):
        c2 = 0.6 - 0.4j
        s = StarForms(0.5, -0.8, c2)
        t = StarForms(0.5, -0.8, c2)
        object.__setattr__(t, "root", -cmath.sqrt(c2))
        x = np.array([0.3, -0.7 + 0.2j, 1.1j])
        for name in ("u", "phi", "tau", "A"):
            a, b = getattr(s, name)(x), getattr(t, name)(x)
            assert np.max(np.abs(a - b)) <= 1e-14 * (1 + np.max(np.abs(a)))


class TestTauA:
    def test_quadrature_matches_closed_form(self, chain_set):
        for p, cf in chain_set:
            ref = tau_closed_form(p)(PTS)
            assert np.max(np.abs(cf.tau(PTS) - ref)) <= 1e-10

    def test_normalization(self, chain_set):
        h = 1e-4
        for _, cf in chain_set:
            t1 = (cf.tau(h) - cf.tau(-h)) / (2 * h)
            t2 = (cf.tau(h) - 2 * cf.tau(0.0) + cf.tau(-h)) / h**2
            assert cf.tau(0.0) == 0
            assert abs(t1 - 1) <= 1e-6
            assert abs(t2) <= 1e-6

    def test_c0_zero_branch(self):
        p = PhiChain(0.0, 1.3, 0.6, 0.9)
        cf = chain_functions(p)
        x = np.array([0.2, 0.3 + 0.1j, -0.25j])
        assert np.max(np.abs(cf.A(x) ** 2 / cf.u(x) - p.c1 / 2)) <= 1e-9

    def test_log_derivative_of_A(self, chain_set):
        h = 1e-5
        for p, cf in chain_set:
            x = PTS[:3]
            dA = (cf.A(x + h) - cf.A(x - h)) / (2 * h)
            lhs = dA / cf.A(x)
            rhs = 0.5 * (cf.du(x) - p.c0) / cf.u(x)
            assert np.max(np.abs(lhs - rhs) / (1 + np.abs(rhs))) <= 1e-7

    def test_phi_prime_is_tau_A(self, chain_set):
        for _, cf in chain_set:
            assert np.max(np.abs(cf.u(PTS) - cf.tau(PTS) * cf.A(PTS))) <= 1e-9

    def test_c1_required(self):
        with pytest.raises(ChainError):
            tau_A_from_u(lambda x: x, lambda x: 1 + 0 * x, 0.0)

    def test_a_quotient_identity(self, chain_set):
        x, y = PTS[:3], PTS[[3, 4, 0]] * 0.7
        for _, cf in chain_set:
            num = cf.u(x) - cf.u(y)
            den = cf.dtau(x) * cf.tau(y) - cf.tau(x) * cf.dtau(y)
            r = cf.A(x + y) + num / den
            assert np.max(np.abs(r)) <= 1e-7


class TestQuadruple:
    def test_normalization(self, chain_set):
        h = 1e-5
        for _, cf in chain_set:
            assert abs(cf.xi(0.0)) <= 1e-7 or np.isnan(cf.xi(0.0))
            xi1 = (cf.xi(h) - cf.xi(-h)) / (2 * h)
            eta1 = (cf.eta(h) - cf.eta(-h)) / (2 * h)
            assert abs(xi1 - 1) <= 1e-7
            assert abs(eta1) <= 1e-7
            assert abs(cf.phi(0.0)) <= 1e-9

    def test_tau_quotient_form(self, chain_set):
        for p, cf in chain_set:
            alt = cf.tau(PTS) / (cf.dtau(PTS) - p.b3 * cf.tau(PTS))
            assert np.max(np.abs(alt - cf.xi(PTS))) <= 1e-7

    def test_double_star_examples(self):
        assert chain_double_star(0, 6, 0).phi(1.0) == pytest.approx(1.0)
        assert chain_double_star(0.3, 1, 1).xi(0.5) == pytest.approx(1.0)

    def test_double_star_eq32(self):
        q = chain_double_star(0.4, -1.1, 0.3 + 0.2j)
        assert eq32_residual(q, SampleSpec(seed=4, count=200), 1e-10).passed
        q2 = group_action_33(q, 0.7, -1.3)
        assert eq32_residual(q2, SampleSpec(seed=4, count=200), 1e-10).passed

    def test_eta_perturbed_fails(self, chain_set):
        q = chain_set[0][1].quad
        bad = Quadruple(q.phi, lambda x: q.eta(x) + 0.01 * x**2, q.xi, q.gamma)
        assert not eq32_residual(bad, SampleSpec(seed=1, count=100, domain=(-0.5, 0.5, -0.5, 0.5))).passed


class TestGroupAction:
    q = chain_double_star(0.4, -1.1, 0.3)

    def test_identity(self):
        q = group_action_33(self.q, 0, 1)
        for name in ("phi", "eta", "xi", "gamma"):
            assert np.array_equal(getattr(q, name)(PTS), getattr(self.q, name)(PTS))

    def test_normalizes(self):
        raw = group_action_33(self.q, 0.7, 2.5)
        h = 1e-6
        xi1 = (raw.xi(h) - raw.xi(-h)) / (2 * h)
        eta1 = (raw.eta(h) - raw.eta(-h)) / (2 * h)
        norm = group_action_33(raw, -eta1 / xi1, 1 / xi1)
        assert abs((norm.xi(h) - norm.xi(-h)) / (2 * h) - 1) <= 1e-8
        assert abs((norm.eta(h) - norm.eta(-h)) / (2 * h)) <= 1e-8

    @given(st.floats(-2, 2), st.floats(0.2, 3), st.floats(-2, 2), st.floats(-3, -0.2))
    def test_group_law(self, b1, b2, c1, c2):
        twice = group_action_33(group_action_33(self.q, b1, b2), c1, c2)
        once = group_action_33(self.q, *compose_group_params((b1, b2), (c1, c2)))
        for name in ("eta", "xi", "gamma"):
            a, b = getattr(twice, name)(PTS), getattr(once, name)(PTS)
            assert np.max(np.abs(a - b) / (1 + np.abs(a))) <= 1e-12

    def test_b2_zero_rejected(self):
        with pytest.raises(ChainError):
            group_action_33(self.q, 1, 0)


class TestTriad:
    def test_standard_and_swapped(self, chain_set):
        rng = np.random.Generator(np.random.Philox(key=[8, 0]))
        x = rng.uniform(-1, 1, 100) + 1j * rng.uniform(-1, 1, 100)
        y = rng.uniform(-1, 1, 100) + 1j * rng.uniform(-1, 1, 100)
        for p, _ in chain_set[:3]:
            a = triad_from_chain(p, 0.23 + 0.11j)
            b = triad_from_chain(p, 0.23 + 0.11j, 0, 1)
            assert np.nanmax(a.fe_residual(x, y)) <= 1e-8
            assert np.nanmax(b.fe_residual(x, y)) <= 1e-8
            assert a.f(0.4) == pytest.approx(b.g(0.4))

    def test_h_matches_chain_display(self, chain_set):
        p, _ = chain_set[0]
        s = triad_from_chain(p, 0.23 + 0.11j)
        ev = p.evaluator()
        a = p.alpha_point
        z = 0.37 - 0.2j
        h = 2 / p.c3 * (ev.zeta(a - z) - ev.p(a) * z - ev.zeta(a))
        assert abs(s.h(z) - h) <= 1e-12 * (1 + abs(h))

    def test_mixing_requires_override(self, chain_set):
        p, _ = chain_set[0]
        with pytest.raises(ChainError):
            triad_from_chain(p, 0.2, 0.5, 0.5)
        s = triad_from_chain(p, 0.23 + 0.11j, 0.5, 0.5, override=True)
        x = np.array([0.3 + 0.1j, -0.4, 0.2j])
        assert np.nanmax(s.fe_residual(x, x[::-1] * 0.8)) > 1e-3

    def test_star_rejected(self):
        with pytest.raises(ChainError):
            triad_from_chain(PhiChain(0.5, 1, 1, 0), 0.2)

    def test_is_elliptic_family(self):
        p = PhiChain(-4, 12, 3, 2)
        s = triad_from_chain(p, 0.3)
        # rational lattice: f = (-1)(1/(x - a1)) + ...
        ev = EllipticEvaluator(WeierstrassParams(0, 0))
        assert s.df(0.9) == pytest.approx(-(-1) * ev.p(0.9 - (0.3 - 0.5)) + (-1) * 1.0, rel=1e-12)
