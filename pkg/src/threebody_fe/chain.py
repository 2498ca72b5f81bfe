"""Reduction chain: from the ODE ``(u')^2 = c3 u^3 + 4 c2 u^2 + 2 c1 u + c0^2``
to ``(φ, τ, A)``, the normalized quadruple ``(φ, η, ξ, γ)`` and back to a
solution triple.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .elliptic import (
    EllipticError,
    EllipticEvaluator,
    WeierstrassParams,
    _check_finite,
)
from .families import (
    EllipticTriadParams,
    SolutionTriple,
    make_elliptic_solution,
)

__all__ = [
    "ChainError",
    "PhiChain",
    "ChainFunctions",
    "Quadruple",
    "invariants_from_chain",
    "solve_alpha_point",
    "ode40_residual",
    "chain_functions",
    "u_star",
    "phi_star",
    "chain_double_star",
    "tau_A_from_u",
    "tau_closed_form",
    "StarForms",
    "xi_eta_gamma_from_phi",
    "group_action_33",
    "compose_group_params",
    "triad_from_chain",
    "random_chain",
]

Fn = Callable


class ChainError(ValueError):
    """Invalid or inconsistent chain constants."""


def invariants_from_chain(c0, c1, c2, c3) -> WeierstrassParams:
    """Invariants of the lattice on which ``u`` lives."""
    k = 2 * c2 / 3
    g2 = 3 * k**2 - c1 * c3 / 2
    g3 = -(k**3) + c1 * c2 * c3 / 6 - (c0 * c3 / 4) ** 2
    return WeierstrassParams(g2, g3)


def _newton(fn, dfn, z, tol, maxit):
    """Damped Newton; returns ``(z, converged)``."""
    for _ in range(maxit):
        try:
            r = fn(z)
            d = dfn(z)
        except EllipticError:
            return z, False
        if not np.isfinite(r) or not np.isfinite(d) or d == 0:
            return z, False
        if abs(r) <= tol:
            return z, True
        step = r / d
        lam = 1.0
        for _ in range(30):
            try:
                if abs(fn(z - lam * step)) < abs(r):
                    break
            except EllipticError:
                pass
            lam *= 0.5
        z = z - lam * step
    try:
        return z, abs(fn(z)) <= tol
    except EllipticError:
        return z, False


def solve_alpha_point(c0, c1, c2, c3, weier: WeierstrassParams | None = None,
                      evaluator: EllipticEvaluator | None = None,
                      tol: float = 1e-12, maxit: int = 100, check_tol: float = 1e-9) -> complex:
    """Find ``α`` with ``℘(α) = c2/3`` and ``℘'(α) = c0 c3/4``.

    Newton on ``℘(α) - c2/3`` from the small-argument inverse ``(c2/3)^{-1/2}``
    and three fallback seeds, then a polish on ``℘'`` (which has a simple
    root where ``℘ - c2/3`` has a double one, e.g. when ``c0 = 0``).
    """
    c0, c1, c2, c3 = (complex(v) for v in (c0, c1, c2, c3))
    if c3 == 0:
        raise ChainError("c3 must be nonzero; use the c3 = 0 closed forms")
    if weier is None:
        weier = invariants_from_chain(c0, c1, c2, c3)
    ev = evaluator if evaluator is not None else EllipticEvaluator(weier)
    w = c2 / 3
    t = c0 * c3 / 4
    scale = 1 + abs(w) ** 1.5
    curve = t * t - (4 * w**3 - ev.g2 * w - ev.g3)
    if abs(curve) > check_tol * (1 + abs(w) ** 3 + abs(t) ** 2):
        raise ChainError(f"c-values are not on the curve (mismatch {abs(curve):.3e})")

    fp = ev.p
    fdp = ev.p_prime
    seeds = []
    if w != 0:
        r = 1 / cmath.sqrt(w)
        seeds += [r, -r]
        rho = abs(r) / 2
    else:
        rho = 0.5
    seeds += [rho * cmath.exp(1j * (0.3 + 2 * np.pi * k / 3)) for k in range(3)]

    best = None
    for s in seeds:
        a, ok = _newton(lambda z: fp(z) - w, fdp, complex(s), tol * (1 + abs(w)), maxit)
        if not ok:
            continue
        try:
            dp = fdp(a)
        except EllipticError:
            continue
        if abs(dp + t) < abs(dp - t):
            a = -a
        if abs(t) < 1e-3 * scale:
            a2, ok2 = _newton(lambda z: fdp(z) - t, ev.p_second, a, tol * scale, maxit)
            if ok2:
                a = a2
        err = max(abs(fp(a) - w), abs(fdp(a) - t))
        if best is None or err < best[1] or (err <= check_tol and abs(a) < abs(best[0])):
            best = (a, err)
        if err <= tol * 10 * scale:
            break
    if best is None or best[1] > check_tol * scale:
        raise ChainError("Newton iteration for the α point did not converge")
    return complex(best[0])


@dataclass(frozen=True)
class PhiChain:
    """Chain constants ``c0..c3``, the free parameter ``b3`` and derived lattice data."""

    c0: complex
    c1: complex
    c2: complex
    c3: complex
    b3: complex = 0.0
    alpha_point: complex | None = None
    weier: WeierstrassParams | None = None

    def __post_init__(self):
        for name in ("c0", "c1", "c2", "c3", "b3"):
            object.__setattr__(self, name, _check_finite(getattr(self, name), name))
        if self.c0 == 0 and self.c1 == 0:
            raise ChainError("c0 = 0 requires c1 != 0")
        if self.c3 == 0:
            return
        if self.weier is None:
            object.__setattr__(self, "weier", invariants_from_chain(self.c0, self.c1, self.c2, self.c3))
        if self.alpha_point is None:
            a = solve_alpha_point(self.c0, self.c1, self.c2, self.c3, self.weier)
            object.__setattr__(self, "alpha_point", a)
        else:
            object.__setattr__(self, "alpha_point", _check_finite(self.alpha_point, "alpha_point"))

    @property
    def is_star(self) -> bool:
        return self.c3 == 0

    def evaluator(self) -> EllipticEvaluator:
        if self.weier is None:
            raise ChainError("c3 = 0 chains have no lattice")
        return EllipticEvaluator(self.weier)

    def alpha_residuals(self) -> tuple[float, float]:
        ev = self.evaluator()
        a = self.alpha_point
        return abs(ev.p(a) - self.c2 / 3), abs(ev.p_prime(a) - self.c0 * self.c3 / 4)


def random_chain(rng: np.random.Generator, b3: complex | None = None) -> PhiChain:
    """Admissible chain built backwards from a random lattice and ``α``.

    Picks ``g2, g3`` in the unit disc, ``α`` with ``0.4 ≤ |α| ≤ 0.8`` and
    ``c3``; then ``c2 = 3℘(α)``, ``c0 = 4℘'(α)/c3`` and ``c1`` from the
    ``g2`` relation.  The invariants are recomputed from the ``c``-values.
    """
    def disc():
        r = np.sqrt(rng.uniform()) * 1.0
        return r * np.exp(2j * np.pi * rng.uniform())

    g2, g3 = disc(), disc()
    ev = EllipticEvaluator(WeierstrassParams(g2, g3))
    alpha = rng.uniform(0.4, 0.8) * np.exp(2j * np.pi * rng.uniform())
    c3 = rng.uniform(0.5, 2.0) * np.exp(2j * np.pi * rng.uniform())
    c2 = 3 * ev.p(alpha)
    c0 = 4 * ev.p_prime(alpha) / c3
    c1 = 2 * (4 * c2**2 / 3 - g2) / c3
    if b3 is None:
        b3 = complex(rng.normal(), rng.normal()) * 0.3
    return PhiChain(c0, c1, c2, c3, b3=b3, alpha_point=alpha,
                    weier=invariants_from_chain(c0, c1, c2, c3))


# ---------------------------------------------------------------------------
# ODE and closed forms


def ode40_residual(u, du, c0, c1, c2, c3, x):
    """``|u'^2 - (c3 u^3 + 4 c2 u^2 + 2 c1 u + c0^2)| / (1 + |u|^3)``."""
    uv = np.asarray(u(x))
    dv = np.asarray(du(x))
    return np.abs(dv * dv - (c3 * uv**3 + 4 * c2 * uv**2 + 2 * c1 * uv + c0 * c0)) / (1 + np.abs(uv) ** 3)


def _sinhc(w):
    """``sinh(w)/w`` with its removable singularity."""
    w = np.asarray(w, dtype=complex)
    small = np.abs(w) < 1e-3
    safe = np.where(small, 1.0, w)
    w2 = w * w
    return np.where(small, 1 + w2 / 6 * (1 + w2 / 20 * (1 + w2 / 42)), np.sinh(safe) / safe)


def _coshm1(w):
    """``(cosh(w) - 1)/w^2``."""
    w = np.asarray(w, dtype=complex)
    small = np.abs(w) < 1e-3
    safe = np.where(small, 1.0, w)
    w2 = w * w
    half = _sinhc(safe / 2)
    return np.where(small, 0.5 * (1 + w2 / 12 * (1 + w2 / 30 * (1 + w2 / 56))), 0.5 * half * half)


def _sinhm(w):
    """``(sinh(w) - w)/w^3``."""
    w = np.asarray(w, dtype=complex)
    small = np.abs(w) < 0.1
    safe = np.where(small, 1.0, w)
    w2 = w * w
    series = 1 / 6 + w2 * (1 / 120 + w2 * (1 / 5040 + w2 * (1 / 362880 + w2 / 39916800)))
    return np.where(small, series, (np.sinh(safe) - safe) / safe**3)


@dataclass(frozen=True)
class StarForms:
    """The ``c3 = 0`` (hyperbolic) solution; ``c2 = 0`` reduces to polynomials."""

    c0: complex
    c1: complex
    c2: complex
    root: complex = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "root", cmath.sqrt(complex(self.c2)))

    def u(self, x):
        x = np.asarray(x, dtype=complex)
        w = 2 * self.root * x
        return self.c1 * x * x * _coshm1(w) + self.c0 * x * _sinhc(w)

    def du(self, x):
        x = np.asarray(x, dtype=complex)
        w = 2 * self.root * x
        return self.c1 * x * _sinhc(w) + self.c0 * np.cosh(w)

    def phi(self, x):
        x = np.asarray(x, dtype=complex)
        w = 2 * self.root * x
        return self.c1 * x**3 * _sinhm(w) + self.c0 * x * x * _coshm1(w)

    def tau(self, x):
        x = np.asarray(x, dtype=complex)
        return x * _sinhc(self.root * x)

    def dtau(self, x):
        return np.cosh(self.root * np.asarray(x, dtype=complex))

    def A(self, x):
        x = np.asarray(x, dtype=complex)
        return 0.5 * self.c1 * x * _sinhc(self.root * x) + self.c0 * np.cosh(self.root * x)


def u_star(c0, c1, c2) -> Fn:
    """Closed-form ``c3 = 0`` solution of the ``u`` ODE."""
    return StarForms(complex(c0), complex(c1), complex(c2)).u


def phi_star(c0, c1, c2) -> tuple[Fn, Fn, Fn]:
    """``(φ*, τ*, A*)``: hyperbolic solution of the bilinear equation."""
    s = StarForms(complex(c0), complex(c1), complex(c2))
    return s.phi, s.tau, s.A


@dataclass(frozen=True)
class Quadruple:
    """A solution ``(φ, η, ξ, γ)`` of ``φ(x+y) = η(x) + η(y) - (γ(x)-γ(y))/(ξ(x)-ξ(y))``."""

    phi: Fn
    eta: Fn
    xi: Fn
    gamma: Fn


def chain_double_star(c0, c1, b3) -> Quadruple:
    """Polynomial/rational quadruple of the ``c2 → 0`` limit."""
    c0, c1, b3 = complex(c0), complex(c1), complex(b3)

    def phi(x):
        x = np.asarray(x, dtype=complex)
        return c1 * x**3 / 6 + c0 * x * x / 2

    def xi(x):
        x = np.asarray(x, dtype=complex)
        return x / (1 - b3 * x)

    def eta(x):
        x = np.asarray(x, dtype=complex)
        return phi(x) - (c1 * x * x / 2 + c0 * x) * xi(x)

    def gamma(x):
        x = np.asarray(x, dtype=complex)
        return -(c1 * x * x / 2 + c0 * x) * x * x / (1 - b3 * x) ** 2

    return Quadruple(phi, eta, xi, gamma)


# ---------------------------------------------------------------------------
# τ and A by quadrature


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def _log_tau_integral(integrand: Fn, x: np.ndarray, panels: int) -> np.ndarray:
    """``x ∫_0^1 integrand(x s) ds`` with composite Gauss–Legendre on ``[0, 1]``."""
    edges = np.linspace(0.0, 1.0, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    s = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    wts = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    vals = integrand(x[:, None] * s[None, :])
    return x * (vals @ wts)


def tau_A_from_u(u: Fn, du: Fn, c0, c1=None, tol: float = 1e-12, max_panels: int = 256,
                 u_near: Fn | None = None, du_near: Fn | None = None, near_radius: float = 0.0) -> tuple[Fn, Fn, Fn]:
    """Build ``(τ, τ', A)`` from ``u`` with ``u(0) = 0``, ``u'(0) = c0``.

    ``log τ(x) = log x + ∫_0^x [½(u'+c0)/u - 1/t] dt``; the bracket is
    analytic at ``t = 0`` and Gauss nodes never touch the endpoint.  Panels
    double until two successive estimates agree to ``tol``.  ``A = u/τ``,
    or ``(c1/2) τ`` when ``c0 = 0``.

    ``u_near`` and ``du_near`` optionally replace ``u`` and ``u'`` inside ``|t| < near_radius``; a form
    with full relative accuracy at small ``t`` keeps the subtraction of
    ``1/t`` from amplifying rounding.
    """
    c0 = complex(c0)
    if c0 == 0 and c1 is None:
        raise ChainError("c1 is required when c0 = 0")

    def integrand(t):
        uv, dv = u(t), du(t)
        if u_near is not None:
            near = np.abs(t) < near_radius
            if near.any():
                tn = np.where(near, t, near_radius)
                uv = np.where(near, u_near(tn), uv)
                dv = np.where(near, du_near(tn), dv)
        return 0.5 * (dv + c0) / uv - 1 / t

    def log_tau(x):
        x = np.atleast_1d(np.asarray(x, dtype=complex))
        out = np.full(x.shape, -np.inf + 0j)
        nz = x != 0
        xs = x[nz]
        panels = 1
        prev = _log_tau_integral(integrand, xs, panels)
        done = np.zeros(xs.shape, dtype=bool)
        res = prev.copy()
        while panels < max_panels:
            panels *= 2
            todo = ~done
            cur = _log_tau_integral(integrand, xs[todo], panels)
            conv = np.abs(cur - prev[todo]) <= tol
            res[todo] = cur
            idx = np.flatnonzero(todo)
            done[idx[conv]] = True
            prev[todo] = cur
            if done.all():
                break
        res[~done] = np.nan
        out[nz] = np.log(xs) + res
        return out

    def tau(x):
        scalar = np.ndim(x) == 0
        with np.errstate(invalid="ignore"):
            v = np.exp(log_tau(x))
        return complex(v[0]) if scalar else v.reshape(np.shape(x))

    def dtau(x):
        scalar = np.ndim(x) == 0
        xa = np.atleast_1d(np.asarray(x, dtype=complex))
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.exp(log_tau(xa))
            d = t * 0.5 * (du(xa) + c0) / u(xa)
        d = np.where(xa == 0, 1.0 + 0j, d)
        return complex(d[0]) if scalar else d.reshape(np.shape(x))

    def A(x):
        scalar = np.ndim(x) == 0
        xa = np.atleast_1d(np.asarray(x, dtype=complex))
        with np.errstate(divide="ignore", invalid="ignore"):
            if c0 == 0:
                v = 0.5 * complex(c1) * np.exp(log_tau(xa))
                v = np.where(xa == 0, 0j, v)
            else:
                v = u(xa) / np.exp(log_tau(xa))
            v = np.where(xa == 0, c0, v)
        return complex(v[0]) if scalar else v.reshape(np.shape(x))

    return tau, dtau, A


def xi_eta_gamma_from_phi(phi: Fn, u: Fn, du: Fn, b3, c0) -> Quadruple:
    """Normalized quadruple from ``φ`` and ``u = φ'`` with free parameter ``b3``."""
    b3, c0 = complex(b3), complex(c0)

    def xi(x):
        uv = u(x)
        return 2 * uv / (c0 - 2 * b3 * uv + du(x))

    def eta(x):
        return phi(x) - u(x) * xi(x)

    def gamma(x):
        xv = xi(x)
        return -u(x) * xv * xv

    return Quadruple(phi, eta, xi, gamma)


def group_action_33(q: Quadruple, b1, b2) -> Quadruple:
    """``(φ, η, ξ, γ) → (φ, η + b1 ξ, b2 ξ, b2 (γ + b1 ξ^2))``."""
    b1, b2 = complex(b1), complex(b2)
    if b2 == 0:
        raise ChainError("b2 must be nonzero")
    xi0, eta0, gam0 = q.xi, q.eta, q.gamma
    return Quadruple(
        q.phi,
        lambda x: eta0(x) + b1 * xi0(x),
        lambda x: b2 * xi0(x),
        lambda x: b2 * (gam0(x) + b1 * xi0(x) ** 2),
    )


def compose_group_params(first: tuple, second: tuple) -> tuple[complex, complex]:
    """Parameters of applying ``first`` then ``second``."""
    b1, b2 = first
    c1, c2 = second
    return b1 + c1 * b2, b2 * c2


# ---------------------------------------------------------------------------
# assembled chain


@dataclass(frozen=True)
class ChainFunctions:
    """Evaluators of the chain; ``u2`` is ``u''``."""

    chain: PhiChain
    u: Fn
    du: Fn
    u2: Fn
    phi: Fn
    tau: Fn
    dtau: Fn
    A: Fn
    quad: Quadruple
    u_alt: Fn | None = None

    @property
    def xi(self):
        return self.quad.xi

    @property
    def eta(self):
        return self.quad.eta

    @property
    def gamma(self):
        return self.quad.gamma


def chain_functions(p: PhiChain) -> ChainFunctions:
    """All chain evaluators; uses the ``℘`` forms when ``c3 != 0`` and the hyperbolic ones otherwise."""
    if p.is_star:
        s = StarForms(p.c0, p.c1, p.c2)
        u2 = lambda x: 4 * p.c2 * s.u(x) + p.c1  # noqa: E731
        quad = xi_eta_gamma_from_phi(s.phi, s.u, s.du, p.b3, p.c0)
        return ChainFunctions(p, s.u, s.du, u2, s.phi, s.tau, s.dtau, s.A, quad)

    ev = p.evaluator()
    a = p.alpha_point
    k = 4 / p.c3
    pa = ev.p(a)
    za = ev.zeta(a)

    def u(x):
        return k * (ev.p(np.asarray(x) + a) - pa)

    def du(x):
        return k * ev.p_prime(np.asarray(x) + a)

    def u2(x):
        return k * ev.p_second(np.asarray(x) + a)

    def phi(x):
        x = np.asarray(x)
        return k * (za - ev.zeta(x + a) - pa * x)

    c0, c1, c2, c3 = p.c0, p.c1, p.c2, p.c3

    # ψ = ½/(℘ - c2/3) keeps full relative accuracy of u near x = 0, where
    # |℘| passes the near-pole cut-off; hence the uncapped evaluator
    ev_near = EllipticEvaluator(p.weier, overflow_threshold=np.inf)

    def _psi(x):
        v = ev_near.evaluate(x)
        d = v.p - c2 / 3
        psi = 0.5 / d
        dpsi = -0.5 * v.dp / (d * d)
        d2psi = -0.5 * (6 * v.p * v.p - 0.5 * ev.g2) / (d * d) + v.dp * v.dp / d**3
        return psi, dpsi, d2psi

    def u_alt(x):
        psi, dpsi, _ = _psi(x)
        return c1 * psi + 0.5 * c0 * c0 * c3 * psi * psi + c0 * dpsi

    def du_alt(x):
        psi, dpsi, d2psi = _psi(x)
        return c1 * dpsi + c0 * c0 * c3 * psi * dpsi + c0 * d2psi

    tau, dtau, A = tau_A_from_u(u, du, c0, c1, u_near=u_alt, du_near=du_alt,
                                near_radius=0.5 * abs(a))
    quad = xi_eta_gamma_from_phi(phi, u, du, p.b3, c0)
    return ChainFunctions(p, u, du, u2, phi, tau, dtau, A, quad, u_alt)


def tau_closed_form(p: PhiChain) -> Fn:
    """``τ(x) = σ(x) σ(α) e^{ζ(α) x} / σ(x + α)``; an independent oracle for the quadrature."""
    ev = p.evaluator()
    a = p.alpha_point
    ls_a = ev.log_sigma(a)
    za = ev.zeta(a)

    def tau(x):
        x = np.asarray(x, dtype=complex)
        return np.exp(ev.log_sigma(x) + ls_a + za * x - ev.log_sigma(x + a))

    return tau


def triad_from_chain(p: PhiChain, alpha1, s1=1.0, t1=0.0, override: bool = False) -> SolutionTriple:
    """Solution triple whose third slot is ``h(z) = (2/c3)(ζ(α - z) - ℘(α) z - ζ(α))``.

    ``(s1, t1) = (1, 0)`` gives the standard pair ``(f, g)``, ``(0, 1)`` swaps
    them.  Other mixtures ``f1 = s1 f + s2 g``, ``g1 = t1 f + t2 g`` are not
    solutions and need ``override=True``; their big functions are mixed the
    same way so the residual measures the failure.
    """
    if p.is_star:
        raise ChainError("the triad needs c3 != 0")
    s1, t1 = complex(s1), complex(t1)
    allowed = {(1, 0), (0, 1)}
    if (s1, t1) not in allowed and not override:
        raise ChainError("only (s1, t1) in {(1, 0), (0, 1)} give solutions; set override for diagnostics")
    ev = p.evaluator()
    a = p.alpha_point
    a1 = _check_finite(alpha1, "alpha1")
    k = 2 / p.c3
    pa = ev.p(a)
    params = EllipticTriadParams(
        alpha=-k,
        beta=-k * pa,
        gamma1=-k * ev.zeta(a1 - a / 2),
        gamma2=k * ev.zeta(a1 + a / 2),
        gamma3=-k * ev.zeta(a),
        a1=a1 - a / 2,
        a2=-a1 - a / 2,
        weier=p.weier,
    )
    base = make_elliptic_solution(params, ev)
    if (s1, t1) == (1, 0):
        return base
    s2, t2 = 1 - s1, 1 - t1

    def mix(u_, v_, cu, cv):
        return lambda x: cu * u_(x) + cv * v_(x)

    b = base
    return SolutionTriple(
        "elliptic",
        mix(b.f, b.g, s1, s2), mix(b.f, b.g, t1, t2), b.h,
        mix(b.F, b.G, s1, s2), mix(b.F, b.G, t1, t2), b.H,
        mix(b.df, b.dg, s1, s2), mix(b.df, b.dg, t1, t2), b.dh,
        mix(b.d2f, b.d2g, s1, s2), mix(b.d2f, b.d2g, t1, t2), b.d2h,
        params={"base": params, "s1": s1, "t1": t1},
        poles=(b.poles[0] + b.poles[1], b.poles[0] + b.poles[1], b.poles[2]),
        antiderivatives=None,
    )
