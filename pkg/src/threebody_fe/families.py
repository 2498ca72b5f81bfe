"""Solution triples ``(f, g, h; F, G, H)`` of ``(f(x)+g(y)+h(z))^2 = F(x)+G(y)+H(z)``
on the plane ``x + y + z = 0``.

Every constructor returns a :class:`SolutionTriple` whose evaluators accept
complex scalars or numpy arrays.  Elliptic evaluators return ``nan`` at
lattice-adjacent array points (see :mod:`threebody_fe.elliptic`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable

import numpy as np

from .elliptic import EllipticEvaluator, WeierstrassParams, _check_finite

__all__ = [
    "FAMILIES",
    "SolutionTriple",
    "EllipticTriadParams",
    "EntireFamilyParams",
    "PolynomialFamilyParams",
    "DegenerateParams",
    "SymmetryParams",
    "IdenticalSolution",
    "make_elliptic_solution",
    "make_entire_solution",
    "make_polynomial_solution",
    "make_degenerate_solution",
    "make_identical_solution",
    "symmetry_transform",
    "polynomial_shifts",
    "CALIBRATION_ANCHOR",
]

FAMILIES = (
    "elliptic",
    "entire",
    "polynomial",
    "degenerate1",
    "degenerate2",
    "degenerate3",
    "identical",
)

CALIBRATION_ANCHOR = 0.37

Fn = Callable[[Any], Any]


def _c(v) -> complex:
    return _check_finite(v)


@dataclass(frozen=True)
class SolutionTriple:
    """Six scalar fields plus first and second derivatives of ``f, g, h``.

    ``poles`` lists, per slot, the known pole locations (modulo the lattice
    for elliptic families).  ``antiderivatives`` are primitives of
    ``f, g, h`` used for the log ground state; ``None`` means quadrature.
    """

    family: str
    f: Fn
    g: Fn
    h: Fn
    F: Fn
    G: Fn
    H: Fn
    df: Fn
    dg: Fn
    dh: Fn
    d2f: Fn
    d2g: Fn
    d2h: Fn
    params: Any = None
    poles: tuple = ((), (), ())
    antiderivatives: tuple | None = None

    @property
    def small(self) -> tuple[Fn, Fn, Fn]:
        return self.f, self.g, self.h

    @property
    def big(self) -> tuple[Fn, Fn, Fn]:
        return self.F, self.G, self.H

    @property
    def first(self) -> tuple[Fn, Fn, Fn]:
        return self.df, self.dg, self.dh

    @property
    def second(self) -> tuple[Fn, Fn, Fn]:
        return self.d2f, self.d2g, self.d2h

    def fe_terms(self, x, y):
        """Return ``((f+g+h)^2, F+G+H, |F|+|G|+|H|)`` at ``(x, y, -x-y)``."""
        x = np.asarray(x, dtype=complex)
        y = np.asarray(y, dtype=complex)
        z = -x - y
        s = self.f(x) + self.g(y) + self.h(z)
        Fx, Gy, Hz = self.F(x), self.G(y), self.H(z)
        return s * s, Fx + Gy + Hz, np.abs(Fx) + np.abs(Gy) + np.abs(Hz)

    def fe_residual(self, x, y):
        """Normalised residual ``|(f+g+h)^2 - (F+G+H)| / (1 + |F|+|G|+|H|)``."""
        lhs, rhs, scale = self.fe_terms(x, y)
        return np.abs(lhs - rhs) / (1.0 + scale)


# ---------------------------------------------------------------------------
# elliptic family


@dataclass(frozen=True)
class EllipticTriadParams:
    alpha: complex = 1.0
    beta: complex = 0.0
    gamma1: complex = 0.0
    gamma2: complex = 0.0
    gamma3: complex = 0.0
    a1: complex = 0.0
    a2: complex = 0.0
    weier: WeierstrassParams = field(default_factory=WeierstrassParams)
    a3: complex = field(init=False)

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma1", "gamma2", "gamma3", "a1", "a2"):
            object.__setattr__(self, name, _c(getattr(self, name)))
        object.__setattr__(self, "a3", -self.a1 - self.a2)

    @property
    def gamma(self) -> complex:
        return self.gamma1 + self.gamma2 + self.gamma3


def make_elliptic_solution(p: EllipticTriadParams, evaluator: EllipticEvaluator | None = None) -> SolutionTriple:
    """General nondegenerate solution built from ``ζ`` and ``℘`` with shifts ``a_k``."""
    ev = evaluator if evaluator is not None else EllipticEvaluator(p.weier)
    al, be, gam = p.alpha, p.beta, p.gamma
    shifts = (p.a1, p.a2, p.a3)
    offsets = (p.gamma1, p.gamma2, p.gamma3)

    def small(a, c):
        return lambda x: al * ev.zeta(np.asarray(x) - a) + be * np.asarray(x) + c

    def big(a):
        def fn(x):
            v = ev.evaluate(np.asarray(x, dtype=complex) - a)
            out = al * al * v.p + 2 * gam * al * v.zeta + gam * gam / 3
            return out if np.ndim(x) else _scalar(out, v)
        return fn

    def first(a):
        return lambda x: -al * ev.p(np.asarray(x) - a) + be

    def second(a):
        return lambda x: -al * ev.p_prime(np.asarray(x) - a)

    def prim(a, c):
        def fn(x):
            x = np.asarray(x, dtype=complex)
            return al * ev.log_sigma(x - a) + 0.5 * be * x * x + c * x
        return fn

    f, g, h = (small(a, c) for a, c in zip(shifts, offsets))
    F, G, H = (big(a) for a in shifts)
    df, dg, dh = (first(a) for a in shifts)
    d2f, d2g, d2h = (second(a) for a in shifts)
    return SolutionTriple(
        "elliptic", f, g, h, F, G, H, df, dg, dh, d2f, d2g, d2h,
        params=p,
        poles=tuple((a,) for a in shifts),
        antiderivatives=tuple(prim(a, c) for a, c in zip(shifts, offsets)),
    )


def _scalar(out, vals):
    from .elliptic import NearPoleError

    if bool(vals.overflow):
        raise NearPoleError("lattice-adjacent argument")
    return complex(out)


# ---------------------------------------------------------------------------
# entire and polynomial families


@dataclass(frozen=True)
class EntireFamilyParams:
    alpha1: complex = 1.0
    alpha2: complex = 1.0
    alpha3: complex = 1.0
    lam: complex = 1.0
    beta: complex = 0.0
    gamma1: complex = 0.0
    gamma2: complex = 0.0
    gamma3: complex = 0.0

    def __post_init__(self):
        for name in ("alpha1", "alpha2", "alpha3", "lam", "beta", "gamma1", "gamma2", "gamma3"):
            object.__setattr__(self, name, _c(getattr(self, name)))
        if self.lam == 0:
            raise ValueError("lam must be nonzero (use the polynomial family for lam -> 0)")

    @property
    def gamma(self) -> complex:
        return self.gamma1 + self.gamma2 + self.gamma3


def make_entire_solution(p: EntireFamilyParams, literal: bool = False) -> SolutionTriple:
    """Exponential family ``f = α1 e^{λx} + βx + γ1``.

    With ``literal=True`` the big functions use ``(α_k e^{λx} + γ/√3)^2`` in
    place of ``α_k^2 e^{2λx} + 2γα_k e^{λx} + γ^2/3``; that variant is *not* a
    solution when ``γ != 0`` and exists to quantify the discrepancy.
    """
    lam, be, gam = p.lam, p.beta, p.gamma
    amps = (p.alpha1, p.alpha2, p.alpha3)
    offsets = (p.gamma1, p.gamma2, p.gamma3)
    pairs = (p.alpha2 * p.alpha3, p.alpha1 * p.alpha3, p.alpha1 * p.alpha2)
    r3 = math.sqrt(3.0)

    def small(a, c):
        return lambda x: a * np.exp(lam * np.asarray(x)) + be * np.asarray(x) + c

    def big(a, pair):
        if literal:
            return lambda x: (a * np.exp(lam * np.asarray(x)) + gam / r3) ** 2 + 2 * pair * np.exp(-lam * np.asarray(x))

        def fn(x):
            e = np.exp(lam * np.asarray(x))
            return a * a * e * e + 2 * gam * a * e + gam * gam / 3 + 2 * pair / e
        return fn

    def first(a):
        return lambda x: a * lam * np.exp(lam * np.asarray(x)) + be

    def second(a):
        return lambda x: a * lam * lam * np.exp(lam * np.asarray(x))

    def prim(a, c):
        return lambda x: a * np.exp(lam * np.asarray(x)) / lam + 0.5 * be * np.asarray(x) ** 2 + c * np.asarray(x)

    smalls = [small(a, c) for a, c in zip(amps, offsets)]
    bigs = [big(a, q) for a, q in zip(amps, pairs)]
    return SolutionTriple(
        "entire", *smalls, *bigs,
        *[first(a) for a in amps], *[second(a) for a in amps],
        params=p, antiderivatives=tuple(prim(a, c) for a, c in zip(amps, offsets)),
    )


@dataclass(frozen=True)
class PolynomialFamilyParams:
    alpha: complex = 1.0
    beta1: complex = 0.0
    beta2: complex = 0.0
    beta3: complex = 0.0
    gamma1: complex = 0.0
    gamma2: complex = 0.0
    gamma3: complex = 0.0

    def __post_init__(self):
        for name in ("alpha", "beta1", "beta2", "beta3", "gamma1", "gamma2", "gamma3"):
            object.__setattr__(self, name, _c(getattr(self, name)))
        if self.alpha == 0:
            raise ValueError("alpha = 0 is the all-linear degenerate case (degenerate1)")

    @property
    def gamma(self) -> complex:
        return self.gamma1 + self.gamma2 + self.gamma3


def polynomial_shifts(p: PolynomialFamilyParams, literal: bool = False):
    """Return ``(a1, a2, a3, γ̃)`` for the quadratic family.

    ``f = α(x - a1)^2 + β̄x + const`` with ``β̄ = (β1+β2+β3)/3``, so
    ``a_k = (β_i + β_j - 2β_k)/(6α)`` and ``γ̃ = γ - αΣa_k^2``.  ``literal``
    switches to the alternative forms ``a1 = (β1+β3-2β1)/(6α)`` and
    ``γ̃ = γ - Σβ_k^2/(4α)``, which disagree unless ``β1 = β2`` and
    ``Σβ_k = 0`` respectively.
    """
    al, b1, b2, b3 = p.alpha, p.beta1, p.beta2, p.beta3
    if literal:
        a1 = (b1 + b3 - 2 * b1) / (6 * al)
        a2 = (b1 + b3 - 2 * b2) / (6 * al)
        a3 = (b1 + b2 - 2 * b3) / (6 * al)
        gt = p.gamma - (b1 * b1 + b2 * b2 + b3 * b3) / (4 * al)
        return a1, a2, a3, gt
    a1 = (b2 + b3 - 2 * b1) / (6 * al)
    a2 = (b1 + b3 - 2 * b2) / (6 * al)
    a3 = (b1 + b2 - 2 * b3) / (6 * al)
    gt = p.gamma - al * (a1 * a1 + a2 * a2 + a3 * a3)
    return a1, a2, a3, gt


def make_polynomial_solution(p: PolynomialFamilyParams, literal: bool = False) -> SolutionTriple:
    """Quadratic family, the ``λ → 0`` limit of the exponential one."""
    al = p.alpha
    a1, a2, a3, gt = polynomial_shifts(p, literal=literal)
    if not literal:
        assert abs(a1 + a2 + a3) <= 1e-12 * (1 + abs(a1) + abs(a2) + abs(a3))
    betas = (p.beta1, p.beta2, p.beta3)
    offsets = (p.gamma1, p.gamma2, p.gamma3)

    def small(b, c):
        return lambda x: al * np.asarray(x) ** 2 + b * np.asarray(x) + c

    def big(a):
        def fn(x):
            u = (np.asarray(x) - a) ** 2
            return 2 * al * al * u * u + 2 * al * gt * u + gt * gt / 3
        return fn

    def first(b):
        return lambda x: 2 * al * np.asarray(x) + b

    def second():
        return lambda x: 2 * al + 0 * np.asarray(x, dtype=complex)

    def prim(b, c):
        return lambda x: al * np.asarray(x) ** 3 / 3 + b * np.asarray(x) ** 2 / 2 + c * np.asarray(x)

    record = {"params": p, "shifts": (a1, a2, a3), "gamma_tilde": gt, "literal": literal}
    return SolutionTriple(
        "polynomial",
        *[small(b, c) for b, c in zip(betas, offsets)],
        *[big(a) for a in (a1, a2, a3)],
        *[first(b) for b in betas],
        second(), second(), second(),
        params=record,
        antiderivatives=tuple(prim(b, c) for b, c in zip(betas, offsets)),
    )


# ---------------------------------------------------------------------------
# totally degenerate families


@dataclass(frozen=True)
class DegenerateParams:
    """Free parameters of the three totally degenerate cases.

    Case 1 uses ``f0, f1, g0, g1, h0, h1, b`` (and ``F0, G0``); case 2 uses the
    callable ``f`` (with optional ``df, d2f``) and ``g0, h0, a, b, G0, H0``;
    case 3 uses ``a, b, c1, c2, lam, f0, g0, h0`` (and ``F0, G0``).  Where
    ``H0`` is not free it is set to ``c^2 - F0 - G0`` with ``c = f0+g0+h0``.
    """

    case: int
    f0: complex = 0.0
    f1: complex = 0.0
    g0: complex = 0.0
    g1: complex = 0.0
    h0: complex = 0.0
    h1: complex = 0.0
    a: complex = 0.0
    b: complex = 0.0
    c: complex | None = None
    c1: complex = 0.0
    c2: complex = 0.0
    lam: complex = 1.0
    F0: complex = 0.0
    G0: complex = 0.0
    H0: complex | None = None
    f: Fn | None = None
    df: Fn | None = None
    d2f: Fn | None = None

    def __post_init__(self):
        if self.case not in (1, 2, 3):
            raise ValueError("case must be 1, 2 or 3")
        total = self.f0 + self.g0 + self.h0
        if self.case in (1, 3):
            if self.c is not None and abs(complex(self.c) - total) > 1e-12 * (1 + abs(total)):
                raise ValueError("constraint f0 + g0 + h0 = c violated")
            object.__setattr__(self, "c", complex(total))
            H0 = self.c**2 - self.F0 - self.G0
            if self.H0 is not None and abs(complex(self.H0) - H0) > 1e-12 * (1 + abs(H0)):
                raise ValueError("constraint F0 + G0 + H0 = c^2 violated")
            object.__setattr__(self, "H0", complex(H0))
        else:
            if self.f is None:
                raise ValueError("case 2 needs the arbitrary function f")
            if self.H0 is None:
                object.__setattr__(self, "H0", 0j)
        if self.case == 3 and self.lam == 0:
            raise ValueError("lam must be nonzero in case 3")


def _const(v):
    return lambda x: v + 0 * np.asarray(x, dtype=complex)


def _num_derivative(fn: Fn, order: int, step: float = 1e-4) -> Fn:
    if order == 1:
        return lambda x: (fn(np.asarray(x) + step) - fn(np.asarray(x) - step)) / (2 * step)
    return lambda x: (fn(np.asarray(x) + step) - 2 * fn(np.asarray(x)) + fn(np.asarray(x) - step)) / step**2


def make_degenerate_solution(p: DegenerateParams) -> SolutionTriple:
    """Solutions in which at least one of ``f, g, h`` is linear."""
    if p.case == 1:
        c, b = p.c, p.b
        slopes = (p.f1, p.g1, p.h1)
        consts = (p.f0, p.g0, p.h0)
        bigs0 = (p.F0, p.G0, p.H0)
        quad = (
            (p.f1 - p.g1) * (p.f1 - p.h1),
            (p.g1 - p.f1) * (p.g1 - p.h1),
            (p.h1 - p.g1) * (p.h1 - p.f1),
        )

        def lin(k0, k1):
            return lambda x: k0 + k1 * np.asarray(x)

        def big(B0, k1, q):
            return lambda x: B0 + (b + 2 * c * k1) * np.asarray(x) + q * np.asarray(x) ** 2

        def prim(k0, k1):
            return lambda x: k0 * np.asarray(x) + 0.5 * k1 * np.asarray(x) ** 2

        return SolutionTriple(
            "degenerate1",
            *[lin(k0, k1) for k0, k1 in zip(consts, slopes)],
            *[big(B0, k1, q) for B0, k1, q in zip(bigs0, slopes, quad)],
            *[_const(k1) for k1 in slopes],
            _const(0j), _const(0j), _const(0j),
            params=p,
            antiderivatives=tuple(prim(k0, k1) for k0, k1 in zip(consts, slopes)),
        )

    if p.case == 2:
        fx = p.f
        df = p.df if p.df is not None else _num_derivative(fx, 1)
        d2f = p.d2f if p.d2f is not None else _num_derivative(fx, 2)
        a, b, g0, h0, G0, H0 = p.a, p.b, p.g0, p.h0, p.G0, p.H0

        def F(x):
            x = np.asarray(x)
            return (g0 + h0 - a * x + fx(x)) ** 2 - (G0 + H0 - b * x)

        return SolutionTriple(
            "degenerate2",
            fx,
            lambda y: g0 + a * np.asarray(y),
            lambda z: h0 + a * np.asarray(z),
            F,
            lambda y: G0 + b * np.asarray(y),
            lambda z: H0 + b * np.asarray(z),
            df, _const(a), _const(a),
            d2f, _const(0j), _const(0j),
            params=p,
        )

    lam, a, b, c, c1, c2 = p.lam, p.a, p.b, p.c, p.c1, p.c2

    def expo(k0, ck):
        return lambda x: k0 + a * np.asarray(x) + ck * np.exp(lam * np.asarray(x))

    def expo_big(B0, ck):
        def fn(x):
            e = np.exp(lam * np.asarray(x))
            return B0 + b * np.asarray(x) + ck * e * (2 * c + ck * e)
        return fn

    def prim(k0, ck):
        return lambda x: k0 * np.asarray(x) + 0.5 * a * np.asarray(x) ** 2 + ck * np.exp(lam * np.asarray(x)) / lam

    return SolutionTriple(
        "degenerate3",
        expo(p.f0, c1),
        expo(p.g0, c2),
        lambda z: p.h0 + a * np.asarray(z),
        expo_big(p.F0, c1),
        expo_big(p.G0, c2),
        lambda z: p.H0 + b * np.asarray(z) + 2 * c1 * c2 * np.exp(-lam * np.asarray(z)),
        lambda x: a + c1 * lam * np.exp(lam * np.asarray(x)),
        lambda y: a + c2 * lam * np.exp(lam * np.asarray(y)),
        _const(a),
        lambda x: c1 * lam * lam * np.exp(lam * np.asarray(x)),
        lambda y: c2 * lam * lam * np.exp(lam * np.asarray(y)),
        _const(0j),
        params=p,
        antiderivatives=(prim(p.f0, c1), prim(p.g0, c2), prim(p.h0, 0.0)),
    )


# ---------------------------------------------------------------------------
# identical particles


@dataclass(frozen=True)
class IdenticalSolution:
    """``f = αζ + βx`` with the matching even ``F`` of the symmetric-product equation.

    ``F(x) = ½(α^2 ℘(x) - f(x)^2) + calibration``; the calibration constant
    is fixed at the symmetric anchor ``(x0, x0, -2x0)`` and is zero up to
    rounding because three identical slots leave no additive freedom.
    """

    alpha: complex
    beta: complex
    evaluator: EllipticEvaluator
    anchor: float = CALIBRATION_ANCHOR
    calibration: complex = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "calibration", 0j)
        x0 = self.anchor
        lhs = self.product_sum(x0, x0)
        rhs = self.F(x0) * 2 + self.F(-2 * x0)
        object.__setattr__(self, "calibration", complex(lhs - rhs) / 3)

    def f(self, x):
        x = np.asarray(x)
        return self.alpha * self.evaluator.zeta(x) + self.beta * x

    def df(self, x):
        return -self.alpha * self.evaluator.p(np.asarray(x)) + self.beta

    def F(self, x):
        x = np.asarray(x)
        fx = self.f(x)
        return 0.5 * (self.alpha**2 * self.evaluator.p(x) - fx * fx) + self.calibration

    def product_sum(self, x, y):
        x = np.asarray(x, dtype=complex)
        y = np.asarray(y, dtype=complex)
        fx, fy, fz = self.f(x), self.f(y), self.f(-x - y)
        return fx * fy + fy * fz + fz * fx

    def residual(self, x, y):
        """``|f(x)f(y) + f(y)f(z) + f(z)f(x) - F(x) - F(y) - F(z)|`` at ``z = -x-y``."""
        x = np.asarray(x, dtype=complex)
        y = np.asarray(y, dtype=complex)
        return np.abs(self.product_sum(x, y) - (self.F(x) + self.F(y) + self.F(-x - y)))

    def as_triple(self) -> SolutionTriple:
        """The same ``f`` in all three slots, as an elliptic-family triple."""
        return make_elliptic_solution(
            EllipticTriadParams(alpha=self.alpha, beta=self.beta, weier=self.evaluator.params),
            self.evaluator,
        )


def make_identical_solution(alpha: complex, beta: complex, weier: WeierstrassParams,
                            anchor: float = CALIBRATION_ANCHOR) -> IdenticalSolution:
    return IdenticalSolution(_c(alpha), _c(beta), EllipticEvaluator(weier), anchor)


# ---------------------------------------------------------------------------
# symmetry group


@dataclass(frozen=True)
class SymmetryParams:
    """Parameters of the transformation group leaving the functional equation invariant.

    ``f -> f0 + a1 x + a2 f(a3 x + s1)`` and
    ``F -> F0 + a4 x + a2^2 F(a3 x + s1) + 2 a2 c f(a3 x + s1)`` (likewise for the
    other slots), subject to ``f0+g0+h0 = c``, ``F0+G0+H0 = c^2`` and
    ``s1+s2+s3 = 0``.
    """

    a1: complex = 0.0
    a2: complex = 1.0
    a3: complex = 1.0
    a4: complex = 0.0
    c: complex = 0.0
    f0: complex = 0.0
    g0: complex = 0.0
    h0: complex = 0.0
    F0: complex = 0.0
    G0: complex = 0.0
    H0: complex = 0.0
    s1: complex = 0.0
    s2: complex = 0.0
    s3: complex = 0.0
    tol: float = 1e-12

    def __post_init__(self):
        if self.a3 == 0:
            raise ValueError("a3 must be nonzero")
        scale = 1 + abs(self.c) ** 2
        if abs(self.f0 + self.g0 + self.h0 - self.c) > self.tol * scale:
            raise ValueError("constraint f0 + g0 + h0 = c violated")
        if abs(self.F0 + self.G0 + self.H0 - self.c**2) > self.tol * scale:
            raise ValueError("constraint F0 + G0 + H0 = c^2 violated")
        if abs(self.s1 + self.s2 + self.s3) > self.tol * (1 + abs(self.s1) + abs(self.s2)):
            raise ValueError("constraint s1 + s2 + s3 = 0 violated")

    def then(self, q: "SymmetryParams") -> "SymmetryParams":
        """Composite ``q ∘ self``: apply ``self`` first, then ``q``."""
        p = self
        shifts = tuple(p.a3 * qs + ps for ps, qs in zip((p.s1, p.s2, p.s3), (q.s1, q.s2, q.s3)))
        consts = tuple(qc + q.a2 * (pc + p.a1 * qs) for pc, qc, qs in
                       zip((p.f0, p.g0, p.h0), (q.f0, q.g0, q.h0), (q.s1, q.s2, q.s3)))
        bigs = tuple(
            qB + q.a2**2 * (pB + p.a4 * qs) + 2 * q.a2 * q.c * (pc + p.a1 * qs)
            for pB, qB, pc, qs in zip((p.F0, p.G0, p.H0), (q.F0, q.G0, q.H0), (p.f0, p.g0, p.h0), (q.s1, q.s2, q.s3))
        )
        return SymmetryParams(
            a1=q.a1 + q.a2 * p.a1 * q.a3,
            a2=p.a2 * q.a2,
            a3=p.a3 * q.a3,
            a4=q.a4 + q.a2**2 * p.a4 * q.a3 + 2 * q.a2 * q.c * p.a1 * q.a3,
            c=q.c + q.a2 * p.c,
            f0=consts[0], g0=consts[1], h0=consts[2],
            F0=bigs[0], G0=bigs[1], H0=bigs[2],
            s1=shifts[0], s2=shifts[1], s3=shifts[2],
            tol=max(p.tol, q.tol) * 100,
        )


def symmetry_transform(s: SolutionTriple, p: SymmetryParams) -> SolutionTriple:
    """Image of a solution under the invariance group; again a solution."""
    shifts = (p.s1, p.s2, p.s3)
    consts = (p.f0, p.g0, p.h0)
    bigs0 = (p.F0, p.G0, p.H0)
    a1, a2, a3, a4, c = p.a1, p.a2, p.a3, p.a4, p.c

    def small(fn, k0, sh):
        return lambda x: k0 + a1 * np.asarray(x) + a2 * fn(a3 * np.asarray(x) + sh)

    def big(Fn_, fn, B0, sh):
        def out(x):
            u = a3 * np.asarray(x) + sh
            return B0 + a4 * np.asarray(x) + a2 * a2 * Fn_(u) + 2 * a2 * c * fn(u)
        return out

    def first(dfn, sh):
        return lambda x: a1 + a2 * a3 * dfn(a3 * np.asarray(x) + sh)

    def second(d2fn, sh):
        return lambda x: a2 * a3 * a3 * d2fn(a3 * np.asarray(x) + sh)

    prims = None
    if s.antiderivatives is not None:
        def prim(P, k0, sh):
            return lambda x: k0 * np.asarray(x) + 0.5 * a1 * np.asarray(x) ** 2 + (a2 / a3) * P(a3 * np.asarray(x) + sh)
        prims = tuple(prim(P, k0, sh) for P, k0, sh in zip(s.antiderivatives, consts, shifts))

    poles = tuple(tuple((q - sh) / a3 for q in slot) for slot, sh in zip(s.poles, shifts))
    return replace(
        s,
        f=small(s.f, consts[0], shifts[0]),
        g=small(s.g, consts[1], shifts[1]),
        h=small(s.h, consts[2], shifts[2]),
        F=big(s.F, s.f, bigs0[0], shifts[0]),
        G=big(s.G, s.g, bigs0[1], shifts[1]),
        H=big(s.H, s.h, bigs0[2], shifts[2]),
        df=first(s.df, shifts[0]),
        dg=first(s.dg, shifts[1]),
        dh=first(s.dh, shifts[2]),
        d2f=second(s.d2f, shifts[0]),
        d2g=second(s.d2g, shifts[1]),
        d2h=second(s.d2h, shifts[2]),
        params={"base": s.params, "symmetry": p},
        poles=poles,
        antiderivatives=prims,
    )
