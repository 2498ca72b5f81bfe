"""Weierstrass elliptic functions for arbitrary complex invariants.

Values are obtained from the Laurent expansion of ``℘`` about the origin,
applied to an argument that has been halved until it lies inside a trusted
disc, and then carried back out with the duplication formulas for ``℘``,
``℘'``, ``ζ`` and ``log σ``.  No lattice periods are ever computed; points
close to a lattice point are detected purely by the size of ``℘``.

Scalar calls raise :class:`NearPoleError` on such points.  Array calls
return ``nan`` in the flagged positions so that samplers can count and skip
them.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "EllipticError",
    "PoleAtOriginError",
    "NearPoleError",
    "ReductionError",
    "DegenerateConfigurationError",
    "WeierstrassParams",
    "WeierValues",
    "EllipticEvaluator",
    "laurent_coefficients",
    "p_addition_check",
]

MAX_HALVINGS = 60


class EllipticError(ArithmeticError):
    """Base class for evaluation failures of the Weierstrass functions."""


class PoleAtOriginError(EllipticError):
    pass


class NearPoleError(EllipticError):
    """Raised when ``|℘(z)|`` exceeds the overflow threshold (lattice-adjacent z)."""


class ReductionError(EllipticError):
    pass


class DegenerateConfigurationError(EllipticError):
    pass


def _check_finite(z: complex, name: str = "argument") -> complex:
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError(f"{name} must be finite, got {z!r}")
    return z


@dataclass(frozen=True)
class WeierstrassParams:
    """Invariants ``(g2, g3)`` of ``℘'^2 = 4℘^3 - g2 ℘ - g3``."""

    g2: complex = 0j
    g3: complex = 0j

    def __post_init__(self):
        object.__setattr__(self, "g2", _check_finite(self.g2, "g2"))
        object.__setattr__(self, "g3", _check_finite(self.g3, "g3"))

    def scaled(self, lam: complex) -> "WeierstrassParams":
        """Invariants of the lattice scaled by ``lam`` (``℘(λz; λ⁻⁴g2, λ⁻⁶g3) = λ⁻²℘(z)``)."""
        return WeierstrassParams(self.g2 * lam**-4, self.g3 * lam**-6)


def laurent_coefficients(g2: complex, g3: complex, order: int) -> np.ndarray:
    """Coefficients ``c_2 .. c_{order+1}`` of ``℘(z) = z^-2 + Σ c_k z^(2k-2)``."""
    if order < 2:
        raise ValueError("order must be at least 2")
    c = np.zeros(order + 2, dtype=complex)
    c[2] = g2 / 20
    if order + 1 >= 3:
        c[3] = g3 / 28
    for k in range(4, order + 2):
        s = sum(c[m] * c[k - m] for m in range(2, k - 1))
        c[k] = 3.0 / ((2 * k + 1) * (k - 3)) * s
    return c[2:]


@dataclass(frozen=True)
class WeierValues:
    """Bundle of ``℘, ℘', ζ, log σ`` at a set of points plus the overflow mask."""

    p: np.ndarray
    dp: np.ndarray
    zeta: np.ndarray
    log_sigma: np.ndarray
    overflow: np.ndarray

    @property
    def sigma(self) -> np.ndarray:
        with np.errstate(over="ignore", invalid="ignore"):
            return np.exp(self.log_sigma)


@dataclass(frozen=True)
class EllipticEvaluator:
    """Immutable evaluator for ``℘, ℘', ζ, σ`` with fixed invariants.

    ``series_order`` Laurent coefficients are used inside the disc of radius
    ``reduction_radius`` (by default ``0.3 min(1, |g2|^-1/4, |g3|^-1/6)``).
    """

    params: WeierstrassParams = field(default_factory=WeierstrassParams)
    series_order: int = 30
    reduction_radius: float | None = None
    overflow_threshold: float = 1e12
    coeff_cache: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.series_order < 10:
            raise ValueError("series_order must be >= 10")
        if self.reduction_radius is None:
            r = 1.0
            g2, g3 = self.params.g2, self.params.g3
            if g2 != 0:
                r = min(r, abs(g2) ** -0.25)
            if g3 != 0:
                r = min(r, abs(g3) ** (-1 / 6))
            if g2 == 0 and g3 == 0:
                # every Laurent coefficient vanishes: the series is exact
                r = math.inf
            object.__setattr__(self, "reduction_radius", 0.3 * r)
        elif not self.reduction_radius > 0:
            raise ValueError("reduction_radius must be positive")
        coeffs = laurent_coefficients(self.params.g2, self.params.g3, self.series_order)
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeff_cache", coeffs)

    @classmethod
    def from_invariants(cls, g2: complex = 0j, g3: complex = 0j, **kw) -> "EllipticEvaluator":
        return cls(WeierstrassParams(g2, g3), **kw)

    @property
    def g2(self) -> complex:
        return self.params.g2

    @property
    def g3(self) -> complex:
        return self.params.g3

    # -- series ---------------------------------------------------------

    def _series(self, w: np.ndarray):
        c = self.coeff_cache
        t = w * w
        n = len(c)
        # Horner in t for the four regular parts
        sp = np.zeros_like(w)
        sdp = np.zeros_like(w)
        sz = np.zeros_like(w)
        sl = np.zeros_like(w)
        for i in range(n - 1, -1, -1):
            k = i + 2
            sp = sp * t + c[i]
            sdp = sdp * t + (2 * k - 2) * c[i]
            sz = sz * t + c[i] / (2 * k - 1)
            sl = sl * t + c[i] / (2 * k * (2 * k - 1))
        # sp = Σ c_k t^(k-2); the others likewise start at t^0
        p = 1.0 / t + sp * t
        dp = -2.0 / (w * t) + w * sdp
        zeta = 1.0 / w - w * t * sz
        log_sigma = np.log(w) - t * t * sl
        return p, dp, zeta, log_sigma

    # -- core -----------------------------------------------------------

    def evaluate(self, z) -> WeierValues:
        """Evaluate all functions at ``z`` (scalar or array); never raises on poles."""
        z = np.asarray(z, dtype=complex)
        shape = z.shape
        zf = z.reshape(-1)
        if not np.all(np.isfinite(zf)):
            raise ValueError("arguments must be finite")
        mag = np.abs(zf)
        r = self.reduction_radius
        k = np.zeros(zf.shape, dtype=int)
        big = mag > r
        if np.any(big):
            k[big] = np.ceil(np.log2(mag[big] / r)).astype(int)
            # guard against log2 rounding leaving |w| marginally above r
            k[big] += (np.ldexp(mag[big], -k[big]) > r).astype(int)
        if np.any(k > MAX_HALVINGS):
            raise ReductionError(
                f"argument reduction needs more than {MAX_HALVINGS} halvings"
            )
        zero = zf == 0
        w = np.ldexp(zf.real, -k) + 1j * np.ldexp(zf.imag, -k)
        w = np.where(zero, 1.0, w)
        with np.errstate(all="ignore"):
            p, dp, zeta, ls = self._series(w)
            g2, g3 = self.params.g2, self.params.g3
            kmax = int(k.max()) if k.size else 0
            for step in range(kmax):
                m = k > step
                pm, dpm = p[m], dp[m]
                pm2 = pm * pm
                # x-only duplication keeps rounding on the curve; tangent
                # doubling (¼m² - 2℘) amplifies it by ~8x per step
                num = pm2 * pm2 + 0.5 * g2 * pm2 + 2.0 * g3 * pm + g2 * g2 / 16.0
                dnum = 4.0 * pm2 * pm + g2 * pm + 2.0 * g3
                cub = 4.0 * pm2 * pm - g2 * pm - g3
                dcub = 12.0 * pm2 - g2
                slope = (6.0 * pm2 - 0.5 * g2) / dpm
                p[m] = num / cub
                dp[m] = (dnum * cub - num * dcub) / (2.0 * cub * dpm)
                zeta[m] = 2.0 * zeta[m] + 0.5 * slope
                ls[m] = 4.0 * ls[m] + np.log(-dpm)
        bad = ~np.isfinite(p) | ~np.isfinite(dp) | (np.abs(p) > self.overflow_threshold)
        bad |= zero
        nan = complex(np.nan, np.nan)
        p = np.where(bad, nan, p)
        dp = np.where(bad, nan, dp)
        zeta = np.where(bad, nan, zeta)
        ls = np.where(zero, complex(-np.inf, 0.0), np.where(bad, nan, ls))
        return WeierValues(
            p.reshape(shape),
            dp.reshape(shape),
            zeta.reshape(shape),
            ls.reshape(shape),
            bad.reshape(shape),
        )

    def _scalar_or_array(self, z, attr: str):
        scalar = np.ndim(z) == 0
        if scalar:
            zc = _check_finite(z)
            if zc == 0:
                raise PoleAtOriginError(f"{attr} has a pole at z = 0")
        vals = self.evaluate(z)
        out = getattr(vals, attr)
        if scalar:
            if bool(vals.overflow):
                raise NearPoleError(f"|℘({complex(z)})| exceeds {self.overflow_threshold:g}")
            return complex(out)
        return out

    def p(self, z):
        """``℘(z)``."""
        return self._scalar_or_array(z, "p")

    def p_prime(self, z):
        """``℘'(z)``, normalised so that ``℘'(z) ≈ -2/z^3`` near 0."""
        return self._scalar_or_array(z, "dp")

    def p_second(self, z):
        """``℘''(z) = 6℘^2 - g2/2``."""
        pz = self.p(z)
        return 6.0 * pz * pz - 0.5 * self.params.g2

    def zeta(self, z):
        """Weierstrass ``ζ(z)``, with ``ζ' = -℘``."""
        return self._scalar_or_array(z, "zeta")

    def log_sigma(self, z):
        """``log σ(z)`` on an unspecified branch (only ``exp`` of it is meaningful)."""
        scalar = np.ndim(z) == 0
        if scalar and complex(z) == 0:
            return complex(-math.inf, 0.0)
        vals = self.evaluate(z)
        if scalar:
            if bool(vals.overflow):
                raise NearPoleError(f"σ evaluation at {complex(z)} is lattice-adjacent")
            return complex(vals.log_sigma)
        return vals.log_sigma

    def sigma(self, z):
        """``σ(z)``; raises :class:`OverflowError` when it leaves double range."""
        scalar = np.ndim(z) == 0
        if scalar and complex(z) == 0:
            return 0j
        ls = self.log_sigma(z)
        if scalar:
            if ls.real > 709.0:
                raise OverflowError(f"|σ({complex(z)})| overflows; use log_sigma")
            return cmath.exp(ls)
        with np.errstate(over="ignore", invalid="ignore"):
            out = np.exp(ls)
        return np.where(np.asarray(z) == 0, 0j, out)

    def ode_residual(self, z) -> np.ndarray:
        """Normalised residual ``|℘'^2 - (4℘^3 - g2℘ - g3)| / (1 + |℘|^3)``."""
        v = self.evaluate(z)
        lhs = v.dp**2
        rhs = 4 * v.p**3 - self.params.g2 * v.p - self.params.g3
        return np.abs(lhs - rhs) / (1 + np.abs(v.p) ** 3)


def p_addition_check(ev: EllipticEvaluator, x: complex, alpha: complex) -> float:
    """Residual of the addition theorem for ``℘(x+α) - ℘(α)``.

    The right side is ``-½℘'(x)℘'(α)/D^2 + (3℘(α)^2 - g2/4)/D + ½℘'(α)^2/D^2``
    with ``D = ℘(x) - ℘(α)``.
    """
    x = _check_finite(x, "x")
    alpha = _check_finite(alpha, "alpha")
    px, dpx = ev.p(x), ev.p_prime(x)
    pa, dpa = ev.p(alpha), ev.p_prime(alpha)
    lhs = ev.p(x + alpha) - pa
    d = px - pa
    if abs(d) < 1e-12:
        raise DegenerateConfigurationError("℘(x) = ℘(α): addition formula is singular")
    rhs = -0.5 * dpx * dpa / d**2 + (3 * pa**2 - ev.params.g2 / 4) / d + 0.5 * (dpa / d) ** 2
    return abs(lhs - rhs)
