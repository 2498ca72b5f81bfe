"""Degenerate-limit ladders: deviation versus a small parameter and fitted log-log slope."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain import PhiChain, StarForms, chain_double_star, chain_functions
from .families import (
    EntireFamilyParams,
    PolynomialFamilyParams,
    make_entire_solution,
    make_polynomial_solution,
)

__all__ = [
    "DEFAULT_EPSILONS",
    "LIMITS",
    "LimitLadder",
    "limit_grid",
    "fit_slope",
    "c3_ladder",
    "c2_ladder",
    "lambda_ladder",
    "entire_from_polynomial",
    "run_limit",
]

DEFAULT_EPSILONS = (1e-2, 1e-3, 1e-4)
LIMITS = ("c3", "c2", "lambda")


@dataclass(frozen=True)
class LimitLadder:
    """Max deviation on the grid for each ``ε`` and the least-squares slope of ``log dev`` on ``log ε``."""

    name: str
    epsilons: tuple
    deviations: tuple
    slope: float
    min_slope: float = 0.9

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.slope) and self.slope >= self.min_slope)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "epsilons": list(self.epsilons),
            "max_deviation": list(self.deviations),
            "slope": self.slope,
            "min_slope": self.min_slope,
            "pass": self.passed,
        }


def limit_grid(n: int = 41, half_width: float = 1.0) -> np.ndarray:
    return np.linspace(-half_width, half_width, n).astype(complex)


def _check_epsilons(epsilons) -> tuple:
    eps = tuple(float(e) for e in epsilons)
    if len(eps) < 2:
        raise ValueError("a ladder needs at least two ε values")
    for e in eps:
        if not np.isfinite(e) or e <= 0:
            raise ValueError(f"ε must be positive and finite, got {e!r}")
    return eps


def fit_slope(epsilons, deviations) -> float:
    le = np.log(np.asarray(epsilons, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        ld = np.log(np.asarray(deviations, dtype=float))
    if not np.all(np.isfinite(ld)):
        return float("nan")
    return float(np.polyfit(le, ld, 1)[0])


def _ladder(name, epsilons, deviation, min_slope) -> LimitLadder:
    eps = _check_epsilons(epsilons)
    devs = tuple(float(deviation(e)) for e in eps)
    return LimitLadder(name, eps, devs, fit_slope(eps, devs), min_slope)


def c3_ladder(c0=0.5, c1=1.0, c2=0.75, epsilons=DEFAULT_EPSILONS, grid=None,
              min_slope: float = 0.9) -> LimitLadder:
    """``max |u(x; c3=ε) - u*(x)|`` with ``c0, c1, c2`` held fixed."""
    x = limit_grid() if grid is None else np.asarray(grid, dtype=complex)
    target = StarForms(complex(c0), complex(c1), complex(c2)).u(x)

    def dev(e):
        cf = chain_functions(PhiChain(c0, c1, c2, e))
        return np.max(np.abs(cf.u(x) - target))
    return _ladder("c3", epsilons, dev, min_slope)


def c2_ladder(c0=0.5, c1=1.0, epsilons=DEFAULT_EPSILONS, grid=None,
              min_slope: float = 0.9) -> LimitLadder:
    """``max |φ*(x; c2=ε) - φ**(x)|``."""
    x = limit_grid() if grid is None else np.asarray(grid, dtype=complex)
    target = chain_double_star(c0, c1, 0.0).phi(x)

    def dev(e):
        return np.max(np.abs(StarForms(complex(c0), complex(c1), complex(e)).phi(x) - target))
    return _ladder("c2", epsilons, dev, min_slope)


def entire_from_polynomial(p: PolynomialFamilyParams, lam: float) -> EntireFamilyParams:
    """Entire-family parameters whose ``f, g, h`` tend to the polynomial ones as ``λ → 0``.

    ``α_k = 2α/λ² + β_k/λ``, ``β = -2α/λ``, ``γ_k = γ_k^poly - α_k``.
    """
    betas = (p.beta1, p.beta2, p.beta3)
    gammas = (p.gamma1, p.gamma2, p.gamma3)
    alphas = tuple(2 * p.alpha / lam**2 + b / lam for b in betas)
    return EntireFamilyParams(alphas[0], alphas[1], alphas[2], lam, -2 * p.alpha / lam,
                              *(g - a for g, a in zip(gammas, alphas)))


def lambda_ladder(p: PolynomialFamilyParams | None = None, epsilons=DEFAULT_EPSILONS, grid=None,
                  min_slope: float = 0.9) -> LimitLadder:
    """``max |f_entire - f_poly|`` (and ``g``, ``h``) as the exponent rate ``λ = ε → 0``."""
    if p is None:
        p = PolynomialFamilyParams(alpha=0.5, beta1=0.3, beta2=-0.2, beta3=0.4,
                                   gamma1=0.1, gamma2=-0.3, gamma3=0.2)
    x = limit_grid() if grid is None else np.asarray(grid, dtype=complex)
    poly = make_polynomial_solution(p)
    target = [fn(x) for fn in poly.small]

    def dev(e):
        ent = make_entire_solution(entire_from_polynomial(p, e))
        return max(np.max(np.abs(fn(x) - t)) for fn, t in zip(ent.small, target))
    return _ladder("lambda", epsilons, dev, min_slope)


def run_limit(name: str, epsilons=DEFAULT_EPSILONS, **kw) -> LimitLadder:
    if name == "c3":
        return c3_ladder(epsilons=epsilons, **kw)
    if name == "c2":
        return c2_ladder(epsilons=epsilons, **kw)
    if name == "lambda":
        return lambda_ladder(epsilons=epsilons, **kw)
    raise ValueError(f"unknown limit {name!r}; expected one of {LIMITS}")
