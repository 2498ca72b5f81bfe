"""Pair potentials, factorized ground state and Schrödinger residuals for three particles."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .families import CALIBRATION_ANCHOR, SolutionTriple
from .verify import ResidualReport, report_from_values

__all__ = [
    "PairPotentials",
    "GroundState",
    "potentials_from_triple",
    "pair_coordinates",
    "laplacian_ratio",
    "fd_laplacian_ratio",
    "schrodinger_residual",
    "fd_laplacian_check",
]

_GL_X, _GL_W = np.polynomial.legendre.leggauss(20)


@dataclass(frozen=True)
class PairPotentials:
    """``u_j = 3 f_j^2 + 2 f_j' - F_j + ε_j`` with ``ε1 + ε2 + ε3 = E0``."""

    triple: SolutionTriple
    eps1: complex
    eps2: complex
    eps3: complex
    E0: complex

    def _u(self, f, df, F, eps):
        def fn(x):
            x = np.asarray(x, dtype=complex)
            fx = f(x)
            return 3 * fx * fx + 2 * df(x) - F(x) + eps
        return fn

    @property
    def u1(self):
        s = self.triple
        return self._u(s.f, s.df, s.F, self.eps1)

    @property
    def u2(self):
        s = self.triple
        return self._u(s.g, s.dg, s.G, self.eps2)

    @property
    def u3(self):
        s = self.triple
        return self._u(s.h, s.dh, s.H, self.eps3)

    def total(self, x1, x2, x3):
        """``U = u1(x2-x3) + u2(x3-x1) + u3(x1-x2)``."""
        a, b, c = pair_coordinates(x1, x2, x3)
        return self.u1(a) + self.u2(b) + self.u3(c)


def potentials_from_triple(s: SolutionTriple, eps1=0.0, eps2=0.0, E0=0.0) -> PairPotentials:
    eps1, eps2, E0 = complex(eps1), complex(eps2), complex(E0)
    return PairPotentials(s, eps1, eps2, E0 - eps1 - eps2, E0)


def pair_coordinates(x1, x2, x3):
    x1, x2, x3 = (np.asarray(v, dtype=complex) for v in (x1, x2, x3))
    return x2 - x3, x3 - x1, x1 - x2


def _segment_integral(fn: Callable, a, b) -> np.ndarray:
    """``∫_a^b fn`` along straight segments (vectorised, fixed 20-point Gauss rule, 4 panels)."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    panels = 4
    total = np.zeros(np.broadcast(a, b).shape, dtype=complex)
    d = (b - a) / panels
    for k in range(panels):
        lo = a + k * d
        mid = lo + 0.5 * d
        t = mid[..., None] + 0.5 * d[..., None] * _GL_X
        total = total + 0.5 * d * (fn(t) @ _GL_W)
    return total


@dataclass(frozen=True)
class GroundState:
    """``log Ψ0 = log ψ1(x2-x3) + log ψ2(x3-x1) + log ψ3(x1-x2)`` with ``(log ψ_j)' = f_j``.

    Each ``log ψ_j`` is normalised to vanish at ``anchor``; closed-form
    primitives are used when the triple carries them, else quadrature along
    the straight segment from the anchor.
    """

    triple: SolutionTriple
    anchor: float = CALIBRATION_ANCHOR

    def _small(self, j):
        return self.triple.small[j]

    def log_psi(self, j: int, x):
        x = np.asarray(x, dtype=complex)
        prims = self.triple.antiderivatives
        if prims is not None:
            P = prims[j]
            return P(x) - P(self.anchor)
        return _segment_integral(self._small(j), np.full(x.shape, self.anchor, dtype=complex), x)

    def log_wavefunction(self, x1, x2, x3):
        a, b, c = pair_coordinates(x1, x2, x3)
        return self.log_psi(0, a) + self.log_psi(1, b) + self.log_psi(2, c)

    def log_ratio(self, x1, x2, x3, d1, d2, d3):
        """``log Ψ0(x + d) - log Ψ0(x)`` integrated locally (no branch ambiguity)."""
        a, b, c = pair_coordinates(x1, x2, x3)
        da, db, dc = pair_coordinates(d1, d2, d3)
        s = self.triple
        return (_segment_integral(s.f, a, a + da) + _segment_integral(s.g, b, b + db)
                + _segment_integral(s.h, c, c + dc))

    def gradient(self, x1, x2, x3):
        """Analytic ``∇ log Ψ0`` from the chain rule."""
        a, b, c = pair_coordinates(x1, x2, x3)
        s = self.triple
        fa, gb, hc = s.f(a), s.g(b), s.h(c)
        return np.stack([hc - gb, fa - hc, gb - fa])


def laplacian_ratio(s: SolutionTriple, x1, x2, x3):
    """``Ψ0^{-1} ΔΨ0 = 3Σf_j^2 - (Σf_j)^2 + 2Σf_j'`` at the pair coordinates."""
    a, b, c = pair_coordinates(x1, x2, x3)
    fa, gb, hc = s.f(a), s.g(b), s.h(c)
    tot = fa + gb + hc
    return 3 * (fa * fa + gb * gb + hc * hc) - tot * tot + 2 * (s.df(a) + s.dg(b) + s.dh(c))


def fd_laplacian_ratio(gs: GroundState, x1, x2, x3, step: float = 1e-4):
    """Second-order central-difference ``Ψ0^{-1} ΔΨ0`` in the three particle coordinates."""
    x1, x2, x3 = (np.asarray(v, dtype=complex) for v in (x1, x2, x3))
    zero = np.zeros_like(x1)
    total = np.zeros_like(x1)
    for j in range(3):
        d = [zero, zero, zero]
        d[j] = zero + step
        up = gs.log_ratio(x1, x2, x3, *d)
        d[j] = zero - step
        down = gs.log_ratio(x1, x2, x3, *d)
        total = total + (np.expm1(up) + np.expm1(down)) / step**2
    return total


def _configurations(rng: np.random.Generator, n: int, spread: float, min_sep: float, real: bool):
    """Configurations ``(x1, x2, x3)`` whose pair coordinates stay ``min_sep`` away from the origin."""
    out = np.empty((3, 0), dtype=complex)
    while out.shape[1] < n:
        m = 2 * (n - out.shape[1]) + 4
        pts = rng.uniform(-spread, spread, (3, m))
        if not real:
            pts = pts + 1j * rng.uniform(-spread, spread, (3, m))
        a, b, c = pair_coordinates(*pts)
        ok = (np.abs(a) > min_sep) & (np.abs(b) > min_sep) & (np.abs(c) > min_sep)
        out = np.concatenate([out, pts[:, ok]], axis=1)
    return out[:, :n]


def schrodinger_residual(s: SolutionTriple, pots: PairPotentials, points=None, count: int = 100,
                         seed: int = 0, spread: float = 1.0, min_sep: float = 0.1,
                         tolerance: float = 1e-7, real: bool = True) -> ResidualReport:
    """``|Ψ0^{-1}ΔΨ0 - (U - E0)|`` with the Laplacian in closed form.

    ``points`` is a ``(3, n)`` array of configurations; otherwise ``count``
    seeded configurations are drawn with pair separations above ``min_sep``.
    Configurations touching a declared pole locus are skipped.
    """
    if points is None:
        rng = np.random.Generator(np.random.Philox(key=[seed, 11]))
        points = _configurations(rng, count, spread, min_sep, real)
    x1, x2, x3 = (np.asarray(p, dtype=complex) for p in points)
    with np.errstate(all="ignore"):
        lap = laplacian_ratio(s, x1, x2, x3)
        res = np.abs(lap - (pots.total(x1, x2, x3) - pots.E0))
    a, b, c = pair_coordinates(x1, x2, x3)
    skip = np.zeros(a.shape, dtype=bool)
    for coord, loci in zip((a, b, c), s.poles):
        for q in loci:
            skip |= np.abs(coord - complex(q)) < min_sep
    return report_from_values("schrodinger", res, (x1, x2, x3), tolerance, skip)


def fd_laplacian_check(s: SolutionTriple, points=None, count: int = 20, seed: int = 0,
                       steps=(1e-4,), spread: float = 1.0, min_sep: float = 0.3,
                       real: bool = True) -> dict:
    """Relative error of the finite-difference Laplacian against the closed form, per step.

    Returns ``{"steps": [...], "max_rel_error": [...], "ratios": [...]}`` where
    ``ratios[i] = err[i] / err[i+1]`` (≈ 4 for a second-order stencil when
    consecutive steps halve).
    """
    if points is None:
        rng = np.random.Generator(np.random.Philox(key=[seed, 13]))
        points = _configurations(rng, count, spread, min_sep, real)
    x1, x2, x3 = (np.asarray(p, dtype=complex) for p in points)
    gs = GroundState(s)
    exact = laplacian_ratio(s, x1, x2, x3)
    errs = []
    for h in steps:
        approx = fd_laplacian_ratio(gs, x1, x2, x3, h)
        rel = np.abs(approx - exact) / (1 + np.abs(exact))
        errs.append(float(np.nanmax(rel)))
    ratios = [errs[i] / errs[i + 1] for i in range(len(errs) - 1)]
    return {"steps": list(steps), "max_rel_error": errs, "ratios": ratios}
