"""Seeded residual samplers producing pass/fail reports."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .chain import (
    ChainFunctions,
    PhiChain,
    Quadruple,
    ode40_residual,
    triad_from_chain,
)
from .elliptic import (
    DegenerateConfigurationError,
    EllipticError,
    EllipticEvaluator,
    WeierstrassParams,
    p_addition_check,
)
from .families import SolutionTriple

__all__ = [
    "AllSkippedError",
    "ResidualReport",
    "SampleSpec",
    "sample_points",
    "report_from_values",
    "fe14_residual",
    "det22_values",
    "det22_residual",
    "sutherland4_residual",
    "eq32_residual",
    "eq34_residual",
    "ode40_report",
    "addition54_residual",
    "fs_sigma_values",
    "fs_sigma_determinant_residual",
    "mixing_determinant_scan",
    "MixingScan",
]


class AllSkippedError(RuntimeError):
    """Every sample fell on a pole locus or produced a non-finite value."""


@dataclass(frozen=True)
class SampleSpec:
    """Seeded sampler over a rectangle ``(re_min, re_max, im_min, im_max)``."""

    seed: int = 0
    count: int = 200
    domain: tuple[float, float, float, float] = (-2.0, 2.0, -2.0, 2.0)
    pole_exclusion_radius: float = 0.05

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.pole_exclusion_radius < 0:
            raise ValueError("pole_exclusion_radius must be >= 0")
        lo_r, hi_r, lo_i, hi_i = self.domain
        if not (hi_r >= lo_r and hi_i >= lo_i):
            raise ValueError("domain must be (re_min, re_max, im_min, im_max)")

    @classmethod
    def square(cls, half_width: float, **kw) -> "SampleSpec":
        h = float(half_width)
        return cls(domain=(-h, h, -h, h), **kw)

    def rng(self, stream: int = 0) -> np.random.Generator:
        # counter-based: the seed is the key, so blocks are reproducible
        return np.random.Generator(np.random.Philox(key=[self.seed, stream]))


def sample_points(spec: SampleSpec, n_coords: int = 2, stream: int = 0) -> list[np.ndarray]:
    """``n_coords`` arrays of ``spec.count`` complex points drawn from the domain."""
    g = spec.rng(stream)
    lo_r, hi_r, lo_i, hi_i = spec.domain
    u = g.random((n_coords, 2, spec.count))
    pts = lo_r + (hi_r - lo_r) * u[:, 0] + 1j * (lo_i + (hi_i - lo_i) * u[:, 1])
    return [pts[k] for k in range(n_coords)]


@dataclass(frozen=True)
class ResidualReport:
    name: str
    samples: int
    max_abs: float
    mean_abs: float
    worst_point: tuple
    tolerance: float
    passed: bool
    skipped: int = 0
    notes: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        d["worst_point"] = [complex(v) for v in self.worst_point]
        return d

    def merge(self, other: "ResidualReport") -> "ResidualReport":
        """Combine reports over disjoint sample blocks."""
        used_a = self.samples - self.skipped
        used_b = other.samples - other.skipped
        used = used_a + used_b
        mean = (self.mean_abs * used_a + other.mean_abs * used_b) / used if used else 0.0
        worst = self if self.max_abs >= other.max_abs else other
        tol = min(self.tolerance, other.tolerance)
        mx = max(self.max_abs, other.max_abs)
        return ResidualReport(self.name, self.samples + other.samples, mx, mean, worst.worst_point,
                              tol, bool(mx <= tol), self.skipped + other.skipped, {**other.notes, **self.notes})


def report_from_values(name: str, values, points: Sequence[np.ndarray], tolerance: float,
                       skip=None, notes: dict | None = None) -> ResidualReport:
    """Reduce a residual array to a report; non-finite or ``skip`` entries are counted as skipped."""
    values = np.asarray(values, dtype=float)
    bad = ~np.isfinite(values)
    if skip is not None:
        bad |= np.asarray(skip, dtype=bool)
    n = values.size
    nskip = int(bad.sum())
    if nskip >= n:
        raise AllSkippedError(f"{name}: all {n} samples skipped")
    good = np.where(bad, -np.inf, values)
    i = int(np.argmax(good))
    mx = float(values[i])
    mean = float(values[~bad].mean())
    worst = tuple(complex(np.asarray(p).reshape(-1)[i]) for p in points)
    return ResidualReport(name, n, mx, mean, worst, float(tolerance), bool(mx <= tolerance), nskip, notes or {})


def _near(points: np.ndarray, loci, radius: float) -> np.ndarray:
    mask = np.zeros(points.shape, dtype=bool)
    for q in loci:
        mask |= np.abs(points - complex(q)) < radius
    return mask


def _pole_mask(s: SolutionTriple, x, y, z, radius: float) -> np.ndarray:
    return _near(x, s.poles[0], radius) | _near(y, s.poles[1], radius) | _near(z, s.poles[2], radius)


def fe14_residual(s: SolutionTriple, spec: SampleSpec, tolerance: float = 1e-8) -> ResidualReport:
    """``|(f+g+h)^2 - (F+G+H)| / (1 + |F|+|G|+|H|)`` at ``z = -x-y``."""
    x, y = sample_points(spec, 2)
    z = -x - y
    skip = _pole_mask(s, x, y, z, spec.pole_exclusion_radius)
    with np.errstate(all="ignore"):
        r = s.fe_residual(x, y)
    return report_from_values("fe14", r, (x, y), tolerance, skip)


def det22_values(s: SolutionTriple, x, y) -> np.ndarray:
    """``|det[[f'', g'', h''], [f', g', h'], [1, 1, 1]]|`` over the product of row norms."""
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    z = -x - y
    with np.errstate(all="ignore"):
        a = np.stack([s.d2f(x), s.d2g(y), s.d2h(z)], axis=-1) * np.ones(x.shape + (3,))
        b = np.stack([s.df(x), s.dg(y), s.dh(z)], axis=-1) * np.ones(x.shape + (3,))
        det = (a[..., 0] * (b[..., 1] - b[..., 2]) - a[..., 1] * (b[..., 0] - b[..., 2])
               + a[..., 2] * (b[..., 0] - b[..., 1]))
        norm = np.linalg.norm(a, axis=-1) * np.linalg.norm(b, axis=-1) * np.sqrt(3.0)
        out = np.abs(det) / np.where(norm == 0, 1.0, norm)
    return np.where((norm == 0) & (det == 0), 0.0, out)


def det22_residual(s: SolutionTriple, spec: SampleSpec, tolerance: float = 1e-7) -> ResidualReport:
    """Determinant criterion for ``f, g, h`` to admit big functions."""
    x, y = sample_points(spec, 2)
    skip = _pole_mask(s, x, y, -x - y, spec.pole_exclusion_radius)
    return report_from_values("det22", det22_values(s, x, y), (x, y), tolerance, skip)


def sutherland4_residual(f: Callable, F: Callable, spec: SampleSpec, tolerance: float = 1e-10,
                         poles=(0j,), notes: dict | None = None) -> ResidualReport:
    """``|f(x)f(y) + f(y)f(z) + f(z)f(x) - F(x)-F(y)-F(z)| / (1 + |F(x)|+|F(y)|+|F(z)|)``."""
    x, y = sample_points(spec, 2)
    z = -x - y
    r = spec.pole_exclusion_radius
    skip = _near(x, poles, r) | _near(y, poles, r) | _near(z, poles, r)
    with np.errstate(all="ignore"):
        fx, fy, fz = f(x), f(y), f(z)
        Fx, Fy, Fz = F(x), F(y), F(z)
        res = np.abs(fx * fy + fy * fz + fz * fx - Fx - Fy - Fz) / (1 + np.abs(Fx) + np.abs(Fy) + np.abs(Fz))
    return report_from_values("sutherland4", res, (x, y), tolerance, skip, notes)


def eq32_residual(q: Quadruple, spec: SampleSpec, tolerance: float = 1e-8,
                  min_gap: float = 1e-6) -> ResidualReport:
    """``|φ(x+y) - η(x) - η(y) + (γ(x)-γ(y))/(ξ(x)-ξ(y))|``; samples with ``ξ(x) ≈ ξ(y)`` are skipped."""
    x, y = sample_points(spec, 2)
    with np.errstate(all="ignore"):
        xx, xy = q.xi(x), q.xi(y)
        gap = np.abs(xx - xy)
        res = np.abs(q.phi(x + y) - q.eta(x) - q.eta(y) + (q.gamma(x) - q.gamma(y)) / (xx - xy))
    skip = gap < min_gap * (1 + np.abs(xx) + np.abs(xy))
    return report_from_values("eq32", res, (x, y), tolerance, skip)


def eq34_residual(phi: Callable, tau: Callable, A: Callable, spec: SampleSpec,
                  tolerance: float = 1e-8) -> ResidualReport:
    """``|φ(x+y) - φ(x) - φ(y) - τ(x)τ(y)A(x+y)|``."""
    x, y = sample_points(spec, 2)
    with np.errstate(all="ignore"):
        res = np.abs(phi(x + y) - phi(x) - phi(y) - tau(x) * tau(y) * A(x + y))
    return report_from_values("eq34", res, (x, y), tolerance)


def ode40_report(cf: ChainFunctions, spec: SampleSpec, tolerance: float = 1e-8) -> ResidualReport:
    p = cf.chain
    (x,) = sample_points(spec, 1)
    with np.errstate(all="ignore"):
        res = ode40_residual(cf.u, cf.du, p.c0, p.c1, p.c2, p.c3, x)
    return report_from_values("ode40", res, (x,), tolerance)


def addition54_residual(weier: WeierstrassParams, spec: SampleSpec, tolerance: float = 1e-8,
                        r_min: float = 0.1, r_max: float = 1.0) -> ResidualReport:
    """Addition theorem for ``℘`` on ``(x, α)`` pairs in the annulus ``r_min < |·| < r_max``.

    Pairs with ``x + α`` inside the pole-exclusion radius of the origin are
    skipped like any other pole-flagged sample.
    """
    g = spec.rng(7)
    n = spec.count
    rad = np.sqrt(g.uniform(r_min**2, r_max**2, (2, n)))
    ang = g.uniform(0, 2 * np.pi, (2, n))
    x, a = rad * np.exp(1j * ang)
    skip = np.abs(x + a) < spec.pole_exclusion_radius
    ev = EllipticEvaluator(weier)
    res = np.full(n, np.nan)
    for i in np.flatnonzero(~skip):
        try:
            res[i] = p_addition_check(ev, complex(x[i]), complex(a[i]))
        except (EllipticError, DegenerateConfigurationError):
            pass
    return report_from_values("addition54", res, (x, a), tolerance, skip)


def fs_sigma_values(ev: EllipticEvaluator, x, y, z, orientation: str = "classical") -> tuple[np.ndarray, np.ndarray]:
    """Both sides of the σ-quotient determinant identity.

    Left: ``½ det`` with rows ``[1,1,1]``, ``[℘(x),℘(y),℘(z)]``,
    ``[℘'(x),℘'(y),℘'(z)]`` (``orientation="classical"``); ``"reversed"``
    puts the ``℘'`` row first, which flips the sign.  Right:
    ``σ(x+y+z)σ(x-y)σ(y-z)σ(z-x) / (σ(x)σ(y)σ(z))^3``, formed in log space.
    """
    x, y, z = (np.asarray(v, dtype=complex) for v in (x, y, z))
    vx, vy, vz = ev.evaluate(x), ev.evaluate(y), ev.evaluate(z)
    det = (vy.p * vz.dp - vz.p * vy.dp) - (vx.p * vz.dp - vz.p * vx.dp) + (vx.p * vy.dp - vy.p * vx.dp)
    lhs = 0.5 * det
    if orientation == "reversed":
        lhs = -lhs
    elif orientation != "classical":
        raise ValueError("orientation must be 'classical' or 'reversed'")
    with np.errstate(all="ignore"):
        ls = ev.log_sigma
        log_num = ls(x + y + z) + ls(x - y) + ls(y - z) + ls(z - x)
        log_den = 3 * (vx.log_sigma + vy.log_sigma + vz.log_sigma)
        rhs = np.exp(log_num - log_den)
    return lhs, rhs


def fs_sigma_determinant_residual(weier: WeierstrassParams, spec: SampleSpec, tolerance: float = 1e-7,
                                  orientation: str = "classical", on_plane: bool = False) -> ResidualReport:
    """``|L - R| / max(1, |L|, |R|)`` for the σ-quotient determinant identity on generic triples.

    ``on_plane=True`` sets ``z = -x-y`` where both sides vanish.
    """
    x, y, z = sample_points(spec, 3, stream=3)
    if on_plane:
        z = -x - y
    ev = EllipticEvaluator(weier)
    r = spec.pole_exclusion_radius
    skip = (np.abs(x - y) < r) | (np.abs(y - z) < r) | (np.abs(z - x) < r)
    with np.errstate(all="ignore"):
        lhs, rhs = fs_sigma_values(ev, x, y, z, orientation)
        res = np.abs(lhs - rhs) / np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))
    return report_from_values("fs_sigma", res, (x, y, z), tolerance, skip)


@dataclass(frozen=True)
class MixingScan:
    """Max normalized ``det22`` per ``(s1, t1)``; ``expected_zero`` marks ``s1 t1 = s2 t2 = 0``."""

    s_values: tuple
    t_values: tuple
    table: np.ndarray
    expected_zero: np.ndarray
    zero_tol: float
    nonzero_tol: float

    @property
    def passed(self) -> bool:
        z = self.table[self.expected_zero]
        nz = self.table[~self.expected_zero]
        return bool(np.all(z <= self.zero_tol) and np.all(nz > self.nonzero_tol))

    def to_dict(self) -> dict:
        return {
            "s1": list(self.s_values),
            "t1": list(self.t_values),
            "max_det22": self.table.tolist(),
            "expected_zero": self.expected_zero.tolist(),
            "zero_tol": self.zero_tol,
            "nonzero_tol": self.nonzero_tol,
            "pass": self.passed,
        }


def mixing_determinant_scan(p: PhiChain, alpha1, spec: SampleSpec, s_values=None, t_values=None,
                            zero_tol: float = 1e-7, nonzero_tol: float = 1e-3) -> MixingScan:
    """Tabulate ``det22`` for the mixed pairs ``s1 f + s2 g``, ``t1 f + t2 g`` over a grid."""
    s_values = tuple(np.linspace(0, 1, 5) if s_values is None else s_values)
    t_values = tuple(np.linspace(0, 1, 5) if t_values is None else t_values)
    x, y = sample_points(spec, 2)
    table = np.zeros((len(s_values), len(t_values)))
    zero = np.zeros_like(table, dtype=bool)
    for i, s1 in enumerate(s_values):
        for j, t1 in enumerate(t_values):
            tri = triad_from_chain(p, alpha1, s1, t1, override=True)
            v = det22_values(tri, x, y)
            table[i, j] = float(np.nanmax(v))
            zero[i, j] = abs(s1 * t1) == 0 and abs((1 - s1) * (1 - t1)) == 0
    return MixingScan(s_values, t_values, table, zero, zero_tol, nonzero_tol)
