"""Lax-representation conditions and isospectral dynamics for three particles.

Entries are functions of one variable; ``A_jk`` is evaluated at ``q_j - q_k``.
``L = diag(q̇) + A``, ``M = diag(Bτ) + A'`` with ``(Bτ)_j = Σ_l B_jl(q_j - q_l)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .elliptic import EllipticEvaluator, WeierstrassParams
from .families import EllipticTriadParams, SolutionTriple, make_elliptic_solution
from .verify import ResidualReport, SampleSpec, report_from_values, sample_points

__all__ = [
    "PairEntrySet",
    "ThreeBodyState",
    "Trajectory",
    "SpectrumReport",
    "ProximityError",
    "rational_preset",
    "hyperbolic_preset",
    "elliptic_preset",
    "random_entries",
    "b_functions",
    "db_functions",
    "potential_from_A",
    "det91_values",
    "det91_residual",
    "eq84_values",
    "eq84_residual",
    "fit_B_scale",
    "phi_cocycle_values",
    "phi_cocycle_residual",
    "build_L_M",
    "integrate_motion",
    "isospectrality_report",
    "energy",
    "induced_triple",
    "PAIRS",
]

PAIRS = ((0, 1), (0, 2), (1, 2))
Fn = Callable


def _zero(x):
    return np.zeros(np.shape(x), dtype=complex)


@dataclass(frozen=True)
class PairEntrySet:
    """Off-diagonal entry functions ``A[j][k]``, ``dA[j][k]`` and optional ``B[j][k]``.

    Diagonal slots are ignored (``A_jj ≡ 0``).  ``offsets`` are the ``λ_j``
    shifts used by the elliptic preset; ``meta`` records preset parameters.
    """

    A: tuple
    dA: tuple
    B: tuple | None = None
    offsets: tuple = (0.0, 0.0, 0.0)
    name: str = "custom"
    meta: dict = field(default_factory=dict)

    def a(self, j, k, x):
        return self.A[j][k](np.asarray(x, dtype=complex))

    def da(self, j, k, x):
        return self.dA[j][k](np.asarray(x, dtype=complex))

    def b(self, j, k, x):
        if self.B is None:
            return _zero(x)
        return self.B[j][k](np.asarray(x, dtype=complex))

    def with_B(self, B) -> "PairEntrySet":
        return replace(self, B=B)


def _grid(fn):
    """3×3 table of ``fn(j, k)`` with ``None`` on the diagonal."""
    return tuple(tuple(None if j == k else fn(j, k) for k in range(3)) for j in range(3))


def rational_preset(gamma=1j, kappa: complex = -1.0) -> PairEntrySet:
    """``A_jk(x) = γ/x`` with ``B_jk = κ A'_jk = -κγ/x^2``; ``κ = -1`` closes the Lax equation."""
    g = complex(gamma)
    k = complex(kappa)
    return PairEntrySet(
        _grid(lambda j, kk: (lambda x: g / x)),
        _grid(lambda j, kk: (lambda x: -g / (x * x))),
        _grid(lambda j, kk: (lambda x: -k * g / (x * x))),
        name="rational",
        meta={"gamma": g, "kappa": k},
    )


def hyperbolic_preset(gamma=1j) -> PairEntrySet:
    """``A_jk(x) = γ/sinh x`` with ``B_jk(x) = γ/sinh^2 x``."""
    g = complex(gamma)
    return PairEntrySet(
        _grid(lambda j, k: (lambda x: g / np.sinh(x))),
        _grid(lambda j, k: (lambda x: -g * np.cosh(x) / np.sinh(x) ** 2)),
        _grid(lambda j, k: (lambda x: g / np.sinh(x) ** 2)),
        name="hyperbolic",
        meta={"gamma": g},
    )


def elliptic_preset(weier: WeierstrassParams, mu, gamma=1j, offsets=(0.0, 0.0, 0.0),
                    kappa: complex | None = None) -> PairEntrySet:
    """``A_jk(x) = γ σ(y+μ)/(σ(y)σ(μ))`` with ``y = x + λ_j - λ_k`` and ``B_jk = κ ℘(y)``.

    ``κ`` defaults to ``γ``, the value :func:`fit_B_scale` recovers from the
    Lax condition.
    """
    ev = EllipticEvaluator(weier)
    g = complex(gamma)
    mu = complex(mu)
    lam = tuple(complex(v) for v in offsets)
    ls_mu = ev.log_sigma(mu)
    k = g if kappa is None else complex(kappa)

    def entry(j, kk):
        s = lam[j] - lam[kk]

        def A(x):
            y = np.asarray(x, dtype=complex) + s
            return g * np.exp(ev.log_sigma(y + mu) - ev.log_sigma(y) - ls_mu)
        return A

    def dentry(j, kk):
        s = lam[j] - lam[kk]
        A = entry(j, kk)

        def dA(x):
            y = np.asarray(x, dtype=complex) + s
            return A(x) * (ev.zeta(y + mu) - ev.zeta(y))
        return dA

    def bentry(j, kk):
        s = lam[j] - lam[kk]
        return lambda x: k * ev.p(np.asarray(x, dtype=complex) + s)

    return PairEntrySet(
        _grid(entry), _grid(dentry), _grid(bentry), offsets=lam, name="elliptic",
        meta={"gamma": g, "mu": mu, "kappa": k, "weier": weier},
    )


def random_entries(seed: int = 0) -> PairEntrySet:
    """Smooth entries with random coefficients; generically violate every Lax condition."""
    rng = np.random.Generator(np.random.Philox(key=[seed, 17]))
    coef = rng.normal(size=(3, 3, 3)) + 1j * rng.normal(size=(3, 3, 3))

    def entry(j, k):
        c = coef[j, k]
        return lambda x: c[0] + c[1] * x + c[2] * np.exp(0.7 * x)

    def dentry(j, k):
        c = coef[j, k]
        return lambda x: c[1] + 0.7 * c[2] * np.exp(0.7 * x) + 0 * x

    return PairEntrySet(_grid(entry), _grid(dentry), None, name="random", meta={"seed": seed})


# ---------------------------------------------------------------------------
# scalar conditions


def b_functions(A: PairEntrySet) -> tuple[Fn, Fn, Fn]:
    """``b1(x) = -A23(x)A32(-x)``, ``b2(y) = -A31(y)A13(-y)``, ``b3(z) = -A12(z)A21(-z)``."""
    def make(j, k):
        return lambda x: -A.a(j, k, x) * A.a(k, j, -np.asarray(x, dtype=complex))
    return make(1, 2), make(2, 0), make(0, 1)


def db_functions(A: PairEntrySet) -> tuple[Fn, Fn, Fn]:
    """Analytic derivatives ``b_i'`` (the potentials ``V23, V31, V12``)."""
    def make(j, k):
        def fn(x):
            x = np.asarray(x, dtype=complex)
            return A.a(j, k, x) * A.da(k, j, -x) - A.da(j, k, x) * A.a(k, j, -x)
        return fn
    return make(1, 2), make(2, 0), make(0, 1)


def potential_from_A(A: PairEntrySet) -> tuple:
    """3×3 table of ``V_jk(x) = A_jk(x)A'_kj(-x) - A'_jk(x)A_kj(-x)`` (equal to ``b_jk'``)."""
    def make(j, k):
        def V(x):
            x = np.asarray(x, dtype=complex)
            return A.a(j, k, x) * A.da(k, j, -x) - A.da(j, k, x) * A.a(k, j, -x)
        return V
    return _grid(make)


def det91_values(b: tuple, db: tuple, x, y) -> np.ndarray:
    """``|det[[b1', b2', b3'], [b1, b2, b3], [1, 1, 1]]|`` at ``z = -x-y`` over the product of row norms."""
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    z = -x - y
    with np.errstate(all="ignore"):
        top = np.stack([db[0](x), db[1](y), db[2](z)], axis=-1)
        mid = np.stack([b[0](x), b[1](y), b[2](z)], axis=-1)
        det = (top[..., 0] * (mid[..., 1] - mid[..., 2]) - top[..., 1] * (mid[..., 0] - mid[..., 2])
               + top[..., 2] * (mid[..., 0] - mid[..., 1]))
        norm = np.linalg.norm(top, axis=-1) * np.linalg.norm(mid, axis=-1) * np.sqrt(3.0)
        out = np.abs(det) / np.where(norm == 0, 1.0, norm)
    return np.where((norm == 0) & (det == 0), 0.0, out)


def det91_residual(b: tuple, spec: SampleSpec, db: tuple | None = None, tolerance: float = 1e-7,
                   step: float = 1e-5) -> ResidualReport:
    """Determinant condition on ``(b1, b2, b3)``; ``db`` defaults to central differences."""
    if db is None:
        db = tuple((lambda fn: (lambda x: (fn(np.asarray(x) + step) - fn(np.asarray(x) - step)) / (2 * step)))(f)
                   for f in b)
    x, y = sample_points(spec, 2)
    return report_from_values("det91", det91_values(b, db, x, y), (x, y), tolerance)


def _config_args(q):
    q = np.asarray(q, dtype=complex)
    return q[..., :, None] - q[..., None, :]


def eq84_values(A: PairEntrySet, q, B: tuple | None = None, normalized: bool = False) -> np.ndarray:
    """Max over ``j != k`` of ``|Σ_l A_jk(B_jl - B_kl) + A'_jl A_lk - A_jl A'_lk|`` per configuration.

    ``q`` has shape ``(..., 3)``.  With ``normalized`` each sum is divided by
    one plus the sum of the magnitudes of its terms.
    """
    d = _config_args(q)
    Bf = A.B if B is None else B
    shape = d.shape[:-2]
    out = np.zeros(shape)

    def ev(tab, j, k):
        if j == k or tab is None:
            return np.zeros(shape, dtype=complex)
        return tab[j][k](d[..., j, k])

    for j in range(3):
        for k in range(3):
            if j == k:
                continue
            ajk = ev(A.A, j, k)
            tot = np.zeros(shape, dtype=complex)
            scale = np.ones(shape)
            for l in range(3):
                terms = (ajk * ev(Bf, j, l), -ajk * ev(Bf, k, l),
                         ev(A.dA, j, l) * ev(A.A, l, k), -ev(A.A, j, l) * ev(A.dA, l, k))
                for t in terms:
                    tot = tot + t
                    scale = scale + np.abs(t)
            out = np.maximum(out, np.abs(tot) / scale if normalized else np.abs(tot))
    return out


def _configs(spec: SampleSpec, min_sep: float):
    """Real configurations from the real part of the sample domain, pair gaps above ``min_sep``."""
    g = spec.rng(21)
    lo, hi = spec.domain[0], spec.domain[1]
    q = g.uniform(lo, hi, (spec.count, 3))
    gaps = np.abs(_config_args(q))[:, [0, 0, 1], [1, 2, 2]]
    return q, gaps.min(axis=1) < min_sep


def eq84_residual(A: PairEntrySet, spec: SampleSpec, tolerance: float = 1e-8,
                  min_sep: float = 0.1, normalized: bool = False) -> ResidualReport:
    q, skip = _configs(spec, min_sep)
    with np.errstate(all="ignore"):
        vals = eq84_values(A, q, normalized=normalized)
    return report_from_values("eq84", vals, tuple(q.T), tolerance, skip)


def fit_B_scale(A: PairEntrySet, basis: tuple, q) -> tuple[complex, float]:
    """Least-squares ``κ`` for ``B = κ·basis`` in the Lax condition (the residual is affine in ``κ``).

    Returns ``(κ, max residual at κ)``.
    """
    d = _config_args(np.asarray(q))
    rows_a, rows_b = [], []
    for j in range(3):
        for k in range(3):
            if j == k:
                continue
            ajk = A.A[j][k](d[..., j, k])
            const = 0
            lin = 0
            for l in range(3):
                if l != j:
                    lin = lin + ajk * basis[j][l](d[..., j, l])
                if l != k:
                    lin = lin - ajk * basis[k][l](d[..., k, l])
                da_jl = A.dA[j][l](d[..., j, l]) if l != j else 0
                a_lk = A.A[l][k](d[..., l, k]) if l != k else 0
                a_jl = A.A[j][l](d[..., j, l]) if l != j else 0
                da_lk = A.dA[l][k](d[..., l, k]) if l != k else 0
                const = const + da_jl * a_lk - a_jl * da_lk
            rows_a.append(np.ravel(lin))
            rows_b.append(np.ravel(const))
    a = np.concatenate(rows_a)
    b = np.concatenate(rows_b)
    good = np.isfinite(a) & np.isfinite(b)
    a, b = a[good], b[good]
    kappa = -np.vdot(a, b) / np.vdot(a, a)
    return complex(kappa), float(np.max(np.abs(kappa * a + b)))


def phi_cocycle_values(A: PairEntrySet, q, cycle=(0, 1, 2)) -> np.ndarray:
    """``|Φ_jk + Φ_km + Φ_mj| / (1 + |Φ_jk| + |Φ_km| + |Φ_mj|)``.

    ``Φ_jk = (A'_jl A_lk - A_jl A'_lk)/A_jk`` with ``l`` the third index.
    """
    d = _config_args(q)

    def phi(j, k):
        l = 3 - j - k
        num = (A.dA[j][l](d[..., j, l]) * A.A[l][k](d[..., l, k])
               - A.A[j][l](d[..., j, l]) * A.dA[l][k](d[..., l, k]))
        return num / A.A[j][k](d[..., j, k])

    j, k, m = cycle
    a, b, c = phi(j, k), phi(k, m), phi(m, j)
    return np.abs(a + b + c) / (1 + np.abs(a) + np.abs(b) + np.abs(c))


def phi_cocycle_residual(A: PairEntrySet, spec: SampleSpec, tolerance: float = 1e-9,
                         cycle=(0, 1, 2), min_sep: float = 0.1) -> ResidualReport:
    q, skip = _configs(spec, min_sep)
    with np.errstate(all="ignore"):
        vals = phi_cocycle_values(A, q, cycle)
    return report_from_values("cocycle", vals, tuple(q.T), tolerance, skip, {"cycle": list(cycle)})


def induced_triple(A: PairEntrySet) -> SolutionTriple:
    """Triple ``f = ∫b1, g = ∫b2, h = ∫b3`` in elliptic-family form, for the built-in presets."""
    g2 = A.meta.get("gamma", 1.0) ** 2
    if A.name == "rational":
        p = EllipticTriadParams(alpha=-g2, weier=WeierstrassParams(0, 0))
    elif A.name == "hyperbolic":
        # 1/sinh^2 x = ℘(x) - 1/3 on the degenerate lattice g2 = 4/3, g3 = -8/27
        p = EllipticTriadParams(alpha=-g2, beta=-g2 / 3, weier=WeierstrassParams(4 / 3, -8 / 27))
    elif A.name == "elliptic":
        w = A.meta["weier"]
        lam = A.offsets
        pm = EllipticEvaluator(w).p(A.meta["mu"])
        p = EllipticTriadParams(alpha=-g2, beta=-g2 * pm, a1=lam[2] - lam[1], a2=lam[0] - lam[2], weier=w)
    else:
        raise ValueError(f"no induced triple for entry set {A.name!r}")
    return make_elliptic_solution(p)


# ---------------------------------------------------------------------------
# dynamics


class ProximityError(RuntimeError):
    def __init__(self, t: float, pair: tuple[int, int], gap: float):
        super().__init__(f"particles {pair[0] + 1} and {pair[1] + 1} within {gap:.3g} at t = {t:.6g}")
        self.t = t
        self.pair = pair
        self.gap = gap


@dataclass(frozen=True)
class ThreeBodyState:
    q: np.ndarray
    p: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float).copy())
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float).copy())
        if self.q.shape != (3,) or self.p.shape != (3,):
            raise ValueError("q and p must each hold three entries")


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    q: np.ndarray
    p: np.ndarray
    max_imag_force: float = 0.0


def _forces(V: tuple, q: np.ndarray) -> np.ndarray:
    d = q[:, None] - q[None, :]
    acc = np.zeros(3, dtype=complex)
    for j, k in PAIRS:
        acc[j] += V[j][k](d[j, k])
        acc[k] += V[k][j](d[k, j])
    return acc


def integrate_motion(V: tuple, state0: ThreeBodyState, dt: float, T: float,
                     exclusion_radius: float = 0.05) -> Trajectory:
    """Classical RK4 for ``q̈_j = Σ_k V_jk(q_j - q_k)``; forces are real parts of the entry values."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    n = int(round(T / dt))
    q = state0.q.copy()
    p = state0.p.copy()
    ts = state0.t + dt * np.arange(n + 1)
    Q = np.empty((n + 1, 3))
    P = np.empty((n + 1, 3))
    Q[0], P[0] = q, p
    imag = [0.0]

    def check(qq, t):
        for j, k in PAIRS:
            gap = abs(qq[j] - qq[k])
            if gap < exclusion_radius:
                raise ProximityError(t, (j, k), gap)

    def acc(qq):
        a = _forces(V, qq)
        imag[0] = max(imag[0], float(np.max(np.abs(a.imag))))
        return a.real

    check(q, ts[0])
    with np.errstate(all="ignore"):
        for i in range(n):
            k1q, k1p = p, acc(q)
            k2q, k2p = p + 0.5 * dt * k1p, acc(q + 0.5 * dt * k1q)
            k3q, k3p = p + 0.5 * dt * k2p, acc(q + 0.5 * dt * k2q)
            k4q, k4p = p + dt * k3p, acc(q + dt * k3q)
            q = q + dt / 6 * (k1q + 2 * k2q + 2 * k3q + k4q)
            p = p + dt / 6 * (k1p + 2 * k2p + 2 * k3p + k4p)
            check(q, ts[i + 1])
            Q[i + 1], P[i + 1] = q, p
    return Trajectory(ts, Q, P, imag[0])


def build_L_M(A: PairEntrySet, q, p) -> tuple[np.ndarray, np.ndarray]:
    """Lax matrices for one state or a stack of states (``q``, ``p`` of shape ``(..., 3)``)."""
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    d = _config_args(q)
    shape = q.shape[:-1]
    L = np.zeros(shape + (3, 3), dtype=complex)
    M = np.zeros(shape + (3, 3), dtype=complex)
    for j in range(3):
        L[..., j, j] = p[..., j]
        for k in range(3):
            if j == k:
                continue
            L[..., j, k] = A.a(j, k, d[..., j, k])
            M[..., j, k] = A.da(j, k, d[..., j, k])
            M[..., j, j] += A.b(j, k, d[..., j, k])
    return L, M


def energy(A: PairEntrySet, q, p):
    """``½Σp^2 - Σ_{j<k} b_jk(q_j - q_k)``; equals ``½ tr L^2``."""
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    d = _config_args(q)
    e = 0.5 * np.sum(p * p, axis=-1).astype(complex)
    for j, k in PAIRS:
        e = e + A.a(j, k, d[..., j, k]) * A.a(k, j, d[..., k, j])
    return e


@dataclass(frozen=True)
class SpectrumReport:
    times: np.ndarray
    trL: np.ndarray
    trL2: np.ndarray
    trL3: np.ndarray
    drift: dict
    lax_residual: float
    momentum_error: float
    tolerance: float = 1e-6

    @property
    def passed(self) -> bool:
        return all(v <= self.tolerance for v in self.drift.values())

    def to_dict(self) -> dict:
        return {
            "samples": int(self.times.size),
            "t_final": float(self.times[-1]),
            "max_drift_trL": self.drift["trL"],
            "max_drift_trL2": self.drift["trL2"],
            "max_drift_trL3": self.drift["trL3"],
            "lax_residual": self.lax_residual,
            "momentum_error": self.momentum_error,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


def _rel_drift(series: np.ndarray) -> float:
    ref = series[0]
    return float(np.max(np.abs(series - ref)) / max(abs(ref), 1.0))


def isospectrality_report(A: PairEntrySet, traj: Trajectory, tolerance: float = 1e-6) -> SpectrumReport:
    """Trace powers of ``L`` along ``traj`` and the Lax-equation residual.

    Drift is ``max_t |X(t) - X(0)| / max(|X(0)|, 1)``; ``L̇`` is a centred
    difference in ``t``, so ``lax_residual`` is ``O(dt^2)`` even for an exact pair.
    """
    L, M = build_L_M(A, traj.q, traj.p)
    L2 = L @ L
    trL = np.trace(L, axis1=-2, axis2=-1)
    trL2 = np.trace(L2, axis1=-2, axis2=-1)
    trL3 = np.trace(L2 @ L, axis1=-2, axis2=-1)
    dt = traj.t[1] - traj.t[0] if traj.t.size > 1 else 1.0
    if traj.t.size > 2:
        Ldot = (L[2:] - L[:-2]) / (2 * dt)
        comm = L[1:-1] @ M[1:-1] - M[1:-1] @ L[1:-1]
        lax = float(np.max(np.linalg.norm(Ldot - comm, axis=(-2, -1))))
    else:
        lax = float("nan")
    mom = float(np.max(np.abs(trL - traj.p.sum(axis=1))))
    drift = {"trL": _rel_drift(trL), "trL2": _rel_drift(trL2), "trL3": _rel_drift(trL3)}
    return SpectrumReport(traj.t, trL, trL2, trL3, drift, lax, mom, tolerance)
