"""Command-line front end: ``threebody-fe {eval,verify,limits,potential,lax}``.

A JSON config (``--config``) supplies the family/chain/lax records and the
sampling settings; command-line flags override it.  Exit codes: 0 all checks
pass, 1 a residual check failed, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from .chain import PhiChain, chain_functions, random_chain
from .elliptic import EllipticError, WeierstrassParams
from .families import make_identical_solution
from .lax import (
    ProximityError,
    ThreeBodyState,
    b_functions,
    db_functions,
    det91_residual,
    elliptic_preset,
    energy,
    eq84_residual,
    hyperbolic_preset,
    integrate_motion,
    isospectrality_report,
    phi_cocycle_residual,
    potential_from_A,
    rational_preset,
)
from .limits import DEFAULT_EPSILONS, LIMITS, run_limit
from .serialize import (
    ConfigError,
    decode_complex,
    dumps,
    triple_from_record,
    weier_from_record,
)
from .threebody import potentials_from_triple, schrodinger_residual
from .verify import (
    AllSkippedError,
    SampleSpec,
    addition54_residual,
    det22_residual,
    eq32_residual,
    eq34_residual,
    fe14_residual,
    fs_sigma_determinant_residual,
    ode40_report,
    sutherland4_residual,
)

__all__ = ["main", "build_parser", "RunConfig", "SUITES"]

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

SUITES = (
    "addition54", "cocycle", "det22", "det91", "eq32", "eq34", "fe14", "fs_sigma",
    "lax", "limits", "ode40", "schrodinger", "sutherland4",
)

DEFAULT_FAMILY = {
    "family": "elliptic",
    "params": {"alpha": 1.0, "beta": 0.2, "gamma1": 0.1, "gamma2": -0.3, "gamma3": 0.05,
               "a1": {"re": 0.2, "im": 0.1}, "a2": -0.15},
    "weier": {"g2": {"re": 0.7, "im": 0.2}, "g3": {"re": -0.3, "im": 0.1}},
}
DEFAULT_WEIER = {"g2": {"re": 0.7, "im": 0.2}, "g3": {"re": -0.3, "im": 0.1}}
DEFAULT_LAX = {"preset": "rational", "gamma": {"re": 0.0, "im": 1.0},
               "q0": [-1.5, 0.1, 1.6], "p0": [0.4, -0.1, -0.3], "dt": 1e-3, "T": 10.0,
               "exclusion_radius": 0.05}

# default tolerances per suite
TOLERANCES = {
    "fe14": 1e-8, "det22": 1e-7, "sutherland4": 1e-10, "eq32": 1e-8, "eq34": 1e-8,
    "ode40": 1e-8, "addition54": 1e-8, "fs_sigma": 1e-7, "schrodinger": 1e-7,
    "lax": 1e-8, "cocycle": 1e-9, "det91": 1e-7, "limits": 0.9, "spectrum": 1e-6,
}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    record: dict = field(default_factory=dict)
    spec: SampleSpec = field(default_factory=SampleSpec)
    tolerance: float | None = None
    fmt: str = "json"
    out: str | None = None
    suites: tuple = ()

    def tol(self, suite: str) -> float:
        t = self.record.get("tolerances", {}).get(suite, TOLERANCES[suite])
        return float(self.tolerance if self.tolerance is not None else t)


# ---------------------------------------------------------------------------
# config


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config must be a JSON object")
    return data


def _sample_spec(rec: dict, args) -> SampleSpec:
    s = rec.get("sample", {}) or {}
    if not isinstance(s, dict):
        raise ConfigError("sample must be an object")
    seed = args.seed if args.seed is not None else s.get("seed", 0)
    count = args.samples if args.samples is not None else s.get("count", 200)
    domain = tuple(float(v) for v in s.get("domain", (-1.0, 1.0, -1.0, 1.0)))
    radius = float(s.get("pole_exclusion_radius", 0.05))
    if len(domain) != 4:
        raise ConfigError("sample.domain needs four numbers")
    try:
        return SampleSpec(seed=int(seed), count=int(count), domain=domain, pole_exclusion_radius=radius)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"sample: {exc}") from exc


def _resolve(args) -> RunConfig:
    rec = _load_config(args.config)
    if args.tol is not None and not args.tol > 0:
        raise UsageError("--tol must be positive")
    tols = rec.get("tolerances", {})
    if not isinstance(tols, dict) or any(not (isinstance(v, (int, float)) and v > 0) for v in tols.values()):
        raise ConfigError("tolerances must map suite names to positive numbers")
    suites = tuple(getattr(args, "suite", None) or rec.get("suites", ()) or ())
    for s in suites:
        if s not in SUITES:
            raise UsageError(f"unknown suite {s!r}; choose from {', '.join(SUITES)}")
    return RunConfig(args.command, rec, _sample_spec(rec, args), args.tol, args.format, args.out,
                     tuple(sorted(set(suites))))


def _family_record(cfg: RunConfig) -> dict:
    fam = cfg.record.get("family", DEFAULT_FAMILY)
    if isinstance(fam, str):
        fam = {k: v for k, v in cfg.record.items() if k in ("family", "params", "weier", "literal", "chain",
                                                           "alpha1", "s1", "t1", "override")}
    return fam


def _weier(cfg: RunConfig) -> WeierstrassParams:
    rec = cfg.record.get("weier")
    if rec is None:
        fam = cfg.record.get("family")
        rec = fam.get("weier") if isinstance(fam, dict) else None
    return weier_from_record(rec if rec is not None else DEFAULT_WEIER)


def _chain(cfg: RunConfig) -> PhiChain:
    from .serialize import chain_from_record
    rec = cfg.record.get("chain")
    if rec is None:
        return random_chain(cfg.spec.rng(99))
    return chain_from_record(rec)


def _grid(cfg: RunConfig) -> np.ndarray:
    g = cfg.record.get("grid", {}) or {}
    try:
        start, stop, num = float(g.get("start", 0.1)), float(g.get("stop", 1.1)), int(g.get("num", 11))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"grid: {exc}") from exc
    if num < 1:
        raise ConfigError("grid.num must be >= 1")
    return np.linspace(start, stop, num)


def _lax_entries(cfg: RunConfig):
    rec = {**DEFAULT_LAX, **(cfg.record.get("lax", {}) or {})}
    preset = rec.get("preset")
    gamma = decode_complex(rec.get("gamma", 1j), "lax.gamma")
    if preset == "rational":
        return rational_preset(gamma), rec
    if preset == "hyperbolic":
        return hyperbolic_preset(gamma), rec
    if preset == "elliptic":
        w = weier_from_record(rec.get("weier", DEFAULT_WEIER))
        mu = decode_complex(rec.get("mu", {"re": 0.3, "im": 0.2}), "lax.mu")
        offs = tuple(decode_complex(v, "lax.offsets") for v in rec.get("offsets", (0, 0, 0)))
        if len(offs) != 3:
            raise ConfigError("lax.offsets needs three values")
        return elliptic_preset(w, mu, gamma, offs), rec
    raise ConfigError(f"unknown lax preset {preset!r}")


# ---------------------------------------------------------------------------
# output


def _fmt(v: float) -> str:
    return repr(float(v))


def _write(cfg: RunConfig, text: str):
    if cfg.out is None:
        sys.stdout.write(text)
    else:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _tabulate(cfg: RunConfig, x, columns: dict, extra: dict | None = None) -> str:
    """CSV with paired re/im columns, or JSON records with complex values."""
    extra = extra or {}
    if cfg.fmt == "csv":
        header = ["x"]
        for name in columns:
            header += [f"re_{name}", f"im_{name}"]
        header += list(extra)
        rows = []
        for i, xv in enumerate(x):
            row = [_fmt(xv)]
            for vals in columns.values():
                row += [_fmt(vals[i].real), _fmt(vals[i].imag)]
            row += [str(int(bool(v[i]))) for v in extra.values()]
            rows.append(row)
        return _csv_text(header, rows)
    recs = []
    for i, xv in enumerate(x):
        r = {"x": float(xv)}
        r.update({name: complex(vals[i]) for name, vals in columns.items()})
        r.update({name: bool(v[i]) for name, v in extra.items()})
        recs.append(r)
    return dumps({"rows": recs})


# ---------------------------------------------------------------------------
# commands


def cmd_eval(cfg: RunConfig) -> int:
    s = triple_from_record(_family_record(cfg))
    x = _grid(cfg)
    xc = x.astype(complex)
    with np.errstate(all="ignore"):
        cols = {n: np.asarray(fn(xc), dtype=complex) * np.ones_like(xc)
                for n, fn in zip("fghFGH", (*s.small, *s.big))}
    pole = np.zeros(x.shape, dtype=bool)
    r = cfg.spec.pole_exclusion_radius
    for k, loci in enumerate(s.poles):
        for q in loci:
            pole |= np.abs(xc - complex(q)) < r
    for v in cols.values():
        pole |= ~np.isfinite(v)
    _write(cfg, _tabulate(cfg, x, cols, {"pole": pole}))
    return EXIT_OK


def cmd_potential(cfg: RunConfig) -> int:
    s = triple_from_record(_family_record(cfg))
    prec = cfg.record.get("potential", {}) or {}
    pots = potentials_from_triple(s, decode_complex(prec.get("eps1", 0), "eps1"),
                                  decode_complex(prec.get("eps2", 0), "eps2"),
                                  decode_complex(prec.get("E0", 0), "E0"))
    x = _grid(cfg)
    xc = x.astype(complex)
    with np.errstate(all="ignore"):
        cols = {n: np.asarray(u(xc), dtype=complex) * np.ones_like(xc)
                for n, u in (("u1", pots.u1), ("u2", pots.u2), ("u3", pots.u3))}
    _write(cfg, _tabulate(cfg, x, cols))
    return EXIT_OK


def _suite_report(name: str, cfg: RunConfig) -> dict:
    spec, tol = cfg.spec, cfg.tol(name)
    if name in ("fe14", "det22", "schrodinger"):
        s = triple_from_record(_family_record(cfg))
        if name == "fe14":
            return fe14_residual(s, spec, tol).to_dict()
        if name == "det22":
            return det22_residual(s, spec, tol).to_dict()
        prec = cfg.record.get("potential", {}) or {}
        pots = potentials_from_triple(s, decode_complex(prec.get("eps1", 0), "eps1"),
                                      decode_complex(prec.get("eps2", 0), "eps2"),
                                      decode_complex(prec.get("E0", 0), "E0"))
        return schrodinger_residual(s, pots, count=spec.count, seed=spec.seed, tolerance=tol).to_dict()
    if name == "sutherland4":
        rec = cfg.record.get("identical", {}) or {}
        sol = make_identical_solution(decode_complex(rec.get("alpha", 1.0), "identical.alpha"),
                                      decode_complex(rec.get("beta", 0.0), "identical.beta"),
                                      weier_from_record(rec.get("weier", {"g2": 0, "g3": 0})))
        return sutherland4_residual(sol.f, sol.F, spec, tol).to_dict()
    if name in ("eq32", "eq34", "ode40"):
        cf = chain_functions(_chain(cfg))
        if name == "eq32":
            return eq32_residual(cf.quad, spec, tol).to_dict()
        if name == "eq34":
            return eq34_residual(cf.phi, cf.tau, cf.A, spec, tol).to_dict()
        return ode40_report(cf, spec, tol).to_dict()
    if name == "addition54":
        return addition54_residual(_weier(cfg), spec, tol).to_dict()
    if name == "fs_sigma":
        return fs_sigma_determinant_residual(_weier(cfg), spec, tol).to_dict()
    if name in ("lax", "cocycle", "det91"):
        A, _ = _lax_entries(cfg)
        if name == "lax":
            return eq84_residual(A, spec, tol).to_dict()
        if name == "cocycle":
            return phi_cocycle_residual(A, spec, tol).to_dict()
        return det91_residual(b_functions(A), spec, db_functions(A), tol).to_dict()
    if name == "limits":
        eps = _epsilons(cfg)
        ladders = [run_limit(n, eps, min_slope=tol).to_dict() for n in LIMITS]
        return {"name": "limits", "ladders": ladders, "pass": all(l["pass"] for l in ladders)}
    raise UsageError(f"unknown suite {name!r}")


def cmd_verify(cfg: RunConfig) -> int:
    if not cfg.suites:
        raise UsageError("verify needs at least one --suite")
    reports = {}
    for name in cfg.suites:
        try:
            reports[name] = _suite_report(name, cfg)
        except AllSkippedError as exc:
            reports[name] = {"name": name, "pass": False, "error": str(exc)}
    ok = all(r["pass"] for r in reports.values())
    if cfg.fmt == "csv":
        rows = []
        for name, r in reports.items():
            if "ladders" in r:
                for l in r["ladders"]:
                    rows.append([f"limits:{l['name']}", len(l["epsilons"]), "", "", _fmt(l["slope"]),
                                 _fmt(l["min_slope"]), "", int(l["pass"])])
                continue
            rows.append([name, r.get("samples", ""), _fmt(r["max_abs"]) if "max_abs" in r else "",
                         _fmt(r["mean_abs"]) if "mean_abs" in r else "", "",
                         _fmt(r["tolerance"]) if "tolerance" in r else "", r.get("skipped", ""), int(r["pass"])])
        text = _csv_text(["suite", "samples", "max_abs", "mean_abs", "slope", "tolerance", "skipped", "pass"], rows)
    else:
        text = dumps({"suites": reports, "pass": ok, "seed": cfg.spec.seed, "samples": cfg.spec.count})
    _write(cfg, text)
    return EXIT_OK if ok else EXIT_FAIL


def _epsilons(cfg: RunConfig) -> tuple:
    eps = cfg.record.get("limits", {}).get("epsilons", DEFAULT_EPSILONS)
    try:
        eps = tuple(float(e) for e in eps)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"limits.epsilons: {exc}") from exc
    for e in eps:
        if not e > 0:
            raise ConfigError(f"limits.epsilons must be positive (got {e})")
    if len(eps) < 2:
        raise ConfigError("limits.epsilons needs at least two values")
    return eps


def cmd_limits(cfg: RunConfig) -> int:
    eps = _epsilons(cfg)
    tol = cfg.tol("limits")
    ladders = [run_limit(n, eps, min_slope=tol) for n in LIMITS]
    ok = all(l.passed for l in ladders)
    if cfg.fmt == "csv":
        rows = []
        for l in ladders:
            for e, d in zip(l.epsilons, l.deviations):
                rows.append([l.name, _fmt(e), _fmt(d), _fmt(l.slope), int(l.passed)])
        text = _csv_text(["limit", "epsilon", "max_deviation", "slope", "pass"], rows)
    else:
        text = dumps({"limits": [l.to_dict() for l in ladders], "pass": ok})
    _write(cfg, text)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_lax(cfg: RunConfig, trajectory: str | None = None) -> int:
    A, rec = _lax_entries(cfg)
    try:
        q0 = [float(v) for v in rec["q0"]]
        p0 = [float(v) for v in rec["p0"]]
        dt, T = float(rec["dt"]), float(rec["T"])
        radius = float(rec.get("exclusion_radius", 0.05))
        state = ThreeBodyState(q0, p0)
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"lax: {exc}") from exc
    if not (dt > 0 and T > 0):
        raise ConfigError("lax.dt and lax.T must be positive")
    V = potential_from_A(A)
    try:
        traj = integrate_motion(V, state, dt, T, radius)
    except ProximityError as exc:
        out = {"pass": False, "error": str(exc), "t": exc.t, "pair": [exc.pair[0] + 1, exc.pair[1] + 1]}
        _write(cfg, dumps(out))
        return EXIT_FAIL
    tol = cfg.tolerance if cfg.tolerance is not None else cfg.record.get("tolerances", {}).get(
        "spectrum", TOLERANCES["spectrum"])
    rep = isospectrality_report(A, traj, float(tol))
    E = energy(A, traj.q, traj.p)
    e_drift = float(np.max(np.abs(E - E[0])) / max(abs(E[0]), 1.0))
    mom = traj.p.sum(axis=1)
    body = {
        "preset": A.name,
        "spectrum": rep.to_dict(),
        "energy_drift": e_drift,
        "momentum_drift": float(np.max(np.abs(mom - mom[0]))),
        "max_imag_force": traj.max_imag_force,
        "pass": rep.passed,
    }
    _write(cfg, dumps(body))
    if trajectory is not None:
        rows = [[_fmt(t), *map(_fmt, q), *map(_fmt, p), _fmt(a.real), _fmt(b.real), _fmt(c.real)]
                for t, q, p, a, b, c in zip(traj.t, traj.q, traj.p, rep.trL, rep.trL2, rep.trL3)]
        with open(trajectory, "w", encoding="utf-8", newline="") as fh:
            fh.write(_csv_text(["t", "q1", "q2", "q3", "p1", "p2", "p3", "trL", "trL2", "trL3"], rows))
    return EXIT_OK if rep.passed else EXIT_FAIL


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON config file")
    common.add_argument("--seed", type=int, help="sampling seed (default 0)")
    common.add_argument("--samples", type=int, help="number of samples")
    common.add_argument("--tol", type=float, help="override every tolerance")
    common.add_argument("--format", choices=("csv", "json"), default="json")
    common.add_argument("--out", metavar="PATH", help="write output here instead of stdout")

    p = _Parser(prog="threebody-fe", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("eval", parents=[common], help="tabulate f, g, h, F, G, H on a grid")
    v = sub.add_parser("verify", parents=[common], help="run residual suites")
    v.add_argument("--suite", action="append", metavar="NAME", help=f"one of: {', '.join(SUITES)}")
    sub.add_parser("limits", parents=[common], help="limit-convergence ladders")
    sub.add_parser("potential", parents=[common], help="tabulate the pair potentials")
    lx = sub.add_parser("lax", parents=[common], help="integrate the motion and check isospectrality")
    lx.add_argument("--trajectory", metavar="PATH", help="also write the trajectory CSV")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _resolve(args)
        if args.command == "eval":
            return cmd_eval(cfg)
        if args.command == "verify":
            return cmd_verify(cfg)
        if args.command == "limits":
            return cmd_limits(cfg)
        if args.command == "potential":
            return cmd_potential(cfg)
        return cmd_lax(cfg, args.trajectory)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EllipticError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
