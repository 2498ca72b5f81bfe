"""JSON encoding of complex values and parameter records.

Complex numbers are written as ``{"re": ..., "im": ...}``; plain JSON
numbers are accepted on input.  A family record looks like::

    {"family": "elliptic", "params": {"alpha": 1, "beta": 0, ...},
     "weier": {"g2": {"re": 0.5, "im": 0.1}, "g3": 0.2}}

and a chain record like ``{"family": "chain", "chain": {"c0": ..., "c3": ...},
"alpha1": ..., "s1": 1, "t1": 0}``.
"""

from __future__ import annotations

import dataclasses
import json
import math
from typing import Any

import numpy as np

from .chain import PhiChain, triad_from_chain
from .elliptic import WeierstrassParams
from .families import (
    FAMILIES,
    DegenerateParams,
    EllipticTriadParams,
    EntireFamilyParams,
    PolynomialFamilyParams,
    SolutionTriple,
    make_degenerate_solution,
    make_elliptic_solution,
    make_entire_solution,
    make_identical_solution,
    make_polynomial_solution,
)

__all__ = [
    "ConfigError",
    "encode",
    "decode_complex",
    "dumps",
    "weier_from_record",
    "weier_to_record",
    "params_to_record",
    "triple_from_record",
    "chain_from_record",
    "NAMED_FUNCTIONS",
]


class ConfigError(ValueError):
    """Malformed or inconsistent parameter record."""


def encode(obj: Any) -> Any:
    """Recursively convert to JSON-ready values (complex as ``{"re", "im"}``)."""
    if isinstance(obj, (bool, str)) or obj is None:
        return obj
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [encode(v) for v in obj.tolist()]
    if isinstance(obj, WeierstrassParams):
        return weier_to_record(obj)
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: encode(getattr(obj, f.name)) for f in dataclasses.fields(obj)
                if not callable(getattr(obj, f.name))}
    if isinstance(obj, dict):
        return {str(k): encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [encode(v) for v in obj]
    if callable(obj):
        return getattr(obj, "__name__", "callable")
    raise TypeError(f"cannot encode {type(obj).__name__}")


def _clean(obj):
    # NaN/inf are not JSON; write them as null
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_clean(v) for v in obj]
    return obj


def dumps(obj: Any) -> str:
    """Deterministic JSON text (sorted keys, two-space indent, trailing newline)."""
    return json.dumps(_clean(encode(obj)), sort_keys=True, indent=2, allow_nan=False) + "\n"


def decode_complex(v, name: str = "value") -> complex:
    if isinstance(v, bool):
        raise ConfigError(f"{name}: expected a number, got a boolean")
    if isinstance(v, (int, float, complex)):
        z = complex(v)
    elif isinstance(v, dict) and set(v) <= {"re", "im"} and v:
        try:
            z = complex(float(v.get("re", 0.0)), float(v.get("im", 0.0)))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{name}: bad complex record {v!r}") from exc
    else:
        raise ConfigError(f"{name}: expected a number or {{'re','im'}}, got {v!r}")
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ConfigError(f"{name}: non-finite value")
    return z


def weier_from_record(rec) -> WeierstrassParams:
    if rec is None:
        return WeierstrassParams(0j, 0j)
    if not isinstance(rec, dict):
        raise ConfigError("weier must be an object with g2, g3")
    _reject_unknown(rec, {"g2", "g3"}, "weier")
    return WeierstrassParams(decode_complex(rec.get("g2", 0), "g2"), decode_complex(rec.get("g3", 0), "g3"))


def weier_to_record(w: WeierstrassParams) -> dict:
    return {"g2": encode(complex(w.g2)), "g3": encode(complex(w.g3))}


def _reject_unknown(rec: dict, allowed: set, where: str):
    extra = set(rec) - allowed
    if extra:
        raise ConfigError(f"{where}: unknown keys {sorted(extra)}")


def _complex_fields(rec: dict, names, where: str) -> dict:
    _reject_unknown(rec, set(names), where)
    return {k: decode_complex(v, f"{where}.{k}") for k, v in rec.items()}


def params_to_record(p) -> dict:
    """Parameter dataclass to a JSON-ready dict (callables and derived fields dropped)."""
    if isinstance(p, EllipticTriadParams):
        out = {k: encode(getattr(p, k)) for k in ("alpha", "beta", "gamma1", "gamma2", "gamma3", "a1", "a2")}
        return {"family": "elliptic", "params": out, "weier": weier_to_record(p.weier)}
    if isinstance(p, EntireFamilyParams):
        return {"family": "entire", "params": encode(p)}
    if isinstance(p, PolynomialFamilyParams):
        return {"family": "polynomial", "params": encode(p)}
    if isinstance(p, PhiChain):
        rec = {k: encode(getattr(p, k)) for k in ("c0", "c1", "c2", "c3", "b3")}
        return {"family": "chain", "chain": rec}
    raise ConfigError(f"no record format for {type(p).__name__}")


# case-2 arbitrary function: (f, f', f'')
NAMED_FUNCTIONS = {
    "sin": (np.sin, np.cos, lambda x: -np.sin(x)),
    "cos": (np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x)),
    "exp": (np.exp, np.exp, np.exp),
    "sinh": (np.sinh, np.cosh, np.sinh),
    "cosh": (np.cosh, np.sinh, np.cosh),
    "square": (lambda x: np.asarray(x) ** 2, lambda x: 2 * np.asarray(x),
               lambda x: 2 + 0 * np.asarray(x, dtype=complex)),
}

_ELLIPTIC_KEYS = ("alpha", "beta", "gamma1", "gamma2", "gamma3", "a1", "a2")
_ENTIRE_KEYS = ("alpha1", "alpha2", "alpha3", "lam", "beta", "gamma1", "gamma2", "gamma3")
_POLY_KEYS = ("alpha", "beta1", "beta2", "beta3", "gamma1", "gamma2", "gamma3")
_DEGEN_KEYS = ("f0", "f1", "g0", "g1", "h0", "h1", "a", "b", "c", "c1", "c2", "lam", "F0", "G0", "H0")
_CHAIN_KEYS = ("c0", "c1", "c2", "c3", "b3")


def chain_from_record(rec) -> PhiChain:
    if not isinstance(rec, dict):
        raise ConfigError("chain must be an object with c0..c3 (and optional b3)")
    vals = _complex_fields(rec, _CHAIN_KEYS, "chain")
    for k in ("c0", "c1", "c2", "c3"):
        if k not in vals:
            raise ConfigError(f"chain.{k} is required")
    try:
        return PhiChain(**vals)
    except (ValueError, ArithmeticError) as exc:
        raise ConfigError(f"chain: {exc}") from exc


def triple_from_record(rec: dict) -> SolutionTriple:
    """Build a :class:`SolutionTriple` from a family record."""
    if not isinstance(rec, dict):
        raise ConfigError("family record must be an object")
    fam = rec.get("family")
    params = rec.get("params")
    params = {} if params is None else params
    literal = bool(rec.get("literal", False))
    if not isinstance(params, dict):
        raise ConfigError("params must be an object")
    try:
        if fam == "elliptic":
            p = EllipticTriadParams(**_complex_fields(params, _ELLIPTIC_KEYS, "params"),
                                    weier=weier_from_record(rec.get("weier")))
            return make_elliptic_solution(p)
        if fam == "entire":
            return make_entire_solution(EntireFamilyParams(**_complex_fields(params, _ENTIRE_KEYS, "params")),
                                        literal=literal)
        if fam == "polynomial":
            return make_polynomial_solution(PolynomialFamilyParams(**_complex_fields(params, _POLY_KEYS, "params")),
                                            literal=literal)
        if fam in ("degenerate1", "degenerate2", "degenerate3"):
            fname = params.get("f")
            rest = {k: v for k, v in params.items() if k != "f"}
            kw = _complex_fields(rest, _DEGEN_KEYS, "params")
            case = int(fam[-1])
            if case == 2:
                if fname not in NAMED_FUNCTIONS:
                    raise ConfigError(f"degenerate2 needs params.f in {sorted(NAMED_FUNCTIONS)}")
                f, df, d2f = NAMED_FUNCTIONS[fname]
                kw.update(f=f, df=df, d2f=d2f)
            elif fname is not None:
                raise ConfigError("params.f is only used by degenerate2")
            return make_degenerate_solution(DegenerateParams(case=case, **kw))
        if fam == "identical":
            kw = _complex_fields(params, ("alpha", "beta"), "params")
            sol = make_identical_solution(kw.get("alpha", 1.0), kw.get("beta", 0.0),
                                          weier_from_record(rec.get("weier")))
            return sol.as_triple()
        if fam == "chain":
            chain = chain_from_record(rec.get("chain"))
            alpha1 = decode_complex(rec.get("alpha1", 0.3 + 0.1j), "alpha1")
            s1 = decode_complex(rec.get("s1", 1.0), "s1")
            t1 = decode_complex(rec.get("t1", 0.0), "t1")
            return triad_from_chain(chain, alpha1, s1, t1, override=bool(rec.get("override", False)))
    except ConfigError:
        raise
    except (ValueError, TypeError, ArithmeticError) as exc:
        raise ConfigError(f"{fam}: {exc}") from exc
    raise ConfigError(f"unknown family {fam!r}; expected one of {list(FAMILIES) + ['chain']}")
