"""Canonical JSON form of exact series and trigonometric polynomials.

Rationals are written as ``"p/q"`` strings so that a round trip is bit-exact.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Any

from .scalar import ExactScalar
from .series import BivariateSeries, UnivariateSeries
from .trig import TrigPolynomial, TrigSeries


def rational_to_str(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def rational_from_str(text: str) -> Fraction:
    if not isinstance(text, str) or "." in text or "e" in text.lower():
        raise ValueError(f"not a canonical rational string: {text!r}")
    return Fraction(text)


def scalar_to_json(value: ExactScalar) -> dict[str, str]:
    return {"a": rational_to_str(value.a), "b": rational_to_str(value.b)}


def scalar_from_json(data: dict[str, str]) -> ExactScalar:
    return ExactScalar(rational_from_str(data["a"]), rational_from_str(data["b"]))


def _entries(items, key_names) -> list[dict[str, Any]]:
    out = []
    for key, value in sorted(items):
        entry = dict(zip(key_names, key if isinstance(key, tuple) else (key,)))
        entry.update(scalar_to_json(value))
        out.append(entry)
    return out


def to_json(obj: UnivariateSeries | BivariateSeries | TrigPolynomial | TrigSeries) -> dict:
    """Canonical JSON-compatible dictionary."""
    if isinstance(obj, BivariateSeries):
        return {
            "kind": "bivariate",
            "order": obj.order,
            "monomials": _entries(obj.coeffs.items(), ("k", "j")),
        }
    if isinstance(obj, UnivariateSeries):
        return {
            "kind": "univariate",
            "order": obj.order,
            "monomials": _entries(obj.coeffs.items(), ("k",)),
        }
    if isinstance(obj, TrigPolynomial):
        return {
            "kind": "trig",
            "cos": _entries(obj.cos.items(), ("k",)),
            "sin": _entries(obj.sin.items(), ("k",)),
        }
    if isinstance(obj, TrigSeries):
        return {
            "kind": "trig_series",
            "order": obj.order,
            "terms": [
                {"n": n, **to_json(t)} for n, t in sorted(obj.terms.items())
            ],
        }
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def from_json(data: dict) -> UnivariateSeries | BivariateSeries | TrigPolynomial | TrigSeries:
    kind = data.get("kind")
    if kind == "bivariate":
        return BivariateSeries(
            {(m["k"], m["j"]): scalar_from_json(m) for m in data["monomials"]}, data["order"]
        )
    if kind == "univariate":
        return UnivariateSeries({m["k"]: scalar_from_json(m) for m in data["monomials"]}, data["order"])
    if kind == "trig":
        return TrigPolynomial(
            {m["k"]: scalar_from_json(m) for m in data["cos"]},
            {m["k"]: scalar_from_json(m) for m in data["sin"]},
        )
    if kind == "trig_series":
        return TrigSeries({t["n"]: from_json({**t, "kind": "trig"}) for t in data["terms"]}, data["order"])
    raise ValueError(f"unknown serialised kind {kind!r}")


def dumps(obj) -> str:
    return json.dumps(to_json(obj), sort_keys=True, separators=(",", ":"))


def loads(text: str):
    return from_json(json.loads(text))
