"""Run reports: named checks with tolerances plus free-form metrics."""

from __future__ import annotations

import json
import math

import numpy as np

__all__ = ["Report", "to_jsonable"]


def to_jsonable(v):
    if isinstance(v, dict):
        return {str(k): to_jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [to_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(v, (complex, np.complexfloating)):
        return [to_jsonable(v.real), to_jsonable(v.imag)]
    if isinstance(v, np.ndarray):
        return to_jsonable(v.tolist())
    return v


class Report:
    """Ordered checks ``name -> {value, tolerance, pass}`` and metrics."""

    def __init__(self, name: str, kind: str, seed: int | None = None):
        self.name = name
        self.kind = kind
        self.seed = seed
        self.checks: dict = {}
        self.metrics: dict = {}
        self.grid: dict = {}
        self.artifacts: list = []
        self.nonfinite = False

    def check(self, name: str, value, tolerance=None, target=None, minimum=None) -> bool:
        """Record a check.

        Booleans pass when true. Otherwise ``value <= tolerance``, or
        ``|value - target| <= tolerance`` with a target, or ``value >= minimum``.
        """
        if name in self.checks:
            raise ValueError(f"check {name!r} recorded twice")
        entry = {"value": value}
        if isinstance(value, (bool, np.bool_)):
            ok = bool(value)
        else:
            value = float(value)
            if not math.isfinite(value) and not (minimum is not None and value == math.inf):
                ok = False
            elif minimum is not None:
                ok = value >= minimum
                entry["min"] = minimum
            elif target is not None:
                ok = abs(value - target) <= tolerance
                entry["target"] = target
                entry["tolerance"] = tolerance
            else:
                ok = value <= tolerance
                entry["tolerance"] = tolerance
        entry["pass"] = ok
        self.checks[name] = entry
        return ok

    def metric(self, name: str, value) -> None:
        self.metrics[name] = value

    def merge(self, other: Report, prefix: str = "") -> None:
        for k, v in other.checks.items():
            self.checks[prefix + k] = v
        for k, v in other.metrics.items():
            self.metrics[prefix + k] = v
        self.nonfinite = self.nonfinite or other.nonfinite

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.checks.values())

    def as_dict(self) -> dict:
        return to_jsonable({
            "name": self.name,
            "kind": self.kind,
            "seed": self.seed,
            "pass": self.passed,
            "grid": self.grid,
            "checks": self.checks,
            "metrics": self.metrics,
            "artifacts": self.artifacts,
        })

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2) + "\n"

    def summary_lines(self) -> list:
        lines = []
        for k, c in self.checks.items():
            flag = "PASS" if c["pass"] else "FAIL"
            bound = ""
            if "tolerance" in c:
                bound = f" (tol {c['tolerance']:.3g}" + (f", target {c['target']:.6g})" if "target" in c else ")")
            elif "min" in c:
                bound = f" (min {c['min']:.3g})"
            val = c["value"]
            val = f"{val:.6g}" if isinstance(val, float) else str(val)
            lines.append(f"{flag}  {k}: {val}{bound}")
        return lines
