"""Scenario reports and their JSON encoding.

Complex numbers encode as ``[re, im]``; arrays as row-major nested lists.
Floats go through ``repr`` (shortest round-trip form), so decoding gives
back the identical IEEE-754 doubles.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .linalg import Interval
from .postulates import OutcomeDistribution

SCHEMA_VERSION = "1"


@dataclass(frozen=True)
class Verdict:
    """One checked claim.

    ``clash`` marks the claim whose failure is the contradiction the
    scenario is built to exhibit.
    """

    claim: str
    passed: bool
    residual: float
    clash: bool = False


@dataclass(frozen=True)
class ScenarioReport:
    scenario_name: str
    inputs: dict
    computed: dict
    verdicts: tuple[Verdict, ...]
    narrative: str
    notes: tuple[str, ...] = field(default=())

    @property
    def contradiction_flag(self) -> bool:
        return any(v.clash and not v.passed for v in self.verdicts)

    def verdict(self, claim_prefix: str) -> Verdict:
        for v in self.verdicts:
            if v.claim.startswith(claim_prefix):
                return v
        raise KeyError(claim_prefix)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "scenario_name": self.scenario_name,
            "inputs": jsonable(self.inputs),
            "computed": jsonable(self.computed),
            "verdicts": [
                {"claim": v.claim, "pass": bool(v.passed), "residual": _float(v.residual), "clash": bool(v.clash)}
                for v in self.verdicts
            ],
            "contradiction_flag": self.contradiction_flag,
            "narrative": self.narrative,
            "notes": list(self.notes),
        }

    def to_text(self) -> str:
        lines = [f"scenario: {self.scenario_name}"]
        for k, v in self.inputs.items():
            lines.append(f"  input {k} = {_short(v)}")
        for k, v in self.computed.items():
            lines.append(f"  {k} = {_short(v)}")
        for v in self.verdicts:
            tag = "PASS" if v.passed else "FAIL"
            lines.append(f"  [{tag}] {v.claim} (residual {v.residual:.3e})")
        lines.append(f"  contradiction_flag: {str(self.contradiction_flag).lower()}")
        lines.append(f"  {self.narrative}")
        for n in self.notes:
            lines.append(f"  note: {n}")
        return "\n".join(lines)


def _float(x) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"non-finite value {x!r} in report")
    return x


def jsonable(x: Any):
    """Convert report payloads (numpy arrays, complex, distributions) to JSON types."""
    if isinstance(x, ScenarioReport):
        return x.to_dict()
    if isinstance(x, OutcomeDistribution):
        return {"values": [_float(v) for v in x.values], "probabilities": [_float(p) for p in x.probabilities]}
    if isinstance(x, Interval):
        return [x.lo, x.hi]
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        if np.iscomplexobj(x):
            if x.ndim > 1:
                return [jsonable(row) for row in x]
            return [[_float(v.real), _float(v.imag)] for v in x]
        return x.tolist() if x.ndim else _float(x)
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [_float(x.real), _float(x.imag)]
    if isinstance(x, (float, np.floating)):
        return _float(x)
    if x is None or isinstance(x, str):
        return x
    raise TypeError(f"cannot serialise {type(x).__name__}")


def dumps(payload) -> str:
    return json.dumps(jsonable(payload), indent=2, allow_nan=False)


def _short(v) -> str:
    if isinstance(v, OutcomeDistribution):
        return "{" + ", ".join(f"{val:g}: {p:.6g}" for val, p in v.entries) + "}"
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, complex):
        return f"{v.real:.6g}{v.imag:+.6g}j"
    if isinstance(v, np.ndarray):
        return np.array2string(v, precision=4, suppress_small=True, max_line_width=120).replace("\n", " ")
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_short(e) for e in v) + "]"
    return str(v)
