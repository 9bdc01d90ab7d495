"""Command-line front end: one subcommand per scenario plus ``batch``.

Exit status is 0 whenever a scenario ran, whether or not it exhibited a
contradiction; 2 means the configuration was rejected and 1 a numeric
failure while running.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import problems
from .linalg import SPIN_X, SPIN_Y, SPIN_Z, basis_vector, is_hermitian
from .postulates import Magnitude
from .report import SCHEMA_VERSION, ScenarioReport, dumps

SCENARIOS = ("reality", "completeness", "probability", "stein", "expectation", "nosignal", "control")
PROBLEM_NUMBER = {
    "reality": "I",
    "completeness": "II",
    "probability": "III",
    "stein": "III",
    "expectation": "III",
    "nosignal": "III",
    "control": "III",
}
DEFAULT_TOLERANCE = 1e-10
# Amplitudes typed on a command line (0.7071) are only normalised to a few digits.
INPUT_NORM_TOL = 1e-3
SPINS = {"sigma_x": SPIN_X, "sigma_y": SPIN_Y, "sigma_z": SPIN_Z}

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    parameters: dict = field(default_factory=dict)
    seed: int = 0
    tolerance: float = DEFAULT_TOLERANCE
    output_format: str = "text"

    @classmethod
    def from_dict(cls, obj: Any, path: str = "") -> "ScenarioConfig":
        def at(name):
            return f"{path}.{name}" if path else name

        if not isinstance(obj, dict):
            raise ConfigError(path or "config", "expected an object")
        unknown = set(obj) - {"scenario", "parameters", "seed", "tolerance", "output_format"}
        if unknown:
            raise ConfigError(at(sorted(unknown)[0]), "unknown field")
        scenario = obj.get("scenario")
        if scenario not in SCENARIOS:
            raise ConfigError(at("scenario"), f"expected one of {', '.join(SCENARIOS)}, got {scenario!r}")
        seed = obj.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            raise ConfigError(at("seed"), "expected a non-negative integer")
        tol = obj.get("tolerance", DEFAULT_TOLERANCE)
        if isinstance(tol, bool) or not isinstance(tol, (int, float)) or not 0 < tol < 1:
            raise ConfigError(at("tolerance"), "expected a real number in (0, 1)")
        fmt = obj.get("output_format", "text")
        if fmt not in ("text", "json"):
            raise ConfigError(at("output_format"), "expected 'text' or 'json'")
        params = obj.get("parameters", {})
        if not isinstance(params, dict):
            raise ConfigError(at("parameters"), "expected an object")
        config = cls(scenario, dict(params), seed, float(tol), fmt)
        _validate_parameters(config, at("parameters"))
        return config


# ---------------------------------------------------------------------------
# Parameter parsing; each helper raises ConfigError with the field path.


def _complex(v, path: str) -> complex:
    if (
        isinstance(v, (list, tuple))
        and len(v) == 2
        and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)
        and all(math.isfinite(x) for x in v)
    ):
        return complex(v[0], v[1])
    raise ConfigError(path, "expected a [re, im] pair of finite numbers")


def _amplitude_vector(values, path: str) -> np.ndarray:
    if not isinstance(values, (list, tuple)) or not values:
        raise ConfigError(path, "expected a non-empty list of [re, im] pairs")
    v = np.array([_complex(x, f"{path}[{i}]") for i, x in enumerate(values)])
    norm = float(np.vdot(v, v).real)
    if abs(norm - 1.0) > INPUT_NORM_TOL:
        raise ConfigError(path, f"squared norm {norm:.6g} is not 1 within {INPUT_NORM_TOL:g}")
    return v / math.sqrt(norm)


def _alpha_beta(params: dict, path: str) -> tuple[complex, complex]:
    for key in ("alpha", "beta"):
        if key not in params:
            raise ConfigError(f"{path}.{key}", "missing")
    a = _complex(params["alpha"], f"{path}.alpha")
    b = _complex(params["beta"], f"{path}.beta")
    norm = abs(a) ** 2 + abs(b) ** 2
    if abs(norm - 1.0) > INPUT_NORM_TOL:
        raise ConfigError(f"{path}.alpha", f"|alpha|^2 + |beta|^2 = {norm:.6g} is not 1 within {INPUT_NORM_TOL:g}")
    s = math.sqrt(norm)
    return a / s, b / s


def _weights(values, n: int, path: str) -> list[float]:
    if (
        not isinstance(values, (list, tuple))
        or len(values) != n
        or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in values)
    ):
        raise ConfigError(path, f"expected {n} numbers")
    w = [float(x) for x in values]
    if any(not math.isfinite(x) or x < 0 for x in w) or abs(sum(w) - 1.0) > 1e-9:
        raise ConfigError(path, "weights must be non-negative and sum to 1")
    return w


def _int(params: dict, key: str, default: int, path: str, lo: int = 1, hi: int = 10_000) -> int:
    v = params.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int) or not lo <= v <= hi:
        raise ConfigError(f"{path}.{key}", f"expected an integer in [{lo}, {hi}]")
    return v


def _magnitude(params: dict, path: str) -> Magnitude:
    given = params.get("magnitude", "sigma_z")
    if isinstance(given, str):
        if given not in SPINS:
            raise ConfigError(f"{path}.magnitude", f"expected one of {', '.join(SPINS)} or a matrix")
        return Magnitude.from_operator(given, SPINS[given])
    if not isinstance(given, list) or not given or not all(isinstance(r, list) and len(r) == len(given) for r in given):
        raise ConfigError(f"{path}.magnitude", "expected a square matrix of [re, im] pairs")
    op = np.array([[_complex(x, f"{path}.magnitude[{i}][{j}]") for j, x in enumerate(r)] for i, r in enumerate(given)])
    if not is_hermitian(op):
        raise ConfigError(f"{path}.magnitude", "matrix is not Hermitian")
    return Magnitude.from_operator("A", op)


_ALLOWED = {
    "reality": {"alpha", "beta", "variant"},
    "completeness": {"psi", "magnitude"},
    "probability": {"alpha", "beta", "weights"},
    "stein": {"dims", "trials", "alternatives"},
    "expectation": {"extra_levels", "trials"},
    "nosignal": {"state"},
    "control": {"trials"},
}


def _validate_parameters(config: ScenarioConfig, path: str) -> None:
    p = config.parameters
    unknown = set(p) - _ALLOWED[config.scenario]
    if unknown:
        raise ConfigError(f"{path}.{sorted(unknown)[0]}", f"not a parameter of {config.scenario}")
    _build(config, path)


def _build(config: ScenarioConfig, path: str = "parameters"):
    """Turn a validated config into a zero-argument callable producing the report."""
    p, tol, seed = config.parameters, config.tolerance, config.seed
    name = config.scenario
    if name == "reality":
        alpha, beta = _alpha_beta(p, path)
        variant = p.get("variant", "ideal")
        if variant not in ("ideal", "flip"):
            raise ConfigError(f"{path}.variant", "expected 'ideal' or 'flip'")
        posts = None if variant == "ideal" else {0.5: basis_vector(2, 1), -0.5: basis_vector(2, 0)}
        return lambda: problems.run_reality_problem(alpha, beta, posts, tol)
    if name == "completeness":
        if "psi" not in p:
            raise ConfigError(f"{path}.psi", "missing")
        psi = _amplitude_vector(p["psi"], f"{path}.psi")
        a = _magnitude(p, path)
        if a.dim != psi.size:
            raise ConfigError(f"{path}.psi", f"has {psi.size} amplitudes, magnitude acts on C^{a.dim}")
        return lambda: problems.run_state_completeness(psi, a)
    if name == "probability":
        alpha, beta = _alpha_beta(p, path)
        w = _weights(p.get("weights", [0.2, 0.5, 0.3]), 3, f"{path}.weights")
        return lambda: problems.run_probability_problem(alpha, beta, w, tol)
    if name == "stein":
        dims = p.get("dims", [4, 4])
        if (
            not isinstance(dims, list)
            or len(dims) != 2
            or not all(isinstance(d, int) and not isinstance(d, bool) and 1 <= d <= 16 for d in dims)
        ):
            raise ConfigError(f"{path}.dims", "expected two integers in [1, 16]")
        trials = _int(p, "trials", 10, path)
        alts = _int(p, "alternatives", 10, path, lo=0, hi=1000)
        return lambda: problems.stein_scenario(dims[0], dims[1], trials, alts, seed, tol)
    if name == "expectation":
        extra = p.get("extra_levels", [5.0, 3.0])
        if not isinstance(extra, list) or not all(
            isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x) for x in extra
        ):
            raise ConfigError(f"{path}.extra_levels", "expected a list of numbers")
        trials = _int(p, "trials", 10, path)
        return lambda: problems.expectation_scenario(extra, trials, seed, tol)
    if name == "nosignal":
        state = p.get("state", "singlet")
        if state not in ("singlet", "product", "random"):
            raise ConfigError(f"{path}.state", "expected 'singlet', 'product' or 'random'")
        return lambda: problems.nosignal_scenario(state, seed, tol)
    if name == "control":
        trials = _int(p, "trials", 50, path)
        return lambda: problems.control_scenario(trials, seed, tol)
    raise ConfigError("scenario", f"unknown scenario {name!r}")


def execute(config: ScenarioConfig) -> ScenarioReport:
    return _build(config)()


def render(report: ScenarioReport, fmt: str) -> str:
    return dumps(report) if fmt == "json" else report.to_text()


def run(config: ScenarioConfig, out=None) -> int:
    """Run one scenario and write its report; returns the exit status."""
    out = out or sys.stdout
    try:
        report = execute(config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    out.write(render(report, config.output_format) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Batch


def load_batch(path: str) -> list[ScenarioConfig]:
    """Parse and validate every entry; nothing runs if any entry is bad."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(path, str(exc)) from None
    if not isinstance(data, list):
        raise ConfigError("batch", "expected a top-level JSON array")
    return [ScenarioConfig.from_dict(entry, f"[{i}]") for i, entry in enumerate(data)]


def aggregate(configs: list[ScenarioConfig], jobs: int = 1) -> dict:
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(execute, configs))
    else:
        reports = [execute(c) for c in configs]
    summary = [
        {
            "index": i,
            "scenario": r.scenario_name,
            "problem": PROBLEM_NUMBER[r.scenario_name],
            "contradiction_flag": r.contradiction_flag,
            "verdicts_passed": sum(v.passed for v in r.verdicts),
            "verdicts_total": len(r.verdicts),
        }
        for i, r in enumerate(reports)
    ]
    return {"schema_version": SCHEMA_VERSION, "summary": summary, "reports": [r.to_dict() for r in reports]}


def _aggregate_text(agg: dict) -> str:
    lines = [f"{'#':>3}  {'scenario':<13}{'problem':<9}{'verdicts':<10}contradiction"]
    for row in agg["summary"]:
        lines.append(
            f"{row['index']:>3}  {row['scenario']:<13}{row['problem']:<9}"
            f"{row['verdicts_passed']}/{row['verdicts_total']:<8}{str(row['contradiction_flag']).lower()}"
        )
    return "\n".join(lines)


def batch(path: str, fmt: str = "text", jobs: int = 1, out=None) -> int:
    out = out or sys.stdout
    try:
        configs = load_batch(path)
    except ConfigError as exc:
        print(f"error: batch rejected: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        agg = aggregate(configs, jobs)
    except (ValueError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    out.write((dumps(agg) if fmt == "json" else _aggregate_text(agg)) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argparse


def _pair(parser, flag, help_text, default=None):
    parser.add_argument(flag, nargs=2, type=float, metavar=("RE", "IM"), default=default, help=help_text)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE)
    common.add_argument("--format", choices=("text", "json"), default="text")

    ap = argparse.ArgumentParser(prog="measlab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reality", parents=[common], help="unitary Stern-Gerlach measurement of a superposition")
    _pair(p, "--alpha", "amplitude of |up>", [1.0, 0.0])
    _pair(p, "--beta", "amplitude of |down>", [0.0, 0.0])
    p.add_argument("--variant", choices=("ideal", "flip"), default="ideal")

    p = sub.add_parser("completeness", parents=[common], help="can the state fix the outcome?")
    p.add_argument("--psi", nargs="+", type=float, required=True, help="amplitudes as re im re im ...")
    p.add_argument("--magnitude", choices=tuple(SPINS), default="sigma_z")

    p = sub.add_parser("probability", parents=[common], help="mixed ready state against Born statistics")
    _pair(p, "--alpha", "amplitude of |up>", [1.0, 0.0])
    _pair(p, "--beta", "amplitude of |down>", [0.0, 0.0])
    p.add_argument("--weights", nargs=3, type=float, default=[0.2, 0.5, 0.3], metavar=("W0", "W1", "W2"))

    p = sub.add_parser("stein", parents=[common], help="random commuting instances of the factorisation lemma")
    p.add_argument("--dims", nargs=2, type=int, default=[4, 4], metavar=("D1", "D2"))
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--alternatives", type=int, default=10)

    p = sub.add_parser("expectation", parents=[common], help="pointer expectation with admissible mixed ready states")
    p.add_argument("--extra-levels", nargs="*", type=float, default=[5.0, 3.0])
    p.add_argument("--trials", type=int, default=10)

    p = sub.add_parser("nosignal", parents=[common], help="marginals under different remote settings")
    p.add_argument("--state", choices=("singlet", "product", "random"), default="singlet")

    p = sub.add_parser("control", parents=[common], help="pure ready state with random mixed spin states")
    p.add_argument("--trials", type=int, default=50)

    p = sub.add_parser("batch", help="run a JSON array of scenario configs")
    p.add_argument("path")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--jobs", type=int, default=1)
    return ap


def config_from_args(args: argparse.Namespace) -> ScenarioConfig:
    cmd = args.command
    if cmd in ("reality", "probability"):
        params = {"alpha": list(args.alpha), "beta": list(args.beta)}
        if cmd == "reality":
            params["variant"] = args.variant
        else:
            params["weights"] = list(args.weights)
    elif cmd == "completeness":
        if len(args.psi) % 2:
            raise ConfigError("psi", "expected re im pairs")
        params = {"psi": [args.psi[i : i + 2] for i in range(0, len(args.psi), 2)], "magnitude": args.magnitude}
    elif cmd == "stein":
        params = {"dims": list(args.dims), "trials": args.trials, "alternatives": args.alternatives}
    elif cmd == "expectation":
        params = {"extra_levels": list(args.extra_levels), "trials": args.trials}
    elif cmd == "nosignal":
        params = {"state": args.state}
    else:
        params = {"trials": args.trials}
    return ScenarioConfig.from_dict(
        {
            "scenario": cmd,
            "parameters": params,
            "seed": args.seed,
            "tolerance": args.tolerance,
            "output_format": args.format,
        }
    )


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "batch":
        if args.jobs < 1:
            print("error: --jobs must be positive", file=sys.stderr)
            return EXIT_CONFIG
        return batch(args.path, args.format, args.jobs)
    try:
        config = config_from_args(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
