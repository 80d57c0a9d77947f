"""Seeded parameter sweeps driven by a JSON config file."""

from __future__ import annotations

import ast
import hashlib
import itertools
import json
import math
import operator
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .constructions import candidate_witness
from .linalg import DEFAULT_TOL
from .machine import FlipScenario, FlipTriple, MachineModel
from .report import FIELDS, rows_to_csv, rows_to_json, verify_scenario
from .search import SearchConfig, minimize_deviation


class ConfigError(ValueError):
    pass


MACHINE_SOURCES = ("random", "trivial", "identity-gram", "witness", "optimize")
TOLERANCE_NAMES = ("great_circle", "consistency")
_CONFIG_KEYS = {"seed", "samples", "triples", "machine", "tolerances", "output", "search"}
_SEARCH_KEYS = {"restarts", "max_evals", "xatol"}

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}


def parse_angle(value) -> float:
    """Radians, given as a number or an arithmetic expression in ``pi``.

    Accepts e.g. ``1.25``, ``"pi"``, ``"pi/2"``, ``"3*pi/4"`` or ``"3pi/4"``.
    """
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if not isinstance(value, str):
        raise ValueError(f"not an angle: {value!r}")
    text = value.strip().replace("π", "pi")
    text = "".join(
        ch + "*" if ch.isdigit() and text[i + 1 : i + 3] == "pi" else ch for i, ch in enumerate(text)
    )

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            return -ev(node.operand) if isinstance(node.op, ast.USub) else ev(node.operand)
        raise ValueError(f"unsupported angle expression {value!r}")

    try:
        return ev(ast.parse(text, mode="eval"))
    except SyntaxError as exc:
        raise ValueError(f"unsupported angle expression {value!r}") from exc


def fold_theta(theta: float) -> float:
    """Map any angle into [0, pi]; angles in (pi, 2pi) use the reflection y -> -y."""
    theta = theta % (2 * math.pi)
    return 2 * math.pi - theta if theta > math.pi else theta


def make_triple(a=None, b=None, c=None, d=None, theta=math.pi / 2, norm_tol: float = 1e-6) -> FlipTriple:
    """Build a triple from possibly partial amplitudes.

    A missing partner amplitude is completed to unit norm; a pair given in
    full is accepted within ``norm_tol`` and rescaled.
    """

    def pair(x, y, label):
        if x is None and y is None:
            x = 1 / math.sqrt(2)
        if y is None:
            if not 0 < x <= 1:
                raise ValueError(f"{label[0]} = {x} must lie in (0, 1]")
            return x, math.sqrt(max(0.0, 1 - x * x))
        if x is None:
            if not 0 <= y < 1:
                raise ValueError(f"{label[1]} = {y} must lie in [0, 1)")
            return math.sqrt(1 - y * y), y
        s = x * x + y * y
        if abs(s - 1) > norm_tol:
            raise ValueError(f"{label[0]}^2 + {label[1]}^2 = {s:.12g}, expected 1")
        return x / math.sqrt(s), y / math.sqrt(s)

    a, b = pair(a, b, "ab")
    c, d = pair(c, d, "cd")
    return FlipTriple(a, b, c, d, fold_theta(parse_angle(theta)))


@dataclass(frozen=True)
class SweepConfig:
    seed: int
    samples: int
    triples: object = "random"
    machine: str = "random"
    tolerances: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    search: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> "SweepConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(data) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key in ("seed", "samples"):
            if key not in data:
                raise ConfigError(f"missing required key {key!r}")
        seed, samples = data["seed"], data["samples"]
        if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if isinstance(samples, bool) or not isinstance(samples, int) or samples < 1:
            raise ConfigError("samples must be a positive integer")
        machine = data.get("machine", "random")
        if machine not in MACHINE_SOURCES:
            raise ConfigError(f"machine must be one of {MACHINE_SOURCES}, got {machine!r}")
        tolerances = data.get("tolerances", {})
        if not isinstance(tolerances, dict):
            raise ConfigError("tolerances must be an object")
        for name, value in tolerances.items():
            if name not in TOLERANCE_NAMES:
                raise ConfigError(f"unknown tolerance {name!r}; known: {TOLERANCE_NAMES}")
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
                raise ConfigError(f"tolerance {name!r} must be a positive number")
        output = data.get("output", {})
        if not isinstance(output, dict) or set(output) - {"path", "format"}:
            raise ConfigError("output must be an object with keys 'path' and 'format'")
        if output.get("format", "csv") not in ("csv", "json"):
            raise ConfigError("output.format must be 'csv' or 'json'")
        search = data.get("search", {})
        if not isinstance(search, dict) or set(search) - _SEARCH_KEYS:
            raise ConfigError(f"search accepts only {sorted(_SEARCH_KEYS)}")
        cfg = cls(seed, samples, data.get("triples", "random"), machine, tolerances, output, search)
        cfg.triple_points()  # validates the triple source
        try:
            cfg.search_config(0)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return cfg

    def tol(self, name: str) -> float:
        return float(self.tolerances.get(name, DEFAULT_TOL))

    def search_config(self, seed: int) -> SearchConfig:
        return SearchConfig(seed=seed, **self.search)

    def triple_points(self) -> list[FlipTriple] | None:
        """Fixed triples for grid / explicit sources; None for random."""
        src = self.triples
        if src == "random":
            return None
        try:
            if isinstance(src, dict) and set(src) == {"grid"}:
                grid = src["grid"]
                if set(grid) - {"a", "c", "theta"}:
                    raise ConfigError("grid accepts only 'a', 'c' and 'theta'")
                axes = [grid.get("a", [1 / math.sqrt(2)]), grid.get("c", [1 / math.sqrt(2)]), grid.get("theta", ["pi/2"])]
                return [make_triple(a=a, c=c, theta=th) for a, c, th in itertools.product(*axes)]
            if isinstance(src, dict) and set(src) == {"explicit"}:
                pts = []
                for item in src["explicit"]:
                    if isinstance(item, list):
                        if len(item) != 5:
                            raise ConfigError("explicit triples need [a, b, c, d, theta]")
                        item = dict(zip("abcd", item[:4]), theta=item[4])
                    if set(item) - {"a", "b", "c", "d", "theta"}:
                        raise ConfigError(f"unknown triple keys in {item}")
                    pts.append(make_triple(**item))
                if not pts:
                    raise ConfigError("explicit triple list is empty")
                return pts
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid triple source: {exc}") from exc
        raise ConfigError("triples must be 'random', {'grid': {...}} or {'explicit': [...]}")


@dataclass(frozen=True)
class RunManifest:
    config_hash: str
    artifact_version: str
    seed: int
    started_at: str
    finished_at: str
    rows: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2) + "\n"


def config_hash(text: bytes) -> str:
    return hashlib.sha256(text).hexdigest()


def row_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


def run_row(cfg: SweepConfig, index: int, points: list[FlipTriple] | None) -> tuple[dict, bool]:
    """Compute one sweep row; returns (row, consistent)."""
    rng = row_rng(cfg.seed, index)
    triple = FlipTriple.random(rng) if points is None else points[index % len(points)]
    infimum = None
    if cfg.machine == "random":
        machine = MachineModel.random(rng)
    elif cfg.machine == "trivial":
        machine = MachineModel.trivial()
    elif cfg.machine == "identity-gram":
        machine = MachineModel.identity_gram()
    elif cfg.machine == "witness":
        machine = candidate_witness()
    else:
        result = minimize_deviation(triple, cfg.search_config(int(rng.integers(2**63))))
        machine, infimum = result.argmin, result.infimum
    report = verify_scenario(FlipScenario(triple, machine), cfg.tol("great_circle"), cfg.tol("consistency"))
    row = report.row()
    if infimum is not None:
        row["deviation"] = infimum
    return row, report.consistent


def _run_row_star(args):
    return run_row(*args)


def run_sweep(cfg: SweepConfig, workers: int = 1) -> tuple[list[dict], bool]:
    points = cfg.triple_points()
    jobs = [(cfg, i, points) for i in range(cfg.samples)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_row_star, jobs))
    else:
        results = [run_row(*job) for job in jobs]
    return [r for r, _ in results], all(ok for _, ok in results)


def render(rows: list[dict], fmt: str) -> str:
    return rows_to_csv(rows, FIELDS) if fmt == "csv" else rows_to_json(rows, FIELDS)


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")
