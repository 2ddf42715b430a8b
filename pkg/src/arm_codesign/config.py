"""Experiment configuration files: strict parsing and hashing.

Configs are flat JSON. Every section maps onto one of the library's config
dataclasses; unknown keys anywhere are rejected with the offending key
path so typos never silently fall back to defaults. The canonical hash of
a config (sorted-key JSON, sha256) identifies runs in manifests and
figures.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .analysis import AnalysisConfig
from .dynamics import DEFAULT_LINK_BOUNDS, Morphology, PhysicalParams
from .evolve import GAConfig
from .experiment import Scenario
from .geometry import Circle, CollisionConfig, Obstacle, Rect
from .policy import DEFAULT_HIDDEN_WIDTH, Protocol

__all__ = [
    "ExperimentConfig",
    "config_hash",
    "load_config",
    "obstacle_from_dict",
    "obstacle_to_dict",
    "parse_config",
]


class ConfigError(ValueError):
    """Malformed configuration; message names the offending key."""


def _check_keys(d: dict, allowed: set[str], where: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {where}")


def obstacle_from_dict(d: dict, where: str = "obstacle") -> Obstacle:
    if not isinstance(d, dict) or "shape" not in d:
        raise ConfigError(f"{where} must be an object with a 'shape' key")
    shape = d["shape"]
    if shape == "circle":
        _check_keys(d, {"shape", "center", "radius"}, where)
        return Circle(center=tuple(d["center"]), radius=float(d["radius"]))
    if shape == "rect":
        _check_keys(d, {"shape", "min", "max"}, where)
        return Rect(lo=tuple(d["min"]), hi=tuple(d["max"]))
    raise ConfigError(f"{where}: unknown shape {shape!r} (expected 'circle' or 'rect')")


def obstacle_to_dict(obs: Obstacle) -> dict:
    if isinstance(obs, Circle):
        return {"shape": "circle", "center": list(obs.center), "radius": obs.radius}
    return {"shape": "rect", "min": list(obs.lo), "max": list(obs.hi)}


@dataclass
class ExperimentConfig:
    """Everything one suite run needs, resolved from a JSON file."""

    baseline: Morphology
    physical: PhysicalParams
    collision: CollisionConfig
    ga: GAConfig
    analysis: AnalysisConfig
    protocol: Protocol = "equal_width"
    hidden_width: int = DEFAULT_HIDDEN_WIDTH
    horizon: int = 300
    initial_pose: tuple[float, float] = (math.pi / 2.0, 0.0)
    stop_on_reach: bool = False
    reach_tolerance: float = 0.05
    grid_spacing: float = 0.05
    safety_margin: float = 0.02
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    output_dir: str = "out"
    layouts: dict[str, tuple[Obstacle, ...]] = field(default_factory=dict)
    targets: dict[str, tuple[tuple[float, float], ...]] = field(default_factory=dict)
    raw: dict = field(default_factory=dict, repr=False)

    def scenario(self, layout: str) -> Scenario:
        if layout not in self.layouts:
            raise KeyError(f"no layout named {layout!r} (have {sorted(self.layouts)})")
        return Scenario(
            obstacles=self.layouts[layout],
            initial_pose=self.initial_pose,
            horizon=self.horizon,
            physical=self.physical,
            collision=self.collision,
            safety_margin=self.safety_margin,
            stop_on_reach=self.stop_on_reach,
            reach_tolerance=self.reach_tolerance,
        )

    def scenarios(self) -> dict[str, Scenario]:
        return {name: self.scenario(name) for name in self.layouts}


_TOP_KEYS = {
    "baseline",
    "physical",
    "collision",
    "ga",
    "analysis",
    "protocol",
    "hidden_width",
    "horizon",
    "initial_pose",
    "stop_on_reach",
    "reach_tolerance",
    "grid_spacing",
    "safety_margin",
    "seeds",
    "output_dir",
    "layouts",
    "targets",
}


def _section(raw: dict, key: str) -> dict:
    val = raw.get(key, {})
    if not isinstance(val, dict):
        raise ConfigError(f"section {key!r} must be an object")
    return val


def parse_config(raw: dict) -> ExperimentConfig:
    """Validate a parsed JSON document and build the resolved config."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    _check_keys(raw, _TOP_KEYS, "config root")

    b = _section(raw, "baseline")
    _check_keys(b, {"l1", "l2", "bounds"}, "baseline")
    bounds = DEFAULT_LINK_BOUNDS
    if "bounds" in b:
        bounds = tuple(tuple(float(x) for x in pair) for pair in b["bounds"])
        if len(bounds) != 2 or any(len(p) != 2 for p in bounds):
            raise ConfigError("baseline.bounds must be [[lo1, hi1], [lo2, hi2]]")
    try:
        baseline = Morphology(
            l1=float(b.get("l1", 0.15)), l2=float(b.get("l2", 0.15)), bounds=bounds
        )
        p = _section(raw, "physical")
        _check_keys(p, {"damping", "density", "torque_limit", "dt", "substeps"}, "physical")
        physical = PhysicalParams(**p)
        c = _section(raw, "collision")
        _check_keys(c, {"margin", "exponent", "lambda_coll"}, "collision")
        collision = CollisionConfig(**c)
        g = _section(raw, "ga")
        _check_keys(
            g,
            {
                "population",
                "generations",
                "tournament_k",
                "crossover_rate",
                "mutation_sigma_ctrl",
                "mutation_sigma_morph",
                "elitism",
                "seed",
                "length_sum_weight",
                "morph_step_limit",
            },
            "ga",
        )
        ga = GAConfig(**g)
        a = _section(raw, "analysis")
        _check_keys(a, {"tolerance", "histogram_edges", "n_sectors", "ring_edges"}, "analysis")
        a = dict(a)
        for k in ("histogram_edges", "ring_edges"):
            if k in a:
                a[k] = tuple(float(x) for x in a[k])
        analysis_cfg = AnalysisConfig(**a)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc

    protocol = raw.get("protocol", "equal_width")
    if protocol not in ("equal_width", "equal_params"):
        raise ConfigError(f"protocol must be 'equal_width' or 'equal_params', got {protocol!r}")

    layouts: dict[str, tuple[Obstacle, ...]] = {}
    for name, items in _section(raw, "layouts").items():
        if not isinstance(items, list):
            raise ConfigError(f"layouts.{name} must be a list of obstacles")
        layouts[name] = tuple(
            obstacle_from_dict(o, where=f"layouts.{name}[{i}]") for i, o in enumerate(items)
        )
    if not layouts:
        raise ConfigError("config must define at least one layout")

    targets: dict[str, tuple[tuple[float, float], ...]] = {}
    for name, pts in _section(raw, "targets").items():
        if name not in layouts:
            raise ConfigError(f"targets.{name} has no matching layout")
        targets[name] = tuple((float(x), float(y)) for x, y in pts)

    initial_pose = tuple(float(x) for x in raw.get("initial_pose", (math.pi / 2.0, 0.0)))
    if len(initial_pose) != 2:
        raise ConfigError("initial_pose must be [q1, q2]")

    seeds = tuple(int(s) for s in raw.get("seeds", (0, 1, 2, 3, 4)))
    if not seeds:
        raise ConfigError("seeds must be non-empty")

    return ExperimentConfig(
        baseline=baseline,
        physical=physical,
        collision=collision,
        ga=ga,
        analysis=analysis_cfg,
        protocol=protocol,
        hidden_width=int(raw.get("hidden_width", DEFAULT_HIDDEN_WIDTH)),
        horizon=int(raw.get("horizon", 300)),
        initial_pose=initial_pose,  # type: ignore[arg-type]
        stop_on_reach=bool(raw.get("stop_on_reach", False)),
        reach_tolerance=float(raw.get("reach_tolerance", 0.05)),
        grid_spacing=float(raw.get("grid_spacing", 0.05)),
        safety_margin=float(raw.get("safety_margin", 0.02)),
        seeds=seeds,
        output_dir=str(raw.get("output_dir", "out")),
        layouts=layouts,
        targets=targets,
        raw=raw,
    )


def load_config(path: Path | str) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    try:
        return parse_config(raw)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def config_hash(raw: dict) -> str:
    """sha256 over the canonical (sorted-key, compact) JSON encoding."""
    canon = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()
