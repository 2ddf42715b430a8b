"""Tests for strict config parsing and hashing."""

import json
import math

import pytest

from arm_codesign.config import (
    ConfigError,
    config_hash,
    load_config,
    obstacle_from_dict,
    parse_config,
)
from arm_codesign.geometry import Circle, Rect

MINIMAL = {
    "layouts": {"a": [{"shape": "circle", "center": [0.1, 0.1], "radius": 0.05}]},
}

FULL = {
    "baseline": {"l1": 0.15, "l2": 0.15, "bounds": [[0.05, 0.30], [0.05, 0.30]]},
    "physical": {"damping": 0.05, "density": 1.0, "torque_limit": 0.1, "dt": 0.01, "substeps": 10},
    "collision": {"margin": 0.01, "exponent": 2, "lambda_coll": 10.0},
    "ga": {"population": 8, "generations": 3, "seed": 1},
    "analysis": {"tolerance": 0.05, "histogram_edges": [0.0, 0.1, 0.2], "n_sectors": 8,
                 "ring_edges": [0.0, 0.15, 0.30]},
    "protocol": "equal_params",
    "hidden_width": 16,
    "horizon": 120,
    "initial_pose": [1.5707963267948966, 0.0],
    "grid_spacing": 0.1,
    "safety_margin": 0.02,
    "seeds": [0, 1],
    "output_dir": "results",
    "layouts": {
        "a": [{"shape": "circle", "center": [0.1, 0.1], "radius": 0.05}],
        "b": [{"shape": "rect", "min": [-0.1, 0.1], "max": [0.0, 0.2]}],
    },
    "targets": {"a": [[0.1, -0.1]]},
}


class TestParse:
    def test_minimal_config_uses_defaults(self):
        cfg = parse_config(MINIMAL)
        assert cfg.baseline.l1 == 0.15
        assert cfg.physical.substeps == 10
        assert cfg.protocol == "equal_width"
        assert cfg.hidden_width == 64
        assert cfg.seeds == (0, 1, 2, 3, 4)

    def test_full_config(self):
        cfg = parse_config(FULL)
        assert cfg.protocol == "equal_params"
        assert cfg.hidden_width == 16
        assert cfg.ga.population == 8
        assert cfg.analysis.ring_edges == (0.0, 0.15, 0.30)
        assert isinstance(cfg.layouts["a"][0], Circle)
        assert isinstance(cfg.layouts["b"][0], Rect)
        assert cfg.targets["a"] == ((0.1, -0.1),)

    def test_scenario_resolution(self):
        cfg = parse_config(FULL)
        scn = cfg.scenario("a")
        assert scn.horizon == 120
        assert scn.obstacles == cfg.layouts["a"]
        with pytest.raises(KeyError):
            cfg.scenario("nope")

    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigError, match="swarm_size"):
            parse_config({**MINIMAL, "swarm_size": 10})

    def test_unknown_section_key(self):
        bad = {**MINIMAL, "ga": {"population": 8, "pop_size": 8}}
        with pytest.raises(ConfigError, match="pop_size"):
            parse_config(bad)

    def test_unknown_obstacle_key(self):
        bad = {"layouts": {"a": [{"shape": "circle", "center": [0, 0], "radius": 0.1, "colour": "red"}]}}
        with pytest.raises(ConfigError, match="colour"):
            parse_config(bad)

    def test_unknown_shape(self):
        with pytest.raises(ConfigError, match="pentagon"):
            obstacle_from_dict({"shape": "pentagon"})

    def test_bad_protocol(self):
        with pytest.raises(ConfigError, match="protocol"):
            parse_config({**MINIMAL, "protocol": "equal_everything"})

    def test_target_without_layout(self):
        bad = {**MINIMAL, "targets": {"zzz": [[0.1, 0.1]]}}
        with pytest.raises(ConfigError, match="zzz"):
            parse_config(bad)

    def test_missing_layouts_rejected(self):
        with pytest.raises(ConfigError, match="layout"):
            parse_config({})

    def test_invalid_ga_value_surfaces_as_config_error(self):
        bad = {**MINIMAL, "ga": {"population": 1}}
        with pytest.raises(ConfigError):
            parse_config(bad)


class TestLoad:
    def test_load_from_file(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(FULL))
        cfg = load_config(path)
        assert cfg.ga.generations == 3

    def test_invalid_json_names_line(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text("{\n  oops\n}")
        with pytest.raises(ConfigError, match="line 2"):
            load_config(path)


class TestHash:
    def test_key_order_invariant(self):
        a = {"x": 1, "y": [1, 2]}
        b = {"y": [1, 2], "x": 1}
        assert config_hash(a) == config_hash(b)

    def test_value_sensitivity(self):
        assert config_hash({"x": 1}) != config_hash({"x": 2})
