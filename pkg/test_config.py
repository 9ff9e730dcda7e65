#!/usr/bin/env python3
"""
Test configuration loading, overrides and persistence
"""
import json
from fractions import Fraction

import pytest

from app.config import Config


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    for name in Config.ENV_OVERRIDES:
        monkeypatch.delenv(name, raising=False)


def write_config(path, payload):
    path.write_text(json.dumps(payload))
    return path


def test_defaults_without_a_file(tmp_path):
    config = Config(str(tmp_path / "absent.json"))
    assert config.split_fraction == Fraction(1, 11)
    assert (config.alpha, config.mc_replicates, config.dof_mode) == (0.0001, 999, "cells")
    assert config.class_column == "sense"


def test_file_is_merged_over_defaults(tmp_path):
    path = write_config(tmp_path / "config.json", {"search": {"seed": 7}, "data": {"split_denominator": 5}})
    config = Config(str(path))
    assert config.seed == 7
    assert config.split_fraction == Fraction(1, 5)
    assert config.alpha == 0.0001


def test_malformed_file_falls_back_to_defaults(tmp_path):
    path = tmp_path / "config.json"
    path.write_text("{not json")
    assert Config(str(path)).mc_replicates == 999


def test_environment_overrides(tmp_path, monkeypatch):
    path = write_config(tmp_path / "config.json", {"search": {"seed": 7}})
    monkeypatch.setenv("DMS_SEED", "3")
    monkeypatch.setenv("DMS_OUTPUT_DIR", str(tmp_path / "reports"))
    monkeypatch.setenv("DEBUG", "true")
    monkeypatch.setenv("DMS_ALPHA", "not-a-number")
    config = Config(str(path))
    assert config.seed == 3
    assert config.output_dir == tmp_path / "reports"
    assert config.debug is True
    assert config.alpha == 0.0001


def test_config_file_from_the_environment(tmp_path, monkeypatch):
    path = write_config(tmp_path / "other.json", {"search": {"workers": 4}})
    monkeypatch.setenv("DMS_CONFIG_FILE", str(path))
    assert Config().workers == 4


@pytest.mark.parametrize("key,value", [
    ("alpha", 1.5), ("alphas", []), ("mc_replicates", 0), ("dof_mode", "edges"), ("workers", "four"),
])
def test_invalid_search_settings_use_defaults(tmp_path, key, value):
    path = write_config(tmp_path / "config.json", {"search": {key: value}})
    config = Config(str(path))
    assert config.config["search"][key] == Config._defaults["search"][key]


def test_update_save_and_reload(tmp_path):
    path = write_config(tmp_path / "config.json", {})
    config = Config(str(path))
    assert config.update_config("search", "mc_replicates", 199)
    assert not config.update_config("search", "unknown", 1)
    config.save()
    assert json.loads(path.read_text())["search"]["mc_replicates"] == 199

    config.update_config("search", "mc_replicates", 5)
    config.reload()
    assert config.mc_replicates == 199
