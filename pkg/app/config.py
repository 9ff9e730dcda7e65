"""
Centralized configuration for the decomposable model selection service
"""
import os
import json
import copy
from fractions import Fraction
from pathlib import Path
from typing import Dict, Any, List, Optional
import logging

from dotenv import load_dotenv

logger = logging.getLogger(__name__)

load_dotenv()


class Config:
    """Central configuration manager"""

    # Environment variable -> (section, key, converter)
    ENV_OVERRIDES = {
        "DMS_SEED": ("search", "seed", int),
        "DMS_ALPHA": ("search", "alpha", float),
        "DMS_MC_REPLICATES": ("search", "mc_replicates", int),
        "DMS_OUTPUT_DIR": ("paths", "output_dir", str),
        "API_HOST": ("server", "host", str),
        "API_PORT": ("server", "port", int),
        "DEBUG": ("app", "debug", lambda v: v.lower() == "true"),
    }

    _defaults = {
        # Input data
        "data": {
            "delimiter": ",",
            "class_column": "sense",
            "split_numerator": 1,
            "split_denominator": 11
        },

        # Model search
        "search": {
            "alpha": 0.0001,
            "alphas": [0.0001],
            "mc_replicates": 999,
            "seed": 0,
            "literal_alpha_rule": False,
            "dof_mode": "cells",
            "workers": 1
        },

        # File paths
        "paths": {
            "output_dir": "outputs"
        },

        # Server settings
        "server": {
            "host": "0.0.0.0",
            "port": 8000
        },

        # Application settings
        "app": {
            "name": "Decomposable Model Selection",
            "version": "1.0.0",
            "debug": False
        }
    }

    def __init__(self, config_file: Optional[str] = None):
        config_file = config_file or os.getenv("DMS_CONFIG_FILE", "config.json")
        self._config_file = Path(config_file)
        self.config = self._load_config()

    def _load_config(self) -> Dict[str, Any]:
        merged = copy.deepcopy(self._defaults)
        if self._config_file.exists():
            try:
                with open(self._config_file, 'r') as f:
                    user_config = json.load(f)
                merged = self._deep_merge(merged, user_config)
            except Exception as e:
                logger.error(f"Failed to load config, using defaults: {e}")
        return self._validate(self._apply_env(merged))

    def _deep_merge(self, base: Dict, update: Dict) -> Dict:
        result = copy.deepcopy(base)
        for key, value in update.items():
            if key in result and isinstance(result[key], dict) and isinstance(value, dict):
                result[key] = self._deep_merge(result[key], value)
            else:
                result[key] = value
        return result

    def _apply_env(self, config: Dict[str, Any]) -> Dict[str, Any]:
        for name, (section, key, convert) in self.ENV_OVERRIDES.items():
            raw = os.getenv(name)
            if raw is None:
                continue
            try:
                config[section][key] = convert(raw)
            except ValueError as e:
                logger.warning(f"Ignoring {name}={raw!r}: {e}")
        return config

    def _validate(self, config: Dict[str, Any]) -> Dict[str, Any]:
        """Fall back to the defaults for search settings the core would reject"""
        search, defaults = config["search"], self._defaults["search"]
        checks = {
            "alpha": lambda v: 0 < v < 1,
            "alphas": lambda v: bool(v) and all(0 < a < 1 for a in v),
            "mc_replicates": lambda v: v >= 1,
            "dof_mode": lambda v: v in ("cells", "joint"),
            "workers": lambda v: v >= 1,
        }
        for key, ok in checks.items():
            try:
                valid = ok(search[key])
            except TypeError:
                valid = False
            if not valid:
                logger.warning(f"Invalid search.{key}={search[key]!r}, using {defaults[key]!r}")
                search[key] = copy.deepcopy(defaults[key])
        return config

    def save(self):
        """Write the merged configuration back to the JSON file"""
        try:
            with open(self._config_file, 'w') as f:
                json.dump(self.config, f, indent=2)
        except Exception as e:
            logger.error(f"Failed to save config: {e}")

    # Property getters
    @property
    def delimiter(self) -> str: return self.config["data"]["delimiter"]
    @property
    def class_column(self) -> str: return self.config["data"]["class_column"]
    @property
    def split_fraction(self) -> Fraction:
        return Fraction(self.config["data"]["split_numerator"], self.config["data"]["split_denominator"])
    @property
    def alpha(self) -> float: return self.config["search"]["alpha"]
    @property
    def alphas(self) -> List[float]: return list(self.config["search"]["alphas"])
    @property
    def mc_replicates(self) -> int: return self.config["search"]["mc_replicates"]
    @property
    def seed(self) -> int: return self.config["search"]["seed"]
    @property
    def literal_alpha_rule(self) -> bool: return self.config["search"]["literal_alpha_rule"]
    @property
    def dof_mode(self) -> str: return self.config["search"]["dof_mode"]
    @property
    def workers(self) -> int: return self.config["search"]["workers"]
    @property
    def output_dir(self) -> Path: return Path(self.config["paths"]["output_dir"])
    @property
    def server_host(self) -> str: return self.config["server"]["host"]
    @property
    def server_port(self) -> int: return self.config["server"]["port"]
    @property
    def app_name(self) -> str: return self.config["app"]["name"]
    @property
    def app_version(self) -> str: return self.config["app"]["version"]
    @property
    def debug(self) -> bool: return self.config["app"]["debug"]

    def update_config(self, section: str, key: str, value: Any) -> bool:
        """Change one known setting in memory; unknown keys are refused"""
        if section in self.config and key in self.config[section]:
            self.config[section][key] = value
            return True
        logger.warning(f"Unknown setting {section}.{key}")
        return False

    def reload(self):
        self.config = self._load_config()


# Global configuration instance
config = Config()
