#!/usr/bin/env python3
"""
Configuration Manager for the rays toolkit
Loads the default run configuration, merges user files and flag overrides,
validates the result and fingerprints it for reports
"""

import copy
import hashlib
import json
import os

import yaml

from rays.console import status
from rays.errors import ConfigError

SCHEMA = {
    "family": None,
    "params": None,
    "partition": {"disk_radius", "delta_angle", "probe_factor", "horizon", "max_doublings"},
    "trace": {"depth", "level", "bailout", "step", "crit_tol", "newton_tol", "window_top",
              "anchor_potential", "refine_potential", "max_bisections"},
    "checks": {"seed", "expansion_samples", "order_addresses", "order_symbols",
               "order_radius_factor", "convergence_terms", "convergence_level",
               "interval_targets", "interval_level", "interval_members", "interval_points",
               "jobs"},
    "output": {"out", "svg", "timings"},
}

FAMILY_PARAMS = {"cosh": set(), "coshsq": set(), "exp": {"lambda"}, "coshfamily": {"a"}}

POSITIVE_KEYS = {
    "partition": ["disk_radius", "probe_factor", "horizon", "max_doublings"],
    "trace": ["depth", "bailout", "step", "crit_tol", "newton_tol",
              "anchor_potential", "refine_potential", "max_bisections"],
}


def parse_complex(value):
    """Accept 0.3, [0.3, 0.1], "0.3+0.1j" or {"re": .., "im": ..}"""
    if isinstance(value, bool):
        raise ConfigError(f"Not a number: {value!r}")
    if isinstance(value, (int, float, complex)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, dict) and set(value) <= {"re", "im"}:
        return complex(float(value.get("re", 0.0)), float(value.get("im", 0.0)))
    if isinstance(value, str):
        try:
            return complex(value.replace(" ", "").replace("i", "j"))
        except ValueError:
            pass
    raise ConfigError(f"Not a complex number: {value!r}")


def deep_merge(base, updates):
    merged = copy.deepcopy(base)
    for key, value in (updates or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


class ConfigManager:
    def __init__(self, config_path=None, user_path=None):
        if config_path is None:
            script_dir = os.path.dirname(os.path.abspath(__file__))
            config_path = os.path.join(script_dir, "config.yaml")

        self.config_path = config_path
        self.user_path = user_path
        self.current_config = None
        self.config_hash = None
        self.load_config()

    def _read(self, path):
        try:
            with open(path, "r") as file:
                data = yaml.safe_load(file)
        except FileNotFoundError:
            status(f"❌ Config file not found: {path}")
            raise ConfigError(f"Config file not found: {path}")
        except yaml.YAMLError as e:
            status(f"❌ Error parsing config: {e}")
            raise ConfigError(f"Error parsing {path}: {e}")
        if data is None:
            return {}
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        return data

    def load_config(self):
        """Load defaults, merge the user file if any and recompute the hash"""
        config = self._read(self.config_path)
        if self.user_path:
            config = deep_merge(config, self._read(self.user_path))
            status(f"✅ Configuration loaded from {self.user_path}")
        self.current_config = config
        self._rehash()
        return self.current_config

    def _rehash(self):
        config_str = json.dumps(self.current_config, sort_keys=True, default=str)
        self.config_hash = hashlib.sha256(config_str.encode()).hexdigest()

    def apply_overrides(self, overrides):
        """Merge flag values (None entries are ignored) over the loaded config"""
        cleaned = {}
        for section, value in (overrides or {}).items():
            if isinstance(value, dict):
                kept = {k: v for k, v in value.items() if v is not None}
                if kept:
                    cleaned[section] = kept
            elif value is not None:
                cleaned[section] = value
        if cleaned.get("family", self.current_config.get("family")) != self.current_config.get("family"):
            self.current_config["params"] = {}
        self.current_config = deep_merge(self.current_config, cleaned)
        self._rehash()
        return self.current_config

    def validate_config(self, config_dict=None):
        """Validate configuration schema and numeric invariants"""
        config = config_dict or self.current_config
        errors = []

        for key in config:
            if key not in SCHEMA:
                errors.append(f"Unknown key: {key}")
        for section, keys in SCHEMA.items():
            if keys is None:
                continue
            value = config.get(section)
            if value is None:
                errors.append(f"Missing required section: {section}")
                continue
            if not isinstance(value, dict):
                errors.append(f"Section {section} must be a mapping")
                continue
            for key in value:
                if key not in keys:
                    errors.append(f"Unknown key: {section}.{key}")

        family = config.get("family")
        if family not in FAMILY_PARAMS:
            errors.append(f"Unknown family: {family!r} (expected one of {', '.join(FAMILY_PARAMS)})")
        else:
            params = config.get("params") or {}
            if not isinstance(params, dict):
                errors.append("params must be a mapping")
                params = {}
            for key in params:
                if key not in FAMILY_PARAMS[family]:
                    errors.append(f"Unknown key: params.{key} for family {family}")
            for key in FAMILY_PARAMS[family]:
                if key not in params:
                    errors.append(f"Missing parameter {key} for family {family}")
                else:
                    try:
                        if parse_complex(params[key]) == 0:
                            errors.append(f"Parameter {key} must be nonzero")
                    except ConfigError as e:
                        errors.append(f"params.{key}: {e}")

        for section, keys in POSITIVE_KEYS.items():
            block = config.get(section) or {}
            for key in keys:
                if key in block and not _is_positive(block[key]):
                    errors.append(f"{section}.{key} must be a positive number")

        trace = config.get("trace") or {}
        if _is_positive(trace.get("crit_tol")) and _is_positive(trace.get("newton_tol")):
            if trace["crit_tol"] < 10 * trace["newton_tol"]:
                errors.append("trace.crit_tol must be at least 10 * trace.newton_tol")
        if "level" in trace and not (isinstance(trace["level"], int) and 0 <= trace["level"] <= 64):
            errors.append("trace.level must be an integer in [0, 64]")
        if trace.get("window_top") is not None and not _is_positive(trace["window_top"]):
            errors.append("trace.window_top must be positive or null")

        checks = config.get("checks") or {}
        if "seed" in checks and not isinstance(checks["seed"], int):
            errors.append("checks.seed must be an integer")
        if "jobs" in checks and not isinstance(checks["jobs"], int):
            errors.append("checks.jobs must be an integer")
        level = checks.get("convergence_level", 0)
        if not (isinstance(level, int) and 0 <= level <= 64):
            errors.append("checks.convergence_level must be an integer in [0, 64]")

        if not errors and family in FAMILY_PARAMS:
            errors.extend(self._model_errors(config))

        if errors:
            status("❌ Configuration validation failed:")
            for error in errors:
                status(f"  - {error}")
            return False

        status("✅ Configuration validation passed")
        return True

    def _model_errors(self, config):
        from rays.models import make_model

        errors = []
        model = make_model(config["family"], _parsed_params(config))
        radius = config["partition"].get("disk_radius", 3.0)
        if radius < model.singular_radius:
            errors.append(f"partition.disk_radius {radius} is smaller than the singular radius "
                          f"{model.singular_radius:.6g}")
        if abs(model.evaluate(0)) >= radius:
            errors.append(f"partition.disk_radius {radius} does not contain f(0)")
        return errors

    def require_valid(self):
        if not self.validate_config():
            raise ConfigError("Configuration validation failed")
        return self.current_config

    # Builders

    def build_model(self):
        from rays.models import make_model

        return make_model(self.current_config["family"], _parsed_params(self.current_config))

    def partition_settings(self):
        return dict(self.current_config["partition"])

    def trace_params(self):
        from rays.tracer import TraceParams

        return TraceParams(**self.current_config["trace"])

    def checks(self):
        return dict(self.current_config["checks"])

    def output(self):
        return dict(self.current_config["output"])

    def export_config(self, format="yaml"):
        """Export current configuration"""
        if format == "json":
            return json.dumps(self.current_config, indent=2, sort_keys=True)
        return yaml.dump(self.current_config, default_flow_style=False, sort_keys=True)


def _is_positive(value):
    return isinstance(value, (int, float)) and not isinstance(value, bool) and value > 0


def _parsed_params(config):
    return {k: parse_complex(v) for k, v in (config.get("params") or {}).items()}


if __name__ == "__main__":
    cm = ConfigManager()
    cm.validate_config()
    print("\n📊 Configuration Summary:")
    print(cm.export_config())
    print(f"🔑 Hash: {cm.config_hash[:16]}")
