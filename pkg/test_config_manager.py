#!/usr/bin/env python3
"""
Configuration manager tests
Defaults, user files, flag overrides, validation rules and the run fingerprint
"""

import copy
import os
import sys
import tempfile

import pytest

from rays.config_manager import ConfigManager, deep_merge, parse_complex
from rays.errors import ConfigError
from rays.models import ExpModel


def print_header(title):
    print("\n" + "=" * 80)
    print(title.center(80))
    print("=" * 80)


def _mark(ok):
    return "✓" if ok else "✗"


def write_temp(text):
    handle = tempfile.NamedTemporaryFile("w", suffix=".yaml", delete=False)
    with handle:
        handle.write(text)
    return handle.name


def test_defaults():
    print_header("DEFAULT CONFIGURATION")

    cm = ConfigManager()
    assert cm.validate_config()
    assert cm.current_config["family"] == "coshsq"
    assert len(cm.config_hash) == 64
    assert all(ch in "0123456789abcdef" for ch in cm.config_hash)
    assert ConfigManager().config_hash == cm.config_hash
    print(f"✓ defaults valid | hash {cm.config_hash[:16]}")

    params = cm.trace_params()
    assert params.level == 4 and params.step == 0.05
    assert cm.partition_settings()["disk_radius"] == 3.0
    assert cm.checks()["seed"] == 1234
    assert cm.checks()["convergence_level"] == 8


def test_user_file_and_overrides():
    print_header("USER FILE AND OVERRIDES")

    path = write_temp("family: cosh\ntrace:\n  level: 2\n")
    try:
        cm = ConfigManager(user_path=path)
    finally:
        os.unlink(path)
    assert cm.current_config["family"] == "cosh"
    assert cm.current_config["trace"]["level"] == 2
    # untouched keys keep their defaults
    assert cm.current_config["trace"]["step"] == 0.05
    before = cm.config_hash

    cm.apply_overrides({"trace": {"level": None, "step": 0.1}, "family": None})
    assert cm.current_config["trace"]["level"] == 2
    assert cm.current_config["trace"]["step"] == 0.1
    assert cm.current_config["family"] == "cosh"
    assert cm.config_hash != before

    cm.apply_overrides({"family": "exp", "params": {"lambda": [0.3, 0.0]}})
    assert cm.validate_config()
    assert isinstance(cm.build_model(), ExpModel)
    print("✓ None overrides ignored, family switch drops stale params")


def test_merge_does_not_alias():
    base = {"trace": {"level": 4}, "params": {}}
    merged = deep_merge(base, {"trace": {"step": 0.1}})
    merged["trace"]["level"] = 9
    assert base == {"trace": {"level": 4}, "params": {}}
    assert merged["trace"] == {"level": 9, "step": 0.1}


def test_validation_rules():
    print_header("VALIDATION RULES")

    cm = ConfigManager()
    valid = copy.deepcopy(cm.current_config)

    def changed(path, value):
        config = copy.deepcopy(valid)
        node = config
        for key in path[:-1]:
            node = node[key]
        node[path[-1]] = value
        return config

    cases = [
        (changed(["colour"], "red"), False, "unknown top-level key"),
        (changed(["trace", "speed"], 1), False, "unknown trace key"),
        (changed(["family"], "sine"), False, "unknown family"),
        (changed(["family"], "exp"), False, "exp without lambda"),
        (changed(["trace", "step"], -0.1), False, "negative step"),
        (changed(["trace", "crit_tol"], 1e-10), False, "crit_tol below 10 newton_tol"),
        (changed(["trace", "level"], 65), False, "level above 64"),
        (changed(["checks", "seed"], "abc"), False, "non-integer seed"),
        (changed(["checks", "convergence_level"], 65), False, "convergence level above 64"),
        (changed(["partition", "disk_radius"], 0.5), False, "disk below the singular values"),
        (changed(["trace", "level"], 0), True, "level 0"),
    ]
    failures = 0
    for config, expected, description in cases:
        got = cm.validate_config(config)
        ok = got == expected
        print(f"{_mark(ok)} {description:32} | valid={got}")
        failures += not ok
    assert failures == 0

    cm.apply_overrides({"family": "exp"})
    with pytest.raises(ConfigError):
        cm.require_valid()


def test_parse_complex():
    print_header("COMPLEX PARAMETERS")

    cases = [
        (0.3, 0.3 + 0j),
        ([0.3, 0.1], 0.3 + 0.1j),
        ("0.3+0.1i", 0.3 + 0.1j),
        ("0.3 + 0.1j", 0.3 + 0.1j),
        ({"re": 0.2}, 0.2 + 0j),
        (2, 2 + 0j),
    ]
    failures = 0
    for value, expected in cases:
        got = parse_complex(value)
        ok = got == expected
        print(f"{_mark(ok)} {value!r:20} -> {got}")
        failures += not ok
    assert failures == 0

    for bad in (True, "abc", [1.0], {"x": 1}):
        with pytest.raises(ConfigError):
            parse_complex(bad)


def test_unreadable_files():
    path = write_temp("family: [cosh\n")
    try:
        with pytest.raises(ConfigError):
            ConfigManager(user_path=path)
    finally:
        os.unlink(path)

    path = write_temp("- just\n- a list\n")
    try:
        with pytest.raises(ConfigError):
            ConfigManager(user_path=path)
    finally:
        os.unlink(path)

    with pytest.raises(ConfigError):
        ConfigManager(config_path=os.path.join(tempfile.gettempdir(), "rays-missing.yaml"))


def test_export():
    cm = ConfigManager()
    assert '"family": "coshsq"' in cm.export_config("json")
    assert "family: coshsq" in cm.export_config()


TESTS = [
    ("Defaults", test_defaults),
    ("User file and overrides", test_user_file_and_overrides),
    ("Deep merge", test_merge_does_not_alias),
    ("Validation rules", test_validation_rules),
    ("Complex parameters", test_parse_complex),
    ("Unreadable files", test_unreadable_files),
    ("Export", test_export),
]


def main():
    print("=" * 80)
    print("CONFIGURATION TEST SUITE".center(80))
    print("=" * 80)

    results = {}
    for name, test in TESTS:
        try:
            test()
            results[name] = True
        except AssertionError as e:
            print(f"✗ {name}: {e}")
            results[name] = False

    print_header("FINAL RESULTS")
    for name, passed in results.items():
        status = "✅ PASS" if passed else "❌ FAIL"
        print(f"{status} | {name}")

    all_passed = all(results.values())
    print("\n" + "=" * 80)
    if all_passed:
        print("🎉 ALL TESTS PASSED!".center(80))
    else:
        print("⚠️  SOME TESTS FAILED.".center(80))
    print("=" * 80 + "\n")

    return 0 if all_passed else 1


if __name__ == '__main__':
    sys.exit(main())
