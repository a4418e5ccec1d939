#!/usr/bin/env python3
"""
Map model tests
Evaluation, critical data, domain labels, inverse branches and orbits of the
shipped families
"""

import cmath
import math
import sys

import pytest

from rays.errors import (ConfigError, DerivativeOrderError, InsideD, NotInTract, OnDelta,
                         PreconditionError)
from rays.models import (CoshModel, Side, Symbol, critical_points_in, expansion_norm,
                         forward_orbit, hyperbolic_density, inverse_branch, is_disjoint_type,
                         label_of, local_degree, make_model, make_partition, symbol_of)


def print_header(title):
    print("\n" + "=" * 80)
    print(title.center(80))
    print("=" * 80)


def _mark(ok):
    return "✓" if ok else "✗"


def test_critical_data():
    """Critical values, singular radius and critical points per family"""
    print_header("CRITICAL DATA")

    cosh = make_model("cosh")
    coshsq = make_model("coshsq")
    exp = make_model("exp", {"lambda": 1.0})
    box = (-1.0, 1.0, -2.0, 2.0)

    cases = [
        (cosh.critical_values, [-1 + 0j, 1 + 0j], "cosh critical values"),
        (coshsq.critical_values, [0j, 1 + 0j], "cosh^2 critical values"),
        (exp.asymptotic_values, [0j], "exp asymptotic value"),
        (critical_points_in(cosh, box), [0j], "cosh critical points in box"),
        (critical_points_in(coshsq, box), [-0.5j * math.pi, 0j, 0.5j * math.pi],
         "cosh^2 critical points in box"),
    ]
    failures = 0
    for got, expected, description in cases:
        ok = len(got) == len(expected) and all(abs(g - e) < 1e-12 for g, e in zip(got, expected))
        print(f"{_mark(ok)} {description:35} | {got}")
        failures += not ok
    assert failures == 0

    assert cosh.singular_radius == 1.0
    assert exp.singular_radius == 0.0
    assert exp.metric_radius == 0.05
    with pytest.raises(PreconditionError):
        critical_points_in(cosh, (-1.0, 1.0, -600.0, 600.0))


def test_derivatives_and_degree():
    print_header("DERIVATIVES AND LOCAL DEGREE")

    cosh = make_model("cosh")
    coshsq = make_model("coshsq")
    cases = [
        (cosh, 0j, 2, "cosh at 0"),
        (cosh, 1 + 0j, 1, "cosh at 1"),
        (cosh, 0.5j * math.pi, 1, "cosh at i pi/2"),
        (coshsq, 0j, 2, "cosh^2 at 0"),
        (coshsq, 0.5j * math.pi, 2, "cosh^2 at i pi/2"),
    ]
    failures = 0
    for model, z, expected, description in cases:
        got = local_degree(model, z)
        ok = got == expected
        print(f"{_mark(ok)} {description:25} | degree {got}")
        failures += not ok
    assert failures == 0

    # cosh^2 = (1 + cosh 2z) / 2
    z = 0.3 + 0.7j
    assert abs(coshsq.derivative(z, 1) - cmath.sinh(2 * z)) < 1e-12
    assert abs(coshsq.derivative(z, 2) - 2 * cmath.cosh(2 * z)) < 1e-12
    assert abs(coshsq.local_coefficient(0j, 2) - 1.0) < 1e-12
    for order in (0, 9):
        with pytest.raises(DerivativeOrderError):
            cosh.derivative(z, order)


def test_partition_validation():
    print_header("PARTITION VALIDATION")

    cosh = make_model("cosh")
    cfg = make_partition(cosh, 3.0)
    assert cfg.disk_radius == 3.0
    assert abs(cfg.delta_angle - math.pi / 2) < 1e-15
    assert make_partition(make_model("exp"), 3.0).delta_angle == math.pi

    for radius, description in ((0.5, "below the singular radius"), (1.0, "f(0) on the circle")):
        with pytest.raises(ConfigError):
            make_partition(cosh, radius)
        print(f"✓ radius {radius} rejected: {description}")


def test_symbol_labels():
    print_header("FUNDAMENTAL DOMAIN LABELS")

    cosh = make_model("cosh")
    cfg = make_partition(cosh, 3.0)
    cases = [
        (5.0 + 0j, Symbol(0, Side.R), "positive real axis"),
        (-5.0 + 0j, Symbol(0, Side.L), "negative real axis"),
        (5.0 + 2j * math.pi, Symbol(1, Side.R), "one period up"),
        (5.0 - 2j * math.pi, Symbol(-1, Side.R), "one period down"),
    ]
    failures = 0
    for z, expected, description in cases:
        got = symbol_of(cosh, cfg, z)
        ok = got == expected
        print(f"{_mark(ok)} {description:25} | {z} -> {got}")
        failures += not ok
    assert failures == 0

    with pytest.raises(InsideD):
        symbol_of(cosh, cfg, 2.0 + 0j)
    with pytest.raises(OnDelta):
        symbol_of(cosh, cfg, 5j)
    with pytest.raises(NotInTract):
        symbol_of(cosh, cfg, 0.5 + 3.2j)

    # labels extend into D off the imaginary axis
    assert label_of(cosh, cfg, 0.5 + 0j) == Symbol(0, Side.R)
    assert label_of(cosh, cfg, -0.5 + 0j) == Symbol(0, Side.L)
    with pytest.raises(NotInTract):
        label_of(cosh, cfg, 2j)

    exp = make_model("exp")
    exp_cfg = make_partition(exp, 3.0)
    assert symbol_of(exp, exp_cfg, 5.0 + 0j) == Symbol(0)
    assert symbol_of(exp, exp_cfg, 5.0 + 2j * math.pi) == Symbol(1)


def test_symbol_text():
    cases = [("0R", Symbol(0, Side.R)), ("-1L", Symbol(-1, Side.L)), ("3", Symbol(3))]
    for text, expected in cases:
        assert Symbol.parse(text) == expected
        assert str(expected) == text
    with pytest.raises(ValueError):
        Symbol.parse("R0")


def test_inverse_branches():
    print_header("INVERSE BRANCHES")

    cosh = make_model("cosh")
    cfg = make_partition(cosh, 3.0)
    cases = [
        (Symbol(0, Side.R), complex(math.acosh(10.0), 0.0), "0R"),
        (Symbol(0, Side.L), complex(-math.acosh(10.0), 0.0), "0L"),
        (Symbol(1, Side.R), complex(math.acosh(10.0), 2 * math.pi), "1R"),
    ]
    failures = 0
    for symbol, expected, description in cases:
        z = inverse_branch(cosh, cfg, 10.0 + 0j, symbol)
        ok = abs(z - expected) < 1e-9 and abs(cosh.evaluate(z) - 10.0) < 1e-8
        print(f"{_mark(ok)} branch {description:5} | {z}")
        failures += not ok
    assert failures == 0

    with pytest.raises(InsideD):
        inverse_branch(cosh, cfg, 2.0 + 0j, Symbol(0, Side.R))
    with pytest.raises(OnDelta):
        inverse_branch(cosh, cfg, 10j, Symbol(0, Side.R))


def test_exp_lifted_log():
    exp = make_model("exp", {"lambda": 0.5})
    z = 1.2 - 0.4j
    assert abs(exp.evaluate(0j) - 0.5) < 1e-15
    assert abs(exp.solve_lifted(exp.lifted_log(z), None, 1e-12) - z) < 1e-12


def test_orbits():
    print_header("FORWARD ORBITS")

    cosh = make_model("cosh")
    escaping = forward_orbit(cosh, 0j, 20)
    assert escaping.escaped
    assert abs(escaping.points[1] - 1.0) < 1e-15
    print(f"✓ orbit of 0 escapes after {len(escaping.points) - 1} steps")

    bounded = forward_orbit(make_model("coshfamily", {"a": 0.1}), 0j, 50)
    assert not bounded.escaped
    print("✓ orbit of 0 under 0.1 cosh stays bounded")

    with pytest.raises(PreconditionError):
        forward_orbit(cosh, 0j, 10_001)


def test_hyperbolic_metric():
    print_header("HYPERBOLIC METRIC")

    assert abs(hyperbolic_density(1.0, math.e) - 1.0 / math.e) < 1e-15
    with pytest.raises(PreconditionError):
        hyperbolic_density(1.0, 0.5)

    cosh = make_model("cosh")
    norm = expansion_norm(cosh, cosh.metric_radius, 6.0 + 1j)
    print(f"✓ expansion of cosh at 6+i: {norm:.4f}")
    assert norm > 1.0


def test_disjoint_type():
    print_header("DISJOINT TYPE")

    cases = [
        (make_model("coshfamily", {"a": 0.1}), 1.0, True, "0.1 cosh at R = 1"),
        (make_model("cosh"), 3.0, False, "cosh at R = 3"),
        (make_model("coshsq"), 3.0, False, "cosh^2 at R = 3"),
    ]
    failures = 0
    for model, radius, expected, description in cases:
        verdict, peak = is_disjoint_type(model, radius)
        ok = verdict == expected
        print(f"{_mark(ok)} {description:20} | max |f| = {peak:.4f}")
        failures += not ok
    assert failures == 0


def test_model_parameters():
    model = make_model("coshfamily", {"a": 0.25 + 0.1j})
    assert isinstance(model, CoshModel)
    assert model.params == {"a": [0.25, 0.1]}
    assert model.name == "coshfamily"
    with pytest.raises(ConfigError):
        make_model("exp", {"lambda": 0})


TESTS = [
    ("Critical data", test_critical_data),
    ("Derivatives", test_derivatives_and_degree),
    ("Partition", test_partition_validation),
    ("Labels", test_symbol_labels),
    ("Symbol text", test_symbol_text),
    ("Inverse branches", test_inverse_branches),
    ("Exp logarithm", test_exp_lifted_log),
    ("Orbits", test_orbits),
    ("Hyperbolic metric", test_hyperbolic_metric),
    ("Disjoint type", test_disjoint_type),
    ("Parameters", test_model_parameters),
]


def main():
    print("=" * 80)
    print("MAP MODEL TEST SUITE".center(80))
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
