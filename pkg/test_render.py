#!/usr/bin/env python3
"""
Figure tests
View box selection and deterministic SVG output
"""

import os
import sys
import tempfile

import numpy as np

from rays.addresses import parse_signed
from rays.models import make_model
from rays.render import DEFAULT_VIEW, render_svg, view_box
from rays.tracer import CriticalMarker, TailCurve


def print_header(title):
    print("\n" + "=" * 80)
    print(title.center(80))
    print("=" * 80)


def synthetic_curve(sign="+"):
    z = np.array([40, 5, 3, 2, 1, 0, 1j, 1.5j], dtype=complex)
    t = np.linspace(8.0, 1.0, len(z))
    return TailCurve(parse_signed("| 0R", sign), 3, t, z, [CriticalMarker(5, 0j, 2, "R")])


def test_view_box():
    assert view_box([]) == DEFAULT_VIEW
    xmin, xmax, ymin, ymax = view_box([synthetic_curve()])
    # the far vertex at 40 lies beyond the limit and is left out
    assert xmax < 10.0
    assert xmin < 0.0 < xmax
    assert ymin < 0.0 and ymax > 1.5


def test_svg_is_deterministic():
    print_header("SVG OUTPUT")

    model = make_model("cosh")
    curves = [synthetic_curve("+"), synthetic_curve("-")]
    folder = tempfile.mkdtemp(prefix="rays-render-")
    outputs = []
    try:
        for name in ("a.svg", "b.svg"):
            path = os.path.join(folder, name)
            render_svg(model, curves, path, seed=1234, preimages=True, title="| 0R")
            with open(path, "rb") as file:
                outputs.append(file.read())
    finally:
        for name in os.listdir(folder):
            os.unlink(os.path.join(folder, name))
        os.rmdir(folder)

    assert b"<svg" in outputs[0]
    assert outputs[0] == outputs[1]
    print(f"✓ {len(outputs[0])} bytes, identical on rerun")


TESTS = [
    ("View box", test_view_box),
    ("Deterministic SVG", test_svg_is_deterministic),
]


def main():
    print("=" * 80)
    print("FIGURE TEST SUITE".center(80))
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
