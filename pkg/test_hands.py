#!/usr/bin/env python3
"""
Fundamental hand tests
Partition search, removed tails, hand identity of points, hand assignment,
address intervals and chained inverse branches
"""

import sys

import numpy as np
import pytest

from rays.addresses import Sign, SignedAddress, interval_contains, parse_address, parse_signed
from rays.errors import NotInW, UnsupportedModel
from rays.hands import (HandAtlas, HandCase, SideFlag, address_interval, assign_hand,
                        build_partition, escaping_singular_values, hand_of_point, inverse_chain,
                        removed_set)
from rays.models import Side, Symbol, make_model

ZERO_R = "| 0R"
_ATLASES = {}


def print_header(title):
    print("\n" + "=" * 80)
    print(title.center(80))
    print("=" * 80)


def _mark(ok):
    return "✓" if ok else "✗"


def atlas_for(family, params=None):
    key = (family, tuple(sorted((params or {}).items())))
    if key not in _ATLASES:
        model = make_model(family, params)
        cfg, esd = build_partition(model, {"disk_radius": 3.0})
        _ATLASES[key] = HandAtlas(model, cfg, esd)
    return _ATLASES[key]


def small_cosh():
    return atlas_for("coshfamily", {"a": 0.1})


def test_escaping_singular_values():
    print_header("ESCAPING SINGULAR VALUES")

    cases = [
        (make_model("coshfamily", {"a": 0.1}), [], "0.1 cosh: attracted to a fixed point"),
        (make_model("cosh"), [-1 + 0j, 1 + 0j], "cosh: both critical values escape"),
        (make_model("coshsq"), [0j, 1 + 0j], "cosh^2: 0 escapes through 1"),
    ]
    failures = 0
    for model, expected, description in cases:
        got = sorted(escaping_singular_values(model, 8), key=lambda v: v.real)
        ok = got == expected
        print(f"{_mark(ok)} {description:40} | {got}")
        failures += not ok
    assert failures == 0

    with pytest.raises(UnsupportedModel):
        escaping_singular_values(make_model("exp", {"lambda": 1.0}), 8)


def test_partition_without_escaping_values():
    atlas = small_cosh()
    assert atlas.cfg.disk_radius == 3.0
    assert atlas.esd.points == ()
    assert removed_set(atlas, 0) == []
    assert removed_set(atlas, 4) == []


def test_removed_tails_of_cosh():
    print_header("REMOVED TAILS FOR COSH")

    atlas = atlas_for("cosh")
    assert sorted(atlas.esd.points, key=lambda v: v.real) == [-1 + 0j, 1 + 0j]
    counts = [len(removed_set(atlas, n)) for n in range(4)]
    print(f"📊 |X_n| for n = 0..3: {counts}")
    # f^3(1) is the first orbit point outside D
    assert counts == [0, 0, 0, 2]
    for tail in removed_set(atlas, 3):
        assert np.all(np.abs(tail.imag) <= 1e-6)


def test_hand_of_point():
    print_header("HAND IDENTITY")

    atlas = small_cosh()
    zero_r = Symbol(0, Side.R)
    cases = [
        (5.0 + 0j, 0, (zero_r,), "real point, level 0"),
        (20.0 + 0j, 1, (zero_r, zero_r), "real point, level 1"),
        (-5.0 + 0j, 0, (Symbol(0, Side.L),), "negative real point"),
    ]
    failures = 0
    for z, n, itinerary, description in cases:
        hand = hand_of_point(atlas, z, n)
        ok = hand.level == n and hand.itinerary == itinerary and hand.side_flags == ()
        print(f"{_mark(ok)} {description:25} | {hand.to_json()}")
        failures += not ok
    assert failures == 0

    with pytest.raises(NotInW) as raised:
        hand_of_point(atlas, 0.5 + 0j, 0)
    assert raised.value.index == 1
    assert SideFlag.ABOVE.value == "A"


def test_assign_hand_interior():
    atlas = small_cosh()
    target = parse_signed(ZERO_R, "+")
    assignment = assign_hand(atlas, atlas.tracer.curve(target, 0))
    assert assignment.case is HandCase.INTERIOR
    assert assignment.hand.itinerary == (Symbol(0, Side.R),)
    assert assignment.to_json()["case"] == "Interior"


def test_assign_hand_boundary():
    print_header("HAND ASSIGNMENT ON A REMOVED TAIL")

    atlas = atlas_for("cosh")
    # at level 3 the removed tail to 1 runs along the real half of | 0R
    plus = assign_hand(atlas, atlas.tracer.curve(parse_signed(ZERO_R, "+"), 3))
    minus = assign_hand(atlas, atlas.tracer.curve(parse_signed(ZERO_R, "-"), 3))
    for assignment in (plus, minus):
        print(f"✓ {assignment.target} | {assignment.case.value}: {assignment.hand.to_json()}")

    assert plus.case is HandCase.BOUNDARY and minus.case is HandCase.BOUNDARY
    assert plus.left == minus.left and plus.right == minus.right
    assert plus.hand == plus.left and minus.hand == minus.right
    assert SideFlag.ABOVE in plus.hand.side_flags
    assert SideFlag.BELOW in minus.hand.side_flags
    assert plus.to_json()["left"] == plus.hand.to_json()

    # below that level nothing is removed yet
    interior = assign_hand(atlas, atlas.tracer.curve(parse_signed(ZERO_R, "+"), 2))
    assert interior.case is HandCase.INTERIOR


def test_side_flags_of_points():
    atlas = atlas_for("cosh")
    above = hand_of_point(atlas, 3.5 + 1e-3j, 3)
    below = hand_of_point(atlas, 3.5 - 1e-3j, 3)
    print(f"✓ above: {above.to_json()['sides']} | below: {below.to_json()['sides']}")
    assert len(above.side_flags) == 2
    assert SideFlag.ABOVE in above.side_flags and SideFlag.BELOW not in above.side_flags
    assert SideFlag.BELOW in below.side_flags and SideFlag.ABOVE not in below.side_flags
    assert above.itinerary[:2] == below.itinerary[:2]
    # the flags of a point just above the curve match the hand beside it
    beside = atlas.hand_beside(3.5 + 0j, 1j, 3)
    assert beside.side_flags == above.side_flags
    assert atlas.same_hand(beside, atlas.hand_beside(3.6 + 0j, 1j, 3))
    assert not atlas.same_hand(beside, atlas.hand_beside(3.5 + 0j, -1j, 3))


def test_witnesses_and_raw_interval():
    print_header("ADDRESS INTERVALS")

    atlas = small_cosh()
    order = atlas.cfg.symbol_order
    target = parse_signed(ZERO_R, "+")

    upsilon, omega = atlas.witnesses(target, 0)
    assert upsilon == parse_address("0R | -1R")
    assert omega == parse_address("0R | 1R")

    interval = atlas.raw_interval(target, 0)
    assert interval.lo == SignedAddress(parse_address("0R | -1R"), Sign.MINUS)
    assert interval.hi == SignedAddress(parse_address("0R | 1R"), Sign.PLUS)
    cases = [
        (target, True, "the target itself"),
        (parse_signed(ZERO_R, "-"), True, "the target with the other sign"),
        (parse_signed("0R 0R | 1L", "+"), True, "shares two symbols"),
        (parse_signed("| 1R", "+"), False, "different first symbol"),
    ]
    failures = 0
    for point, expected, description in cases:
        got = interval_contains(interval, point, order)
        ok = got == expected
        print(f"{_mark(ok)} {description:30} | {point} -> {got}")
        failures += not ok
    assert failures == 0


def test_certified_interval():
    atlas = small_cosh()
    target = parse_signed(ZERO_R, "+")
    rng = np.random.default_rng(1234)
    assert address_interval(atlas, target, 0) == atlas.raw_interval(target, 0)
    certified = address_interval(atlas, target, 1, members=5, rng=rng)
    assert certified == atlas.raw_interval(target, 1)
    assert interval_contains(certified, target, atlas.cfg.symbol_order)


def test_inverse_chain():
    print_header("CHAINED INVERSE BRANCHES")

    atlas = small_cosh()
    model = atlas.model
    target = parse_signed(ZERO_R, "+")
    failures = 0
    for w in (10.0 + 0j, 8.0 + 2.0j, 40.0 - 5.0j):
        z = inverse_chain(atlas, target, 2, w)
        image = model.evaluate(model.evaluate(z))
        ok = abs(image - w) <= 1e-8 * abs(w) and z.real > 0
        print(f"{_mark(ok)} w = {w} | z = {z:.10f}")
        failures += not ok
    assert failures == 0

    with pytest.raises(NotInW):
        inverse_chain(atlas, target, 2, 1.0 + 0j)


TESTS = [
    ("Escaping singular values", test_escaping_singular_values),
    ("Partition search", test_partition_without_escaping_values),
    ("Removed tails", test_removed_tails_of_cosh),
    ("Hand identity", test_hand_of_point),
    ("Hand assignment", test_assign_hand_interior),
    ("Hand on a removed tail", test_assign_hand_boundary),
    ("Side flags", test_side_flags_of_points),
    ("Raw interval", test_witnesses_and_raw_interval),
    ("Certified interval", test_certified_interval),
    ("Inverse chain", test_inverse_chain),
]


def main():
    print("=" * 80)
    print("FUNDAMENTAL HAND TEST SUITE".center(80))
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
