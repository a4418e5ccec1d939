#!/usr/bin/env python3
"""
Conformance checks
Executable checks of the structural claims behind the tracer: hyperbolic
expansion on tracts, agreement of the symbolic and geometric cyclic orders,
convergence of approaching tails, the signed-address count, the pullback
bijection and the disjoint-type controls.

Every check returns a CheckReport; randomness is always seeded from the
caller and the seed is recorded in the report.
"""

import cmath
import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed
from scipy.spatial.distance import cdist

from rays.addresses import (ExternalAddress, Sign, SignedAddress, cyclic_triple,
                            format_address, random_address, signed_compare, symbol_alphabet)
from rays.errors import CurveMissesCircle, InvalidApproach, NonDistinct, TracerError
from rays.hands import HandCase
from rays.models import TWO_PI, Ordering, Side, Symbol, is_disjoint_type, make_model
from rays.tracer import (RayTracer, check_bijection as curve_bijection,
                         count_signed_addresses, decompose_gamma, signed_addresses_through)

logger = logging.getLogger(__name__)

CONVERGENCE_LIMIT = 1e-3
MONOTONE_SLACK = 1e-9
SPLIT_TOL = 1e-6
SHARED_TOL = 1e-8


@dataclass
class CheckReport:
    name: str
    passed: bool
    observed: object
    threshold: float
    samples: int
    seed: int = None
    config_hash: str = None
    detail: str = ""
    runtime_ms: int = None

    def to_json(self):
        report = {"name": self.name, "passed": self.passed, "observed": self.observed,
                  "threshold": self.threshold, "samples": self.samples, "seed": self.seed,
                  "config_hash": self.config_hash, "detail": self.detail}
        if self.runtime_ms is not None:
            report["runtime_ms"] = self.runtime_ms
        return report


# Expansion


def expansion_norms(model, radius, z):
    """|f'| rho(f) / rho(z) for the hyperbolic metric outside the given disk, vectorized"""
    w = model.evaluate_array(z)
    rz = np.abs(z)
    rw = np.abs(w)
    density_z = 1.0 / (rz * np.log(rz / radius))
    density_w = 1.0 / (rw * np.log(rw / radius))
    return np.abs(model.derivative_array(z)) * density_w / density_z


def check_expansion(model, cfg, samples=10000, seed=1234):
    rng = np.random.default_rng(seed)
    inner = model.metric_radius
    lo, hi = math.log(1.1 * cfg.disk_radius), math.log(100 * cfg.disk_radius)
    kept = []
    drawn = 0
    while sum(len(k) for k in kept) < samples and drawn < 200 * samples:
        r = np.exp(rng.uniform(lo, hi, samples))
        z = r * np.exp(1j * rng.uniform(0.0, TWO_PI, samples))
        drawn += samples
        with np.errstate(over="ignore", invalid="ignore"):
            w = model.evaluate_array(z)
        valid = np.isfinite(w) & (np.abs(w) > cfg.disk_radius)
        kept.append(z[valid])
    points = np.concatenate(kept)[:samples]
    with np.errstate(over="ignore", invalid="ignore"):
        norms = expansion_norms(model, inner, points)
    norms = norms[np.isfinite(norms)]
    observed = float(np.min(norms)) if len(norms) else float("nan")
    return CheckReport("expansion", bool(observed > 1.0), observed, 1.0, int(len(norms)),
                       seed=seed, detail=f"inner metric radius {inner:.6g}")


# Cyclic order


class GeometricOrder:
    """Order of level-0 tails read off their crossings with a circle"""

    def __init__(self, tracer, radius):
        self.tracer = tracer
        self.radius = radius
        self._crossings = {}

    def crossing(self, addr):
        if addr not in self._crossings:
            self._crossings[addr] = self._find_crossing(addr)
        return self._crossings[addr]

    def _modulus_gap(self, addr, t):
        return abs(self.tracer.level0_point(addr, t)) - self.radius

    def _find_crossing(self, addr):
        lo, hi = 0.5 * self.radius, 2.0 * self.radius
        try:
            g_lo, g_hi = self._modulus_gap(addr, lo), self._modulus_gap(addr, hi)
        except TracerError as e:
            raise CurveMissesCircle(f"tail not traceable near the circle: {e}",
                                    address=format_address(addr))
        if g_lo > 0 or g_hi < 0:
            raise CurveMissesCircle("tail does not cross the circle; raise R",
                                    address=format_address(addr), radius=self.radius)
        for _ in range(60):
            middle = 0.5 * (lo + hi)
            if self._modulus_gap(addr, middle) > 0:
                hi = middle
            else:
                lo = middle
        return self.tracer.level0_point(addr, 0.5 * (lo + hi))

    def prefetch(self, addrs, jobs=1):
        """Locate the crossings of addrs, in parallel when jobs != 1"""
        missing = [a for a in dict.fromkeys(addrs) if a not in self._crossings]
        if jobs == 1 or len(missing) < 2:
            for addr in missing:
                self.crossing(addr)
            return
        t = self.tracer
        found = Parallel(n_jobs=jobs)(
            delayed(_locate_crossing)(t.model, t.cfg, t.params, self.radius, addr)
            for addr in missing)
        self._crossings.update(zip(missing, found))

    def key(self, addr):
        delta = self.tracer.cfg.delta_angle
        return (cmath.phase(self.crossing(addr)) - delta) % TWO_PI

    def compare(self, a, b):
        if a == b:
            return Ordering.EQ
        for _ in range(a.comparison_budget(b)):
            if a.symbol_at(0) != b.symbol_at(0):
                return Ordering.of(self.key(a), self.key(b))
            # b anticlockwise of a means a < b
            turn = cmath.phase(self.crossing(b) / self.crossing(a))
            if abs(turn) > 1e-12:
                return Ordering.LT if turn > 0 else Ordering.GT
            # indistinguishable at this radius: compare the images
            a, b = a.shift(), b.shift()
        return Ordering.EQ


def _locate_crossing(model, cfg, params, radius, addr):
    return GeometricOrder(RayTracer(model, cfg, params), radius).crossing(addr)


def _geometric_triple(a, x, b, compare):
    lt = lambda p, q: compare(p, q) == Ordering.LT
    return (lt(a, x) and lt(x, b)) or (lt(x, b) and lt(b, a)) or (lt(b, a) and lt(a, x))


def check_cyclic_order(tracer, addrs, radius, jobs=1):
    order = tracer.cfg.symbol_order
    addrs = list(dict.fromkeys(addrs))
    if len(addrs) < 3:
        raise NonDistinct("cyclic order check needs three distinct addresses")
    geometry = GeometricOrder(tracer, radius)
    geometry.prefetch(addrs, jobs)
    pairs = {}

    def geometric(p, q):
        if (p, q) not in pairs:
            pairs[(p, q)] = geometry.compare(p, q)
            pairs[(q, p)] = Ordering(-pairs[(p, q)])
        return pairs[(p, q)]

    total = agree = 0
    first_failure = ""
    for a, x, b in itertools.combinations(addrs, 3):
        symbolic = cyclic_triple(a, x, b, order)
        measured = _geometric_triple(a, x, b, geometric)
        total += 1
        if symbolic == measured:
            agree += 1
        elif not first_failure:
            first_failure = (f"[{a}, {x}, {b}]: symbolic {symbolic}, geometric {measured}")
    observed = agree / total
    return CheckReport("cyclic_order", agree == total, observed, 1.0, total,
                       detail=first_failure or f"{len(addrs)} addresses at radius {radius:.6g}")


# Convergence


def approach_sequence(limit, order, count=6, start=1):
    """Addresses approaching limit from above (Plus) or below (Minus)"""
    pick = order.succ if limit.sign is Sign.PLUS else order.pred
    return [limit.addr.replace_at(k, pick(limit.addr.symbol_at(k)))
            for k in range(start, start + count)]


def approach_start(tracer, limit, count, level):
    """First index of a count-term approach whose last term still separates from limit at level

    A symbol changed at index k reaches the level-0 tail of the level-th shift at
    index k - level, and the tail only reads symbols up to its resolved depth, so
    later changes trace to the very same curve.
    """
    last = level + tracer.resolved_depth(limit.addr)
    return max(1, last - count + 1)


def _validate_approach(limit, approach, order):
    expected = Ordering.GT if limit.sign is Sign.PLUS else Ordering.LT
    previous = None
    for addr in approach:
        if addr == limit.addr:
            continue
        here = SignedAddress(addr, limit.sign)
        if signed_compare(here, limit, order) != expected:
            raise InvalidApproach("approach term on the wrong side of the limit",
                                  address=format_address(addr))
        if previous is not None and signed_compare(here, previous, order) != Ordering(-expected):
            raise InvalidApproach("approach is not monotone", address=format_address(addr))
        previous = here


def densify(points, spacing):
    points = np.asarray(points, dtype=complex)
    if len(points) < 2:
        return points
    out = [points[:1]]
    for a, b in zip(points[:-1], points[1:]):
        pieces = max(1, int(math.ceil(abs(b - a) / spacing)))
        out.append(a + (b - a) * np.arange(1, pieces + 1) / pieces)
    return np.concatenate(out)


def hausdorff(p, q):
    if len(p) == 0 or len(q) == 0:
        return math.inf
    a = np.column_stack([p.real, p.imag])
    b = np.column_stack([q.real, q.imag])
    distances = cdist(a, b)
    return float(max(distances.min(axis=1).max(), distances.min(axis=0).max()))


def _windowed(curve, window, spacing):
    dense = densify(curve.z, spacing)
    size = np.abs(dense)
    return dense[(size > window[0]) & (size <= window[1])]


def check_convergence(tracer, limit, approach, window=None, level=None):
    params = tracer.params
    level = params.level if level is None else level
    window = window or (0.0, 2.0 * tracer.cfg.disk_radius)
    _validate_approach(limit, approach, tracer.cfg.symbol_order)
    spacing = params.step / 2
    reference = _windowed(tracer.curve(limit, level), window, spacing)
    distances = []
    for addr in approach:
        curve = tracer.curve(SignedAddress(addr, limit.sign), level)
        distances.append(hausdorff(_windowed(curve, window, spacing), reference))
    tail = distances[1:]
    monotone = all(b <= a + MONOTONE_SLACK for a, b in zip(tail, tail[1:]))
    passed = monotone and distances[-1] < CONVERGENCE_LIMIT
    separated = sum(1 for d in distances if d > 0)
    return CheckReport(f"convergence{limit.sign.value}", bool(passed), distances,
                       CONVERGENCE_LIMIT, len(distances),
                       detail=f"limit {limit} at level {level}, window |z| in "
                              f"({window[0]:g}, {window[1]:g}], {separated}/{len(distances)} "
                              "terms separated from the limit")


# Counting


def check_counting(tracer, points, horizon=8, enumerate_siblings=True, jobs=1):
    rows = []
    passed = True
    for z, expected in points:
        count = count_signed_addresses(tracer.model, z, horizon, tracer.params)
        row = {"re": z.real, "im": z.imag, "expected": expected, "formula": count}
        ok = count == expected
        if enumerate_siblings and expected <= 8:
            found = signed_addresses_through(tracer, z, horizon, jobs=jobs)
            row["enumerated"] = len(found)
            ok = ok and len(found) == expected
        row["passed"] = ok
        passed = passed and ok
        rows.append(row)
    return CheckReport("counting", passed, rows, 0.0, len(points))


# Curve-level checks


def check_bijection(tracer, targets, level=None):
    level = tracer.params.level if level is None else level
    worst = 0.0
    failures = []
    checked = 0
    for signed in targets:
        for n in range(1, level + 1):
            curve = tracer.curve(signed, n)
            parent = tracer.curve(signed.shift(), n - 1)
            ok, distance, monotone = curve_bijection(tracer.model, curve, parent,
                                                     step=tracer.params.step)
            worst = max(worst, distance)
            checked += 1
            if not ok and len(failures) < 3:
                failures.append(f"{signed} level {n}: distance {distance:.3g}, "
                                f"monotone {monotone}")
    threshold = max(1e-8, tracer.params.step ** 2)
    return CheckReport("bijection", not failures, worst, threshold, checked,
                       detail="; ".join(failures))


def check_real_axis(tracer):
    """The tail of the constant address in the strip around the positive axis is real"""
    base = ExternalAddress.periodic(positive_symbol(tracer.model))
    curve = tracer.trace_level0(base)
    observed = float(np.max(np.abs(curve.z.imag)))
    passed = observed <= 1e-6 and bool(np.all(curve.z.real > 0))
    return CheckReport("real_axis", passed, observed, 1e-6, len(curve),
                       detail=f"level 0 of {base}")


def positive_symbol(model):
    return Symbol(0, Side.R) if model.has_sides else Symbol(0)


def check_splitting(tracer, level=None):
    """Both signs share the tail above c_0 and leave it along opposite bristles"""
    level = tracer.params.level if level is None else level
    base = ExternalAddress.periodic(positive_symbol(tracer.model))
    plus = decompose_gamma(tracer.curve(SignedAddress(base, Sign.PLUS), level))
    minus = decompose_gamma(tracer.curve(SignedAddress(base, Sign.MINUS), level))
    if not plus.critical_points:
        return CheckReport("splitting", True, "signs identical", SPLIT_TOL, 0,
                           detail=f"no critical point on the level {level} curve")
    shared = len(plus.unbounded_tail) == len(minus.unbounded_tail) and bool(
        np.all(np.abs(plus.unbounded_tail - minus.unbounded_tail) <= SHARED_TOL))
    gaps = []
    for decomposition, expected in ((plus, 0.5j * math.pi), (minus, -0.5j * math.pi)):
        if len(decomposition.critical_points) > 1:
            gaps.append(abs(decomposition.critical_points[1] - expected))
        elif len(decomposition.segments[0]):
            gaps.append(abs(decomposition.segments[0][-1] - expected))
        else:
            gaps.append(math.inf)
    observed = {"c0": [plus.critical_points[0].real, plus.critical_points[0].imag],
                "endpoint_gap_plus": gaps[0], "endpoint_gap_minus": gaps[1],
                "shared_tail": shared}
    passed = shared and max(gaps) <= SPLIT_TOL and abs(plus.critical_points[0]) <= SPLIT_TOL
    return CheckReport("splitting", passed, observed, SPLIT_TOL, 2, detail=f"{base} at level {level}")


def check_disjoint_type(model, radius):
    """The configured model's verdict, judged against one positive and one negative control"""
    verdict, peak = is_disjoint_type(model, radius)
    positive, _ = is_disjoint_type(make_model("coshfamily", {"a": 0.1}), 1.0)
    negative, _ = is_disjoint_type(make_model("cosh"), 3.0)
    passed = positive and not negative
    return CheckReport("disjoint_type", passed, {"disjoint": verdict, "max_on_circle": peak},
                       radius, 720, detail="controls: a=0.1 cosh at R=1 disjoint, cosh at R=3 not")


def check_interval_agreement(atlas, targets, level, members=10, points=20, seed=1234):
    """Fresh members of each certified interval are assigned the target's hand, and
    inverse-chain points land in a hand the target's curve bounds"""
    rng = np.random.default_rng(seed)
    checked = agreed = 0
    failures = []
    for target in targets:
        try:
            interval = atlas.address_interval(target, level, members=members, rng=rng)
            assignment = atlas.assign_hand(atlas.tracer.curve(target, level))
        except TracerError as e:
            failures.append(f"{target}: {e.describe()}")
            continue
        for member in atlas.sample_members(target, level, interval, members, rng):
            outside = atlas.outside_hand(member, level, assignment.hand)
            if outside is None:
                continue
            checked += 1
            if outside:
                failures.append(f"{member} left the hand of {target}")
            else:
                agreed += 1
        bounded = [assignment.hand]
        if assignment.case is HandCase.BOUNDARY:
            bounded = [assignment.left, assignment.right]
        for w in atlas.sample_targets(target.addr.symbol_at(level), points, rng):
            try:
                z = atlas.inverse_chain(target, level, w)
                here = atlas.hand_of_point(z, level)
            except TracerError:
                # obstructed, or on a removed tail
                continue
            checked += 1
            if any(atlas.same_hand(here, hand) for hand in bounded):
                agreed += 1
            else:
                failures.append(f"chain point {z:.6g} of {target} in a foreign hand")
    observed = agreed / checked if checked else 0.0
    return CheckReport("interval_agreement", bool(checked) and not failures, observed, 1.0,
                       checked, seed=seed,
                       detail="; ".join(failures[:3]) or f"{len(targets)} targets at level {level}")


def random_targets(model, count, rng, rows=1):
    alphabet = symbol_alphabet(model, rows)
    return [SignedAddress(random_address(rng, alphabet), Sign.PLUS if rng.integers(0, 2)
                          else Sign.MINUS) for _ in range(count)]


def order_addresses(model, count, symbols, rng, max_draws=None):
    """count distinct random addresses over the first `symbols` symbols of the alphabet"""
    alphabet = symbol_alphabet(model, 1)[:symbols] if symbols else symbol_alphabet(model, 1)
    max_draws = max_draws or 100 * count
    drawn = {}
    for _ in range(max_draws):
        if len(drawn) == count:
            break
        drawn.setdefault(random_address(rng, alphabet), None)
    if len(drawn) < count:
        raise NonDistinct(f"only {len(drawn)} distinct addresses in {max_draws} draws",
                          count=count)
    return list(drawn)
