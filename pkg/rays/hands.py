#!/usr/bin/env python3
"""
Fundamental hands
Partition-parameter search, the removed tails X_n, hand identity of points,
hand assignment for traced curves, certified address intervals and chained
inverse branches.

A hand is identified combinatorially: the labels of z, f(z), ..., f^n(z)
together with the side (above, below, not adjacent) of each f^k(z) relative
to every tail removed at the matching stage.
"""

import cmath
import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from rays.addresses import (AddressInterval, ExternalAddress, Sign, SignedAddress,
                            cyclic_triple, interval_contains, symbol_alphabet)
from rays.errors import (BranchObstructed, ConfigError, ConfigNotFound, IntervalCollapsed,
                         NoConvergence, NotInTract, NotInW, OnDelta, ProbeInconsistent,
                         TracerError, UnsupportedModel, WrongDomain)
from rays.models import (TWO_PI, forward_orbit, inverse_branch_log, label_of, make_partition)
from rays.tracer import (RayTracer, first_exit_index, project_onto_polyline,
                         sibling_candidates)

logger = logging.getLogger(__name__)

ORBIT_CEILING = 1e300
TAIL_TOL = 1e-9
PROBE_VERTICES = 3
SHRINK_ROUNDS = 8


class SideFlag(str, Enum):
    ABOVE = "A"
    BELOW = "B"
    NOT_ADJACENT = "N"


class HandCase(str, Enum):
    INTERIOR = "Interior"
    BOUNDARY = "Boundary"


@dataclass(frozen=True)
class Hand:
    level: int
    itinerary: tuple
    side_flags: tuple

    def to_json(self):
        return {"level": self.level,
                "itinerary": [str(s) if s is not None else "*" for s in self.itinerary],
                "sides": [flag.value for flag in self.side_flags]}


@dataclass
class HandAssignment:
    target: SignedAddress
    level: int
    hand: Hand
    case: HandCase
    left: Hand = None
    right: Hand = None

    def to_json(self):
        report = {"target": str(self.target), "level": self.level, "case": self.case.value,
                  "hand": self.hand.to_json()}
        if self.case is HandCase.BOUNDARY:
            report["left"] = self.left.to_json()
            report["right"] = self.right.to_json()
        return report


@dataclass(frozen=True)
class EscapingSingularData:
    model: object
    points: tuple
    tails: dict = field(compare=False)
    escape_horizons: dict = field(compare=False)


def escaping_singular_values(model, horizon, bailout=1e8):
    """S(f) intersected with I(f), judged by the orbit leaving every bounded disk"""
    escaping = []
    for v in model.singular_values:
        if forward_orbit(model, v, 10 * horizon, bailout).escaped:
            if v in model.asymptotic_values:
                raise UnsupportedModel("escaping asymptotic value", point=v)
            escaping.append(v)
    return escaping


def _cut_at(curve_z, z):
    _, params = project_onto_polyline([z], curve_z)
    index = int(math.floor(params[0]))
    kept = curve_z[:index + 1]
    if len(kept) and abs(kept[-1] - z) <= TAIL_TOL * max(1.0, abs(z)):
        kept = kept[:-1]
    return np.concatenate([kept, [z]])


def _tail_to(tracer, z, horizon):
    candidates, level = sibling_candidates(tracer.model, tracer.cfg, z, horizon)
    for signed in candidates:
        if signed.sign is not Sign.PLUS:
            continue
        try:
            curve = tracer.curve(signed, level)
        except TracerError as e:
            logger.debug("no tail to %s along %s: %s", z, signed, e.describe())
            continue
        distance, _ = project_onto_polyline([z], curve.z)
        if distance[0] <= 1e-6:
            return _cut_at(curve.z, z)
    return None


def _crosses_delta(points, cfg):
    turn = np.exp(-1j * cfg.delta_angle)
    a = points[:-1] * turn
    b = points[1:] * turn
    outside = (np.abs(a) > cfg.disk_radius) & (np.abs(b) > cfg.disk_radius)
    straddle = (np.sign(a.imag) * np.sign(b.imag) < 0) & outside
    if np.any(straddle):
        a, b = a[straddle], b[straddle]
        x = a.real - a.imag * (b.real - a.real) / (b.imag - a.imag)
        if np.any(x > cfg.disk_radius):
            return True
    on_ray = (np.abs(points) > cfg.disk_radius) & (np.abs((points * turn).imag) <= 1e-12) \
        & ((points * turn).real > 0)
    return bool(np.any(on_ray))


def _tail_is_admissible(model, cfg, z, tail):
    points = np.asarray(tail, dtype=complex)
    orbit = forward_orbit(model, z, cfg.horizon, ORBIT_CEILING)
    for n in range(1, cfg.horizon + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            points = model.evaluate_array(points)
        points = points[np.isfinite(points) & (np.abs(points) < ORBIT_CEILING)]
        if len(points) < 2:
            return True
        if _crosses_delta(points, cfg):
            logger.debug("f^%d of the tail at %s crosses delta", n, z)
            return False
        if n < len(orbit.points) and abs(orbit.points[n]) > cfg.disk_radius:
            if np.min(np.abs(points)) <= cfg.disk_radius:
                logger.debug("f^%d of the tail at %s re-enters D", n, z)
                return False
    return True


def build_partition(model, settings=None, params=None):
    """Search disk radius and cut so that the escaping singular tails stay admissible"""
    settings = dict(settings or {})
    horizon = settings.get("horizon", 8)
    points = escaping_singular_values(model, horizon)
    floor = 1.01 * max(model.singular_radius, abs(model.evaluate(0)))
    radius = max(settings.get("disk_radius", 3.0), floor)
    for attempt in range(settings.get("max_doublings", 8) + 1):
        try:
            cfg = make_partition(model, radius, settings.get("delta_angle"), horizon,
                                 settings.get("probe_factor", 100.0))
        except ConfigError as e:
            logger.info("radius %.6g rejected: %s", radius, e)
            radius *= 2
            continue
        tracer = RayTracer(model, cfg, params)
        tails, horizons, ok = {}, {}, True
        for z in points:
            tail = _tail_to(tracer, z, horizon)
            if tail is None or not _tail_is_admissible(model, cfg, z, tail):
                ok = False
                break
            tails[z] = tail
            horizons[z] = first_exit_index(model, cfg, z, horizon)[0] + 1
        if ok:
            logger.info("partition found at radius %.6g after %d doublings", radius, attempt)
            return cfg, EscapingSingularData(model, tuple(points), tails, horizons)
        radius *= 2
    raise ConfigNotFound("no admissible disk within the doubling budget", radius=radius)


class HandAtlas:
    """Hand queries for one partition; removed sets and memberships are memoized"""

    def __init__(self, model, cfg, esd, tracer=None):
        self.model = model
        self.cfg = cfg
        self.esd = esd
        self.tracer = tracer or RayTracer(model, cfg)
        self._removed = {0: []}

    # Removed tails

    def removed_points(self, n):
        if n not in self._removed:
            self._removed[n] = [z for z in self.esd.points
                                if self.failing_index(z, n - 1) is None]
        return self._removed[n]

    def removed_set(self, n):
        return [self.esd.tails[z] for z in self.removed_points(n)]

    def _on_removed(self, point, m):
        if not cmath.isfinite(point):
            return False
        for tail in self.removed_set(m):
            distance, _ = project_onto_polyline([point], tail)
            if distance[0] <= TAIL_TOL * max(1.0, abs(point)):
                return True
        return False

    def _orbit(self, z, n):
        return forward_orbit(self.model, z, n + 1, ORBIT_CEILING).points

    def failing_index(self, z, n, check_self=False):
        """First k where z fails membership in W_n, or None"""
        points = self._orbit(z, n)
        if len(points) > n + 1 and not self.cfg.in_domain(points[n + 1]):
            return n + 1
        for k in range(0 if check_self else 1, n + 1):
            if k < len(points) and self._on_removed(points[k], n - k + 1):
                return k
        return None

    # Hand identity

    def _side(self, point, tail, direction=None):
        """Side of point relative to the tail oriented toward infinity

        A point on the tail, or on its straight continuation past the traced
        end, takes the side its direction points to.
        """
        _, params = project_onto_polyline([point], tail)
        index = min(int(params[0]), len(tail) - 2)
        towards_infinity = tail[index] - tail[index + 1]
        cross = (np.conj(towards_infinity) * (point - tail[index + 1])).imag
        if direction is not None and \
                abs(cross) <= TAIL_TOL * abs(towards_infinity) * max(1.0, abs(point)):
            cross = (np.conj(towards_infinity) * direction).imag
        return SideFlag.ABOVE if cross > 0 else SideFlag.BELOW

    def _label(self, point, k):
        if not cmath.isfinite(point):
            return None
        try:
            return label_of(self.model, self.cfg, point)
        except (NotInTract, OnDelta):
            raise NotInW("orbit point on a boundary of the domain partition", index=k)

    def _flags(self, points, labels, n, directions):
        flags = []
        for k in range(1, n + 1):
            point = points[k] if k < len(points) else complex(math.inf)
            for tail in self.removed_set(n - k + 1):
                if labels[k] is None or len(tail) < 2:
                    flags.append(SideFlag.NOT_ADJACENT)
                    continue
                nearest = tail[int(np.argmin(np.abs(tail - point)))]
                try:
                    tail_label = label_of(self.model, self.cfg, nearest)
                except (NotInTract, OnDelta):
                    tail_label = None
                if tail_label != labels[k]:
                    flags.append(SideFlag.NOT_ADJACENT)
                else:
                    flags.append(self._side(point, tail, directions[k]))
        return tuple(flags)

    def hand_of_point(self, z, n):
        failing = self.failing_index(z, n, check_self=True)
        if failing is not None:
            raise NotInW(f"point not in W_{n}", index=failing, point=z)
        points = self._orbit(z, n)
        labels = [self._label(points[k], k) if k < len(points) else None for k in range(n + 1)]
        return Hand(n, tuple(labels), self._flags(points, labels, n, [None] * (n + 1)))

    def hand_beside(self, z, normal, n):
        """Hand of z + eps * normal for every small enough eps > 0

        The normal is carried along the orbit of z by the derivative, so a
        point of the orbit lying on a removed tail is placed on the side the
        carried normal points to.
        """
        points = self._orbit(z, n)
        labels = [self._label(points[k], k) if k < len(points) else None for k in range(n + 1)]
        directions = [complex(normal)]
        for k in range(1, n + 1):
            previous = directions[-1]
            if previous is None or k >= len(points):
                directions.append(None)
                continue
            try:
                moved = self.model.derivative(points[k - 1], 1) * previous
            except OverflowError:
                moved = complex(math.inf)
            directions.append(moved / abs(moved) if cmath.isfinite(moved) and moved != 0
                              else None)
        return Hand(n, tuple(labels), self._flags(points, labels, n, directions))

    @staticmethod
    def same_hand(a, b):
        """Equal identities, reading a label lost past the orbit ceiling as a wildcard"""
        if a.level != b.level or len(a.side_flags) != len(b.side_flags):
            return False
        for p, q in zip(a.itinerary, b.itinerary):
            if p is not None and q is not None and p != q:
                return False
        for p, q in zip(a.side_flags, b.side_flags):
            if SideFlag.NOT_ADJACENT not in (p, q) and p != q:
                return False
        return True

    # Hand assignment

    def _probe_vertices(self, curve):
        chosen = []
        for index in range(len(curve) - 1, -1, -1):
            z = complex(curve.z[index])
            if abs(z) < 1.1 * self.cfg.disk_radius:
                continue
            try:
                if not abs(self.model.evaluate(z)) > self.cfg.disk_radius:
                    continue
            except OverflowError:
                pass
            chosen.append(index)
            if len(chosen) == PROBE_VERTICES:
                break
        return chosen

    def _normal(self, curve, index):
        before = complex(curve.z[max(index - 1, 0)])
        after = complex(curve.z[min(index + 1, len(curve) - 1)])
        tangent = before - after
        return 1j * tangent / abs(tangent)

    def witnesses(self, target, n):
        order = self.cfg.symbol_order
        addr = target.addr
        prefix = addr.prefix(n + 1)
        pivot = addr.symbol_at(n + 1)
        omega = ExternalAddress(prefix, (order.succ(pivot),))
        upsilon = ExternalAddress(prefix, (order.pred(pivot),))
        return upsilon, omega

    def assign_hand(self, curve):
        n = curve.level
        vertices = self._probe_vertices(curve)
        if not vertices:
            raise ProbeInconsistent("no vertex outside 1.1 R_D to probe from",
                                    target=str(curve.signed))
        sides = set()
        for index in vertices:
            z = complex(curve.z[index])
            left = self._normal(curve, index)
            sides.add((self.hand_beside(z, left, n), self.hand_beside(z, -left, n)))
        if len(sides) != 1:
            raise ProbeInconsistent("hands beside the curve disagree between vertices",
                                    target=str(curve.signed))
        left_hand, right_hand = sides.pop()
        if left_hand == right_hand:
            return HandAssignment(curve.signed, n, left_hand, HandCase.INTERIOR)
        upsilon, omega = self.witnesses(curve.signed, n)
        s = curve.signed.addr
        order = self.cfg.symbol_order
        minus = curve.signed.sign is Sign.MINUS
        if (cyclic_triple(upsilon, s, omega, order) and minus) or \
                (cyclic_triple(omega, s, upsilon, order) and not minus):
            chosen = right_hand
        else:
            chosen = left_hand
        return HandAssignment(curve.signed, n, chosen, HandCase.BOUNDARY, left_hand, right_hand)

    # Inverse branches and intervals

    def _nudged(self, z, sign, size):
        return z + (1j if sign is Sign.PLUS else -1j) * size * max(1.0, abs(z))

    def _extended_step(self, z, symbol, sign):
        tol = self.tracer.params.crit_tol
        near_value = any(abs(z - v) <= tol for v in self.model.critical_values)
        attempts = [z] if not near_value else []
        attempts += [self._nudged(z, sign, tol), self._nudged(z, sign, 10 * tol)]
        for w in attempts:
            if w == 0:
                continue
            try:
                return inverse_branch_log(self.model, self.cfg, cmath.log(w), symbol,
                                          self.tracer.params.newton_tol, extended=True)
            except (OnDelta, NoConvergence, WrongDomain):
                continue
        raise BranchObstructed("pullback meets a critical value or the cut", point=z,
                               symbol=str(symbol))

    def inverse_chain(self, target, n, w):
        """Compose the single-step branches s_{n-1}, ..., s_0 applied to w"""
        if not self.cfg.in_domain(w):
            raise NotInW("target point outside the domain W", index=n, point=w)
        z = complex(w)
        for j in range(n - 1, -1, -1):
            z = self._extended_step(z, target.addr.symbol_at(j), target.sign)
        return z

    def sample_targets(self, symbol, count, rng):
        """Points of the fundamental domain of symbol whose image leaves D"""
        side, index = self.model.window_of(symbol)
        low = self.cfg.delta_angle + TWO_PI * (index - 1)
        points = []
        for _ in range(count * 4):
            r = float(rng.uniform(1.5, 10.0)) * self.cfg.disk_radius
            phase = low + TWO_PI * float(rng.uniform(0.1, 0.9))
            L = complex(self.model.log_growth(r), phase)
            try:
                points.append(self.model.solve_lifted(L, side, 1e-12))
            except NoConvergence:
                continue
            if len(points) == count:
                break
        return points

    def sample_members(self, target, n, interval, count, rng):
        alphabet = symbol_alphabet(self.model, 1)
        members = []
        for _ in range(count * 20):
            keep = int(rng.integers(0, n + 2))
            tail = ExternalAddress(
                tuple(alphabet[i] for i in rng.integers(0, len(alphabet), size=2)),
                (alphabet[int(rng.integers(0, len(alphabet)))],))
            candidate = SignedAddress(ExternalAddress.from_prefix(target.addr.prefix(keep), tail),
                                      Sign.PLUS if rng.integers(0, 2) else Sign.MINUS)
            if candidate != target and interval_contains(interval, candidate, self.cfg.symbol_order):
                members.append(candidate)
            if len(members) == count:
                break
        return members

    def raw_interval(self, target, n):
        """Interval from the inductive construction, before certification"""
        order = self.cfg.symbol_order
        addr = target.addr
        first = addr.symbol_at(0)
        if n == 0:
            pivot = addr.symbol_at(1)
            lo = ExternalAddress((first,), (order.pred(pivot),))
            hi = ExternalAddress((first,), (order.succ(pivot),))
            return AddressInterval(SignedAddress(lo, Sign.MINUS), SignedAddress(hi, Sign.PLUS))
        inner = self.raw_interval(target.shift(), n - 1).prepend(first)
        if self._on_boundary(target.shift(), n):
            if target.sign is Sign.PLUS:
                return AddressInterval(SignedAddress(addr, Sign.MINUS), inner.hi)
            return AddressInterval(inner.lo, SignedAddress(addr, Sign.PLUS))
        return inner

    def _on_boundary(self, shifted, n):
        level0 = self.tracer.curve(shifted, 0)
        for tail in self.removed_set(n):
            distances, _ = project_onto_polyline(level0.z, tail)
            if np.any(distances <= TAIL_TOL * np.maximum(1.0, np.abs(level0.z))):
                return True
        try:
            assignment = self.assign_hand(self.tracer.curve(shifted, n - 1))
        except (ProbeInconsistent, NotInW) as e:
            logger.debug("hand of %s at level %d undetermined: %s", shifted, n - 1, e.describe())
            return False
        return assignment.case is HandCase.BOUNDARY

    def address_interval(self, target, n, members=10, rng=None):
        """Certified interval of signed addresses whose level-n curves share the target's hand

        Members sampled from the interval are traced and assigned a hand; the
        interval shrinks past any member landing outside the target's hand.
        """
        rng = rng if rng is not None else np.random.default_rng(0)
        interval = self.raw_interval(target, n)
        if n == 0:
            return interval
        hand = self.assign_hand(self.tracer.curve(target, n)).hand
        order = self.cfg.symbol_order
        for _ in range(SHRINK_ROUNDS):
            offender = None
            for member in self.sample_members(target, n, interval, members, rng):
                if self.outside_hand(member, n, hand):
                    offender = member
                    break
            if offender is None:
                return interval
            logger.debug("shrinking %s past %s", interval, offender)
            if interval_contains(AddressInterval(interval.lo, target), offender, order):
                interval = AddressInterval(offender, interval.hi)
            else:
                interval = AddressInterval(interval.lo, offender)
        raise IntervalCollapsed("interval did not stabilise", target=str(target))

    def outside_hand(self, member, n, hand):
        """True when hand is neither the hand of the level-n curve of member nor one it bounds,
        None when that curve cannot be traced or assigned"""
        try:
            assignment = self.assign_hand(self.tracer.curve(member, n))
        except TracerError as e:
            logger.debug("member %s not assignable at level %d: %s", member, n, e.describe())
            return None
        bounded = [assignment.hand]
        if assignment.case is HandCase.BOUNDARY:
            bounded = [assignment.left, assignment.right]
        return not any(self.same_hand(h, hand) for h in bounded)


# Module-level operations


def removed_set(atlas, n):
    return atlas.removed_set(n)


def hand_of_point(atlas, z, n):
    return atlas.hand_of_point(z, n)


def assign_hand(atlas, curve):
    return atlas.assign_hand(curve)


def address_interval(atlas, target, n, **kwargs):
    return atlas.address_interval(target, n, **kwargs)


def inverse_chain(atlas, target, n, w):
    return atlas.inverse_chain(target, n, w)
