#!/usr/bin/env python3
"""
Ray tracer
Level-0 tails inside the Julia constituents of an address, the level-by-level
pullback with bristle choice at critical points, Gamma-curve decomposition,
the signed-address counting formula and sibling enumeration.

Curves are polylines ordered from the large-potential end toward the finite
end, so t is strictly decreasing along every curve and the curve of level
n-1 is a prefix of the curve of level n.
"""

import cmath
import itertools
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed
from scipy.optimize import newton

from rays.addresses import ExternalAddress, Sign, SignedAddress, format_address
from rays.errors import (BristleAmbiguity, ConfigError, DegenerateDirections, DepthExceeded,
                         HorizonTooSmall, InsideD, NoConvergence, NotEscaping, NotInTract,
                         OnDelta, PreconditionError, TracerError, WrongDomain)
from rays.models import (NEWTON_MAX_ITER, TWO_PI, Side, Symbol, forward_orbit,
                         inverse_branch_log, label_of, local_degree)

logger = logging.getLogger(__name__)

MAX_LEVEL = 64
SIBLING_ROWS = (0, 1, -1)
SIBLING_DEPTH = 2
ON_CURVE_TOL = 1e-6
CHAIN_FAILURES = (InsideD, OnDelta, WrongDomain, NoConvergence, NotInTract)


@dataclass
class TraceParams:
    depth: int = 20
    level: int = 4
    bailout: float = 1e8
    step: float = 0.05
    crit_tol: float = 1e-6
    newton_tol: float = 1e-10
    window_top: float = None
    anchor_potential: float = 30.0
    refine_potential: float = 200.0
    max_bisections: int = 48

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name in ("depth", "bailout", "step", "crit_tol", "newton_tol",
                     "anchor_potential", "refine_potential", "max_bisections"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"trace.{name} must be positive")
        if self.crit_tol < 10 * self.newton_tol:
            raise ConfigError("trace.crit_tol must be at least 10 * trace.newton_tol")
        if not 0 <= self.level <= MAX_LEVEL:
            raise ConfigError(f"trace.level must be in [0, {MAX_LEVEL}]")
        if self.window_top is not None and not self.window_top > 0:
            raise ConfigError("trace.window_top must be positive")

    def top(self, cfg):
        return self.window_top if self.window_top is not None else 4.0 * cfg.disk_radius


@dataclass
class CriticalMarker:
    vertex_index: int
    point: complex
    local_deg: int
    chosen_bristle: str

    def to_json(self):
        return {"index": self.vertex_index, "re": _round(self.point.real),
                "im": _round(self.point.imag), "deg": self.local_deg,
                "bristle": self.chosen_bristle}


@dataclass
class TailCurve:
    signed: SignedAddress
    level: int
    t: np.ndarray
    z: np.ndarray
    markers: list = field(default_factory=list)

    def __len__(self):
        return len(self.z)

    @property
    def points(self):
        return list(zip(self.t.tolist(), self.z.tolist()))

    @property
    def end(self):
        return complex(self.z[-1])

    def with_sign(self, sign):
        return TailCurve(SignedAddress(self.signed.addr, sign), self.level, self.t, self.z,
                         [CriticalMarker(m.vertex_index, m.point, m.local_deg, sign.bristle)
                          for m in self.markers])

    def marker_indices(self):
        return {m.vertex_index for m in self.markers}

    def to_json(self, model):
        return {
            "family": model.name,
            "params": model.params,
            "address": format_address(self.signed.addr),
            "sign": self.signed.sign.value,
            "level": self.level,
            "points": [[_round(t), _round(z.real), _round(z.imag)]
                       for t, z in zip(self.t.tolist(), self.z.tolist())],
            "markers": [m.to_json() for m in self.markers],
        }

    @classmethod
    def from_json(cls, data):
        from rays.addresses import parse_signed

        points = np.asarray(data["points"], dtype=float).reshape(-1, 3)
        markers = [CriticalMarker(m["index"], complex(m["re"], m["im"]), m["deg"], m["bristle"])
                   for m in data.get("markers", [])]
        return cls(parse_signed(data["address"], data["sign"]), int(data["level"]),
                   points[:, 0].copy(), points[:, 1] + 1j * points[:, 2], markers)


@dataclass
class GammaDecomposition:
    critical_points: list
    segments: list
    unbounded_tail: np.ndarray

    def concatenated(self):
        pieces = [self.unbounded_tail]
        for c, segment in zip(self.critical_points, self.segments):
            pieces.append(np.array([c]))
            pieces.append(segment)
        return np.concatenate(pieces) if pieces else np.array([], dtype=complex)


def _round(value):
    return round(float(value), 12)


def _unit(v):
    size = abs(v)
    if size == 0:
        raise DegenerateDirections("zero direction vector")
    return v / size


def project_onto_polyline(points, polyline):
    """Distance from each point to the polyline and the fractional vertex parameter"""
    points = np.atleast_1d(np.asarray(points, dtype=complex))
    poly = np.asarray(polyline, dtype=complex)
    if len(poly) == 1:
        return np.abs(points - poly[0]), np.zeros(len(points))
    a = poly[:-1]
    d = poly[1:] - a
    length2 = np.abs(d) ** 2
    length2 = np.where(length2 == 0, 1.0, length2)
    distances = np.empty(len(points))
    params = np.empty(len(points))
    for start in range(0, len(points), 512):
        chunk = points[start:start + 512, None]
        u = np.clip(np.real((chunk - a) * np.conj(d)) / length2, 0.0, 1.0)
        gap = np.abs(chunk - (a + u * d))
        best = np.argmin(gap, axis=1)
        rows = np.arange(len(chunk))
        distances[start:start + 512] = gap[rows, best]
        params[start:start + 512] = best + u[rows, best]
    return distances, params


def bristle_select(model, c, incoming, sign, deg, outgoing=None):
    """Direction leaving the critical point c along the bristle of the given sign

    The 2*deg local preimage directions of a straight parent path through f(c)
    split into the deg continuations of the outgoing parent direction; the
    Plus curve takes the first of them anticlockwise from the incoming
    direction, the Minus curve the last.
    """
    if deg < 2:
        raise PreconditionError("bristles exist only at critical points", point=c, deg=deg)
    incoming = _unit(incoming)
    leading = model.local_coefficient(c, deg)
    image_direction = outgoing if outgoing is not None else -leading * incoming ** deg
    base = cmath.phase(image_direction) - cmath.phase(leading)
    arg_in = cmath.phase(incoming)
    turns = []
    for j in range(deg):
        theta = (base + TWO_PI * j) / deg
        turns.append(((theta - arg_in) % TWO_PI, theta))
    turns.sort()
    if turns[0][0] < 1e-9 or turns[-1][0] > TWO_PI - 1e-9:
        raise DegenerateDirections("a bristle candidate coincides with the incoming direction",
                                   point=c)
    if len(turns) > 1 and turns[1][0] - turns[0][0] < 1e-9:
        raise BristleAmbiguity("two bristle candidates coincide; reduce step", point=c)
    chosen = turns[0][1] if sign is Sign.PLUS else turns[-1][1]
    return cmath.exp(1j * chosen)


class RayTracer:
    """Traces and caches curves for one model and partition"""

    def __init__(self, model, cfg, params=None):
        self.model = model
        self.cfg = cfg
        self.params = params or TraceParams()
        self._level0 = {}
        self._curves = {}

    # Level 0

    def _potentials(self, t):
        seq = [t]
        for _ in range(self.params.depth):
            if seq[-1] >= self.params.anchor_potential:
                break
            seq.append(math.exp(self.model.log_growth(seq[-1])))
        return seq

    def _anchor(self, addr, k, t_k):
        growth = self.model.log_growth(t_k)
        following = addr.symbol_at(k + 1)
        phase = math.pi if following.side == Side.L else 0.0
        return inverse_branch_log(self.model, self.cfg, complex(growth, phase),
                                  addr.symbol_at(k), self.params.newton_tol)

    def _pull_back_chain(self, addr, z, k):
        for j in range(k - 1, -1, -1):
            z = inverse_branch_log(self.model, self.cfg, cmath.log(z), addr.symbol_at(j),
                                   self.params.newton_tol)
        return z

    def level0_point(self, addr, t):
        """Point of potential t on the tail of the constituent of addr"""
        seq = self._potentials(t)
        k = len(seq) - 1
        if not self.model.log_growth(seq[k]) > self.cfg.log_radius:
            raise NoConvergence("potential orbit does not leave D within depth", t=t)
        z = self._pull_back_chain(addr, self._anchor(addr, k, seq[k]), k)
        growth = self.model.log_growth(seq[k])
        if growth <= self.params.refine_potential:
            further = math.exp(growth)
            z_ref = self._pull_back_chain(addr, self._anchor(addr, k + 1, further), k + 1)
            if abs(z_ref - z) > 10 * self.params.newton_tol * max(1.0, abs(z)):
                raise NoConvergence("anchors disagree; raise R_D", t=t,
                                    gap=abs(z_ref - z))
        return z

    def resolved_depth(self, addr):
        """Deepest symbol index the finite end of the level-0 tail still reads"""
        curve = self.trace_level0(addr)
        return len(self._potentials(float(curve.t[-1]))) - 1

    def _try_point(self, addr, t):
        try:
            return self.level0_point(addr, t)
        except CHAIN_FAILURES:
            return None

    def trace_level0(self, addr):
        if addr in self._level0:
            return self._level0[addr]
        p = self.params
        top = p.top(self.cfg)
        first = self._try_point(addr, top)
        if first is None:
            raise NoConvergence("top of the potential window is not on the tail",
                                address=format_address(addr), t=top)
        samples = [(top, first)]
        t = top
        while True:
            t_next = t - p.step
            z_next = self._try_point(addr, t_next) if t_next > 0 else None
            if z_next is None:
                samples.append(self._bisect_end(addr, t, samples[-1][1], max(t_next, 0.0)))
                break
            samples.append((t_next, z_next))
            t = t_next
        samples = self._densify(addr, samples)
        ts = np.array([s[0] for s in samples])
        zs = np.array([s[1] for s in samples], dtype=complex)
        keep = np.concatenate(([True], np.diff(ts) < 0))
        curve = TailCurve(SignedAddress(addr, Sign.PLUS), 0, ts[keep], zs[keep], [])
        logger.debug("level 0 of %s: %d vertices, t in [%.6g, %.6g]",
                     format_address(addr), len(curve), ts[-1], ts[0])
        self._level0[addr] = curve
        return curve

    def _bisect_end(self, addr, t_ok, z_ok, t_bad):
        for _ in range(self.params.max_bisections):
            middle = 0.5 * (t_ok + t_bad)
            z = self._try_point(addr, middle)
            if z is None:
                t_bad = middle
            else:
                t_ok, z_ok = middle, z
        return t_ok, z_ok

    def _densify(self, addr, samples):
        step = self.params.step
        out = [samples[0]]
        for t_b, z_b in samples[1:]:
            pending = [(t_b, z_b)]
            rounds = 0
            while pending:
                t_a, z_a = out[-1]
                t_c, z_c = pending[-1]
                if abs(z_c - z_a) <= step or rounds >= self.params.max_bisections:
                    out.append(pending.pop())
                    continue
                middle = 0.5 * (t_a + t_c)
                z_m = self._try_point(addr, middle)
                if z_m is None:
                    out.append(pending.pop())
                    continue
                pending.append((middle, z_m))
                rounds += 1
        return out

    # Higher levels

    def curve(self, signed, level):
        """gamma^level of the signed address, memoized"""
        if level > MAX_LEVEL:
            raise PreconditionError("level above 64", level=level)
        key = (signed, level)
        if key not in self._curves:
            if level == 0:
                self._curves[key] = self.trace_level0(signed.addr).with_sign(signed.sign)
            else:
                parent = self.curve(signed.shift(), level - 1)
                previous = self.curve(signed, level - 1)
                self._curves[key] = self.pull_back_tail(parent, previous, signed)
        return self._curves[key]

    def pull_back_tail(self, parent, previous, target):
        p = self.params
        if parent.signed != target.shift():
            raise PreconditionError("parent address must be the shift of the target",
                                    parent=str(parent.signed), target=str(target))
        level = previous.level + 1
        z_end = previous.end
        t_end = float(previous.t[-1])
        w_end = self.model.evaluate(z_end)
        distance, param = project_onto_polyline([w_end], parent.z)
        if distance[0] > max(1e-6, p.step ** 2):
            raise PreconditionError("image of the curve end is off the parent curve",
                                    gap=float(distance[0]))
        seg = min(int(math.floor(param[0])), len(parent) - 2) if len(parent) > 1 else 0
        if len(parent) == 1 or param[0] >= len(parent) - 1:
            return TailCurve(target, level, previous.t, previous.z, list(previous.markers))
        frac = param[0] - seg
        t_junction = parent.t[seg] + frac * (parent.t[seg + 1] - parent.t[seg])
        scale = t_end / t_junction
        flagged = parent.marker_indices()
        # a curve ending on a marker may turn there when it is continued
        path = [[w_end, t_end, len(previous) - 1 in previous.marker_indices(), 0]]
        for j in range(seg + 1, len(parent)):
            w = complex(parent.z[j])
            if abs(w - w_end) <= 1e-14 * max(1.0, abs(w)):
                continue
            path.append([w, float(parent.t[j]) * scale, j in flagged, 0])
        path = self._insert_critical_values(path)
        zs, ts, markers = self._walk(previous, path, target.sign, len(previous))
        return TailCurve(target, level,
                         np.concatenate([previous.t, np.array(ts)]),
                         np.concatenate([previous.z, np.array(zs, dtype=complex)]),
                         list(previous.markers) + markers)

    def _insert_critical_values(self, path):
        values = self.model.critical_values
        tol = self.params.crit_tol
        out = [path[0]]
        for entry in path[1:]:
            w_a, t_a = out[-1][0], out[-1][1]
            w_b, t_b = entry[0], entry[1]
            hits = []
            for v in values:
                if abs(w_b - v) <= tol:
                    entry = [v, t_b, entry[2], entry[3]]
                    continue
                if abs(w_a - v) <= tol:
                    continue
                distance, param = project_onto_polyline([v], [w_a, w_b])
                if distance[0] <= tol and 0 < param[0] < 1:
                    hits.append((param[0], v))
            for u, v in sorted(hits):
                out.append([v, t_a + u * (t_b - t_a), False, entry[3]])
            out.append(entry)
        return out

    def _critical_preimage(self, z, w, v):
        tol = self.params.crit_tol
        best = None
        for c in self.model.critical_points_near(z, 4.0):
            if abs(self.model.evaluate(c) - v) > tol:
                continue
            deg = local_degree(self.model, c)
            leading = self.model.local_coefficient(c, deg)
            bound = 3.0 * (abs(w - v) / abs(leading)) ** (1.0 / deg) + self.params.step
            if abs(z - c) <= bound and (best is None or abs(z - c) < abs(z - best[0])):
                best = (c, deg)
        return best

    def _solve(self, w, z0):
        model = self.model
        tol = self.params.newton_tol

        def func(z):
            return model.evaluate(z) - w

        def fprime(z):
            return model.derivative(z, 1)

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            try:
                root, _ = newton(func, z0, fprime=fprime, tol=tol * 1e-2, rtol=1e-14,
                                 maxiter=NEWTON_MAX_ITER, full_output=True, disp=False)
            except (ZeroDivisionError, OverflowError, ValueError):
                return None
        root = complex(root)
        if not cmath.isfinite(root) or abs(func(root)) > tol * max(1.0, abs(w)):
            return None
        return root

    def _split(self, path, i):
        w_a, t_a, _, depth_a = path[i - 1]
        w_b, t_b, _, depth_b = path[i]
        depth = max(depth_a, depth_b) + 1
        if depth > self.params.max_bisections:
            raise DepthExceeded("parent segment bisected too often", point=w_b, depth=depth)
        path.insert(i, [0.5 * (w_a + w_b), 0.5 * (t_a + t_b), False, depth])

    def _walk(self, previous, path, sign, offset):
        p = self.params
        model = self.model
        zs, ts, markers = [], [], []
        z = previous.end
        last_dir = _unit(previous.z[-1] - previous.z[-2]) if len(previous) > 1 else None
        just_snapped = False
        i = 1
        while i < len(path):
            w = path[i - 1][0]
            w_next, t_next, inherited, _ = path[i]
            if i == 1 and w in model.critical_values and len(previous) > 1 \
                    and abs(model.derivative(z, 1)) < 1e-12:
                # previous level already ended on a critical point
                deg = local_degree(model, z)
                leaving = self._leave_critical(z, deg, previous.z[-2] - z, sign, path[0], path[1])
                for z_k, t_k in leaving:
                    zs.append(z_k)
                    ts.append(t_k)
                if inherited:
                    markers.append(self._inherited(offset + len(zs) - 1, zs[-1], sign))
                last_dir = _unit(zs[-1] - z) if len(zs) == 1 else _unit(zs[-1] - zs[-2])
                z = zs[-1]
                just_snapped = True
                i = 2
                continue
            if w_next in model.critical_values:
                found = self._critical_preimage(z, w, w_next)
                if found is not None:
                    c, deg = found
                    if abs(z - c) > p.step:
                        self._split(path, i)
                        continue
                    if deg >= 2:
                        incoming = z - c
                        zs.append(c)
                        ts.append(t_next)
                        markers.append(CriticalMarker(offset + len(zs) - 1, c, deg, sign.bristle))
                        logger.debug("critical point %s (degree %d) on the %s curve", c, deg,
                                     sign.value)
                        if i + 1 < len(path):
                            last = self._leave_critical(c, deg, incoming, sign, path[i], path[i + 1])
                            for z_k, t_k in last:
                                zs.append(z_k)
                                ts.append(t_k)
                            if path[i + 1][2]:
                                markers.append(self._inherited(offset + len(zs) - 1, zs[-1], sign))
                            z = zs[-1]
                            last_dir = _unit(zs[-1] - zs[-2])
                            i += 2
                        else:
                            z = c
                            i += 1
                        just_snapped = True
                        continue
            fp = model.derivative(z, 1)
            if abs(fp) < 1e-300:
                raise NoConvergence("derivative vanishes at a regular step", point=z)
            predicted = z + (w_next - w) / fp
            root = self._solve(w_next, predicted)
            # the parent turns at its markers and the conformal preimage turns with it
            at_corner = just_snapped or path[i - 1][2]
            if root is None or not self._acceptable(z, predicted, root, last_dir, at_corner):
                self._split(path, i)
                continue
            zs.append(root)
            ts.append(t_next)
            if inherited:
                markers.append(self._inherited(offset + len(zs) - 1, root, sign))
            last_dir = _unit(root - z) if root != z else last_dir
            z = root
            just_snapped = False
            i += 1
        return zs, ts, markers

    def _acceptable(self, z, predicted, root, last_dir, just_snapped):
        p = self.params
        move = abs(root - z)
        if move > p.step:
            return False
        if abs(root - predicted) > 0.25 * abs(predicted - z) + 10 * p.newton_tol:
            return False
        if last_dir is not None and not just_snapped and move > 0:
            turn = (root - z) / move * last_dir.conjugate()
            if turn.real < -0.5:
                return False
        return True

    def _inherited(self, index, point, sign):
        return CriticalMarker(index, point, local_degree(self.model, point), sign.bristle)

    def _leave_critical(self, c, deg, incoming, sign, at_value, after):
        """Pull the parent segment leaving the critical value back along the chosen bristle"""
        v, t_v = at_value[0], at_value[1]
        w_after, t_after = after[0], after[1]
        leading = self.model.local_coefficient(c, deg)
        direction = bristle_select(self.model, c, incoming, sign, deg, outgoing=w_after - v)
        reach = (abs(w_after - v) / abs(leading)) ** (1.0 / deg)
        pieces = max(1, math.ceil(reach / self.params.step))
        out = []
        for k in range(1, pieces + 1):
            q = (k / pieces) ** deg
            w_k = v + q * (w_after - v)
            predicted = c + direction * (abs(w_k - v) / abs(leading)) ** (1.0 / deg)
            root = self._solve(w_k, predicted)
            if root is None or abs(root - predicted) > 0.25 * abs(predicted - c) + 1e-9:
                raise NoConvergence("bristle continuation left the chosen direction", point=c)
            out.append((root, t_v + q * (t_after - t_v)))
        return out

    def gamma_curve(self, target, level):
        return self.curve(target, level)


# Module-level operations


def trace_level0(model, cfg, addr, params=None):
    return RayTracer(model, cfg, params).trace_level0(addr)


def pull_back_tail(model, cfg, parent, target, params=None, previous=None):
    tracer = RayTracer(model, cfg, params)
    if previous is None:
        previous = tracer.curve(target, parent.level)
    return tracer.pull_back_tail(parent, previous, target)


def gamma_curve(model, cfg, target, level, params=None):
    return RayTracer(model, cfg, params).curve(target, level)


def decompose_gamma(curve):
    """Split a curve at its markers into the shared tail and bristle segments"""
    markers = sorted(curve.markers, key=lambda m: m.vertex_index)
    if not markers:
        return GammaDecomposition([], [], curve.z.copy())
    indices = [m.vertex_index for m in markers]
    segments = []
    for k, start in enumerate(indices):
        stop = indices[k + 1] if k + 1 < len(indices) else len(curve)
        segments.append(curve.z[start + 1:stop].copy())
    return GammaDecomposition([m.point for m in markers], segments, curve.z[:indices[0]].copy())


def check_bijection(model, curve, parent, tol=None, step=0.05):
    """Distance from f(vertices) to the parent and monotonicity of the projection"""
    tol = tol if tol is not None else max(1e-8, step ** 2)
    with np.errstate(over="ignore", invalid="ignore"):
        images = model.evaluate_array(curve.z)
    reach = np.max(np.abs(parent.z)) * (1 + 1e-9)
    inside = np.isfinite(images) & (np.abs(images) <= reach)
    if not np.any(inside):
        return True, 0.0, True
    distances, params = project_onto_polyline(images[inside], parent.z)
    worst = float(np.max(distances))
    monotone = bool(np.all(np.diff(params) > -1e-12))
    return worst <= tol and monotone, worst, monotone


def count_signed_addresses(model, z, horizon, params=None, radius=None):
    """2 * product of local degrees along the orbit of z"""
    p = params or TraceParams()
    orbit = forward_orbit(model, z, horizon, p.bailout)
    if not orbit.escaped:
        if forward_orbit(model, z, 10 * horizon, p.bailout).escaped:
            raise HorizonTooSmall("orbit escapes only beyond the horizon", point=z,
                                  horizon=horizon)
        raise NotEscaping("orbit does not escape", point=z)
    reach = model.singular_radius if radius is None else radius
    product = 1
    points = orbit.points
    for j, point in enumerate(points[:-1]):
        if abs(points[j + 1]) <= reach * (1 + 1e-9):
            product *= local_degree(model, point)
    return 2 * product


def first_exit_index(model, cfg, z, horizon):
    orbit = forward_orbit(model, z, horizon + 1, 1e300)
    for m, point in enumerate(orbit.points[:-1]):
        if abs(orbit.points[m + 1]) > cfg.disk_radius:
            return m, orbit
    raise NotEscaping("orbit never leaves D", point=z)


def tail_address(model, cfg, z, horizon):
    """Itinerary of an escaping point as an address whose last symbol repeats"""
    symbols = []
    orbit = forward_orbit(model, z, horizon, 1e300)
    for point in orbit.points:
        try:
            symbols.append(label_of(model, cfg, point))
        except TracerError:
            break
    if not symbols:
        raise NotInTract("escaping point has no itinerary", point=z)
    return ExternalAddress(tuple(symbols[:-1]), (symbols[-1],))


def sibling_candidates(model, cfg, z, horizon):
    """Signed addresses that may have Gamma-curves through z, and the level to trace"""
    m, orbit = first_exit_index(model, cfg, z, horizon)
    tail = tail_address(model, cfg, orbit.points[m + 1], horizon)
    choices = []
    for point in orbit.points[:m + 1]:
        try:
            choices.append([label_of(model, cfg, point)])
        except (NotInTract, OnDelta):
            if model.has_sides:
                choices.append([Symbol(r, s) for s in (Side.R, Side.L) for r in SIBLING_ROWS])
            else:
                choices.append([Symbol(r) for r in SIBLING_ROWS])
    ambiguous = sum(1 for c in choices if len(c) > 1)
    if ambiguous > SIBLING_DEPTH:
        raise PreconditionError("sibling enumeration is limited to depth 2", point=z)
    candidates = []
    for word in itertools.product(*choices):
        addr = ExternalAddress.from_prefix(word, tail)
        for sign in (Sign.MINUS, Sign.PLUS):
            candidates.append(SignedAddress(addr, sign))
    return candidates, m + 2


def curve_distance(curve, z):
    return float(project_onto_polyline([z], curve.z)[0][0])


def _trace_or_skip(tracer, signed, level):
    try:
        return tracer.curve(signed, level)
    except TracerError as e:
        logger.warning("skipping sibling %s: %s", signed, e.describe())
        return None


def _trace_sibling(model, cfg, params, signed, level):
    return _trace_or_skip(RayTracer(model, cfg, params), signed, level)


def signed_addresses_through(tracer, z, horizon, tol=ON_CURVE_TOL, jobs=1):
    """Distinct signed Gamma-curves among the siblings that pass within tol of z"""
    candidates, level = sibling_candidates(tracer.model, tracer.cfg, z, horizon)
    if jobs == 1:
        curves = [_trace_or_skip(tracer, signed, level) for signed in candidates]
    else:
        curves = Parallel(n_jobs=jobs)(
            delayed(_trace_sibling)(tracer.model, tracer.cfg, tracer.params, signed, level)
            for signed in candidates)
    return [signed for signed, curve in zip(candidates, curves)
            if curve is not None and curve_distance(curve, z) <= tol]


def overlapping_partners(tracer, curve, marker_index, horizon=8, tol=ON_CURVE_TOL):
    """Opposite-sign signed addresses whose curves contain the segment after a marker"""
    decomposition = decompose_gamma(curve)
    segment = decomposition.segments[marker_index]
    if len(segment) == 0:
        return []
    point = decomposition.critical_points[marker_index]
    partners = []
    for signed in signed_addresses_through(tracer, point, horizon, tol):
        if signed.sign == curve.signed.sign:
            continue
        other = tracer.curve(signed, curve.level)
        distances, _ = project_onto_polyline(segment, other.z)
        if float(np.max(distances)) <= tol:
            partners.append(signed)
    return partners


def _trace_one(model, cfg, params, signed, level):
    return RayTracer(model, cfg, params).curve(signed, level)


def trace_many(model, cfg, params, targets, level, jobs=1):
    """Trace independent signed addresses, in parallel when jobs != 1"""
    if jobs == 1:
        tracer = RayTracer(model, cfg, params)
        return [tracer.curve(s, level) for s in targets]
    return Parallel(n_jobs=jobs)(delayed(_trace_one)(model, cfg, params, s, level)
                                 for s in targets)
