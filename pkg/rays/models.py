#!/usr/bin/env python3
"""
Map models for the rays toolkit
The shipped entire functions (cosh, cosh^2, a*cosh and lambda*exp) with their
analytic primitives: evaluation, derivatives, critical data, fundamental-domain
labels, inverse branches and the hyperbolic expansion estimate.

Fundamental domains are addressed through a lifted logarithm. On the right
half-plane a*cosh(z)^p has the continuous logarithm

    Lambda_R(z) = Log a + p * (z + Log((1 + exp(-2z)) / 2)),

and Lambda_L(z) = Lambda_R(-z) on the left half-plane. Preimages of the cut
delta = {arg w = theta, |w| > R} are the lines Im Lambda = theta mod 2 pi, so
row j of a half-plane is the window theta + 2 pi (j-1) < Im Lambda < theta + 2 pi j.
For lambda*exp the logarithm is Log lambda + z and there are no sides.
"""

import cmath
import logging
import math
import re
import warnings
from dataclasses import dataclass, field
from enum import Enum, IntEnum

import numpy as np
from scipy.optimize import newton

from rays.errors import (ConfigError, DegeneratePoint, DerivativeOrderError, InsideD,
                         NoConvergence, NotInTract, OnDelta, PreconditionError, WrongDomain)

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
LOG2 = math.log(2.0)
MAX_DERIVATIVE_ORDER = 8
DEGREE_THRESHOLD = 1e-9
NEWTON_MAX_ITER = 64
ASYMPTOTIC_SEED = 30.0
BOX_LIMIT = 1e3
ORBIT_LIMIT = 10_000


class Family(str, Enum):
    COSH = "cosh"
    COSHSQ = "coshsq"
    EXP = "exp"
    COSH_FAMILY = "coshfamily"


class Side(str, Enum):
    L = "L"
    R = "R"


class Ordering(IntEnum):
    LT = -1
    EQ = 0
    GT = 1

    @classmethod
    def of(cls, a, b):
        return cls.LT if a < b else cls.GT if a > b else cls.EQ


_SYMBOL_RE = re.compile(r"^([+-]?\d+)([LR])?$")


@dataclass(frozen=True)
class Symbol:
    """Label of a fundamental domain: row plus side for cosh types, row only for exp"""

    row: int
    side: Side = None

    def __str__(self):
        return f"{self.row}{self.side.value}" if self.side is not None else str(self.row)

    def __repr__(self):
        return f"Symbol({self})"

    @classmethod
    def parse(cls, text):
        match = _SYMBOL_RE.match(text)
        if not match:
            raise ValueError(f"not a symbol: {text!r}")
        side = Side(match.group(2)) if match.group(2) else None
        return cls(int(match.group(1)), side)

    def with_row(self, row):
        return Symbol(row, self.side)


@dataclass
class Orbit:
    points: list
    escaped: bool

    @property
    def last(self):
        return self.points[-1]


class MapModel:
    """Base class; subclasses provide the family-specific formulas"""

    family = None
    has_sides = False
    default_delta_angle = math.pi / 2

    @property
    def name(self):
        return self.family.value

    @property
    def params(self):
        return {}

    def evaluate(self, z):
        raise NotImplementedError

    def evaluate_array(self, z):
        raise NotImplementedError

    def derivative(self, z, order=1):
        raise NotImplementedError

    def derivative_array(self, z):
        raise NotImplementedError

    @property
    def critical_values(self):
        return []

    @property
    def asymptotic_values(self):
        return []

    @property
    def singular_values(self):
        return list(self.critical_values) + list(self.asymptotic_values)

    @property
    def singular_radius(self):
        values = self.singular_values
        return max(abs(v) for v in values) if values else 0.0

    @property
    def metric_radius(self):
        """Radius of the inner disk D' with S(f) compactly inside D' and D' inside D"""
        return max(1.05 * self.singular_radius, 0.05)

    def critical_points_in(self, box):
        return []

    def lifted_log(self, z, side=None):
        raise NotImplementedError

    def solve_lifted(self, L, side, tol):
        raise NotImplementedError

    def log_growth(self, t):
        """log |f(t)| for large real t, without overflow"""
        raise NotImplementedError

    def window_of(self, symbol):
        """(side, window index) of a symbol"""
        return None, symbol.row

    def symbol_for(self, side, index):
        return Symbol(index)

    def side_of(self, z):
        return None

    def critical_points_near(self, z, radius):
        box = (z.real - radius, z.real + radius, z.imag - radius, z.imag + radius)
        return [c for c in self.critical_points_in(box) if abs(c - z) <= radius]

    def local_coefficient(self, c, degree):
        """Leading Taylor coefficient f^(d)(c) / d!"""
        return self.derivative(c, degree) / math.factorial(degree)

    def __repr__(self):
        extra = ", ".join(f"{k}={v}" for k, v in self.params.items())
        return f"{type(self).__name__}({extra})"


class CoshModel(MapModel):
    """f(z) = a * cosh(z)^p with p in {1, 2}"""

    has_sides = True

    def __init__(self, a=1.0, power=1, family=None):
        if power not in (1, 2):
            raise ConfigError(f"Unsupported power {power}")
        self.a = complex(a)
        if self.a == 0:
            raise ConfigError("Parameter a must be nonzero")
        self.power = power
        self.log_a = cmath.log(self.a)
        if family is None:
            family = Family.COSH if power == 1 else Family.COSHSQ
        self.family = family

    @property
    def params(self):
        if self.family == Family.COSH_FAMILY:
            return {"a": [self.a.real, self.a.imag]}
        return {}

    def evaluate(self, z):
        return self.a * cmath.cosh(z) ** self.power

    def evaluate_array(self, z):
        return self.a * np.cosh(z) ** self.power

    def derivative(self, z, order=1):
        if not isinstance(order, int) or order < 1 or order > MAX_DERIVATIVE_ORDER:
            raise DerivativeOrderError(f"derivative order must be in [1, {MAX_DERIVATIVE_ORDER}]",
                                       order=order)
        if self.power == 1:
            return self.a * (cmath.cosh(z) if order % 2 == 0 else cmath.sinh(z))
        # cosh^2 z = (1 + cosh 2z) / 2
        scale = 2.0 ** (order - 1)
        return self.a * scale * (cmath.cosh(2 * z) if order % 2 == 0 else cmath.sinh(2 * z))

    def derivative_array(self, z):
        if self.power == 1:
            return self.a * np.sinh(z)
        return self.a * np.sinh(2 * z)

    @property
    def critical_values(self):
        if self.power == 1:
            values = [-self.a, self.a]
        else:
            values = [0j, self.a]
        return sorted(values, key=lambda v: (v.real, v.imag))

    def critical_points_in(self, box):
        xmin, xmax, ymin, ymax = box
        if xmax - xmin > BOX_LIMIT or ymax - ymin > BOX_LIMIT:
            raise PreconditionError("box side exceeds 1e3", box=box)
        if not xmin <= 0.0 <= xmax:
            return []
        spacing = math.pi / self.power
        first = math.ceil(ymin / spacing)
        last = math.floor(ymax / spacing)
        return [complex(0.0, k * spacing) for k in range(first, last + 1)]

    def side_of(self, z):
        if z.real > 0:
            return Side.R
        if z.real < 0:
            return Side.L
        return None

    def window_of(self, symbol):
        if symbol.side is None:
            raise WrongDomain(f"symbol {symbol} has no side", symbol=str(symbol))
        if symbol.side == Side.R:
            return Side.R, symbol.row
        return Side.L, -symbol.row

    def symbol_for(self, side, index):
        return Symbol(index, Side.R) if side == Side.R else Symbol(-index, Side.L)

    def _half_log(self, u):
        return u + cmath.log((1 + cmath.exp(-2 * u)) / 2)

    def lifted_log(self, z, side=None):
        side = side or self.side_of(z)
        u = z if side == Side.R else -z
        return self.log_a + self.power * self._half_log(u)

    def log_growth(self, t):
        return self.power * (t + math.log1p(math.exp(-2 * t)) - LOG2) + math.log(abs(self.a))

    def solve_lifted(self, L, side, tol):
        ell = (L - self.log_a) / self.power
        zeta = self._solve_half(ell, tol)
        return zeta if side == Side.R else -zeta

    def _solve_half(self, ell, tol):
        if ell.real < ASYMPTOTIC_SEED:
            seed = cmath.acosh(cmath.exp(ell))
            if seed.real < 0:
                seed = -seed
            if seed.real == 0:
                raise NoConvergence("seed on the imaginary axis", target=ell)
            shift = round((ell.imag - self._half_log(seed).imag) / TWO_PI)
            seed += TWO_PI * shift * 1j
        else:
            seed = ell + LOG2

        def g(u):
            return self._half_log(u) - ell

        def gp(u):
            return cmath.tanh(u)

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            try:
                root, info = newton(g, seed, fprime=gp, tol=tol * 1e-2, rtol=1e-14,
                                    maxiter=NEWTON_MAX_ITER, full_output=True, disp=False)
            except (ZeroDivisionError, ValueError, OverflowError) as e:
                raise NoConvergence(f"Newton failed: {e}", target=ell)
        root = complex(root)
        if not info.converged and abs(g(root)) > tol * max(1.0, abs(ell)):
            raise NoConvergence("Newton did not converge in 64 steps", target=ell)
        if root.real <= 0:
            raise NoConvergence("Newton left the half-plane", target=ell)
        return root


class ExpModel(MapModel):
    """f(z) = lambda * exp(z); its only singular value is the asymptotic value 0"""

    family = Family.EXP
    default_delta_angle = math.pi

    def __init__(self, lam=1.0):
        self.lam = complex(lam)
        if self.lam == 0:
            raise ConfigError("Parameter lambda must be nonzero")
        self.log_lam = cmath.log(self.lam)

    @property
    def params(self):
        return {"lambda": [self.lam.real, self.lam.imag]}

    def evaluate(self, z):
        return self.lam * cmath.exp(z)

    def evaluate_array(self, z):
        return self.lam * np.exp(z)

    def derivative(self, z, order=1):
        if not isinstance(order, int) or order < 1 or order > MAX_DERIVATIVE_ORDER:
            raise DerivativeOrderError(f"derivative order must be in [1, {MAX_DERIVATIVE_ORDER}]",
                                       order=order)
        return self.lam * cmath.exp(z)

    def derivative_array(self, z):
        return self.lam * np.exp(z)

    @property
    def asymptotic_values(self):
        return [0j]

    def lifted_log(self, z, side=None):
        return self.log_lam + z

    def log_growth(self, t):
        return t + math.log(abs(self.lam))

    def solve_lifted(self, L, side, tol):
        return L - self.log_lam


def make_model(family, params=None):
    """Build a model from a family name and a parameter mapping"""
    params = params or {}
    family = Family(family)
    if family == Family.COSH:
        return CoshModel(1.0, 1)
    if family == Family.COSHSQ:
        return CoshModel(1.0, 2)
    if family == Family.COSH_FAMILY:
        return CoshModel(params.get("a", 1.0), 1, family=Family.COSH_FAMILY)
    return ExpModel(params.get("lambda", 1.0))


class SymbolOrder:
    """Total order on symbols read off the arguments of far-out strip points"""

    def __init__(self, model, delta_angle, probe_radius):
        self.model = model
        self.delta_angle = delta_angle
        self.probe_radius = probe_radius
        self._keys = {}

    def probe_point(self, symbol):
        side, index = self.model.window_of(symbol)
        middle = self.delta_angle + TWO_PI * (index - 1) + math.pi
        L = complex(self.model.log_growth(self.probe_radius), middle)
        return self.model.solve_lifted(L, side, 1e-12)

    def key(self, symbol):
        if symbol not in self._keys:
            q = self.probe_point(symbol)
            self._keys[symbol] = (cmath.phase(q) - self.delta_angle) % TWO_PI
        return self._keys[symbol]

    def compare(self, a, b):
        if a == b:
            return Ordering.EQ
        return Ordering.of(self.key(a), self.key(b))

    def ranked(self, symbols):
        return sorted(set(symbols), key=self.key)

    def _neighbours(self, symbol):
        return [symbol.with_row(symbol.row - 1), symbol.with_row(symbol.row + 1)]

    def succ(self, symbol):
        own = self.key(symbol)
        above = [s for s in self._neighbours(symbol) if self.key(s) > own]
        return min(above, key=self.key)

    def pred(self, symbol):
        own = self.key(symbol)
        below = [s for s in self._neighbours(symbol) if self.key(s) < own]
        return max(below, key=self.key)

    def adjacent_symbols(self, symbol):
        return self.pred(symbol), self.succ(symbol)


@dataclass(frozen=True)
class PartitionConfig:
    """Round disk D of radius R centred at 0 and the cut delta at a fixed angle"""

    disk_radius: float
    delta_angle: float
    symbol_order: SymbolOrder = field(compare=False, repr=False)
    horizon: int = 8
    probe_factor: float = 100.0

    @property
    def log_radius(self):
        return math.log(self.disk_radius)

    def on_delta(self, w, tol=1e-12):
        if not abs(w) > self.disk_radius or not cmath.isfinite(w):
            return False
        gap = (cmath.phase(w) - self.delta_angle + math.pi) % TWO_PI - math.pi
        return abs(gap) <= tol

    def in_domain(self, w):
        """Membership in W = C minus (closed D union delta); overflow counts as inside"""
        if not cmath.isfinite(w):
            return True
        return abs(w) > self.disk_radius and not self.on_delta(w)

    def lift_into_window(self, L, index):
        """Shift Im L by a multiple of 2 pi into the window of the given index"""
        low = self.delta_angle + TWO_PI * (index - 1)
        frac = ((L.imag - low) / TWO_PI) % 1.0
        if frac < 1e-14 or frac > 1.0 - 1e-14:
            raise OnDelta("logarithm on a preimage of delta", point=L)
        return complex(L.real, low + TWO_PI * frac)

    def window_index(self, L):
        x = (L.imag - self.delta_angle) / TWO_PI
        nearest = round(x)
        if abs(x - nearest) <= 1e-12 * max(1.0, abs(x)):
            raise OnDelta("point on a preimage of delta", point=L)
        return math.floor(x) + 1


def make_partition(model, disk_radius=3.0, delta_angle=None, horizon=8, probe_factor=100.0):
    """Build and validate a partition; delta is sampled against the tracts"""
    if delta_angle is None:
        delta_angle = model.default_delta_angle
    if disk_radius < model.singular_radius:
        raise ConfigError(f"disk radius {disk_radius} below singular radius "
                          f"{model.singular_radius:.6g}")
    if abs(model.evaluate(0)) >= disk_radius:
        raise ConfigError(f"disk of radius {disk_radius} does not contain f(0)")
    direction = cmath.exp(1j * delta_angle)
    for r in np.geomspace(disk_radius * 1.001, disk_radius * probe_factor, 400):
        try:
            value = abs(model.evaluate(r * direction))
        except OverflowError:
            value = math.inf
        if value > disk_radius * (1 + 1e-9):
            raise ConfigError(f"delta meets a tract at |z| = {r:.6g} (|f| = {value:.6g})")
    order = SymbolOrder(model, delta_angle, disk_radius * probe_factor)
    return PartitionConfig(disk_radius, delta_angle, order, horizon, probe_factor)


# Module-level operations


def evaluate(model, z):
    return model.evaluate(z)


def derivative(model, z, order=1):
    return model.derivative(z, order)


def local_degree(model, z0):
    """Smallest k with a nonvanishing k-th derivative at z0"""
    try:
        scale = max(1.0, abs(model.evaluate(z0)))
    except OverflowError:
        return 1
    for k in range(1, MAX_DERIVATIVE_ORDER + 1):
        if abs(model.derivative(z0, k)) > DEGREE_THRESHOLD * scale:
            return k
    raise DegeneratePoint("local degree above 8", point=z0)


def critical_points_in(model, box):
    """Zeros of f' in the box (xmin, xmax, ymin, ymax)"""
    return model.critical_points_in(box)


def label_of(model, cfg, z):
    """Window label of z, defined off the imaginary axis even inside D"""
    if model.has_sides and z.real == 0:
        raise NotInTract("point on the imaginary axis", point=z)
    side = model.side_of(z)
    try:
        L = model.lifted_log(z, side)
    except (ValueError, ZeroDivisionError):
        raise NotInTract("lifted logarithm undefined", point=z)
    return model.symbol_for(side, cfg.window_index(L))


def symbol_of(model, cfg, z):
    if abs(z) <= cfg.disk_radius:
        raise InsideD("point inside D", point=z)
    if cfg.on_delta(z):
        raise OnDelta("point on delta", point=z)
    try:
        w = model.evaluate(z)
    except OverflowError:
        w = complex(math.inf)
    if not abs(w) > cfg.disk_radius:
        raise NotInTract("|f(z)| <= R_D", point=z)
    return label_of(model, cfg, z)


def inverse_branch_log(model, cfg, L, s, tol=1e-10, extended=False):
    """Preimage in the domain of s of the point with logarithm L"""
    if not extended and not L.real > cfg.log_radius:
        raise InsideD("target inside D", point=L)
    side, index = model.window_of(s)
    L = cfg.lift_into_window(L, index)
    z = model.solve_lifted(L, side, tol)
    try:
        found = label_of(model, cfg, z)
    except (OnDelta, NotInTract):
        raise WrongDomain("solution landed on a domain boundary", point=z, symbol=str(s))
    if found != s:
        raise WrongDomain(f"solution lies in {found}, not {s}", point=z, symbol=str(s))
    return z


def inverse_branch(model, cfg, w, s, tol=1e-10):
    """The z in the fundamental domain of s with f(z) = w"""
    if abs(w) <= cfg.disk_radius:
        raise InsideD("target inside D", point=w)
    if cfg.on_delta(w):
        raise OnDelta("target on delta", point=w)
    return inverse_branch_log(model, cfg, cmath.log(w), s, tol)


def forward_orbit(model, z, n, bailout=1e8):
    if n > ORBIT_LIMIT:
        raise PreconditionError("orbit length above 1e4", n=n)
    points = [complex(z)]
    for _ in range(n):
        try:
            w = model.evaluate(points[-1])
        except OverflowError:
            return Orbit(points, True)
        if not cmath.isfinite(w):
            return Orbit(points, True)
        points.append(w)
        if abs(w) > bailout:
            return Orbit(points, True)
    return Orbit(points, False)


def hyperbolic_density(radius, z):
    """Density of the hyperbolic metric of the complement of the closed disk

    w = radius / z maps the complement onto the punctured unit disk, whose
    density is 1 / (|w| log(1/|w|)); pulling back gives 1 / (|z| log(|z| / radius)).
    """
    r = abs(z)
    if not r > radius:
        raise PreconditionError("point not outside the disk", point=z, radius=radius)
    return 1.0 / (r * math.log(r / radius))


def expansion_norm(model, radius, z):
    """|f'(z)| rho(f(z)) / rho(z) for the complement of the disk of the given radius"""
    w = model.evaluate(z)
    if not abs(z) > radius or not abs(w) > radius:
        raise PreconditionError("expansion needs |z| and |f(z)| above the radius", point=z)
    return abs(model.derivative(z, 1)) * hyperbolic_density(radius, w) / hyperbolic_density(radius, z)


def is_disjoint_type(model, radius, samples=720):
    """Whether f maps the closed disk into itself, judged by max |f| on its boundary"""
    circle = radius * np.exp(1j * np.linspace(0.0, TWO_PI, samples, endpoint=False))
    with np.errstate(over="ignore", invalid="ignore"):
        peak = float(np.max(np.abs(model.evaluate_array(circle))))
    return peak < radius, peak
