#!/usr/bin/env python3
"""
External addresses
Eventually periodic symbol sequences, the shift, the lexicographic and cyclic
orders, signed addresses with Minus before Plus on ties, and open intervals
of the cyclic order.

The symbol order is passed in (any object with a compare(a, b) method
returning an Ordering), so nothing here depends on the map family.
"""

import math
import re
from dataclasses import dataclass
from enum import Enum

from rays.errors import AddressSyntaxError, EmptyPeriod, NonDistinct
from rays.models import Ordering, Side, Symbol


def _primitive_root(word):
    n = len(word)
    for size in range(1, n + 1):
        if n % size == 0 and word[:size] * (n // size) == word:
            return word[:size]
    return word


@dataclass(frozen=True)
class ExternalAddress:
    preperiod: tuple
    period: tuple

    def __post_init__(self):
        pre = tuple(self.preperiod)
        period = tuple(self.period)
        if not period:
            raise EmptyPeriod("period must be nonempty")
        period = _primitive_root(period)
        while pre and pre[-1] == period[-1]:
            period = (pre[-1],) + period[:-1]
            pre = pre[:-1]
        object.__setattr__(self, "preperiod", pre)
        object.__setattr__(self, "period", period)

    @classmethod
    def periodic(cls, *symbols):
        return cls((), tuple(symbols))

    def __str__(self):
        return format_address(self)

    def __repr__(self):
        return f"ExternalAddress({format_address(self)!r})"

    @property
    def symbols(self):
        return set(self.preperiod) | set(self.period)

    def symbol_at(self, k):
        if k < len(self.preperiod):
            return self.preperiod[k]
        return self.period[(k - len(self.preperiod)) % len(self.period)]

    def prefix(self, n):
        return tuple(self.symbol_at(k) for k in range(n))

    def shift(self):
        if self.preperiod:
            return ExternalAddress(self.preperiod[1:], self.period)
        return ExternalAddress((), self.period[1:] + self.period[:1])

    def shift_by(self, n):
        address = self
        for _ in range(n):
            address = address.shift()
        return address

    def prepend(self, symbol):
        return ExternalAddress((symbol,) + self.preperiod, self.period)

    def replace_at(self, k, symbol):
        """Same sequence with entry k replaced"""
        tail = self.shift_by(k + 1)
        return ExternalAddress(self.prefix(k) + (symbol,) + tail.preperiod, tail.period)

    @classmethod
    def from_prefix(cls, prefix, tail):
        """prefix followed by the address tail"""
        return cls(tuple(prefix) + tail.preperiod, tail.period)

    def comparison_budget(self, other):
        return (max(len(self.preperiod), len(other.preperiod))
                + 2 * math.lcm(len(self.period), len(other.period)))


class Sign(str, Enum):
    MINUS = "-"
    PLUS = "+"

    @property
    def bristle(self):
        return "R" if self is Sign.PLUS else "L"

    def flipped(self):
        return Sign.MINUS if self is Sign.PLUS else Sign.PLUS


@dataclass(frozen=True)
class SignedAddress:
    addr: ExternalAddress
    sign: Sign

    def __str__(self):
        return f"({self.addr}, {self.sign.value})"

    def shift(self):
        return SignedAddress(self.addr.shift(), self.sign)

    def prepend(self, symbol):
        return SignedAddress(self.addr.prepend(symbol), self.sign)


@dataclass(frozen=True)
class AddressInterval:
    """Open interval from lo to hi in the cyclic order of signed addresses"""

    lo: SignedAddress
    hi: SignedAddress

    def __post_init__(self):
        if self.lo == self.hi:
            raise NonDistinct("interval endpoints must differ", endpoint=str(self.lo))

    def __str__(self):
        return f"({self.lo} .. {self.hi})"

    def reverse(self):
        return AddressInterval(self.hi, self.lo)

    def prepend(self, symbol):
        return AddressInterval(self.lo.prepend(symbol), self.hi.prepend(symbol))


def lex_compare_counted(a, b, order):
    """lex_compare that also reports how many symbol pairs it inspected"""
    if a == b:
        return Ordering.EQ, 0
    budget = a.comparison_budget(b)
    for k in range(budget):
        result = order.compare(a.symbol_at(k), b.symbol_at(k))
        if result != Ordering.EQ:
            return result, k + 1
    # Agreement over the budget means the sequences coincide; canonical forms decide
    return Ordering.EQ, budget


def lex_compare(a, b, order):
    return lex_compare_counted(a, b, order)[0]


def _cyclic(a, x, b, compare):
    if compare(a, x) == Ordering.EQ or compare(x, b) == Ordering.EQ or compare(a, b) == Ordering.EQ:
        raise NonDistinct("cyclic triple needs distinct entries", triple=[str(a), str(x), str(b)])
    lt = lambda p, q: compare(p, q) == Ordering.LT
    return (lt(a, x) and lt(x, b)) or (lt(x, b) and lt(b, a)) or (lt(b, a) and lt(a, x))


def cyclic_triple(a, x, b, order):
    return _cyclic(a, x, b, lambda p, q: lex_compare(p, q, order))


def signed_compare(p, q, order):
    result = lex_compare(p.addr, q.addr, order)
    if result != Ordering.EQ:
        return result
    if p.sign == q.sign:
        return Ordering.EQ
    return Ordering.LT if p.sign is Sign.MINUS else Ordering.GT


def signed_cyclic_triple(p, x, q, order):
    return _cyclic(p, x, q, lambda u, v: signed_compare(u, v, order))


def interval_contains(interval, p, order):
    if p == interval.lo or p == interval.hi:
        return False
    return signed_cyclic_triple(interval.lo, p, interval.hi, order)


_TOKEN_RE = re.compile(r"\S+")


def _parse_symbols(text, offset, full_text):
    symbols = []
    for match in _TOKEN_RE.finditer(text):
        try:
            symbols.append(Symbol.parse(match.group(0)))
        except ValueError:
            position = offset + match.start()
            raise AddressSyntaxError(f"bad symbol {match.group(0)!r}",
                                     position=position, text=full_text)
    return symbols


def parse_address(text):
    """Parse "pre | period", e.g. "0R | 1L 2R" or "| 0R"; bare integers for exp"""
    bars = [i for i, ch in enumerate(text) if ch == "|"]
    if len(bars) != 1:
        position = bars[1] if len(bars) > 1 else len(text)
        raise AddressSyntaxError("expected exactly one '|'", position=position, text=text)
    bar = bars[0]
    preperiod = _parse_symbols(text[:bar], 0, text)
    period = _parse_symbols(text[bar + 1:], bar + 1, text)
    if not period:
        raise EmptyPeriod("address has an empty period", text=text)
    sides = {s.side is None for s in preperiod + period}
    if len(sides) > 1:
        raise AddressSyntaxError("mixed sided and unsided symbols", position=0, text=text)
    return ExternalAddress(tuple(preperiod), tuple(period))


def format_address(address):
    pre = " ".join(str(s) for s in address.preperiod)
    period = " ".join(str(s) for s in address.period)
    return f"{pre} | {period}" if pre else f"| {period}"


def parse_signed(text, sign):
    return SignedAddress(parse_address(text), Sign(sign))


def random_address(rng, symbols, max_preperiod=3, max_period=3):
    """Random eventually periodic address over the given symbols (numpy Generator)"""
    symbols = list(symbols)
    pre_len = int(rng.integers(0, max_preperiod + 1))
    period_len = int(rng.integers(1, max_period + 1))
    pick = lambda n: tuple(symbols[i] for i in rng.integers(0, len(symbols), size=n))
    return ExternalAddress(pick(pre_len), pick(period_len))


def symbol_alphabet(model, rows):
    """Symbols with |row| <= rows for the model's family"""
    if model.has_sides:
        return [Symbol(r, side) for side in (Side.L, Side.R) for r in range(-rows, rows + 1)]
    return [Symbol(r) for r in range(-rows, rows + 1)]
