"""Exact arithmetic in the Novikov field over the two-element field.

A scalar is a finite sum of powers T^e with rational exponents e and
coefficient 1 (characteristic 2: a power is present or absent).  Every
scalar carries a rational truncation cutoff: exponents >= cutoff are
discarded and the scalar is flagged as truncated.  Addition and
multiplication are exact as long as all exponents stay below the cutoff;
inversion is only ever defined up to the cutoff.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Union

RatLike = Union[int, str, Fraction]

INF = Fraction(10**12)  # sentinel used by callers for +infinity levels


def rat(x: RatLike) -> Fraction:
    """Coerce ints, 'p/q' strings and Fractions to an exact rational."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(str(x))


class NovikovError(ValueError):
    pass


class NovikovScalar:
    """A finite Z/2-combination of powers T^e, truncated at ``cutoff``."""

    __slots__ = ("exps", "cutoff", "truncated")

    def __init__(self, exps: Iterable[RatLike], cutoff: RatLike, truncated: bool = False):
        cutoff = rat(cutoff)
        seen = set()
        for e in exps:
            e = rat(e)
            if e in seen:
                seen.remove(e)  # characteristic 2 cancellation
            else:
                seen.add(e)
        kept = []
        for e in seen:
            if e >= cutoff:
                truncated = True
            else:
                kept.append(e)
        self.exps = tuple(sorted(kept))
        self.cutoff = cutoff
        self.truncated = truncated

    # -- constructors -------------------------------------------------

    @staticmethod
    def zero(cutoff: RatLike) -> "NovikovScalar":
        return NovikovScalar((), cutoff)

    @staticmethod
    def one(cutoff: RatLike) -> "NovikovScalar":
        return NovikovScalar((0,), cutoff)

    @staticmethod
    def monomial(e: RatLike, cutoff: RatLike) -> "NovikovScalar":
        return NovikovScalar((rat(e),), cutoff)

    # -- basic predicates ---------------------------------------------

    def is_zero(self) -> bool:
        return not self.exps

    def __bool__(self) -> bool:
        return bool(self.exps)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, NovikovScalar)
            and self.exps == other.exps
            and self.cutoff == other.cutoff
        )

    def __hash__(self):
        return hash((self.exps, self.cutoff))

    def _check(self, other: "NovikovScalar"):
        if self.cutoff != other.cutoff:
            raise NovikovError(
                f"cutoff mismatch: {self.cutoff} vs {other.cutoff}"
            )

    # -- ring operations ----------------------------------------------

    def __add__(self, other: "NovikovScalar") -> "NovikovScalar":
        self._check(other)
        return NovikovScalar(
            set(self.exps) ^ set(other.exps),
            self.cutoff,
            self.truncated or other.truncated,
        )

    def __mul__(self, other: "NovikovScalar") -> "NovikovScalar":
        self._check(other)
        acc = set()
        trunc = self.truncated or other.truncated
        for a in self.exps:
            for b in other.exps:
                s = a + b
                if s in acc:
                    acc.remove(s)
                else:
                    acc.add(s)
        return NovikovScalar(acc, self.cutoff, trunc)

    def shift(self, s: RatLike) -> "NovikovScalar":
        """Multiply by the monomial T^s."""
        s = rat(s)
        return NovikovScalar(
            (e + s for e in self.exps), self.cutoff, self.truncated
        )

    def valuation(self) -> Fraction:
        """Minimal exponent; +infinity (INF sentinel) for the zero scalar."""
        if not self.exps:
            return INF
        return self.exps[0]

    def invert(self) -> "NovikovScalar":
        """Inverse of a valuation-zero unit, exact below the cutoff.

        Uses the geometric series: if x = 1 + k with v(k) > 0 then
        x^-1 = sum k^n, and the sum terminates once exponents pass the
        cutoff.
        """
        if not self.exps:
            raise NovikovError("cannot invert 0")
        if self.exps[0] != 0:
            raise NovikovError(
                f"inversion requires valuation 0, got {self.exps[0]}; "
                "rescale by T^-v first"
            )
        k = NovikovScalar(self.exps[1:], self.cutoff, self.truncated)
        if k.is_zero():
            return NovikovScalar.one(self.cutoff)
        acc = NovikovScalar.one(self.cutoff)
        power = NovikovScalar.one(self.cutoff)
        while True:
            power = power * k
            if power.is_zero():
                break
            acc = acc + power
        acc.truncated = True  # inverse only meaningful below cutoff
        return acc

    def divide(self, other: "NovikovScalar") -> "NovikovScalar":
        """self / other in the Novikov field, exact below the cutoff."""
        self._check(other)
        if other.is_zero():
            raise NovikovError("division by zero")
        v = other.valuation()
        unit = other.shift(-v)
        return (self * unit.invert()).shift(-v)

    def rebase(self, cutoff: RatLike) -> "NovikovScalar":
        """Same scalar under another cutoff (may truncate further)."""
        return NovikovScalar(self.exps, cutoff, self.truncated)

    # -- text form ------------------------------------------------------

    def __str__(self) -> str:
        if not self.exps:
            return "0"
        return " + ".join(f"T^{e}" for e in self.exps)

    __repr__ = __str__


def parse_scalar(text: str, cutoff: RatLike) -> NovikovScalar:
    """Parse "T^{p/q} + T^{r/s} + ..." (or "0"); unsorted input is fine."""
    text = text.strip()
    if text == "0":
        return NovikovScalar.zero(cutoff)
    exps = []
    for term in text.split("+"):
        term = term.strip()
        if not term:
            continue
        if term == "1":
            exps.append(Fraction(0))
            continue
        if not term.startswith("T^"):
            raise NovikovError(f"bad Novikov term {term!r}")
        body = term[2:].strip()
        if body.startswith("{") and body.endswith("}"):
            body = body[1:-1]
        exps.append(rat(body))
    return NovikovScalar(exps, cutoff)


def nov_add(x: NovikovScalar, y: NovikovScalar) -> NovikovScalar:
    return x + y


def nov_mul(x: NovikovScalar, y: NovikovScalar) -> NovikovScalar:
    return x * y


def valuation(x: NovikovScalar) -> Fraction:
    return x.valuation()


def nov_invert(x: NovikovScalar) -> NovikovScalar:
    return x.invert()
