"""Exact modular arithmetic carriers for the aggregation protocols.

Two value types do all the work:

* ``ModReal`` -- a real number held as a fixed-point integer (64 fractional
  bits by default) and reduced modulo a small public bound.  Addition and
  subtraction are exact on the lattice, which is what makes the pairwise
  masks cancel bit-for-bit in the sum protocol.
* ``FieldElem`` -- an element of a prime field F_p with p < 2^61, so that
  products stay inside 128-bit intermediates on any runtime.

Plus the quantization codec (``QuantParams``) that maps normalized series
in [-1, 1] onto symmetric signed integer codes, and the signed embedding
into F_p used to decode quantized inner products.
"""

from __future__ import annotations

import numbers
from dataclasses import dataclass
from fractions import Fraction

from ._primes import is_prime

FRAC_BITS = 64
MAX_MODULUS = 1 << 64  # raw values stay below modulus * 2^64 <= 2^128

# Largest prime below 2^61 (a Mersenne prime); the default session field.
MAX_FIELD_PRIME = (1 << 61) - 1


class RangeError(ValueError):
    """A value falls outside its representable fixed-point or field range."""


def _as_fraction(value) -> Fraction:
    """Exact rational view of an input number.

    Floats convert exactly (they are dyadic rationals); decimal strings are
    parsed exactly, so ``"0.1"`` means 1/10 and not the nearest double.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, numbers.Integral):
        return Fraction(int(value))
    if isinstance(value, float):
        return Fraction(value)
    raise TypeError(f"cannot interpret {type(value).__name__} as an exact real")


@dataclass(frozen=True)
class ModReal:
    """Fixed-point real in [0, modulus), exact under add/sub/negate.

    ``raw`` is the integer ``value * 2**frac_bits``; the representative is
    always reduced into [0, modulus).  ``frac_bits`` defaults to 64 and is
    only raised internally (polynomial shares need a few extra bits to stay
    exact at dyadic evaluation points).
    """

    raw: int
    modulus: int
    frac_bits: int = FRAC_BITS

    def __post_init__(self):
        if self.modulus < 1 or self.modulus > MAX_MODULUS:
            raise RangeError(f"modulus {self.modulus} outside [1, 2^64]")
        if not 0 <= self.raw < self.modulus << self.frac_bits:
            raise RangeError("raw value outside [0, modulus * 2^frac_bits)")

    # -- constructors ----------------------------------------------------

    @classmethod
    def from_real(cls, value, modulus: int, frac_bits: int = FRAC_BITS) -> "ModReal":
        """Reduce a real number into [0, modulus) on the fixed-point lattice.

        Rounding is half-up on the scaled value, applied once; reduction by
        the modulus afterwards is exact because modulus * 2^frac_bits is an
        integer multiple of the lattice step.
        """
        if modulus < 1 or modulus > MAX_MODULUS:
            raise RangeError(f"modulus {modulus} outside [1, 2^64]")
        frac = _as_fraction(value)
        if abs(frac) >= MAX_MODULUS:
            raise RangeError(f"|{value}| exceeds the fixed-point range")
        scaled = frac * (1 << frac_bits)
        raw = (scaled.numerator * 2 + scaled.denominator) // (2 * scaled.denominator)
        return cls(raw % (modulus << frac_bits), modulus, frac_bits)

    @classmethod
    def uniform(cls, modulus: int, rng, frac_bits: int = FRAC_BITS) -> "ModReal":
        """Uniform draw over the full lattice [0, modulus)."""
        return cls(rng.randrange(modulus << frac_bits), modulus, frac_bits)

    # -- arithmetic ------------------------------------------------------

    def _check_compatible(self, other: "ModReal"):
        if not isinstance(other, ModReal):
            raise TypeError("ModReal arithmetic requires ModReal operands")
        if other.modulus != self.modulus or other.frac_bits != self.frac_bits:
            raise ValueError("mismatched modulus or fixed-point scale")

    def __add__(self, other: "ModReal") -> "ModReal":
        self._check_compatible(other)
        span = self.modulus << self.frac_bits
        return ModReal((self.raw + other.raw) % span, self.modulus, self.frac_bits)

    def __sub__(self, other: "ModReal") -> "ModReal":
        self._check_compatible(other)
        span = self.modulus << self.frac_bits
        return ModReal((self.raw - other.raw) % span, self.modulus, self.frac_bits)

    def __neg__(self) -> "ModReal":
        span = self.modulus << self.frac_bits
        return ModReal(-self.raw % span, self.modulus, self.frac_bits)

    def mul_wide(self, other: "ModReal") -> "ModReal":
        """Exact product, carried at the sum of both operands' precisions."""
        if other.modulus != self.modulus:
            raise ValueError("mismatched modulus")
        bits = self.frac_bits + other.frac_bits
        return ModReal((self.raw * other.raw) % (self.modulus << bits), self.modulus, bits)

    def widen(self, frac_bits: int) -> "ModReal":
        """Exact reinterpretation at a finer lattice (frac_bits may only grow)."""
        if frac_bits < self.frac_bits:
            raise ValueError("widen cannot reduce precision; use round_to")
        shift = frac_bits - self.frac_bits
        return ModReal(self.raw << shift, self.modulus, frac_bits)

    def round_to(self, frac_bits: int) -> "ModReal":
        """Round half-up onto a coarser lattice (the one narrowing point)."""
        if frac_bits >= self.frac_bits:
            return self.widen(frac_bits)
        shift = self.frac_bits - frac_bits
        raw = (self.raw + (1 << (shift - 1))) >> shift
        return ModReal(raw % (self.modulus << frac_bits), self.modulus, frac_bits)

    # -- conversions -----------------------------------------------------

    def to_float(self) -> float:
        return self.raw / (1 << self.frac_bits)

    def to_fraction(self) -> Fraction:
        return Fraction(self.raw, 1 << self.frac_bits)

    def encode(self) -> bytes:
        """Wire form: unsigned 128-bit big-endian raw (default scale only)."""
        if self.frac_bits != FRAC_BITS:
            raise ValueError("u128 encoding is defined for the 64-bit lattice")
        return self.raw.to_bytes(16, "big")

    @classmethod
    def decode(cls, data: bytes, modulus: int) -> "ModReal":
        if len(data) != 16:
            raise ValueError("ModReal wire value must be 16 bytes")
        return cls(int.from_bytes(data, "big"), modulus, FRAC_BITS)

    def __repr__(self):
        return f"ModReal({self.to_float()!r} mod {self.modulus})"


def mod_real(value, modulus: int) -> ModReal:
    """The unique representative of ``value`` in [0, modulus), fixed point."""
    return ModReal.from_real(value, modulus)


@dataclass(frozen=True)
class FieldElem:
    """Element of F_p for a prime p < 2^61.

    Products are taken on full-width integers before reduction, so they are
    never truncated.  Primality of the modulus is validated at session
    setup, not on every element.
    """

    value: int
    modulus: int

    def __post_init__(self):
        if not 2 <= self.modulus < (1 << 61):
            raise RangeError("field modulus must lie in [2, 2^61)")
        if not 0 <= self.value < self.modulus:
            raise RangeError("field value outside [0, p)")

    def _check(self, other: "FieldElem"):
        if not isinstance(other, FieldElem):
            raise TypeError("FieldElem arithmetic requires FieldElem operands")
        if other.modulus != self.modulus:
            raise ValueError("mismatched field modulus")

    def __add__(self, other: "FieldElem") -> "FieldElem":
        self._check(other)
        return FieldElem((self.value + other.value) % self.modulus, self.modulus)

    def __sub__(self, other: "FieldElem") -> "FieldElem":
        self._check(other)
        return FieldElem((self.value - other.value) % self.modulus, self.modulus)

    def __mul__(self, other: "FieldElem") -> "FieldElem":
        self._check(other)
        return FieldElem((self.value * other.value) % self.modulus, self.modulus)

    def __neg__(self) -> "FieldElem":
        return FieldElem(-self.value % self.modulus, self.modulus)

    def inv(self) -> "FieldElem":
        """Multiplicative inverse by Fermat: a^(p-2) mod p; zero is an error."""
        if self.value == 0:
            raise ZeroDivisionError("zero has no inverse in F_p")
        return FieldElem(pow(self.value, self.modulus - 2, self.modulus), self.modulus)

    @classmethod
    def uniform(cls, modulus: int, rng) -> "FieldElem":
        return cls(rng.randrange(modulus), modulus)

    def encode(self) -> bytes:
        """Wire form: unsigned 64-bit big-endian (p rides at session level)."""
        return self.value.to_bytes(8, "big")

    @classmethod
    def decode(cls, data: bytes, modulus: int) -> "FieldElem":
        if len(data) != 8:
            raise ValueError("FieldElem wire value must be 8 bytes")
        return cls(int.from_bytes(data, "big"), modulus)

    def __repr__(self):
        return f"FieldElem({self.value} mod {self.modulus})"


@dataclass(frozen=True)
class QuantParams:
    """Symmetric signed quantization of [-1, 1] at an odd level q.

    Codes run over [-half, half] with half = (q - 1) / 2 and resolution
    step = 2 / (q - 1).  The zero offset keeps quantized inner products a
    pure step^2 rescale with no affine cross-terms.
    """

    q: int

    def __post_init__(self):
        if self.q < 3 or self.q % 2 == 0:
            raise ValueError("quantization level must be odd and >= 3")

    @property
    def half(self) -> int:
        return (self.q - 1) // 2

    @property
    def step(self) -> float:
        return 2.0 / (self.q - 1)

    def quantize(self, u: float) -> int:
        """round(u * half), clamping inputs beyond [-1, 1] to the endpoints."""
        u = -1.0 if u < -1.0 else 1.0 if u > 1.0 else u
        scaled = _as_fraction(u) * self.half
        if scaled >= 0:
            code = (scaled.numerator * 2 + scaled.denominator) // (2 * scaled.denominator)
        else:
            code = -((-scaled.numerator * 2 + scaled.denominator) // (2 * scaled.denominator))
        return code

    def dequantize(self, code: int) -> float:
        return code * self.step


def signed_embed(code: int, p: int) -> FieldElem:
    """Map a signed code with |code| < p/2 onto its canonical F_p element."""
    if 2 * abs(code) >= p:
        raise RangeError(f"|{code}| >= p/2; signed embedding is ambiguous")
    return FieldElem(code % p, p)


def signed_decode(elem: FieldElem) -> int:
    """Inverse of signed_embed on the canonical (-p/2, p/2) representatives."""
    if 2 * elem.value < elem.modulus:
        return elem.value
    return elem.value - elem.modulus


def default_field_prime(n: int, q: int) -> int:
    """Session field prime: the largest prime below 2^61 above the n*q^2 bound.

    There are no primes between 2^61 - 1 and 2^61, so the default is the
    Mersenne prime 2^61 - 1 whenever it clears the bound.
    """
    bound = n * q * q
    if bound >= MAX_FIELD_PRIME:
        raise RangeError(f"n*q^2 = {bound} leaves no usable prime below 2^61")
    return MAX_FIELD_PRIME


def validate_field_prime(p: int, n: int, q: int) -> None:
    """Check the inner-product field precondition: p prime and p > n*q^2."""
    if p >= (1 << 61):
        raise RangeError("field prime must be below 2^61")
    if not is_prime(p):
        raise RangeError(f"{p} is not prime")
    if p <= n * q * q:
        raise RangeError(f"prime {p} does not exceed n*q^2 = {n * q * q}")
