"""Additive secret sharing and the masked-polynomial sharing primitives.

Additive splits work over both carriers (prime field and fixed-point
modular reals): k - 1 shares are independent uniform draws and the last
share is the secret minus their sum, so reconstruction is a plain modular
sum and any k - 1 shares are jointly uniform.

The polynomial primitives serve the real-valued inner-product protocol:
secrets are hidden as evaluations of random low-degree polynomials at the
fixed dyadic points (1/4, 1/2, 3/4), and the constant term is recovered
with the integer Lagrange weights (3, -3, 1).  Integer weights are the
load-bearing detail: they commute with reduction mod tau, where a generic
interpolation with divisions would not be well defined.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

from .arith import FieldElem, ModReal

Carrier = Union[FieldElem, ModReal]

#: Fixed evaluation points t_j = j / 4 for j = 1, 2, 3.
EVAL_POINT_NUMERATORS = (1, 2, 3)
EVAL_POINT_DENOMINATOR = 4

#: Lagrange weights at t = 0 for the points (1/4, 1/2, 3/4).
LAGRANGE_WEIGHTS_AT_ZERO = (3, -3, 1)

# Exact polynomial evaluation at t = j/4 needs two extra fractional bits
# per power of t beyond the 64-bit input lattice.
SHARE_FRAC_BITS = 66
MASK_FRAC_BITS = 68


@dataclass(frozen=True)
class ShareSet:
    """Ordered additive shares of one secret; index i is bound to party i+1."""

    shares: tuple

    def __post_init__(self):
        if len(self.shares) < 2:
            raise ValueError("a share set needs at least 2 shares")
        first = self.shares[0]
        for s in self.shares[1:]:
            if type(s) is not type(first):
                raise ValueError("mixed share carriers")
            if isinstance(first, FieldElem) and s.modulus != first.modulus:
                raise ValueError("mixed field moduli")
            if isinstance(first, ModReal) and (
                s.modulus != first.modulus or s.frac_bits != first.frac_bits
            ):
                raise ValueError("mixed fixed-point moduli")

    def __len__(self):
        return len(self.shares)

    def __getitem__(self, i):
        return self.shares[i]


def additive_split(secret: Carrier, k: int, rng) -> ShareSet:
    """Split a secret into k additive shares, k - 1 of them uniform."""
    if k < 2:
        raise ValueError("share count must be at least 2")
    if isinstance(secret, FieldElem):
        head = [FieldElem.uniform(secret.modulus, rng) for _ in range(k - 1)]
    elif isinstance(secret, ModReal):
        head = [
            ModReal.uniform(secret.modulus, rng, secret.frac_bits) for _ in range(k - 1)
        ]
    else:
        raise TypeError("secret must be a FieldElem or ModReal")
    last = secret
    for s in head:
        last = last - s
    return ShareSet(tuple(head) + (last,))


def reconstruct(shares) -> Carrier:
    """Modular sum of a share set (or any homogeneous share sequence)."""
    if not isinstance(shares, ShareSet):
        shares = ShareSet(tuple(shares))
    total = shares[0]
    for s in shares.shares[1:]:
        total = total + s
    return total


def split_vector_mod(values: Sequence[int], k: int, modulus: int, rng):
    """Vector fast path: additively split each residue in ``values`` mod
    ``modulus``, returning k share vectors of plain ints.

    Semantically identical to per-coordinate ``additive_split`` over the
    field carrier; used by the protocol state machines on long vectors.
    """
    if k < 2:
        raise ValueError("share count must be at least 2")
    rows = [[rng.randrange(modulus) for _ in values] for _ in range(k - 1)]
    last = [
        (v - sum(row[i] for row in rows)) % modulus for i, v in enumerate(values)
    ]
    rows.append(last)
    return rows


@dataclass(frozen=True)
class PolyShare:
    """Evaluations of one masked polynomial at (1/4, 1/2, 3/4), mod tau."""

    values: tuple

    def __post_init__(self):
        if len(self.values) != 3:
            raise ValueError("poly shares carry exactly 3 evaluations")

    def __getitem__(self, i):
        return self.values[i]


def poly_share(x: ModReal, rng) -> PolyShare:
    """Hide x as evaluations of x + a*t with a uniform on [0, tau).

    The evaluations are exact: t_j = j/4 adds two fractional bits, so they
    live on the 2^-66 lattice.
    """
    return eval_affine(x, ModReal.uniform(x.modulus, rng))


def eval_affine(x: ModReal, a: ModReal) -> PolyShare:
    """Deterministic x + a*t evaluations (the poly_share core, mask pinned)."""
    if a.modulus != x.modulus or a.frac_bits != x.frac_bits:
        raise ValueError("mismatched coefficient carrier")
    span = x.modulus << SHARE_FRAC_BITS
    values = tuple(
        ModReal((4 * x.raw + j * a.raw) % span, x.modulus, SHARE_FRAC_BITS)
        for j in EVAL_POINT_NUMERATORS
    )
    return PolyShare(values)


def mask_poly(alpha: ModReal, beta: ModReal) -> PolyShare:
    """Evaluations of alpha*t + beta*t^2: a random mask that vanishes at 0.

    t^2 = j^2/16 needs four extra fractional bits, so the evaluations live
    on the 2^-68 lattice.
    """
    if alpha.modulus != beta.modulus or alpha.frac_bits != beta.frac_bits:
        raise ValueError("mismatched mask coefficients")
    tau = alpha.modulus
    span = tau << MASK_FRAC_BITS
    values = tuple(
        ModReal((4 * j * alpha.raw + j * j * beta.raw) % span, tau, MASK_FRAC_BITS)
        for j in EVAL_POINT_NUMERATORS
    )
    return PolyShare(values)


def lagrange_at_zero(v1: ModReal, v2: ModReal, v3: ModReal) -> ModReal:
    """Constant term of the degree-<=2 polynomial through the fixed points.

    Computes 3*v1 - 3*v2 + v3 mod tau.  Because the weights are integers
    the combination commutes with the modular reduction, making recovery
    exact for every polynomial whose exact evaluations were supplied.
    """
    if not (v1.modulus == v2.modulus == v3.modulus):
        raise ValueError("mismatched moduli")
    if not (v1.frac_bits == v2.frac_bits == v3.frac_bits):
        raise ValueError("mismatched fixed-point scales")
    span = v1.modulus << v1.frac_bits
    w1, w2, w3 = LAGRANGE_WEIGHTS_AT_ZERO
    raw = (w1 * v1.raw + w2 * v2.raw + w3 * v3.raw) % span
    return ModReal(raw, v1.modulus, v1.frac_bits)
