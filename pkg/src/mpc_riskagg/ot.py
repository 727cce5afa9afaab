"""RSA-based 1-of-2 and 1-of-k oblivious transfer.

Four-message flow: the sender publishes one random blinder per branch, the
receiver returns its chosen blinder plus an RSA-encrypted one-time key, the
sender answers with every branch masked under the corresponding trial
decryption, and the receiver can strip the mask from its branch only.

The RSA layer is raw (unpadded), exactly as the transfer step requires the
trial decryptions to line up; that makes these keys unsuitable for any
other purpose, and key sizes below 2048 bits log a warning so test
profiles are visible.  Branch values are residues of an arbitrary element
domain (typically Z_{n*q^2}), not bits.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

from ._primes import gen_prime

try:  # gmpy2 speeds up the trial decryptions by roughly an order of magnitude
    from gmpy2 import powmod as _powmod
except ImportError:  # pragma: no cover - exercised only without gmpy2
    _powmod = pow

log = logging.getLogger(__name__)

RECOMMENDED_RSA_BITS = 2048
MIN_RSA_BITS = 64


class OtError(RuntimeError):
    """Protocol-order or payload violation inside an OT session."""


@dataclass(frozen=True)
class RsaKeyPair:
    """RSA modulus with both exponents; primes retained for CRT decryption."""

    n: int
    e: int
    d: int
    p: int = field(repr=False, default=0)
    q: int = field(repr=False, default=0)

    def __post_init__(self):
        if self.p and self.q:
            object.__setattr__(self, "_dp", self.d % (self.p - 1))
            object.__setattr__(self, "_dq", self.d % (self.q - 1))
            object.__setattr__(self, "_qinv", pow(self.q, -1, self.p))

    @property
    def public(self) -> tuple:
        return (self.n, self.e)

    def encrypt(self, m: int) -> int:
        if not 0 <= m < self.n:
            raise OtError("plaintext outside [0, n)")
        return int(_powmod(m, self.e, self.n))

    def decrypt(self, c: int) -> int:
        if not 0 <= c < self.n:
            raise OtError("ciphertext outside [0, n)")
        if not self.p or not self.q:
            return int(_powmod(c, self.d, self.n))
        # CRT path: two half-size exponentiations.
        mp = int(_powmod(c % self.p, self._dp, self.p))
        mq = int(_powmod(c % self.q, self._dq, self.q))
        h = (self._qinv * (mp - mq)) % self.p
        return mq + h * self.q


def rsa_keygen(bits: int, rng) -> RsaKeyPair:
    """Generate an RSA keypair with public exponent 65537 (3 for tiny keys)."""
    if bits < MIN_RSA_BITS:
        raise ValueError(f"key size below the {MIN_RSA_BITS}-bit toy floor")
    if bits < RECOMMENDED_RSA_BITS:
        log.warning("generating a %d-bit RSA key: test profile only", bits)
    e = 65537 if bits >= 128 else 3
    half = bits // 2
    while True:
        p = gen_prime(half, rng)
        q = gen_prime(bits - half, rng)
        if p == q:
            continue
        phi = (p - 1) * (q - 1)
        if math.gcd(e, phi) != 1:
            continue
        n = p * q
        if n.bit_length() != bits:
            continue
        d = pow(e, -1, phi)
        return RsaKeyPair(n=n, e=e, d=d, p=p, q=q)


class OtSender:
    """Sender side of one 1-of-k transfer over a fixed element domain."""

    def __init__(self, values, domain: int, keypair: RsaKeyPair, rng):
        if len(values) < 2:
            raise ValueError("need at least 2 branches")
        if any(not 0 <= v < domain for v in values):
            raise OtError("branch value outside the element domain")
        self.values = list(values)
        self.domain = domain
        self.keypair = keypair
        self.rng = rng
        self._step = 1

    def step1_blinders(self):
        """Emit one fresh random blinder per branch."""
        if self._step != 1:
            raise OtError(f"blinders already emitted (at step {self._step})")
        self._step = 3
        self.blinders = [self.rng.randrange(self.keypair.n) for _ in self.values]
        return list(self.blinders)

    def step3_masked(self, c: int):
        """Trial-decrypt c against every blinder and mask each branch."""
        if self._step != 3:
            raise OtError(f"masked values not ready (at step {self._step})")
        if not 0 <= c < self.keypair.n:
            raise OtError("blinded key outside [0, n)")
        self._step = 5
        masked = []
        for value, x in zip(self.values, self.blinders):
            key = self.keypair.decrypt((c - x) % self.keypair.n)
            masked.append((value + key) % self.domain)
        return masked


class OtReceiver:
    """Receiver side: learns exactly the branch at ``index``.

    ``pad_blinding`` draws the one-time key as a salted, structured
    plaintext instead of a bare uniform residue; the message flow and the
    sender's processing are unchanged (the sender only ever uses trial
    decryptions as masks, never the key itself).
    """

    def __init__(self, branches: int, index: int, domain: int, public_key, rng,
                 pad_blinding: bool = False):
        if not 0 <= index < branches:
            raise OtError(f"choice index {index} outside [0, {branches})")
        self.branches = branches
        self.index = index
        self.domain = domain
        self.n, self.e = public_key
        self.rng = rng
        self.pad_blinding = pad_blinding
        self._step = 2

    def _draw_key(self) -> int:
        if not self.pad_blinding:
            return self.rng.randrange(self.n)
        # 0x00 0x02 | nonzero salt | 0x00 | core -- always below n because
        # the leading byte is zero
        size = (self.n.bit_length() + 7) // 8
        salt = bytes(self.rng.randrange(1, 256) for _ in range(max(1, size // 4)))
        core = self.rng.getrandbits(8 * max(1, size - len(salt) - 3))
        core_bytes = core.to_bytes(max(1, size - len(salt) - 3), "big")
        padded = b"\x00\x02" + salt + b"\x00" + core_bytes
        return int.from_bytes(padded[:size], "big") % self.n

    def step2_blind(self, blinders) -> int:
        """Pick the chosen blinder and scramble a fresh key under it."""
        if self._step != 2:
            raise OtError(f"blind already produced (at step {self._step})")
        if len(blinders) != self.branches:
            raise OtError("blinder count does not match branch count")
        if any(not 0 <= x < self.n for x in blinders):
            raise OtError("blinder outside [0, n)")
        self._step = 4
        self.key = self._draw_key()
        return (blinders[self.index] + int(_powmod(self.key, self.e, self.n))) % self.n

    def step4_unmask(self, masked) -> int:
        """Strip the key from the chosen branch; other branches stay masked."""
        if self._step != 4:
            raise OtError(f"unmask not ready (at step {self._step})")
        if len(masked) != self.branches:
            raise OtError("masked count does not match branch count")
        if any(not 0 <= a < self.domain for a in masked):
            raise OtError("masked value outside the element domain")
        self._step = 6
        return (masked[self.index] - self.key) % self.domain


def ot_1_of_k(values, index: int, domain: int, keypair: RsaKeyPair, sender_rng,
              receiver_rng, pad_blinding: bool = False) -> int:
    """Drive both ends of a 1-of-k transfer in process; returns values[index]."""
    sender = OtSender(values, domain, keypair, sender_rng)
    receiver = OtReceiver(len(values), index, domain, keypair.public,
                          receiver_rng, pad_blinding=pad_blinding)
    blinders = sender.step1_blinders()
    c = receiver.step2_blind(blinders)
    masked = sender.step3_masked(c)
    return receiver.step4_unmask(masked)


def ot2(values, index: int, domain: int, keypair: RsaKeyPair, sender_rng,
        receiver_rng, pad_blinding: bool = False) -> int:
    """1-of-2 transfer; the k = 2 specialization of ot_1_of_k."""
    if len(values) != 2:
        raise ValueError("ot2 takes exactly two branch values")
    return ot_1_of_k(values, index, domain, keypair, sender_rng, receiver_rng,
                     pad_blinding=pad_blinding)
