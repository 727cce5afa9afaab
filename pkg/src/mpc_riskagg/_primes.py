"""Primality testing and prime generation for session fields and RSA keys."""

from __future__ import annotations

_SMALL_PRIMES = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59,
                 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113]

# Witnesses making Miller-Rabin deterministic for all n < 3.3 * 10^24.
_DETERMINISTIC_WITNESSES = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37]


def _miller_rabin(n: int, witness: int) -> bool:
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    x = pow(witness % n, d, n)
    if x in (1, n - 1):
        return True
    for _ in range(r - 1):
        x = x * x % n
        if x == n - 1:
            return True
    return False


def is_prime(n: int, rng=None, rounds: int = 40) -> bool:
    """Miller-Rabin; deterministic below 2^64, probabilistic above."""
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if n == p:
            return True
        if n % p == 0:
            return False
    if n < (1 << 64):
        witnesses = _DETERMINISTIC_WITNESSES
    elif rng is not None:
        witnesses = [rng.randrange(2, n - 1) for _ in range(rounds)]
    else:
        witnesses = _DETERMINISTIC_WITNESSES + [41, 43, 47, 53, 59, 61, 67, 71]
    return all(_miller_rabin(n, w) for w in witnesses)


def gen_prime(bits: int, rng) -> int:
    """Random prime with exactly ``bits`` bits (top two bits set for RSA use)."""
    if bits < 8:
        raise ValueError("prime size below 8 bits is not supported")
    while True:
        candidate = rng.getrandbits(bits) | (1 << (bits - 1)) | (1 << (bits - 2)) | 1
        if candidate.bit_length() != bits:
            continue
        if any(candidate % p == 0 for p in _SMALL_PRIMES if candidate != p):
            continue
        if is_prime(candidate, rng=rng):
            return candidate
