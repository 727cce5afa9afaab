"""Financial statistics on top of the protocols: aggregate sums, the
Herfindahl concentration index, cross-party dispersion, and pairwise
correlations.

Real series are mapped onto protocol inputs through a session-wide public
scale bound B: every value must lie in [0, B], values/B feed the sum
protocol, and results rescale by B afterwards.  Choosing B is a governance
decision -- it is disclosed to every participant -- and values above B are
an error, never clamped.  Missing timestamps are an error too: silently
imputing a regulatory aggregate would corrupt it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .arith import (
    FieldElem,
    ModReal,
    QuantParams,
    default_field_prime,
    signed_decode,
    signed_embed,
)
from .harness.local import run_local
from .protocols import ConfigError, SessionConfig


class DegenerateInputError(ValueError):
    """A statistic is undefined for this input (constant series, zero total)."""


@dataclass(frozen=True)
class SeriesInput:
    """One party's time series: ISO-8601 date labels and nonnegative values."""

    party_id: int
    dates: tuple
    values: tuple

    def __post_init__(self):
        if len(self.dates) != len(self.values):
            raise ValueError("dates and values differ in length")


def load_series_csv(path: str, party_id: int = 0) -> SeriesInput:
    """Read a ``date,value`` CSV; parse errors name the offending line."""
    dates = []
    values = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if lineno == 1 and line.lower().replace(" ", "") == "date,value":
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'date,value'")
            date, raw = parts[0].strip(), parts[1].strip()
            try:
                value = Fraction(raw)
            except (ValueError, ZeroDivisionError) as exc:
                raise ValueError(f"{path}:{lineno}: bad value {raw!r}") from exc
            dates.append(date)
            values.append(value)
    if not dates:
        raise ValueError(f"{path}: no data rows")
    return SeriesInput(party_id, tuple(dates), tuple(values))


def check_aligned(series: Sequence[SeriesInput]):
    dates = series[0].dates
    for s in series[1:]:
        if s.dates != dates:
            raise ConfigError(
                f"party {s.party_id} timestamps do not align with party "
                f"{series[0].party_id} (missing timestamps are an error)"
            )
    return dates


def scaled_ratio(value, bound) -> Fraction:
    v = value if isinstance(value, Fraction) else Fraction(value)
    b = bound if isinstance(bound, Fraction) else Fraction(bound)
    if b <= 0:
        raise ConfigError("scale bound must be positive")
    if v < 0:
        raise ConfigError(f"negative value {value} not allowed")
    if v > b:
        raise ConfigError(f"value {value} exceeds the disclosed bound {bound}")
    return v / b


@dataclass
class AggregateResult:
    dates: tuple
    totals: tuple            # floats, rescaled by the bound
    totals_exact: tuple      # Fractions, exact on the lattice
    bound: float
    m: int
    transcripts: Optional[list] = None


def aggregate_sum(
    series: Sequence[SeriesInput],
    bound,
    *,
    seed: Optional[int] = None,
    record: bool = False,
) -> AggregateResult:
    """Per-timestamp masked sum across parties, rescaled by the bound."""
    if len(series) < 2:
        raise ConfigError("aggregation needs at least two parties")
    dates = check_aligned(series)
    m = len(series)
    bound_frac = bound if isinstance(bound, Fraction) else Fraction(bound)
    totals = []
    exacts = []
    transcripts = [] if record else None
    for t in range(len(dates)):
        inputs = {
            pid: ModReal.from_real(scaled_ratio(s.values[t], bound_frac), m)
            for pid, s in enumerate(series, start=1)
        }
        config = SessionConfig(
            protocol="secure-sum", m=m, bound=float(bound_frac),
            seed=None if seed is None else seed + t,
        )
        result, transcript = run_local(
            config, inputs, record=record, record_views=record
        )
        exact = result.value.to_fraction() * bound_frac
        exacts.append(exact)
        totals.append(float(exact))
        if record:
            transcripts.append(transcript)
    return AggregateResult(
        dates=dates,
        totals=tuple(totals),
        totals_exact=tuple(exacts),
        bound=float(bound_frac),
        m=m,
        transcripts=transcripts,
    )


@dataclass
class HerfindahlResult:
    hhi: float
    total: float
    sum_of_squares: float
    m: int


def herfindahl(
    exposures: Sequence, bound, *, seed: Optional[int] = None
) -> HerfindahlResult:
    """Concentration index from two masked sums: sum(x) and sum(x^2).

    The intermediate total is published to every party before the second
    run; total plus concentration is the intended output pair, so this is
    part of the functional rather than extra leakage.
    """
    m = len(exposures)
    if m < 2:
        raise ConfigError("the concentration index needs at least two parties")
    bound_frac = bound if isinstance(bound, Fraction) else Fraction(bound)
    ratios = [scaled_ratio(v, bound_frac) for v in exposures]

    def one_sum(values, tag: int) -> Fraction:
        inputs = {
            pid: ModReal.from_real(v, m) for pid, v in enumerate(values, start=1)
        }
        config = SessionConfig(
            protocol="secure-sum", m=m,
            seed=None if seed is None else seed + tag,
        )
        result, _ = run_local(config, inputs, record=False, record_views=False)
        return result.value.to_fraction()

    total = one_sum(ratios, 0)                     # published before run 2
    squares = one_sum([r * r for r in ratios], 1)
    if total == 0:
        raise DegenerateInputError("total exposure is zero")
    hhi = squares / (total * total)
    return HerfindahlResult(
        hhi=float(hhi),
        total=float(total * bound_frac),
        sum_of_squares=float(squares * bound_frac * bound_frac),
        m=m,
    )


def normalize(values: Sequence[float]) -> np.ndarray:
    """Center and scale a series so the pairwise inner product of two
    normalized series is exactly their sample correlation.

    Output entries are (x_i - mean) / (std * sqrt(t - 1)) with the
    (t-1)-denominator standard deviation, giving a unit-norm vector.
    """
    x = np.asarray(values, dtype=float)
    if x.size < 2:
        raise DegenerateInputError("a series needs at least two observations")
    centered = x - x.mean()
    sq = float(centered @ centered)
    if sq == 0.0:
        raise DegenerateInputError("constant series has no correlation")
    return centered / math.sqrt(sq)


@dataclass
class CorrelationResult:
    rho: float               # decoded, step^2-rescaled estimate
    code_inner: int          # exact inner product of the signed codes
    n: int
    q: int
    step: float
    error_bound: float       # 3 * sqrt(n) * step
    backend: str


def secure_correlation(
    x: Sequence[float],
    y: Sequence[float],
    q: int,
    *,
    backend: str = "sip1",
    p: Optional[int] = None,
    seed: Optional[int] = None,
    rsa_bits: int = 512,
) -> CorrelationResult:
    """Pairwise sample correlation via a quantized secure inner product.

    Both parties normalize locally, quantize onto symmetric signed codes,
    and run the chosen inner-product backend.  The field backend ("sip1")
    embeds signed codes directly; the OT backend ("sip3") works in an
    unsigned domain, so codes are shifted by +half and the affine terms are
    removed with two extra inner products against the all-ones vector --
    which reveals the code sums, an extra disclosure that is documented and
    the reason sip1 is the default.
    """
    if len(x) != len(y):
        raise ConfigError("series must have equal length")
    n = len(x)
    params = QuantParams(q)  # rejects even q
    cx = [params.quantize(u) for u in normalize(x)]
    cy = [params.quantize(u) for u in normalize(y)]

    if backend == "sip1":
        prime = p or default_field_prime(n, q)
        config = SessionConfig(protocol="sip1", n=n, q=q, p=prime, seed=seed)
        inputs = {
            1: [signed_embed(c, prime).value for c in cx],
            2: [signed_embed(c, prime).value for c in cy],
        }
        result, _ = run_local(config, inputs, record=False, record_views=False)
        code_inner = signed_decode(FieldElem(result.value, prime))
    elif backend == "sip3":
        half = params.half
        shifted_x = [c + half for c in cx]
        shifted_y = [c + half for c in cy]
        ones = [1] * n

        def one_ip(a, b, tag: int) -> int:
            config = SessionConfig(
                protocol="sip3", n=n, q=q, rsa_bits=rsa_bits,
                seed=None if seed is None else seed + tag,
            )
            result, _ = run_local(
                config, {1: a, 2: b}, record=False, record_views=False
            )
            return result.value

        s_xy = one_ip(shifted_x, shifted_y, 0)
        s_x = one_ip(shifted_x, ones, 1)   # reveals sum of party 1's codes
        s_y = one_ip(ones, shifted_y, 2)   # reveals sum of party 2's codes
        code_inner = s_xy - half * s_x - half * s_y + n * half * half
    else:
        raise ConfigError(f"unknown correlation backend {backend!r}")

    step = params.step
    return CorrelationResult(
        rho=code_inner * step * step,
        code_inner=code_inner,
        n=n,
        q=q,
        step=step,
        error_bound=3.0 * math.sqrt(n) * step,
        backend=backend,
    )


@dataclass
class DispersionResult:
    dates: tuple
    means: tuple
    stds: tuple  # population standard deviation across parties
    m: int


def mean_and_std(
    series: Sequence[SeriesInput], bound, *, seed: Optional[int] = None
) -> DispersionResult:
    """Cross-party mean and population standard deviation per timestamp,
    from two masked sums (values and squared values)."""
    if len(series) < 2:
        raise ConfigError("dispersion needs at least two parties")
    dates = check_aligned(series)
    m = len(series)
    bound_frac = bound if isinstance(bound, Fraction) else Fraction(bound)
    means = []
    stds = []
    for t in range(len(dates)):
        ratios = [scaled_ratio(s.values[t], bound_frac) for s in series]

        def one_sum(values, tag: int) -> Fraction:
            inputs = {
                pid: ModReal.from_real(v, m) for pid, v in enumerate(values, start=1)
            }
            config = SessionConfig(
                protocol="secure-sum", m=m,
                seed=None if seed is None else seed + 2 * t + tag,
            )
            result, _ = run_local(config, inputs, record=False, record_views=False)
            return result.value.to_fraction()

        total = one_sum(ratios, 0) * bound_frac
        squares = one_sum([r * r for r in ratios], 1) * bound_frac * bound_frac
        mean = total / m
        variance = squares / m - mean * mean
        means.append(float(mean))
        stds.append(math.sqrt(max(0.0, float(variance))))
    return DispersionResult(dates=dates, means=tuple(means), stds=tuple(stds), m=m)


def share_of_total(own_value, total) -> float:
    """A party's local share of the published total; no protocol needed."""
    if total == 0:
        raise DegenerateInputError("total is zero")
    return float(Fraction(own_value) / Fraction(total))
