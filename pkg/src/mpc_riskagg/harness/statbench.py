"""Statistical secrecy bench: uniformity of published values and
two-sample indistinguishability of party views.

The sum protocol's published values (S_1, ..., S_m) must land exactly on
the plane { sum S_i = total mod m } while each coordinate is uniform on
[0, m); the bench verifies the constraint bit-exactly on every trial and
tests uniformity of the free coordinates (per-marginal KS plus a
chi-square over a grid on the constraint plane).  A deliberately biased
RNG stub acts as the negative control that must be rejected, which also
demonstrates the tests have power at the configured trial counts.

For the field inner product, the property under test is that party 1's
view depends on the inputs only through the output and its own vector; the
bench runs two input settings and compares scalar view projections with
two-sample KS tests.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

from ..arith import FRAC_BITS, ModReal
from ..protocols import SessionConfig
from .local import run_local
from .transcript import derive_party_rng_seed


class BiasedRandom(random.Random):
    """Negative-control stub: draws land only in the lower half-range."""

    def randrange(self, start, stop=None, step=1):
        if stop is None:
            start, stop = 0, start
        span = stop - start
        return start + super().randrange(max(1, span // 2))


def _trial_rng_factory(seed: Optional[int], trial: int, biased: bool = False):
    cls = BiasedRandom if biased else random.Random
    if seed is None:
        if biased:
            return lambda pid: BiasedRandom()
        return lambda pid: random.SystemRandom()
    return lambda pid: cls(derive_party_rng_seed(seed, trial * 1000003 + pid))


@dataclass
class TestLine:
    name: str
    statistic: float
    p_value: float
    passed: bool


@dataclass
class UniformityReport:
    m: int
    trials: int
    alpha: float
    expected_sum_raw: int
    all_on_constraint: bool
    marginal_ks: list
    plane_chi2: Optional[TestLine]
    samples: np.ndarray  # trials x m floats
    passed: bool = field(init=False)

    def __post_init__(self):
        checks = [t.passed for t in self.marginal_ks]
        if self.plane_chi2 is not None:
            checks.append(self.plane_chi2.passed)
        self.passed = self.all_on_constraint and all(checks)

    def write_csv(self, path: str):
        header = ",".join(f"S{i}" for i in range(1, self.m + 1))
        with open(path, "w") as fh:
            fh.write(header + "\n")
            for row in self.samples:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")

    def lines(self):
        out = [
            TestLine(
                "constraint-plane",
                0.0 if self.all_on_constraint else 1.0,
                1.0 if self.all_on_constraint else 0.0,
                self.all_on_constraint,
            )
        ]
        out.extend(self.marginal_ks)
        if self.plane_chi2 is not None:
            out.append(self.plane_chi2)
        return out


def uniformity_report(
    inputs,
    trials: int,
    *,
    m: Optional[int] = None,
    seed: Optional[int] = None,
    alpha: float = 0.01,
    grid: int = 8,
    biased_rng: bool = False,
) -> UniformityReport:
    """Sample (S_1, ..., S_m) over ``trials`` fresh-randomness sum sessions
    with the inputs held fixed."""
    if trials < 1:
        raise ValueError("at least one trial is required")
    m = m or len(inputs)
    if m != len(inputs):
        raise ValueError(f"{len(inputs)} inputs for {m} parties")
    config = SessionConfig(protocol="secure-sum", m=m, seed=seed)
    values = {pid: ModReal.from_real(v, m) for pid, v in zip(range(1, m + 1), inputs)}
    expected_sum = sum(v.raw for v in values.values()) % (m << FRAC_BITS)

    rows_raw = np.empty((trials, m), dtype=object)
    rows = np.empty((trials, m), dtype=float)
    all_exact = True
    for t in range(trials):
        factory = _trial_rng_factory(seed, t, biased=biased_rng)
        _, transcript = run_local(
            config, values, rng_factory=factory, record=False, record_views=True
        )
        partials = [
            transcript.views[pid]["generated"]["partial"] for pid in range(1, m + 1)
        ]
        raw_sum = sum(partials) % (m << FRAC_BITS)
        if raw_sum != expected_sum:
            all_exact = False
        rows_raw[t] = partials
        rows[t] = [p / (1 << FRAC_BITS) for p in partials]

    marginals = []
    if trials >= 30:
        for i in range(m):
            stat, p = stats.kstest(rows[:, i] / m, "uniform")
            marginals.append(TestLine(f"ks-marginal-S{i + 1}", float(stat), float(p), bool(p > alpha)))
    plane = None
    if trials >= 30:
        counts, _, _ = np.histogram2d(
            rows[:, 0], rows[:, 1], bins=grid, range=[[0, m], [0, m]]
        )
        expected = np.full(grid * grid, trials / (grid * grid))
        stat, p = stats.chisquare(counts.ravel(), expected)
        plane = TestLine("chi2-constraint-plane", float(stat), float(p), bool(p > alpha))

    return UniformityReport(
        m=m,
        trials=trials,
        alpha=alpha,
        expected_sum_raw=expected_sum,
        all_on_constraint=all_exact,
        marginal_ks=marginals,
        plane_chi2=plane,
        samples=rows,
    )


# ---------------------------------------------------------------------------
# View-independence bench (field inner product, party 1's perspective)

VIEW_PROJECTIONS = (
    "y_share1_c0",     # first coordinate of the y-shares party 1 receives
    "y_share2_c0",
    "reshare_from_2",  # party 2's re-share of its partial product
    "reshare_from_3",
    "revealed_2",      # the revealed sums
    "revealed_3",
    "revealed_total",  # the output itself: distinguishes iff the outputs differ
)


def _party1_projection(view: dict, name: str, p: int) -> float:
    recv = view["received"]
    gen = view["generated"]
    if name == "y_share1_c0":
        shares = next(
            e for e in recv if e["round"] == 1 and e["type"] == "SHARE"
        )
        return shares["body"]["groups"][0]["values"][0] / p
    if name == "y_share2_c0":
        shares = next(
            e for e in recv if e["round"] == 1 and e["type"] == "SHARE"
        )
        return shares["body"]["groups"][1]["values"][0] / p
    if name in ("reshare_from_2", "reshare_from_3"):
        src = 2 if name.endswith("2") else 3
        entry = next(
            e for e in recv if e["round"] == 2 and e["from"] == src
        )
        return entry["body"]["groups"][0]["values"][0] / p
    if name in ("revealed_2", "revealed_3"):
        src = 2 if name.endswith("2") else 3
        entry = next(
            e for e in recv if e["round"] == 3 and e["from"] == src
        )
        return entry["body"]["value"] / p
    if name == "revealed_total":
        total = gen["revealed_sum"]
        for e in recv:
            if e["round"] == 3:
                total += e["body"]["value"]
        return (total % p) / p
    raise KeyError(name)


@dataclass
class ViewIndependenceReport:
    trials: int
    alpha: float
    projections: list       # TestLine per projection; passed = indistinguishable
    indistinguishable: bool


def view_independence_report(
    setting_a: dict,
    setting_b: dict,
    trials: int,
    *,
    seed: Optional[int] = None,
    alpha: float = 0.01,
) -> ViewIndependenceReport:
    """Compare party 1's view distributions across two sip1 input settings.

    Each setting is a dict with keys x, y, q, and optionally p.  The
    samples are scalar projections of the view over ``trials`` runs per
    setting; every projection is tested with a two-sample KS test.

    The comparison protects party 1, so both settings must hold party 1's
    vector (and the session parameters) fixed; only y may differ.
    """
    if list(setting_a["x"]) != list(setting_b["x"]):
        raise ValueError("malformed pairing: both settings must share x")
    if setting_a["q"] != setting_b["q"] or setting_a.get("p") != setting_b.get("p"):
        raise ValueError("malformed pairing: session parameters differ")
    samples = {}
    for tag, setting in (("a", setting_a), ("b", setting_b)):
        n = len(setting["x"])
        config = SessionConfig(
            protocol="sip1",
            n=n,
            q=setting["q"],
            p=setting.get("p") or _default_p(n, setting["q"]),
            seed=seed,
        )
        inputs = {1: setting["x"], 2: setting["y"]}
        per_proj = {name: np.empty(trials) for name in VIEW_PROJECTIONS}
        for t in range(trials):
            factory = _trial_rng_factory(
                seed if seed is None else seed + (0 if tag == "a" else 1), t
            )
            _, transcript = run_local(
                config, inputs, rng_factory=factory, record=False, record_views=True
            )
            view = transcript.views[1]
            for name in VIEW_PROJECTIONS:
                per_proj[name][t] = _party1_projection(view, name, config.p)
        samples[tag] = per_proj

    lines = []
    for name in VIEW_PROJECTIONS:
        stat, p = stats.ks_2samp(samples["a"][name], samples["b"][name])
        lines.append(TestLine(f"ks2-{name}", float(stat), float(p), bool(p > alpha)))
    return ViewIndependenceReport(
        trials=trials,
        alpha=alpha,
        projections=lines,
        indistinguishable=all(t.passed for t in lines),
    )


def _default_p(n: int, q: int) -> int:
    from ..arith import default_field_prime

    return default_field_prime(n, q)
