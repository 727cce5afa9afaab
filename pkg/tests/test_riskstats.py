import math
import os
import random
from fractions import Fraction

import numpy as np
import pytest

from mpc_riskagg.protocols import ConfigError
from mpc_riskagg.riskstats import (
    DegenerateInputError,
    SeriesInput,
    aggregate_sum,
    herfindahl,
    load_series_csv,
    mean_and_std,
    normalize,
    secure_correlation,
    share_of_total,
)

DATA_DIR = os.path.join(
    os.path.dirname(os.path.dirname(os.path.abspath(__file__))),
    "src", "mpc_riskagg", "data", "bhc_demo",
)

TOL = 2.0**-40


def series(pid, values, dates=None):
    dates = dates or tuple(f"2020-{i:03d}" for i in range(len(values)))
    return SeriesInput(pid, tuple(dates), tuple(values))


# -- normalization -------------------------------------------------------------


def test_normalize_two_point_case():
    x = normalize([0.0, 1.0])
    assert x == pytest.approx([-1 / math.sqrt(2), 1 / math.sqrt(2)])


def test_normalize_self_correlation_is_one():
    rng = random.Random(61)
    x = [rng.uniform(-5, 9) for _ in range(50)]
    xn = normalize(x)
    assert float(xn @ xn) == pytest.approx(1.0, abs=1e-12)


def test_normalize_matches_pearson():
    rng = random.Random(62)
    for _ in range(100):
        n = rng.randrange(2, 40)
        x = [rng.gauss(0, 3) for _ in range(n)]
        y = [rng.gauss(1, 2) for _ in range(n)]
        try:
            xn, yn = normalize(x), normalize(y)
        except DegenerateInputError:
            continue
        assert np.all(np.abs(xn) <= 1.0) and np.all(np.abs(yn) <= 1.0)
        rho = float(xn @ yn)
        pearson = float(np.corrcoef(x, y)[0, 1])
        assert abs(rho - pearson) <= TOL


def test_normalize_degenerate():
    with pytest.raises(DegenerateInputError):
        normalize([3.0, 3.0, 3.0])
    with pytest.raises(DegenerateInputError):
        normalize([1.0])


# -- aggregation ----------------------------------------------------------------


def test_aggregate_constant_series():
    parties = [series(i + 1, (Fraction(v), Fraction(v)))
               for i, v in enumerate(("0.1", "0.2", "0.3"))]
    agg = aggregate_sum(parties, 1, seed=1)
    assert agg.totals == (0.6, 0.6)
    # non-dyadic inputs round once each onto the lattice; the masked sum
    # adds nothing beyond that representation step
    assert all(abs(t - Fraction(3, 5)) <= Fraction(3, 1 << 64)
               for t in agg.totals_exact)


def test_aggregate_zeros():
    parties = [series(i + 1, (0,)) for i in range(3)]
    agg = aggregate_sum(parties, 5, seed=2)
    assert agg.totals == (0.0,)


def test_aggregate_matches_demo_column_sums():
    parties = [
        load_series_csv(os.path.join(DATA_DIR, f"bank_{b}.csv"), party_id=i + 1)
        for i, b in enumerate("abc")
    ]
    agg = aggregate_sum(parties, Fraction("655.36"), seed=3)
    for t in range(len(agg.dates)):
        plain = sum(p.values[t] for p in parties)
        assert agg.totals_exact[t] == plain  # bit-exact with the 2^16-cent bound


def test_aggregate_rejects_bad_inputs():
    a = series(1, (Fraction(1), Fraction(2)))
    b = series(2, (Fraction(1),), dates=("2020-000",))
    with pytest.raises(ConfigError):
        aggregate_sum([a, b], 10)  # ragged timestamps
    c = series(2, (Fraction(1), Fraction(99)))
    with pytest.raises(ConfigError):
        aggregate_sum([a, c], 10)  # 99 > bound
    d = series(2, (Fraction(1), Fraction(-1)))
    with pytest.raises(ConfigError):
        aggregate_sum([a, d], 10)  # negative
    with pytest.raises(ConfigError):
        aggregate_sum([a], 10)  # one party


# -- concentration ---------------------------------------------------------------


def test_herfindahl_equal_exposures():
    for m in range(2, 11):
        res = herfindahl([Fraction(37, 10)] * m, 10, seed=m)
        assert abs(res.hhi - 1.0 / m) <= TOL


def test_herfindahl_single_holder():
    res = herfindahl([0, 0, 7, 0], 10, seed=4)
    assert res.hhi == pytest.approx(1.0, abs=TOL)


def test_herfindahl_random_matches_plaintext():
    rng = random.Random(63)
    for trial in range(20):
        exposures = [Fraction(rng.randrange(1, 10_000), 100) for _ in range(10)]
        res = herfindahl(exposures, 100, seed=trial)
        total = sum(exposures)
        plain = float(sum((x / total) ** 2 for x in exposures))
        assert abs(res.hhi - plain) <= TOL
        assert res.total == pytest.approx(float(total), abs=1e-9)


def test_herfindahl_zero_total():
    with pytest.raises(DegenerateInputError):
        herfindahl([0, 0, 0], 10, seed=1)


def test_herfindahl_bounds():
    rng = random.Random(64)
    for trial in range(20):
        m = rng.randrange(2, 12)
        exposures = [Fraction(rng.randrange(1, 1000)) for _ in range(m)]
        res = herfindahl(exposures, 1000, seed=100 + trial)
        assert 1.0 / m - TOL <= res.hhi <= 1.0 + TOL


# -- correlation -----------------------------------------------------------------


def test_correlation_identical_series():
    rng = random.Random(65)
    x = [rng.uniform(0, 100) for _ in range(80)]
    res = secure_correlation(x, x, (1 << 16) + 1, seed=5)
    assert abs(res.rho - 1.0) <= res.error_bound


def test_correlation_negated_series():
    rng = random.Random(66)
    x = [rng.uniform(0, 10) for _ in range(64)]
    y = [-v + 4.5 for v in x]
    res = secure_correlation(x, y, (1 << 16) + 1, seed=6)
    assert abs(res.rho - (-1.0)) <= res.error_bound


def test_correlation_tracks_pearson():
    rng = random.Random(67)
    for trial in range(10):
        n = 100
        x = [rng.gauss(0, 1) for _ in range(n)]
        y = [0.6 * a + rng.gauss(0, 0.8) for a in x]
        res = secure_correlation(x, y, (1 << 16) + 1, seed=trial)
        pearson = float(np.corrcoef(x, y)[0, 1])
        assert abs(res.rho - pearson) <= 1e-3


def test_correlation_backends_agree_exactly():
    rng = random.Random(68)
    x = [rng.uniform(-3, 3) for _ in range(8)]
    y = [rng.uniform(-3, 3) for _ in range(8)]
    res1 = secure_correlation(x, y, 7, backend="sip1", seed=7)
    res3 = secure_correlation(x, y, 7, backend="sip3", seed=7, rsa_bits=256)
    assert res1.code_inner == res3.code_inner
    assert res1.rho == res3.rho


def test_correlation_validation():
    with pytest.raises(ValueError):
        secure_correlation([1, 2, 3], [1, 2, 3], 6, seed=1)  # even q
    with pytest.raises(ConfigError):
        secure_correlation([1, 2], [1, 2, 3], 5, seed=1)  # length mismatch
    with pytest.raises(ConfigError):
        secure_correlation([1, 2, 3], [4, 5, 6], 5, backend="bogus", seed=1)
    with pytest.raises(DegenerateInputError):
        secure_correlation([1, 1, 1], [1, 2, 3], 5, seed=1)


# -- dispersion ------------------------------------------------------------------


def test_mean_of_published_example():
    parties = [series(i + 1, (Fraction(v),))
               for i, v in enumerate(("0.1", "0.2", "0.3"))]
    disp = mean_and_std(parties, 1, seed=8)
    assert disp.means == (pytest.approx(0.2, abs=TOL),)


def test_std_zero_for_equal_inputs():
    parties = [series(i + 1, (Fraction(5), Fraction(5))) for i in range(4)]
    disp = mean_and_std(parties, 10, seed=9)
    assert disp.stds == (0.0, 0.0)


def test_mean_std_match_numpy_oracle():
    rng = random.Random(69)
    values = [Fraction(rng.randrange(0, 1000), 10) for _ in range(6)]
    parties = [series(i + 1, (v,)) for i, v in enumerate(values)]
    disp = mean_and_std(parties, 100, seed=10)
    arr = np.array([float(v) for v in values])
    assert disp.means[0] == pytest.approx(arr.mean(), abs=1e-9)
    assert disp.stds[0] == pytest.approx(arr.std(), abs=1e-9)


def test_share_of_total():
    assert share_of_total(25, 100) == 0.25
    with pytest.raises(DegenerateInputError):
        share_of_total(1, 0)


# -- CSV loading -----------------------------------------------------------------


def test_load_series_csv(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("date,value\n2020-03-31,1.5\n2020-06-30,2\n")
    s = load_series_csv(str(path), party_id=4)
    assert s.party_id == 4
    assert s.dates == ("2020-03-31", "2020-06-30")
    assert s.values == (Fraction(3, 2), Fraction(2))


def test_load_series_csv_names_bad_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("date,value\n2020-03-31,1.5\n2020-06-30,oops\n")
    with pytest.raises(ValueError, match=r"bad\.csv:3"):
        load_series_csv(str(path))
    path.write_text("date,value\n2020-03-31\n")
    with pytest.raises(ValueError, match=r"bad\.csv:2"):
        load_series_csv(str(path))
    path.write_text("")
    with pytest.raises(ValueError, match="no data rows"):
        load_series_csv(str(path))
