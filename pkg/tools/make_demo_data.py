#!/usr/bin/env python3
"""Regenerate the bundled synthetic three-bank demo series.

The bundled CSVs are synthetic stand-ins: three quarterly loan-book style
series from 1986Q2 through 2010Q4 with plausible growth, cycles, and a
late-2008 dip.  They are generated from a fixed seed and are NOT real
institution data.
"""

import os
import random
from fractions import Fraction

OUT_DIR = os.path.join(
    os.path.dirname(os.path.dirname(os.path.abspath(__file__))),
    "src", "mpc_riskagg", "data", "bhc_demo",
)

QUARTER_ENDS = ("03-31", "06-30", "09-30", "12-31")


def quarter_dates():
    dates = []
    for year in range(1986, 2011):
        for qe in QUARTER_ENDS:
            if year == 1986 and qe == "03-31":
                continue  # series starts 1986Q2
            dates.append(f"{year}-{qe}")
    return dates


def synth_series(rng, start, growth, cycle_amp, crisis_dip):
    dates = quarter_dates()
    values = []
    level = start
    for t, date in enumerate(dates):
        level *= growth * (1 + rng.uniform(-0.012, 0.016))
        seasonal = 1 + cycle_amp * ((t % 8) - 3.5) / 40
        value = level * seasonal
        if date.startswith(("2008-12", "2009")):
            value *= 1 - crisis_dip
        values.append(round(value, 2))
    return dates, values


def main():
    rng = random.Random(19861231)
    banks = {
        "bank_a": synth_series(rng, 21.0, 1.0285, 0.05, 0.06),
        "bank_b": synth_series(rng, 14.5, 1.0315, 0.04, 0.09),
        "bank_c": synth_series(rng, 9.0, 1.0345, 0.06, 0.04),
    }
    os.makedirs(OUT_DIR, exist_ok=True)
    for name, (dates, values) in banks.items():
        path = os.path.join(OUT_DIR, f"{name}.csv")
        with open(path, "w") as fh:
            fh.write("date,value\n")
            for d, v in zip(dates, values):
                fh.write(f"{d},{v}\n")
        print(f"wrote {path} ({len(dates)} quarters, max {max(values):.2f})")
    peak = max(
        sum(Fraction(str(v)) for v in (banks[b][1][t] for b in banks))
        for t in range(len(banks["bank_a"][1]))
    )
    print(f"peak aggregate {float(peak):.2f}; suggested bound: 600")


if __name__ == "__main__":
    main()
