"""Command-line entry point.

Subcommands::

    sum            per-timestamp masked aggregate across party CSVs
    herfindahl     concentration index (two masked sums) per timestamp
    correlation    pairwise correlation via a quantized inner product
    inner-product  one inner-product session on two value CSVs
    demo-bhc       three-bank walkthrough on the bundled synthetic data
    views          sample published values over many runs (secrecy report)
    verify         replay and check a recorded transcript

Report commands write delimited output plus a rendered PNG figure next to
it.  Errors leave a machine-readable JSON object on stderr; exit codes are
0 (ok), 2 (config), 3 (protocol abort), 4 (verification failure).

The scale bound passed with ``--bound`` is disclosed to every participant
and is a governance decision: every party's raw value must lie in
[0, bound], and values above it abort the session rather than clamp.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict
from fractions import Fraction

from . import riskstats
from .arith import ModReal, default_field_prime
from .harness import statbench
from .harness.local import run_local
from .harness.sockets import TransportError, run_socket_party
from .harness.transcript import Transcript, verify_transcript
from .protocols import ConfigError, ProtocolAbort, SessionConfig

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PROTOCOL = 3
EXIT_VERIFY = 4

DATA_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "data")


def _seed_from(args) -> int | None:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("MPC_RISKAGG_SEED")
    return int(env) if env else None


def _emit_error(kind: str, message: str, code: int) -> int:
    sys.stderr.write(
        json.dumps({"error": kind, "message": message, "exit_code": code}) + "\n"
    )
    return code


def _write_json(path: str, payload: dict):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_parties(paths) -> list:
    return [
        riskstats.load_series_csv(path, party_id=i + 1)
        for i, path in enumerate(paths)
    ]


def _parse_peers(spec: str) -> dict:
    peers = {}
    for item in spec.split(","):
        pid, _, addr = item.partition("=")
        host, _, port = addr.rpartition(":")
        peers[int(pid)] = (host, int(port))
    return peers


# ---------------------------------------------------------------------------
# sum


def cmd_sum(args) -> int:
    seed = _seed_from(args)
    os.makedirs(args.output, exist_ok=True)
    if args.listen:
        return _socket_sum(args, seed)
    series = _load_parties(args.input)
    agg = riskstats.aggregate_sum(series, Fraction(args.bound), seed=seed, record=True)
    csv_path = os.path.join(args.output, "aggregate.csv")
    with open(csv_path, "w") as fh:
        fh.write("date,aggregate\n")
        for d, v in zip(agg.dates, agg.totals):
            fh.write(f"{d},{v!r}\n")
    if agg.transcripts:
        agg.transcripts[0].save(os.path.join(args.output, "transcript"))
    _write_json(
        os.path.join(args.output, "report.json"),
        {
            "protocol": "secure-sum",
            "m": agg.m,
            "bound": agg.bound,
            "rows": len(agg.dates),
            "seed_mode": "deterministic" if seed is not None else "entropy",
            "seed": seed,
        },
    )
    from .report import save_aggregate_figure

    save_aggregate_figure(
        agg.dates, agg.totals, os.path.join(args.output, "aggregate.png")
    )
    print(f"aggregate over {agg.m} parties, {len(agg.dates)} rows -> {csv_path}")
    return EXIT_OK


def _socket_sum(args, seed) -> int:
    """Host exactly one party of a masked-sum session over TCP."""
    if len(args.input) != 1:
        raise ConfigError("socket mode hosts one party: pass exactly one --input")
    if args.party_id is None or not args.peers:
        raise ConfigError("socket mode needs --party-id and --peers")
    series = riskstats.load_series_csv(args.input[0], party_id=args.party_id)
    peers = _parse_peers(args.peers)
    m = len(peers) + 1
    host, _, port = args.listen.rpartition(":")
    bound = Fraction(args.bound)
    rows = []
    for t, date in enumerate(series.dates):
        config = SessionConfig(
            protocol="secure-sum", m=m, bound=float(bound),
            seed=None if seed is None else seed + t,
            timeout_s=args.timeout,
        )
        value = ModReal.from_real(
            riskstats.scaled_ratio(series.values[t], bound), m
        )
        result, transcript = run_socket_party(
            config, args.party_id, value, int(port), peers, host=host or "127.0.0.1"
        )
        rows.append((date, float(result.to_fraction() * bound)))
        if t == 0:
            transcript.save(os.path.join(args.output, "transcript"))
    csv_path = os.path.join(args.output, "aggregate.csv")
    with open(csv_path, "w") as fh:
        fh.write("date,aggregate\n")
        for d, v in rows:
            fh.write(f"{d},{v!r}\n")
    print(f"party {args.party_id}: {len(rows)} rows -> {csv_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# herfindahl


def cmd_herfindahl(args) -> int:
    seed = _seed_from(args)
    series = _load_parties(args.input)
    dates = riskstats.check_aligned(series)
    os.makedirs(args.output, exist_ok=True)
    rows = []
    for t, date in enumerate(dates):
        exposures = [s.values[t] for s in series]
        res = riskstats.herfindahl(
            exposures, Fraction(args.bound),
            seed=None if seed is None else seed + 2 * t,
        )
        rows.append((date, res.hhi, res.total))
    csv_path = os.path.join(args.output, "herfindahl.csv")
    with open(csv_path, "w") as fh:
        fh.write("date,hhi,total\n")
        for d, h, tot in rows:
            fh.write(f"{d},{h!r},{tot!r}\n")
    _write_json(
        os.path.join(args.output, "report.json"),
        {
            "protocol": "secure-sum (two applications)",
            "m": len(series),
            "bound": float(args.bound),
            "rows": len(rows),
            "note": "the intermediate total is published before the second run",
            "seed_mode": "deterministic" if seed is not None else "entropy",
            "seed": seed,
        },
    )
    from .report import save_hhi_figure

    save_hhi_figure(
        dates, [r[1] for r in rows], len(series),
        os.path.join(args.output, "herfindahl.png"),
    )
    print(f"herfindahl over {len(series)} parties, {len(rows)} rows -> {csv_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# correlation


def cmd_correlation(args) -> int:
    seed = _seed_from(args)
    if len(args.input) != 2:
        raise ConfigError("correlation takes exactly two --input files")
    s1 = riskstats.load_series_csv(args.input[0], party_id=1)
    s2 = riskstats.load_series_csv(args.input[1], party_id=2)
    if s1.dates != s2.dates:
        raise ConfigError("correlation inputs must share their timestamps")
    os.makedirs(args.output, exist_ok=True)
    x = [float(v) for v in s1.values]
    y = [float(v) for v in s2.values]
    res = riskstats.secure_correlation(
        x, y, args.q, backend=args.backend, p=args.p or None, seed=seed
    )
    payload = {
        "protocol": res.backend,
        "rho": res.rho,
        "code_inner_product": res.code_inner,
        "n": res.n,
        "q": res.q,
        "step": res.step,
        "error_bound": res.error_bound,
        "p": args.p or (default_field_prime(res.n, res.q) if res.backend == "sip1" else None),
        "seed_mode": "deterministic" if seed is not None else "entropy",
        "seed": seed,
    }
    _write_json(os.path.join(args.output, "correlation.json"), payload)
    from .report import save_correlation_figure

    save_correlation_figure(
        x, y, res.rho, os.path.join(args.output, "correlation.png")
    )
    print(f"rho = {res.rho:.6f} (+/- {res.error_bound:.2e}) -> {args.output}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# inner product


def cmd_inner_product(args) -> int:
    """Run one inner-product session directly on two value CSVs."""
    seed = _seed_from(args)
    if len(args.input) != 2:
        raise ConfigError("inner-product takes exactly two --input files")
    s1 = riskstats.load_series_csv(args.input[0], party_id=1)
    s2 = riskstats.load_series_csv(args.input[1], party_id=2)
    n = args.n or len(s1.values)
    if len(s1.values) != n or len(s2.values) != n:
        raise ConfigError(f"both inputs must carry {n} values")
    os.makedirs(args.output, exist_ok=True)
    if args.protocol == "sip2":
        config = SessionConfig(
            protocol="sip2", n=n, tau=args.tau or n + 1, seed=seed
        )
        inputs = {1: list(s1.values), 2: list(s2.values)}
    elif args.protocol == "sip1":
        p = args.p or default_field_prime(n, args.q)
        config = SessionConfig(protocol="sip1", n=n, q=args.q, p=p, seed=seed)
        inputs = {1: [int(v) for v in s1.values], 2: [int(v) for v in s2.values]}
    elif args.protocol == "sip3":
        config = SessionConfig(protocol="sip3", n=n, q=args.q, seed=seed)
        inputs = {1: [int(v) for v in s1.values], 2: [int(v) for v in s2.values]}
    else:
        raise ConfigError(f"unknown inner-product protocol {args.protocol!r}")
    result, transcript = run_local(config, inputs)
    transcript.save(os.path.join(args.output, "transcript"))
    value = result.value.to_float() if hasattr(result.value, "to_float") else result.value
    _write_json(
        os.path.join(args.output, "result.json"),
        {
            "protocol": config.protocol,
            "n": config.n,
            "q": config.q or None,
            "p": config.p or None,
            "tau": config.tau or None,
            "value": value,
            "exactness": result.exactness,
            "seed_mode": "deterministic" if seed is not None else "entropy",
            "seed": seed,
        },
    )
    print(f"{config.protocol}: inner product = {value}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# demo


def cmd_demo_bhc(args) -> int:
    seed = _seed_from(args)
    data_dir = args.data_dir or os.path.join(DATA_DIR, "bhc_demo")
    names = ("bank_a", "bank_b", "bank_c")
    paths = [os.path.join(data_dir, f"{n}.csv") for n in names]
    for path in paths:
        if not os.path.exists(path):
            raise ConfigError(f"missing demo input {path}")
    series = _load_parties(paths)
    dates = riskstats.check_aligned(series)
    bound = Fraction(args.bound)
    os.makedirs(args.output, exist_ok=True)

    agg = riskstats.aggregate_sum(series, bound, seed=seed or 20101231, record=True)

    # Pull the exchanged masks and published values out of the per-session
    # views, rescaled back to value units.
    mask_cols = {}
    pub_cols = {f"S{pid}": [] for pid in (1, 2, 3)}
    plain_cols = {}
    scale = float(bound)
    for t in range(len(dates)):
        views = agg.transcripts[t].views
        for i in (1, 2, 3):
            for j in (1, 2, 3):
                if i == j:
                    continue
                key = f"r_{i}_{j}"
                mask_cols.setdefault(key, []).append(
                    views[i]["generated"][f"mask_to_{j}"] / (1 << 64) * scale
                )
            pub_cols[f"S{i}"].append(views[i]["generated"]["partial"] / (1 << 64) * scale)
    for name, s in zip(names, series):
        plain_cols[name] = [float(v) for v in s.values]
    plain_aggregate = [
        float(sum(s.values[t] for s in series)) for t in range(len(dates))
    ]

    # The masked sum is bit-exact on the fixed-point lattice; with a
    # lattice-friendly bound (the default 655.36 = 2^16 cents) the rescaled
    # aggregate also equals the decimal column sum exactly.  For other
    # bounds the input representation contributes at most bound * 2^-60.
    tolerance = bound * Fraction(1, 1 << 60)
    mismatches = [
        t for t in range(len(dates))
        if abs(agg.totals_exact[t] - sum(s.values[t] for s in series)) > tolerance
    ]
    if mismatches:
        raise ProtocolAbort(
            0, 2, f"secure aggregate diverges from plaintext at rows {mismatches[:5]}"
        )
    exact_rows = sum(
        agg.totals_exact[t] == sum(s.values[t] for s in series)
        for t in range(len(dates))
    )

    def write_csv(name, header, columns):
        path = os.path.join(args.output, name)
        with open(path, "w") as fh:
            fh.write("date," + ",".join(header) + "\n")
            for t, d in enumerate(dates):
                fh.write(d + "," + ",".join(repr(c[t]) for c in columns) + "\n")
        return path

    write_csv(
        "panel_a_inputs.csv",
        list(names) + ["aggregate"],
        [plain_cols[n] for n in names] + [plain_aggregate],
    )
    write_csv("panel_b_masks.csv", sorted(mask_cols), [mask_cols[k] for k in sorted(mask_cols)])
    write_csv(
        "panel_c_published.csv",
        ["S1", "S2", "S3", "secure_aggregate"],
        [pub_cols["S1"], pub_cols["S2"], pub_cols["S3"], list(agg.totals)],
    )
    from .report import save_demo_panels

    save_demo_panels(
        dates,
        plain_cols,
        plain_aggregate,
        mask_cols,
        pub_cols,
        list(agg.totals),
        os.path.join(args.output, "demo_panels.png"),
    )
    _write_json(
        os.path.join(args.output, "report.json"),
        {
            "protocol": "secure-sum",
            "m": 3,
            "bound": scale,
            "rows": len(dates),
            "secure_equals_plaintext": True,
            "bit_exact_rows": int(exact_rows),
            "data": "bundled synthetic series (see data README)",
        },
    )
    print(
        f"demo: {len(dates)} quarters, secure aggregate equals plaintext on every row"
        f" ({exact_rows} bit-exact) -> {args.output}"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# views


def cmd_views(args) -> int:
    seed = _seed_from(args)
    if args.protocol != "secure-sum":
        raise ConfigError("the views report currently covers the sum protocol")
    if args.input:
        series = riskstats.load_series_csv(args.input[0])
        inputs = [str(v) for v in series.values]
    else:
        inputs = ["0.1", "0.2", "0.3"]
    if args.m and args.m != len(inputs):
        raise ConfigError(f"--m {args.m} does not match {len(inputs)} input values")
    if args.trials < 1:
        raise ConfigError("--trials must be at least 1")
    os.makedirs(args.output, exist_ok=True)
    report = statbench.uniformity_report(inputs, args.trials, seed=seed)
    csv_path = os.path.join(args.output, "samples.csv")
    report.write_csv(csv_path)
    lines = [asdict(line) for line in report.lines()]
    _write_json(
        os.path.join(args.output, "report.json"),
        {
            "protocol": "secure-sum",
            "m": report.m,
            "trials": report.trials,
            "alpha": report.alpha,
            "all_on_constraint": report.all_on_constraint,
            "tests": lines,
            "passed": report.passed,
            "note": "statistical tests skipped below 30 trials" if args.trials < 30 else "",
            "seed_mode": "deterministic" if seed is not None else "entropy",
            "seed": seed,
        },
    )
    from .report import save_uniformity_figure

    save_uniformity_figure(
        report.samples, report.m, os.path.join(args.output, "views.png")
    )
    for line in report.lines():
        print(f"{line.name}: statistic={line.statistic:.4f} p={line.p_value:.4f} "
              f"{'pass' if line.passed else 'FAIL'}")
    if args.trials < 30:
        print("note: statistical tests skipped (fewer than 30 trials)")
    print(f"{report.trials} samples -> {csv_path}")
    return EXIT_OK if report.passed else _emit_error(
        "UniformityFailure", "published values failed a uniformity test", EXIT_PROTOCOL
    )


# ---------------------------------------------------------------------------
# verify


def cmd_verify(args) -> int:
    transcript = Transcript.load(args.transcript)
    report = verify_transcript(transcript)
    for check in report.checks:
        print(f"{check['check']}: {'pass' if check['ok'] else 'FAIL'}"
              + (f" ({check['detail']})" if check["detail"] else ""))
    if report.ok:
        print("transcript verified")
        return EXIT_OK
    detail = "; ".join(c["check"] for c in report.checks if not c["ok"])
    if report.first_divergence is not None:
        detail += f"; first divergent envelope index {report.first_divergence}"
    return _emit_error("VerificationFailure", detail, EXIT_VERIFY)


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mpc-riskagg",
        description="Privacy-preserving aggregate risk statistics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None,
                       help="deterministic master seed (env MPC_RISKAGG_SEED)")
        p.add_argument("--output", default="out", help="output directory")

    p = sub.add_parser("sum", help="masked aggregate of per-party series")
    common(p)
    p.add_argument("--input", action="append", required=True,
                   help="party CSV (date,value); repeat per party")
    p.add_argument("--bound", required=True,
                   help="disclosed per-party scale bound B (values in [0, B])")
    p.add_argument("--listen", default=None, help="host:port (socket mode)")
    p.add_argument("--peers", default=None,
                   help="socket mode peers: id=host:port,id=host:port")
    p.add_argument("--party-id", type=int, default=None, help="socket mode party id")
    p.add_argument("--timeout", type=float, default=30.0, help="per-round timeout (s)")
    p.set_defaults(func=cmd_sum)

    p = sub.add_parser("herfindahl", help="concentration index per timestamp")
    common(p)
    p.add_argument("--input", action="append", required=True)
    p.add_argument("--bound", required=True)
    p.set_defaults(func=cmd_herfindahl)

    p = sub.add_parser("correlation", help="pairwise correlation of two series")
    common(p)
    p.add_argument("--input", action="append", required=True,
                   help="exactly two party CSVs")
    p.add_argument("--q", type=int, default=(1 << 16) + 1,
                   help="odd quantization level")
    p.add_argument("--p", type=int, default=0, help="field prime override")
    p.add_argument("--backend", choices=("sip1", "sip3"), default="sip1")
    p.set_defaults(func=cmd_correlation)

    p = sub.add_parser("inner-product", help="one inner-product session")
    common(p)
    p.add_argument("--protocol", choices=("sip1", "sip2", "sip3"), required=True)
    p.add_argument("--input", action="append", required=True,
                   help="exactly two value CSVs")
    p.add_argument("--n", type=int, default=0,
                   help="vector length (default: inferred from the files)")
    p.add_argument("--q", type=int, default=16, help="quantization level")
    p.add_argument("--p", type=int, default=0, help="field prime (sip1)")
    p.add_argument("--tau", type=int, default=0,
                   help="mask modulus (sip2; default n + 1)")
    p.set_defaults(func=cmd_inner_product)

    p = sub.add_parser("demo-bhc", help="three-bank masked-sum walkthrough")
    common(p)
    p.add_argument("--data-dir", default=None,
                   help="directory with bank_a/bank_b/bank_c CSVs (default: bundled)")
    p.add_argument("--bound", default="655.36",
                   help="disclosed bound; the default makes cent-valued "
                        "inputs exact on the fixed-point lattice")
    p.set_defaults(func=cmd_demo_bhc)

    p = sub.add_parser("views", help="sample published values; uniformity report")
    common(p)
    p.add_argument("--protocol", default="secure-sum")
    p.add_argument("--m", type=int, default=0)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--input", action="append", default=None,
                   help="optional CSV with one value per party")
    p.set_defaults(func=cmd_views)

    p = sub.add_parser("verify", help="replay and check a transcript directory")
    p.add_argument("transcript")
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, riskstats.DegenerateInputError) as exc:
        return _emit_error(type(exc).__name__, str(exc), EXIT_CONFIG)
    except (ValueError, TypeError, OSError) as exc:
        return _emit_error(type(exc).__name__, str(exc), EXIT_CONFIG)
    except (ProtocolAbort, TransportError) as exc:
        return _emit_error(type(exc).__name__, str(exc), EXIT_PROTOCOL)


if __name__ == "__main__":
    sys.exit(main())
