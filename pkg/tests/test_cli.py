import json
import os
import random

import pytest

from mpc_riskagg.cli import main

pytestmark = pytest.mark.usefixtures("in_tmp_dir")


@pytest.fixture
def in_tmp_dir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("MPC_RISKAGG_SEED", raising=False)


def write_party_csvs(values=("0.1", "0.2", "0.3"), rows=2):
    paths = []
    for i, v in enumerate(values):
        path = f"p{i + 1}.csv"
        with open(path, "w") as fh:
            fh.write("date,value\n")
            for t in range(rows):
                fh.write(f"2020-{t:03d},{v}\n")
        paths.append(path)
    return paths


def run(argv):
    return main(argv)


def test_sum_command_golden(capsys):
    paths = write_party_csvs()
    args = ["sum", "--bound", "1", "--seed", "11", "--output", "out"]
    for p in paths:
        args += ["--input", p]
    assert run(args) == 0
    rows = open("out/aggregate.csv").read().splitlines()
    assert rows[0] == "date,aggregate"
    assert rows[1] == "2020-000,0.6"
    assert rows[2] == "2020-001,0.6"
    assert os.path.exists("out/aggregate.png")
    report = json.load(open("out/report.json"))
    assert report["m"] == 3 and report["seed_mode"] == "deterministic"


def test_sum_then_verify_roundtrip():
    paths = write_party_csvs(rows=1)
    args = ["sum", "--bound", "1", "--seed", "12", "--output", "out"]
    for p in paths:
        args += ["--input", p]
    assert run(args) == 0
    assert run(["verify", "out/transcript"]) == 0


def test_verify_fails_on_tamper(capsys):
    paths = write_party_csvs(rows=1)
    args = ["sum", "--bound", "1", "--seed", "13", "--output", "out"]
    for p in paths:
        args += ["--input", p]
    assert run(args) == 0
    blob = bytearray(open("out/transcript/envelopes.bin", "rb").read())
    blob[45] ^= 0x20
    open("out/transcript/envelopes.bin", "wb").write(bytes(blob))
    capsys.readouterr()
    assert run(["verify", "out/transcript"]) == 4
    err = json.loads(capsys.readouterr().err)
    assert err["exit_code"] == 4
    assert "divergent envelope" in err["message"]


def test_herfindahl_equal_exposures(capsys):
    paths = write_party_csvs(values=("2.5", "2.5", "2.5", "2.5"), rows=1)
    args = ["herfindahl", "--bound", "10", "--seed", "14", "--output", "hhi"]
    for p in paths:
        args += ["--input", p]
    assert run(args) == 0
    rows = open("hhi/herfindahl.csv").read().splitlines()
    assert rows[1].split(",")[1] == "0.25"
    assert os.path.exists("hhi/herfindahl.png")


def test_correlation_identical_files(capsys):
    rng = random.Random(71)
    with open("x.csv", "w") as fh:
        fh.write("date,value\n")
        for t in range(50):
            fh.write(f"2020-{t:03d},{rng.uniform(1, 9):.4f}\n")
    assert run([
        "correlation", "--input", "x.csv", "--input", "x.csv",
        "--seed", "15", "--output", "corr",
    ]) == 0
    payload = json.load(open("corr/correlation.json"))
    assert abs(payload["rho"] - 1.0) <= payload["error_bound"]
    assert os.path.exists("corr/correlation.png")


def test_views_report_csv_and_determinism(capsys):
    base = ["views", "--trials", "200", "--seed", "16"]
    assert run(base + ["--output", "v1"]) == 0
    assert run(base + ["--output", "v2"]) == 0
    a = open("v1/samples.csv", "rb").read()
    b = open("v2/samples.csv", "rb").read()
    assert a == b
    assert a.splitlines()[0] == b"S1,S2,S3"
    assert len(a.splitlines()) == 201
    assert os.path.exists("v1/views.png")
    report = json.load(open("v1/report.json"))
    assert report["all_on_constraint"] is True


def test_views_single_trial_skips_tests(capsys):
    assert run(["views", "--trials", "1", "--seed", "17", "--output", "v"]) == 0
    out = capsys.readouterr().out
    assert "skipped" in out
    report = json.load(open("v/report.json"))
    # only the exactness check runs; statistical lines need >= 30 trials
    assert [t["name"] for t in report["tests"]] == ["constraint-plane"]


def test_demo_bhc_bundled_data(capsys):
    assert run(["demo-bhc", "--seed", "18", "--output", "demo"]) == 0
    out = capsys.readouterr().out
    assert "99 bit-exact" in out
    for name in ("panel_a_inputs.csv", "panel_b_masks.csv",
                 "panel_c_published.csv", "demo_panels.png", "report.json"):
        assert os.path.exists(os.path.join("demo", name)), name
    a_rows = open("demo/panel_a_inputs.csv").read().splitlines()
    c_rows = open("demo/panel_c_published.csv").read().splitlines()
    assert len(a_rows) == len(c_rows) == 100
    # the recovered aggregate equals the plaintext aggregate on every row
    for ra, rc in zip(a_rows[1:], c_rows[1:]):
        assert float(ra.rsplit(",", 1)[1]) == float(rc.rsplit(",", 1)[1])


def test_demo_bhc_missing_files(capsys):
    os.makedirs("empty", exist_ok=True)
    assert run(["demo-bhc", "--data-dir", "empty", "--output", "d"]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "ConfigError"


def test_demo_bhc_single_quarter(capsys):
    os.makedirs("one", exist_ok=True)
    for name, v in (("bank_a", "1.25"), ("bank_b", "2.5"), ("bank_c", "0.75")):
        with open(os.path.join("one", f"{name}.csv"), "w") as fh:
            fh.write(f"date,value\n2009-12-31,{v}\n")
    assert run(["demo-bhc", "--data-dir", "one", "--bound", "10.24",
                "--seed", "21", "--output", "dq"]) == 0
    for name in ("panel_a_inputs.csv", "panel_b_masks.csv",
                 "panel_c_published.csv"):
        rows = open(os.path.join("dq", name)).read().splitlines()
        assert len(rows) == 2, name  # header + the single quarter
    last = open("dq/panel_c_published.csv").read().splitlines()[1]
    assert float(last.rsplit(",", 1)[1]) == 4.5


def test_inner_product_command(capsys):
    with open("ax.csv", "w") as fh:
        fh.write("date,value\n1,1\n2,2\n")
    with open("ay.csv", "w") as fh:
        fh.write("date,value\n1,3\n2,4\n")
    assert run(["inner-product", "--protocol", "sip1", "--input", "ax.csv",
                "--input", "ay.csv", "--q", "5", "--seed", "22",
                "--output", "ip"]) == 0
    payload = json.load(open("ip/result.json"))
    assert payload["value"] == 11
    assert run(["verify", "ip/transcript"]) == 0


def test_config_errors_exit_2(capsys):
    paths = write_party_csvs(rows=1)
    # bound violation: values above the disclosed bound
    args = ["sum", "--bound", "0.05", "--seed", "19", "--output", "o"]
    for p in paths:
        args += ["--input", p]
    assert run(args) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["exit_code"] == 2


def test_parse_error_names_line(capsys):
    with open("bad.csv", "w") as fh:
        fh.write("date,value\n2020-001,abc\n")
    assert run(["sum", "--input", "bad.csv", "--input", "bad.csv",
                "--bound", "1", "--output", "o"]) == 2
    err = json.loads(capsys.readouterr().err)
    assert "bad.csv:2" in err["message"]


def test_socket_deployment_three_processes():
    import subprocess
    import sys

    from mpc_riskagg.harness.sockets import _free_ports

    write_party_csvs(rows=1)
    ports = _free_ports(3)
    addr = {i + 1: f"127.0.0.1:{ports[i]}" for i in range(3)}
    procs = []
    for pid in (1, 2, 3):
        peers = ",".join(f"{o}={addr[o]}" for o in (1, 2, 3) if o != pid)
        procs.append(subprocess.Popen(
            [sys.executable, "-m", "mpc_riskagg.cli", "sum",
             "--party-id", str(pid), "--listen", addr[pid],
             "--peers", peers, "--input", f"p{pid}.csv",
             "--bound", "1", "--seed", "23", "--timeout", "15",
             "--output", f"host{pid}"],
            stdout=subprocess.PIPE, stderr=subprocess.PIPE,
        ))
    for proc in procs:
        out, err = proc.communicate(timeout=60)
        assert proc.returncode == 0, err.decode()
    rows = [open(f"host{pid}/aggregate.csv").read() for pid in (1, 2, 3)]
    assert rows[0] == rows[1] == rows[2]
    assert rows[0].splitlines()[1] == "2020-000,0.6"


def test_seed_env_mirror(capsys, monkeypatch):
    paths = write_party_csvs(rows=1)
    monkeypatch.setenv("MPC_RISKAGG_SEED", "20")
    args = ["sum", "--bound", "1", "--output", "o1"]
    for p in paths:
        args += ["--input", p]
    assert run(args) == 0
    report = json.load(open("o1/report.json"))
    assert report["seed"] == 20 and report["seed_mode"] == "deterministic"
