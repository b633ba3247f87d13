import csv
import datetime as dt
import json
import subprocess
import sys

import numpy as np
import pytest

from acemd import io
from acemd.cli import main
from acemd.core import DuplicateDate, NonPositivePrice, ParseError

from conftest import write_price_csv

T = np.arange(1024, dtype=float)


def read_table(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def column(path, name):
    header, rows = read_table(path)
    i = header.index(name)
    return np.array([float(r[i]) for r in rows])


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture
def tone_csv(tmp_path):
    x = 10 + np.sin(2 * np.pi * T / 16) + np.sin(2 * np.pi * T / 128)
    return write_price_csv(tmp_path / "tones.csv", x)


# -- ingestion ----------------------------------------------------------------


def test_ingest_three_rows(tmp_path):
    s = io.ingest(write_price_csv(tmp_path / "a.csv", [1.0, 2.0, 3.0]))
    assert len(s) == 3
    assert np.allclose(s.values, np.log([1.0, 2.0, 3.0]))
    assert s.dates[0] == dt.date(2016, 1, 4)


def test_ingest_sort_invariant(tmp_path):
    values = np.linspace(1, 2, 30)
    a = io.ingest(write_price_csv(tmp_path / "a.csv", values))
    b = io.ingest(write_price_csv(tmp_path / "b.csv", values, shuffle=np.random.default_rng(0)))
    assert np.array_equal(a.values, b.values)
    assert a.dates == b.dates


def test_ingest_duplicate_date(tmp_path):
    path = tmp_path / "dup.csv"
    path.write_text("date,close\n2020-01-01,1\n2020-01-02,2\n2020-01-02,3\n")
    with pytest.raises(DuplicateDate, match="2020-01-02"):
        io.ingest(path)


def test_ingest_bad_row_reports_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("date,close\n2020-01-01,1\n2020-01-02,abc\n")
    with pytest.raises(ParseError, match="line 3"):
        io.ingest(path)


def test_ingest_nonpositive(tmp_path):
    path = write_price_csv(tmp_path / "z.csv", [1.0, 0.0, 2.0])
    with pytest.raises(NonPositivePrice):
        io.ingest(path)
    assert len(io.ingest(path, log_flag=False)) == 3


def test_custom_columns(tmp_path):
    path = tmp_path / "c.csv"
    path.write_text("when,px,other\n2020-01-02,2,x\n2020-01-01,1,y\n")
    s = io.ingest(path, column="px", date_column="when", log_flag=False)
    assert list(s.values) == [1.0, 2.0]


# -- decompose ----------------------------------------------------------------


def test_decompose_two_tones(tmp_path, tone_csv):
    out = tmp_path / "out"
    assert run("decompose", "--input", tone_csv, "--no-log", "--modes", 2, "--ensemble-size", 20, "--out-dir", out) == 0
    header, rows = read_table(out / "imfs.csv")
    assert header == ["date", "x", "c_1", "c_2", "residual"]
    data = np.array([[float(v) for v in r[1:]] for r in rows])
    x = data[:, 0]
    assert np.max(np.abs(data[:, 1:].sum(axis=1) - x)) <= 1e-8 * np.max(np.abs(x))
    diag = json.loads((out / "diagnostics.json").read_text())
    assert diag["sigma_used"] == 0.2
    assert {"orthogonality_index", "separability", "sift_reports"} <= set(diag)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["inputs"][0]["sha256"] == io.file_digest(tone_csv)
    assert manifest["seed"] == 42


def test_decompose_zero_sigma_matches_emd(tmp_path, tone_csv):
    run("decompose", "--input", tone_csv, "--sigma", 0, "--out-dir", tmp_path / "a")
    run("decompose", "--input", tone_csv, "--method", "emd", "--out-dir", tmp_path / "b")
    assert (tmp_path / "a" / "imfs.csv").read_bytes() == (tmp_path / "b" / "imfs.csv").read_bytes()


def test_decompose_auto_sigma_table(tmp_path, tone_csv):
    out = tmp_path / "out"
    run("decompose", "--input", tone_csv, "--auto-sigma", "--ensemble-size", 5, "--out-dir", out)
    diag = json.loads((out / "diagnostics.json").read_text())
    table = diag["sigma_search"]["table"]
    assert [row["sigma"] for row in table] == [0.05, 0.1, 0.2, 0.3, 0.4, 0.5]
    assert diag["sigma_used"] == diag["sigma_search"]["selected"]


def test_imfs_roundtrip(tmp_path, rng):
    prices = np.exp(5 + 0.02 * rng.standard_normal(600).cumsum())
    path = write_price_csv(tmp_path / "p.csv", prices)
    run("decompose", "--input", path, "--ensemble-size", 4, "--out-dir", tmp_path / "o")
    d = io.read_imfs(tmp_path / "o" / "imfs.csv")
    x = np.log(prices)
    assert np.max(np.abs(d.modes.sum(axis=0) - x)) <= 1e-8 * np.max(np.abs(x))
    assert np.array_equal(d.source.values, x)


# -- filter ----------------------------------------------------------------------


def test_filter_complementary_columns(tmp_path, tone_csv):
    out = tmp_path / "f"
    run("decompose", "--input", tone_csv, "--ensemble-size", 5, "--out-dir", tmp_path / "d")
    n = len(read_table(tmp_path / "d" / "imfs.csv")[0]) - 3
    assert run("filter", "--imfs", tmp_path / "d" / "imfs.csv", "--ml", n, "--mh", 1, "--out-dir", out) == 0
    x = column(out / "filtered.csv", "x")
    total = column(out / "filtered.csv", f"low_pass_{n}") + column(out / "filtered.csv", "high_pass_1")
    assert np.max(np.abs(total - x)) <= 1e-10 * np.max(np.abs(x))
    assert np.allclose(column(out / "filtered.csv", "price"), np.exp(x), rtol=1e-14)


def test_filter_constant_input(tmp_path):
    path = write_price_csv(tmp_path / "flat.csv", np.full(200, 50.0))
    out = tmp_path / "f"
    assert run("filter", "--input", path, "--out-dir", out) == 0
    for name in ("rolling_volatility.csv", "conditional_volatility.csv"):
        header, rows = read_table(out / name)
        assert rows and all(float(v) == 0.0 for r in rows for v in r[1:])
    stats = json.loads((out / "stats.json").read_text())
    assert all(v == 0.0 for v in stats["volatility"].values())


def test_filter_detects_downside_asymmetry(tmp_path):
    r = np.random.default_rng(11).standard_normal(2500)
    ret = np.empty_like(r)
    ret[0] = r[0]
    for t in range(1, r.size):
        ret[t] = r[t] * (np.sqrt(2.0) if ret[t - 1] < 0 else 1.0)
    prices = np.exp(np.concatenate([[4.0], 4.0 + 0.01 * ret.cumsum()]))
    path = write_price_csv(tmp_path / "asym.csv", prices)
    out = tmp_path / "f"
    # All components in the high-pass series, so it equals the raw returns.
    run("filter", "--input", path, "--method", "emd", "--mh", 99, "--epsilon", 0.05, 0.1, "--out-dir", out)
    header, rows = read_table(out / "asymmetry.csv")
    assert len(rows) == 2
    for row in rows:
        assert float(row[2]) > float(row[1])


# -- spectrum --------------------------------------------------------------------


def write_modes(path, modes, residual):
    d0 = dt.date(2020, 1, 1)
    x = modes.sum(axis=0) + residual
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["date", "x"] + [f"c_{j + 1}" for j in range(len(modes))] + ["residual"])
        for t in range(x.size):
            w.writerow([(d0 + dt.timedelta(days=t)).isoformat(), repr(float(x[t]))]
                + [repr(float(v)) for v in modes[:, t]]
                + [repr(float(residual[t]))])


def test_spectrum_exact_power_law(tmp_path):
    cycles = np.array([128, 32, 8, 2])
    freqs = cycles / 1024
    amps = np.sqrt(freqs**-1.2)
    modes = np.array([a * np.cos(2 * np.pi * k * T / 1024) for a, k in zip(amps, cycles)])
    write_modes(tmp_path / "imfs.csv", modes, np.full(1024, 3.0))
    out = tmp_path / "s"
    assert run("spectrum", "--imfs", tmp_path / "imfs.csv", "--out-dir", out) == 0
    law = json.loads((out / "power_law.json").read_text())
    assert law["alpha"] == pytest.approx(1.2, abs=1e-9)
    assert law["r_squared"] == pytest.approx(1.0, abs=1e-12)


def test_spectrum_pure_tone_cluster(tmp_path):
    modes = np.array([np.cos(2 * np.pi * T / 20), 0.5 * np.cos(2 * np.pi * T / 100), 0.3 * np.cos(2 * np.pi * T / 400)])
    write_modes(tmp_path / "imfs.csv", modes, np.zeros(1024))
    out = tmp_path / "s"
    run("spectrum", "--imfs", tmp_path / "imfs.csv", "--plot", "--out-dir", out)
    header, rows = read_table(out / "spectrum_triples.csv")
    t = np.array([int(r[1]) for r in rows])
    mode = np.array([int(r[2]) for r in rows])
    f = np.array([float(r[3]) for r in rows])
    core = (t >= 102) & (t < 922) & (mode == 1)
    assert np.max(np.abs(f[core] * 20 - 1)) < 0.02
    assert (out / "spectrum.svg").read_text().startswith("<?xml")


def test_spectrum_random_walk_power_law(tmp_path, rng):
    prices = np.exp(4 + 0.02 * rng.standard_normal(2048).cumsum())
    path = write_price_csv(tmp_path / "rw.csv", prices)
    out = tmp_path / "s"
    assert run("spectrum", "--input", path, "--ensemble-size", 10, "--out-dir", out) == 0
    law = json.loads((out / "power_law.json").read_text())
    assert 0.5 < law["alpha"] < 1.5
    central = read_table(out / "central.csv")[1]
    assert len(central) == law["modes_used"]


# -- compare ----------------------------------------------------------------------


def test_compare_same_file(tmp_path, tone_csv):
    out = tmp_path / "c"
    assert run("compare", "--input", tone_csv, "--input", tone_csv, "--ensemble-size", 5, "--out-dir", out) == 0
    header, rows = read_table(out / "deviation_matrix.csv")
    assert float(rows[0][2]) == 0.0 and float(rows[1][1]) == 0.0
    assert len(list((out / "pairs").iterdir())) == 1


def test_compare_doubled_clone(tmp_path):
    base = 10 + np.sin(2 * np.pi * T / 6) + np.sin(2 * np.pi * T / 48)
    clone = 10 + np.sin(2 * np.pi * T / 3) + np.sin(2 * np.pi * T / 24)
    a = write_price_csv(tmp_path / "a.csv", base)
    b = write_price_csv(tmp_path / "b.csv", clone)
    out = tmp_path / "c"
    # One mode per tone; the automatic count also keeps tiny edge-split modes.
    run("compare", "--input", a, "--input", b, "--no-log", "--modes", 2, "--ensemble-size", 10, "--out-dir", out)
    summary = json.loads((out / "summary.json").read_text())
    n = summary["modes"]
    d = summary["deviation"]["a"]["b"]
    assert d == pytest.approx(n * np.log(2) ** 2, rel=0.1)


def test_compare_disjoint_dates(tmp_path):
    a = write_price_csv(tmp_path / "a.csv", np.linspace(1, 2, 50))
    b = write_price_csv(tmp_path / "b.csv", np.linspace(1, 2, 50), start=dt.date(2019, 1, 1))
    assert run("compare", "--input", a, "--input", b, "--out-dir", tmp_path / "c") == 11


def test_compare_rolling_outputs(tmp_path, rng):
    paths = []
    for name in ("a", "b"):
        prices = np.exp(4 + 0.02 * rng.standard_normal(700).cumsum())
        paths.append(write_price_csv(tmp_path / f"{name}.csv", prices))
    out = tmp_path / "c"
    code = run(
        "compare", "--input", paths[0], "--input", paths[1], "--ensemble-size", 4,
        "--modes", 4, "--window", 300, "--step", 200, "--out-dir", out,
    )
    assert code == 0
    header, rows = read_table(out / "rolling_alpha.csv")
    assert header == ["date", "a", "b"] and len(rows) == 3
    header, rows = read_table(out / "rolling_deviation.csv")
    assert header == ["date", "b_vs_a"]


# -- process contract ----------------------------------------------------------


def test_streams_and_exit_codes(tmp_path, tone_csv):
    cmd = [sys.executable, "-m", "acemd", "-v", "decompose", "--input", str(tone_csv), "--ensemble-size", "2", "--out-dir", str(tmp_path / "o")]
    ok = subprocess.run(cmd, capture_output=True, text=True)
    assert ok.returncode == 0
    assert ok.stdout == ""
    assert "wrote" in ok.stderr
    dup = tmp_path / "dup.csv"
    dup.write_text("date,close\n2020-01-01,1\n2020-01-01,2\n")
    bad = subprocess.run(
        [sys.executable, "-m", "acemd", "decompose", "--input", str(dup), "--out-dir", str(tmp_path / "x")],
        capture_output=True, text=True,
    )
    assert bad.returncode == DuplicateDate.exit_code
    assert bad.stdout == "" and "DuplicateDate" in bad.stderr


def test_short_input_exit_code(tmp_path):
    path = write_price_csv(tmp_path / "s.csv", [1.0, 2.0, 3.0])
    assert run("decompose", "--input", path, "--out-dir", tmp_path / "o") == 8


def test_reruns_are_bit_identical(tmp_path, rng):
    prices = np.exp(4 + 0.02 * rng.standard_normal(400).cumsum())
    path = write_price_csv(tmp_path / "p.csv", prices)
    for tag, jobs in (("a", 1), ("b", 1), ("c", 2)):
        run("spectrum", "--input", path, "--ensemble-size", 6, "--jobs", jobs, "--out-dir", tmp_path / tag)
    for name in ("spectrum_triples.csv", "central.csv", "power_law.json"):
        ref = (tmp_path / "a" / name).read_bytes()
        assert (tmp_path / "b" / name).read_bytes() == ref
        assert (tmp_path / "c" / name).read_bytes() == ref
