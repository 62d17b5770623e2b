import json
import struct
import subprocess
import sys

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from fdsketch.cli import main
from fdsketch.io import (
    RowStreamError,
    SketchFormatError,
    iter_rows,
    load_sketch,
    read_rows,
    save_sketch,
    sniff_format,
    write_rows,
)
from fdsketch.sketch import FdSketch, error_report

TRICKY = np.array(
    [
        [0.1, -0.0, 1e-300],
        [2.0 / 3.0, 5e-324, -123456789.123456789],
        [1.7976931348623157e308, -2.2250738585072014e-308, 3.141592653589793],
    ]
)


# -- row stream files ---------------------------------------------------------


def test_csv_round_trip_is_bit_exact(tmp_path):
    path = str(tmp_path / "rows.csv")
    write_rows(path, TRICKY, "csv")
    back = read_rows(path)
    assert back.tobytes() == TRICKY.tobytes()


def test_binary_round_trip_is_bit_exact(tmp_path):
    path = str(tmp_path / "rows.bin")
    write_rows(path, TRICKY, "binary")
    back = read_rows(path)
    assert back.tobytes() == TRICKY.tobytes()


def test_sniff_format(tmp_path):
    c = str(tmp_path / "a.csv")
    b = str(tmp_path / "a.bin")
    write_rows(c, np.eye(2), "csv")
    write_rows(b, np.eye(2), "binary")
    assert sniff_format(c) == "csv"
    assert sniff_format(b) == "binary"


def test_csv_skips_blank_lines(tmp_path):
    path = str(tmp_path / "rows.csv")
    path_obj = tmp_path / "rows.csv"
    path_obj.write_text("1.0,2.0\n\n\n3.0,4.0\n")
    assert_array_equal(read_rows(path), [[1.0, 2.0], [3.0, 4.0]])


def test_csv_reports_line_numbers(tmp_path):
    path_obj = tmp_path / "rows.csv"
    path_obj.write_text("1.0,2.0\n\n3.0\n")
    with pytest.raises(RowStreamError, match=r"rows\.csv:3: expected 2 values"):
        read_rows(str(path_obj))
    path_obj.write_text("1.0,2.0\n3.0,oops\n")
    with pytest.raises(RowStreamError, match=r":2: bad number"):
        read_rows(str(path_obj))
    path_obj.write_text("1.0,2.0\n3.0,nan\n")
    with pytest.raises(RowStreamError, match=r":2: non-finite"):
        read_rows(str(path_obj))
    path_obj.write_text("inf,2.0\n")
    with pytest.raises(RowStreamError, match=r":1: non-finite"):
        read_rows(str(path_obj))


def test_binary_error_cases(tmp_path):
    path_obj = tmp_path / "rows.bin"
    path_obj.write_bytes(b"FDRW" + struct.pack("<Q", 2) + b"\x00" * 12)
    with pytest.raises(RowStreamError, match="truncated row"):
        read_rows(str(path_obj), "binary")
    path_obj.write_bytes(b"NOPE" + struct.pack("<Q", 2))
    with pytest.raises(RowStreamError, match="bad magic"):
        read_rows(str(path_obj), "binary")
    path_obj.write_bytes(b"FDRW" + struct.pack("<Q", 0))
    with pytest.raises(RowStreamError, match="bad dimension"):
        read_rows(str(path_obj), "binary")
    path_obj.write_bytes(b"FD")
    with pytest.raises(RowStreamError, match="truncated header"):
        read_rows(str(path_obj), "binary")


def test_empty_streams(tmp_path):
    c = tmp_path / "empty.csv"
    c.write_text("")
    assert read_rows(str(c)).shape == (0, 0)
    b = str(tmp_path / "empty.bin")
    write_rows(b, np.zeros((0, 4)), "binary")
    assert read_rows(str(b)).shape == (0, 4)


def test_write_rows_validation(tmp_path):
    with pytest.raises(ValueError, match="2-dimensional"):
        write_rows(str(tmp_path / "x.csv"), np.ones(3))
    with pytest.raises(ValueError, match="unknown format"):
        write_rows(str(tmp_path / "x.csv"), np.ones((1, 3)), "parquet")
    with pytest.raises(ValueError, match="unknown format"):
        iter_rows(str(tmp_path / "x.csv"), "parquet")


# -- sketch files -------------------------------------------------------------


def _stream_sketch(rows, **kw):
    kw.setdefault("k", 2)
    kw.setdefault("eps", 0.5)
    sk = FdSketch(d=rows.shape[1], **kw)
    sk.extend(rows)
    return sk


def test_sketch_round_trip_preserves_every_bit(tmp_path):
    rng = np.random.default_rng(0)
    rows = rng.normal(size=(45, 9))
    sk = _stream_sketch(rows)
    path = str(tmp_path / "a.fdsk")
    save_sketch(path, sk)
    back = load_sketch(path)
    assert back.params == sk.params
    assert back.rows_seen == sk.rows_seen
    assert back.delta_sum == sk.delta_sum
    assert back.input_frob_sq == sk.input_frob_sq
    assert_array_equal(back._buf, sk._buf)
    assert back.mass_bracket_rows == sk.mass_bracket_rows
    assert error_report(rows, back).all_ok


def test_sketch_resave_is_byte_identical(tmp_path):
    rng = np.random.default_rng(1)
    sk = _stream_sketch(rng.normal(size=(30, 7)), batch_factor=2.0)
    p1 = tmp_path / "a.fdsk"
    p2 = tmp_path / "b.fdsk"
    save_sketch(str(p1), sk)
    save_sketch(str(p2), load_sketch(str(p1)))
    assert p1.read_bytes() == p2.read_bytes()


def test_midfill_batched_sketch_survives_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    rows = rng.normal(size=(13, 6))
    sk = _stream_sketch(rows, k=1, eps=1.0, batch_factor=3.0)
    assert sk._pending > 0
    path = str(tmp_path / "mid.fdsk")
    save_sketch(path, sk)
    back = load_sketch(path)
    assert_array_equal(back.query(), sk.copy().query())
    assert error_report(rows, back).all_ok


def test_mixed_merge_bracket_survives_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    rows = rng.normal(size=(40, 6))
    s1 = _stream_sketch(rows[:20], k=1, eps=0.5)
    s2 = _stream_sketch(rows[20:], k=1, eps=0.5, batch_factor=3.0)
    merged = s1.merge(s2)
    path = str(tmp_path / "m.fdsk")
    save_sketch(path, merged)
    back = load_sketch(path)
    assert back.mass_bracket_rows == s2.buffer_rows
    assert error_report(rows, back).all_ok


def test_empty_sketch_round_trip(tmp_path):
    sk = FdSketch(k=1, eps=0.5, d=4)
    path = str(tmp_path / "empty.fdsk")
    save_sketch(path, sk)
    back = load_sketch(path)
    assert back.rows_seen == 0
    assert back.input_frob_sq == 0.0
    assert_array_equal(back.query(), np.zeros((sk.ell, 4)))


def test_sketch_file_corruption_detected(tmp_path):
    path_obj = tmp_path / "bad.fdsk"
    header = struct.Struct("<4sH5Q3d")
    good = header.pack(b"FDSK", 1, 1, 3, 3, 2, 5, 0.5, 0.0, 10.0)
    path_obj.write_bytes(b"XXXX" + good[4:] + b"\x00" * 48)
    with pytest.raises(SketchFormatError, match="bad magic"):
        load_sketch(str(path_obj))
    path_obj.write_bytes(header.pack(b"FDSK", 9, 1, 3, 3, 2, 5, 0.5, 0.0, 10.0) + b"\x00" * 48)
    with pytest.raises(SketchFormatError, match="unsupported version"):
        load_sketch(str(path_obj))
    path_obj.write_bytes(good + b"\x00" * 40)
    with pytest.raises(SketchFormatError, match="expected 48"):
        load_sketch(str(path_obj))
    path_obj.write_bytes(header.pack(b"FDSK", 1, 3, 3, 3, 2, 5, 0.5, 0.0, 10.0) + b"\x00" * 48)
    with pytest.raises(SketchFormatError, match="inconsistent geometry"):
        load_sketch(str(path_obj))
    path_obj.write_bytes(good[:10])
    with pytest.raises(SketchFormatError, match="truncated header"):
        load_sketch(str(path_obj))


# -- command line -------------------------------------------------------------


def _run(capsys, *argv):
    rc = main(list(argv))
    out = capsys.readouterr()
    return rc, out.out, out.err


def test_cli_sketch_then_verify(tmp_path, capsys):
    rng = np.random.default_rng(4)
    rows = rng.normal(size=(50, 8))
    stream = str(tmp_path / "rows.csv")
    out = str(tmp_path / "s.fdsk")
    write_rows(stream, rows, "csv")
    rc, text, _ = _run(capsys, "sketch", "--input", stream, "--k", "2",
                       "--eps", "0.5", "--out", out)
    assert rc == 0
    info = json.loads(text)
    assert info["rows"] == 50 and info["ell"] == 6
    rc, text, err = _run(capsys, "verify", "--input", stream, "--sketch", out)
    assert rc == 0
    report = json.loads(text)
    assert report["all_pass"] is True
    assert set(report["bounds"]) == {
        "eq1_upper", "eq1_lower", "lemma4_identity", "lemma5", "lemma6",
        "lemma7_low", "lemma7_high", "lemma8_low", "lemma8_high",
    }
    assert err == ""


def test_cli_csv_and_binary_streams_give_identical_sketch_files(tmp_path, capsys):
    rng = np.random.default_rng(5)
    rows = rng.normal(size=(33, 5))
    csv_in = str(tmp_path / "rows.csv")
    bin_in = str(tmp_path / "rows.bin")
    write_rows(csv_in, rows, "csv")
    write_rows(bin_in, rows, "binary")
    out_c = tmp_path / "c.fdsk"
    out_b = tmp_path / "b.fdsk"
    for src, dst in ((csv_in, out_c), (bin_in, out_b)):
        rc, _, _ = _run(capsys, "sketch", "--input", src, "--k", "1",
                        "--eps", "0.5", "--out", str(dst))
        assert rc == 0
    assert out_c.read_bytes() == out_b.read_bytes()


def test_cli_merge_and_verify_combined(tmp_path, capsys):
    rng = np.random.default_rng(6)
    rows = rng.normal(size=(60, 6))
    files = {}
    for name, chunk in (("one", rows[:30]), ("two", rows[30:]), ("all", rows)):
        p = str(tmp_path / f"{name}.csv")
        write_rows(p, chunk, "csv")
        files[name] = p
    sk1 = str(tmp_path / "one.fdsk")
    sk2 = str(tmp_path / "two.fdsk")
    merged = str(tmp_path / "merged.fdsk")
    for src, dst in ((files["one"], sk1), (files["two"], sk2)):
        assert _run(capsys, "sketch", "--input", src, "--k", "2", "--eps", "0.5",
                    "--out", dst)[0] == 0
    rc, text, _ = _run(capsys, "merge", sk1, sk2, "--out", merged)
    assert rc == 0
    assert json.loads(text)["rows"] == 60
    rc, text, _ = _run(capsys, "verify", "--input", files["all"], "--sketch", merged)
    assert rc == 0
    assert json.loads(text)["all_pass"] is True


def test_cli_merge_rejects_mismatched_sketches(tmp_path, capsys):
    rng = np.random.default_rng(7)
    rows = rng.normal(size=(20, 8))
    stream = str(tmp_path / "rows.csv")
    write_rows(stream, rows, "csv")
    a = str(tmp_path / "a.fdsk")
    b = str(tmp_path / "b.fdsk")
    _run(capsys, "sketch", "--input", stream, "--k", "1", "--eps", "0.5", "--out", a)
    _run(capsys, "sketch", "--input", stream, "--k", "2", "--eps", "0.5", "--out", b)
    rc, _, err = _run(capsys, "merge", a, b, "--out", str(tmp_path / "m.fdsk"))
    assert rc == 2
    assert "cannot merge" in err


def test_cli_verify_flags_a_doctored_sketch(tmp_path, capsys):
    rng = np.random.default_rng(8)
    rows = rng.normal(size=(40, 5))
    stream = str(tmp_path / "rows.csv")
    out = str(tmp_path / "s.fdsk")
    write_rows(stream, rows, "csv")
    _run(capsys, "sketch", "--input", stream, "--k", "1", "--eps", "0.5", "--out", out)
    sk = load_sketch(out)
    sk._buf *= 5.0
    save_sketch(out, sk)
    rc, text, _ = _run(capsys, "verify", "--input", stream, "--sketch", out)
    assert rc == 1
    report = json.loads(text)
    assert report["all_pass"] is False
    assert report["bounds"]["eq1_lower"] is False
    assert report["bounds"]["lemma4_identity"] is False


def test_cli_verify_warns_on_row_count_mismatch(tmp_path, capsys):
    rng = np.random.default_rng(9)
    rows = rng.normal(size=(25, 4))
    stream = str(tmp_path / "rows.csv")
    short = str(tmp_path / "short.csv")
    out = str(tmp_path / "s.fdsk")
    write_rows(stream, rows, "csv")
    write_rows(short, rows[:-3], "csv")
    _run(capsys, "sketch", "--input", stream, "--k", "1", "--eps", "0.5", "--out", out)
    rc, _, err = _run(capsys, "verify", "--input", short, "--sketch", out)
    assert "warning: stream has 22 rows" in err
    assert rc in (0, 1)


def test_cli_malformed_csv_exits_two(tmp_path, capsys):
    stream = tmp_path / "rows.csv"
    stream.write_text("1.0,2.0\n3.0\n")
    rc, _, err = _run(capsys, "sketch", "--input", str(stream), "--k", "1",
                      "--eps", "1.0", "--out", str(tmp_path / "s.fdsk"))
    assert rc == 2
    assert ":2:" in err


def test_cli_missing_file_exits_three(tmp_path, capsys):
    rc, _, err = _run(capsys, "sketch", "--input", str(tmp_path / "nope.csv"),
                      "--k", "1", "--eps", "1.0", "--out", str(tmp_path / "s.fdsk"))
    assert rc == 3
    assert "io error" in err


@pytest.mark.filterwarnings("ignore:sketch rows")
def test_cli_empty_csv_stream_makes_an_empty_sketch(tmp_path, capsys):
    stream = tmp_path / "empty.csv"
    stream.write_text("")
    out = str(tmp_path / "s.fdsk")
    rc, text, _ = _run(capsys, "sketch", "--input", str(stream), "--k", "1",
                       "--eps", "1.0", "--out", out)
    assert rc == 0
    info = json.loads(text)
    assert info["rows"] == 0 and info["d"] == 1
    assert load_sketch(out).rows_seen == 0


def test_cli_hh_with_certificate(tmp_path, capsys):
    stream = tmp_path / "items.txt"
    stream.write_text("".join(f"{x}\n" for x in [1, 2, 1, 3, 1, 1, 2]))
    rc, text, _ = _run(capsys, "hh", "--input", str(stream), "--k", "2",
                       "--eps", "0.5")
    assert rc == 0
    payload = json.loads(text)
    assert payload["ell"] == 6
    assert payload["n"] == 7
    assert payload["items"][0] == {"item": 1, "estimate": 4}
    cert = payload["certificate"]
    assert cert["decrement_bound_ok"] and cert["topk_mass_bound_ok"]


def test_cli_hh_parameter_errors(tmp_path, capsys):
    stream = tmp_path / "items.txt"
    stream.write_text("1\n2\n")
    rc, _, err = _run(capsys, "hh", "--input", str(stream))
    assert rc == 2
    assert "need --ell" in err
    stream.write_text("1\npotato\n")
    rc, _, err = _run(capsys, "hh", "--input", str(stream), "--ell", "3")
    assert rc == 2
    assert "bad item id" in err


def test_cli_adversary_writes_stream_and_ratios(tmp_path, capsys):
    out = str(tmp_path / "adv.csv")
    rc, text, _ = _run(capsys, "adversary", "--k", "1", "--d", "2", "--n", "100",
                       "--out", out)
    assert rc == 0
    payload = json.loads(text)
    assert payload["incremental_pca_ratio"] >= 10.0
    assert payload["sketch_ratio"] <= 2.0 + 1e-9
    rows = read_rows(out)
    assert rows.shape == (100, 2)
    assert rows[0, 0] == 10.0 and rows[-1, 1] == 5.0


def test_cli_no_sparse_fd_scan(tmp_path, capsys):
    rc, text, _ = _run(capsys, "no-sparse-fd", "--ell", "4", "--c", "1.0",
                       "--step", "0.05")
    assert rc == 0
    payload = json.loads(text)
    assert payload["grid"]["empty"] is True
    assert payload["grid"]["witness"] is None
    assert payload["spot_checks"]["mismatches"] == 0
    assert abs(payload["residual_min"] - 1.25) < 1e-9
    rc, text, _ = _run(capsys, "no-sparse-fd", "--ell", "4", "--c", "0.5",
                       "--step", "0.5")
    assert rc == 0
    payload = json.loads(text)
    assert payload["grid"]["empty"] is False
    assert payload["grid"]["witness"] is not None


def test_cli_compact_json_flag(tmp_path, capsys):
    stream = str(tmp_path / "rows.csv")
    write_rows(stream, np.eye(3), "csv")
    out = str(tmp_path / "s.fdsk")
    rc, text, _ = _run(capsys, "sketch", "--input", stream, "--k", "1",
                       "--eps", "0.5", "--out", out, "--json")
    assert rc == 0
    assert text.count("\n") == 1
    json.loads(text)


def test_module_entry_point_runs(tmp_path):
    stream = tmp_path / "rows.csv"
    write_rows(str(stream), np.eye(3), "csv")
    out = tmp_path / "s.fdsk"
    proc = subprocess.run(
        [sys.executable, "-m", "fdsketch", "sketch", "--input", str(stream),
         "--k", "1", "--eps", "0.5", "--out", str(out), "--json"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["rows"] == 3
    assert out.exists()
