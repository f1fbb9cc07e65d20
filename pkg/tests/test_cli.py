import json

import numpy as np
import pytest

from bfkit.cli import SIM_CSV_COLUMNS, main
from bfkit.codes import load_code


def run_cli(*argv):
    return main([str(a) for a in argv])


# -- gen ------------------------------------------------------------------------


def test_gen_large_code_header(tmp_path, capsys):
    out = tmp_path / "qc2003.code"
    assert run_cli("gen", "--r", 2003, "--v", 13, "--seed", 1, "--out", out) == 0
    assert out.read_text().splitlines()[0] == "4006 2003 13"
    assert capsys.readouterr().out.strip() == "n=4006 r=2003 v=13 w=26"
    manifest = json.loads((tmp_path / "qc2003.code.manifest.json").read_text())
    assert manifest["subcommand"] == "gen" and manifest["parameters"]["r"] == 2003


def test_gen_weight_one_shifted_identity(tmp_path):
    out = tmp_path / "tiny.code"
    assert run_cli("gen", "--r", 5, "--v", 1, "--seed", 0, "--out", out) == 0
    H = load_code(out)
    assert (H.row_weights == 2).all()


def test_gen_round_trips_identically(tmp_path):
    from bfkit.codes import save_code

    for extra in ([], ["--qc-compact"]):
        out = tmp_path / f"code{len(extra)}"
        assert run_cli("gen", "--r", 31, "--v", 4, "--seed", 9, "--out", out, *extra) == 0
        reloaded = load_code(out)
        again = tmp_path / f"again{len(extra)}"
        save_code(reloaded, again, qc_compact=bool(extra))
        assert out.read_bytes() == again.read_bytes()


def test_gen_rejects_bad_parameters(tmp_path, capsys):
    assert run_cli("gen", "--r", 5, "--v", 9, "--seed", 0, "--out", tmp_path / "x") == 1
    assert "error" in capsys.readouterr().err


# -- predict ---------------------------------------------------------------------


def test_predict_zero_weight_row(capsys):
    assert run_cli("predict", "--r", 13, "--v", 3, "--t-min", 0, "--t-max", 0) == 0
    header, row = capsys.readouterr().out.strip().splitlines()
    assert header.startswith("n,r,v,w,t,")
    fields = row.split(",")
    assert fields[4] == "0" and float(fields[6]) == 0.0


def test_predict_sweep_curve_shapes(capsys):
    # monotone in t for each v; ordered across v in the low-t band (the
    # curves genuinely cross once t grows, denser rows collect more errors)
    curves = {}
    for v in (9, 11, 13, 15, 17):
        assert run_cli("predict", "--r", 2003, "--v", v, "--t-min", 20, "--t-max", 40) == 0
        rows = capsys.readouterr().out.strip().splitlines()[1:]
        curves[v] = [float(r.split(",")[6]) for r in rows]
    for v, dfrs in curves.items():
        assert all(b >= a for a, b in zip(dfrs, dfrs[1:])), f"not monotone for v={v}"
    ordered_band = slice(0, 11)  # t = 20..30
    for lo, hi in zip((9, 11, 13, 15), (11, 13, 15, 17)):
        assert all(
            h <= l for l, h in zip(curves[lo][ordered_band], curves[hi][ordered_band])
        )


def test_predict_exact_agrees_to_three_digits(capsys):
    assert run_cli("predict", "--r", 250, "--v", 9, "--t-min", 6, "--t-max", 10) == 0
    fast = [float(r.split(",")[6]) for r in capsys.readouterr().out.strip().splitlines()[1:]]
    assert run_cli("predict", "--r", 250, "--v", 9, "--t-min", 6, "--t-max", 10, "--exact") == 0
    exact = [float(r.split(",")[6]) for r in capsys.readouterr().out.strip().splitlines()[1:]]
    for a, b in zip(fast, exact):
        assert a == pytest.approx(b, rel=5e-4)


def test_predict_rejects_irregular_profile(capsys):
    assert run_cli("predict", "--r", 2003, "--v", 13, "--w", 25, "--t-min", 1, "--t-max", 2) == 1
    assert "regular" in capsys.readouterr().err


def test_predict_json_payload(capsys):
    assert run_cli("predict", "--r", 26, "--v", 3, "--t-min", 2, "--t-max", 2, "--json") == 0
    obj = json.loads(capsys.readouterr().out.strip())
    assert obj["t"] == 2 and len(obj["q"]) == 2 and "log2_dfr" in obj


# -- simulate --------------------------------------------------------------------


def test_simulate_zero_weight(tmp_path):
    out = tmp_path / "sim.csv"
    code = run_cli(
        "simulate", "--r", 13, "--v", 3, "--t", 0,
        "--max-trials", 100, "--seed", 4, "--out", out,
    )
    assert code == 0
    header, row = out.read_text().strip().splitlines()
    assert header == SIM_CSV_COLUMNS
    fields = dict(zip(header.split(","), row.split(",")))
    assert fields["failures"] == "0" and fields["trials"] == "100"
    assert (tmp_path / "sim.csv.manifest.json").exists()


def test_simulate_workers_produce_identical_csv(tmp_path):
    rows = []
    for k, workers in enumerate((1, 2)):
        out = tmp_path / f"sim{k}.csv"
        code = run_cli(
            "simulate", "--r", 13, "--v", 3, "--t", 3,
            "--max-trials", 600, "--target-failures", 40,
            "--workers", workers, "--chunk-size", 64, "--seed", 11, "--out", out,
        )
        assert code == 0
        rows.append(out.read_text())
    assert rows[0] == rows[1]


def test_simulate_appends_theory_column_for_regular_bfmax(tmp_path):
    out = tmp_path / "sim.csv"
    assert run_cli(
        "simulate", "--r", 13, "--v", 3, "--t", 2,
        "--max-trials", 200, "--seed", 2, "--out", out,
    ) == 0
    fields = dict(zip(SIM_CSV_COLUMNS.split(","), out.read_text().strip().splitlines()[1].split(",")))
    assert float(fields["dfr_theory"]) > 0
    assert float(fields["log2_dfr_theory"]) < 0


def test_simulate_usage_error(capsys):
    assert run_cli("simulate", "--t", 2) == 1
    assert "provide --code" in capsys.readouterr().err


# -- decode ----------------------------------------------------------------------


@pytest.fixture()
def toy_file(tmp_path):
    out = tmp_path / "toy.code"
    assert run_cli("gen", "--r", 13, "--v", 3, "--seed", 7, "--out", out) == 0
    return out


def test_decode_empty_support(toy_file, capsys):
    assert run_cli(
        "decode", "--code", toy_file, "--error-support", "",
        "--decoder", "bfmax-sparse", "--iter-max", 3, "--seed", 0,
    ) == 0
    obj = json.loads(capsys.readouterr().out)
    assert obj["result"] == "success" and obj["flip_log"] == []
    assert obj["recovered_equals_input"] is True


def test_decode_single_error_flips_it(toy_file, capsys):
    assert run_cli(
        "decode", "--code", toy_file, "--error-support", "9",
        "--decoder", "bfmax-sparse", "--iter-max", 1, "--seed", 0,
    ) == 0
    obj = json.loads(capsys.readouterr().out)
    assert obj["result"] == "success" and obj["flip_log"] == [9]
    assert obj["error_support"] == [9]


def test_decode_overloaded_reports_failure(toy_file, capsys):
    assert run_cli(
        "decode", "--code", toy_file,
        "--error-support", "0,2,4,6,8,10,12,14,16,18",
        "--decoder", "bfmax-sparse", "--iter-max", 4, "--seed", 1,
    ) == 0
    obj = json.loads(capsys.readouterr().out)
    assert obj["result"] == "failure"
    assert obj["iterations_used"] == 4
    assert obj["error_support"] is None


def test_decode_syndrome_file(toy_file, tmp_path, capsys):
    syn = tmp_path / "syn.txt"
    syn.write_text("0" * 13)
    assert run_cli(
        "decode", "--code", toy_file, "--syndrome-file", syn,
        "--decoder", "bfmax-naive", "--iter-max", 2, "--seed", 0,
    ) == 0
    assert json.loads(capsys.readouterr().out)["result"] == "success"


def test_decode_errors_exit_one(toy_file, tmp_path, capsys):
    assert run_cli(
        "decode", "--code", toy_file, "--error-support", "99",
        "--decoder", "bfmax-sparse", "--iter-max", 1,
    ) == 1
    syn = tmp_path / "short.txt"
    syn.write_text("0101")
    assert run_cli(
        "decode", "--code", toy_file, "--syndrome-file", syn,
        "--decoder", "bfmax-sparse", "--iter-max", 1,
    ) == 1
    err = capsys.readouterr().err
    assert "does not match" in err


def test_decode_bf_requires_thresholds(toy_file, capsys):
    assert run_cli(
        "decode", "--code", toy_file, "--error-support", "1",
        "--decoder", "bf", "--iter-max", 2,
    ) == 1
    assert "thresholds" in capsys.readouterr().err


def test_decode_bf_with_thresholds(toy_file, capsys):
    assert run_cli(
        "decode", "--code", toy_file, "--error-support", "3",
        "--decoder", "bf", "--iter-max", 2, "--thresholds", "3",
    ) == 0
    obj = json.loads(capsys.readouterr().out)
    assert obj["result"] == "success" and obj["flip_log"] == [3]


# -- compare ---------------------------------------------------------------------


def test_compare_clean_toy_campaign(tmp_path, capsys):
    out = tmp_path / "ops.csv"
    code = run_cli(
        "compare", "--r", 13, "--v", 3, "--t", 3,
        "--trials", 400, "--opcount-trials", 100, "--seed", 3, "--out", out,
    )
    captured = capsys.readouterr()
    assert code == 0
    assert "0 mismatches" in captured.err
    rows = {line.split(",")[0]: line.split(",") for line in out.read_text().splitlines()[1:]}
    touches = rows["counter_update_touches_per_iteration"]
    assert float(touches[1]) == float(touches[2]) == 3 * 6


def test_compare_fault_injection_negative_control(capsys):
    code = run_cli(
        "compare", "--r", 13, "--v", 3, "--t", 3,
        "--trials", 400, "--opcount-trials", 50, "--seed", 3, "--inject-fault",
    )
    captured = capsys.readouterr()
    assert code == 2
    assert "mismatch" in captured.err


# -- global behavior ---------------------------------------------------------------


def test_unknown_flag_exits_one():
    assert run_cli("gen", "--bogus") == 1


def test_missing_subcommand_exits_one():
    assert run_cli() == 1


def test_reproducible_outputs(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert run_cli(
            "simulate", "--r", 13, "--v", 3, "--t", 2,
            "--max-trials", 150, "--seed", 6, "--out", out,
        ) == 0
    assert a.read_bytes() == b.read_bytes()
    ma = (tmp_path / "a.csv.manifest.json").read_text()
    mb = (tmp_path / "b.csv.manifest.json").read_text()
    assert ma.replace("a.csv", "X") == mb.replace("b.csv", "X")