import csv
import io
import json
import math
from pathlib import Path

import numpy as np
import pytest

from fockbell import cli

GOLDEN = Path(__file__).parent / "golden"


def run(argv, capsys):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_sweep_csv_matches_golden(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code, text, _ = run(["sweep", "--engine", "closed-form", "--steps", 5, "--out", out], capsys)
    assert code == 0
    assert out.read_bytes() == (GOLDEN / "sweep_closed_form_5.csv").read_bytes()
    assert "corrected visibility" in text and "raw verdict" in text


def test_counts_csv_matches_golden(tmp_path, capsys):
    out = tmp_path / "counts.csv"
    code, _, _ = run(["mc", "--engine", "closed-form", "--steps", 5, "--seed", 7, "--out", out], capsys)
    assert code == 0
    assert out.read_bytes() == (GOLDEN / "counts_seed7_5.csv").read_bytes()


def test_closed_form_csv_matches_golden(capsys):
    code, text, _ = run(["closed-form", "--r", 0.05, "--alpha-mag", 1, "--delta-deg", 45, "--csv"], capsys)
    assert code == 0
    assert text == (GOLDEN / "closed_form_point.csv").read_text()


def test_csv_formatting(tmp_path, capsys):
    out = tmp_path / "s.csv"
    run(["sweep", "--engine", "closed-form", "--steps", 3, "--out", out], capsys)
    raw = out.read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n")
    lines = raw.decode().splitlines()
    assert lines[0] == "phase_deg,p_ideal,p_false,p_total,rate_hz"
    phase, *probs = lines[1].split(",")
    assert phase == "-70.000000"
    for field in probs:
        mantissa = field.split("e")[0].lstrip("-")
        assert len(mantissa.replace(".", "")) == 12


def test_engines_give_same_probabilities(tmp_path, capsys):
    a, b = tmp_path / "n.csv", tmp_path / "c.csv"
    run(["sweep", "--engine", "numeric", "--steps", 9, "--out", a], capsys)
    run(["sweep", "--engine", "closed-form", "--steps", 9, "--out", b], capsys)
    for ra, rb in zip(read_rows(a), read_rows(b)):
        assert ra["phase_deg"] == rb["phase_deg"]
        for col in ("p_ideal", "p_false", "p_total"):
            assert abs(float(ra[col]) - float(rb[col])) < 1e-9


def test_alpha_zero_gives_flat_ideal_curve(tmp_path, capsys):
    out = tmp_path / "s.csv"
    code, _, _ = run(["sweep", "--alpha-mag", 0, "--steps", 7, "--out", out], capsys)
    assert code == 0
    assert all(abs(float(r["p_ideal"])) < 1e-15 for r in read_rows(out))


def test_closed_form_examples(capsys):
    _, text, _ = run(["closed-form", "--alpha-mag", 0, "--csv"], capsys)
    row = next(csv.DictReader(io.StringIO(text)))
    assert float(row["p_coincidence"]) == 0.0 and float(row["p_false"]) == 0.0
    alpha = math.sqrt(math.log(2)) / 0.5
    _, text, _ = run(["closed-form", "--r", 0.5, "--alpha-mag", alpha, "--csv"], capsys)
    assert float(next(csv.DictReader(io.StringIO(text)))["p_false"]) == pytest.approx(0.25, rel=1e-11)


def test_closed_form_grid(tmp_path, capsys):
    out = tmp_path / "grid.csv"
    code, _, _ = run(["closed-form", "--grid", "--out", out], capsys)
    assert code == 0
    rows = read_rows(out)
    assert len(rows) == 4 * 4 * 5
    assert (tmp_path / "grid.csv.manifest.json").exists()


def test_povm_command(capsys):
    code, text, _ = run(["povm", "--r", 0.05, "--alpha-mag", 1.0], capsys)
    assert code == 0
    fid = float(text.strip().splitlines()[-1].split(":")[-1])
    assert fid >= 0.999
    _, text, _ = run(["povm", "--r", 0.2, "--alpha-mag", 0, "--csv"], capsys)
    rows = {line.split(",")[0]: line.split(",") for line in text.splitlines()}
    assert float(rows["eigvec_1"][2]) == pytest.approx(1.0)
    _, text, _ = run(["povm", "--r", 0, "--alpha-mag", 1.0], capsys)
    assert "degenerate" in text


def test_classical_command(tmp_path, capsys):
    out = tmp_path / "cl.csv"
    code, text, _ = run(["classical", "--r", 0.5, "--alpha-mag", 0.1, "--steps", 9, "--out", out], capsys)
    assert code == 0
    assert "classical 0.5 bound: within" in text
    code, text, _ = run(["classical", "--r", 0.5, "--alpha-mag", 0.1, "--steps", 9, "--gamma-mag", 0,
                         "--out", out], capsys)
    assert "raw visibility: 0.000000" in text


def test_config_dump_round_trip(tmp_path, capsys):
    code, text, _ = run(["config", "--dump"], capsys)
    assert code == 0
    path = tmp_path / "cfg.ini"
    path.write_text(text)
    code, again, _ = run(["config", "--dump", "--config", path], capsys)
    assert again == text
    for section in ("[circuit]", "[sweep]", "[backgrounds]", "[source]", "[run]"):
        assert section in text


def test_config_file_overrides_and_flags(tmp_path, capsys):
    path = tmp_path / "cfg.ini"
    path.write_text("[circuit]\nr = 0.1\n\n[sweep]\nsteps = 7\n")
    _, text, _ = run(["config", "--config", path, "--steps", 9], capsys)
    assert "r = 0.1\n" in text and "steps = 9\n" in text


def test_config_errors_exit_2_with_location(tmp_path, capsys):
    path = tmp_path / "bad.ini"
    path.write_text("[circuit]\nr = 0.1\neta = lots\n")
    code, _, err = run(["sweep", "--config", path], capsys)
    assert code == 2
    assert "bad.ini:3" in err and "circuit.eta" in err
    path.write_text("[circuit]\nspin = 1\n")
    code, _, err = run(["sweep", "--config", path], capsys)
    assert code == 2 and "unknown key" in err
    code, _, err = run(["sweep", "--r", 1.5], capsys)
    assert code == 2
    code, _, _ = run(["mc", "--duration", 0], capsys)
    assert code == 2


def test_truncation_failure_exits_3(tmp_path, capsys):
    code, _, err = run(["sweep", "--alpha-mag", 3, "--cutoffs", "T.lo=12", "--steps", 3,
                        "--out", tmp_path / "s.csv"], capsys)
    assert code == 3
    assert "numerical error" in err


def test_manifest_contents(tmp_path, capsys):
    out = tmp_path / "m.csv"
    run(["mc", "--engine", "closed-form", "--steps", 5, "--seed", 99, "--out", out], capsys)
    manifest = json.loads((tmp_path / "m.csv.manifest.json").read_text())
    assert manifest["command"] == "mc"
    assert manifest["seed"] == 99
    assert manifest["engine"] == "closed-form"
    assert manifest["outputs"] == [str(out)]
    assert manifest["version"]


@pytest.mark.parametrize("argv", [
    ["sweep", "--steps", 7],
    ["mc", "--steps", 9, "--seed", 5],
    ["classical", "--r", 0.5, "--alpha-mag", 0.2, "--steps", 7, "--counts"],
    ["closed-form", "--grid"],
    ["povm", "--r", 0.05, "--alpha-mag", 2.0],
])
def test_replay_is_bit_identical(tmp_path, capsys, argv):
    first = tmp_path / "first.csv"
    assert run(argv + ["--out", first], capsys)[0] == 0
    manifest = tmp_path / "first.csv.manifest.json"
    code, _, _ = run(["replay", manifest, "--out", tmp_path / "second.csv"], capsys)
    assert code == 0
    original = json.loads(manifest.read_text())["outputs"]
    replayed = json.loads((tmp_path / "second.csv.manifest.json").read_text())["outputs"]
    assert len(original) == len(replayed)
    for a, b in zip(original, replayed):
        assert Path(a).read_bytes() == Path(b).read_bytes()


def test_bad_manifest_exits_2(tmp_path, capsys):
    path = tmp_path / "m.json"
    path.write_text("{}")
    assert run(["replay", path], capsys)[0] == 2


def test_sweep_csv_parses_back(tmp_path, capsys):
    out = tmp_path / "s.csv"
    run(["sweep", "--steps", 43, "--out", out], capsys)
    rows = read_rows(out)
    phases = np.array([float(r["phase_deg"]) for r in rows])
    assert phases[0] == -70.0 and phases[-1] == 350.0 and len(rows) == 43
