import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from wmqdc import cli
from wmqdc.sweep import CSV_HEADER, ConfigError, RunConfig, SweepSeries, compute_series, figure_series


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def parse_blocks(text):
    blocks, current = {}, None
    for line in text.splitlines():
        if line.startswith("# series: "):
            current = line.split(": ", 1)[1]
            blocks[current] = []
        else:
            blocks[current].append(line)
    return {k: list(csv.DictReader(io.StringIO("\n".join(v)))) for k, v in blocks.items()}


def test_fig3_schema(capsys):
    code, out, _ = run(["fig3", "--steps", "11"], capsys)
    assert code == 0
    blocks = parse_blocks(out)
    assert list(blocks) == ["alpha_over_halfpi=0.996", "alpha_over_halfpi=0.9995", "alpha_over_halfpi=1.0"]
    for rows in blocks.values():
        assert len(rows) == 11
        assert tuple(rows[0]) == CSV_HEADER
        taus = [float(r["tau"]) for r in rows]
        assert taus == sorted(taus) and taus[-1] == pytest.approx(4 * math.pi)


def test_degenerate_point_left_empty(capsys):
    _, out, _ = run(["fig3", "--steps", "5"], capsys)
    first = parse_blocks(out)["alpha_over_halfpi=1.0"][0]
    assert first["q_over_sigma"] == "" and first["p_over_hbar2sigma"] == ""
    assert float(first["prob_success"]) < 1e-30


def test_output_deterministic(capsys):
    _, a, _ = run(["fig4", "--steps", "50"], capsys)
    _, b, _ = run(["fig4", "--steps", "50"], capsys)
    assert a == b


def test_fig_files(tmp_path, capsys):
    out = tmp_path / "fig5.csv"
    code, printed, _ = run(["fig5", "--steps", "7", "--out", str(out)], capsys)
    assert code == 0
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["fig5_1.0.csv", "fig5_2.0.csv", "fig5_4.0.csv"]
    rows = list(csv.DictReader(open(tmp_path / "fig5_4.0.csv")))
    assert len(rows) == 7 and rows[0]["q_over_sigma"] != ""


def test_json_format(capsys):
    code, out, _ = run(["sweep", "--steps", "4", "--format", "json"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["figure"] == "sweep"
    assert doc["series"][0]["columns"] == list(CSV_HEADER)
    assert len(doc["series"][0]["rows"]) == 4


def test_point(capsys):
    code, out, _ = run(["point", "--k", "0.005", "--alpha-frac", "0.996"], capsys)
    rec = json.loads(out)
    assert code == 0
    assert rec["q_over_sigma"] == pytest.approx(-0.98357, abs=1e-5)
    assert "odd" in rec["expansion"]
    assert rec["expansion"]["odd"]["relative"] < 0.02


def test_point_degenerate(capsys):
    code, out, _ = run(["point", "--alpha-frac", "1.0", "--tau", "0"], capsys)
    rec = json.loads(out)
    assert code == 0 and rec["degenerate"] and rec["q_over_sigma"] is None


def test_point_literal(capsys):
    _, out, _ = run(["point", "--paper-literal"], capsys)
    rec = json.loads(out)
    assert rec["paper_literal"] and abs(rec["q_over_sigma"]) < 1e-3


def test_check_passes(capsys):
    code, out, _ = run(["check", "--k", "0.005", "--steps", "30"], capsys)
    assert code == 0
    assert "status: PASS" in out


def test_check_json(capsys):
    code, out, _ = run(["check", "--k", "0.01", "--alpha-frac", "0.9", "--steps", "10", "--format", "json"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["passed"] and doc["n_points"] == 10


def test_check_truncation_exit(capsys):
    code, _, err = run(["check", "--k", "0.1", "--cutoff", "2", "--steps", "10"], capsys)
    assert code == cli.EXIT_TRUNCATION
    assert "truncation" in err


def test_check_all_degenerate(capsys):
    code, _, _ = run(
        ["check", "--alpha-frac", "1.0", "--tau-start", "0", "--tau-stop", "1e-13", "--steps", "2"], capsys
    )
    assert code == cli.EXIT_CONFIG


def test_bad_values_exit_2(capsys):
    assert run(["sweep", "--k", "0.5"], capsys)[0] == cli.EXIT_CONFIG
    assert run(["sweep", "--steps", "1"], capsys)[0] == cli.EXIT_CONFIG
    assert run(["sweep", "--tau-start", "3", "--tau-stop", "1"], capsys)[0] == cli.EXIT_CONFIG


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"k": 0.01, "steps": 3, "alpha_over_halfpi": 0.5}))
    code, out, _ = run(["sweep", "--config", str(cfg), "--steps", "5"], capsys)
    assert code == 0
    assert len(out.strip().splitlines()) == 6


def test_config_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text('{\n  "k": 0.01,\n  "colour": 3\n}')
    code, _, err = run(["sweep", "--config", str(cfg)], capsys)
    assert code == cli.EXIT_CONFIG
    assert "line 3" in err and "colour" in err


def test_config_bad_json(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text('{"k": }')
    code, _, err = run(["sweep", "--config", str(cfg)], capsys)
    assert code == cli.EXIT_CONFIG and "line 1" in err


def test_config_missing_file(tmp_path, capsys):
    assert run(["sweep", "--config", str(tmp_path / "nope.json")], capsys)[0] == cli.EXIT_CONFIG


def test_config_round_trip():
    cfg = RunConfig(k=0.01, cutoff=30, steps=17, outputs=("q", "prob"), paper_literal=True)
    assert RunConfig.from_json(cfg.to_json()) == cfg


def test_config_validation():
    with pytest.raises(ConfigError):
        RunConfig(cutoff=0)
    with pytest.raises(ConfigError):
        RunConfig(outputs=("q", "z"))
    with pytest.raises(ConfigError):
        RunConfig(k=float("nan"))
    with pytest.raises(ConfigError):
        RunConfig(paper_literal="yes")


def test_outputs_subset_leaves_columns_empty():
    cfg = RunConfig(steps=3, outputs=("q",))
    rows = list(csv.DictReader(io.StringIO(figure_series(cfg, "sweep")[0].to_csv())))
    assert rows[1]["q_over_sigma"] != "" and rows[1]["p_over_hbar2sigma"] == ""


def test_series_rejects_unsorted_tau():
    with pytest.raises(ValueError):
        SweepSeries([0.0, 2.0, 1.0], *([np.zeros(3)] * 4))


def test_literal_probability_column_is_joint():
    # both columns report the joint probability; they agree where no overlap factor enters
    p = RunConfig().params()
    taus = np.linspace(0, 1, 5)
    lit = compute_series(p, taus, literal=True).prob
    der = compute_series(p, taus).prob
    assert lit[0] == pytest.approx(der[0], rel=1e-12)
    assert der[0] == pytest.approx(np.cos(p.alpha) ** 2 / 8, rel=1e-12)


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "wmqdc", "point", "--tau", "1.0"], capture_output=True, text=True, check=False
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["tau"] == 1.0
