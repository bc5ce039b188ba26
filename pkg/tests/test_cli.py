import json
import subprocess
import sys

import pytest

from ffsmbench import asset_path
from ffsmbench.cli import main
from ffsmbench.mealy import parse_dot, write_dot
from conftest import make_m3

FM = str(asset_path("game", "model.xml"))
FFSM = str(asset_path("game", "game.ffsm.dot"))
PRODUCTS = str(asset_path("game", "products"))


@pytest.fixture
def m3_file(tmp_path):
    path = tmp_path / "m3.dot"
    path.write_text(write_dot(make_m3()))
    return str(path)


def test_validate_ok(capsys):
    assert main(["validate", "--fm", FM, "--ffsm", FFSM]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["pass"] and out["feature_model"]["configurations"] == 4


def test_validate_failure(tmp_path, capsys):
    text = asset_path("game", "game.ffsm.dot").read_text()
    broken = tmp_path / "broken.dot"
    broken.write_text(text.replace('  paused -> paused [label="save @ !Save / ignored"]\n', ""))
    assert main(["validate", "--fm", FM, "--ffsm", str(broken)]) == 1
    out = json.loads(capsys.readouterr().out)
    assert not out["pass"]


def test_validate_parse_error(tmp_path, capsys):
    bad = tmp_path / "bad.xml"
    bad.write_text("<featureModel>")
    assert main(["validate", "--fm", str(bad)]) == 2
    assert "error:" in capsys.readouterr().err


def test_missing_file(capsys):
    assert main(["validate", "--fm", "/nonexistent/model.xml"]) == 2


def test_limit_exceeded():
    assert main(["validate", "--fm", FM, "--limit", "2"]) == 1


def test_derive(tmp_path):
    out = tmp_path / "p.dot"
    config = "Game,Services,Start,Pause,Game_Type,Ping_Pong,Save"
    assert main(["derive", "--fm", FM, "--ffsm", FFSM, "--config", config, "-o", str(out)]) == 0
    assert len(parse_dot(out.read_text()).states) == 6


def test_derive_invalid_config(tmp_path, capsys):
    config = "Game,Services,Start,Pause,Game_Type,Ping_Pong,Brick_Game"
    assert main(["derive", "--fm", FM, "--ffsm", FFSM, "--config", config,
                 "-o", str(tmp_path / "p.dot")]) == 1
    assert "invalid configuration" in capsys.readouterr().err


def test_learn(m3_file, tmp_path, capsys):
    report = tmp_path / "r.json"
    assert main(["learn", "--fsm", m3_file, "--report", str(report)]) == 0
    assert "rounds=2" in capsys.readouterr().out
    data = json.loads(report.read_text())
    assert data["metrics"]["mq_count"] == 27 and data["equivalent"]


def test_learn_flags(m3_file, capsys):
    args = ["learn", "--fsm", m3_file, "--oracle", "wmethod:2", "--ce", "rivest-schapire",
            "--closing", "close-shortest", "--cache"]
    assert main(args) == 0
    assert "equivalent=True" in capsys.readouterr().out


def test_bad_oracle(m3_file):
    assert main(["learn", "--fsm", m3_file, "--oracle", "exhaustive"]) == 2


def test_usage_error():
    with pytest.raises(SystemExit) as info:
        main(["learn"])
    assert info.value.code == 2


def test_generate_and_bench(tmp_path, capsys):
    out = tmp_path / "gen"
    assert main(["generate", "--fm", FM, "--seed", "3", "--states", "8", "--inputs", "a,b,c",
                 "--outputs", "0,1,2", "-o", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert len(manifest["products"]) == 4
    assert any(p["reference_rounds"] >= 2 for p in manifest["products"])
    assert all((out / p["file"]).exists() for p in manifest["products"])
    report, csv = tmp_path / "bench.json", tmp_path / "bench.csv"
    assert main(["bench", "--fm", str(out / "model.xml"), "--ffsm", str(out / "ffsm.dot"),
                 "--report", str(report), "--csv", str(csv)]) == 0
    data = json.loads(report.read_text())
    assert data["family"]["all_equivalent"]
    assert csv.read_text().count("\n") == 5


def test_generate_bad_fraction(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["generate", "--fm", FM, "--seed", "1", "--states", "4", "--inputs", "a",
              "--outputs", "0,1", "--variability", "2", "-o", str(tmp_path)])
    assert info.value.code == 2


def test_generate_bad_spec(tmp_path):
    assert main(["generate", "--fm", FM, "--seed", "1", "--states", "0", "--inputs", "a",
                 "--outputs", "0,1", "-o", str(tmp_path)]) == 2


def test_bench_products(tmp_path):
    assert main(["bench", "--products", PRODUCTS, "--report", str(tmp_path / "r.json")]) == 0


def test_bench_needs_input(tmp_path):
    assert main(["bench", "--report", str(tmp_path / "r.json")]) == 2


def test_bench_product_error(tmp_path):
    (tmp_path / "x.dot").write_text("digraph g { s -> }")
    assert main(["bench", "--products", str(tmp_path), "--report", str(tmp_path / "r.json")]) == 1
    assert json.loads((tmp_path / "r.json").read_text())["errors"]


def test_analyze(m3_file, tmp_path):
    report = tmp_path / "a.json"
    assert main(["analyze", "--fsm", m3_file, "--report", str(report)]) == 0
    data = json.loads(report.read_text())
    assert data["merged_pairs"] == [{"states": ["q0", "q1"], "min_distinguishing_suffix_length": 2}]


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ffsmbench.cli", "validate", "--fm", FM],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["pass"]
