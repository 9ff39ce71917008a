import json

import pytest

from dlpkit import cli
from dlpkit.trace import Trace


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_no_arguments_prints_usage(capsys):
    code, out, err = run(capsys)
    assert code == 2 and "usage" in (out + err).lower()


@pytest.mark.parametrize("argv", [["frobnicate"], ["mbf", "restore", "--n", "3"],
                                  ["mbf", "chains", "--n", "x"], ["viz", "--trace", "t", "--format", "png"]])
def test_usage_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and err


def test_input_errors_exit_2(capsys, tmp_path):
    code, _, err = run(capsys, "viz", "--trace", str(tmp_path / "missing.jsonl"))
    assert code == 2 and "dlp-kit: error" in err
    code, _, err = run(capsys, "mbf", "restore", "--n", "2", "--oracle", "bogus:1")
    assert code == 2


def test_restore_example(capsys, tmp_path):
    tr = tmp_path / "t.jsonl"
    code, out, _ = run(capsys, "mbf", "restore", "--n", "3", "--oracle", "expr:x1 AND (x2 OR x3)",
                       "--trace", str(tr))
    assert code == 0
    lines = dict(line.split(": ", 1) for line in out.splitlines())
    assert int(lines["queries"]) <= 6 and lines["bound"] == "6"
    assert lines["lower units"].split() == ["101", "110"]
    Trace.read(tr).validate()


def test_chains(capsys):
    code, out, _ = run(capsys, "mbf", "chains", "--n", "3")
    assert code == 0 and len([l for l in out.splitlines() if l.strip()]) >= 3


def test_models_order(capsys):
    code, out, _ = run(capsys, "models", "order", "--vars", "x,y", "--a", "ax^2+by+c=0",
                       "--b", "ax^2+3y+c=0")
    assert code == 0
    assert "Mu (uncertainty): A > B" in out
    assert "NUC=" in out and "Ms (simplicity)" in out


def test_scaling_example(capsys):
    code, out, _ = run(capsys, "shapes", "scaling", "--kind", "circle", "--sizes", "10:1,100:10")
    assert code == 0
    rows = [l.split() for l in out.splitlines()[1:3]]
    assert [float(r[3]) for r in rows] == [1e3, 1e7]
    code, _, err = run(capsys, "shapes", "scaling", "--sizes", "10-1")
    assert code == 2


def test_shapes_gen_and_detect(capsys, tmp_path):
    pts = tmp_path / "p.jsonl"
    code, _, _ = run(capsys, "shapes", "gen", "--n", "100", "--m", "1000", "--shape", "circle:50,40,15",
                     "--seed", "3", "--out", str(pts))
    assert code == 0 and len(pts.read_text().splitlines()) == 1000
    tr = tmp_path / "d.jsonl"
    code, out, _ = run(capsys, "shapes", "detect", "--algo", "dlp", "--n", "100", "--in", str(pts),
                       "--trace", str(tr))
    assert code == 0 and "detections: 1" in out
    top = out.splitlines()[1].split()[0]
    cx, cy, r = map(int, top.split(":")[1].split(","))
    assert abs(cx - 50) <= 1 and abs(cy - 40) <= 1 and abs(r - 15) <= 1
    code, svg, _ = run(capsys, "viz", "--trace", str(tr))
    assert code == 0 and svg.startswith("<svg")


def test_interval_demo(capsys, tmp_path):
    code, out, _ = run(capsys, "interval", "demo", "--target", "0,4", "--seed", "0")
    assert code == 0
    rows = out.splitlines()
    assert rows[1].split()[1:3] == ["10.0000", "5.000"] and rows[2].split()[1] == "7.0000"
    est = rows[-1]
    c = float(est.split("c=")[1].split()[0])
    r = float(est.split("r=")[1])
    assert abs(c - 2) <= 0.2 and abs(r - 2) <= 0.2
    code, out, _ = run(capsys, "interval", "demo", "--m", "5", "--contrast", "1.1", "--target", "4,6")
    assert code == 1 and out.rstrip().endswith("outcome: localization-failed")
    code, _, err = run(capsys, "interval", "demo", "--target", "oops")
    assert code == 2


def test_reason(capsys, tmp_path):
    kb = tmp_path / "kb.txt"
    kb.write_text("w(m1, e, m2)\nw(m2, e, m3)\n")
    code, out, _ = run(capsys, "reason", "--kb", str(kb), "--query", "w(m1,e,m3)")
    assert code == 0 and "TA" in out and "length: 1" in out
    code, out, _ = run(capsys, "reason", "--kb", str(kb), "--query", "w(m3,e,m1)")
    assert code == 1 and "not derivable" in out


def test_viz_text_and_file(capsys, tmp_path):
    tr = tmp_path / "t.jsonl"
    run(capsys, "mbf", "restore", "--n", "2", "--oracle", "expr:x1 AND x2", "--trace", str(tr))
    out_file = tmp_path / "o.txt"
    code, _, _ = run(capsys, "viz", "--trace", str(tr), "--format", "text", "--arrange", "pareto",
                     "--highlight", "weight>=2", "--out", str(out_file))
    text = out_file.read_text()
    assert code == 0 and text.startswith("# 4 columns, pareto") and "* 11" in text


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"shrink_rho": 0.5}))
    code, out, _ = run(capsys, "interval", "demo", "--config", str(cfg))
    assert code == 0 and out.splitlines()[2].split()[1] == "5.0000"
    code, out, _ = run(capsys, "interval", "demo", "--config", str(cfg), "--shrink-rho", "0.7")
    assert out.splitlines()[2].split()[1] == "7.0000"
    cfg.write_text(json.dumps({"bogus": 1}))
    code, _, err = run(capsys, "interval", "demo", "--config", str(cfg))
    assert code == 2


def test_output_is_deterministic(capsys, tmp_path):
    a = run(capsys, "interval", "demo", "--seed", "4")
    b = run(capsys, "interval", "demo", "--seed", "4")
    assert a == b
    p1, p2 = tmp_path / "1.jsonl", tmp_path / "2.jsonl"
    for p in (p1, p2):
        run(capsys, "shapes", "gen", "--n", "50", "--m", "200", "--shape", "circle:20,20,8", "--seed", "1",
            "--out", str(p))
    assert p1.read_bytes() == p2.read_bytes()
