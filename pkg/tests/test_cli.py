import csv
import io
import json

import pytest
from click.testing import CliRunner

from akount.cli import main
from akount.dataio import parse_reads, read_counts


@pytest.fixture
def run(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    runner = CliRunner()

    def invoke(*args, code=0):
        res = runner.invoke(main, [str(a) for a in args], catch_exceptions=False)
        assert res.exit_code == code, res.output
        return res
    return invoke


@pytest.fixture
def demo(run, tmp_path):
    path = tmp_path / "demo.fq"
    run("generate", "--genome-len", 50_000, "--reads", 1000, "--read-len", 150,
        "--seed", 1, "-o", path)
    return path


def test_generate_scale_20(run, tmp_path):
    out = tmp_path / "s20.fq"
    run("generate", "--scale", 20, "--seed", 7, "-o", out)
    reads = parse_reads(out)
    assert len(reads) == 349_500 and {len(r) for r in reads} == {150}
    manifest = json.loads((tmp_path / "s20.fq.manifest.json").read_text())
    assert manifest["seed"] == 7 and manifest["scale"] == 20


def test_generate_deterministic(run, tmp_path):
    a, b = tmp_path / "a.fq", tmp_path / "b.fq"
    for out in (a, b):
        run("generate", "--genome-len", 1000, "--reads", 10, "--read-len", 100,
            "--seed", 1, "-o", out)
    assert a.read_bytes() == b.read_bytes()


def test_generate_seed_from_env(tmp_path, monkeypatch):
    monkeypatch.setenv("AKOUNT_SEED", "1")
    out = tmp_path / "env.fq"
    res = CliRunner().invoke(main, ["generate", "--genome-len", "1000", "--reads", "10",
                                    "--read-len", "100", "-o", str(out)])
    assert res.exit_code == 0
    monkeypatch.delenv("AKOUNT_SEED")
    ref = tmp_path / "ref.fq"
    CliRunner().invoke(main, ["generate", "--genome-len", "1000", "--reads", "10",
                              "--read-len", "100", "--seed", "1", "-o", str(ref)])
    assert out.read_bytes() == ref.read_bytes()


def test_generate_skewed(run, tmp_path):
    out = tmp_path / "sk.fa"
    run("generate", "--genome-len", 2000, "--reads", 50, "--skew-motif", "AATGG",
        "--skew-frac", 0.5, "--format", "fasta", "-o", out)
    assert sum(b"AATGGAATGG" in r for r in parse_reads(out)) > 0


def test_generate_rejects_bad_params(run, tmp_path):
    run("generate", "--genome-len", 10, "--read-len", 100, "-o", tmp_path / "x.fq", code=2)
    run("generate", "-o", tmp_path / "x.fq", code=2)
    run("generate", "--genome-len", 100, "--read-len", 10, "--skew-motif", "ANA",
        "--skew-frac", 0.5, "-o", tmp_path / "x.fq", code=2)


def test_count_tiny_serial(run, tmp_path):
    tiny = tmp_path / "tiny.fa"
    tiny.write_text(">r\nACGTA\n")
    out = tmp_path / "tiny.txt"
    run("count", "--algo", "serial", "-k", 4, "-i", tiny, "-o", out, "--text")
    assert out.read_text() == "ACGT\t1\nCGTA\t1\n"


def test_count_fabsp_report(run, demo, tmp_path):
    out = tmp_path / "f.akct"
    run("count", "--algo", "fabsp", "--pes", 16, "--topology", "2d", "-i", demo, "-o", out)
    report = json.loads((tmp_path / "f.akct.report.json").read_text())
    assert report["metrics"]["barriers"] == 3
    assert report["workload"]["grid"] == [4, 4]
    for key in ("puts", "payload_bytes", "header_bytes", "hop_total", "forwarded", "local_words"):
        assert key in report["metrics"]


def test_count_bsp_rounds(run, demo, tmp_path):
    rep = tmp_path / "b.json"
    run("count", "--algo", "bsp", "--pes", 4, "--batch", 10_000, "-i", demo,
        "-o", tmp_path / "b.akct", "--report", rep)
    assert json.loads(rep.read_text())["metrics"]["collective_rounds"] == 4


def test_count_rejects_large_k(run, demo):
    res = run("count", "-k", 32, "-i", demo, code=2)
    assert "k must be" in res.output


def test_count_bad_input(run, tmp_path):
    bad = tmp_path / "bad.fq"
    bad.write_text("@r\nACGT\n+\nII\n")
    res = run("count", "-i", bad, code=1)
    assert "line 4" in res.output


def test_verify(run, demo, tmp_path):
    a, b, c = tmp_path / "a.akct", tmp_path / "b.akct", tmp_path / "c.akct"
    run("count", "--algo", "serial", "-i", demo, "-o", a)
    run("count", "--algo", "fabsp", "--pes", 9, "--topology", "3d", "--l3", "off",
        "-i", demo, "-o", b)
    run("verify", a, a)
    run("verify", a, b)
    run("count", "--algo", "serial", "-k", 21, "-i", demo, "-o", c)
    run("verify", a, c, code=2)


def test_verify_reports_diffs(run, tmp_path):
    x, y = tmp_path / "x.txt", tmp_path / "y.txt"
    x.write_text("ACGT\t2\nCCCC\t1\n")
    y.write_text("ACGT\t3\n")
    res = run("verify", x, y, code=1)
    assert res.output.splitlines() == ["ACGT\t2\t3", "CCCC\t1\t0"]
    k4, k5 = tmp_path / "k4.txt", tmp_path / "k5.txt"
    k4.write_text("ACGT\t1\n")
    k5.write_text("ACGTA\t1\n")
    run("verify", k4, k5, code=2)


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_model_sum_shares(run):
    row = _rows(run("model", "--scale", 30, "--nodes", 32, "--mode", "sum").output)[0]
    got = [100 * float(row[c]) for c in ("share_internode", "share_intranode", "share_compute")]
    for g, w in zip(got, (44.0, 53.4, 2.6)):
        assert abs(g - w) <= 1.0


def test_model_max_le_sum(run):
    rows = _rows(run("model", "--scale", 30, "--nodes", 32, "--mode", "both").output)
    by_mode = {r["mode"]: float(r["T_total"]) for r in rows}
    assert by_mode["max"] <= by_mode["sum"]


def test_model_sweep_monotone(run, tmp_path):
    out = tmp_path / "sweep.csv"
    run("model", "--scale", 28, "--nodes", "1..256", "-o", out)
    rows = _rows(out.read_text())
    assert len(rows) == 256
    for col in ("t_comp1", "t_intra1", "t_inter1", "t_comp2", "t_intra2", "T_total"):
        vals = [float(r[col]) for r in rows]
        assert all(a >= b for a, b in zip(vals, vals[1:]))


def test_model_params(run, tmp_path):
    params = tmp_path / "p.json"
    params.write_text(json.dumps({"beta_link": 25e9}))
    fast = _rows(run("model", "--scale", 30, "--params", params).output)[0]
    base = _rows(run("model", "--scale", 30).output)[0]
    assert float(fast["t_inter1"]) == pytest.approx(float(base["t_inter1"]) / 2)
    run("model", "--scale", 30, "--beta-mem", 0, code=2)
    run("model", code=2)
