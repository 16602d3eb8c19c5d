import csv
import io
import json

import numpy as np
import pytest

from hutchkit import states, trace
from hutchkit.cli import EXIT_CAP, EXIT_FAIL, EXIT_OK, EXIT_USAGE, _resolution, build_parser, main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, out


def rows_of(text):
    lines = [l for l in text.splitlines() if l and not l.startswith(("counterexample,", "certified_order,"))]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def files(path):
    return {p.name: p.read_bytes() for p in sorted(path.iterdir()) if p.is_file()}


def test_sample_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["sample", "--family", "quantum", "--Q", 3, "--r", 2, "--K", 5, "--seed", 7]
    assert run(capsys, *args, "--output-dir", a)[0] == EXIT_OK
    assert run(capsys, *args, "--output-dir", b)[0] == EXIT_OK
    assert len(files(a)) == 5
    assert files(a) == files(b)


def test_sample_families(tmp_path, capsys):
    run(capsys, "sample", "--family", "clean-qubit", "--Q", 3, "--K", 3, "--output-dir", tmp_path / "c")
    for p in sorted((tmp_path / "c").iterdir()):
        v = states.read_state_csv(p)
        assert sorted(np.abs(v)) == [0] * 7 + [1]
    run(capsys, "sample", "--family", "classical", "--phase", "rademacher", "--Q", 2, "--K", 3,
        "--output-dir", tmp_path / "r")
    for p in sorted((tmp_path / "r").iterdir()):
        v = states.read_state_csv(p)
        assert set(np.round(v.real * 2).astype(int)) <= {-1, 1} and not v.imag.any()


def test_verify_exit_codes(tmp_path, capsys):
    code, out = run(capsys, "verify", "--Q", 3, "--r", 2, "--d", 3, "--dist", "Z4", "--output-dir", tmp_path)
    assert code == EXIT_OK
    assert "certified_order,3" in out
    assert all(r["match"] == "True" for r in rows_of(out))
    code, out = run(capsys, "verify", "--Q", 3, "--r", 2, "--d", 4, "--output-dir", tmp_path)
    assert code == EXIT_FAIL
    assert "counterexample," in out and ",0.000244140625,0.0" in out
    report = json.loads((tmp_path / "verify_Q3_r2_d4.json").read_text())
    assert report["certified_order"] == 3
    assert report["counterexample"]["classical"] == "0.0"
    assert (tmp_path / "verify_diff_Q3_r2_d4.csv").exists()


def test_verify_rank_three_to_order_seven(tmp_path, capsys):
    code, out = run(capsys, "verify", "--Q", 2, "--r", 3, "--d", 7, "--output-dir", tmp_path)
    assert code == EXIT_OK and "certified_order,7" in out


def test_compile_sweep(tmp_path, capsys):
    code, out = run(capsys, "compile", "--Q", 2, "--Q-max", 9, "--verify", "--output-dir", tmp_path)
    assert code == EXIT_OK
    rows = rows_of(out)
    assert list(rows[0])[:7] == ["Q", "n_rz", "n_cnot", "depth", "bound_cnot", "bound_depth", "ok"]
    assert [int(r["Q"]) for r in rows] == list(range(2, 10))
    assert all(abs(float(r["fidelity"]) - 1) < 1e-10 for r in rows)
    assert (tmp_path / "circuit_Q9.txt").exists() and (tmp_path / "compile.png").exists()


def test_schedule_q8(tmp_path, capsys):
    code, out = run(capsys, "schedule", "--Q", 8, "--verify", "--output-dir", tmp_path)
    assert code == EXIT_OK
    row = rows_of(out)[0]
    assert row["n_blocks"] == "7" and int(row["n_swaps"]) <= 28
    assert abs(float(row["fidelity"]) - 1) < 1e-10
    assert json.loads((tmp_path / "schedule_Q8.json").read_text())["Q"] == 8


def test_trace_command(tmp_path, capsys):
    A = trace.random_hermitian(4, 1)
    trace.write_matrix(A, tmp_path / "A.txt")
    code, out = run(capsys, "trace", "--matrix", tmp_path / "A.txt", "--K", 500, "--trials", 4,
                    "--output-dir", tmp_path / "o")
    assert code == EXIT_OK
    rows = rows_of(out)
    assert len(rows) == 4
    assert float(rows[0]["target"]) == pytest.approx(np.trace(A).real / 4)


def test_fig1_outputs(tmp_path, capsys):
    code, out = run(capsys, "fig1", "--Q", 3, "--K", 50, "--Ks", "50,500", "--output-dir", tmp_path)
    assert code == EXIT_OK
    for f in ("classical", "quantum"):
        img = trace.read_ppm(tmp_path / f"fig1_{f}.ppm")
        assert img.shape == (8, 8, 3)
        assert (img[np.eye(8, dtype=bool)] == [255, 255, 0]).all()
    clean = trace.read_ppm(tmp_path / "fig1_clean-qubit.ppm")
    assert (clean[~np.eye(8, dtype=bool)] == [0, 0, 139]).all()
    assert (tmp_path / "fig1.png").exists() and (tmp_path / "fig1_rms.png").exists()
    assert len(rows_of(out)) == 6


def test_fig1_families_comparable():
    parser = build_parser()
    for seed in range(20):
        args = parser.parse_args(["fig1", "--Q", "5", "--seed", str(seed)])
        c = _resolution("classical", args, 100, 0).offdiag_rms()
        q = _resolution("quantum", args, 100, 0).offdiag_rms()
        assert 0.5 < c / q < 2


def test_golomb_and_lemma1(tmp_path, capsys):
    code, out = run(capsys, "golomb", "--Q-max", 4, "--output-dir", tmp_path)
    assert code == EXIT_OK
    g2 = [r for r in rows_of(out) if r["hamiltonian"] == "G2"]
    assert all(r["gaps_distinct"] == "True" and float(r["bias_max"]) == 0 for r in g2)
    code, out = run(capsys, "lemma1", "--Q", 3, "--d", 3, "--r", 2, "--output-dir", tmp_path)
    assert code == EXIT_OK
    code, out = run(capsys, "lemma1", "--Q", 3, "--d", 4, "--r", 2, "--output-dir", tmp_path)
    assert code == EXIT_FAIL
    assert rows_of(out)[0]["violating_ordered_pairs"] == "1152"
    assert (tmp_path / "lemma1_Q3_d4_r2.jsonl").read_text().count("\n") == 1


def test_config_and_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# run\nQ = 2\nK = 2\nfamily = classical\nseed = 3\n")
    run(capsys, "sample", "--config", cfg, "--output-dir", tmp_path / "a")
    assert len(list((tmp_path / "a").iterdir())) == 2
    run(capsys, "sample", "--config", cfg, "--K", 4, "--output-dir", tmp_path / "b")
    assert len(list((tmp_path / "b").iterdir())) == 4
    assert files(tmp_path / "a")["state_0000.csv"] == files(tmp_path / "b")["state_0000.csv"]
    cfg.write_text("bogus = 1\n")
    assert run(capsys, "sample", "--config", cfg, "--output-dir", tmp_path)[0] == EXIT_USAGE


def test_threads_do_not_change_output(tmp_path, capsys):
    _, one = run(capsys, "verify", "--Q", 2, "--r", 2, "--d", 3, "--dist", "Z4", "--threads", 1,
                 "--output-dir", tmp_path / "1")
    _, four = run(capsys, "verify", "--Q", 2, "--r", 2, "--d", 3, "--dist", "Z4", "--threads", 4,
                  "--output-dir", tmp_path / "4")
    assert one == four
    assert files(tmp_path / "1") == files(tmp_path / "4")


def test_usage_and_cap_errors(tmp_path, capsys, monkeypatch):
    assert run(capsys, "sample", "--K", 0, "--output-dir", tmp_path)[0] == EXIT_USAGE
    assert run(capsys, "sample", "--dist", "Z", "--output-dir", tmp_path)[0] == EXIT_USAGE
    assert run(capsys, "nonsense")[0] == EXIT_USAGE
    assert run(capsys, "compile", "--Q", 5, "--Q-max", 3, "--output-dir", tmp_path)[0] == EXIT_USAGE
    assert run(capsys, "lemma1", "--Q", 3, "--d", 4, "--threads", 0, "--output-dir", tmp_path)[0] == EXIT_USAGE
    monkeypatch.setenv("HUTCHKIT_CAP_BYTES", "1000")
    code, _ = run(capsys, "verify", "--Q", 3, "--r", 2, "--d", 3, "--dist", "Z4", "--output-dir", tmp_path)
    assert code == EXIT_CAP


def test_help_shows_defaults(capsys):
    with pytest.raises(SystemExit):
        build_parser().parse_args(["fig1", "--help"])
    out = capsys.readouterr().out
    assert "default: 100" in out and "default: 5" in out
