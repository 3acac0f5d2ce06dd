import csv
import io

import numpy as np
import pytest

from tokenmix import matfile
from tokenmix.cli import main
from tokenmix.ops import OPS


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def summary(text):
    return next(csv.DictReader(io.StringIO(text)))


@pytest.mark.parametrize("op", OPS)
def test_mix_every_op(tmp_path, capsys, op):
    out = tmp_path / "y.txt"
    extra = ["--heads", "2", "--workers", "2"] if op in ("attn", "dist-attn") else []
    code, text, _ = run(capsys, "mix", "--op", op, "--len", "32", "--dim", "8", "--out", str(out), *extra)
    assert code == 0
    assert matfile.read(out).shape == (32, 8)
    row = summary(text)
    assert row["op"] == op and row["kept"] == "32"


def test_mix_to_stdout(capsys):
    code, out, err = run(capsys, "mix", "--op", "fnet", "--len", "8", "--dim", "4")
    assert code == 0
    assert matfile.loads(out).shape == (8, 4)
    assert summary(err)["taxonomy"] == "fixed, input-independent"


def test_mix_deterministic(tmp_path, capsys):
    texts = []
    for name in ("a.txt", "b.txt"):
        run(capsys, "mix", "--op", "fnet", "--len", "64", "--dim", "16", "--seed", "7", "--out", str(tmp_path / name))
        texts.append((tmp_path / name).read_bytes())
    assert texts[0] == texts[1]


def test_dist_attn_cross_check(capsys):
    code, text, _ = run(capsys, "mix", "--op", "dist-attn", "--len", "64", "--dim", "16", "--heads", "4",
                        "--workers", "4", "--out", "/dev/null")
    assert code == 0
    assert float(summary(text)["max_abs_diff"]) <= 1e-5


def test_identity_kernel_round_trip(tmp_path, capsys):
    src = tmp_path / "x.txt"
    src.write_text(matfile.dumps(np.array([[0.5], [-1.25], [3.0], [7.125]])))
    dst = tmp_path / "y.txt"
    code, _, _ = run(capsys, "mix", "--op", "conv", "--len", "4", "--dim", "1", "--kernel", "1,0",
                     "--input", str(src), "--out", str(dst))
    assert code == 0
    assert dst.read_text() == src.read_text()


def test_selector_flag(capsys):
    code, text, _ = run(capsys, "mix", "--op", "attn", "--len", "40", "--dim", "4", "--tau", "2.0",
                        "--out", "/dev/null")
    x = np.random.default_rng(0).standard_normal((40, 4))
    assert code == 0
    assert int(summary(text)["kept"]) == int(np.sum(np.linalg.norm(x, axis=1) >= 2.0))


def test_unknown_op(capsys):
    code, _, err = run(capsys, "mix", "--op", "nope")
    assert code == 2
    assert "valid ops" in err and "sgconv" in err


def test_unreadable_input(tmp_path, capsys):
    code, _, err = run(capsys, "mix", "--op", "fnet", "--input", str(tmp_path / "missing.txt"))
    assert code == 3 and "cannot read" in err


def test_library_errors_become_exit_two(capsys):
    code, _, err = run(capsys, "mix", "--op", "conv", "--len", "2", "--kernel", "1,2,3")
    assert code == 2 and "exceeds" in err


def test_verify_passes(capsys):
    code, out, _ = run(capsys, "verify")
    assert code == 0
    assert out.strip().splitlines()[-1] == "11/11 checks passed"


def test_verify_fault_injection(capsys):
    code, out, _ = run(capsys, "verify", "--fault", "softmax-row")
    failed = [line for line in out.splitlines() if line.startswith("FAIL")]
    assert code == 1
    assert len(failed) == 1 and "attention row-stochastic" in failed[0] and "seed=0" in failed[0]


def test_verify_seed_sweep(capsys):
    code, out, _ = run(capsys, "verify", "--seed", "1..20")
    assert code == 0
    assert out.strip().splitlines()[-1] == "220/220 checks passed"


def test_audit_memory(tmp_path, capsys):
    out = tmp_path / "audit.csv"
    assert run(capsys, "audit-memory", "--len", "1024..2048", "--out", str(out))[0] == 0
    assert out.read_text() == "L,s,param_elements,kernel_elements\n1024,7,112,1024\n2048,8,128,2048\n"


def test_bench_writes_csv_and_fit(tmp_path, capsys):
    out = tmp_path / "b.csv"
    code, text, _ = run(capsys, "bench", "--op", "fnet,dist-attn", "--len", "64..256", "--dim", "8",
                        "--heads", "4", "--workers", "4", "--repeats", "1", "--out", str(out))
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    assert list(rows[0]) == ["op", "workers", "L", "D", "H", "wall_ms", "peak_score_elems",
                             "bytes_shuffled", "max_feasible"]
    dist = [r for r in rows if r["op"] == "dist-attn"]
    assert [int(r["peak_score_elems"]) for r in dist] == [(4 // 4) * L * L for L in (64, 128, 256)]
    fits = list(csv.DictReader((tmp_path / "b_fit.csv").open()))
    assert {f["op"] for f in fits} == {"fnet", "attn", "dist-attn"}


def test_bench_rows_unique_and_budgeted(tmp_path, capsys):
    out = tmp_path / "b.csv"
    code, _, _ = run(capsys, "bench", "--op", "attn,dist-attn", "--len", "64..256", "--dim", "8", "--heads", "4",
                     "--workers", "4", "--repeats", "1", "--budget", str(4 * 128 * 128), "--out", str(out))
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    keys = [(r["op"], r["L"]) for r in rows]
    assert len(keys) == len(set(keys))
    assert [int(r["L"]) for r in rows if r["op"] == "attn"] == [64, 128]
    assert [int(r["L"]) for r in rows if r["op"] == "dist-attn"] == [64, 128, 256]
    fits = {f["op"]: int(f["points"]) for f in csv.DictReader((tmp_path / "b_fit.csv").open())}
    assert fits == {"attn": 2, "dist-attn": 3}


def test_bench_unknown_op(tmp_path, capsys):
    assert run(capsys, "bench", "--op", "fnet,bad", "--out", str(tmp_path / "b.csv"))[0] == 2
