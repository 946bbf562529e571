import csv
import json

from partlearn.cli import EXIT_BUDGET, EXIT_INVALID, EXIT_OK, main


def run(*argv):
    return main(list(argv))


def test_gen_is_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run("gen", "--kind", "uepp", "--m", "2", "--n", "3", "--seed", "7",
               "--out", str(a)) == EXIT_OK
    assert run("gen", "--kind", "uepp", "--m", "2", "--n", "3", "--seed", "7",
               "--out", str(b)) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_gen_lbgame_matches_family(tmp_path):
    out = tmp_path / "lb.json"
    assert run("gen", "--kind", "lbgame", "--x", "0.5", "--y", "0.5", "--out", str(out)) == EXIT_OK
    data = json.loads(out.read_text())
    assert data["A"] == [[0.5, 0.5], [0.0, 1.0]]
    assert data["B"] == [[0.0, 0.5], [1.0, 0.5]]


def test_gen_rejects_bad_lbgame(tmp_path):
    assert run("gen", "--kind", "lbgame", "--x", "1.5", "--y", "0.5",
               "--out", str(tmp_path / "x.json")) == EXIT_INVALID


def test_learn_uepp_roundtrip(tmp_path):
    inst = tmp_path / "u.json"
    run("gen", "--kind", "uepp", "--m", "1", "--n", "2", "--seed", "3", "--out", str(inst))
    out = tmp_path / "lab.json"
    code = run("learn", "--instance", str(inst), "--eps", "0.001", "--out", str(out))
    assert code == EXIT_OK
    manifest = json.loads((tmp_path / "lab.json.manifest.json").read_text())
    assert manifest["eps_close"] is True
    import math
    assert manifest["queries"] <= 2 * math.ceil(math.log2(2 / 0.001)) + 2


def test_learn_budget_exhaustion_leaves_no_files(tmp_path):
    inst = tmp_path / "u.json"
    run("gen", "--kind", "uepp", "--m", "2", "--n", "3", "--seed", "1", "--out", str(inst))
    out = tmp_path / "lab.json"
    code = run("learn", "--instance", str(inst), "--eps", "0.05", "--budget", "0",
               "--out", str(out))
    assert code == EXIT_BUDGET
    assert not out.exists()


def test_learn_adversarial_duplicates_records_merge(tmp_path):
    inst = tmp_path / "dup.json"
    run("gen", "--kind", "uepp", "--m", "2", "--n", "3", "--seed", "1000",
        "--duplicate-rows", "1", "--out", str(inst))
    out = tmp_path / "lab.json"
    code = run("learn", "--instance", str(inst), "--eps", "0.1", "--oracle", "adv",
               "--policy", "antilearner", "--seed", "7", "--out", str(out))
    assert code == EXIT_OK
    manifest = json.loads((tmp_path / "lab.json.manifest.json").read_text())
    assert manifest["eps_close"]


def test_solve_bimatrix_and_exit_codes(tmp_path):
    inst = tmp_path / "lb.json"
    run("gen", "--kind", "lbgame", "--x", "0.5", "--y", "0.5", "--out", str(inst))
    out = tmp_path / "cert.json"
    assert run("solve", "--instance", str(inst), "--eps", "0.05", "--out", str(out)) == EXIT_OK
    cert = json.loads(out.read_text())
    assert cert["valid"] is True and cert["audit_clean"] is True
    assert abs(cert["u"][0] - 0.5) <= 0.05 and abs(cert["v"][0] - 0.5) <= 0.05


def test_solve_multiplayer(tmp_path):
    inst = tmp_path / "mp.json"
    run("gen", "--kind", "multiplayer", "--players", "3", "--k", "2", "--seed", "2",
        "--out", str(inst))
    assert run("solve", "--instance", str(inst), "--eps", "0.25") == EXIT_OK


def test_solve_rejects_uepp_instance(tmp_path):
    inst = tmp_path / "u.json"
    run("gen", "--kind", "uepp", "--m", "2", "--n", "2", "--seed", "0", "--out", str(inst))
    assert run("solve", "--instance", str(inst), "--eps", "0.1") == EXIT_INVALID


def test_bench_csv_contract(tmp_path):
    out = tmp_path / "b.csv"
    code = run("bench", "--family", "lbgame", "--eps-list", "0.1,0.05",
               "--seeds", "1,2", "--out", str(out))
    assert code == EXIT_OK
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4
    assert list(rows[0]) == ["family", "m", "n", "eps", "seed", "queries", "wall_ms", "verified"]
    assert all(r["verified"] == "True" for r in rows)


def test_bench_empty_sweep_writes_header_only(tmp_path):
    out = tmp_path / "b.csv"
    assert run("bench", "--family", "lbgame", "--out", str(out)) == EXIT_OK
    lines = out.read_text().strip().splitlines()
    assert lines == ["family,m,n,eps,seed,queries,wall_ms,verified"]


def test_unknown_instance_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"what": 1}')
    assert run("solve", "--instance", str(bad), "--eps", "0.1") == EXIT_INVALID
