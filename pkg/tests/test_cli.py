import csv
import json

import pytest

from domainwall.cli import EXIT_DATA, EXIT_IO, EXIT_RESOURCE, EXIT_USAGE, build_parser, main


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("DOMAINWALL_CACHE_DIR", raising=False)
    return tmp_path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def make_problem(m=3, name="assign.json"):
    assert main(["problem-gen", "--type", "assignment", "--m", str(m), "--out", name]) == 0
    return name


@pytest.mark.parametrize("scheme, bits", [("domain-wall", 6), ("one-hot", 9)])
def test_encode_bit_counts(workdir, scheme, bits):
    prob = make_problem()
    assert main(["encode", "--problem", prob, "--scheme", scheme]) == 0
    q = json.loads((workdir / f"assign_{scheme}.qubo.json").read_text())
    assert q["num_bits"] == bits and q["encoding"]["scheme"] == scheme
    assert (workdir / f"assign_{scheme}.qubo.json.manifest.json").exists()


def test_encode_k_hot_range(workdir):
    assert main(["encode", "--scheme", "k-hot", "--m", "4", "--k", "0"]) == EXIT_USAGE
    assert main(["encode", "--scheme", "k-hot", "--m", "4", "--k", "2", "--out", "k.json"]) == 0


def test_unknown_scheme_and_flags(workdir, capsys):
    prob = make_problem()
    assert main(["encode", "--problem", prob, "--scheme", "binary"]) == EXIT_USAGE
    assert main(["encode", "--problem", prob, "--scheme", "one-hot", "--bogus"]) == EXIT_USAGE
    assert main(["frobnicate"]) == EXIT_USAGE
    capsys.readouterr()


def test_missing_file_is_io_error(workdir):
    assert main(["encode", "--problem", "nope.json", "--scheme", "one-hot"]) == EXIT_IO


def test_malformed_json_is_data_error(workdir):
    (workdir / "bad.json").write_text("{not json")
    assert main(["encode", "--problem", "bad.json", "--scheme", "one-hot"]) == EXIT_DATA


def test_convert(workdir):
    prob = make_problem()
    main(["encode", "--problem", prob, "--scheme", "one-hot", "--out", "oh.json"])
    main(["encode", "--problem", prob, "--scheme", "domain-wall", "--out", "dw.json"])
    assert main(["convert", "--from", "one-hot", "--qubo", "oh.json", "--out", "conv.json"]) == 0
    assert main(["convert", "--from", "one-hot", "--qubo", "dw.json", "--out", "x.json"]) == EXIT_DATA


def test_dof(workdir):
    assert main(["dof", "--m-max", "3"]) == EXIT_USAGE
    assert main(["dof", "--m-max", "1001"]) == EXIT_USAGE
    assert main(["dof", "--m-max", "26", "--even-only", "--out-dir", "d"]) == 0
    summary = read_csv(workdir / "d" / "dof_summary.csv")
    assert [int(r["m"]) for r in summary] == list(range(4, 27, 2))
    row8 = next(r for r in summary if r["m"] == "8")
    assert int(row8["argmax_n_var"]) == 3
    assert float(row8["max_d_crit"]) == pytest.approx(8 / 9)
    table = read_csv(workdir / "d" / "dof_table.csv")
    assert {r["m"] for r in table} == {r["m"] for r in summary}


def test_sample_determinism(workdir):
    prob = make_problem()
    args = ["sample", "--problem", prob, "--scheme", "domain-wall", "--T", "0.2", "--n", "1e6", "--seed", "7"]
    assert main(args + ["--out", "a.csv"]) == 0
    assert main(args + ["--out", "b.csv", "--threads", "1"]) == 0
    assert (workdir / "a.csv").read_bytes() == (workdir / "b.csv").read_bytes()
    rows = read_csv(workdir / "a.csv")
    assert list(rows[0]) == ["T", "p", "se", "mean_excess_energy"]
    assert 0 < float(rows[0]["p"]) <= 1


def test_sample_rejects_bad_counts(workdir):
    prob = make_problem()
    base = ["sample", "--problem", prob, "--scheme", "one-hot", "--T", "0.5"]
    assert main(base + ["--n", "lots"]) == EXIT_USAGE
    assert main(base + ["--n", "0"]) == EXIT_USAGE
    assert main(["sample", "--problem", prob, "--scheme", "one-hot", "--T", "-1"]) == EXIT_USAGE


def test_replay_reproduces_and_detects_changes(workdir):
    prob = make_problem()
    assert main(["sample", "--problem", prob, "--scheme", "one-hot", "--T", "0.3", "0.6",
                 "--n", "20000", "--trace", "trace.csv", "--out", "s.csv"]) == 0
    manifest = json.loads((workdir / "s.csv.manifest.json").read_text())
    assert set(manifest["outputs"]) == {"s.csv", "trace.csv"}
    assert manifest["seeds"] and manifest["version"] and manifest["inputs"]
    assert main(["replay", "s.csv.manifest.json"]) == 0
    (workdir / "s.csv").write_text("tampered\n")
    # the replay regenerates outputs, so tampering with an output is repaired
    assert main(["replay", "s.csv.manifest.json"]) == 0
    (workdir / prob).write_text((workdir / prob).read_text() + "\n")
    assert main(["replay", "s.csv.manifest.json"]) == EXIT_DATA


def test_solve_brute(workdir, capsys):
    prob = make_problem()
    capsys.readouterr()
    assert main(["solve-brute", "--problem", prob, "--out", "sol.json"]) == 0
    assert "minimizers=6" in capsys.readouterr().out
    assert main(["solve-brute"]) == EXIT_USAGE
    big = make_problem(9, "big.json")
    assert main(["solve-brute", "--problem", big]) == EXIT_RESOURCE


def test_problem_gen_types(workdir):
    for t in ("qap", "tsp"):
        assert main(["problem-gen", "--type", t, "--m", "4", "--seed", "3", "--out", f"{t}.json"]) == 0
    assert main(["problem-gen", "--type", "tsp", "--m", "4", "--base", "--out", "tb.json"]) == 0
    assert main(["solve-brute", "--problem", "tsp.json"]) == 0
    assert main(["problem-gen", "--type", "assignment", "--m", "1", "--out", "x.json"]) == EXIT_USAGE


def test_fit_orders_domain_wall_below_one_hot_at_m9(workdir):
    from domainwall.freeze import _data_path

    rows = [r for r in read_csv(_data_path("records_illustrative.csv")) if r["m"] == "9"]
    with open("m9.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    assert main(["fit", "--records", "m9.csv", "--n", "2e5", "--out", "fit.csv"]) == 0
    out = {r["scheme"]: r for r in read_csv(workdir / "fit.csv")}
    assert float(out["domain-wall"]["T_coup"]) < float(out["one-hot"]["T_coup"])
    header = list(next(iter(out.values())))
    for col in ("m", "scheme", "T_qubo", "T_coup", "B_freeze_GHz", "s_freeze", "A_freeze_GHz"):
        assert col in header
    assert any(c.startswith("ci_") for c in header)


def test_help_lists_every_flag(capsys):
    parser = build_parser()
    sub = next(a for a in parser._actions if a.__class__.__name__ == "_SubParsersAction")
    for name, sp in sub.choices.items():
        text = sp.format_help()
        for action in sp._actions:
            for flag in action.option_strings:
                assert flag in text, (name, flag)
    assert main(["--help"]) == 0
    assert "problem-gen" in capsys.readouterr().out
