import csv
import io
import json
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest

from monolab.capture import analyze, query_lower_bound
from monolab.cli import main
from monolab.distance import FunctionTable, distance_to_monotone
from monolab.family import FamilyParams, HardFunction, sample
from monolab.testers import random_tree, tree_to_json


def run(capsys, *args):
    code = main(list(args))
    out = capsys.readouterr()
    return code, out.out, out.err


def results(path):
    return json.loads(path.read_text())["results"]


def test_gen_all_counts(capsys, tmp_path):
    for m, eps, count in [("8", "1/8", 25), ("4", "1/2", 5), ("4", "1/4", 7)]:
        out = tmp_path / f"gen_{m}_{count}.json"
        assert run(capsys, "gen", "--m", m, "--epsilon", eps, "--all", "--out", str(out))[0] == 0
        funcs = results(out)["functions"]
        assert len(funcs) == count
        assert funcs[0]["kind"] == "base" and funcs[0]["mass"] == "1/2"
        assert sum(Fraction(f["mass"]) for f in funcs) == 1


def test_gen_seeded_is_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run(capsys, "gen", "--m", "4", "--epsilon", "1/4", "--seed", "7", "--out", str(a))
    run(capsys, "gen", "--m", "4", "--epsilon", "1/4", "--seed", "7", "--out", str(b))
    assert results(a) == results(b)
    (desc,) = results(a)["functions"]
    expected = sample(FamilyParams(4, Fraction(1, 4)), np.random.default_rng(7))
    assert HardFunction.from_descriptor(desc) == expected


def test_gen_usage_errors(capsys):
    code, _, err = run(capsys, "gen", "--m", "4", "--epsilon", "1/4")
    assert code == 1 and "--seed" in err
    code, _, err = run(capsys, "gen", "--m", "4", "--epsilon", "1/32", "--all")
    assert code == 1 and "2^(1-m) <= epsilon <= 1/2" in err
    code, _, _ = run(capsys, "gen", "--m", "4", "--epsilon", "1/6", "--all")
    assert code == 1


def test_gen_csv_tables(capsys, tmp_path):
    assert run(capsys, "gen", "--m", "4", "--epsilon", "1/4", "--all", "--format", "csv", "--out", str(tmp_path))[0] == 0
    assert len(list(tmp_path.glob("*.csv"))) == 7
    table = FunctionTable.read_csv((tmp_path / "g_2_1.csv").read_text())
    assert table == FunctionTable.from_hard_function(HardFunction(FamilyParams(4, Fraction(1, 4)), 2, 1))


def test_distance_command(capsys, tmp_path):
    run(capsys, "gen", "--m", "4", "--epsilon", "1/4", "--all", "--format", "csv", "--out", str(tmp_path))
    for name, expected in [("base.csv", "0/1"), ("g_2_1.csv", "1/4")]:
        cert = tmp_path / f"{name}.cert.json"
        assert run(capsys, "distance", str(tmp_path / name), "--out", str(cert))[0] == 0
        (entry,) = results(cert)["certificates"]
        assert entry["distance"] == expected and entry["selfCheck"]


def test_distance_matches_library(capsys, tmp_path):
    desc = tmp_path / "all.json"
    run(capsys, "gen", "--m", "4", "--epsilon", "1/4", "--all", "--out", str(desc))
    out = tmp_path / "certs.json"
    assert run(capsys, "distance", str(desc), "--n", "4", "--d", "2", "--out", str(out))[0] == 0
    certs = results(out)["certificates"]
    assert len(certs) == 7
    from monolab.hypergrid import DomainParams

    for entry, f in zip(certs, results(desc)["functions"]):
        t = FunctionTable.from_hard_function(HardFunction.from_descriptor(f), DomainParams(4, 2))
        lib = distance_to_monotone(t)
        assert entry["distance"] == f"{lib.distance.numerator}/{lib.distance.denominator}"
        assert entry["coverSize"] == len(lib.cover)


def test_tampered_certificate_fails(capsys, tmp_path):
    run(capsys, "gen", "--m", "4", "--epsilon", "1/4", "--all", "--format", "csv", "--out", str(tmp_path))
    table = tmp_path / "g_3_2.csv"
    cert = tmp_path / "cert.json"
    run(capsys, "distance", str(table), "--out", str(cert))
    assert run(capsys, "distance", str(table), "--certificate", str(cert))[0] == 0
    doc = json.loads(cert.read_text())
    doc["results"]["certificates"][0]["cover"].pop()
    cert.write_text(json.dumps(doc))
    code, _, err = run(capsys, "distance", str(table), "--certificate", str(cert))
    assert code == 3 and "self-check" in err


def test_distance_malformed_table(capsys, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("bitstring,value\n0000,1\n00x1,2\n")
    assert run(capsys, "distance", str(bad))[0] == 1


def test_capture_command(capsys, tmp_path):
    empty = tmp_path / "empty.txt"
    empty.write_text("")
    out = tmp_path / "r.json"
    assert run(capsys, "capture", str(empty), "--m", "8", "--epsilon", "1/8", "--out", str(out))[0] == 0
    assert results(out)["errorLowerBound"] == "1/2"

    five = tmp_path / "five.txt"
    five.write_text("00000000\n10000000\n01000000\n11000000\n00100000\n")
    run(capsys, "capture", str(five), "--m", "8", "--epsilon", "1/8", "--out", str(out))
    assert Fraction(results(out)["errorLowerBound"]) >= Fraction(1, 8)

    block = tmp_path / "block.txt"
    block.write_text("".join(f"{v & 1}{v >> 1 & 1}{v >> 2 & 1}0\n" for v in range(8)))
    run(capsys, "capture", str(block), "--m", "4", "--epsilon", "1/4", "--out", str(out))
    rep = results(out)
    assert rep["indistinguishableCount"] == 3
    assert set(rep) == set(analyze([], FamilyParams(4, Fraction(1, 4))).to_json())


def test_capture_length_mismatch(capsys, tmp_path):
    q = tmp_path / "q.txt"
    q.write_text("0101\n")
    assert run(capsys, "capture", str(q), "--m", "8", "--epsilon", "1/8")[0] == 1


def test_bound_command(capsys):
    code, out, _ = run(capsys, "bound", "--n", "1024", "--d", "10", "--epsilon", "1/8", "--format", "json")
    doc = json.loads(out)
    assert code == 0
    assert (doc["display"], doc["threshold"], doc["mPrime"]) == ("97/1", "98/1", 98)
    code, out, _ = run(capsys, "bound", "--n", "2", "--d", "1", "--epsilon", "1/2", "--format", "json")
    assert json.loads(out)["threshold"] == "1/4"
    code, out, _ = run(capsys, "bound", "--n", "1024", "--d", "10", "--epsilon", "1/8")
    assert "97" in out and "98" in out and "." not in out.replace("...", "")
    assert run(capsys, "bound", "--n", "6", "--d", "1", "--epsilon", "1/2")[0] == 1


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_simulate_greedy_floor_and_reproducibility(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["simulate", "--tester", "greedy", "--m", "8", "--epsilon", "1/8", "--budget", "1-12",
            "--trials", "300", "--seed", "5"]
    assert run(capsys, *args, "--out", str(a))[0] == 0
    run(capsys, *args, "--out", str(b))
    assert a.read_bytes() == b.read_bytes()
    rows = _rows(a.read_text())
    assert list(rows[0]) == ["budget", "exactError", "mcError", "ciLow", "ciHigh", "seed"]
    assert [int(r["budget"]) for r in rows] == list(range(1, 13))
    for r in rows:
        if int(r["budget"]) <= 5:
            assert Fraction(r["exactError"]) >= Fraction(1, 8)


def test_simulate_random_tree_floor(capsys):
    code, out, _ = run(capsys, "simulate", "--tester", "random-tree", "--m", "8", "--epsilon", "1/8",
                       "--budget", "1-5", "--trials", "100", "--seed", "1")
    assert code == 0
    assert all(Fraction(r["exactError"]) >= Fraction(1, 8) for r in _rows(out))


def test_simulate_pair_trend(capsys):
    code, out, _ = run(capsys, "simulate", "--tester", "pair", "--n", "16", "--d", "2", "--epsilon", "1/8",
                       "--budget", "1,16,128,1024", "--trials", "400", "--seed", "2")
    assert code == 0
    errs = [float(r["mcError"]) for r in _rows(out)]
    assert errs == sorted(errs, reverse=True) and errs[0] > errs[-1]
    assert all(r["exactError"] == "" for r in _rows(out))


def test_simulate_tree_file_and_transform(capsys, tmp_path):
    p = FamilyParams(8, Fraction(1, 8))
    tree = random_tree(p, 4, np.random.default_rng(3))
    path = tmp_path / "tree.json"
    path.write_text(json.dumps(tree_to_json(tree)))
    code, out, _ = run(capsys, "simulate", "--tester", "tree", "--tree", str(path), "--m", "8",
                       "--epsilon", "1/8", "--trials", "200", "--seed", "1")
    assert code == 0 and _rows(out)[0]["budget"] == "4"
    res = tmp_path / "t.json"
    assert run(capsys, "transform", str(path), "--m", "8", "--epsilon", "1/8", "--out", str(res))[0] == 0
    doc = results(res)
    assert Fraction(doc["derivedExactError"]) <= Fraction(doc["treeExactError"])
    assert len(doc["distinguisher"]["queries"]) == 4


def test_simulate_usage_errors(capsys):
    assert run(capsys, "simulate", "--tester", "nope", "--m", "8", "--epsilon", "1/8", "--seed", "1")[0] == 1
    assert run(capsys, "simulate", "--tester", "pair", "--epsilon", "1/8", "--seed", "1")[0] == 1
    assert run(capsys, "simulate", "--tester", "greedy", "--m", "8", "--epsilon", "1/8")[0] == 1


def test_console_script_exit_code():
    proc = subprocess.run([sys.executable, "-m", "monolab.cli", "bound", "--n", "3", "--d", "1", "--epsilon", "1/2"],
                          capture_output=True, text=True)
    assert proc.returncode == 1
    proc = subprocess.run([sys.executable, "-m", "monolab.cli", "bound", "--n", "1024", "--d", "10",
                           "--epsilon", "1/8", "--format", "json"], capture_output=True, text=True)
    assert proc.returncode == 0
    qb = query_lower_bound(1024, 10, Fraction(1, 8))
    assert json.loads(proc.stdout)["display"] == f"{qb.display.numerator}/{qb.display.denominator}"
