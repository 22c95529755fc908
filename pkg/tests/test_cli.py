import csv
import io
import json
import subprocess
import sys

import pytest

from lidarp.cli import auto_order, main
from lidarp.model import (
    Instance,
    Line,
    Request,
    ThreePartitionInstance,
    dump_instance,
    instance_to_dict,
    load_instance,
)
from lidarp.reductions import gen_service_time

POLY = Instance(Line.from_gaps([1, 1, 1]), (Request(0, 0, 2), Request(1, 1, 3), Request(2, 3, 0)))
WINDOWED = Instance(Line.from_gaps([1, 1]), (Request(0, 0, 2, 0, 5), Request(1, 2, 0, 1, 6)))


@pytest.fixture
def write(tmp_path):
    def _write(inst, name="inst.json"):
        path = tmp_path / name
        dump_instance(inst, path)
        return str(path)
    return _write


def run_json(capsys, argv):
    code = main(argv)
    return code, json.loads(capsys.readouterr().out)


def test_auto_picks_poly(write, capsys):
    code, report = run_json(capsys, ["solve", write(POLY), "--json"])
    assert code == 0
    assert report["algo"] == "poly" and report["tau"] == 3 and report["max_served"] == 3


def test_auto_order():
    assert auto_order(POLY) == ["poly", "xp", "brute"]
    assert auto_order(WINDOWED) == ["fpt", "brute"]
    hard = gen_service_time(ThreePartitionInstance((1,) * 6, 2, 3)).instance
    assert auto_order(hard) == ["xp", "brute"]


def test_each_algorithm_agrees(write, capsys):
    path = write(POLY)
    taus = set()
    for algo in ("poly", "xp", "brute"):
        code, report = run_json(capsys, ["solve", path, "--algo", algo, "--json"])
        assert code == 0 and report["algo"] == algo
        taus.add(report["tau"])
    assert taus == {3}


def test_human_output(write, capsys):
    assert main(["solve", write(WINDOWED)]) == 0
    out = capsys.readouterr().out
    assert "algorithm   fpt" in out and "max served  2 / 2" in out


def test_windowed_with_xp_is_not_applicable(write, capsys):
    assert main(["solve", write(WINDOWED), "--algo", "xp"]) == 2
    assert "Windowed" in capsys.readouterr().err


def test_brute_over_limits(write, capsys):
    many = Instance(Line.from_gaps([1]), tuple(Request(i, 0, 1) for i in range(7)))
    assert main(["solve", write(many), "--algo", "brute"]) == 2
    assert "LimitsExceeded" in capsys.readouterr().err


def test_fpt_without_horizon(write, capsys):
    assert main(["solve", write(POLY), "--algo", "fpt"]) == 2
    assert main(["solve", write(POLY), "--algo", "poly"]) == 0
    hard = gen_service_time(ThreePartitionInstance((1,) * 6, 2, 3)).instance
    assert main(["solve", write(hard), "--algo", "poly"]) == 2


def test_bad_instance_files(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert main(["solve", str(bad)]) == 1
    doc = instance_to_dict(POLY)
    doc["requests"][0]["d"] = 0
    bad.write_text(json.dumps(doc))
    assert main(["solve", str(bad)]) == 1
    assert "BadStopIndex" in capsys.readouterr().err
    assert main(["solve", str(tmp_path / "missing.json")]) == 1


def test_solve_then_verify(write, tmp_path, capsys):
    path, sol = write(WINDOWED), str(tmp_path / "sol.json")
    assert main(["solve", path, "--out", sol]) == 0
    capsys.readouterr()
    code, report = run_json(capsys, ["verify", path, sol, "--json"])
    assert code == 0 and report["served"] == 2 and report["violations"] == []


def test_verify_catches_corrupt_gap(write, tmp_path, capsys):
    path, sol = write(POLY), tmp_path / "sol.json"
    assert main(["solve", path, "--out", str(sol)]) == 0
    doc = json.loads(sol.read_text())
    wps = [w for s in doc["tours"][0]["subroutes"] for w in s["waypoints"]]
    wps[1]["time"] = wps[0]["time"]  # second stop reached instantly
    sol.write_text(json.dumps(doc))
    capsys.readouterr()
    assert main(["verify", path, str(sol)]) == 3
    assert "gap" in capsys.readouterr().out.lower()


def test_verify_unknown_request(write, tmp_path, capsys):
    path, sol = write(POLY), tmp_path / "sol.json"
    main(["solve", path, "--out", str(sol)])
    doc = json.loads(sol.read_text())
    doc["tours"][0]["subroutes"][0]["waypoints"][0]["req"] = 99
    sol.write_text(json.dumps(doc))
    assert main(["verify", path, str(sol)]) == 1
    assert "UnknownRequest" in capsys.readouterr().err


def test_gen_writes_instance_and_meta(tmp_path, capsys):
    out, meta = tmp_path / "i.json", tmp_path / "m.json"
    code = main(["gen", "3p-servicetime", "--set", "4,4,4,4,4,6", "--m", "2", "--T", "13",
                 "--out", str(out), "--meta", str(meta)])
    assert code == 0
    assert load_instance(out).h == 316
    assert json.loads(meta.read_text())["expected_tau_no_lower_bound"] == 5


@pytest.mark.parametrize("construction", ["3p-shortcut", "3p-timewindows", "3p-gap"])
def test_gen_other_constructions(tmp_path, construction):
    out = tmp_path / "i.json"
    args = ["gen", construction, "--set", "1,1,1,1,1,1", "--m", "2", "--T", "3", "--out", str(out)]
    assert main(args) == 0
    assert load_instance(out).n > 0


@pytest.mark.parametrize(
    "values, T, extra",
    [("4,4,4,4,4,5", "13", []), ("3,6,3,3,3,6", "12", []), ("x,1", "3", []),
     ("1,1,1,1,1,1", "3", ["--c", "1"])],
)
def test_gen_rejects_bad_input(tmp_path, capsys, values, T, extra):
    args = ["gen", "3p-servicetime", "--set", values, "--m", "2", "--T", T,
            "--out", str(tmp_path / "i.json")] + extra
    assert main(args) == 1
    assert capsys.readouterr().err.startswith("error:")


def test_gen_non_strict(tmp_path):
    args = ["gen", "3p-servicetime", "--set", "3,1,1,2,2,2,1,1,2", "--m", "3", "--T", "5",
            "--out", str(tmp_path / "i.json")]
    assert main(args) == 1
    assert main(args + ["--non-strict"]) == 0


def read_rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_bench_poly_directory(tmp_path, capsys):
    import random
    from instances import poly_instance
    rng = random.Random(5)
    for i in range(10):
        dump_instance(poly_instance(rng, n=(1, 8), h=(2, 6)), tmp_path / f"p{i:02d}.json")
    csv_path = tmp_path / "out.csv"
    assert main(["bench", str(tmp_path), "--timeout", "30", "--csv", str(csv_path)]) == 0
    rows = read_rows(capsys.readouterr().out)
    assert len(rows) == 10
    assert [r["instance"] for r in rows] == sorted(r["instance"] for r in rows)
    assert all(r["status"] == "ok" and r["algo"] == "poly" for r in rows)
    assert read_rows(csv_path.read_text()) == rows


def test_bench_corrupt_and_timeout(tmp_path, capsys):
    dump_instance(POLY, tmp_path / "a_ok.json")
    (tmp_path / "b_corrupt.json").write_text("not json")
    hard = gen_service_time(ThreePartitionInstance((4, 4, 4, 4, 4, 6), 2, 13)).instance
    dump_instance(hard, tmp_path / "c_slow.json")
    code, doc = run_json(capsys, ["bench", str(tmp_path), "--algo", "xp", "--timeout", "1", "--json"])
    assert code == 0
    status = {r["instance"]: r["status"] for r in doc["rows"]}
    assert status == {"a_ok.json": "ok", "b_corrupt.json": "error", "c_slow.json": "timeout"}


def test_bench_all_failing(tmp_path, capsys):
    dump_instance(WINDOWED, tmp_path / "w.json")
    assert main(["bench", str(tmp_path), "--algo", "xp"]) == 2
    assert read_rows(capsys.readouterr().out)[0]["status"] == "not_applicable"
    assert main(["bench", str(tmp_path / "nope")]) == 1


def test_module_entry_point(write):
    proc = subprocess.run([sys.executable, "-m", "lidarp", "solve", write(POLY), "--json"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["tau"] == 3
