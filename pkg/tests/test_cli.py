import json
import subprocess
import sys

import pytest

from toruslab.cli import ExperimentConfig, main, run_preset
from toruslab.grid import GridOpenSet


def report(path):
    return json.loads((path / "report.json").read_text())


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def test_classify_example(tmp_path):
    assert run(tmp_path, "classify", "--matrix", "2 0; 0 1") == 0
    doc = report(tmp_path)
    assert doc["schema_version"] == 1
    assert doc["results"]["classification"]["case"] == "1"
    assert doc["results"]["all_transitive"] is False


def test_classify_from_preset(tmp_path):
    assert run(tmp_path, "classify", "--preset", "expanding-shear") == 0
    assert report(tmp_path)["results"]["all_transitive"] is True


def test_invariant_demo(tmp_path):
    assert run(tmp_path, "invariant-demo", "--preset", "example-2x-halfshift", "--resolution", "8") == 0
    res = report(tmp_path)["results"]
    assert res["search"]["status"] == "found"
    assert all(res["verification"].values())
    strips = res["reference_strips"]
    assert strips["U_strictly_invariant"] and strips["V_strictly_invariant"]
    assert strips["periods"] == [2, 2]
    U = GridOpenSet.from_pgm((tmp_path / "strips_U.pgm").read_bytes())
    assert U == GridOpenSet.from_rows(8, [0, 1, 4, 5])
    assert GridOpenSet.from_pgm((tmp_path / "U.pgm").read_bytes()) == GridOpenSet.from_json(res["search"]["U"])


def test_transitivity_expanding_shear(tmp_path):
    assert run(tmp_path, "transitivity", "--preset", "expanding-shear", "--resolution", "64",
               "--steps", "20000") == 0
    rep = report(tmp_path)["results"]["report"]
    assert rep["verdict"] == "transitive-evidence" and rep["scc_count"] == 1
    header = (tmp_path / "transitivity.csv").read_text().splitlines()[0]
    assert header == "N,strongly_connected,scc_count,pair,confirmed_at,coverage"


def test_inconclusive_exit_code(tmp_path):
    code = run(tmp_path, "transitivity", "--preset", "counterexample", "--resolution", "16,32", "--steps", "100")
    assert code == 2
    assert report(tmp_path)["status"] == "inconclusive"


def test_counterexample_command(tmp_path):
    assert run(tmp_path, "counterexample", "--steps", "2000", "--samples", "3", "--resolution", "32") == 0
    res = report(tmp_path)["results"]
    assert res["min_jacobian"] > 1.37
    assert res["conservativity"]["pass"] is False
    assert len((tmp_path / "coverage.csv").read_text().splitlines()) == 4


def test_hetzel_and_loops(tmp_path):
    assert run(tmp_path / "h", "hetzel", "--max-n", "2") == 0
    rows = (tmp_path / "h" / "hetzel.csv").read_text().splitlines()
    assert rows[2] == "1,exact,0.6790123456790124,55,81"
    assert run(tmp_path / "l", "loop-lemma", "--samples", "50") == 0
    assert report(tmp_path / "l")["results"]["independent_failures"] == 0


@pytest.mark.parametrize("args", [
    ["hetzel", "--max-n", "3", "--mode", "montecarlo", "--samples", "5000", "--seed", "9"],
    ["loop-lemma", "--samples", "30", "--seed", "4"],
    ["invariant-demo", "--resolution", "8"],
])
def test_byte_identical_reruns(tmp_path, args):
    assert run(tmp_path / "a", *args) == run(tmp_path / "b", *args)
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == sorted(p.name for p in (tmp_path / "b").iterdir())
    for name in names:
        if name == "report.json":
            a, b = report(tmp_path / "a"), report(tmp_path / "b")
            a["config"].pop("out"), b["config"].pop("out")
            assert a == b
        else:
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_errors(tmp_path, capsys):
    assert run(tmp_path, "bogus") == 1
    assert run(tmp_path, "classify", "--matrix", "1 2 3") == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert run(tmp_path, "transitivity", "--map", str(bad)) == 1
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 3 and all(line.startswith("toruslab: error:") for line in err)


def test_usage_error_exit_code(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "toruslab.cli", "classify", "--seed", "x"],
                          capture_output=True, text=True)
    assert proc.returncode == 1
    assert proc.stderr.count("\n") == 1


def test_run_preset_api(tmp_path):
    cfg = ExperimentConfig(command="classify", matrix="3 1; 1 1", out=str(tmp_path))
    assert run_preset("classify", cfg) == 0
    with pytest.raises(ValueError):
        run_preset("nope", cfg)
