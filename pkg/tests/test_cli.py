import json
import subprocess
import sys

import pytest

from dwmoe.cli import main
from dwmoe.data import load_sample_csv
from dwmoe.evaluation import parse_report

from cli_runs import run_all


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("cli")
    return run_all(base / "a"), run_all(base / "b")


def test_byte_identical(runs):
    a, b = runs
    for key in a:
        assert a[key].read_bytes() == b[key].read_bytes(), key


def test_outputs_parse(runs):
    files = runs[0]
    samples, names = load_sample_csv(files["drift"].read_text())
    assert len(samples) == 130 and names[0] == "platinum"
    report = parse_report(files["report"].read_text())
    assert report.horizon == 20
    assert parse_report(files["report_json"].read_text(), "json").horizon == 20
    assert set(json.loads(files["ensemble"].read_text())) >= {"experts", "partition", "weights"}


def test_seed_changes_output(tmp_path):
    main(["gen-data", "--kind", "drift", "--seed", "1", "--out", str(tmp_path / "a.csv")])
    main(["gen-data", "--kind", "drift", "--seed", "2", "--out", str(tmp_path / "b.csv")])
    assert (tmp_path / "a.csv").read_bytes() != (tmp_path / "b.csv").read_bytes()


class TestExitCodes:
    def test_usage_missing_argument(self):
        with pytest.raises(SystemExit) as info:
            main(["gen-data", "--kind", "drift"])
        assert info.value.code == 1

    def test_usage_bad_choice(self):
        with pytest.raises(SystemExit) as info:
            main(["predict", "--ensemble", "e", "--data", "d", "--scheme", "best", "--out", "o"])
        assert info.value.code == 1

    def test_usage_conflicting_options(self, tmp_path):
        assert main(["gen-data", "--kind", "drift", "--n", "5", "--seed", "0", "--out", str(tmp_path / "x")]) == 1

    def test_data_error_bad_price(self, tmp_path):
        data = tmp_path / "p.csv"
        data.write_text("date,a\n2024-01-02,1\n2024-01-03,-5\n")
        (tmp_path / "c.json").write_text("{}")
        code = main(["train", "--data", str(data), "--config", str(tmp_path / "c.json"), "--out", str(tmp_path / "e")])
        assert code == 2

    def test_data_error_missing_file(self, tmp_path):
        code = main(["predict", "--ensemble", str(tmp_path / "none.json"), "--data", "x", "--scheme", "dynamic",
                     "--out", str(tmp_path / "r.csv")])
        assert code == 2

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "dwmoe", "--help"], capture_output=True, text=True)
        assert proc.returncode == 0
        assert "bench-forecast" in proc.stdout
