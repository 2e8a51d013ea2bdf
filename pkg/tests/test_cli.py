import json
import subprocess
import sys

import numpy as np
import pytest

from kfda import KernelSpec, TwoSample, build_bundle
from kfda.cli import EXIT_ACCEPT, EXIT_DATA, EXIT_NUMERIC, EXIT_REJECT, EXIT_USAGE, main
from kfda.statistics import kfda_from_bundle


def write_csv(path, x1, x2, header=True):
    with open(path, "w") as fh:
        if header:
            fh.write("a,b,sample\n")
        for lab, x in ((1, x1), (2, x2)):
            for row in x:
                fh.write(",".join(repr(float(v)) for v in row) + f",{lab}\n")
    return str(path)


@pytest.fixture
def same_csv(tmp_path):
    x = np.random.default_rng(0).normal(size=(25, 2))
    return write_csv(tmp_path / "same.csv", x, x)


@pytest.fixture
def far_csv(tmp_path):
    r = np.random.default_rng(1)
    return write_csv(tmp_path / "far.csv", r.normal(size=(30, 2)), r.normal(size=(30, 2)) + 8)


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


class TestExitCodes:
    def test_identical_samples_accept(self, same_csv, capsys):
        code, out, _ = run(
            ["--input", same_csv, "--calibration", "permutation", "--replicates", "200"], capsys
        )
        assert code == EXIT_ACCEPT
        report = json.loads(out)
        assert report["decision"] == "accept"
        assert report["calibration"]["p_value"] >= 0.5

    def test_far_clusters_reject(self, far_csv, capsys):
        code, out, _ = run(["--input", far_csv], capsys)
        assert code == EXIT_REJECT
        assert json.loads(out)["decision"] == "reject"

    def test_missing_file(self, tmp_path, capsys):
        missing = str(tmp_path / "nope.csv")
        code, _, err = run(["--input", missing], capsys)
        assert code == EXIT_DATA
        assert missing in err

    def test_malformed_line(self, tmp_path, capsys):
        path = tmp_path / "bad.csv"
        path.write_text("a,sample\n1.0,1\n2.0,1\nx,2\n3.0,2\n")
        code, _, err = run(["--input", str(path)], capsys)
        assert code == EXIT_DATA
        assert ":4:" in err

    def test_ragged_row(self, tmp_path, capsys):
        path = tmp_path / "ragged.csv"
        path.write_text("a,sample\n1.0,1\n2.0,1,5\n")
        code, _, err = run(["--input", str(path)], capsys)
        assert code == EXIT_DATA and ":3:" in err

    def test_bad_label(self, tmp_path, capsys):
        path = tmp_path / "lab.csv"
        path.write_text("a,sample\n1.0,1\n2.0,3\n")
        assert run(["--input", str(path)], capsys)[0] == EXIT_DATA

    def test_degenerate_spectrum(self, tmp_path, capsys):
        path = write_csv(tmp_path / "const.csv", np.ones((4, 2)), np.ones((4, 2)))
        code, _, err = run(["--input", path, "--bandwidth", "1.0"], capsys)
        assert code == EXIT_NUMERIC
        assert "d2 = 0" in err

    @pytest.mark.parametrize(
        "argv",
        [
            ["--bogus"],
            ["--command", "test"],
            ["--command", "calibrate", "--replications", "50"],
            ["--command", "power", "--alternative", "fixed", "--eta", "0.75", "--replications", "100"],
            ["--command", "test", "--input", "x.csv", "--block-length", "3"],
            ["--gamma-schedule", "decaying:0.7", "--input", "x.csv"],
            ["--alpha", "1.5", "--input", "x.csv"],
        ],
    )
    def test_usage_errors(self, argv, capsys):
        assert run(argv, capsys)[0] == EXIT_USAGE

    def test_linear_kernel_warns(self, far_csv, capsys):
        code, _, err = run(["--input", far_csv, "--kernel", "linear"], capsys)
        assert code == EXIT_REJECT
        assert "linear kernel" in err


class TestOutput:
    def test_json_round_trip(self, far_csv, capsys):
        code, out, _ = run(["--input", far_csv, "--gamma", "0.05"], capsys)
        report = json.loads(out)
        r = np.random.default_rng(1)
        s = TwoSample.from_samples(r.normal(size=(30, 2)), r.normal(size=(30, 2)) + 8)
        value = kfda_from_bundle(build_bundle(s, KernelSpec.gaussian()), 0.05)
        assert report["statistic"] == value.as_dict()
        assert report["metadata"]["n1"] == 30 and report["metadata"]["gamma"] == 0.05

    def test_tsv_layout(self, far_csv, capsys):
        _, out, _ = run(["--input", far_csv, "--format", "tsv"], capsys)
        lines = out.split("\n")
        assert out.endswith("\n") and "\r" not in out
        header, row = lines[0].split("\t"), lines[1].split("\t")
        assert len(header) == len(row)
        alpha = row[header.index("calibration.alpha")]
        assert alpha == "%.17g" % 0.05

    def test_two_file_input(self, tmp_path, capsys):
        r = np.random.default_rng(2)
        f1, f2 = tmp_path / "s1.csv", tmp_path / "s2.csv"
        np.savetxt(f1, r.normal(size=(20, 3)), delimiter=",")
        np.savetxt(f2, r.normal(size=(15, 3)), delimiter=",")
        code, out, _ = run(["--sample1", str(f1), "--sample2", str(f2)], capsys)
        assert code in (EXIT_ACCEPT, EXIT_REJECT)
        assert json.loads(out)["metadata"]["n2"] == 15


class TestDeterminism:
    @pytest.mark.parametrize(
        "extra",
        [
            ["--command", "test", "--calibration", "bootstrap", "--replicates", "200"],
            ["--command", "power", "--q", "2", "--eta", "3", "--n1", "30", "--n2", "30",
             "--gammas", "1e-2,1e-4", "--replications", "100"],
            ["--command", "roc", "--n1", "15", "--n2", "15", "--replications", "100",
             "--alphas", "0.05,0.5"],
            ["--command", "calibrate", "--n1", "20", "--n2", "20", "--replications", "100"],
        ],
        ids=["test", "power", "roc", "calibrate"],
    )
    def test_byte_identical(self, extra, far_csv, tmp_path):
        outs = []
        for i in range(2):
            out = tmp_path / f"out{i}"
            main(extra + ["--input", far_csv, "--seed", "17", "--out", str(out)])
            outs.append(out.read_bytes())
        assert outs[0] == outs[1] and len(outs[0]) > 0


class TestStudies:
    def test_power_null_columns(self, capsys):
        code, out, _ = run(
            ["--command", "power", "--q", "3", "--eta", "0", "--n1", "50", "--n2", "50",
             "--gammas", "1e-3", "--replications", "200", "--seed", "4"],
            capsys,
        )
        assert code == 0
        header, row = [line.split("\t") for line in out.strip().split("\n")]
        assert header == ["gamma", "q", "n", "theoretical_power", "empirical_power_kfda",
                          "empirical_power_mmd", "se"]
        vals = dict(zip(header, row))
        se = np.sqrt(0.05 * 0.95 / 200)
        assert abs(float(vals["empirical_power_kfda"]) - 0.05) < 3 * se
        assert abs(float(vals["empirical_power_mmd"]) - 0.05) < 3 * se

    def test_calibrate_mixture_level(self, capsys):
        code, out, _ = run(["--command", "calibrate", "--calibration", "mixture", "--seed", "1"], capsys)
        report = json.loads(out)
        (row,) = report["methods"]
        assert row["method"] == "mixture"
        assert 0.03 <= row["level"] <= 0.08


def test_module_entry_point(far_csv):
    proc = subprocess.run(
        [sys.executable, "-m", "kfda", "--input", far_csv], capture_output=True, text=True
    )
    assert proc.returncode == EXIT_REJECT
    assert json.loads(proc.stdout)["decision"] == "reject"
