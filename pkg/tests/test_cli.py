"""Tests for the command-line driver: exit codes, report formats, and
byte-level reproducibility."""

import json

import pytest

from pixelrank.cli import main
from pixelrank.images import load_family


def run(args):
    return main([str(a) for a in args])


@pytest.fixture()
def rect4_file(tmp_path):
    path = tmp_path / "rect4.fam"
    assert run(["gen", "--family", "rect", "--n", 4, "--out", path]) == 0
    return path


class TestGen:
    def test_rect_count(self, rect4_file):
        assert len(load_family(rect4_file)) == 9

    def test_random_deterministic_bytes(self, tmp_path):
        a = tmp_path / "a.fam"
        b = tmp_path / "b.fam"
        for out in (a, b):
            assert (
                run(["gen", "--family", "random", "--n", 4, "--m", 9, "--seed", 7, "--out", out])
                == 0
            )
        assert a.read_bytes() == b.read_bytes()

    def test_unknown_family_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as err:
            run(["gen", "--family", "blobs", "--n", 4, "--out", tmp_path / "x.fam"])
        assert err.value.code == 2

    def test_random_requires_m(self, tmp_path):
        assert (
            run(["gen", "--family", "random", "--n", 4, "--out", tmp_path / "x.fam"]) == 2
        )

    def test_impossible_family_is_input_error(self, tmp_path):
        assert (
            run(["gen", "--family", "rect", "--n", 2, "--out", tmp_path / "x.fam"]) == 2
        )


class TestCertify:
    def test_report_contents(self, rect4_file, tmp_path):
        out = tmp_path / "cert.csv"
        assert run(["certify", "--family-file", rect4_file, "--out", out]) == 0
        text = out.read_text()
        assert "# table row_configs" in text
        assert "# table subadditivity" in text
        assert "2,6" in text  # row 2 has six configurations

    def test_json_format(self, rect4_file, tmp_path):
        out = tmp_path / "cert.json"
        assert (
            run(["certify", "--family-file", rect4_file, "--out", out, "--format", "json"])
            == 0
        )
        doc = json.loads(out.read_text())
        assert doc["config"]["command"] == "certify"
        assert "fixed_row_ranks" in doc["tables"]

    def test_missing_file_exit_2(self, tmp_path):
        assert run(["certify", "--family-file", tmp_path / "nope.fam"]) == 2

    def test_corrupt_file_exit_2(self, tmp_path):
        bad = tmp_path / "bad.fam"
        bad.write_text("n=4 name=x seed=none\n111\n")
        assert run(["certify", "--family-file", bad]) == 2

    def test_empty_family_exit_0(self, tmp_path):
        path = tmp_path / "empty.fam"
        path.write_text("n=3 name=empty seed=none\n")
        out = tmp_path / "r.csv"
        assert run(["certify", "--family-file", path, "--out", out]) == 0


class TestNetworks:
    def test_tt_pipeline(self, rect4_file, tmp_path):
        net = tmp_path / "rect4.tt"
        report = tmp_path / "tt.csv"
        assert (
            run(["tt", "--family-file", rect4_file, "--out", net, "--report", report]) == 0
        )
        assert "# table bond_dims" in report.read_text()

    def test_ht_diag_pipeline(self, rect4_file, tmp_path):
        net = tmp_path / "rect4.ht"
        assert run(["ht", "--family-file", rect4_file, "--out", net]) == 0
        diag_net = tmp_path / "rect4d.ht"
        report = tmp_path / "diag.csv"
        assert (
            run(["diag", "--network", net, "--out", diag_net, "--report", report]) == 0
        )
        text = report.read_text()
        assert "# table channels" in text
        assert "4,6,36" in text  # layer 4: width 6 squares to 36

    def test_ht_pads_and_notes(self, tmp_path):
        fam = tmp_path / "bars3.fam"
        assert run(["gen", "--family", "bars", "--n", 3, "--out", fam]) == 0
        report = tmp_path / "ht.csv"
        assert run(["ht", "--family-file", fam, "--report", report]) == 0
        assert "# table padding" in report.read_text()

    def test_diag_on_diagonal_network_errors(self, rect4_file, tmp_path):
        net = tmp_path / "n.ht"
        diag_net = tmp_path / "d.ht"
        assert run(["ht", "--family-file", rect4_file, "--out", net]) == 0
        assert run(["diag", "--network", net, "--out", diag_net]) == 0
        assert run(["diag", "--network", diag_net]) == 2

    def test_crosscheck(self, rect4_file, tmp_path):
        out = tmp_path / "cc.csv"
        assert (
            run(["crosscheck", "--family-file", rect4_file, "--probes", 300, "--out", out])
            == 0
        )
        assert "max_dev_tt_ht" in out.read_text()


class TestScaleAndBaseline:
    def test_scale_rows(self, tmp_path):
        out = tmp_path / "scale.csv"
        assert (
            run(
                [
                    "scale", "--family", "rect", "--quantity", "row-configs",
                    "--n-list", "4,8", "--out", out,
                ]
            )
            == 0
        )
        text = out.read_text()
        assert "# table scaling" in text and "# table slopes" in text

    def test_scale_needs_two_points(self, tmp_path):
        assert (
            run(["scale", "--family", "rect", "--quantity", "members", "--n-list", "4"])
            == 2
        )

    def test_ht_channels_row_count(self, tmp_path):
        out = tmp_path / "channels.csv"
        assert (
            run(
                [
                    "scale", "--family", "rect", "--quantity", "ht-channels",
                    "--n-list", "8", "--out", out,
                ]
            )
            == 0
        )
        rows = [
            line
            for line in out.read_text().splitlines()
            if line and not line.startswith("#") and not line.startswith("n,")
        ]
        assert len(rows) == 7  # 2*log2(8) + 1 layers

    def test_baseline(self, tmp_path):
        out = tmp_path / "base.csv"
        assert (
            run(["baseline", "--n", 4, "--m", 9, "--seed", 7, "--cut-row", 2, "--out", out])
            == 0
        )
        assert ",9," in out.read_text()

    def test_baseline_needs_cut(self):
        assert run(["baseline", "--n", 4, "--m", 9]) == 2


class TestReproducibility:
    def test_certify_bytes_independent_of_jobs(self, rect4_file, tmp_path):
        outs = []
        for jobs in (1, 2):
            out = tmp_path / f"cert{jobs}.csv"
            assert (
                run(["certify", "--family-file", rect4_file, "--out", out, "--jobs", jobs])
                == 0
            )
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_repeat_runs_byte_identical(self, rect4_file, tmp_path):
        outs = []
        for tag in ("x", "y"):
            out = tmp_path / f"{tag}.csv"
            assert (
                run(
                    [
                        "scale", "--family", "rect", "--quantity", "members",
                        "--n-list", "4,8", "--seed", 3, "--out", out,
                    ]
                )
                == 0
            )
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_json_reports_reproducible(self, rect4_file, tmp_path):
        outs = []
        for tag in ("p", "q"):
            out = tmp_path / f"{tag}.json"
            assert (
                run(
                    [
                        "certify", "--family-file", rect4_file, "--out", out,
                        "--format", "json",
                    ]
                )
                == 0
            )
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]
