import json
import os

import numpy as np
import pytest

from hessqr.cli import EXIT_BAD_INPUT, EXIT_OK, RunConfig, info, main, run
from hessqr.errors import ParseError
from hessqr.mmio import read_matrix_market

FIXTURE = os.path.join(os.path.dirname(__file__), "fixtures", "fixture_n32.mtx")


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


class TestMatrixMarketReader:
    def test_dense_complex_roundtrip(self, tmp_path):
        path = _write(
            tmp_path,
            "m.mtx",
            "%%MatrixMarket matrix array complex general\n"
            "2 2\n"
            "1.0 0.0\n0.5 -0.25\n0.0 2.0\n-1.0 0.0\n",
        )
        a = read_matrix_market(path)
        np.testing.assert_array_equal(
            a, np.array([[1.0, 2j], [0.5 - 0.25j, -1.0]])
        )

    def test_coordinate_real(self, tmp_path):
        path = _write(
            tmp_path,
            "m.mtx",
            "%%MatrixMarket matrix coordinate real general\n"
            "% comment\n"
            "3 3 2\n"
            "1 2 7.5\n"
            "3 1 -1.0\n",
        )
        a = read_matrix_market(path)
        assert a[0, 1] == 7.5 and a[2, 0] == -1.0 and a[1, 1] == 0.0

    def test_hermitian_densified(self, tmp_path):
        path = _write(
            tmp_path,
            "m.mtx",
            "%%MatrixMarket matrix coordinate complex hermitian\n"
            "2 2 2\n"
            "1 1 1.0 0.0\n"
            "2 1 0.5 0.75\n",
        )
        a = read_matrix_market(path)
        assert a[0, 1] == np.conj(a[1, 0])

    def test_malformed_header(self, tmp_path):
        path = _write(tmp_path, "m.mtx", "%%NotMatrixMarket nonsense\n2 2\n")
        with pytest.raises(ParseError) as err:
            read_matrix_market(path)
        assert err.value.line == 1

    def test_bad_value_carries_line_number(self, tmp_path):
        path = _write(
            tmp_path,
            "m.mtx",
            "%%MatrixMarket matrix array real general\n1 1\nfoo\n",
        )
        with pytest.raises(ParseError) as err:
            read_matrix_market(path)
        assert err.value.line == 3

    def test_entry_count_mismatch(self, tmp_path):
        path = _write(
            tmp_path,
            "m.mtx",
            "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n",
        )
        with pytest.raises(ParseError):
            read_matrix_market(path)

    def test_nonsquare_rejected(self, tmp_path):
        path = _write(
            tmp_path,
            "m.mtx",
            "%%MatrixMarket matrix coordinate real general\n2 3 1\n1 1 1.0\n",
        )
        with pytest.raises(ParseError):
            read_matrix_market(path)


def _identity_mtx(tmp_path):
    return _write(
        tmp_path,
        "eye.mtx",
        "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n2 2 1.0\n",
    )


@pytest.mark.filterwarnings("ignore::UserWarning")
class TestRun:
    def test_identity_base_case(self, tmp_path):
        cfg = RunConfig(
            input_path=_identity_mtx(tmp_path),
            seed=3,
            preprocess=False,
            B=1.0,
            Gamma=1e-3,
            out_json=str(tmp_path / "out.json"),
            out_trace=str(tmp_path / "out.csv"),
        )
        report = run(cfg)
        assert sorted(v.real for v in report.eigenvalues) == pytest.approx([1.0, 1.0], abs=1e-9)
        assert report.trace_rows == []
        doc = json.loads((tmp_path / "out.json").read_text())
        assert len(doc["eigenvalues"]) == 2
        trace = (tmp_path / "out.csv").read_text().splitlines()
        assert trace == ["block_id,iteration,psi_k,branch,shift_re,shift_im"]

    def test_json_roundtrip_exact(self, tmp_path):
        cfg = RunConfig(
            input_path=FIXTURE,
            seed=11,
            preprocess=False,
            B=1.0,
            Gamma=1e-3,
            out_json=str(tmp_path / "out.json"),
        )
        report = run(cfg)
        doc = json.loads((tmp_path / "out.json").read_text())
        back = [complex(e["re"], e["im"]) for e in doc["eigenvalues"]]
        assert back == report.eigenvalues

    def test_trace_rows_within_budget(self, tmp_path):
        cfg = RunConfig(
            input_path=FIXTURE,
            seed=11,
            preprocess=False,
            B=1.0,
            Gamma=1e-3,
            out_trace=str(tmp_path / "t.csv"),
        )
        report = run(cfg)
        budget = report.document["params"]["n_dec_budget"]
        per_block = {}
        for row in report.trace_rows:
            per_block[row[0]] = per_block.get(row[0], 0) + 1
        assert per_block and all(v <= budget + 1 for v in per_block.values())


@pytest.mark.filterwarnings("ignore::UserWarning")
class TestMain:
    def test_solve_exit_codes(self, tmp_path, capsys):
        path = _identity_mtx(tmp_path)
        code = main(
            [
                "solve", path, "--seed", "5", "--no-preprocess",
                "--B", "1", "--gamma-gap", "1e-3",
                "--out-json", str(tmp_path / "e.json"),
            ]
        )
        assert code == EXIT_OK
        assert "solved n=2" in capsys.readouterr().out

    def test_malformed_input_exit_two(self, tmp_path, capsys):
        bad = _write(tmp_path, "bad.mtx", "%%MatrixMarket bogus\n")
        assert main(["solve", bad]) == EXIT_BAD_INPUT
        assert "line 1" in capsys.readouterr().err

    def test_missing_file_exit_two(self, tmp_path, capsys):
        assert main(["solve", str(tmp_path / "nope.mtx")]) == EXIT_BAD_INPUT

    def test_bad_config_exit_two(self, tmp_path, capsys):
        path = _identity_mtx(tmp_path)
        assert main(["solve", path, "--phi", "2.0"]) == EXIT_BAD_INPUT
        assert main(["solve", path, "--bits", "8"]) == EXIT_BAD_INPUT

    def test_info_reports_parameters(self, tmp_path, capsys):
        path = _identity_mtx(tmp_path)
        code = main(["info", path, "--B", "1", "--gamma-gap", "1e-3"])
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "k = 4" in out
        assert "gamma = 0.2" in out
        assert "WARNING" in out  # 53 bits < requirement at these parameters

    def test_info_no_warning_when_bits_sufficient(self, tmp_path, capsys):
        path = _identity_mtx(tmp_path)
        code = main(
            ["info", path, "--B", "1", "--gamma-gap", "1e-3", "--bits", "4000"]
        )
        assert code == EXIT_OK
        assert "WARNING" not in capsys.readouterr().out
