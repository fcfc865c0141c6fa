"""Front-end behaviour: flag parsing, rendering, exit codes, round trips.

Heavy sweeps are exercised with trimmed grids and seed counts; the
wide-grid reproductions live in the acceptance tests.
"""

from __future__ import annotations

import json

import numpy as np
import pytest

from conftest import ket
from schmidt_measure import InputError, save_state, zoo
from schmidt_measure.cli import (RunConfig, _parse_params, _resolve_splits,
                                 build_parser, cmd_bsa, cmd_measure,
                                 cmd_monotone, cmd_table1, cmd_table2,
                                 cmd_verify, main, value_form)


def cfg(**kw):
    return RunConfig(command=kw.pop("command", "measure"), **kw)


class TestRunConfig:

    def test_rejects_unknown_format(self):
        with pytest.raises(InputError):
            cfg(fmt="xml")

    def test_rejects_bad_tolerance(self):
        with pytest.raises(InputError):
            cfg(tol=0.0)

    def test_rejects_bad_grid(self):
        with pytest.raises(InputError):
            cfg(grid_step=0.7)


class TestParamParsing:

    def test_types(self):
        assert _parse_params(["n=4", "lam=0.7"]) == {"n": 4, "lam": 0.7}

    def test_aliases(self):
        assert _parse_params(["lambda=0.5", "mu=0.25"]) == \
            {"lam": 0.5, "mu": 0.25}

    def test_rejects_non_numeric(self):
        with pytest.raises(InputError):
            _parse_params(["n=four"])

    def test_rejects_missing_equals(self):
        with pytest.raises(InputError):
            _parse_params(["n4"])


class TestSplitSelector:

    def test_all_enumerates(self):
        assert len(_resolve_splits("all", 3)) == 4
        assert len(_resolve_splits("all", 4)) == 14

    def test_table_sets(self):
        assert [str(s) for s in _resolve_splits("table", 4)] == \
            ["1|2|3|4", "12|3|4", "12|34", "13|24", "123|4"]
        assert len(_resolve_splits("table", 3)) == 4
        with pytest.raises(InputError):
            _resolve_splits("table", 5)

    def test_block_count(self):
        assert all(s.k == 2 for s in _resolve_splits("2", 4))
        assert len(_resolve_splits("2", 4)) == 7

    def test_explicit_list(self):
        splits = _resolve_splits("12|3,1|23", 3)
        assert [str(s) for s in splits] == ["12|3", "1|23"]

    def test_bad_selector(self):
        with pytest.raises(InputError):
            _resolve_splits("9", 4)


class TestValueForm:

    def test_integers(self):
        assert value_form(0.0) == "0"
        assert value_form(1.0) == "1"
        assert value_form(2.0 + 1e-12) == "2"

    def test_logarithms(self):
        assert value_form(np.log2(3.0)) == "log2(3)"
        assert value_form(np.log2(5.0)) == "log2(5)"

    def test_fractions(self):
        assert value_form(2.0 / 3.0) == "2/3·1"
        assert value_form(0.5) == "1/2·1"

    def test_fallback(self):
        assert value_form(0.8111111111111111) == "0.811111"


class TestCmdMeasure:

    def test_ghz4_all_splits(self):
        code, report = cmd_measure(cfg(zoo_name="ghz", params=(("n", 4),),
                                       splits="all", fmt="json"))
        assert code == 0
        rows = json.loads(report)["rows"]
        assert len(rows) == 14
        assert all(r["exact"] for r in rows)
        assert all(abs(r["upper"] - 1.0) < 1e-9 for r in rows)

    def test_w3_full_split(self):
        code, report = cmd_measure(cfg(zoo_name="w", params=(("n", 3),),
                                       splits="1|2|3", fmt="json"))
        rows = json.loads(report)["rows"]
        assert rows[0]["form"] == "log2(3)"

    def test_product_state_file(self, tmp_path):
        path = tmp_path / "state.json"
        save_state(ket("00"), path)
        code, report = cmd_measure(cfg(state_path=str(path), fmt="json"))
        rows = json.loads(report)["rows"]
        assert code == 0
        assert len(rows) == 1
        assert rows[0]["form"] == "0"

    def test_mixed_state_rows(self):
        code, report = cmd_measure(cfg(zoo_name="rho_g",
                                       params=(("lam", 0.5),),
                                       splits="12|3", fmt="json"))
        rows = json.loads(report)["rows"]
        assert rows[0]["exact"]
        assert rows[0]["upper"] == pytest.approx(0.5, abs=1e-7)

    def test_witness_needs_single_split(self, tmp_path):
        with pytest.raises(InputError):
            cmd_measure(cfg(zoo_name="ghz", params=(("n", 3),),
                            splits="all",
                            emit_witness=str(tmp_path / "w.json")))

    def test_rejects_two_sources(self):
        with pytest.raises(InputError):
            cmd_measure(cfg(zoo_name="ghz", state_path="x.json"))


class TestCmdTable1:

    def test_twenty_rows_match_catalogue(self):
        code, report = cmd_table1(cfg(command="table1", fmt="json"))
        rows = json.loads(report)["rows"]
        assert len(rows) == 20
        for row in rows:
            entry = zoo.ZOO[row["state"]]
            params = {"n": 4} if "n" in entry.params else {}
            want = zoo.expected_measure(entry, row["split"], **params)
            assert row["exact"]
            assert row["value"] == pytest.approx(want, abs=1e-9)

    def test_deterministic_output(self):
        a = cmd_table1(cfg(command="table1", seed=3, fmt="json"))[1]
        b = cmd_table1(cfg(command="table1", seed=3, fmt="json"))[1]
        assert a == b

    def test_csv_shape(self):
        code, report = cmd_table1(cfg(command="table1", fmt="csv"))
        lines = report.splitlines()
        assert lines[0] == "state,split,rank_lo,rank_hi,value,exact,form"
        assert len(lines) == 21


class TestCmdTable2:

    def test_coarse_grid_closes(self):
        code, report = cmd_table2(cfg(command="table2", grid_step=0.25,
                                      fmt="json"))
        rows = json.loads(report)["rows"]
        assert len(rows) == 28
        assert all(r["exact"] for r in rows)
        by_key = {(r["state"], r["split"]): r for r in rows}
        assert by_key[("rho_m", "1|2|3")]["upper"] == \
            pytest.approx(1.0, abs=1e-7)
        assert by_key[("rho_g(0.5)", "23|1")]["upper"] == \
            pytest.approx(0.5, abs=1e-7)


class TestCmdBsa:

    def test_werner_weight(self):
        code, report = cmd_bsa(cfg(command="bsa", zoo_name="werner",
                                   params=(("lam", 0.7),), fmt="json"))
        rows = json.loads(report)["rows"]
        assert rows[0]["weight"] == pytest.approx(0.45, abs=1e-6)
        assert rows[0]["certified"] is True

    def test_needs_two_split(self):
        with pytest.raises(InputError):
            cmd_bsa(cfg(command="bsa", zoo_name="rho_m", splits="1|2|3"))


class TestCmdMonotone:

    def test_small_sweep_json(self):
        code, report = cmd_monotone(cfg(command="monotone", seeds=2,
                                        suite="unitary", fmt="json"))
        data = json.loads(report)
        assert data["violations"] == 0
        assert all(r["verdict"] == "verified" for r in data["rows"])

    def test_unknown_suite(self):
        with pytest.raises(InputError):
            cmd_monotone(cfg(command="monotone", suite="nope"))


class TestCmdVerify:

    def test_pure_round_trip(self, tmp_path):
        path = tmp_path / "witness.json"
        cmd_measure(cfg(zoo_name="ghz", params=(("n", 3),),
                        splits="1|2|3", emit_witness=str(path)))
        code, report = cmd_verify(cfg(command="verify",
                                      witness_path=str(path)))
        assert code == 0
        assert report.startswith("verified")

    def test_ensemble_round_trip(self, tmp_path):
        path = tmp_path / "witness.json"
        cmd_bsa(cfg(command="bsa", zoo_name="werner",
                    params=(("lam", 0.55),), emit_witness=str(path)))
        code, report = cmd_verify(cfg(command="verify",
                                      witness_path=str(path)))
        assert code == 0

    def test_tampered_weights_fail(self, tmp_path):
        path = tmp_path / "witness.json"
        cmd_bsa(cfg(command="bsa", zoo_name="werner",
                    params=(("lam", 0.55),), emit_witness=str(path)))
        doc = json.loads(path.read_text())
        doc["weights"][0], doc["weights"][1] = (doc["weights"][1],
                                                doc["weights"][0])
        path.write_text(json.dumps(doc))
        code, report = cmd_verify(cfg(command="verify",
                                      witness_path=str(path)))
        assert code == 2
        assert report.startswith("failed")

    def test_malformed_document(self, tmp_path):
        path = tmp_path / "witness.json"
        path.write_text(json.dumps({"kind": "ensemble"}))
        with pytest.raises(InputError):
            cmd_verify(cfg(command="verify", witness_path=str(path)))


class TestMain:

    def test_measure_exit_zero(self, capsys):
        assert main(["measure", "--zoo", "ghz", "--param", "n=3",
                     "--splits", "12|3"]) == 0
        out = capsys.readouterr().out
        assert "12|3" in out

    def test_unknown_zoo_exit_two(self, capsys):
        assert main(["measure", "--zoo", "nosuch"]) == 2
        assert "unknown zoo state" in capsys.readouterr().err

    def test_unreadable_state_exit_two(self, capsys):
        assert main(["measure", "--state", "/nonexistent.json"]) == 2

    def test_verify_round_trip(self, tmp_path, capsys):
        path = tmp_path / "w.json"
        assert main(["measure", "--zoo", "w", "--param", "n=3",
                     "--splits", "1|2|3",
                     "--emit-witness", str(path)]) == 0
        assert main(["verify", str(path)]) == 0

    def test_parser_requires_command(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])
