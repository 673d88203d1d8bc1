import io
import json
import logging
import sys
from pathlib import Path

import pandas as pd
import pytest
import yaml

from crossings.__main__ import EXIT_CHECK_FAILED, EXIT_CONFIG_ERROR, EXIT_OK, main
from crossings.cft_formulas import strip_mean_crossings
from crossings.config import load_config_from_file, parse_experiment
from crossings.exact_enumeration import SmallGraph
from crossings.harness import ComparisonRow, EnumerationRow, FormulaRow
from crossings.lattice_mc import CrossingStats
from crossings.output import columns, parse_json_rows

SINGLE_BOND = {"n_sites": 2, "bonds": [[0, 1]], "gamma1": [0], "gamma2": [1]}
SAMPLE_CONFIG = Path(__file__).resolve().parents[2] / "sample_config"


@pytest.fixture(autouse=True)
def _restore_loggers():
    # main() reconfigures logging onto the captured stderr
    saved = {
        name: (logger.handlers[:], logger.level, logger.propagate)
        for name, logger in (("", logging.getLogger()), ("numba", logging.getLogger("numba")))
    }
    yield
    for name, (handlers, level, propagate) in saved.items():
        logger = logging.getLogger(name)
        logger.handlers[:] = handlers
        logger.setLevel(level)
        logger.propagate = propagate


def _run(monkeypatch, capsys, *argv: str) -> tuple[int, str, str]:
    monkeypatch.setattr(sys, "argv", ["crossings", *argv])
    with pytest.raises(SystemExit) as exit_info:
        main()
    captured = capsys.readouterr()
    return exit_info.value.code, captured.out, captured.err


def _csv(text: str) -> pd.DataFrame:
    return pd.read_csv(io.StringIO(text), float_precision="round_trip")


def _write_yaml(path, document) -> str:
    path.write_text(yaml.safe_dump(document))
    return str(path)


def test_formula_grid(monkeypatch, capsys):
    code, out, _ = _run(monkeypatch, capsys, "formula", "--eta", "0.5", "--strip-ratio", "6")
    assert code == EXIT_OK
    frame = _csv(out)
    assert list(frame.columns) == columns(FormulaRow)
    assert frame.loc[0, "input"] == "eta"
    assert frame.loc[0, "p_cross"] == pytest.approx(0.5, abs=1e-14)
    assert frame.loc[1, "mean_nc"] == strip_mean_crossings(6.0)


def test_extreme_rectangles_are_ordinary_rows(monkeypatch, capsys):
    code, out, _ = _run(monkeypatch, capsys, "formula", "--rect-r", "0.001", "1000")
    assert code == EXIT_OK
    frame = _csv(out)
    assert frame["error"].isna().all()
    assert list(frame["p_cross"]) == [1.0, 0.0]
    assert list(frame["kleban"]) == pytest.approx([1.0, 0.0], abs=1e-15)


def test_formula_domain_errors_stay_in_their_row(monkeypatch, capsys):
    code, out, _ = _run(monkeypatch, capsys, "formula", "--eta", "0.25", "1.5")
    assert code == EXIT_OK
    frame = _csv(out)
    assert pd.isna(frame.loc[0, "error"])
    assert isinstance(frame.loc[1, "error"], str)
    assert pd.isna(frame.loc[1, "p_cross"])


def test_geometry_of_the_square(monkeypatch, capsys):
    code, out, _ = _run(monkeypatch, capsys, "geometry", "--r", "1")
    assert code == EXIT_OK
    assert _csv(out).loc[0, "eta"] == pytest.approx(0.5, abs=1e-10)


def test_enumerate_single_bond_as_json(monkeypatch, capsys, tmp_path):
    graph = tmp_path / "single_bond.json"
    graph.write_text(json.dumps(SINGLE_BOND))
    code, out, _ = _run(
        monkeypatch, capsys, "enumerate", "--graph", str(graph), "--p", "0.37", "--format", "json"
    )
    assert code == EXIT_OK
    (row,) = parse_json_rows(out, EnumerationRow)
    assert row.p_cross == pytest.approx(0.37, abs=1e-15)
    assert row.direct_p_cross == pytest.approx(0.37, abs=1e-15)
    assert row.z_ff == pytest.approx([0.0, 0.37, 0.63], abs=1e-15)


def test_enumerate_coefficients_are_one_csv_cell(monkeypatch, capsys, tmp_path):
    graph = tmp_path / "single_bond.json"
    graph.write_text(json.dumps(SINGLE_BOND))
    code, out, _ = _run(monkeypatch, capsys, "enumerate", "--graph", str(graph))
    assert code == EXIT_OK
    frame = _csv(out)
    assert list(frame.columns) == columns(EnumerationRow)
    assert json.loads(frame.loc[0, "z_aa"]) == [1.0, 0.0, 0.0]


def test_missing_graph_file_is_a_config_error(monkeypatch, capsys, tmp_path):
    code, _, err = _run(
        monkeypatch, capsys, "enumerate", "--graph", str(tmp_path / "missing.json")
    )
    assert code == EXIT_CONFIG_ERROR
    assert "missing.json" in err


def test_unknown_key_is_rejected(monkeypatch, capsys, tmp_path):
    config = _write_yaml(tmp_path / "bad.yaml", {"kind": "formula", "eta": [0.5], "etta": [0.2]})
    code, out, err = _run(monkeypatch, capsys, "formula", "--config", config)
    assert code == EXIT_CONFIG_ERROR
    assert out == ""
    assert "etta" in err


def test_document_kind_must_match_command(monkeypatch, capsys, tmp_path):
    config = _write_yaml(tmp_path / "geometry.yaml", {"kind": "geometry", "r": [1.0]})
    code, _, _ = _run(monkeypatch, capsys, "formula", "--config", config)
    assert code == EXIT_CONFIG_ERROR


def test_compare_needs_a_config(monkeypatch, capsys):
    code, _, _ = _run(monkeypatch, capsys, "compare")
    assert code == EXIT_CONFIG_ERROR


def test_negative_seed_is_a_config_error(monkeypatch, capsys):
    code, _, _ = _run(monkeypatch, capsys, "formula", "--eta", "0.5", "--seed", "-1")
    assert code == EXIT_CONFIG_ERROR


def test_exact_compare_passes(monkeypatch, capsys, tmp_path):
    config = _write_yaml(
        tmp_path / "compare.yaml",
        {
            "kind": "compare",
            "master_seed": 11,
            "output": {"format": "json"},
            "checks": [
                {
                    "label": "single-bond",
                    "predictor": "enumerate",
                    "measurer": "enumerate",
                    "source": {"graph": SINGLE_BOND},
                    "p": 0.37,
                },
                {
                    "label": "rectangle-mean",
                    "predictor": "enumerate",
                    "measurer": "enumerate",
                    "quantity": "mean_nc",
                    "source": {"lattice": {"kind": "square_bond", "nx": 3, "ny": 3}},
                },
            ],
        },
    )
    code, out, _ = _run(monkeypatch, capsys, "compare", "--config", config)
    assert code == EXIT_OK
    rows = parse_json_rows(out, ComparisonRow)
    assert [row.label for row in rows] == ["single-bond", "rectangle-mean"]
    assert all(row.within_ci and row.abs_error <= 1e-12 for row in rows)
    assert rows[0].master_seed == 11
    assert rows[0].n == 2


def test_failed_check_exits_one_and_still_writes(monkeypatch, capsys, tmp_path):
    config = _write_yaml(
        tmp_path / "compare.yaml",
        {
            "kind": "compare",
            "checks": [
                {
                    "label": "zero-tolerance",
                    "predictor": "formula",
                    "measurer": "mc",
                    "lattice": {"kind": "square_bond", "nx": 4, "ny": 4},
                    "n_trials": 201,
                    "tolerance": 0.0,
                }
            ],
        },
    )
    code, out, err = _run(monkeypatch, capsys, "compare", "--config", config)
    assert code == EXIT_CHECK_FAILED
    frame = _csv(out)
    assert list(frame.columns) == columns(ComparisonRow)
    assert not frame.loc[0, "within_ci"]
    assert "FAIL" in err


def test_compare_without_closed_form_is_a_config_error(monkeypatch, capsys, tmp_path):
    config = _write_yaml(
        tmp_path / "compare.yaml",
        {
            "kind": "compare",
            "checks": [
                {
                    "label": "triangle",
                    "predictor": "formula",
                    "measurer": "mc",
                    "lattice": {"shape": "equilateral_triangle", "nx": 10},
                    "n_trials": 10,
                }
            ],
        },
    )
    code, _, _ = _run(monkeypatch, capsys, "compare", "--config", config)
    assert code == EXIT_CONFIG_ERROR


def test_mc_output_does_not_depend_on_workers(monkeypatch, capsys):
    monkeypatch.setenv("CROSSINGS_RUNTIME__CHUNK_SIZE", "128")
    argv = ["mc", "--kind", "square_bond", "--nx", "8", "--ny", "8", "-n", "1000", "--seed", "5"]
    _, serial, _ = _run(monkeypatch, capsys, *argv, "--workers", "1")
    _, threaded, _ = _run(monkeypatch, capsys, *argv, "--workers", "4")
    assert serial == threaded
    frame = _csv(serial)
    assert list(frame.columns) == columns(CrossingStats)
    assert frame.loc[0, "trials"] == 1000


def test_workers_default_comes_from_the_environment(monkeypatch, capsys):
    monkeypatch.setenv("CROSSINGS_RUNTIME__WORKERS", "3")
    monkeypatch.setenv("CROSSINGS_LOG__LEVEL", "info")
    code, _, err = _run(monkeypatch, capsys, "formula", "--eta", "0.5")
    assert code == EXIT_OK
    assert "workers=3" in err


def test_output_file(monkeypatch, capsys, tmp_path):
    target = tmp_path / "results" / "formula.csv"
    code, out, _ = _run(monkeypatch, capsys, "formula", "--x", "0.25", "--out", str(target))
    assert code == EXIT_OK
    assert out == ""
    frame = _csv(target.read_text())
    assert frame.loc[0, "carleson"] == 0.25


def test_sle_row(monkeypatch, capsys):
    code, out, _ = _run(monkeypatch, capsys, "sle", "--a", "1", "--b", "1", "-n", "50", "--seed", "3")
    assert code == EXIT_OK
    frame = _csv(out)
    assert frame.loc[0, "n"] == 50
    assert frame.loc[0, "eta"] == 0.5
    assert frame.loc[0, "left_first"] + frame.loc[0, "right_first"] + frame.loc[0, "unresolved"] == 50


@pytest.mark.parametrize("path", sorted(SAMPLE_CONFIG.glob("*.yaml")), ids=lambda p: p.name)
def test_sample_documents_validate(path):
    config = parse_experiment(load_config_from_file(path))
    assert config.kind in path.read_text()


def test_sample_graph_loads():
    graph = SmallGraph.from_json_file(SAMPLE_CONFIG / "single_bond.json")
    assert (graph.n_sites, graph.n_bonds) == (2, 1)
