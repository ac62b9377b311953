import json
import math
import os
import subprocess
import sys
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fluxtune.cli import main as cli
from fluxtune.cli.config import ConfigError, config_hash, config_json, load_config, parse_config
from fluxtune.cli.table import EmitError, ResultTable, emit, read_csv, render
from fluxtune.errors import ParameterError

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
MINIMAL = json.loads((CONFIGS / "minimal.json").read_text())


def _cfg(**over):
    d = json.loads(json.dumps(MINIMAL))
    d["device"]["constants"] = "rounded"
    d.update(over)
    return d


def _write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


# configuration -----------------------------------------------------------


def test_minimal_config_round_trips():
    cfg = parse_config(json.dumps(MINIMAL))
    text = config_json(cfg)
    again = parse_config(text)
    assert config_json(again) == text
    assert again == cfg
    assert cfg.target == MINIMAL["device"]["cavity_ghz"]
    assert cfg.f_grid.points == 200 and cfg.engine == "exact"


def test_empty_document_lists_required_fields():
    with pytest.raises(ConfigError) as exc:
        parse_config("")
    paths = {p["path"] for p in exc.value.problems}
    assert paths == {f"device.{k}" for k in ("ej_ghz", "ec_ghz", "l0_nH", "lr_nH", "cavity_ghz")}


@pytest.mark.parametrize(
    "doc",
    [
        _cfg(f_grid={"start": 0.96, "stop": 1.0, "points": 10}),
        _cfg(f_grid={"start": 0.99, "stop": 0.98, "points": 10}),
        _cfg(f_grid={"points": 1}),
        _cfg(engine="newton"),
        _cfg(extra_key=1),
        _cfg(device={**MINIMAL["device"], "ej_ghz": -1.0}),
        _cfg(device={**MINIMAL["device"], "ej_ghz": "300"}),
        _cfg(noise={"m4_phi0_per_A": 1.0}),
        _cfg(truncation={"n_fock": 1}),
    ],
)
def test_invalid_configs_rejected(doc):
    with pytest.raises(ConfigError) as exc:
        parse_config(json.dumps(doc))
    assert exc.value.problems


def test_malformed_json_and_non_object():
    with pytest.raises(ConfigError, match="line 1"):
        parse_config("{")
    with pytest.raises(ConfigError, match="object"):
        parse_config("[1, 2]")
    with pytest.raises(ConfigError, match="cannot read"):
        load_config("/nonexistent/cfg.json")


def test_config_hash_stable_and_sensitive():
    a = parse_config(json.dumps(MINIMAL))
    b = parse_config(config_json(a))
    assert config_hash(a) == config_hash(b)
    c = parse_config(json.dumps(_cfg()))
    assert config_hash(a) != config_hash(c)
    assert len(config_hash(a)) == 16


# tables ------------------------------------------------------------------


def test_csv_render_format():
    t = ResultTable(("a", "b", "c"), ((0.1, True, "x,y"), (math.inf, False, "z")), {"k": "v"})
    text = render(t)
    assert text.startswith("# k=v\r\n")
    assert "a,b,c\r\n0.1,true,\"x,y\"\r\ninf,false,z\r\n" in text


def test_json_render_format():
    t = ResultTable(("a", "b"), ((math.nan, 1.5),), {"k": "v"})
    doc = json.loads(render(t, "json"))
    assert doc == {"provenance": {"k": "v"}, "rows": [{"a": "nan", "b": 1.5}]}
    with pytest.raises(ValueError):
        render(t, "xml")


def test_ragged_table_rejected():
    with pytest.raises(ValueError):
        ResultTable(("a", "b"), ((1.0,),))


_cells = st.one_of(
    st.floats(allow_nan=False),
    st.booleans(),
    st.integers(-(10**6), 10**6),
    st.text(alphabet=st.characters(categories=("L",)), min_size=1, max_size=5),
)


@settings(max_examples=100, deadline=None)
@given(rows=st.lists(st.tuples(_cells, _cells), min_size=0, max_size=6))
def test_csv_parse_render_idempotent(rows):
    t = ResultTable(("x", "y"), tuple(rows), {"tool": "fluxtune"})
    text = render(t)
    back = read_csv(text)
    assert render(back) == text
    assert back.provenance == t.provenance


def test_emit_atomic_and_error_path(tmp_path):
    t = ResultTable(("a",), ((1.0,),))
    out = tmp_path / "o.csv"
    emit(t, "csv", str(out))
    assert out.read_bytes().decode() == render(t)
    assert [p.name for p in tmp_path.iterdir()] == ["o.csv"]
    with pytest.raises(EmitError) as exc:
        emit(t, "csv", str(tmp_path / "missing" / "o.csv"))
    assert "missing" in exc.value.path


def test_failed_write_leaves_no_partial_file(tmp_path, monkeypatch):
    t = ResultTable(("a",), ((1.0,),))
    out = tmp_path / "o.csv"

    def boom(*a, **k):
        raise OSError(28, "No space left on device")

    monkeypatch.setattr(os, "fsync", boom)
    with pytest.raises(EmitError):
        emit(t, "csv", str(out))
    assert list(tmp_path.iterdir()) == []


# subcommands -------------------------------------------------------------


def test_worker_count(monkeypatch):
    monkeypatch.setenv("FLUXTUNE_THREADS", "3")
    assert cli.worker_count() == 3
    monkeypatch.setenv("FLUXTUNE_THREADS", "0")
    with pytest.raises(ParameterError):
        cli.worker_count()
    monkeypatch.delenv("FLUXTUNE_THREADS")
    assert cli.worker_count() >= 1


def test_derive_subcommand(tmp_path, capsys):
    assert cli.main(["derive", "--config", str(CONFIGS / "reference.json")]) == 0
    out = read_csv(capsys.readouterr().out)
    row = out.records()[0]
    assert row["eb_ghz"] == pytest.approx(146.0, abs=0.1)
    assert row["inductance_bound_uh"] == pytest.approx(0.653983, rel=1e-4)
    assert out.provenance["subcommand"] == "derive"
    assert len(out.provenance["config_hash"]) == 16


def test_validate_subcommand(capsys):
    assert cli.main(["validate", "--config", str(CONFIGS / "reference.json")]) == 0
    recs = read_csv(capsys.readouterr().out).records()
    assert {r["check"] for r in recs} == {"l0", "lr", "lambda"}
    assert all(r["passed"] for r in recs)


def _small(tmp_path, **over):
    doc = _cfg(f_grid={"start": 0.995, "stop": 0.999, "points": 3}, truncation={"n_fock": 12, "n_charge": 15},
               **over)
    return _write(tmp_path, doc)


def test_schedule_columns_and_determinism(tmp_path):
    cfg = _small(tmp_path)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(["schedule", "--config", cfg, "--out", str(a)]) == 0
    assert cli.main(["schedule", "--config", cfg, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    t = read_csv(a.read_bytes().decode())
    assert t.columns == ("f", "f_prime", "delta", "delta_e_exact", "delta_e_pert", "g", "g0", "gz",
                         "g_over_wc", "regime")
    assert len(t.rows) == 3
    assert all(abs(x - 2.00005254655) < 1e-9 for x in t.column("delta_e_exact"))


def test_schedule_json_and_overrides(tmp_path):
    cfg = _small(tmp_path)
    out = tmp_path / "s.json"
    args = ["schedule", "--config", cfg, "--out", str(out), "--format", "json",
            "--engine", "perturbative", "--nb", "10", "--ncharge", "12"]
    assert cli.main(args) == 0
    doc = json.loads(out.read_text())
    assert doc["provenance"]["engine"] == "perturbative"
    assert [r["f"] for r in doc["rows"]] == sorted(r["f"] for r in doc["rows"])


def test_spectrum_and_couplings(tmp_path):
    cfg = parse_config(json.dumps(_cfg(f_grid={"start": 0.998, "stop": 0.999, "points": 2},
                                       truncation={"n_fock": 12, "n_charge": 15})))
    spec, _ = cli.run("spectrum", cfg)
    assert spec.columns[2:7] == tuple(f"level_{k}" for k in range(5))
    for r in spec.records():
        levels = [r[f"level_{k}"] for k in range(5)]
        assert levels == sorted(levels)
        assert r["level_0"] == pytest.approx(r["e_g_pert"], abs=1e-3)
    coup, _ = cli.run("couplings", cfg)
    for r in coup.records():
        assert r["g_exact"] == pytest.approx(r["g_pert"], rel=0.02)
        assert abs(r["gx_exact"]) < 1e-10 * 2.0


def test_noise_row_at_t1_peak(tmp_path):
    doc = _cfg(f_grid={"start": 0.998487, "stop": 0.9985, "points": 2},
               engine="perturbative", variant="simplified")
    out = tmp_path / "n.csv"
    assert cli.main(["noise", "--config", _write(tmp_path, doc), "--out", str(out)]) == 0
    t = read_csv(out.read_bytes().decode())
    assert t.columns == cli.NOISE_COLUMNS
    assert t.records()[0]["t1_flux_s"] == pytest.approx(1.06893, rel=5e-3)
    rep = json.loads((tmp_path / "n.csv.report.json").read_text())["charge_target_report"]
    assert {"closed", "numeric", "target_met", "at_target_f"} <= set(rep)


def test_error_json_and_exit_codes(tmp_path, capsys):
    bad = _write(tmp_path, {"device": {}})
    assert cli.main(["derive", "--config", bad]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "ConfigError" and len(err["problems"]) == 5
    unreachable = _write(tmp_path, _cfg(target_delta_e_ghz=1.0, f_grid={"start": 0.99, "stop": 0.999, "points": 2}),
                         "u.json")
    out = tmp_path / "never.csv"
    assert cli.main(["schedule", "--config", unreachable, "--out", str(out)]) == 1
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "UnreachableTargetError" and "schedule row" in err["message"]
    assert not out.exists()


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "fluxtune", "derive", "--config", "-", "--format", "json"],
        input=(CONFIGS / "minimal.json").read_text(), capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["rows"][0]["ec_ghz"] == 2.0
