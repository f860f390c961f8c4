import csv
import io
import json

import pytest

from overbook.cli import (
    CSV_FIELDS,
    EXIT_CONFIG,
    EXIT_OUTPUT,
    EXIT_PARSE,
    EXIT_USAGE,
    EXIT_WORKLOAD,
    ExperimentSpec,
    main,
    run,
    tile_stats,
)
from overbook.matrix import identity, save_matrix_market
from overbook.tiling import TileShape

GEN = {"kind": "banded", "rows": 96, "cols": 96, "half_width": 4, "in_band_density": 0.6,
       "off_band_density": 0.01, "seed": 2}
GEN_SRC = "gen:" + json.dumps(GEN)


@pytest.fixture
def mtx(tmp_path):
    save_matrix_market(identity(8), tmp_path / "eye.mtx")
    return tmp_path


def test_prescient_json(capsys):
    assert main(["prescient", "--workload", GEN_SRC, "--capacity", "32"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["max_occupancy"] <= 32


def test_swiftiles_json(capsys):
    assert main(["swiftiles", "--workload", GEN_SRC, "--capacity", "32", "--y", "0.2", "--k", "5"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert 1 <= out["samples"] <= 25  # budget ceil(5 / 0.2), capped by the tile count
    assert out["t_target"] >= 32


def test_tile_stats_identity(mtx, capsys):
    assert main(["tile-stats", "--workload", "eye.mtx", "--data-dir", str(mtx),
                 "--shape", "2x2", "--capacity", "1"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["cdf"]["occupancy"] == [0, 2]
    assert out["max"] == 2
    assert out["fraction_fitting"] == 0.75


def test_env_data_dir(mtx, monkeypatch, capsys):
    monkeypatch.setenv("OVERBOOK_DATA_DIR", str(mtx))
    assert main(["tile-stats", "--workload", "eye.mtx", "--size", "4"]) == 0
    assert json.loads(capsys.readouterr().out)["tiles"] == 16


def test_flag_beats_env(mtx, tmp_path_factory, monkeypatch):
    monkeypatch.setenv("OVERBOOK_DATA_DIR", str(tmp_path_factory.mktemp("elsewhere")))
    assert main(["tile-stats", "--workload", "eye.mtx", "--size", "4"]) == EXIT_WORKLOAD
    assert main(["tile-stats", "--workload", "eye.mtx", "--size", "4", "--data-dir", str(mtx)]) == 0


def test_tile_stats_banded_bimodal():
    from overbook.generate import GeneratorSpec, generate
    m = generate(GeneratorSpec.from_dict(GEN))
    hist = tile_stats(m, TileShape(8, 8), 32)["histogram"]
    occ = hist["occupancy"]
    # off-band tiles stay near zero, diagonal tiles sit well above
    assert min(occ) <= 2 and max(occ) >= 15


def test_simulate_csv(capsys):
    assert main(["simulate", "--workload", GEN_SRC, "--capacity", "32", "--format", "csv"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert [r["strategy"] for r in rows] == ["uniform-shape", "prescient", "swiftiles-overbook"]


def _spec(tmp_path, **kw):
    d = {"workloads": [{"generator": GEN}], "sim": {"capacity": 32},
         "sweep": {"axis": "y", "values": [0.0, 0.1, 0.5]}, "seeds": [0, 1]}
    d.update(kw)
    p = tmp_path / "spec.json"
    p.write_text(json.dumps(d))
    return p


def _body(path):
    return path.read_text().split("\n", 1)[1]


def test_sweep_reproducible(tmp_path):
    cfg = _spec(tmp_path)
    assert main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "b"), "--jobs", "2"]) == 0
    a, b = tmp_path / "a" / "results.csv", tmp_path / "b" / "results.csv"
    assert a.read_text().startswith("# generated ")
    assert _body(a) == _body(b)
    rows = list(csv.DictReader(io.StringIO(_body(a))))
    assert len(rows) == 3 * 2 * 3
    assert list(rows[0]) == CSV_FIELDS
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summary["schema_version"] == 1
    assert summary["strategies"]["prescient"]["traffic_ratio_geomean"] == pytest.approx(1.0)


def test_flags_override_config(tmp_path):
    cfg = _spec(tmp_path, strategies=["prescient"])
    out = tmp_path / "o"
    assert main(["sweep", "--config", str(cfg), "--strategy", "uniform-shape", "--capacity", "48",
                 "--seed", "7", "--axis", "k", "--values", "1,all", "--out", str(out)]) == 0
    rows = list(csv.DictReader(io.StringIO(_body(out / "results.csv"))))
    assert {r["strategy"] for r in rows} == {"uniform-shape"}
    assert {r["capacity"] for r in rows} == {"48"}
    assert {r["seed"] for r in rows} == {"7"}
    assert [r["sweep_point"] for r in rows] == ["1", ""]


def test_run_api():
    spec = ExperimentSpec(workloads=[GEN_SRC], strategies=["prescient", "swiftiles-overbook"],
                          sim={"capacity": 32})
    res = run(spec)
    assert len(res["rows"]) == 2
    assert res["summary"]["baseline"] == "prescient"


def test_parse_error_exit(tmp_path, capsys):
    (tmp_path / "bad.mtx").write_text("%%MatrixMarket matrix coordinate real general\n4 4 1\n5 1 1.0\n")
    assert main(["prescient", "--workload", str(tmp_path / "bad.mtx"), "--capacity", "4"]) == EXIT_PARSE
    assert "line 3" in capsys.readouterr().err


@pytest.mark.parametrize("argv, code, needle", [
    (["prescient", "--workload", "/nonexistent/x.mtx", "--capacity", "4"], EXIT_WORKLOAD, "cannot read workload"),
    (["prescient", "--workload", "corpus:nope:0", "--capacity", "4"], EXIT_WORKLOAD, "unknown corpus"),
    (["prescient", "--workload", 'gen:{"kind": "x", "rows": 2, "cols": 2}', "--capacity", "4"],
     EXIT_CONFIG, "invalid generator"),
    (["simulate", "--workload", GEN_SRC, "--capacity", "0"], EXIT_CONFIG, "invalid simulate"),
    (["tile-stats", "--workload", GEN_SRC, "--shape", "3by3"], EXIT_USAGE, "invalid shape"),
    (["sweep"], EXIT_CONFIG, "at least one workload"),
    (["sweep", "--workload", GEN_SRC, "--axis", "y"], EXIT_CONFIG, "needs values"),
    (["sweep", "--workload", GEN_SRC, "--axis", "y", "--values", "a"], EXIT_CONFIG, "invalid y sweep value"),
    (["sweep", "--workload", GEN_SRC, "--config", "/nonexistent.json"], EXIT_CONFIG, "cannot read config"),
    (["simulate", "--workload", GEN_SRC, "--capacity", "16", "--out", "/nonexistent/dir/x.json"],
     EXIT_OUTPUT, "cannot write"),
])
def test_error_paths(argv, code, needle, capsys):
    assert main(argv) == code
    err = capsys.readouterr().err
    assert err.startswith("overbook: error:")
    assert needle in err


def test_bad_config_documents(tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text("{not json")
    assert main(["sweep", "--config", str(p)]) == EXIT_CONFIG
    assert "not valid JSON" in capsys.readouterr().err
    p.write_text(json.dumps({"workloads": [GEN_SRC], "bogus": 1}))
    assert main(["sweep", "--config", str(p)]) == EXIT_CONFIG
    assert "unknown config keys" in capsys.readouterr().err
    p.write_text(json.dumps({"workloads": [GEN_SRC], "seeds": []}))
    assert main(["sweep", "--config", str(p)]) == EXIT_CONFIG
    assert "at least one seed" in capsys.readouterr().err


def test_usage_error_exit():
    with pytest.raises(SystemExit) as ei:
        main(["bogus"])
    assert ei.value.code == EXIT_USAGE
