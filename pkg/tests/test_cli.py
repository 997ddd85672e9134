import csv
import json

import pytest

from steadylength.cli import CSV_COLUMNS, ConfigError, main, validate_config


def _write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg) if isinstance(cfg, dict) else cfg)
    return str(path)


EUCLID_VERIFY = {"flow": {"name": "euclidean"}, "seed": 3, "sample": {"count": 4}}


def test_verify_euclidean_passes_and_is_deterministic(tmp_path):
    cfg = _write(tmp_path, EUCLID_VERIFY)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["verify", "--config", cfg, "--out", str(a)]) == 0
    assert main(["verify", "--config", cfg, "--out", str(b)]) == 0
    for name in ("verify.json", "verify.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    report = json.loads((a / "verify.json").read_text())
    assert report["passed"] and report["schema_version"] == "1.0"
    rows = list(csv.reader(open(a / "verify.csv", newline="")))
    assert rows[0] == CSV_COLUMNS["verify"]
    assert len(rows) == 5


def test_seed_override_changes_pairs(tmp_path):
    cfg = _write(tmp_path, EUCLID_VERIFY)
    main(["verify", "--config", cfg, "--out", str(tmp_path / "a")])
    main(["verify", "--config", cfg, "--out", str(tmp_path / "b"), "--seed", "4"])
    assert (tmp_path / "a" / "verify.csv").read_bytes() != (tmp_path / "b" / "verify.csv").read_bytes()


def test_time_outside_domain_exits_2(tmp_path, capsys):
    cfg = _write(tmp_path, {
        "flow": {"name": "shrinking_sphere"},
        "pairs": [{"p": [1.0, 1.0], "s": 0.0, "q": [1.2, 1.0], "t": 0.7}],
    })
    assert main(["distance", "--config", cfg, "--out", str(tmp_path)]) == 2
    assert "pairs[0].t" in capsys.readouterr().err


@pytest.mark.parametrize(
    "cfg, field",
    [
        ({"flow": {"name": "bryant"}, "sample": {"count": 1}}, "flow.name"),
        ({"flow": {"name": "euclidean"}}, "pairs"),
        ({"flow": {"name": "euclidean"}, "sample": {"count": 0}}, "sample.count"),
        ({"flow": {"name": "euclidean"}, "sample": {"count": 1}, "solver": {"method": "newton"}}, "solver.method"),
        ({"flow": {"name": "euclidean"}, "pairs": [{"p": [0, 0], "s": 1, "q": [1, 0], "t": 0}]}, "pairs[0]"),
        ({"flow": {"name": "euclidean"}, "pairs": [{"p": [0], "s": 0, "q": [1, 0], "t": 1}]}, "pairs[0].p"),
        ({"flow": {"name": "shrinking_sphere", "params": {"radius": -1}}, "sample": {"count": 1}}, "flow"),
    ],
)
def test_config_diagnostics(cfg, field):
    with pytest.raises(ConfigError) as info:
        validate_config(cfg, "distance")
    assert info.value.field == field


def test_geodesic_takes_one_pair():
    cfg = {"flow": {"name": "euclidean"}, "pairs": [{"p": [0, 0], "s": 0, "q": [1, 0], "t": 1}] * 2}
    with pytest.raises(ConfigError):
        validate_config(cfg, "geodesic")


def test_bad_json_reports_line(tmp_path, capsys):
    cfg = _write(tmp_path, '{\n  "flow": {"name": "euclidean"},\n  "seed": ,\n}')
    assert main(["verify", "--config", cfg]) == 2
    assert "line 3" in capsys.readouterr().err


def test_geodesic_csv(tmp_path):
    cfg = _write(tmp_path, {"flow": {"name": "euclidean"}, "pairs": [{"p": [0, 0], "s": 0, "q": [1, 0], "t": 1}]})
    assert main(["geodesic", "--config", cfg, "--out", str(tmp_path)]) == 0
    rows = list(csv.reader(open(tmp_path / "geodesic.csv", newline="")))
    assert rows[0] == ["tau", "x0", "x1", "v0", "v1"]
    assert len(rows) == 66
    assert float(rows[-1][1]) == pytest.approx(1.0)


def test_distance_direct_method(tmp_path):
    cfg = _write(tmp_path, {
        "flow": {"name": "euclidean"},
        "solver": {"method": "direct"},
        "pairs": [{"p": [0, 0], "s": 0, "q": [1, 2], "t": 0.5}],
    })
    assert main(["distance", "--config", cfg, "--out", str(tmp_path)]) == 0
    rec = json.loads((tmp_path / "distance.json").read_text())["result"]["pairs"][0]
    assert rec["L"] == pytest.approx(10.0, rel=1e-4)


def test_monotonicity_flat(tmp_path):
    cfg = _write(tmp_path, {
        "flow": {"name": "euclidean"},
        "monotonicity": {"A": 0.5, "times": [0.0, 0.5], "grid": {"points": 2, "descend": 1}},
    })
    assert main(["monotonicity", "--config", cfg, "--out", str(tmp_path)]) == 0
    rows = list(csv.reader(open(tmp_path / "monotonicity.csv", newline="")))
    assert rows[0] == CSV_COLUMNS["monotonicity"]
    assert len(rows) == 3


def test_crosscheck_flat(tmp_path):
    cfg = _write(tmp_path, {"flow": {"name": "euclidean"}, "sample": {"count": 1}})
    assert main(["crosscheck", "--config", cfg, "--out", str(tmp_path)]) == 0
    rows = list(csv.reader(open(tmp_path / "crosscheck.csv", newline="")))
    assert rows[1][CSV_COLUMNS["crosscheck"].index("all_pass")] == "true"


def test_verify_reports_failure_exit_code(tmp_path):
    # the sphere diagonal violates the second inequality
    cfg = _write(tmp_path, {
        "flow": {"name": "shrinking_sphere"},
        "pairs": [{"p": [1.3, 0.4], "s": 0.0, "q": [1.3, 0.4], "t": 0.25}],
    })
    assert main(["verify", "--config", cfg, "--out", str(tmp_path)]) == 1
