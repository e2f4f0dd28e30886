import csv
import io
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wynercap import experiments as ex
from wynercap import fading as fd
from wynercap.errors import ConfigError


def _cfg(**kw):
    raw = {"experiment": "custom", "samples": 1000, "seed": 3,
           "sweep": {"lam": [1.0]}, "metrics": {"list": ["information"]}}
    raw.update(kw)
    return ex.ExperimentConfig.from_dict(raw)


def test_expand_forms():
    assert ex.expand(0.5) == [0.5]
    assert ex.expand([1, 2]) == [1, 2]
    assert ex.expand({"start": 0.05, "stop": 1.0, "step": 0.05})[-1] == 1.0
    assert len(ex.expand({"start": 0.05, "stop": 1.0, "step": 0.05})) == 20
    assert 0.4 in ex.expand({"start": 0.05, "stop": 1.0, "step": 0.05})
    with pytest.raises(ConfigError):
        ex.expand({"start": 0, "stop": 1})
    with pytest.raises(ConfigError):
        ex.expand({"start": 0, "stop": 1, "step": 0})


@given(st.integers(0, 2**32), st.integers(0, 10_000))
def test_point_seed_stable_and_distinct(master, i):
    assert ex.point_seed(master, i) == ex.point_seed(master, i)
    assert ex.point_seed(master, i) != ex.point_seed(master, i + 1)


def test_presets_fill_in_and_merge():
    cfg = ex.ExperimentConfig.from_dict({"experiment": "bounds_vs_K_d2", "sweep": {"lam": [1.0]}})
    assert cfg.sweep["K"] == [1, 2, 4, 10] and cfg.sweep["lam"] == [1.0]
    assert cfg.metrics["p_steps"] == [1, 2, 4, 8]
    assert len(cfg.points()) == 4
    assert cfg.points()[0] == {"d": 2, "K": 1, "lam": 1.0}


@pytest.mark.parametrize("raw", [
    {"experiment": "custom"},
    {"experiment": "custom", "sweep": {"lam": []}},
    {"experiment": "custom", "sweep": {"snr": [1.0]}},
    {"experiment": "custom", "sweep": {"lam": [1.0]}, "metrics": {"list": ["everything"]}},
    {"experiment": "custom", "sweep": {"lam": [1.0]}, "metrics": {"list": []}},
    {"experiment": "custom", "sweep": {"lam": [1.0], "model": ["gaussian"]}},
    {"experiment": "custom", "sweep": {"lam": [1.0]}, "colour": "red"},
    {"experiment": "custom", "sweep": {"lam": [1.0]}, "estimators": {"speed": 2}},
    {"experiment": "figure99"},
    {"experiment": "bounds_vs_d", "samples": 10},
    {"experiment": "custom", "sweep": {"lam": [1.0]}, "schema": 2},
])
def test_invalid_configs(raw):
    with pytest.raises(ConfigError):
        ex.ExperimentConfig.from_dict(raw)


def test_load_bad_file(tmp_path):
    p = tmp_path / "bad.toml"
    p.write_text("experiment = [")
    with pytest.raises(ConfigError):
        ex.ExperimentConfig.load(str(p))
    with pytest.raises(ConfigError):
        ex.ExperimentConfig.load(str(tmp_path / "missing.toml"))


def test_shipped_configs_validate():
    from pathlib import Path
    files = sorted((Path(__file__).parents[1] / "configs").glob("*.toml"))
    assert len(files) >= 9
    seen = {ex.ExperimentConfig.load(str(f)).experiment for f in files}
    assert set(ex.FIGURE_MODES) <= seen


def test_estimator_mapping_and_overrides():
    est = ex.Estimators.from_samples(10_000, {"batches": 10})
    assert est.n_steps == 100_000 and est.bound_samples == 10_000
    assert est.truncation_replicas == 500 and est.batches == 10


def test_build_model_named_and_scaled():
    m = ex.build_model({"kind": "wyner_asymmetric", "fading": "rayleigh"}, {"alpha": 0.3, "K": 2})
    assert m.kind == "rayleigh" and m.K == 2 and m.scales == (1.0, 0.3, 0.3)
    m = ex.build_model({"kind": "asym_wyner_d2"}, {"alpha": 0.2, "beta": 0.4})
    assert m.scales == (1.0, 0.4, 0.2)
    m = ex.build_model({"kind": "rayleigh"}, {"d": 2, "alpha": 0.5})
    assert m.scales == (1.0, 1.0, 0.5)
    u = ex.unfaded(fd.rayleigh(2, scales=(1.0, 0.5, 0.25)))
    assert not u.is_random and np.allclose(u.constant_cell()[:, 0], [1.0, 0.5, 0.25])


def test_rows_and_csv_columns():
    rows = ex.run(_cfg(sweep={"lam": [0.5, 1.0], "d": [1, 2]}))
    assert len(rows) == 8
    assert [r.point for r in rows] == [0, 0, 1, 1, 2, 2, 3, 3]
    text = ex.to_csv(rows)
    recs = list(csv.DictReader(io.StringIO(text)))
    assert tuple(recs[0]) == ex.CSV_COLUMNS
    for r in recs:
        assert float(r["value_bits"]) == pytest.approx(float(r["value_nats"]) / np.log(2))
        assert r["stderr"] != "" and r["error"] == ""
    assert "wall_time_s" in ex.to_csv(rows, timings=True).splitlines()[0]
    data = json.loads(ex.to_json(rows))
    assert data["schema"] == ex.SCHEMA_VERSION and len(data["rows"]) == 8


def test_thread_count_does_not_change_output():
    cfg = _cfg(sweep={"lam": [0.1, 1.0], "d": [1, 2], "K": [1, 2]},
               metrics={"list": ["information", "p_step", "truncation"],
                        "p_steps": [2], "truncation_n": [4]})
    a = ex.to_csv(ex.run(cfg, threads=1))
    b = ex.to_csv(ex.run(cfg, threads=4))
    assert a == b
    c = ex.to_csv(ex.run(cfg, threads=3, seed=cfg.seed + 1))
    assert c != a


def test_model_error_becomes_row_and_run_continues():
    cfg = _cfg(model={"kind": "constant", "values": [1.0, 0.0]}, sweep={"lam": [0.5, 1.0]})
    rows = ex.run(cfg)
    assert len(rows) == 2 and all(r.error.startswith("ModelError") for r in rows)
    assert all(np.isnan(r.value) for r in rows)


def test_metric_error_is_isolated():
    # bounds need a finite SNR, so the lambda = 0 point fails on its own
    cfg = _cfg(sweep={"lam": [0.0, 1.0]})
    rows = ex.run(cfg)
    bad = [r for r in rows if r.error]
    good = [r for r in rows if not r.error]
    assert len(bad) == 1 and bad[0].point == 0
    assert len(good) == 2 and all(r.point == 1 for r in good)


def test_nonfading_comparator_row():
    cfg = ex.ExperimentConfig.from_dict({
        "experiment": "bounds_vs_K_d2", "samples": 1000,
        "sweep": {"K": [1], "lam": [1.0]}, "metrics": {"list": ["nonfading"]}})
    (row,) = ex.run(cfg)
    assert row.metric == "nonfading" and abs(row.value - 1.06) < 0.005
