"""Declarative sweep experiments.

A config is a TOML file with a top-level ``experiment`` name, an optional
``[model]`` table, a ``[sweep]`` table of parameter lists and a ``[metrics]``
table.  Named experiments come with defaults for all three; a file only
needs to state what it changes.  See ``configs/README.md`` for the schema.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from . import fading as fd
from .capacity import (
    bound_information,
    bound_one_step_closed,
    bound_p_step,
    bound_truncation,
    capacity_limit,
    domain_probe,
    high_snr,
    spectral_capacity,
)
from .channel import ChannelParams, capacity_finite
from .errors import ConfigError, WynerCapError

SCHEMA_VERSION = 1
LOG2 = math.log(2.0)

SWEEP_KEYS = ("model", "fading", "d", "K", "lam", "alpha", "beta", "c", "epsilon")
MODEL_KINDS = ("rayleigh", "correlated_rayleigh", "uniform_ring", "constant", "artificial",
               "asym_wyner_d2", "soft_handoff", "wyner_symmetric", "wyner_asymmetric")
NAMED_KINDS = {"soft_handoff": fd.soft_handoff, "wyner_symmetric": fd.wyner_symmetric,
               "wyner_asymmetric": fd.wyner_asymmetric}
METRICS = ("capacity", "finite", "information", "one_step", "p_step", "truncation",
           "nonfading", "high_snr", "domain")
FIGURE_MODES = ("bounds_vs_d", "bounds_vs_snr_d3", "bounds_vs_K_d2", "domain_D", "correlation",
                "alpha_correlation", "asym_wyner", "uniform_fading")
EXPERIMENTS = FIGURE_MODES + ("custom",)
MIN_FIGURE_SAMPLES = 1000

CSV_COLUMNS = ("experiment", "point", "model", "fading", "d", "K", "lam", "rho", "alpha", "beta",
               "c", "epsilon", "metric", "value_nats", "value_bits", "stderr", "unit", "error")

_PRESETS = {
    "bounds_vs_d": dict(
        model={"kind": "rayleigh"},
        sweep={"d": [1, 2, 3, 4, 5, 6], "lam": [0.1, 1.0]},
        metrics={"list": ["one_step", "information"]}),
    "bounds_vs_snr_d3": dict(
        model={"kind": "rayleigh"},
        sweep={"d": [3], "lam": [0.1, 1.0]},
        metrics={"list": ["p_step", "information", "truncation"], "p_families": ["N", "Xi"]}),
    "bounds_vs_K_d2": dict(
        model={"kind": "rayleigh"},
        sweep={"d": [2], "K": [1, 2, 4, 10], "lam": [0.1, 1.0]},
        metrics={"list": ["p_step", "information", "truncation", "nonfading"], "p_families": ["N"]}),
    "domain_D": dict(
        model={"kind": "asym_wyner_d2"},
        sweep={"alpha": {"start": 0.05, "stop": 1.0, "step": 0.05},
               "beta": {"start": 0.05, "stop": 1.0, "step": 0.05}},
        metrics={"list": ["domain"]},
        paper_samples=100_000),
    "correlation": dict(
        model={"kind": "correlated_rayleigh"},
        sweep={"c": [0.0, 0.5, 0.9, 1.0], "K": [1, 2], "lam": [0.1, 1.0, 10.0]},
        metrics={"list": ["p_step", "truncation", "nonfading"], "p_families": ["N"], "p_steps": [4]}),
    "alpha_correlation": dict(
        model={"kind": "correlated_rayleigh"},
        sweep={"c": [0.0, 0.9], "alpha": [0.1, 0.25, 0.5, 0.75, 1.0], "lam": [1.0]},
        metrics={"list": ["p_step", "truncation", "nonfading"], "p_families": ["N"], "p_steps": [4]}),
    "asym_wyner": dict(
        model={},
        sweep={"model": ["wyner_symmetric", "wyner_asymmetric"], "fading": ["none", "rayleigh"],
               "alpha": [0.1, 0.3, 0.5, 0.7, 0.9], "lam": [1.0, 1e-4]},
        metrics={"list": ["truncation", "nonfading"]}),
    "uniform_fading": dict(
        model={"fading": "uniform_ring"},
        sweep={"model": ["wyner_symmetric", "wyner_asymmetric"], "alpha": [0.5],
               "epsilon": [0.0, 0.25, 0.5, 0.75, 1.0], "lam": [1.0, 1e-4]},
        metrics={"list": ["truncation"]}),
    "custom": dict(model={"kind": "rayleigh"}, sweep={}, metrics={"list": ["capacity"]}),
}

_METRIC_DEFAULTS = {"p_steps": [1, 2, 4, 8], "p_families": ["N"], "truncation_n": [32],
                    "finite_m": 300, "domain_p": 20, "threshold": -0.05}


@dataclass
class Estimators:
    """Monte Carlo effort per metric, derived from ``samples`` unless overridden."""

    n_steps: int
    burn_in: int
    batches: int
    bound_samples: int
    p_step_replicas: int
    truncation_replicas: int
    finite_replicas: int

    @classmethod
    def from_samples(cls, samples: int, overrides: dict | None = None) -> "Estimators":
        est = cls(n_steps=10 * samples, burn_in=1000, batches=30, bound_samples=samples,
                  p_step_replicas=samples, truncation_replicas=max(50, samples // 20),
                  finite_replicas=50)
        for k, v in (overrides or {}).items():
            if k not in {f.name for f in fields(cls)}:
                raise ConfigError(f"unknown estimator setting {k!r}")
            setattr(est, k, int(v))
        return est


@dataclass
class ExperimentConfig:
    experiment: str
    model: dict
    sweep: dict
    metrics: dict
    samples: int = 10_000
    paper_samples: int = 1_000_000
    seed: int = 0
    output: str | None = None
    estimators: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        raw = dict(raw)
        schema = raw.pop("schema", SCHEMA_VERSION)
        if schema != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema version {schema}")
        exp = raw.pop("experiment", None)
        if exp not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {exp!r}")
        preset = _PRESETS[exp]
        model = {**preset["model"], **raw.pop("model", {})}
        sweep = {**preset["sweep"], **raw.pop("sweep", {})} if exp != "custom" else raw.pop("sweep", {})
        metrics = {**_METRIC_DEFAULTS, **preset["metrics"], **raw.pop("metrics", {})}
        cfg = cls(exp, model, sweep, metrics,
                  samples=int(raw.pop("samples", 10_000)),
                  paper_samples=int(raw.pop("paper_samples", preset.get("paper_samples", 1_000_000))),
                  seed=int(raw.pop("seed", 0)),
                  output=raw.pop("output", None),
                  estimators=raw.pop("estimators", {}))
        if raw:
            raise ConfigError(f"unknown top-level keys {sorted(raw)}")
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path, "rb") as f:
                return cls.from_dict(tomllib.load(f))
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc

    def validate(self) -> None:
        if not self.sweep:
            raise ConfigError("sweep is empty: give at least one parameter list")
        for key, values in self.sweep.items():
            if key not in SWEEP_KEYS:
                raise ConfigError(f"unknown sweep parameter {key!r}; allowed {SWEEP_KEYS}")
            if len(expand(values)) == 0:
                raise ConfigError(f"sweep list {key!r} is empty")
        unknown = set(self.metrics["list"]) - set(METRICS)
        if not self.metrics["list"] or unknown:
            raise ConfigError(f"metrics.list must be a non-empty subset of {METRICS}")
        kinds = expand(self.sweep.get("model", [self.model.get("kind", "rayleigh")]))
        bad = [k for k in kinds if k not in MODEL_KINDS]
        if bad:
            raise ConfigError(f"unknown model kind(s) {bad}; allowed {MODEL_KINDS}")
        if self.samples < 1:
            raise ConfigError("samples must be positive")
        if self.experiment in FIGURE_MODES and self.samples < MIN_FIGURE_SAMPLES:
            raise ConfigError(f"{self.experiment} needs samples >= {MIN_FIGURE_SAMPLES}")
        Estimators.from_samples(self.samples, self.estimators)

    def points(self) -> list[dict]:
        keys = [k for k in SWEEP_KEYS if k in self.sweep]
        grids = [expand(self.sweep[k]) for k in keys]
        return [dict(zip(keys, combo)) for combo in itertools.product(*grids)]


def expand(values) -> list:
    """A sweep entry: a scalar, a list, or a ``{start, stop, step}`` table (stop inclusive)."""
    if isinstance(values, dict):
        try:
            start, stop, step = (float(values[k]) for k in ("start", "stop", "step"))
        except KeyError as exc:
            raise ConfigError(f"range tables need start, stop and step: {values}") from exc
        if step <= 0:
            raise ConfigError("range step must be positive")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 12) for i in range(max(n, 0))]
    if isinstance(values, (list, tuple)):
        return list(values)
    return [values]


def point_seed(master: int, index: int) -> int:
    """Seed of sweep point ``index``; independent of scheduling."""
    ss = np.random.SeedSequence(master, spawn_key=(index,))
    return int(ss.generate_state(1, np.uint64)[0])


# -- models -----------------------------------------------------------------

def build_model(spec: dict, point: dict) -> fd.FadingModel:
    """Fading model for one sweep point; ``point`` entries override ``spec``."""
    kind = point.get("model", spec.get("kind", "rayleigh"))
    fading = point.get("fading", spec.get("fading", "none"))
    K = int(point.get("K", spec.get("K", 1)))
    alpha = float(point.get("alpha", spec.get("alpha", 1.0)))
    beta = float(point.get("beta", spec.get("beta", 1.0)))
    c = float(point.get("c", spec.get("c", 0.0)))
    eps = float(point.get("epsilon", spec.get("epsilon", 0.0)))
    scales = spec.get("scales")
    if kind == "rayleigh":
        d = int(point.get("d", spec.get("d", 1)))
        if scales is None and "alpha" in point:
            scales = [1.0] * d + [alpha]
        return fd.rayleigh(d, K, scales)
    if kind == "correlated_rayleigh":
        return fd.correlated_rayleigh(c, K, scale=alpha)
    if kind == "uniform_ring":
        return fd.uniform_ring(int(point.get("d", spec.get("d", 1))), eps, K, scales)
    if kind == "constant":
        return fd.constant(spec["values"], K)
    if kind == "artificial":
        return fd.artificial(spec["alphas"], K, spec.get("law", "rayleigh"), eps)
    if kind == "asym_wyner_d2":
        return fd.asym_wyner_d2(alpha, beta, K)
    if kind in NAMED_KINDS:
        return NAMED_KINDS[kind](alpha, K, fading, eps)
    raise ConfigError(f"unknown model kind {kind!r}")


def unfaded(model: fd.FadingModel) -> fd.FadingModel:
    """The constant model with the same per-offset gains (fading replaced by 1)."""
    if not model.is_random:
        return model
    if model.kind == "artificial":
        return fd.artificial(model.scales, model.K, "constant")
    return fd.constant(model.scales or (1.0,) * (model.d + 1), model.K)


# -- metrics ----------------------------------------------------------------

@dataclass(frozen=True)
class ResultRow:
    experiment: str
    point: int
    params: dict
    metric: str
    value: float
    stderr: float
    unit: str = "nats"
    error: str = ""
    wall_time: float = 0.0

    @property
    def value_bits(self) -> float:
        return self.value / LOG2 if self.unit == "nats" else float("nan")

    def record(self, timings: bool = False) -> dict:
        p = self.params
        rec = {
            "experiment": self.experiment, "point": self.point, "model": p["model"],
            "fading": p["fading"], "d": p["d"], "K": p["K"], "lam": p["lam"], "rho": p["rho"],
            "alpha": p.get("alpha"), "beta": p.get("beta"), "c": p.get("c"),
            "epsilon": p.get("epsilon"), "metric": self.metric, "value_nats": self.value,
            "value_bits": self.value_bits, "stderr": self.stderr, "unit": self.unit,
            "error": self.error,
        }
        if timings:
            rec["wall_time_s"] = self.wall_time
        return rec


def _metric_rows(name: str, params: ChannelParams, model: fd.FadingModel, point: dict,
                 metrics: dict, est: Estimators, seed: int):
    """Yield ``(metric, value, stderr, unit)`` for one requested metric."""
    if name == "capacity":
        r = capacity_limit(params, model, n_steps=est.n_steps, burn_in=est.burn_in,
                           batches=est.batches, seed=seed, bounds=False)
        yield "capacity_limit", r.value, r.error, "nats"
    elif name == "finite":
        m = int(metrics["finite_m"])
        r = capacity_finite(params, model, m, est.finite_replicas, seed)
        yield f"capacity_finite[m={m}]", r.value, r.error, "nats"
    elif name == "information":
        for b in bound_information(params, model, est.bound_samples, seed):
            yield b.name, b.value, b.stderr, "nats"
    elif name == "one_step":
        b = bound_one_step_closed(params, model, est.bound_samples, seed)
        yield b.name, b.value, b.stderr, "nats"
    elif name == "p_step":
        for fam in metrics["p_families"]:
            for p in metrics["p_steps"]:
                b = bound_p_step(params, model, fam, int(p), est.p_step_replicas, seed)
                yield b.name, b.value, b.stderr, "nats"
    elif name == "truncation":
        for n in metrics["truncation_n"]:
            for b in bound_truncation(params, model, int(n), est.truncation_replicas, seed):
                yield b.name, b.value, b.stderr, "nats"
    elif name == "nonfading":
        yield "nonfading", spectral_capacity(unfaded(model), params.rho), 0.0, "nats"
    elif name == "high_snr":
        r = high_snr(model, n_steps=est.n_steps, burn_in=est.burn_in, batches=est.batches, seed=seed)
        yield "L_inf", r.L_inf, r.L_inf_stderr, "3dB"
        yield "high_snr_affine", r.affine(params.rho), r.L_inf_stderr * LOG2, "nats"
    elif name == "domain":
        probe = domain_probe(float(point.get("alpha", 1.0)), float(point.get("beta", 1.0)),
                             int(metrics["domain_p"]), est.bound_samples, seed,
                             float(metrics["threshold"]))
        yield f"f_p[p={probe.p}]", probe.f_p, probe.stderr, "nats"
        yield "in_domain", float(probe.in_domain), 0.0, "flag"


def _describe(cfg: ExperimentConfig, point: dict, model: fd.FadingModel | None) -> dict:
    lam = float(point.get("lam", cfg.model.get("lam", 1.0)))
    d = model.d if model is not None else point.get("d", cfg.model.get("d"))
    K = model.K if model is not None else point.get("K", cfg.model.get("K", 1))
    kind = point.get("model", cfg.model.get("kind", "rayleigh"))
    if kind in NAMED_KINDS:
        fading = point.get("fading", cfg.model.get("fading", "none"))
    else:
        fading = "none" if model is not None and not model.is_random else kind
    return {"model": kind, "fading": fading,
            "d": d, "K": K, "lam": lam, "rho": 1.0 / lam if lam > 0 else float("inf"),
            **{k: point[k] for k in ("alpha", "beta", "c", "epsilon") if k in point}}


def run_point(cfg: ExperimentConfig, index: int, point: dict, est: Estimators,
              master_seed: int) -> list[ResultRow]:
    """All metric rows of one sweep point.  Model errors become marked rows."""
    seed = point_seed(master_seed, index)
    try:
        model = build_model(cfg.model, point)
    except WynerCapError as exc:
        params = _describe(cfg, point, None)
        return [ResultRow(cfg.experiment, index, params, "model", float("nan"), float("nan"),
                          error=f"{type(exc).__name__}: {exc}")]
    params = _describe(cfg, point, model)
    chan = ChannelParams(model.d, model.K, params["lam"])
    rows = []
    for name in cfg.metrics["list"]:
        t0 = time.perf_counter()
        try:
            for metric, v, se, unit in _metric_rows(name, chan, model, point, cfg.metrics, est, seed):
                rows.append(ResultRow(cfg.experiment, index, params, metric, float(v), float(se),
                                      unit, wall_time=time.perf_counter() - t0))
                t0 = time.perf_counter()
        except (WynerCapError, ValueError) as exc:
            rows.append(ResultRow(cfg.experiment, index, params, name, float("nan"), float("nan"),
                                  error=f"{type(exc).__name__}: {exc}",
                                  wall_time=time.perf_counter() - t0))
    return rows


def run(cfg: ExperimentConfig, *, samples: int | None = None, seed: int | None = None,
        threads: int = 1, progress=None) -> list[ResultRow]:
    """Evaluate every sweep point; output order and values ignore ``threads``."""
    samples = cfg.samples if samples is None else int(samples)
    if cfg.experiment in FIGURE_MODES and samples < MIN_FIGURE_SAMPLES:
        raise ConfigError(f"{cfg.experiment} needs samples >= {MIN_FIGURE_SAMPLES}")
    est = Estimators.from_samples(samples, cfg.estimators)
    master = cfg.seed if seed is None else int(seed)
    points = cfg.points()

    def job(item):
        i, pt = item
        t0 = time.perf_counter()
        rows = run_point(cfg, i, pt, est, master)
        if progress is not None:
            progress(i, len(points), pt, rows, time.perf_counter() - t0)
        return rows

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        chunks = list(pool.map(job, enumerate(points)))
    return [r for chunk in chunks for r in chunk]


# -- output -----------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def to_csv(rows: list[ResultRow], timings: bool = False) -> str:
    cols = list(CSV_COLUMNS) + (["wall_time_s"] if timings else [])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        rec = r.record(timings)
        w.writerow([_fmt(rec[c]) for c in cols])
    return buf.getvalue()


def to_json(rows: list[ResultRow], timings: bool = False) -> str:
    def clean(v):
        return None if isinstance(v, float) and not math.isfinite(v) else v
    recs = [{k: clean(v) for k, v in r.record(timings).items()} for r in rows]
    return json.dumps({"schema": SCHEMA_VERSION, "rows": recs}, indent=1, sort_keys=False) + "\n"
