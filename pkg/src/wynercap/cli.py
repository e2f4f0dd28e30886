"""Command-line interface: ``wynercap <subcommand> [options]``.

Every flag can also be set through an environment variable named
``WYNERCAP_<FLAG>`` (upper case, dashes as underscores), e.g.
``WYNERCAP_SEED=3``.  Command-line flags win over the environment.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

from . import __version__
from . import experiments as ex
from . import fading as fd
from .capacity import (
    bound_information,
    bound_one_step_closed,
    bound_p_step,
    bound_truncation,
    capacity_limit,
    domain_probe,
    high_snr,
    nonfading_closed_form,
)
from .channel import ChannelParams, capacity_finite
from .errors import ConfigError, WynerCapError
from .verify import SUITES, run_suite

ENV_PREFIX = "WYNERCAP_"


def _env(name: str, default=None, cast=str):
    raw = os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"))
    if raw is None:
        return default
    if cast is bool:
        return raw.strip().lower() in ("1", "true", "yes", "on")
    try:
        return cast(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {ENV_PREFIX}{name.upper()}: {raw!r}") from exc


def _common(p: argparse.ArgumentParser, samples_default: int | None = 10_000) -> None:
    p.add_argument("--seed", type=int, default=_env("seed", None, int), help="master seed (u64)")
    p.add_argument("--samples", type=int, default=_env("samples", samples_default, int),
                   help="Monte Carlo effort")
    p.add_argument("--out", default=_env("out"), help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=_env("format", "csv"))
    p.add_argument("--threads", type=int, default=_env("threads", 1, int))


def _model_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model")
    g.add_argument("--model", default="rayleigh", choices=ex.MODEL_KINDS)
    g.add_argument("--fading", default="none", choices=fd.NAMED_FADINGS,
                   help="fading of the named gain profiles")
    g.add_argument("--d", type=int, default=1)
    g.add_argument("--K", type=int, default=1)
    g.add_argument("--alpha", type=float)
    g.add_argument("--beta", type=float)
    g.add_argument("--c", type=float)
    g.add_argument("--epsilon", type=float)
    g.add_argument("--scales", type=float, nargs="+", help="per-offset gains (offset 0 first)")
    g.add_argument("--values", type=float, nargs="+", help="constant model coefficients")
    snr = g.add_mutually_exclusive_group()
    snr.add_argument("--lam", type=float, default=1.0, help="noise level lambda = 1/rho")
    snr.add_argument("--rho", type=float, help="SNR (overrides --lam)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wynercap", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a sweep experiment from a TOML config")
    p.add_argument("--config", default=_env("config"), help="TOML experiment file")
    _common(p, samples_default=None)
    p.add_argument("--paper-scale", action="store_true", default=_env("paper_scale", False, bool),
                   help="use the config's paper_samples instead of samples")
    p.add_argument("--timings", action="store_true", default=_env("timings", False, bool),
                   help="add a wall_time_s column (breaks byte-identical output)")

    p = sub.add_parser("verify", help="run a cross-check suite")
    p.add_argument("suite", choices=sorted(SUITES) + ["all"])
    p.add_argument("--seed", type=int, default=_env("seed", 0, int))

    p = sub.add_parser("capacity", help="limiting capacity (or finite-m Monte Carlo)")
    _common(p)
    _model_args(p)
    p.add_argument("--family", default="SmallN", choices=("SmallN", "N", "Xi", "SmallXi"))
    p.add_argument("--finite", type=int, metavar="M", help="also compute Cap_M by Monte Carlo")

    p = sub.add_parser("bounds", help="upper and lower bounds")
    _common(p)
    _model_args(p)
    p.add_argument("--p", type=int, nargs="+", default=[1, 2, 4, 8], help="p-step depths")
    p.add_argument("--families", nargs="+", default=["N"], choices=("N", "SmallN", "Xi", "SmallXi"))
    p.add_argument("--truncation", type=int, nargs="+", default=[32], help="section sizes n")

    p = sub.add_parser("highsnr", help="high-SNR slope and power offset")
    _common(p)
    _model_args(p)
    p.add_argument("--lifted", action="store_true", help="also use the lifted zero-noise chain")

    p = sub.add_parser("domain", help="evaluate the domain probe f_p on (alpha, beta)")
    _common(p)
    p.add_argument("--alpha", type=float, nargs="+", default=[0.4])
    p.add_argument("--beta", type=float, nargs="+", default=[0.4])
    p.add_argument("--p", type=int, default=20)
    p.add_argument("--threshold", type=float, default=-0.05)

    p = sub.add_parser("nonfading", help="closed-form non-fading capacity")
    p.add_argument("--kind", default="wyner_symmetric",
                   choices=("soft_handoff", "wyner_symmetric", "wyner_asymmetric"))
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--K", type=int, default=1)
    snr = p.add_mutually_exclusive_group()
    snr.add_argument("--lam", type=float, default=1.0)
    snr.add_argument("--rho", type=float)
    p.add_argument("--method", choices=("quad", "trapezoid"), default="quad")
    p.add_argument("--out", default=_env("out"))
    p.add_argument("--format", choices=("csv", "json"), default=_env("format", "csv"))
    return ap


def _lam(args) -> float:
    return 1.0 / args.rho if getattr(args, "rho", None) else args.lam


def _model_from_args(args) -> fd.FadingModel:
    spec = {"kind": args.model, "fading": args.fading, "d": args.d, "K": args.K}
    if args.scales:
        spec["scales"] = args.scales
    if args.values:
        spec["values"] = args.values
        spec["alphas"] = args.values
    point = {k: getattr(args, k) for k in ("alpha", "beta", "c", "epsilon")
             if getattr(args, k) is not None}
    point.update(d=args.d, K=args.K)
    return ex.build_model(spec, point)


def _emit(rows: list, args, timings: bool = False) -> None:
    text = ex.to_json(rows, timings) if args.format == "json" else ex.to_csv(rows, timings)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _single(args, experiment: str, params: dict, items) -> list:
    """Wrap ``(metric, value, stderr, unit)`` tuples into result rows."""
    return [ex.ResultRow(experiment, 0, params, m, float(v), float(se), unit)
            for m, v, se, unit in items]


def _params_row(model: fd.FadingModel, args, lam: float) -> dict:
    extra = {k: getattr(args, k) for k in ("alpha", "beta", "c", "epsilon")
             if getattr(args, k, None) is not None}
    kind = getattr(args, "model", model.kind)
    if kind in ex.NAMED_KINDS:
        fading = getattr(args, "fading", "none")
    else:
        fading = model.kind if model.is_random else "none"
    return {"model": kind, "fading": fading,
            "d": model.d, "K": model.K, "lam": lam, "rho": 1.0 / lam if lam > 0 else float("inf"),
            **extra}


def cmd_run(args) -> int:
    if not args.config:
        raise ConfigError("run needs --config (or WYNERCAP_CONFIG)")
    cfg = ex.ExperimentConfig.load(args.config)
    samples = args.samples
    if args.paper_scale:
        samples = cfg.paper_samples
    out = args.out or cfg.output
    log = sys.stdout if out else sys.stderr

    def progress(i, n, pt, rows, dt):
        errs = sum(1 for r in rows if r.error)
        desc = " ".join(f"{k}={v}" for k, v in pt.items())
        print(f"point {i + 1}/{n} [{desc}]: {len(rows)} rows, {errs} errors, {dt:.2f} s",
              file=log, flush=True)

    t0 = time.perf_counter()
    rows = ex.run(cfg, samples=samples, seed=args.seed, threads=args.threads, progress=progress)
    args.out = out
    _emit(rows, args, args.timings)
    errs = sum(1 for r in rows if r.error)
    where = out or "stdout"
    print(f"{cfg.experiment}: {len(rows)} rows ({errs} with errors) -> {where} "
          f"in {time.perf_counter() - t0:.1f} s", file=log)
    return 0


def cmd_verify(args) -> int:
    names = sorted(SUITES) if args.suite == "all" else [args.suite]
    failed = 0
    for name in names:
        t0 = time.perf_counter()
        checks = run_suite(name, seed=args.seed)
        for c in checks:
            print(c.line())
        bad = sum(not c.passed for c in checks)
        failed += bad
        print(f"suite {name}: {len(checks) - bad}/{len(checks)} passed in {time.perf_counter() - t0:.1f} s")
    return 1 if failed else 0


def cmd_capacity(args) -> int:
    model = _model_from_args(args)
    lam = _lam(args)
    params = ChannelParams(model.d, model.K, lam)
    seed = args.seed or 0
    r = capacity_limit(params, model, family=args.family, n_steps=10 * args.samples, seed=seed,
                       bound_samples=args.samples)
    items = [("capacity_limit", r.value, r.error, "nats")]
    items += [(b.name, b.value, b.stderr, "nats") for b in r.bounds]
    if args.finite:
        f = capacity_finite(params, model, args.finite, 50, seed)
        items.append((f"capacity_finite[m={args.finite}]", f.value, f.error, "nats"))
    _emit(_single(args, "capacity", _params_row(model, args, lam), items), args)
    return 0


def cmd_bounds(args) -> int:
    model = _model_from_args(args)
    lam = _lam(args)
    params = ChannelParams(model.d, model.K, lam)
    seed, S = args.seed or 0, args.samples
    bounds = list(bound_information(params, model, S, seed))
    bounds.append(bound_one_step_closed(params, model, S, seed))
    bounds += [bound_p_step(params, model, f, p, S, seed) for f in args.families for p in args.p]
    for n in args.truncation:
        bounds += bound_truncation(params, model, n, max(50, S // 20), seed)
    items = [(b.name, b.value, b.stderr, "nats") for b in bounds]
    _emit(_single(args, "bounds", _params_row(model, args, lam), items), args)
    return 0


def cmd_highsnr(args) -> int:
    model = _model_from_args(args)
    lam = _lam(args)
    r = high_snr(model, n_steps=10 * args.samples, seed=args.seed or 0, lifted=args.lifted or None)
    items = [("S_inf", r.S_inf, 0.0, "slope"), ("L_inf", r.L_inf, r.L_inf_stderr, "3dB")]
    if r.L_inf_lifted is not None and r.method != "lifted":
        items.append(("L_inf_lifted", r.L_inf_lifted, r.L_inf_lifted_stderr, "3dB"))
    items.append(("high_snr_affine", r.affine(1.0 / lam), r.L_inf_stderr * ex.LOG2, "nats"))
    _emit(_single(args, "highsnr", _params_row(model, args, lam), items), args)
    return 0


def cmd_domain(args) -> int:
    rows = []
    i = 0
    for a in args.alpha:
        for b in args.beta:
            pr = domain_probe(a, b, args.p, args.samples, args.seed or 0, args.threshold)
            params = {"model": "asym_wyner_d2", "fading": "rayleigh", "d": 2, "K": 1,
                      "lam": 0.0, "rho": float("inf"), "alpha": a, "beta": b}
            rows.append(ex.ResultRow("domain", i, params, f"f_p[p={args.p}]", pr.f_p, pr.stderr))
            rows.append(ex.ResultRow("domain", i, params, "in_domain", float(pr.in_domain), 0.0, "flag"))
            i += 1
    _emit(rows, args)
    return 0


def cmd_nonfading(args) -> int:
    lam = _lam(args)
    v = nonfading_closed_form(args.kind, args.alpha, args.K, 1.0 / lam, method=args.method)
    d = 1 if args.kind == "soft_handoff" else 2
    params = {"model": args.kind, "fading": "none", "d": d, "K": args.K, "lam": lam,
              "rho": 1.0 / lam, "alpha": args.alpha}
    _emit([ex.ResultRow("nonfading", 0, params, "nonfading", v, 0.0)], args)
    return 0


COMMANDS = {"run": cmd_run, "verify": cmd_verify, "capacity": cmd_capacity, "bounds": cmd_bounds,
            "highsnr": cmd_highsnr, "domain": cmd_domain, "nonfading": cmd_nonfading}


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(json.dumps({"error": {"type": "ConfigError", "message": str(exc)}}), file=sys.stderr)
        return 2
    except (WynerCapError, ValueError) as exc:
        print(json.dumps({"error": {"type": type(exc).__name__, "message": str(exc)}}), file=sys.stderr)
        return 3


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
