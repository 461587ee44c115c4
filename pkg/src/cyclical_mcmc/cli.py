"""Batch command-line front end.

Every invocation runs one experiment and writes ``report.json`` plus CSV
artifacts into the output directory. Exit status: 0 on success, 2 on an
invalid configuration, 3 when a numerical routine fails its accuracy
target. A failed inequality check is a result, not an error: it is
reported in ``report.json`` and the exit status stays 0.
"""
from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import math
import os
import sys
import tempfile
import time
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import numpy as np
from jsonschema import Draft202012Validator

from . import __version__
from ._backend import BACKEND
from .diagnostics import default_regions
from .experiments import (
    EXPERIMENT_BINS,
    LYAPUNOV_GRID,
    REPRODUCE_NAMES,
    lyapunov_demo,
    mixture_experiment,
    preset_run_config,
    spectral_thm1,
    theorem2_demo,
)
from .kernels import RNG_ALGORITHM, ModeRegion, ProposalSpec
from .sampler import InitialDistribution, RunConfig, estimate_escape_probability
from .schedule import Schedule
from .spectral import NumericalFailure, escape_probabilities
from .targets import PRESETS, build_preset, mixture, two_mode_target

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


class ConfigError(ValueError):
    """Configuration rejected before or while resolving defaults."""


def load_schema() -> dict:
    return json.loads(resources.files("cyclical_mcmc").joinpath("schema/config.schema.json").read_text())


def _locate(raw: str, path) -> str:
    """Best-effort ``line N`` for the last key of a JSON path in the raw text."""
    keys = [p for p in path if isinstance(p, str)]
    if not raw or not keys:
        return ""
    needle = f'"{keys[-1]}"'
    for n, line in enumerate(raw.splitlines(), 1):
        if needle in line:
            return f"line {n}: "
    return ""


def validate(cfg: dict, raw: str = "") -> None:
    errors = sorted(Draft202012Validator(load_schema()).iter_errors(cfg), key=lambda e: list(e.path))
    if errors:
        msgs = []
        for e in errors:
            where = "/".join(str(p) for p in e.path) or "<root>"
            msgs.append(f"{_locate(raw, e.path)}{where}: {e.message}")
        raise ConfigError("invalid config:\n  " + "\n  ".join(msgs))


def read_config(path) -> tuple[dict, str]:
    raw = Path(path).read_text()
    try:
        cfg = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("line 1: config must be a JSON object")
    return cfg, raw


# --------------------------------------------------------------- resolution

def _target_from(cfg: dict):
    if "target" in cfg:
        t = cfg["target"]
        return mixture(t["weights"], t["means"], t["variances"], t.get("domain"), t.get("name", "custom"))
    return build_preset(cfg.get("preset", "toy1d-equal"))


def _run_defaults(cfg: dict, target) -> dict:
    if "target" not in cfg:
        base = preset_run_config(target.name, cfg["seed"], cfg.get("paper_scale", False))
        return {"K": base.K, "schedule": base.schedule.to_dict(), "proposal": base.proposal.to_dict(),
                "init": base.init.to_dict()}
    d = target.dimension
    return {"K": 100, "schedule": Schedule(1000).to_dict(),
            "proposal": ProposalSpec().to_dict(),
            "init": {"kind": "gaussian", "mean": [0.0] * d, "variance": 1.0}}


def resolve(cfg: dict) -> dict:
    """Fill every default so the report can replay the run exactly."""
    out = copy.deepcopy(cfg)
    out.setdefault("seed", 0)
    out.setdefault("paper_scale", False)
    out.setdefault("replicas", 1 if out["mode"] == "run" else 0)
    mode = out["mode"]
    if mode == "reproduce":
        name = out.setdefault("name", out.get("preset"))
        if name is None:
            raise ConfigError("mode 'reproduce' needs a name (one of: " + ", ".join(REPRODUCE_NAMES) + ")")
        if name in PRESETS:
            out["preset"] = name
    if mode == "run" or (mode == "reproduce" and out["name"] in PRESETS):
        if "target" not in out:
            out.setdefault("preset", "toy1d-equal")
        target = _target_from(out)
        defaults = _run_defaults(out, target)
        out.setdefault("K", defaults["K"])
        out["schedule"] = {**defaults["schedule"], **out.get("schedule", {})}
        out["proposal"] = ProposalSpec(**out.get("proposal", defaults["proposal"])).to_dict()
        out["init"] = InitialDistribution.from_dict(out.get("init", defaults["init"])).to_dict()
        diag = {"bins": EXPERIMENT_BINS if mode == "reproduce" else 40, "assignment": "nearest-center"}
        out["diagnostics"] = {**diag, **out.get("diagnostics", {})}
    if mode == "spectral" or (mode == "reproduce" and out["name"] == "spectral-thm1"):
        if "target" not in out:
            out.setdefault("preset", "toy1d-equal")
        out["spectral"] = {"N": 50, "m": 2, "interval": [-10.0, 10.0], "L": 64, "k": 5, "r": 1.0,
                           "L_list": [64, 128], "quadrature_points": 32, **out.get("spectral", {})}
    if mode == "theorem2" or (mode == "reproduce" and out["name"] == "theorem2-demo"):
        out["theorem2"] = {"sigma": 0.05, "c": 0.5, "N": 80, "m": 1, "L": 128, "L2": 64,
                           "theta_sets": [[-1.5, -0.5], [0.5, 1.5]],
                           "inner_sets": [[-1.2, -0.8], [0.8, 1.2]], **out.get("theorem2", {})}
    if mode == "lyapunov" or (mode == "reproduce" and out["name"] == "lyapunov-demo"):
        base = {k: list(v) if isinstance(v, tuple) else v for k, v in LYAPUNOV_GRID.items()}
        out["lyapunov"] = {**base, "rtol": 1e-8, **out.get("lyapunov", {})}
    return out


# ------------------------------------------------------------------ output

def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to ``None``."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, header, rows) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    _atomic_write(path, buf.getvalue())
    return path


def write_json(path: Path, data: dict) -> Path:
    _atomic_write(path, json.dumps(_clean(data), indent=2, sort_keys=True) + "\n")
    return path


def samples_rows(samples):
    return [[k + 1, *map(float, row)] for k, row in enumerate(samples)]


# -------------------------------------------------------------- executors

def _run_config(cfg: dict, seed: int) -> RunConfig:
    return RunConfig(
        K=cfg["K"],
        schedule=Schedule(**cfg["schedule"]),
        proposal=ProposalSpec(**cfg["proposal"]),
        init=InitialDistribution.from_dict(cfg["init"]),
        seed=seed,
        thinning=cfg.get("thinning"),
    )


def _exec_mixture(cfg: dict, out: Path, files: list) -> dict:
    target = _target_from(cfg)
    regions = default_regions(target)
    diag = cfg["diagnostics"]
    replicas = max(1, cfg["replicas"])
    results = []
    for i in range(replicas):
        seed = cfg["seed"] ^ i
        res = mixture_experiment(target, _run_config(cfg, seed), regions, diag["bins"],
                                 assignment=diag["assignment"])
        suffix = "" if replicas == 1 else f"_r{i}"
        d = target.dimension
        files.append(write_csv(out / f"samples{suffix}.csv", ["cycle"] + [f"dim_{k}" for k in range(d)],
                               samples_rows(res.run.cycle_end_samples)))
        files.append(write_csv(out / f"weights{suffix}.csv", ["mode", "estimated", "truth"],
                               [[j, float(w), float(t)] for j, (w, t) in
                                enumerate(zip(res.weights.weights, target.weights))]))
        for e in res.errors:
            files.append(write_csv(out / f"curve_mode{e.mode_index}{suffix}.csv",
                                   ["bin_center", "estimated", "truth"], e.curve_rows()))
        if cfg.get("thinning") and res.run.thinned_trace is not None:
            every = cfg["thinning"]
            files.append(write_csv(out / f"trace{suffix}.csv", ["step"] + [f"dim_{k}" for k in range(d)],
                                   [[(n + 1) * every, *map(float, row)]
                                    for n, row in enumerate(res.run.thinned_trace)]))
        entry = res.to_dict()
        entry["seed"] = seed
        entry["runtime_s"] = res.runtime_s
        results.append(entry)
    return {"target": target.to_dict(), "regions": regions.to_dict(),
            **({"replicas": results} if replicas > 1 else {"run": results[0]})}


def _exec_spectral(cfg: dict, out: Path, files: list, dump: bool) -> dict:
    sp = cfg["spectral"]
    target = _target_from(cfg)
    res = spectral_thm1(target=target, interval=tuple(sp["interval"]), N=sp["N"], m=sp["m"], L=sp["L"],
                        k=sp["k"], r=sp["r"], L_list=tuple(sp["L_list"]),
                        quadrature_points=sp["quadrature_points"])
    rep = res.pop("report")
    chain = res.pop("chain_obj")
    files.append(write_csv(out / "trajectory.csv", ["step", "tv", "var", "bound"], rep.csv_rows()))
    files.append(write_csv(out / "spectrum.csv", ["j", "beta", "alpha", "lambda"],
                           [[j, float(chain.betas[j]), float(a), float(l)]
                            for j, (a, l) in enumerate(zip(rep.alpha, rep.lam), 1)]))
    if dump:
        files.extend(chain.dump_csv(out / "chain"))
    return res


def _exec_theorem2(cfg: dict, out: Path, files: list) -> dict:
    t2 = cfg["theorem2"]
    res = theorem2_demo(t2["sigma"], t2["c"], t2["N"], t2["m"], t2["L"], t2["L2"],
                        tuple(map(tuple, t2["theta_sets"])), tuple(map(tuple, t2["inner_sets"])))
    rep = res.pop("report")
    chain = res.pop("chain_obj")
    thetas, inners = res.pop("theta_idx"), res.pop("inner_idx")
    rows = []
    for j, (inn, drift) in enumerate(zip(rep.inner_mass, res["drift"])):
        rows.append([j, float(inn), float(rep.delta1_per_mode[j]), float(rep.delta2_per_mode[j]),
                     float(drift["delta1_bound"])])
    files.append(write_csv(out / "modes.csv", ["mode", "inner_mass", "delta1", "delta2", "drift_delta1_bound"],
                           rows))
    if cfg["replicas"] > 0:
        res["escape_monte_carlo"] = _escape_monte_carlo(cfg, chain, thetas, inners)
    return res


def _escape_monte_carlo(cfg: dict, chain, thetas, inners) -> list:
    """Sampler escape estimates from the worst inner start of each mode vs the exact value."""
    t2 = cfg["theorem2"]
    target = two_mode_target(t2["sigma"], t2["c"])
    spacing = float(chain.grid[1] - chain.grid[0])
    lo = [float(chain.grid[t].min()) - 0.5 * spacing for t in thetas]
    hi = [float(chain.grid[t].max()) + 0.5 * spacing for t in thetas]
    regions = ModeRegion(tuple(([a], [b]) for a, b in zip(lo, hi)))
    config = RunConfig(K=1, schedule=Schedule(t2["L"]),
                       proposal=ProposalSpec("lattice", spacing, 0.0, t2["m"]), seed=cfg["seed"])
    out = []
    for j, (t, inn) in enumerate(zip(thetas, inners)):
        exact = escape_probabilities(chain, t, t2["L2"], inn)
        worst = int(inn[int(np.argmax(exact))])
        est = estimate_escape_probability(config, target, regions, j, [float(chain.grid[worst])], t2["L2"],
                                          cfg["replicas"])
        out.append({"mode": j, "start": float(chain.grid[worst]), "exact": float(exact.max()),
                    "estimate": est.probability, "standard_error": est.standard_error,
                    "replicas": est.replicas})
    return out


def _exec_lyapunov(cfg: dict, out: Path, files: list) -> dict:
    ly = cfg["lyapunov"]
    res = lyapunov_demo(ly["sigma"], ly["alpha"], tuple(ly["s"]), tuple(ly["c"]), ly["theta_min"],
                        ly["theta_max"], ly["theta_step"], ly["rtol"])
    reports = res.pop("reports")
    rows = []
    for r in reports:
        small = np.where(np.abs(r.theta) <= r.s * r.sigma, math.exp(2.0 * r.s * r.alpha), 0.0)
        viol = r.KV - 0.7 * r.V - small
        rows.extend([r.s, r.c, float(t), float(kv), float(v), float(x)]
                    for t, kv, v, x in zip(r.theta, r.KV, r.V, viol))
    files.append(write_csv(out / "lyapunov.csv", ["s", "c", "theta", "KV", "V", "violation"], rows))
    return res


def execute(cfg: dict, out: Path) -> dict:
    """Run a resolved config; returns the report (already written to ``out``)."""
    started = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    files: list = []
    mode = cfg["mode"]
    name = cfg.get("name")
    if mode == "run" or (mode == "reproduce" and name in PRESETS):
        results = _exec_mixture(cfg, out, files)
    elif mode == "spectral" or name == "spectral-thm1":
        results = _exec_spectral(cfg, out, files, dump=mode == "spectral")
    elif mode == "theorem2" or name == "theorem2-demo":
        results = _exec_theorem2(cfg, out, files)
    elif mode == "lyapunov" or name == "lyapunov-demo":
        results = _exec_lyapunov(cfg, out, files)
    else:  # pragma: no cover - schema rules this out
        raise ConfigError(f"unknown mode {mode!r}")
    report = {
        "mode": mode,
        "config": cfg,
        "metadata": {
            "seed": cfg["seed"],
            "rng_algorithm": RNG_ALGORITHM,
            "backend": BACKEND,
            "version": __version__,
            "files": sorted(str(Path(f).relative_to(out)) for f in files),
        },
        "results": results,
        "timing": {
            "started": started.isoformat(),
            "finished": datetime.now(timezone.utc).isoformat(),
            "wall_time_s": time.perf_counter() - t0,
        },
    }
    write_json(out / "report.json", report)
    return report


# -------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cyclical-mcmc", description="Cyclical MCMC experiments and spectral checks.")
    p.add_argument("mode", nargs="?", choices=["run", "spectral", "theorem2", "lyapunov", "reproduce"],
                   help="experiment mode (overrides the config)")
    p.add_argument("name", nargs="?", help="experiment name for 'reproduce'")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--preset", help="named target preset")
    p.add_argument("--seed", type=int, help="unsigned 64-bit seed (default 0)")
    p.add_argument("--out", help="output directory (default ./out)")
    p.add_argument("--paper-scale", action="store_true", help="use the long paper-scale run lengths")
    p.add_argument("--replicas", type=int, help="independent replicas (run) or escape replicas (theorem2)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg, raw = read_config(args.config) if args.config else ({}, "")
        for key in ("mode", "name", "preset", "seed", "out", "replicas"):
            val = getattr(args, key)
            if val is not None:
                cfg[key] = val
        if args.paper_scale:
            cfg["paper_scale"] = True
        cfg.setdefault("mode", "run")
        validate(cfg, raw)
        resolved = resolve(cfg)
        out = Path(resolved.pop("out", "out"))
        execute(resolved, out)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(f"wrote {out / 'report.json'}")
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
