"""Command line front end: ``hilbertlab run --config cfg.yaml`` and one subcommand per suite.

Every run writes one CSV per result table plus ``summary.json`` into the
output directory.  CSV files hold only computed values, so a fixed seed
gives identical bytes whatever the thread count; timings live in the JSON.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .config import EXPERIMENTS, ScenarioConfig, config_from_mapping, load_config
from .errors import BudgetExceeded, ConfigError, HilbertLabError
from .experiments import FAIL, Context, ExperimentResult, run_experiment
from .presets import list_presets

THREADS_ENV = "HILBERTLAB_THREADS"


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def write_table(path: Path, header: list, rows: list):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    return v


def resolve_threads(flag: Optional[int], cfg: Optional[ScenarioConfig] = None) -> int:
    """Flag, then the environment variable, then the config file, then 1."""
    if flag is not None:
        return max(1, flag)
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}", field=THREADS_ENV) from None
    if cfg is not None and "threads" in cfg.raw:
        return cfg.number("threads", cfg.raw["threads"], integer=True, positive=True)
    return 1


def build_context(cfg: ScenarioConfig, seed: Optional[int], threads: int, budget: Optional[int]) -> Context:
    if budget is None and "budget" in cfg.raw:
        budget = cfg.number("budget", cfg.raw["budget"], integer=True, positive=True)
    scenario = cfg.scenario(budget) if "group" in cfg.raw else None
    domain = cfg.domain() if "domain" in cfg.raw else None
    dim = (domain or scenario.domain).dim if (domain or scenario) else None
    points = {}
    block = cfg.raw.get("basepoints") or {}
    if not isinstance(block, dict):
        cfg.fail("basepoints", "expected a mapping of named points")
    for key, v in block.items():
        points[str(key)] = cfg.vector(f"basepoints.{key}", v, dim)
    return Context(domain, scenario, cfg.seed if seed is None else seed, threads, budget, points)


def _scenario_echo(cfg: ScenarioConfig, ctx: Context) -> dict:
    echo = {k: cfg.raw[k] for k in ("name", "domain", "group", "basepoints") if k in cfg.raw}
    if ctx.has_scenario:
        echo["scenario"] = ctx.scenario.name
    return _jsonable(echo)


def run_config(cfg: ScenarioConfig, out: Path, seed: Optional[int] = None, threads: Optional[int] = None,
               budget: Optional[int] = None, stream=None) -> int:
    """Run every experiment in ``cfg`` in order; returns the process exit status."""
    stream = sys.stdout if stream is None else stream
    threads = resolve_threads(threads, cfg)
    ctx = build_context(cfg, seed, threads, budget)
    experiments = cfg.experiments()
    if not experiments:
        cfg.fail("experiments", "no experiments to run")
    out.mkdir(parents=True, exist_ok=True)
    reports = []
    status = 0
    seen: dict = {}
    for block in experiments:
        name = block["name"]
        seen[name] = seen.get(name, 0) + 1
        tag = name if seen[name] == 1 else f"{name}-{seen[name]}"
        try:
            res = run_experiment(ctx, name, block)
        except BudgetExceeded as e:
            print(f"error in experiment '{name}': {e} (complete up to {e.cutoff})", file=sys.stderr)
            reports.append({"experiment": name, "verdict": "error", "error": str(e)})
            status = 2
            break
        except HilbertLabError as e:
            print(f"error in experiment '{name}': {type(e).__name__}: {e}", file=sys.stderr)
            reports.append({"experiment": name, "verdict": "error", "error": f"{type(e).__name__}: {e}"})
            status = 2
            break
        files = _emit(res, out, tag)
        reports.append(_report(res, files, threads))
        print(f"{tag}: {res.verdict}  " + "  ".join(f"{k}={_cell(v)}" for k, v in res.numbers.items()
                                                    if isinstance(v, (int, float, np.number))), file=stream)
        if res.verdict == FAIL:
            status = max(status, 1)
    summary = {"source": cfg.source, "seed": ctx.seed, "scenario": _scenario_echo(cfg, ctx), "experiments": reports}
    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(_jsonable(summary), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return status


def _emit(res: ExperimentResult, out: Path, tag: str) -> list:
    files = []
    for t in res.tables:
        path = out / f"{tag}__{t.name}.csv"
        write_table(path, t.header, t.rows)
        files.append(path.name)
    return files


def _report(res: ExperimentResult, files: list, threads: int) -> dict:
    return {
        "experiment": res.experiment,
        "verdict": res.verdict,
        "checks": res.checks,
        "numbers": res.numbers,
        "parameters": res.parameters,
        "tables": files,
        "telemetry": {"seconds": res.seconds, "elements": res.elements, "threads": threads},
    }


def _parse_set(items: list) -> dict:
    params = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"--set expects key=value, got {item!r}", field="--set")
        params[key.strip()] = yaml.safe_load(value)
    return params


def _subcommand_config(args, name: str) -> ScenarioConfig:
    """Config for a single-suite subcommand: an optional file plus flag overrides."""
    if args.config:
        base = load_config(args.config)
        raw = {k: v for k, v in base.raw.items() if k != "experiments"}
        blocks = [b for b in base.experiments() if b["name"] == name]
        params = dict(blocks[0]) if blocks else {"name": name}
        lines, source = base.lines, base.source
    else:
        raw, params, lines, source = {}, {"name": name}, {}, "<command line>"
    if args.preset:
        raw["group"] = {"preset": args.preset}
    if args.domain:
        raw["domain"] = {"preset": args.domain}
    if "group" not in raw and "domain" not in raw:
        raise ConfigError(f"'{name}' needs --config, --preset or --domain", field="group")
    params.update(_parse_set(args.set))
    raw["experiments"] = [params]
    return config_from_mapping(raw, source, lines)


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="YAML scenario file")
    p.add_argument("--out", help="output directory (default: output.dir of the config, else hilbertlab-out)")
    p.add_argument("--seed", type=int, help="random seed (overrides the config)")
    p.add_argument("--threads", type=int, help=f"worker threads (overrides ${THREADS_ENV} and the config)")
    p.add_argument("--budget", type=int, help="orbit enumeration element budget")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hilbertlab",
                                     description="Hilbert geometry and Patterson-Sullivan experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run every experiment listed in a config file")
    _add_common(p)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} suite")
        _add_common(p)
        p.add_argument("--preset", help="group preset (see list-presets)")
        p.add_argument("--domain", help="domain preset (see list-presets)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="experiment parameter, YAML value")
    p = sub.add_parser("list-presets", help="print the scenario library")
    p.add_argument("--self-test", action="store_true", help="build every preset and report failures")
    return parser


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list-presets":
        text = list_presets(args.self_test)
        print(text)
        return 1 if "[FAILED" in text else 0
    try:
        if args.command == "run":
            if not args.config:
                raise ConfigError("run needs --config", field="--config")
            cfg = load_config(args.config)
        else:
            cfg = _subcommand_config(args, args.command)
        out_dir = args.out or cfg.get("output.dir") or "hilbertlab-out"
        if not isinstance(out_dir, str):
            cfg.fail("output.dir", "expected a directory path")
        out = Path(out_dir)
        return run_config(cfg, out, args.seed, args.threads, args.budget)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
