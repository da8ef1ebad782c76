"""Command-line entry point: ``interleave-lab {analyze,check,simulate,selftest,replay}``.

Every command that writes a CSV or report also writes ``<out>.manifest.json``
holding the fully resolved settings; ``replay`` re-executes from it.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

from . import __version__, analytic
from .clickmodel import ClickModelSpec, get_spec, parse_table
from .dataio import DEFAULT_CUTOFF, enumerate_pairs, load_letor, make_synthetic
from .errors import ConfigError, DatasetError, InterleaveLabError
from .harness import DEFAULT_RQ2_BINS, ExperimentConfig, run_rq1, run_rq2

log = logging.getLogger("interleave_lab")

EXIT_OK, EXIT_FAIL, EXIT_IO = 0, 1, 2
SEED_ENV = "INTERLEAVE_LAB_SEED"
DEFAULT_FEATURES = (1, 2, 3, 4)


class UsageError(ConfigError):
    pass


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={raw!r} is not an integer") from None


def write_atomic(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def manifest_path(out) -> Path:
    return Path(f"{out}.manifest.json")


def _write_outputs(command: str, settings: dict, out, text: str) -> None:
    manifest = {
        "command": command,
        "settings": settings,
        "seed": settings.get("seed"),
        "version": __version__,
        "outputs": [str(out)],
    }
    write_atomic(out, text)
    write_atomic(manifest_path(out), json.dumps(manifest, indent=2, sort_keys=True) + "\n")


# -- flag parsing helpers ------------------------------------------------------


def _float_list(text, what):
    try:
        vals = [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"--{what}: expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise UsageError(f"--{what}: empty list")
    return vals


def _int_list(text, what):
    try:
        return [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"--{what}: expected comma-separated integers, got {text!r}") from None


def _positive(value, what, allow_zero=False):
    if value < 0 or (value == 0 and not allow_zero):
        raise UsageError(f"--{what} must be {'>= 0' if allow_zero else '> 0'}, got {value}")
    return value


def read_config(path) -> dict:
    """Flatten an INI file into ``{"section.key": "value"}``."""
    if path is None:
        return {}
    cp = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise DatasetError(f"cannot read config {path}: {exc}") from None
    except configparser.Error as exc:
        raise UsageError(f"config {path}: {exc}") from None
    return {f"{s}.{k}": v for s in cp.sections() for k, v in cp.items(s)}


def _pick(flag, cfg: dict, key, default, convert=lambda x: x):
    if flag is not None:
        return flag
    if key in cfg:
        try:
            return convert(cfg[key])
        except ValueError:
            raise UsageError(f"config key {key}: bad value {cfg[key]!r}") from None
    return default


def _as_bool(v):
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(v)


# -- analyze ---------------------------------------------------------------------


def resolve_analyze(args) -> dict:
    cfg = read_config(args.config)
    alphas = _float_list(_pick(args.alpha, cfg, "analyze.alpha", "1,100"), "alpha")
    for a in alphas:
        if not a >= 0:
            raise UsageError(f"--alpha values must be >= 0, got {a}")
    step = float(_pick(args.grid_step, cfg, "analyze.grid_step", analytic.DEFAULT_GRID_STEP, float))
    n = int(_pick(args.n, cfg, "analyze.n", analytic.DEFAULT_N, int))
    _positive(n, "n")
    analytic.grid_values(step)
    return {"alpha": alphas, "grid_step": step, "n": n, "out": str(args.out)}


def execute_analyze(s: dict) -> str:
    points = analytic.sweep_grid(s["alpha"], s["grid_step"], s["n"])
    _write_outputs("analyze", s, s["out"], analytic.points_to_csv(points))
    return f"wrote {len(points)} rows to {s['out']}"


# -- check -------------------------------------------------------------------------


def resolve_check(args) -> dict:
    cfg = read_config(args.config)
    draws = int(_pick(args.draws, cfg, "check.draws", 10_000, int))
    _positive(draws, "draws")
    seed = _pick(args.seed, cfg, "check.seed", None, int)
    seed = int(seed) if seed is not None else default_seed()
    return {"draws": draws, "seed": seed, "out": str(args.out)}


def execute_check(s: dict) -> tuple[str, bool]:
    summary = analytic.run_theorem_checks(s["draws"], s["seed"])
    text = "\n".join(summary.lines()) + "\n"
    _write_outputs("check", s, s["out"], text)
    return text.rstrip("\n"), summary.ok


# -- simulate ------------------------------------------------------------------------


def _resolve_click_model(flag, cfg) -> dict:
    name = _pick(flag, cfg, "click_model.name", "navigational")
    if name == "file":
        if "click_model.click" not in cfg or "click_model.stop" not in cfg:
            raise UsageError("--click-model file needs click_model.click and click_model.stop in --config")
        label = cfg.get("click_model.label", "custom")
        return {"name": label, "click": list(parse_table(cfg["click_model.click"])),
                "stop": list(parse_table(cfg["click_model.stop"]))}
    spec = get_spec(name)
    return {"name": spec.name, "click": list(spec.click_prob), "stop": list(spec.stop_prob)}


def resolve_simulate(args) -> dict:
    cfg = read_config(args.config)
    synthetic = bool(args.synthetic) or _as_bool(cfg.get("dataset.synthetic", "false"))
    paths = args.dataset or [p.strip() for p in cfg.get("dataset.path", "").replace("\n", ",").split(",") if p.strip()]
    if synthetic and paths:
        raise UsageError("give either --synthetic or --dataset, not both")
    if not synthetic and not paths:
        raise UsageError("no dataset: pass --dataset PATH or --synthetic")
    features = _int_list(_pick(args.features, cfg, "dataset.features", ",".join(map(str, DEFAULT_FEATURES))), "features")
    cutoff = int(_pick(args.cutoff, cfg, "dataset.cutoff", DEFAULT_CUTOFF, int))
    seed = _pick(args.seed, cfg, "experiment.seed", None, int)
    s = {
        "experiment": args.experiment,
        "synthetic": synthetic,
        "dataset_paths": paths,
        "dataset_name": _pick(args.dataset_name, cfg, "dataset.name",
                              "synthetic" if synthetic else Path(paths[0]).stem),
        "max_grade": int(_pick(args.max_grade, cfg, "dataset.max_grade", 2, int)),
        "features": features,
        "cutoff": _positive(cutoff, "cutoff"),
        "click_model": _resolve_click_model(args.click_model, cfg),
        "impressions": _positive(int(_pick(args.impressions, cfg, "experiment.impressions", 1000, int)), "impressions"),
        "repeats": _positive(int(_pick(args.repeats, cfg, "experiment.repeats", 10, int)), "repeats"),
        "seed": int(seed) if seed is not None else default_seed(),
        "query_samples": _positive(int(_pick(args.query_samples, cfg, "experiment.query_samples", 1000, int)), "query-samples"),
        "bins": _float_list(_pick(args.bins, cfg, "experiment.bins", ",".join(map(str, DEFAULT_RQ2_BINS))), "bins"),
        "every_impression": bool(args.every_impression) or _as_bool(cfg.get("experiment.every_impression", "false")),
        "synthetic_queries": int(_pick(args.synthetic_queries, cfg, "dataset.synthetic_queries", 60, int)),
        "synthetic_seed": int(_pick(args.synthetic_seed, cfg, "dataset.synthetic_seed", 0, int)),
        "out": str(args.out),
    }
    if len(set(features)) < 2:
        raise UsageError("--features needs at least two distinct feature indices")
    return s


def execute_simulate(s: dict, workers: int = 1) -> str:
    spec = ClickModelSpec(s["click_model"]["name"], tuple(s["click_model"]["click"]), tuple(s["click_model"]["stop"]))
    if s["synthetic"]:
        data = make_synthetic(n_queries=s["synthetic_queries"], seed=s["synthetic_seed"])
    else:
        for p in s["dataset_paths"]:
            if not Path(p).is_file():
                raise DatasetError(f"dataset file not found: {p}")
        data = load_letor(s["dataset_paths"], max_grade=s["max_grade"])
    cfg = ExperimentConfig(
        click_model=spec, dataset=s["dataset_name"], impressions=s["impressions"],
        repeats=s["repeats"], cutoff=s["cutoff"], seed=s["seed"],
        rq2_query_samples=s["query_samples"], rq2_bins=tuple(s["bins"]),
        every_impression=s["every_impression"],
    )
    pairs = enumerate_pairs(s["features"], s["cutoff"])
    run = run_rq1 if s["experiment"] == "rq1" else run_rq2
    report = run(cfg, data, pairs, workers=workers)
    _write_outputs(f"simulate {s['experiment']}", s, s["out"], report.to_csv())
    return f"wrote {len(report.rows)} rows to {s['out']}"


# -- selftest / replay -----------------------------------------------------------------


def run_selftest(extra) -> int:
    tests = Path(__file__).resolve().parents[2] / "tests"
    if not tests.is_dir():
        print(f"error: test suite not found at {tests}", file=sys.stderr)
        return EXIT_IO
    try:
        import pytest
    except ImportError:
        print("error: pytest is not installed", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK if pytest.main([str(tests), "-q", *extra]) == 0 else EXIT_FAIL


def run_replay(path, out_override, workers) -> tuple[str, bool]:
    try:
        manifest = json.loads(Path(path).read_text(encoding="utf-8"))
        command, settings = manifest["command"], dict(manifest["settings"])
    except OSError as exc:
        raise DatasetError(f"cannot read manifest {path}: {exc}") from None
    except (ValueError, KeyError) as exc:
        raise UsageError(f"bad manifest {path}: {exc}") from None
    if out_override:
        settings["out"] = str(out_override)
    if command == "analyze":
        return execute_analyze(settings), True
    if command == "check":
        return execute_check(settings)
    if command.startswith("simulate"):
        return execute_simulate(settings, workers), True
    raise UsageError(f"manifest has unknown command {command!r}")


# -- argument parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="interleave-lab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="closed-form error-probability grid sweep")
    p.add_argument("--config")
    p.add_argument("--alpha", help="comma-separated alphas (default 1,100)")
    p.add_argument("--grid-step", type=float)
    p.add_argument("--n", type=int, help="impressions per evaluation (default 10000)")
    p.add_argument("--out", default="analytic.csv")

    p = sub.add_parser("check", help="randomised checks of the constant / relevance-aware results")
    p.add_argument("--config")
    p.add_argument("--draws", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default="check_report.txt")

    p = sub.add_parser("simulate", help="click-model simulation experiments")
    p.add_argument("experiment", choices=("rq1", "rq2"))
    p.add_argument("--config")
    p.add_argument("--dataset", action="append", help="LETOR file (repeatable, gzip ok)")
    p.add_argument("--synthetic", action="store_true", help="use the bundled synthetic dataset")
    p.add_argument("--dataset-name")
    p.add_argument("--synthetic-queries", type=int)
    p.add_argument("--synthetic-seed", type=int)
    p.add_argument("--features", help="comma-separated feature indices")
    p.add_argument("--max-grade", type=int)
    p.add_argument("--click-model", help="perfect, navigational, or file (tables from --config)")
    p.add_argument("--impressions", type=int)
    p.add_argument("--repeats", type=int)
    p.add_argument("--cutoff", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--query-samples", type=int, help="RQ2 queries sampled per repeat")
    p.add_argument("--bins", help="RQ2 nDCG-difference bin edges")
    p.add_argument("--every-impression", action="store_true", default=None, help="RQ1: log every impression")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out")

    p = sub.add_parser("selftest", help="run the property/acceptance test suite")
    p.add_argument("pytest_args", nargs=argparse.REMAINDER)

    p = sub.add_parser("replay", help="re-run a command from its manifest")
    p.add_argument("manifest")
    p.add_argument("--out", help="write to this path instead of the recorded one")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "analyze":
            print(execute_analyze(resolve_analyze(args)))
            return EXIT_OK
        if args.command == "check":
            text, ok = execute_check(resolve_check(args))
            print(text)
            return EXIT_OK if ok else EXIT_FAIL
        if args.command == "simulate":
            if args.out is None:
                args.out = f"{args.experiment}.csv"
            if args.workers < 1:
                raise UsageError("--workers must be >= 1")
            print(execute_simulate(resolve_simulate(args), args.workers))
            return EXIT_OK
        if args.command == "selftest":
            return run_selftest(args.pytest_args)
        if args.command == "replay":
            msg, ok = run_replay(args.manifest, args.out, args.workers)
            print(msg)
            return EXIT_OK if ok else EXIT_FAIL
    except (DatasetError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (InterleaveLabError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_FAIL
