"""``realign`` command line: solve, pipeline, synth, bench, eval.

Exit codes: 0 success, 1 failed bench suite, 2 unparsable input or config,
3 inconsistent shapes, 4 fewer than two sequences for the pipeline.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bench import SUITES, run_suites
from .evaluation import framewise_metrics
from .formats import (
    ConfigError,
    FormatError,
    RunManifest,
    file_digest,
    read_json,
    read_matrix,
    split_config,
    write_json,
    write_matrix,
    write_pgm,
)
from .geometry import EmbeddingSequence
from .pipeline import PipelineConfig, run_pipeline, thread_count
from .solver import SolverConfig, assign_virtual, build_problem, solve_rfpgwot
from .synth import GroundTruth, SynthConfig, generate_pair

logger = logging.getLogger("realign")

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_SHAPE, EXIT_TOO_FEW = 0, 1, 2, 3, 4
SEQUENCE_SUFFIX = ".txt"
GT_SUFFIX = ".gt.json"


class ShapeError(ValueError):
    pass


class TooFewSequences(ValueError):
    pass


def _load_config(path) -> dict:
    if path is None:
        return {}
    raw = read_json(path)
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return raw


def _solver_config(raw: dict, args, *extra):
    parts = split_config(raw, SolverConfig, *extra)
    solver = parts[0]
    if getattr(args, "rho", None) is not None:
        solver["rho"] = args.rho
    if getattr(args, "tau", None) is not None:
        solver["tau"] = args.tau
    if getattr(args, "no_priors", False):
        solver["use_priors"] = False
    if getattr(args, "no_virtual", False):
        solver["use_virtual"] = False
    if getattr(args, "option", None) is not None:
        solver["option"] = args.option
    try:
        built = [SolverConfig(**solver)] + [cls(**kw) for cls, kw in zip(extra, parts[1:])]
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return built


def _read_sequence(path) -> EmbeddingSequence:
    data = read_matrix(path)
    try:
        return EmbeddingSequence(data)
    except ValueError as exc:
        raise ShapeError(f"{path}: {exc}") from exc


def _manifest(command, config, seed, inputs, started) -> RunManifest:
    m = RunManifest(command, config, seed, {str(p): file_digest(p) for p in inputs}, version=__version__)
    m.timings["total_seconds"] = time.perf_counter() - started
    return m


# --- commands -----------------------------------------------------------------


def cmd_solve(args) -> int:
    started = time.perf_counter()
    (cfg,) = _solver_config(_load_config(args.config), args)
    x, y = _read_sequence(args.x), _read_sequence(args.y)
    if x.dim != y.dim:
        raise ShapeError(f"embedding dimensions differ: {x.dim} vs {y.dim}")
    problem = build_problem(x, y, cfg)
    sol = solve_rfpgwot(x, y, cfg, problem)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_matrix(out / "plan.txt", sol.plan.data)
    write_pgm(out / "plan.pgm", sol.plan.real)
    write_json(out / "trace.json", [o.to_dict() for o in sol.objective_trace])
    masks = {"rows": [], "cols": []}
    if sol.plan.augmented:
        rows, cols = assign_virtual(sol.plan, problem.cfg.zeta)
        masks = {"rows": np.flatnonzero(rows).tolist(), "cols": np.flatnonzero(cols).tolist()}
    write_json(out / "virtual.json", masks)
    manifest = _manifest("solve", problem.cfg.to_dict(), None, [args.x, args.y], started)
    manifest.timings["outer_steps"] = sol.outer_steps_used
    if not sol.converged:
        manifest.warnings.append("outer loop reached outer_max before outer_tol")
    write_json(out / "manifest.json", manifest.to_dict())
    print(f"objective {sol.totals[-1]:.6g} after {sol.outer_steps_used} outer steps; output in {out}")
    return EXIT_OK


def _task_files(task_dir: Path) -> list[Path]:
    if not task_dir.is_dir():
        raise FormatError(f"{task_dir}: not a directory")
    return sorted(p for p in task_dir.iterdir() if p.name.endswith(SEQUENCE_SUFFIX))


def cmd_pipeline(args) -> int:
    started = time.perf_counter()
    raw = _load_config(args.config)
    cfg, pcfg = _solver_config(raw, args, PipelineConfig)
    if args.k is not None:
        pcfg = dataclasses.replace(pcfg, k=args.k)
    if args.seed is not None:
        pcfg = dataclasses.replace(pcfg, seed=args.seed)
    files = _task_files(Path(args.task_dir))
    if len(files) < 2:
        raise TooFewSequences(f"{args.task_dir}: need at least 2 sequence files, found {len(files)}")
    seqs = [_read_sequence(f) for f in files]
    if len({s.dim for s in seqs}) != 1:
        raise ShapeError("sequences have different embedding dimensions")
    gts = []
    for f in files:
        gt_path = f.with_name(f.name[: -len(SEQUENCE_SUFFIX)] + GT_SUFFIX)
        if gt_path.exists():
            gt = GroundTruth.from_dict(read_json(gt_path))
            if gt.labels.size != len(_read_sequence(f)):
                raise ShapeError(f"{gt_path}: {gt.labels.size} labels for {len(_read_sequence(f))} frames")
            gts.append(gt)
    gts = gts if len(gts) == len(files) else None
    if pcfg.k > sum(len(s) for s in seqs):
        raise ShapeError(f"k={pcfg.k} exceeds the number of frames")
    result = run_pipeline(seqs, cfg, pcfg, gts, threads=thread_count())
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    payload = result.to_dict()
    payload["files"] = [f.name for f in files]
    write_json(out / "pipeline.json", payload)
    if result.metrics is not None:
        write_json(out / "metrics.json", result.metrics.to_dict())
    for (i, j), sol in result.solutions.items():
        write_pgm(out / f"plan_{i}_{j}.pgm", sol.plan.real)
    config = {"solver": cfg.to_dict(), "pipeline": dataclasses.asdict(pcfg)}
    write_json(out / "manifest.json", _manifest("pipeline", config, pcfg.seed, files, started).to_dict())
    msg = f"canonical order {result.canonical.as_list()}"
    if result.metrics is not None:
        m = result.metrics
        msg += f"; P={m.precision:.4f} R={m.recall:.4f} F1={m.f1:.4f} IoU={m.iou:.4f}"
    print(msg)
    return EXIT_OK


def cmd_synth(args) -> int:
    started = time.perf_counter()
    (kw,) = split_config(_load_config(args.config), SynthConfig)
    if args.seed is not None:
        kw["seed"] = args.seed
    try:
        syn = SynthConfig(**kw)
        x, y, gx, gy = generate_pair(syn)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, seq, gt in (("seq_0", x, gx), ("seq_1", y, gy)):
        write_matrix(out / f"{name}{SEQUENCE_SUFFIX}", seq.data)
        write_json(out / f"{name}{GT_SUFFIX}", gt.to_dict())
        write_json(out / f"{name}.json", {"dim": seq.dim, "frames": seq.length, "seed": syn.seed})
        written.append(out / f"{name}{SEQUENCE_SUFFIX}")
    manifest = _manifest("synth", syn.to_dict(), syn.seed, [], started)
    manifest.inputs = {}
    manifest.timings = {}
    write_json(out / "synth.json", manifest.to_dict())
    print(f"wrote {len(written)} sequences to {out}")
    return EXIT_OK


def cmd_bench(args) -> int:
    spec = read_json(args.suite) if args.suite else {}
    if not isinstance(spec, dict):
        raise ConfigError("suite file must be a JSON object")
    unknown = set(spec) - {"suites", "inject_wrong_sign_gradient"}
    if unknown:
        raise ConfigError(f"unknown suite-file keys: {', '.join(sorted(unknown))}")
    names = spec.get("suites") or list(SUITES)
    bad = [n for n in names if n not in SUITES]
    if bad:
        raise ConfigError(f"unknown suites: {', '.join(bad)}")
    results = run_suites(names, inject_wrong_sign_gradient=bool(spec.get("inject_wrong_sign_gradient", False)))
    for r in results:
        print(r.line())
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "bench.json", [r.to_dict() for r in results])
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def _labels_from(path) -> np.ndarray:
    raw = read_json(path)
    labels = raw.get("labels") if isinstance(raw, dict) else raw
    if not isinstance(labels, list) or not all(isinstance(v, int) for v in labels):
        raise FormatError(f"{path}: expected a list of integer labels or an object with 'labels'")
    return np.asarray(labels, dtype=int)


def cmd_eval(args) -> int:
    pred = _labels_from(args.pred)
    gt = _labels_from(args.gt)
    if pred.size != gt.size:
        raise ShapeError(f"{pred.size} predicted labels for {gt.size} ground-truth frames")
    report = framewise_metrics(pred, gt, average=args.average)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "metrics.json", report.to_dict())
    print(f"P={report.precision:.4f} R={report.recall:.4f} F1={report.f1:.4f} IoU={report.iou:.4f}")
    return EXIT_OK


# --- argument parsing ---------------------------------------------------------


def _tau(value: str) -> float:
    try:
        v = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"tau must be a number or 'inf', got {value!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError("tau must be positive")
    return v


def _solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat JSON config (field names of the solver/pipeline configs)")
    p.add_argument("--rho", type=float, help="structure weight in [0, 1]")
    p.add_argument("--tau", type=_tau, help="marginal penalty in units of lambda2, or 'inf' for balanced")
    p.add_argument("--no-priors", action="store_true", help="drop the Laplace prior and IDM reward")
    p.add_argument("--no-virtual", action="store_true", help="do not append the virtual sink frame")
    p.add_argument("--option", choices=("A", "B"), help="structure matrices: A kernel, B raw lag")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="realign", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="align two embedding sequences")
    p.add_argument("x")
    p.add_argument("y")
    p.add_argument("--out", required=True)
    _solver_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("pipeline", help="discover key-steps across a task directory")
    p.add_argument("task_dir")
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int, help="number of key-steps")
    p.add_argument("--seed", type=int)
    _solver_flags(p)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("synth", help="write a synthetic task directory with ground truth")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("bench", help="run property suites")
    p.add_argument("--suite", help="JSON file: {\"suites\": [...], \"inject_wrong_sign_gradient\": false}")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("eval", help="score predicted labels against ground truth")
    p.add_argument("pred")
    p.add_argument("gt")
    p.add_argument("--average", choices=("macro", "micro"), default="macro")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (FormatError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ShapeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SHAPE
    except TooFewSequences as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TOO_FEW


if __name__ == "__main__":
    sys.exit(main())
