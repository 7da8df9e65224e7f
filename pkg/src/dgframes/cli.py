"""Command-line entry point.

Exit codes: 0 success, 1 verification failure, 2 usage or input error,
3 internal error.  Every run writes ``manifest.json`` next to its outputs.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import platform
import sys
from importlib import metadata, resources
from pathlib import Path

import numpy as np

from .frame import (FrameFormatError, MaterializationError, load_frame,
                    save_frame, synthesize_frame, write_frame_csv)
from .schemas import SchemaError, validate

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_INTERNAL = 3

log = logging.getLogger("dgframes")


class UsageError(ValueError):
    pass


# -- output helpers -------------------------------------------------------------

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def _write_json(path: Path, doc):
    path.write_text(json.dumps(_jsonable(doc), indent=2) + "\n",
                    encoding="utf-8")


def _versions() -> dict:
    out = {"python": platform.python_version()}
    for dist in ("dgframes", "artifact", "numpy", "scipy", "scikit-learn"):
        try:
            out[dist] = metadata.version(dist)
        except metadata.PackageNotFoundError:
            pass
    return out


class Run:
    """Output directory bookkeeping for one invocation."""

    def __init__(self, args, command: str):
        self.out = Path(args.out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.command = command
        self.seed = args.seed
        self.outputs: list[str] = []

    def json(self, name: str, doc):
        _write_json(self.out / name, doc)
        self.outputs.append(name)

    def text(self, name: str, text: str):
        (self.out / name).write_text(text, encoding="utf-8")
        self.outputs.append(name)

    def path(self, name: str) -> Path:
        self.outputs.append(name)
        return self.out / name

    def finish(self, arguments: dict):
        manifest = {
            "command": self.command,
            "arguments": arguments,
            "seed": self.seed,
            "versions": _versions(),
            "outputs": sorted(self.outputs),
        }
        _write_json(self.out / "manifest.json", manifest)


def _arguments(args, *names) -> dict:
    return {n: getattr(args, n) for n in names}


# -- subcommands ------------------------------------------------------------------

def cmd_gen_frame(args) -> int:
    frame = synthesize_frame(args.m, args.r, materialize=not args.no_materialize)
    run = Run(args, "gen-frame")
    save_frame(frame, run.path("frame.json"),
               include_body=frame.is_materialized)
    if args.csv:
        write_frame_csv(frame, run.path("frame.csv"))
    run.finish(_arguments(args, "m", "r", "no_materialize", "csv"))
    print(f"G({args.m},{args.r}): {frame.num_rows}x{frame.num_cols} "
          f"-> {run.out / 'frame.json'}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .strip import verify_frame

    frame = load_frame(args.frame_file)
    report = verify_frame(frame, args.eta, args.exhaustive_limit,
                          args.samples, args.seed)
    doc = report.to_dict()
    doc["seed"] = args.seed
    validate(_jsonable(doc), "strip_report")
    run = Run(args, "verify")
    run.json("verify.json", doc)
    run.finish(_arguments(args, "frame_file", "eta", "exhaustive_limit",
                          "samples"))
    print(f"St1={report.st1_passed} St2={report.st2.closure} "
          f"St3={report.st3.passed} tight={report.tight_frame_passed} "
          f"eta_implied={report.st3.eta_implied}")
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_estimate(args) -> int:
    from .strip import estimate_strip

    frame = load_frame(args.frame_file)
    est = estimate_strip(frame, args.k, args.epsilon, args.trials, args.seed,
                         jobs=args.jobs)
    run = Run(args, "estimate")
    run.json("estimate.json", est.to_dict())
    run.finish(_arguments(args, "frame_file", "k", "epsilon", "trials"))
    print(f"delta_hat={est.delta_hat:.6g} +/- {est.half_width:.3g} "
          f"({est.violations}/{est.trials})")
    return EXIT_OK


def cmd_uniqueness(args) -> int:
    from .strip import check_ustrip_uniqueness

    frame = load_frame(args.frame_file)
    rep = check_ustrip_uniqueness(frame, args.k, args.trials, args.seed)
    run = Run(args, "uniqueness")
    run.json("uniqueness.json", rep.to_dict())
    run.finish(_arguments(args, "frame_file", "k", "trials"))
    print(f"violations={rep.violations}/{rep.trials}")
    return EXIT_OK


def _load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: not valid JSON ({exc})") from exc


def resolve_experiment_config(args) -> dict:
    """Config file values overridden by any flags given on the command line."""
    if args.config == "sweep_small":
        text = resources.files("dgframes").joinpath(
            "configs/sweep_small.json").read_text(encoding="utf-8")
        doc = json.loads(text)
    else:
        doc = _load_config(args.config)
    if not isinstance(doc, dict):
        raise SchemaError("experiment_config: <root>: must be an object")
    doc = dict(doc)
    if args.C is not None:
        doc["C"] = args.C
    if args.m_list is not None:
        doc["m_list"] = args.m_list
    if args.seeds is not None:
        doc["seeds"] = args.seeds
    if args.sensing is not None:
        doc["sensing"] = {"kind": args.sensing}
    validate(doc, "experiment_config")
    return doc


def cmd_experiment(args) -> int:
    from .learn import SweepConfig, run_compress_sweep

    doc = resolve_experiment_config(args)
    if args.out_dir is None:
        args.out_dir = doc.get("output", "dgframes_out")
    config = SweepConfig.from_dict(doc)
    report = run_compress_sweep(config, jobs=args.jobs)
    out = report.to_dict(timing=args.timing)
    validate(_jsonable(out), "experiment_report")
    run = Run(args, "experiment")
    run.json("report.json", out)
    run.text("report.csv", report.to_csv())
    if args.emit_plot_data:
        for name, text in report.plot_tables().items():
            run.text(name, text)
    run.finish({"config": config.to_dict(),
                "emit_plot_data": args.emit_plot_data,
                "timing": args.timing})
    print(f"{len(report.records)} records; gap Spearman "
          f"{report.gap_trend():.3f} -> {run.out / 'report.json'}")
    return EXIT_OK


def _read_labeled_csv(path, label_column: str):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise UsageError(f"{path}: empty file") from None
        if label_column not in header:
            raise UsageError(f"{path}: no column named {label_column!r}")
        li = header.index(label_column)
        features = [h for i, h in enumerate(header) if i != li]
        labels, rows = [], []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise UsageError(f"{path}:{lineno}: expected {len(header)} "
                                 f"fields, got {len(row)}")
            labels.append(row[li])
            try:
                rows.append([float(v) for i, v in enumerate(row) if i != li])
            except ValueError as exc:
                raise UsageError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise UsageError(f"{path}: no data rows")
    try:
        y = np.array([int(v) for v in labels])
    except ValueError:
        y = np.array(labels)
    return features, np.array(rows), y


def cmd_fld(args) -> int:
    from .fld import FisherDiscriminant, class_separation

    _, X, y = _read_labeled_csv(args.data_csv, args.label_column)
    model = FisherDiscriminant().fit(X, y)
    Z = model.transform(X)
    doc = model.to_dict()
    validate(_jsonable(doc), "fld_model")
    doc["training_accuracy"] = float((model.predict(X) == y).mean())
    doc["separation_raw"] = class_separation(X, y)
    doc["separation_projected"] = class_separation(Z, y)
    run = Run(args, "fld")
    run.json("fld_model.json", doc)
    with run.path("projected.csv").open("w", newline="",
                                        encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([args.label_column]
                   + [f"z{i + 1}" for i in range(Z.shape[1])])
        for label, z in zip(y, Z):
            w.writerow([label] + [repr(float(v)) for v in z])
    run.finish(_arguments(args, "data_csv", "label_column"))
    print(f"{Z.shape[1]} discriminant(s); separation "
          f"{doc['separation_raw']:.4g} -> {doc['separation_projected']:.4g}")
    return EXIT_OK


def cmd_bounds(args) -> int:
    if args.which == "theorem1":
        from .strip import theorem1_delta, theorem1_measurement_bound

        doc = {"bound": "theorem1",
               "measurements": theorem1_measurement_bound(
                   args.k, args.epsilon, args.eta, args.N, args.c)}
        if args.m_rows is not None:
            doc["delta"] = theorem1_delta(args.k, args.epsilon, args.m_rows,
                                          args.eta, args.N).to_dict()
        names = ("which", "k", "epsilon", "eta", "N", "c", "m_rows")
    else:
        from .learn import theorem4_gap_bound, theorem4_measurement_bound

        doc = {"bound": "theorem4",
               "measurements": theorem4_measurement_bound(
                   args.o, args.r, args.epsilon1, args.C_const)}
        if args.M is not None:
            n = 1 << ((args.r + 2) * args.o)
            doc["gap"] = theorem4_gap_bound(
                args.R, args.w0_norm, args.r, args.M, args.N_eval,
                1 << args.o, n, args.epsilon1, args.sigma)
        names = ("which", "o", "r", "epsilon1", "C_const", "R", "w0_norm",
                 "M", "N_eval", "sigma")
    run = Run(args, "bounds")
    run.json("bounds.json", doc)
    run.finish(_arguments(args, *names))
    print(json.dumps(_jsonable(doc)))
    return EXIT_OK


# -- parser -------------------------------------------------------------------------

def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out-dir", default=".",
                        help="directory for outputs and manifest.json")
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(
        prog="dgframes",
        description="Delsarte-Goethals frames, StRIP checks and "
                    "compressed-learning experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-frame", parents=[common],
                       help="synthesize G(m, r) and write it as JSON")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--r", type=int, default=0)
    p.add_argument("--no-materialize", action="store_true",
                   help="write the header only")
    p.add_argument("--csv", action="store_true",
                   help="also write frame.csv (one line per entry)")
    p.set_defaults(func=cmd_gen_frame)

    p = sub.add_parser("verify", parents=[common],
                       help="check St1, St2, St3 and tightness")
    p.add_argument("frame_file")
    p.add_argument("--eta", type=float, default=0.5)
    p.add_argument("--exhaustive-limit", type=int, default=1024)
    p.add_argument("--samples", type=int, default=20000)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("estimate", parents=[common],
                       help="Monte Carlo StRIP failure rate")
    p.add_argument("frame_file")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--trials", type=int, default=10_000)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("uniqueness", parents=[common],
                       help="exhaustive sparse-preimage uniqueness check")
    p.add_argument("frame_file")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--trials", type=int, default=100)
    p.set_defaults(func=cmd_uniqueness)

    p = sub.add_parser("experiment", parents=[common],
                       help="compressed-learning sweep from a JSON config")
    p.add_argument("config", help="config file, or 'sweep_small' for the "
                                  "bundled one")
    p.add_argument("--C", type=float)
    p.add_argument("--m-list", type=_int_list)
    p.add_argument("--seeds", type=_int_list)
    p.add_argument("--sensing", choices=["gaussian", "dg_frame"])
    p.add_argument("--emit-plot-data", action="store_true")
    p.add_argument("--timing", action="store_true",
                   help="include wall-clock seconds (breaks byte identity)")
    p.set_defaults(func=cmd_experiment, out_dir=None)

    p = sub.add_parser("fld", parents=[common],
                       help="PCA + Fisher discriminant on a labeled CSV")
    p.add_argument("data_csv")
    p.add_argument("--label-column", default="label")
    p.set_defaults(func=cmd_fld)

    p = sub.add_parser("bounds",
                       help="measurement and gap bound calculators")
    bsub = p.add_subparsers(dest="which", required=True)
    b = bsub.add_parser("theorem1", parents=[common])
    b.add_argument("--k", type=int, required=True)
    b.add_argument("--epsilon", type=float, required=True)
    b.add_argument("--eta", type=float, required=True)
    b.add_argument("--N", type=int, required=True)
    b.add_argument("--c", type=float, default=1.0)
    b.add_argument("--m-rows", type=int)
    b = bsub.add_parser("theorem4", parents=[common])
    b.add_argument("--o", type=int, required=True)
    b.add_argument("--r", type=int, default=0)
    b.add_argument("--epsilon1", type=float, required=True)
    b.add_argument("--C-const", type=float, default=1.0)
    b.add_argument("--R", type=float, default=1.0)
    b.add_argument("--w0-norm", type=float, default=1.0)
    b.add_argument("--M", type=int)
    b.add_argument("--N-eval", type=int, default=1000)
    b.add_argument("--sigma", type=float, default=0.0)
    p.set_defaults(func=cmd_bounds)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s")
    if args.jobs < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (SchemaError, FrameFormatError, UsageError, MaterializationError,
            ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - last-resort exit code
        log.debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
