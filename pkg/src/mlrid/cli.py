"""Command line entry point: ``mlrid {simulate,run,sweep,eval,bounds,plot}``.

Exit codes: 0 success, 1 configuration/usage error, 2 numeric failure,
3 I/O failure.
"""
import argparse
import json
import sys

from . import experiment
from .config import ConfigError, parse_config
from .estimator import CapMode, NumericError
from .svg import emit_svg

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3


def _load_doc(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"<file>: config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"<file>: invalid JSON in {path}: {exc}") from None


def _apply_overrides(doc, args):
    if getattr(args, "out", None):
        doc["outputs"] = args.out
    if getattr(args, "seed", None) is not None:
        doc.setdefault("generator", {})["seed"] = args.seed
    if getattr(args, "replications", None) is not None:
        doc["replications"] = args.replications
    if getattr(args, "jobs", None) is not None:
        doc["parallel_jobs"] = args.jobs
    if getattr(args, "cap_mode", None):
        try:
            CapMode.parse(args.cap_mode)
        except ValueError as exc:
            raise ConfigError(f"--cap-mode: {exc}") from None
        doc.setdefault("estimator", {})["cap_mode"] = args.cap_mode
    return doc


def _config(args):
    return parse_config(_apply_overrides(_load_doc(args.config), args))


def cmd_simulate(args):
    cfg = _config(args)
    block = experiment.simulate(cfg)
    path = f"{cfg.outputs}_stream.csv"
    experiment.write_stream(path, block)
    print(path)


def cmd_run(args):
    cfg = _config(args)
    result = experiment.run_experiment(cfg)
    last = result.summary_rows()[-1]
    header = result.summary_header()
    print(f"wrote {cfg.replications} replication(s) to {cfg.outputs}_*.csv")
    for key in ("err_sq_mean", "miss_gap_mean", "jn_avg_mean"):
        print(f"  final {key} = {last[header.index(key)]:.6g}")


def cmd_sweep(args):
    doc = _apply_overrides(_load_doc(args.config), args)
    grid = _load_doc(args.grid)
    try:
        experiment.sweep(doc, grid)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"grid: {exc}") from None
    print(f"{parse_config(doc).outputs}_sweep.csv")


def cmd_eval(args):
    cfg = _config(args)
    block = experiment.read_stream(args.stream)
    traj, dev = experiment.evaluate(cfg, block, args.snapshots)
    path = f"{cfg.outputs}_eval.csv"
    experiment.write_csv(path, experiment.COLUMNS, traj.rows)
    print(path)
    if dev is not None:
        print(f"max deviation from stored snapshots: {dev:.3e}")
    if traj.failed_at is not None:
        raise NumericError("numeric failure during eval", traj.failed_at)


def cmd_bounds(args):
    header, body = experiment.read_csv(args.lambdas)
    for col in ("n", "lambda_min"):
        if col not in header:
            raise ConfigError(f"--lambda: column {col!r} missing; available: {header}")
    rows = experiment.bounds_table(args.delta, args.epsilon, body[:, header.index("n")],
                                   body[:, header.index("lambda_min")])
    path = f"{args.out}_bounds.csv"
    experiment.write_csv(path, ["n", "lambda_min", "thm1_bound", "thm2_bound", "thm3_rate"], rows)
    print(path)


def cmd_plot(args):
    emit_svg(args.csv, args.columns, args.out, logx=not args.linear_x, logy=not args.linear_y,
             title=args.title)
    print(args.out)


def build_parser():
    ap = argparse.ArgumentParser(prog="mlrid", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def with_config(p, out_required=False):
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", required=out_required, help="output path prefix")
        p.add_argument("--seed", type=int, help="override generator.seed")
        p.add_argument("--replications", type=int)
        p.add_argument("--jobs", type=int, help="worker processes for replications")
        p.add_argument("--cap-mode", help="faithful | constant:C | unbounded")
        return p

    with_config(sub.add_parser("simulate", help="write a raw stream CSV")).set_defaults(func=cmd_simulate)
    with_config(sub.add_parser("run", help="full pipeline")).set_defaults(func=cmd_run)
    p = with_config(sub.add_parser("sweep", help="grid of full runs"))
    p.add_argument("--grid", required=True, help='JSON object, e.g. {"generator.p": [0.6, 0.8]}')
    p.set_defaults(func=cmd_sweep)
    p = with_config(sub.add_parser("eval", help="recompute metrics from a stored stream"))
    p.add_argument("--stream", required=True)
    p.add_argument("--snapshots", help="snapshot CSV to check the replay against")
    p.set_defaults(func=cmd_eval)
    p = sub.add_parser("bounds", help="bound curves for a lambda_min series")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--lambda", dest="lambdas", required=True, help="CSV with n and lambda_min columns")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bounds)
    p = sub.add_parser("plot", help="render CSV columns as SVG")
    p.add_argument("--csv", required=True)
    p.add_argument("--columns", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--linear-x", action="store_true")
    p.add_argument("--linear-y", action="store_true")
    p.add_argument("--title")
    p.set_defaults(func=cmd_plot)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
