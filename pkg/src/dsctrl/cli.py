"""Command-line interface: ``dsctrl {stabilize,h2,hinf,shape,gen,bench}``.

Exit codes: 0 success, 1 infeasible / failed optimization, 2 usage or parse
error, 3 numerical error.
"""

import argparse
import logging
from pathlib import Path
import sys

import numpy as np

from . import bench
from .errors import DsctrlError, ParseError
from .frames import export_frames
from .modelfile import read_model, write_model
from .objective import to_text
from .shaping import Envelope, default_plant, ultimate_gain, zn_initial

log = logging.getLogger("dsctrl")


class UsageError(DsctrlError):
    exit_code = 2


def _floats(text, count=None, what="values"):
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"cannot parse {what} {text!r}") from None
    if count is not None and len(vals) != count:
        raise UsageError(f"{what} needs {count} comma-separated numbers, got {text!r}")
    return vals


def _range(text):
    lo, _, hi = text.partition("-")
    try:
        return (int(lo), int(hi or lo))
    except ValueError:
        raise UsageError(f"bad range {text!r}; use N or LO-HI") from None


def _shared(p):
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--multistart", type=int, default=1, help="starts per problem")
    p.add_argument("--restarts", type=int, default=20, help="max Nelder-Mead runs")
    p.add_argument("--tol", type=float, default=1e-6, help="relative restart accuracy")
    p.add_argument("--max-evals", type=int, default=None, help="evaluations per run (400*n)")
    p.add_argument("--out", help="results CSV path")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--no-figures", action="store_true", help="skip the summary figure")
    p.add_argument("--no-timing", action="store_true",
                   help="write 0 as wall time so the CSV is byte-reproducible")


def build_parser():
    parser = argparse.ArgumentParser(prog="dsctrl", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, helptext in (("stabilize", "find a stabilizing static output feedback"),
                           ("h2", "minimize the closed-loop H2 norm"),
                           ("hinf", "minimize the closed-loop H-infinity norm")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--model", required=True, help="model file")
        p.add_argument("--x0", help="initial gain, row-major comma-separated")
        p.add_argument("--norm-tol", type=float, default=1e-6)
        p.add_argument("--trace", help="write the best start's evaluation trace here")
        _shared(p)

    p = sub.add_parser("shape", help="PID step-response shaping")
    p.add_argument("--plant", default="builtin", help="SISO model file or 'builtin'")
    p.add_argument("--model", dest="plant", help=argparse.SUPPRESS)
    start = p.add_mutually_exclusive_group()
    start.add_argument("--zn", nargs="?", const="auto", metavar="KU,TU",
                       help="start from Ziegler-Nichols gains (computed from the plant if omitted)")
    start.add_argument("--x0", metavar="KP,KI,KD|random",
                       help="explicit start, or 'random' for a seeded non-stabilizing one")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--horizon", type=float, default=20.0)
    p.add_argument("--zmin", type=float, default=0.98)
    p.add_argument("--zmax", type=float, default=1.02)
    p.add_argument("--filter-n", type=float, default=100.0)
    p.add_argument("--frames", help="directory for frame CSVs, index and figures")
    _shared(p)

    p = sub.add_parser("gen", help="write synthetic SOF instances")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--n", default="2-6")
    p.add_argument("--m", default="1-2")
    p.add_argument("--p", default="1-2")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("bench", help="batch benchmark to CSV")
    p.add_argument("task", nargs="?", choices=bench.TASKS, default="stabilize")
    p.add_argument("--task", dest="task_opt", choices=bench.TASKS, help=argparse.SUPPRESS)
    p.add_argument("--model", action="append", default=[], help="model file (repeatable)")
    p.add_argument("--count", type=int, default=0, help="generated instances")
    p.add_argument("--n", default="2-6")
    p.add_argument("--m", default="1-2")
    p.add_argument("--p", default="1-2")
    p.add_argument("--norm-tol", type=float, default=1e-6)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--horizon", type=float, default=20.0)
    p.add_argument("--zmin", type=float, default=0.98)
    p.add_argument("--zmax", type=float, default=1.02)
    _shared(p)
    return parser


def _config(args, task, **kw):
    return bench.BenchmarkConfig(
        task=task, seed=args.seed, multistart=args.multistart, max_restarts=args.restarts,
        restart_tol=args.tol, max_evals=args.max_evals, jobs=args.jobs,
        timing=not args.no_timing, **kw)


def _figure_path(args):
    if args.out and not args.no_figures:
        return str(Path(args.out).with_suffix(".png"))
    return None


def _print_summary(records):
    for key, val in bench.summary(records).items():
        print(f"{key}: {val:.6g}" if isinstance(val, float) else f"{key}: {val}")


def cmd_sof(args):
    x0 = _floats(args.x0, what="--x0") if args.x0 else None
    read_model(args.model)  # fail fast with a parse error before running
    cfg = _config(args, args.command, model_paths=(args.model,), norm_tol=args.norm_tol,
                  x0=x0, keep_trace=bool(args.trace))
    records = bench.run_benchmark(cfg, out=args.out, figure=_figure_path(args))
    best = bench.best_record(records)
    if best.status.startswith("error"):
        raise DsctrlError(f"optimization failed: {best.status}")
    print(f"model: {best.problem_id}")
    print(f"objective: {to_text(best.f_final)}")
    print(f"stabilized: {str(best.stabilized).lower()}")
    print("K = " + np.array2string(best.k, precision=8))
    print(f"evals: {best.evals}  runs: {best.restarts}  wall: {best.wall_time_ms:.1f} ms")
    if args.trace and best.trace is not None:
        bench.write_trace(best.trace, args.trace)
    return 0 if best.stabilized else 1


def cmd_shape(args):
    env = Envelope(args.zmin, args.zmax, args.horizon, args.lam)
    plant = default_plant() if args.plant == "builtin" else read_model(args.plant)
    kind = "zn"
    if args.x0 == "random":
        x0 = bench.random_unstable_pid(plant, np.random.default_rng(args.seed))
        kind = "random"
    elif args.x0:
        x0 = _floats(args.x0, 3, "--x0")
        kind = "file"
    elif args.zn and args.zn != "auto":
        ku, tu = _floats(args.zn, 2, "--zn")
        x0 = zn_initial(ku, tu, args.filter_n).x
    else:
        ku, tu = ultimate_gain(plant)
        x0 = zn_initial(ku, tu, args.filter_n).x
    cfg = _config(args, "shape", envelope=env, filter_n=args.filter_n, x0=tuple(x0),
                  keep_trace=True)
    prob = bench.Problem(plant.name if args.plant != "builtin" else "builtin_lag3", 0,
                          path=None if args.plant == "builtin" else args.plant,
                          builtin=args.plant == "builtin")
    rec = bench.run_start(cfg, prob, 0)
    rec.x0_kind = kind
    rec.seed = args.seed if kind == "random" else None
    if rec.status.startswith("error"):
        raise DsctrlError(f"shaping failed: {rec.status}")
    run = rec.extra
    if args.out:
        bench.write_csv([rec], args.out)
    if args.frames:
        export_frames(run.frames, args.frames, env)
    print(f"start ({kind}): kp,ki,kd = {', '.join(f'{v:.6g}' for v in x0)}  f = {run.initial.f:.6g}")
    print(f"final: kp,ki,kd = {', '.join(f'{v:.6g}' for v in run.pid.x)}")
    print(f"f = {run.outcome.f:.6g}  t_r = {run.outcome.t_r:.6g}  max_dev = {run.outcome.max_dev:.6g}")
    print(f"evals: {run.evals}  runs: {run.restarts}  frames: {len(run.frames)}")
    return 0 if run.outcome.f <= run.initial.f else 1


def cmd_gen(args):
    spec = bench.GeneratorSpec(args.count, _range(args.n), _range(args.m), _range(args.p),
                               args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i in range(args.count):
        model, k0 = spec.instance(i)
        cert = " ".join(repr(float(v)) for v in k0.ravel())
        write_model(model, out / f"{model.name}.txt",
                    comments=[f"synthetic SOF instance, seed {args.seed} index {i}",
                              f"certificate K0 (row-major, {k0.shape[0]}x{k0.shape[1]}): {cert}"])
        print(out / f"{model.name}.txt")
    return 0


def cmd_bench(args):
    if args.task_opt:
        args.task = args.task_opt
    gen = None
    if args.count:
        gen = bench.GeneratorSpec(args.count, _range(args.n), _range(args.m), _range(args.p),
                                  args.seed)
    cfg = _config(args, args.task, model_paths=tuple(args.model), generator=gen,
                  norm_tol=args.norm_tol,
                  envelope=Envelope(args.zmin, args.zmax, args.horizon, args.lam))
    records = bench.run_benchmark(cfg, out=args.out, figure=_figure_path(args))
    if not args.out:
        sys.stdout.write(bench.csv_text(records))
    _print_summary(records)
    return 0


COMMANDS = {"stabilize": cmd_sof, "h2": cmd_sof, "hinf": cmd_sof, "shape": cmd_shape,
            "gen": cmd_gen, "bench": cmd_bench}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ParseError as exc:
        print(f"dsctrl: parse error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (DsctrlError, ValueError) as exc:
        code = getattr(exc, "exit_code", 2)
        print(f"dsctrl: {exc}", file=sys.stderr)
        return code
    except OSError as exc:
        print(f"dsctrl: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
