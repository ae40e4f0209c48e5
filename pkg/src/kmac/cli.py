"""``kmac`` command-line interface.

Exit codes: 0 success, 2 invalid configuration, 3 degenerate data.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import DegenerateDataError, InvalidConfigError
from .estimators import eta_hat, eta_hat_lin
from .experiments import (
    COEFF_CONFIGS,
    DEFAULT_LAMBDAS,
    POWER_CONFIGS,
    QQ_CONFIGS,
    run_coeff_curve,
    run_loglog_rate,
    run_power_curve,
    run_qq_null,
)
from .geograph import parse_graph
from .inference import asymptotic_test, permutation_test
from .io import ExperimentTable, load_csv, write_matrix, write_table
from .kernels import parse_kernel
from .oracles import SETTINGS, SettingSpec, sample_setting
from .ranks import eta_hat_rank, make_grid

EXIT_INVALID = 2
EXIT_DEGENERATE = 3


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="base seed (required when random)")
    common.add_argument("--threads", type=int, default=1, help="worker threads for permutations")
    common.add_argument("--json", action="store_true", help="print JSON to stdout")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--x", required=True, type=Path, help="CSV of X rows")
    data.add_argument("--y", required=True, type=Path, help="CSV of Y rows")
    data.add_argument("--kernel", default="distance:alpha=1")
    data.add_argument("--graph", default="knn:k=1")
    data.add_argument("--estimator", default="standard", choices=("standard", "linear", "rank"))
    data.add_argument("--grid-x", default=None, help="rank grid for X (halton, lattice1d, uniform:seed=7)")
    data.add_argument("--grid-y", default=None, help="rank grid for Y")

    exp = argparse.ArgumentParser(add_help=False)
    exp.add_argument("--out", type=Path, default=None, help="table path (.csv or .json)")
    exp.add_argument("--full-scale", action="store_true", help="n=2000 and 1000 replicates")
    exp.add_argument("--config", action="append", default=None,
                     help="kind+kernel+graph, repeatable (e.g. linear+distance+knn:k=20)")

    p = argparse.ArgumentParser(prog="kmac", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("compute", parents=[common, data], help="estimate the coefficient")

    t = sub.add_parser("test", parents=[common, data], help="test independence")
    t.add_argument("--method", default="asymptotic", choices=("asymptotic", "perm"))
    t.add_argument("--B", type=int, default=1000, help="permutations")
    t.add_argument("--alpha", type=float, default=0.05)

    s = sub.add_parser("simulate", parents=[common], help="draw a simulation setting")
    s.add_argument("--setting", required=True, choices=SETTINGS)
    s.add_argument("--lambda", dest="lam", type=float, default=0.0)
    s.add_argument("--n", type=int, default=300)
    s.add_argument("--out", type=Path, required=True, help="output directory for x.csv, y.csv")

    q = sub.add_parser("qq-null", parents=[common, exp], help="null z-values vs normal")
    q.add_argument("--setting", default="null2", choices=("null1", "null2"))
    q.add_argument("--n", type=int, default=500)
    q.add_argument("--reps", type=int, default=500)

    ll = sub.add_parser("loglog", parents=[common, exp], help="log-log rate slopes")
    ll.add_argument("--setting", default="null1", choices=("null1", "null2"))
    ll.add_argument("--n-grid", type=_ints, default=[256, 512, 1024, 2048])
    ll.add_argument("--reps", type=int, default=100)
    ll.add_argument("--boot", type=int, default=2000)

    pw = sub.add_parser("power", parents=[common, exp], help="power curves")
    pw.add_argument("--setting", default="sinusoidal",
                    choices=("linear", "sinusoidal", "wshaped", "step", "semicircular", "heterogeneous"))
    pw.add_argument("--lambdas", type=_floats, default=list(DEFAULT_LAMBDAS))
    pw.add_argument("--n", type=int, default=300)
    pw.add_argument("--reps", type=int, default=200)
    pw.add_argument("--B", type=int, default=1000)
    pw.add_argument("--alpha", type=float, default=0.05)
    pw.add_argument("--baselines", default="dcor,hsic", help="comma list from dcor,hsic or 'none'")

    cc = sub.add_parser("coeff-curve", parents=[common, exp], help="coefficient vs noise/correlation")
    cc.add_argument("--setting", default="sinusoidal", choices=("sinusoidal", "linear"))
    cc.add_argument("--grid", type=_floats, default=None)
    cc.add_argument("--n", type=int, default=2000)
    cc.add_argument("--reps", type=int, default=10)
    cc.add_argument("--no-dcor", action="store_true")
    return p


def _need_seed(args) -> int:
    if args.seed is None:
        raise InvalidConfigError(f"'{args.command}' is random; pass --seed")
    return args.seed


def _load_pair(args):
    x, y = load_csv(args.x), load_csv(args.y)
    if len(x) != len(y):
        raise InvalidConfigError(f"X has {len(x)} rows but Y has {len(y)}")
    kernel = parse_kernel(args.kernel, data=y)
    graph = parse_graph(args.graph)
    grid_x = grid_y = None
    if args.estimator == "rank":
        grid_x = make_grid(args.grid_x, len(x), x.shape[1])
        grid_y = make_grid(args.grid_y, len(y), y.shape[1])
    return x, y, kernel, graph, grid_x, grid_y


def _emit(obj: dict, as_json: bool) -> None:
    out = sys.stdout
    if as_json:
        out.write(json.dumps(obj, indent=2) + "\n")
    else:
        for k, v in obj.items():
            out.write(f"{k}: {v}\n")


def cmd_compute(args) -> None:
    x, y, kernel, graph, grid_x, grid_y = _load_pair(args)
    if args.estimator == "rank":
        est = eta_hat_rank(x, y, kernel, graph, grid_x, grid_y)
    else:
        fn = eta_hat_lin if args.estimator == "linear" else eta_hat
        est = fn(x, y, kernel, graph.build(x))
    keys = ("value", "numerator", "denominator", "graph_term", "cross_term", "n", "kind")
    _emit({k: getattr(est, k) for k in keys}, args.json)


def cmd_test(args) -> None:
    x, y, kernel, graph, grid_x, grid_y = _load_pair(args)
    if not kernel.characteristic:
        print(f"warning: kernel {kernel} is not characteristic; the test is not consistent "
              "against all alternatives", file=sys.stderr)
    if not 0 < args.alpha < 1:
        raise InvalidConfigError("--alpha must lie in (0, 1)")
    if args.method == "perm":
        rep = permutation_test(args.estimator, x, y, kernel, graph, args.B, _need_seed(args),
                               args.threads, grid_x, grid_y)
    else:
        rep = asymptotic_test(args.estimator, x, y, kernel, graph, grid_x, grid_y)
    out = rep.to_dict()
    out["alpha"] = args.alpha
    out["reject"] = bool(rep.p_value <= args.alpha)
    _emit(out, args.json)


def cmd_simulate(args) -> None:
    spec = SettingSpec(args.setting, args.lam, args.n, _need_seed(args))
    x, y = sample_setting(spec)
    args.out.mkdir(parents=True, exist_ok=True)
    write_matrix(x, args.out / "x.csv")
    write_matrix(y, args.out / "y.csv")
    _emit({"setting": spec.name, "lambda": spec.lam, "n": spec.n, "seed": spec.seed,
           "x": str(args.out / "x.csv"), "y": str(args.out / "y.csv")}, args.json)


def _finish_table(args, table: ExperimentTable) -> None:
    if args.out is not None:
        write_table(table, args.out)
        _emit({"written": str(args.out), **_summary(table)}, args.json)
    elif args.json:
        sys.stdout.write(json.dumps(table.to_json_obj(), indent=2) + "\n")
    else:
        names = list(table.columns)
        print(",".join(names))
        for i in range(table.n_rows):
            print(",".join(format(table.columns[c][i], ".6g") for c in names))
        for k, v in _summary(table).items():
            print(f"# {k}: {v}")


def _summary(table: ExperimentTable) -> dict:
    keys = ("ks_distance", "ks_pvalue", "mean_z", "slopes")
    return {k: table.metadata[k] for k in keys if k in table.metadata}


def cmd_qq(args) -> None:
    config = (args.config or [QQ_CONFIGS[args.setting][0]])
    if len(config) != 1:
        raise InvalidConfigError("qq-null takes one --config")
    table = run_qq_null(args.setting, config[0], args.n, args.reps, _need_seed(args),
                        args.full_scale)
    _finish_table(args, table)


def cmd_loglog(args) -> None:
    table = run_loglog_rate(args.setting, args.config or QQ_CONFIGS[args.setting],
                            args.n_grid, args.reps, _need_seed(args), args.boot, args.full_scale)
    _finish_table(args, table)


def cmd_power(args) -> None:
    baselines = () if args.baselines == "none" else tuple(
        b.strip() for b in args.baselines.split(",") if b.strip()
    )
    table = run_power_curve(args.setting, args.lambdas, args.config or POWER_CONFIGS, args.n,
                            args.reps, args.B, _need_seed(args), args.alpha, baselines,
                            args.threads, args.full_scale)
    _finish_table(args, table)


def cmd_coeff(args) -> None:
    table = run_coeff_curve(args.setting, args.grid, args.config or COEFF_CONFIGS, args.n,
                            args.reps, _need_seed(args), not args.no_dcor, args.full_scale)
    _finish_table(args, table)


COMMANDS = {
    "compute": cmd_compute,
    "test": cmd_test,
    "simulate": cmd_simulate,
    "qq-null": cmd_qq,
    "loglog": cmd_loglog,
    "power": cmd_power,
    "coeff-curve": cmd_coeff,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise InvalidConfigError("--threads must be >= 1")
        COMMANDS[args.command](args)
    except DegenerateDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except InvalidConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return 0


if __name__ == "__main__":
    sys.exit(main())
