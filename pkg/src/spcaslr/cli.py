"""Command line interface.

Exit status: 0 on success, 1 on a parameter or usage error, 2 on a runtime
failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import baselines
from .detect import hypothesis_test, recover_topk, support_recovery
from .errors import ParameterError
from .harness.config import build_config, read_config_file
from .harness.runner import rows_to_csv, run_experiment, summarize_recovery, summarize_testing
from .model import SpikedModel
from .sampler import derive_seed, load_csv, rescale_columns, sample_null, sample_spiked, save_csv
from .slr import make_solver
from .verify import run_checks

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _data_flags(p):
    p.add_argument("--n", type=int, default=500, help="sample count")
    p.add_argument("--d", type=int, default=100, help="dimension")
    p.add_argument("--k", type=int, default=5, help="sparsity")
    p.add_argument("--theta", type=float, default=1.0, help="signal strength (0 gives null data)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rescale", action="store_true", help="rescale columns to unit variance")


def _solver_flags(p):
    p.add_argument("--solver", default="lasso_topk", help="lasso_topk, omp or l0")
    p.add_argument("--lambda", dest="lam", type=float, default=0.1, help="Lasso penalty")
    p.add_argument("--lambda-rule", default="fixed", choices=("fixed", "plugin"))


def _bench_flags(p):
    p.add_argument("--config", help="key=value file; flags override it")
    p.add_argument("--preset", help="named configuration, e.g. figure1-desk or figure2")
    for flag in ("n", "d", "theta", "trials", "seed", "solver", "lambda", "lambda-rule", "method", "tau", "workers"):
        p.add_argument(f"--{flag}", dest=flag.replace("-", "_"))
    p.add_argument("--k", help="comma-separated sparsity levels")
    p.add_argument("--rescale", action="store_const", const="true")
    p.add_argument("--out", help="CSV output path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spcaslr", description="Sparse PCA via sparse linear regression.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="sample a data matrix and write it as CSV")
    _data_flags(p)
    p.add_argument("--spike", default="random_signs", choices=("uniform", "random_signs", "random_sphere"))
    p.add_argument("--out", required=True)

    for name, help_text in (("qtest", "run the Q hypothesis test"), ("recover", "recover the spike's support")):
        p = sub.add_parser(name, help=help_text)
        _data_flags(p)
        _solver_flags(p)
        p.add_argument("--input", help="CSV data matrix; otherwise data is sampled from the flags")
        p.add_argument("--full", action="store_true", help="compute every Q value (qtest)")
        if name == "recover":
            p.add_argument("--method", default="qslr", choices=("qslr", "dt", "ct", "tpower"))
            p.add_argument("--mode", default="topk", choices=("topk", "threshold"),
                           help="qslr only: top-k or all coordinates above the threshold")

    _bench_flags(sub.add_parser("bench-recovery", help="support recovery sweep (CSV)"))
    _bench_flags(sub.add_parser("bench-testing", help="H0 vs H1 statistic distributions (CSV)"))
    sub.add_parser("verify", help="run the analytic and distributional self-checks")
    return parser


def _load_or_sample(args):
    if args.k < 1:
        raise ParameterError(f"--k must be >= 1, got {args.k}")
    truth = None
    if getattr(args, "input", None):
        x = load_csv(args.input)
    else:
        if args.n < 1 or args.d < 2:
            raise ParameterError("need --n >= 1 and --d >= 2")
        if args.theta > 0:
            spike = getattr(args, "spike", "random_signs")
            model = SpikedModel.build(args.d, args.k, args.theta, spike, seed=derive_seed(args.seed, "spike"))
            x = sample_spiked(model, args.n, seed=derive_seed(args.seed, "data"))
            truth = model.spike.support
        else:
            x = sample_null(args.d, args.n, seed=derive_seed(args.seed, "data"))
    if args.rescale:
        x = rescale_columns(x, "unit_variance")
    if args.k >= x.d:
        raise ParameterError(f"--k must be below the dimension {x.d}")
    return x, truth


def _solver(args):
    params = {"lam": args.lam, "lambda_rule": args.lambda_rule} if args.solver == "lasso_topk" else {}
    return make_solver(args.solver, **params)


def cmd_gen(args, out):
    x, truth = _load_or_sample(args)
    save_csv(x, args.out)
    print(f"wrote {x.n}x{x.d} matrix to {args.out}", file=out)
    if truth is not None:
        print("support: " + " ".join(map(str, truth)), file=out)


def cmd_qtest(args, out):
    x, truth = _load_or_sample(args)
    decision, rep = hypothesis_test(x, args.k, _solver(args), full=args.full)
    print(f"decision: {decision}", file=out)
    print(f"threshold: {rep.threshold!r}", file=out)
    print(f"q_max: {rep.q_max!r}", file=out)
    print(f"coordinates evaluated: {int(np.sum(~np.isnan(rep.q)))}/{x.d}", file=out)


def cmd_recover(args, out):
    x, truth = _load_or_sample(args)
    if args.method == "qslr":
        solver = _solver(args)
        if args.mode == "topk":
            selected, _ = recover_topk(x, args.k, solver)
        else:
            selected, _ = support_recovery(x, args.k, solver)
    elif args.method == "dt":
        selected = baselines.diagonal_thresholding(x, args.k).selected
    elif args.method == "ct":
        selected = baselines.covariance_thresholding(x, args.k, split=True).selected
    else:
        selected = baselines.tpower_recovery(x, args.k).selected
    print("selected: " + " ".join(map(str, selected)), file=out)
    if truth is not None:
        print("support:  " + " ".join(map(str, truth)), file=out)
        print(f"overlap_fraction: {len(set(truth) & set(selected)) / args.k!r}", file=out)


def _bench(kind, args, out):
    file_values = read_config_file(args.config) if args.config else {}
    overrides = {}
    for key in ("n", "d", "k", "theta", "trials", "seed", "solver", "lambda", "lambda_rule",
                "method", "tau", "workers", "rescale", "out", "preset"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    config = build_config(kind, file_values, overrides)
    rows = run_experiment(config)
    text = rows_to_csv(rows)
    if config.out_path:
        with open(config.out_path, "wb") as fh:
            fh.write(text.encode("utf-8"))
        if kind == "recovery":
            for (m, k), (mean, se, count) in sorted(summarize_recovery(rows).items()):
                print(f"{m:>7s} k={k:<4d} overlap {mean:.3f} +- {se:.3f} ({count} trials)", file=out)
        else:
            for (m, k), err in sorted(summarize_testing(rows).items()):
                print(f"{m:>7s} k={k:<4d} best-cutoff error {err:.3f}", file=out)
        print(f"wrote {len(rows)} rows to {config.out_path}", file=out)
    else:
        out.write(text)


def cmd_verify(args, out):
    results = run_checks()
    for name, passed, detail in results:
        print(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}", file=out)
    failed = sum(not passed for _, passed, _ in results)
    print(f"{len(results) - failed}/{len(results)} checks passed", file=out)
    return EXIT_OK if failed == 0 else EXIT_RUNTIME


COMMANDS = {
    "gen": cmd_gen,
    "qtest": cmd_qtest,
    "recover": cmd_recover,
    "bench-recovery": lambda a, o: _bench("recovery", a, o),
    "bench-testing": lambda a, o: _bench("testing", a, o),
    "verify": cmd_verify,
}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        status = COMMANDS[args.command](args, out)
    except ParameterError as exc:
        print(f"spcaslr: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:
        logging.getLogger("spcaslr").debug("runtime failure", exc_info=True)
        print(f"spcaslr: runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK if status is None else status


if __name__ == "__main__":
    sys.exit(main())
