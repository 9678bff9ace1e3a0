"""Command-line front end.

    delaytron run --config sweep.cfg --algo delaytron --max-delay 100
    delaytron plot --in a.csv b.csv --out curves.svg
    delaytron gen --dataset synsep --n 100000 --seed 0 --out synsep.csv

Exit status: 0 on success, 1 for configuration errors, 2 for runtime errors.
"""
import argparse
import logging
import sys

from .config import DEFAULT_GAMMAS, load_config
from .datasets import SyntheticSpec, gen_synthetic, save_csv
from .errors import ConfigError, InputError
from .experiment import run_experiment
from .plot import plot_csvs
from .rng import rng_stream

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="delaytron", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a gamma x seed sweep")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--algo", dest="algorithm",
                   choices=("delaytron", "adaptive_delaytron", "banditron"))
    p.add_argument("--dataset", help="synsep, synnonsep or a CSV path")
    p.add_argument("--dataset-size", dest="dataset_size", type=int)
    p.add_argument("--dataset-seed", dest="dataset_seed", type=int)
    p.add_argument("--normalization", choices=("unit_norm", "max_norm_scale", "none"))
    p.add_argument("--gamma", help=f"comma separated; default {','.join(map(str, DEFAULT_GAMMAS))}")
    p.add_argument("--eta", help="step size or theoretical:<variant>")
    p.add_argument("--delay-mode", dest="delay_mode", choices=("constant", "uniform", "file"))
    p.add_argument("--max-delay", dest="max_delay", type=int)
    p.add_argument("--delay-file", dest="delay_file")
    p.add_argument("--rounds", type=int)
    p.add_argument("--seeds", type=int)
    p.add_argument("--base-seed", dest="base_seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out")
    p.add_argument("--no-plot", dest="plot", action="store_const", const=False)

    p = sub.add_parser("plot", help="log-log error-rate plot of per-round CSVs")
    p.add_argument("--in", dest="inputs", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--column", default="error_rate")

    p = sub.add_parser("gen", help="write a synthetic dataset as CSV")
    p.add_argument("--dataset", choices=("synsep", "synnonsep"), required=True)
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    return parser


def _cmd_run(args):
    keys = ("algorithm", "dataset", "dataset_size", "dataset_seed", "normalization", "gamma",
            "eta", "delay_mode", "max_delay", "delay_file", "rounds", "seeds", "base_seed",
            "workers", "out", "plot")
    overrides = {k: getattr(args, k) for k in keys}
    for k in ("dataset_size", "dataset_seed", "max_delay", "rounds", "seeds", "base_seed",
              "workers", "plot"):
        if overrides[k] is not None:
            overrides[k] = str(overrides[k])
    cfg = load_config(args.config, overrides)
    result = run_experiment(cfg)
    for row in result["rows"]:
        flag = "*" if row.gamma == result["best_gamma"] else " "
        print(f"{flag} gamma={row.gamma:<8g} mean_final_error={row.mean:.5f} std={row.std:.5f}")
    print(f"summary: {result['summary']}")


def _cmd_plot(args):
    print(plot_csvs(args.inputs, args.out, args.column))


def _cmd_gen(args):
    noise = 0.05 if args.dataset == "synnonsep" else 0.0
    spec = SyntheticSpec(num_samples=args.n, noise_rate=noise, seed=args.seed)
    save_csv(gen_synthetic(spec, rng_stream(args.seed, "data")), args.out)
    print(args.out)


COMMANDS = {"run": _cmd_run, "plot": _cmd_plot, "gen": _cmd_gen}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage; bad flags are configuration errors here
        return EXIT_OK if not exc.code else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except (ConfigError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
