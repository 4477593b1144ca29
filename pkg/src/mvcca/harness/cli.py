"""Command-line entry point ``mvcca``.

Exit codes: 0 success, 2 configuration error, 3 numeric failure,
4 acceptance-check failure (only with ``--assert``).
"""

import argparse
import logging
import sys

from ..exceptions import ConfigError, MVCCAError, NumericError
from .config import KINDS, build_config, load_config
from .emit import emit
from .experiments import run

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_ACCEPTANCE = 0, 2, 3, 4

log = logging.getLogger("mvcca")


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON experiment configuration")
    common.add_argument("--seed", type=int, help="run seed (unsigned 64-bit); overrides config")
    common.add_argument("--out", metavar="DIR", help="output directory (default: out)")
    common.add_argument("--threads", type=int, default=1, metavar="COUNT",
                        help="worker threads for trials; results do not depend on it")
    common.add_argument("--format", choices=("csv", "json"), help="output format")
    common.add_argument("--assert", dest="check", action="store_true",
                        help="exit with status 4 if the experiment's acceptance check fails")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(prog="mvcca", description=__doc__.splitlines()[0],
                                     parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "rate": "finite-sample n^{-1/2} rate of pairwise and multi-view recovery",
        "dominance": "first-order dominance ablation over t_r / t_1^2",
        "intersection": "intersection-filter consistency and perturbation-bound chain",
        "hermite-cert": "Hermite orthonormality / Mehler cross-moment certification",
        "invariance": "moment preservation through oracle-inverted nonlinear views",
        "estimate": "recover subspaces from view files",
        "construct-spectrum": "build a 3-view ensemble from target spectra",
    }
    for kind in KINDS:
        sub.add_parser(kind, help=helps[kind], parents=[common])
    return parser


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        if args.config:
            cfg = load_config(args.config, args.command)
        else:
            cfg = build_config({}, args.command)
        if args.seed is not None:
            cfg = build_config({**cfg.to_dict(), "seed": args.seed}, args.command)
        out = args.out or cfg.outputs.get("dir", "out")
        fmt = args.format or cfg.outputs.get("format", "csv")
        record = run(cfg, threads=args.threads)
        paths = emit(record, fmt, out)
    except ConfigError as exc:
        print(f"mvcca: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"mvcca: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except MVCCAError as exc:
        # remaining library errors stem from invalid experiment parameters
        print(f"mvcca: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"mvcca: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    log.info("%s finished in %.2fs; wrote %s", record.experiment, record.wall_time,
             ", ".join(paths))
    print(f"{record.experiment}: {'PASS' if record.passed else 'FAIL'} "
          f"(config {record.config_hash[:12]}, {record.wall_time:.2f}s)", file=sys.stderr)
    if args.check and not record.passed:
        return EXIT_ACCEPTANCE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
