"""
Command line interface.

::

    sbchan simulate [CONFIG] [--scenario S] [--trials N] [--seed K]
                    [--snr-db-list 0,3,6] [--pilots-list 60,80] [--estimators vmp3l,rwf]
                    [--out results.csv] [--workers W]
    sbchan priors sweep [--layers 2|3] [--epsilon-list 0.5,1,1.5] [--eta 1] [--a 1] [--b 1]
                        [--alpha-max 3] [--points 61] [--out FILE]
    sbchan selftest

Exit status is 0 on success, 1 on a runtime failure and 2 on a usage or
configuration error.
"""

import argparse
import logging
import sys
from typing import List, Optional

import numpy as np

from .experiment import ESTIMATORS, SCENARIOS, ExperimentConfig, aggregate, run_experiment
from .io import ConfigError, format_number, load_config, parse_config, write_csv

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2

log = logging.getLogger("sbchan")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sbchan", description="Sparse Bayesian OFDM channel estimation experiments.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log estimator warnings and progress")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    sim = sub.add_parser("simulate", help="run a Monte Carlo experiment and write CSV results")
    sim.add_argument("config", nargs="?", help="plain-text 'key = value' config file")
    sim.add_argument("--scenario", choices=SCENARIOS)
    sim.add_argument("--trials", type=int)
    sim.add_argument("--seed", type=int, help="master seed")
    sim.add_argument("--snr-db-list", help="comma separated SNR grid in dB")
    sim.add_argument("--pilots-list", help="comma separated pilot counts")
    sim.add_argument("--estimators", help=f"comma separated subset of {','.join(ESTIMATORS)}")
    sim.add_argument("--out", help="raw CSV path; aggregates go to <stem>_aggregate.csv")
    sim.add_argument("--workers", type=int, help="worker processes (results do not depend on it)")
    sim.set_defaults(usage=sim.format_usage())

    pri = sub.add_parser("priors", help="prior diagnostics")
    pri_sub = pri.add_subparsers(dest="priors_command", parser_class=_Parser)
    sweep = pri_sub.add_parser("sweep", help="tabulate log prior densities over |alpha|")
    sweep.add_argument("--layers", type=int, choices=(2, 3), default=2)
    sweep.add_argument("--epsilon-list", default="0.5,1,1.5")
    sweep.add_argument("--eta", type=float, default=1.0, help="two-layer rate eta")
    sweep.add_argument("--a", type=float, default=1.0, help="three-layer shape a")
    sweep.add_argument("--b", type=float, default=1.0, help="three-layer rate b")
    sweep.add_argument("--alpha-max", type=float, default=3.0)
    sweep.add_argument("--points", type=int, default=61)
    sweep.add_argument("--out", help="output CSV (default stdout)")

    sub.add_parser("selftest", help="run the oracle-backed self checks")
    return parser


def _overrides(ns) -> List[str]:
    lines = []
    pairs = [
        ("scenario", ns.scenario),
        ("trials", ns.trials),
        ("master_seed", ns.seed),
        ("snr_grid_db", ns.snr_db_list),
        ("pilot_grid", ns.pilots_list),
        ("estimators", ns.estimators),
        ("output_path", ns.out),
        ("workers", ns.workers),
    ]
    for key, value in pairs:
        if value is not None:
            lines.append(f"{key} = {value}")
    return lines


def _simulate(ns) -> int:
    overrides = _overrides(ns)
    if ns.config is None and not overrides:
        sys.stderr.write(ns.usage)
        print("sbchan simulate: error: give a config file or at least one option", file=sys.stderr)
        return EXIT_USAGE
    try:
        config = load_config(ns.config) if ns.config else ExperimentConfig()
        config = parse_config("\n".join(overrides), base=config, source="command line")
    except ConfigError as exc:
        print(f"sbchan simulate: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"sbchan simulate: {exc}", file=sys.stderr)
        return EXIT_USAGE

    def progress(done, total):
        if done == total or done % max(1, total // 20) == 0:
            log.info("%d/%d trials", done, total)

    try:
        rows = run_experiment(config, progress=progress)
        aggs = aggregate(rows, config.estimators)
        side = write_csv(rows, aggs, config.output_path, record_wall_time=config.record_wall_time)
    except OSError as exc:
        print(f"sbchan simulate: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except (ArithmeticError, np.linalg.LinAlgError, ValueError, RuntimeError) as exc:
        print(f"sbchan simulate: run failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    print(f"wrote {config.output_path} ({len(rows)} rows) and {side}")
    print(f"{'point':>8}  {'estimator':<8} {'NMSE [dB]':>10} {'trials':>7} {'failed':>7}")
    for a in aggs:
        print(f"{a.point:>8g}  {a.estimator:<8} {a.mean_nmse_db:>10.2f} {a.trials:>7d} {a.failures:>7d}")
    return EXIT_OK


def _priors_sweep(ns) -> int:
    from ..model import log_prior_2L, log_prior_3L

    try:
        eps_list = [float(x) for x in ns.epsilon_list.split(",") if x.strip()]
    except ValueError:
        print(f"sbchan priors sweep: bad --epsilon-list {ns.epsilon_list!r}", file=sys.stderr)
        return EXIT_USAGE
    if ns.points < 2 or not ns.alpha_max > 0 or not eps_list:
        print("sbchan priors sweep: need --points >= 2, --alpha-max > 0 and at least one epsilon", file=sys.stderr)
        return EXIT_USAGE
    alphas = np.linspace(0.0, ns.alpha_max, ns.points)
    lines = ["alpha_abs,epsilon,log_density"]
    try:
        for eps in eps_list:
            if ns.layers == 2:
                vals = log_prior_2L(alphas, eps, ns.eta)
            else:
                vals = [log_prior_3L(a, eps, ns.a, ns.b) for a in alphas]
            lines.extend(f"{format_number(a)},{format_number(eps)},{format_number(v)}" for a, v in zip(alphas, vals))
    except ValueError as exc:
        print(f"sbchan priors sweep: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ArithmeticError as exc:
        print(f"sbchan priors sweep: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    text = "".join(line + "\n" for line in lines)
    if ns.out:
        try:
            with open(ns.out, "w", newline="\n") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"sbchan priors sweep: cannot write {ns.out}: {exc.strerror or exc}", file=sys.stderr)
            return EXIT_FAILURE
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _selftest() -> int:
    from ..selftest import run_selftest

    def show(res):
        status = "PASS" if res.passed else "FAIL"
        print(f"{status}  {res.name}: {res.detail} ({res.seconds:.2f}s)")

    results = run_selftest(show)
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed} passed, {failed} failed")
    return EXIT_OK if failed == 0 else EXIT_FAILURE


def main(argv: Optional[List[str]] = None) -> int:
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    if ns.command == "simulate":
        return _simulate(ns)
    if ns.command == "priors":
        if ns.priors_command != "sweep":
            parser.print_usage(sys.stderr)
            print("sbchan priors: error: expected subcommand 'sweep'", file=sys.stderr)
            return EXIT_USAGE
        return _priors_sweep(ns)
    if ns.command == "selftest":
        return _selftest()
    parser.print_usage(sys.stderr)
    print("sbchan: error: a subcommand is required (simulate, priors sweep, selftest)", file=sys.stderr)
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
