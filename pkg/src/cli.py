# Command-line interface: formulas, simulations, tables and verification suites

import argparse
import itertools
import logging
import math
import os
import sys
from contextlib import contextmanager
from typing import Any, Dict, Iterator, List, Optional, TextIO

import numpy as np
from dotenv import load_dotenv

# Ensure src directory is in path for direct execution and for imports if not installed
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

try:
    from src.analytic import MODELS, UnknownModelError, analytic_report
    from src.config import DEFAULT_CONFIG_PATH, VALID_FORMATS, VALID_LOG_LEVELS, VERSION, load_config
    from src.scenarios import (REQUIRED_PARAMETERS, ScenarioSpec, SystemKind, bounds_sweep_zero_wait,
                               default_loads, iter_replications, ordering_invariance_test,
                               reproduce_tandem_table, summarize_runs)
    from src.simkernel import write_packet_log_csv
    from src.suites import RESULT_FIELDS, SUITES, UnknownSuiteError, run_suite
    from src.utils import AoiLabError, ConfigError, CsvEmitter, comment_header, pretty_table
except ImportError:  # Fallback for when the package is installed
    from analytic import MODELS, UnknownModelError, analytic_report
    from config import DEFAULT_CONFIG_PATH, VALID_FORMATS, VALID_LOG_LEVELS, VERSION, load_config
    from scenarios import (REQUIRED_PARAMETERS, ScenarioSpec, SystemKind, bounds_sweep_zero_wait,
                           default_loads, iter_replications, ordering_invariance_test,
                           reproduce_tandem_table, summarize_runs)
    from simkernel import write_packet_log_csv
    from suites import RESULT_FIELDS, SUITES, UnknownSuiteError, run_suite
    from utils import AoiLabError, ConfigError, CsvEmitter, comment_header, pretty_table


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED_CHECKS = 1
EXIT_DOMAIN_ERROR = 2
EXIT_USAGE = 64
EXIT_INTERRUPTED = 130

COMMANDS = ["analytic", "simulate", "table", "verify", "sweep"]
SIMULATE_FIELDS = ["rep", "aaoi", "eff_rate", "cross_moment", "corr", "cv_y", "mean_A", "sd_A", "far_rate",
                   "se_aaoi"]

# Model names shared by `analytic` and `simulate`.
SYSTEM_FOR_MODEL = {
    "mm1": SystemKind.MM1,
    "fixed-delay": SystemKind.INDEPENDENT_FEED,
    "zero-wait": SystemKind.ZERO_WAIT,
    "tandem-two": SystemKind.TANDEM_TWO,
    "tandem-chain": SystemKind.TANDEM_CHAIN,
    "hetero-tandem": SystemKind.HETERO_TANDEM,
    "retrial": SystemKind.RETRIAL,
}


class UsageError(Exception):
    """Bad command-line usage; maps to EXIT_USAGE."""


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_USAGE)


def setup_logging(log_level_str: str):
    """Configures basic logging on stderr; stdout carries the results."""
    log_level = getattr(logging, log_level_str.upper(), logging.INFO)
    logging.basicConfig(
        level=log_level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[logging.StreamHandler(sys.stderr)]
    )


def _float_list(text: str) -> List[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got '{text}'")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="aoi-lab", description="Age of Information with aged updates: formulas, "
                                                         "simulation and verification.")
    parser.add_argument("command", nargs="?", choices=COMMANDS, help="What to run.")
    parser.add_argument("--config", default=DEFAULT_CONFIG_PATH,
                        help=f"Path to configuration file (default: {DEFAULT_CONFIG_PATH})")
    parser.add_argument("--model", help="Model name for analytic/simulate (see --list-models).")
    parser.add_argument("--lambda", dest="lam", type=float, help="Arrival rate.")
    parser.add_argument("--mu", type=float, help="Service rate of the (final) server.")
    parser.add_argument("--gamma", type=float, help="Service rate of the first server.")
    parser.add_argument("--theta", type=float, help="Retrial rate.")
    parser.add_argument("--alpha", type=float, help="Erasure probability of the zero-wait channel.")
    parser.add_argument("--delay", type=float, help="Initial age of every packet (fixed-delay).")
    parser.add_argument("--rates", type=_float_list, help="Comma list of tandem service rates.")
    parser.add_argument("--reps", type=int, help="Replications.")
    parser.add_argument("--departures", type=int, help="Post-warmup departures per replication.")
    parser.add_argument("--warmup", type=int, help="Departures discarded before statistics start.")
    parser.add_argument("--seed", type=int, help="Root seed (default: config, AOI_LAB_SEED, or built-in).")
    parser.add_argument("--workers", type=int, help="Worker processes for replications.")
    parser.add_argument("--out", help="Write results to this file instead of stdout.")
    parser.add_argument("--packet-log", help="Write the packet log of replication 0 as CSV (simulate).")
    parser.add_argument("--format", choices=VALID_FORMATS, help="Output format.")
    parser.add_argument("--suite", default="all", help="Verification suite (see --list-suites).")
    parser.add_argument("--quick", action="store_true", help="Smaller verification runs.")
    parser.add_argument("--queues", type=int, default=3, help="Tandem length for `table`.")
    parser.add_argument("--loads", type=_float_list, help="Comma list of per-queue loads for `table`.")
    parser.add_argument("--all-orderings", action="store_true",
                        help="`table`: one row per server ordering and an ordering comparison.")
    parser.add_argument("--points", type=int, default=101, help="Grid points for `sweep`.")
    parser.add_argument("--log-level", choices=VALID_LOG_LEVELS, help="Logging level.")
    parser.add_argument("--list-models", action="store_true", help="List analytic models and exit.")
    parser.add_argument("--list-suites", action="store_true", help="List verification suites and exit.")
    parser.add_argument("--version", action="version", version=f"aoi-lab {VERSION}")
    return parser


# --- Output ---

@contextmanager
def open_output(path: Optional[str]) -> Iterator[TextIO]:
    if path:
        with open(path, "w", newline="") as f:
            yield f
    else:
        yield sys.stdout


class RowWriter:
    """Streams CSV rows as they arrive, or collects them for one pretty table."""

    def __init__(self, stream: TextIO, fmt: str, fieldnames: List[str], header: str):
        self.stream = stream
        self.fmt = fmt
        self.fieldnames = fieldnames
        self.header = header
        self.rows: List[Dict[str, Any]] = []
        self.csv = CsvEmitter(stream, fieldnames, header=header) if fmt == "csv" else None

    def write(self, row: Dict[str, Any]) -> None:
        if self.csv:
            self.csv.write(row)
        else:
            self.rows.append(row)

    def close(self) -> None:
        if self.csv is None:
            self.stream.write(self.header + "\n")
            self.stream.write(pretty_table(self.rows, self.fieldnames) + "\n")
        self.stream.flush()


def _params_from_args(args) -> Dict[str, Any]:
    params = {"lambda": args.lam, "mu": args.mu, "gamma": args.gamma, "theta": args.theta,
              "alpha": args.alpha, "delay": args.delay, "rates": args.rates}
    return {k: v for k, v in params.items() if v is not None}


# --- Commands ---

def cmd_analytic(args, run: Dict[str, Any]) -> int:
    if not args.model:
        raise UsageError("analytic needs --model (see --list-models)")
    if args.model not in MODELS:
        raise UnknownModelError(f"Unknown model '{args.model}'. Known models: {', '.join(MODELS)}")
    params = _params_from_args(args)
    required = [k for k in MODELS[args.model][0] if k not in params and k != "delay"]
    if required:
        raise UsageError(f"model {args.model} needs: {', '.join('--' + k for k in required)}")

    report = analytic_report(args.model, params)
    header = comment_header(VERSION, None, {"command": "analytic", "model": args.model, **params})
    with open_output(args.out) as out:
        writer = RowWriter(out, run["format"], ["quantity", "value"], header)
        for row in report.as_rows():
            writer.write(row)
        writer.close()
    logger.info(f"{args.model}: delta0={report.delta0}, delta={report.delta}")
    return EXIT_OK


def scenario_from_args(args, config: Dict[str, Any]) -> ScenarioSpec:
    """Config-file scenario overlaid with command-line values."""
    data = dict(config.get("scenario") or {})
    data["parameters"] = dict(data.get("parameters", {}))
    if args.model:
        if args.model not in SYSTEM_FOR_MODEL:
            raise UnknownModelError(f"Model '{args.model}' cannot be simulated. "
                                    f"Simulated models: {', '.join(SYSTEM_FOR_MODEL)}")
        data["system"] = SYSTEM_FOR_MODEL[args.model].value
        data.setdefault("name", args.model)
    if "system" not in data:
        raise UsageError("simulate needs --model or a scenario section in the config file")

    params = _params_from_args(args)
    if "delay" in params:
        params["age"] = params.pop("delay")
    data["parameters"].update(params)
    for key, value in (("replications", args.reps), ("departures_per_rep", args.departures),
                       ("warmup", args.warmup)):
        if value is not None:
            data[key] = value
    data["seed"] = args.seed if args.seed is not None else config["run"]["seed"]
    spec = ScenarioSpec.from_dict(data)
    missing = [k for k in REQUIRED_PARAMETERS[spec.system] if k not in spec.parameters]
    if missing:
        raise UsageError(f"{spec.system.value} needs parameters: {', '.join(missing)}")
    return spec.validate()


def _simulate_row(rep: Any, stats) -> Dict[str, Any]:
    return {"rep": rep, "aaoi": stats.aaoi_estimate, "eff_rate": stats.effective_rate,
            "cross_moment": stats.cross_moment, "corr": stats.correlation, "cv_y": stats.cv_interdeparture,
            "mean_A": stats.mean_initial_age, "sd_A": stats.sd_initial_age, "far_rate": stats.far_update_rate,
            "se_aaoi": stats.se("aaoi_estimate")}


def _aggregate_row(rows: List[Dict[str, Any]]) -> Dict[str, Any]:
    agg: Dict[str, Any] = {"rep": "mean"}
    for k in SIMULATE_FIELDS[1:]:
        agg[k] = float(np.mean([r[k] for r in rows]))
    if len(rows) > 1:
        agg["se_aaoi"] = float(np.std([r["aaoi"] for r in rows], ddof=1) / math.sqrt(len(rows)))
    return agg


def cmd_simulate(args, run: Dict[str, Any], config: Dict[str, Any]) -> int:
    spec = scenario_from_args(args, config)
    header = comment_header(VERSION, spec.seed, {"command": "simulate", "system": spec.system.value,
                                                 **spec.parameters, "replications": spec.replications,
                                                 "departures_per_rep": spec.departures_per_rep,
                                                 "warmup": spec.effective_warmup})
    runs, rows = [], []
    code = EXIT_OK
    with open_output(args.out) as out:
        writer = RowWriter(out, run["format"], SIMULATE_FIELDS, header)
        try:
            for sid, stats in iter_replications(spec, run["workers"], keep_log=bool(args.packet_log)):
                if args.packet_log and sid == 0:
                    with open(args.packet_log, "w", newline="") as f:
                        write_packet_log_csv(stats.log, f, header=header)
                    stats.log = None
                row = _simulate_row(sid, stats)
                rows.append(row)
                runs.append(stats)
                writer.write(row)
        except KeyboardInterrupt:
            logger.warning(f"Interrupted after {len(rows)} of {spec.replications} replications.")
            code = EXIT_INTERRUPTED
        if rows:
            writer.write(_aggregate_row(rows))
        writer.close()

    if runs and code == EXIT_OK:
        result = summarize_runs(spec, runs)
        logger.info(f"{spec.name}: mean AAoI {result.mean_aaoi:.6g} (sd {result.sd_aaoi:.3g}); "
                    f"{'; '.join(result.notes)}; closure residual {result.closure.residual:.3g}")
    return code


def cmd_table(args, run: Dict[str, Any]) -> int:
    loads = args.loads
    orderings = None
    if args.all_orderings:
        base = loads or default_loads(args.queues)
        orderings = [list(p) for p in dict.fromkeys(itertools.permutations(base))]
    reps = args.reps or 100
    deps = args.departures or 100_000
    table = reproduce_tandem_table(args.queues, loads=loads, orderings=orderings, replications=reps,
                                   seed=run["seed"], departures_per_rep=deps, warmup=args.warmup,
                                   workers=run["workers"])
    header = comment_header(VERSION, run["seed"], {"command": "table", "queues": args.queues, **table.metadata})
    with open_output(args.out) as out:
        writer = RowWriter(out, run["format"], table.fieldnames, header)
        for row in table.rows:
            writer.write(row)
        writer.close()

    if args.all_orderings:
        comparison = ordering_invariance_test(orderings[0], orderings=orderings, replications=reps,
                                              seed=run["seed"], departures_per_rep=deps, warmup=args.warmup,
                                              workers=run["workers"])
        logger.info(f"Ordering comparison: max gap {comparison.max_pairwise_gap:.4g}, "
                    f"3 pooled se {3 * comparison.pooled_se:.4g}, ANOVA p {comparison.anova_pvalue:.3g}")
    return EXIT_OK


def cmd_verify(args, run: Dict[str, Any]) -> int:
    if args.suite != "all" and args.suite not in SUITES:
        raise UnknownSuiteError(f"Unknown suite '{args.suite}'. Known suites: all, {', '.join(SUITES)}")
    results = run_suite(args.suite, quick=args.quick, seed=run["seed"], workers=run["workers"])
    header = comment_header(VERSION, run["seed"], {"command": "verify", "suite": args.suite, "quick": args.quick})
    with open_output(args.out) as out:
        writer = RowWriter(out, run["format"], RESULT_FIELDS, header)
        for r in results:
            writer.write(r.as_row())
        writer.close()
    failed = [r for r in results if not r.passed]
    return EXIT_OK if not failed else EXIT_FAILED_CHECKS


def cmd_sweep(args, run: Dict[str, Any]) -> int:
    mu = args.mu if args.mu is not None else 1.0
    if args.points < 2:
        raise UsageError("--points must be >= 2")
    grid = [float(a) for a in np.linspace(0.0, 0.99, args.points)]
    rows = bounds_sweep_zero_wait(mu, grid)
    header = comment_header(VERSION, None, {"command": "sweep", "mu": mu, "points": args.points})
    with open_output(args.out) as out:
        writer = RowWriter(out, run["format"], ["alpha", "correction", "lb", "ub", "clamped_lb"], header)
        for row in rows:
            writer.write(row)
        writer.close()
    return EXIT_OK


def _resolve_run(args, config: Dict[str, Any]) -> Dict[str, Any]:
    run = dict(config["run"])
    for key, value in (("seed", args.seed), ("workers", args.workers), ("format", args.format),
                       ("log_level", args.log_level)):
        if value is not None:
            run[key] = value
    if run["workers"] < 1:
        raise UsageError("--workers must be >= 1")
    return run


def main():
    load_dotenv()
    parser = build_parser()
    args = parser.parse_args()

    if args.list_models:
        for name, (required, _) in MODELS.items():
            print(f"{name}: {', '.join(required)}")
        sys.exit(EXIT_OK)
    if args.list_suites:
        for name in ["all", *SUITES]:
            print(name)
        sys.exit(EXIT_OK)
    if args.command is None:
        parser.print_usage(sys.stderr)
        sys.exit(EXIT_USAGE)

    try:
        config = load_config(args.config)
    except ValueError as e:
        logging.error(f"Configuration error: {e}")  # Use basic logging if setup_logging fails
        sys.exit(EXIT_USAGE)

    try:
        run = _resolve_run(args, config)
    except UsageError as e:
        logging.error(str(e))
        sys.exit(EXIT_USAGE)
    setup_logging(run["log_level"])
    logger.debug(f"Loaded configuration: {config}")

    try:
        if args.command == "analytic":
            code = cmd_analytic(args, run)
        elif args.command == "simulate":
            code = cmd_simulate(args, run, config)
        elif args.command == "table":
            code = cmd_table(args, run)
        elif args.command == "verify":
            code = cmd_verify(args, run)
        else:
            code = cmd_sweep(args, run)
    except (UsageError, ConfigError) as e:
        logger.error(str(e))
        code = EXIT_USAGE
    except AoiLabError as e:
        logger.error(f"{type(e).__name__}: {e}")
        code = EXIT_DOMAIN_ERROR
    except KeyboardInterrupt:
        logger.warning("Interrupted.")
        code = EXIT_INTERRUPTED
    sys.exit(code)


if __name__ == "__main__":
    main()
