"""Command-line front end: run experiments, sweeps, and the check suite.

Configuration is a flat `key = value` text file with `#` comments and
namespaced keys (see DEFAULTS); unknown keys are rejected, missing ones take
the reference-budget defaults, and the fully resolved configuration is echoed
as comment lines at the top of every output file.

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 validation failure.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__, montecarlo, validate
from .channel import LinkBudget
from .montecarlo import ExperimentConfig, ExperimentError
from .power_alloc import SolverFailure
from .precoding import SingularChannelError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_VALIDATION = 3


class ConfigError(ValueError):
    pass


def _parse_bool(s):
    v = s.strip().lower()
    if v in ("true", "1", "yes", "on"):
        return True
    if v in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _list_of(cast):
    def parse(s):
        return tuple(cast(tok.strip()) for tok in s.split(",") if tok.strip())
    return parse


# key -> (parser, default value). Order fixes the echo layout.
DEFAULTS = {
    "experiment.trials": (int, 100),
    "experiment.master_seed": (int, 1),
    "experiment.pool_size": (int, 700),
    "experiment.snr_points_db": (_list_of(float),
                                 (0.0, 5.0, 10.0, 15.0, 21.0, 25.0, 30.0)),
    "experiment.pool_sweep": (_list_of(int), tuple(range(100, 1300, 100))),
    "experiment.pool_sweep_snr_db": (float, 20.0),
    "experiment.scenarios": (_list_of(str), montecarlo.DEFAULT_SCENARIOS),
    "experiment.algorithms": (_list_of(str), montecarlo.DEFAULT_ALGORITHMS),
    "experiment.workers": (int, 1),
    "geometry.beams_per_satellite": (int, 7),
    "geometry.beam_diameter_km": (float, 600.0),
    "geometry.half_power_radius_km": (float, 85.0),
    "geometry.lattice_offset_km_x": (float, 150.0),
    "geometry.lattice_offset_km_y": (float, 0.0),
    "geometry.sat_altitude_km": (float, 35786.0),
    "pattern.u_coeff": (float, 2.07123),
    "linkbudget.p_sat_dbw": (float, 21.0),
    "linkbudget.g_tx_dbi": (float, 52.0),
    "linkbudget.g_rx_dbi": (float, 40.0),
    "linkbudget.fsl_db": (float, -210.0),
    "linkbudget.noise_dbw": (float, -118.0),
    "linkbudget.snr_ref_db": (float, 21.0),
    "scheduling.induced_over_unallocated": (_parse_bool, False),
    "scheduling.factor_floor": (float, 10.0 ** -2.1),
    "solver.tol": (float, 1e-6),
}


def parse_config_text(text: str) -> dict:
    values = {k: v for k, (_, v) in DEFAULTS.items()}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in DEFAULTS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        parser = DEFAULTS[key][0]
        try:
            values[key] = parser(val.strip())
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}")
    return values


def load_config(path=None, seed=None, trials=None) -> ExperimentConfig:
    values = (parse_config_text(Path(path).read_text()) if path
              else {k: v for k, (_, v) in DEFAULTS.items()})
    if seed is not None:
        values["experiment.master_seed"] = seed
    if trials is not None:
        values["experiment.trials"] = trials
    budget = LinkBudget(
        p_sat_dbw=values["linkbudget.p_sat_dbw"],
        g_tx_dbi=values["linkbudget.g_tx_dbi"],
        g_rx_dbi=values["linkbudget.g_rx_dbi"],
        fsl_db=values["linkbudget.fsl_db"],
        noise_dbw=values["linkbudget.noise_dbw"],
        snr_ref_db=values["linkbudget.snr_ref_db"])
    cfg = ExperimentConfig(
        trials=values["experiment.trials"],
        master_seed=values["experiment.master_seed"],
        pool_size=values["experiment.pool_size"],
        snr_points_db=values["experiment.snr_points_db"],
        pool_sweep=values["experiment.pool_sweep"],
        pool_sweep_snr_db=values["experiment.pool_sweep_snr_db"],
        scenarios=tuple(values["experiment.scenarios"]),
        algorithms=tuple(values["experiment.algorithms"]),
        workers=values["experiment.workers"],
        beams_per_satellite=values["geometry.beams_per_satellite"],
        beam_diameter_km=values["geometry.beam_diameter_km"],
        half_power_radius_km=values["geometry.half_power_radius_km"],
        lattice_offset_km=(values["geometry.lattice_offset_km_x"],
                           values["geometry.lattice_offset_km_y"]),
        sat_altitude_km=values["geometry.sat_altitude_km"],
        u_coeff=values["pattern.u_coeff"],
        budget=budget,
        induced_over_unallocated=values[
            "scheduling.induced_over_unallocated"],
        score_factor_floor=values["scheduling.factor_floor"],
        solver_tol=values["solver.tol"])
    try:
        cfg.validate()
    except ValueError as exc:
        raise ConfigError(str(exc))
    return cfg


def resolved_lines(cfg: ExperimentConfig) -> list:
    """Config echoed back in canonical key order."""
    values = {
        "experiment.trials": cfg.trials,
        "experiment.master_seed": cfg.master_seed,
        "experiment.pool_size": cfg.pool_size,
        "experiment.snr_points_db": cfg.snr_points_db,
        "experiment.pool_sweep": cfg.pool_sweep,
        "experiment.pool_sweep_snr_db": cfg.pool_sweep_snr_db,
        "experiment.scenarios": cfg.scenarios,
        "experiment.algorithms": cfg.algorithms,
        "experiment.workers": cfg.workers,
        "geometry.beams_per_satellite": cfg.beams_per_satellite,
        "geometry.beam_diameter_km": cfg.beam_diameter_km,
        "geometry.half_power_radius_km": cfg.half_power_radius_km,
        "geometry.lattice_offset_km_x": cfg.lattice_offset_km[0],
        "geometry.lattice_offset_km_y": cfg.lattice_offset_km[1],
        "geometry.sat_altitude_km": cfg.sat_altitude_km,
        "pattern.u_coeff": cfg.u_coeff,
        "linkbudget.p_sat_dbw": cfg.budget.p_sat_dbw,
        "linkbudget.g_tx_dbi": cfg.budget.g_tx_dbi,
        "linkbudget.g_rx_dbi": cfg.budget.g_rx_dbi,
        "linkbudget.fsl_db": cfg.budget.fsl_db,
        "linkbudget.noise_dbw": cfg.budget.noise_dbw,
        "linkbudget.snr_ref_db": cfg.budget.snr_ref_db,
        "scheduling.induced_over_unallocated":
            cfg.induced_over_unallocated,
        "scheduling.factor_floor": cfg.score_factor_floor,
        "solver.tol": cfg.solver_tol,
    }
    lines = [f"dualsat {__version__}"]
    for key in DEFAULTS:
        lines.append(f"{key} = {_fmt_value(values[key])}")
    return lines


def _fmt_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".12g")
    if isinstance(v, tuple):
        return ",".join(_fmt_value(x) for x in v)
    return str(v)


def _fmt_cell(v):
    if isinstance(v, float):
        return format(v, ".12g")
    return str(v)


def _write_csv(path, header_lines, columns, rows):
    with open(path, "w", newline="") as f:
        for line in header_lines:
            f.write(f"# {line}\n")
        f.write(",".join(columns) + "\n")
        for row in rows:
            f.write(",".join(_fmt_cell(v) for v in row) + "\n")


def write_summary_csv(path, summary, header_lines, with_pool=False):
    if with_pool:
        cols = ["scenario", "algorithm", "pool_size", "snr_db",
                "mean_sr_bps_hz", "std_sr", "trials", "discards"]
        rows = [(r.scenario, r.algorithm, r.pool_size, r.snr_db, r.mean_sr,
                 r.std_sr, r.trials, r.discards) for r in summary.rows]
    else:
        cols = ["scenario", "algorithm", "snr_db", "mean_sr_bps_hz",
                "std_sr", "trials", "discards"]
        rows = [(r.scenario, r.algorithm, r.snr_db, r.mean_sr, r.std_sr,
                 r.trials, r.discards) for r in summary.rows]
    _write_csv(path, header_lines, cols, rows)


def write_trials_csv(path, summary, header_lines):
    cols = ["trial_index", "seed", "discarded", "scenario", "algorithm",
            "snr_db", "sum_rate_bps_hz"]
    rows = []
    for t in summary.trial_results:
        if t.discarded:
            rows.append((t.trial_index, t.seed, 1, "", "", "", ""))
            continue
        for (sc, alg, snr) in sorted(t.results):
            rows.append((t.trial_index, t.seed, 0, sc, alg, snr,
                         t.results[(sc, alg, snr)].sum_rate))
    _write_csv(path, header_lines, cols, rows)


def print_summary(summary, out=print):
    out(f"{'scenario':<18} {'algorithm':<10} {'snr_db':>7} "
        f"{'mean_sr':>10} {'std':>8} {'n':>4} {'disc':>4}")
    for r in summary.rows:
        out(f"{r.scenario:<18} {r.algorithm:<10} {r.snr_db:>7.5g} "
            f"{r.mean_sr:>10.4f} {r.std_sr:>8.4f} {r.trials:>4d} "
            f"{r.discards:>4d}")


def cmd_run(args) -> int:
    cfg = load_config(args.config, args.seed, args.trials)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = montecarlo.run_experiment(cfg)
    header = resolved_lines(cfg)
    write_summary_csv(out_dir / "summary.csv", summary, header)
    write_trials_csv(out_dir / "trials.csv", summary, header)
    print_summary(summary)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = load_config(args.config, args.seed, args.trials)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    header = resolved_lines(cfg)
    if args.axis == "snr":
        summary = montecarlo.run_experiment(cfg)
        write_summary_csv(out_dir / "sweep_snr.csv", summary, header)
    else:
        summary = montecarlo.sweep_pool_size(cfg)
        write_summary_csv(out_dir / "sweep_pool.csv", summary, header,
                          with_pool=True)
    print_summary(summary)
    return EXIT_OK


def cmd_validate(_args) -> int:
    return EXIT_OK if validate.run_all() else EXIT_VALIDATION


class _Parser(argparse.ArgumentParser):
    # bad command lines are configuration errors (exit 1, not argparse's 2)
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dualsat",
                     description="dual multibeam satellite forward-link "
                                 "simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="config file path")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override experiment.master_seed")
        p.add_argument("--trials", type=int, default=None,
                       help="override experiment.trials")

    p_run = sub.add_parser("run", parents=[], help="run the configured "
                           "experiment and write summary.csv / trials.csv")
    common(p_run)
    p_run.set_defaults(fn=cmd_run)

    p_sweep = sub.add_parser("sweep", help="sweep SNR or pool size")
    common(p_sweep)
    p_sweep.add_argument("--axis", choices=("snr", "pool"), required=True)
    p_sweep.set_defaults(fn=cmd_sweep)

    p_val = sub.add_parser("validate", help="run the built-in checks")
    p_val.set_defaults(fn=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverFailure, ExperimentError, SingularChannelError,
            np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
