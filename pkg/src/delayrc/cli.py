"""Command-line entry point: ``delayrc <command> [options]``."""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import experiments as ex
from .capacity import linear_recall_profile, pair_quadratic_profile
from .config import ScanSpec, _expand_axis, dump_config, load_config
from .errors import ConfigurationError, IntegrationDiverged, NarmaDivergence
from .readout import CapacityProjector


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="YAML config file")
    p.add_argument("--preset", choices=["desk", "paper"], help="base preset (default: desk)")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    p.add_argument("--workers", type=int, help="parallel scan points")
    p.add_argument("--model", choices=["hopf", "class_a"])
    p.add_argument("--n-train", type=int)
    p.add_argument("--n-buffer", type=int)
    p.add_argument("--degree-cap", type=int)
    p.add_argument("--lag-cap", type=int)
    p.add_argument("--threshold", type=float)
    p.add_argument("--dump-states", action="store_true", help="write the state matrix as CSV")
    p.add_argument("-v", "--verbose", action="store_true")


def _axis(values, rng):
    if rng is not None:
        return _expand_axis({"start": rng[0], "stop": rng[1], "step": rng[2]})
    return tuple(values) if values else None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="delayrc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    init = sub.add_parser("init-config", help="write an example config with all defaults")
    init.add_argument("path", type=Path)
    init.add_argument("--preset", choices=["desk", "paper"], default="desk")

    for name, help_ in [
        ("point", "capacities (and NARMA10) at one (tau, T) point"),
        ("linear-recall", "linear recall profile C1(lag)"),
        ("pair-quadratic", "degree-2 capacity map over lag pairs"),
        ("narma10", "NARMA10 NRMSE at one point"),
    ]:
        p = sub.add_parser(name, help=help_)
        _common(p)
        p.add_argument("--tau", type=float)
        p.add_argument("--clock-cycle", type=float)
        if name == "linear-recall":
            p.add_argument("--max-lag", type=int, default=45)
        if name == "pair-quadratic":
            p.add_argument("--max-lag1", type=int, default=45)
            p.add_argument("--max-lag2", type=int, default=45)

    for name in ("scan-tau", "scan-grid"):
        p = sub.add_parser(name, help=f"{name.replace('-', ' ')} over delay"
                           + (" and clock cycle" if name == "scan-grid" else ""))
        _common(p)
        p.add_argument("--tau", type=float, nargs="+")
        p.add_argument("--tau-range", type=float, nargs=3, metavar=("START", "STOP", "STEP"))
        if name == "scan-grid":
            p.add_argument("--clock-cycle", type=float, nargs="+")
            p.add_argument("--clock-cycle-range", type=float, nargs=3, metavar=("START", "STOP", "STEP"))
    return parser


def resolve_config(args):
    config = load_config(args.config, args.preset)
    changes = {}
    if args.seed is not None:
        changes["master_seed"] = args.seed
    if args.workers is not None:
        changes["workers"] = args.workers
    if args.model is not None:
        changes["model"] = args.model
    if args.n_train is not None:
        changes["n_train"] = args.n_train
    if args.n_buffer is not None:
        changes["n_buffer"] = args.n_buffer
    cap = {k: getattr(args, k) for k in ("degree_cap", "lag_cap", "threshold")
           if getattr(args, k) is not None}
    if cap:
        changes["capacity"] = replace(config.capacity, **cap)
    if changes:
        config = replace(config, **changes)
    return config


def _write_pairs(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([ex.fmt(v) for v in row])


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return _dispatch(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (IntegrationDiverged, NarmaDivergence) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    if args.command == "init-config":
        args.path.write_text(dump_config(load_config(None, args.preset)))
        return 0

    config = resolve_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    command = " ".join(sys.argv[1:]) if sys.argv else args.command

    if args.command in ("scan-tau", "scan-grid"):
        taus = _axis(args.tau, args.tau_range) or config.scan.tau
        if args.command == "scan-tau":
            Ts = (config.timing.clock_cycle,)
        else:
            Ts = _axis(args.clock_cycle, args.clock_cycle_range) or config.scan.clock_cycle
        config = replace(config, scan=ScanSpec(taus, Ts))
        if args.command == "scan-tau":
            results = ex.scan_tau(config)
        else:
            results = ex.scan_grid(config)
        ex.write_scan_outputs(out, config, results, command)
        _report(results)
        return 0

    tau = args.tau if args.tau is not None else config.reservoir.tau
    T = args.clock_cycle if args.clock_cycle is not None else config.timing.clock_cycle

    if args.command == "point":
        result = ex.run_point(config, tau, T, keep_states=args.dump_states)
        ex.write_scan_outputs(out, config, [result], command)
        if args.dump_states and result.states is not None:
            result.states.to_csv(out / "states.csv")
        _report([result])
        return 0 if result.status == "ok" else 1

    if args.command == "narma10":
        err = ex.narma10_error(config, tau, T)
        _write_pairs(out / "narma10.csv", ["tau", "clock_cycle", "narma10_nrmse"], [(tau, T, err)])
        ex.write_meta(out / "meta.json", config, command)
        print(f"tau={tau:g} T={T:g} NARMA10 NRMSE={err:.4f}")
        return 0

    states, u, seeds = ex.capacity_states(config, tau, T)
    projector = CapacityProjector(states, rtol=config.capacity.rtol_for(states.n_cols))
    if args.dump_states:
        states.to_csv(out / "states.csv")
    if args.command == "linear-recall":
        profile = linear_recall_profile(states, u, args.max_lag, projector)
        _write_pairs(out / "linear_recall.csv", ["lag", "capacity"], profile)
        for lag, c in profile:
            print(f"{lag:4d} {c:.4f}")
    else:
        pairs = pair_quadratic_profile(states, u, args.max_lag1, args.max_lag2, projector)
        rows = sorted((l1, l2, c, "pure" if l1 == l2 else "product") for (l1, l2), c in pairs.items())
        _write_pairs(out / "pair_quadratic.csv", ["lag1", "lag2", "capacity", "kind"], rows)
    ex.write_meta(out / "meta.json", config, command, extra={"seeds": seeds})
    return 0


def _report(results) -> None:
    for r in results:
        if r.status != "ok":
            print(f"tau={r.tau:g} T={r.clock_cycle:g} {r.status}: {r.error}")
            continue
        mc = r.table.mc_by_degree
        parts = " ".join(f"MC{d}={v:.2f}" for d, v in mc.items() if v > 0)
        narma = f" NARMA10={r.narma_nrmse:.3f}" if r.narma_nrmse is not None else ""
        print(f"tau={r.tau:g} T={r.clock_cycle:g} MC={r.table.total_mc:.2f} {parts}{narma}")


if __name__ == "__main__":
    sys.exit(main())
