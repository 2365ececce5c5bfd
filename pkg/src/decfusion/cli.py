"""Command-line entry point: ``decfusion {fig1,fig2,fig3,fig4,eval,calibrate,custom}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import montecarlo, rules
from .experiments import ConfigError, ExperimentConfig, run_experiment
from .model import ModelError
from .rules import RuleId, RuleContext

log = logging.getLogger("decfusion")


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.replace(" ", "").split(",") if t]


def _ints(text: str) -> list[int]:
    out = []
    for part in text.replace(" ", "").split(","):
        if ":" in part:
            lo, hi, *step = (int(v) for v in part.split(":"))
            out.extend(range(lo, hi + 1, step[0] if step else 1))
        elif part:
            out.append(int(part))
    return out


def _bits(text: str) -> list[int]:
    text = text.replace(",", "").replace(" ", "")
    if not text or set(text) - {"0", "1"}:
        raise argparse.ArgumentTypeError("decision vector must be a string of 0s and 1s")
    return [int(c) for c in text]


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with experiment keys")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--runs", type=int, dest="n_runs", help="Monte Carlo runs per hypothesis")
    p.add_argument("--out", dest="output_path", help="output CSV path")
    p.add_argument("--workers", type=int, default=1, help="worker processes (results do not depend on it)")
    p.add_argument("--paper-fidelity", action="store_true", help=f"use {montecarlo.PAPER_RUNS} runs")


def _scenario_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sensor-model", choices=["iid", "inid"], dest="sensor_model")
    p.add_argument("--pf", type=float)
    p.add_argument("--pd", type=float)
    p.add_argument("--p-fu", type=float, dest="p_fu")
    p.add_argument("--p-de", type=float, dest="p_de")
    p.add_argument("--snr-db", type=_floats, dest="snr_db", help="comma-separated SNR values in dB")
    p.add_argument("--target", type=float, dest="target_pf0", help="system false-alarm rate")
    p.add_argument("--rules", type=lambda s: s.upper().split(","), help="comma-separated rule ids")
    p.add_argument("--redraw-sensors", action="store_true", default=None, dest="redraw_sensors")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="decfusion", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fig1", help="deflection gap surface for K = 2")
    _common(p)
    p.add_argument("--grid", type=int, dest="grid_points", help="grid points per axis on [0, 0.5]")
    p.add_argument("--pf", type=float)
    p.add_argument("--pd", type=float)

    p = sub.add_parser("fig2", help="ROC curves")
    _common(p)
    _scenario_flags(p)
    p.add_argument("--K", type=int)

    p = sub.add_parser("fig3", help="pd0 versus SNR")
    _common(p)
    _scenario_flags(p)
    p.add_argument("--ks", type=_ints, help="sensor counts, e.g. 10,30")

    p = sub.add_parser("fig4", help="pd0 versus number of sensors")
    _common(p)
    _scenario_flags(p)
    p.add_argument("--ks", type=_ints, help="sensor counts, e.g. 1:60")
    p.add_argument("--scenarios", type=lambda s: s.upper().split(","), help="scenario labels, e.g. A,B")

    p = sub.add_parser("custom", help="calibrate and evaluate rules on one scenario")
    _common(p)
    _scenario_flags(p)
    p.add_argument("--K", type=int)
    p.add_argument("--pe", type=_floats, help="fixed link BEPs (switches to fixed-BEP links)")

    p = sub.add_parser("calibrate", help="fit the randomized threshold of one rule")
    _common(p)
    _scenario_flags(p)
    p.add_argument("--rule", required=True, type=str.upper)
    p.add_argument("--K", type=int)
    p.add_argument("--pe", type=_floats, help="fixed link BEPs (switches to fixed-BEP links)")

    p = sub.add_parser("eval", help="evaluate one statistic on a received vector")
    p.add_argument("--rule", required=True, type=str.upper)
    p.add_argument("--y", required=True, type=_bits, help="received bits, e.g. 1011")
    p.add_argument("--pe", type=_floats, help="per-link BEPs (one value is broadcast)")
    p.add_argument("--pf", type=_floats, help="false-alarm probability, or one per sensor")
    p.add_argument("--pd", type=_floats, help="detection probability, or one per sensor")
    p.add_argument("--inid", action="store_true", help="treat sensors as non-identical")
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    values = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            values.update(json.load(fh))
    skip = {"command", "config", "workers", "paper_fidelity", "verbose", "rule"}
    for key, value in vars(args).items():
        if key not in skip and value is not None:
            values[key] = value
    if getattr(args, "pe", None) is not None:
        values["link_model"] = "fixed_bep"
    if args.paper_fidelity:
        values["n_runs"] = montecarlo.PAPER_RUNS
    return values


def _run_eval(args) -> int:
    try:
        rule = RuleId(args.rule)
    except ValueError:
        print(f"error: unknown rule {args.rule}", file=sys.stderr)
        return 2
    y = np.array(args.y)
    K = y.size
    pe = np.broadcast_to(np.array(args.pe if args.pe else [0.0]), (K,))

    def per_sensor(v):
        if v is None:
            return None
        if len(v) == 1 and not args.inid:
            return v[0]
        return np.broadcast_to(np.array(v), (K,))

    pf, pd = per_sensor(args.pf), per_sensor(args.pd)
    if rule == RuleId.WU and (args.inid or np.ndim(pf) > 0):
        print("error: the Wu rule is only defined for identical sensors; it is not available "
              "when per-sensor false-alarm probabilities are given", file=sys.stderr)
        return 2
    if rule == RuleId.LOD and np.ndim(pf) > 0:
        rule = RuleId.LOD_INID
    value = rules.statistic(rule, y, RuleContext(pe, pf, pd))
    print(repr(value))
    return 0


def _run_calibrate(args) -> int:
    values = _overrides(args)
    cfg = ExperimentConfig.for_experiment("custom", values)
    spec = cfg.scenario()
    rule = RuleId(args.rule)
    test = montecarlo.calibrate(rule, spec, cfg.target_pf0, cfg.calibration_runs, args.workers)
    row = {
        "rule": rule.value,
        "gamma": test.gamma,
        "rho": test.rho,
        "target_pf0": test.target_pf0,
        "achieved_pf0": test.achieved_pf0,
        "n_cal": test.n_cal,
    }
    if cfg.output_path:
        from .experiments import write_csv

        write_csv(cfg.output_path, list(row), [row], cfg)
    print(",".join(row))
    print(",".join(str(v) for v in row.values()))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        if args.command == "eval":
            return _run_eval(args)
        if args.command == "calibrate":
            return _run_calibrate(args)
        cfg = ExperimentConfig.for_experiment(args.command, _overrides(args))
        path = run_experiment(cfg, workers=args.workers)
        log.info("wrote %s", path)
        print(path)
        return 0
    except (ConfigError, ModelError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
