"""Figure-reproduction experiments and their CSV output."""

from __future__ import annotations

import dataclasses
import json
import logging
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, montecarlo
from .model import ModelError, Priors
from .rules import RuleId
from .scenario import Fading, FixedBep, IidSensors, InidSensors, ScenarioSpec

log = logging.getLogger(__name__)

EXPERIMENTS = ("fig1_deflection_surface", "fig2_roc", "fig3_pd0_vs_snr", "fig4_pd0_vs_k", "custom")
ALIASES = {"fig1": "fig1_deflection_surface", "fig2": "fig2_roc", "fig3": "fig3_pd0_vs_snr", "fig4": "fig4_pd0_vs_k"}

PAPER_RULES = [RuleId.LRT, RuleId.IS, RuleId.LOD, RuleId.CR, RuleId.WU]
SCENARIO_PRESETS = {"A": (0.05, 0.5), "B": (0.4, 0.6)}
MIN_ROC_RUNS = 10_000

_EXPERIMENT_DEFAULTS = {
    "fig1_deflection_surface": {},
    "fig2_roc": {"K": 10, "snr_db": [0.0, 10.0]},
    "fig3_pd0_vs_snr": {"ks": [10, 30], "snr_db": [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0]},
    "fig4_pd0_vs_k": {"ks": list(range(1, 61)), "snr_db": [0.0, 10.0], "scenarios": ["A", "B"]},
    "custom": {"K": 10, "snr_db": [0.0]},
}


class ConfigError(ModelError):
    pass


@dataclass
class ExperimentConfig:
    """Flat, JSON-compatible experiment description; every key has a default."""

    experiment: str = "custom"
    seed: int = 0
    n_runs: int = montecarlo.DEFAULT_RUNS
    n_cal: int | None = None
    target_pf0: float = 0.01
    rules: list = field(default_factory=lambda: [r.value for r in PAPER_RULES])
    sensor_model: str = "iid"
    pf: float = 0.05
    pd: float = 0.5
    p_fu: float = 0.2
    p_de: float = 0.6
    p_h0: float = 0.5
    redraw_sensors: bool = False
    link_model: str = "fading"
    pe: list = field(default_factory=lambda: [0.1])
    snr_db: list = field(default_factory=lambda: [0.0])
    K: int = 10
    ks: list = field(default_factory=lambda: [10])
    scenarios: list = field(default_factory=lambda: ["A"])
    grid_points: int = 26
    roc_points: int = 50
    roc_min_pf0: float = 1e-3
    output_path: str | None = None

    @classmethod
    def for_experiment(cls, experiment: str, overrides: dict | None = None) -> "ExperimentConfig":
        experiment = ALIASES.get(experiment, experiment)
        if experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {experiment!r}")
        values = dict(_EXPERIMENT_DEFAULTS[experiment])
        values.update(overrides or {})
        values["experiment"] = experiment
        return cls.from_mapping(values)

    @classmethod
    def from_mapping(cls, values: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg = cls(**values)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        self.experiment = ALIASES.get(self.experiment, self.experiment)
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if not self.rules:
            raise ConfigError("rules must be nonempty")
        self.rules = [RuleId(str(r).upper()).value for r in self.rules]
        if self.sensor_model not in ("iid", "inid"):
            raise ConfigError("sensor_model must be 'iid' or 'inid'")
        if self.link_model not in ("fading", "fixed_bep"):
            raise ConfigError("link_model must be 'fading' or 'fixed_bep'")
        if self.n_runs < 1:
            raise ConfigError("n_runs must be positive")
        if not 0 < self.target_pf0 < 1:
            raise ConfigError("target_pf0 must lie in (0, 1)")
        if self.grid_points < 2:
            raise ConfigError("grid_points must be at least 2")
        self.snr_db = [float(s) for s in np.atleast_1d(self.snr_db)]
        self.ks = [int(k) for k in np.atleast_1d(self.ks)]
        self.pe = [float(p) for p in np.atleast_1d(self.pe)]

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def echo(self) -> dict:
        """Keys that determine the results; the output location is left out."""
        d = self.to_dict()
        d.pop("output_path")
        return d

    @property
    def calibration_runs(self) -> int:
        return self.n_cal if self.n_cal is not None else self.n_runs

    def active_rules(self) -> list[RuleId]:
        selected = [RuleId(r) for r in self.rules]
        if self.sensor_model == "inid" and RuleId.WU in selected:
            log.warning("Wu rule dropped: it is not defined for non-identical sensors")
            selected = [r for r in selected if r != RuleId.WU]
        if not selected:
            raise ConfigError("no rules left to run")
        return selected

    def scenario(self, K: int | None = None, snr_db: float | None = None, pf_pd: tuple | None = None) -> ScenarioSpec:
        K = self.K if K is None else K
        if self.sensor_model == "iid":
            pf, pd = pf_pd if pf_pd is not None else (self.pf, self.pd)
            sensors = IidSensors(pf, pd)
        else:
            sensors = InidSensors(self.p_fu, self.p_de)
        if self.link_model == "fading":
            link = Fading(self.snr_db[0] if snr_db is None else float(snr_db))
        else:
            link = FixedBep(tuple(self.pe))
        return ScenarioSpec(
            K, sensors, link, Priors(self.p_h0, 1.0 - self.p_h0), self.seed, self.redraw_sensors
        )


def _fmt(v) -> str:
    if isinstance(v, (RuleId,)):
        return v.value
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return f"{float(v):.9g}"


def write_csv(path, columns: list[str], rows, config: ExperimentConfig) -> Path:
    """Write rows atomically; the echoed config makes the file reproducible."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".part")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(f"# decfusion experiment: {config.experiment}\n")
            fh.write(f"# seed: {config.seed}\n")
            for key, value in config.echo().items():
                fh.write(f"# {key} = {json.dumps(value)}\n")
            fh.write(",".join(columns) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(row[c]) for c in columns) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


FIG1_COLUMNS = ["pe1", "pe2", "d_cr0", "d_wu0", "gap"]
FIG2_COLUMNS = ["rule", "snr_db", "pf0", "pd0", "stderr"]
FIG3_COLUMNS = ["rule", "K", "snr_db", "pd0", "stderr"]
FIG4_COLUMNS = ["scenario_label", "rule", "snr_db", "K", "pd0", "stderr"]
CUSTOM_COLUMNS = ["rule", "K", "snr_db", "gamma", "rho", "achieved_pf0", "pd0", "stderr"]


def run_fig1(config: ExperimentConfig) -> list[dict]:
    grid = np.linspace(0.0, 0.5, config.grid_points)
    surface = analysis.deflection_surface(grid, config.pf, config.pd)
    return [dict(zip(FIG1_COLUMNS, r)) for r in surface]


def run_fig2(config: ExperimentConfig, workers: int = 1) -> list[dict]:
    if config.n_runs < MIN_ROC_RUNS:
        raise ConfigError(f"ROC estimation needs n_runs >= {MIN_ROC_RUNS}")
    grid = montecarlo.log_grid(config.roc_min_pf0, 1.0, config.roc_points)
    selected = config.active_rules()
    rows = []
    for snr in config.snr_db:
        spec = config.scenario(snr_db=snr)
        curves = montecarlo.estimate_roc_many(selected, spec, config.n_runs, grid, workers)
        for rule in selected:
            c = curves[rule]
            for pf0, pd0, se in zip(c.pf0, c.pd0, c.stderr):
                rows.append({"rule": rule, "snr_db": snr, "pf0": pf0, "pd0": pd0, "stderr": se})
    return rows


def _pd0_point(config: ExperimentConfig, spec: ScenarioSpec, selected, workers: int):
    tests = montecarlo.calibrate_many(selected, spec, config.target_pf0, config.calibration_runs, workers)
    return tests, montecarlo.estimate_pd0_many(tests, spec, config.n_runs, workers)


def _check_pd0_runs(config: ExperimentConfig) -> None:
    if config.calibration_runs * config.target_pf0 < montecarlo.MIN_TAIL_COUNT:
        raise ConfigError(
            f"calibration needs n_runs * target_pf0 >= {montecarlo.MIN_TAIL_COUNT}"
        )


def run_fig3(config: ExperimentConfig, workers: int = 1) -> list[dict]:
    _check_pd0_runs(config)
    selected = config.active_rules()
    rows = []
    for K in config.ks:
        for snr in config.snr_db:
            _, res = _pd0_point(config, config.scenario(K=K, snr_db=snr), selected, workers)
            for rule in selected:
                pd0, se = res[rule]
                rows.append({"rule": rule, "K": K, "snr_db": snr, "pd0": pd0, "stderr": se})
    return rows


def run_fig4(config: ExperimentConfig, workers: int = 1) -> list[dict]:
    _check_pd0_runs(config)
    if config.sensor_model != "iid":
        raise ConfigError("fig4 compares identical-sensor scenarios only")
    selected = config.active_rules()
    rows = []
    for label in config.scenarios:
        if label not in SCENARIO_PRESETS:
            raise ConfigError(f"unknown scenario label {label!r}")
        for snr in config.snr_db:
            for K in config.ks:
                spec = config.scenario(K=K, snr_db=snr, pf_pd=SCENARIO_PRESETS[label])
                _, res = _pd0_point(config, spec, selected, workers)
                for rule in selected:
                    pd0, se = res[rule]
                    rows.append(
                        {"scenario_label": label, "rule": rule, "snr_db": snr, "K": K, "pd0": pd0, "stderr": se}
                    )
    return rows


def run_custom(config: ExperimentConfig, workers: int = 1) -> list[dict]:
    _check_pd0_runs(config)
    selected = config.active_rules()
    snrs = config.snr_db if config.link_model == "fading" else [float("nan")]
    rows = []
    for snr in snrs:
        spec = config.scenario(snr_db=None if np.isnan(snr) else snr)
        tests, res = _pd0_point(config, spec, selected, workers)
        for rule in selected:
            t = tests[rule]
            pd0, se = res[rule]
            rows.append(
                {"rule": rule, "K": spec.K, "snr_db": snr, "gamma": t.gamma, "rho": t.rho,
                 "achieved_pf0": t.achieved_pf0, "pd0": pd0, "stderr": se}
            )
    return rows


RUNNERS = {
    "fig1_deflection_surface": (run_fig1, FIG1_COLUMNS),
    "fig2_roc": (run_fig2, FIG2_COLUMNS),
    "fig3_pd0_vs_snr": (run_fig3, FIG3_COLUMNS),
    "fig4_pd0_vs_k": (run_fig4, FIG4_COLUMNS),
    "custom": (run_custom, CUSTOM_COLUMNS),
}


def run_experiment(config: ExperimentConfig, out=None, workers: int = 1) -> Path:
    runner, columns = RUNNERS[config.experiment]
    rows = runner(config) if config.experiment == "fig1_deflection_surface" else runner(config, workers)
    path = out or config.output_path or f"{config.experiment}.csv"
    return write_csv(path, columns, rows, config)
