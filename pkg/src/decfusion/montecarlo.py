"""Monte Carlo trial generation, randomized threshold calibration and ROC estimation.

Random numbers come from counter-style substreams: every block of
``BLOCK_SIZE`` consecutive trials owns a generator seeded from
``(seed, stream, hypothesis, block)``.  Results therefore depend only on the
scenario seed and the trial indices, never on how blocks are distributed
over workers.
"""

from __future__ import annotations

import enum
import functools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import channel, rules
from .model import Hypothesis, LinkState, ModelError, SensorBank
from .rules import RuleId
from .scenario import ScenarioSpec

BLOCK_SIZE = 4096
DEFAULT_RUNS = 100_000
PAPER_RUNS = 1_000_000
MIN_TAIL_COUNT = 100


class Stream(enum.IntEnum):
    SENSORS = 0
    CALIBRATION = 1
    EVALUATION = 2


class CalibrationError(ModelError):
    pass


class InsufficientSampleError(CalibrationError):
    pass


class ConstantStatisticError(CalibrationError):
    pass


def substream(seed: int, stream: Stream, h: int = 0, block: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(int(stream), int(h), int(block)))
    return np.random.Generator(np.random.PCG64(ss))


@functools.lru_cache(maxsize=256)
def sensor_bank(spec: ScenarioSpec) -> SensorBank:
    """Realized sensor parameters; i.n.i.d. draws are fixed by the scenario seed."""
    s = spec.sensors
    if s.kind == "iid":
        return SensorBank.iid(spec.K, s.pf, s.pd)
    rng = substream(spec.seed, Stream.SENSORS)
    pf = rng.uniform(0.0, s.p_fu, spec.K)
    pd = pf + rng.uniform(0.0, s.p_de, spec.K)
    return SensorBank(pf, pd)


def resolve_rule(rule: RuleId, spec: ScenarioSpec) -> RuleId:
    """Map a requested rule onto the variant defined for the scenario."""
    rule = RuleId(rule)
    if spec.is_iid:
        return rule
    if rule == RuleId.WU:
        raise rules.ScenarioError("the Wu rule is not defined for non-identical sensors")
    if rule == RuleId.LOD:
        return RuleId.LOD_INID
    return rule


@dataclass
class TrialBatch:
    y: np.ndarray  # (n, K) uint8
    pe: np.ndarray  # (n, K)
    pf: np.ndarray  # (K,) or (n, K)
    pd: np.ndarray


def simulate_block(spec: ScenarioSpec, h: Hypothesis, block: int, stream: Stream = Stream.EVALUATION) -> TrialBatch:
    rng = substream(spec.seed, stream, h, block)
    n, K = BLOCK_SIZE, spec.K
    if spec.redraw_sensors and not spec.is_iid:
        pf = rng.uniform(0.0, spec.sensors.p_fu, (n, K))
        pd = pf + rng.uniform(0.0, spec.sensors.p_de, (n, K))
    else:
        bank = sensor_bank(spec)
        pf, pd = bank.pf, bank.pd
    if spec.link.kind == "fading":
        sigma = channel.sigma_from_snr(float(channel.db_to_linear(spec.link.snr_db)), spec)
        pe = channel.bep_from_gain(channel.draw_fading(K, rng, n), sigma)
    else:
        pe = np.broadcast_to(spec.fixed_pe(), (n, K))
    p = pd if Hypothesis(h) == Hypothesis.H1 else pf
    b = rng.random((n, K)) < p
    flip = rng.random((n, K)) < pe
    return TrialBatch((b ^ flip).astype(np.uint8), pe, pf, pd)


def run_trial(spec: ScenarioSpec, h: Hypothesis, trial_index: int, stream: Stream = Stream.EVALUATION):
    """Observations and realized link state of a single trial."""
    if trial_index < 0:
        raise ValueError("trial_index must be nonnegative")
    batch = simulate_block(spec, h, trial_index // BLOCK_SIZE, stream)
    row = trial_index % BLOCK_SIZE
    return batch.y[row].astype(np.int64), LinkState(np.array(batch.pe[row]))


def _rule_args(spec: ScenarioSpec, batch: TrialBatch):
    if spec.is_iid:
        return spec.sensors.pf, spec.sensors.pd
    return batch.pf, batch.pd


def block_statistics(spec: ScenarioSpec, rule_ids: tuple, h: Hypothesis, block: int, stream: Stream) -> np.ndarray:
    """Statistics of every rule on one block; shape (len(rule_ids), BLOCK_SIZE)."""
    batch = simulate_block(spec, h, block, stream)
    out = np.empty((len(rule_ids), BLOCK_SIZE))
    for i, rule in enumerate(rule_ids):
        r = resolve_rule(rule, spec)
        pf, pd = _rule_args(spec, batch)
        w, c = rules.affine_form(r, batch.pe, pf, pd)
        out[i] = rules.evaluate_affine(w, c, batch.y)
    return out


def _block_job(args):
    return block_statistics(*args)


def simulate_statistics(
    spec: ScenarioSpec,
    rule_ids,
    h: Hypothesis,
    n: int,
    stream: Stream = Stream.EVALUATION,
    workers: int = 1,
) -> dict[RuleId, np.ndarray]:
    """Statistics of trials ``0..n-1`` for each rule, computed on common trials."""
    rule_ids = tuple(RuleId(r) for r in rule_ids)
    for r in rule_ids:
        resolve_rule(r, spec)
    n_blocks = math.ceil(n / BLOCK_SIZE)
    jobs = [(spec, rule_ids, Hypothesis(h), b, Stream(stream)) for b in range(n_blocks)]
    if workers > 1 and n_blocks > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_block_job, jobs, chunksize=max(1, n_blocks // (4 * workers))))
    else:
        parts = [_block_job(j) for j in jobs]
    stats = np.concatenate(parts, axis=1)[:, :n]
    return {r: stats[i] for i, r in enumerate(rule_ids)}


@dataclass(frozen=True)
class CalibratedTest:
    """Decide H1 when the statistic exceeds ``gamma``; on a tie, with probability ``rho``."""

    rule: RuleId
    gamma: float
    rho: float
    target_pf0: float
    achieved_pf0: float = float("nan")
    n_cal: int = 0

    def decision_rate(self, values: np.ndarray) -> float:
        """Expected fraction of H1 decisions, ties weighted by ``rho``."""
        values = np.asarray(values)
        above = np.count_nonzero(values > self.gamma)
        ties = np.count_nonzero(values == self.gamma)
        return (above + self.rho * ties) / values.size


def atoms(values: np.ndarray, weights: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Distinct values (ascending) and their mass: counts, or summed ``weights``."""
    values = np.asarray(values, dtype=float)
    if weights is None:
        return np.unique(values, return_counts=True)
    uniq, inverse = np.unique(values, return_inverse=True)
    return uniq, np.bincount(inverse.ravel(), weights=np.asarray(weights, dtype=float).ravel())


def threshold_for_rate(values: np.ndarray, target: float, weights: np.ndarray | None = None, *, precomputed=None) -> tuple[float, float]:
    """Smallest atom gamma with P(stat > gamma) <= target, plus the tie probability rho.

    Probabilities are empirical frequencies, or the pmf given by ``weights``.
    """
    if target >= 1.0:
        return -math.inf, 0.0
    uniq, mass = precomputed if precomputed is not None else atoms(values, weights)
    total = mass.sum()
    exceed = total - np.cumsum(mass)
    j = int(np.argmax(exceed <= target * total))
    rho = (target * total - exceed[j]) / mass[j]
    return float(uniq[j]), float(min(max(rho, 0.0), 1.0))


def calibrate_sample(rule: RuleId, values: np.ndarray, target_pf0: float, check: bool = True) -> CalibratedTest:
    values = np.asarray(values, dtype=float)
    if not 0.0 <= target_pf0 <= 1.0:
        raise CalibrationError("target false-alarm rate must lie in [0, 1]")
    if check and values.size * target_pf0 < MIN_TAIL_COUNT:
        raise InsufficientSampleError(
            f"need n_cal * target >= {MIN_TAIL_COUNT}, got {values.size} * {target_pf0}"
        )
    if values.size == 0 or np.all(values == values[0]):
        raise ConstantStatisticError(f"{RuleId(rule).value} statistic is constant under H0")
    gamma, rho = threshold_for_rate(values, target_pf0)
    achieved = CalibratedTest(RuleId(rule), gamma, rho, target_pf0).decision_rate(values)
    return CalibratedTest(RuleId(rule), gamma, rho, target_pf0, achieved, values.size)


def calibrate_many(rule_ids, spec: ScenarioSpec, target_pf0: float, n_cal: int, workers: int = 1) -> dict[RuleId, CalibratedTest]:
    rule_ids = tuple(RuleId(r) for r in rule_ids)
    if n_cal * target_pf0 < MIN_TAIL_COUNT:
        raise InsufficientSampleError(f"need n_cal * target >= {MIN_TAIL_COUNT}")
    stats = simulate_statistics(spec, rule_ids, Hypothesis.H0, n_cal, Stream.CALIBRATION, workers)
    return {r: calibrate_sample(r, stats[r], target_pf0) for r in rule_ids}


def calibrate(rule: RuleId, spec: ScenarioSpec, target_pf0: float, n_cal: int, workers: int = 1) -> CalibratedTest:
    """Fit (gamma, rho) on ``n_cal`` H0 trials drawn from the calibration stream."""
    return calibrate_many([rule], spec, target_pf0, n_cal, workers)[RuleId(rule)]


def _rate_and_stderr(test: CalibratedTest, values: np.ndarray) -> tuple[float, float]:
    p = test.decision_rate(values)
    return p, math.sqrt(max(p * (1.0 - p), 0.0) / values.size)


def estimate_pd0_many(tests: dict, spec: ScenarioSpec, n_runs: int, workers: int = 1) -> dict[RuleId, tuple[float, float]]:
    stats = simulate_statistics(spec, tuple(tests), Hypothesis.H1, n_runs, Stream.EVALUATION, workers)
    return {r: _rate_and_stderr(t, stats[r]) for r, t in tests.items()}


def estimate_pd0(test: CalibratedTest, spec: ScenarioSpec, n_runs: int, workers: int = 1) -> tuple[float, float]:
    """System detection probability on fresh H1 trials and its binomial standard error."""
    return estimate_pd0_many({test.rule: test}, spec, n_runs, workers)[test.rule]


def estimate_pf0(test: CalibratedTest, spec: ScenarioSpec, n_runs: int, workers: int = 1) -> tuple[float, float]:
    """Achieved false-alarm rate on fresh H0 trials (evaluation stream)."""
    stats = simulate_statistics(spec, (test.rule,), Hypothesis.H0, n_runs, Stream.EVALUATION, workers)
    return _rate_and_stderr(test, stats[test.rule])


def log_grid(lo: float = 1e-3, hi: float = 1.0, points: int = 50) -> np.ndarray:
    return np.logspace(math.log10(lo), math.log10(hi), points)


@dataclass(frozen=True)
class RocCurve:
    rule: RuleId
    n_runs: int
    pf0: np.ndarray
    pd0: np.ndarray
    stderr: np.ndarray
    gamma: np.ndarray
    rho: np.ndarray

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.pf0.tolist(), self.pd0.tolist()))


def roc_from_samples(rule: RuleId, h0: np.ndarray, h1: np.ndarray, grid) -> RocCurve:
    """Sweep thresholds over H0 sample quantiles; endpoints (0, 0) and (1, 1) included."""
    targets = np.unique(np.concatenate([[0.0], np.asarray(grid, dtype=float), [1.0]]))
    h0_atoms = atoms(h0)
    pf0, pd0, se, gam, rh = [], [], [], [], []
    for t in targets:
        if t == 0.0:
            test = CalibratedTest(RuleId(rule), math.inf, 0.0, 0.0)
        else:
            g, r = threshold_for_rate(h0, t, precomputed=h0_atoms)
            test = CalibratedTest(RuleId(rule), g, r, t)
        fa = test.decision_rate(h0)
        det, err = _rate_and_stderr(test, h1)
        pf0.append(fa)
        pd0.append(det)
        se.append(err)
        gam.append(test.gamma)
        rh.append(test.rho)
    return RocCurve(RuleId(rule), h1.size, *(np.array(v) for v in (pf0, pd0, se, gam, rh)))


def estimate_roc_many(rule_ids, spec: ScenarioSpec, n_runs: int, grid=None, workers: int = 1) -> dict[RuleId, RocCurve]:
    grid = log_grid() if grid is None else grid
    rule_ids = tuple(RuleId(r) for r in rule_ids)
    h0 = simulate_statistics(spec, rule_ids, Hypothesis.H0, n_runs, Stream.EVALUATION, workers)
    h1 = simulate_statistics(spec, rule_ids, Hypothesis.H1, n_runs, Stream.EVALUATION, workers)
    return {r: roc_from_samples(r, h0[r], h1[r], grid) for r in rule_ids}


def estimate_roc(rule: RuleId, spec: ScenarioSpec, n_runs: int, grid=None, workers: int = 1) -> RocCurve:
    return estimate_roc_many([rule], spec, n_runs, grid, workers)[RuleId(rule)]
