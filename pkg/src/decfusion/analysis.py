"""Score, Fisher information and deflection measures, with enumeration oracles."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rules
from .model import DegeneratePmfError, Hypothesis, ModelError, SensorBank, _pe_array, as_decision_vector
from .rules import RuleId

MAX_ENUM_K = 20


class ZeroVarianceError(ModelError):
    pass


class EnumerationSizeError(ModelError):
    pass


@dataclass(frozen=True)
class DeflectionCoefficients:
    m: np.ndarray
    n: np.ndarray
    c0: np.ndarray
    c1: np.ndarray


@dataclass(frozen=True)
class DeflectionPair:
    d_cr: float
    d_wu: float
    hypothesis_index: int
    # D_WU scaled by (sqrt(K) ||n||_2 / ||n||_1)^2; sits between d_wu and d_cr
    bound: float

    @property
    def gap(self) -> float:
        return self.d_cr - self.d_wu


def _alpha_beta(p1, pe):
    a = (1.0 - 2.0 * pe) * p1 + pe
    ab = a * (1.0 - a)
    if np.any(ab <= 0):
        raise DegeneratePmfError("alpha*beta vanished")
    return a, ab


def score(y, p1, pe) -> float:
    """Derivative of the log-likelihood with respect to p1."""
    y = as_decision_vector(y)
    pe = _pe_array(pe)
    if pe.shape != y.shape:
        raise ModelError("y and pe differ in length")
    _, ab = _alpha_beta(p1, pe)
    g = 1.0 - 2.0 * pe
    return float(np.sum(g * ((y - pe) - g * p1) / ab))


def fisher_information_terms(p1, pe) -> np.ndarray:
    pe = _pe_array(pe)
    _, ab = _alpha_beta(p1, pe)
    return (1.0 - 2.0 * pe) ** 2 / ab


def fisher_information(p1, pe) -> float:
    return float(np.sum(fisher_information_terms(p1, pe)))


def enumerate_outcomes(K: int) -> np.ndarray:
    """All 2^K binary vectors as rows, in binary counting order."""
    if K > MAX_ENUM_K:
        raise EnumerationSizeError(f"exhaustive enumeration capped at K={MAX_ENUM_K}")
    idx = np.arange(2**K)[:, None]
    return ((idx >> np.arange(K)[::-1]) & 1).astype(np.int64)


def outcome_pmf(outcomes: np.ndarray, p1, pe) -> np.ndarray:
    """P(y; p1) for each row of ``outcomes``."""
    pe = np.asarray(pe, dtype=float)
    a = (1.0 - 2.0 * pe) * p1 + pe
    return np.prod(np.where(outcomes == 1, a, 1.0 - a), axis=1)


def deflection_coefficients(pf: float, pd: float, pe) -> DeflectionCoefficients:
    pe = _pe_array(pe)
    a0 = (1.0 - 2.0 * pe) * pf + pe
    a1 = (1.0 - 2.0 * pe) * pd + pe
    return DeflectionCoefficients(
        m=(1.0 - 2.0 * pe) * (pd - pf),
        n=1.0 + 2.0 * pe,
        c0=a0 * (1.0 - a0),
        c1=a1 * (1.0 - a1),
    )


def _iid_params(bank: SensorBank, pe) -> tuple[float, float, np.ndarray]:
    pe = _pe_array(pe)
    if not bank.is_iid:
        raise ModelError("closed-form deflections need identical sensors")
    if pe.shape != bank.pf.shape:
        raise ModelError("sensor bank and link state differ in size")
    return float(bank.pf[0]), float(bank.pd[0]), pe


def deflection_closed_form(rule: RuleId, hypothesis_index: int, bank: SensorBank, pe) -> float:
    pf, pd, pe = _iid_params(bank, pe)
    co = deflection_coefficients(pf, pd, pe)
    c = co.c1 if Hypothesis(hypothesis_index) == Hypothesis.H1 else co.c0
    rule = RuleId(rule)
    if rule == RuleId.CR:
        num, den = np.sum(co.m) ** 2, np.sum(c)
    elif rule == RuleId.WU:
        # scale-free in n; normalizing makes equal BEPs reproduce the CR arithmetic exactly
        n = co.n / np.max(co.n)
        num, den = np.sum(n * co.m) ** 2, np.sum(n**2 * c)
    else:
        raise ValueError("closed-form deflection is available for CR and WU only")
    if den <= 0:
        raise ZeroVarianceError("statistic has zero variance")
    return float(num / den)


def deflection_pair(bank: SensorBank, pe, hypothesis_index: int = 0) -> DeflectionPair:
    _, _, pe = _iid_params(bank, pe)
    d_cr = deflection_closed_form(RuleId.CR, hypothesis_index, bank, pe)
    d_wu = deflection_closed_form(RuleId.WU, hypothesis_index, bank, pe)
    n = 1.0 + 2.0 * pe
    ratio = np.sqrt(pe.size) * np.linalg.norm(n, 2) / np.linalg.norm(n, 1)
    return DeflectionPair(d_cr, d_wu, int(hypothesis_index), float(d_wu * ratio**2))


def deflection_gap(bank: SensorBank, pe, hypothesis_index: int = 0) -> float:
    return deflection_pair(bank, pe, hypothesis_index).gap


def _rule_values(rule: RuleId, outcomes: np.ndarray, bank: SensorBank, pe: np.ndarray) -> np.ndarray:
    rule = RuleId(rule)
    pf, pd = bank.pf, bank.pd
    if rule in (RuleId.LOD, RuleId.WU):
        if not bank.is_iid:
            raise rules.ScenarioError(f"{rule.value} needs identical sensors")
        pf, pd = pf[0], pd[0]
    w, c = rules.affine_form(rule, pe, pf, pd)
    return c + outcomes @ w


def deflection_brute_force(rule: RuleId, hypothesis_index: int, bank: SensorBank, pe) -> float:
    """Deflection from exact moments over all 2^K received vectors."""
    pe = _pe_array(pe)
    if pe.shape != bank.pf.shape:
        raise ModelError("sensor bank and link state differ in size")
    outcomes = enumerate_outcomes(pe.size)
    values = _rule_values(rule, outcomes, bank, pe)
    p0 = outcome_pmf(outcomes, bank.pf, pe)
    p1 = outcome_pmf(outcomes, bank.pd, pe)
    mean0, mean1 = p0 @ values, p1 @ values
    p = p1 if Hypothesis(hypothesis_index) == Hypothesis.H1 else p0
    mean = mean1 if p is p1 else mean0
    var = p @ (values - mean) ** 2
    scale = max(np.max(np.abs(values)), 1.0)
    if var <= 1e-24 * scale**2:
        raise ZeroVarianceError("statistic has zero variance")
    return float((mean1 - mean0) ** 2 / var)


def wu_estimator_mean(pd: float, pe) -> float:
    """E[wu_estimate | H1]; biased toward 1/2 unless every link is perfect."""
    pe = _pe_array(pe)
    return float(np.mean((1.0 - 4.0 * pe**2) * pd + 2.0 * pe**2))


def deflection_surface(pe_grid, pf: float = 0.05, pd: float = 0.5) -> np.ndarray:
    """Rows (pe1, pe2, d_cr0, d_wu0, gap) over the product grid for K = 2."""
    grid = np.asarray(pe_grid, dtype=float)
    bank = SensorBank.iid(2, pf, pd)
    rows = []
    for pe1 in grid:
        for pe2 in grid:
            pair = deflection_pair(bank, [pe1, pe2], 0)
            rows.append((pe1, pe2, pair.d_cr, pair.d_wu, pair.gap))
    return np.array(rows)
