"""Sensor decision model, binary symmetric channel algebra and the observation pmf."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class ModelError(ValueError):
    """Invalid model parameters."""


class DomainError(ModelError):
    pass


class DegeneratePmfError(ModelError):
    """A probability that must lie strictly inside (0, 1) hit a boundary."""


class Hypothesis(enum.IntEnum):
    H0 = 0
    H1 = 1


def _as_prob_array(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    return arr


@dataclass(frozen=True)
class SensorBank:
    """Per-sensor false-alarm and detection probabilities."""

    pf: np.ndarray
    pd: np.ndarray

    def __post_init__(self):
        pf = np.atleast_1d(_as_prob_array(self.pf, "pf"))
        pd = np.atleast_1d(_as_prob_array(self.pd, "pd"))
        if pf.ndim != 1 or pf.shape != pd.shape or pf.size < 1:
            raise ModelError("pf and pd must be nonempty vectors of equal length")
        # pd_k = 1 is admitted for the noiseless/perfect-sensor corner cases
        if not (np.all(pf > 0) and np.all(pd <= 1) and np.all(pf < pd)):
            raise ModelError("sensors must satisfy 0 < pf_k < pd_k <= 1")
        object.__setattr__(self, "pf", pf)
        object.__setattr__(self, "pd", pd)

    @classmethod
    def iid(cls, K: int, pf: float, pd: float) -> "SensorBank":
        return cls(np.full(K, float(pf)), np.full(K, float(pd)))

    @property
    def K(self) -> int:
        return self.pf.size

    @property
    def is_iid(self) -> bool:
        return bool(np.all(self.pf == self.pf[0]) and np.all(self.pd == self.pd[0]))


@dataclass(frozen=True)
class LinkState:
    """Per-link bit-error probabilities."""

    pe: np.ndarray

    def __post_init__(self):
        pe = np.atleast_1d(_as_prob_array(self.pe, "pe"))
        if pe.ndim != 1 or pe.size < 1:
            raise ModelError("pe must be a nonempty vector")
        if np.any(pe < 0) or np.any(pe > 0.5):
            raise DomainError("bit-error probabilities must lie in [0, 1/2]")
        object.__setattr__(self, "pe", pe)

    @property
    def K(self) -> int:
        return self.pe.size


@dataclass(frozen=True)
class Priors:
    p_h0: float = 0.5
    p_h1: float = 0.5

    def __post_init__(self):
        if not (0 <= self.p_h0 <= 1 and 0 <= self.p_h1 <= 1):
            raise ModelError("priors must lie in [0, 1]")
        if abs(self.p_h0 + self.p_h1 - 1.0) > 1e-12:
            raise ModelError("priors must sum to one")


def as_decision_vector(y) -> np.ndarray:
    """Validate a received decision vector and return it as an int array."""
    arr = np.atleast_1d(np.asarray(y))
    if arr.ndim != 1 or arr.size < 1:
        raise ModelError("decision vector must be a nonempty 1-d sequence")
    if not np.all((arr == 0) | (arr == 1)):
        raise ModelError("decision vector entries must be 0 or 1")
    return arr.astype(np.int64)


def _pe_array(pe) -> np.ndarray:
    if isinstance(pe, LinkState):
        return pe.pe
    arr = _as_prob_array(pe, "pe")
    if np.any(arr < 0) or np.any(arr > 0.5):
        raise DomainError("bit-error probabilities must lie in [0, 1/2]")
    return arr


def _check_p1(p1) -> np.ndarray:
    arr = _as_prob_array(p1, "p1")
    if np.any(arr < 0) or np.any(arr > 1):
        raise DomainError("p1 must lie in [0, 1]")
    return arr


def alpha(pe_k, p1):
    """P(y_k = 1) when the sensor reports 1 with probability ``p1``."""
    pe = _pe_array(pe_k)
    p = _check_p1(p1)
    out = (1.0 - 2.0 * pe) * p + pe
    return float(out) if np.ndim(out) == 0 else out


def beta(pe_k, p1):
    """P(y_k = 0); complement of :func:`alpha`."""
    a = alpha(pe_k, p1)
    return 1.0 - a


def log_likelihood(y, p1, pe) -> float:
    """ln P(y; p1) for independent links; ``p1`` may be scalar or per-sensor."""
    y = as_decision_vector(y)
    pe = _pe_array(pe)
    p1 = _check_p1(p1)
    if pe.shape != y.shape or p1.ndim > 1 or (p1.ndim == 1 and p1.shape != y.shape):
        raise ModelError("dimension mismatch between y, p1 and pe")
    a = np.asarray(alpha(pe, p1), dtype=float)
    b = 1.0 - a
    ones = y == 1
    if np.any(ones & (a <= 0)) or np.any(~ones & (b <= 0)):
        raise DegeneratePmfError("observed outcome has zero probability")
    with np.errstate(divide="ignore"):
        terms = np.where(ones, np.log(a), np.log(b))
    return float(np.sum(terms))


def sample_decision_vector(bank: SensorBank, pe: LinkState, h: Hypothesis, rng: np.random.Generator) -> np.ndarray:
    """Draw local decisions under ``h`` and pass them through the links."""
    pe = _pe_array(pe)
    if pe.shape != bank.pf.shape:
        raise ModelError("sensor bank and link state differ in size")
    p = bank.pd if Hypothesis(h) == Hypothesis.H1 else bank.pf
    b = rng.random(p.size) < p
    flip = rng.random(p.size) < pe
    return (b ^ flip).astype(np.int64)
