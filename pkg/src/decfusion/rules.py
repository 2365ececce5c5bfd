"""Fusion statistics computed at the decision fusion center.

Every rule here is affine in the received vector ``y``.  Besides the direct
per-vector functions, :func:`affine_form` returns the weights and offset so
that batches of trials can be scored with one accumulation pass.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .model import DegeneratePmfError, ModelError, _pe_array, as_decision_vector

# Floor for the ideal-sensors weights: keeps ln((1 - pe) / pe) finite when the
# Q-function underflows to 0 while leaving every representable pe untouched.
PE_MIN = float(np.finfo(float).tiny)


class RuleId(str, enum.Enum):
    LRT = "LRT"
    IS = "IS"
    LOD = "LOD"
    LOD_INID = "LOD_INID"
    CR = "CR"
    WU = "WU"
    LOWSNR_IS = "LOWSNR_IS"
    LOWSNR_LOD = "LOWSNR_LOD"
    LOWSNR_LRT = "LOWSNR_LRT"

    def __str__(self) -> str:
        return self.value


LOW_SNR_RULES = (RuleId.LOWSNR_IS, RuleId.LOWSNR_LOD, RuleId.LOWSNR_LRT)

# Parameters each rule needs at the fusion center (pe is carried by every context).
REQUIRED_PARAMS = {
    RuleId.LRT: ("pd", "pf", "pe"),
    RuleId.LOWSNR_LRT: ("pd", "pf", "pe"),
    RuleId.LOD: ("pf", "pe"),
    RuleId.LOD_INID: ("pf", "pe"),
    RuleId.WU: ("pf", "pe"),
    RuleId.IS: ("pe",),
    RuleId.LOWSNR_IS: ("pe",),
    RuleId.LOWSNR_LOD: ("pe",),
    RuleId.CR: (),
}


class ScenarioError(ModelError):
    """Rule requested in a scenario where it is not defined."""


class ZeroInformationError(ModelError):
    """Fisher information vanished, so the LOD normalizer is undefined."""


@dataclass(frozen=True)
class RuleContext:
    pe: np.ndarray
    pf: float | np.ndarray | None = None
    pd: float | np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "pe", np.atleast_1d(_pe_array(self.pe)))
        for name in ("pf", "pd"):
            v = getattr(self, name)
            if v is None:
                continue
            arr = np.asarray(v, dtype=float)
            if np.any(arr < 0) or np.any(arr > 1) or not np.all(np.isfinite(arr)):
                raise ModelError(f"{name} must lie in [0, 1]")
            if arr.ndim == 1 and arr.shape != self.pe.shape:
                raise ModelError(f"{name} length does not match pe")
            object.__setattr__(self, name, arr)

    @property
    def per_sensor_pf(self) -> bool:
        return self.pf is not None and np.ndim(self.pf) > 0

    def require(self, rule: RuleId) -> None:
        missing = [p for p in REQUIRED_PARAMS[RuleId(rule)] if getattr(self, p) is None]
        if missing:
            raise ModelError(f"{RuleId(rule).value} needs {', '.join(missing)}")


def _check(y, ctx: RuleContext | None = None) -> np.ndarray:
    y = as_decision_vector(y)
    if ctx is not None and ctx.pe.shape != y.shape:
        raise ModelError("y and pe differ in length")
    return y


def _alpha(pe, p):
    return (1.0 - 2.0 * pe) * p + pe


def _log_ratio(num, den):
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    if np.any(num <= 0) or np.any(den <= 0):
        raise DegeneratePmfError("log-likelihood ratio argument is 0 or infinite")
    return np.log(num / den)


def lrt(y, ctx: RuleContext) -> float:
    """Clairvoyant log-likelihood ratio; pd/pf may be scalar or per-sensor."""
    ctx.require(RuleId.LRT)
    y = _check(y, ctx)
    a_d, a_f = _alpha(ctx.pe, ctx.pd), _alpha(ctx.pe, ctx.pf)
    w1 = _log_ratio(a_d, a_f)
    w0 = _log_ratio(1.0 - a_d, 1.0 - a_f)
    return float(np.sum(y * w1 + (1 - y) * w0))


def _is_weights(pe):
    p = np.maximum(pe, PE_MIN)
    return np.log((1.0 - p) / p)


def is_rule(y, ctx: RuleContext) -> float:
    """Ideal-sensors statistic: the LRT with (pd, pf) = (1, 0)."""
    y = _check(y, ctx)
    return float(np.sum((2 * y - 1) * _is_weights(ctx.pe)))


def _score_terms(y, pe, p1):
    a = _alpha(pe, p1)
    ab = a * (1.0 - a)
    if np.any(ab <= 0):
        raise DegeneratePmfError("alpha*beta vanished in the score")
    g = 1.0 - 2.0 * pe
    return g * ((y - pe) - g * p1) / ab, g * g / ab


def lod(y, ctx: RuleContext) -> float:
    """Locally optimum statistic: score at pf normalized by root Fisher information."""
    ctx.require(RuleId.LOD)
    if ctx.per_sensor_pf:
        raise ScenarioError("LOD takes a common pf; use LOD_INID for per-sensor pf")
    y = _check(y, ctx)
    s, info = _score_terms(y, ctx.pe, ctx.pf)
    total = np.sum(info)
    if total <= 0:
        raise ZeroInformationError("all links have pe = 1/2")
    return float(np.sum(s) / np.sqrt(total))


def lod_inid(y, ctx: RuleContext) -> float:
    """Sum of per-sensor scores, each normalized by its own root information."""
    ctx.require(RuleId.LOD_INID)
    y = _check(y, ctx)
    s, info = _score_terms(y, ctx.pe, np.broadcast_to(ctx.pf, ctx.pe.shape))
    if np.any(info <= 0):
        raise ZeroInformationError("a link with pe = 1/2 carries no information")
    return float(np.sum(s / np.sqrt(info)))


def counting(y) -> float:
    return float(np.sum(_check(y)))


def wu_estimate(y, ctx: RuleContext) -> float:
    """High-SNR approximate ML estimate of pd (deliberately unclamped)."""
    y = _check(y, ctx)
    return float(np.mean((1.0 + 2.0 * ctx.pe) * y - ctx.pe))


def wu(y, ctx: RuleContext) -> float:
    ctx.require(RuleId.WU)
    if ctx.per_sensor_pf:
        raise ScenarioError("the Wu rule assumes identical sensors and is not defined for per-sensor pf")
    return wu_estimate(y, ctx) - float(ctx.pf)


def low_snr_statistic(rule: RuleId, y, ctx: RuleContext) -> float:
    """First-order expansions of IS, LOD and LRT around pe = 1/2."""
    rule = RuleId(rule)
    y = _check(y, ctx)
    g = 1.0 - 2.0 * ctx.pe
    if rule == RuleId.LOWSNR_IS:
        return float(2.0 * np.sum(g * y))
    if rule == RuleId.LOWSNR_LOD:
        return float(4.0 * np.sum(g * y))
    if rule == RuleId.LOWSNR_LRT:
        ctx.require(rule)
        return float(np.sum(2.0 * (ctx.pd - ctx.pf) * g * (2 * y - 1)))
    raise ValueError(f"{rule.value} is not a low-SNR approximant")


def statistic(rule: RuleId, y, ctx: RuleContext) -> float:
    rule = RuleId(rule)
    if rule == RuleId.LRT:
        return lrt(y, ctx)
    if rule == RuleId.IS:
        return is_rule(y, ctx)
    if rule == RuleId.LOD:
        return lod(y, ctx)
    if rule == RuleId.LOD_INID:
        return lod_inid(y, ctx)
    if rule == RuleId.CR:
        return counting(_check(y, ctx))
    if rule == RuleId.WU:
        return wu(y, ctx)
    return low_snr_statistic(rule, y, ctx)


def affine_form(rule: RuleId, pe, pf=None, pd=None) -> tuple[np.ndarray, np.ndarray]:
    """Weights ``w`` and offset ``c`` such that the statistic equals ``c + sum_k w_k y_k``.

    ``pe`` has shape ``(..., K)``; ``pf``/``pd`` broadcast against it.  ``w``
    has the shape of ``pe`` and ``c`` drops the last axis.  No range checks
    are performed here beyond the degenerate cases each rule must reject.
    """
    rule = RuleId(rule)
    pe = np.asarray(pe, dtype=float)
    K = pe.shape[-1]
    g = 1.0 - 2.0 * pe
    if rule == RuleId.CR:
        return np.ones_like(pe), np.zeros(pe.shape[:-1])
    if rule == RuleId.IS:
        lw = _is_weights(pe)
        return 2.0 * lw, -np.sum(lw, axis=-1)
    if rule == RuleId.WU:
        if pf is None:
            raise ModelError("WU needs pf")
        if np.ndim(pf) > 0 and np.size(pf) > 1 and np.ptp(pf) > 0:
            raise ScenarioError("the Wu rule is not defined for non-identical sensors")
        pf = np.asarray(pf, dtype=float).reshape(-1)[0] if np.ndim(pf) else float(pf)
        return (1.0 + 2.0 * pe) / K, -np.mean(pe, axis=-1) - pf
    if rule in (RuleId.LOD, RuleId.LOD_INID):
        if pf is None:
            raise ModelError(f"{rule.value} needs pf")
        a = _alpha(pe, pf)
        ab = a * (1.0 - a)
        if np.any(ab <= 0):
            raise DegeneratePmfError("alpha*beta vanished in the score")
        info = g * g / ab
        w = g / ab
        c = g * (-pe - g * pf) / ab
        if rule == RuleId.LOD:
            total = np.sum(info, axis=-1, keepdims=True)
            if np.any(total <= 0):
                raise ZeroInformationError("all links have pe = 1/2")
            norm = np.sqrt(total)
            return w / norm, np.sum(c / norm, axis=-1)
        if np.any(info <= 0):
            raise ZeroInformationError("a link with pe = 1/2 carries no information")
        norm = np.sqrt(info)
        return w / norm, np.sum(c / norm, axis=-1)
    if rule == RuleId.LRT:
        if pf is None or pd is None:
            raise ModelError("LRT needs pf and pd")
        a_d, a_f = _alpha(pe, pd), _alpha(pe, pf)
        w1 = _log_ratio(a_d, a_f)
        w0 = _log_ratio(1.0 - a_d, 1.0 - a_f)
        return w1 - w0, np.sum(w0, axis=-1)
    if rule == RuleId.LOWSNR_IS:
        return 2.0 * g, np.zeros(pe.shape[:-1])
    if rule == RuleId.LOWSNR_LOD:
        return 4.0 * g, np.zeros(pe.shape[:-1])
    if rule == RuleId.LOWSNR_LRT:
        if pf is None or pd is None:
            raise ModelError("LOWSNR_LRT needs pf and pd")
        s = 2.0 * (np.asarray(pd) - np.asarray(pf)) * g
        return 2.0 * s, -np.sum(s, axis=-1)
    raise ValueError(f"unknown rule {rule!r}")


def evaluate_affine(w: np.ndarray, c: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``c + sum_k w_k y_k`` accumulated left to right over k.

    The fixed summation order makes outcomes with equal weights and equal
    counts produce bit-identical values, so discrete atoms stay exact ties.
    """
    w = np.asarray(w, dtype=float)
    y = np.asarray(y)
    shape = np.broadcast_shapes(w.shape, y.shape)
    acc = np.zeros(shape[:-1])
    wb = np.broadcast_to(w, shape)
    yb = np.broadcast_to(y, shape)
    for k in range(shape[-1]):
        acc += np.where(yb[..., k] != 0, wb[..., k], 0.0)
    return acc + c
