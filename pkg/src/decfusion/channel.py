"""On-off keying over Rayleigh fading, reduced to per-link bit-error probabilities."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc


@dataclass(frozen=True)
class LinkBudget:
    snr_db: float
    sigma_w: float
    scenario_kind: str


def q_function(x):
    """Upper tail of the standard normal."""
    out = 0.5 * erfc(np.asarray(x, dtype=float) / np.sqrt(2.0))
    return float(out) if np.ndim(out) == 0 else out


def db_to_linear(snr_db):
    return 10.0 ** (np.asarray(snr_db, dtype=float) / 10.0)


def linear_to_db(snr_linear):
    return 10.0 * np.log10(snr_linear)


def draw_fading(K: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """|h_k| for h_k ~ CN(0, 1); shape ``(K,)`` or ``(size, K)``."""
    if K < 1:
        raise ValueError("K must be at least 1")
    shape = (K,) if size is None else (size, K)
    re_im = rng.standard_normal(shape + (2,)) * np.sqrt(0.5)
    return np.hypot(re_im[..., 0], re_im[..., 1])


def bep_from_gain(h_mag, sigma_w: float):
    if sigma_w <= 0:
        raise ValueError("sigma_w must be positive")
    return q_function(np.asarray(h_mag, dtype=float) / (2.0 * sigma_w))


def sigma_from_snr(snr_linear: float, scenario) -> float:
    """Noise standard deviation giving the requested per-link SNR.

    ``scenario`` is a :class:`~decfusion.scenario.ScenarioSpec`; for
    identical sensors the received energy is the prior-weighted activity
    probability, for non-identical ones its expectation over the draw law.
    """
    if snr_linear <= 0:
        raise ValueError("SNR must be positive")
    sensors = scenario.sensors
    if sensors.kind == "iid":
        energy = sensors.pd * scenario.priors.p_h1 + sensors.pf * scenario.priors.p_h0
        return float(np.sqrt(energy / snr_linear))
    return float(np.sqrt((sensors.p_fu + sensors.p_de / 2.0) / (2.0 * snr_linear)))


def link_budget(scenario) -> LinkBudget:
    snr_db = scenario.link.snr_db
    return LinkBudget(snr_db, sigma_from_snr(float(db_to_linear(snr_db)), scenario), scenario.sensors.kind)
