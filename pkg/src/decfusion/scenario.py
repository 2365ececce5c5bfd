"""Experiment scenario descriptions."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np

from .model import ModelError, Priors


@dataclass(frozen=True)
class IidSensors:
    pf: float
    pd: float
    kind: str = field(default="iid", init=False)

    def __post_init__(self):
        if not (0 < self.pf < self.pd <= 1):
            raise ModelError("identical sensors need 0 < pf < pd <= 1")


@dataclass(frozen=True)
class InidSensors:
    """pf_k ~ U(0, p_fu), pd_k = pf_k + U(0, p_de)."""

    p_fu: float
    p_de: float
    kind: str = field(default="inid", init=False)

    def __post_init__(self):
        if not (0 < self.p_fu < 1 and 0 < self.p_de < 1):
            raise ModelError("p_fu and p_de must lie in (0, 1)")
        if self.p_fu + self.p_de > 1:
            raise ModelError("p_fu + p_de must not exceed 1")


@dataclass(frozen=True)
class FixedBep:
    pe: tuple[float, ...]
    kind: str = field(default="fixed_bep", init=False)

    def __post_init__(self):
        pe = tuple(float(p) for p in np.atleast_1d(self.pe))
        if any(not 0 <= p <= 0.5 for p in pe):
            raise ModelError("bit-error probabilities must lie in [0, 1/2]")
        object.__setattr__(self, "pe", pe)


@dataclass(frozen=True)
class Fading:
    snr_db: float
    kind: str = field(default="fading", init=False)


SensorModel = Union[IidSensors, InidSensors]
LinkModel = Union[FixedBep, Fading]


@dataclass(frozen=True)
class ScenarioSpec:
    K: int
    sensors: SensorModel
    link: LinkModel
    priors: Priors = Priors()
    seed: int = 0
    # i.n.i.d. only: redraw (pf_k, pd_k) every trial instead of once per seed
    redraw_sensors: bool = False

    def __post_init__(self):
        if self.K < 1:
            raise ModelError("K must be at least 1")
        if isinstance(self.link, FixedBep) and len(self.link.pe) not in (1, self.K):
            raise ModelError("fixed BEP list must have one entry or K entries")
        if self.seed < 0:
            raise ModelError("seed must be nonnegative")

    @property
    def is_iid(self) -> bool:
        return self.sensors.kind == "iid"

    def fixed_pe(self) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.link.pe, dtype=float), (self.K,)).copy()

    def with_(self, **changes) -> "ScenarioSpec":
        return replace(self, **changes)
