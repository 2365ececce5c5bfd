"""Channel-aware decision fusion with unknown sensor detection probability."""

from .model import Hypothesis, LinkState, Priors, SensorBank
from .rules import RuleContext, RuleId
from .scenario import Fading, FixedBep, IidSensors, InidSensors, ScenarioSpec

__all__ = [
    "Fading",
    "FixedBep",
    "Hypothesis",
    "IidSensors",
    "InidSensors",
    "LinkState",
    "Priors",
    "RuleContext",
    "RuleId",
    "ScenarioSpec",
    "SensorBank",
]
__version__ = "0.1.0"
