"""Discrete-event simulation of hospital bed use in a population that
repeatedly falls sick, with closed-form queueing checks.

``BACKEND`` names the event loop used by default: ``"compiled"`` when the
Cython core is built, else ``"python"``.
"""

from bedsim.analytics import analytic_oracle, erlang_loss, machine_repair, validate
from bedsim.config import BatchSpec, SimulationConfig, parse_config
from bedsim.errors import BedSimError, ConfigError
from bedsim.metrics import EventLog, SummaryResponses, summarize
from bedsim.model import (
    InitialHospitalStatus,
    ModelParameters,
    SicknessModel,
    available_backends,
    run,
    simulate_log,
)

BACKEND = available_backends()[0]

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BatchSpec",
    "BedSimError",
    "ConfigError",
    "EventLog",
    "InitialHospitalStatus",
    "ModelParameters",
    "SicknessModel",
    "SimulationConfig",
    "SummaryResponses",
    "analytic_oracle",
    "available_backends",
    "erlang_loss",
    "machine_repair",
    "parse_config",
    "run",
    "simulate_log",
    "summarize",
    "validate",
]
