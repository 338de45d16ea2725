"""Witness-tier blockchain capacity model: link outages, retry-based witness
selection, witness M/H2/1 queues, batch-service chain queue, and a
discrete-event simulator that checks the analytic results."""
from .config import (QueueParams, RadioParams, RegistrationPolicy, ScenarioConfig,
                     TrafficParams, emit_config, load_config, parse_config)
from .errors import (CapExceeded, DomainError, InvalidHorizon, InvariantViolation,
                     MalformedInput, MissingData, NonConvergence, UnknownKey, Unstable,
                     WiblockError)

__version__ = "0.1.0"

__all__ = [
    "CapExceeded", "DomainError", "InvalidHorizon", "InvariantViolation", "MalformedInput",
    "MissingData", "NonConvergence", "QueueParams", "RadioParams", "RegistrationPolicy",
    "ScenarioConfig", "TrafficParams", "UnknownKey", "Unstable", "WiblockError",
    "emit_config", "load_config", "parse_config",
]
