"""Throughput planning for a multi-cell White-Fi network in TV white spaces."""

from .assign import Assignment, assign_channels, verify_assignment
from .mac import ThroughputReport, jain_index, network_report, slot_model, throughput
from .params import MacParams, RadioParams
from .scenario import AvailabilityRule, Scenario, ScenarioError, generate

__version__ = "0.1.0"

__all__ = [
    "Assignment", "AvailabilityRule", "MacParams", "RadioParams", "Scenario", "ScenarioError",
    "ThroughputReport", "assign_channels", "generate", "jain_index", "network_report", "slot_model",
    "throughput", "verify_assignment",
]
