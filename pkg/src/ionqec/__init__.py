"""Steane [[7,1,3]] error-correction scheduling and fault analysis on a
model ion-trap architecture with ballistic transport."""

from .device import (DeviceParams, LayoutGraph, Well, WellId, WellKind,
                     apply_occupancy_change, build_pmd_layout,
                     default_device_params, interaction_well)
from .stabilizers import StabilizerSet, steane_stabilizers
from .circuits import (ALL_ROWS, AncillaStrategy, HighLevelSchedule, Protocol,
                       build_qec_round, da_extraction_circuit,
                       multimeasure_gadget, qec_layout,
                       shor_extraction_circuit)
from .scheduler import (ErrorSchedule, ReservationTable, TimedEventSchedule,
                        count_stages, emit_error_schedule, route, schedule)

__all__ = [
    "ALL_ROWS", "AncillaStrategy", "DeviceParams", "ErrorSchedule",
    "HighLevelSchedule", "LayoutGraph", "Protocol", "ReservationTable",
    "StabilizerSet", "TimedEventSchedule", "Well", "WellId", "WellKind",
    "apply_occupancy_change", "build_pmd_layout", "build_qec_round",
    "count_stages", "da_extraction_circuit", "default_device_params",
    "emit_error_schedule", "interaction_well", "multimeasure_gadget",
    "qec_layout", "route", "schedule", "shor_extraction_circuit",
    "steane_stabilizers",
]
