"""
Telemetry module for the preconditioned momentum benchmark

Run, check and tuning events written as local NDJSON.
"""

from .run_events import EventBuilder, TelemetryEmitter, get_telemetry, new_session_id, reset_telemetry

__all__ = ['EventBuilder', 'TelemetryEmitter', 'get_telemetry', 'new_session_id', 'reset_telemetry']
