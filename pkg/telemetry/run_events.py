"""
Run telemetry for the preconditioned momentum benchmark

Builds run / check / tuning events and appends them as NDJSON to a local
telemetry directory.
"""

import json
import math
import uuid
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional

from infra.config import get_app_config

logger = logging.getLogger(__name__)


def _finite_or_none(value: Optional[float]) -> Optional[float]:
    if value is None or not math.isfinite(value):
        return None
    return float(value)


class EventBuilder:
    """Builds telemetry events according to the defined schema"""

    def __init__(self, app_version: str = "0.1.0", env: str = "dev"):
        self.app_version = app_version
        self.env = env

    def _base_event(self, event_type: str, session_id: str) -> Dict[str, Any]:
        """Create base event envelope with common fields"""
        return {
            "event_id": str(uuid.uuid4()),
            "event_ts": datetime.now(timezone.utc).isoformat(),
            "event_type": event_type,
            "session_id": session_id,
            "app_version": self.app_version,
            "env": self.env,
        }

    def run_started(self, session_id: str, method: str, precond: str, gamma: Any,
                    iters: int, seed: int, objective_kind: str, dim: int) -> Dict[str, Any]:
        """Build run_started event"""
        event = self._base_event("run_started", session_id)
        event.update({
            "method": method,
            "precond": precond,
            # "theory" or a number
            "gamma": gamma if isinstance(gamma, str) else float(gamma),
            "iters": iters,
            "seed": seed,
            "objective_kind": objective_kind,
            "dim": dim,
        })
        return event

    def run_completed(self, session_id: str, method: str, iterations: int, stop_reason: str,
                      final_grad_sq_norm: Optional[float], elapsed_ms: float,
                      diverged_at: Optional[int] = None) -> Dict[str, Any]:
        """Build run_completed event"""
        event = self._base_event("run_completed", session_id)
        event.update({
            "method": method,
            "iterations": iterations,
            "stop_reason": stop_reason,
            "final_grad_sq_norm": _finite_or_none(final_grad_sq_norm),
            "elapsed_ms": round(elapsed_ms, 3),
        })
        if diverged_at is not None:
            event["diverged_at"] = diverged_at
        return event

    def check_completed(self, session_id: str, name: str, worst_margin: Optional[float],
                        passed: bool, applicable: bool = True) -> Dict[str, Any]:
        """Build check_completed event"""
        event = self._base_event("check_completed", session_id)
        event.update({
            "name": name,
            "worst_margin": _finite_or_none(worst_margin),
            "passed": passed,
            "applicable": applicable,
        })
        return event

    def tuning_completed(self, session_id: str, method: str, best_gamma: float,
                         grid_size: int, diverged_count: int) -> Dict[str, Any]:
        """Build tuning_completed event"""
        event = self._base_event("tuning_completed", session_id)
        event.update({
            "method": method,
            "best_gamma": float(best_gamma),
            "grid_size": grid_size,
            "diverged_count": diverged_count,
        })
        return event


class TelemetryEmitter:
    """Appends events to a daily NDJSON file; a disabled emitter accepts and drops everything"""

    def __init__(self, enabled: Optional[bool] = None, local_dir: Optional[str] = None):
        self.config = get_app_config()
        self.enabled = self.config['telemetry_enabled'] if enabled is None else enabled
        self.event_builder = EventBuilder(
            app_version=self.config.get('app_version', '0.1.0'),
            env=self.config.get('app_env', 'dev'),
        )
        self.local_dir = Path(local_dir or self.config['telemetry_dir'])

        if self.enabled:
            try:
                self.local_dir.mkdir(parents=True, exist_ok=True)
                logger.info(f"Writing telemetry to {self.local_dir}")
            except OSError as e:
                logger.warning(f"Telemetry directory {self.local_dir} unusable ({e}), telemetry disabled")
                self.enabled = False

    def emit_event(self, event: Dict[str, Any]) -> bool:
        """Emit a single event"""
        if not self.enabled:
            return True
        try:
            return self._emit_local(json.dumps(event, separators=(',', ':')))
        except (TypeError, ValueError) as e:
            logger.error(f"Failed to serialize event: {e}")
            return False

    def emit_batch(self, events: List[Dict[str, Any]]) -> bool:
        """Emit multiple events"""
        if not self.enabled or not events:
            return True
        return all(self.emit_event(event) for event in events)

    def _emit_local(self, event_json: str) -> bool:
        """Write event to local NDJSON file"""
        try:
            timestamp = datetime.now().strftime("%Y%m%d")
            filename = self.local_dir / f"telemetry_{timestamp}.ndjson"
            with open(filename, 'a', encoding='utf-8') as f:
                f.write(event_json + '\n')
            return True
        except OSError as e:
            logger.error(f"Failed to write local telemetry: {e}")
            return False

    def tuning_completed(self, session_id: str, **kwargs) -> bool:
        return self.emit_event(self.event_builder.tuning_completed(session_id, **kwargs))


def new_session_id() -> str:
    return str(uuid.uuid4())


_telemetry: Optional[TelemetryEmitter] = None


def get_telemetry() -> TelemetryEmitter:
    """Get or create the process-wide emitter"""
    global _telemetry
    if _telemetry is None:
        _telemetry = TelemetryEmitter()
    return _telemetry


def reset_telemetry() -> None:
    """Drop the process-wide emitter so the next call re-reads the environment"""
    global _telemetry
    _telemetry = None
