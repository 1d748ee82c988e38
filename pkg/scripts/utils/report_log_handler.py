"""
Report Log Handler for Python logging.
Collects structured check records into the active RunReport.
"""

import json
import logging
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional


@dataclass
class CheckRecord:
    name: str
    status: str                      # 'pass' | 'fail' | 'measured'
    payload: Dict[str, Any] = field(default_factory=dict)
    message: str = ''
    duration_seconds: Optional[float] = None


@dataclass
class RunReport:
    """Result of one CLI run: command echo, seeds, checks and wall time."""
    command: List[str]
    seeds: List[int]
    checks: List[CheckRecord] = field(default_factory=list)
    started: float = field(default_factory=time.monotonic)
    wall_time: Optional[float] = None

    @property
    def passed(self) -> bool:
        return all(c.status != 'fail' for c in self.checks)

    def finish(self) -> 'RunReport':
        self.wall_time = time.monotonic() - self.started
        return self

    def payloads(self) -> List[Dict[str, Any]]:
        """Seed-determined part of the report (no timings)."""
        return [{'name': c.name, 'status': c.status, 'payload': c.payload} for c in self.checks]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'command': self.command,
            'seeds': self.seeds,
            'checks': [
                {
                    'name': c.name,
                    'status': c.status,
                    'payload': c.payload,
                    'message': c.message,
                    'duration_seconds': c.duration_seconds,
                }
                for c in self.checks
            ],
            'passed': self.passed,
            'wall_time': self.wall_time,
        }

    def to_text(self) -> str:
        lines = [f"command: {' '.join(self.command)}", f"seeds: {self.seeds}"]
        for c in self.checks:
            mark = {'pass': '✓', 'fail': '✗'}.get(c.status, '•')
            lines.append(f"{mark} {c.name} [{c.status}] {json.dumps(c.payload, sort_keys=True, default=str)}")
        if self.wall_time is not None:
            lines.append(f"wall time: {self.wall_time:.2f}s")
        return '\n'.join(lines)


class ReportLogHandler(logging.Handler):
    """
    Logging handler that turns structured check records into RunReport entries.

    Only records that carry structured metadata in the 'extra' parameter are kept:
    - log_type: must be 'check'
    - action: check name
    - status: 'pass', 'fail' or 'measured'

    Optional fields in 'extra':
    - metadata: JSON-serializable dict with the numeric payload
    - duration_seconds: duration of the check
    """

    def __init__(self, report: RunReport, level=logging.NOTSET):
        super().__init__(level)
        self.report = report

    def emit(self, record: logging.LogRecord):
        try:
            if getattr(record, 'log_type', None) != 'check':
                return
            if not hasattr(record, 'action') or not hasattr(record, 'status'):
                return

            metadata = getattr(record, 'metadata', None) or {}
            try:
                json.dumps(metadata, default=str)
            except (TypeError, ValueError):
                self.handleError(record)
                return

            self.report.checks.append(CheckRecord(
                name=getattr(record, 'action'),
                status=getattr(record, 'status'),
                payload=metadata,
                message=record.getMessage(),
                duration_seconds=getattr(record, 'duration_seconds', None),
            ))
        except Exception:
            # Don't let logging errors break the run
            self.handleError(record)
