"""
Logging configuration utilities.
Provides helper functions to configure logging with the report handler.
"""

import logging
import sys
import os

# Add project root to path
project_root = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
if project_root not in sys.path:
    sys.path.insert(0, project_root)

from scripts.utils.report_log_handler import ReportLogHandler, RunReport


def setup_report_logging(report: RunReport, level=logging.INFO) -> ReportLogHandler:
    """
    Configure logging to include a report handler for structured check records.

    This function:
    1. Sets up basic logging configuration if not already configured
    2. Replaces any previous ReportLogHandler on the root logger
    3. Preserves existing console handlers

    Args:
        report: RunReport receiving the check records
        level: Logging level (default: INFO)

    Returns:
        The installed handler
    """
    root_logger = logging.getLogger()

    for handler in list(root_logger.handlers):
        if isinstance(handler, ReportLogHandler):
            root_logger.removeHandler(handler)

    if not root_logger.handlers:
        logging.basicConfig(
            level=level,
            format='%(asctime)s - %(levelname)s - %(message)s',
            stream=sys.stderr
        )
    root_logger.setLevel(level)

    report_handler = ReportLogHandler(report, level=level)
    root_logger.addHandler(report_handler)
    return report_handler


def log_check(logger: logging.Logger, name: str, status: str, message: str = '', **metadata):
    """Emit one structured check record."""
    level = logging.ERROR if status == 'fail' else logging.INFO
    mark = {'pass': '✓', 'fail': '✗'}.get(status, '•')
    logger.log(
        level,
        f"{mark} {name}: {message or status}",
        extra={
            "log_type": "check",
            "action": name,
            "status": status,
            "metadata": metadata,
        }
    )
