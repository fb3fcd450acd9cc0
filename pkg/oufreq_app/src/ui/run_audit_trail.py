"""
Run audit trail for OUFreq.
Records each CLI session and every artefact it writes as JSONL events.
"""

import hashlib  # For content hashes of written artefacts
import json  # For JSON serialization of log entries
import logging  # For application logging
import os  # For file system operations
import time  # For timestamps and session duration tracking
from datetime import datetime  # For human-readable date formatting
from typing import Any, Dict, List, Optional

from ..utils.file_loader import provenance_line

# Set up logger for this module
logger = logging.getLogger(__name__)


class RunAuditTrail:
    """
    Append-only JSONL log of one CLI run: session start, written artefacts,
    failures and a session summary.
    """

    def __init__(self, log_file_path: str, subcommand: str, config_digest: str,
                 seed: Optional[int]):
        """
        Initialize the audit trail and record the session start.

        Args:
            log_file_path: Path to the JSONL audit log file (inside --out)
            subcommand: CLI subcommand being run
            config_digest: SHA-256 of the effective configuration
            seed: Base seed of the run
        """
        self.log_file_path = log_file_path
        self.session_id = self._generate_session_id()
        self.subcommand = subcommand
        self.config_digest = config_digest
        self.seed = seed
        self.session_start_time = time.time()
        self.artefacts: List[str] = []
        self.failures = 0

        log_dir = os.path.dirname(log_file_path)
        if log_dir and not os.path.exists(log_dir):
            os.makedirs(log_dir, exist_ok=True)
        if not os.path.exists(log_file_path) or os.path.getsize(log_file_path) == 0:
            self._write_line(provenance_line(config_digest, seed))

        self._write_log_entry(self._base_entry("session_start"))
        logger.info(f"Run audit trail started: session {self.session_id} ({subcommand})")

    def _generate_session_id(self) -> str:
        """
        Generate a unique session ID based on timestamp and random value.

        Returns:
            str: Identifier in the format "run_timestamp_randomhex"
        """
        return f"run_{int(time.time())}_{os.urandom(4).hex()}"

    def _base_entry(self, event_type: str) -> Dict[str, Any]:
        return {
            "timestamp": time.time(),
            "date": datetime.now().strftime("%Y-%m-%d %H:%M:%S"),
            "event_type": event_type,
            "session_id": self.session_id,
            "subcommand": self.subcommand,
            "config_sha256": self.config_digest,
            "seed": self.seed,
        }

    def log_artefact(self, path: str, kind: str, metadata: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        """
        Record a written output file with its content hash.

        Args:
            path: File that was written
            kind: Artefact kind (path, filter-trace, estimates, replications, summary, checks)
            metadata: Extra fields (row counts, parameters)

        Returns:
            Dict: The log entry that was created
        """
        entry = self._base_entry("artefact")
        entry["path"] = path
        entry["kind"] = kind
        try:
            with open(path, "rb") as f:
                entry["content_sha256"] = hashlib.sha256(f.read()).hexdigest()
        except OSError as e:
            entry["content_sha256"] = None
            logger.warning(f"Could not hash artefact {path}: {e}")
        if metadata:
            entry["metadata"] = metadata
        self.artefacts.append(path)
        self._write_log_entry(entry)
        logger.info(f"Logged artefact: {kind} -> {path}")
        return entry

    def log_failure(self, error: BaseException, exit_code: int) -> Dict[str, Any]:
        """Record an error that ended the run."""
        self.failures += 1
        entry = self._base_entry("failure")
        entry["error_type"] = type(error).__name__
        entry["error_message"] = str(error)[:500]
        entry["exit_code"] = exit_code
        self._write_log_entry(entry)
        logger.warning(f"Logged run failure: {type(error).__name__} (exit {exit_code})")
        return entry

    def log_session_end(self, exit_code: int) -> Dict[str, Any]:
        """Log the end of the run with summary statistics."""
        entry = self._base_entry("session_end")
        entry["session_summary"] = {
            "exit_code": exit_code,
            "artefacts": list(self.artefacts),
            "failures": self.failures,
            "session_duration_seconds": time.time() - self.session_start_time,
        }
        self._write_log_entry(entry)
        logger.info(f"Run audit trail closed: session {self.session_id}, exit {exit_code}")
        return entry

    def _write_log_entry(self, entry: Dict[str, Any]) -> None:
        """
        Append one entry to the JSONL file.

        Args:
            entry: Dictionary containing log entry data
        """
        self._write_line(json.dumps(entry))

    def _write_line(self, line: str) -> None:
        try:
            with open(self.log_file_path, "a", encoding="utf-8") as f:
                f.write(line + "\n")
        except OSError as e:
            logger.error(f"Error writing to run audit log: {str(e)}")


def read_audit_log(log_file_path: str) -> List[Dict[str, Any]]:
    """Read all entries of a JSONL audit log, skipping '#' header lines; empty list if unreadable."""
    entries = []
    try:
        with open(log_file_path, "r", encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if line and not line.startswith("#"):
                    entries.append(json.loads(line))
    except (OSError, json.JSONDecodeError) as e:
        logger.error(f"Error reading run audit log {log_file_path}: {e}")
    return entries
