"""Durable state: an append-only ndjson operation log plus periodic snapshots.

Restore loads snapshot.json, then replays the log tail. A torn final line
(an interrupted write) is skipped with a warning; a corrupt line anywhere
else means real damage and fails fast with its line number.
"""

from __future__ import annotations

import json
import logging
import os
from pathlib import Path
from typing import Any

logger = logging.getLogger(__name__)

SNAPSHOT_FILE = "snapshot.json"
LOG_FILE = "log.ndjson"
QUESTIONS_FILE = "questions.ndjson"


class CorruptLog(Exception):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class LogStore:
    """Owns the three files in one data directory."""

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._log_path = self.data_dir / LOG_FILE
        self._snapshot_path = self.data_dir / SNAPSHOT_FILE
        self._questions_path = self.data_dir / QUESTIONS_FILE
        self._log_handle = None

    # --- operation log ---

    def append(self, op: str, data: dict[str, Any]) -> None:
        if self._log_handle is None:
            self._log_handle = open(self._log_path, "a", encoding="utf-8")
        line = json.dumps({"op": op, "data": data}, separators=(",", ":"))
        self._log_handle.write(line + "\n")
        self._log_handle.flush()
        os.fsync(self._log_handle.fileno())

    def load(self) -> tuple[dict[str, Any] | None, list[tuple[str, dict[str, Any]]]]:
        """Return (snapshot state or None, log records in order)."""
        state = None
        if self._snapshot_path.exists():
            state = json.loads(self._snapshot_path.read_text(encoding="utf-8"))
        records: list[tuple[str, dict[str, Any]]] = []
        if self._log_path.exists():
            raw = self._log_path.read_text(encoding="utf-8")
            lines = raw.split("\n")
            # a trailing newline leaves one empty tail entry; drop it
            if lines and lines[-1] == "":
                lines.pop()
            for i, line in enumerate(lines):
                is_last = i == len(lines) - 1
                ended_clean = not is_last or raw.endswith("\n")
                try:
                    record = json.loads(line)
                    op, data = record["op"], record["data"]
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    if is_last and not ended_clean:
                        logger.warning(
                            "ignoring torn final log line %d in %s", i + 1, self._log_path
                        )
                        break
                    raise CorruptLog(i + 1, str(exc)) from exc
                records.append((op, dict(data)))
        return state, records

    def write_snapshot(self, state: dict[str, Any]) -> None:
        """Atomically replace the snapshot, then truncate the log."""
        tmp = self._snapshot_path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(state, separators=(",", ":")), encoding="utf-8")
        os.replace(tmp, self._snapshot_path)
        if self._log_handle is not None:
            self._log_handle.close()
            self._log_handle = None
        open(self._log_path, "w", encoding="utf-8").close()

    # --- question bank file ---

    def write_questions(self, specs: list[dict[str, Any]]) -> None:
        tmp = self._questions_path.with_suffix(".ndjson.tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            for spec in specs:
                fh.write(json.dumps(spec, separators=(",", ":")) + "\n")
        os.replace(tmp, self._questions_path)

    def load_questions(self) -> list[dict[str, Any]]:
        if not self._questions_path.exists():
            return []
        specs = []
        with open(self._questions_path, encoding="utf-8") as fh:
            for i, line in enumerate(fh):
                line = line.strip()
                if not line:
                    continue
                try:
                    specs.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise CorruptLog(i + 1, f"bad question line: {exc}") from exc
        return specs

    def close(self) -> None:
        if self._log_handle is not None:
            self._log_handle.close()
            self._log_handle = None
