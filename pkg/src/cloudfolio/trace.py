"""Parsing of per-VM utilization trace files and requirement extraction.

Each VM is traced in its own delimited text file: one row per sample with the
provisioned capacity (CPU MHz, memory KB) and the measured usage. A trace is
reduced to a single resource requirement in one of two modes: what the VM
owner requested, or the maximum the VM ever actually used.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence, Union

from .errors import EmptyTraceError, MalformedRowError, MissingFileError

__all__ = [
    "RequirementMode",
    "TraceRow",
    "ParsedTrace",
    "VmRequirement",
    "parse_trace_file",
    "summarize",
    "discover_trace_files",
]

KB_PER_GIB = 1024 * 1024


class RequirementMode(Enum):
    REQUESTED = "requested"
    MAX_UTILIZATION = "max_utilization"


@dataclass(frozen=True)
class TraceRow:
    timestamp: int
    cpu_cores: int
    cpu_capacity_mhz: float
    cpu_usage_mhz: float
    cpu_usage_pct: float
    memory_capacity_kb: float
    memory_usage_kb: float


@dataclass(frozen=True)
class ParsedTrace:
    """Rows of one trace file plus parse accounting.

    ``repaired_rows`` counts rows where a value had to be clamped (negative
    usage raised to zero, usage capped at capacity). ``malformed_rows`` counts
    rows dropped in lenient mode because they could not be parsed at all.
    """

    vm_id: str
    rows: tuple[TraceRow, ...]
    malformed_rows: int
    repaired_rows: int


@dataclass(frozen=True)
class VmRequirement:
    vm_id: str
    cpu_mhz: float
    memory_gib: float
    mode: RequirementMode


# Column layout: timestamp; cores; CPU capacity [MHz]; CPU usage [MHz];
# CPU usage [%]; memory capacity [KB]; memory usage [KB]; <ignored...>
_MIN_COLUMNS = 7


def _is_number(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False


def _parse_row(fields: Sequence[str]) -> tuple[TraceRow, int]:
    timestamp = int(float(fields[0]))
    cores = int(float(fields[1]))
    values = [float(f) for f in fields[2:7]]
    cpu_cap, cpu_use, cpu_pct, mem_cap, mem_use = values

    repairs = 0
    if cpu_cap < 0:
        cpu_cap, repairs = 0.0, repairs + 1
    if mem_cap < 0:
        mem_cap, repairs = 0.0, repairs + 1
    if cpu_use < 0:
        cpu_use, repairs = 0.0, repairs + 1
    if mem_use < 0:
        mem_use, repairs = 0.0, repairs + 1
    # Usage above provisioned capacity is trace noise; cap it so that
    # max-utilization requirements never dominate requested ones.
    if cpu_use > cpu_cap:
        cpu_use, repairs = cpu_cap, repairs + 1
    if mem_use > mem_cap:
        mem_use, repairs = mem_cap, repairs + 1

    return TraceRow(timestamp, cores, cpu_cap, cpu_use, cpu_pct,
                    mem_cap, mem_use), repairs


def parse_trace_file(path: Union[str, Path], delimiter: str = ";",
                     strict: bool = False) -> ParsedTrace:
    """Parse one trace file.

    A header line is auto-detected by a non-numeric first field. Rows are
    sorted by timestamp; duplicate timestamps are resolved last-wins. In
    strict mode an unparseable data row raises ``MalformedRowError``;
    otherwise it is counted and skipped.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"trace file not found: {path}", path=str(path))
    vm_id = path.stem

    rows: dict[int, TraceRow] = {}
    malformed = 0
    repaired = 0
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        fields = [f.strip() for f in line.split(delimiter)]
        if lineno == 1 and fields and not _is_number(fields[0]):
            continue  # header
        try:
            if len(fields) < _MIN_COLUMNS:
                raise ValueError(f"expected at least {_MIN_COLUMNS} columns")
            row, repairs = _parse_row(fields)
        except ValueError as exc:
            if strict:
                raise MalformedRowError(
                    f"{path}:{lineno}: {exc}", path=str(path), line=lineno)
            malformed += 1
            continue
        repaired += repairs
        rows[row.timestamp] = row

    if not rows:
        raise EmptyTraceError(f"no valid rows in {path}", path=str(path))
    ordered = tuple(rows[t] for t in sorted(rows))
    return ParsedTrace(vm_id, ordered, malformed, repaired)


def summarize(rows: Iterable[TraceRow], mode: RequirementMode,
              vm_id: str = "") -> VmRequirement:
    """Reduce trace rows to a requirement.

    REQUESTED takes the provisioned capacity (CPU MHz, memory), MAX_UTILIZATION
    the peak measured usage. Memory is converted from KB (binary, 1024^2 KB
    per GiB) to GiB.
    """
    rows = tuple(rows)
    if not rows:
        raise EmptyTraceError("cannot summarize an empty trace", vm_id=vm_id)
    if mode is RequirementMode.REQUESTED:
        cpu = max(r.cpu_capacity_mhz for r in rows)
        mem_kb = max(r.memory_capacity_kb for r in rows)
    else:
        cpu = max(r.cpu_usage_mhz for r in rows)
        mem_kb = max(r.memory_usage_kb for r in rows)
    return VmRequirement(vm_id, cpu, mem_kb / KB_PER_GIB, mode)


def discover_trace_files(directory: Union[str, Path]) -> list[Path]:
    """All ``*.csv`` files under a directory, sorted by name."""
    directory = Path(directory)
    if not directory.is_dir():
        raise MissingFileError(f"trace directory not found: {directory}",
                               path=str(directory))
    return sorted(directory.glob("*.csv"))
