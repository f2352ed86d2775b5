"""Benchmark-trace CSV ingestion.

Raw rows are parsed into typed records under a configurable column
mapping, validated against the closed vocabularies (five benchmarks, two
clouds, two regions), and rejected with line numbers when malformed.
Records then become a categorical dataset: the timestamp expands to
time-of-day and day-of-week factors and the continuous QoS value is
discretized through its benchmark's preset.  Absent cpu_type or qos cells
turn into missing cells rather than rejected rows.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field, fields
from datetime import datetime, timezone

import numpy as np

from .dataset import Dataset, Schema, from_records
from .discretization import DiscretizationSpec, _state_indices

logger = logging.getLogger(__name__)

BENCHMARKS = ("cpu", "compile", "memory", "oltp", "io")
CLOUDS = ("aws", "gce")
REGIONS = ("us", "eu")
DAYS = ("mon", "tue", "wed", "thu", "fri", "sat", "sun")

# accepted spellings beyond the canonical lowercase forms
BENCHMARK_ALIASES = {"mem": "memory", "i/o": "io", "i-o": "io"}

VARIABLES = (
    "benchmark",
    "cloud",
    "region",
    "vm_size",
    "cpu_type",
    "time_of_day",
    "day_of_week",
    "qos_value",
)


@dataclass(frozen=True)
class ColumnConfig:
    """Maps the canonical field names onto a trace's actual CSV headers."""

    timestamp: str = "timestamp"
    cloud: str = "cloud"
    region: str = "region"
    vm_size: str = "vm_size"
    cpu_type: str = "cpu_type"
    benchmark: str = "benchmark"
    qos_value: str = "qos_value"
    timestamp_unit: str = "iso"  # iso | epoch_s | epoch_ms
    benchmark_aliases: dict = field(default_factory=dict)


def load_column_config(path) -> ColumnConfig:
    with open(path) as fh:
        doc = json.load(fh)
    known = {f.name for f in fields(ColumnConfig)}
    unknown = set(doc) - known
    if unknown:
        raise ValueError(f"unknown column-config keys: {sorted(unknown)}")
    return ColumnConfig(**doc)


@dataclass(frozen=True)
class RawRecord:
    timestamp: datetime
    cloud: str
    region: str
    vm_size: str
    benchmark: str
    cpu_type: str | None = None
    qos_value: float | None = None


@dataclass
class RejectionReport:
    rejected: list[tuple[int, str]] = field(default_factory=list)

    def add(self, line: int, reason: str) -> None:
        self.rejected.append((line, reason))

    def __len__(self) -> int:
        return len(self.rejected)


def _parse_timestamp(text: str, unit: str) -> datetime:
    if unit == "epoch_s":
        return datetime.fromtimestamp(float(text), tz=timezone.utc)
    if unit == "epoch_ms":
        return datetime.fromtimestamp(float(text) / 1000.0, tz=timezone.utc)
    ts = datetime.fromisoformat(text.replace("Z", "+00:00"))
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def parse_csv(
    path, config: ColumnConfig | None = None
) -> tuple[list[RawRecord], RejectionReport]:
    """Read one trace CSV; malformed rows land in the report, never vanish."""
    config = config or ColumnConfig()
    report = RejectionReport()
    records: list[RawRecord] = []
    aliases = dict(BENCHMARK_ALIASES)
    aliases.update(config.benchmark_aliases)

    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: empty file, no header row")
        required = [config.timestamp, config.cloud, config.region,
                    config.vm_size, config.benchmark]
        missing_cols = [c for c in required if c not in reader.fieldnames]
        if missing_cols:
            raise ValueError(f"{path}: missing required columns {missing_cols}")

        for row in reader:
            line = reader.line_num
            try:
                ts = _parse_timestamp(row[config.timestamp].strip(), config.timestamp_unit)
            except (ValueError, AttributeError, OSError, OverflowError):
                report.add(line, f"bad timestamp {row.get(config.timestamp)!r}")
                continue
            cloud = (row[config.cloud] or "").strip().lower()
            if cloud not in CLOUDS:
                report.add(line, f"unknown cloud {row.get(config.cloud)!r}")
                continue
            region = (row[config.region] or "").strip().lower()
            if region not in REGIONS:
                report.add(line, f"unknown region {row.get(config.region)!r}")
                continue
            benchmark = (row[config.benchmark] or "").strip().lower()
            benchmark = aliases.get(benchmark, benchmark)
            if benchmark not in BENCHMARKS:
                report.add(line, f"unknown benchmark {row.get(config.benchmark)!r}")
                continue
            vm_size = (row[config.vm_size] or "").strip().lower()
            if not vm_size:
                report.add(line, "empty vm_size")
                continue

            cpu_raw = (row.get(config.cpu_type) or "").strip()
            cpu_type = cpu_raw.lower() if cpu_raw else None
            qos_raw = (row.get(config.qos_value) or "").strip()
            qos: float | None = None
            if qos_raw:
                try:
                    qos = float(qos_raw)
                except ValueError:
                    report.add(line, f"non-numeric qos value {qos_raw!r}")
                    continue
                if not math.isfinite(qos):
                    report.add(line, f"non-finite qos value {qos_raw!r}")
                    continue
            records.append(
                RawRecord(
                    timestamp=ts,
                    cloud=cloud,
                    region=region,
                    vm_size=vm_size,
                    benchmark=benchmark,
                    cpu_type=cpu_type,
                    qos_value=qos,
                )
            )
    return records, report


def derive_time_factors(record: RawRecord, tod_bins: int = 4) -> tuple[str, str]:
    """(time-of-day label, weekday label) from the UTC timestamp."""
    if tod_bins < 1 or 24 % tod_bins != 0:
        raise ValueError("tod_bins must divide 24")
    width = 24 // tod_bins
    ts = record.timestamp.astimezone(timezone.utc)
    start = (ts.hour // width) * width
    return f"{start:02d}-{start + width:02d}", DAYS[ts.weekday()]


def tod_labels(tod_bins: int) -> tuple[str, ...]:
    if tod_bins < 1 or 24 % tod_bins != 0:
        raise ValueError("tod_bins must divide 24")
    width = 24 // tod_bins
    return tuple(f"{s:02d}-{s + width:02d}" for s in range(0, 24, width))


def to_records(
    raws: list[RawRecord],
    presets: dict[str, DiscretizationSpec],
    tod_bins: int = 4,
) -> Dataset:
    """Build the categorical dataset; record count is preserved exactly.

    The qos_value state space is the union of the preset labels of the
    benchmarks present (labels are unique across presets).  Values below a
    preset's lowest edge clamp into its first state.
    """
    observed_benchmarks = [b for b in BENCHMARKS if any(r.benchmark == b for r in raws)]
    for b in observed_benchmarks:
        if b not in presets:
            raise KeyError(f"no discretization preset for benchmark {b!r}")

    qos_states: list[str] = []
    for b in observed_benchmarks:
        for label in presets[b].state_labels():
            if label in qos_states:
                raise ValueError(f"duplicate qos state label {label!r} across presets")
            qos_states.append(label)

    states = {
        "benchmark": tuple(observed_benchmarks),
        "cloud": tuple(sorted({r.cloud for r in raws})),
        "region": tuple(sorted({r.region for r in raws})),
        "vm_size": tuple(sorted({r.vm_size for r in raws})),
        "cpu_type": tuple(sorted({r.cpu_type for r in raws if r.cpu_type is not None})),
        "time_of_day": tod_labels(tod_bins),
        "day_of_week": DAYS,
        "qos_value": tuple(qos_states),
    }
    # a column that is entirely missing still needs a non-empty state list
    for var in ("cloud", "region", "vm_size", "cpu_type"):
        if not states[var]:
            states[var] = ("unknown",)
    schema = Schema(VARIABLES, states)

    rows = []
    for r in raws:
        tod, dow = derive_time_factors(r, tod_bins)
        rec = {
            "benchmark": r.benchmark,
            "cloud": r.cloud,
            "region": r.region,
            "vm_size": r.vm_size,
            "time_of_day": tod,
            "day_of_week": dow,
        }
        if r.cpu_type is not None:
            rec["cpu_type"] = r.cpu_type
        if r.qos_value is not None:
            spec = presets[r.benchmark]
            idx = int(_state_indices(spec, np.asarray([r.qos_value]), True)[0])
            if 1 <= idx <= spec.n_bins:
                rec["qos_value"] = spec.label(idx)
            else:
                # closed-top preset with an above-range value: cell goes missing
                logger.warning(
                    "qos value %s out of range for %s; cell left missing",
                    r.qos_value,
                    r.benchmark,
                )
        rows.append(rec)
    return from_records(schema, rows)


@dataclass(frozen=True)
class SummaryStats:
    minimum: float
    maximum: float
    mean: float
    std: float
    count: int


def summarize(raws: list[RawRecord]) -> dict[str, SummaryStats]:
    """Per-benchmark QoS summary plus a pooled 'combined' row.

    Only records carrying a QoS value contribute; the standard deviation is
    the population form (divide by n).
    """
    out: dict[str, SummaryStats] = {}
    groups: dict[str, list[float]] = {}
    for r in raws:
        if r.qos_value is not None:
            groups.setdefault(r.benchmark, []).append(r.qos_value)
    all_values: list[float] = []
    for b in BENCHMARKS:
        if b not in groups:
            continue
        vals = np.asarray(groups[b])
        all_values.extend(groups[b])
        out[b] = SummaryStats(
            minimum=float(vals.min()),
            maximum=float(vals.max()),
            mean=float(vals.mean()),
            std=float(vals.std()),
            count=int(vals.size),
        )
    if all_values:
        vals = np.asarray(all_values)
        out["combined"] = SummaryStats(
            minimum=float(vals.min()),
            maximum=float(vals.max()),
            mean=float(vals.mean()),
            std=float(vals.std()),
            count=int(vals.size),
        )
    return out
