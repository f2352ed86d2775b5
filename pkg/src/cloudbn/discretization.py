"""Binning of continuous QoS measurements into ordered states.

A DiscretizationSpec is a strictly increasing edge list e0..ek defining
left-inclusive, right-exclusive bins [e_i, e_i+1); with open_top the final
bin [e_k, inf) is added, giving k+1 bins.  States are 1-based.  Values
below e0 clamp into state 1 by default so ingestion stays total; a flag
turns that into an error.

Five benchmark presets (cpu, compile, memory, oltp, io) ship as package
data with their historical edges and display labels.  The compile preset's
labels carry two quirks preserved verbatim: its state numbering skips 14,
and the state-3 label shows a lower bound of 213 although the shared edge
with state 2 is 233.  hierarchical_discretize builds fresh specs from data
by variance-guided recursive median splitting.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from importlib import resources

import numpy as np

logger = logging.getLogger(__name__)

PRESET_NAMES = ("cpu", "compile", "memory", "oltp", "io")


@dataclass(frozen=True)
class DiscretizationSpec:
    """Bin edges for one variable, with optional display labels per state."""

    variable: str
    edges: tuple[float, ...]
    open_top: bool = True
    labels: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        edges = tuple(float(e) for e in self.edges)
        object.__setattr__(self, "edges", edges)
        if len(edges) < 1:
            raise ValueError("at least one edge required")
        if any(b <= a for a, b in zip(edges, edges[1:])):
            raise ValueError("edges must be strictly increasing")
        if self.labels is not None:
            labels = tuple(self.labels)
            object.__setattr__(self, "labels", labels)
            if len(labels) != self.n_bins:
                raise ValueError(
                    f"{len(labels)} labels for {self.n_bins} bins"
                )

    @property
    def n_bins(self) -> int:
        return len(self.edges) if self.open_top else len(self.edges) - 1

    def label(self, state_index: int) -> str:
        if self.labels is not None:
            return self.labels[state_index - 1]
        return default_label(self.edges, self.open_top, state_index)

    def state_labels(self) -> tuple[str, ...]:
        return tuple(self.label(i) for i in range(1, self.n_bins + 1))


def default_label(edges: tuple[float, ...], open_top: bool, state_index: int) -> str:
    def fmt(x: float) -> str:
        return f"{x:g}"

    if open_top and state_index == len(edges):
        return f"greater than {fmt(edges[-1])}"
    return f"{fmt(edges[state_index - 1])} to {fmt(edges[state_index])}"


@dataclass(frozen=True)
class BinAssignment:
    state_index: int  # 1-based
    state_label: str


def _state_indices(
    spec: DiscretizationSpec, values: np.ndarray, clamp_low: bool
) -> np.ndarray:
    """1-based bin index per value; 0 marks below-range, -1 above-range."""
    edges = np.asarray(spec.edges)
    idx = np.searchsorted(edges, values, side="right").astype(np.int64)
    if clamp_low:
        idx = np.maximum(idx, 1)
    if not spec.open_top:
        idx[idx == len(edges)] = -1
    return idx


def assign_state(
    spec: DiscretizationSpec, value: float, clamp_low: bool = True
) -> BinAssignment:
    """Bin a single value; boundary values fall into the higher bin."""
    idx = int(_state_indices(spec, np.asarray([value], dtype=float), clamp_low)[0])
    if idx == 0:
        raise ValueError(
            f"value {value} below the lowest edge {spec.edges[0]} for"
            f" {spec.variable!r} (clamping disabled)"
        )
    if idx == -1:
        raise ValueError(
            f"value {value} at or above the top edge {spec.edges[-1]} for"
            f" {spec.variable!r} (spec is not open-topped)"
        )
    return BinAssignment(state_index=idx, state_label=spec.label(idx))


def state_counts(
    spec: DiscretizationSpec, values, clamp_low: bool = True
) -> np.ndarray:
    """Histogram over states; out-of-range values are dropped, not errors."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return np.zeros(spec.n_bins, dtype=np.int64)
    idx = _state_indices(spec, arr, clamp_low)
    idx = idx[(idx >= 1) & (idx <= spec.n_bins)]
    return np.bincount(idx - 1, minlength=spec.n_bins).astype(np.int64)


# ---------------------------------------------------------------------------
# automatic discretization


def hierarchical_discretize(
    values, target_states: int, variable: str = "value"
) -> DiscretizationSpec:
    """Variance-guided recursive splitting down to target_states bins.

    Starting from a single bin over all data, the bin with the largest
    within-bin variance is split at the smallest data value strictly above
    its median (falling back to the smallest value above the bin minimum
    when the upper half is constant).  Edges therefore always sit on data
    values and the procedure is deterministic.  When the data cannot
    support the requested number of bins, fewer are returned with a logged
    notice.
    """
    if target_states < 1:
        raise ValueError("target_states must be >= 1")
    data = np.sort(np.asarray(values, dtype=float))
    if data.size == 0:
        raise ValueError("no values to discretize")

    # bins kept as index ranges [lo, hi) over the sorted data
    bins: list[tuple[int, int]] = [(0, data.size)]
    while len(bins) < target_states:
        best = None
        for k, (lo, hi) in enumerate(bins):
            seg = data[lo:hi]
            var = float(np.var(seg)) if hi - lo > 1 else 0.0
            if var <= 0.0:
                continue
            split = _split_point(seg)
            if split is None:
                continue
            if best is None or var > best[0]:
                best = (var, k, lo + split)
        if best is None:
            logger.warning(
                "only %d bins supported by the data, %d requested",
                len(bins),
                target_states,
            )
            break
        _, k, cut = best
        lo, hi = bins[k]
        bins[k : k + 1] = [(lo, cut), (cut, hi)]

    edges = tuple(float(data[lo]) for lo, _ in bins)
    return DiscretizationSpec(variable=variable, edges=edges, open_top=True)


def _split_point(seg: np.ndarray) -> int | None:
    """Offset of the first value strictly above the segment median (fallback:
    above the minimum); None when the segment is constant."""
    median = float(np.median(seg))
    cut = int(np.searchsorted(seg, median, side="right"))
    if cut == seg.size:
        cut = int(np.searchsorted(seg, seg[0], side="right"))
        if cut == seg.size:
            return None
    return cut


# ---------------------------------------------------------------------------
# preset plumbing


def spec_to_dict(spec: DiscretizationSpec) -> dict:
    doc = {
        "variable": spec.variable,
        "edges": list(spec.edges),
        "open_top": spec.open_top,
    }
    if spec.labels is not None:
        doc["labels"] = list(spec.labels)
    return doc


def spec_from_dict(doc: dict) -> DiscretizationSpec:
    return DiscretizationSpec(
        variable=doc["variable"],
        edges=tuple(doc["edges"]),
        open_top=bool(doc.get("open_top", True)),
        labels=tuple(doc["labels"]) if "labels" in doc else None,
    )


def save_spec(spec: DiscretizationSpec, path) -> None:
    with open(path, "w") as fh:
        json.dump(spec_to_dict(spec), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_spec(path) -> DiscretizationSpec:
    with open(path) as fh:
        return spec_from_dict(json.load(fh))


def load_preset(name: str) -> DiscretizationSpec:
    """One of the shipped benchmark presets: cpu, compile, memory, oltp, io."""
    if name not in PRESET_NAMES:
        raise KeyError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")
    text = resources.files("cloudbn.presets").joinpath(f"{name}.json").read_text()
    return spec_from_dict(json.loads(text))


def preset_path(name: str):
    return resources.files("cloudbn.presets").joinpath(f"{name}.json")
