"""Categorical datasets with missing cells.

Records are stored as a dense integer code matrix (records x variables)
where -1 marks a missing cell.  The schema fixes variable order and state
label order, so code matrices are comparable across save/load round trips.

On disk a dataset is a JSONL file (one object per line mapping variable id
to state label, missing cells omitted) plus a sidecar schema JSON listing
the variables and their state labels.  The JSONL side matches what the
ingestion pipeline emits; the sidecar makes the file self-describing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

MISSING = -1


@dataclass(frozen=True)
class Schema:
    """Ordered variables, each with an ordered list of state labels."""

    variables: tuple[str, ...]
    states: Mapping[str, tuple[str, ...]]

    def __post_init__(self) -> None:
        object.__setattr__(self, "variables", tuple(self.variables))
        missing = [v for v in self.variables if v not in self.states]
        if missing:
            raise ValueError(f"variables without state lists: {missing}")
        object.__setattr__(
            self, "states", {v: tuple(self.states[v]) for v in self.variables}
        )
        for v, labels in self.states.items():
            if len(set(labels)) != len(labels):
                raise ValueError(f"variable {v!r} has duplicate state labels")

    def cardinality(self, var: str) -> int:
        return len(self.states[var])

    def index_of(self, var: str) -> int:
        return self.variables.index(var)

    def code(self, var: str, label: str) -> int:
        try:
            return self.states[var].index(label)
        except ValueError:
            raise KeyError(f"variable {var!r} has no state {label!r}") from None


class Dataset:
    """Immutable record collection over a Schema.

    ``codes`` is an int16 array of shape (n_records, n_variables); entry
    MISSING (-1) means the cell is unobserved.
    """

    def __init__(self, schema: Schema, codes: np.ndarray):
        codes = np.asarray(codes, dtype=np.int16)
        if codes.ndim != 2 or codes.shape[1] != len(schema.variables):
            raise ValueError(
                f"codes shape {codes.shape} does not match schema with"
                f" {len(schema.variables)} variables"
            )
        for j, var in enumerate(schema.variables):
            col = codes[:, j]
            bad = (col != MISSING) & ((col < 0) | (col >= schema.cardinality(var)))
            if np.any(bad):
                row = int(np.argmax(bad))
                raise ValueError(
                    f"record {row}: code {int(col[row])} out of range for {var!r}"
                )
        self.schema = schema
        self.codes = codes
        self.codes.flags.writeable = False

    def __len__(self) -> int:
        return self.codes.shape[0]

    def column(self, var: str) -> np.ndarray:
        return self.codes[:, self.schema.index_of(var)]

    def observed_mask(self) -> np.ndarray:
        return self.codes != MISSING

    def record_labels(self, i: int) -> dict[str, str]:
        """Record i as a label map, missing cells omitted."""
        out = {}
        for j, var in enumerate(self.schema.variables):
            c = int(self.codes[i, j])
            if c != MISSING:
                out[var] = self.schema.states[var][c]
        return out

    def subset(self, row_index: np.ndarray | Sequence[int]) -> "Dataset":
        return Dataset(self.schema, self.codes[np.asarray(row_index)])

    def select_variables(self, variables: Sequence[str]) -> "Dataset":
        """Project onto a variable subset (schema order follows the argument)."""
        cols = [self.schema.index_of(v) for v in variables]
        sub_schema = Schema(tuple(variables), {v: self.schema.states[v] for v in variables})
        return Dataset(sub_schema, self.codes[:, cols])


def from_records(schema: Schema, records: Iterable[Mapping[str, str]]) -> Dataset:
    """Encode label-map records against the schema; absent keys are missing."""
    rows = []
    for i, rec in enumerate(records):
        row = np.full(len(schema.variables), MISSING, dtype=np.int16)
        for var, label in rec.items():
            if var not in schema.states:
                raise KeyError(f"record {i}: unknown variable {var!r}")
            row[schema.index_of(var)] = schema.code(var, label)
        rows.append(row)
    codes = np.vstack(rows) if rows else np.empty((0, len(schema.variables)), dtype=np.int16)
    return Dataset(schema, codes)


def schema_path_for(data_path: str | Path) -> Path:
    p = Path(data_path)
    return p.with_suffix(p.suffix + ".schema.json") if p.suffix != ".jsonl" else p.with_suffix(".schema.json")


def save_dataset(ds: Dataset, path: str | Path) -> None:
    path = Path(path)
    with open(path, "w") as fh:
        for i in range(len(ds)):
            fh.write(json.dumps(ds.record_labels(i), sort_keys=True))
            fh.write("\n")
    schema_doc = {
        "variables": [
            {"id": v, "states": list(ds.schema.states[v])} for v in ds.schema.variables
        ]
    }
    with open(schema_path_for(path), "w") as fh:
        json.dump(schema_doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_schema(path: str | Path) -> Schema:
    with open(path) as fh:
        doc = json.load(fh)
    variables = tuple(v["id"] for v in doc["variables"])
    return Schema(variables, {v["id"]: tuple(v["states"]) for v in doc["variables"]})


def load_dataset(path: str | Path, schema: Schema | None = None) -> Dataset:
    path = Path(path)
    if schema is None:
        schema = load_schema(schema_path_for(path))
    records = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return from_records(schema, records)
