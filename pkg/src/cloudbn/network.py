"""Discrete Bayesian network representation.

A network is a DAG over categorical variables where every node carries a
conditional distribution given its parents: either a full conditional
probability table (CPT) or a leaky noisy-MAX distribution for nodes with
many converging causes.  The joint probability of a full assignment is the
product over nodes of P(node state | parent states).

Conventions used throughout the package:

* CPT rows are indexed in mixed-radix order over the parent cardinalities
  with the LAST parent varying fastest (C order, i.e. the row index of a
  parent configuration is ``numpy.ravel_multi_index(cfg, parent_cards)``).
  This makes serialized tables portable across implementations.
* Probability rows must sum to 1 within ROW_SUM_TOL.  The JSON loader
  renormalizes rows that are off by at most LOAD_RENORM_TOL and rejects
  anything worse, so text-serialization rounding is absorbed without
  masking real bugs.
* Networks are immutable after construction: value arrays are marked
  read-only, so concurrent readers are safe.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

ROW_SUM_TOL = 1e-9
LOAD_RENORM_TOL = 1e-6


class NetworkFormatError(ValueError):
    """Raised when a network description cannot be built at all."""


@dataclass(frozen=True)
class Variable:
    """A categorical variable with a fixed, ordered list of state labels."""

    id: str
    states: tuple[str, ...]
    name: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "states", tuple(self.states))
        if not self.name:
            object.__setattr__(self, "name", self.id)

    @property
    def cardinality(self) -> int:
        return len(self.states)

    def state_index(self, label: str) -> int:
        try:
            return self.states.index(label)
        except ValueError:
            raise KeyError(f"variable {self.id!r} has no state {label!r}") from None


@dataclass(frozen=True)
class Dag:
    """Node ids plus an ordered parent list per node."""

    nodes: tuple[str, ...]
    parent_map: Mapping[str, tuple[str, ...]]

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(
            self,
            "parent_map",
            {n: tuple(self.parent_map.get(n, ())) for n in self.nodes},
        )

    def parents(self, node: str) -> tuple[str, ...]:
        return self.parent_map[node]

    def topological_order(self) -> list[str] | None:
        """Kahn's algorithm; None if the graph has a directed cycle."""
        children: dict[str, list[str]] = {n: [] for n in self.nodes}
        indegree = {n: 0 for n in self.nodes}
        for child, parents in self.parent_map.items():
            for p in parents:
                if p in children:
                    children[p].append(child)
                    indegree[child] += 1
        ready = [n for n in self.nodes if indegree[n] == 0]
        order: list[str] = []
        while ready:
            node = ready.pop(0)
            order.append(node)
            for c in children[node]:
                indegree[c] -= 1
                if indegree[c] == 0:
                    ready.append(c)
        if len(order) != len(self.nodes):
            return None
        return order

    def cycle_nodes(self) -> list[str]:
        """Nodes that sit on or behind a directed cycle (empty if acyclic)."""
        order = self.topological_order()
        if order is not None:
            return []
        children: dict[str, list[str]] = {n: [] for n in self.nodes}
        indegree = {n: 0 for n in self.nodes}
        for child, parents in self.parent_map.items():
            for p in parents:
                if p in children:
                    children[p].append(child)
                    indegree[child] += 1
        ready = [n for n in self.nodes if indegree[n] == 0]
        removed = set()
        while ready:
            node = ready.pop(0)
            removed.add(node)
            for c in children[node]:
                indegree[c] -= 1
                if indegree[c] == 0:
                    ready.append(c)
        return [n for n in self.nodes if n not in removed]


@dataclass
class Cpt:
    """Conditional probability table: one probability row per parent config.

    ``rows`` has shape (prod(parent cardinalities), child cardinality); a
    parentless node has a single row.
    """

    child: str
    parents: tuple[str, ...]
    rows: np.ndarray

    def __post_init__(self) -> None:
        self.parents = tuple(self.parents)
        self.rows = np.asarray(self.rows, dtype=float)
        if self.rows.ndim != 2:
            raise NetworkFormatError(
                f"CPT for {self.child!r} must be 2-d, got shape {self.rows.shape}"
            )
        self.rows.flags.writeable = False

    def row_index(self, parent_states: Sequence[int], parent_cards: Sequence[int]) -> int:
        if not self.parents:
            return 0
        return int(np.ravel_multi_index(tuple(parent_states), tuple(parent_cards)))


@dataclass
class NoisyMaxCpd:
    """Leaky noisy-MAX distribution for a child with graded, ordered states.

    Each parent (cause) independently produces an effect over the child's
    states via its per-state link vector; a parentless leak vector captures
    everything not modelled.  The child takes the maximum effect, so
    P(child <= k | config) is the product over active causes (and the leak)
    of P(effect <= k).  Every parent has a designated "off" state whose link
    vector is the degenerate (1, 0, ..., 0): an off cause contributes
    nothing.  For a binary child this is the classic leaky noisy-OR.
    """

    child: str
    parents: tuple[str, ...]
    link_params: dict[str, np.ndarray]  # parent id -> (parent card, child card)
    leak: np.ndarray  # (child card,)
    off_states: dict[str, int] = field(default_factory=dict)  # parent id -> state index

    def __post_init__(self) -> None:
        self.parents = tuple(self.parents)
        self.link_params = {
            p: np.asarray(v, dtype=float) for p, v in self.link_params.items()
        }
        self.leak = np.asarray(self.leak, dtype=float)
        self.off_states = {p: int(self.off_states.get(p, 0)) for p in self.parents}
        for arr in self.link_params.values():
            arr.flags.writeable = False
        self.leak.flags.writeable = False

    @property
    def child_cardinality(self) -> int:
        return len(self.leak)

    def cumulative_links(self) -> dict[str, np.ndarray]:
        """Per parent: P(effect <= k | parent state), shape (card, child card)."""
        return {p: np.cumsum(v, axis=1) for p, v in self.link_params.items()}

    def prob(self, child_state: int, parent_states: Sequence[int]) -> float:
        """P(child = child_state | parent configuration), evaluated directly."""
        cum = np.cumsum(self.leak)
        for p, s in zip(self.parents, parent_states):
            cum = cum * np.cumsum(self.link_params[p][s])
        upper = cum[child_state]
        lower = cum[child_state - 1] if child_state > 0 else 0.0
        return float(upper - lower)


Cpd = Union[Cpt, NoisyMaxCpd]


@dataclass
class BayesianNetwork:
    """Immutable DAG of categorical variables with one CPD per node."""

    variables: dict[str, Variable]
    dag: Dag
    cpds: dict[str, Cpd]

    def __post_init__(self) -> None:
        self.variables = dict(self.variables)
        self.cpds = dict(self.cpds)

    @property
    def nodes(self) -> tuple[str, ...]:
        return self.dag.nodes

    def variable(self, node: str) -> Variable:
        return self.variables[node]

    def cardinality(self, node: str) -> int:
        return self.variables[node].cardinality

    def parents(self, node: str) -> tuple[str, ...]:
        return self.dag.parents(node)

    def parent_cards(self, node: str) -> tuple[int, ...]:
        return tuple(self.cardinality(p) for p in self.dag.parents(node))

    def joint_state_count(self) -> int:
        return int(np.prod([self.cardinality(n) for n in self.nodes], dtype=object))


def network(
    variables: Iterable[Variable],
    parent_map: Mapping[str, Sequence[str]],
    cpds: Mapping[str, Cpd],
) -> BayesianNetwork:
    """Convenience constructor keeping node order = variable declaration order."""
    var_list = list(variables)
    dag = Dag(
        nodes=tuple(v.id for v in var_list),
        parent_map={v.id: tuple(parent_map.get(v.id, ())) for v in var_list},
    )
    return BayesianNetwork(
        variables={v.id: v for v in var_list}, dag=dag, cpds=dict(cpds)
    )


# ---------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def _validate_prob_vector(vec: np.ndarray, what: str, violations: list[str]) -> None:
    if np.any(vec < 0) or np.any(vec > 1):
        violations.append(f"{what}: entries outside [0,1]")
        return
    total = float(vec.sum())
    if abs(total - 1.0) > ROW_SUM_TOL:
        violations.append(f"{what}: row sum {total:.10g} != 1")


def validate_network(bn: BayesianNetwork) -> ValidationReport:
    """Check every structural and probabilistic invariant; violations are data."""
    violations: list[str] = []

    seen_ids = set()
    for node in bn.dag.nodes:
        if node in seen_ids:
            violations.append(f"{node}: duplicate node id")
        seen_ids.add(node)
        if node not in bn.variables:
            violations.append(f"{node}: node has no variable declaration")
            continue
        if bn.variables[node].cardinality < 1:
            violations.append(f"{node}: cardinality < 1")
        labels = bn.variables[node].states
        if len(set(labels)) != len(labels):
            violations.append(f"{node}: duplicate state labels")

    for node in bn.dag.nodes:
        parents = bn.dag.parents(node)
        if len(set(parents)) != len(parents):
            violations.append(f"{node}: duplicate parents")
        for p in parents:
            if p not in bn.variables:
                violations.append(f"{node}: undeclared parent {p!r}")

    cycle = bn.dag.cycle_nodes()
    if cycle:
        violations.append("cycle: " + ",".join(cycle))

    for node in bn.dag.nodes:
        if node not in bn.cpds:
            violations.append(f"{node}: missing CPD")
            continue
        cpd = bn.cpds[node]
        if cpd.child != node:
            violations.append(f"{node}: CPD declares child {cpd.child!r}")
        if tuple(cpd.parents) != tuple(bn.dag.parents(node)):
            violations.append(
                f"{node}: CPD parents {list(cpd.parents)} != dag parents"
                f" {list(bn.dag.parents(node))}"
            )
            continue
        if any(p not in bn.variables for p in cpd.parents):
            continue
        card = bn.cardinality(node) if node in bn.variables else 0
        if isinstance(cpd, Cpt):
            expected_rows = int(np.prod(bn.parent_cards(node), dtype=object)) if cpd.parents else 1
            if cpd.rows.shape != (expected_rows, card):
                violations.append(
                    f"{node}: CPT shape {cpd.rows.shape} != ({expected_rows}, {card})"
                )
                continue
            for r in range(cpd.rows.shape[0]):
                _validate_prob_vector(cpd.rows[r], f"{node}: CPT row {r}", violations)
        else:
            if len(cpd.leak) != card:
                violations.append(f"{node}: leak length {len(cpd.leak)} != {card}")
            else:
                _validate_prob_vector(cpd.leak, f"{node}: leak", violations)
            for p in cpd.parents:
                link = cpd.link_params.get(p)
                if link is None:
                    violations.append(f"{node}: missing link vector for parent {p!r}")
                    continue
                if link.shape != (bn.cardinality(p), card):
                    violations.append(
                        f"{node}: link for {p!r} has shape {link.shape}, expected"
                        f" ({bn.cardinality(p)}, {card})"
                    )
                    continue
                for s in range(link.shape[0]):
                    _validate_prob_vector(
                        link[s], f"{node}: link {p!r} state {s}", violations
                    )
                off = cpd.off_states.get(p, 0)
                degenerate = np.zeros(card)
                degenerate[0] = 1.0
                if not np.allclose(link[off], degenerate, atol=ROW_SUM_TOL):
                    violations.append(
                        f"{node}: link {p!r} off state {off} is not (1,0,...,0)"
                    )

    return ValidationReport(violations)


# ---------------------------------------------------------------------------
# joint evaluation


def log_joint_probability(bn: BayesianNetwork, assignment: Mapping[str, str]) -> float:
    """Sum of log conditional probabilities; -inf when any factor is zero."""
    idx = {}
    for node in bn.nodes:
        if node not in assignment:
            raise KeyError(f"assignment missing node {node!r}")
        idx[node] = bn.variable(node).state_index(assignment[node])
    total = 0.0
    for node in bn.nodes:
        cpd = bn.cpds[node]
        parent_states = [idx[p] for p in cpd.parents]
        if isinstance(cpd, Cpt):
            row = cpd.row_index(parent_states, bn.parent_cards(node))
            p = float(cpd.rows[row, idx[node]])
        else:
            p = cpd.prob(idx[node], parent_states)
        if p <= 0.0:
            return -math.inf
        total += math.log(p)
    return total


def joint_probability(bn: BayesianNetwork, assignment: Mapping[str, str]) -> float:
    """P(full assignment) per the chain-rule factorization over the DAG."""
    lp = log_joint_probability(bn, assignment)
    return 0.0 if lp == -math.inf else math.exp(lp)


def expand_noisy_max(cpd: NoisyMaxCpd, parent_cards: Sequence[int]) -> Cpt:
    """Expand a noisy-MAX CPD into the equivalent full CPT.

    P(child <= k | cfg) is the product of the per-cause cumulative effect
    distributions (leak included); differencing adjacent cumulative levels
    recovers the point probabilities.
    """
    parent_cards = tuple(parent_cards)
    n_rows = int(np.prod(parent_cards, dtype=object)) if parent_cards else 1
    card = cpd.child_cardinality
    cum_links = cpd.cumulative_links()
    leak_cum = np.cumsum(cpd.leak)

    rows = np.empty((n_rows, card))
    for r in range(n_rows):
        cfg = np.unravel_index(r, parent_cards) if parent_cards else ()
        cum = leak_cum.copy()
        for p, s in zip(cpd.parents, cfg):
            cum *= cum_links[p][s]
        rows[r, 0] = cum[0]
        rows[r, 1:] = np.diff(cum)
    # cumulative differencing can leave tiny negative dust
    np.clip(rows, 0.0, 1.0, out=rows)
    return Cpt(child=cpd.child, parents=cpd.parents, rows=rows)


def tabular(bn: BayesianNetwork, node: str) -> Cpt:
    """The node's CPD as a full table, expanding noisy-MAX if needed."""
    cpd = bn.cpds[node]
    if isinstance(cpd, Cpt):
        return cpd
    return expand_noisy_max(cpd, bn.parent_cards(node))


# ---------------------------------------------------------------------------
# JSON serialization (the network authoring surface)


def _normalize_row(row: np.ndarray, what: str) -> np.ndarray:
    total = float(row.sum())
    if abs(total - 1.0) <= ROW_SUM_TOL:
        return row
    if abs(total - 1.0) <= LOAD_RENORM_TOL and total > 0:
        return row / total
    raise NetworkFormatError(f"{what}: row sum {total:.10g} not within {LOAD_RENORM_TOL}")


def to_dict(bn: BayesianNetwork) -> dict:
    doc: dict = {
        "variables": [
            {"id": v.id, "name": v.name, "states": list(v.states)}
            for v in (bn.variables[n] for n in bn.nodes)
        ],
        "edges": [
            {"child": n, "parents": list(bn.dag.parents(n))}
            for n in bn.nodes
            if bn.dag.parents(n)
        ],
        "cpds": {},
    }
    for node in bn.nodes:
        cpd = bn.cpds[node]
        if isinstance(cpd, Cpt):
            doc["cpds"][node] = {"type": "table", "rows": cpd.rows.tolist()}
        else:
            doc["cpds"][node] = {
                "type": "noisy_max",
                "link_params": {p: cpd.link_params[p].tolist() for p in cpd.parents},
                "leak": cpd.leak.tolist(),
                "off_states": {p: cpd.off_states[p] for p in cpd.parents},
            }
    return doc


def from_dict(doc: Mapping) -> BayesianNetwork:
    try:
        variables = [
            Variable(id=v["id"], states=tuple(v["states"]), name=v.get("name", ""))
            for v in doc["variables"]
        ]
    except (KeyError, TypeError) as exc:
        raise NetworkFormatError(f"bad variables section: {exc}") from exc
    parent_map = {e["child"]: tuple(e["parents"]) for e in doc.get("edges", [])}
    by_id = {v.id: v for v in variables}

    cpds: dict[str, Cpd] = {}
    for node, spec in doc.get("cpds", {}).items():
        kind = spec.get("type", "table")
        parents = parent_map.get(node, ())
        if kind == "table":
            rows = np.asarray(spec["rows"], dtype=float)
            if rows.ndim != 2:
                raise NetworkFormatError(f"{node}: CPT rows must be a 2-d list")
            rows = np.vstack(
                [_normalize_row(rows[r], f"{node}: CPT row {r}") for r in range(rows.shape[0])]
            )
            cpds[node] = Cpt(child=node, parents=parents, rows=rows)
        elif kind == "noisy_max":
            link_params = {}
            for p in parents:
                link = np.asarray(spec["link_params"][p], dtype=float)
                link = np.vstack(
                    [
                        _normalize_row(link[s], f"{node}: link {p!r} state {s}")
                        for s in range(link.shape[0])
                    ]
                )
                link_params[p] = link
            leak = _normalize_row(np.asarray(spec["leak"], dtype=float), f"{node}: leak")
            off = {p: int(s) for p, s in spec.get("off_states", {}).items()}
            cpds[node] = NoisyMaxCpd(
                child=node,
                parents=parents,
                link_params=link_params,
                leak=leak,
                off_states=off,
            )
        else:
            raise NetworkFormatError(f"{node}: unknown CPD type {kind!r}")

    missing = [v.id for v in variables if v.id not in cpds]
    if missing:
        raise NetworkFormatError(f"variables without CPDs: {missing}")
    unknown = [n for n in parent_map if n not in by_id]
    if unknown:
        raise NetworkFormatError(f"edges reference undeclared nodes: {unknown}")
    return network(variables, parent_map, cpds)


def save_network(bn: BayesianNetwork, path) -> None:
    with open(path, "w") as fh:
        json.dump(to_dict(bn), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_network(path) -> BayesianNetwork:
    with open(path) as fh:
        doc = json.load(fh)
    bn = from_dict(doc)
    report = validate_network(bn)
    if not report.ok:
        raise NetworkFormatError("invalid network: " + "; ".join(report.violations))
    return bn
