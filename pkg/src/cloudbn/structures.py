"""Network skeleton construction for the four classifier shapes.

* nbn: the class is the sole parent of every feature.
* tan: nbn plus a learned feature tree, at most one feature parent each.
  Tree edges maximize conditional mutual information given the class over
  a deterministic maximum-weight spanning tree.
* nor: all features converge on the class, which carries a noisy-MAX CPD.
* cbn: an explicit, expert-authored edge list.

Builders return skeletons: networks of the right shape with uniform
placeholder rows, ready for parameter learning.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .dataset import MISSING, Dataset, Schema
from .network import BayesianNetwork, Cpt, NoisyMaxCpd, Variable, network

logger = logging.getLogger(__name__)

KINDS = ("nbn", "tan", "nor", "cbn")


@dataclass(frozen=True)
class StructureSpec:
    kind: str
    class_variable: str
    feature_variables: tuple[str, ...]
    cbn_edges: tuple[tuple[str, str], ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "feature_variables", tuple(self.feature_variables))
        object.__setattr__(
            self, "cbn_edges", tuple((a, b) for a, b in self.cbn_edges)
        )
        if self.kind not in KINDS:
            raise ValueError(f"unknown structure kind {self.kind!r}")
        if self.class_variable in self.feature_variables:
            raise ValueError("class variable listed among features")
        if len(set(self.feature_variables)) != len(self.feature_variables):
            raise ValueError("duplicate feature variables")
        if self.kind == "cbn" and not self.cbn_edges:
            raise ValueError("cbn structure requires an explicit edge list")


def load_structure_spec(path) -> StructureSpec:
    with open(path) as fh:
        doc = json.load(fh)
    return StructureSpec(
        kind=doc["kind"],
        class_variable=doc["class"],
        feature_variables=tuple(doc["features"]),
        cbn_edges=tuple((a, b) for a, b in doc.get("cbn_edges", [])),
    )


def save_structure_spec(spec: StructureSpec, path) -> None:
    doc = {
        "kind": spec.kind,
        "class": spec.class_variable,
        "features": list(spec.feature_variables),
    }
    if spec.cbn_edges:
        doc["cbn_edges"] = [list(e) for e in spec.cbn_edges]
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _check_schema(spec: StructureSpec, schema: Schema) -> None:
    for v in (spec.class_variable, *spec.feature_variables):
        if v not in schema.states:
            raise KeyError(f"structure variable {v!r} absent from schema")


def _uniform_cpt(child: str, parents: tuple[str, ...], schema: Schema) -> Cpt:
    card = schema.cardinality(child)
    n_rows = int(np.prod([schema.cardinality(p) for p in parents], dtype=np.int64)) if parents else 1
    return Cpt(child=child, parents=parents, rows=np.full((n_rows, card), 1.0 / card))


def _skeleton(
    spec: StructureSpec, schema: Schema, parent_map: dict[str, tuple[str, ...]]
) -> BayesianNetwork:
    ordered = (spec.class_variable, *spec.feature_variables)
    variables = [Variable(id=v, states=schema.states[v]) for v in ordered]
    cpds = {v: _uniform_cpt(v, parent_map.get(v, ()), schema) for v in ordered}
    return network(variables, parent_map, cpds)


def build_nbn(spec: StructureSpec, schema: Schema) -> BayesianNetwork:
    """Class -> every feature; features mutually non-adjacent."""
    _check_schema(spec, schema)
    parent_map = {f: (spec.class_variable,) for f in spec.feature_variables}
    return _skeleton(spec, schema, parent_map)


def build_nor(spec: StructureSpec, schema: Schema) -> BayesianNetwork:
    """Features converge on the class; the class carries a noisy-MAX CPD."""
    _check_schema(spec, schema)
    ordered = (spec.class_variable, *spec.feature_variables)
    variables = [Variable(id=v, states=schema.states[v]) for v in ordered]
    parent_map = {spec.class_variable: spec.feature_variables}
    card = schema.cardinality(spec.class_variable)

    link_params = {}
    for f in spec.feature_variables:
        rows = np.full((schema.cardinality(f), card), 1.0 / card)
        rows[0] = 0.0
        rows[0, 0] = 1.0  # off state: first state by convention
        link_params[f] = rows
    cpds: dict[str, Cpt | NoisyMaxCpd] = {
        f: _uniform_cpt(f, (), schema) for f in spec.feature_variables
    }
    cpds[spec.class_variable] = NoisyMaxCpd(
        child=spec.class_variable,
        parents=spec.feature_variables,
        link_params=link_params,
        leak=np.full(card, 1.0 / card),
        off_states={f: 0 for f in spec.feature_variables},
    )
    return network(variables, parent_map, cpds)


def build_cbn(spec: StructureSpec, schema: Schema) -> BayesianNetwork:
    """Skeleton with exactly the given directed edges."""
    _check_schema(spec, schema)
    ordered = (spec.class_variable, *spec.feature_variables)
    known = set(ordered)
    parent_map: dict[str, tuple[str, ...]] = {v: () for v in ordered}
    for parent, child in spec.cbn_edges:
        for v in (parent, child):
            if v not in known:
                raise ValueError(f"edge {parent}->{child} references undeclared {v!r}")
        parent_map[child] = parent_map[child] + (parent,)
    bn = _skeleton(spec, schema, parent_map)
    if bn.dag.topological_order() is None:
        raise ValueError("cbn edge list contains a cycle")
    return bn


# ---------------------------------------------------------------------------
# TAN construction


def conditional_mutual_information(
    data: Dataset, fi: str, fj: str, cls: str, pseudocount: float = 1.0
) -> float:
    """CMI(fi; fj | cls) from smoothed trilinear counts.

    Records missing any of the three cells are dropped.  A pseudocount is
    added to every (fi, fj, cls) cell before normalizing.
    """
    if fi == fj:
        raise ValueError("conditional mutual information requires two distinct features")
    ci = data.column(fi)
    cj = data.column(fj)
    cc = data.column(cls)
    keep = (ci != MISSING) & (cj != MISSING) & (cc != MISSING)
    card_i = data.schema.cardinality(fi)
    card_j = data.schema.cardinality(fj)
    card_c = data.schema.cardinality(cls)

    counts = np.full((card_i, card_j, card_c), pseudocount, dtype=float)
    np.add.at(counts, (ci[keep], cj[keep], cc[keep]), 1.0)
    p = counts / counts.sum()
    p_ic = p.sum(axis=1, keepdims=True)
    p_jc = p.sum(axis=0, keepdims=True)
    p_c = p.sum(axis=(0, 1), keepdims=True)
    ratio = p * p_c / (p_ic * p_jc)
    return float((p * np.log(ratio)).sum())


def _max_weight_spanning_tree(
    features: tuple[str, ...], weights: dict[tuple[str, str], float]
) -> list[tuple[str, str]]:
    """Greedy (Kruskal) maximum-weight tree; ties fall to the smaller id pair."""
    edges = sorted(weights.items(), key=lambda kv: (-kv[1], kv[0]))
    component = {f: f for f in features}

    def find(x: str) -> str:
        while component[x] != x:
            component[x] = component[component[x]]
            x = component[x]
        return x

    chosen = []
    for (a, b), _ in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            component[ra] = rb
            chosen.append((a, b))
        if len(chosen) == len(features) - 1:
            break
    return chosen


def build_tan(spec: StructureSpec, data: Dataset, pseudocount: float = 1.0) -> BayesianNetwork:
    """Class->feature edges plus a feature tree rooted at the first feature.

    Tree edges are the maximum-weight spanning tree under CMI(fi; fj |
    class); edges are then directed away from the root by breadth-first
    traversal, so every feature gains at most one feature parent.  With
    fewer than two features there is no tree and a plain nbn is returned.
    """
    _check_schema(spec, data.schema)
    features = spec.feature_variables
    if len(features) < 2:
        logger.warning("tan needs at least 2 features; building nbn instead")
        return build_nbn(spec, data.schema)

    weights = {}
    for i, fi in enumerate(features):
        for fj in features[i + 1 :]:
            key = (fi, fj) if fi < fj else (fj, fi)
            weights[key] = conditional_mutual_information(
                data, key[0], key[1], spec.class_variable, pseudocount
            )
    tree = _max_weight_spanning_tree(features, weights)

    adjacency: dict[str, list[str]] = {f: [] for f in features}
    for a, b in tree:
        adjacency[a].append(b)
        adjacency[b].append(a)
    root = features[0]
    parent_map = {f: [spec.class_variable] for f in features}
    visited = {root}
    frontier = [root]
    while frontier:
        node = frontier.pop(0)
        for nbr in sorted(adjacency[node]):
            if nbr not in visited:
                visited.add(nbr)
                parent_map[nbr].insert(0, node)
                frontier.append(nbr)

    return _skeleton(
        spec, data.schema, {f: tuple(ps) for f, ps in parent_map.items()}
    )


def build_structure(
    spec: StructureSpec, schema: Schema, data: Dataset | None = None
) -> BayesianNetwork:
    """Dispatch on spec.kind; tan requires data for the tree weights."""
    if spec.kind == "nbn":
        return build_nbn(spec, schema)
    if spec.kind == "nor":
        return build_nor(spec, schema)
    if spec.kind == "cbn":
        return build_cbn(spec, schema)
    if data is None:
        raise ValueError("tan construction needs a dataset")
    return build_tan(spec, data)
