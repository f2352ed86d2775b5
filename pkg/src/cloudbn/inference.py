"""Exact inference over discrete Bayesian networks.

posterior() answers P(query | evidence) by variable elimination over the
network's CPT factors.  Hard evidence is applied by slicing factors down to
the observed state (the observed variable leaves every scope), soft evidence
by multiplying in a virtual likelihood vector.  Elimination order is chosen
greedily by minimum fill-in with node id as the tie-break, so runs are
deterministic.

enumerate_joint() is an independent oracle: it materializes the full joint
table by brute force over every assignment, sharing no code with the factor
path.  Tests cross-check the two; production callers should use posterior().

Noisy-MAX nodes are expanded to full tables at inference time when the
expansion is small; otherwise the node is decomposed into a chain of binary
max combinations over per-cause effect variables, which keeps the largest
intermediate factor near (child card)^2 per step instead of exponential in
the parent count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .network import (
    BayesianNetwork,
    Cpt,
    NoisyMaxCpd,
    expand_noisy_max,
    tabular,
)

# expansion beyond this many CPT cells switches to the max-chain decomposition
NOISY_EXPANSION_CELL_LIMIT = 1 << 20

# enumerate_joint refuses joints larger than this many states
ENUMERATION_STATE_LIMIT = 1 << 22


class ImpossibleEvidenceError(ValueError):
    """The supplied evidence has probability zero under the model."""


@dataclass(frozen=True)
class EvidenceSet:
    """Hard observations (variable -> state label) plus soft likelihoods.

    A soft entry maps a variable to a likelihood vector over its states:
    the relative chance of seeing the actual observation given each state.
    Vectors need not sum to 1; they are scaled by their maximum on entry so
    extreme magnitudes cannot underflow the elimination.
    """

    hard: Mapping[str, str] = field(default_factory=dict)
    soft: Mapping[str, Sequence[float]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "hard", dict(self.hard))
        object.__setattr__(self, "soft", {k: tuple(v) for k, v in self.soft.items()})
        overlap = set(self.hard) & set(self.soft)
        if overlap:
            raise ValueError(f"variables with both hard and soft evidence: {sorted(overlap)}")

    def variables(self) -> set[str]:
        return set(self.hard) | set(self.soft)


@dataclass
class Factor:
    """A nonnegative table over an ordered scope of variables."""

    scope: tuple[str, ...]
    cards: tuple[int, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        self.scope = tuple(self.scope)
        self.cards = tuple(self.cards)
        self.values = np.asarray(self.values, dtype=float).reshape(self.cards)

    @property
    def size(self) -> int:
        return self.values.size


def factor_multiply(a: Factor, b: Factor) -> Factor:
    """Pointwise product over the union scope via broadcasting."""
    scope = list(a.scope) + [v for v in b.scope if v not in a.scope]
    cards = list(a.cards) + [b.cards[b.scope.index(v)] for v in scope[len(a.scope):]]

    def aligned(f: Factor) -> np.ndarray:
        # permute f's axes into scope order, padding missing vars with size-1 axes
        axes = [f.scope.index(v) for v in scope if v in f.scope]
        arr = np.transpose(f.values, axes)
        shape = [f.cards[f.scope.index(v)] if v in f.scope else 1 for v in scope]
        return arr.reshape(shape)

    return Factor(tuple(scope), tuple(cards), aligned(a) * aligned(b))


def factor_marginalize(f: Factor, var: str) -> Factor:
    """Sum out one variable."""
    axis = f.scope.index(var)
    scope = f.scope[:axis] + f.scope[axis + 1 :]
    cards = f.cards[:axis] + f.cards[axis + 1 :]
    return Factor(scope, cards, f.values.sum(axis=axis))


def factor_reduce(f: Factor, var: str, state: int) -> Factor:
    """Fix one variable to a state; the variable leaves the scope."""
    axis = f.scope.index(var)
    scope = f.scope[:axis] + f.scope[axis + 1 :]
    cards = f.cards[:axis] + f.cards[axis + 1 :]
    return Factor(scope, cards, np.take(f.values, state, axis=axis))


def format_probability(p: float) -> str:
    """Fixed six-decimal rendering; every human-facing surface uses this one
    form so printed numbers can be compared across the CLI and the service."""
    return f"{p:.6f}"


@dataclass
class Posterior:
    """P(query | evidence) plus the evidence probability it was scaled by."""

    variable: str
    states: tuple[str, ...]
    probabilities: np.ndarray
    evidence_probability: float

    def __post_init__(self) -> None:
        self.states = tuple(self.states)
        self.probabilities = np.asarray(self.probabilities, dtype=float)

    def probability(self, state: str) -> float:
        return float(self.probabilities[self.states.index(state)])

    def map_state(self) -> str:
        """Most probable state; ties resolve to the lowest state index."""
        return self.states[int(np.argmax(self.probabilities))]

    def as_dict(self) -> dict[str, float]:
        return {s: float(p) for s, p in zip(self.states, self.probabilities)}


# ---------------------------------------------------------------------------
# factor construction


def _max_chain_factors(
    bn: BayesianNetwork, node: str, cpd: NoisyMaxCpd
) -> list[Factor]:
    """Decompose a wide noisy-MAX node into chained binary max factors.

    Per cause i an effect variable E_i with P(E_i | parent) = link vector;
    auxiliary running-max variables M_i fold the effects in one at a time:
    M_0 = leak draw, M_i = max(M_{i-1}, E_i), child = M_n.  Each auxiliary
    distribution is deterministic, so the factors are 0/1 indicator tables.
    All auxiliary variables are summed out before elimination returns, and
    their names are local to this node.
    """
    card = cpd.child_cardinality
    factors: list[Factor] = []

    prev = f"__{node}__m0"
    factors.append(Factor((prev,), (card,), cpd.leak.copy()))

    for i, p in enumerate(cpd.parents):
        eff = f"__{node}__e{i}"
        factors.append(
            Factor((p, eff), (bn.cardinality(p), card), cpd.link_params[p].copy())
        )
        is_last = i == len(cpd.parents) - 1
        out = node if is_last else f"__{node}__m{i + 1}"
        # indicator: out = max(prev, eff)
        table = np.zeros((card, card, card))
        a = np.arange(card)
        table[a[:, None], a[None, :], np.maximum(a[:, None], a[None, :])] = 1.0
        factors.append(Factor((prev, eff, out), (card, card, card), table))
        prev = out

    if not cpd.parents:
        # leak-only node: M_0 is the child itself
        factors[0] = Factor((node,), (card,), cpd.leak.copy())
    return factors


def _network_factors(bn: BayesianNetwork) -> list[Factor]:
    factors: list[Factor] = []
    for node in bn.nodes:
        cpd = bn.cpds[node]
        if isinstance(cpd, Cpt):
            scope = cpd.parents + (node,)
            cards = bn.parent_cards(node) + (bn.cardinality(node),)
            factors.append(Factor(scope, cards, cpd.rows.reshape(cards)))
            continue
        cells = bn.cardinality(node) * int(
            np.prod(bn.parent_cards(node), dtype=object) or 1
        )
        if cells <= NOISY_EXPANSION_CELL_LIMIT:
            table = expand_noisy_max(cpd, bn.parent_cards(node))
            scope = cpd.parents + (node,)
            cards = bn.parent_cards(node) + (bn.cardinality(node),)
            factors.append(Factor(scope, cards, table.rows.reshape(cards)))
        else:
            factors.extend(_max_chain_factors(bn, node, cpd))
    return factors


def _apply_evidence(
    bn: BayesianNetwork, factors: list[Factor], evidence: EvidenceSet
) -> list[Factor]:
    for var, label in evidence.hard.items():
        state = bn.variable(var).state_index(label)
        factors = [
            factor_reduce(f, var, state) if var in f.scope else f for f in factors
        ]
    for var, likelihood in evidence.soft.items():
        vec = np.asarray(likelihood, dtype=float)
        if vec.shape != (bn.cardinality(var),):
            raise ValueError(
                f"soft evidence for {var!r} has length {vec.size},"
                f" expected {bn.cardinality(var)}"
            )
        if np.any(vec < 0) or not np.any(vec > 0):
            raise ValueError(f"soft evidence for {var!r} must be nonnegative and nonzero")
        factors.append(Factor((var,), (bn.cardinality(var),), vec / vec.max()))
    return factors


# ---------------------------------------------------------------------------
# variable elimination


def _min_fill_order(scopes: list[set[str]], eliminate: set[str]) -> list[str]:
    """Greedy minimum-fill ordering, node id breaking ties."""
    # moralized interaction graph over the remaining variables
    neighbors: dict[str, set[str]] = {v: set() for v in set().union(*scopes, set())}
    for scope in scopes:
        for v in scope:
            neighbors.setdefault(v, set()).update(scope - {v})
    for v in eliminate:
        neighbors.setdefault(v, set())

    order: list[str] = []
    remaining = set(eliminate)
    while remaining:
        best_var = None
        best_fill = None
        for v in sorted(remaining):
            nbrs = [u for u in neighbors[v] if u in neighbors]
            fill = 0
            for i, u in enumerate(nbrs):
                for w in nbrs[i + 1 :]:
                    if w not in neighbors[u]:
                        fill += 1
            if best_fill is None or fill < best_fill:
                best_var, best_fill = v, fill
        assert best_var is not None
        order.append(best_var)
        nbrs = [u for u in neighbors[best_var] if u in neighbors]
        for i, u in enumerate(nbrs):
            for w in nbrs[i + 1 :]:
                neighbors[u].add(w)
                neighbors[w].add(u)
        for u in nbrs:
            neighbors[u].discard(best_var)
        del neighbors[best_var]
        remaining.discard(best_var)
    return order


def _eliminate(factors: list[Factor], order: Iterable[str]) -> list[Factor]:
    factors = list(factors)
    for var in order:
        touching = [f for f in factors if var in f.scope]
        if not touching:
            continue
        rest = [f for f in factors if var not in f.scope]
        product = touching[0]
        for f in touching[1:]:
            product = factor_multiply(product, f)
        factors = rest + [factor_marginalize(product, var)]
    return factors


def posterior(
    bn: BayesianNetwork,
    query: str,
    evidence: EvidenceSet | None = None,
) -> Posterior:
    """Exact P(query | evidence) via variable elimination."""
    evidence = evidence or EvidenceSet()
    if query not in bn.variables:
        raise KeyError(f"unknown query variable {query!r}")
    for var in evidence.variables():
        if var not in bn.variables:
            raise KeyError(f"unknown evidence variable {var!r}")

    states = bn.variable(query).states
    if query in evidence.hard:
        # the query is pinned; its posterior is the indicator, scaled by P(e)
        sub = EvidenceSet(
            hard={k: v for k, v in evidence.hard.items() if k != query},
            soft=evidence.soft,
        )
        post = posterior(bn, query, sub)
        idx = bn.variable(query).state_index(evidence.hard[query])
        p_state = float(post.probabilities[idx])
        if p_state <= 0.0:
            raise ImpossibleEvidenceError(
                f"evidence assigns probability 0 (variable {query!r})"
            )
        point = np.zeros(len(states))
        point[idx] = 1.0
        return Posterior(query, states, point, post.evidence_probability * p_state)

    factors = _network_factors(bn)
    factors = _apply_evidence(bn, factors, evidence)

    all_vars = set().union(*(set(f.scope) for f in factors)) if factors else set()
    eliminate = all_vars - {query}
    order = _min_fill_order([set(f.scope) for f in factors], eliminate)
    remaining = _eliminate(factors, order)

    result = remaining[0]
    for f in remaining[1:]:
        result = factor_multiply(result, f)
    # every non-query variable was eliminated, so only the query scope is left
    assert result.scope == (query,), result.scope

    z = float(result.values.sum())
    if z <= 0.0 or not math.isfinite(z):
        raise ImpossibleEvidenceError("evidence assigns probability 0 under this model")
    return Posterior(query, states, result.values / z, z)


def map_state(
    bn: BayesianNetwork, query: str, evidence: EvidenceSet | None = None
) -> str:
    """argmax of the posterior; ties resolve to the lowest state index."""
    return posterior(bn, query, evidence).map_state()


# ---------------------------------------------------------------------------
# brute-force oracle


def enumerate_joint(bn: BayesianNetwork, limit: int = ENUMERATION_STATE_LIMIT) -> Factor:
    """The full joint as one factor over every node, by direct enumeration.

    Builds the assignment grid and gathers each node's conditional
    probability with table indexing, multiplying across nodes.  This path
    never touches Factor algebra or elimination, so it can arbitrate them.
    """
    n_states = bn.joint_state_count()
    if n_states > limit:
        raise ValueError(
            f"joint has {n_states} states, above the enumeration limit {limit}"
        )
    scope = bn.nodes
    cards = tuple(bn.cardinality(n) for n in scope)
    grid = np.indices(cards)  # (n_nodes, *cards) of state indices
    pos = {n: i for i, n in enumerate(scope)}

    values = np.ones(cards)
    for node in scope:
        table = tabular(bn, node)  # noisy-MAX arrives pre-expanded
        cards_nd = bn.parent_cards(node) + (bn.cardinality(node),)
        arr = table.rows.reshape(cards_nd)
        index = tuple(grid[pos[p]] for p in table.parents) + (grid[pos[node]],)
        values = values * arr[index]
    return Factor(scope, cards, values)


def posterior_by_enumeration(
    bn: BayesianNetwork,
    query: str,
    evidence: EvidenceSet | None = None,
    limit: int = ENUMERATION_STATE_LIMIT,
) -> Posterior:
    """Oracle twin of posterior(): condition the enumerated joint directly."""
    evidence = evidence or EvidenceSet()
    joint = enumerate_joint(bn, limit=limit)
    values = joint.values

    for var, label in evidence.hard.items():
        axis = joint.scope.index(var)
        state = bn.variable(var).state_index(label)
        keep = np.zeros(bn.cardinality(var))
        keep[state] = 1.0
        shape = [1] * values.ndim
        shape[axis] = bn.cardinality(var)
        values = values * keep.reshape(shape)
    for var, likelihood in evidence.soft.items():
        axis = joint.scope.index(var)
        vec = np.asarray(likelihood, dtype=float)
        vec = vec / vec.max()
        shape = [1] * values.ndim
        shape[axis] = bn.cardinality(var)
        values = values * vec.reshape(shape)

    axis = joint.scope.index(query)
    others = tuple(i for i in range(values.ndim) if i != axis)
    marginal = values.sum(axis=others)
    z = float(marginal.sum())
    if z <= 0.0:
        raise ImpossibleEvidenceError("evidence assigns probability 0 under this model")
    return Posterior(query, bn.variable(query).states, marginal / z, z)
