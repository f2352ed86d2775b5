"""Shared fixtures: small hand-built networks and a random-network generator."""

import numpy as np
import pytest

from cloudbn import Cpt, NoisyMaxCpd, Variable, network


@pytest.fixture
def chain_bn():
    """a -> b -> c, all binary, with easily hand-checked numbers."""
    a = Variable("a", ("a0", "a1"))
    b = Variable("b", ("b0", "b1"))
    c = Variable("c", ("c0", "c1"))
    return network(
        [a, b, c],
        {"b": ("a",), "c": ("b",)},
        {
            "a": Cpt("a", (), np.array([[0.6, 0.4]])),
            "b": Cpt("b", ("a",), np.array([[0.7, 0.3], [0.2, 0.8]])),
            "c": Cpt("c", ("b",), np.array([[0.9, 0.1], [0.4, 0.6]])),
        },
    )


@pytest.fixture
def collider_bn():
    """a -> c <- b with a ternary child; exercises multi-parent row order."""
    a = Variable("a", ("a0", "a1"))
    b = Variable("b", ("b0", "b1", "b2"))
    c = Variable("c", ("c0", "c1", "c2"))
    rows = np.array(
        [
            [0.5, 0.3, 0.2],
            [0.1, 0.1, 0.8],
            [0.3, 0.3, 0.4],
            [0.25, 0.5, 0.25],
            [0.6, 0.2, 0.2],
            [0.05, 0.05, 0.9],
        ]
    )
    return network(
        [a, b, c],
        {"c": ("a", "b")},
        {
            "a": Cpt("a", (), np.array([[0.45, 0.55]])),
            "b": Cpt("b", (), np.array([[0.2, 0.5, 0.3]])),
            "c": Cpt("c", ("a", "b"), rows),
        },
    )


@pytest.fixture
def noisy_or_bn():
    """Two binary causes feeding a binary noisy-OR effect.

    With both causes active: P(effect) = 1 - (1-0.6)(1-0.8)(1-0.75) = 0.98.
    """
    c1 = Variable("c1", ("off", "on"))
    c2 = Variable("c2", ("off", "on"))
    e = Variable("e", ("absent", "present"))
    cpd = NoisyMaxCpd(
        child="e",
        parents=("c1", "c2"),
        link_params={
            "c1": np.array([[1.0, 0.0], [0.4, 0.6]]),
            "c2": np.array([[1.0, 0.0], [0.2, 0.8]]),
        },
        leak=np.array([0.25, 0.75]),
    )
    return network(
        [c1, c2, e],
        {"e": ("c1", "c2")},
        {
            "c1": Cpt("c1", (), np.array([[0.5, 0.5]])),
            "c2": Cpt("c2", (), np.array([[0.3, 0.7]])),
            "e": cpd,
        },
    )


def random_network(rng, n_nodes=None, max_states=5):
    """Random DAG over a random topological order with Dirichlet CPT rows."""
    if n_nodes is None:
        n_nodes = int(rng.integers(3, 11))
    names = [f"v{i}" for i in range(n_nodes)]
    order = rng.permutation(n_nodes)
    cards = rng.integers(2, max_states + 1, size=n_nodes)
    variables = [
        Variable(names[i], tuple(f"s{k}" for k in range(cards[i]))) for i in range(n_nodes)
    ]
    parent_map = {}
    cpds = {}
    for pos, i in enumerate(order):
        pool = [int(j) for j in order[:pos]]
        n_par = int(rng.integers(0, min(len(pool), 3) + 1))
        chosen = sorted(rng.choice(pool, size=n_par, replace=False).tolist()) if n_par else []
        parents = tuple(names[j] for j in chosen)
        if parents:
            parent_map[names[i]] = parents
        n_rows = int(np.prod([cards[j] for j in chosen])) if chosen else 1
        rows = rng.dirichlet(np.ones(cards[i]), size=n_rows)
        cpds[names[i]] = Cpt(names[i], parents, rows)
    return network(variables, parent_map, cpds)


def random_evidence(rng, bn, p_hard=0.25, p_soft=0.15, exclude=()):
    """Random mix of hard states and soft likelihood vectors."""
    hard = {}
    soft = {}
    for name, var in bn.variables.items():
        if name in exclude:
            continue
        u = rng.random()
        if u < p_hard:
            hard[name] = var.states[int(rng.integers(var.cardinality))]
        elif u < p_hard + p_soft:
            vec = rng.random(var.cardinality) + 0.05
            soft[name] = vec.tolist()
    return hard, soft
