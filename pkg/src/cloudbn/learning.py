"""Parameter learning for discrete Bayesian networks.

learn_mle counts fully observed families; learn_em handles missing cells by
expectation-maximization, where the E-step conditions the exact joint on
each record's observed cells and accumulates expected family counts, and
the M-step re-estimates every CPT row from those counts (with optional
Laplace smoothing).

The E-step is vectorized by missingness pattern: records sharing the same
set of missing variables are processed as one batch, slicing the full joint
table with their observed codes in a single advanced-indexing gather.  This
keeps EM usable at 50k records without per-record Python loops.  Records
whose family is fully observed contribute fixed counts that are accumulated
once, outside the iteration loop.

Networks with noisy-MAX children take a dedicated EM with a closed-form
E-step over the per-cause effect decomposition; see _learn_noisy_em.  That
path supports the converging layout only (noisy children whose parents are
all roots); other noisy hybrids are rejected.

The returned trace holds the objective actually being maximized: the data
log-likelihood when smoothing_pseudocount is 0, and the penalized
log-likelihood (data term plus pseudocount * sum of log parameters) when it
is positive.  Either way the trace is non-decreasing.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .dataset import MISSING, Dataset, Schema
from .network import (
    BayesianNetwork,
    Cpt,
    NoisyMaxCpd,
    tabular,
)

logger = logging.getLogger(__name__)

# learn_em and log_likelihood materialize the joint; refuse absurd networks
JOINT_TABLE_LIMIT = 1 << 24


@dataclass
class EmConfig:
    max_iterations: int = 200
    log_likelihood_tolerance: float = 1e-6
    smoothing_pseudocount: float = 1.0
    seed: int = 0
    random_restarts: int = 0

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.log_likelihood_tolerance <= 0:
            raise ValueError("log_likelihood_tolerance must be > 0")
        if self.smoothing_pseudocount < 0:
            raise ValueError("smoothing_pseudocount must be >= 0")


@dataclass
class SufficientStats:
    """Expected family counts from one E-step.

    counts[node] is the flat (parent configs * child card) expected count
    table in the node's CPT layout; total_weight is the record count that
    produced it.
    """

    counts: dict[str, np.ndarray] = field(default_factory=dict)
    total_weight: float = 0.0


def _require_schema_cover(bn: BayesianNetwork, schema: Schema) -> None:
    for node in bn.nodes:
        if node not in schema.states:
            raise KeyError(f"network variable {node!r} absent from dataset schema")
        if schema.states[node] != bn.variable(node).states:
            raise ValueError(
                f"state labels for {node!r} differ between network and dataset"
            )


def _family_strides(bn: BayesianNetwork, node: str) -> tuple[tuple[str, ...], dict[str, int], int]:
    """Family variable order, per-variable flat stride, and flat table size."""
    fam = bn.parents(node) + (node,)
    cards = [bn.cardinality(v) for v in fam]
    strides: dict[str, int] = {}
    acc = 1
    for v, c in zip(reversed(fam), reversed(cards)):
        strides[v] = acc
        acc *= c
    return fam, strides, acc


def _rows_from_counts(
    counts: np.ndarray, card: int, pseudocount: float
) -> np.ndarray:
    """M-step: normalize count rows with smoothing; empty rows become uniform."""
    table = counts.reshape(-1, card) + pseudocount
    totals = table.sum(axis=1, keepdims=True)
    rows = np.where(totals > 0, table / np.where(totals > 0, totals, 1.0), 1.0 / card)
    return rows


def learn_mle(
    bn: BayesianNetwork, data: Dataset, pseudocount: float = 0.0
) -> BayesianNetwork:
    """Closed-form CPT estimation from observed family counts.

    Each CPT row becomes (count + pseudocount) / (total + pseudocount *
    cardinality); a row with zero total and zero pseudocount falls back to
    uniform.  A record contributes to a family only when the child and all
    its parents are observed in that record.
    """
    _require_schema_cover(bn, data.schema)
    new_cpds: dict[str, Cpt | NoisyMaxCpd] = {}
    for node in bn.nodes:
        if isinstance(bn.cpds[node], NoisyMaxCpd):
            raise ValueError(
                f"{node}: noisy-MAX parameters have no closed-form estimate; use learn_em"
            )
        fam, strides, size = _family_strides(bn, node)
        cols = np.stack([data.column(v) for v in fam], axis=1)
        observed = np.all(cols != MISSING, axis=1)
        flat = np.zeros(size)
        if np.any(observed):
            obs = cols[observed].astype(np.int64)
            index = sum(obs[:, j] * strides[v] for j, v in enumerate(fam))
            np.add.at(flat, index, 1.0)
        rows = _rows_from_counts(flat, bn.cardinality(node), pseudocount)
        new_cpds[node] = Cpt(child=node, parents=bn.parents(node), rows=rows)
    return BayesianNetwork(variables=bn.variables, dag=bn.dag, cpds=new_cpds)


# ---------------------------------------------------------------------------
# joint-table machinery shared by EM and log_likelihood


def _joint_table(bn: BayesianNetwork, cpds: dict[str, Cpt]) -> np.ndarray:
    """Full joint over bn.nodes (C-order axes) from the given CPT set."""
    cards = tuple(bn.cardinality(n) for n in bn.nodes)
    pos = {n: i for i, n in enumerate(bn.nodes)}
    joint = np.ones(cards)
    for node in bn.nodes:
        cpt = cpds[node]
        fam = cpt.parents + (node,)
        fam_cards = tuple(bn.cardinality(v) for v in fam)
        arr = cpt.rows.reshape(fam_cards)
        # permute family axes into global node order, pad the rest with 1s
        order = sorted(range(len(fam)), key=lambda j: pos[fam[j]])
        arr = np.transpose(arr, order)
        shape = [1] * len(cards)
        for j in order:
            shape[pos[fam[j]]] = fam_cards[j]
        joint = joint * arr.reshape(shape)
    return joint


def _mask_groups(codes: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
    """Partition record indices by their missing-variable pattern."""
    missing = codes == MISSING
    patterns, inverse = np.unique(missing, axis=0, return_inverse=True)
    groups = []
    for g in range(patterns.shape[0]):
        rows = np.nonzero(inverse == g)[0]
        groups.append((patterns[g], rows))
    return groups


def _conditional_blocks(
    joint: np.ndarray, codes: np.ndarray, pattern: np.ndarray, rows: np.ndarray
) -> tuple[np.ndarray, np.ndarray, list[int]]:
    """Per-record slices of the joint at observed codes.

    Returns (block, z, miss_axes): block has shape (len(rows), *missing
    cards) holding the unnormalized joint over the missing variables, z the
    per-record observed-evidence probability.
    """
    n_vars = codes.shape[1]
    miss_axes = [d for d in range(n_vars) if pattern[d]]
    obs_axes = [d for d in range(n_vars) if not pattern[d]]
    g = len(rows)
    if not obs_axes:
        block = np.broadcast_to(joint, (g,) + joint.shape)
    else:
        index: list[np.ndarray] = []
        n_miss = len(miss_axes)
        obs_shape = (g,) + (1,) * n_miss
        for d in range(n_vars):
            if pattern[d]:
                k = miss_axes.index(d)
                shape = [1] * (n_miss + 1)
                shape[k + 1] = joint.shape[d]
                index.append(np.arange(joint.shape[d]).reshape(shape))
            else:
                index.append(codes[rows, d].astype(np.int64).reshape(obs_shape))
        block = joint[tuple(index)]
    z = block.reshape(g, -1).sum(axis=1)
    return block, z, miss_axes


def log_likelihood(bn: BayesianNetwork, data: Dataset) -> float:
    """Sum over records of log P(observed cells), missing cells marginalized.

    A record with zero probability contributes -inf; its index is logged.
    Cells for variables outside the network are ignored.
    """
    _require_schema_cover(bn, data.schema)
    if bn.joint_state_count() > JOINT_TABLE_LIMIT:
        raise ValueError("network joint too large to evaluate exactly")
    cpds = {n: tabular(bn, n) for n in bn.nodes}
    joint = _joint_table(bn, cpds)
    codes = np.stack([data.column(n) for n in bn.nodes], axis=1)

    total = 0.0
    for pattern, rows in _mask_groups(codes):
        _, z, _ = _conditional_blocks(joint, codes, pattern, rows)
        zero = z <= 0.0
        if np.any(zero):
            for i in rows[zero]:
                logger.warning("record %d has probability 0 under the model", int(i))
            total = -np.inf
            if np.all(zero):
                continue
        with np.errstate(divide="ignore"):
            total += float(np.log(z[~zero]).sum()) if np.any(~zero) else 0.0
    return total


# ---------------------------------------------------------------------------
# EM for CPT networks


@dataclass
class _FamilyPlan:
    node: str
    fam: tuple[str, ...]
    strides: dict[str, int]
    size: int
    static_counts: np.ndarray  # from records with the family fully observed


def _family_plans(bn: BayesianNetwork, codes: np.ndarray) -> list[_FamilyPlan]:
    pos = {n: i for i, n in enumerate(bn.nodes)}
    plans = []
    for node in bn.nodes:
        fam, strides, size = _family_strides(bn, node)
        cols = codes[:, [pos[v] for v in fam]]
        observed = np.all(cols != MISSING, axis=1)
        static = np.zeros(size)
        if np.any(observed):
            obs = cols[observed].astype(np.int64)
            index = sum(obs[:, j] * strides[v] for j, v in enumerate(fam))
            np.add.at(static, index, 1.0)
        plans.append(_FamilyPlan(node, fam, strides, size, static))
    return plans


def _e_step(
    bn: BayesianNetwork,
    cpds: dict[str, Cpt],
    codes: np.ndarray,
    groups: list[tuple[np.ndarray, np.ndarray]],
    plans: list[_FamilyPlan],
) -> tuple[SufficientStats, float]:
    """Expected family counts and the data log-likelihood at the current CPTs."""
    pos = {n: i for i, n in enumerate(bn.nodes)}
    joint = _joint_table(bn, cpds)
    stats = SufficientStats(
        counts={p.node: p.static_counts.copy() for p in plans},
        total_weight=float(codes.shape[0]),
    )
    ll = 0.0
    for pattern, rows in groups:
        block, z, miss_axes = _conditional_blocks(joint, codes, pattern, rows)
        if np.any(z <= 0.0):
            bad = int(rows[np.argmax(z <= 0.0)])
            raise ValueError(
                f"record {bad}: observed cells have probability 0 under the current"
                " parameters; raise smoothing_pseudocount"
            )
        ll += float(np.log(z).sum())
        if not miss_axes:
            continue  # fully observed records were counted statically
        w = block / z.reshape((-1,) + (1,) * (block.ndim - 1))
        miss_vars = [bn.nodes[d] for d in miss_axes]
        for plan in plans:
            fam_missing = [v for v in miss_vars if v in plan.fam]
            if not fam_missing:
                continue  # family observed: already in static_counts
            drop = tuple(
                1 + k for k, v in enumerate(miss_vars) if v not in plan.fam
            )
            margin = w.sum(axis=drop) if drop else w
            base = np.zeros(len(rows), dtype=np.int64)
            for v in plan.fam:
                if v not in fam_missing:
                    base += codes[rows, pos[v]].astype(np.int64) * plan.strides[v]
            offset = np.zeros((1,) * len(fam_missing), dtype=np.int64)
            for k, v in enumerate(fam_missing):
                shape = [1] * len(fam_missing)
                shape[k] = bn.cardinality(v)
                offset = offset + np.arange(bn.cardinality(v)).reshape(shape) * plan.strides[v]
            flat_index = base.reshape((-1,) + (1,) * len(fam_missing)) + offset[None]
            np.add.at(stats.counts[plan.node], flat_index, margin)
    return stats, ll


def _m_step(
    bn: BayesianNetwork, stats: SufficientStats, pseudocount: float
) -> dict[str, Cpt]:
    cpds = {}
    for node in bn.nodes:
        rows = _rows_from_counts(stats.counts[node], bn.cardinality(node), pseudocount)
        cpds[node] = Cpt(child=node, parents=bn.parents(node), rows=rows)
    return cpds


def _log_prior(cpds: dict[str, Cpt], pseudocount: float) -> float:
    if pseudocount == 0.0:
        return 0.0
    total = 0.0
    for cpt in cpds.values():
        total += float(np.log(cpt.rows).sum())
    return pseudocount * total


def _uniform_cpds(bn: BayesianNetwork) -> dict[str, Cpt]:
    cpds = {}
    for node in bn.nodes:
        n_rows = int(np.prod([bn.cardinality(p) for p in bn.parents(node)], dtype=np.int64)) if bn.parents(node) else 1
        card = bn.cardinality(node)
        rows = np.full((n_rows, card), 1.0 / card)
        cpds[node] = Cpt(child=node, parents=bn.parents(node), rows=rows)
    return cpds


def _random_cpds(bn: BayesianNetwork, rng: np.random.Generator) -> dict[str, Cpt]:
    cpds = {}
    for node in bn.nodes:
        n_rows = int(np.prod([bn.cardinality(p) for p in bn.parents(node)], dtype=np.int64)) if bn.parents(node) else 1
        card = bn.cardinality(node)
        rows = rng.dirichlet(np.ones(card), size=n_rows)
        cpds[node] = Cpt(child=node, parents=bn.parents(node), rows=rows)
    return cpds


def _run_em(
    bn: BayesianNetwork,
    codes: np.ndarray,
    groups: list[tuple[np.ndarray, np.ndarray]],
    plans: list[_FamilyPlan],
    init: dict[str, Cpt],
    cfg: EmConfig,
) -> tuple[dict[str, Cpt], list[float]]:
    cpds = init
    trace: list[float] = []
    p = cfg.smoothing_pseudocount
    for _ in range(cfg.max_iterations):
        stats, ll = _e_step(bn, cpds, codes, groups, plans)
        objective = ll + _log_prior(cpds, p)
        trace.append(objective)
        if len(trace) >= 2 and abs(trace[-1] - trace[-2]) < cfg.log_likelihood_tolerance:
            break
        cpds = _m_step(bn, stats, p)
    return cpds, trace


def learn_em(
    bn: BayesianNetwork, data: Dataset, cfg: EmConfig | None = None
) -> tuple[BayesianNetwork, list[float]]:
    """EM parameter estimation under arbitrarily missing cells.

    Returns the fitted network and the objective trace (one entry per
    iteration, evaluated before that iteration's M-step).  On fully observed
    data the first M-step already lands on the learn_mle estimate, so the
    result matches learn_mle with the same pseudocount exactly.
    """
    cfg = cfg or EmConfig()
    _require_schema_cover(bn, data.schema)
    if any(isinstance(c, NoisyMaxCpd) for c in bn.cpds.values()):
        return _learn_noisy_em(bn, data, cfg)
    if bn.joint_state_count() > JOINT_TABLE_LIMIT:
        raise ValueError("network joint too large for exact EM")
    for node in bn.nodes:
        if not np.any(data.column(node) != MISSING):
            raise ValueError(f"variable {node!r} has no observed cell in the dataset")

    codes = np.stack([data.column(n) for n in bn.nodes], axis=1)
    groups = _mask_groups(codes)
    plans = _family_plans(bn, codes)

    best: tuple[dict[str, Cpt], list[float]] | None = None
    rng = np.random.default_rng(cfg.seed)
    for attempt in range(1 + cfg.random_restarts):
        init = _uniform_cpds(bn) if attempt == 0 else _random_cpds(bn, rng)
        cpds, trace = _run_em(bn, codes, groups, plans, init, cfg)
        if best is None or trace[-1] > best[1][-1]:
            best = (cpds, trace)
    assert best is not None
    fitted = BayesianNetwork(variables=bn.variables, dag=bn.dag, cpds=best[0])
    return fitted, best[1]


# ---------------------------------------------------------------------------
# EM for converging noisy-MAX networks


def _noisy_layout(bn: BayesianNetwork) -> list[str]:
    """Noisy children, verifying the supported shape: parents are all roots."""
    noisy = [n for n in bn.nodes if isinstance(bn.cpds[n], NoisyMaxCpd)]
    for n in bn.nodes:
        if n in noisy:
            if any(bn.parents(p) for p in bn.parents(n)):
                raise ValueError(
                    f"{n}: EM supports noisy-MAX children of root variables only"
                )
        elif bn.parents(n):
            raise ValueError(
                f"{n}: networks mixing noisy-MAX with non-root CPT families are"
                " not supported by EM"
            )
    return noisy


def _baseline_states(column: np.ndarray, card: int) -> int:
    observed = column[column != MISSING]
    if observed.size == 0:
        return 0
    return int(np.bincount(observed, minlength=card).argmax())


def _init_effect_rows(
    y: np.ndarray,
    cause_codes: np.ndarray,
    cause: int,
    card: int,
    k_child: int,
    baselines: np.ndarray,
    pseudocount: float,
) -> np.ndarray:
    """Empirical child distribution per cause state, others held at baseline.

    Falls back to the unconditional-on-others empirical distribution when
    fewer than 5 such records exist; this is only an EM starting point.
    """
    smooth = max(pseudocount, 1.0)
    others = np.delete(np.arange(cause_codes.shape[1]), cause)
    at_base = np.all(cause_codes[:, others] == baselines[others], axis=1)
    rows = np.empty((card, k_child))
    for s in range(card):
        match = at_base & (cause_codes[:, cause] == s)
        if match.sum() < 5:
            match = cause_codes[:, cause] == s
        counts = np.bincount(y[match], minlength=k_child).astype(float)
        rows[s] = (counts + smooth) / (counts.sum() + smooth * k_child)
    return rows


def _noisy_family_em(
    cpd: NoisyMaxCpd,
    parent_cards: tuple[int, ...],
    cause_codes: np.ndarray,
    y: np.ndarray,
    cfg: EmConfig,
) -> tuple[NoisyMaxCpd, list[float]]:
    """Closed-form EM over the per-cause effect decomposition.

    For a record with child state v and cause effects E_i, P(E_i = e, child
    = v) factorizes through cumulative link products; leave-one-out prefix
    and suffix products give every cause's posterior in one vectorized pass.
    The designated off state of each cause stays clamped to the degenerate
    effect (its rows receive counts that are simply discarded).
    """
    k = cpd.child_cardinality
    n_causes = len(cpd.parents)
    p = cfg.smoothing_pseudocount
    offs = np.array([cpd.off_states[cpd.parents[i]] for i in range(n_causes)])
    # baselines pick which records seed the estimates; the off-state
    # designation itself belongs to the model and is kept as declared
    baselines = np.array(
        [_baseline_states(cause_codes[:, i], parent_cards[i]) for i in range(n_causes)]
    )

    links = [
        _init_effect_rows(y, cause_codes, i, parent_cards[i], k, baselines, p)
        for i in range(n_causes)
    ]
    for i in range(n_causes):
        links[i][offs[i]] = 0.0
        links[i][offs[i], 0] = 1.0
    base_rows = np.all(cause_codes == baselines, axis=1)
    smooth = max(p, 1.0)
    leak_counts = np.bincount(y[base_rows], minlength=k).astype(float)
    leak = (leak_counts + smooth) / (leak_counts.sum() + smooth * k)

    r = len(y)
    yi = y.astype(np.int64)
    trace: list[float] = []
    for _ in range(cfg.max_iterations):
        # per-cause cumulative effect probabilities at y and y-1
        q_rows = [links[i][cause_codes[:, i]] for i in range(n_causes)]  # (r, k) each
        q_rows.append(np.broadcast_to(leak, (r, k)))
        cum = [np.cumsum(qr, axis=1) for qr in q_rows]
        q_at_y = np.stack([c[np.arange(r), yi] for c in cum])  # (n+1, r)
        below = np.where(yi > 0, yi - 1, 0)
        q_below = np.stack(
            [np.where(yi > 0, c[np.arange(r), below], 0.0) for c in cum]
        )

        prefix_y = np.vstack([np.ones(r), np.cumprod(q_at_y, axis=0)])
        suffix_y = np.vstack([np.cumprod(q_at_y[::-1], axis=0)[::-1], np.ones(r)])
        prefix_b = np.vstack([np.ones(r), np.cumprod(q_below, axis=0)])
        suffix_b = np.vstack([np.cumprod(q_below[::-1], axis=0)[::-1], np.ones(r)])
        p_full = prefix_y[-1] - prefix_b[-1]  # P(child = y | causes)
        if np.any(p_full <= 0.0):
            bad = int(np.argmax(p_full <= 0.0))
            raise ValueError(
                f"record {bad}: child state has probability 0 under the current"
                " noisy-MAX parameters; raise smoothing_pseudocount"
            )

        objective = float(np.log(p_full).sum())
        if p > 0:
            free = sum(
                float(np.log(links[i][s]).sum())
                for i in range(n_causes)
                for s in range(parent_cards[i])
                if s != offs[i]
            ) + float(np.log(leak).sum())
            objective += p * free
        trace.append(objective)
        if len(trace) >= 2 and abs(trace[-1] - trace[-2]) < cfg.log_likelihood_tolerance:
            break

        states = np.arange(k)[None, :]
        le_mask = states <= yi[:, None]
        lt_mask = states < yi[:, None]
        new_links = []
        new_leak = None
        for i in range(n_causes + 1):
            loo_y = prefix_y[i] * suffix_y[i + 1]  # product over causes != i
            loo_b = prefix_b[i] * suffix_b[i + 1]
            qr = q_rows[i]
            w = qr * (loo_y[:, None] * le_mask - loo_b[:, None] * lt_mask)
            w /= p_full[:, None]
            if i < n_causes:
                counts = np.zeros((parent_cards[i], k))
                np.add.at(counts, cause_codes[:, i], w)
                rows = (counts + p) / (counts.sum(axis=1, keepdims=True) + p * k)
                rows[offs[i]] = 0.0
                rows[offs[i], 0] = 1.0
                new_links.append(rows)
            else:
                counts = w.sum(axis=0)
                new_leak = (counts + p) / (counts.sum() + p * k)
        links = new_links
        leak = new_leak

    fitted = NoisyMaxCpd(
        child=cpd.child,
        parents=cpd.parents,
        link_params={cpd.parents[i]: links[i] for i in range(n_causes)},
        leak=leak,
        off_states=dict(cpd.off_states),
    )
    return fitted, trace


def _learn_noisy_em(
    bn: BayesianNetwork, data: Dataset, cfg: EmConfig
) -> tuple[BayesianNetwork, list[float]]:
    """Two-stage fit for converging noisy-MAX networks.

    Root marginals come from their observed cells in closed form; each
    noisy child then runs the closed-form EM over records where the child
    and all causes are observed.  The returned trace is the (penalized)
    conditional log-likelihood of the noisy families, the only part EM
    iterates on.
    """
    noisy = _noisy_layout(bn)
    pos = {n: i for i, n in enumerate(bn.nodes)}
    codes = np.stack([data.column(n) for n in bn.nodes], axis=1)

    new_cpds: dict[str, Cpt | NoisyMaxCpd] = {}
    for node in bn.nodes:
        if node in noisy:
            continue
        col = codes[:, pos[node]]
        observed = col[col != MISSING]
        counts = np.bincount(observed, minlength=bn.cardinality(node)).astype(float)
        rows = _rows_from_counts(counts, bn.cardinality(node), cfg.smoothing_pseudocount)
        new_cpds[node] = Cpt(child=node, parents=(), rows=rows)

    trace: list[float] = []
    for node in noisy:
        cpd = bn.cpds[node]
        assert isinstance(cpd, NoisyMaxCpd)
        fam_cols = [pos[parent] for parent in cpd.parents] + [pos[node]]
        usable = np.all(codes[:, fam_cols] != MISSING, axis=1)
        skipped = int((~usable).sum())
        if skipped:
            logger.info(
                "%s: %d records missing a cause or the child are excluded from"
                " noisy-MAX estimation",
                node,
                skipped,
            )
        if not np.any(usable):
            raise ValueError(f"{node}: no record observes the child and all causes")
        cause_codes = codes[np.ix_(usable, fam_cols[:-1])].astype(np.int64)
        y = codes[usable, pos[node]].astype(np.int64)
        fitted, fam_trace = _noisy_family_em(
            cpd, tuple(bn.cardinality(parent) for parent in cpd.parents), cause_codes, y, cfg
        )
        new_cpds[node] = fitted
        trace = fam_trace if not trace else [a + b for a, b in zip(trace, fam_trace)]

    network = BayesianNetwork(variables=bn.variables, dag=bn.dag, cpds=new_cpds)
    return network, trace


def predict_posteriors(bn: BayesianNetwork, data: Dataset, query: str) -> np.ndarray:
    """P(query | record's other observed cells) for every record, batched.

    Returns an array of shape (n_records, query cardinality).  Shares the
    grouped joint-slicing machinery with EM, so thousands of records cost a
    handful of table gathers instead of one elimination each.  Tests verify
    it against the single-record inference path.
    """
    _require_schema_cover(bn, data.schema)
    if bn.joint_state_count() > JOINT_TABLE_LIMIT:
        raise ValueError("network joint too large to evaluate exactly")
    cpds = {n: tabular(bn, n) for n in bn.nodes}
    joint = _joint_table(bn, cpds)
    codes = np.stack([data.column(n) for n in bn.nodes], axis=1)
    q = bn.nodes.index(query)
    codes[:, q] = MISSING  # the query is never evidence for itself

    out = np.empty((codes.shape[0], bn.cardinality(query)))
    for pattern, rows in _mask_groups(codes):
        block, z, miss_axes = _conditional_blocks(joint, codes, pattern, rows)
        if np.any(z <= 0.0):
            bad = int(rows[np.argmax(z <= 0.0)])
            raise ValueError(f"record {bad}: observed cells have probability 0")
        keep = 1 + miss_axes.index(q)
        drop = tuple(ax for ax in range(1, block.ndim) if ax != keep)
        marginal = block.sum(axis=drop) if drop else block
        out[rows] = marginal / z[:, None]
    return out


# ---------------------------------------------------------------------------
# sampling (planted-model tests and synthetic pipelines)


def sample_dataset(bn: BayesianNetwork, n: int, seed: int = 0) -> Dataset:
    """Draw n records by ancestral sampling in topological order."""
    order = bn.dag.topological_order()
    if order is None:
        raise ValueError("network has a cycle")
    rng = np.random.default_rng(seed)
    pos = {node: i for i, node in enumerate(bn.nodes)}
    codes = np.empty((n, len(bn.nodes)), dtype=np.int16)
    for node in order:
        cpt = tabular(bn, node)
        if cpt.parents:
            parent_cards = bn.parent_cards(node)
            cfg = np.ravel_multi_index(
                tuple(codes[:, pos[parent]].astype(np.int64) for parent in cpt.parents),
                parent_cards,
            )
            probs = cpt.rows[cfg]
        else:
            probs = np.broadcast_to(cpt.rows[0], (n, bn.cardinality(node)))
        cum = np.cumsum(probs, axis=1)
        u = rng.random(n)
        codes[:, pos[node]] = (u[:, None] > cum).sum(axis=1).astype(np.int16)
    schema = Schema(bn.nodes, {v: bn.variable(v).states for v in bn.nodes})
    return Dataset(schema, codes)


def erase_cells(data: Dataset, fraction: float, seed: int = 0) -> Dataset:
    """Erase a uniformly random fraction of cells (missing-completely-at-random)."""
    rng = np.random.default_rng(seed)
    codes = data.codes.copy()
    mask = rng.random(codes.shape) < fraction
    codes[mask] = MISSING
    return Dataset(data.schema, codes)
