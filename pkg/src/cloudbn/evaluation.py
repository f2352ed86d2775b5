"""k-fold cross-validated QoS-state prediction.

Records are shuffled once per seed and dealt round-robin into k folds.
Each fold's model is trained by EM on the other folds (the feature tree of
a tan structure is likewise rebuilt per fold from training data only), then
every test record with an observed class cell is scored by comparing the
MAP class state given its observed feature cells.  Records missing the
class cell still train the model but are never scored.

Reported accuracy is trace(confusion) / sum(confusion), i.e. pooled over
folds; per-fold accuracies and their unweighted mean ride along.  Because
a single score (mean over cells, mean over benchmarks, or record-weighted
mean) is ambiguous when summarizing a structure-by-benchmark grid, the
aggregate() helper returns all three.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .dataset import MISSING, Dataset, Schema
from .learning import EmConfig, learn_em, predict_posteriors
from .structures import StructureSpec, build_structure

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FoldPlan:
    k: int
    seed: int
    assignment: np.ndarray  # record index -> fold id

    def fold_indices(self, fold: int) -> np.ndarray:
        return np.nonzero(self.assignment == fold)[0]

    def complement_indices(self, fold: int) -> np.ndarray:
        return np.nonzero(self.assignment != fold)[0]


def make_folds(n: int, k: int, seed: int) -> FoldPlan:
    """Seeded shuffle, then round-robin deal; fold sizes differ by at most 1."""
    if k < 1 or k > n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    assignment = np.empty(n, dtype=np.int64)
    assignment[order] = np.arange(n) % k
    assignment.flags.writeable = False
    return FoldPlan(k=k, seed=seed, assignment=assignment)


@dataclass
class EvalReport:
    structure: str
    class_variable: str
    class_states: tuple[str, ...]
    k: int
    seed: int
    accuracy: float
    fold_accuracies: list[float]
    confusion: np.ndarray  # rows true state, columns predicted
    n_scored: int
    benchmark: str | None = None
    notices: list[str] = field(default_factory=list)

    @property
    def mean_fold_accuracy(self) -> float:
        return float(np.mean(self.fold_accuracies)) if self.fold_accuracies else 0.0

    def to_dict(self) -> dict:
        return {
            "structure": self.structure,
            "benchmark": self.benchmark,
            "class_variable": self.class_variable,
            "class_states": list(self.class_states),
            "k": self.k,
            "seed": self.seed,
            "accuracy": self.accuracy,
            "fold_accuracies": self.fold_accuracies,
            "mean_fold_accuracy": self.mean_fold_accuracy,
            "confusion": self.confusion.tolist(),
            "n_scored": self.n_scored,
            "notices": self.notices,
        }


def cross_validate(
    spec: StructureSpec,
    data: Dataset,
    k: int = 10,
    seed: int = 0,
    cfg: EmConfig | None = None,
) -> EvalReport:
    """Train/test over k folds and score exact class-state matches."""
    if len(data) == 0:
        raise ValueError("empty dataset")
    cfg = cfg or EmConfig()
    cls = spec.class_variable
    card = data.schema.cardinality(cls)
    plan = make_folds(len(data), k, seed)
    class_codes = data.column(cls)

    confusion = np.zeros((card, card), dtype=np.int64)
    fold_accuracies: list[float] = []
    notices: list[str] = []
    for fold in range(k):
        test_idx = plan.fold_indices(fold)
        scored_idx = test_idx[class_codes[test_idx] != MISSING]
        if scored_idx.size == 0:
            notice = f"fold {fold}: no observed class value, skipped"
            logger.warning(notice)
            notices.append(notice)
            continue
        train = data.subset(plan.complement_indices(fold))
        skeleton = build_structure(spec, data.schema, train)
        bn, _ = learn_em(skeleton, train, cfg)

        posteriors = predict_posteriors(bn, data.subset(scored_idx), cls)
        predicted = posteriors.argmax(axis=1)
        true = class_codes[scored_idx].astype(np.int64)
        np.add.at(confusion, (true, predicted), 1)
        fold_accuracies.append(float((predicted == true).mean()))

    total = int(confusion.sum())
    accuracy = float(np.trace(confusion) / total) if total else 0.0
    return EvalReport(
        structure=spec.kind,
        class_variable=cls,
        class_states=data.schema.states[cls],
        k=k,
        seed=seed,
        accuracy=accuracy,
        fold_accuracies=fold_accuracies,
        confusion=confusion,
        n_scored=total,
        notices=notices,
    )


# ---------------------------------------------------------------------------
# benchmark slicing and grid aggregation


def benchmark_slices(
    data: Dataset, benchmark_var: str = "benchmark", class_var: str = "qos_value"
) -> dict[str, Dataset]:
    """Split per benchmark; the benchmark column is dropped within a slice.

    The class variable's state list shrinks to the labels actually seen in
    the slice (each benchmark uses its own discretization, so the union
    state space would dilute per-slice tables with unreachable states).
    """
    out: dict[str, Dataset] = {}
    bench_codes = data.column(benchmark_var)
    keep_vars = [v for v in data.schema.variables if v != benchmark_var]
    for code, name in enumerate(data.schema.states[benchmark_var]):
        rows = np.nonzero(bench_codes == code)[0]
        if rows.size == 0:
            continue
        sliced = data.subset(rows).select_variables(keep_vars)
        cls_codes = sliced.column(class_var)
        seen = np.unique(cls_codes[cls_codes != MISSING])
        labels = tuple(sliced.schema.states[class_var][int(c)] for c in seen)
        # the extra trailing slot absorbs MISSING (-1) lookups unchanged
        remap = np.full(sliced.schema.cardinality(class_var) + 1, MISSING, dtype=np.int16)
        remap[seen] = np.arange(seen.size, dtype=np.int16)
        codes = sliced.codes.copy()
        col = sliced.schema.index_of(class_var)
        codes[:, col] = remap[codes[:, col]]
        states = {v: sliced.schema.states[v] for v in keep_vars}
        states[class_var] = labels
        out[name] = Dataset(Schema(tuple(keep_vars), states), codes)
    return out


def evaluate_grid(
    data: Dataset,
    structures: list[str],
    k: int = 10,
    seed: int = 0,
    cfg: EmConfig | None = None,
    benchmark_var: str = "benchmark",
    class_var: str = "qos_value",
) -> list[EvalReport]:
    """One report per (structure, benchmark slice)."""
    slices = benchmark_slices(data, benchmark_var, class_var)
    reports = []
    for kind in structures:
        for name, sliced in slices.items():
            features = tuple(
                v for v in sliced.schema.variables if v != class_var
            )
            spec = StructureSpec(
                kind=kind,
                class_variable=class_var,
                feature_variables=features,
                cbn_edges=reference_cbn_edges(features, class_var)
                if kind == "cbn"
                else (),
            )
            report = cross_validate(spec, sliced, k=k, seed=seed, cfg=cfg)
            report.benchmark = name
            reports.append(report)
    return reports


def reference_cbn_edges(
    features: tuple[str, ...], class_var: str
) -> tuple[tuple[str, str], ...]:
    """The shipped expert edge set, restricted to the variables present.

    Region and VM size drive the CPU type; every context factor drives the
    class.  This is a documented reconstruction of an expert-drawn layout,
    not a learned structure.
    """
    edges: list[tuple[str, str]] = []
    if "cpu_type" in features:
        for parent in ("region", "vm_size"):
            if parent in features:
                edges.append((parent, "cpu_type"))
    for f in features:
        edges.append((f, class_var))
    return tuple(edges)


def overall_accuracy(reports: list[EvalReport]) -> float:
    """Unweighted mean over grid cells, as a percentage."""
    if not reports:
        raise ValueError("no reports to aggregate")
    return float(np.mean([r.accuracy for r in reports])) * 100.0


def aggregate(reports: list[EvalReport]) -> dict[str, float]:
    """All three grid summaries, as percentages."""
    cell_mean = overall_accuracy(reports)
    by_benchmark: dict[str, list[float]] = {}
    for r in reports:
        by_benchmark.setdefault(r.benchmark or "", []).append(r.accuracy)
    benchmark_mean = float(np.mean([np.mean(v) for v in by_benchmark.values()])) * 100.0
    weights = np.array([r.n_scored for r in reports], dtype=float)
    accs = np.array([r.accuracy for r in reports])
    record_weighted = float((accs * weights).sum() / weights.sum()) * 100.0
    return {
        "cell_mean": cell_mean,
        "benchmark_mean": benchmark_mean,
        "record_weighted": record_weighted,
    }


def render_grid(reports: list[EvalReport]) -> str:
    """Plain-text accuracy table: structures down, benchmarks across."""
    structures = []
    benchmarks = []
    for r in reports:
        if r.structure not in structures:
            structures.append(r.structure)
        name = r.benchmark or "-"
        if name not in benchmarks:
            benchmarks.append(name)
    cells = {(r.structure, r.benchmark or "-"): r.accuracy for r in reports}

    width = max(10, *(len(b) + 2 for b in benchmarks))
    lines = ["structure".ljust(12) + "".join(b.rjust(width) for b in benchmarks)]
    for s in structures:
        row = s.ljust(12)
        for b in benchmarks:
            acc = cells.get((s, b))
            row += ("-" if acc is None else f"{acc * 100:.2f}").rjust(width)
        lines.append(row)
    agg = aggregate(reports)
    lines.append("")
    lines.append(
        "overall: cell mean {cell_mean:.2f}%  benchmark mean {benchmark_mean:.2f}%"
        "  record-weighted {record_weighted:.2f}%".format(**agg)
    )
    return "\n".join(lines)
