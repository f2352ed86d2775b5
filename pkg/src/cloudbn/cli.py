"""Command-line pipeline: ingest, discretize, learn, diagnose, predict,
evaluate, serve.

Exit codes: 0 success, 1 usage error, 2 data error (unreadable or invalid
inputs), 3 impossible evidence.  All artifacts are written with sorted keys
and no timestamps, so identical inputs and seeds reproduce identical bytes.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import evaluation, ingestion
from .dataset import load_dataset
from .discretization import (
    PRESET_NAMES,
    hierarchical_discretize,
    load_preset,
    load_spec,
    save_spec,
    state_counts,
)
from .inference import (
    EvidenceSet,
    ImpossibleEvidenceError,
    format_probability,
    posterior,
)
from .learning import EmConfig, learn_em, predict_posteriors
from .network import NetworkFormatError, load_network, save_network
from .structures import KINDS, StructureSpec, build_structure, load_structure_spec

USAGE_ERROR = 1
DATA_ERROR = 2
IMPOSSIBLE_EVIDENCE = 3


class _Parser(argparse.ArgumentParser):
    # argparse defaults to exit code 2 on usage errors; keep 2 for data problems
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit_(USAGE_ERROR, f"{self.prog}: error: {message}")


class SystemExit_(Exception):
    def __init__(self, code: int, message: str = ""):
        super().__init__(message)
        self.code = code
        self.message = message


def _parse_evidence(pairs: list[str], soft_pairs: list[str]) -> EvidenceSet:
    """--evidence var=state and --soft var=p1,p2,...

    A state label containing '=' works because only the first '=' splits;
    labels containing commas never clash here since commas only separate
    soft likelihood entries.
    """
    hard = {}
    for item in pairs:
        if "=" not in item:
            raise SystemExit_(USAGE_ERROR, f"--evidence needs var=state, got {item!r}")
        var, state = item.split("=", 1)
        hard[var] = state
    soft = {}
    for item in soft_pairs:
        if "=" not in item:
            raise SystemExit_(USAGE_ERROR, f"--soft needs var=p1,p2,..., got {item!r}")
        var, vec = item.split("=", 1)
        try:
            soft[var] = [float(x) for x in vec.split(",")]
        except ValueError:
            raise SystemExit_(USAGE_ERROR, f"--soft values must be numbers: {item!r}")
    try:
        return EvidenceSet(hard=hard, soft=soft)
    except ValueError as exc:
        raise SystemExit_(USAGE_ERROR, str(exc))


def _em_config(args) -> EmConfig:
    return EmConfig(
        max_iterations=args.em_iterations,
        log_likelihood_tolerance=args.em_tolerance,
        smoothing_pseudocount=args.pseudocount,
        seed=args.seed,
        random_restarts=args.restarts,
    )


def _add_em_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--em-iterations", type=int, default=200)
    p.add_argument("--em-tolerance", type=float, default=1e-6)
    p.add_argument("--pseudocount", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="cloudbn",
        description="Bayesian-network diagnosis and prediction over cloud benchmark QoS data",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="CSV trace -> categorical dataset")
    p.add_argument("--csv", required=True)
    p.add_argument("--out", required=True, help="dataset path (.jsonl; schema sidecar is written next to it)")
    p.add_argument("--columns", help="JSON column-mapping config")
    p.add_argument("--tod-bins", type=int, default=4)
    p.add_argument("--rejects", help="write rejected rows here as JSONL")
    p.add_argument("--summary", action="store_true", help="print per-benchmark QoS statistics")

    p = sub.add_parser("discretize", help="build or export a binning spec")
    p.add_argument("--preset", choices=PRESET_NAMES)
    p.add_argument("--values", help="file with one numeric value per line")
    p.add_argument("--states", type=int, help="target state count for automatic binning")
    p.add_argument("--variable", default="qos_value")
    p.add_argument("--out", help="write the spec JSON here")
    p.add_argument("--counts", action="store_true", help="print per-state counts of --values")

    p = sub.add_parser("learn", help="fit a network to a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--structure", choices=("nbn", "tan", "nor", "cbn"))
    p.add_argument("--spec", help="structure spec JSON (alternative to --structure)")
    p.add_argument("--class", dest="class_variable", default="qos_value")
    p.add_argument("--features", help="comma-separated; default: every other dataset variable")
    p.add_argument("--cbn-edges", help="JSON file with [[parent, child], ...]")
    p.add_argument("--out", required=True)
    _add_em_flags(p)

    p = sub.add_parser("diagnose", help="posterior of a query variable given evidence")
    p.add_argument("--model", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--evidence", action="append", default=[], metavar="VAR=STATE")
    p.add_argument("--soft", action="append", default=[], metavar="VAR=P1,P2,...")
    p.add_argument("--json", action="store_true", help="machine-readable output")

    p = sub.add_parser("predict", help="MAP state of a variable for every record")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--query", default="qos_value")
    p.add_argument("--out", help="write JSONL predictions here instead of stdout")

    p = sub.add_parser("evaluate", help="k-fold cross-validation over structures")
    p.add_argument("--data", required=True)
    p.add_argument("--structures", default="nbn,tan,nor,cbn")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--class", dest="class_variable", default="qos_value")
    p.add_argument("--benchmark-var", default="benchmark")
    p.add_argument("--out-json")
    p.add_argument("--out-text")
    _add_em_flags(p)

    p = sub.add_parser("serve", help="HTTP diagnosis service")
    p.add_argument("--model", action="append", required=True, metavar="[ID=]PATH")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--cors", action="store_true")

    return parser


# ---------------------------------------------------------------------------
# subcommand bodies


def _cmd_ingest(args) -> int:
    config = ingestion.load_column_config(args.columns) if args.columns else None
    raws, report = ingestion.parse_csv(args.csv, config)
    presets = {name: load_preset(name) for name in PRESET_NAMES}
    data = ingestion.to_records(raws, presets, tod_bins=args.tod_bins)
    from .dataset import save_dataset

    save_dataset(data, args.out)
    if args.rejects:
        with open(args.rejects, "w") as fh:
            for line, reason in report.rejected:
                fh.write(json.dumps({"line": line, "reason": reason}, sort_keys=True))
                fh.write("\n")
    print(f"{len(data)} records written to {args.out}, {len(report)} rows rejected")
    for line, reason in report.rejected[:20]:
        print(f"  line {line}: {reason}", file=sys.stderr)
    if args.summary:
        stats = ingestion.summarize(raws)
        print(f"{'benchmark':<10}{'min':>12}{'max':>12}{'mean':>12}{'std':>12}{'count':>8}")
        for name, s in stats.items():
            print(
                f"{name:<10}{s.minimum:>12.2f}{s.maximum:>12.2f}"
                f"{s.mean:>12.2f}{s.std:>12.2f}{s.count:>8d}"
            )
    return 0


def _cmd_discretize(args) -> int:
    if args.preset and args.states:
        raise SystemExit_(USAGE_ERROR, "--preset and --states are mutually exclusive")
    if args.preset:
        spec = load_preset(args.preset)
    elif args.values and args.states:
        values = np.loadtxt(args.values, ndmin=1)
        spec = hierarchical_discretize(values, args.states, variable=args.variable)
    else:
        raise SystemExit_(USAGE_ERROR, "need --preset, or --values with --states")
    if args.out:
        save_spec(spec, args.out)
        print(f"spec with {spec.n_bins} states written to {args.out}")
    if args.counts:
        if not args.values:
            raise SystemExit_(USAGE_ERROR, "--counts needs --values")
        values = np.loadtxt(args.values, ndmin=1)
        for i, c in enumerate(state_counts(spec, values), start=1):
            print(f"{i}\t{spec.label(i)}\t{int(c)}")
    if not args.out and not args.counts:
        print(json.dumps({"edges": list(spec.edges), "labels": list(spec.state_labels())}, indent=2))
    return 0


def _cmd_learn(args) -> int:
    data = load_dataset(args.data)
    if args.spec:
        spec = load_structure_spec(args.spec)
    else:
        if not args.structure:
            raise SystemExit_(USAGE_ERROR, "need --structure or --spec")
        if args.features:
            features = tuple(args.features.split(","))
        else:
            features = tuple(
                v for v in data.schema.variables if v != args.class_variable
            )
        edges: tuple[tuple[str, str], ...] = ()
        if args.structure == "cbn":
            if args.cbn_edges:
                with open(args.cbn_edges) as fh:
                    edges = tuple((a, b) for a, b in json.load(fh))
            else:
                edges = evaluation.reference_cbn_edges(features, args.class_variable)
        spec = StructureSpec(
            kind=args.structure,
            class_variable=args.class_variable,
            feature_variables=features,
            cbn_edges=edges,
        )
    skeleton = build_structure(spec, data.schema, data)
    bn, trace = learn_em(skeleton, data, _em_config(args))
    save_network(bn, args.out)
    print(f"model written to {args.out} after {len(trace)} EM iterations")
    return 0


def _cmd_diagnose(args) -> int:
    bn = load_network(args.model)
    evidence = _parse_evidence(args.evidence, args.soft)
    post = posterior(bn, args.query, evidence)
    if args.json:
        doc = {
            "query": args.query,
            "posterior": post.as_dict(),
            "evidence_probability": post.evidence_probability,
        }
        print(json.dumps(doc, sort_keys=True))
        return 0
    print(f"P(evidence) = {format_probability(post.evidence_probability)}")
    width = max(len(s) for s in post.states) + 2
    for state, p in zip(post.states, post.probabilities):
        print(f"{state:<{width}}{format_probability(float(p))}")
    return 0


def _cmd_predict(args) -> int:
    bn = load_network(args.model)
    data = load_dataset(args.data)
    posteriors = predict_posteriors(bn, data, args.query)
    states = bn.variable(args.query).states
    lines = []
    for i in range(len(data)):
        code = int(posteriors[i].argmax())
        lines.append(json.dumps({"index": i, "prediction": states[code]}, sort_keys=True))
    if args.out:
        Path(args.out).write_text("\n".join(lines) + "\n")
        print(f"{len(lines)} predictions written to {args.out}")
    else:
        for line in lines:
            print(line)
    return 0


def _cmd_evaluate(args) -> int:
    structures = [s for s in args.structures.split(",") if s]
    bad = [s for s in structures if s not in KINDS]
    if bad:
        raise SystemExit_(
            USAGE_ERROR, f"cloudbn evaluate: error: unknown structure kind(s) {bad}"
        )
    data = load_dataset(args.data)
    cfg = _em_config(args)
    if args.benchmark_var in data.schema.variables:
        reports = evaluation.evaluate_grid(
            data,
            structures,
            k=args.k,
            seed=args.seed,
            cfg=cfg,
            benchmark_var=args.benchmark_var,
            class_var=args.class_variable,
        )
    else:
        reports = []
        features = tuple(v for v in data.schema.variables if v != args.class_variable)
        for kind in structures:
            spec = StructureSpec(
                kind=kind,
                class_variable=args.class_variable,
                feature_variables=features,
                cbn_edges=evaluation.reference_cbn_edges(features, args.class_variable)
                if kind == "cbn"
                else (),
            )
            reports.append(evaluation.cross_validate(spec, data, k=args.k, seed=args.seed, cfg=cfg))
    text = evaluation.render_grid(reports)
    print(text)
    if args.out_text:
        Path(args.out_text).write_text(text + "\n")
    if args.out_json:
        doc = {
            "aggregate": evaluation.aggregate(reports),
            "reports": [r.to_dict() for r in reports],
        }
        with open(args.out_json, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


def _cmd_serve(args) -> int:
    from .service import create_app  # fastapi is an optional dependency

    import uvicorn

    models = {}
    for item in args.model:
        if "=" in item:
            model_id, path = item.split("=", 1)
        else:
            model_id, path = Path(item).stem, item
        models[model_id] = load_network(path)
    app = create_app(models, cors=args.cors)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


_COMMANDS = {
    "ingest": _cmd_ingest,
    "discretize": _cmd_discretize,
    "learn": _cmd_learn,
    "diagnose": _cmd_diagnose,
    "predict": _cmd_predict,
    "evaluate": _cmd_evaluate,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except SystemExit_ as exc:
        if exc.message:
            print(exc.message, file=sys.stderr)
        return exc.code
    except ImpossibleEvidenceError as exc:
        print(f"impossible evidence: {exc}", file=sys.stderr)
        return IMPOSSIBLE_EVIDENCE
    except (FileNotFoundError, NetworkFormatError, KeyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
