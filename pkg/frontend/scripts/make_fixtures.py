"""Regenerate the committed what-if fixtures.

Builds a deterministic model from a synthetic trace, drives the real HTTP
service in-process for 20 scripted evidence drafts, runs the CLI on the
same evidence, and writes every request/response pair plus the CLI's
printed digits to fixtures/whatif_fixtures.json. The UI test suite replays
these offline, so rendered numbers are checked against genuine service
output without needing a live server.

Run from the frontend directory:  python3 scripts/make_fixtures.py
"""

import csv
import io
import json
import tempfile
from contextlib import redirect_stdout
from pathlib import Path

import numpy as np
from fastapi.testclient import TestClient

from cloudbn import Cpt, Variable, load_network, network, save_network
from cloudbn.cli import main as cli_main
from cloudbn.service import create_app

FRONTEND = Path(__file__).resolve().parent.parent
FIXTURES = FRONTEND / "fixtures"


def build_model(workdir: Path) -> Path:
    """Ingest a synthetic two-benchmark trace and learn a TAN over it."""
    rng = np.random.default_rng(23)
    base = {"oltp": 200, "io": 5}
    rows = []
    for i in range(600):
        bench = ("oltp", "io")[int(rng.integers(2))]
        cloud = ("aws", "gce")[int(rng.integers(2))]
        # let the qos level depend on cloud and vm_size so posteriors move
        scale = 0.5 if cloud == "aws" else 1.4
        vm = ("small", "large")[int(rng.integers(2))]
        scale *= 1.0 if vm == "small" else 2.1
        rows.append(
            {
                "timestamp": str(1425300000 + i * 7200),
                "cloud": cloud,
                "region": ("us", "eu")[int(rng.integers(2))],
                "vm_size": vm,
                "benchmark": bench,
                "cpu_type": ("xeon", "epyc")[int(rng.integers(2))],
                "qos_value": f"{base[bench] * scale * rng.uniform(0.5, 1.6):.2f}",
            }
        )
    trace = workdir / "trace.csv"
    with open(trace, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    cols = workdir / "columns.json"
    cols.write_text('{"timestamp_unit": "epoch_s"}')
    records = workdir / "records.jsonl"
    assert cli_main(["ingest", "--csv", str(trace), "--out", str(records), "--columns", str(cols)]) == 0
    model = FIXTURES / "fixture_model.json"
    assert (
        cli_main(
            [
                "learn",
                "--data",
                str(records),
                "--structure",
                "tan",
                "--class",
                "qos_value",
                "--out",
                str(model),
                "--seed",
                "0",
            ]
        )
        == 0
    )
    return model


def build_zero_model() -> Path:
    """Tiny network with a structural zero, for the 409 path."""
    a = Variable("a", ("a0", "a1"))
    b = Variable("b", ("b0", "b1"))
    bn = network(
        [a, b],
        {"b": ("a",)},
        {
            "a": Cpt("a", (), np.array([[1.0, 0.0]])),
            "b": Cpt("b", ("a",), np.array([[1.0, 0.0], [0.5, 0.5]])),
        },
    )
    path = FIXTURES / "zero_model.json"
    save_network(bn, path)
    return path


# each draft: (name, entries, queries); entries use the UI's EvidenceDraft shape
DRAFTS = [
    ("empty draft", {}, ["qos_value"]),
    ("hard cloud aws", {"cloud": {"kind": "hard", "state": "aws"}}, ["qos_value"]),
    ("hard cloud gce", {"cloud": {"kind": "hard", "state": "gce"}}, ["qos_value"]),
    ("hard vm small", {"vm_size": {"kind": "hard", "state": "small"}}, ["qos_value"]),
    ("hard vm large", {"vm_size": {"kind": "hard", "state": "large"}}, ["qos_value"]),
    (
        "aws small",
        {
            "cloud": {"kind": "hard", "state": "aws"},
            "vm_size": {"kind": "hard", "state": "small"},
        },
        ["qos_value"],
    ),
    (
        "gce large eu",
        {
            "cloud": {"kind": "hard", "state": "gce"},
            "vm_size": {"kind": "hard", "state": "large"},
            "region": {"kind": "hard", "state": "eu"},
        },
        ["qos_value"],
    ),
    ("hard benchmark oltp", {"benchmark": {"kind": "hard", "state": "oltp"}}, ["qos_value"]),
    ("hard benchmark io", {"benchmark": {"kind": "hard", "state": "io"}}, ["qos_value"]),
    ("soft cloud lean aws", {"cloud": {"kind": "soft", "weights": [0.8, 0.2]}}, ["qos_value"]),
    ("soft cloud lean gce", {"cloud": {"kind": "soft", "weights": [0.1, 0.9]}}, ["qos_value"]),
    (
        "soft vm flat-ish",
        {"vm_size": {"kind": "soft", "weights": [0.55, 0.45]}},
        ["qos_value"],
    ),
    (
        "hard plus soft",
        {
            "cloud": {"kind": "hard", "state": "aws"},
            "region": {"kind": "soft", "weights": [0.3, 0.7]},
        },
        ["qos_value"],
    ),
    (
        "two softs",
        {
            "cloud": {"kind": "soft", "weights": [0.6, 0.4]},
            "vm_size": {"kind": "soft", "weights": [0.25, 0.75]},
        },
        ["qos_value"],
    ),
    ("hard tod", {"time_of_day": {"kind": "hard", "state": "12-18"}}, ["qos_value"]),
    ("hard dow", {"day_of_week": {"kind": "hard", "state": "mon"}}, ["qos_value"]),
    (
        "query cpu type",
        {"cloud": {"kind": "hard", "state": "aws"}},
        ["cpu_type", "qos_value"],
    ),
    (
        "evidence on qos",
        {"qos_value": {"kind": "hard", "state": "0 to 196"}},
        ["cloud", "vm_size"],
    ),
    (
        "diagnose slow oltp",
        {
            "benchmark": {"kind": "hard", "state": "oltp"},
            "qos_value": {"kind": "soft", "weights": [0.1, 0.3, 0.6, 0.0, 0.0, 0.0]},
        },
        ["cloud", "vm_size", "region"],
    ),
    (
        "everything touched",
        {
            "cloud": {"kind": "hard", "state": "gce"},
            "region": {"kind": "soft", "weights": [0.5, 0.5]},
            "vm_size": {"kind": "hard", "state": "large"},
            "benchmark": {"kind": "hard", "state": "io"},
        },
        ["qos_value", "cpu_type"],
    ),
]


def to_request(entries: dict, queries: list[str]) -> dict:
    # mirror of draft.ts toRequestBody: always carry all three keys
    evidence = {v: e["state"] for v, e in entries.items() if e["kind"] == "hard"}
    soft = {v: e["weights"] for v, e in entries.items() if e["kind"] == "soft"}
    return {"evidence": evidence, "soft_evidence": soft, "queries": queries}


def cli_digits(model: Path, query: str, entries: dict) -> dict:
    argv = ["diagnose", "--model", str(model), "--query", query]
    for var, entry in entries.items():
        if entry["kind"] == "hard":
            argv += ["--evidence", f"{var}={entry['state']}"]
        else:
            argv += ["--soft", f"{var}={','.join(str(w) for w in entry['weights'])}"]
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = cli_main(argv)
    assert code == 0, f"diagnose failed for {argv}"
    lines = buf.getvalue().strip().splitlines()
    assert lines[0].startswith("P(evidence) = ")
    evidence_probability = lines[0].split(" = ")[1]
    posterior = {}
    for line in lines[1:]:
        label, digits = line.rsplit(None, 1)
        posterior[label.strip()] = digits
    return {"evidence_probability": evidence_probability, "posterior": posterior}


def main() -> None:
    FIXTURES.mkdir(exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        model_path = build_model(Path(tmp))
    zero_path = build_zero_model()
    client = TestClient(
        create_app({"qos": load_network(model_path), "zero": load_network(zero_path)})
    )

    models_doc = client.get("/models").json()

    cases = []
    for name, entries, queries in DRAFTS:
        request = to_request(entries, queries)
        res = client.post("/models/qos/infer", json=request)
        assert res.status_code == 200, (name, res.status_code, res.text)
        response = res.json()
        cli = {q: cli_digits(model_path, q, entries) for q in queries}
        cases.append(
            {
                "name": name,
                "draft": {"entries": entries},
                "queries": queries,
                "request": request,
                "response": response,
                "cli": cli,
            }
        )
    assert len(cases) == 20

    err = client.post(
        "/models/zero/infer",
        json={"evidence": {"b": "b1"}, "soft_evidence": {}, "queries": ["a"]},
    )
    assert err.status_code == 409

    doc = {
        "model": "qos",
        "models_response": models_doc,
        "cases": cases,
        "error_case": {
            "model": "zero",
            "request": {"evidence": {"b": "b1"}, "soft_evidence": {}, "queries": ["a"]},
            "status": err.status_code,
            "body": err.json(),
        },
    }
    out = FIXTURES / "whatif_fixtures.json"
    out.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    print(f"wrote {out} with {len(cases)} cases")


if __name__ == "__main__":
    main()
