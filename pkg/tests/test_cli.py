"""End-to-end command-line flows driven through main()."""

import csv
import json

import numpy as np
import pytest

from cloudbn import Cpt, Variable, load_dataset, load_network, network, save_network
from cloudbn.cli import main


@pytest.fixture
def trace_csv(tmp_path):
    """Small synthetic trace with every benchmark plus two bad rows."""
    rng = np.random.default_rng(7)
    base = {"cpu": 50, "memory": 2000, "io": 5, "oltp": 200, "compile": 700}
    rows = []
    for i in range(400):
        bench = ("cpu", "mem", "I/O", "oltp", "compile")[int(rng.integers(5))]
        canon = {"mem": "memory", "I/O": "io"}.get(bench, bench)
        rows.append(
            {
                "timestamp": str(1425300000 + i * 3581),
                "cloud": ("aws", "gce")[int(rng.integers(2))],
                "region": ("us", "eu")[int(rng.integers(2))],
                "vm_size": ("small", "large")[int(rng.integers(2))],
                "benchmark": bench,
                "cpu_type": ("xeon", "epyc")[int(rng.integers(2))],
                "qos_value": f"{base[canon] * rng.uniform(0.3, 2.5):.2f}",
            }
        )
    rows.append(dict(rows[0], benchmark="quake"))
    rows.append(dict(rows[1], qos_value="banana"))
    path = tmp_path / "trace.csv"
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    cols = tmp_path / "columns.json"
    cols.write_text('{"timestamp_unit": "epoch_s"}')
    return path, cols


@pytest.fixture
def ingested(trace_csv, tmp_path):
    csv_path, cols = trace_csv
    out = tmp_path / "data.jsonl"
    code = main(
        [
            "ingest",
            "--csv",
            str(csv_path),
            "--out",
            str(out),
            "--columns",
            str(cols),
            "--rejects",
            str(tmp_path / "rejects.jsonl"),
        ]
    )
    assert code == 0
    return out


@pytest.fixture
def tiny_model(tmp_path):
    a = Variable("a", ("a0", "a1"))
    b = Variable("b", ("b0", "b1"))
    bn = network(
        [a, b],
        {"b": ("a",)},
        {
            "a": Cpt("a", (), np.array([[0.7, 0.3]])),
            "b": Cpt("b", ("a",), np.array([[0.9, 0.1], [0.4, 0.6]])),
        },
    )
    path = tmp_path / "tiny.json"
    save_network(bn, path)
    return path


class TestIngest:
    def test_writes_dataset_and_rejects(self, ingested, tmp_path):
        data = load_dataset(ingested)
        assert len(data) == 400
        rejects = (tmp_path / "rejects.jsonl").read_text().strip().splitlines()
        assert len(rejects) == 2
        reasons = [json.loads(line)["reason"] for line in rejects]
        assert any("quake" in r for r in reasons)
        assert any("banana" in r for r in reasons)

    def test_summary_flag_prints_table(self, trace_csv, tmp_path, capsys):
        csv_path, cols = trace_csv
        code = main(
            [
                "ingest",
                "--csv",
                str(csv_path),
                "--out",
                str(tmp_path / "d.jsonl"),
                "--columns",
                str(cols),
                "--summary",
            ]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "combined" in out
        for bench in ("cpu", "compile", "memory", "oltp", "io"):
            assert bench in out

    def test_missing_csv_is_data_error(self, tmp_path):
        code = main(["ingest", "--csv", str(tmp_path / "no.csv"), "--out", str(tmp_path / "o")])
        assert code == 2


class TestDiscretize:
    def test_preset_written(self, tmp_path):
        out = tmp_path / "spec.json"
        assert main(["discretize", "--preset", "oltp", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["edges"] == [0, 196, 561]

    def test_automatic_binning_from_values(self, tmp_path):
        values = tmp_path / "vals.txt"
        rng = np.random.default_rng(0)
        values.write_text("\n".join(f"{v:.3f}" for v in rng.exponential(100, 500)))
        out = tmp_path / "auto.json"
        code = main(
            ["discretize", "--values", str(values), "--states", "6", "--out", str(out)]
        )
        assert code == 0
        doc = json.loads(out.read_text())
        assert len(doc["edges"]) == 6

    def test_counts_flag(self, tmp_path, capsys):
        values = tmp_path / "vals.txt"
        values.write_text("\n".join(["100", "250", "600", "700"]))
        code = main(["discretize", "--preset", "oltp", "--values", str(values), "--counts"])
        assert code == 0
        out = capsys.readouterr().out
        assert "561 to 1130" in out

    def test_requires_preset_or_values(self):
        assert main(["discretize"]) == 1


class TestLearnAndDiagnose:
    @pytest.mark.parametrize("structure", ["nbn", "tan", "nor", "cbn"])
    def test_each_structure_learns(self, ingested, tmp_path, structure):
        out = tmp_path / f"model_{structure}.json"
        argv = [
            "learn",
            "--data",
            str(ingested),
            "--structure",
            structure,
            "--class",
            "qos_value",
            "--out",
            str(out),
            "--seed",
            "0",
        ]
        if structure == "cbn":
            edges = tmp_path / "edges.json"
            edges.write_text(
                json.dumps(
                    [
                        ["region", "cpu_type"],
                        ["vm_size", "cpu_type"],
                        ["benchmark", "qos_value"],
                        ["cloud", "qos_value"],
                        ["region", "qos_value"],
                        ["vm_size", "qos_value"],
                        ["cpu_type", "qos_value"],
                        ["time_of_day", "qos_value"],
                        ["day_of_week", "qos_value"],
                    ]
                )
            )
            argv += ["--cbn-edges", str(edges)]
        assert main(argv) == 0
        bn = load_network(out)
        assert "qos_value" in bn.variables

    def test_learned_artifact_byte_stable(self, ingested, tmp_path):
        outs = []
        for run in (1, 2):
            out = tmp_path / f"m{run}.json"
            assert (
                main(
                    [
                        "learn",
                        "--data",
                        str(ingested),
                        "--structure",
                        "tan",
                        "--class",
                        "qos_value",
                        "--out",
                        str(out),
                        "--seed",
                        "3",
                    ]
                )
                == 0
            )
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_diagnose_text_output(self, tiny_model, capsys):
        code = main(
            ["diagnose", "--model", str(tiny_model), "--query", "a", "--evidence", "b=b1"]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "P(evidence) = 0.250000" in out
        expect = 0.3 * 0.6 / 0.25
        assert f"{expect:.6f}" in out

    def test_diagnose_json_output(self, tiny_model, capsys):
        code = main(
            [
                "diagnose",
                "--model",
                str(tiny_model),
                "--query",
                "a",
                "--evidence",
                "b=b1",
                "--json",
            ]
        )
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["query"] == "a"
        assert doc["posterior"]["a1"] == pytest.approx(0.72)

    def test_diagnose_soft_evidence(self, tiny_model, capsys):
        code = main(
            [
                "diagnose",
                "--model",
                str(tiny_model),
                "--query",
                "a",
                "--soft",
                "b=0.1,0.9",
                "--json",
            ]
        )
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        # likelihood (0.1, 0.9) over b
        pa1 = 0.3 * (0.4 * 0.1 + 0.6 * 0.9) / (
            0.7 * (0.9 * 0.1 + 0.1 * 0.9) + 0.3 * (0.4 * 0.1 + 0.6 * 0.9)
        )
        assert doc["posterior"]["a1"] == pytest.approx(pa1)

    def test_unknown_variable_is_data_error(self, tiny_model):
        assert main(["diagnose", "--model", str(tiny_model), "--query", "zz"]) == 2

    def test_missing_flag_is_usage_error(self, tiny_model):
        assert main(["diagnose", "--model", str(tiny_model)]) == 1

    def test_impossible_evidence_exit_code(self, tmp_path):
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
        path = tmp_path / "zero.json"
        save_network(bn, path)
        assert main(["diagnose", "--model", str(path), "--query", "a", "--evidence", "b=b1"]) == 3


class TestPredictAndEvaluate:
    def test_predict_writes_labels(self, ingested, tmp_path):
        model = tmp_path / "m.json"
        assert (
            main(
                [
                    "learn",
                    "--data",
                    str(ingested),
                    "--structure",
                    "nbn",
                    "--class",
                    "qos_value",
                    "--out",
                    str(model),
                ]
            )
            == 0
        )
        preds = tmp_path / "preds.jsonl"
        code = main(
            [
                "predict",
                "--model",
                str(model),
                "--data",
                str(ingested),
                "--query",
                "qos_value",
                "--out",
                str(preds),
            ]
        )
        assert code == 0
        lines = preds.read_text().strip().splitlines()
        assert len(lines) == 400
        first = json.loads(lines[0])
        assert set(first) == {"index", "prediction"}

    def test_evaluate_writes_grid(self, ingested, tmp_path, capsys):
        out_json = tmp_path / "eval.json"
        out_text = tmp_path / "eval.txt"
        code = main(
            [
                "evaluate",
                "--data",
                str(ingested),
                "--structures",
                "nbn,tan",
                "--k",
                "4",
                "--class",
                "qos_value",
                "--out-json",
                str(out_json),
                "--out-text",
                str(out_text),
                "--seed",
                "0",
            ]
        )
        assert code == 0
        doc = json.loads(out_json.read_text())
        assert {r["structure"] for r in doc["reports"]} == {"nbn", "tan"}
        assert set(doc["aggregate"]) == {"cell_mean", "benchmark_mean", "record_weighted"}
        text = out_text.read_text()
        assert text.startswith("structure")
        assert "overall:" in text

    def test_evaluate_byte_stable(self, ingested, tmp_path):
        blobs = []
        for run in (1, 2):
            out_json = tmp_path / f"eval{run}.json"
            assert (
                main(
                    [
                        "evaluate",
                        "--data",
                        str(ingested),
                        "--structures",
                        "nbn",
                        "--k",
                        "4",
                        "--class",
                        "qos_value",
                        "--out-json",
                        str(out_json),
                        "--seed",
                        "5",
                    ]
                )
                == 0
            )
            blobs.append(out_json.read_bytes())
        assert blobs[0] == blobs[1]

    def test_unknown_structure_is_usage_error(self, ingested, tmp_path):
        code = main(
            [
                "evaluate",
                "--data",
                str(ingested),
                "--structures",
                "nbn,unknown",
                "--class",
                "qos_value",
            ]
        )
        assert code == 1


class TestParserBasics:
    def test_no_arguments_is_usage_error(self):
        assert main([]) == 1

    def test_unknown_subcommand_is_usage_error(self):
        assert main(["frobnicate"]) == 1
