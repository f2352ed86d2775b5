"""HTTP diagnosis service: routes, status codes, CLI agreement."""

import numpy as np
import pytest

pytest.importorskip("fastapi")

from fastapi.testclient import TestClient

from cloudbn import Cpt, EvidenceSet, Variable, network, posterior
from cloudbn.inference import format_probability
from cloudbn.service import create_app


def diag_bn():
    a = Variable("a", ("a0", "a1"))
    b = Variable("b", ("b0", "b1", "b2"))
    c = Variable("c", ("c0", "c1"))
    return network(
        [a, b, c],
        {"c": ("a", "b")},
        {
            "a": Cpt("a", (), np.array([[0.4, 0.6]])),
            "b": Cpt("b", (), np.array([[0.3, 0.5, 0.2]])),
            "c": Cpt(
                "c",
                ("a", "b"),
                np.array(
                    [
                        [0.9, 0.1],
                        [0.6, 0.4],
                        [0.3, 0.7],
                        [0.8, 0.2],
                        [0.5, 0.5],
                        [0.1, 0.9],
                    ]
                ),
            ),
        },
    )


def zero_bn():
    a = Variable("a", ("a0", "a1"))
    b = Variable("b", ("b0", "b1"))
    return network(
        [a, b],
        {"b": ("a",)},
        {
            "a": Cpt("a", (), np.array([[1.0, 0.0]])),
            "b": Cpt("b", ("a",), np.array([[1.0, 0.0], [0.5, 0.5]])),
        },
    )


@pytest.fixture
def client():
    app = create_app({"diag": diag_bn(), "zero": zero_bn()})
    return TestClient(app)


class TestMetadataRoutes:
    def test_healthz(self, client):
        r = client.get("/healthz")
        assert r.status_code == 200
        assert r.json() == {"status": "ok", "models": 2}

    def test_models_sorted_with_variables(self, client):
        r = client.get("/models")
        assert r.status_code == 200
        docs = r.json()
        assert [d["id"] for d in docs] == ["diag", "zero"]
        diag = docs[0]
        names = [v["name"] for v in diag["variables"]]
        assert names == ["a", "b", "c"]
        b = diag["variables"][1]
        assert b["states"] == ["b0", "b1", "b2"]


class TestInfer:
    def test_posterior_matches_library(self, client):
        r = client.post(
            "/models/diag/infer",
            json={"evidence": {"c": "c1"}, "queries": ["a"]},
        )
        assert r.status_code == 200
        doc = r.json()
        expect = posterior(diag_bn(), "a", EvidenceSet(hard={"c": "c1"}))
        assert doc["posteriors"]["a"]["states"] == ["a0", "a1"]
        assert doc["posteriors"]["a"]["probabilities"] == pytest.approx(
            expect.probabilities.tolist()
        )
        assert doc["evidence_probability"] == pytest.approx(expect.evidence_probability)

    def test_soft_evidence_accepted(self, client):
        r = client.post(
            "/models/diag/infer",
            json={"soft_evidence": {"b": [0.5, 0.25, 0.25]}, "queries": ["c"]},
        )
        assert r.status_code == 200
        expect = posterior(diag_bn(), "c", EvidenceSet(soft={"b": [0.5, 0.25, 0.25]}))
        assert r.json()["posteriors"]["c"]["probabilities"] == pytest.approx(
            expect.probabilities.tolist()
        )

    def test_multiple_queries(self, client):
        r = client.post(
            "/models/diag/infer",
            json={"evidence": {"c": "c0"}, "queries": ["a", "b"]},
        )
        assert r.status_code == 200
        assert set(r.json()["posteriors"]) == {"a", "b"}

    def test_no_evidence_gives_priors(self, client):
        r = client.post("/models/diag/infer", json={"queries": ["b"]})
        assert r.status_code == 200
        assert r.json()["posteriors"]["b"]["probabilities"] == pytest.approx(
            [0.3, 0.5, 0.2]
        )
        assert r.json()["evidence_probability"] == pytest.approx(1.0)


class TestErrorCodes:
    def test_unknown_model_404(self, client):
        r = client.post("/models/ghost/infer", json={"queries": ["a"]})
        assert r.status_code == 404

    def test_unknown_variable_404(self, client):
        assert client.post("/models/diag/infer", json={"queries": ["zz"]}).status_code == 404
        assert (
            client.post(
                "/models/diag/infer", json={"evidence": {"zz": "x"}, "queries": ["a"]}
            ).status_code
            == 404
        )

    def test_bad_state_label_422(self, client):
        r = client.post(
            "/models/diag/infer", json={"evidence": {"a": "a9"}, "queries": ["b"]}
        )
        assert r.status_code == 422

    def test_bad_soft_vector_422(self, client):
        for vec in ([0.5, 0.5], [0.0, 0.0, 0.0], [-1.0, 1.0, 1.0]):
            r = client.post(
                "/models/diag/infer",
                json={"soft_evidence": {"b": vec}, "queries": ["a"]},
            )
            assert r.status_code == 422, vec

    def test_empty_queries_422(self, client):
        assert client.post("/models/diag/infer", json={"queries": []}).status_code == 422

    def test_hard_soft_overlap_422(self, client):
        r = client.post(
            "/models/diag/infer",
            json={
                "evidence": {"b": "b0"},
                "soft_evidence": {"b": [1.0, 1.0, 1.0]},
                "queries": ["a"],
            },
        )
        assert r.status_code == 422

    def test_impossible_evidence_409(self, client):
        r = client.post(
            "/models/zero/infer", json={"evidence": {"b": "b1"}, "queries": ["a"]}
        )
        assert r.status_code == 409


class TestCors:
    def test_disabled_by_default(self, client):
        r = client.get("/healthz", headers={"Origin": "http://example.test"})
        assert "access-control-allow-origin" not in r.headers

    def test_enabled_flag_allows_any_origin(self):
        app = create_app({"diag": diag_bn()}, cors=True)
        r = TestClient(app).get("/healthz", headers={"Origin": "http://example.test"})
        assert r.headers.get("access-control-allow-origin") == "*"


class TestCliAgreement:
    def test_same_digits_as_diagnose(self, client, tmp_path, capsys):
        """The printed CLI probabilities equal the service's to the last digit."""
        from cloudbn import save_network
        from cloudbn.cli import main

        path = tmp_path / "diag.json"
        save_network(diag_bn(), path)
        code = main(
            [
                "diagnose",
                "--model",
                str(path),
                "--query",
                "a",
                "--evidence",
                "c=c1",
                "--soft",
                "b=0.2,0.5,0.3",
            ]
        )
        assert code == 0
        cli_lines = capsys.readouterr().out.strip().splitlines()
        cli_probs = [line.split()[-1] for line in cli_lines[1:]]

        r = client.post(
            "/models/diag/infer",
            json={
                "evidence": {"c": "c1"},
                "soft_evidence": {"b": [0.2, 0.5, 0.3]},
                "queries": ["a"],
            },
        )
        svc_probs = [format_probability(p) for p in r.json()["posteriors"]["a"]["probabilities"]]
        assert cli_probs == svc_probs
