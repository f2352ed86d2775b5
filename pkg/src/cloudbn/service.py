"""HTTP facade for interactive diagnosis.

Endpoints:
  GET  /models               model ids plus variable/state metadata
  GET  /healthz              liveness probe
  POST /models/{id}/infer    posteriors for queried variables given evidence

The protocol is stateless: every request carries its full evidence set, so
identical requests always produce identical bodies and replicas need no
coordination.  Models are immutable after load; the registry dict is only
ever swapped wholesale.

Error mapping: 404 unknown model or variable, 422 malformed evidence,
409 evidence with probability zero.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .inference import EvidenceSet, ImpossibleEvidenceError, posterior
from .network import BayesianNetwork


class InferRequest(BaseModel):
    evidence: dict[str, str] = Field(default_factory=dict)
    soft_evidence: dict[str, list[float]] = Field(default_factory=dict)
    queries: list[str]


class VariableInfo(BaseModel):
    id: str
    name: str
    states: list[str]


class ModelInfo(BaseModel):
    id: str
    variables: list[VariableInfo]


def _model_info(model_id: str, bn: BayesianNetwork) -> ModelInfo:
    return ModelInfo(
        id=model_id,
        variables=[
            VariableInfo(
                id=v,
                name=bn.variable(v).name,
                states=list(bn.variable(v).states),
            )
            for v in bn.nodes
        ],
    )


def create_app(models: dict[str, BayesianNetwork], cors: bool = False) -> FastAPI:
    app = FastAPI(title="cloudbn diagnosis service")
    if cors:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=["*"],
            allow_methods=["*"],
            allow_headers=["*"],
        )
    registry = dict(models)

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "models": len(registry)}

    @app.get("/models")
    def list_models():
        return [_model_info(mid, bn) for mid, bn in sorted(registry.items())]

    @app.post("/models/{model_id}/infer")
    def infer(model_id: str, request: InferRequest):
        bn = registry.get(model_id)
        if bn is None:
            raise HTTPException(status_code=404, detail=f"unknown model {model_id!r}")
        for var in (*request.evidence, *request.soft_evidence, *request.queries):
            if var not in bn.variables:
                raise HTTPException(status_code=404, detail=f"unknown variable {var!r}")
        for var, label in request.evidence.items():
            if label not in bn.variable(var).states:
                raise HTTPException(
                    status_code=422, detail=f"variable {var!r} has no state {label!r}"
                )
        for var, vec in request.soft_evidence.items():
            if len(vec) != bn.cardinality(var) or any(x < 0 for x in vec) or not any(
                x > 0 for x in vec
            ):
                raise HTTPException(
                    status_code=422,
                    detail=f"soft evidence for {var!r} must be {bn.cardinality(var)}"
                    " nonnegative numbers with at least one positive",
                )
        if not request.queries:
            raise HTTPException(status_code=422, detail="queries must be non-empty")
        try:
            evidence = EvidenceSet(hard=request.evidence, soft=request.soft_evidence)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))

        posteriors = {}
        evidence_probability = None
        try:
            for query in request.queries:
                post = posterior(bn, query, evidence)
                posteriors[query] = {
                    "states": list(post.states),
                    "probabilities": [float(p) for p in post.probabilities],
                }
                evidence_probability = post.evidence_probability
        except ImpossibleEvidenceError as exc:
            raise HTTPException(status_code=409, detail=f"impossible evidence: {exc}")
        return {
            "model": model_id,
            "posteriors": posteriors,
            "evidence_probability": evidence_probability,
        }

    return app
