"""HTTP service binding the pipeline into interactive sessions.

A session holds one instance, its current route with per-edge intentions, and
a history of asked questions and keep/replace decisions. Sessions persist as
one JSON document each (atomic write-rename); the API is JSON over /v1 paths.
"""

from __future__ import annotations

import json
import logging
import os
import secrets
import tempfile
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from fastapi import Depends, FastAPI, HTTPException, Request
from pydantic import BaseModel

from .annotator import make_solver, plan_for
from .core import (
    Route,
    VrpError,
    VrpInstance,
    instance_from_dict,
    instance_to_dict,
    route_from_dict,
)
from .explainer import (
    ClassifierFn,
    QuestionError,
    explain,
    parse_question,
    rule_based_classifier,
)
from .solver import FixedPrefix, SolverConfig, solve

log = logging.getLogger(__name__)


@dataclass
class ServiceConfig:
    sessions_dir: str = "sessions"
    port: int = 8080
    checkpoint: Optional[str] = None
    solver: SolverConfig = field(default_factory=SolverConfig)
    bearer_token: Optional[str] = None
    text_backend: str = "template"

    @classmethod
    def from_file(cls, path) -> "ServiceConfig":
        data = json.loads(Path(path).read_text())
        solver = SolverConfig(**data.pop("solver", {}))
        return cls(solver=solver, **data)


def _load_classifier(config: ServiceConfig) -> ClassifierFn:
    """Learned model when a checkpoint is configured, else the labeling rule
    itself — the service is fully operable without training or an LLM."""
    if config.checkpoint:
        from .classifier import load_checkpoint
        from .classifier import predict as model_predict
        model, _ = load_checkpoint(config.checkpoint)

        def fn(instance, route):
            return model_predict(model, instance, route)

        return fn
    return rule_based_classifier(config.solver)


class SessionStore:
    """One JSON file per session; writes go to a temp file then rename."""

    def __init__(self, directory):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def lock(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(session_id, threading.Lock())

    def _path(self, session_id: str) -> Path:
        if not session_id.isalnum():
            raise KeyError(session_id)
        return self.dir / f"{session_id}.json"

    def save(self, session: dict):
        path = self._path(session["id"])
        fd, tmp = tempfile.mkstemp(dir=self.dir, suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as fh:
                json.dump(session, fh)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def load(self, session_id: str) -> dict:
        try:
            return json.loads(self._path(session_id).read_text())
        except (FileNotFoundError, KeyError):
            raise KeyError(session_id)

    def delete(self, session_id: str):
        try:
            self._path(session_id).unlink()
        except (FileNotFoundError, KeyError):
            raise KeyError(session_id)

    def list_ids(self) -> list[str]:
        return sorted(p.stem for p in self.dir.glob("*.json"))


class JobRegistry:
    """In-memory long-running jobs with queued -> running -> done/failed."""

    def __init__(self):
        self._jobs: dict[str, dict] = {}
        self._guard = threading.Lock()

    def submit(self, target, *args) -> str:
        job_id = uuid.uuid4().hex
        with self._guard:
            self._jobs[job_id] = {"id": job_id, "state": "queued",
                                  "result": None, "error": None}

        def run():
            with self._guard:
                self._jobs[job_id]["state"] = "running"
            try:
                result = target(*args)
                with self._guard:
                    self._jobs[job_id].update(state="done", result=result)
            except Exception as exc:  # surfaced through polling
                log.exception("job %s failed", job_id)
                with self._guard:
                    self._jobs[job_id].update(state="failed", error=str(exc))

        threading.Thread(target=run, daemon=True).start()
        return job_id

    def get(self, job_id: str) -> dict:
        with self._guard:
            if job_id not in self._jobs:
                raise KeyError(job_id)
            return dict(self._jobs[job_id])


# ---------------------------------------------------------------------------
# Request bodies

class CreateSessionBody(BaseModel):
    instance: dict


class QuestionBody(BaseModel):
    question: Optional[str] = None
    t_ex: Optional[int] = None
    cf_target_node: Optional[int] = None


class DecisionBody(BaseModel):
    bundle_id: str
    decision: str  # keep | replace


class SolveBody(BaseModel):
    instance: dict
    prefix: Optional[list[list[int]]] = None
    config: Optional[dict] = None


class PredictBody(BaseModel):
    routes: list[dict]  # each {instance, route}


class AnnotateBody(BaseModel):
    samples: list[dict]  # each {instance, route}


class TrainBody(BaseModel):
    data: list[dict]     # labeled samples {instance, route, labels}
    loss: str = "scbce"
    beta: float = 0.99
    epochs: int = 10
    seed: int = 1234
    checkpoint_path: Optional[str] = None


def _parse_instance(data: dict) -> VrpInstance:
    try:
        return instance_from_dict(data)
    except (VrpError, KeyError, TypeError) as exc:
        raise HTTPException(status_code=400, detail=str(exc))


def create_app(config: ServiceConfig = ServiceConfig()) -> FastAPI:
    app = FastAPI(title="routecf", version="1")
    store = SessionStore(config.sessions_dir)
    jobs = JobRegistry()
    classifier = _load_classifier(config)
    solver_fn = make_solver(config.solver)

    def auth(request: Request):
        if config.bearer_token:
            header = request.headers.get("authorization", "")
            if header != f"Bearer {config.bearer_token}":
                raise HTTPException(status_code=401, detail="bad token")

    def load_or_404(session_id: str) -> dict:
        try:
            return store.load(session_id)
        except KeyError:
            raise HTTPException(status_code=404,
                                detail=f"unknown session {session_id}")

    def session_route(doc: dict) -> tuple[VrpInstance, Route]:
        instance = instance_from_dict(doc["instance"])
        return instance, route_from_dict(instance, doc["current_route"])

    @app.post("/v1/sessions", dependencies=[Depends(auth)])
    def create_session(body: CreateSessionBody):
        instance = _parse_instance(body.instance)
        route = solve(instance, config=config.solver)
        intentions = classifier(instance, route)
        doc = {
            "id": secrets.token_hex(16),
            "instance": instance_to_dict(instance),
            "current_route": route.as_dict(),
            "intentions": [i.as_dict() for i in intentions],
            "n_classes": plan_for(instance.kind).n_classes,
            "class_names": list(plan_for(instance.kind).class_names),
            "history": [],
        }
        store.save(doc)
        return doc

    @app.get("/v1/sessions", dependencies=[Depends(auth)])
    def list_sessions():
        return {"sessions": store.list_ids()}

    @app.get("/v1/sessions/{session_id}", dependencies=[Depends(auth)])
    def get_session(session_id: str):
        return load_or_404(session_id)

    @app.delete("/v1/sessions/{session_id}", dependencies=[Depends(auth)])
    def delete_session(session_id: str):
        load_or_404(session_id)
        store.delete(session_id)
        return {"deleted": session_id}

    @app.post("/v1/sessions/{session_id}/questions",
              dependencies=[Depends(auth)])
    def ask(session_id: str, body: QuestionBody):
        with store.lock(session_id):
            doc = load_or_404(session_id)
            instance, route = session_route(doc)
            if body.question is not None:
                payload = body.question
            elif body.t_ex is not None and body.cf_target_node is not None:
                payload = {"t_ex": body.t_ex,
                           "cf_target_node": body.cf_target_node}
            else:
                raise HTTPException(
                    status_code=400,
                    detail="provide question text or t_ex + cf_target_node")
            try:
                question = parse_question(payload, instance, route)
                bundle = explain(instance, question, classifier,
                                 config.solver, config.text_backend)
            except QuestionError as exc:
                raise HTTPException(
                    status_code=422,
                    detail={"code": exc.code, "message": str(exc),
                            "question": body.question or payload})
            entry = {
                "bundle_id": secrets.token_hex(16),
                "bundle": bundle.as_dict(),
                "cf_intentions": [i.as_dict() for i in bundle.cf_intentions],
                "decision": None,
                "timestamp": time.time(),
            }
            doc["history"].append(entry)
            store.save(doc)
            return {"bundle_id": entry["bundle_id"], "bundle": entry["bundle"]}

    @app.post("/v1/sessions/{session_id}/decisions",
              dependencies=[Depends(auth)])
    def decide(session_id: str, body: DecisionBody):
        if body.decision not in ("keep", "replace"):
            raise HTTPException(status_code=400,
                                detail="decision must be keep or replace")
        with store.lock(session_id):
            doc = load_or_404(session_id)
            entry = next((h for h in doc["history"]
                          if h["bundle_id"] == body.bundle_id), None)
            if entry is None:
                raise HTTPException(status_code=404,
                                    detail=f"unknown bundle {body.bundle_id}")
            if entry["decision"] is not None:
                raise HTTPException(status_code=409, detail="already_decided")
            entry["decision"] = body.decision
            entry["decided_at"] = time.time()
            if body.decision == "replace":
                doc["current_route"] = entry["bundle"]["cf_route"]
                doc["intentions"] = entry["cf_intentions"]
            store.save(doc)
            return doc

    @app.post("/v1/solve", dependencies=[Depends(auth)])
    def solve_endpoint(body: SolveBody):
        instance = _parse_instance(body.instance)
        solver = SolverConfig(**body.config) if body.config else config.solver
        prefix = None
        if body.prefix:
            prefix = FixedPrefix(tuple((a, b) for a, b in body.prefix))
        try:
            route = solve(instance, prefix=prefix, config=solver)
        except VrpError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"route": route.as_dict()}

    @app.post("/v1/predict", dependencies=[Depends(auth)])
    def predict_endpoint(body: PredictBody):
        out = []
        for item in body.routes:
            instance = _parse_instance(item["instance"])
            try:
                route = route_from_dict(instance, item["route"])
            except (VrpError, KeyError) as exc:
                raise HTTPException(status_code=400, detail=str(exc))
            out.append([i.as_dict() for i in classifier(instance, route)])
        return {"predictions": out}

    @app.post("/v1/annotate", dependencies=[Depends(auth)])
    def annotate_endpoint(body: AnnotateBody):
        from .annotator import annotate_route
        out = []
        for item in body.samples:
            instance = _parse_instance(item["instance"])
            try:
                route = route_from_dict(instance, item["route"])
                labels = annotate_route(route, instance, solver_fn)
            except VrpError as exc:
                raise HTTPException(status_code=400, detail=str(exc))
            out.append([l.as_dict() for l in labels])
        return {"labels": out}

    @app.post("/v1/train", dependencies=[Depends(auth)])
    def train_endpoint(body: TrainBody):
        def run_training():
            import torch

            from .classifier import (
                EdgeClassifier,
                ModelConfig,
                TrainingConfig,
                featurize,
                save_checkpoint,
                train,
            )
            samples = []
            kind = None
            for item in body.data:
                instance = instance_from_dict(item["instance"])
                kind = instance.kind
                route = route_from_dict(instance, item["route"])
                samples.append(featurize(instance, route, item["labels"]))
            torch.manual_seed(body.seed)
            model = EdgeClassifier(ModelConfig.for_kind(
                kind, n_classes=plan_for(kind).n_classes))
            cfg = TrainingConfig(loss=body.loss, beta=body.beta,
                                 max_epochs=body.epochs, rng_seed=body.seed)
            history = train(model, samples, None, cfg)
            if body.checkpoint_path:
                save_checkpoint(body.checkpoint_path, model, cfg, history)
            return history.as_dict()

        if not body.data:
            raise HTTPException(status_code=400, detail="empty training data")
        return {"job_id": jobs.submit(run_training)}

    @app.get("/v1/jobs/{job_id}", dependencies=[Depends(auth)])
    def job_status(job_id: str):
        try:
            return jobs.get(job_id)
        except KeyError:
            raise HTTPException(status_code=404,
                                detail=f"unknown job {job_id}")

    return app


def serve(config: ServiceConfig = ServiceConfig()):
    import uvicorn
    uvicorn.run(create_app(config), host="0.0.0.0", port=config.port)
