"""HTTP/JSON surface over the orchestration service.

Request bodies are routed through the same validators the library uses, so
API clients see identical {error_kind, field_path, message} payloads.
"""

from __future__ import annotations

import base64
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .datastore import DataCard
from .errors import (
    DataNotFound,
    DuplicateDataName,
    DuplicateModelName,
    IntentFlowError,
    MalformedDocument,
    SchemaViolation,
    UnknownRun,
    UnknownSession,
)
from .models import ModelCard
from .service import OrchestratorService

_STATUS = {
    UnknownSession: 404,
    UnknownRun: 404,
    DataNotFound: 404,
    DuplicateModelName: 409,
    DuplicateDataName: 409,
}


def _status_for(exc: IntentFlowError) -> int:
    for cls, status in _STATUS.items():
        if isinstance(exc, cls):
            return status
    return 400


def create_app(service: OrchestratorService,
               ui_dir: Path | str | None = None) -> FastAPI:
    app = FastAPI(title="intentflow")

    @app.exception_handler(IntentFlowError)
    async def _intentflow_error(request: Request, exc: IntentFlowError):
        return JSONResponse(status_code=_status_for(exc), content=exc.to_dict())

    async def _json_body(request: Request) -> dict:
        try:
            body = await request.json()
        except Exception as exc:
            raise MalformedDocument(f"request body is not JSON: {exc}") from exc
        if not isinstance(body, dict):
            raise SchemaViolation("request body must be a JSON object",
                                  field_path="$")
        return body

    @app.post("/api/intents", status_code=201)
    async def submit_intent(request: Request):
        document = (await request.body()).decode("utf-8", errors="replace")
        run_id = service.submit_intent(document)
        return {"run_id": run_id}

    @app.post("/api/sessions", status_code=201)
    async def open_session():
        return {"session_id": service.gateway.open_session()}

    @app.get("/api/sessions")
    async def list_sessions():
        return {"sessions": [
            {"session_id": s.session_id, "turns": len(s.chat_log),
             "last_run_id": s.last_run_id}
            for s in service.gateway.list_sessions()]}

    @app.get("/api/sessions/{session_id}")
    async def get_session(session_id: str):
        session = service.gateway.get_session(session_id)
        return {
            "session_id": session.session_id,
            "last_run_id": session.last_run_id,
            "chat_log": [
                {"role": e.role, "text": e.text, "timestamp": e.timestamp}
                for e in session.chat_log],
        }

    @app.post("/api/sessions/{session_id}/utterances", status_code=201)
    async def submit_utterance(session_id: str, request: Request):
        body = await _json_body(request)
        text = body.get("text")
        if not isinstance(text, str) or not text:
            raise SchemaViolation("field 'text' must be a non-empty string",
                                  field_path="text")
        run_id = service.submit_utterance(session_id, text)
        return {"run_id": run_id}

    @app.get("/api/runs")
    async def list_runs():
        return {"runs": [
            {"run_id": r.run_id, "phase": r.phase, "source": r.source,
             "session_id": r.session_id, "created_at": r.created_at}
            for r in service.list_runs()]}

    @app.get("/api/runs/{run_id}")
    async def get_run(run_id: str):
        return service.get_run(run_id).to_api_dict()

    @app.get("/api/models")
    async def list_models():
        return {"models": [c.to_document() for c in service.registry.list_models()]}

    @app.post("/api/models", status_code=201)
    async def add_model(request: Request):
        body = await _json_body(request)
        card = ModelCard.from_document(body)
        service.register_model(card)
        return {"model_name": card.model_name}

    @app.get("/api/data")
    async def list_data():
        return {"data": [c.to_document() for c in service.store.list_cards()]}

    @app.post("/api/data", status_code=201)
    async def add_data(request: Request):
        body = await _json_body(request)
        card_doc = body.get("card")
        if not isinstance(card_doc, dict) or "data_name" not in card_doc:
            raise SchemaViolation("field 'card' must carry a data_name",
                                  field_path="card")
        attributes = card_doc.get("attributes", {})
        if not isinstance(attributes, dict):
            raise SchemaViolation("card.attributes must be an object",
                                  field_path="card.attributes")
        if "payload_b64" in body:
            try:
                payload = base64.b64decode(body["payload_b64"])
            except Exception as exc:
                raise SchemaViolation(f"payload_b64 is not base64: {exc}",
                                      field_path="payload_b64") from exc
        else:
            payload = str(body.get("payload_text", "")).encode("utf-8")
        card = DataCard.make(str(card_doc["data_name"]),
                             {str(k): str(v) for k, v in attributes.items()})
        service.register_data(card, payload)
        return {"data_name": card.data_name}

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True),
                  name="ui")

    return app
