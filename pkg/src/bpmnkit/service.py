"""HTTP facade: sessions, chat turns, uploads, downloads, model selection.

A chat turn runs intent classification, the matching assistant operation,
then compiles, lays out and DI-enriches the result for visualization.  Status
events accumulate per pipeline stage and are returned with the payload (or
streamed as server-sent events with ``?stream=true``).
"""
from __future__ import annotations

import json
import threading
from pathlib import Path

from fastapi import FastAPI, HTTPException, UploadFile
from fastapi.responses import Response, StreamingResponse
from pydantic import BaseModel, Field

from . import assistant
from .edits import EditError
from .layout import compute_layout, embed_di
from .model import parse_process, serialize_process, validate
from .providers import (
    Provider,
    ProviderError,
    UnknownModel,
    list_model_names,
    make_provider,
)
from .xml_codec import (
    CodecError,
    reconstruct_ir,
    to_bpmn_xml,
    validate_xml_structure,
)

MAX_UPLOAD_BYTES = 1_000_000
DEFAULT_MODEL = "mock"


class CreateSessionRequest(BaseModel):
    modality: str = Field(default="json", pattern="^(json|xml)$")
    model: str = DEFAULT_MODEL


class SessionInfo(BaseModel):
    id: str
    modality: str
    model: str
    has_process: bool
    read_only: bool


class ChatRequest(BaseModel):
    message: str


class ChatTurnResult(BaseModel):
    reply_text: str | None = None
    bpmn_xml: str | None = None
    intent: str
    status_events: list[str] = []


class UploadResult(BaseModel):
    ok: bool
    editable: bool
    issues: list[dict] = []


class SelectModelRequest(BaseModel):
    model: str


class ModelList(BaseModel):
    models: list[str]
    default: str


class _SessionSlot:
    def __init__(self, session: assistant.Session, provider: Provider):
        self.session = session
        self.provider = provider
        self.lock = threading.Lock()  # serializes turns within one session


def create_app(
    provider_factory=None,
    sessions_dir: str | None = None,
) -> FastAPI:
    """Build the service; ``provider_factory(name) -> Provider`` is injectable
    so tests can wire scripted mocks."""
    app = FastAPI(title="bpmnkit", version="0.1.0")
    slots: dict[str, _SessionSlot] = {}
    factory = provider_factory or make_provider
    store = Path(sessions_dir) if sessions_dir else None
    if store:
        store.mkdir(parents=True, exist_ok=True)

    def persist(slot: _SessionSlot) -> None:
        if store is None:
            return
        session = slot.session
        payload = {
            "id": session.id,
            "modality": session.modality,
            "model": session.model_name,
            "read_only": session.read_only,
            "process": (
                json.loads(serialize_process(session.current_model))
                if session.current_model
                else None
            ),
            "document": session.current_document,
            "last_rendered_xml": session.last_rendered_xml,
        }
        (store / f"{session.id}.json").write_text(
            json.dumps(payload, indent=2), encoding="utf-8"
        )

    def get_slot(session_id: str) -> _SessionSlot:
        slot = slots.get(session_id)
        if slot is None and store is not None:
            path = store / f"{session_id}.json"
            if path.exists():
                data = json.loads(path.read_text(encoding="utf-8"))
                session = assistant.Session(
                    id=data["id"],
                    modality=data.get("modality", "json"),
                    model_name=data.get("model", DEFAULT_MODEL),
                    read_only=data.get("read_only", False),
                    current_document=data.get("document"),
                    last_rendered_xml=data.get("last_rendered_xml"),
                )
                if data.get("process"):
                    session.current_model = parse_process(
                        json.dumps(data["process"])
                    )
                slot = _SessionSlot(session, factory(session.model_name))
                slots[session_id] = slot
        if slot is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return slot

    def render(slot: _SessionSlot, events: list[str]) -> str:
        session = slot.session
        if session.modality == "json" and session.current_model is not None:
            xml_text = to_bpmn_xml(session.current_model)
        elif session.current_document is not None:
            xml_text = session.current_document
        else:
            raise HTTPException(status_code=409, detail="nothing to render")
        events.append("compiled to BPMN XML")
        layout = compute_layout(xml_text)
        events.append("layout computed")
        enriched = embed_di(xml_text, layout)
        events.append("diagram enriched with DI")
        session.last_rendered_xml = enriched
        return enriched

    def run_turn(slot: _SessionSlot, message: str) -> ChatTurnResult:
        session = slot.session
        events: list[str] = []
        try:
            intent = assistant.classify_intent(
                slot.provider, message, session.history, session.model_name
            )
        except ProviderError as exc:
            raise HTTPException(status_code=502, detail=str(exc)) from exc
        except assistant.AssistantError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        events.append(f"intent: {intent.kind}")
        reply_text: str | None = None
        bpmn_xml: str | None = None
        try:
            if intent.kind == "conversational":
                reply_text = assistant.respond_conversational(
                    slot.provider, message, session.history, session.model_name
                )
                events.append("reply generated")
            elif intent.kind == "create":
                assistant.generate_process(
                    slot.provider, message, session.modality, session
                )
                events.append("process generated")
                bpmn_xml = render(slot, events)
            else:
                if session.read_only:
                    raise HTTPException(
                        status_code=409,
                        detail="the loaded diagram is not block-structured; "
                        "it can be viewed and evaluated but not edited",
                    )
                if session.modality == "json":
                    ops, _ = assistant.propose_edits(slot.provider, session, message)
                    events.append(f"applied {len(ops)} edit operation(s)")
                else:
                    if session.current_document is None and session.current_model:
                        session.current_document = to_bpmn_xml(session.current_model)
                    assistant.edit_xml_direct(slot.provider, session, message)
                    events.append("document replaced")
                bpmn_xml = render(slot, events)
        except assistant.AssistantError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        except EditError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        except ProviderError as exc:
            raise HTTPException(status_code=502, detail=str(exc)) from exc
        session.history.append(assistant.Message(role="user", content=message))
        if reply_text:
            session.history.append(
                assistant.Message(role="assistant", content=reply_text)
            )
        persist(slot)
        return ChatTurnResult(
            reply_text=reply_text,
            bpmn_xml=bpmn_xml,
            intent=intent.kind,
            status_events=events,
        )

    @app.post("/api/sessions", response_model=SessionInfo)
    def create_session(request: CreateSessionRequest) -> SessionInfo:
        try:
            provider = factory(request.model)
        except UnknownModel as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        session = assistant.Session(
            modality=request.modality, model_name=request.model
        )
        slot = _SessionSlot(session, provider)
        slots[session.id] = slot
        persist(slot)
        return SessionInfo(
            id=session.id,
            modality=session.modality,
            model=session.model_name,
            has_process=False,
            read_only=False,
        )

    @app.post("/api/sessions/{session_id}/chat")
    def chat(session_id: str, request: ChatRequest, stream: bool = False):
        slot = get_slot(session_id)
        with slot.lock:
            result = run_turn(slot, request.message)
        if not stream:
            return result
        # Server-push variant: status events first, then the full result.
        def event_stream():
            for event in result.status_events:
                yield f"event: status\ndata: {json.dumps(event)}\n\n"
            yield f"event: result\ndata: {result.model_dump_json()}\n\n"

        return StreamingResponse(event_stream(), media_type="text/event-stream")

    @app.post("/api/sessions/{session_id}/upload", response_model=UploadResult)
    def upload(session_id: str, file: UploadFile) -> UploadResult:
        slot = get_slot(session_id)
        data = file.file.read(MAX_UPLOAD_BYTES + 1)
        if len(data) > MAX_UPLOAD_BYTES:
            raise HTTPException(status_code=413, detail="upload too large")
        try:
            xml_text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise HTTPException(status_code=422, detail="not UTF-8 text") from exc
        report = validate_xml_structure(xml_text)
        issues = [
            {"code": i.code, "message": i.message, "element_id": i.element_id}
            for i in report.issues
        ]
        if not report.ok:
            if any(i.code == "MalformedXml" for i in report.issues):
                raise HTTPException(status_code=422, detail="not well-formed XML")
            return UploadResult(ok=False, editable=False, issues=issues)
        with slot.lock:
            session = slot.session
            try:
                model = reconstruct_ir(xml_text)
                model_report = validate(model)
            except CodecError as exc:
                session.current_model = None
                session.current_document = xml_text
                session.read_only = True
                issues.append(
                    {
                        "code": "Unstructured",
                        "message": str(exc),
                        "element_id": None,
                    }
                )
                persist(slot)
                return UploadResult(ok=True, editable=False, issues=issues)
            if model_report.ok:
                session.current_model = model
                session.current_document = None
                session.read_only = False
                persist(slot)
                return UploadResult(ok=True, editable=True, issues=issues)
            session.current_model = None
            session.current_document = xml_text
            session.read_only = True
            persist(slot)
            return UploadResult(ok=True, editable=False, issues=issues)

    @app.get("/api/sessions/{session_id}/download")
    def download(session_id: str) -> Response:
        slot = get_slot(session_id)
        with slot.lock:
            session = slot.session
            if session.current_model is None and session.current_document is None:
                raise HTTPException(status_code=409, detail="nothing to download")
            enriched = render(slot, [])
            persist(slot)
        return Response(
            content=enriched.encode("utf-8"),
            media_type="application/xml",
            headers={"Content-Disposition": 'attachment; filename="process.bpmn"'},
        )

    @app.get("/api/models", response_model=ModelList)
    def models() -> ModelList:
        return ModelList(models=list_model_names(), default=DEFAULT_MODEL)

    @app.put("/api/sessions/{session_id}/model", response_model=SessionInfo)
    def select_model(session_id: str, request: SelectModelRequest) -> SessionInfo:
        slot = get_slot(session_id)
        if request.model not in list_model_names():
            raise HTTPException(
                status_code=400, detail=f"unknown model {request.model!r}"
            )
        with slot.lock:
            try:
                slot.provider = factory(request.model)
            except UnknownModel as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from exc
            slot.session.model_name = request.model
            persist(slot)
            session = slot.session
            return SessionInfo(
                id=session.id,
                modality=session.modality,
                model=session.model_name,
                has_process=session.current_model is not None
                or session.current_document is not None,
                read_only=session.read_only,
            )

    return app


def default_app() -> FastAPI:
    return create_app()
