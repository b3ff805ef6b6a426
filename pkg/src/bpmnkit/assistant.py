"""LLM orchestration: intent classification, generation, editing, retries.

All provider output passes a validation gate before it touches a session;
invalid output triggers a retry with the validator's findings appended to the
prompt, up to the configured limit.
"""
from __future__ import annotations

import json
import uuid
from dataclasses import dataclass, field

from . import prompts
from .edits import EditError, EditOp, EditResult, apply_edit_script, edit_op_from_wire
from .model import (
    MalformedDocument,
    ModelError,
    ProcessModel,
    ValidationReport,
    parse_process,
    validate,
)
from .providers import Message, Provider, ProviderRequest, ProviderResponse
from .xml_codec import validate_xml_structure

RETRY_LIMIT = 3

INTENT_KINDS = ("conversational", "create", "edit")


class AssistantError(Exception):
    pass


class UnparseableClassification(AssistantError):
    pass


class UnparseableFunctionCalls(AssistantError):
    pass


class GenerationFailed(AssistantError):
    def __init__(self, attempts: list["AttemptRecord"], last_report: ValidationReport | None):
        super().__init__(f"generation failed after {len(attempts)} attempts")
        self.attempts = attempts
        self.last_report = last_report

    def issues(self) -> list[str]:
        seen: list[str] = []
        for attempt in self.attempts:
            for issue in attempt.issues:
                if issue not in seen:
                    seen.append(issue)
        return seen


@dataclass(frozen=True)
class Intent:
    kind: str  # conversational | create | edit


@dataclass
class AttemptRecord:
    input_tokens: int
    output_tokens: int
    latency_ms: float
    ok: bool
    issues: list[str] = field(default_factory=list)


@dataclass
class Session:
    id: str = field(default_factory=lambda: uuid.uuid4().hex)
    history: list[Message] = field(default_factory=list)
    modality: str = "json"  # json | xml
    model_name: str = "mock"
    current_model: ProcessModel | None = None
    current_document: str | None = None  # raw XML, xml modality or uploads
    read_only: bool = False
    last_rendered_xml: str | None = None
    attempts: list[AttemptRecord] = field(default_factory=list)


def _call(
    provider: Provider,
    messages: list[Message],
    model_name: str,
    max_output_tokens: int = 4096,
) -> ProviderResponse:
    request = ProviderRequest(
        model_name=model_name,
        messages=tuple(messages),
        temperature=0.0,
        max_output_tokens=max_output_tokens,
    )
    return provider.complete(request)


def _record(session: Session | None, response: ProviderResponse, ok: bool,
            issues: list[str] | None = None) -> AttemptRecord:
    record = AttemptRecord(
        input_tokens=response.input_tokens,
        output_tokens=response.output_tokens,
        latency_ms=response.latency_ms,
        ok=ok,
        issues=issues or [],
    )
    if session is not None:
        session.attempts.append(record)
    return record


def classify_intent(
    provider: Provider,
    message: str,
    history: list[Message] | None = None,
    model_name: str = "mock",
) -> Intent:
    """Map a user message to conversational / create / edit."""
    if not message.strip():
        raise AssistantError("message must be non-empty")
    messages = prompts.classification_messages(message, history or [])
    last_text = ""
    for _ in range(RETRY_LIMIT):
        response = _call(provider, messages, model_name, max_output_tokens=8)
        last_text = response.text
        token = response.text.strip().lower()
        for kind in INTENT_KINDS:
            if kind in token:
                return Intent(kind=kind)
    raise UnparseableClassification(
        f"could not read an intent from provider output: {last_text!r}"
    )


def respond_conversational(
    provider: Provider,
    message: str,
    history: list[Message] | None = None,
    model_name: str = "mock",
) -> str:
    """Plain chat turn; returns provider text verbatim, mutates nothing."""
    messages = [*(history or []), Message(role="user", content=message)]
    return _call(provider, messages, model_name).text


def generate_process(
    provider: Provider,
    description: str,
    modality: str,
    session: Session | None = None,
    retry_limit: int = RETRY_LIMIT,
):
    """Generate a process from a description; returns a model (json modality)
    or an XML document (xml modality), retrying on invalid output."""
    if not description.strip():
        raise AssistantError("description must be non-empty")
    messages = prompts.generation_messages(description, modality)
    attempts: list[AttemptRecord] = []
    last_report: ValidationReport | None = None
    for _ in range(retry_limit):
        response = _call(provider, messages, getattr(session, "model_name", "mock"))
        issues: list[str] = []
        if modality == "json":
            try:
                model = parse_process(prompts.extract_json(response.text))
                report = validate(model)
            except ModelError as exc:
                issues = [str(exc)]
                report = None
            else:
                last_report = report
                if report.ok:
                    attempts.append(_record(session, response, True))
                    if session is not None:
                        session.current_model = model
                        session.read_only = False
                    return model, attempts
                issues = [i.message for i in report.errors()]
        else:
            xml_text = prompts.extract_xml(response.text)
            report = validate_xml_structure(xml_text)
            last_report = report
            if report.ok:
                attempts.append(_record(session, response, True))
                if session is not None:
                    session.current_document = xml_text
                return xml_text, attempts
            issues = [i.message for i in report.errors()]
        attempts.append(_record(session, response, False, issues))
        messages = messages[:-1] + [
            Message(
                role="user",
                content=messages[-1].content + prompts.retry_suffix(issues),
            )
        ]
    raise GenerationFailed(attempts, last_report)


def propose_edits(
    provider: Provider, session: Session, instruction: str
) -> tuple[list[EditOp], EditResult]:
    """Ask the provider for function calls and apply them atomically."""
    if session.current_model is None:
        raise AssistantError("no process loaded in this session")
    if session.modality != "json":
        raise AssistantError("function-call editing requires the json modality")
    messages = prompts.edit_messages(session.current_model, instruction)
    response = _call(provider, messages, session.model_name)
    try:
        raw = json.loads(prompts.extract_json(response.text))
    except json.JSONDecodeError as exc:
        _record(session, response, False, [str(exc)])
        raise UnparseableFunctionCalls(
            f"provider did not return a JSON call list: {exc}"
        ) from exc
    if isinstance(raw, dict):
        raw = [raw]
    if not isinstance(raw, list):
        _record(session, response, False, ["not a call list"])
        raise UnparseableFunctionCalls("expected a JSON array of function calls")
    try:
        ops = [edit_op_from_wire(item) for item in raw]
    except (EditError, ModelError) as exc:
        _record(session, response, False, [str(exc)])
        raise UnparseableFunctionCalls(str(exc)) from exc
    try:
        result = apply_edit_script(session.current_model, ops)
    except EditError:
        _record(session, response, False, ["script failed"])
        raise
    _record(session, response, True)
    session.current_model = result.model
    return ops, result


def edit_xml_direct(
    provider: Provider,
    session: Session,
    instruction: str,
    retry_limit: int = RETRY_LIMIT,
) -> str:
    """Whole-document XML replacement, gated by structural validation."""
    if session.current_document is None:
        raise AssistantError("no document loaded in this session")
    messages = prompts.xml_edit_messages(session.current_document, instruction)
    attempts: list[AttemptRecord] = []
    last_report: ValidationReport | None = None
    for _ in range(retry_limit):
        response = _call(provider, messages, session.model_name)
        xml_text = prompts.extract_xml(response.text)
        report = validate_xml_structure(xml_text)
        last_report = report
        if report.ok:
            attempts.append(_record(session, response, True))
            session.current_document = xml_text
            return xml_text
        issues = [i.message for i in report.errors()]
        attempts.append(_record(session, response, False, issues))
        messages = messages[:-1] + [
            Message(
                role="user",
                content=messages[-1].content + prompts.retry_suffix(issues),
            )
        ]
    raise GenerationFailed(attempts, last_report)
