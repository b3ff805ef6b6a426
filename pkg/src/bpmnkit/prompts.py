"""Prompt templates for intent classification, generation and editing."""
from __future__ import annotations

import json

from .model import ProcessModel, serialize_process

IR_SCHEMA_GUIDE = """\
You produce business processes as JSON with a single top-level key "process"
holding an ordered array of elements executed by position.

Element kinds:
- Task: {"type": "task" | "userTask" | "serviceTask", "id": <string>,
  "label": <short task description>}
- Event: {"type": "startEvent" | "endEvent", "id": <string>,
  "label": <optional string>}
- Exclusive gateway: {"type": "exclusiveGateway", "id": <string>,
  "label": <string>, "has_join": <bool>, "branches": [
    {"condition": <string>, "path": [<elements>], "next": <optional id>}]}
- Parallel gateway: {"type": "parallelGateway", "id": <string>,
  "branches": [[<elements>], [<elements>]]}

Rules: ids are unique, non-empty and contain no whitespace; the top-level
array starts with exactly one startEvent and contains at least one endEvent;
every gateway has at least two branches; parallel branches are non-empty;
synchronization of parallel branches is automatic, never model a join
yourself. Reply with the JSON document only, no commentary.
"""

EDIT_FUNCTIONS_GUIDE = """\
You edit the process by emitting a JSON array of function calls, each shaped
{"function": <name>, "arguments": {...}}. Available functions:

- delete_element(element_id): removes an element (and, for gateways, their
  branch contents); surrounding elements reconnect automatically.
- redirect_branch(branch_condition, next_id): points the exclusive-gateway
  branch matching the condition at a new target element.
- add_element(element, before_id?, after_id?): inserts a new element next to
  the anchor; provide exactly one anchor.
- move_element(element_id, before_id?, after_id?): relocates an element;
  provide exactly one anchor.
- update_element(new_element): replaces the element with the same id.

Reply with the JSON array only, no commentary.
"""

XML_GUIDE = """\
You produce complete BPMN 2.0 XML documents: a definitions root with one
process element containing flow nodes (startEvent, endEvent, task, userTask,
serviceTask, exclusiveGateway, parallelGateway) and sequenceFlow elements
wiring them together. Every flow must reference existing node ids, the
process needs at least one start and one end event, and every node must be
reachable from a start event. Reply with the XML document only.
"""

CLASSIFY_PROMPT = """\
Classify the user's latest message as exactly one of: conversational
(questions or chat that do not change the diagram), create (a request to
model a new process), edit (a request to change the currently loaded
process). Reply with the single word.
"""


def classification_messages(message: str, history: list) -> list:
    from .providers import Message

    return [
        Message(role="system", content=CLASSIFY_PROMPT),
        *history,
        Message(role="user", content=message),
    ]


def generation_messages(description: str, modality: str) -> list:
    from .providers import Message

    guide = IR_SCHEMA_GUIDE if modality == "json" else XML_GUIDE
    return [
        Message(role="system", content=guide),
        Message(role="user", content=f"Model this process:\n{description}"),
    ]


def edit_messages(model: ProcessModel, instruction: str) -> list:
    from .providers import Message

    return [
        Message(role="system", content=EDIT_FUNCTIONS_GUIDE),
        Message(
            role="user",
            content=(
                "Current process:\n"
                + serialize_process(model)
                + "\n\nRequested change:\n"
                + instruction
            ),
        ),
    ]


def xml_edit_messages(xml_text: str, instruction: str) -> list:
    from .providers import Message

    return [
        Message(role="system", content=XML_GUIDE),
        Message(
            role="user",
            content=(
                "Current BPMN document:\n"
                + xml_text
                + "\n\nApply this change and return the full updated document:\n"
                + instruction
            ),
        ),
    ]


def retry_suffix(issues: list[str]) -> str:
    return (
        "\n\nYour previous answer was rejected by the validator:\n- "
        + "\n- ".join(issues)
        + "\nFix these problems and reply again with the corrected document."
    )


def extract_json(text: str) -> str:
    """Pull the first JSON object or array out of a model response."""
    cleaned = text.strip()
    if cleaned.startswith("```"):
        first_newline = cleaned.find("\n")
        cleaned = cleaned[first_newline + 1 :] if first_newline >= 0 else cleaned
        if cleaned.rstrip().endswith("```"):
            cleaned = cleaned.rstrip()[:-3]
        cleaned = cleaned.strip()
    # Prefer whichever bracket opens first so arrays of objects stay whole.
    pairs = sorted(
        (p for p in (("{", "}"), ("[", "]")) if cleaned.find(p[0]) >= 0),
        key=lambda p: cleaned.find(p[0]),
    )
    for opener, closer in pairs:
        start = cleaned.find(opener)
        end = cleaned.rfind(closer)
        if end > start:
            candidate = cleaned[start : end + 1]
            try:
                json.loads(candidate)
                return candidate
            except json.JSONDecodeError:
                continue
    return cleaned


def extract_xml(text: str) -> str:
    cleaned = text.strip()
    if cleaned.startswith("```"):
        first_newline = cleaned.find("\n")
        cleaned = cleaned[first_newline + 1 :] if first_newline >= 0 else cleaned
        if cleaned.rstrip().endswith("```"):
            cleaned = cleaned.rstrip()[:-3]
        cleaned = cleaned.strip()
    start = cleaned.find("<")
    return cleaned[start:] if start > 0 else cleaned
