"""Block-structured process model: types, JSON codec, validation, generator.

A process is an ordered sequence of elements executed by position.  Exclusive
gateways carry labelled branches (each with an optional ``next`` jump target),
parallel gateways carry plain element lists whose synchronization point is
synthesized downstream by the XML emitter.
"""
from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field, replace
from typing import Iterator, Union

logger = logging.getLogger(__name__)

TASK_TYPES = ("task", "userTask", "serviceTask")
EVENT_TYPES = ("startEvent", "endEvent")
GATEWAY_TYPES = ("exclusiveGateway", "parallelGateway")
ELEMENT_TYPES = TASK_TYPES + EVENT_TYPES + GATEWAY_TYPES

# Reserved for synthesized gateway joins in emitted XML.
JOIN_SUFFIX = "-join"


class ModelError(Exception):
    """Base class for process model errors."""


class MalformedDocument(ModelError):
    """Input text is not a JSON object."""


class UnknownElementType(ModelError):
    def __init__(self, type_: object, path: str):
        super().__init__(f"unsupported element type {type_!r} at {path}")
        self.type = type_
        self.path = path


class MissingField(ModelError):
    def __init__(self, field_name: str, path: str):
        super().__init__(f"missing or invalid field {field_name!r} at {path}")
        self.field = field_name
        self.path = path


class NotFound(ModelError):
    def __init__(self, element_id: str):
        super().__init__(f"no element with id {element_id!r}")
        self.element_id = element_id


@dataclass(frozen=True)
class Task:
    type: str  # task | userTask | serviceTask
    id: str
    label: str


@dataclass(frozen=True)
class Event:
    type: str  # startEvent | endEvent
    id: str
    label: str | None = None


@dataclass(frozen=True)
class Branch:
    condition: str
    path: tuple["Element", ...] = ()
    next: str | None = None


@dataclass(frozen=True)
class ExclusiveGateway:
    id: str
    branches: tuple[Branch, ...]
    label: str | None = None
    has_join: bool = False
    type: str = field(default="exclusiveGateway", init=False)


@dataclass(frozen=True)
class ParallelGateway:
    id: str
    branches: tuple[tuple["Element", ...], ...]
    type: str = field(default="parallelGateway", init=False)


Element = Union[Task, Event, ExclusiveGateway, ParallelGateway]


@dataclass(frozen=True)
class ProcessModel:
    process: tuple[Element, ...] = ()


@dataclass(frozen=True)
class Location:
    """Address of an element: the chain of (gateway id, branch index) pairs
    leading to its owning sequence, plus its index within that sequence."""

    branch_path: tuple[tuple[str, int], ...]
    index: int


@dataclass(frozen=True)
class Issue:
    code: str
    message: str
    element_id: str | None = None
    severity: str = "error"


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[Issue, ...] = ()

    @property
    def ok(self) -> bool:
        return not any(i.severity == "error" for i in self.issues)

    def errors(self) -> tuple[Issue, ...]:
        return tuple(i for i in self.issues if i.severity == "error")


# ---------------------------------------------------------------------------
# Parsing

def parse_process(text: str) -> ProcessModel:
    """Parse a JSON document into a ProcessModel.

    Unknown top-level keys are ignored with a warning.  Structural problems
    (missing ``process`` array, unsupported element types, missing fields)
    raise typed errors; semantic problems are left to :func:`validate`.
    """
    try:
        doc = json.loads(text)
    except (json.JSONDecodeError, TypeError) as exc:
        raise MalformedDocument(str(exc)) from exc
    if not isinstance(doc, dict):
        raise MalformedDocument("top-level JSON value must be an object")
    unknown = sorted(set(doc) - {"process"})
    if unknown:
        logger.warning("ignoring unknown top-level keys: %s", ", ".join(unknown))
    if "process" not in doc or not isinstance(doc["process"], list):
        raise MissingField("process", "$")
    elements = tuple(
        _parse_element(obj, f"$.process[{i}]") for i, obj in enumerate(doc["process"])
    )
    return ProcessModel(process=elements)


def _require_str(obj: dict, key: str, path: str) -> str:
    value = obj.get(key)
    if not isinstance(value, str):
        raise MissingField(key, path)
    return value


def _optional_str(obj: dict, key: str) -> str | None:
    value = obj.get(key)
    return value if isinstance(value, str) else None


def _parse_element(obj: object, path: str) -> Element:
    if not isinstance(obj, dict):
        raise MissingField("type", path)
    type_ = obj.get("type")
    if type_ not in ELEMENT_TYPES:
        raise UnknownElementType(type_, path)
    id_ = _require_str(obj, "id", path)
    if type_ in TASK_TYPES:
        return Task(type=type_, id=id_, label=_require_str(obj, "label", path))
    if type_ in EVENT_TYPES:
        return Event(type=type_, id=id_, label=_optional_str(obj, "label"))
    if type_ == "exclusiveGateway":
        raw = obj.get("branches")
        if not isinstance(raw, list):
            raise MissingField("branches", path)
        branches = tuple(
            _parse_branch(b, f"{path}.branches[{i}]") for i, b in enumerate(raw)
        )
        return ExclusiveGateway(
            id=id_,
            branches=branches,
            label=_optional_str(obj, "label"),
            has_join=bool(obj.get("has_join", False)),
        )
    raw = obj.get("branches")
    if not isinstance(raw, list):
        raise MissingField("branches", path)
    branches = []
    for i, seq in enumerate(raw):
        if not isinstance(seq, list):
            raise MissingField("branches", f"{path}.branches[{i}]")
        branches.append(
            tuple(
                _parse_element(e, f"{path}.branches[{i}][{j}]")
                for j, e in enumerate(seq)
            )
        )
    return ParallelGateway(id=id_, branches=tuple(branches))


def _parse_branch(obj: object, path: str) -> Branch:
    if not isinstance(obj, dict):
        raise MissingField("condition", path)
    condition = _require_str(obj, "condition", path)
    raw_path = obj.get("path", [])
    if not isinstance(raw_path, list):
        raise MissingField("path", path)
    elements = tuple(
        _parse_element(e, f"{path}.path[{i}]") for i, e in enumerate(raw_path)
    )
    return Branch(condition=condition, path=elements, next=_optional_str(obj, "next"))


# ---------------------------------------------------------------------------
# Serialization

def element_to_dict(element: Element) -> dict:
    """Render an element with canonical field order: type, id, label, rest."""
    if isinstance(element, Task):
        return {"type": element.type, "id": element.id, "label": element.label}
    if isinstance(element, Event):
        out = {"type": element.type, "id": element.id}
        if element.label is not None:
            out["label"] = element.label
        return out
    if isinstance(element, ExclusiveGateway):
        out = {"type": element.type, "id": element.id}
        if element.label is not None:
            out["label"] = element.label
        out["has_join"] = element.has_join
        out["branches"] = [_branch_to_dict(b) for b in element.branches]
        return out
    if isinstance(element, ParallelGateway):
        return {
            "type": element.type,
            "id": element.id,
            "branches": [
                [element_to_dict(e) for e in branch] for branch in element.branches
            ],
        }
    raise TypeError(f"not an element: {element!r}")


def _branch_to_dict(branch: Branch) -> dict:
    out: dict = {
        "condition": branch.condition,
        "path": [element_to_dict(e) for e in branch.path],
    }
    if branch.next is not None:
        out["next"] = branch.next
    return out


def model_to_dict(model: ProcessModel) -> dict:
    return {"process": [element_to_dict(e) for e in model.process]}


def serialize_process(model: ProcessModel) -> str:
    return json.dumps(model_to_dict(model), indent=2)


# ---------------------------------------------------------------------------
# Traversal

def iter_elements(model: ProcessModel) -> Iterator[tuple[Element, Location]]:
    """Depth-first, document-order walk over every element in the model."""
    yield from _iter_sequence(model.process, ())


def _iter_sequence(
    seq: tuple[Element, ...], prefix: tuple[tuple[str, int], ...]
) -> Iterator[tuple[Element, Location]]:
    for index, element in enumerate(seq):
        yield element, Location(branch_path=prefix, index=index)
        if isinstance(element, ExclusiveGateway):
            for bi, branch in enumerate(element.branches):
                yield from _iter_sequence(branch.path, prefix + ((element.id, bi),))
        elif isinstance(element, ParallelGateway):
            for bi, branch in enumerate(element.branches):
                yield from _iter_sequence(branch, prefix + ((element.id, bi),))


def find_element(model: ProcessModel, element_id: str) -> tuple[Element, Location]:
    for element, location in iter_elements(model):
        if element.id == element_id:
            return element, location
    raise NotFound(element_id)


def collect_ids(element: Element) -> set[str]:
    """All ids in an element subtree, including nested branch elements."""
    ids = {element.id}
    if isinstance(element, ExclusiveGateway):
        for branch in element.branches:
            for child in branch.path:
                ids |= collect_ids(child)
    elif isinstance(element, ParallelGateway):
        for branch in element.branches:
            for child in branch:
                ids |= collect_ids(child)
    return ids


def all_ids(model: ProcessModel) -> set[str]:
    return {element.id for element, _ in iter_elements(model)}


# ---------------------------------------------------------------------------
# Validation

def _sequences(model: ProcessModel) -> Iterator[tuple[Element, ...]]:
    """Yield every element sequence: the top level, branch paths, parallel
    branches."""
    stack: list[tuple[Element, ...]] = [model.process]
    while stack:
        seq = stack.pop()
        yield seq
        for element in seq:
            if isinstance(element, ExclusiveGateway):
                stack.extend(b.path for b in element.branches)
            elif isinstance(element, ParallelGateway):
                stack.extend(element.branches)


def validate(model: ProcessModel) -> ValidationReport:
    """Check every structural invariant; violations become report entries."""
    issues: list[Issue] = []
    seen: set[str] = set()
    known: set[str] = set()

    for element, _ in iter_elements(model):
        known.add(element.id)

    for element, _ in iter_elements(model):
        eid = element.id
        if eid in seen:
            issues.append(Issue("DuplicateId", f"duplicate element id {eid!r}", eid))
        seen.add(eid)
        if not eid:
            issues.append(Issue("EmptyId", "element id must be non-empty", eid))
        elif any(ch.isspace() for ch in eid):
            issues.append(
                Issue("InvalidId", f"id {eid!r} must not contain whitespace", eid)
            )
        elif eid.endswith(JOIN_SUFFIX):
            issues.append(
                Issue(
                    "ReservedId",
                    f"id {eid!r} uses the reserved {JOIN_SUFFIX!r} suffix",
                    eid,
                )
            )
        if element.type not in ELEMENT_TYPES:
            issues.append(
                Issue("UnknownType", f"unsupported type {element.type!r}", eid)
            )
        if isinstance(element, Task) and not element.label.strip():
            issues.append(Issue("EmptyLabel", "task label must be non-empty", eid))
        if isinstance(element, ExclusiveGateway):
            if len(element.branches) < 2:
                issues.append(
                    Issue("TooFewBranches", "gateway needs at least 2 branches", eid)
                )
            if element.label is None:
                issues.append(
                    Issue(
                        "GatewayLabelMissing",
                        "exclusive gateway has no label",
                        eid,
                        severity="warning",
                    )
                )
            for bi, branch in enumerate(element.branches):
                if not branch.condition.strip():
                    issues.append(
                        Issue(
                            "EmptyCondition",
                            f"branch {bi} of {eid!r} has an empty condition",
                            eid,
                        )
                    )
                if branch.next is not None and branch.next not in known:
                    issues.append(
                        Issue(
                            "DanglingNext",
                            f"branch {bi} of {eid!r} points to missing id "
                            f"{branch.next!r}",
                            eid,
                        )
                    )
                if not element.has_join:
                    ends_in_end = bool(branch.path) and (
                        isinstance(branch.path[-1], Event)
                        and branch.path[-1].type == "endEvent"
                    )
                    if not ends_in_end and branch.next is None:
                        issues.append(
                            Issue(
                                "BranchWithoutExit",
                                f"branch {bi} of joinless gateway {eid!r} must end "
                                "in an end event or declare next",
                                eid,
                            )
                        )
        if isinstance(element, ParallelGateway):
            if len(element.branches) < 2:
                issues.append(
                    Issue("TooFewBranches", "gateway needs at least 2 branches", eid)
                )
            for bi, branch in enumerate(element.branches):
                if not branch:
                    issues.append(
                        Issue(
                            "EmptyParallelBranch",
                            f"branch {bi} of parallel gateway {eid!r} is empty",
                            eid,
                        )
                    )

    top = model.process
    top_types = [e.type for e in top]
    if "startEvent" not in top_types:
        issues.append(
            Issue("MissingStart", "top-level sequence has no start event")
        )
    if "endEvent" not in top_types:
        issues.append(Issue("MissingEnd", "top-level sequence has no end event"))
    if top and top[0].type != "startEvent":
        issues.append(
            Issue(
                "FirstNotStart",
                "top-level sequence must begin with a start event",
                top[0].id,
            )
        )
    # A parallel gateway closing the top-level sequence would leave its
    # synthesized join without a successor.
    if top and isinstance(top[-1], ParallelGateway):
        issues.append(
            Issue(
                "ParallelAtSequenceEnd",
                f"parallel gateway {top[-1].id!r} cannot end the process",
                top[-1].id,
            )
        )

    return ValidationReport(issues=tuple(issues))


# ---------------------------------------------------------------------------
# Random model generator (property-test fuel)

_VERBS = (
    "Review", "Approve", "Ship", "Archive", "Prepare", "Notify", "Check",
    "Schedule", "Record", "Assign", "Inspect", "Escalate", "Confirm", "Pack",
)
_NOUNS = (
    "order", "invoice", "request", "shipment", "claim", "report", "ticket",
    "payment", "contract", "sample", "inventory", "application",
)
_CONDITIONS = (
    "approved", "rejected", "amount over limit", "in stock", "out of stock",
    "priority customer", "needs review", "otherwise", "valid", "expired",
)


class _Generator:
    def __init__(self, rng: random.Random):
        self.rng = rng
        self.counter = 0
        self.placed: list[str] = []  # ids usable as back-edge targets

    def next_id(self, stem: str) -> str:
        self.counter += 1
        return f"{stem}{self.counter}"

    def task(self) -> Task:
        rng = self.rng
        t = Task(
            type=rng.choice(TASK_TYPES),
            id=self.next_id("task"),
            label=f"{rng.choice(_VERBS)} {rng.choice(_NOUNS)}",
        )
        self.placed.append(t.id)
        return t

    def body(self, budget: int, depth: int) -> list[Element]:
        elements: list[Element] = []
        while budget > 0:
            roll = self.rng.random()
            if depth < 3 and budget >= 6 and roll < 0.22:
                gw, used = self.exclusive(budget - 1, depth)
                elements.append(gw)
                budget -= used + 1
            elif depth < 3 and budget >= 4 and roll < 0.40:
                gw, used = self.parallel(budget - 1, depth)
                elements.append(gw)
                budget -= used + 1
            else:
                elements.append(self.task())
                budget -= 1
        return elements

    def exclusive(self, budget: int, depth: int) -> tuple[ExclusiveGateway, int]:
        rng = self.rng
        gid = self.next_id("gateway")
        self.placed.append(gid)
        n_branches = rng.choice((2, 2, 3))
        used = 0
        branches: list[Branch] = []
        conditions = rng.sample(_CONDITIONS, n_branches)
        for bi in range(n_branches):
            share = max(1, (budget - used) // (n_branches - bi)) if budget > used else 0
            kind = rng.random()
            if bi == 0 or kind < 0.55 or not self.placed:
                # Plain branch flowing to the join (may be empty).
                sub = min(share, rng.randint(0, 3))
                path = tuple(self.body(sub, depth + 1))
                used += sub
                branches.append(Branch(condition=conditions[bi], path=path))
            elif kind < 0.8:
                # Loop back to an earlier element.
                targets = list(self.placed)
                sub = min(share, rng.randint(0, 2))
                path = tuple(self.task() for _ in range(sub))
                used += sub
                branches.append(
                    Branch(
                        condition=conditions[bi],
                        path=path,
                        next=rng.choice(targets),
                    )
                )
            else:
                # Branch terminating in its own end event.
                sub = min(share, rng.randint(0, 2))
                path = tuple(self.task() for _ in range(sub))
                end = Event(type="endEvent", id=self.next_id("end"), label=None)
                self.placed.append(end.id)
                used += sub + 1
                branches.append(Branch(condition=conditions[bi], path=path + (end,)))
        gw = ExclusiveGateway(
            id=gid,
            branches=tuple(branches),
            label=f"{rng.choice(_NOUNS).capitalize()} decision",
            has_join=True,
        )
        return gw, used

    def parallel(self, budget: int, depth: int) -> tuple[ParallelGateway, int]:
        rng = self.rng
        gid = self.next_id("parallel")
        self.placed.append(gid)
        n_branches = rng.choice((2, 2, 3))
        used = 0
        branches: list[tuple[Element, ...]] = []
        for bi in range(n_branches):
            share = max(0, (budget - used) // (n_branches - bi))
            sub = min(share, rng.randint(1, 3))
            path = self.body(sub, depth + 1)
            used += sub
            if not path or isinstance(path[-1], ParallelGateway):
                path.append(self.task())
                used += 1
            branches.append(tuple(path))
        return ParallelGateway(id=gid, branches=tuple(branches)), used


def random_process(seed: int, target_size: int) -> ProcessModel:
    """Deterministic random model of roughly ``target_size`` elements.

    Every generated model passes :func:`validate`.  Gateways nest up to
    depth 3; loops appear as branch ``next`` references to earlier elements.
    """
    if target_size < 2:
        raise ValueError("target_size must be at least 2")
    gen = _Generator(random.Random(seed))
    start = Event(type="startEvent", id="start", label="Start")
    gen.placed.append(start.id)
    body = gen.body(target_size - 2, 0)
    end = Event(type="endEvent", id="end", label="End")
    return ProcessModel(process=(start, *body, end))
