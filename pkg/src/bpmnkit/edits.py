"""Atomic edit operations over process models, plus all-or-nothing scripts.

Every operation is a pure function from model to model.  The wire form of an
operation is ``{"function": name, "arguments": {...}}``; the five function
names are delete_element, redirect_branch, add_element, move_element and
update_element.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Union

from .model import (
    Branch,
    Element,
    Event,
    ExclusiveGateway,
    NotFound,
    ParallelGateway,
    ProcessModel,
    Task,
    ValidationReport,
    _parse_element,
    all_ids,
    collect_ids,
    element_to_dict,
    find_element,
    iter_elements,
    validate,
)


class EditError(Exception):
    """Base class for edit failures."""


class WouldOrphanReference(EditError):
    def __init__(self, ids: list[str]):
        super().__init__(f"deletion would orphan next references to: {', '.join(ids)}")
        self.ids = ids


class WouldRemoveLastStartOrEnd(EditError):
    pass


class DuplicateId(EditError):
    pass


class BothAnchorsGiven(EditError):
    pass


class NoAnchorGiven(EditError):
    pass


class AnchorInsideMoved(EditError):
    pass


class SelfAnchor(EditError):
    pass


class NoMatchingBranch(EditError):
    pass


class AmbiguousCondition(EditError):
    def __init__(self, count: int):
        super().__init__(f"condition matches {count} branches")
        self.count = count


class ResultingModelInvalid(EditError):
    def __init__(self, report: ValidationReport):
        errors = "; ".join(i.message for i in report.errors())
        super().__init__(f"edited model fails validation: {errors}")
        self.report = report


class UnknownEditFunction(EditError):
    pass


class ScriptFailed(EditError):
    def __init__(self, index: int, cause: Exception):
        super().__init__(f"edit script failed at op {index}: {cause}")
        self.index = index
        self.cause = cause


@dataclass(frozen=True)
class DeleteElement:
    element_id: str


@dataclass(frozen=True)
class RedirectBranch:
    branch_condition: str
    next_id: str


@dataclass(frozen=True)
class AddElement:
    element: Element
    before_id: str | None = None
    after_id: str | None = None


@dataclass(frozen=True)
class MoveElement:
    element_id: str
    before_id: str | None = None
    after_id: str | None = None


@dataclass(frozen=True)
class UpdateElement:
    new_element: Element


EditOp = Union[DeleteElement, RedirectBranch, AddElement, MoveElement, UpdateElement]


@dataclass(frozen=True)
class EditResult:
    model: ProcessModel
    applied: tuple[EditOp, ...]
    report: ValidationReport


# ---------------------------------------------------------------------------
# Sequence rewriting helpers

def _map_sequences(seq: tuple[Element, ...], fn) -> tuple[Element, ...]:
    """Apply ``fn`` to this sequence and, recursively, every nested one."""
    out = []
    for element in fn(seq):
        if isinstance(element, ExclusiveGateway):
            element = replace(
                element,
                branches=tuple(
                    replace(b, path=_map_sequences(b.path, fn))
                    for b in element.branches
                ),
            )
        elif isinstance(element, ParallelGateway):
            element = replace(
                element,
                branches=tuple(_map_sequences(b, fn) for b in element.branches),
            )
        out.append(element)
    return tuple(out)


def _remove_by_id(model: ProcessModel, element_id: str) -> ProcessModel:
    def drop(seq: tuple[Element, ...]) -> tuple[Element, ...]:
        return tuple(e for e in seq if e.id != element_id)

    return ProcessModel(process=_map_sequences(model.process, drop))


def _insert_at_anchor(
    model: ProcessModel, anchor_id: str, element: Element, before: bool
) -> ProcessModel:
    def ins(seq: tuple[Element, ...]) -> tuple[Element, ...]:
        out = []
        for e in seq:
            if e.id == anchor_id and before:
                out.append(element)
            out.append(e)
            if e.id == anchor_id and not before:
                out.append(element)
        return tuple(out)

    return ProcessModel(process=_map_sequences(model.process, ins))


def _next_references(model: ProcessModel) -> list[tuple[str, str]]:
    """All (gateway id, target id) pairs declared by branch next fields."""
    refs = []
    for element, _ in iter_elements(model):
        if isinstance(element, ExclusiveGateway):
            for branch in element.branches:
                if branch.next is not None:
                    refs.append((element.id, branch.next))
    return refs


# ---------------------------------------------------------------------------
# The five edit functions

def delete_element(model: ProcessModel, element_id: str) -> ProcessModel:
    element, location = find_element(model, element_id)
    removed = collect_ids(element)
    if isinstance(element, Event) and not location.branch_path:
        remaining = [
            e
            for e in model.process
            if e.type == element.type and e.id != element.id
        ]
        if not remaining:
            raise WouldRemoveLastStartOrEnd(
                f"{element.id!r} is the last top-level {element.type}"
            )
    result = _remove_by_id(model, element_id)
    orphaned = sorted(
        {target for _, target in _next_references(result) if target in removed}
    )
    if orphaned:
        raise WouldOrphanReference(orphaned)
    return result


def add_element(
    model: ProcessModel,
    element: Element,
    before_id: str | None = None,
    after_id: str | None = None,
) -> ProcessModel:
    if before_id is not None and after_id is not None:
        raise BothAnchorsGiven("provide only one of before_id/after_id")
    if before_id is None and after_id is None:
        raise NoAnchorGiven("one of before_id/after_id is required")
    anchor = before_id if before_id is not None else after_id
    find_element(model, anchor)  # NotFound if absent
    clash = collect_ids(element) & all_ids(model)
    if clash:
        raise DuplicateId(f"ids already in use: {', '.join(sorted(clash))}")
    return _insert_at_anchor(model, anchor, element, before=before_id is not None)


def move_element(
    model: ProcessModel,
    element_id: str,
    before_id: str | None = None,
    after_id: str | None = None,
) -> ProcessModel:
    if before_id is not None and after_id is not None:
        raise BothAnchorsGiven("provide only one of before_id/after_id")
    if before_id is None and after_id is None:
        raise NoAnchorGiven("one of before_id/after_id is required")
    anchor = before_id if before_id is not None else after_id
    element, _ = find_element(model, element_id)
    if anchor == element_id:
        raise SelfAnchor("cannot anchor an element to itself")
    find_element(model, anchor)
    if anchor in collect_ids(element):
        raise AnchorInsideMoved(f"anchor {anchor!r} is nested inside {element_id!r}")
    stripped = _remove_by_id(model, element_id)
    return _insert_at_anchor(stripped, anchor, element, before=before_id is not None)


def update_element(model: ProcessModel, new_element: Element) -> ProcessModel:
    find_element(model, new_element.id)

    def swap(seq: tuple[Element, ...]) -> tuple[Element, ...]:
        return tuple(new_element if e.id == new_element.id else e for e in seq)

    result = ProcessModel(process=_map_sequences(model.process, swap))
    report = validate(result)
    if not report.ok:
        raise ResultingModelInvalid(report)
    return result


def _norm_condition(text: str) -> str:
    return text.strip().lower()


def redirect_branch(
    model: ProcessModel, branch_condition: str, next_id: str
) -> ProcessModel:
    wanted = _norm_condition(branch_condition)
    matches = 0
    for element, _ in iter_elements(model):
        if isinstance(element, ExclusiveGateway):
            matches += sum(
                1 for b in element.branches if _norm_condition(b.condition) == wanted
            )
    if matches == 0:
        raise NoMatchingBranch(f"no branch with condition {branch_condition!r}")
    if matches > 1:
        raise AmbiguousCondition(matches)
    find_element(model, next_id)

    def retarget(seq: tuple[Element, ...]) -> tuple[Element, ...]:
        out = []
        for e in seq:
            if isinstance(e, ExclusiveGateway):
                e = replace(
                    e,
                    branches=tuple(
                        replace(b, next=next_id)
                        if _norm_condition(b.condition) == wanted
                        else b
                        for b in e.branches
                    ),
                )
            out.append(e)
        return tuple(out)

    return ProcessModel(process=_map_sequences(model.process, retarget))


# ---------------------------------------------------------------------------
# Script application

def apply_edit_op(model: ProcessModel, op: EditOp) -> ProcessModel:
    if isinstance(op, DeleteElement):
        return delete_element(model, op.element_id)
    if isinstance(op, RedirectBranch):
        return redirect_branch(model, op.branch_condition, op.next_id)
    if isinstance(op, AddElement):
        return add_element(model, op.element, op.before_id, op.after_id)
    if isinstance(op, MoveElement):
        return move_element(model, op.element_id, op.before_id, op.after_id)
    if isinstance(op, UpdateElement):
        return update_element(model, op.new_element)
    raise UnknownEditFunction(f"not an edit op: {op!r}")


def apply_edit_script(model: ProcessModel, ops: list[EditOp]) -> EditResult:
    """Apply ops in order; any failure leaves the input model untouched."""
    current = model
    for index, op in enumerate(ops):
        try:
            current = apply_edit_op(current, op)
        except (EditError, NotFound) as exc:
            raise ScriptFailed(index, exc) from exc
    report = validate(current)
    if not report.ok:
        raise ScriptFailed(len(ops), ResultingModelInvalid(report))
    return EditResult(model=current, applied=tuple(ops), report=report)


# ---------------------------------------------------------------------------
# Wire form

_FUNCTION_NAMES = (
    "delete_element",
    "redirect_branch",
    "add_element",
    "move_element",
    "update_element",
)


def edit_op_from_wire(obj: dict) -> EditOp:
    """Decode ``{"function": ..., "arguments": {...}}`` into an EditOp."""
    if not isinstance(obj, dict):
        raise UnknownEditFunction(f"not a function call object: {obj!r}")
    name = obj.get("function")
    args = obj.get("arguments")
    if name not in _FUNCTION_NAMES:
        raise UnknownEditFunction(f"unknown function {name!r}")
    if not isinstance(args, dict):
        raise UnknownEditFunction(f"missing arguments for {name}")
    try:
        if name == "delete_element":
            return DeleteElement(element_id=str(args["element_id"]))
        if name == "redirect_branch":
            return RedirectBranch(
                branch_condition=str(args["branch_condition"]),
                next_id=str(args["next_id"]),
            )
        if name == "add_element":
            return AddElement(
                element=_parse_element(args["element"], "$.element"),
                before_id=args.get("before_id"),
                after_id=args.get("after_id"),
            )
        if name == "move_element":
            return MoveElement(
                element_id=str(args["element_id"]),
                before_id=args.get("before_id"),
                after_id=args.get("after_id"),
            )
        return UpdateElement(
            new_element=_parse_element(args["new_element"], "$.new_element")
        )
    except KeyError as exc:
        raise UnknownEditFunction(f"{name} is missing argument {exc}") from exc


def edit_op_to_wire(op: EditOp) -> dict:
    if isinstance(op, DeleteElement):
        return {"function": "delete_element", "arguments": {"element_id": op.element_id}}
    if isinstance(op, RedirectBranch):
        return {
            "function": "redirect_branch",
            "arguments": {
                "branch_condition": op.branch_condition,
                "next_id": op.next_id,
            },
        }
    if isinstance(op, AddElement):
        args: dict = {"element": element_to_dict(op.element)}
        if op.before_id is not None:
            args["before_id"] = op.before_id
        if op.after_id is not None:
            args["after_id"] = op.after_id
        return {"function": "add_element", "arguments": args}
    if isinstance(op, MoveElement):
        args = {"element_id": op.element_id}
        if op.before_id is not None:
            args["before_id"] = op.before_id
        if op.after_id is not None:
            args["after_id"] = op.after_id
        return {"function": "move_element", "arguments": args}
    if isinstance(op, UpdateElement):
        return {
            "function": "update_element",
            "arguments": {"new_element": element_to_dict(op.new_element)},
        }
    raise UnknownEditFunction(f"not an edit op: {op!r}")
