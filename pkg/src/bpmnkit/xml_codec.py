"""BPMN 2.0 XML codec: emit models, import flow graphs, rebuild models.

The emitter synthesizes join gateways (id ``<split_id>-join``) for parallel
gateways and for exclusive gateways declared with ``has_join``.  Branch
conditions travel on the sequence flow ``name`` attribute.  Output is fully
deterministic so golden tests can compare bytes.
"""
from __future__ import annotations

from dataclasses import dataclass
from xml.etree import ElementTree as ET
from xml.sax.saxutils import escape, quoteattr

from .model import (
    Branch,
    Element,
    Event,
    ExclusiveGateway,
    JOIN_SUFFIX,
    ParallelGateway,
    ProcessModel,
    Task,
    ValidationReport,
    Issue,
    validate,
)

BPMN_NS = "http://www.omg.org/spec/BPMN/20100524/MODEL"
BPMNDI_NS = "http://www.omg.org/spec/BPMN/20100524/DI"
DC_NS = "http://www.omg.org/spec/DD/20100524/DC"
DI_NS = "http://www.omg.org/spec/DD/20100524/DI"

PROCESS_ID = "Process_1"
TARGET_NAMESPACE = "http://bpmnkit.dev/schema/bpmn"
EXPORTER = "bpmnkit"

SUPPORTED_NODE_TYPES = (
    "task",
    "userTask",
    "serviceTask",
    "startEvent",
    "endEvent",
    "exclusiveGateway",
    "parallelGateway",
)

# Element names known to BPMN but outside the supported subset; anything in
# this set yields UnsupportedElement instead of being treated as foreign noise.
_KNOWN_FOREIGN = {
    "inclusiveGateway",
    "eventBasedGateway",
    "complexGateway",
    "intermediateCatchEvent",
    "intermediateThrowEvent",
    "boundaryEvent",
    "subProcess",
    "callActivity",
    "scriptTask",
    "sendTask",
    "receiveTask",
    "manualTask",
    "businessRuleTask",
}


class CodecError(Exception):
    """Base class for XML codec errors."""


class InvalidModel(CodecError):
    def __init__(self, report: ValidationReport):
        errors = "; ".join(i.message for i in report.errors())
        super().__init__(f"model fails validation: {errors}")
        self.report = report


class MalformedXml(CodecError):
    pass


class NoProcessElement(CodecError):
    pass


class UnsupportedElement(CodecError):
    def __init__(self, type_: str):
        super().__init__(f"unsupported BPMN element type: {type_}")
        self.type = type_


class Unstructured(CodecError):
    """The flow graph is not block-structured over the supported subset."""


@dataclass(frozen=True)
class FlowNode:
    id: str
    type: str
    label: str = ""


@dataclass(frozen=True)
class FlowEdge:
    source: str
    target: str
    label: str = ""


@dataclass(frozen=True)
class FlowGraph:
    nodes: tuple[FlowNode, ...] = ()
    edges: tuple[FlowEdge, ...] = ()

    def node_ids(self) -> set[str]:
        return {n.id for n in self.nodes}

    def by_id(self) -> dict[str, FlowNode]:
        return {n.id: n for n in self.nodes}


# ---------------------------------------------------------------------------
# Emission

class _Emitter:
    def __init__(self) -> None:
        self.nodes: list[tuple[str, str, str | None]] = []  # (type, id, name)
        self.flows: list[tuple[str, str, str | None]] = []  # (source, target, name)
        self.deferred: list[tuple[str, str, str | None]] = []
        self.known_targets: dict[str, str] = {}  # element id -> node id

    def node(self, type_: str, id_: str, name: str | None) -> None:
        self.nodes.append((type_, id_, name))
        self.known_targets[id_] = id_

    def flow(self, source: str, target: str, name: str | None = None) -> None:
        self.flows.append((source, target, name))

    # Exit stubs are (node id, pending condition label) pairs; conditions are
    # attached to the first flow leaving an exclusive split.
    def emit_sequence(
        self, seq: tuple[Element, ...], pending: list[tuple[str, str | None]]
    ) -> list[tuple[str, str | None]]:
        for element in seq:
            pending = self.emit_element(element, pending)
        return pending

    def connect(self, pending: list[tuple[str, str | None]], target: str) -> None:
        for source, label in pending:
            self.flow(source, target, label)

    def emit_element(
        self, element: Element, pending: list[tuple[str, str | None]]
    ) -> list[tuple[str, str | None]]:
        if isinstance(element, (Task, Event)):
            self.node(element.type, element.id, element.label)
            self.connect(pending, element.id)
            if isinstance(element, Event) and element.type == "endEvent":
                return []
            return [(element.id, None)]
        if isinstance(element, ParallelGateway):
            return self._emit_parallel(element, pending)
        if isinstance(element, ExclusiveGateway):
            return self._emit_exclusive(element, pending)
        raise TypeError(f"not an element: {element!r}")

    def _emit_parallel(
        self, gw: ParallelGateway, pending: list[tuple[str, str | None]]
    ) -> list[tuple[str, str | None]]:
        self.node("parallelGateway", gw.id, None)
        self.connect(pending, gw.id)
        join_inputs: list[tuple[str, str | None]] = []
        for branch in gw.branches:
            exits = self.emit_sequence(branch, [(gw.id, None)])
            join_inputs.extend(exits)
        join_id = gw.id + JOIN_SUFFIX
        self.node("parallelGateway", join_id, None)
        self.connect(join_inputs, join_id)
        return [(join_id, None)]

    def _emit_exclusive(
        self, gw: ExclusiveGateway, pending: list[tuple[str, str | None]]
    ) -> list[tuple[str, str | None]]:
        self.node("exclusiveGateway", gw.id, gw.label)
        self.connect(pending, gw.id)
        join_id = gw.id + JOIN_SUFFIX
        join_inputs: list[tuple[str, str | None]] = []
        join_fed = False
        for branch in gw.branches:
            entry = [(gw.id, branch.condition)]
            if not branch.path:
                # Emit the split's outgoing flow now so that branch order is
                # preserved in the document (it drives reconstruction).
                if branch.next is not None:
                    self.flow(gw.id, branch.next, branch.condition)
                elif gw.has_join:
                    self.flow(gw.id, join_id, branch.condition)
                    join_fed = True
                continue
            exits = self.emit_sequence(branch.path, entry)
            if branch.next is not None:
                for source, label in exits:
                    self.deferred.append((source, branch.next, label))
            elif gw.has_join:
                join_inputs.extend(exits)
            # A joinless branch without next ends inside its own path.
        # When every branch jumps or ends elsewhere the join would have no
        # inputs; emitting it would orphan a node, so the gateway ends here.
        if gw.has_join and (join_inputs or join_fed):
            self.node("exclusiveGateway", join_id, None)
            self.connect(join_inputs, join_id)
            return [(join_id, None)]
        return []

    def resolve_deferred(self) -> None:
        for source, target, label in self.deferred:
            self.flow(source, self.known_targets[target], label)


def to_bpmn_xml(model: ProcessModel) -> str:
    """Compile a validate-passing model to BPMN 2.0 XML (no DI section)."""
    report = validate(model)
    if not report.ok:
        raise InvalidModel(report)
    emitter = _Emitter()
    emitter.emit_sequence(model.process, [])
    emitter.resolve_deferred()

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<bpmn:definitions xmlns:bpmn={quoteattr(BPMN_NS)}'
        f' id="Definitions_1" targetNamespace={quoteattr(TARGET_NAMESPACE)}'
        f' exporter={quoteattr(EXPORTER)} exporterVersion="0.1.0">',
        f'  <bpmn:process id="{PROCESS_ID}" isExecutable="true">',
    ]
    for type_, id_, name in emitter.nodes:
        attrs = f"id={quoteattr(id_)}"
        if name:
            attrs += f" name={quoteattr(name)}"
        lines.append(f"    <bpmn:{type_} {attrs} />")
    for index, (source, target, name) in enumerate(emitter.flows, start=1):
        attrs = f'id="Flow_{index}"'
        if name:
            attrs += f" name={quoteattr(name)}"
        attrs += f" sourceRef={quoteattr(source)} targetRef={quoteattr(target)}"
        lines.append(f"    <bpmn:sequenceFlow {attrs} />")
    lines.append("  </bpmn:process>")
    lines.append("</bpmn:definitions>")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Import

def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _parse_xml(xml_text: str) -> ET.Element:
    try:
        return ET.fromstring(xml_text)
    except ET.ParseError as exc:
        raise MalformedXml(str(exc)) from exc


def _find_process(root: ET.Element) -> ET.Element:
    if _local(root.tag) == "process":
        return root
    for child in root.iter():
        if _local(child.tag) == "process":
            return child
    raise NoProcessElement("document contains no BPMN process element")


_DI_LOCALS = {"BPMNDiagram", "BPMNPlane", "BPMNShape", "BPMNEdge", "Bounds", "waypoint"}


def scan_process(xml_text: str) -> tuple[str, list[FlowNode], list[tuple[str, FlowEdge]]]:
    """Return (process id, flow nodes, (flow id, edge) pairs) in document order."""
    root = _parse_xml(xml_text)
    process = _find_process(root)
    nodes: list[FlowNode] = []
    flows: list[tuple[str, FlowEdge]] = []
    for child in process:
        tag = _local(child.tag)
        if tag in _DI_LOCALS:
            continue
        node_id = child.get("id")
        if node_id is None:
            continue
        if tag == "sequenceFlow":
            flows.append(
                (
                    node_id,
                    FlowEdge(
                        source=child.get("sourceRef", ""),
                        target=child.get("targetRef", ""),
                        label=child.get("name", ""),
                    ),
                )
            )
        else:
            nodes.append(FlowNode(id=node_id, type=tag, label=child.get("name", "")))
    return process.get("id", PROCESS_ID), nodes, flows


def import_flow_graph(xml_text: str) -> FlowGraph:
    """Build the labelled flow graph of a BPMN document, ignoring DI."""
    _, nodes, flows = scan_process(xml_text)
    return FlowGraph(nodes=tuple(nodes), edges=tuple(edge for _, edge in flows))


# ---------------------------------------------------------------------------
# Structural XML validation

def validate_xml_structure(xml_text: str) -> ValidationReport:
    """Syntactic gate for raw BPMN documents (the direct-XML modality)."""
    issues: list[Issue] = []
    try:
        _, nodes, flows = scan_process(xml_text)
    except MalformedXml as exc:
        return ValidationReport(
            issues=(Issue("MalformedXml", f"not well-formed XML: {exc}"),)
        )
    except NoProcessElement as exc:
        return ValidationReport(issues=(Issue("NoProcessElement", str(exc)),))

    seen: set[str] = set()
    for node in nodes:
        if node.id in seen:
            issues.append(Issue("DuplicateId", f"duplicate id {node.id!r}", node.id))
        seen.add(node.id)
    node_ids = {n.id for n in nodes}
    for flow_id, edge in flows:
        if flow_id in seen:
            issues.append(Issue("DuplicateId", f"duplicate id {flow_id!r}", flow_id))
        seen.add(flow_id)
        for endpoint in (edge.source, edge.target):
            if endpoint not in node_ids:
                issues.append(
                    Issue(
                        "DanglingFlow",
                        f"flow {flow_id!r} references missing node {endpoint!r}",
                        flow_id,
                    )
                )

    starts = [n.id for n in nodes if n.type == "startEvent"]
    if not starts:
        issues.append(Issue("MissingStart", "no start event"))
    if not any(n.type == "endEvent" for n in nodes):
        issues.append(Issue("MissingEnd", "no end event"))

    if starts:
        succ: dict[str, list[str]] = {n.id: [] for n in nodes}
        for _, edge in flows:
            if edge.source in succ and edge.target in node_ids:
                succ[edge.source].append(edge.target)
        reached = set(starts)
        frontier = list(starts)
        while frontier:
            current = frontier.pop()
            for nxt in succ.get(current, ()):
                if nxt not in reached:
                    reached.add(nxt)
                    frontier.append(nxt)
        for node in nodes:
            if node.id not in reached:
                issues.append(
                    Issue(
                        "Unreachable",
                        f"node {node.id!r} is unreachable from any start event",
                        node.id,
                    )
                )
    return ValidationReport(issues=tuple(issues))


# ---------------------------------------------------------------------------
# Reconstruction (structured XML -> model)

class _Reconstructor:
    def __init__(self, nodes: list[FlowNode], flows: list[tuple[str, FlowEdge]]):
        self.nodes = {n.id: n for n in nodes}
        self.succ: dict[str, list[tuple[str, str]]] = {n.id: [] for n in nodes}
        for _, edge in flows:
            if edge.source in self.succ:
                self.succ[edge.source].append((edge.target, edge.label))
        # visited[id] is "element" for consumed model elements, "join" for
        # consumed synthesized joins.
        self.visited: dict[str, str] = {}

    def out(self, node_id: str) -> list[tuple[str, str]]:
        return self.succ.get(node_id, [])

    def run(self) -> ProcessModel:
        starts = [n for n in self.nodes.values() if n.type == "startEvent"]
        if len(starts) != 1:
            raise Unstructured(
                f"expected exactly one start event, found {len(starts)}"
            )
        elements = self.parse_chain(starts[0].id)
        leftover = [i for i in self.nodes if i not in self.visited]
        if leftover:
            raise Unstructured(
                "region not recoverable as a block structure: "
                + ", ".join(sorted(leftover))
            )
        return ProcessModel(process=tuple(elements))

    def parse_chain(self, start_id: str) -> list[Element]:
        elements: list[Element] = []
        current: str | None = start_id
        while current is not None:
            element, current = self.parse_node(current)
            elements.append(element)
        return elements

    def single_exit(self, node_id: str) -> str | None:
        out = self.out(node_id)
        if len(out) > 1:
            raise Unstructured(f"node {node_id!r} has multiple outgoing flows")
        return out[0][0] if out else None

    def parse_node(self, node_id: str) -> tuple[Element, str | None]:
        node = self.nodes.get(node_id)
        if node is None:
            raise Unstructured(f"flow references unknown node {node_id!r}")
        if node.type not in SUPPORTED_NODE_TYPES:
            raise UnsupportedElement(node.type)
        self.visited[node_id] = "element"
        if node.type in ("task", "userTask", "serviceTask"):
            return Task(type=node.type, id=node.id, label=node.label), self.single_exit(
                node_id
            )
        if node.type in ("startEvent", "endEvent"):
            exit_ = self.single_exit(node_id)
            if node.type == "endEvent" and exit_ is not None:
                raise Unstructured(f"end event {node_id!r} has an outgoing flow")
            label = node.label or None
            return Event(type=node.type, id=node.id, label=label), exit_
        out = self.out(node_id)
        if len(out) < 2:
            raise Unstructured(f"gateway {node_id!r} is a join without a split")
        if node.type == "parallelGateway":
            return self._parse_parallel_split(node, out)
        return self._parse_exclusive_split(node, out)

    def _walk_branch(
        self, first: str, owner_type: str
    ) -> tuple[list[Element], str, str | None]:
        """Follow one branch; returns (path, terminator kind, terminator id).

        Terminators: ("join", join id) for the owner's synthesized join,
        ("next", element id) for a jump to an already-parsed element, and
        ("end", None) when the branch dies out in an end event or dead end.
        """
        path: list[Element] = []
        current = first
        while True:
            state = self.visited.get(current)
            if state == "element":
                return path, "next", current
            if state == "join":
                raise Unstructured(
                    f"branch re-enters consumed join {current!r}"
                )
            node = self.nodes.get(current)
            if node is None:
                raise Unstructured(f"flow references unknown node {current!r}")
            if node.type.endswith("Gateway") and len(self.out(current)) < 2:
                if node.type == owner_type:
                    return path, "join", current
                raise Unstructured(
                    f"branch runs into foreign join {current!r} ({node.type})"
                )
            element, exit_ = self.parse_node(current)
            path.append(element)
            if exit_ is None:
                return path, "end", None
            current = exit_

    def _consume_join(self, join_id: str) -> str | None:
        if join_id in self.visited:
            raise Unstructured(f"join {join_id!r} is shared by multiple splits")
        self.visited[join_id] = "join"
        return self.single_exit(join_id)

    def _parse_parallel_split(
        self, node: FlowNode, out: list[tuple[str, str]]
    ) -> tuple[Element, str | None]:
        branches: list[tuple[Element, ...]] = []
        join_id: str | None = None
        for target, _ in out:
            path, kind, term = self._walk_branch(target, "parallelGateway")
            if kind == "next":
                raise Unstructured(
                    f"parallel branch of {node.id!r} jumps to {term!r}"
                )
            if kind == "join":
                if join_id is not None and term != join_id:
                    raise Unstructured(
                        f"parallel branches of {node.id!r} reach different joins"
                    )
                join_id = term
            branches.append(tuple(path))
        if join_id is None:
            raise Unstructured(f"parallel gateway {node.id!r} has no join")
        exit_ = self._consume_join(join_id)
        return ParallelGateway(id=node.id, branches=tuple(branches)), exit_

    def _parse_exclusive_split(
        self, node: FlowNode, out: list[tuple[str, str]]
    ) -> tuple[Element, str | None]:
        branches: list[Branch] = []
        join_id: str | None = None
        for target, condition in out:
            # An empty branch flowing straight into the join shows up as an
            # edge to an unvisited exclusive gateway with a single exit.
            tnode = self.nodes.get(target)
            if (
                target not in self.visited
                and tnode is not None
                and tnode.type == "exclusiveGateway"
                and len(self.out(target)) < 2
            ):
                path: list[Element] = []
                kind, term = "join", target
            else:
                path, kind, term = self._walk_branch(target, "exclusiveGateway")
            if kind == "join":
                if join_id is not None and term != join_id:
                    raise Unstructured(
                        f"branches of {node.id!r} reach different joins"
                    )
                join_id = term
                branches.append(Branch(condition=condition, path=tuple(path)))
            elif kind == "next":
                branches.append(
                    Branch(condition=condition, path=tuple(path), next=term)
                )
            else:
                branches.append(Branch(condition=condition, path=tuple(path)))
        has_join = join_id is not None
        exit_ = self._consume_join(join_id) if join_id is not None else None
        gateway = ExclusiveGateway(
            id=node.id,
            branches=tuple(branches),
            label=node.label or None,
            has_join=has_join,
        )
        return gateway, exit_


def reconstruct_ir(xml_text: str) -> ProcessModel:
    """Rebuild the block-structured model behind a BPMN document.

    Synthesized join gateways are folded back into their splits; the result
    re-emits to a graph isomorphic to the input (up to join ids).  Raises
    Unstructured when the graph cannot be expressed in the block form.
    """
    _, nodes, flows = scan_process(xml_text)
    return _Reconstructor(nodes, flows).run()
