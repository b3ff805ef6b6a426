"""Layered left-to-right diagram layout emitting BPMN DI coordinates.

Layering is longest-path distance from the start events on the graph with
back-edges removed; rows follow branch declaration order.  Edges are routed
axis-aligned with one vertical jog between layers; back-edges run through a
corridor below all occupied rows.
"""
from __future__ import annotations

from dataclasses import dataclass

from .xml_codec import FlowEdge, FlowNode, scan_process, validate_xml_structure

# Conventional renderer sizes, in DI units.
SIZES = {
    "task": (100, 80),
    "userTask": (100, 80),
    "serviceTask": (100, 80),
    "startEvent": (36, 36),
    "endEvent": (36, 36),
    "exclusiveGateway": (50, 50),
    "parallelGateway": (50, 50),
}
DEFAULT_SIZE = (100, 80)

PITCH_X = 150
PITCH_Y = 110
MARGIN = 60
SLOT_W = 100
SLOT_H = 80


class LayoutError(Exception):
    pass


class InvalidDocument(LayoutError):
    pass


class IncompleteLayout(LayoutError):
    def __init__(self, missing: list[str]):
        super().__init__(f"layout misses ids: {', '.join(sorted(missing))}")
        self.missing = missing


@dataclass(frozen=True)
class Bounds:
    x: float
    y: float
    width: float
    height: float

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.width / 2, self.y + self.height / 2)


@dataclass(frozen=True)
class DiagramLayout:
    shapes: dict[str, Bounds]
    edges: dict[str, tuple[tuple[float, float], ...]]


def _back_edges(
    nodes: list[FlowNode], flows: list[tuple[str, FlowEdge]], starts: list[str]
) -> set[str]:
    """Flow ids whose target is on the DFS stack (loop back-edges)."""
    succ: dict[str, list[tuple[str, str]]] = {n.id: [] for n in nodes}
    for fid, edge in flows:
        succ[edge.source].append((edge.target, fid))
    color: dict[str, int] = {}  # 1 = on stack, 2 = done
    back: set[str] = set()
    for root in starts:
        if color.get(root):
            continue
        stack: list[tuple[str, int]] = [(root, 0)]
        color[root] = 1
        while stack:
            node, idx = stack[-1]
            if idx < len(succ[node]):
                stack[-1] = (node, idx + 1)
                target, fid = succ[node][idx]
                state = color.get(target, 0)
                if state == 1:
                    back.add(fid)
                elif state == 0:
                    color[target] = 1
                    stack.append((target, 0))
            else:
                color[node] = 2
                stack.pop()
    return back


def compute_layout(xml_text: str) -> DiagramLayout:
    """Deterministic layered layout for a structurally valid BPMN document."""
    report = validate_xml_structure(xml_text)
    if not report.ok:
        raise InvalidDocument(
            "; ".join(i.message for i in report.errors())
        )
    _, nodes, flows = scan_process(xml_text)
    starts = [n.id for n in nodes if n.type == "startEvent"]
    back = _back_edges(nodes, flows, starts)
    dag = [(fid, e) for fid, e in flows if fid not in back]

    # Longest-path layering over the acyclic part.
    succ: dict[str, list[str]] = {n.id: [] for n in nodes}
    indeg: dict[str, int] = {n.id: 0 for n in nodes}
    for _, edge in dag:
        succ[edge.source].append(edge.target)
        indeg[edge.target] += 1
    layer: dict[str, int] = {n.id: 0 for n in nodes}
    queue = [n.id for n in nodes if indeg[n.id] == 0]
    while queue:
        current = queue.pop(0)
        for target in succ[current]:
            layer[target] = max(layer[target], layer[current] + 1)
            indeg[target] -= 1
            if indeg[target] == 0:
                queue.append(target)

    # Row assignment: DFS in flow document order, preferring the row of the
    # node we arrived from, so sibling branches stack in declaration order.
    dag_succ: dict[str, list[str]] = {n.id: [] for n in nodes}
    for _, edge in dag:
        dag_succ[edge.source].append(edge.target)
    row: dict[str, int] = {}
    used: set[tuple[int, int]] = set()

    def assign(node_id: str, preferred: int) -> None:
        if node_id in row:
            return
        candidate = preferred
        while (layer[node_id], candidate) in used:
            candidate += 1
        row[node_id] = candidate
        used.add((layer[node_id], candidate))
        for target in dag_succ[node_id]:
            assign(target, candidate)

    for start in starts:
        assign(start, 0)
    for node in nodes:  # isolated or start-less leftovers
        assign(node.id, 0)

    shapes: dict[str, Bounds] = {}
    for node in nodes:
        width, height = SIZES.get(node.type, DEFAULT_SIZE)
        cx = MARGIN + layer[node.id] * PITCH_X + SLOT_W / 2
        cy = MARGIN + row[node.id] * PITCH_Y + SLOT_H / 2
        shapes[node.id] = Bounds(cx - width / 2, cy - height / 2, width, height)

    max_row = max(row.values(), default=0)
    corridor_y = MARGIN + (max_row + 1) * PITCH_Y + SLOT_H / 2

    edges: dict[str, tuple[tuple[float, float], ...]] = {}
    for fid, edge in flows:
        src = shapes[edge.source]
        tgt = shapes[edge.target]
        sx, sy = src.center
        tx, ty = tgt.center
        if fid in back:
            points = [
                (sx, src.y + src.height),
                (sx, corridor_y),
                (tx, corridor_y),
                (tx, tgt.y + tgt.height),
            ]
        elif sy == ty:
            points = [(src.x + src.width, sy), (tgt.x, ty)]
        else:
            mid_x = (src.x + src.width + tgt.x) / 2
            points = [
                (src.x + src.width, sy),
                (mid_x, sy),
                (mid_x, ty),
                (tgt.x, ty),
            ]
        edges[fid] = tuple(points)
    return DiagramLayout(shapes=shapes, edges=edges)


def embed_di(xml_text: str, layout: DiagramLayout) -> str:
    """Append a BPMNDiagram section; the semantic section is untouched."""
    process_id, nodes, flows = scan_process(xml_text)
    missing = [n.id for n in nodes if n.id not in layout.shapes]
    missing += [fid for fid, _ in flows if fid not in layout.edges]
    if missing:
        raise IncompleteLayout(missing)

    lines = [
        '  <bpmndi:BPMNDiagram'
        ' xmlns:bpmndi="http://www.omg.org/spec/BPMN/20100524/DI"'
        ' xmlns:dc="http://www.omg.org/spec/DD/20100524/DC"'
        ' xmlns:di="http://www.omg.org/spec/DD/20100524/DI"'
        ' id="Diagram_1">',
        f'    <bpmndi:BPMNPlane id="Plane_1" bpmnElement="{process_id}">',
    ]
    for node in nodes:
        bounds = layout.shapes[node.id]
        lines.append(
            f'      <bpmndi:BPMNShape id="{node.id}_di" bpmnElement="{node.id}">'
        )
        lines.append(
            f'        <dc:Bounds x="{bounds.x:g}" y="{bounds.y:g}" '
            f'width="{bounds.width:g}" height="{bounds.height:g}" />'
        )
        lines.append("      </bpmndi:BPMNShape>")
    for fid, _ in flows:
        lines.append(f'      <bpmndi:BPMNEdge id="{fid}_di" bpmnElement="{fid}">')
        for x, y in layout.edges[fid]:
            lines.append(f'        <di:waypoint x="{x:g}" y="{y:g}" />')
        lines.append("      </bpmndi:BPMNEdge>")
    lines.append("    </bpmndi:BPMNPlane>")
    lines.append("  </bpmndi:BPMNDiagram>")
    di_block = "\n".join(lines) + "\n"

    close = xml_text.rfind("</")
    if close < 0:
        raise InvalidDocument("document has no closing root tag")
    return xml_text[:close] + di_block + xml_text[close:]
