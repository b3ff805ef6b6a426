/** BPMN diagram-interchange parsing and SVG rendering.
 *
 * The canvas consumes the coordinates the server embedded verbatim; no
 * client-side layout happens here.
 */

export interface DiShape {
  element: string;
  type: string;
  label: string;
  x: number;
  y: number;
  width: number;
  height: number;
}

export interface DiEdge {
  element: string;
  label: string;
  waypoints: Array<[number, number]>;
}

export interface Diagram {
  shapes: DiShape[];
  edges: DiEdge[];
}

const NODE_TAGS = new Set([
  "task",
  "userTask",
  "serviceTask",
  "startEvent",
  "endEvent",
  "exclusiveGateway",
  "parallelGateway",
]);

function attr(tag: string, name: string): string | null {
  const match = tag.match(new RegExp(`\\b${name}="([^"]*)"`));
  return match ? match[1] : null;
}

function decodeEntities(text: string): string {
  return text
    .replace(/&lt;/g, "<")
    .replace(/&gt;/g, ">")
    .replace(/&quot;/g, '"')
    .replace(/&apos;/g, "'")
    .replace(/&amp;/g, "&");
}

/** Pull every shape and edge out of a DI-enriched BPMN document. */
export function parseDiagram(xml: string): Diagram {
  // Semantic section: element id -> (type, label), flow id -> label.
  const types = new Map<string, string>();
  const labels = new Map<string, string>();
  for (const match of xml.matchAll(/<bpmn:(\w+)\b[^>]*>/g)) {
    const tag = match[0];
    const local = match[1];
    const id = attr(tag, "id");
    if (!id) continue;
    if (NODE_TAGS.has(local)) types.set(id, local);
    const name = attr(tag, "name");
    if (name !== null) labels.set(id, decodeEntities(name));
  }

  const shapes: DiShape[] = [];
  for (const match of xml.matchAll(
    /<bpmndi:BPMNShape\b[^>]*bpmnElement="([^"]*)"[^>]*>([\s\S]*?)<\/bpmndi:BPMNShape>/g,
  )) {
    const element = match[1];
    const bounds = match[2].match(/<dc:Bounds\b[^>]*\/>/);
    if (!bounds) continue;
    shapes.push({
      element,
      type: types.get(element) ?? "task",
      label: labels.get(element) ?? "",
      x: Number(attr(bounds[0], "x")),
      y: Number(attr(bounds[0], "y")),
      width: Number(attr(bounds[0], "width")),
      height: Number(attr(bounds[0], "height")),
    });
  }

  const edges: DiEdge[] = [];
  for (const match of xml.matchAll(
    /<bpmndi:BPMNEdge\b[^>]*bpmnElement="([^"]*)"[^>]*>([\s\S]*?)<\/bpmndi:BPMNEdge>/g,
  )) {
    const element = match[1];
    const waypoints: Array<[number, number]> = [];
    for (const wp of match[2].matchAll(/<di:waypoint\b[^>]*\/>/g)) {
      waypoints.push([Number(attr(wp[0], "x")), Number(attr(wp[0], "y"))]);
    }
    edges.push({ element, label: labels.get(element) ?? "", waypoints });
  }
  return { shapes, edges };
}

function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function shapeSvg(shape: DiShape): string {
  const cx = shape.x + shape.width / 2;
  const cy = shape.y + shape.height / 2;
  const label = escapeXml(shape.label);
  switch (shape.type) {
    case "startEvent":
    case "endEvent": {
      const stroke = shape.type === "endEvent" ? 3 : 1.5;
      const r = shape.width / 2;
      const text = label
        ? `<text x="${cx}" y="${shape.y + shape.height + 14}" class="bk-label">${label}</text>`
        : "";
      return (
        `<circle data-element="${shape.element}" class="bk-node bk-event" ` +
        `cx="${cx}" cy="${cy}" r="${r}" stroke-width="${stroke}"/>` + text
      );
    }
    case "exclusiveGateway":
    case "parallelGateway": {
      const points = [
        `${cx},${shape.y}`,
        `${shape.x + shape.width},${cy}`,
        `${cx},${shape.y + shape.height}`,
        `${shape.x},${cy}`,
      ].join(" ");
      const mark = shape.type === "exclusiveGateway" ? "×" : "+";
      const text = label
        ? `<text x="${cx}" y="${shape.y - 6}" class="bk-label">${label}</text>`
        : "";
      return (
        `<polygon data-element="${shape.element}" class="bk-node bk-gateway" points="${points}"/>` +
        `<text x="${cx}" y="${cy + 7}" class="bk-gateway-mark">${mark}</text>` +
        text
      );
    }
    default: {
      const text = label
        ? `<text x="${cx}" y="${cy + 4}" class="bk-label">${label}</text>`
        : "";
      return (
        `<rect data-element="${shape.element}" class="bk-node bk-task" ` +
        `x="${shape.x}" y="${shape.y}" width="${shape.width}" height="${shape.height}" rx="8"/>` +
        text
      );
    }
  }
}

function edgeSvg(edge: DiEdge): string {
  const points = edge.waypoints.map(([x, y]) => `${x},${y}`).join(" ");
  let label = "";
  if (edge.label && edge.waypoints.length >= 2) {
    const [x1, y1] = edge.waypoints[0];
    const [x2, y2] = edge.waypoints[1];
    label =
      `<text x="${(x1 + x2) / 2}" y="${(y1 + y2) / 2 - 5}" class="bk-label">` +
      `${escapeXml(edge.label)}</text>`;
  }
  return (
    `<polyline data-element="${edge.element}" class="bk-flow" points="${points}" ` +
    `fill="none" marker-end="url(#bk-arrow)"/>` + label
  );
}

/** Render the diagram as a standalone SVG document string. */
export function renderSvg(diagram: Diagram, padding = 40): string {
  let maxX = 0;
  let maxY = 0;
  for (const s of diagram.shapes) {
    maxX = Math.max(maxX, s.x + s.width);
    maxY = Math.max(maxY, s.y + s.height);
  }
  for (const e of diagram.edges) {
    for (const [x, y] of e.waypoints) {
      maxX = Math.max(maxX, x);
      maxY = Math.max(maxY, y);
    }
  }
  const width = maxX + padding;
  const height = maxY + padding;
  const body = [
    ...diagram.edges.map(edgeSvg),
    ...diagram.shapes.map(shapeSvg),
  ].join("\n  ");
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" ` +
    `width="${width}" height="${height}">\n` +
    `  <defs><marker id="bk-arrow" viewBox="0 0 10 10" refX="9" refY="5" ` +
    `markerWidth="7" markerHeight="7" orient="auto-start-reverse">` +
    `<path d="M 0 0 L 10 5 L 0 10 z"/></marker></defs>\n` +
    `  ${body}\n</svg>`
  );
}
