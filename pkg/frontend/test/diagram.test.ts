import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { parseDiagram, renderSvg } from "../src/diagram.js";

const xml = readFileSync(
  fileURLToPath(new URL("./fixtures/supplier.bpmn", import.meta.url)),
  "utf-8",
);

describe("parseDiagram", () => {
  it("reads one shape per node and one edge per flow", () => {
    const diagram = parseDiagram(xml);
    expect(diagram.shapes).toHaveLength(8);
    expect(diagram.edges).toHaveLength(8);
  });

  it("keeps the server coordinates verbatim", () => {
    const diagram = parseDiagram(xml);
    const start = diagram.shapes.find((s) => s.element === "start")!;
    expect(start.type).toBe("startEvent");
    expect(start.width).toBe(36);
    expect(start.height).toBe(36);
    const match = xml.match(
      /bpmnElement="start">\s*<dc:Bounds x="(\d+)" y="(\d+)"/,
    )!;
    expect(start.x).toBe(Number(match[1]));
    expect(start.y).toBe(Number(match[2]));
  });

  it("attaches semantic labels and types to shapes", () => {
    const diagram = parseDiagram(xml);
    const task1 = diagram.shapes.find((s) => s.element === "task1")!;
    expect(task1.type).toBe("serviceTask");
    expect(task1.label).toBe("Send mail to supplier");
    const join = diagram.shapes.find((s) => s.element === "parallel1-join")!;
    expect(join.type).toBe("parallelGateway");
  });

  it("collects waypoints per edge", () => {
    const diagram = parseDiagram(xml);
    for (const edge of diagram.edges) {
      expect(edge.waypoints.length).toBeGreaterThanOrEqual(2);
      for (const [x, y] of edge.waypoints) {
        expect(Number.isFinite(x)).toBe(true);
        expect(Number.isFinite(y)).toBe(true);
      }
    }
  });

  it("decodes XML entities in labels", () => {
    const doc = `
      <bpmn:process id="P">
        <bpmn:task id="t" name="a &amp; b &lt;c&gt;" />
      </bpmn:process>
      <bpmndi:BPMNShape id="t_di" bpmnElement="t">
        <dc:Bounds x="0" y="0" width="100" height="80" />
      </bpmndi:BPMNShape>`;
    const diagram = parseDiagram(doc);
    expect(diagram.shapes[0].label).toBe("a & b <c>");
  });
});

describe("renderSvg", () => {
  it("emits one element per shape and per flow", () => {
    const diagram = parseDiagram(xml);
    const svg = renderSvg(diagram);
    const nodeCount = (svg.match(/data-element=/g) ?? []).length;
    expect(nodeCount).toBe(diagram.shapes.length + diagram.edges.length);
    expect(svg).toContain("<circle"); // events
    expect(svg).toContain("<polygon"); // gateways
    expect(svg).toContain("<rect"); // tasks
  });

  it("escapes labels in the output", () => {
    const svg = renderSvg({
      shapes: [
        {
          element: "t",
          type: "task",
          label: 'x < y & "z"',
          x: 0,
          y: 0,
          width: 100,
          height: 80,
        },
      ],
      edges: [],
    });
    expect(svg).toContain("x &lt; y &amp; &quot;z&quot;");
    expect(svg).not.toContain('x < y & "z"');
  });
});
