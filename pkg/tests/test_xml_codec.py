import json

import pytest

from bpmnkit.model import parse_process, random_process, validate
from bpmnkit.xml_codec import (
    InvalidModel,
    MalformedXml,
    NoProcessElement,
    Unstructured,
    UnsupportedElement,
    import_flow_graph,
    reconstruct_ir,
    scan_process,
    to_bpmn_xml,
    validate_xml_structure,
)

MINIMAL = parse_process(
    json.dumps(
        {
            "process": [
                {"type": "startEvent", "id": "s"},
                {"type": "endEvent", "id": "e"},
            ]
        }
    )
)


def wrap(body: str) -> str:
    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        '<bpmn:definitions xmlns:bpmn="http://www.omg.org/spec/BPMN/20100524/MODEL">\n'
        f'  <bpmn:process id="P" isExecutable="true">\n{body}\n'
        "  </bpmn:process>\n</bpmn:definitions>\n"
    )


class TestEmit:
    def test_minimal(self):
        xml = to_bpmn_xml(MINIMAL)
        graph = import_flow_graph(xml)
        assert len(graph.nodes) == 2
        assert len(graph.edges) == 1

    def test_deterministic(self, supplier_model):
        assert to_bpmn_xml(supplier_model) == to_bpmn_xml(supplier_model)

    def test_supplier_counts(self, supplier_model):
        xml = to_bpmn_xml(supplier_model)
        process_id, nodes, flows = scan_process(xml)
        assert process_id == "Process_1"
        by_type = {}
        for node in nodes:
            by_type[node.type] = by_type.get(node.type, 0) + 1
        assert by_type == {
            "startEvent": 1,
            "endEvent": 1,
            "serviceTask": 1,
            "task": 3,
            "parallelGateway": 2,
        }
        edges = {(e.source, e.target) for _, e in flows}
        assert edges == {
            ("start", "parallel1"),
            ("parallel1", "task1"),
            ("task1", "task2"),
            ("parallel1", "task3"),
            ("task3", "task4"),
            ("task2", "parallel1-join"),
            ("task4", "parallel1-join"),
            ("parallel1-join", "end1"),
        }

    def test_conditions_become_flow_names(self):
        model = parse_process(
            json.dumps(
                {
                    "process": [
                        {"type": "startEvent", "id": "s"},
                        {
                            "type": "exclusiveGateway",
                            "id": "g",
                            "label": "d",
                            "has_join": True,
                            "branches": [
                                {"condition": "yes", "path": [
                                    {"type": "task", "id": "t", "label": "T"}]},
                                {"condition": "no", "path": []},
                            ],
                        },
                        {"type": "endEvent", "id": "e"},
                    ]
                }
            )
        )
        graph = import_flow_graph(to_bpmn_xml(model))
        labels = {(e.source, e.target): e.label for e in graph.edges}
        assert labels[("g", "t")] == "yes"
        assert labels[("g", "g-join")] == "no"

    def test_branch_order_preserved_with_empty_branch(self):
        model = parse_process(
            json.dumps(
                {
                    "process": [
                        {"type": "startEvent", "id": "s"},
                        {
                            "type": "exclusiveGateway",
                            "id": "g",
                            "label": "d",
                            "has_join": True,
                            "branches": [
                                {"condition": "skip", "path": []},
                                {"condition": "work", "path": [
                                    {"type": "task", "id": "t", "label": "T"}]},
                            ],
                        },
                        {"type": "endEvent", "id": "e"},
                    ]
                }
            )
        )
        assert reconstruct_ir(to_bpmn_xml(model)) == model

    def test_invalid_model_rejected(self):
        broken = parse_process(json.dumps({"process": []}))
        with pytest.raises(InvalidModel):
            to_bpmn_xml(broken)


class TestImport:
    def test_single_node(self):
        graph = import_flow_graph(wrap('    <bpmn:startEvent id="s" />'))
        assert len(graph.nodes) == 1
        assert graph.edges == ()

    def test_non_xml(self):
        with pytest.raises(MalformedXml):
            import_flow_graph("definitely not xml <")

    def test_no_process(self):
        with pytest.raises(NoProcessElement):
            import_flow_graph("<root><child /></root>")

    def test_labels_default_empty(self):
        graph = import_flow_graph(wrap('    <bpmn:task id="t" />'))
        assert graph.nodes[0].label == ""


class TestStructuralValidation:
    def test_emitter_output_is_ok(self):
        for seed in range(25):
            xml = to_bpmn_xml(random_process(seed, 9))
            report = validate_xml_structure(xml)
            assert report.ok, (seed, report.issues)

    def test_malformed(self):
        report = validate_xml_structure("<nope")
        assert not report.ok
        assert "MalformedXml" in {i.code for i in report.issues}

    def test_dangling_flow(self):
        body = (
            '    <bpmn:startEvent id="s" />\n'
            '    <bpmn:endEvent id="e" />\n'
            '    <bpmn:sequenceFlow id="f" sourceRef="s" targetRef="ghost" />'
        )
        report = validate_xml_structure(wrap(body))
        assert "DanglingFlow" in {i.code for i in report.issues}

    def test_missing_end(self):
        report = validate_xml_structure(wrap('    <bpmn:startEvent id="s" />'))
        assert "MissingEnd" in {i.code for i in report.issues}

    def test_unreachable_node(self):
        body = (
            '    <bpmn:startEvent id="s" />\n'
            '    <bpmn:endEvent id="e" />\n'
            '    <bpmn:task id="island" name="Alone" />\n'
            '    <bpmn:sequenceFlow id="f" sourceRef="s" targetRef="e" />'
        )
        report = validate_xml_structure(wrap(body))
        assert "Unreachable" in {i.code for i in report.issues}

    def test_duplicate_ids(self):
        body = (
            '    <bpmn:startEvent id="s" />\n'
            '    <bpmn:endEvent id="s" />'
        )
        report = validate_xml_structure(wrap(body))
        assert "DuplicateId" in {i.code for i in report.issues}


class TestReconstruct:
    def test_round_trip_over_generator(self):
        for seed in range(100):
            model = random_process(seed, 9)
            assert reconstruct_ir(to_bpmn_xml(model)) == model, seed

    def test_supplier_round_trip(self, supplier_model):
        assert reconstruct_ir(to_bpmn_xml(supplier_model)) == supplier_model

    def test_unsupported_element(self):
        body = (
            '    <bpmn:startEvent id="s" />\n'
            '    <bpmn:inclusiveGateway id="g" />\n'
            '    <bpmn:endEvent id="e" />\n'
            '    <bpmn:sequenceFlow id="f1" sourceRef="s" targetRef="g" />\n'
            '    <bpmn:sequenceFlow id="f2" sourceRef="g" targetRef="e" />'
        )
        with pytest.raises(UnsupportedElement):
            reconstruct_ir(wrap(body))

    def test_shared_join_is_unstructured(self):
        # Two exclusive splits funnel into one join: not block-structured.
        body = (
            '    <bpmn:startEvent id="s" />\n'
            '    <bpmn:exclusiveGateway id="g1" />\n'
            '    <bpmn:exclusiveGateway id="g2" />\n'
            '    <bpmn:exclusiveGateway id="j" />\n'
            '    <bpmn:task id="t1" name="A" />\n'
            '    <bpmn:task id="t2" name="B" />\n'
            '    <bpmn:endEvent id="e" />\n'
            '    <bpmn:sequenceFlow id="f1" sourceRef="s" targetRef="g1" />\n'
            '    <bpmn:sequenceFlow id="f2" name="x" sourceRef="g1" targetRef="t1" />\n'
            '    <bpmn:sequenceFlow id="f3" name="y" sourceRef="g1" targetRef="g2" />\n'
            '    <bpmn:sequenceFlow id="f4" name="p" sourceRef="g2" targetRef="t2" />\n'
            '    <bpmn:sequenceFlow id="f5" name="q" sourceRef="g2" targetRef="j" />\n'
            '    <bpmn:sequenceFlow id="f6" sourceRef="t1" targetRef="j" />\n'
            '    <bpmn:sequenceFlow id="f7" sourceRef="t2" targetRef="j" />\n'
            '    <bpmn:sequenceFlow id="f8" sourceRef="j" targetRef="e" />'
        )
        with pytest.raises(Unstructured):
            reconstruct_ir(wrap(body))
