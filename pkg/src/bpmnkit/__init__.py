"""bpmnkit: generate, edit, compare and lay out block-structured BPMN processes."""

from .edits import (
    AddElement,
    DeleteElement,
    EditError,
    EditOp,
    EditResult,
    MoveElement,
    RedirectBranch,
    UpdateElement,
    apply_edit_script,
    edit_op_from_wire,
    edit_op_to_wire,
)
from .layout import DiagramLayout, compute_layout, embed_di
from .model import (
    Branch,
    Event,
    ExclusiveGateway,
    ModelError,
    ParallelGateway,
    ProcessModel,
    Task,
    ValidationReport,
    parse_process,
    random_process,
    serialize_process,
    validate,
)
from .similarity import ged, rged, similarity, to_flow_graph
from .xml_codec import (
    CodecError,
    FlowGraph,
    import_flow_graph,
    reconstruct_ir,
    to_bpmn_xml,
    validate_xml_structure,
)

__version__ = "0.1.0"

__all__ = [
    "AddElement",
    "Branch",
    "CodecError",
    "DeleteElement",
    "DiagramLayout",
    "EditError",
    "EditOp",
    "EditResult",
    "Event",
    "ExclusiveGateway",
    "FlowGraph",
    "ModelError",
    "MoveElement",
    "ParallelGateway",
    "ProcessModel",
    "RedirectBranch",
    "Task",
    "UpdateElement",
    "ValidationReport",
    "apply_edit_script",
    "compute_layout",
    "edit_op_from_wire",
    "edit_op_to_wire",
    "embed_di",
    "ged",
    "import_flow_graph",
    "parse_process",
    "random_process",
    "reconstruct_ir",
    "rged",
    "serialize_process",
    "similarity",
    "to_bpmn_xml",
    "to_flow_graph",
    "validate",
    "validate_xml_structure",
]
