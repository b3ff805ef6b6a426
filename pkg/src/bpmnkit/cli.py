"""Command-line entry points.

``generate`` and ``edit`` drive the assistant for a single process;``evaluate``
and ``benchmark`` run batch comparisons and emit CSV reports; ``serve`` starts
the HTTP service.  Batch commands call the library directly rather than going
through HTTP: they are offline jobs with no session state worth sharing.
"""
from __future__ import annotations

import csv
import json
import logging
import statistics
import sys
import time
from pathlib import Path

import click

from . import assistant
from .edits import EditError
from .layout import compute_layout, embed_di
from .model import ModelError, parse_process, serialize_process, validate
from .providers import ProviderError, list_model_names, make_provider
from .similarity import ged, rged, similarity, strip_synthesized_joins, to_flow_graph
from .xml_codec import CodecError, import_flow_graph, reconstruct_ir, to_bpmn_xml

log = logging.getLogger(__name__)

EXIT_USAGE = 1
EXIT_FAILED = 2


@click.group()
@click.option("--verbose", is_flag=True, help="Enable debug logging.")
def main(verbose: bool) -> None:
    """Process-diagram assistant toolkit."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )


def _provider(model: str, mock_script: str | None):
    try:
        return make_provider(model, mock_script=mock_script)
    except ProviderError as exc:
        raise click.ClickException(str(exc)) from exc


def _load_graph(path: Path, include_joins: bool):
    """Load a flow graph from either an IR .json file or a BPMN .xml file."""
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        model = parse_process(text)
        if not include_joins:
            return strip_synthesized_joins(import_flow_graph(to_bpmn_xml(model)))
        return to_flow_graph(model)
    graph = import_flow_graph(text)
    if not include_joins:
        graph = strip_synthesized_joins(graph)
    return graph


@main.command()
@click.argument("description")
@click.option("--model", default="mock", show_default=True)
@click.option("--modality", type=click.Choice(["json", "xml"]), default="json",
              show_default=True)
@click.option("--mock-script", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Scripted responses for the mock provider.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the result to a file instead of stdout.")
@click.option("--format", "output_format",
              type=click.Choice(["json", "xml", "bpmn"]), default=None,
              help="Output form; 'bpmn' adds diagram interchange geometry.")
def generate(description, model, modality, mock_script, out, output_format):
    """Generate a process from a natural-language DESCRIPTION."""
    provider = _provider(model, mock_script)
    try:
        produced, attempts = assistant.generate_process(
            provider, description, modality
        )
    except assistant.GenerationFailed as exc:
        click.echo(f"generation failed after {len(exc.attempts)} attempt(s)",
                   err=True)
        for issue in exc.issues():
            click.echo(f"  - {issue}", err=True)
        sys.exit(EXIT_FAILED)
    except (assistant.AssistantError, ProviderError) as exc:
        click.echo(str(exc), err=True)
        sys.exit(EXIT_FAILED)
    click.echo(
        f"attempts={len(attempts)} "
        f"latency_ms={sum(a.latency_ms for a in attempts):.1f} "
        f"input_tokens={sum(a.input_tokens for a in attempts)} "
        f"output_tokens={sum(a.output_tokens for a in attempts)}",
        err=True,
    )
    fmt = output_format or ("json" if modality == "json" else "xml")
    if modality == "json":
        if fmt == "json":
            text = serialize_process(produced)
        else:
            text = to_bpmn_xml(produced)
            if fmt == "bpmn":
                text = embed_di(text, compute_layout(text))
    else:
        if fmt == "json":
            text = serialize_process(reconstruct_ir(produced))
        elif fmt == "bpmn":
            text = embed_di(produced, compute_layout(produced))
        else:
            text = produced
    if out:
        Path(out).write_text(text + ("" if text.endswith("\n") else "\n"),
                             encoding="utf-8")
    else:
        click.echo(text)


@main.command()
@click.argument("process_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("instruction")
@click.option("--model", default="mock", show_default=True)
@click.option("--modality", type=click.Choice(["json", "xml"]), default="json",
              show_default=True)
@click.option("--mock-script", type=click.Path(exists=True, dir_okay=False),
              default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def edit(process_file, instruction, model, modality, mock_script, out):
    """Apply a natural-language INSTRUCTION to the process in PROCESS_FILE."""
    provider = _provider(model, mock_script)
    path = Path(process_file)
    text = path.read_text(encoding="utf-8")
    session = assistant.Session(modality=modality)
    try:
        if modality == "json":
            session.current_model = (
                parse_process(text) if path.suffix.lower() == ".json"
                else reconstruct_ir(text)
            )
            assistant.propose_edits(provider, session, instruction)
            result = serialize_process(session.current_model)
        else:
            session.current_document = (
                text if path.suffix.lower() != ".json"
                else to_bpmn_xml(parse_process(text))
            )
            result = assistant.edit_xml_direct(provider, session, instruction)
    except (EditError, assistant.AssistantError) as exc:
        click.echo(f"edit failed: {exc}", err=True)
        sys.exit(EXIT_FAILED)
    except (ModelError, CodecError) as exc:
        click.echo(f"could not load {process_file}: {exc}", err=True)
        sys.exit(EXIT_USAGE)
    except ProviderError as exc:
        click.echo(str(exc), err=True)
        sys.exit(EXIT_FAILED)
    if out:
        Path(out).write_text(result + "\n", encoding="utf-8")
    else:
        click.echo(result)


@main.command()
@click.option("--pairs", type=click.Path(exists=True, dir_okay=False),
              required=True,
              help="Manifest with one 'reference,candidate' file pair per line.")
@click.option("--include-joins/--no-include-joins", default=True,
              show_default=True,
              help="Keep synthesized join gateways as graph nodes.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write a CSV report (default: stdout).")
def evaluate(pairs, include_joins, out):
    """Score candidate processes against references with graph edit distance.

    A pair that fails to parse is recorded as a failure and the run continues;
    the summary separates the mean over scored pairs from the failure count.
    """
    rows = []
    scores: list[float] = []
    failures = 0
    base = Path(pairs).parent
    for line_no, line in enumerate(
        Path(pairs).read_text(encoding="utf-8").splitlines(), start=1
    ):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [part.strip() for part in line.split(",")]
        if len(parts) != 2:
            click.echo(f"{pairs}:{line_no}: expected 'reference,candidate'",
                       err=True)
            sys.exit(EXIT_USAGE)
        ref_name, cand_name = parts
        try:
            ref = _load_graph(base / ref_name, include_joins)
            cand = _load_graph(base / cand_name, include_joins)
        except (ModelError, CodecError, OSError, ValueError) as exc:
            log.debug("pair %s,%s failed: %s", ref_name, cand_name, exc)
            failures += 1
            rows.append(
                {"reference": ref_name, "candidate": cand_name, "ged": "",
                 "rged": "", "similarity": "", "exact": "",
                 "error": str(exc)}
            )
            continue
        result = ged(ref, cand)
        score = similarity(ref, cand)
        scores.append(score)
        rows.append(
            {
                "reference": ref_name,
                "candidate": cand_name,
                "ged": f"{result.cost:g}",
                "rged": f"{rged(ref, cand):.6f}",
                "similarity": f"{score:.6f}",
                "exact": str(result.exact).lower(),
                "error": "",
            }
        )
    header = ["reference", "candidate", "ged", "rged", "similarity", "exact",
              "error"]
    summary_header = ["Average Score", "Total Failures"]
    summary_row = {
        "Average Score": f"{statistics.mean(scores):.6f}" if scores else "",
        "Total Failures": str(failures),
    }
    _write_csv(out, header, rows)
    if out:
        summary_path = str(Path(out).with_name(Path(out).stem + "_summary.csv"))
        _write_csv(summary_path, summary_header, [summary_row])
    else:
        _write_csv(None, summary_header, [summary_row])


def _write_csv(out: str | None, header: list[str], rows: list[dict]) -> None:
    handle = open(out, "w", newline="", encoding="utf-8") if out else sys.stdout
    try:
        writer = csv.DictWriter(handle, fieldnames=header)
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if out:
            handle.close()


def _load_tasks(tasks_dir: str) -> list[dict]:
    tasks = []
    for path in sorted(Path(tasks_dir).glob("*.json")):
        data = json.loads(path.read_text(encoding="utf-8"))
        data["_name"] = data.get("name", path.stem)
        data["_path"] = path
        tasks.append(data)
    if not tasks:
        raise click.ClickException(f"no task files in {tasks_dir}")
    return tasks


def _task_provider(task: dict, model: str, modality: str):
    """Each task may carry scripted responses keyed by modality."""
    script = task.get("responses", {}).get(modality)
    if model == "mock" and script is not None:
        from .providers import MockProvider

        return MockProvider(sequence=list(script))
    return make_provider(model)


def _models_equal(left, right) -> bool:
    return serialize_process(left) == serialize_process(right)


def _graphs_equal(left_xml: str, right_xml: str) -> bool:
    lg, rg = import_flow_graph(left_xml), import_flow_graph(right_xml)
    left_nodes = {(n.type, (n.label or "").strip().lower()) for n in lg.nodes}
    right_nodes = {(n.type, (n.label or "").strip().lower()) for n in rg.nodes}
    if left_nodes != right_nodes:
        return False
    def edge_set(graph):
        by_id = {n.id: n for n in graph.nodes}
        return {
            (
                by_id[e.source].type, (by_id[e.source].label or "").strip().lower(),
                by_id[e.target].type, (by_id[e.target].label or "").strip().lower(),
                (e.label or "").strip().lower(),
            )
            for e in graph.edges
        }
    return edge_set(lg) == edge_set(rg)


def _run_generation_task(task, provider, modality):
    start = time.perf_counter()
    try:
        produced, attempts = assistant.generate_process(
            provider, task["description"], modality
        )
    except (assistant.AssistantError, ProviderError, CodecError) as exc:
        log.debug("generation task %s failed: %s", task["_name"], exc)
        return None
    elapsed = time.perf_counter() - start
    expected = parse_process(json.dumps(task["expected"]))
    candidate = produced if modality == "json" else reconstruct_ir(produced)
    ref_graph = to_flow_graph(expected)
    cand_graph = to_flow_graph(candidate)
    return {
        "similarity": similarity(ref_graph, cand_graph),
        "elapsed": elapsed,
        "input_tokens": sum(a.input_tokens for a in attempts),
        "output_tokens": sum(a.output_tokens for a in attempts),
        "attempts": len(attempts),
    }


def _run_editing_task(task, provider, modality):
    base = parse_process(json.dumps(task["base"]))
    expected = (
        parse_process(json.dumps(task["expected"]))
        if task.get("expected") is not None
        else None
    )
    session = assistant.Session(modality=modality)
    start = time.perf_counter()
    try:
        if modality == "json":
            session.current_model = base
            assistant.propose_edits(provider, session, task["instruction"])
            produced = session.current_model
            success = expected is not None and _models_equal(produced, expected)
        else:
            session.current_document = to_bpmn_xml(base)
            produced_xml = assistant.edit_xml_direct(
                provider, session, task["instruction"]
            )
            success = expected is not None and _graphs_equal(
                produced_xml, to_bpmn_xml(expected)
            )
    except (EditError, assistant.AssistantError, ProviderError, CodecError):
        # A rejected script must leave nothing half-applied; tasks that inject
        # failures set expected to null and count rejection as the right call.
        if modality == "json":
            unchanged = _models_equal(session.current_model or base, base)
        else:
            unchanged = (session.current_document or "") == to_bpmn_xml(base)
        success = expected is None and unchanged
    elapsed = time.perf_counter() - start
    return {
        "success": success,
        "elapsed": elapsed,
        "input_tokens": sum(a.input_tokens for a in session.attempts),
        "output_tokens": sum(a.output_tokens for a in session.attempts),
    }


class _ModalityStats:
    """Accumulates per-modality outcomes; means cover successful tasks only,
    failures are counted separately."""

    def __init__(self) -> None:
        self.scores: list[float] = []
        self.failures = 0
        self.edit_outcomes: list[bool] = []
        self.gen_latency: list[float] = []
        self.gen_input: list[int] = []
        self.gen_output: list[int] = []
        self.edit_latency: list[float] = []
        self.edit_input: list[int] = []
        self.edit_output: list[int] = []

    @staticmethod
    def _mean(values, digits=2) -> str:
        return f"{statistics.mean(values):.{digits}f}" if values else ""

    def success_rate(self) -> str:
        if not self.edit_outcomes:
            return ""
        return f"{sum(self.edit_outcomes) / len(self.edit_outcomes):.2f}"


@main.command()
@click.option("--tasks", "tasks_dir", type=click.Path(exists=True, file_okay=False),
              required=True, help="Directory of task definition files.")
@click.option("--provider", "model", default="mock", show_default=True)
@click.option("--modality", type=click.Choice(["json", "xml", "both"]),
              default="both", show_default=True)
@click.option("--out", type=click.Path(file_okay=False), required=True,
              help="Directory for the CSV reports.")
def benchmark(tasks_dir, model, modality, out):
    """Run the generation and editing suites and write the report CSVs.

    Reports: tasks.csv (per-task outcomes), generation_summary.csv (Modality /
    Average Score / Total Failures), generation_performance.csv and
    editing_performance.csv (Metric / JSON / XML), editing_success.csv
    (Model / JSON / XML).
    """
    tasks = _load_tasks(tasks_dir)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    modalities = ["json", "xml"] if modality == "both" else [modality]
    stats = {name: _ModalityStats() for name in ("json", "xml")}
    task_rows = []
    for mode in modalities:
        bucket = stats[mode]
        for task in tasks:
            provider = _task_provider(task, model, mode)
            if task["kind"] == "generation":
                outcome = _run_generation_task(task, provider, mode)
                if outcome is None:
                    bucket.failures += 1
                    task_rows.append(
                        {"task": task["_name"], "kind": "generation",
                         "modality": mode, "outcome": "failure"}
                    )
                    continue
                bucket.scores.append(outcome["similarity"])
                bucket.gen_latency.append(outcome["elapsed"])
                bucket.gen_input.append(outcome["input_tokens"])
                bucket.gen_output.append(outcome["output_tokens"])
                task_rows.append(
                    {"task": task["_name"], "kind": "generation",
                     "modality": mode,
                     "outcome": f"similarity={outcome['similarity']:.6f}"}
                )
            elif task["kind"] == "editing":
                outcome = _run_editing_task(task, provider, mode)
                bucket.edit_outcomes.append(outcome["success"])
                bucket.edit_latency.append(outcome["elapsed"])
                bucket.edit_input.append(outcome["input_tokens"])
                bucket.edit_output.append(outcome["output_tokens"])
                task_rows.append(
                    {"task": task["_name"], "kind": "editing",
                     "modality": mode,
                     "outcome": "success" if outcome["success"] else "failure"}
                )
            else:
                raise click.ClickException(
                    f"{task['_path']}: unknown task kind {task['kind']!r}"
                )
    _write_csv(str(out_dir / "tasks.csv"),
               ["task", "kind", "modality", "outcome"], task_rows)
    _write_csv(
        str(out_dir / "generation_summary.csv"),
        ["Modality", "Average Score", "Total Failures"],
        [
            {
                "Modality": mode.upper(),
                "Average Score": _ModalityStats._mean(stats[mode].scores, 2),
                "Total Failures": str(stats[mode].failures),
            }
            for mode in modalities
        ],
    )
    _write_csv(
        str(out_dir / "generation_performance.csv"),
        ["Metric", "JSON", "XML"],
        [
            {"Metric": "Mean Latency (seconds)",
             "JSON": _ModalityStats._mean(stats["json"].gen_latency),
             "XML": _ModalityStats._mean(stats["xml"].gen_latency)},
            {"Metric": "Average Input Tokens",
             "JSON": _ModalityStats._mean(stats["json"].gen_input),
             "XML": _ModalityStats._mean(stats["xml"].gen_input)},
            {"Metric": "Average Output Tokens",
             "JSON": _ModalityStats._mean(stats["json"].gen_output),
             "XML": _ModalityStats._mean(stats["xml"].gen_output)},
        ],
    )
    _write_csv(
        str(out_dir / "editing_success.csv"),
        ["Model", "JSON", "XML"],
        [{
            "Model": model,
            "JSON": stats["json"].success_rate(),
            "XML": stats["xml"].success_rate(),
        }],
    )
    _write_csv(
        str(out_dir / "editing_performance.csv"),
        ["Metric", "JSON", "XML"],
        [
            {"Metric": "Average Latency (s)",
             "JSON": _ModalityStats._mean(stats["json"].edit_latency),
             "XML": _ModalityStats._mean(stats["xml"].edit_latency)},
            {"Metric": "Average Input Tokens",
             "JSON": _ModalityStats._mean(stats["json"].edit_input),
             "XML": _ModalityStats._mean(stats["xml"].edit_input)},
            {"Metric": "Average Output Tokens",
             "JSON": _ModalityStats._mean(stats["json"].edit_output),
             "XML": _ModalityStats._mean(stats["xml"].edit_output)},
        ],
    )
    for mode in modalities:
        bucket = stats[mode]
        click.echo(
            f"{mode}: {len(bucket.scores)} generation ok, "
            f"{bucket.failures} failed; editing "
            f"{sum(bucket.edit_outcomes)}/{len(bucket.edit_outcomes)}"
        )


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--sessions-dir", type=click.Path(file_okay=False), default=None,
              help="Persist sessions to disk for restart recovery.")
def serve(host, port, sessions_dir):
    """Start the HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(sessions_dir=sessions_dir), host=host, port=port)


@main.command(name="models")
def models_cmd():
    """List the configured provider model names."""
    for name in list_model_names():
        click.echo(name)


if __name__ == "__main__":
    main()
