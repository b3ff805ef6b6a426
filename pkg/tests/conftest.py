import json
from pathlib import Path

import pytest

from bpmnkit.model import ProcessModel, parse_process

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def supplier_model() -> ProcessModel:
    text = (FIXTURES / "processes" / "supplier_logistics.json").read_text()
    return parse_process(text)


@pytest.fixture(scope="session")
def supplier_text() -> str:
    return (FIXTURES / "processes" / "supplier_logistics.json").read_text()


@pytest.fixture(scope="session")
def tasks_dir() -> Path:
    return FIXTURES / "tasks"


@pytest.fixture(scope="session")
def task_fixtures() -> list[dict]:
    tasks = []
    for path in sorted((FIXTURES / "tasks").glob("*.json")):
        data = json.loads(path.read_text())
        tasks.append(data)
    return tasks
