import json
from pathlib import Path

import pytest

from kgscout_shared import clear_overrides
from kgscout_graph import build_index, load_graph_files
from kgscout_agent import PolicyConfig, ScriptedPolicy, StateRenderer, TokenCounter, Toolkit
from kgscout_eval import load_split

FIX7_DIR = Path(__file__).parent / "fixtures" / "fix7"
SCRIPTS_DIR = FIX7_DIR / "scripts"


def load_script(name: str) -> dict:
    with open(SCRIPTS_DIR / f"{name}.json", "r", encoding="utf-8") as file:
        return json.load(file)


@pytest.fixture(autouse=True)
def reset_config_overrides():
    yield
    clear_overrides()


@pytest.fixture
def fix7_graph():
    return load_graph_files(FIX7_DIR / "nodes.jsonl", FIX7_DIR / "edges.jsonl", FIX7_DIR / "manifest.json")


@pytest.fixture
def fix7_index(fix7_graph):
    return build_index(fix7_graph)


@pytest.fixture
def toolkit(fix7_graph, fix7_index):
    return Toolkit(fix7_graph, fix7_index)


@pytest.fixture
def renderer():
    # character estimate keeps token counts independent of the tokenizer download
    return StateRenderer(counter=TokenCounter(None))


@pytest.fixture
def policy_config():
    return PolicyConfig(kind="scripted", token_encoding=None, seed=0)


@pytest.fixture
def micro_split(fix7_graph):
    return load_split(FIX7_DIR / "split.jsonl", graph=fix7_graph)


@pytest.fixture
def script_policy():
    """Factory: script_policy("q1") builds a fresh ScriptedPolicy from a fixture script."""
    def factory(name: str) -> ScriptedPolicy:
        return ScriptedPolicy(load_script(name), name=name)
    return factory
