from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sgqgen.lexicon import default_attribute_categories, default_exclusion_lexicon
from sgqgen.scenes import load_scene_graphs

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def f1_path():
    return FIXTURES / "f1_scenes.jsonl"


@pytest.fixture(scope="session")
def f1_scenes(f1_path):
    return load_scene_graphs(f1_path)


@pytest.fixture(scope="session")
def sample_program_path():
    return FIXTURES / "sample_program.txt"


@pytest.fixture(scope="session")
def sample_program_text(sample_program_path):
    return sample_program_path.read_text(encoding="utf-8").rstrip("\n")


@pytest.fixture(scope="session")
def categories():
    return default_attribute_categories()


@pytest.fixture(scope="session")
def lexicon():
    return default_exclusion_lexicon()
