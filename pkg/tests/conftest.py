import os
import sys

import pytest

HERE = os.path.dirname(__file__)
PROBLEMS = os.path.join(os.path.dirname(HERE), "problems")
sys.path.insert(0, HERE)

from monodic.parser import parse, parse_problem  # noqa: E402


def problem_path(name: str) -> str:
    return os.path.join(PROBLEMS, name)


def load(name: str, semantics: str = "constant"):
    with open(problem_path(name), encoding="utf-8") as fh:
        text = fh.read()
    return parse(text, semantics) if name.endswith(".fotl") else parse_problem(text, semantics)


@pytest.fixture
def res2_1():
    return load("res2_1.tp")


@pytest.fixture
def graph_1():
    return load("graph_1.tp")


@pytest.fixture
def loop_bfs():
    return load("loop_bfs.tp")
