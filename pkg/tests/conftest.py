from __future__ import annotations

from contextlib import contextmanager

import pytest

from fpb.layouts import bundled_layouts
from fpb.maze_gen import sample_instance
from fpb.tangram_gen import make_tangram_instance


@pytest.fixture(scope="session")
def layouts():
    return bundled_layouts()


@pytest.fixture(scope="session")
def maze_5x5():
    return sample_instance(5, 5, (8, 12), "seen", 11, instance_id="m55")


@pytest.fixture(scope="session")
def tangram_instances(layouts):
    out = {}
    for variant in ("FadeIn", "Rotation", "Translation"):
        out[variant] = make_tangram_instance(layouts[1], variant, 7, instance_id=f"t-{variant}")
    return out


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Context manager factory recording one PASS/FAIL line per criterion."""

    @contextmanager
    def run(n: int, title: str):
        detail: dict = {}
        status = "FAIL"
        try:
            yield detail
            status = "PASS"
        finally:
            line = f"{status}  [{n:2d}] {title}  {detail.get('msg', '')}".rstrip()
            ACCEPTANCE_LINES.append(line)
            print(line)

    return run


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("[")[1].split("]")[0])):
            terminalreporter.write_line(line)
