from __future__ import annotations

import pytest

from linddun_workbench import fixture_path
from linddun_workbench.script import parse_script
from linddun_workbench.store import ProjectHandle, ProjectStore


def apply_fixture_script(handle: ProjectHandle, name: str):
    handle.apply_statements(parse_script(fixture_path(name).read_text(encoding="utf-8")))


def build_running_example(store: ProjectStore, through_step: int = 3) -> ProjectHandle:
    handle = store.create("running-example")
    handle.attach_trees(fixture_path("linddun-paper-subset.json"))
    handle.import_catalog(fixture_path("running-example.csv").read_bytes(), source_tag="demo")
    if through_step >= 3:
        apply_fixture_script(handle, "running-example.step3.ops")
    if through_step >= 4:
        apply_fixture_script(handle, "running-example.step4.ops")
    if through_step >= 5:
        apply_fixture_script(handle, "running-example.step5.ops")
    return handle


def build_domain(store: ProjectStore, name: str, domains: tuple[str, ...]) -> ProjectHandle:
    handle = store.create(name)
    handle.attach_trees(fixture_path("linddun-paper-subset.json"))
    for domain, suffix in domains:
        handle.import_catalog(fixture_path(f"{domain}.csv").read_bytes(), suffix=suffix)
        for step in ("step3", "step4", "step5"):
            apply_fixture_script(handle, f"{domain}.{step}.ops")
    return handle


@pytest.fixture
def store(tmp_path):
    return ProjectStore(tmp_path / "projects")


@pytest.fixture
def running_project(store):
    return build_running_example(store, through_step=5)


@pytest.fixture
def automotive_project(store):
    return build_domain(store, "automotive", (("automotive", "a"),))


@pytest.fixture
def combined_project(store):
    return build_domain(store, "combined", (("automotive", "a"), ("web", "w")))
