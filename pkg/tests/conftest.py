import json
import os
import sys

import pytest

import davos
import davos.cli
from davos.config import ConfigState

from helpers import build_wheel, tree_digest


@pytest.fixture(autouse=True)
def _isolated_env(tmp_path, monkeypatch):
    """Keep every test away from the real home store and env toggles."""
    monkeypatch.setenv("DAVOS_PROJECT_ROOT", str(tmp_path / "davos-root"))
    monkeypatch.delenv("DAVOS_NONINTERACTIVE", raising=False)
    # reset the module-level runtime state davos.__init__ keeps
    object.__setattr__(davos.config, "_state", ConfigState())
    davos._session = davos.SessionState()
    yield


@pytest.fixture
def store_root(tmp_path):
    root = tmp_path / "davos-root"
    return str(root)


@pytest.fixture(scope="session")
def links_dir(tmp_path_factory):
    """A find-links directory with the stand-in wheels used across tests."""
    links = str(tmp_path_factory.mktemp("links"))
    build_wheel(links, "fakepkg", "1.24.3")
    build_wheel(links, "fakepkg", "1.25.0")
    build_wheel(links, "otherpkg", "0.3.1")
    build_wheel(links, "otherpkg", "0.4.0")
    build_wheel(links, "thirdpkg", "2.0.0")
    return links


@pytest.fixture
def hermetic_config(tmp_path, links_dir):
    """ConfigState builder wired to tmp dirs and the local wheel index."""

    def make(project="proj", site_dirs=(), **extra) -> ConfigState:
        data = {
            "project_root": str(tmp_path / "davos-root"),
            "site_dirs": list(site_dirs),
            "noninteractive": True,
            "suppress_stdout": True,
            "pip_extra_args": ["--no-index", "--find-links", links_dir,
                               "--quiet"],
            **extra,
        }
        if project is not None:
            data["project"] = project
        return ConfigState.from_dict(data)

    return make


@pytest.fixture
def run_cli(capsys):
    """Invoke the CLI in-process; returns (exit_code, json_doc, stderr)."""

    def run(*argv):
        code = davos.cli.main(list(argv))
        captured = capsys.readouterr()
        doc = json.loads(captured.out) if captured.out.strip() else None
        return code, doc, captured.err

    return run


@pytest.fixture(scope="session")
def schema_registry():
    from referencing import Registry, Resource

    schemas_dir = os.path.join(os.path.dirname(davos.__file__), "schemas")
    registry = Registry()
    schemas = {}
    for fname in os.listdir(schemas_dir):
        with open(os.path.join(schemas_dir, fname), encoding="utf-8") as fh:
            contents = json.load(fh)
        resource = Resource.from_contents(contents)
        registry = resource @ registry
        schemas[fname] = contents
    return registry, schemas


@pytest.fixture(scope="session")
def validate_doc(schema_registry):
    import jsonschema

    registry, schemas = schema_registry

    def validate(doc, schema_name: str) -> None:
        schema = schemas[f"{schema_name}.schema.json"]
        jsonschema.Draft202012Validator(schema, registry=registry).validate(doc)

    return validate
