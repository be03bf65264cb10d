import os
import sys

import pytest
from IPython.core.interactiveshell import InteractiveShell
from traitlets.config import Config

import davos_shim

from wheelbuild import build_wheel

STANDIN_MODULES = ("fakepkg", "brokenpkg", "otherpkg")


@pytest.fixture(scope="session")
def shell():
    """One real InteractiveShell for the whole run, history in memory."""
    config = Config()
    config.HistoryManager.hist_file = ":memory:"
    return InteractiveShell.instance(config=config)


@pytest.fixture(autouse=True)
def _clean_slate(shell, tmp_path, monkeypatch):
    """Undo everything a test may leak: shim state, namespace, modules."""
    monkeypatch.setenv("DAVOS_PROJECT_ROOT", str(tmp_path / "davos-root"))
    monkeypatch.delenv("JPY_SESSION_NAME", raising=False)
    saved_path = sys.path[:]
    ns_before = set(shell.user_ns)
    yield
    davos_shim._reset()
    sys.path[:] = saved_path
    for key in set(shell.user_ns) - ns_before:
        del shell.user_ns[key]
    for name in STANDIN_MODULES:
        sys.modules.pop(name, None)


@pytest.fixture(scope="session")
def links_dir(tmp_path_factory):
    links = str(tmp_path_factory.mktemp("links"))
    build_wheel(links, "fakepkg", "1.24.3")
    build_wheel(links, "fakepkg", "1.25.0")
    build_wheel(links, "brokenpkg", "1.0.0")
    build_wheel(links, "brokenpkg", "2.0.0",
                body='raise RuntimeError("broken on purpose")\n')
    return links


@pytest.fixture
def env_dir(tmp_path):
    """A stand-in site dir; importable, like real environment dirs are."""
    env = str(tmp_path / "env")
    os.makedirs(env, exist_ok=True)
    sys.path.append(env)
    yield env
    if env in sys.path:
        sys.path.remove(env)


@pytest.fixture
def hermetic_options(tmp_path, links_dir, env_dir):
    """Options keeping every child invocation inside the test sandbox."""

    def make(**overrides) -> dict:
        options = dict(
            project="shimtest",
            project_root=str(tmp_path / "davos-root"),
            site_dirs=(env_dir,),
            pip_extra_args=("--no-index", "--find-links", links_dir,
                            "--quiet"),
            noninteractive=True,
            suppress_stdout=True,
        )
        options.update(overrides)
        return options

    return make


@pytest.fixture
def activate_hermetic(shell, hermetic_options):
    def do(**overrides):
        return davos_shim.activate(shell, **hermetic_options(**overrides))

    return do


@pytest.fixture
def project_dir_of(tmp_path):
    """Look a project's directory up over the CLI; None when absent."""

    def lookup(name="shimtest"):
        client = davos_shim.CoreClient()
        reply = client.request("projects", "--project-root",
                               str(tmp_path / "davos-root"), "list")
        for project in reply.doc["projects"]:
            if project["name"] == name:
                return project["dir"]
        return None

    return lookup
