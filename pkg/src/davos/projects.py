"""Isolated per-notebook project directories.

A project is a directory under ``<root>/projects/`` holding a standard
package-install tree. The directory name is the percent-encoded project name,
which is either the absolute path of a notebook (notebook-specific) or an
arbitrary user label (notebook-agnostic). A notebook-specific project whose
notebook has since disappeared is "abstract" and is what ``prune`` deletes.
"""

from __future__ import annotations

import os
import shutil
import warnings
from dataclasses import dataclass
from enum import Enum
from urllib.parse import quote, unquote

from filelock import FileLock

from . import metadata
from .errors import (
    EmptyName,
    NoninteractiveRequiresYes,
    ProjectExists,
    ProjectNotFound,
    ProjectRootUnwritable,
)

#: Name of the shared project used when the notebook path cannot be determined.
FALLBACK_NAME = "davos-fallback"

DEFAULT_ROOT = os.path.join("~", ".davos")
ROOT_ENV_VAR = "DAVOS_PROJECT_ROOT"


class ProjectKind(str, Enum):
    NOTEBOOK_SPECIFIC = "NOTEBOOK_SPECIFIC"
    NOTEBOOK_AGNOSTIC = "NOTEBOOK_AGNOSTIC"
    ABSTRACT = "ABSTRACT"
    FALLBACK = "FALLBACK"


def encode_name(name: str) -> str:
    """Percent-encode a project name into a filesystem-safe directory name."""
    encoded = quote(name, safe="")
    # quote() leaves "." alone, but "." and ".." as whole names would escape
    # the projects directory
    if encoded and set(encoded) == {"."}:
        encoded = encoded.replace(".", "%2E")
    return encoded


def decode_name(dirname: str) -> str:
    return unquote(dirname)


def _notebook_shaped(name: str) -> bool:
    return os.path.isabs(name) and name.endswith(".ipynb")


def classify(name: str) -> ProjectKind:
    if name == FALLBACK_NAME:
        return ProjectKind.FALLBACK
    if _notebook_shaped(name):
        if os.path.isfile(name):
            return ProjectKind.NOTEBOOK_SPECIFIC
        return ProjectKind.ABSTRACT
    return ProjectKind.NOTEBOOK_AGNOSTIC


@dataclass(frozen=True)
class Project:
    """A named, isolated install directory. ``kind`` is computed at creation
    of this value and goes stale if the underlying notebook appears or
    disappears; re-derive through the store when freshness matters."""

    name: str
    dir: str
    kind: ProjectKind

    def to_dict(self) -> dict:
        return {"name": self.name, "dir": self.dir, "kind": self.kind.value}


class ProjectStore:
    """All projects under one root directory.

    The root defaults to ``~/.davos`` and can be overridden by the
    DAVOS_PROJECT_ROOT environment variable or the constructor argument.
    Everything this class touches lives under the root (projects under
    ``projects/``, advisory locks under ``.locks/``).
    """

    def __init__(self, root: str | None = None):
        if root is None:
            root = os.environ.get(ROOT_ENV_VAR) or DEFAULT_ROOT
        self.root = os.path.abspath(os.path.expanduser(root))
        self.projects_dir = os.path.join(self.root, "projects")
        self.locks_dir = os.path.join(self.root, ".locks")

    # -- plumbing -----------------------------------------------------------

    def _ensure_root(self) -> None:
        try:
            os.makedirs(self.projects_dir, exist_ok=True)
            os.makedirs(self.locks_dir, exist_ok=True)
        except OSError as exc:
            raise ProjectRootUnwritable(
                f"cannot create project root {self.root!r}: {exc}"
            ) from exc
        if not os.access(self.projects_dir, os.W_OK):
            raise ProjectRootUnwritable(f"project root {self.root!r} is not writable")

    def _project(self, name: str) -> Project:
        return Project(
            name=name,
            dir=os.path.join(self.projects_dir, encode_name(name)),
            kind=classify(name),
        )

    def lock(self, project: Project) -> FileLock:
        """Advisory cross-process lock for mutations of one project."""
        self._ensure_root()
        return FileLock(
            os.path.join(self.locks_dir, encode_name(project.name) + ".lock")
        )

    # -- lookup and creation ------------------------------------------------

    def project_for_notebook(self, notebook_path: str | None) -> Project:
        """The notebook's own project; the shared fallback when unknown.

        ``notebook_path`` None (or the literal "UNKNOWN") means the embedder
        could not determine where the notebook lives; a warning is emitted
        and the fallback project is used so installs still work.
        """
        if notebook_path is None or notebook_path == "UNKNOWN":
            warnings.warn(
                "notebook path could not be determined; using the shared "
                f"'{FALLBACK_NAME}' project",
                stacklevel=2,
            )
            self._ensure_root()
            return self._project(FALLBACK_NAME)
        name = os.path.realpath(os.path.expanduser(notebook_path))
        self._ensure_root()
        return self._project(name)

    def handle(self, name: str) -> Project:
        """A project handle by name; the directory may not exist yet.

        Attaching a project never requires its directory: it is created
        lazily, at install time.

        Raises:
            EmptyName: name is empty or whitespace.
        """
        if not name or not name.strip():
            raise EmptyName("project name must be non-empty")
        if _notebook_shaped(name):
            name = os.path.realpath(os.path.expanduser(name))
        return self._project(name)

    def get_project(self, name: str, create: bool = False) -> Project | None:
        """Look up an existing project; None if absent and create is off.

        Raises:
            EmptyName: name is empty or whitespace.
            ProjectRootUnwritable: create requested but root unusable.
        """
        project = self.handle(name)
        if os.path.isdir(project.dir):
            return project
        if not create:
            return None
        self._ensure_root()
        os.makedirs(project.dir, exist_ok=True)
        return project

    def ensure_dir(self, project: Project) -> None:
        self._ensure_root()
        os.makedirs(project.dir, exist_ok=True)

    def list_all(self) -> list[Project]:
        """Every project directory under the root, kinds computed fresh."""
        if not os.path.isdir(self.projects_dir):
            return []
        out = []
        for entry in sorted(os.listdir(self.projects_dir)):
            if not os.path.isdir(os.path.join(self.projects_dir, entry)):
                continue
            out.append(self._project(decode_name(entry)))
        return out

    # -- mutation -----------------------------------------------------------

    def remove(self, name: str) -> None:
        """Delete a project directory recursively.

        Raises:
            ProjectNotFound: no such project on disk.
        """
        if not name or not name.strip():
            raise EmptyName("project name must be non-empty")
        project = self._project(name)
        if not os.path.isdir(project.dir):
            raise ProjectNotFound(f"no project named {name!r}")
        with self.lock(project):
            shutil.rmtree(project.dir)

    def rename(self, old_name: str, new_name: str) -> Project:
        """Re-encode a project directory under a new name.

        Raises:
            ProjectNotFound, ProjectExists, EmptyName.
        """
        if not new_name or not new_name.strip():
            raise EmptyName("new project name must be non-empty")
        old = self._project(old_name)
        if not os.path.isdir(old.dir):
            raise ProjectNotFound(f"no project named {old_name!r}")
        new = self._project(new_name)
        if os.path.exists(new.dir):
            raise ProjectExists(f"a project named {new_name!r} already exists")
        with self.lock(old):
            os.rename(old.dir, new.dir)
        return new

    def installed_packages(self, project: Project) -> list[tuple[str, str]]:
        """(dist_name, version) pairs installed in the project directory."""
        catalog = metadata.scan(metadata.SearchScope(directories=(project.dir,)))
        return sorted(
            (d.dist_name, d.raw_version) for d in catalog.dists.values()
        )

    def clean_if_empty(self, project: Project) -> bool:
        """Delete the project directory iff it holds no installed dist.

        Returns True when the directory was removed.
        """
        if not os.path.isdir(project.dir):
            return False
        if self.installed_packages(project):
            return False
        with self.lock(project):
            shutil.rmtree(project.dir, ignore_errors=True)
        return True

    def prune(
        self,
        yes: bool = False,
        interactive: bool = False,
        ask=input,
    ) -> "PruneReport":
        """Delete abstract projects (notebook-specific, notebook gone).

        ``yes`` deletes every candidate without prompting. Otherwise, in
        interactive mode each candidate is confirmed individually; in
        non-interactive mode the call is refused.

        Raises:
            NoninteractiveRequiresYes.
        """
        if not yes and not interactive:
            raise NoninteractiveRequiresYes(
                "prune deletes project directories; pass yes=True to confirm "
                "in non-interactive mode"
            )
        deleted: list[str] = []
        kept: list[str] = []
        for project in self.list_all():
            if project.kind is not ProjectKind.ABSTRACT:
                kept.append(project.name)
                continue
            if not yes:
                answer = ask(f"Delete abstract project {project.name!r}? [y/N] ")
                if answer.strip().lower() not in ("y", "yes"):
                    kept.append(project.name)
                    continue
            with self.lock(project):
                shutil.rmtree(project.dir, ignore_errors=True)
            deleted.append(project.name)
        return PruneReport(deleted=tuple(deleted), kept=tuple(kept))


@dataclass(frozen=True)
class PruneReport:
    deleted: tuple[str, ...]
    kept: tuple[str, ...]

    def to_dict(self) -> dict:
        return {"deleted": list(self.deleted), "kept": list(self.kept)}
