"""Session configuration: validated options, atomic updates, entry points.

ConfigState is immutable; setters return a new state, which is what makes
configure() trivially all-or-nothing. The engine threads one state through a
run; embedders (the CLI, a kernel shim) construct it from JSON.
"""

from __future__ import annotations

import os
import warnings
from dataclasses import dataclass, field, fields, replace

from . import versions
from .errors import (
    IncompatibleOptions,
    InvalidValue,
    PythonVersionUnsatisfied,
    ReadOnlyOption,
    UnknownOption,
)
from .projects import Project, ProjectStore

ENVIRONMENTS = ("IPython<7.0", "IPython>=7.0", "Colaboratory")

NONINTERACTIVE_ENV_VAR = "DAVOS_NONINTERACTIVE"

#: options users may set; everything else is read-only or internal
WRITABLE_OPTIONS = (
    "active",
    "auto_rerun",
    "confirm_install",
    "noninteractive",
    "pip_executable",
    "project",
    "suppress_stdout",
)

READONLY_OPTIONS = ("environment", "smuggled", "all_projects")

_BOOL_OPTIONS = ("active", "auto_rerun", "confirm_install", "noninteractive",
                 "suppress_stdout")


def _env_noninteractive() -> bool:
    return os.environ.get(NONINTERACTIVE_ENV_VAR, "").strip().lower() in (
        "1", "true", "yes",
    )


@dataclass(frozen=True)
class ConfigState:
    active: bool = True
    auto_rerun: bool = False
    confirm_install: bool = False
    noninteractive: bool = field(default_factory=_env_noninteractive)
    suppress_stdout: bool = False
    pip_executable: str | tuple[str, ...] | None = None
    project: Project | None = None
    environment: str = "IPython>=7.0"
    notebook_path: str | None = None
    project_root: str | None = None
    interpreter: str | None = None
    pip_extra_args: tuple[str, ...] = ()
    install_timeout: float | None = None
    site_dirs: tuple[str, ...] | None = None
    smuggled: tuple[tuple[str, str | None], ...] = ()

    def __post_init__(self) -> None:
        if self.environment not in ENVIRONMENTS:
            raise InvalidValue(
                f"environment must be one of {ENVIRONMENTS}, "
                f"got {self.environment!r}"
            )
        if self.noninteractive and self.confirm_install:
            raise IncompatibleOptions(
                "confirm_install cannot be enabled in non-interactive mode"
            )

    # -- stores -------------------------------------------------------------

    def store(self) -> ProjectStore:
        return ProjectStore(self.project_root)

    # -- option assignment ----------------------------------------------------

    def set_option(self, name: str, value) -> "ConfigState":
        """Validated single-option assignment; returns the new state.

        Raises:
            ReadOnlyOption, UnknownOption, InvalidValue, IncompatibleOptions.
        """
        return self.configure({name: value})

    def configure(self, pairs: dict) -> "ConfigState":
        """Atomic multi-option assignment.

        The combined result is validated before anything is applied, so a
        single bad entry leaves the state untouched.

        Raises:
            ReadOnlyOption, UnknownOption, InvalidValue, IncompatibleOptions.
        """
        coerced: dict = {}
        for name, value in pairs.items():
            if name in READONLY_OPTIONS:
                raise ReadOnlyOption(f"option {name!r} is read-only")
            if name not in WRITABLE_OPTIONS:
                raise UnknownOption(f"unknown option {name!r}")
            if name in _BOOL_OPTIONS:
                if not isinstance(value, bool):
                    raise InvalidValue(f"{name} expects a boolean, got {value!r}")
                coerced[name] = value
            elif name == "pip_executable":
                if value is not None and not isinstance(value, (str, list, tuple)):
                    raise InvalidValue(
                        f"pip_executable expects a path or argv list, got {value!r}"
                    )
                coerced[name] = tuple(value) if isinstance(value, list) else value
            elif name == "project":
                coerced[name] = value  # converted after validation

        new_confirm = coerced.get("confirm_install", self.confirm_install)
        new_nonint = coerced.get("noninteractive", self.noninteractive)
        if new_confirm and new_nonint:
            if "confirm_install" in coerced and "noninteractive" in coerced:
                raise IncompatibleOptions(
                    "confirm_install and noninteractive cannot both be enabled"
                )
            if "confirm_install" in coerced:
                raise IncompatibleOptions(
                    "confirm_install cannot be enabled while non-interactive"
                )
            # enabling noninteractive silently turns confirmation off
            coerced["confirm_install"] = False

        if "project" in coerced:
            coerced["project"] = self._coerce_project(coerced["project"])
        return replace(self, **coerced)

    def _coerce_project(self, value) -> Project | None:
        if value is None or isinstance(value, Project):
            return value
        if not isinstance(value, str):
            raise InvalidValue(
                f"project expects a name, path, Project, or None; got {value!r}"
            )
        if not value.strip():
            raise InvalidValue("project name must be non-empty")
        # directory creation is deferred to install time so that planning
        # stays free of filesystem writes
        return self.store().handle(value)

    # -- entry points ---------------------------------------------------------

    def use_default_project(self) -> "ConfigState":
        """Bind the notebook-specific project (fallback when path unknown)."""
        project = self.store().project_for_notebook(self.notebook_path)
        return replace(self, project=project)

    def require_python(
        self,
        spec: str,
        warn: bool = False,
        extra_msg: str | None = None,
        prereleases: str = "derive",
    ) -> versions.PythonCheck:
        """Check the running interpreter against a version constraint.

        Raises:
            PythonVersionUnsatisfied: on violation when warn is false.
            InvalidSpecifier: unparseable constraint.
        """
        check = versions.check_python(spec, prerelease_policy=prereleases)
        if check.ok:
            return check
        message = check.message or ""
        if extra_msg:
            message = f"{message}: {extra_msg}"
        if warn:
            warnings.warn(message, stacklevel=2)
            return check
        raise PythonVersionUnsatisfied(message)

    # -- rendering ------------------------------------------------------------

    def snapshot(self, include_projects: bool = False) -> str:
        """Human-readable rendering of every option, one per line."""
        if self.project is None:
            project_text = "None"
        else:
            project_text = f"{self.project.name} ({self.project.kind.value})"
        pip_text = self.pip_executable
        if pip_text is None:
            pip_text = "(auto-discover)"
        elif isinstance(pip_text, tuple):
            pip_text = " ".join(pip_text)
        smuggled_text = (
            "{" + ", ".join(
                f"{name}: {req if req is not None else 'unconstrained'}"
                for name, req in self.smuggled
            ) + "}"
        )
        lines = [
            f"active:           {self.active}",
            f"auto_rerun:       {self.auto_rerun}",
            f"confirm_install:  {self.confirm_install}",
            f"environment:      {self.environment}",
            f"noninteractive:   {self.noninteractive}",
            f"pip_executable:   {pip_text}",
            f"project:          {project_text}",
            f"suppress_stdout:  {self.suppress_stdout}",
            f"smuggled:         {smuggled_text}",
        ]
        if include_projects:
            names = ", ".join(p.name for p in self.store().list_all())
            lines.append(f"all_projects:     [{names}]")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "active": self.active,
            "auto_rerun": self.auto_rerun,
            "confirm_install": self.confirm_install,
            "noninteractive": self.noninteractive,
            "suppress_stdout": self.suppress_stdout,
            "pip_executable": (
                list(self.pip_executable)
                if isinstance(self.pip_executable, tuple)
                else self.pip_executable
            ),
            "project": None if self.project is None else self.project.to_dict(),
            "environment": self.environment,
            "notebook_path": self.notebook_path,
            "project_root": self.project_root,
            "smuggled": [[n, r] for n, r in self.smuggled],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ConfigState":
        """Build a state from a JSON-shaped mapping (the CLI --config file).

        Accepts writable options plus the embedder-reported fields
        (environment, notebook_path, project_root, interpreter,
        pip_extra_args, install_timeout).

        Raises:
            UnknownOption, InvalidValue, IncompatibleOptions.
        """
        allowed_extra = {
            "environment", "notebook_path", "project_root", "interpreter",
            "pip_extra_args", "install_timeout", "site_dirs",
        }
        base_kwargs = {}
        option_pairs = {}
        for key, value in data.items():
            if key in WRITABLE_OPTIONS and key != "project":
                option_pairs[key] = value
            elif key == "project":
                option_pairs[key] = value
            elif key in allowed_extra:
                if key in ("pip_extra_args", "site_dirs") and value is not None:
                    value = tuple(value)
                base_kwargs[key] = value
            else:
                raise UnknownOption(f"unknown config key {key!r}")
        state = cls(**base_kwargs)
        if option_pairs:
            state = state.configure(option_pairs)
        return state


def field_names() -> tuple[str, ...]:
    return tuple(f.name for f in fields(ConfigState))
