"""The in-kernel adapter.

One Shim instance binds to an IPython shell. Activation registers an input
transformer (so ``smuggle numpy as np`` survives compilation as a call)
and injects exactly one name, ``smuggle``, into the user namespace. Each
smuggle call ships the statement to the core CLI for planning and
installation, then performs the in-interpreter half itself: temporarily
prepending the project directory to the module search path, importing or
reloading, and binding names into the namespace.

The search path is restored after every call. The one documented
exception: with projects disabled (``use_project=False``), an onion
``--target`` directory must stay on the path or the freshly installed
copy would be unreachable by the very next statement.
"""

from __future__ import annotations

import atexit
import importlib
import re
import sys
import warnings
from dataclasses import dataclass, fields

from .client import CoreClient
from .environment import IPYTHON_MODERN, detect_environment, notebook_path
from .errors import (
    CoreOperationError,
    InstallDeclined,
    KernelRestartRequired,
    ReloadFailed,
    ShimError,
    SmuggleRefused,
    SmuggleSyntaxError,
    UnsupportedEnvironment,
)

FALLBACK_PROJECT = "davos-fallback"

# cheap pre-filter so ordinary cells never pay a subprocess round trip
_SMUGGLE_HINT = re.compile(
    r"^\s*(?:from\s+[^\s#;]+\s+smuggle\b|smuggle\b)", re.MULTILINE
)


@dataclass
class Options:
    """Shim-side knobs; everything the child process needs goes via these.

    ``project=None`` resolves to the notebook's own project at first use
    (fallback with a warning when the path is unknown). ``site_dirs=None``
    lets the core derive the real environment directories; tests pin it.
    """

    project: str | None = None
    use_project: bool = True
    project_root: str | None = None
    site_dirs: tuple[str, ...] | None = None
    pip_extra_args: tuple[str, ...] = ()
    pip_executable: str | None = None
    confirm_install: bool = False
    noninteractive: bool = False
    suppress_stdout: bool = False
    auto_rerun: bool = False
    core_command: tuple[str, ...] | None = None


_OPTION_NAMES = tuple(f.name for f in fields(Options))


class Shim:
    def __init__(self, shell, options: Options | None = None, ask=input):
        self.shell = shell
        self.options = options or Options()
        self.ask = ask
        self.active = False
        self.environment = detect_environment()
        self._injected = self.smuggle  # one bound-method object, for identity
        self._smuggled: list[list] = []  # ordered [dist_name, raw args]
        self._resolved_project: str | None = None
        self._atexit_registered = False

    @property
    def client(self) -> CoreClient:
        return CoreClient(self.options.core_command)

    # -- lifecycle ------------------------------------------------------------

    def activate(self) -> None:
        """Register the transformer and inject ``smuggle``; idempotent."""
        if self.environment != IPYTHON_MODERN:
            raise UnsupportedEnvironment(
                f"only the {IPYTHON_MODERN} transformer set is implemented; "
                f"detected {self.environment}"
            )
        hooks = self.shell.input_transformers_post
        if self.transform_lines not in hooks:
            hooks.append(self.transform_lines)
        self.shell.user_ns["smuggle"] = self._injected
        self.active = True
        if not self._atexit_registered:
            atexit.register(self._end_of_session)
            self._atexit_registered = True

    def deactivate(self) -> None:
        """Unregister and clean up; a user rebind of ``smuggle`` survives."""
        hooks = self.shell.input_transformers_post
        while self.transform_lines in hooks:
            hooks.remove(self.transform_lines)
        if self.shell.user_ns.get("smuggle") is self._injected:
            del self.shell.user_ns["smuggle"]
        self.active = False

    def configure(self, **options) -> None:
        for name, value in options.items():
            if name not in _OPTION_NAMES:
                raise ShimError(f"unknown shim option {name!r}")
            setattr(self.options, name, value)
        if "project" in options:
            self._resolved_project = None

    def _end_of_session(self) -> None:
        """Drop this session's project directory if nothing got installed."""
        name = self._resolved_project
        if not self.active or not name:
            return
        try:
            self.client.clean_empty(name, self.options.project_root)
        except ShimError:
            pass  # interpreter teardown is no place to complain

    # -- input transformer ------------------------------------------------------

    def transform_lines(self, lines: list[str]) -> list[str]:
        if not self.active or not lines:
            return lines
        source = "".join(lines)
        if not _SMUGGLE_HINT.search(source):
            return lines
        try:
            rewritten = self.client.transform_code(source)
        except CoreOperationError as exc:
            raise SmuggleSyntaxError(str(exc)) from exc
        if rewritten == source:
            return lines
        return rewritten.splitlines(keepends=True)

    # -- the injected callable ----------------------------------------------------

    def smuggle(self, name: str, as_: str | None = None, attrs=None,
                installer: str | None = None, args: str | None = None):
        """Import ``name``, installing per the onion args when needed."""
        if not self.active:
            module = importlib.import_module(name)
            self._bind(module, name, as_, attrs)
            return module

        statement = self._statement_text(name, as_, attrs, installer, args)
        state = {
            "loaded": self._loaded_snapshot(),
            "smuggled": list(self._smuggled),
        }
        config = self._config_doc()

        if self.options.confirm_install and not self.options.noninteractive:
            self._confirm_installs(statement, state, config)

        reply = self.client.run(statement, state, config)
        if reply.stderr and not self.options.suppress_stdout:
            sys.stderr.write(reply.stderr)
        outcome = reply.doc["outcomes"][0]
        plan = outcome["plan"]
        for note in plan.get("warnings", ()):
            warnings.warn(note, stacklevel=3)
        if not outcome["ok"]:
            raise SmuggleRefused(plan.get("reason") or "smuggle refused")
        self._smuggled = [list(pair) for pair in reply.doc["state"]["smuggled"]]

        module = self._load(statement, plan, name)
        self._bind(module, name, as_, attrs)
        return module

    # -- in-interpreter half ------------------------------------------------------

    def _load(self, statement: str, plan: dict, name: str):
        prepend = plan.get("search_path_prepend")
        persistent = prepend is not None and not self.options.use_project
        saved = sys.path[:]
        if prepend is not None and prepend not in sys.path:
            sys.path.insert(0, prepend)
        try:
            if plan["action"] == "INSTALL_THEN_LOAD":
                importlib.invalidate_caches()
            root = name.partition(".")[0]
            if plan.get("reload_needed") and root in sys.modules:
                try:
                    importlib.reload(sys.modules[root])
                except Exception as exc:
                    self._reload_failed(statement, root, exc)
            return importlib.import_module(name)
        finally:
            restored = saved
            if persistent and prepend not in saved:
                restored = [prepend] + saved
            sys.path[:] = restored

    def _bind(self, module, name: str, as_: str | None, attrs) -> None:
        ns = self.shell.user_ns
        if attrs:
            for attr, alias in attrs:
                if attr == "*":
                    public = getattr(module, "__all__", None)
                    if public is None:
                        public = [k for k in vars(module)
                                  if not k.startswith("_")]
                    for key in public:
                        ns[key] = getattr(module, key)
                    continue
                try:
                    value = getattr(module, attr)
                except AttributeError:
                    value = importlib.import_module(f"{name}.{attr}")
                ns[alias or attr] = value
        elif as_:
            ns[as_] = module
        else:
            root = name.partition(".")[0]
            ns[root] = sys.modules.get(root, module)

    # -- reload failure: restart / prompt / raise ---------------------------------

    def _reload_failed(self, statement: str, root: str, exc: Exception) -> None:
        why = (f"could not reload {root} in place after a version change "
               f"({exc!r})")
        if self.options.auto_rerun:
            self._restart_and_rerun(statement, why)
        if self.options.noninteractive:
            raise ReloadFailed(
                f"{why}; restart the kernel to use the smuggled version"
            ) from exc
        try:
            answer = self.ask(
                f"{why}. Restart the kernel and re-run the session's code? "
                "[y/N] "
            )
        except EOFError:
            answer = ""
        if answer.strip().lower() in ("y", "yes"):
            self._restart_and_rerun(statement, why)
        raise ReloadFailed(
            f"{why}; the pre-smuggle version is still loaded"
        ) from exc

    def _restart_and_rerun(self, statement: str, why: str) -> None:
        """Hand the restart to the frontend, with the replay script attached.

        Killing the kernel from inside itself cannot also re-execute code;
        the host catches KernelRestartRequired, restarts, and replays
        ``replay_source`` (the linear input history through the current
        statement).
        """
        raise KernelRestartRequired(
            f"{why}; restart and re-run required", self._replay_source(statement)
        )

    def _replay_source(self, statement: str) -> str:
        inputs: list[str] = []
        manager = getattr(self.shell, "history_manager", None)
        if manager is not None:
            for _, _, source in manager.get_range(session=0, start=1,
                                                  output=False):
                inputs.append(source)
        if not inputs or statement not in inputs[-1]:
            inputs.append(statement)
        return "\n".join(inputs)

    # -- request assembly -----------------------------------------------------------

    def _statement_text(self, name, as_, attrs, installer, args) -> str:
        if attrs:
            parts = [a + (f" as {al}" if al else "") for a, al in attrs]
            text = f"from {name} smuggle {', '.join(parts)}"
        elif as_:
            text = f"smuggle {name} as {as_}"
        else:
            text = f"smuggle {name}"
        if installer is not None:
            text += f"  # {installer}: {args or ''}"
        return text

    def _loaded_snapshot(self) -> dict:
        """Top-level non-stdlib modules already in this interpreter."""
        stdlib = getattr(sys, "stdlib_module_names", frozenset())
        loaded = {}
        for mod_name, module in list(sys.modules.items()):
            if module is None or "." in mod_name:
                continue
            if mod_name.startswith("_") or mod_name in stdlib:
                continue
            version = getattr(module, "__version__", None)
            loaded[mod_name] = None if version is None else str(version)
        return loaded

    def _config_doc(self) -> dict:
        opts = self.options
        config = {
            "active": True,
            "environment": self.environment,
            "noninteractive": opts.noninteractive,
            "suppress_stdout": opts.suppress_stdout,
        }
        if opts.use_project:
            config["project"] = self._project_name()
        if opts.project_root is not None:
            config["project_root"] = opts.project_root
        if opts.site_dirs is not None:
            config["site_dirs"] = list(opts.site_dirs)
        if opts.pip_extra_args:
            config["pip_extra_args"] = list(opts.pip_extra_args)
        if opts.pip_executable is not None:
            config["pip_executable"] = opts.pip_executable
        return config

    def _project_name(self) -> str:
        if self._resolved_project is None:
            if self.options.project is not None:
                self._resolved_project = self.options.project
                return self._resolved_project
            path = notebook_path(self.shell)
            if path is None:
                warnings.warn(
                    "could not determine the notebook path; smuggled "
                    f"packages go to the shared {FALLBACK_PROJECT!r} project",
                    stacklevel=4,
                )
                path = FALLBACK_PROJECT
            self._resolved_project = path
        return self._resolved_project

    def _confirm_installs(self, statement, state, config) -> None:
        for plan in self.client.plan(statement, state, config):
            if plan["action"] != "INSTALL_THEN_LOAD":
                continue
            command = plan["command"]
            full = " ".join([*command["executable"], *command["argv"]])
            try:
                answer = self.ask(f"Run `{full}`? [y/N] ")
            except EOFError:
                answer = ""
            if answer.strip().lower() not in ("y", "yes"):
                raise InstallDeclined(f"declined: {full}")
