"""Install-aware imports for notebooks and scripts.

``smuggle numpy`` works like ``import numpy`` except that a missing or
version-mismatched package is installed first (into a per-notebook project
directory by default, leaving the surrounding environment alone). This
package provides the parser/rewriter for the smuggle syntax, the decision
engine, the project store, and a CLI exposing all of it as JSON.

In plain Python, call the function form directly::

    import davos
    davos.config.project = "my-analysis"
    davos.smuggle("requests", args="requests>=2.31")
"""

from __future__ import annotations

import importlib
import sys
import warnings
from dataclasses import replace

from . import engine as _engine
from . import grammar as _grammar
from .config import ConfigState
from .engine import Action, PlanOutcome, SessionState
from .errors import DavosError, SmuggleRefused
from .projects import PruneReport

__version__ = "0.1.0"

__all__ = [
    "config",
    "configure",
    "smuggle",
    "use_default_project",
    "require_python",
    "get_project",
    "prune_projects",
    "DavosError",
]


class _ConfigHandle:
    """Attribute-style access to the active (immutable) config.

    Assignments go through option validation and atomically swap in the new
    state, so ``davos.config.project = "mine"`` works like in a notebook.
    """

    def __init__(self, state: ConfigState):
        object.__setattr__(self, "_state", state)

    @property
    def state(self) -> ConfigState:
        return self._state

    def __getattr__(self, name: str):
        return getattr(object.__getattribute__(self, "_state"), name)

    def __setattr__(self, name: str, value) -> None:
        new = object.__getattribute__(self, "_state").set_option(name, value)
        object.__setattr__(self, "_state", new)

    def __repr__(self) -> str:
        return self._state.snapshot()


config = _ConfigHandle(ConfigState())
_session = SessionState()


def configure(**options) -> None:
    """Set several options at once; all applied or none."""
    new = config.state.configure(options)
    object.__setattr__(config, "_state", new)


def use_default_project() -> None:
    """Attach the project derived from the configured notebook path."""
    object.__setattr__(config, "_state", config.state.use_default_project())


def require_python(spec: str, warn: bool = False, extra_msg: str | None = None,
                   prereleases: bool | str | None = None):
    """Check the interpreter version; raise (or warn) on violation.

    ``prereleases`` True/False forces the prerelease policy; None derives it
    from the constraint text.
    """
    if prereleases is None:
        policy = "derive"
    elif isinstance(prereleases, bool):
        policy = "allow" if prereleases else "disallow"
    else:
        policy = prereleases
    return config.state.require_python(spec, warn=warn, extra_msg=extra_msg,
                                       prereleases=policy)


def get_project(name: str, create: bool = False):
    """The named Project, or None when it does not exist and create is off."""
    return config.state.store().get_project(name, create=create)


def prune_projects(yes: bool = False) -> PruneReport:
    state = config.state
    return state.store().prune(
        yes=yes, interactive=not state.noninteractive
    )


def _refresh_session(dist, root: str, module) -> None:
    global _session
    version = None
    if dist is not None:
        version = dist.raw_version
    elif module is not None:
        version = getattr(module, "__version__", None)
        if version is not None:
            version = str(version)
    loaded = [(n, v) for n, v in _session.loaded if n != root]
    loaded.append((root, version))
    _session = replace(_session, loaded=tuple(loaded))


def smuggle(name: str, as_: str | None = None, attrs=None,
            installer: str | None = None, args: str | None = None,
            _depth: int = 1):
    """Import ``name``, installing it first if the environment can't satisfy.

    This is the target of the canonical rewrite: ``smuggle numpy as np``
    becomes ``smuggle(name="numpy", as_="np", ...)``. Names are bound in the
    caller's global namespace, mirroring what the statement form would do.
    """
    global _session
    if not config.state.active:
        module = importlib.import_module(name)
        _bind(module, name, as_, attrs, _depth + 1)
        return module

    attr_pairs = tuple((a, al) for a, al in (attrs or ()))
    onion = None
    if installer is not None:
        onion = _grammar.parse_onion(installer, args or "")
    if attr_pairs:
        form = _grammar.Form.FROM_AS if any(al for _, al in attr_pairs) \
            else _grammar.Form.FROM
    else:
        form = _grammar.Form.PLAIN_AS if as_ else _grammar.Form.PLAIN
    stmt = _grammar.SmuggleStatement(
        form=form, root_name=name, names=((name, as_),),
        from_attrs=attr_pairs, alias=as_, onion=onion,
    )

    outcome = _engine.run(stmt, _session, config.state)
    if not outcome.ok:
        raise SmuggleRefused(outcome.plan.reason or "smuggle refused")
    _session = outcome.session

    prepend = outcome.plan.search_path_prepend
    if prepend and prepend not in sys.path:
        sys.path.insert(0, prepend)
    if outcome.plan.action is Action.INSTALL_THEN_LOAD:
        importlib.invalidate_caches()

    root = stmt.root
    module = None
    if outcome.plan.reload_needed and root in sys.modules:
        try:
            module = importlib.reload(sys.modules[root])
        except Exception:
            warnings.warn(
                f"could not reload {root} in place; restart the interpreter "
                "to pick up the smuggled version", stacklevel=2,
            )
    loaded = importlib.import_module(name)
    if module is None:
        module = loaded
    _refresh_session(outcome.dist, root, sys.modules.get(root))
    _bind(loaded, name, as_, attr_pairs, _depth + 1)
    return loaded


def _bind(module, name: str, as_: str | None, attrs, depth: int) -> None:
    try:
        target = sys._getframe(depth).f_globals
    except ValueError:
        return
    if attrs:
        for attr, alias in attrs:
            if attr == "*":
                public = getattr(module, "__all__", None)
                if public is None:
                    public = [k for k in vars(module) if not k.startswith("_")]
                for key in public:
                    target[key] = getattr(module, key)
                continue
            try:
                value = getattr(module, attr)
            except AttributeError:
                value = importlib.import_module(f"{name}.{attr}")
            target[alias or attr] = value
    else:
        if as_:
            target[as_] = module
        else:
            # binding a dotted smuggle binds the top-level package, like import
            root = name.partition(".")[0]
            target[root] = sys.modules.get(root, module)
