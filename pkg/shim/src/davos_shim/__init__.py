"""IPython kernel adapter for the smuggle runtime.

Usage from a notebook::

    import davos_shim
    davos_shim.activate()

    smuggle numpy as np          # now a real statement in every cell

All dependency logic lives in the core package, reached exclusively
through its ``python -m davos`` CLI JSON protocol; this package only
handles what must happen inside the kernel: input transformation, the
injected ``smuggle`` callable, imports/reloads, search-path hygiene, and
namespace binding.
"""

from __future__ import annotations

from IPython.core.getipython import get_ipython

from .client import CoreClient
from .environment import detect_environment, notebook_path
from .errors import (
    CoreOperationError,
    CoreProtocolError,
    InstallDeclined,
    KernelRestartRequired,
    ReloadFailed,
    ShimError,
    SmuggleRefused,
    SmuggleSyntaxError,
    UnsupportedEnvironment,
)
from .shim import FALLBACK_PROJECT, Options, Shim

__version__ = "0.1.0"

__all__ = [
    "activate",
    "deactivate",
    "configure",
    "smuggle",
    "is_active",
    "get_shim",
    "detect_environment",
    "notebook_path",
    "Options",
    "Shim",
    "CoreClient",
    "FALLBACK_PROJECT",
    "ShimError",
    "CoreProtocolError",
    "CoreOperationError",
    "SmuggleRefused",
    "SmuggleSyntaxError",
    "InstallDeclined",
    "ReloadFailed",
    "KernelRestartRequired",
    "UnsupportedEnvironment",
]

_shim: Shim | None = None


def get_shim(shell=None) -> Shim:
    """The process-wide Shim, created (and bound to a shell) on first use."""
    global _shim
    if _shim is None:
        shell = shell or get_ipython()
        if shell is None:
            raise ShimError("no IPython shell to attach to")
        _shim = Shim(shell)
    return _shim


def activate(shell=None, **options) -> Shim:
    shim = get_shim(shell)
    if options:
        shim.configure(**options)
    shim.activate()
    return shim


def deactivate() -> None:
    if _shim is not None:
        _shim.deactivate()


def configure(**options) -> None:
    get_shim().configure(**options)


def is_active() -> bool:
    return _shim is not None and _shim.active


def smuggle(name, as_=None, attrs=None, installer=None, args=None):
    """Function form, for scripts that never go through the transformer."""
    return get_shim().smuggle(name, as_=as_, attrs=attrs,
                              installer=installer, args=args)


def _reset() -> None:
    """Test hook: drop the singleton so the next use rebinds cleanly."""
    global _shim
    if _shim is not None:
        _shim.deactivate()
    _shim = None
