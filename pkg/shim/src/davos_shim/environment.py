"""Best-effort detection of the hosting frontend and the notebook path.

The runtime only needs two facts from the outside world: which frontend
family is hosting the kernel (one of three values) and, when it can be
determined, the absolute path of the notebook driving this kernel. Path
detection is layered from cheap local signals to a Jupyter Server API
query; every layer is optional and failure means "unknown", which callers
turn into the shared fallback project with a warning.
"""

from __future__ import annotations

import json
import os
import sys
import urllib.parse
import urllib.request

IPYTHON_MODERN = "IPython>=7.0"
IPYTHON_LEGACY = "IPython<7.0"
COLAB = "Colaboratory"


def detect_environment() -> str:
    if "google.colab" in sys.modules:
        return COLAB
    try:
        import IPython
    except ImportError:
        return IPYTHON_MODERN
    if IPython.version_info[0] < 7:
        return IPYTHON_LEGACY
    return IPYTHON_MODERN


def notebook_path(shell=None) -> str | None:
    """Absolute path of the running notebook, or None when undetectable."""
    # modern ipykernel exports the session file straight into the env
    session = os.environ.get("JPY_SESSION_NAME", "")
    if session.endswith(".ipynb"):
        return os.path.abspath(session)

    # VS Code injects the path into the user namespace
    if shell is not None:
        vsc = shell.user_ns.get("__vsc_ipynb_file__")
        if isinstance(vsc, str) and vsc.endswith(".ipynb"):
            return os.path.abspath(vsc)

    return _path_from_server_api()


def _path_from_server_api() -> str | None:
    """Match this kernel's id against the sessions of running servers."""
    try:
        from ipykernel.connect import get_connection_file
    except ImportError:
        return None
    try:
        connection_file = get_connection_file()
    except Exception:  # no kernel attached to this interpreter
        return None
    kernel_id = os.path.basename(connection_file)
    kernel_id = kernel_id.removeprefix("kernel-").removesuffix(".json")

    for server in _running_servers():
        path = _session_lookup(server, kernel_id)
        if path is not None:
            return path
    return None


def _running_servers() -> list[dict]:
    try:
        from jupyter_server import serverapp
        return list(serverapp.list_running_servers())
    except Exception:
        return []


def _session_lookup(server: dict, kernel_id: str) -> str | None:
    url = server.get("url", "")
    token = server.get("token", "")
    query = urllib.parse.urlencode({"token": token}) if token else ""
    try:
        with urllib.request.urlopen(
            f"{url}api/sessions?{query}", timeout=3
        ) as resp:
            sessions = json.load(resp)
    except Exception:
        return None
    for session in sessions:
        if session.get("kernel", {}).get("id") != kernel_id:
            continue
        rel = session.get("notebook", {}).get("path") or session.get("path")
        if rel:
            return os.path.join(server.get("root_dir", ""), rel)
    return None
