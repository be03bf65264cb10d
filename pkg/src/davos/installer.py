"""Building and running pip invocations.

Commands are always argument vectors handed straight to the OS (never a
shell), so onion text can't smuggle shell syntax into the user's machine.
Output is captured and echoed after the run unless suppressed; failures
surface both streams no matter what.
"""

from __future__ import annotations

import os
import shutil
import subprocess
import sys
import time
from dataclasses import dataclass, field
from enum import Enum

from .errors import InstallerNotFound, InstallFailed
from .grammar import OnionSpec, Requirement
from .projects import Project


class InstallStatus(str, Enum):
    OK = "OK"
    FAILED = "FAILED"
    DECLINED = "DECLINED"


@dataclass(frozen=True)
class InstallCommand:
    """A fully resolved installer invocation."""

    executable: tuple[str, ...]  # e.g. ("/usr/bin/pip3",) or (python, "-m", "pip")
    argv: tuple[str, ...]  # begins with "install"
    target_dir: str | None = None
    env_overrides: tuple[tuple[str, str], ...] = ()
    no_input: bool = False

    @property
    def full_argv(self) -> tuple[str, ...]:
        return self.executable + self.argv

    def to_dict(self) -> dict:
        return {
            "executable": list(self.executable),
            "argv": list(self.argv),
            "target_dir": self.target_dir,
            "env_overrides": [[k, v] for k, v in self.env_overrides],
        }


@dataclass(frozen=True)
class InstallResult:
    status: InstallStatus
    stdout: str = ""
    stderr: str = ""
    duration: float = 0.0

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "stdout": self.stdout,
            "stderr": self.stderr,
            "duration": self.duration,
        }


def discover_pip(config) -> tuple[str, ...]:
    """Locate pip: configured path, adjacent to the interpreter, PATH, or
    the ``<interpreter> -m pip`` fallback.

    Raises:
        InstallerNotFound: a configured executable does not exist.
    """
    configured = getattr(config, "pip_executable", None)
    if configured:
        if isinstance(configured, (list, tuple)):
            return tuple(configured)
        if not os.path.isfile(configured):
            raise InstallerNotFound(f"configured pip not found: {configured!r}")
        return (configured,)
    interpreter = getattr(config, "interpreter", None) or sys.executable
    bindir = os.path.dirname(interpreter)
    for name in ("pip", "pip3"):
        candidate = os.path.join(bindir, name)
        if os.path.isfile(candidate) and os.access(candidate, os.X_OK):
            return (candidate,)
    on_path = shutil.which("pip") or shutil.which("pip3")
    if on_path:
        return (on_path,)
    return (interpreter, "-m", "pip")


def build_command(
    req: Requirement,
    onion: OnionSpec | None,
    project: Project | None,
    config,
) -> InstallCommand:
    """Assemble the pip invocation for a requirement.

    The onion's flags (already validated) pass through; the project dir, if
    any, becomes ``--target``; non-interactive mode appends ``--no-input``.
    """
    argv: list[str] = ["install", req.render()]
    if onion is not None:
        argv.extend(onion.flag_args())
    target_dir = None
    if project is not None:
        target_dir = project.dir
        argv.extend(["--target", target_dir])
        # with --target pip warn-skips package dirs that already exist
        # instead of replacing them; --upgrade makes it overwrite
        if "--upgrade" not in argv and "-U" not in argv:
            argv.append("--upgrade")
    argv.extend(getattr(config, "pip_extra_args", ()) or ())
    no_input = bool(getattr(config, "noninteractive", False)) or bool(
        onion is not None and onion.no_input
    )
    if no_input and "--no-input" not in argv:
        argv.append("--no-input")
    return InstallCommand(
        executable=discover_pip(config),
        argv=tuple(argv),
        target_dir=target_dir,
        no_input=no_input,
    )


def execute(cmd: InstallCommand, config, ask=input) -> InstallResult:
    """Run an install command as a child process.

    When ``confirm_install`` is on and the context is interactive, the user
    is prompted first; declining returns DECLINED without touching the
    filesystem. Non-interactive contexts never prompt (confirmation is
    forced off). Captured output is echoed after completion unless
    ``suppress_stdout`` is set; on failure both streams are echoed
    regardless and InstallFailed is raised.

    Raises:
        InstallerNotFound: the executable cannot be spawned.
        InstallFailed: nonzero exit, carrying stdout/stderr/returncode.
    """
    noninteractive = bool(getattr(config, "noninteractive", False)) or cmd.no_input
    if getattr(config, "confirm_install", False) and not noninteractive:
        try:
            answer = ask(f"Run `{' '.join(cmd.full_argv)}`? [y/N] ")
        except EOFError:
            answer = ""  # closed stdin cannot consent
        if answer.strip().lower() not in ("y", "yes"):
            return InstallResult(status=InstallStatus.DECLINED)

    env = dict(os.environ)
    env.update(dict(cmd.env_overrides))
    timeout = getattr(config, "install_timeout", None)
    start = time.monotonic()
    try:
        proc = subprocess.run(
            list(cmd.full_argv),
            capture_output=True,
            text=True,
            env=env,
            timeout=timeout,
        )
    except FileNotFoundError as exc:
        raise InstallerNotFound(f"cannot run installer: {exc}") from exc
    except subprocess.TimeoutExpired as exc:
        raise InstallFailed(
            f"installer timed out after {timeout}s",
            returncode=-1,
            stdout=(exc.stdout or b"").decode() if isinstance(exc.stdout, bytes) else (exc.stdout or ""),
            stderr=(exc.stderr or b"").decode() if isinstance(exc.stderr, bytes) else (exc.stderr or ""),
        ) from exc
    duration = time.monotonic() - start

    suppress = bool(getattr(config, "suppress_stdout", False))
    if proc.returncode != 0:
        # failures always surface both streams (on stderr: stdout carries
        # the machine-readable documents)
        if proc.stdout:
            sys.stderr.write(proc.stdout)
        if proc.stderr:
            sys.stderr.write(proc.stderr)
        raise InstallFailed(
            f"installer exited with status {proc.returncode}",
            returncode=proc.returncode,
            stdout=proc.stdout,
            stderr=proc.stderr,
        )
    if not suppress:
        if proc.stdout:
            sys.stderr.write(proc.stdout)
        if proc.stderr:
            sys.stderr.write(proc.stderr)
    return InstallResult(
        status=InstallStatus.OK,
        stdout=proc.stdout,
        stderr=proc.stderr,
        duration=duration,
    )
