"""Child-process client for the core CLI's JSON protocol.

Every exchange is one subprocess invocation producing one JSON document on
stdout (protocol version ``"v": 1``). Structured config and session state
travel as temporary JSON files because the CLI takes them as file paths.
The shim never imports the core package; this module is the entire
boundary.
"""

from __future__ import annotations

import json
import os
import subprocess
import sys
import tempfile
from contextlib import ExitStack, contextmanager
from dataclasses import dataclass
from typing import Iterator, Sequence

from .errors import CoreOperationError, CoreProtocolError

PROTOCOL_VERSION = 1


def default_command() -> tuple[str, ...]:
    """Run the core installed next to the interpreter hosting the kernel."""
    return (sys.executable, "-m", "davos")


@dataclass(frozen=True)
class Reply:
    """One CLI exchange: exit code, parsed document, captured stderr."""

    code: int
    doc: dict
    stderr: str


@contextmanager
def _json_file(payload: dict) -> Iterator[str]:
    fd, path = tempfile.mkstemp(suffix=".json", prefix="davos-shim-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(payload, fh)
        yield path
    finally:
        try:
            os.unlink(path)
        except OSError:
            pass


class CoreClient:
    def __init__(self, command: Sequence[str] | None = None):
        self.command = tuple(command) if command else default_command()

    # -- transport ----------------------------------------------------------

    def invoke(self, *argv: str, input_text: str | None = None) -> Reply:
        """One round trip; raises unless a versioned document came back."""
        proc = subprocess.run(
            [*self.command, *argv],
            input=input_text,
            capture_output=True,
            text=True,
        )
        text = proc.stdout.strip()
        if not text:
            raise CoreProtocolError(
                f"core produced no output (exit {proc.returncode}): "
                f"{proc.stderr.strip()[:500]}"
            )
        try:
            doc = json.loads(text)
        except ValueError as exc:
            raise CoreProtocolError(
                f"core produced non-JSON output: {text[:200]!r}"
            ) from exc
        if not isinstance(doc, dict) or doc.get("v") != PROTOCOL_VERSION:
            raise CoreProtocolError(
                f"unexpected protocol document: {text[:200]!r}"
            )
        return Reply(code=proc.returncode, doc=doc, stderr=proc.stderr)

    def request(self, *argv: str) -> Reply:
        """invoke(), with error documents raised as CoreOperationError."""
        reply = self.invoke(*argv)
        error = reply.doc.get("error")
        if error is not None:
            raise CoreOperationError(
                code=error.get("code", "Unknown"),
                message=error.get("message", ""),
            )
        return reply

    @contextmanager
    def _doc_args(self, state: dict | None,
                  config: dict | None) -> Iterator[list[str]]:
        with ExitStack() as stack:
            argv = []
            if state is not None:
                argv += ["--state", stack.enter_context(_json_file(state))]
            if config is not None:
                argv += ["--config", stack.enter_context(_json_file(config))]
            yield argv

    # -- subcommands ----------------------------------------------------------

    def transform_code(self, source: str) -> str:
        reply = self.request("transform", "--code", source)
        return reply.doc["source"]

    def parse_code(self, source: str) -> list[dict]:
        return self.request("parse", "--code", source).doc["statements"]

    def plan(self, statement: str, state: dict | None = None,
             config: dict | None = None) -> list[dict]:
        with self._doc_args(state, config) as argv:
            reply = self.request("plan", "--statement", statement, *argv)
        return reply.doc["plans"]

    def run(self, statement: str, state: dict | None = None,
            config: dict | None = None) -> Reply:
        """Execute a statement; confirmation is always the shim's job.

        The reply's exit code is 1 when any outcome is not ok (for example
        REFUSED); callers inspect ``doc["outcomes"]`` for the reason.
        """
        with self._doc_args(state, config) as argv:
            return self.request("run", "--statement", statement, "--yes",
                                *argv)

    def check_python(self, spec: str) -> dict:
        return self.request("check-python", "--spec", spec).doc

    def clean_empty(self, name: str,
                    project_root: str | None = None) -> bool:
        argv = ["projects"]
        if project_root:
            argv += ["--project-root", project_root]
        argv += ["clean-empty", name]
        return bool(self.request(*argv).doc["cleaned"])
