"""Notebook file plumbing.

Loads the v4 JSON container, hands code-cell sources to the grammar
transformer, and writes the result back. Everything outside cell sources
(outputs, metadata, attachments, key order) is carried through untouched;
an untransformed document saves back byte-identical.
"""

from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass, field

from .errors import NotANotebook, UnsupportedFormatVersion
from .grammar import SmuggleStatement, transform_source

SUPPORTED_MAJOR = 4


@dataclass(frozen=True)
class Cell:
    kind: str  # "code", "markdown", or "raw"
    source: str
    index: int


@dataclass
class NotebookDoc:
    data: dict
    raw: bytes = field(repr=False)

    @property
    def format_version(self) -> tuple[int, int]:
        return (int(self.data.get("nbformat", 0)),
                int(self.data.get("nbformat_minor", 0)))

    @property
    def cells(self) -> list[Cell]:
        out = []
        for i, cell in enumerate(self.data["cells"]):
            out.append(Cell(kind=cell.get("cell_type", "raw"),
                            source=_source_text(cell.get("source", "")),
                            index=i))
        return out


def _source_text(source) -> str:
    if isinstance(source, str):
        return source
    return "".join(source)


def _set_source(cell: dict, text: str) -> None:
    # keep the shape the file used: a list of lines stays a list
    if isinstance(cell.get("source", ""), list):
        cell["source"] = text.splitlines(keepends=True)
    else:
        cell["source"] = text


def loads(raw: bytes, name: str = "<notebook>") -> NotebookDoc:
    try:
        data = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise NotANotebook(f"{name}: not a notebook JSON document ({exc})") from exc
    if not isinstance(data, dict) or not isinstance(data.get("cells"), list):
        raise NotANotebook(f"{name}: missing the notebook cell list")
    for cell in data["cells"]:
        if not isinstance(cell, dict):
            raise NotANotebook(f"{name}: malformed cell entry")
    major = data.get("nbformat")
    if not isinstance(major, int):
        raise NotANotebook(f"{name}: missing nbformat version")
    if major != SUPPORTED_MAJOR:
        raise UnsupportedFormatVersion(
            f"{name}: notebook format {major}.x is not supported (need "
            f"{SUPPORTED_MAJOR}.x)"
        )
    return NotebookDoc(data=data, raw=raw)


def load(path: str) -> NotebookDoc:
    if os.path.isdir(path):
        raise NotANotebook(f"{path}: is a directory")
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise NotANotebook(f"{path}: cannot read ({exc})") from exc
    return loads(raw, name=path)


def dumps(doc: NotebookDoc) -> bytes:
    try:
        if doc.raw and doc.data == json.loads(doc.raw.decode("utf-8")):
            return doc.raw  # untouched document: exact bytes back
    except (UnicodeDecodeError, json.JSONDecodeError):
        pass
    text = json.dumps(doc.data, indent=1, ensure_ascii=False, sort_keys=True)
    return (text + "\n").encode("utf-8")


def save(doc: NotebookDoc, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(dumps(doc))


def transform_notebook(
    doc: NotebookDoc,
) -> tuple[NotebookDoc, list[list[SmuggleStatement]]]:
    """Rewrite smuggle statements in every code cell.

    Returns the new document and, aligned with the cell list, the statements
    recorded per cell (empty for markdown/raw cells). The flat concatenation
    of the inventory follows document order.
    """
    data = copy.deepcopy(doc.data)
    inventory: list[list[SmuggleStatement]] = []
    for cell in data["cells"]:
        if cell.get("cell_type") != "code":
            inventory.append([])
            continue
        text, recorded = transform_source(_source_text(cell.get("source", "")))
        _set_source(cell, text)
        inventory.append(recorded)
    return NotebookDoc(data=data, raw=doc.raw), inventory
