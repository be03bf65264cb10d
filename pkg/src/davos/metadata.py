"""Installed-distribution inspection.

Scans directories for ``*.dist-info`` (and, best effort, ``*.egg-info``)
metadata, maps top-level module names to distributions, and answers the
"is it installed locally, and at which version?" question. Directory order
is significance: the earliest directory containing a distribution wins, which
is how project directories shadow the interpreter environment.
"""

from __future__ import annotations

import csv
import email.parser
import os
import sys
from dataclasses import dataclass, field

from packaging.utils import canonicalize_name

from .versions import Version, parse_version
from .errors import InvalidVersion


@dataclass(frozen=True)
class InstalledDist:
    """One installed distribution as described by its metadata directory.

    ``version`` is None when the recorded version text does not parse; the
    raw text is kept so callers can still report it.
    """

    dist_name: str
    version: Version | None
    raw_version: str
    location: str
    top_level_modules: tuple[str, ...]
    metadata_dir: str
    files: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "dist_name": self.dist_name,
            "version": self.raw_version,
            "location": self.location,
            "top_level_modules": list(self.top_level_modules),
            "metadata_dir": self.metadata_dir,
        }


@dataclass(frozen=True)
class SearchScope:
    """Ordered directories to scan; the project directory, if any, is first."""

    directories: tuple[str, ...]

    @classmethod
    def build(
        cls, project_dir: str | None = None, site_dirs: tuple[str, ...] | None = None
    ) -> "SearchScope":
        if site_dirs is None:
            site_dirs = environment_directories()
        dirs = ((project_dir,) if project_dir else ()) + tuple(site_dirs)
        return cls(directories=dirs)


def environment_directories() -> tuple[str, ...]:
    """Existing directories on the interpreter path, in resolution order."""
    seen: dict[str, None] = {}
    for entry in sys.path:
        if entry and os.path.isdir(entry):
            seen.setdefault(os.path.abspath(entry))
    return tuple(seen)


@dataclass
class Catalog:
    """Immutable-after-scan snapshot of what is installed where."""

    dists: dict[str, InstalledDist] = field(default_factory=dict)
    module_index: dict[str, str] = field(default_factory=dict)
    diagnostics: list[str] = field(default_factory=list)

    def get(self, dist_name: str) -> InstalledDist | None:
        return self.dists.get(canonicalize_name(dist_name))

    def by_module(self, module: str) -> InstalledDist | None:
        name = self.module_index.get(module)
        return self.dists.get(name) if name else None


def _read_metadata_pairs(path: str) -> dict[str, str]:
    with open(path, encoding="utf-8", errors="replace") as fh:
        msg = email.parser.Parser().parse(fh, headersonly=True)
    return {k: v for k, v in msg.items()}


def _read_record(meta_dir: str) -> tuple[str, ...]:
    record = os.path.join(meta_dir, "RECORD")
    if not os.path.isfile(record):
        return ()
    try:
        with open(record, newline="", encoding="utf-8") as fh:
            return tuple(row[0] for row in csv.reader(fh) if row)
    except OSError:
        return ()


def _read_top_level(meta_dir: str) -> tuple[str, ...] | None:
    path = os.path.join(meta_dir, "top_level.txt")
    if not os.path.isfile(path):
        return None
    try:
        with open(path, encoding="utf-8") as fh:
            mods = tuple(line.strip() for line in fh if line.strip())
    except OSError:
        return None
    return mods or None


def _modules_from_record(files: tuple[str, ...]) -> tuple[str, ...]:
    mods: set[str] = set()
    for path in files:
        parts = path.replace("\\", "/").split("/")
        head = parts[0]
        if (
            not head
            or head.startswith(".")
            or head == ".."
            or head.endswith((".dist-info", ".egg-info", ".data"))
            or head in ("bin", "__pycache__")
        ):
            continue
        if len(parts) == 1:
            if head.endswith(".py"):
                mods.add(head[:-3])
            elif ".so" in head or ".pyd" in head:
                mods.add(head.split(".")[0])
        else:
            mods.add(head)
    return tuple(sorted(mods))


def _load_dist(location: str, meta_dir_name: str, diags: list[str]) -> InstalledDist | None:
    meta_dir = os.path.join(location, meta_dir_name)
    if meta_dir_name.endswith(".dist-info"):
        meta_file = os.path.join(meta_dir, "METADATA")
    else:
        meta_file = os.path.join(meta_dir, "PKG-INFO")
    if not os.path.isfile(meta_file):
        diags.append(f"skipped {meta_dir}: no metadata file")
        return None
    try:
        pairs = _read_metadata_pairs(meta_file)
    except OSError as exc:
        diags.append(f"skipped {meta_dir}: unreadable metadata ({exc})")
        return None
    name = pairs.get("Name")
    if not name:
        diags.append(f"skipped {meta_dir}: metadata lacks a Name field")
        return None
    raw_version = pairs.get("Version")
    if not raw_version:
        diags.append(f"skipped {meta_dir}: metadata lacks a Version field")
        return None
    version: Version | None
    try:
        version = parse_version(raw_version)
    except InvalidVersion:
        version = None
        diags.append(f"{meta_dir}: unparseable version {raw_version!r}")

    files = _read_record(meta_dir)
    top = _read_top_level(meta_dir)
    if top is None:
        top = _modules_from_record(files)
    if not top:
        top = (canonicalize_name(name).replace("-", "_"),)
    return InstalledDist(
        dist_name=canonicalize_name(name),
        version=version,
        raw_version=raw_version,
        location=location,
        top_level_modules=top,
        metadata_dir=meta_dir,
        files=files,
    )


def scan(scope: SearchScope) -> Catalog:
    """Scan every scope directory; earliest occurrence of a dist wins."""
    catalog = Catalog()
    for location in scope.directories:
        if not os.path.isdir(location):
            continue
        try:
            entries = sorted(os.listdir(location))
        except OSError as exc:
            catalog.diagnostics.append(f"skipped {location}: {exc}")
            continue
        dists_here: list[InstalledDist] = []
        for entry in entries:
            full = os.path.join(location, entry)
            if not os.path.isdir(full):
                continue
            if entry.endswith(".dist-info") or entry.endswith(".egg-info"):
                dist = _load_dist(location, entry, catalog.diagnostics)
                if dist is not None:
                    dists_here.append(dist)
        dists_here.sort(key=lambda d: d.dist_name)
        for dist in dists_here:
            if dist.dist_name in catalog.dists:
                continue  # shadowed by an earlier directory
            catalog.dists[dist.dist_name] = dist
            for module in dist.top_level_modules:
                owner = catalog.module_index.get(module)
                if owner is None:
                    catalog.module_index[module] = dist.dist_name
                elif catalog.dists[owner].location == location:
                    catalog.diagnostics.append(
                        f"module {module!r} claimed by both {owner!r} and "
                        f"{dist.dist_name!r} in {location}; kept {owner!r}"
                    )
    return catalog


def resolve_import_name(module_name: str, catalog: Catalog) -> InstalledDist | None:
    """Find the distribution providing a smuggled root module, if any."""
    root = module_name.partition(".")[0]
    hit = catalog.by_module(root)
    if hit is not None:
        return hit
    return catalog.get(root)


def module_file_exists(root: str, scope: SearchScope) -> bool:
    """True when ``root`` is importable as a plain file/package in scope dirs.

    Used to tell apart "absent" from "present but without dist metadata"
    (path-injected source trees, editable installs without metadata).
    """
    for location in scope.directories:
        if not os.path.isdir(location):
            continue
        pkg = os.path.join(location, root)
        if os.path.isfile(os.path.join(pkg, "__init__.py")):
            return True
        if os.path.isfile(pkg + ".py"):
            return True
        try:
            for entry in os.listdir(location):
                if entry.startswith(root + ".") and (
                    entry.endswith(".so") or entry.endswith(".pyd")
                ):
                    return True
        except OSError:
            continue
    return False
