"""Shared builders for hermetic package fixtures.

Stand-in distributions come in two forms: real wheels dropped into a local
find-links directory (for driving actual pip installs with --no-index), and
pre-unpacked installed trees (for fast catalog/scan tests that skip pip).
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import zipfile


def _record_entry(path: str, data: bytes) -> str:
    digest = base64.urlsafe_b64encode(
        hashlib.sha256(data).digest()
    ).rstrip(b"=").decode()
    return f"{path},sha256={digest},{len(data)}"


def build_wheel(links_dir: str, dist: str, version: str,
                modules: dict[str, str] | None = None) -> str:
    """Write a minimal wheel for dist==version into links_dir.

    ``modules`` maps archive paths to file contents; defaults to a single
    package named after the dist with __version__ set.
    """
    if modules is None:
        modules = {
            f"{dist}/__init__.py": f"__version__ = {version!r}\nanswer = 42\n"
        }
    info = f"{dist}-{version}.dist-info"
    top_level = sorted({path.split("/")[0].removesuffix(".py")
                        for path in modules})
    files = dict(modules)
    files[f"{info}/METADATA"] = (
        f"Metadata-Version: 2.1\nName: {dist}\nVersion: {version}\n"
    )
    files[f"{info}/WHEEL"] = (
        "Wheel-Version: 1.0\nGenerator: tests\nRoot-Is-Purelib: true\n"
        "Tag: py3-none-any\n"
    )
    files[f"{info}/top_level.txt"] = "\n".join(top_level) + "\n"
    record = [_record_entry(p, t.encode()) for p, t in files.items()]
    record.append(f"{info}/RECORD,,")
    files[f"{info}/RECORD"] = "\n".join(record) + "\n"

    os.makedirs(links_dir, exist_ok=True)
    wheel_path = os.path.join(links_dir, f"{dist}-{version}-py3-none-any.whl")
    with zipfile.ZipFile(wheel_path, "w") as zf:
        for path, text in files.items():
            zf.writestr(path, text)
    return wheel_path


def build_dist_tree(site_dir: str, dist: str, version: str,
                    modules: dict[str, str] | None = None,
                    top_level: str | None = None,
                    metadata_extra: str = "",
                    record: bool = True) -> str:
    """Lay out an already-installed distribution inside site_dir."""
    if modules is None:
        modules = {f"{dist}/__init__.py": f"__version__ = {version!r}\n"}
    info_dir = os.path.join(site_dir, f"{dist}-{version}.dist-info")
    os.makedirs(info_dir, exist_ok=True)
    for rel, text in modules.items():
        full = os.path.join(site_dir, rel)
        os.makedirs(os.path.dirname(full), exist_ok=True)
        with open(full, "w", encoding="utf-8") as fh:
            fh.write(text)
    with open(os.path.join(info_dir, "METADATA"), "w", encoding="utf-8") as fh:
        fh.write(f"Metadata-Version: 2.1\nName: {dist}\nVersion: {version}\n"
                 + metadata_extra)
    if top_level is None:
        top_level = "\n".join(sorted({rel.split("/")[0].removesuffix(".py")
                                      for rel in modules}))
    if top_level:
        with open(os.path.join(info_dir, "top_level.txt"), "w",
                  encoding="utf-8") as fh:
            fh.write(top_level + "\n")
    if record:
        lines = [f"{rel},," for rel in modules]
        lines.append(f"{dist}-{version}.dist-info/METADATA,,")
        lines.append(f"{dist}-{version}.dist-info/RECORD,,")
        if top_level:
            lines.append(f"{dist}-{version}.dist-info/top_level.txt,,")
        with open(os.path.join(info_dir, "RECORD"), "w",
                  encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    return info_dir


def tree_digest(*dirs: str) -> str:
    """Order-independent digest of directory trees: names plus contents."""
    h = hashlib.sha256()
    for base in sorted(dirs):
        if not os.path.isdir(base):
            h.update(f"missing:{base}".encode())
            continue
        for dirpath, dirnames, filenames in os.walk(base):
            dirnames.sort()
            for fname in sorted(filenames):
                full = os.path.join(dirpath, fname)
                rel = os.path.relpath(full, base)
                h.update(rel.encode())
                try:
                    with open(full, "rb") as fh:
                        h.update(fh.read())
                except OSError:
                    h.update(b"<unreadable>")
    return h.hexdigest()


def write_config(path: str, **cfg) -> str:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(cfg, fh)
    return path
