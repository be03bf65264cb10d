"""Version, constraint, and VCS-reference handling.

Versions and individual constraint clauses delegate to ``packaging`` (the
same library the original runtime depends on). Prerelease admission does NOT
delegate: recent ``packaging`` releases admit prereleases whenever the
operator comparison holds, which is wrong for a single-candidate check. The
policy here is explicit: a prerelease candidate is admitted only when the
caller opted in, or when at least one clause's operand is itself a
prerelease.
"""

from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field
from urllib.parse import urlsplit

import packaging.specifiers
import packaging.utils
import packaging.version

from .errors import InvalidSpecifier, InvalidVcsReference, InvalidVersion

Version = packaging.version.Version

#: Prerelease policies accepted by VersionSpecifierSet.
PRERELEASE_POLICIES = ("derive", "allow", "disallow")

_VCS_SCHEMES = ("git", "hg", "svn", "bzr")


def parse_version(text: str) -> Version:
    """Parse ``text`` into a Version.

    Raises:
        InvalidVersion: if the text is not a valid version.
    """
    try:
        return Version(text)
    except packaging.version.InvalidVersion as exc:
        raise InvalidVersion(str(exc)) from exc


def _clause_operand_is_prerelease(clause: packaging.specifiers.Specifier) -> bool:
    # Wildcard operands keep their ".*" suffix in the raw spec; strip it so
    # the remainder parses. An operand that still fails to parse (possible
    # only under ===) derives nothing.
    operand = clause.version
    if operand.endswith(".*"):
        operand = operand[:-2]
    try:
        return Version(operand).is_prerelease
    except packaging.version.InvalidVersion:
        return False


@dataclass(frozen=True)
class VersionSpecifierSet:
    """A conjunction of version constraint clauses with a prerelease policy.

    ``prerelease_policy`` is "derive" (prereleases admitted only when some
    clause's operand is itself a prerelease) or "allow" (always admitted).
    """

    clauses: tuple[packaging.specifiers.Specifier, ...]
    raw: str = field(compare=False, default="")
    prerelease_policy: str = "derive"

    def __post_init__(self) -> None:
        if self.prerelease_policy not in PRERELEASE_POLICIES:
            raise InvalidSpecifier(
                f"unknown prerelease policy: {self.prerelease_policy!r}"
            )

    @property
    def admits_prereleases(self) -> bool:
        if self.prerelease_policy == "allow":
            return True
        if self.prerelease_policy == "disallow":
            return False
        return any(_clause_operand_is_prerelease(c) for c in self.clauses)

    def matches(self, version: Version | str) -> bool:
        """True when ``version`` satisfies every clause and the policy."""
        if isinstance(version, str):
            version = parse_version(version)
        if version.is_prerelease and not self.admits_prereleases:
            return False
        # prereleases=True turns each clause into a pure operator check;
        # admission was already decided above.
        return all(c.contains(version, prereleases=True) for c in self.clauses)

    def __str__(self) -> str:
        return ", ".join(str(c) for c in self.clauses)

    def __len__(self) -> int:
        return len(self.clauses)


def parse_specifier_set(
    text: str, prerelease_policy: str = "derive"
) -> VersionSpecifierSet:
    """Parse constraint text into a VersionSpecifierSet.

    Clauses may be separated by commas or semicolons. Empty text yields an
    empty set, which matches every final release.

    Raises:
        InvalidSpecifier: if any clause fails to parse.
    """
    normalized = text.replace(";", ",")
    try:
        spec_set = packaging.specifiers.SpecifierSet(normalized)
    except packaging.specifiers.InvalidSpecifier as exc:
        raise InvalidSpecifier(str(exc)) from exc
    clauses = tuple(
        sorted(iter(spec_set), key=lambda c: (c.operator, c.version))
    )
    return VersionSpecifierSet(
        clauses=clauses, raw=text.strip(), prerelease_policy=prerelease_policy
    )


def matches(version: Version | str, spec: VersionSpecifierSet | str) -> bool:
    """Module-level convenience wrapper around VersionSpecifierSet.matches."""
    if isinstance(spec, str):
        spec = parse_specifier_set(spec)
    return spec.matches(version)


def interpreter_version() -> Version:
    """The running interpreter's version as a Version."""
    vi = sys.version_info
    return Version(f"{vi.major}.{vi.minor}.{vi.micro}")


@dataclass(frozen=True)
class PythonCheck:
    """Outcome of check_python: ok flag plus material for a message."""

    ok: bool
    current: Version
    spec_text: str

    @property
    def message(self) -> str | None:
        if self.ok:
            return None
        return (
            f"Python {self.current} does not satisfy the requested "
            f"constraint {self.spec_text!r}"
        )

    def __bool__(self) -> bool:
        return self.ok


def check_python(
    spec_text: str,
    current: Version | None = None,
    prerelease_policy: str = "derive",
) -> PythonCheck:
    """Evaluate a Python-version constraint against an interpreter version.

    ``spec_text`` may be a specifier set (comma- or semicolon-separated
    clauses) or a bare version, which is treated as ``==`` that version.
    ``current`` defaults to the running interpreter.

    Raises:
        InvalidSpecifier: if the constraint text does not parse either way.
    """
    try:
        spec = parse_specifier_set(spec_text, prerelease_policy)
    except InvalidSpecifier:
        try:
            bare = parse_version(spec_text)
        except InvalidVersion:
            raise InvalidSpecifier(
                f"not a version constraint or bare version: {spec_text!r}"
            ) from None
        spec = parse_specifier_set(f"=={bare}", prerelease_policy)
    if current is None:
        current = interpreter_version()
    return PythonCheck(ok=spec.matches(current), current=current, spec_text=spec_text)


_VCS_RE = re.compile(
    r"^(?P<vcs>[A-Za-z]+)\+(?P<transport>[A-Za-z][A-Za-z0-9+.-]*)://"
)


@dataclass(frozen=True)
class VcsReference:
    """A version-control requirement such as git+https://host/repo.git@ref.

    ``url`` is the transport URL without the VCS prefix and without the
    revision suffix. ``ref`` is the revision (branch, tag, or commit) when
    one was given; the parser rejects an ``@`` with nothing after it.
    """

    vcs: str
    url: str
    ref: str | None = None
    egg_name: str | None = None
    subdirectory: str | None = None
    raw: str = field(default="", compare=False)

    @property
    def scheme(self) -> str:
        return f"{self.vcs}+{urlsplit(self.url).scheme}"

    def dist_name_hint(self) -> str | None:
        """Best-effort distribution name: egg fragment, else repo basename."""
        if self.egg_name:
            return packaging.utils.canonicalize_name(self.egg_name)
        path = urlsplit(self.url).path.rstrip("/")
        base = path.rsplit("/", 1)[-1]
        if base.endswith(".git"):
            base = base[: -len(".git")]
        if not base:
            return None
        return packaging.utils.canonicalize_name(base)

    def render(self) -> str:
        """Reconstruct the requirement text in installer-ready form."""
        out = f"{self.vcs}+{self.url}"
        if self.ref is not None:
            out += f"@{self.ref}"
        frags = []
        if self.egg_name is not None:
            frags.append(f"egg={self.egg_name}")
        if self.subdirectory is not None:
            frags.append(f"subdirectory={self.subdirectory}")
        if frags:
            out += "#" + "&".join(frags)
        return out


def looks_like_vcs(text: str) -> bool:
    """True when text opens with a ``<vcs>+<transport>://`` prefix."""
    return _VCS_RE.match(text.strip()) is not None


def parse_vcs(text: str) -> VcsReference:
    """Parse VCS requirement text.

    Accepted shape: ``<vcs>+<transport>://<location>[@<ref>][#<fragment>]``
    where ``<vcs>`` is git, hg, svn, or bzr and the fragment holds
    ``egg=``/``subdirectory=`` pairs joined by ``&``. The revision split
    happens on the URL's path component only, so userinfo ``@`` signs
    (``git+ssh://git@host/...``) survive.

    Raises:
        InvalidVcsReference: on any other shape, including an empty ref.
    """
    text = text.strip()
    m = _VCS_RE.match(text)
    if m is None:
        raise InvalidVcsReference(
            f"not a VCS reference (expected <vcs>+<transport>://...): {text!r}"
        )
    vcs = m.group("vcs").lower()
    if vcs not in _VCS_SCHEMES:
        raise InvalidVcsReference(f"unsupported VCS scheme: {vcs!r}")

    body = text[len(vcs) + 1 :]  # transport URL, possibly with @ref and #frag
    parts = urlsplit(body)
    if parts.fragment:
        frag = parts.fragment
        body = body[: -(len(frag) + 1)]
    else:
        frag = ""

    egg_name: str | None = None
    subdirectory: str | None = None
    if frag:
        for piece in frag.split("&"):
            key, sep, value = piece.partition("=")
            if not sep or not value:
                raise InvalidVcsReference(f"bad fragment component: {piece!r}")
            if key == "egg":
                egg_name = value
            elif key == "subdirectory":
                subdirectory = value
            else:
                raise InvalidVcsReference(f"unknown fragment key: {key!r}")

    stripped = urlsplit(body)
    path = stripped.path
    ref: str | None = None
    if "@" in path:
        path, _, ref = path.rpartition("@")
        if not ref:
            raise InvalidVcsReference(f"empty revision after '@': {text!r}")
    url = stripped._replace(path=path).geturl()
    return VcsReference(
        vcs=vcs,
        url=url,
        ref=ref,
        egg_name=egg_name,
        subdirectory=subdirectory,
        raw=text,
    )
