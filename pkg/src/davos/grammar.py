"""Smuggle-statement and onion-comment parsing and source rewriting.

Statements mirror the import forms::

    smuggle numpy
    smuggle numpy as np
    smuggle a, b as c
    from scipy.stats smuggle ttest_ind
    from pkg.mod smuggle thing as t   # pip: pkg==1.2 --no-input

Parsing is deliberately regex-level: a single-pass tokenizer tracks quote and
escape state so keywords inside string literals and ordinary comments are
ignored, but no host-language syntax tree is ever built. Matched lines are
rewritten in place to calls of the runtime ``smuggle()`` function; everything
else passes through byte-identical.
"""

from __future__ import annotations

import json
import re
import shlex
from dataclasses import dataclass, field
from enum import Enum

import packaging.requirements
from packaging.utils import canonicalize_name

from .errors import (
    DisallowedFlag,
    LocationFlagWithProject,
    MalformedOnion,
    MalformedSmuggle,
    UnknownInstaller,
)
from .versions import (
    InvalidVcsReference,
    VcsReference,
    VersionSpecifierSet,
    looks_like_vcs,
    parse_specifier_set,
    parse_vcs,
)


class Form(str, Enum):
    PLAIN = "PLAIN"
    PLAIN_AS = "PLAIN_AS"
    FROM = "FROM"
    FROM_AS = "FROM_AS"
    MULTI = "MULTI"


@dataclass(frozen=True)
class Requirement:
    """What the onion asks the installer for.

    ``constraint`` is exactly one of: a VersionSpecifierSet, a VcsReference,
    or None (unconstrained).
    """

    dist_name: str
    extras: tuple[str, ...] = ()
    constraint: VersionSpecifierSet | VcsReference | None = None

    def render(self) -> str:
        # no internal spaces: rendered requirements must survive a shlex
        # round trip through onion argument text
        if isinstance(self.constraint, VcsReference):
            hint = self.constraint.dist_name_hint()
            if hint == self.dist_name and not self.extras:
                return self.constraint.render()
            name = self.dist_name
            if self.extras:
                name += "[" + ",".join(self.extras) + "]"
            return f"{name}@{self.constraint.render()}"
        out = self.dist_name
        if self.extras:
            out += "[" + ",".join(self.extras) + "]"
        if self.constraint is not None:
            out += str(self.constraint).replace(" ", "")
        return out

    def to_dict(self) -> dict:
        c = self.constraint
        if isinstance(c, VcsReference):
            constraint = {
                "kind": "vcs",
                "vcs": c.vcs,
                "url": c.url,
                "ref": c.ref,
                "egg": c.egg_name,
                "subdirectory": c.subdirectory,
            }
        elif isinstance(c, VersionSpecifierSet):
            constraint = {"kind": "specifier", "spec": str(c)}
        else:
            constraint = None
        return {
            "dist_name": self.dist_name,
            "extras": list(self.extras),
            "constraint": constraint,
        }


_DISALLOWED_FLAGS = ("-h", "--help", "--dry-run")
_LOCATION_FLAGS = ("--target", "--root", "--prefix")
_FORCE_FLAGS = ("--ignore-installed", "--upgrade", "--force-reinstall")

_SHORT_TO_LONG = {
    "-t": "--target",
    "-U": "--upgrade",
    "-I": "--ignore-installed",
    "-i": "--index-url",
    "-f": "--find-links",
    "-e": "--editable",
    "-r": "--requirement",
    "-c": "--constraint",
    "-q": "--quiet",
    "-v": "--verbose",
}

# long flags that consume the following token as their value
_VALUE_FLAGS = {
    "--target", "--root", "--prefix", "--index-url", "--extra-index-url",
    "--find-links", "--editable", "--requirement", "--constraint",
    "--platform", "--python-version", "--implementation", "--abi", "--src",
    "--cache-dir", "--log", "--proxy", "--retries", "--timeout",
    "--no-binary", "--only-binary", "--progress-bar", "--config-settings",
    "--hash", "--report", "--upgrade-strategy", "--exists-action",
    "--trusted-host", "--client-cert", "--cert",
}


@dataclass(frozen=True)
class OnionSpec:
    """A parsed onion comment: installer, requirement, and normalized flags."""

    installer: str
    requirement: Requirement | None
    flags: tuple[tuple[str, str | None], ...] = ()
    raw_args: str = field(compare=False, default="")

    @property
    def force_install(self) -> bool:
        return any(name in _FORCE_FLAGS for name, _ in self.flags)

    @property
    def no_input(self) -> bool:
        return any(name == "--no-input" for name, _ in self.flags)

    @property
    def target(self) -> str | None:
        for name, value in self.flags:
            if name == "--target":
                return value
        return None

    @property
    def location_flags(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.flags if n in _LOCATION_FLAGS)

    def flag_args(self) -> list[str]:
        """Flags flattened back to an argument vector."""
        out: list[str] = []
        for name, value in self.flags:
            out.append(name)
            if value is not None:
                out.append(value)
        return out

    def serialize(self) -> str:
        """Arguments text equivalent to raw_args, in normalized order."""
        parts: list[str] = []
        if self.requirement is not None:
            parts.append(self.requirement.render())
        parts.extend(self.flag_args())
        return " ".join(parts)

    def to_dict(self) -> dict:
        return {
            "installer": self.installer,
            "requirement": (
                None if self.requirement is None else self.requirement.to_dict()
            ),
            "flags": [[n, v] for n, v in self.flags],
            "raw_args": self.raw_args,
        }


@dataclass(frozen=True)
class SmuggleStatement:
    """One parsed smuggle statement.

    ``root_name`` is the dotted module path named by the statement (for MULTI
    it is the first name); ``names`` carries every (name, alias) pair and has
    length one except for MULTI.
    """

    form: Form
    root_name: str
    names: tuple[tuple[str, str | None], ...]
    from_attrs: tuple[tuple[str, str | None], ...] = ()
    alias: str | None = None
    onion: OnionSpec | None = None
    raw: str = field(compare=False, default="")
    line_no: int = 0
    indent: str = ""

    @property
    def root(self) -> str:
        """First segment of root_name: the importable top-level module."""
        return self.root_name.partition(".")[0]

    def to_dict(self) -> dict:
        return {
            "form": self.form.value,
            "root_name": self.root_name,
            "names": [[n, a] for n, a in self.names],
            "from_attrs": [[n, a] for n, a in self.from_attrs],
            "alias": self.alias,
            "onion": None if self.onion is None else self.onion.to_dict(),
            "line_no": self.line_no,
            "indent": self.indent,
        }


_IDENT = r"[^\W\d]\w*"
_DOTTED = rf"{_IDENT}(?:\.{_IDENT})*"

_TOKEN_RE = re.compile(r"(?<![\w.])smuggle\b")
_CALLISH_RE = re.compile(r"\s*\(")
_PLAIN_HEAD_RE = re.compile(r"[ \t]*smuggle\b")
_FROM_HEAD_RE = re.compile(rf"[ \t]*from[ \t]+{_DOTTED}[ \t]+smuggle\b")
_FROM_SLOT_RE = re.compile(rf"[ \t]*from[ \t]+{_DOTTED}[ \t]+smuggle$")

_PLAIN_RE = re.compile(
    rf"(?P<indent>[ \t]*)smuggle[ \t]+(?P<body>{_DOTTED}(?:[ \t]+as[ \t]+{_IDENT})?"
    rf"(?:[ \t]*,[ \t]*{_DOTTED}(?:[ \t]+as[ \t]+{_IDENT})?)*)[ \t]*$"
)
_PLAIN_ITEM_RE = re.compile(
    rf"(?P<name>{_DOTTED})(?:[ \t]+as[ \t]+(?P<alias>{_IDENT}))?$"
)
_FROM_RE = re.compile(
    rf"(?P<indent>[ \t]*)from[ \t]+(?P<module>{_DOTTED})[ \t]+smuggle[ \t]+"
    rf"(?P<attrs>\*|\((?P<paren>[^()]*)\)|[^()]*?)[ \t]*$"
)
_ATTR_ITEM_RE = re.compile(
    rf"(?P<name>{_IDENT})(?:[ \t]+as[ \t]+(?P<alias>{_IDENT}))?$"
)

_RESERVED = {"as", "from", "import", "smuggle", "and", "or", "not", "if",
             "else", "for", "while", "None", "True", "False", "lambda"}

_ONION_RE = re.compile(r"#[ \t]*(?P<name>[A-Za-z][A-Za-z0-9_.+-]*):(?P<args>.*)$")


def _blank_strings(line: str, state: str = "") -> tuple[str, str]:
    """Blank out string contents and split off the comment.

    Returns (processed_line, end_state). In the processed text, characters
    inside string literals (and their quotes) become spaces and the comment
    (if any) is preserved verbatim starting at its ``#``. ``state`` is "" for
    code, or the active quote prefix ("'", '"', "'''", '\"\"\"') when the
    line starts inside a string carried over from a previous line.
    """
    out = list(line)
    i = 0
    n = len(line)
    while i < n:
        ch = line[i]
        if state:
            if ch == "\\" and i + 1 < n:
                out[i] = out[i + 1] = " "
                i += 2
                continue
            if line.startswith(state, i):
                for j in range(len(state)):
                    out[i + j] = " "
                i += len(state)
                state = ""
                continue
            out[i] = " "
            i += 1
            continue
        if ch == "#":
            break
        if ch in "'\"":
            if line.startswith(ch * 3, i):
                state = ch * 3
                out[i] = out[i + 1] = out[i + 2] = " "
                i += 3
            else:
                state = ch
                out[i] = " "
                i += 1
            continue
        i += 1
    # single-quote strings cannot span physical lines
    if state in ("'", '"'):
        state = ""
    return "".join(out), state


def _split_comment(blanked: str) -> tuple[str, str | None]:
    idx = blanked.find("#")
    if idx < 0:
        return blanked, None
    return blanked[:idx], blanked[idx:]


def parse_onion(installer: str, args: str) -> OnionSpec | None:
    """Parse an installer name and argument text as an onion spec."""
    return _parse_onion(f"# {installer}: {args}")


def _parse_onion(comment: str) -> OnionSpec | None:
    """Parse a trailing comment as an onion; None when it is an ordinary one.

    Raises:
        UnknownInstaller: installer token other than pip.
        MalformedOnion: empty or unsplittable argument text, bad requirement.
        DisallowedFlag: -h / --help / --dry-run present.
    """
    m = _ONION_RE.match(comment.strip())
    if m is None:
        return None
    installer = m.group("name").lower()
    if installer != "pip":
        raise UnknownInstaller(f"onion names unsupported installer {installer!r}")
    raw_args = m.group("args").strip()
    if not raw_args:
        raise MalformedOnion("onion has no installer arguments")
    try:
        tokens = shlex.split(raw_args)
    except ValueError as exc:
        raise MalformedOnion(f"cannot split onion arguments: {exc}") from exc

    flags: list[tuple[str, str | None]] = []
    requirement_text: str | None = None
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        name, eq, attached = tok.partition("=")
        if name in _DISALLOWED_FLAGS:
            raise DisallowedFlag(f"onion flag {name!r} is not allowed")
        if tok.startswith("--"):
            if eq:
                flags.append((name, attached))
            elif name in _VALUE_FLAGS:
                if i + 1 >= len(tokens):
                    raise MalformedOnion(f"flag {name!r} expects a value")
                flags.append((name, tokens[i + 1]))
                i += 1
            else:
                flags.append((name, None))
        elif tok.startswith("-") and len(tok) > 1:
            long = _SHORT_TO_LONG.get(tok, tok)
            if long in _VALUE_FLAGS:
                if i + 1 >= len(tokens):
                    raise MalformedOnion(f"flag {tok!r} expects a value")
                flags.append((long, tokens[i + 1]))
                i += 1
            else:
                flags.append((long, None))
        else:
            if requirement_text is not None:
                raise MalformedOnion(
                    f"onion carries more than one requirement: "
                    f"{requirement_text!r} and {tok!r}"
                )
            requirement_text = tok
        i += 1

    requirement = None
    if requirement_text is not None:
        requirement = _parse_requirement(requirement_text)
    return OnionSpec(
        installer=installer,
        requirement=requirement,
        flags=tuple(flags),
        raw_args=raw_args,
    )


def _parse_requirement(text: str) -> Requirement:
    if looks_like_vcs(text):
        try:
            vcs = parse_vcs(text)
        except InvalidVcsReference as exc:
            raise MalformedOnion(f"bad requirement {text!r}: {exc}") from exc
        hint = vcs.dist_name_hint()
        if hint is None:
            raise MalformedOnion(
                f"cannot derive a distribution name from {text!r}"
            )
        return Requirement(dist_name=hint, constraint=vcs)
    try:
        req = packaging.requirements.Requirement(text)
    except packaging.requirements.InvalidRequirement as exc:
        raise MalformedOnion(f"bad requirement {text!r}: {exc}") from exc
    if req.marker is not None:
        raise MalformedOnion(f"environment markers are not supported: {text!r}")
    extras = tuple(sorted({canonicalize_name(e) for e in req.extras}))
    if req.url is not None:
        try:
            vcs = parse_vcs(req.url)
        except InvalidVcsReference as exc:
            raise MalformedOnion(f"bad requirement {text!r}: {exc}") from exc
        return Requirement(
            dist_name=canonicalize_name(req.name), extras=extras, constraint=vcs
        )
    constraint = None
    if len(req.specifier) > 0:
        constraint = parse_specifier_set(str(req.specifier))
    return Requirement(
        dist_name=canonicalize_name(req.name), extras=extras, constraint=constraint
    )


def _parse_name_list(body: str, item_re: re.Pattern) -> list[tuple[str, str | None]]:
    items: list[tuple[str, str | None]] = []
    for piece in body.split(","):
        m = item_re.match(piece.strip())
        if m is None:
            raise MalformedSmuggle(f"bad name in smuggle statement: {piece.strip()!r}")
        name, alias = m.group("name"), m.group("alias")
        for part in name.split(".") + ([alias] if alias else []):
            if part in _RESERVED:
                raise MalformedSmuggle(f"reserved word in smuggle statement: {part!r}")
        items.append((name, alias))
    return items


def parse_line(line: str, line_no: int = 0) -> SmuggleStatement | None:
    """Parse one physical source line.

    Returns a SmuggleStatement when the line is a smuggle statement outside
    string literals and ordinary comments, None otherwise.

    Raises:
        MalformedSmuggle: keyword in statement position but grammar violated,
            or a compound (semicolon) line contains a smuggle statement.
        MalformedOnion, DisallowedFlag, UnknownInstaller: onion problems.
    """
    if "\n" in line:
        raise ValueError("parse_line expects a single physical line")
    blanked_all, _ = _blank_strings(line)
    blanked_code, comment = _split_comment(blanked_all)

    # A token followed by "(" is a call to the runtime function (that is what
    # our own rewrites look like), unless it sits in the from-keyword slot,
    # where "(" opens a parenthesized name list.
    statementish = [
        m for m in _TOKEN_RE.finditer(blanked_code)
        if not _CALLISH_RE.match(blanked_code, m.end())
        or _FROM_SLOT_RE.fullmatch(blanked_code, 0, m.end())
    ]
    if not statementish:
        return None
    if ";" in blanked_code:
        raise MalformedSmuggle(
            f"compound line contains a smuggle statement (line {line_no})"
        )

    code = line[: len(blanked_code)]

    onion: OnionSpec | None = None
    m = _FROM_RE.fullmatch(code)
    if m is not None and all(
        seg not in _RESERVED for seg in m.group("module").split(".")
    ):
        attrs_text = m.group("attrs")
        if comment is not None:
            real_comment = line[len(blanked_code):]
            onion = _parse_onion(real_comment)
        if attrs_text == "*":
            attrs: list[tuple[str, str | None]] = [("*", None)]
        else:
            if m.group("paren") is not None:
                attrs_text = m.group("paren").strip().rstrip(",")
            if not attrs_text.strip():
                raise MalformedSmuggle(f"from-smuggle with no names (line {line_no})")
            attrs = _parse_name_list(attrs_text, _ATTR_ITEM_RE)
        form = Form.FROM_AS if any(a for _, a in attrs) else Form.FROM
        return SmuggleStatement(
            form=form,
            root_name=m.group("module"),
            names=((m.group("module"), None),),
            from_attrs=tuple(attrs),
            alias=None,
            onion=onion,
            raw=line,
            line_no=line_no,
            indent=m.group("indent"),
        )

    m = _PLAIN_RE.fullmatch(code)
    if m is not None:
        items = _parse_name_list(m.group("body"), _PLAIN_ITEM_RE)
        if comment is not None:
            real_comment = line[len(blanked_code):]
            onion = _parse_onion(real_comment)
        if len(items) > 1:
            if onion is not None:
                raise MalformedOnion(
                    f"onion on a multi-name smuggle statement is ambiguous "
                    f"(line {line_no})"
                )
            return SmuggleStatement(
                form=Form.MULTI,
                root_name=items[0][0],
                names=tuple(items),
                onion=None,
                raw=line,
                line_no=line_no,
                indent=m.group("indent"),
            )
        name, alias = items[0]
        return SmuggleStatement(
            form=Form.PLAIN_AS if alias else Form.PLAIN,
            root_name=name,
            names=(items[0],),
            alias=alias,
            onion=onion,
            raw=line,
            line_no=line_no,
            indent=m.group("indent"),
        )

    # keyword present but no form matched: error only in statement position
    head = _PLAIN_HEAD_RE.match(blanked_code)
    if head is not None and not _CALLISH_RE.match(blanked_code, head.end()):
        raise MalformedSmuggle(f"cannot parse smuggle statement (line {line_no})")
    if _FROM_HEAD_RE.match(blanked_code):
        raise MalformedSmuggle(f"cannot parse smuggle statement (line {line_no})")
    return None


def validate_onion_flags(spec: OnionSpec, project_enabled: bool) -> OnionSpec:
    """Check a parsed onion's flags against the current install mode.

    Raises:
        UnknownInstaller: non-pip installer on a hand-built spec.
        DisallowedFlag: a never-valid flag slipped in.
        LocationFlagWithProject: location flag while a project is active.
    """
    if spec.installer != "pip":
        raise UnknownInstaller(f"unsupported installer {spec.installer!r}")
    for name, _ in spec.flags:
        if name in _DISALLOWED_FLAGS:
            raise DisallowedFlag(f"onion flag {name!r} is not allowed")
    if project_enabled and spec.location_flags:
        raise LocationFlagWithProject(
            f"flags {', '.join(spec.location_flags)} change the install "
            f"location and cannot be used while a project is active"
        )
    return spec


def _render_call(
    name: str,
    alias: str | None,
    attrs: tuple[tuple[str, str | None], ...],
    onion: OnionSpec | None,
) -> str:
    parts = [f"smuggle(name={json.dumps(name)}"]
    if alias is not None:
        parts.append(f"as_={json.dumps(alias)}")
    if attrs:
        rendered = ", ".join(
            f"({json.dumps(n)},{json.dumps(a) if a is not None else 'None'})"
            for n, a in attrs
        )
        parts.append(f"attrs=[{rendered}]")
    if onion is None:
        parts.append("installer=None")
        parts.append("args=None")
    else:
        parts.append(f"installer={json.dumps(onion.installer)}")
        parts.append(f"args={json.dumps(onion.raw_args)}")
    return ", ".join(parts) + ")"


def canonical_call(stmt: SmuggleStatement) -> str:
    """The canonical smuggle() call(s) for a statement, without indentation."""
    if stmt.form is Form.MULTI:
        return "; ".join(
            _render_call(n, a, (), None) for n, a in stmt.names
        )
    if stmt.form in (Form.FROM, Form.FROM_AS):
        return _render_call(stmt.root_name, None, stmt.from_attrs, stmt.onion)
    return _render_call(stmt.root_name, stmt.alias, (), stmt.onion)


def iter_statements(stmt: SmuggleStatement) -> list[SmuggleStatement]:
    """A statement as a list of single-name statements (MULTI expands)."""
    if stmt.form is Form.MULTI:
        return _expand_multi(stmt)
    return [stmt]


def _expand_multi(stmt: SmuggleStatement) -> list[SmuggleStatement]:
    out = []
    for name, alias in stmt.names:
        out.append(
            SmuggleStatement(
                form=Form.PLAIN_AS if alias else Form.PLAIN,
                root_name=name,
                names=((name, alias),),
                alias=alias,
                onion=None,
                raw=stmt.raw,
                line_no=stmt.line_no,
                indent=stmt.indent,
            )
        )
    return out


def transform_source(cell: str) -> tuple[str, list[SmuggleStatement]]:
    """Rewrite every smuggle line of ``cell`` to canonical smuggle() calls.

    Line count and per-line indentation are preserved; lines that are not
    smuggle statements (including magic/shell lines starting with % or !, and
    anything inside multi-line strings) come through byte-identical.

    Returns (transformed_text, recorded_statements); MULTI lines record one
    statement per name.
    """
    lines = cell.split("\n")
    out: list[str] = []
    recorded: list[SmuggleStatement] = []
    state = ""
    for idx, line in enumerate(lines, start=1):
        if state:
            _, state = _blank_strings(line, state)
            out.append(line)
            continue
        if line.lstrip().startswith(("%", "!")):
            out.append(line)
            continue
        stmt = parse_line(line, idx)
        if stmt is None:
            _, state = _blank_strings(line)
            out.append(line)
            continue
        out.append(stmt.indent + canonical_call(stmt))
        if stmt.form is Form.MULTI:
            recorded.extend(_expand_multi(stmt))
        else:
            recorded.append(stmt)
    return "\n".join(out), recorded
