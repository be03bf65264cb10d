"""The smuggle decision algorithm.

Given a parsed statement, a scan of what is installed where, the session's
loaded/smuggled state, and the config, produce the minimal plan (load as-is,
or install then load) and optionally carry it out. Installs target the active
project directory so the surrounding environment is never altered; a rescan
afterwards verifies the constraint is actually satisfied.
"""

from __future__ import annotations

import os
import shutil
import sys
import warnings
from dataclasses import dataclass, replace
from enum import Enum

from packaging.utils import canonicalize_name

from . import installer, metadata
from .config import ConfigState
from .errors import DavosError, PostInstallMismatch
from .grammar import Requirement, SmuggleStatement, validate_onion_flags
from .metadata import Catalog, InstalledDist, SearchScope
from .projects import ProjectKind
from .versions import VcsReference, VersionSpecifierSet

RECEIPTS_FILENAME = ".davos-receipts"


class Action(str, Enum):
    LOAD = "LOAD"
    INSTALL_THEN_LOAD = "INSTALL_THEN_LOAD"
    RESTART_REQUIRED = "RESTART_REQUIRED"
    REFUSED = "REFUSED"


@dataclass(frozen=True)
class SessionState:
    """What this interpreter session has already loaded and smuggled.

    ``smuggled`` preserves first-execution order with the latest onion args
    per distribution name.
    """

    loaded: tuple[tuple[str, str | None], ...] = ()
    smuggled: tuple[tuple[str, str | None], ...] = ()

    def loaded_version(self, module: str) -> tuple[bool, str | None]:
        for name, version in self.loaded:
            if name == module:
                return True, version
        return False, None

    def to_dict(self) -> dict:
        return {
            "loaded": {name: version for name, version in self.loaded},
            "smuggled": [[name, args] for name, args in self.smuggled],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SessionState":
        loaded = tuple((str(k), v) for k, v in (data.get("loaded") or {}).items())
        smuggled = tuple((str(n), a) for n, a in (data.get("smuggled") or []))
        return cls(loaded=loaded, smuggled=smuggled)


@dataclass(frozen=True)
class LoadTarget:
    module: str
    attrs: tuple[tuple[str, str | None], ...] = ()
    alias: str | None = None

    def to_dict(self) -> dict:
        return {
            "module": self.module,
            "attrs": [[n, a] for n, a in self.attrs],
            "alias": self.alias,
        }


@dataclass(frozen=True)
class SmugglePlan:
    action: Action
    load_target: LoadTarget
    requirement: Requirement
    command: installer.InstallCommand | None = None
    search_path_prepend: str | None = None
    reload_needed: bool = False
    reason: str | None = None
    dist: InstalledDist | None = None
    warnings: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "action": self.action.value,
            "load": self.load_target.to_dict(),
            "requirement": self.requirement.to_dict(),
            "command": None if self.command is None else self.command.to_dict(),
            "search_path_prepend": self.search_path_prepend,
            "reload_needed": self.reload_needed,
            "reason": self.reason,
            "dist": None if self.dist is None else self.dist.to_dict(),
            "warnings": list(self.warnings),
        }


@dataclass(frozen=True)
class PlanOutcome:
    plan: SmugglePlan
    result: installer.InstallResult | None
    dist: InstalledDist | None
    session: SessionState

    @property
    def ok(self) -> bool:
        return self.plan.action is not Action.REFUSED

    def to_dict(self) -> dict:
        return {
            "plan": self.plan.to_dict(),
            "result": None if self.result is None else self.result.to_dict(),
            "dist": None if self.dist is None else self.dist.to_dict(),
            "state": self.session.to_dict(),
            "ok": self.ok,
        }


def build_scope(config: ConfigState) -> SearchScope:
    project_dir = config.project.dir if config.project is not None else None
    return SearchScope.build(project_dir=project_dir, site_dirs=config.site_dirs)


def statement_scope(stmt: SmuggleStatement, config: ConfigState) -> SearchScope:
    """``build_scope`` plus the statement's own install site, when it has one.

    With projects disabled, an onion ``--target`` directory is where the
    install lands, so every catalog consulted for this statement must
    include it; otherwise reruns would never see the installed copy.
    """
    scope = build_scope(config)
    if config.project is None and stmt.onion is not None:
        extra = stmt.onion.target
        if extra and extra not in scope.directories:
            scope = SearchScope(directories=(extra,) + scope.directories)
    return scope


def _requirement_for(stmt: SmuggleStatement) -> Requirement:
    if stmt.onion is not None and stmt.onion.requirement is not None:
        return stmt.onion.requirement
    return Requirement(dist_name=canonicalize_name(stmt.root))


def _satisfies(dist: InstalledDist, constraint) -> bool:
    if constraint is None:
        return True
    if isinstance(constraint, VcsReference):
        # VCS satisfaction is decided by the receipts file, not here
        return False
    if dist.version is None:
        return False  # unparseable recorded version: treat as unsatisfied
    assert isinstance(constraint, VersionSpecifierSet)
    return constraint.matches(dist.version)


# -- receipts -----------------------------------------------------------------


def read_receipts(project_dir: str) -> dict[str, str]:
    path = os.path.join(project_dir, RECEIPTS_FILENAME)
    if not os.path.isfile(path):
        return {}
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            name, sep, ref = line.rstrip("\n").partition("\t")
            if sep and name:
                out[name] = ref
    return out


def write_receipt(project_dir: str, dist_name: str, ref: str) -> None:
    receipts = read_receipts(project_dir)
    receipts[dist_name] = ref
    path = os.path.join(project_dir, RECEIPTS_FILENAME)
    with open(path, "w", encoding="utf-8") as fh:
        for name, value in receipts.items():
            fh.write(f"{name}\t{value}\n")


# -- planning -----------------------------------------------------------------


def plan(
    stmt: SmuggleStatement,
    catalog: Catalog,
    session: SessionState,
    config: ConfigState,
) -> SmugglePlan:
    """Decide the minimal action for a statement against a fresh catalog."""
    load_target = LoadTarget(
        module=stmt.root_name, attrs=stmt.from_attrs, alias=stmt.alias
    )
    requirement = _requirement_for(stmt)
    project = config.project
    prepend = project.dir if project is not None else None

    onion = stmt.onion
    if onion is not None:
        try:
            onion = validate_onion_flags(onion, project_enabled=project is not None)
        except DavosError as exc:
            return SmugglePlan(
                action=Action.REFUSED,
                load_target=load_target,
                requirement=requirement,
                reason=f"{exc.code}: {exc}",
            )
        if project is None and onion.target is not None:
            prepend = onion.target

    constraint = requirement.constraint
    force = onion.force_install if onion is not None else False

    was_loaded, loaded_version = session.loaded_version(stmt.root)

    def reload_for(version_text: str | None) -> bool:
        if not was_loaded:
            return False
        if loaded_version is None or version_text is None:
            return True  # unknown on either side: be conservative
        return loaded_version != version_text

    plan_warnings: list[str] = []
    if not force:
        dist = metadata.resolve_import_name(stmt.root, catalog)
        if dist is not None and isinstance(constraint, VcsReference):
            # a pinned ref counts as satisfied only if this engine installed it
            if project is not None and constraint.ref is not None:
                receipts = read_receipts(project.dir)
                if (
                    receipts.get(requirement.dist_name) == constraint.ref
                    and dist.location == project.dir
                ):
                    return SmugglePlan(
                        action=Action.LOAD,
                        load_target=load_target,
                        requirement=requirement,
                        search_path_prepend=prepend,
                        reload_needed=reload_for(dist.raw_version),
                        dist=dist,
                    )
        elif dist is not None and _satisfies(dist, constraint):
            return SmugglePlan(
                action=Action.LOAD,
                load_target=load_target,
                requirement=requirement,
                search_path_prepend=prepend,
                reload_needed=reload_for(dist.raw_version),
                dist=dist,
            )
        if dist is None and constraint is None:
            # No metadata anywhere. Standard-library modules and plain
            # importable trees load as an ordinary import would.
            scope = statement_scope(stmt, config)
            if stmt.root in sys.stdlib_module_names or metadata.module_file_exists(
                stmt.root, scope
            ):
                return SmugglePlan(
                    action=Action.LOAD,
                    load_target=load_target,
                    requirement=requirement,
                    search_path_prepend=prepend,
                    reload_needed=False,
                    dist=None,
                )

    if project is not None and project.kind is ProjectKind.FALLBACK:
        plan_warnings.append(
            "installing into the shared fallback project; smuggled packages "
            "are not isolated per notebook"
        )
    command = installer.build_command(requirement, onion, project, config)
    return SmugglePlan(
        action=Action.INSTALL_THEN_LOAD,
        load_target=load_target,
        requirement=requirement,
        command=command,
        search_path_prepend=prepend,
        reload_needed=was_loaded,
        warnings=tuple(plan_warnings),
    )


def record(stmt: SmuggleStatement, session: SessionState) -> SessionState:
    """Update the smuggled cache: first-insert order, latest args per name."""
    requirement = _requirement_for(stmt)
    name = requirement.dist_name
    args = stmt.onion.raw_args if stmt.onion is not None else None
    entries = list(session.smuggled)
    for i, (existing, _) in enumerate(entries):
        if existing == name:
            entries[i] = (name, args)
            break
    else:
        entries.append((name, args))
    return replace(session, smuggled=tuple(entries))


# -- execution ----------------------------------------------------------------


def _remove_project_copy(project_dir: str, dist: InstalledDist) -> None:
    """Delete a dist's files from a project dir ahead of a reinstall.

    Reinstalling a different version into a --target directory leaves stale
    module files or stale metadata behind (pip does not uninstall there), so
    the engine removes the old copy first, using its RECORD.
    """
    root = os.path.realpath(project_dir)
    emptied: set[str] = set()
    for rel in dist.files:
        full = os.path.realpath(os.path.join(project_dir, rel))
        if not full.startswith(root + os.sep):
            continue  # never follow RECORD entries out of the project
        if os.path.isfile(full) or os.path.islink(full):
            try:
                os.unlink(full)
            except OSError:
                continue
        parent = os.path.dirname(full)
        while parent.startswith(root + os.sep):
            emptied.add(parent)
            parent = os.path.dirname(parent)
    if os.path.isdir(dist.metadata_dir):
        shutil.rmtree(dist.metadata_dir, ignore_errors=True)
    # drop emptied package dirs bottom-up, else pip refuses to repopulate them
    for path in sorted(emptied, key=len, reverse=True):
        try:
            os.rmdir(path)
        except OSError:
            pass


def run(
    stmt: SmuggleStatement,
    session: SessionState,
    config: ConfigState,
    ask=input,
) -> PlanOutcome:
    """Plan and perform one smuggle statement.

    Raises:
        InstallFailed, InstallerNotFound: installer trouble (streams attached).
        PostInstallMismatch: install reported success but the rescan still
            does not satisfy the constraint.
    """
    catalog = metadata.scan(statement_scope(stmt, config))
    the_plan = plan(stmt, catalog, session, config)
    if the_plan.action is Action.REFUSED:
        return PlanOutcome(plan=the_plan, result=None, dist=None, session=session)
    for message in the_plan.warnings:
        warnings.warn(message, stacklevel=2)

    if the_plan.action is Action.LOAD:
        session = record(stmt, session)
        return PlanOutcome(
            plan=the_plan, result=None, dist=the_plan.dist, session=session
        )

    requirement = the_plan.requirement
    project = config.project
    result: installer.InstallResult

    def install_and_verify() -> tuple[installer.InstallResult, InstalledDist | None]:
        if project is not None:
            config.store().ensure_dir(project)
            old = metadata.scan(
                SearchScope(directories=(project.dir,))
            ).get(requirement.dist_name)
            if old is not None:
                _remove_project_copy(project.dir, old)
        res = installer.execute(the_plan.command, config, ask=ask)
        if res.status is installer.InstallStatus.DECLINED:
            return res, None
        rescan = metadata.scan(statement_scope(stmt, config))
        dist = metadata.resolve_import_name(stmt.root, rescan)
        if dist is None:
            dist = rescan.get(requirement.dist_name)
        constraint = requirement.constraint
        if isinstance(constraint, VcsReference):
            if dist is None:
                raise PostInstallMismatch(
                    f"install of {requirement.render()!r} finished but no "
                    f"distribution for {requirement.dist_name!r} was found"
                )
            if project is not None and constraint.ref is not None:
                write_receipt(project.dir, requirement.dist_name, constraint.ref)
        else:
            if dist is None or not _satisfies(dist, constraint):
                found = "nothing" if dist is None else f"version {dist.raw_version}"
                raise PostInstallMismatch(
                    f"installed {requirement.render()!r} but the rescan found "
                    f"{found}, which does not satisfy the constraint"
                )
        return res, dist

    if project is not None:
        with config.store().lock(project):
            result, dist = install_and_verify()
    else:
        result, dist = install_and_verify()

    if result.status is installer.InstallStatus.DECLINED:
        return PlanOutcome(plan=the_plan, result=result, dist=None, session=session)
    session = record(stmt, session)
    return PlanOutcome(plan=the_plan, result=result, dist=dist, session=session)
