"""Exception hierarchy shared by every davos module.

Every error that can cross the CLI boundary derives from DavosError so the
command layer can map it to a machine-readable ``{"error": {...}}`` payload.
The ``code`` attribute is the stable identifier emitted in that payload;
messages are for humans and may change.
"""

from __future__ import annotations


class DavosError(Exception):
    """Base class for all davos errors."""

    @property
    def code(self) -> str:
        return type(self).__name__


class SmuggleParseError(DavosError):
    """Base for errors raised while parsing smuggle statements."""


class MalformedSmuggle(SmuggleParseError):
    """The smuggle keyword appears but the line is not a valid statement."""


class MalformedOnion(SmuggleParseError):
    """An onion comment marker is present but its contents are unusable."""


class DisallowedFlag(SmuggleParseError):
    """Onion requested a flag that can never make sense here (-h, --dry-run)."""


class UnknownInstaller(SmuggleParseError):
    """Onion named an installer this engine does not drive."""


class LocationFlagWithProject(SmuggleParseError):
    """Onion tried to redirect the install location while a project is active."""


class VersionError(DavosError):
    """Base for version / specifier parse failures."""


class InvalidVersion(VersionError):
    """Text does not parse as a version."""


class InvalidSpecifier(VersionError):
    """Text does not parse as a version constraint."""


class InvalidVcsReference(VersionError):
    """Text does not parse as a VCS requirement."""


class ProjectError(DavosError):
    """Base for project-store failures."""


class EmptyName(ProjectError):
    """Project name was empty or whitespace."""


class ProjectRootUnwritable(ProjectError):
    """The project root directory cannot be created or written."""


class ProjectNotFound(ProjectError):
    """Named project does not exist on disk."""


class ProjectExists(ProjectError):
    """Rename target already exists."""


class NoninteractiveRequiresYes(ProjectError):
    """Destructive operation refused: no TTY confirmation possible."""


class InstallerError(DavosError):
    """Base for installer failures."""


class InstallerNotFound(InstallerError):
    """No pip executable could be located."""


class InstallFailed(InstallerError):
    """The installer subprocess exited nonzero."""

    def __init__(self, message: str, returncode: int, stdout: str = "", stderr: str = ""):
        super().__init__(message)
        self.returncode = returncode
        self.stdout = stdout
        self.stderr = stderr


class EngineError(DavosError):
    """Base for plan/run failures."""


class PostInstallMismatch(EngineError):
    """Install reported success but the rescan still fails the constraint."""


class SmuggleRefused(EngineError):
    """Plan refused (e.g. constrained stdlib name); running it is an error."""


class ConfigError(DavosError):
    """Base for configuration failures."""


class ReadOnlyOption(ConfigError):
    """Attempted to set an option that is informational only."""


class UnknownOption(ConfigError):
    """Option name is not part of the config surface."""


class InvalidValue(ConfigError):
    """Value has the wrong type or an out-of-range value for the option."""


class IncompatibleOptions(ConfigError):
    """Two options were set to values that cannot hold simultaneously."""


class PythonVersionUnsatisfied(ConfigError):
    """require_python constraint excludes the running interpreter."""


class NotebookError(DavosError):
    """Base for notebook file failures."""


class NotANotebook(NotebookError):
    """File is not JSON or lacks the notebook structure."""


class UnsupportedFormatVersion(NotebookError):
    """Notebook nbformat major version is not 4."""
