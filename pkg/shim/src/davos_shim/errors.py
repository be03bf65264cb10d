"""Exception types raised by the kernel shim."""


class ShimError(Exception):
    """Base class for everything this package raises on purpose."""


class CoreProtocolError(ShimError):
    """The core CLI produced no usable JSON document (usage error, crash)."""


class CoreOperationError(ShimError):
    """The core CLI reported a structured error document.

    ``code`` is the machine-readable error code from the document.
    """

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


class SmuggleRefused(ShimError):
    """The core planned REFUSED for a statement; nothing was run."""


class InstallDeclined(ShimError):
    """The user answered no to the install confirmation prompt."""


class ReloadFailed(ShimError):
    """A version change needs an in-place reload and the reload blew up."""


class KernelRestartRequired(ShimError):
    """The smuggled version can only take effect after a kernel restart.

    ``replay_source`` holds the linear input history up to and including
    the triggering statement; a frontend that catches this restarts the
    kernel and re-executes that source.
    """

    def __init__(self, message: str, replay_source: str):
        super().__init__(message)
        self.replay_source = replay_source


class SmuggleSyntaxError(ShimError, SyntaxError):
    """A smuggle line the parser rejects, surfaced as a cell syntax error."""


class UnsupportedEnvironment(ShimError):
    """Only the IPython>=7.0 transformer hookup is implemented."""
