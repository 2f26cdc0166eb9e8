"""Exception hierarchy shared by all subsystems."""


class SimError(Exception):
    """Base class for all errors raised by partsim."""


class ConfigError(SimError, ValueError):
    """Invalid configuration value or combination."""


class ProtocolError(SimError):
    """A peer or local simulator violated the channel protocol.

    These indicate simulator bugs (timestamp regressions, malformed payloads)
    and are fatal.
    """


class ChannelClosedError(SimError):
    """The peer of a channel went away while we still depended on it."""


class StartupError(SimError):
    """Channel handshake failed: parameter mismatch or peer never appeared."""


class DeadlockError(SimError):
    """No synchronization progress within the watchdog bound."""

    def __init__(self, message, horizons=None):
        super().__init__(message)
        self.horizons = dict(horizons or {})


class ValidationError(ConfigError):
    """One or more problems found while validating a system configuration.

    ``problems`` holds every finding, each as ``(location, message)``.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        lines = [f"{loc}: {msg}" if loc else msg for loc, msg in self.problems]
        super().__init__("\n".join(lines))


class RunError(SimError):
    """Orchestrated run failed (child crash, startup timeout, collision)."""

    def __init__(self, message, exit_code=2):
        super().__init__(message)
        self.exit_code = exit_code
