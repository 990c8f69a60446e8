"""Exception hierarchy shared by all modules."""


class BBSRepError(Exception):
    """Base class for every error raised by this package."""


class DecodeError(BBSRepError, ValueError):
    """Bytes are not a canonical encoding of the expected object."""


class InvalidSignature(BBSRepError):
    """A signature failed verification where a valid one was required."""


class UnknownSigner(BBSRepError):
    """A valid signature opened to key material that no record explains."""


class DuplicateMember(BBSRepError):
    pass


class UnknownMember(BBSRepError, KeyError):
    pass


class TamperedToken(BBSRepError):
    """An update token failed its pairing check and was discarded."""


class TokenConflict(BBSRepError):
    """A second, different token was requested for an (interval, member) pair."""


class LevelOutOfRange(BBSRepError, ValueError):
    pass


class CorruptStore(BBSRepError):
    """A persisted reputation store could not be restored."""

    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
        self.path = path
        self.line = line


class NoIntervalKey(BBSRepError):
    """A vehicle holds no signing key for the requested interval."""


class Revoked(BBSRepError):
    pass


class ScenarioError(BBSRepError, ValueError):
    """A scenario script failed validation."""
