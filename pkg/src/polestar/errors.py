"""Exception hierarchy shared across the engine."""


class PolestarError(Exception):
    """Base class for engine errors."""


class MissingFile(PolestarError):
    pass


class SchemaError(PolestarError):
    """A record failed validation; message carries file and line number."""

    def __init__(self, message, path=None, line=None):
        super().__init__(message)
        self.path = path
        self.line = line

    def __str__(self):
        loc = ""
        if self.path is not None:
            loc = f" [{self.path}" + (f":{self.line}]" if self.line is not None else "]")
        return super().__str__() + loc


class DanglingReference(PolestarError):
    def __init__(self, ref, context=""):
        super().__init__(f"unresolved reference {ref!r}" + (f" in {context}" if context else ""))
        self.ref = ref


class NegativeWeight(PolestarError):
    pass


class VersionMismatch(PolestarError):
    pass


class CorruptFile(PolestarError):
    pass


class UnprojectableStation(PolestarError):
    pass


class InconsistentMapping(PolestarError):
    """A virtual node resolved to a station that is not on its line (corrupt PTG)."""


class SchemaMismatch(PolestarError):
    """Feature vector dimension/version does not match the model schema."""


class InvalidTau(PolestarError):
    pass
