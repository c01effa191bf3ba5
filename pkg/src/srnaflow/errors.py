"""Exception hierarchy.

Every error carries a short ``code`` so the CLI can print a single
machine-parsable reason line.
"""


class SrnaError(Exception):
    code = "Error"

    def reason(self) -> str:
        return f"{self.code}: {self}"


class InvalidBase(SrnaError):
    code = "InvalidBase"

    def __init__(self, position: int, char: str = ""):
        self.position = position
        self.char = char
        super().__init__(f"invalid base {char!r} at position {position}")

    def __reduce__(self):
        return (InvalidBase, (self.position, self.char))


class ParseError(SrnaError):
    code = "ParseError"

    def __init__(self, line_no: int, message: str = "", path=None):
        self.line_no = line_no
        self.path = path
        where = f"{path}:" if path else "line "
        self.message = message
        super().__init__(f"{where}{line_no}: {message}".rstrip(": "))

    def __reduce__(self):
        return (ParseError, (self.line_no, self.message, self.path))


class EmptyLibrary(SrnaError):
    code = "EmptyLibrary"


class BadHeader(SrnaError):
    code = "BadHeader"


class BadPairLine(SrnaError):
    code = "BadPairLine"

    def __init__(self, line_no: int, line: str = ""):
        self.line_no = line_no
        self.line = line
        super().__init__(f"line {line_no}: malformed pair {line!r}")

    def __reduce__(self):
        return (BadPairLine, (self.line_no, self.line))


class UnknownLibrary(SrnaError):
    code = "UnknownLibrary"


class DuplicateChrom(SrnaError):
    code = "DuplicateChrom"


class ConfigError(SrnaError):
    code = "ConfigError"


class ManifestError(SrnaError):
    code = "ManifestError"


class GuideRequired(ManifestError):
    code = "GuideRequired"


class TooShort(SrnaError):
    code = "TooShort"


class StarUndefined(SrnaError):
    code = "StarUndefined"


class EmptyTranscriptome(SrnaError):
    code = "EmptyTranscriptome"


class ExhaustedSampling(SrnaError):
    code = "ExhaustedSampling"


class StageFailure(SrnaError):
    code = "StageFailure"

    def __init__(self, stage_name: str, record_index: int, cause: BaseException):
        self.stage_name = stage_name
        self.record_index = record_index
        self.cause = cause
        super().__init__(
            f"stage {stage_name!r} failed on record {record_index}: "
            f"{type(cause).__name__}: {cause}"
        )

    def __reduce__(self):
        return (StageFailure, (self.stage_name, self.record_index, self.cause))
