"""Exception types shared across the pipeline."""


class InfomatchError(Exception):
    """Base class for every error raised by this package."""


class DataError(InfomatchError):
    """Input data is malformed or cannot support the requested computation."""


class ParseError(DataError):
    """A file could not be parsed.

    ``line`` is 1-based when the failure can be tied to a line, otherwise None.
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class EmptyDocument(DataError):
    pass


class EmptyEmbedding(DataError):
    pass


class SupportTooLarge(DataError):
    pass


class ConfigError(InfomatchError):
    """Run configuration is invalid (bad keys, missing paths, bad values)."""
