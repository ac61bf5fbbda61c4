"""Exception types shared across the package."""


class LegiscoutError(Exception):
    """Base class for all domain errors."""


class InvalidId(LegiscoutError):
    """An id failed the `[A-Za-z0-9_-]+` token rule."""


class DuplicateId(LegiscoutError):
    """An entity or relationship id is already present."""


class DanglingEndpoint(LegiscoutError):
    """A relationship references a missing entity."""

    def __init__(self, missing_id: str):
        super().__init__(missing_id)
        self.missing_id = missing_id


class UnknownEntity(LegiscoutError):
    pass


class ValidationError(LegiscoutError):
    """Carries every violation found, not just the first."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations) or "validation failed")


class ParseError(LegiscoutError):
    """Malformed input file, with position information when available."""

    def __init__(self, message: str, line: int | None = None, offset: int | None = None):
        self.line = line
        self.offset = offset
        if line is not None:
            message = f"{message} (line {line}, offset {offset})"
        super().__init__(message)


class NonBinaryInput(LegiscoutError):
    """A raster operation required a {0, 255} binarized image."""


class UnattachedSegment(LegiscoutError):
    """Detected segments could not be attached to any box."""

    def __init__(self, orphans):
        self.orphans = list(orphans)
        super().__init__(f"{len(self.orphans)} unattached segment(s)")


class UnknownCluster(LegiscoutError):
    pass


class AlreadyCollapsed(LegiscoutError):
    pass


class NotCollapsed(LegiscoutError):
    pass


class InvalidGroupingFile(LegiscoutError):
    pass


class EmptyQuery(LegiscoutError):
    pass


class EmptyText(LegiscoutError):
    pass


class EmbedderMismatch(LegiscoutError):
    pass


class RemoteUnavailable(LegiscoutError):
    """The remote embedding service stayed unreachable after retries."""


class UnknownBill(LegiscoutError):
    pass


class UnknownView(LegiscoutError):
    pass
