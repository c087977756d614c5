"""Exception types shared across the package."""


class ReqspecError(Exception):
    """Base class for all package errors."""


class FormulaSyntaxError(ReqspecError):
    def __init__(self, position, expected, found=None):
        self.position = position
        self.expected = expected
        self.found = found
        msg = f"at position {position}: expected {expected}"
        if found is not None:
            msg += f", found {found!r}"
        super().__init__(msg)


class MissingSlot(ReqspecError):
    def __init__(self, key):
        self.key = key
        super().__init__(f"slot {key!r} is empty and has no default")


class SlotIncomplete(ReqspecError):
    def __init__(self, key):
        self.key = key
        super().__init__(f"slot {key!r} is missing or ambiguous")


class UnknownVariable(ReqspecError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"unknown signal variable {name!r}")


class UnknownTag(ReqspecError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"unknown location tag {name!r}")


class FormatError(ReqspecError):
    def __init__(self, file, line, reason=""):
        self.file = file
        self.line = line
        super().__init__(f"{file}:{line}: {reason}" if reason else f"{file}:{line}")


class OverlappingSpans(ReqspecError):
    pass


class EmptyVocabulary(ReqspecError):
    def __init__(self, category):
        self.category = category
        super().__init__(f"vocabulary for {category!r} is empty")


class NoPatterns(ReqspecError):
    pass


class EmptyCorpus(ReqspecError):
    pass


class NoComparisonFound(ReqspecError):
    pass


class NoNumberFound(ReqspecError):
    pass


class UntrainedDiscriminator(ReqspecError):
    pass


class UntrainedValidator(ReqspecError):
    pass


class SessionNotFound(ReqspecError):
    def __init__(self, session_id):
        self.session_id = session_id
        super().__init__(f"no such session: {session_id}")


class NoCandidates(ReqspecError):
    pass


class EmptyDataset(ReqspecError):
    pass
