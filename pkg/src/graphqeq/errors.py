"""Exception hierarchy shared by all graphqeq modules."""


class GraphQeqError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgument(GraphQeqError, ValueError):
    pass


class ParseError(GraphQeqError, ValueError):
    """Malformed molecular file. ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnsupportedElement(GraphQeqError, ValueError):
    def __init__(self, element, line=None):
        self.element = element
        self.line = line
        message = f"unsupported element {element!r}"
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DisconnectedMolecule(GraphQeqError, ValueError):
    """The bond graph has more than one connected component."""


class PerceptionError(GraphQeqError, ValueError):
    pass


class SingularHardness(GraphQeqError, ArithmeticError):
    def __init__(self, message, atom_index=None):
        self.atom_index = atom_index
        super().__init__(message)


class OracleDomainError(GraphQeqError, ValueError):
    pass


class SingularPoint(GraphQeqError, ArithmeticError):
    pass


class ModelError(GraphQeqError):
    """Anything wrong with model weights or their compatibility."""


class ModelMismatch(ModelError, ValueError):
    pass


class VersionError(ModelError):
    pass


class TruncationError(ModelError):
    pass
