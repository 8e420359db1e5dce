"""
Error types for ClustSeg

Library code raises these; the command layer maps them to exit codes:
0 ok, 1 usage, 2 data error.
"""

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class ClustSegError(Exception):
    """Base class for every error the library raises on purpose"""
    exit_code = EXIT_DATA


class UsageError(ClustSegError):
    exit_code = EXIT_USAGE


class ConfigurationError(ClustSegError):
    """Invalid combination of sizes or settings (odd PE dim, params/pyramid mismatch)"""


class ShapeError(ClustSegError):
    def __init__(self, message, *shapes):
        if shapes:
            message = f"{message}: " + " vs ".join(str(tuple(s)) for s in shapes)
        super().__init__(message)
        self.shapes = shapes


class RangeError(ClustSegError):
    pass


class EmptyPoolError(ClustSegError):
    pass


class InsufficientPointsError(ClustSegError):
    pass


class EmptyClusterError(ClustSegError):
    def __init__(self, cluster_index):
        super().__init__(f"cluster {cluster_index} has zero assignment mass")
        self.cluster_index = cluster_index


class ContractViolationError(ClustSegError):
    pass


class UninitializedClassError(ClustSegError):
    def __init__(self, class_id):
        super().__init__(f"memory bank queue for class {class_id} is empty")
        self.class_id = class_id


class ParseError(ClustSegError):
    """Malformed input file; carries a byte offset or a 1-based line number"""

    def __init__(self, message, offset=None, line=None):
        where = []
        if offset is not None:
            where.append(f"byte offset {offset}")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.offset = offset
        self.line = line


class InvariantViolation(ClustSegError):
    """Raised only when test-mode invariant checks are enabled"""
