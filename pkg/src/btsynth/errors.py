"""Exception hierarchy for the whole package."""

from __future__ import annotations


class BTSynthError(Exception):
    """Base class for every error raised by btsynth."""


# ---------------------------------------------------------------------------
# XML dialect
# ---------------------------------------------------------------------------


class MalformedXmlError(BTSynthError):
    """Input is not well-formed XML (or contains stray text content)."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(f"{message}{where}")


class UnknownElementError(MalformedXmlError):
    """Element name is not part of the behavior-tree dialect."""


class MissingAttributeError(MalformedXmlError):
    """A required attribute (instance_name, threshold, subgoal) is absent or invalid."""


class DuplicateInstanceNameError(MalformedXmlError):
    """Two elements in one document share an instance_name."""


# ---------------------------------------------------------------------------
# Files: libraries, scenarios, dataset records
# ---------------------------------------------------------------------------


class SchemaViolationError(BTSynthError):
    """A structured input file does not match its documented shape."""


class CrossRefViolationError(BTSynthError):
    """Dataset record references a leaf with no matching metadata entry."""


class DuplicateNameError(BTSynthError):
    """Two node definitions in one library share a name."""


class UnknownNodeTypeError(BTSynthError):
    """Node definition type is neither 'condition' nor 'action'."""


class DomainViolationError(BTSynthError):
    """A value falls outside its variable's declared domain."""


class UnknownVariableError(BTSynthError):
    """A predicate, effect or event names an undeclared variable."""


# ---------------------------------------------------------------------------
# Execution
# ---------------------------------------------------------------------------


class UnboundLeafError(BTSynthError):
    """Leaf binding does not resolve to a library definition or scenario primitive."""


class UnknownNodeError(BTSynthError):
    """A node-level test case names a definition absent from the library."""


# ---------------------------------------------------------------------------
# Synthesis
# ---------------------------------------------------------------------------


class ExhaustedError(BTSynthError):
    """Every state in the search tree is terminal or pruned."""


class NoCandidatesError(BTSynthError):
    """No decomposition or binding relates to any unmet subgoal literal."""


class UnsolvableError(BTSynthError):
    """The root goal cannot be expanded at all with the given library."""


class BudgetExhaustedError(BTSynthError):
    """Search budget ran out before a fully validated tree was accepted.

    Carries the best partial tree seen so far and the run report.
    """

    def __init__(self, message: str, tree=None, report=None):
        super().__init__(message)
        self.tree = tree
        self.report = report


# ---------------------------------------------------------------------------
# Remote expansion
# ---------------------------------------------------------------------------


class RemoteUnavailableError(BTSynthError):
    """The remote policy endpoint could not be reached (after one retry)."""


class MalformedResponseError(BTSynthError):
    """The remote endpoint replied with an unusable payload (after one retry)."""


class EmptyAfterFilteringError(BTSynthError):
    """Every remote candidate was dropped by schema/library filtering."""


class InvalidArgsError(BTSynthError, ValueError):
    """Numeric arguments outside an operation's documented domain."""
