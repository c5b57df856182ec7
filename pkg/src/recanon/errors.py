"""Exception hierarchy shared by every module.

Errors that come from bad user input (files, parameters, plans) derive from
``InputError`` so the CLI can map them to exit status 1.
"""
from __future__ import annotations


class AnonError(Exception):
    """Base class for all engine errors."""


class InputError(AnonError, ValueError):
    """Raised for invalid files, parameters or references."""


class HeaderMismatch(InputError):
    pass


class ParseError(InputError):
    def __init__(self, row: int, column: str, token: str, expected: str):
        self.row = row
        self.column = column
        self.token = token
        super().__init__(f"row {row}, column {column!r}: cannot parse {token!r} as {expected}")


class EmptyDataset(InputError):
    pass


class UnsupportedFormat(InputError):
    pass


class IndexOutOfRange(InputError, IndexError):
    pass


class UnknownAttribute(InputError, KeyError):
    def __str__(self) -> str:  # KeyError quotes its message otherwise
        return str(self.args[0]) if self.args else ""


class HierarchyError(InputError):
    pass


class NonFunctionalMapping(HierarchyError):
    pass


class NonMonotone(HierarchyError):
    pass


class RangeGap(HierarchyError):
    pass


class RangeOverlap(HierarchyError):
    pass


class UnmappedValue(HierarchyError):
    def __init__(self, row: int, column: str, value):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(f"row {row}, column {column!r}: value {value!r} is not covered by the hierarchy")


class MissingHierarchy(InputError):
    pass


class InvalidParameter(InputError):
    pass


class AttributeNotSensitive(InputError):
    pass


class SchemaMismatch(InputError):
    pass


class ClassNotInPopulation(InputError):
    pass


class RowCountMismatch(InputError):
    pass


class NoQuasiIdentifiers(InputError):
    pass


class ZeroDistinct(InputError):
    pass


class StaleNode(InputError):
    pass


class UnknownNode(InputError):
    def __init__(self, name: str, suggestions: list[str] | None = None):
        self.name = name
        self.suggestions = suggestions or []
        msg = f"unknown ontology term {name!r}"
        if self.suggestions:
            msg += f" (did you mean: {', '.join(self.suggestions)})"
        super().__init__(msg)


class UnknownProperty(InputError):
    pass


class NoSolution(AnonError):
    """No lattice node satisfies the constraints within the suppression budget."""
