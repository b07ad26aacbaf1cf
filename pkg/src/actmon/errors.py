"""Exception types shared across the package.

Width mismatches and other argument-level misuse raise plain ``ValueError``;
the classes here mark problems with persisted artifacts (model, trace,
monitor files) and store lifecycle violations, so callers can distinguish
bad data from bad environments.
"""


class ActmonError(Exception):
    """Base class for package-specific errors."""


class SchemaError(ActmonError):
    """A persisted file is structurally invalid (missing keys, dangling
    node ids, ordering violations, inconsistent widths)."""


class FormatVersionError(SchemaError):
    """A persisted file declares a version this code does not understand."""


class FrozenStoreError(ActmonError):
    """A node-creating operation was attempted on a frozen BDD store."""
