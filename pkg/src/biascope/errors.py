"""Exception hierarchy shared by all biascope modules."""

from __future__ import annotations


class BiascopeError(Exception):
    """Base class for every error raised by this package."""


# -- corpus ------------------------------------------------------------------

class MalformedManifest(BiascopeError):
    """Manifest file is unreadable, unparsable, or violates the schema."""


class HeaderMismatch(BiascopeError):
    """Matrix file header disagrees with the manifest (magic, version, dim, count)."""


class TruncatedMatrix(BiascopeError):
    """Matrix payload size does not match ``count * dim`` single-precision values."""


class ZeroNormVector(BiascopeError):
    """An embedding row has (near-)zero or non-finite Euclidean norm."""

    def __init__(self, row: int, detail: str = "zero norm"):
        self.row = row
        super().__init__(f"row {row}: {detail}")


class DuplicateId(BiascopeError):
    """Two corpus items share the same id."""

    def __init__(self, item_id: str):
        self.item_id = item_id
        super().__init__(f"duplicate item id {item_id!r}")


class InsufficientItems(BiascopeError):
    """A selection needs more items than the subset provides."""


class MissingValence(BiascopeError):
    """An operation requires a valence rating the item does not carry."""

    def __init__(self, row: int):
        self.row = row
        super().__init__(f"row {row} has no valence rating")


class MissingGroupLabel(BiascopeError):
    """An operation requires a group label the item does not carry."""

    def __init__(self, row: int):
        self.row = row
        super().__init__(f"row {row} has no group label")


# -- retrieval ---------------------------------------------------------------

class DimensionMismatch(BiascopeError):
    """Vectors of different dimensionality were combined."""


class KTooLarge(BiascopeError):
    """Requested k exceeds the number of available candidates."""


# -- association -------------------------------------------------------------

class EmptySet(BiascopeError):
    """An attribute set (or required input collection) is empty."""


class DegenerateAttributes(BiascopeError):
    """Attribute cosines have no spread, so the effect size is undefined."""


class InsufficientGroupItems(BiascopeError):
    """A group pool is too small for the requested sample size."""

    def __init__(self, group: str, detail: str = ""):
        self.group = group
        msg = f"not enough items for group {group}"
        super().__init__(msg + (f": {detail}" if detail else ""))


class UnknownGroup(BiascopeError):
    """Group label is not one of the six canonical intersectional groups."""


# -- stats -------------------------------------------------------------------

class LengthMismatch(BiascopeError):
    """Paired vectors have different lengths."""


class TooFewSamples(BiascopeError):
    """Not enough samples for the statistic to be defined."""


class ConstantInput(BiascopeError):
    """A correlation input vector is constant."""


class DegenerateSpread(BiascopeError):
    """Standard deviation is (near-)zero where a nonzero spread is required."""


class EmptyInput(BiascopeError):
    """An aggregate over an empty collection was requested."""


# -- experiments / synth / cli -----------------------------------------------

class SelectorEmpty(BiascopeError):
    """A target/attribute/retrieval selector resolved to an empty subset."""


class UnknownPreset(BiascopeError):
    """Experiment preset name is not recognized."""


class MalformedTemplateBlock(BiascopeError):
    """Templated text items do not form complete, consistent per-template blocks."""


class InvalidParams(BiascopeError):
    """Synthetic-fixture parameters violate their constraints."""


class ConfigError(BiascopeError):
    """Run configuration is inconsistent (missing corpora, bad field values...)."""
