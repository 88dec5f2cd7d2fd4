class ExtractError(Exception):
    """Base class for extractor failures."""


class EmptyLexicon(ExtractError):
    pass


class SlotMissing(ExtractError):
    """A sentence template does not contain exactly one [WORD] slot."""


class CheckpointLoadError(ExtractError):
    """The requested model checkpoint could not be loaded."""


class PreprocessError(ExtractError):
    """An input item could not be read or preprocessed."""

    def __init__(self, item_id: str, detail: str):
        self.item_id = item_id
        super().__init__(f"{item_id}: {detail}")


class LabelError(ExtractError):
    """A label CSV row is malformed (bad group, out-of-range valence...)."""
