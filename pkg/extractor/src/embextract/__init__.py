"""embextract: builds embedding corpora in the biascope corpus file format."""

from .encoders import get_encoder
from .lexicon import GroupLexicon, group_for_phrase, load_image_labels_csv, load_word_lexicon_csv
from .templates import DEFAULT_TEMPLATES, LexiconEntry, Sentence, TemplateSpec, expand_templates
from .writer import write_corpus

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "DEFAULT_TEMPLATES",
    "TemplateSpec",
    "LexiconEntry",
    "Sentence",
    "expand_templates",
    "GroupLexicon",
    "group_for_phrase",
    "load_word_lexicon_csv",
    "load_image_labels_csv",
    "get_encoder",
    "write_corpus",
]
