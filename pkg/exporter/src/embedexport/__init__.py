"""Turn a raw text corpus into the dataset file the patterngcd engine reads."""

from .encoders import EncoderLoadError, HashEncoder, load_encoder
from .exporter import CorpusError, Row, export, read_corpus

__all__ = [
    "CorpusError",
    "EncoderLoadError",
    "HashEncoder",
    "Row",
    "export",
    "load_encoder",
    "read_corpus",
]
