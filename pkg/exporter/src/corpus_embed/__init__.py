"""Batch featurization: labeled text corpus in, id/label/embedding JSONL out."""

from .encoders import EncoderUnavailable, get_encoder
from .export import CorpusError, ExportReport, export, load_corpus

__version__ = "0.1.0"
